use crate::CliError;
use clap::Args;
use std::path::PathBuf;
use vst_core::latency_sim::{simulate_postquery_cot, simulate_vst, speedup_report, LatencyProfile};

#[derive(Args)]
pub struct SimulateArgs {
    /// Profile file (flat key = value); omit for the calibrated default
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let profile = match &args.profile {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read profile {}: {e}", path.display()))
            })?;
            LatencyProfile::from_kv(&text).map_err(|e| CliError::Validation(e.to_string()))?
        }
        None => LatencyProfile::default(),
    };
    let vst = simulate_vst(&profile).map_err(|e| CliError::Runtime(e.to_string()))?;
    let cot = simulate_postquery_cot(&profile).map_err(|e| CliError::Runtime(e.to_string()))?;
    let speedup = speedup_report(&vst, &cot).map_err(|e| CliError::Runtime(e.to_string()))?;

    println!("paradigm\tqa_latency_s\toverlapped_thinking_s\tdeadline_misses\tspeedup");
    println!(
        "vst\t{:.2}\t{:.2}\t{}\t{:.2}",
        vst.qa_latency.as_secs_f64(),
        vst.thinking_time_overlapped.as_secs_f64(),
        vst.deadline_misses,
        speedup,
    );
    println!(
        "post_query_cot\t{:.2}\t{:.2}\t{}\t{:.2}",
        cot.qa_latency.as_secs_f64(),
        cot.thinking_time_overlapped.as_secs_f64(),
        cot.deadline_misses,
        1.0,
    );
    Ok(())
}
