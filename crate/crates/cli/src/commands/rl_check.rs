use crate::CliError;
use clap::Args;
use std::path::PathBuf;
use vst_core::rl_objective::{group_advantages, objective, RolloutGroup, Trajectory};
use vst_core::trace;

#[derive(Args)]
pub struct RlCheckArgs {
    /// Rollout file: one trajectory per line with keys reward, ratios,
    /// logp_cur, logp_ref
    #[arg(long)]
    pub rollouts: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub eps_low: f64,
    #[arg(long, default_value_t = 0.28)]
    pub eps_high: f64,
    #[arg(long, default_value_t = 0.001)]
    pub beta: f64,
}

pub fn run(args: RlCheckArgs) -> Result<(), CliError> {
    let trajectories: Vec<Trajectory> = trace::read_jsonl_file(&args.rollouts)?;
    let rewards: Vec<f64> = trajectories.iter().map(|t| t.reward).collect();
    let advantages =
        group_advantages(&rewards).map_err(|e| CliError::Validation(e.to_string()))?;
    let group = RolloutGroup {
        trajectories,
        eps_low: args.eps_low,
        eps_high: args.eps_high,
        beta: args.beta,
    };
    let value = objective(&group).map_err(|e| CliError::Validation(e.to_string()))?;
    println!(
        "{}",
        serde_json::json!({
            "advantages": advantages,
            "objective": value,
            "eps_low": args.eps_low,
            "eps_high": args.eps_high,
            "beta": args.beta,
        })
    );
    Ok(())
}
