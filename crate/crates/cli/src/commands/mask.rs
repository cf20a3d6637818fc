use crate::CliError;
use clap::Args;
use vst_core::attention_mask::{build_streaming_mask, render_mask_dump, TokenTypeSequence};

#[derive(Args)]
pub struct MaskArgs {
    /// Token types as a V/T string, e.g. VVTV
    #[arg(long)]
    pub types: String,
    /// Visual window size
    #[arg(long = "L")]
    pub l: u32,
}

pub fn run(args: MaskArgs) -> Result<(), CliError> {
    let seq = TokenTypeSequence::parse(&args.types).map_err(|_| {
        CliError::Validation(format!(
            "--types must be a non-empty string over V/T, got `{}`",
            args.types
        ))
    })?;
    let mask =
        build_streaming_mask(&seq, args.l).map_err(|e| CliError::Validation(e.to_string()))?;
    print!("{}", render_mask_dump(&mask, args.l));
    Ok(())
}
