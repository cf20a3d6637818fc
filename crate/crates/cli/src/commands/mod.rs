pub mod chat;
pub mod mask;
pub mod pack;
pub mod rl_check;
pub mod run;
pub mod simulate;
pub mod synthesize;
