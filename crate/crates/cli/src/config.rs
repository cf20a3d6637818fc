//! Flat `key = value` configuration with `#` comments.
//!
//! Flags override file values; unknown keys are rejected by name. Recognized
//! keys:
//!
//! ```text
//! clip_capacity_L            visual-token capacity closing a clip
//! max_thinking_times         cap on streaming thoughts per session
//! per_step_video_token_cap   visual tokens admitted per inference step
//! deadline_policy            block | drop | defer
//! mode                       virtual_clock | real_time
//! memory.budget_entries      long-term memory entry budget
//! memory.budget_chars        long-term memory rendered-character budget
//! backend.kind               mock | replay | http
//! backend.url                chat-completions base URL (http backend)
//! backend.model              model name sent on the wire
//! backend.trace              replay trace path (replay backend)
//! backend.rate               mock generation rate, tokens/second
//! backend.bearer_token       bearer token for the http backend
//! ```

use crate::CliError;
use std::path::{Path, PathBuf};
use vst_core::backends::{Backend, HttpChatBackend, MockSummarizer, ReplayBackend};
use vst_core::stream_model::{ClockMode, DeadlinePolicy, SessionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Mock,
    Replay,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "replay" => Ok(BackendKind::Replay),
            "http" => Ok(BackendKind::Http),
            other => Err(format!("unknown backend kind `{other}` (expected mock, replay, or http)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub session: SessionConfig,
    pub backend_kind: BackendKind,
    pub backend_url: Option<String>,
    pub backend_model: String,
    pub backend_trace: Option<PathBuf>,
    pub backend_rate: f64,
    pub backend_bearer: Option<String>,
    deadline_policy_explicit: bool,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            session: SessionConfig::default(),
            backend_kind: BackendKind::Mock,
            backend_url: None,
            backend_model: "vst-7b".to_string(),
            backend_trace: None,
            backend_rate: 100.0,
            backend_bearer: None,
            deadline_policy_explicit: false,
        }
    }
}

fn parse_deadline_policy(value: &str) -> Result<DeadlinePolicy, String> {
    match value {
        "block" => Ok(DeadlinePolicy::Block),
        "drop" => Ok(DeadlinePolicy::Drop),
        "defer" => Ok(DeadlinePolicy::Defer),
        other => Err(format!("unknown deadline_policy `{other}` (expected block, drop, or defer)")),
    }
}

fn parse_mode(value: &str) -> Result<ClockMode, String> {
    match value {
        "virtual_clock" => Ok(ClockMode::VirtualClock),
        "real_time" => Ok(ClockMode::RealTime),
        other => Err(format!("unknown mode `{other}` (expected virtual_clock or real_time)")),
    }
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = CliConfig::default();
        for (line_no, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!(
                    "config line {}: expected `key = value`, got `{line}`",
                    line_no + 1
                ))
            })?;
            config.apply(key.trim(), value.trim()).map_err(|message| {
                CliError::Validation(format!("config line {}: {message}", line_no + 1))
            })?;
        }
        config
            .session
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        CliConfig::parse(&text)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let bad = |what: &str| format!("bad value `{value}` for {what}");
        match key {
            "clip_capacity_L" => {
                self.session.clip_capacity_l = value.parse().map_err(|_| bad(key))?
            }
            "max_thinking_times" => {
                self.session.max_thinking_times = value.parse().map_err(|_| bad(key))?
            }
            "per_step_video_token_cap" => {
                self.session.per_step_video_token_cap = value.parse().map_err(|_| bad(key))?
            }
            "deadline_policy" => {
                self.session.deadline_policy = parse_deadline_policy(value)?;
                self.deadline_policy_explicit = true;
            }
            "mode" => self.session.mode = parse_mode(value)?,
            "memory.budget_entries" => {
                self.session.memory_budget_entries = value.parse().map_err(|_| bad(key))?
            }
            "memory.budget_chars" => {
                self.session.memory_budget_chars = value.parse().map_err(|_| bad(key))?
            }
            "backend.kind" => self.backend_kind = value.parse()?,
            "backend.url" => self.backend_url = Some(value.to_string()),
            "backend.model" => self.backend_model = value.to_string(),
            "backend.trace" => self.backend_trace = Some(PathBuf::from(value)),
            "backend.rate" => self.backend_rate = value.parse().map_err(|_| bad(key))?,
            "backend.bearer_token" => self.backend_bearer = Some(value.to_string()),
            unknown => return Err(format!("unknown config key `{unknown}`")),
        }
        Ok(())
    }

    /// Construct the configured backend. `gold_candidates` seed the mock
    /// backend's answer matching (from the query trace's `gold` fields).
    pub fn build_backend(&self, gold_candidates: Vec<String>) -> Result<Box<dyn Backend>, CliError> {
        match self.backend_kind {
            BackendKind::Mock => Ok(Box::new(
                MockSummarizer::new(self.backend_rate).with_gold_candidates(gold_candidates),
            )),
            BackendKind::Replay => {
                let path = self.backend_trace.as_ref().ok_or_else(|| {
                    CliError::Validation("replay backend needs backend.trace".to_string())
                })?;
                ReplayBackend::from_file(path)
                    .map(|b| Box::new(b) as Box<dyn Backend>)
                    .map_err(|e| CliError::Validation(e.to_string()))
            }
            BackendKind::Http => {
                let url = self
                    .backend_url
                    .clone()
                    .or_else(|| std::env::var(vst_core::backends::BACKEND_URL_ENV).ok())
                    .ok_or_else(|| {
                        CliError::Validation(
                            "http backend needs backend.url (or VST_BACKEND_URL)".to_string(),
                        )
                    })?;
                let mut backend = HttpChatBackend::new(&url, &self.backend_model);
                if let Some(token) = &self.backend_bearer {
                    backend = backend.with_bearer_token(token);
                }
                Ok(Box::new(backend))
            }
        }
    }
}

/// Flag overrides shared by `run` and `chat`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// Clip capacity in visual tokens (overrides clip_capacity_L)
    #[arg(long = "L", value_name = "TOKENS")]
    pub clip_capacity: Option<u32>,
    /// Max streaming thoughts per session
    #[arg(long)]
    pub max_thinking_times: Option<u32>,
    /// block | drop | defer
    #[arg(long)]
    pub deadline_policy: Option<String>,
    /// virtual_clock | real_time
    #[arg(long)]
    pub mode: Option<String>,
    /// mock | replay | http
    #[arg(long)]
    pub backend: Option<String>,
    /// Chat-completions base URL for the http backend
    #[arg(long)]
    pub backend_url: Option<String>,
}

impl ConfigOverrides {
    pub fn apply(&self, config: &mut CliConfig) -> Result<(), CliError> {
        if let Some(l) = self.clip_capacity {
            config.session.clip_capacity_l = l;
        }
        if let Some(cap) = self.max_thinking_times {
            config.session.max_thinking_times = cap;
        }
        if let Some(policy) = &self.deadline_policy {
            config.session.deadline_policy =
                parse_deadline_policy(policy).map_err(CliError::Validation)?;
            config.deadline_policy_explicit = true;
        }
        if let Some(mode) = &self.mode {
            config.session.mode = parse_mode(mode).map_err(CliError::Validation)?;
        }
        if let Some(kind) = &self.backend {
            config.backend_kind = kind.parse().map_err(CliError::Validation)?;
        }
        if let Some(url) = &self.backend_url {
            config.backend_url = Some(url.clone());
        }
        // Real-time sessions never stall ingestion unless told to.
        if config.session.mode == ClockMode::RealTime && !config.deadline_policy_explicit {
            config.session.deadline_policy = DeadlinePolicy::Drop;
        }
        config
            .session
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys_and_comments() {
        let text = "\
            # session\n\
            clip_capacity_L = 256\n\
            max_thinking_times = 4\n\
            per_step_video_token_cap = 8192\n\
            deadline_policy = drop\n\
            mode = virtual_clock\n\
            memory.budget_entries = 8\n\
            memory.budget_chars = 4000\n\
            backend.kind = mock\n\
            backend.rate = 250\n";
        let config = CliConfig::parse(text).unwrap();
        assert_eq!(config.session.clip_capacity_l, 256);
        assert_eq!(config.session.deadline_policy, DeadlinePolicy::Drop);
        assert_eq!(config.backend_rate, 250.0);
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let err = CliConfig::parse("mystery_knob = 3").unwrap_err();
        assert!(err.to_string().contains("mystery_knob"), "{err}");
    }

    #[test]
    fn invalid_session_combination_rejected() {
        let err = CliConfig::parse("clip_capacity_L = 9000\nper_step_video_token_cap = 8192").unwrap_err();
        assert!(err.to_string().contains("per_step_video_token_cap"));
    }

    #[test]
    fn overrides_win_over_file_values() {
        let mut config = CliConfig::parse("clip_capacity_L = 100").unwrap();
        let overrides = ConfigOverrides {
            clip_capacity: Some(300),
            backend: Some("mock".into()),
            ..ConfigOverrides::default()
        };
        overrides.apply(&mut config).unwrap();
        assert_eq!(config.session.clip_capacity_l, 300);
        assert_eq!(config.backend_kind, BackendKind::Mock);
    }

    #[test]
    fn real_time_defaults_to_drop_unless_policy_explicit() {
        let mut config = CliConfig::parse("mode = real_time").unwrap();
        ConfigOverrides::default().apply(&mut config).unwrap();
        assert_eq!(config.session.deadline_policy, DeadlinePolicy::Drop);

        let mut config = CliConfig::parse("mode = real_time\ndeadline_policy = block").unwrap();
        ConfigOverrides::default().apply(&mut config).unwrap();
        assert_eq!(config.session.deadline_policy, DeadlinePolicy::Block);

        // Virtual clock keeps the faithful-accounting default.
        let mut config = CliConfig::parse("").unwrap();
        ConfigOverrides::default().apply(&mut config).unwrap();
        assert_eq!(config.session.deadline_policy, DeadlinePolicy::Block);
    }
}
