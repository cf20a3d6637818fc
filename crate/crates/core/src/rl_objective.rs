//! Group-relative policy objective over supplied rollout statistics.
//!
//! No sampling or gradients happen here: callers provide per-token probability
//! ratios, log-prob pairs against a reference policy, and scalar rewards; this
//! module computes the token-mean clipped surrogate with a KL penalty, plus
//! the verifiable reward used to score final answers.
//!
//! Advantages are mean-centered only (no standard-deviation division) and the
//! advantage of a trajectory is broadcast to every one of its tokens.

use crate::backends::extract_boxed;
use crate::stream_model::AnswerRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RlError {
    #[error("rollout group needs at least 2 trajectories, got {0}")]
    GroupTooSmall(usize),
    #[error("probability ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("log-probabilities must be finite")]
    NonFiniteLogProb,
    #[error("trajectory {index}: {field} length {got} does not match token count {expected}")]
    LengthMismatch {
        index: usize,
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("clip bounds must satisfy eps_low < 1 and eps_high < 1")]
    BadClipBounds,
}

/// One sampled trajectory: per-token ratios and log-prob pairs plus its reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub reward: f64,
    /// Probability ratio of the current policy over the sampling policy, per token.
    pub ratios: Vec<f64>,
    #[serde(rename = "logp_cur")]
    pub logp_current: Vec<f64>,
    #[serde(rename = "logp_ref")]
    pub logp_reference: Vec<f64>,
}

impl Trajectory {
    pub fn token_count(&self) -> usize {
        self.ratios.len()
    }

    fn validate(&self, index: usize) -> Result<(), RlError> {
        let n = self.ratios.len();
        if self.logp_current.len() != n {
            return Err(RlError::LengthMismatch {
                index,
                field: "logp_cur",
                got: self.logp_current.len(),
                expected: n,
            });
        }
        if self.logp_reference.len() != n {
            return Err(RlError::LengthMismatch {
                index,
                field: "logp_ref",
                got: self.logp_reference.len(),
                expected: n,
            });
        }
        for &ratio in &self.ratios {
            if ratio <= 0.0 || !ratio.is_finite() {
                return Err(RlError::NonPositiveRatio(ratio));
            }
        }
        if self
            .logp_current
            .iter()
            .chain(self.logp_reference.iter())
            .any(|x| !x.is_finite())
        {
            return Err(RlError::NonFiniteLogProb);
        }
        Ok(())
    }
}

/// A group of rollouts for one prompt plus the clipping/KL hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub trajectories: Vec<Trajectory>,
    pub eps_low: f64,
    pub eps_high: f64,
    pub beta: f64,
}

impl RolloutGroup {
    /// Defaults: asymmetric clip band 0.2 / 0.28 and KL coefficient 0.001.
    pub fn new(trajectories: Vec<Trajectory>) -> Self {
        RolloutGroup {
            trajectories,
            eps_low: 0.2,
            eps_high: 0.28,
            beta: 0.001,
        }
    }

    fn validate(&self) -> Result<(), RlError> {
        if self.trajectories.len() < 2 {
            return Err(RlError::GroupTooSmall(self.trajectories.len()));
        }
        if !(self.eps_low >= 0.0 && self.eps_low < 1.0 && self.eps_high >= 0.0 && self.eps_high < 1.0)
        {
            return Err(RlError::BadClipBounds);
        }
        for (index, t) in self.trajectories.iter().enumerate() {
            t.validate(index)?;
        }
        Ok(())
    }
}

/// The target an answer is verified against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoldAnswer {
    MultipleChoice { value: String },
    NumericCount { value: f64, tolerance: f64 },
    FreeText { value: String },
}

/// Mean-centered group advantages: each reward minus the group mean.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, RlError> {
    if rewards.len() < 2 {
        return Err(RlError::GroupTooSmall(rewards.len()));
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    Ok(rewards.iter().map(|r| r - mean).collect())
}

/// `min(ratio * A, clip(ratio, 1 - eps_low, 1 + eps_high) * A)`.
pub fn clipped_term(ratio: f64, advantage: f64, eps_low: f64, eps_high: f64) -> Result<f64, RlError> {
    if ratio <= 0.0 || !ratio.is_finite() {
        return Err(RlError::NonPositiveRatio(ratio));
    }
    let clipped = ratio.clamp(1.0 - eps_low, 1.0 + eps_high);
    Ok((ratio * advantage).min(clipped * advantage))
}

/// Per-token KL estimator `exp(d) - d - 1` with `d = logp_ref - logp_cur`.
/// Non-negative, zero exactly at equality.
pub fn kl_penalty(logp_current: f64, logp_reference: f64) -> Result<f64, RlError> {
    if !logp_current.is_finite() || !logp_reference.is_finite() {
        return Err(RlError::NonFiniteLogProb);
    }
    let delta = logp_reference - logp_current;
    Ok(delta.exp() - delta - 1.0)
}

/// Token-mean objective over the group:
/// `(1 / sum |T_i|) * sum_i sum_t (clipped_term(ratio_t, A_i) - beta * kl_t)`,
/// with each trajectory's advantage broadcast to all of its tokens.
pub fn objective(group: &RolloutGroup) -> Result<f64, RlError> {
    group.validate()?;
    let rewards: Vec<f64> = group.trajectories.iter().map(|t| t.reward).collect();
    let advantages = group_advantages(&rewards)?;

    let total_tokens: usize = group.trajectories.iter().map(|t| t.token_count()).sum();
    if total_tokens == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (trajectory, &advantage) in group.trajectories.iter().zip(advantages.iter()) {
        for t in 0..trajectory.token_count() {
            let surrogate =
                clipped_term(trajectory.ratios[t], advantage, group.eps_low, group.eps_high)?;
            let kl = kl_penalty(trajectory.logp_current[t], trajectory.logp_reference[t])?;
            sum += surrogate - group.beta * kl;
        }
    }
    Ok(sum / total_tokens as f64)
}

/// Verifiable reward in `{0, 1}`: extract the last boxed span from the answer
/// text and match it against the gold target. Missing or malformed box scores 0.
pub fn verify_reward(answer: &AnswerRecord, gold: &GoldAnswer) -> f64 {
    let boxed = match extract_boxed(&answer.text) {
        Some(span) => span,
        None => return 0.0,
    };
    match gold {
        GoldAnswer::MultipleChoice { value } => {
            let matched = boxed.trim().eq_ignore_ascii_case(value.trim());
            f64::from(matched)
        }
        GoldAnswer::NumericCount { value, tolerance } => match boxed.trim().parse::<f64>() {
            Ok(pred) => f64::from((pred - value).abs() <= *tolerance),
            Err(_) => 0.0,
        },
        GoldAnswer::FreeText { value } => {
            f64::from(normalize_free_text(&boxed) == normalize_free_text(value))
        }
    }
}

fn normalize_free_text(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeMs;
    use proptest::prelude::*;

    fn answer(text: &str) -> AnswerRecord {
        AnswerRecord {
            text: text.to_string(),
            boxed_answer: extract_boxed(text),
            answer_start_time: TimeMs(0),
            answer_end_time: TimeMs(0),
        }
    }

    #[test]
    fn advantages_mean_center() {
        assert_eq!(group_advantages(&[1.0, 1.0, 1.0, 1.0]).unwrap(), vec![0.0; 4]);
        assert_eq!(
            group_advantages(&[1.0, 0.0, 1.0, 0.0]).unwrap(),
            vec![0.5, -0.5, 0.5, -0.5]
        );
        // Direct mean-centering arithmetic: mean = 1/8.
        let adv = group_advantages(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((adv[0] - 0.875).abs() < 1e-12);
        for a in &adv[1..] {
            assert!((a + 0.125).abs() < 1e-12);
        }
        assert!(matches!(group_advantages(&[1.0]), Err(RlError::GroupTooSmall(1))));
    }

    // Literal two-branch evaluation used to freeze expected clipped values.
    fn clipped_oracle(ratio: f64, advantage: f64, eps_low: f64, eps_high: f64) -> f64 {
        let unclipped = ratio * advantage;
        let clamped = ratio.max(1.0 - eps_low).min(1.0 + eps_high) * advantage;
        unclipped.min(clamped)
    }

    #[test]
    fn clipped_term_cases() {
        // ratio 1 leaves the advantage untouched.
        assert_eq!(clipped_term(1.0, 2.5, 0.2, 0.28).unwrap(), 2.5);
        // Positive advantage saturates at 1 + eps_high.
        assert!((clipped_term(1.5, 1.0, 0.2, 0.2).unwrap() - 1.2).abs() < 1e-12);
        // Both branches evaluated: min(0.5 * -1, clamp(0.5, 0.8, 1.2) * -1) = -0.8.
        let expected = clipped_oracle(0.5, -1.0, 0.2, 0.2);
        assert!((expected + 0.8).abs() < 1e-12);
        assert!((clipped_term(0.5, -1.0, 0.2, 0.2).unwrap() - expected).abs() < 1e-12);

        assert!(matches!(
            clipped_term(0.0, 1.0, 0.2, 0.2),
            Err(RlError::NonPositiveRatio(_))
        ));
        assert!(matches!(
            clipped_term(-1.0, 1.0, 0.2, 0.2),
            Err(RlError::NonPositiveRatio(_))
        ));
    }

    #[test]
    fn kl_penalty_cases() {
        assert_eq!(kl_penalty(-1.5, -1.5).unwrap(), 0.0);
        // Frozen from the estimator formula at delta = ln 2 and delta = -ln 2.
        let ln2 = std::f64::consts::LN_2;
        assert!((kl_penalty(-1.0 - ln2, -1.0).unwrap() - 0.3068528194400547).abs() < 1e-12);
        assert!((kl_penalty(-1.0 + ln2, -1.0).unwrap() - 0.1931471805599453).abs() < 1e-12);
        assert!(kl_penalty(f64::NAN, 0.0).is_err());
        assert!(kl_penalty(0.0, f64::INFINITY).is_err());
    }

    fn uniform_trajectory(reward: f64, tokens: usize, ratio: f64) -> Trajectory {
        Trajectory {
            reward,
            ratios: vec![ratio; tokens],
            logp_current: vec![-1.0; tokens],
            logp_reference: vec![-1.0; tokens],
        }
    }

    #[test]
    fn objective_zero_for_equal_rewards() {
        let group = RolloutGroup {
            trajectories: vec![uniform_trajectory(1.0, 5, 1.0), uniform_trajectory(1.0, 7, 1.0)],
            eps_low: 0.2,
            eps_high: 0.28,
            beta: 0.0,
        };
        assert_eq!(objective(&group).unwrap(), 0.0);
    }

    #[test]
    fn objective_cancels_for_symmetric_rewards_equal_lengths() {
        // Hand expansion: advantages +/- 0.5 over |T| tokens each cancel under
        // the token mean.
        let group = RolloutGroup {
            trajectories: vec![uniform_trajectory(1.0, 6, 1.0), uniform_trajectory(0.0, 6, 1.0)],
            eps_low: 0.2,
            eps_high: 0.28,
            beta: 0.0,
        };
        assert!(objective(&group).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kl_term_vanishes_for_identical_policies() {
        let mut group = RolloutGroup::new(vec![
            uniform_trajectory(1.0, 4, 1.1),
            uniform_trajectory(0.0, 4, 0.9),
        ]);
        group.beta = 0.0;
        let without_kl = objective(&group).unwrap();
        group.beta = 0.5;
        let with_kl = objective(&group).unwrap();
        assert_eq!(without_kl, with_kl);
    }

    #[test]
    fn objective_rejects_small_groups() {
        let group = RolloutGroup::new(vec![uniform_trajectory(1.0, 4, 1.0)]);
        assert!(matches!(objective(&group), Err(RlError::GroupTooSmall(1))));
    }

    #[test]
    fn verify_reward_cases() {
        let gold_mc = GoldAnswer::MultipleChoice { value: "b".into() };
        assert_eq!(verify_reward(&answer("thinking... \\boxed{B}"), &gold_mc), 1.0);
        assert_eq!(verify_reward(&answer("\\boxed{C}"), &gold_mc), 0.0);
        assert_eq!(verify_reward(&answer("no box here"), &gold_mc), 0.0);

        let gold_count = GoldAnswer::NumericCount { value: 7.0, tolerance: 0.0 };
        assert_eq!(verify_reward(&answer("count: \\boxed{7}"), &gold_count), 1.0);
        assert_eq!(verify_reward(&answer("count: \\boxed{8}"), &gold_count), 0.0);
        let gold_tol = GoldAnswer::NumericCount { value: 7.0, tolerance: 1.0 };
        assert_eq!(verify_reward(&answer("count: \\boxed{8}"), &gold_tol), 1.0);

        let gold_text = GoldAnswer::FreeText { value: "A red  Car".into() };
        assert_eq!(verify_reward(&answer("\\boxed{a red car}"), &gold_text), 1.0);
        assert_eq!(verify_reward(&answer("\\boxed{a blue car}"), &gold_text), 0.0);
    }

    #[test]
    fn rollout_record_round_trips() {
        let t = Trajectory {
            reward: 1.0,
            ratios: vec![1.0, 1.1],
            logp_current: vec![-1.0, -2.0],
            logp_reference: vec![-1.0, -2.5],
        };
        let line = serde_json::to_string(&t).unwrap();
        assert_eq!(
            line,
            r#"{"reward":1.0,"ratios":[1.0,1.1],"logp_cur":[-1.0,-2.0],"logp_ref":[-1.0,-2.5]}"#
        );
        let back: Trajectory = serde_json::from_str(&line).unwrap();
        assert_eq!(back, t);
    }

    proptest! {
        #[test]
        fn advantages_sum_to_zero(rewards in proptest::collection::vec(-10.0f64..10.0, 2..16)) {
            let advantages = group_advantages(&rewards).unwrap();
            let sum: f64 = advantages.iter().sum();
            prop_assert!(sum.abs() < 1e-9);
        }

        #[test]
        fn clipped_never_exceeds_unclipped(
            ratio in 0.01f64..5.0,
            advantage in -5.0f64..5.0,
            eps_low in 0.0f64..0.9,
            eps_high in 0.0f64..0.9,
        ) {
            let term = clipped_term(ratio, advantage, eps_low, eps_high).unwrap();
            prop_assert!(term <= ratio * advantage + 1e-12);
            if ratio >= 1.0 - eps_low && ratio <= 1.0 + eps_high {
                prop_assert!((term - ratio * advantage).abs() < 1e-12);
            }
            prop_assert!((term - clipped_oracle(ratio, advantage, eps_low, eps_high)).abs() < 1e-12);
        }

        #[test]
        fn kl_is_non_negative(cur in -8.0f64..0.0, reference in -8.0f64..0.0) {
            let kl = kl_penalty(cur, reference).unwrap();
            prop_assert!(kl >= 0.0);
            if (cur - reference).abs() > 1e-9 {
                prop_assert!(kl > 0.0);
            }
        }

        #[test]
        fn objective_invariant_under_reordering(
            rewards in proptest::collection::vec(0.0f64..1.0, 3..6),
            seed_ratios in proptest::collection::vec(0.5f64..1.5, 3..6),
        ) {
            let n = rewards.len().min(seed_ratios.len());
            let trajectories: Vec<Trajectory> = (0..n)
                .map(|i| Trajectory {
                    reward: rewards[i],
                    ratios: vec![seed_ratios[i]; 3 + i],
                    logp_current: vec![-1.0; 3 + i],
                    logp_reference: vec![-1.2; 3 + i],
                })
                .collect();
            let forward = objective(&RolloutGroup::new(trajectories.clone())).unwrap();
            let mut reversed = trajectories;
            reversed.reverse();
            let backward = objective(&RolloutGroup::new(reversed)).unwrap();
            prop_assert!((forward - backward).abs() < 1e-9);
        }

        #[test]
        fn reward_scaling_scales_objective(
            rewards in proptest::collection::vec(0.0f64..1.0, 2..5),
            scale in 0.1f64..4.0,
        ) {
            let make_group = |rs: &[f64]| RolloutGroup {
                trajectories: rs
                    .iter()
                    .map(|&r| uniform_trajectory(r, 4, 1.0))
                    .collect(),
                eps_low: 0.2,
                eps_high: 0.28,
                beta: 0.0,
            };
            let base = objective(&make_group(&rewards)).unwrap();
            let scaled_rewards: Vec<f64> = rewards.iter().map(|r| r * scale).collect();
            let scaled = objective(&make_group(&scaled_rewards)).unwrap();
            prop_assert!((scaled - base * scale).abs() < 1e-9);

            let base_adv = group_advantages(&rewards).unwrap();
            let scaled_adv = group_advantages(&scaled_rewards).unwrap();
            for (b, s) in base_adv.iter().zip(scaled_adv.iter()) {
                prop_assert!((s - b * scale).abs() < 1e-9);
            }
        }
    }
}
