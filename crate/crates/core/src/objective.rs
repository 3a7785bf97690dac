//! Time-averaged benefited population of a recovery trajectory.
//!
//! `F = Σ h_t·k_t / Σ k_t` where `k_t` is the duration of step `t` and `h_t`
//! the benefited count once step `t` completes. Higher is better.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dynamics::{RepairAction, Trajectory};
use crate::error::{Error, Result};

/// How step durations weight the benefited counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardConvention {
    /// `k_t` is the duration of step `t`: F is the time average of the
    /// recovery curve.
    #[default]
    StepDuration,
    /// `k_t` is the cumulative elapsed time when step `t` completes, divided
    /// by the total time. Later gains weigh more; kept for comparison only.
    Cumulative,
}

/// Running sums of a trajectory, in step order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardAccumulator {
    area: f64,
    cumulative_area: f64,
    time: f64,
}

impl RewardAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_trajectory(trajectory: &Trajectory) -> Self {
        let mut acc = Self::new();
        for step in &trajectory.steps {
            acc.push(step.benefited, step.duration);
        }
        acc
    }

    #[inline]
    pub fn push(&mut self, benefited: f64, duration: f64) {
        self.time += duration;
        self.area += benefited * duration;
        self.cumulative_area += benefited * self.time;
    }

    pub fn total_time(&self) -> f64 {
        self.time
    }

    pub fn reward(&self, convention: RewardConvention) -> Result<f64> {
        if self.time <= 0.0 {
            return Err(Error::ZeroDuration);
        }
        Ok(match convention {
            RewardConvention::StepDuration => self.area / self.time,
            RewardConvention::Cumulative => self.cumulative_area / self.time,
        })
    }

    pub fn evaluation(&self, convention: RewardConvention) -> Result<Evaluation> {
        Ok(Evaluation {
            reward: self.reward(convention)?,
            total_time: self.time,
        })
    }
}

/// F(X) of a complete trajectory under the default convention.
pub fn trajectory_reward(trajectory: &Trajectory) -> Result<f64> {
    trajectory_reward_with(trajectory, RewardConvention::StepDuration)
}

pub fn trajectory_reward_with(trajectory: &Trajectory, convention: RewardConvention) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    RewardAccumulator::from_trajectory(trajectory).reward(convention)
}

/// Reward and total time of a trajectory. An empty trajectory (nothing was
/// damaged) is scored as the constant level it starts at, with zero time.
pub fn evaluate_trajectory(trajectory: &Trajectory, convention: RewardConvention) -> Result<Evaluation> {
    if trajectory.is_empty() {
        return Ok(Evaluation {
            reward: trajectory.initial_benefited,
            total_time: 0.0,
        });
    }
    RewardAccumulator::from_trajectory(trajectory).evaluation(convention)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub reward: f64,
    pub total_time: f64,
}

/// Preference between two outcomes: `Greater` means `a` is preferred.
/// Higher reward wins; equal rewards prefer the shorter total time.
pub fn compare_policies(a: Evaluation, b: Evaluation) -> Ordering {
    a.reward
        .total_cmp(&b.reward)
        .then_with(|| b.total_time.total_cmp(&a.total_time))
}

/// [`compare_policies`] with a final tie-break on the first action: the one
/// earlier in canonical order is preferred.
pub fn compare_candidates(a: (Evaluation, &RepairAction), b: (Evaluation, &RepairAction)) -> Ordering {
    compare_policies(a.0, b.0).then_with(|| b.1.cmp(a.1))
}
