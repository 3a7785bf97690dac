//! Monte Carlo comparison of policies over sampled damage scenarios.
//!
//! Every replicate draws one damage scenario and one base-heuristic
//! permutation; all policies are run against that same pair (common random
//! numbers), so per-replicate differences come from the policies alone.
//! Replicates run in parallel on independent ChaCha streams and are reduced
//! in replicate order, so results do not depend on the thread count.

use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealing::AnnealingSchedule;
use crate::community::Community;
use crate::dynamics::Trajectory;
use crate::error::{ConfigIssue, Error, Result};
use crate::hazard::{sample_scenario, HazardModel};
use crate::objective::{evaluate_trajectory, Evaluation, RewardConvention};
use crate::rollout::{
    run_policy, BaseHeuristic, BaseHeuristicKind, BasePolicy, PolicyKind, PolicyOptions, Problem, DEFAULT_ORACLE_CAP,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::policies")]
    pub policies: Vec<PolicyKind>,
    /// Crew budget N.
    #[serde(default = "defaults::crews")]
    pub crews: usize,
    #[serde(default = "defaults::grid_step_days")]
    pub grid_step_days: f64,
    #[serde(default)]
    pub base_heuristic: BaseHeuristicKind,
    #[serde(default)]
    pub reward: RewardConvention,
    #[serde(default = "defaults::histogram_bins")]
    pub histogram_bins: usize,
    #[serde(default = "defaults::oracle_cap")]
    pub oracle_cap: u64,
    #[serde(default)]
    pub annealing: AnnealingSchedule,
}

mod defaults {
    use crate::rollout::PolicyKind;

    pub fn replicates() -> usize {
        20
    }
    pub fn policies() -> Vec<PolicyKind> {
        vec![PolicyKind::Base, PolicyKind::RolloutSa]
    }
    pub fn crews() -> usize {
        3
    }
    pub fn grid_step_days() -> f64 {
        1.0
    }
    pub fn histogram_bins() -> usize {
        10
    }
    pub fn oracle_cap() -> u64 {
        super::DEFAULT_ORACLE_CAP
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            replicates: defaults::replicates(),
            seed: 0,
            policies: defaults::policies(),
            crews: defaults::crews(),
            grid_step_days: defaults::grid_step_days(),
            base_heuristic: BaseHeuristicKind::default(),
            reward: RewardConvention::default(),
            histogram_bins: defaults::histogram_bins(),
            oracle_cap: defaults::oracle_cap(),
            annealing: AnnealingSchedule::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |reason: String| {
            issues.push(ConfigIssue::InvalidValue {
                owner: "experiment".into(),
                reason,
            })
        };
        if self.replicates == 0 {
            bad("replicates must be >= 1".into());
        }
        if self.policies.is_empty() {
            bad("at least one policy is required".into());
        }
        let mut sorted = self.policies.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.policies.len() {
            bad("policies must not repeat".into());
        }
        if self.crews == 0 {
            bad("crews must be >= 1".into());
        }
        if !(self.grid_step_days.is_finite() && self.grid_step_days > 0.0) {
            bad(format!("grid_step_days must be positive, got {}", self.grid_step_days));
        }
        if self.histogram_bins == 0 {
            bad("histogram_bins must be >= 1".into());
        }
        if self.policies.contains(&PolicyKind::Optimal) && self.reward != RewardConvention::StepDuration {
            bad("the optimal policy requires the step_duration reward".into());
        }
        if let Err(Error::Invalid(list)) = self.annealing.validate() {
            issues.extend(list.0);
        }
        issues
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(issues))
        }
    }

    pub fn policy_options(&self) -> PolicyOptions {
        PolicyOptions {
            annealing: self.annealing,
            oracle_cap: self.oracle_cap,
        }
    }
}

/// Seeds of one replicate, drawn from the master seed's ChaCha stream
/// numbered by the replicate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateSeeds {
    pub scenario: u64,
    pub base: u64,
    pub search: u64,
}

impl ReplicateSeeds {
    pub fn derive(master: u64, replicate: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        rng.set_stream(replicate as u64);
        ReplicateSeeds {
            scenario: rng.next_u64(),
            base: rng.next_u64(),
            search: rng.next_u64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub policy: PolicyKind,
    pub trajectory: Trajectory,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seeds: ReplicateSeeds,
    pub scenario_fingerprint: String,
    pub damaged: usize,
    /// One run per policy, in configured policy order; all runs share the
    /// scenario identified by `scenario_fingerprint`.
    pub runs: Vec<PolicyRun>,
}

/// Recovery curves on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurves {
    pub grid: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    /// `[policy][grid]`
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
    /// Mean ∓ one standard deviation, clipped to `[0, population]`.
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
    /// `[policy][replicate][grid]`
    pub replicates: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardHistogram {
    pub edges: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    /// `[policy][bin]`
    pub counts: Vec<Vec<usize>>,
    /// `[policy][replicate]`
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub population: u64,
    pub replicates: Vec<ReplicateResult>,
    pub curves: AggregateCurves,
    pub histogram: RewardHistogram,
}

impl ExperimentResult {
    pub fn policies(&self) -> &[PolicyKind] {
        &self.curves.policies
    }

    /// Per-policy statistics of F over replicates. The mean is the total
    /// benefit per replicate that a histogram's bin-weighted sum approximates.
    pub fn summaries(&self) -> Vec<PolicySummary> {
        self.histogram
            .policies
            .iter()
            .zip(&self.histogram.values)
            .map(|(&policy, values)| {
                let (mean, std) = mean_std(values);
                PolicySummary {
                    policy,
                    mean,
                    std,
                    min: values.iter().copied().fold(f64::INFINITY, f64::min),
                    max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect()
    }

    pub fn rewards(&self, policy: PolicyKind) -> Option<&[f64]> {
        let k = self.histogram.policies.iter().position(|p| *p == policy)?;
        Some(&self.histogram.values[k])
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Benefited count of a trajectory at each grid time. The curve is
/// right-continuous: at a completion instant it already shows the post-step
/// level, and before the first completion it shows the post-earthquake level.
pub fn resample_step_curve(trajectory: &Trajectory, grid: &[f64]) -> Vec<f64> {
    let completions = trajectory.completion_times();
    grid.iter()
        .map(|&tau| {
            let done = completions.partition_point(|&c| c <= tau);
            if done == 0 {
                trajectory.initial_benefited
            } else {
                trajectory.steps[done - 1].benefited
            }
        })
        .collect()
}

/// `0, Δ, 2Δ, …` up to the first point at or beyond `horizon`.
pub fn time_grid(horizon: f64, step: f64) -> Vec<f64> {
    let n = (horizon / step).ceil().max(0.0) as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn run_replicate(
    community: &Community,
    hazard: &HazardModel,
    config: &ExperimentConfig,
    replicate: usize,
) -> Result<ReplicateResult> {
    let seeds = ReplicateSeeds::derive(config.seed, replicate);
    let scenario = sample_scenario(community, hazard, seeds.scenario)?;
    let problem = Problem {
        community,
        scenario: &scenario,
        crews: config.crews,
        convention: config.reward,
    };
    let base = BasePolicy::new(
        BaseHeuristic {
            kind: config.base_heuristic,
            seed: seeds.base,
        },
        community,
        &scenario,
    );
    let options = config.policy_options();
    let runs = config
        .policies
        .iter()
        .map(|&policy| {
            let trajectory = run_policy(&problem, &base, policy, &options, seeds.search)?;
            let evaluation = evaluate_trajectory(&trajectory, config.reward)?;
            Ok(PolicyRun {
                policy,
                trajectory,
                evaluation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateResult {
        replicate,
        seeds,
        scenario_fingerprint: scenario.fingerprint(),
        damaged: scenario.damaged_set().len(),
        runs,
    })
}

/// Runs every replicate under every configured policy and aggregates
/// recovery curves and reward histograms.
pub fn run_experiment(
    community: &Community,
    hazard: &HazardModel,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    config.validate()?;
    hazard.check_bindings(community)?;
    if config.replicates == 0 || config.policies.is_empty() {
        return Err(Error::EmptyExperiment);
    }
    let finished = AtomicUsize::new(0);
    let replicates = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let result = run_replicate(community, hazard, config, r);
            let done = finished.fetch_add(1, AtomicOrdering::Relaxed) + 1;
            log::info!("replicate {r} finished ({done}/{})", config.replicates);
            result
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(community.total_population(), config, replicates))
}

fn aggregate(population: u64, config: &ExperimentConfig, replicates: Vec<ReplicateResult>) -> ExperimentResult {
    let policies = config.policies.clone();
    let horizon = replicates
        .iter()
        .flat_map(|r| r.runs.iter().map(|run| run.trajectory.total_time()))
        .fold(0.0, f64::max);
    let grid = time_grid(horizon, config.grid_step_days);
    let pop = population as f64;

    let mut curves = AggregateCurves {
        grid: grid.clone(),
        policies: policies.clone(),
        mean: Vec::new(),
        std: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        replicates: Vec::new(),
    };
    let mut values = Vec::new();
    for k in 0..policies.len() {
        let per_rep: Vec<Vec<f64>> = replicates
            .iter()
            .map(|r| resample_step_curve(&r.runs[k].trajectory, &grid))
            .collect();
        let mut mean = Vec::with_capacity(grid.len());
        let mut std = Vec::with_capacity(grid.len());
        for g in 0..grid.len() {
            let column: Vec<f64> = per_rep.iter().map(|c| c[g]).collect();
            let (m, s) = mean_std(&column);
            mean.push(m);
            std.push(s);
        }
        curves
            .lower
            .push(mean.iter().zip(&std).map(|(m, s)| (m - s).max(0.0)).collect());
        curves
            .upper
            .push(mean.iter().zip(&std).map(|(m, s)| (m + s).min(pop)).collect());
        curves.mean.push(mean);
        curves.std.push(std);
        curves.replicates.push(per_rep);
        values.push(
            replicates
                .iter()
                .map(|r| r.runs[k].evaluation.reward)
                .collect::<Vec<f64>>(),
        );
    }

    let histogram = histogram(&policies, values, config.histogram_bins);
    ExperimentResult {
        population,
        replicates,
        curves,
        histogram,
    }
}

/// Equal-width bins spanning all policies' rewards.
fn histogram(policies: &[PolicyKind], values: Vec<Vec<f64>>, bins: usize) -> RewardHistogram {
    let all = values.iter().flatten().copied();
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + i as f64 * width })
        .collect();
    let counts = values
        .iter()
        .map(|vals| {
            let mut c = vec![0usize; bins];
            for &v in vals {
                let b = (((v - lo) / width).floor() as usize).min(bins - 1);
                c[b] += 1;
            }
            c
        })
        .collect();
    RewardHistogram {
        edges,
        policies: policies.to_vec(),
        counts,
        values,
    }
}
