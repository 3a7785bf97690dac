//! One-step-lookahead rollout over a base restoration heuristic.
//!
//! At each decision epoch every candidate action is scored by applying it
//! and then letting the base heuristic finish the schedule; the action whose
//! completed trajectory has the highest reward is taken. The base
//! heuristic's own next action is always a candidate, so the rollout policy
//! never scores below the base policy on any scenario.
//!
//! [`exhaustive_optimum`] solves small instances exactly and serves as the
//! reference the rollout is measured against.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealing::{anneal, AnnealingSchedule};
use crate::community::Community;
use crate::dynamics::{apply_action, enumerate_actions, RecoveryState, RepairAction, Trajectory};
use crate::error::{Error, Result};
use crate::hazard::DamageScenario;
use crate::ids::{ComponentId, ComponentSet};
use crate::objective::{compare_candidates, evaluate_trajectory, Evaluation, RewardAccumulator, RewardConvention};

pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseHeuristicKind {
    /// Repairs D_0 in a seeded uniformly random order.
    #[default]
    RandomPermutation,
    /// Power first, then water, bridges and retailers; ties by component order.
    ImportanceOrdered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaseHeuristic {
    pub kind: BaseHeuristicKind,
    pub seed: u64,
}

/// A base heuristic bound to one damage scenario: a fixed priority order
/// over the initially damaged components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasePolicy {
    order: Vec<ComponentId>,
}

impl BasePolicy {
    pub fn new(heuristic: BaseHeuristic, community: &Community, scenario: &DamageScenario) -> Self {
        let mut order = scenario.damaged_set().to_vec();
        match heuristic.kind {
            BaseHeuristicKind::RandomPermutation => {
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(heuristic.seed));
            }
            BaseHeuristicKind::ImportanceOrdered => {
                order.sort_by_key(|id| (community.component(*id).kind, *id));
            }
        }
        BasePolicy { order }
    }

    pub fn from_order(order: Vec<ComponentId>) -> Self {
        BasePolicy { order }
    }

    pub fn order(&self) -> &[ComponentId] {
        &self.order
    }

    /// The first `crews` still-damaged components in priority order. Damaged
    /// components missing from the order come last, by id.
    pub fn next_action(&self, state: &RecoveryState) -> Result<RepairAction> {
        if state.is_terminal() {
            return Err(Error::Terminal);
        }
        let damaged = state.damaged();
        let mut picked: Vec<ComponentId> = self
            .order
            .iter()
            .copied()
            .filter(|c| damaged.contains(*c))
            .take(state.crews())
            .collect();
        if picked.len() < state.crews() {
            let listed = ComponentSet::from_ids(damaged.universe(), self.order.iter().copied());
            picked.extend(
                damaged
                    .iter()
                    .filter(|c| !listed.contains(*c))
                    .take(state.crews() - picked.len()),
            );
        }
        Ok(RepairAction::new(picked))
    }
}

pub fn base_next_action(base: &BasePolicy, state: &RecoveryState) -> Result<RepairAction> {
    base.next_action(state)
}

/// Everything a policy needs to know about one replicate.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub community: &'a Community,
    pub scenario: &'a DamageScenario,
    pub crews: usize,
    pub convention: RewardConvention,
}

impl<'a> Problem<'a> {
    pub fn new(community: &'a Community, scenario: &'a DamageScenario, crews: usize) -> Self {
        Problem {
            community,
            scenario,
            crews,
            convention: RewardConvention::default(),
        }
    }

    pub fn initial_state(&self) -> Result<RecoveryState> {
        RecoveryState::initial(self.scenario, self.crews)
    }
}

/// Finishes the schedule with the base policy, starting from `state` with
/// the running sums of the prefix already in `acc`.
fn complete_with_base(
    problem: &Problem<'_>,
    base: &BasePolicy,
    state: &RecoveryState,
    mut acc: RewardAccumulator,
) -> Result<Evaluation> {
    let mut state = state.clone();
    while !state.is_terminal() {
        let action = base.next_action(&state)?;
        let t = apply_action(problem.community, problem.scenario, &state, &action)?;
        acc.push(t.benefited, t.duration);
        state = t.next;
    }
    if acc.total_time() == 0.0 {
        return Ok(Evaluation {
            reward: problem.community.benefited_population(state.damaged()),
            total_time: 0.0,
        });
    }
    acc.evaluation(problem.convention)
}

/// H_k: reward of `prefix` followed by the base policy's completion from `state`.
pub fn completion_value(
    problem: &Problem<'_>,
    base: &BasePolicy,
    state: &RecoveryState,
    prefix: &Trajectory,
) -> Result<Evaluation> {
    complete_with_base(problem, base, state, RewardAccumulator::from_trajectory(prefix))
}

/// How candidate actions are produced at each epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateSelector {
    /// Only the base action (reproduces the base policy).
    BaseOnly,
    /// Every action in P_N(D_t).
    Exhaustive,
    /// Simulated annealing seeded with the base action.
    Annealing(AnnealingSchedule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepChoice {
    pub action: RepairAction,
    /// Completion value of the chosen action.
    pub evaluation: Evaluation,
    /// Candidate completions computed for this epoch.
    pub evaluations: usize,
}

fn evaluate_candidate(
    problem: &Problem<'_>,
    base: &BasePolicy,
    state: &RecoveryState,
    prefix: RewardAccumulator,
    action: &RepairAction,
) -> Result<Evaluation> {
    let t = apply_action(problem.community, problem.scenario, state, action)?;
    let mut acc = prefix;
    acc.push(t.benefited, t.duration);
    complete_with_base(problem, base, &t.next, acc)
}

/// Picks the candidate whose base completion scores best. Candidate
/// evaluation may run in parallel; the reduction order is fixed so the
/// result does not depend on scheduling.
pub fn rollout_step<R: rand::Rng + ?Sized>(
    problem: &Problem<'_>,
    base: &BasePolicy,
    state: &RecoveryState,
    prefix: &RewardAccumulator,
    selector: &CandidateSelector,
    rng: &mut R,
) -> Result<StepChoice> {
    let base_action = base.next_action(state)?;
    match selector {
        CandidateSelector::BaseOnly => {
            let evaluation = evaluate_candidate(problem, base, state, *prefix, &base_action)?;
            Ok(StepChoice {
                action: base_action,
                evaluation,
                evaluations: 1,
            })
        }
        CandidateSelector::Exhaustive => {
            let candidates = enumerate_actions(state)?;
            let scored = candidates
                .par_iter()
                .map(|a| evaluate_candidate(problem, base, state, *prefix, a))
                .collect::<Result<Vec<_>>>()?;
            let evaluations = scored.len();
            let (action, evaluation) = candidates
                .into_iter()
                .zip(scored)
                .reduce(|best, next| {
                    if compare_candidates((next.1, &next.0), (best.1, &best.0)) == Ordering::Greater {
                        next
                    } else {
                        best
                    }
                })
                .expect("nonterminal state has candidates");
            Ok(StepChoice {
                action,
                evaluation,
                evaluations,
            })
        }
        CandidateSelector::Annealing(schedule) => {
            let mut cache: HashMap<RepairAction, Evaluation> = HashMap::new();
            let out = anneal(
                |a: &RepairAction| {
                    if let Some(e) = cache.get(a) {
                        return Ok(*e);
                    }
                    let e = evaluate_candidate(problem, base, state, *prefix, a)?;
                    cache.insert(a.clone(), e);
                    Ok(e)
                },
                state.damaged(),
                state.crews(),
                schedule,
                Some(base_action),
                rng,
            )?;
            Ok(StepChoice {
                action: out.best,
                evaluation: out.evaluation,
                evaluations: cache.len(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Base,
    /// Rollout with exhaustive candidate enumeration.
    Rollout,
    RolloutSa,
    /// Exact optimum; small instances only.
    Optimal,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Base => "base",
            PolicyKind::Rollout => "rollout",
            PolicyKind::RolloutSa => "rollout-sa",
            PolicyKind::Optimal => "optimal",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "base" => Ok(PolicyKind::Base),
            "rollout" => Ok(PolicyKind::Rollout),
            "rollout-sa" => Ok(PolicyKind::RolloutSa),
            "optimal" => Ok(PolicyKind::Optimal),
            other => Err(format!(
                "unknown policy `{other}` (expected base, rollout, rollout-sa or optimal)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOptions {
    pub annealing: AnnealingSchedule,
    pub oracle_cap: u64,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        PolicyOptions {
            annealing: AnnealingSchedule::default(),
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

/// Runs a policy from the post-earthquake state to full repair.
/// `seed` drives the annealer's random stream.
pub fn run_policy(
    problem: &Problem<'_>,
    base: &BasePolicy,
    policy: PolicyKind,
    options: &PolicyOptions,
    seed: u64,
) -> Result<Trajectory> {
    let mut state = problem.initial_state()?;
    if policy == PolicyKind::Optimal {
        return exhaustive_optimum(problem, &state, options.oracle_cap).map(|(t, _)| t);
    }
    let selector = match policy {
        PolicyKind::Base => None,
        PolicyKind::Rollout => Some(CandidateSelector::Exhaustive),
        PolicyKind::RolloutSa => Some(CandidateSelector::Annealing(options.annealing)),
        PolicyKind::Optimal => unreachable!(),
    };
    run_with_selector(problem, base, selector.as_ref(), &mut state, seed)
}

/// Runs rollout with an explicit selector, or the bare base policy for `None`.
pub fn run_with_selector(
    problem: &Problem<'_>,
    base: &BasePolicy,
    selector: Option<&CandidateSelector>,
    state: &mut RecoveryState,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectory = Trajectory::new(problem.community.benefited_population(state.damaged()));
    let mut acc = RewardAccumulator::new();
    while !state.is_terminal() {
        let action = match selector {
            None => base.next_action(state)?,
            Some(sel) => rollout_step(problem, base, state, &acc, sel, &mut rng)?.action,
        };
        let t = apply_action(problem.community, problem.scenario, state, &action)?;
        acc.push(t.benefited, t.duration);
        trajectory.push(action, &t);
        *state = t.next;
    }
    Ok(trajectory)
}

// ---------------------------------------------------------------------------
// Exact optimum
// ---------------------------------------------------------------------------

/// One nondominated completion from a damaged set.
#[derive(Debug, Clone)]
struct FrontEntry {
    /// Σ h·k over the completion.
    area: f64,
    time: f64,
    action: Option<RepairAction>,
    /// Index into the successor's front.
    next: usize,
}

struct Oracle<'p, 'a> {
    problem: &'p Problem<'a>,
    crews: usize,
    memo: HashMap<ComponentSet, Vec<FrontEntry>>,
    expanded: u64,
    cap: u64,
}

impl Oracle<'_, '_> {
    /// Pareto front (max area, min time) of completions from `damaged`.
    ///
    /// For any prefix, the best completion maximizes
    /// `(A_prefix + area) / (T_prefix + time)`, which is monotone in both
    /// coordinates, so the front is an exact summary of the subproblem.
    fn front(&mut self, damaged: &ComponentSet) -> Result<()> {
        if self.memo.contains_key(damaged) {
            return Ok(());
        }
        if damaged.is_empty() {
            self.memo.insert(
                damaged.clone(),
                vec![FrontEntry {
                    area: 0.0,
                    time: 0.0,
                    action: None,
                    next: 0,
                }],
            );
            return Ok(());
        }
        let state = RecoveryState::new(damaged.clone(), 0.0, self.crews)?;
        let mut entries = Vec::new();
        for action in enumerate_actions(&state)? {
            self.expanded += 1;
            if self.expanded > self.cap {
                return Err(Error::OracleCapExceeded { cap: self.cap });
            }
            let t = apply_action(self.problem.community, self.problem.scenario, &state, &action)?;
            let child = t.next.damaged().clone();
            self.front(&child)?;
            let step_area = t.benefited * t.duration;
            for (i, e) in self.memo[&child].iter().enumerate() {
                entries.push(FrontEntry {
                    area: step_area + e.area,
                    time: t.duration + e.time,
                    action: Some(action.clone()),
                    next: i,
                });
            }
        }
        // stable sort keeps canonical action order among exact duplicates
        entries.sort_by(|a, b| a.time.total_cmp(&b.time).then(b.area.total_cmp(&a.area)));
        let mut front = Vec::new();
        let mut best_area = f64::NEG_INFINITY;
        for e in entries {
            if e.area > best_area {
                best_area = e.area;
                front.push(e);
            }
        }
        self.memo.insert(damaged.clone(), front);
        Ok(())
    }

    fn reconstruct(&self, start: &RecoveryState, index: usize) -> Result<Trajectory> {
        let mut state = start.clone();
        let mut trajectory = Trajectory::new(self.problem.community.benefited_population(state.damaged()));
        let mut entry = &self.memo[state.damaged()][index];
        while let Some(action) = &entry.action {
            let t = apply_action(self.problem.community, self.problem.scenario, &state, action)?;
            trajectory.push(action.clone(), &t);
            state = t.next;
            entry = &self.memo[state.damaged()][entry.next];
        }
        Ok(trajectory)
    }
}

/// Exact maximizer of the reward over all repair schedules from `state`,
/// by memoized search over damaged sets. Fails once more than `cap`
/// state-action expansions are needed.
pub fn exhaustive_optimum(problem: &Problem<'_>, state: &RecoveryState, cap: u64) -> Result<(Trajectory, Evaluation)> {
    if problem.convention != RewardConvention::StepDuration {
        return Err(Error::InvalidAction(
            "the exact optimum is only defined for the step-duration reward".into(),
        ));
    }
    let mut oracle = Oracle {
        problem,
        crews: state.crews(),
        memo: HashMap::new(),
        expanded: 0,
        cap,
    };
    oracle.front(state.damaged())?;
    let root_len = oracle.memo[state.damaged()].len();
    let mut best: Option<(Trajectory, Evaluation)> = None;
    for i in 0..root_len {
        let trajectory = oracle.reconstruct(state, i)?;
        // forward re-evaluation so the value matches trajectory_reward bit for bit
        let eval = evaluate_trajectory(&trajectory, problem.convention)?;
        let better = match &best {
            None => true,
            Some((bt, be)) => match (trajectory.first_action(), bt.first_action()) {
                (Some(a), Some(b)) => compare_candidates((eval, a), (*be, b)) == Ordering::Greater,
                _ => false,
            },
        };
        if better {
            best = Some((trajectory, eval));
        }
    }
    Ok(best.expect("front is never empty"))
}
