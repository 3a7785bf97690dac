//! Simulated annealing over repair actions drawn from a candidate pool.
//!
//! The chain moves between actions whose targets lie in a pool `D̃ ⊆ D`.
//! Every `refresh_every` iterations the lowest-scoring pool members are
//! swapped for damaged components the pool has not held before, so the
//! search drifts towards promising components without ever enumerating
//! the full `P_N(D)`.

use std::cmp::Ordering;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::RepairAction;
use crate::error::{ConfigIssue, Error, Result};
use crate::ids::{ComponentId, ComponentSet};
use crate::objective::{compare_candidates, Evaluation};

/// Metropolis acceptance probability for a move that worsens the objective
/// by `delta` (objective is maximized; `delta = current − candidate`).
pub fn accept_probability(delta: f64, temperature: f64, boltzmann: f64) -> Result<f64> {
    let kt = boltzmann * temperature;
    if temperature.is_nan() || temperature <= 0.0 || kt.is_nan() || kt <= 0.0 {
        return Err(Error::NonPositiveTemperature(kt));
    }
    if delta <= 0.0 {
        return Ok(1.0);
    }
    Ok((-delta / kt).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealingSchedule {
    /// Initial temperature, in objective units (persons).
    #[serde(default = "defaults::initial_temperature")]
    pub initial_temperature: f64,
    /// Geometric cooling factor applied after every iteration.
    #[serde(default = "defaults::cooling")]
    pub cooling: f64,
    /// Evaluator calls per decision epoch.
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[serde(default = "defaults::boltzmann")]
    pub boltzmann: f64,
    /// Upper bound on `|D̃|`.
    #[serde(default = "defaults::pool_size")]
    pub pool_size: usize,
    /// Fraction of the pool considered for replacement at each refresh.
    #[serde(default = "defaults::refresh_fraction")]
    pub refresh_fraction: f64,
    /// Iterations between pool refreshes; 0 disables refreshing.
    #[serde(default = "defaults::refresh_every")]
    pub refresh_every: usize,
}

mod defaults {
    pub fn initial_temperature() -> f64 {
        1000.0
    }
    pub fn cooling() -> f64 {
        0.95
    }
    pub fn iterations() -> usize {
        100
    }
    pub fn boltzmann() -> f64 {
        1.0
    }
    pub fn pool_size() -> usize {
        20
    }
    pub fn refresh_fraction() -> f64 {
        0.25
    }
    pub fn refresh_every() -> usize {
        10
    }
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        AnnealingSchedule {
            initial_temperature: defaults::initial_temperature(),
            cooling: defaults::cooling(),
            iterations: defaults::iterations(),
            boltzmann: defaults::boltzmann(),
            pool_size: defaults::pool_size(),
            refresh_fraction: defaults::refresh_fraction(),
            refresh_every: defaults::refresh_every(),
        }
    }
}

impl AnnealingSchedule {
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut bad = |reason: String| {
            issues.push(ConfigIssue::InvalidValue {
                owner: "annealing".into(),
                reason,
            })
        };
        if !(self.initial_temperature.is_finite() && self.initial_temperature > 0.0) {
            bad(format!(
                "initial_temperature must be > 0, got {}",
                self.initial_temperature
            ));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            bad(format!("cooling must lie in (0, 1), got {}", self.cooling));
        }
        if self.iterations == 0 {
            bad("iterations must be >= 1".into());
        }
        if !(self.boltzmann.is_finite() && self.boltzmann > 0.0) {
            bad(format!("boltzmann must be > 0, got {}", self.boltzmann));
        }
        if self.pool_size == 0 {
            bad("pool_size must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.refresh_fraction) {
            bad(format!(
                "refresh_fraction must lie in [0, 1], got {}",
                self.refresh_fraction
            ));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(issues))
        }
    }
}

#[derive(Clone, Copy)]
enum Move {
    Swap,
    Add,
    Drop,
}

/// Random neighbor of `action` within `pool`: swap a target for a pool
/// non-target, add a pool component (budget permitting) or drop a target
/// (keeping at least one). The move type is uniform among feasible ones;
/// with no feasible move the action is returned unchanged.
pub fn neighbor<R: Rng + ?Sized>(
    action: &RepairAction,
    pool: &[ComponentId],
    crews: usize,
    rng: &mut R,
) -> RepairAction {
    let outside: Vec<ComponentId> = pool.iter().copied().filter(|c| !action.contains(*c)).collect();
    let mut moves = Vec::with_capacity(3);
    if !action.is_empty() && !outside.is_empty() {
        moves.push(Move::Swap);
    }
    if action.len() < crews && !outside.is_empty() {
        moves.push(Move::Add);
    }
    if action.len() > 1 {
        moves.push(Move::Drop);
    }
    let Some(&mv) = moves.choose(rng) else {
        return action.clone();
    };
    let targets = action.targets();
    match mv {
        Move::Swap => {
            let out = rng.random_range(0..targets.len());
            let incoming = *outside.choose(rng).expect("nonempty");
            RepairAction::new(
                targets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != out)
                    .map(|(_, c)| *c)
                    .chain(std::iter::once(incoming)),
            )
        }
        Move::Add => {
            let incoming = *outside.choose(rng).expect("nonempty");
            RepairAction::new(targets.iter().copied().chain(std::iter::once(incoming)))
        }
        Move::Drop => {
            let out = rng.random_range(0..targets.len());
            RepairAction::new(targets.iter().enumerate().filter(|(i, _)| *i != out).map(|(_, c)| *c))
        }
    }
}

/// Best reward observed for any evaluated action containing each component.
#[derive(Debug, Clone)]
pub struct ComponentScores {
    best: Vec<Option<f64>>,
}

impl ComponentScores {
    pub fn new(universe: usize) -> Self {
        ComponentScores {
            best: vec![None; universe],
        }
    }

    pub fn record(&mut self, action: &RepairAction, reward: f64) {
        for t in action.targets() {
            let slot = &mut self.best[t.index()];
            *slot = Some(slot.map_or(reward, |b| b.max(reward)));
        }
    }

    pub fn get(&self, id: ComponentId) -> Option<f64> {
        self.best[id.index()]
    }

    pub fn set(&mut self, id: ComponentId, value: Option<f64>) {
        self.best[id.index()] = value;
    }
}

/// The restricted component set `D̃` the chain moves in.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    members: Vec<ComponentId>,
    ever: ComponentSet,
}

impl CandidatePool {
    pub fn new<I: IntoIterator<Item = ComponentId>>(universe: usize, members: I) -> Self {
        let mut members: Vec<ComponentId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        let ever = ComponentSet::from_ids(universe, members.iter().copied());
        CandidatePool { members, ever }
    }

    /// Pool seeded with `initial`'s targets plus a uniform fill from the rest
    /// of `damaged`, up to `size` members.
    pub fn seeded<R: Rng + ?Sized>(damaged: &ComponentSet, initial: &RepairAction, size: usize, rng: &mut R) -> Self {
        let mut rest: Vec<ComponentId> = damaged.iter().filter(|c| !initial.contains(*c)).collect();
        rest.shuffle(rng);
        let fill = size.saturating_sub(initial.len());
        CandidatePool::new(
            damaged.universe(),
            initial.targets().iter().copied().chain(rest.into_iter().take(fill)),
        )
    }

    pub fn members(&self) -> &[ComponentId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: ComponentId) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// Replaces up to `⌊fraction·|pool|⌋` of the lowest-scoring members not in
/// `keep` with damaged components from outside the pool, preferring ones
/// the pool never held. A newcomer with a known score below the member it
/// would displace is accepted with the Metropolis probability at
/// `temperature`; unscored newcomers are always accepted.
#[allow(clippy::too_many_arguments)]
pub fn refresh_pool<R: Rng + ?Sized>(
    pool: &mut CandidatePool,
    damaged: &ComponentSet,
    scores: &ComponentScores,
    keep: &RepairAction,
    fraction: f64,
    temperature: f64,
    boltzmann: f64,
    rng: &mut R,
) -> Result<usize> {
    let outside: Vec<ComponentId> = damaged.iter().filter(|c| !pool.contains(*c)).collect();
    let budget = (fraction * pool.len() as f64).floor() as usize;
    if outside.is_empty() || budget == 0 {
        return Ok(0);
    }
    let mut fresh: Vec<ComponentId> = outside.iter().copied().filter(|c| !pool.ever.contains(*c)).collect();
    let mut stale: Vec<ComponentId> = outside.iter().copied().filter(|c| pool.ever.contains(*c)).collect();

    let mut droppable: Vec<ComponentId> = pool.members.iter().copied().filter(|c| !keep.contains(*c)).collect();
    droppable.sort_by(|a, b| match (scores.get(*a), scores.get(*b)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.cmp(b)),
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (None, None) => a.cmp(b),
    });

    let mut replaced = 0;
    for old in droppable.into_iter().take(budget) {
        let source = if !fresh.is_empty() { &mut fresh } else { &mut stale };
        if source.is_empty() {
            break;
        }
        let pick = rng.random_range(0..source.len());
        let new = source.swap_remove(pick);
        let accept = match (scores.get(old), scores.get(new)) {
            (Some(old_score), Some(new_score)) if new_score < old_score => {
                let p = accept_probability(old_score - new_score, temperature, boltzmann)?;
                rng.random::<f64>() < p
            }
            _ => true,
        };
        if accept {
            let at = pool.members.binary_search(&old).expect("member");
            pool.members.remove(at);
            let at = pool.members.binary_search(&new).unwrap_err();
            pool.members.insert(at, new);
            pool.ever.insert(new);
            replaced += 1;
        }
    }
    Ok(replaced)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    pub best: RepairAction,
    pub evaluation: Evaluation,
    pub evaluations: usize,
}

/// Runs the annealing chain for one decision epoch and returns the best
/// action ever evaluated.
///
/// The evaluator is called exactly `schedule.iterations` times, or once when
/// the damaged set admits a single action. `initial` defaults to a random
/// action from the seeded pool.
pub fn anneal<F, R>(
    mut evaluator: F,
    damaged: &ComponentSet,
    crews: usize,
    schedule: &AnnealingSchedule,
    initial: Option<RepairAction>,
    rng: &mut R,
) -> Result<AnnealOutcome>
where
    F: FnMut(&RepairAction) -> Result<Evaluation>,
    R: Rng + ?Sized,
{
    if damaged.is_empty() {
        return Err(Error::Terminal);
    }
    if crews == 0 {
        return Err(Error::InvalidAction("crew budget must be at least 1".into()));
    }
    schedule.validate()?;
    let pool_size = schedule.pool_size.min(damaged.len());

    let (mut pool, mut current) = match initial {
        Some(action) => {
            if action.is_empty() || action.len() > crews || !action.targets().iter().all(|t| damaged.contains(*t)) {
                return Err(Error::InvalidAction("initial action is not in P_N(D)".into()));
            }
            (CandidatePool::seeded(damaged, &action, pool_size, rng), action)
        }
        None => {
            let pool = CandidatePool::seeded(damaged, &RepairAction::new([]), pool_size, rng);
            let k = rng.random_range(1..=crews.min(pool.len()));
            let action = RepairAction::new(pool.members().choose_multiple(rng, k).copied());
            (pool, action)
        }
    };

    let mut scores = ComponentScores::new(damaged.universe());
    let mut current_eval = evaluator(&current)?;
    scores.record(&current, current_eval.reward);
    let mut evaluations = 1;
    let mut best = (current.clone(), current_eval);

    if damaged.len() == 1 {
        return Ok(AnnealOutcome {
            best: best.0,
            evaluation: best.1,
            evaluations,
        });
    }

    let mut temperature = schedule.initial_temperature;
    for i in 1..schedule.iterations {
        if schedule.refresh_every > 0 && i % schedule.refresh_every == 0 {
            refresh_pool(
                &mut pool,
                damaged,
                &scores,
                &current,
                schedule.refresh_fraction,
                temperature,
                schedule.boltzmann,
                rng,
            )?;
        }
        let candidate = neighbor(&current, pool.members(), crews, rng);
        let eval = evaluator(&candidate)?;
        evaluations += 1;
        scores.record(&candidate, eval.reward);
        if compare_candidates((eval, &candidate), (best.1, &best.0)) == Ordering::Greater {
            best = (candidate.clone(), eval);
        }
        let delta = current_eval.reward - eval.reward;
        let accept = delta <= 0.0 || rng.random::<f64>() < accept_probability(delta, temperature, schedule.boltzmann)?;
        if accept {
            current = candidate;
            current_eval = eval;
        }
        temperature *= schedule.cooling;
    }

    Ok(AnnealOutcome {
        best: best.0,
        evaluation: best.1,
        evaluations,
    })
}
