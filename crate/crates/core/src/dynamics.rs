//! The repair decision process.
//!
//! Epochs are batch-synchronous: every target of an action is repaired in
//! parallel by its own crew, and the next decision happens once the whole
//! batch is done, so a step lasts as long as its slowest repair. Crews are
//! fungible and there is no travel time or preemption.

use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;

use crate::community::Community;
use crate::error::{Error, Result};
use crate::hazard::DamageScenario;
use crate::ids::{ComponentId, ComponentSet};

/// Decision-process state: the damaged set, elapsed time and crew budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryState {
    damaged: ComponentSet,
    elapsed: f64,
    crews: usize,
}

impl RecoveryState {
    /// State right after the earthquake. `crews` must be at least 1.
    pub fn initial(scenario: &DamageScenario, crews: usize) -> Result<Self> {
        Self::new(scenario.damaged_set(), 0.0, crews)
    }

    pub fn new(damaged: ComponentSet, elapsed: f64, crews: usize) -> Result<Self> {
        if crews == 0 {
            return Err(Error::InvalidAction("crew budget must be at least 1".into()));
        }
        if !(elapsed >= 0.0 && elapsed.is_finite()) {
            return Err(Error::InvalidAction(format!(
                "elapsed time must be >= 0, got {elapsed}"
            )));
        }
        Ok(RecoveryState {
            damaged,
            elapsed,
            crews,
        })
    }

    pub fn damaged(&self) -> &ComponentSet {
        &self.damaged
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn crews(&self) -> usize {
        self.crews
    }

    pub fn is_terminal(&self) -> bool {
        self.damaged.is_empty()
    }
}

pub fn is_terminal(state: &RecoveryState) -> bool {
    state.is_terminal()
}

/// A batch of components repaired together. Targets are kept sorted.
///
/// Actions order canonically by size, then lexicographically by target ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RepairAction {
    targets: Vec<ComponentId>,
}

impl RepairAction {
    pub fn new<I: IntoIterator<Item = ComponentId>>(targets: I) -> Self {
        let mut targets: Vec<ComponentId> = targets.into_iter().collect();
        targets.sort_unstable();
        targets.dedup();
        RepairAction { targets }
    }

    pub fn targets(&self) -> &[ComponentId] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn contains(&self, id: ComponentId) -> bool {
        self.targets.binary_search(&id).is_ok()
    }

    /// Checks membership in P_N(D) for the given state.
    pub fn validate(&self, state: &RecoveryState) -> Result<()> {
        if self.targets.is_empty() || self.targets.len() > state.crews {
            return Err(Error::InvalidAction(format!(
                "action has {} targets, budget allows 1..={}",
                self.targets.len(),
                state.crews
            )));
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, community: &'a Community) -> impl fmt::Display + 'a {
        DisplayAction {
            action: self,
            community,
        }
    }
}

impl Ord for RepairAction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.targets
            .len()
            .cmp(&other.targets.len())
            .then_with(|| self.targets.cmp(&other.targets))
    }
}

impl PartialOrd for RepairAction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct DisplayAction<'a> {
    action: &'a RepairAction,
    community: &'a Community,
}

impl fmt::Display for DisplayAction<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.action.targets.iter().map(|t| self.community.name_of(*t));
        write!(f, "{{{}}}", names.format(", "))
    }
}

/// All nonempty subsets of the damaged set with at most `crews` members, in
/// canonical order.
pub fn enumerate_actions(state: &RecoveryState) -> Result<Vec<RepairAction>> {
    if state.is_terminal() {
        return Err(Error::Terminal);
    }
    let damaged = state.damaged.to_vec();
    let max = state.crews.min(damaged.len());
    Ok((1..=max)
        .flat_map(|k| {
            damaged
                .iter()
                .copied()
                .combinations(k)
                .map(|targets| RepairAction { targets })
        })
        .collect())
}

/// `|P_N(D)|` without enumerating.
pub fn action_count(damaged: usize, crews: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for k in 1..=crews.min(damaged) {
        binom = binom * (damaged - k + 1) as u128 / k as u128;
        total += binom;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next: RecoveryState,
    /// Step duration k_t in days.
    pub duration: f64,
    /// Benefited persons once the step completes, h_t.
    pub benefited: f64,
}

/// Repairs every target in parallel; the step lasts as long as the slowest.
pub fn apply_action(
    community: &Community,
    scenario: &DamageScenario,
    state: &RecoveryState,
    action: &RepairAction,
) -> Result<Transition> {
    action.validate(state)?;
    let mut damaged = state.damaged.clone();
    let mut duration = 0.0f64;
    for &t in &action.targets {
        if t.index() >= damaged.universe() || !damaged.contains(t) {
            let name = community
                .components()
                .get(t.index())
                .map(|c| c.name.clone())
                .unwrap_or_else(|| t.to_string());
            return Err(Error::NotDamaged(name));
        }
        duration = duration.max(scenario.duration(t));
        damaged.remove(t);
    }
    let benefited = community.benefited_population(&damaged);
    Ok(Transition {
        next: RecoveryState {
            damaged,
            elapsed: state.elapsed + duration,
            crews: state.crews,
        },
        duration,
        benefited,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub action: RepairAction,
    pub duration: f64,
    pub benefited: f64,
}

/// A sequence of repair steps starting from the post-earthquake state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Benefited persons at elapsed time 0, before any repair completes.
    pub initial_benefited: f64,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(initial_benefited: f64) -> Self {
        Trajectory {
            initial_benefited,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, action: RepairAction, transition: &Transition) {
        self.steps.push(Step {
            action,
            duration: transition.duration,
            benefited: transition.benefited,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    pub fn final_benefited(&self) -> f64 {
        self.steps.last().map_or(self.initial_benefited, |s| s.benefited)
    }

    /// Completion time of each step.
    pub fn completion_times(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(0.0, |t, s| {
                *t += s.duration;
                Some(*t)
            })
            .collect()
    }

    pub fn first_action(&self) -> Option<&RepairAction> {
        self.steps.first().map(|s| &s.action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::{
        validate_community, CellConfig, CommunityConfig, ComponentConfig, ComponentKind, Point, RetailerConfig,
    };
    use crate::hazard::DamageState;

    fn state(n_damaged: usize, crews: usize) -> RecoveryState {
        let set = ComponentSet::from_ids(n_damaged + 2, (0..n_damaged).map(ComponentId));
        RecoveryState::new(set, 0.0, crews).unwrap()
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_actions(&state(3, 2)).unwrap().len(), 6);
        assert_eq!(enumerate_actions(&state(1, 5)).unwrap().len(), 1);
        assert_eq!(enumerate_actions(&state(10, 3)).unwrap().len(), 175);
        assert!(matches!(enumerate_actions(&state(0, 2)), Err(Error::Terminal)));
    }

    #[test]
    fn enumeration_is_canonical_and_unique() {
        let actions = enumerate_actions(&state(5, 3)).unwrap();
        assert!(actions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn count_matches_direct_enumeration() {
        for d in 0..=12usize {
            for n in 1..=5usize {
                let direct = (1u32..(1 << d)).filter(|m| m.count_ones() as usize <= n).count() as u128;
                assert_eq!(action_count(d, n), direct, "d={d} n={n}");
                if d > 0 {
                    assert_eq!(enumerate_actions(&state(d, n)).unwrap().len() as u128, direct);
                }
            }
        }
    }

    /// src feeds two wells; cells on each well. Everything damaged but one well.
    fn toy() -> (Community, DamageScenario) {
        let comp = |id: &str, kind, x: f64, req: &[&str]| ComponentConfig {
            id: id.into(),
            kind,
            location: Point::new(x, 0.0),
            requires: req.iter().map(|s| s.to_string()).collect(),
        };
        let cfg = CommunityConfig {
            gravity_exponent: 2.0,
            access: Default::default(),
            tower_spacing_m: 100.0,
            components: vec![
                comp("src", ComponentKind::PowerSource, 0.0, &[]),
                comp("w1", ComponentKind::WaterWell, 10.0, &["src"]),
                comp("w2", ComponentKind::WaterWell, 20.0, &["src"]),
                comp("shop", ComponentKind::Retailer, 30.0, &["src"]),
            ],
            lines: vec![],
            retailers: vec![RetailerConfig {
                id: "shop".into(),
                floor_area: 100.0,
                access_bridges: vec![],
            }],
            cells: vec![
                CellConfig {
                    name: None,
                    location: Point::new(0.0, 5.0),
                    population: 70,
                    epn_node: "src".into(),
                    wn_node: "w1".into(),
                },
                CellConfig {
                    name: None,
                    location: Point::new(0.0, 9.0),
                    population: 30,
                    epn_node: "src".into(),
                    wn_node: "w2".into(),
                },
            ],
        };
        let c = validate_community(&cfg).unwrap();
        let s = DamageScenario::from_parts(
            vec![
                DamageState::Complete,
                DamageState::Moderate,
                DamageState::None,
                DamageState::Slight,
            ],
            vec![7.0, 3.0, 0.0, 10.0],
            0,
        )
        .unwrap();
        (c, s)
    }

    #[test]
    fn single_and_batch_durations() {
        let (c, s) = toy();
        let st = RecoveryState::initial(&s, 2).unwrap();
        let t = apply_action(&c, &s, &st, &RepairAction::new([ComponentId(0)])).unwrap();
        assert_eq!(t.duration, 7.0);
        assert!(!t.next.damaged().contains(ComponentId(0)));
        assert_eq!(t.next.elapsed(), 7.0);

        let t = apply_action(&c, &s, &st, &RepairAction::new([ComponentId(1), ComponentId(3)])).unwrap();
        assert_eq!(t.duration, 10.0);
        assert_eq!(t.next.damaged().len(), 1);
    }

    #[test]
    fn repairing_the_source_releases_its_population() {
        let (c, s) = toy();
        // after shop and w1 are fixed, only the source blocks everyone
        let st = RecoveryState::new(ComponentSet::from_ids(4, [ComponentId(0)]), 13.0, 1).unwrap();
        assert_eq!(c.benefited_population(st.damaged()), 0.0);
        let t = apply_action(&c, &s, &st, &RepairAction::new([ComponentId(0)])).unwrap();
        assert_eq!(t.benefited, 100.0);
        assert!(is_terminal(&t.next));

        // with w1 still broken, the source only releases the w2 cell
        let st = RecoveryState::new(ComponentSet::from_ids(4, [ComponentId(0), ComponentId(1)]), 0.0, 1).unwrap();
        let t = apply_action(&c, &s, &st, &RepairAction::new([ComponentId(0)])).unwrap();
        assert_eq!(t.benefited, 30.0);
    }

    #[test]
    fn invalid_actions() {
        let (c, s) = toy();
        let st = RecoveryState::initial(&s, 1).unwrap();
        assert!(matches!(
            apply_action(&c, &s, &st, &RepairAction::new([ComponentId(2)])),
            Err(Error::NotDamaged(name)) if name == "w2"
        ));
        assert!(apply_action(&c, &s, &st, &RepairAction::new([ComponentId(0), ComponentId(1)])).is_err());
        assert!(apply_action(&c, &s, &st, &RepairAction::new([])).is_err());
        assert!(RecoveryState::initial(&s, 0).is_err());
    }

    #[test]
    fn terminal_after_covering_d0() {
        let (c, s) = toy();
        let mut st = RecoveryState::initial(&s, 3).unwrap();
        assert!(!is_terminal(&st));
        let all = RepairAction::new(st.damaged().iter());
        st = apply_action(&c, &s, &st, &all).unwrap().next;
        assert!(is_terminal(&st));
        assert_eq!(st.elapsed(), 10.0);
    }
}
