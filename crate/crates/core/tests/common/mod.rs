//! Random small instances with hand-written reference oracles.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use rollout_restoration::community::{
    validate_community, AccessCounting, CellConfig, CommunityConfig, ComponentConfig, ComponentKind, Point,
    RetailerConfig,
};
use rollout_restoration::hazard::{DamageScenario, DamageState};
use rollout_restoration::{Community, ComponentId, ComponentSet};

/// Fixed topology of nine components; wiring, locations and populations vary.
pub const NAMES: [&str; 9] = ["src", "sub", "tower", "w0", "w1", "pipe", "br", "r0", "r1"];
const POWER_NODES: [usize; 3] = [0, 1, 2];
const WATER_NODES: [usize; 3] = [3, 4, 5];

#[derive(Debug, Clone)]
pub struct Instance {
    pub community: Community,
    pub scenario: DamageScenario,
    /// Power node feeding each well.
    pub well_power: [usize; 2],
    /// (power node, water node, needs bridge) per retailer.
    pub retailer_wiring: [(usize, usize, bool); 2],
    /// (power node, water node, population) per cell.
    pub cells: Vec<(usize, usize, u64)>,
}

fn comp(id: usize, kind: ComponentKind, requires: &[usize], rng: &mut impl Rng) -> ComponentConfig {
    ComponentConfig {
        id: NAMES[id].to_string(),
        kind,
        location: Point::new(rng.random_range(-2000.0..2000.0), rng.random_range(-2000.0..2000.0)),
        requires: requires.iter().map(|&r| NAMES[r].to_string()).collect(),
    }
}

/// A random instance with `damaged` damaged components and integer repair
/// days, so every reward is an exact ratio of integers.
pub fn random_instance(rng: &mut impl Rng, damaged: usize) -> Instance {
    use ComponentKind::*;
    let well_power = [POWER_NODES[rng.random_range(0..3)], POWER_NODES[rng.random_range(0..3)]];
    let retailer_wiring = [0, 1].map(|_| {
        (
            POWER_NODES[rng.random_range(0..3)],
            WATER_NODES[rng.random_range(0..3)],
            rng.random_bool(0.5),
        )
    });
    let cells: Vec<(usize, usize, u64)> = (0..rng.random_range(1..=3))
        .map(|_| {
            (
                POWER_NODES[rng.random_range(0..3)],
                WATER_NODES[rng.random_range(0..3)],
                rng.random_range(0..=1000),
            )
        })
        .collect();

    let components = vec![
        comp(0, PowerSource, &[], rng),
        comp(1, Substation, &[0], rng),
        comp(2, TowerLineSegment, &[1], rng),
        comp(3, WaterWell, &[well_power[0]], rng),
        comp(4, WaterWell, &[well_power[1]], rng),
        comp(5, PipeSegment, &[3, 4], rng),
        comp(6, Bridge, &[], rng),
        comp(7, Retailer, &[retailer_wiring[0].0, retailer_wiring[0].1], rng),
        comp(8, Retailer, &[retailer_wiring[1].0, retailer_wiring[1].1], rng),
    ];
    let retailers = retailer_wiring
        .iter()
        .enumerate()
        .map(|(i, &(_, _, bridge))| RetailerConfig {
            id: NAMES[7 + i].to_string(),
            floor_area: rng.random_range(500.0..5000.0),
            access_bridges: if bridge { vec!["br".to_string()] } else { vec![] },
        })
        .collect();
    let cell_configs = cells
        .iter()
        .map(|&(p, w, pop)| CellConfig {
            name: None,
            location: Point::new(rng.random_range(-2000.0..2000.0), rng.random_range(-2000.0..2000.0)),
            population: pop,
            epn_node: NAMES[p].to_string(),
            wn_node: NAMES[w].to_string(),
        })
        .collect();
    let config = CommunityConfig {
        gravity_exponent: 2.0,
        access: AccessCounting::Binary,
        tower_spacing_m: 100.0,
        components,
        lines: vec![],
        retailers,
        cells: cell_configs,
    };
    let community = validate_community(&config).expect("generated community is valid");

    let mut ids: Vec<usize> = (0..NAMES.len()).collect();
    ids.shuffle(rng);
    let mut states = vec![DamageState::None; NAMES.len()];
    let mut durations = vec![0.0; NAMES.len()];
    for &i in &ids[..damaged] {
        states[i] = DamageState::from_level(rng.random_range(1..=4));
        durations[i] = rng.random_range(1..=12) as f64;
    }
    let scenario = DamageScenario::from_parts(states, durations, 0).unwrap();
    Instance {
        community,
        scenario,
        well_power,
        retailer_wiring,
        cells,
    }
}

impl Instance {
    /// Benefited population evaluated straight from the wiring.
    pub fn reference_benefited(&self, damaged: &ComponentSet) -> f64 {
        let up = |i: usize| !damaged.contains(ComponentId(i));
        let src = up(0);
        let sub = src && up(1);
        let tower = sub && up(2);
        let power = |node: usize| [src, sub, tower][node];
        let w0 = up(3) && power(self.well_power[0]);
        let w1 = up(4) && power(self.well_power[1]);
        let pipe = up(5) && (w0 || w1);
        let water = |node: usize| [w0, w1, pipe][node - 3];
        let bridge = up(6);
        let any_retailer = self
            .retailer_wiring
            .iter()
            .enumerate()
            .any(|(i, &(p, w, needs_bridge))| up(7 + i) && power(p) && water(w) && (!needs_bridge || bridge));
        self.cells
            .iter()
            .filter(|&&(p, w, _)| power(p) && water(w) && any_retailer)
            .map(|&(_, _, pop)| pop as f64)
            .sum()
    }

    /// Best time-averaged benefited population over every complete schedule,
    /// by exhaustive search over ordered batches of at most `crews` targets.
    pub fn brute_force_best(&self, crews: usize) -> f64 {
        let damaged: Vec<usize> = self.scenario.damaged_set().iter().map(|c| c.index()).collect();
        if damaged.is_empty() {
            return self.reference_benefited(&self.scenario.damaged_set());
        }
        let mut best = f64::NEG_INFINITY;
        self.search(&damaged, (1u32 << damaged.len()) - 1, crews, 0.0, 0.0, &mut best);
        best
    }

    fn search(&self, damaged: &[usize], remaining: u32, crews: usize, area: f64, time: f64, best: &mut f64) {
        if remaining == 0 {
            *best = best.max(area / time);
            return;
        }
        // every nonempty submask of `remaining` with at most `crews` bits
        let mut sub = remaining;
        while sub != 0 {
            if sub.count_ones() as usize <= crews {
                let rest = remaining & !sub;
                let mut duration = 0.0f64;
                for (bit, &c) in damaged.iter().enumerate() {
                    if sub & (1 << bit) != 0 {
                        duration = duration.max(self.scenario.duration(ComponentId(c)));
                    }
                }
                let still = ComponentSet::from_ids(
                    NAMES.len(),
                    damaged
                        .iter()
                        .enumerate()
                        .filter(|(bit, _)| rest & (1 << bit) != 0)
                        .map(|(_, &c)| ComponentId(c)),
                );
                let h = self.reference_benefited(&still);
                self.search(damaged, rest, crews, area + h * duration, time + duration, best);
            }
            sub = (sub - 1) & remaining;
        }
    }
}
