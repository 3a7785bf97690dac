//! Interdependent community model: power and water networks, bridges, food
//! retailers and the population cells they serve.
//!
//! A component's `requires` list is interpreted by kind:
//!
//! * source-like kinds (`power_source`, `water_well`, `booster_pump`,
//!   `water_tank`, `bridge`, `retailer`) need **every** listed component;
//! * conduit kinds (`substation`, `tower_line_segment`, `pipe_segment`) need
//!   **at least one** upstream component of their own network plus every
//!   listed component of other networks.
//!
//! Conduits therefore model path connectivity back to a source, while
//! cross-network requirements (a well needing an electrical feed) are strict.
//! The `requires` graph must be acyclic.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};
use crate::ids::{ComponentId, ComponentSet};

/// Distance floor between a population cell and a retailer, meters.
pub const MIN_GRAVITY_DISTANCE_M: f64 = 10.0;

pub const DEFAULT_GRAVITY_EXPONENT: f64 = 2.0;
pub const DEFAULT_TOWER_SPACING_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    PowerSource,
    Substation,
    TowerLineSegment,
    WaterWell,
    BoosterPump,
    WaterTank,
    PipeSegment,
    Bridge,
    Retailer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Network {
    Power,
    Water,
    Transport,
    Food,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 9] = [
        ComponentKind::PowerSource,
        ComponentKind::Substation,
        ComponentKind::TowerLineSegment,
        ComponentKind::WaterWell,
        ComponentKind::BoosterPump,
        ComponentKind::WaterTank,
        ComponentKind::PipeSegment,
        ComponentKind::Bridge,
        ComponentKind::Retailer,
    ];

    pub fn network(self) -> Network {
        use ComponentKind::*;
        match self {
            PowerSource | Substation | TowerLineSegment => Network::Power,
            WaterWell | BoosterPump | WaterTank | PipeSegment => Network::Water,
            Bridge => Network::Transport,
            Retailer => Network::Food,
        }
    }

    /// Conduits are served through any one upstream member of their network.
    pub fn is_conduit(self) -> bool {
        matches!(
            self,
            ComponentKind::Substation | ComponentKind::TowerLineSegment | ComponentKind::PipeSegment
        )
    }

    pub fn as_str(self) -> &'static str {
        use ComponentKind::*;
        match self {
            PowerSource => "power_source",
            Substation => "substation",
            TowerLineSegment => "tower_line_segment",
            WaterWell => "water_well",
            BoosterPump => "booster_pump",
            WaterTank => "water_tank",
            PipeSegment => "pipe_segment",
            Bridge => "bridge",
            Retailer => "retailer",
        }
    }
}

/// How a cell's access to food retailers turns into benefited persons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessCounting {
    /// The whole cell counts once any retailer it shops at is functional.
    #[default]
    Binary,
    /// The cell counts in proportion to the gravity share of functional retailers.
    Weighted,
}

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityConfig {
    #[serde(default = "default_gravity_exponent")]
    pub gravity_exponent: f64,
    #[serde(default)]
    pub access: AccessCounting,
    #[serde(default = "default_tower_spacing")]
    pub tower_spacing_m: f64,
    #[serde(default)]
    pub components: Vec<ComponentConfig>,
    #[serde(default)]
    pub lines: Vec<LineConfig>,
    #[serde(default)]
    pub retailers: Vec<RetailerConfig>,
    #[serde(default)]
    pub cells: Vec<CellConfig>,
}

fn default_gravity_exponent() -> f64 {
    DEFAULT_GRAVITY_EXPONENT
}

fn default_tower_spacing() -> f64 {
    DEFAULT_TOWER_SPACING_M
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub id: String,
    pub kind: ComponentKind,
    pub location: Point,
    #[serde(default)]
    pub requires: Vec<String>,
}

/// An overhead line between two components, expanded into a chain of
/// `tower_line_segment` components at regular spacing. The first segment is
/// fed by `from`; `to` gains the last segment as a requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetailerConfig {
    pub id: String,
    pub floor_area: f64,
    #[serde(default)]
    pub access_bridges: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub location: Point,
    pub population: u64,
    pub epn_node: String,
    pub wn_node: String,
}

// ---------------------------------------------------------------------------
// Validated model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub kind: ComponentKind,
    pub location: Point,
    pub requires: Vec<ComponentId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retailer {
    pub component: ComponentId,
    pub location: Point,
    pub floor_area: f64,
    pub access_bridges: Vec<ComponentId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationCell {
    pub name: Option<String>,
    pub location: Point,
    pub population: u64,
    pub epn_node: ComponentId,
    pub wn_node: ComponentId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellService {
    pub has_power: bool,
    pub has_water: bool,
    pub has_retailer_access: bool,
}

/// Result of propagating damage through the dependency graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalityMap {
    pub functional: Vec<bool>,
    pub cells: Vec<CellService>,
    /// Benefited persons; integral under [`AccessCounting::Binary`].
    pub benefited: f64,
}

impl FunctionalityMap {
    pub fn is_functional(&self, id: ComponentId) -> bool {
        self.functional[id.0]
    }

    pub fn nonfunctional(&self) -> ComponentSet {
        ComponentSet::from_ids(
            self.functional.len(),
            self.functional
                .iter()
                .enumerate()
                .filter(|(_, &f)| !f)
                .map(|(i, _)| ComponentId(i)),
        )
    }
}

/// An immutable, validated community.
#[derive(Debug, Clone, PartialEq)]
pub struct Community {
    components: Vec<Component>,
    index: HashMap<String, ComponentId>,
    topo_order: Vec<ComponentId>,
    retailers: Vec<Retailer>,
    retailer_of: Vec<Option<usize>>,
    cells: Vec<PopulationCell>,
    shopping: Vec<Vec<f64>>,
    counting: AccessCounting,
    total_population: u64,
}

impl Community {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, id: ComponentId) -> &Component {
        &self.components[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<ComponentId> {
        self.index.get(name).copied()
    }

    pub fn name_of(&self, id: ComponentId) -> &str {
        &self.components[id.0].name
    }

    pub fn ids(&self) -> impl Iterator<Item = ComponentId> {
        (0..self.components.len()).map(ComponentId)
    }

    pub fn retailers(&self) -> &[Retailer] {
        &self.retailers
    }

    pub fn cells(&self) -> &[PopulationCell] {
        &self.cells
    }

    /// Gravity shopping probabilities of each cell over [`Community::retailers`].
    pub fn shopping_probabilities(&self) -> &[Vec<f64>] {
        &self.shopping
    }

    pub fn counting(&self) -> AccessCounting {
        self.counting
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    pub fn empty_set(&self) -> ComponentSet {
        ComponentSet::empty(self.components.len())
    }

    pub fn count_kind(&self, kind: ComponentKind) -> usize {
        self.components.iter().filter(|c| c.kind == kind).count()
    }

    /// Fixed-point functionality of every component and cell given a damaged set.
    ///
    /// Components are visited in topological order of the `requires` graph, so
    /// a single pass reaches the fixed point.
    pub fn propagate(&self, damaged: &ComponentSet) -> FunctionalityMap {
        let mut functional = vec![false; self.components.len()];
        for &id in &self.topo_order {
            if damaged.contains(id) {
                continue;
            }
            let comp = &self.components[id.0];
            let served = if comp.kind.is_conduit() {
                let net = comp.kind.network();
                let mut fed = false;
                let mut cross_ok = true;
                for &r in &comp.requires {
                    if self.components[r.0].kind.network() == net {
                        fed |= functional[r.0];
                    } else {
                        cross_ok &= functional[r.0];
                    }
                }
                fed && cross_ok
            } else {
                comp.requires.iter().all(|r| functional[r.0])
            };
            let accessible = match self.retailer_of[id.0] {
                Some(k) => self.retailers[k].access_bridges.iter().all(|b| functional[b.0]),
                None => true,
            };
            functional[id.0] = served && accessible;
        }

        let mut cells = Vec::with_capacity(self.cells.len());
        let mut benefited = 0.0;
        for (cell, probs) in self.cells.iter().zip(&self.shopping) {
            let has_power = functional[cell.epn_node.0];
            let has_water = functional[cell.wn_node.0];
            let mut share = 0.0;
            let mut has_retailer_access = false;
            for (retailer, &p) in self.retailers.iter().zip(probs) {
                if p > 0.0 && functional[retailer.component.0] {
                    has_retailer_access = true;
                    share += p;
                }
            }
            if has_power && has_water && has_retailer_access {
                benefited += match self.counting {
                    AccessCounting::Binary => cell.population as f64,
                    AccessCounting::Weighted => cell.population as f64 * share.min(1.0),
                };
            }
            cells.push(CellService {
                has_power,
                has_water,
                has_retailer_access,
            });
        }

        FunctionalityMap {
            functional,
            cells,
            benefited,
        }
    }

    /// Benefited persons for a damaged set.
    pub fn benefited_population(&self, damaged: &ComponentSet) -> f64 {
        self.propagate(damaged).benefited
    }
}

/// Shopping probabilities of one origin over a list of retailers:
/// `p_j ∝ floor_area_j / max(d_j, 10 m)^exponent`.
pub fn gravity_probabilities(origin: Point, retailers: &[Retailer], exponent: f64) -> Result<Vec<f64>> {
    if retailers.is_empty() {
        return Err(Error::NoRetailers);
    }
    // log-space keeps far-away or tiny retailers from underflowing the sum
    let log_w: Vec<f64> = retailers
        .iter()
        .map(|r| {
            let d = origin.distance(&r.location).max(MIN_GRAVITY_DISTANCE_M);
            r.floor_area.ln() - exponent * d.ln()
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Validates a community description, collecting every issue found.
pub fn validate_community(config: &CommunityConfig) -> Result<Community> {
    let mut issues = Vec::new();

    if !(config.gravity_exponent.is_finite() && config.gravity_exponent >= 0.0) {
        issues.push(ConfigIssue::InvalidValue {
            owner: "community".into(),
            reason: format!(
                "gravity_exponent must be finite and >= 0, got {}",
                config.gravity_exponent
            ),
        });
    }
    if !(config.tower_spacing_m.is_finite() && config.tower_spacing_m > 0.0) {
        issues.push(ConfigIssue::InvalidValue {
            owner: "community".into(),
            reason: format!("tower_spacing_m must be positive, got {}", config.tower_spacing_m),
        });
    }

    // Raw component list: declared components followed by generated towers.
    let mut raw: Vec<(String, ComponentKind, Point, Vec<String>)> = config
        .components
        .iter()
        .map(|c| (c.id.clone(), c.kind, c.location, c.requires.clone()))
        .collect();

    let mut index: HashMap<String, ComponentId> = HashMap::new();
    for (i, (name, _, location, _)) in raw.iter().enumerate() {
        if index.insert(name.clone(), ComponentId(i)).is_some() {
            issues.push(ConfigIssue::DuplicateId(name.clone()));
        }
        if !location.is_finite() {
            issues.push(ConfigIssue::InvalidValue {
                owner: name.clone(),
                reason: "location must be finite".into(),
            });
        }
    }

    for line in &config.lines {
        let (Some(&from), Some(&to)) = (index.get(&line.from), index.get(&line.to)) else {
            for end in [&line.from, &line.to] {
                if !index.contains_key(end) {
                    issues.push(ConfigIssue::DanglingReference {
                        owner: line.id.clone(),
                        target: end.clone(),
                    });
                }
            }
            continue;
        };
        if raw[from.0].1.network() != Network::Power {
            issues.push(ConfigIssue::WrongKind {
                owner: line.id.clone(),
                target: line.from.clone(),
                expected: "a power network component",
            });
            continue;
        }
        let spacing = line.spacing_m.unwrap_or(config.tower_spacing_m);
        if !(spacing.is_finite() && spacing > 0.0) {
            issues.push(ConfigIssue::InvalidValue {
                owner: line.id.clone(),
                reason: format!("spacing_m must be positive, got {spacing}"),
            });
            continue;
        }
        let start = raw[from.0].2;
        let end = raw[to.0].2;
        let segments = ((start.distance(&end) / spacing).ceil() as usize).max(1);
        let mut upstream = line.from.clone();
        for k in 1..=segments {
            let name = format!("{}-{}", line.id, k);
            let location = start.lerp(&end, (k as f64 - 0.5) / segments as f64);
            let id = ComponentId(raw.len());
            if index.insert(name.clone(), id).is_some() {
                issues.push(ConfigIssue::DuplicateId(name.clone()));
            }
            raw.push((name.clone(), ComponentKind::TowerLineSegment, location, vec![upstream]));
            upstream = name;
        }
        raw[to.0].3.push(upstream);
    }

    if !issues.iter().all(|i| !matches!(i, ConfigIssue::DuplicateId(_))) {
        // ids are ambiguous; reference checks would only add noise
        return Err(Error::invalid(issues));
    }

    let resolve = |owner: &str, target: &str, issues: &mut Vec<ConfigIssue>| -> Option<ComponentId> {
        let found = index.get(target).copied();
        if found.is_none() {
            issues.push(ConfigIssue::DanglingReference {
                owner: owner.to_string(),
                target: target.to_string(),
            });
        }
        found
    };

    let mut components = Vec::with_capacity(raw.len());
    for (name, kind, location, requires) in &raw {
        let mut reqs = Vec::new();
        let mut seen = HashSet::new();
        for r in requires {
            if r == name {
                issues.push(ConfigIssue::SelfReference(name.clone()));
                continue;
            }
            if let Some(id) = resolve(name, r, &mut issues) {
                if seen.insert(id) {
                    reqs.push(id);
                }
            }
        }
        components.push(Component {
            name: name.clone(),
            kind: *kind,
            location: *location,
            requires: reqs,
        });
    }

    for comp in &components {
        if comp.kind.is_conduit()
            && !comp
                .requires
                .iter()
                .any(|r| components[r.0].kind.network() == comp.kind.network())
        {
            issues.push(ConfigIssue::Unfed(comp.name.clone()));
        }
    }

    // Retailers
    let mut retailer_of = vec![None; components.len()];
    let mut retailers = Vec::new();
    for rc in &config.retailers {
        let Some(id) = resolve(&rc.id, &rc.id, &mut issues) else {
            continue;
        };
        if components[id.0].kind != ComponentKind::Retailer {
            issues.push(ConfigIssue::NotARetailer(rc.id.clone()));
            continue;
        }
        if retailer_of[id.0].is_some() {
            issues.push(ConfigIssue::InvalidValue {
                owner: rc.id.clone(),
                reason: "retailer listed twice".into(),
            });
            continue;
        }
        if !(rc.floor_area.is_finite() && rc.floor_area > 0.0) {
            issues.push(ConfigIssue::InvalidValue {
                owner: rc.id.clone(),
                reason: format!("floor_area must be positive, got {}", rc.floor_area),
            });
        }
        let mut bridges = Vec::new();
        for b in &rc.access_bridges {
            if let Some(bid) = resolve(&rc.id, b, &mut issues) {
                if components[bid.0].kind != ComponentKind::Bridge {
                    issues.push(ConfigIssue::WrongKind {
                        owner: rc.id.clone(),
                        target: b.clone(),
                        expected: "a bridge",
                    });
                } else if !bridges.contains(&bid) {
                    bridges.push(bid);
                }
            }
        }
        retailer_of[id.0] = Some(retailers.len());
        retailers.push(Retailer {
            component: id,
            location: components[id.0].location,
            floor_area: rc.floor_area,
            access_bridges: bridges,
        });
    }
    for (i, comp) in components.iter().enumerate() {
        if comp.kind == ComponentKind::Retailer && retailer_of[i].is_none() {
            issues.push(ConfigIssue::MissingRetailerRecord(comp.name.clone()));
        }
    }
    if retailers.is_empty() {
        issues.push(ConfigIssue::InvalidValue {
            owner: "community".into(),
            reason: "at least one retailer is required".into(),
        });
    }

    // Cells
    let mut cells = Vec::new();
    for (k, cc) in config.cells.iter().enumerate() {
        let owner = cc.name.clone().unwrap_or_else(|| format!("cell[{k}]"));
        if !cc.location.is_finite() {
            issues.push(ConfigIssue::InvalidValue {
                owner: owner.clone(),
                reason: "location must be finite".into(),
            });
        }
        let epn = resolve(&owner, &cc.epn_node, &mut issues);
        let wn = resolve(&owner, &cc.wn_node, &mut issues);
        if let Some(e) = epn {
            if components[e.0].kind.network() != Network::Power {
                issues.push(ConfigIssue::WrongKind {
                    owner: owner.clone(),
                    target: cc.epn_node.clone(),
                    expected: "a power network component",
                });
            }
        }
        if let Some(w) = wn {
            if components[w.0].kind.network() != Network::Water {
                issues.push(ConfigIssue::WrongKind {
                    owner: owner.clone(),
                    target: cc.wn_node.clone(),
                    expected: "a water network component",
                });
            }
        }
        if let (Some(epn_node), Some(wn_node)) = (epn, wn) {
            cells.push(PopulationCell {
                name: cc.name.clone(),
                location: cc.location,
                population: cc.population,
                epn_node,
                wn_node,
            });
        }
    }

    let topo_order = match topological_order(&components, &retailers) {
        Ok(order) => order,
        Err(on_cycle) => {
            issues.push(ConfigIssue::DependencyCycle(components[on_cycle.0].name.clone()));
            Vec::new()
        }
    };

    if !issues.is_empty() {
        return Err(Error::invalid(issues));
    }

    let shopping = cells
        .iter()
        .map(|c| gravity_probabilities(c.location, &retailers, config.gravity_exponent))
        .collect::<Result<Vec<_>>>()?;
    let total_population = cells.iter().map(|c| c.population).sum();

    Ok(Community {
        components,
        index,
        topo_order,
        retailers,
        retailer_of,
        cells,
        shopping,
        counting: config.access,
        total_population,
    })
}

/// Kahn's algorithm over requirement and bridge-access edges. On failure,
/// returns a component lying on a cycle.
fn topological_order(components: &[Component], retailers: &[Retailer]) -> Result<Vec<ComponentId>, ComponentId> {
    let n = components.len();
    let mut upstream: Vec<Vec<usize>> = components
        .iter()
        .map(|c| c.requires.iter().map(|r| r.0).collect())
        .collect();
    for r in retailers {
        upstream[r.component.0].extend(r.access_bridges.iter().map(|b| b.0));
    }
    let mut downstream = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (i, ups) in upstream.iter().enumerate() {
        indegree[i] = ups.len();
        for &u in ups {
            downstream[u].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(ComponentId(i));
        for &d in &downstream[i] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.push(d);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Walk upstream inside the unresolved remainder until a node repeats.
    let mut visited = vec![false; n];
    let mut node = (0..n).find(|&i| indegree[i] > 0).expect("unresolved node");
    loop {
        if visited[node] {
            return Err(ComponentId(node));
        }
        visited[node] = true;
        node = *upstream[node]
            .iter()
            .find(|&&u| indegree[u] > 0)
            .expect("unresolved node has an unresolved predecessor");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(id: &str, kind: ComponentKind, x: f64, requires: &[&str]) -> ComponentConfig {
        ComponentConfig {
            id: id.into(),
            kind,
            location: Point::new(x, 0.0),
            requires: requires.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn cell(x: f64, population: u64, epn: &str, wn: &str) -> CellConfig {
        CellConfig {
            name: None,
            location: Point::new(x, 100.0),
            population,
            epn_node: epn.into(),
            wn_node: wn.into(),
        }
    }

    fn retailer(id: &str, area: f64, bridges: &[&str]) -> RetailerConfig {
        RetailerConfig {
            id: id.into(),
            floor_area: area,
            access_bridges: bridges.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn base_config() -> CommunityConfig {
        CommunityConfig {
            gravity_exponent: 2.0,
            access: AccessCounting::Binary,
            tower_spacing_m: 100.0,
            components: vec![],
            lines: vec![],
            retailers: vec![],
            cells: vec![],
        }
    }

    /// power source, well, retailer, one cell
    fn minimal() -> CommunityConfig {
        let mut cfg = base_config();
        cfg.components = vec![
            comp("src", ComponentKind::PowerSource, 0.0, &[]),
            comp("well", ComponentKind::WaterWell, 10.0, &["src"]),
            comp("shop", ComponentKind::Retailer, 20.0, &["src", "well"]),
        ];
        cfg.retailers = vec![retailer("shop", 1000.0, &[])];
        cfg.cells = vec![cell(0.0, 120, "src", "well")];
        cfg
    }

    fn issues(err: Error) -> Vec<ConfigIssue> {
        match err {
            Error::Invalid(list) => list.0,
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn minimal_config_is_valid() {
        let c = validate_community(&minimal()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.total_population(), 120);
        assert_eq!(c.benefited_population(&c.empty_set()), 120.0);
    }

    #[test]
    fn dangling_cell_reference() {
        let mut cfg = minimal();
        cfg.cells[0].epn_node = "nowhere".into();
        let found = issues(validate_community(&cfg).unwrap_err());
        assert!(found.contains(&ConfigIssue::DanglingReference {
            owner: "cell[0]".into(),
            target: "nowhere".into()
        }));
    }

    #[test]
    fn duplicate_and_self_reference() {
        let mut cfg = minimal();
        cfg.components.push(comp("well", ComponentKind::WaterWell, 5.0, &[]));
        let found = issues(validate_community(&cfg).unwrap_err());
        assert_eq!(found, vec![ConfigIssue::DuplicateId("well".into())]);

        let mut cfg = minimal();
        cfg.components[1].requires.push("well".into());
        let found = issues(validate_community(&cfg).unwrap_err());
        assert!(found.contains(&ConfigIssue::SelfReference("well".into())));
    }

    #[test]
    fn cycle_is_rejected_with_offending_id() {
        let mut cfg = minimal();
        cfg.components
            .push(comp("pump", ComponentKind::BoosterPump, 30.0, &["tank"]));
        cfg.components
            .push(comp("tank", ComponentKind::WaterTank, 40.0, &["pump"]));
        let found = issues(validate_community(&cfg).unwrap_err());
        assert_eq!(found.len(), 1);
        match &found[0] {
            ConfigIssue::DependencyCycle(id) => assert!(id == "pump" || id == "tank"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_every_issue() {
        let mut cfg = minimal();
        cfg.cells[0].epn_node = "a".into();
        cfg.cells[0].wn_node = "b".into();
        cfg.retailers[0].floor_area = 0.0;
        let found = issues(validate_community(&cfg).unwrap_err());
        assert_eq!(found.len(), 3);
    }

    #[test]
    fn wrong_kinds_are_rejected() {
        let mut cfg = minimal();
        cfg.cells[0].wn_node = "src".into();
        cfg.components
            .push(comp("pipe", ComponentKind::PipeSegment, 3.0, &["src"]));
        let found = issues(validate_community(&cfg).unwrap_err());
        assert!(found.iter().any(|i| matches!(i, ConfigIssue::WrongKind { .. })));
        assert!(found.contains(&ConfigIssue::Unfed("pipe".into())));
    }

    #[test]
    fn lines_generate_towers_at_spacing() {
        let mut cfg = minimal();
        cfg.components[2].location = Point::new(350.0, 0.0);
        cfg.lines.push(LineConfig {
            id: "L".into(),
            from: "src".into(),
            to: "shop".into(),
            spacing_m: None,
        });
        let c = validate_community(&cfg).unwrap();
        assert_eq!(c.count_kind(ComponentKind::TowerLineSegment), 4);
        let last = c.id_of("L-4").unwrap();
        let shop = c.id_of("shop").unwrap();
        assert!(c.component(shop).requires.contains(&last));
        assert!((c.component(c.id_of("L-1").unwrap()).location.x - 43.75).abs() < 1e-9);

        // cutting the middle of the line starves the retailer
        let damaged = ComponentSet::from_ids(c.len(), [c.id_of("L-2").unwrap()]);
        let map = c.propagate(&damaged);
        assert!(!map.is_functional(shop));
        assert!(map.is_functional(c.id_of("L-1").unwrap()));
        assert_eq!(map.benefited, 0.0);
    }

    #[test]
    fn chain_with_damaged_tower() {
        // source -> substation -> tower -> retailer, well fed by substation
        let mut cfg = base_config();
        cfg.components = vec![
            comp("src", ComponentKind::PowerSource, 0.0, &[]),
            comp("sub", ComponentKind::Substation, 10.0, &["src"]),
            comp("tower", ComponentKind::TowerLineSegment, 20.0, &["sub"]),
            comp("well", ComponentKind::WaterWell, 30.0, &["sub"]),
            comp("shop", ComponentKind::Retailer, 40.0, &["tower", "well"]),
        ];
        cfg.retailers = vec![retailer("shop", 500.0, &[])];
        cfg.cells = vec![cell(0.0, 10, "sub", "well")];
        let c = validate_community(&cfg).unwrap();
        let tower = c.id_of("tower").unwrap();
        let map = c.propagate(&ComponentSet::from_ids(c.len(), [tower]));
        // hand walk: src, sub, well ok; tower damaged; shop lacks power
        assert_eq!(map.functional, vec![true, true, false, true, false]);
        assert_eq!(
            map.cells[0],
            CellService {
                has_power: true,
                has_water: true,
                has_retailer_access: false
            }
        );
        assert_eq!(map.benefited, 0.0);
    }

    #[test]
    fn sole_source_damaged_blacks_out() {
        let c = validate_community(&minimal()).unwrap();
        let src = c.id_of("src").unwrap();
        let map = c.propagate(&ComponentSet::from_ids(c.len(), [src]));
        assert!(map.functional.iter().all(|f| !f));
        assert_eq!(map.benefited, 0.0);
    }

    #[test]
    fn conduit_redundancy_and_tank_dependency() {
        let mut cfg = base_config();
        cfg.components = vec![
            comp("src", ComponentKind::PowerSource, 0.0, &[]),
            comp("well", ComponentKind::WaterWell, 10.0, &["src"]),
            comp("pump", ComponentKind::BoosterPump, 20.0, &["src"]),
            comp("tank", ComponentKind::WaterTank, 30.0, &["pump"]),
            comp("p1", ComponentKind::PipeSegment, 40.0, &["well", "tank"]),
            comp("shop", ComponentKind::Retailer, 50.0, &["src", "p1"]),
        ];
        cfg.retailers = vec![retailer("shop", 500.0, &[])];
        cfg.cells = vec![cell(0.0, 10, "src", "p1")];
        let c = validate_community(&cfg).unwrap();
        let id = |n: &str| c.id_of(n).unwrap();
        let set = |names: &[&str]| ComponentSet::from_ids(c.len(), names.iter().map(|n| id(n)));
        // either source keeps the pipe wet
        assert_eq!(c.benefited_population(&set(&["well"])), 10.0);
        assert_eq!(c.benefited_population(&set(&["pump"])), 10.0);
        let map = c.propagate(&set(&["pump"]));
        assert!(!map.is_functional(id("tank")));
        assert_eq!(c.benefited_population(&set(&["well", "pump"])), 0.0);
    }

    #[test]
    fn bridges_gate_retailer_access() {
        let mut cfg = minimal();
        cfg.components.push(comp("br", ComponentKind::Bridge, 15.0, &[]));
        cfg.retailers[0].access_bridges = vec!["br".into()];
        let c = validate_community(&cfg).unwrap();
        let br = c.id_of("br").unwrap();
        let map = c.propagate(&ComponentSet::from_ids(c.len(), [br]));
        assert!(!map.is_functional(c.id_of("shop").unwrap()));
        assert!(!map.cells[0].has_retailer_access);
        assert_eq!(map.benefited, 0.0);
    }

    #[test]
    fn three_cells_one_water_node_cut() {
        let mut cfg = base_config();
        cfg.components = vec![
            comp("src", ComponentKind::PowerSource, 0.0, &[]),
            comp("well", ComponentKind::WaterWell, 10.0, &["src"]),
            comp("pa", ComponentKind::PipeSegment, 20.0, &["well"]),
            comp("pb", ComponentKind::PipeSegment, 30.0, &["well"]),
            comp("shop", ComponentKind::Retailer, 40.0, &["src", "well"]),
        ];
        cfg.retailers = vec![retailer("shop", 500.0, &[])];
        cfg.cells = vec![
            cell(0.0, 100, "src", "pa"),
            cell(10.0, 250, "src", "pb"),
            cell(20.0, 40, "src", "well"),
        ];
        let c = validate_community(&cfg).unwrap();
        let pb = c.id_of("pb").unwrap();
        assert_eq!(c.benefited_population(&c.empty_set()), 390.0);
        assert_eq!(c.benefited_population(&ComponentSet::from_ids(c.len(), [pb])), 140.0);
    }

    #[test]
    fn gravity_examples() {
        let r = |x: f64, y: f64, area: f64| Retailer {
            component: ComponentId(0),
            location: Point::new(x, y),
            floor_area: area,
            access_bridges: vec![],
        };
        let origin = Point::new(0.0, 0.0);
        assert_eq!(
            gravity_probabilities(origin, &[r(500.0, 0.0, 10.0)], 2.0).unwrap(),
            vec![1.0]
        );
        let p = gravity_probabilities(origin, &[r(300.0, 0.0, 1000.0), r(0.0, 300.0, 1000.0)], 2.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        // 2000/d² : 1000/d² → 2/3 : 1/3
        let p = gravity_probabilities(origin, &[r(300.0, 0.0, 2000.0), r(0.0, -300.0, 1000.0)], 2.0).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            gravity_probabilities(origin, &[], 2.0),
            Err(Error::NoRetailers)
        ));
    }

    #[test]
    fn gravity_distance_floor() {
        let r = |x: f64| Retailer {
            component: ComponentId(0),
            location: Point::new(x, 0.0),
            floor_area: 1.0,
            access_bridges: vec![],
        };
        // coincident and 10 m away are both floored to 10 m
        let p = gravity_probabilities(Point::new(0.0, 0.0), &[r(0.0), r(10.0)], 2.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn weighted_counting_uses_gravity_share() {
        let mut cfg = minimal();
        cfg.access = AccessCounting::Weighted;
        cfg.components
            .push(comp("shop2", ComponentKind::Retailer, -20.0, &["src", "well"]));
        cfg.retailers.push(retailer("shop2", 1000.0, &[]));
        cfg.cells[0].location = Point::new(0.0, 0.0);
        let c = validate_community(&cfg).unwrap();
        assert_eq!(c.benefited_population(&c.empty_set()), 120.0);
        let shop2 = c.id_of("shop2").unwrap();
        let b = c.benefited_population(&ComponentSet::from_ids(c.len(), [shop2]));
        assert!((b - 60.0).abs() < 1e-9);
    }
}
