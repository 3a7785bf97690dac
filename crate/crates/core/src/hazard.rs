//! Scenario-earthquake sampling: site intensity, damage state, repair duration.
//!
//! Intensity is peak ground acceleration in g from a three-coefficient
//! attenuation law with a lognormal residual,
//! `ln IM = c0 + c1·M − c2·ln(R_km + 1) + ε`, `ε ~ N(0, σ_ln)`.
//! Residuals are independent per component.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::erf::erfc;

use crate::community::{Community, ComponentKind, Point};
use crate::error::{ConfigIssue, Error, Result};
use crate::ids::{ComponentId, ComponentSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamageState {
    None,
    Slight,
    Moderate,
    Extensive,
    Complete,
}

impl DamageState {
    pub const LADDER: [DamageState; 4] = [
        DamageState::Slight,
        DamageState::Moderate,
        DamageState::Extensive,
        DamageState::Complete,
    ];

    pub fn from_level(level: usize) -> DamageState {
        match level {
            0 => DamageState::None,
            1 => DamageState::Slight,
            2 => DamageState::Moderate,
            3 => DamageState::Extensive,
            _ => DamageState::Complete,
        }
    }

    /// 0 for `None` up to 4 for `Complete`.
    pub fn level(self) -> usize {
        self as usize
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }
}

// ---------------------------------------------------------------------------
// Intensity
// ---------------------------------------------------------------------------

/// Source of site ground-motion intensity. Implement this to plug in a
/// different ground-motion model.
pub trait IntensityModel: Sync {
    /// Median of ln(intensity in g) at `site`.
    fn ln_median(&self, site: Point) -> f64;

    /// Standard deviation of the lognormal residual.
    fn sigma_ln(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attenuation {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for Attenuation {
    fn default() -> Self {
        Attenuation {
            c0: -2.0,
            c1: 0.5,
            c2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeismicScenario {
    pub magnitude: f64,
    pub epicenter: Point,
    pub attenuation: Attenuation,
    pub sigma_ln: f64,
}

impl SeismicScenario {
    pub fn new(magnitude: f64, epicenter: Point, attenuation: Attenuation, sigma_ln: f64) -> Result<Self> {
        let mut issues = Vec::new();
        if !(magnitude > 0.0 && magnitude <= 10.0) {
            issues.push(ConfigIssue::InvalidValue {
                owner: "hazard".into(),
                reason: format!("magnitude must lie in (0, 10], got {magnitude}"),
            });
        }
        if !(sigma_ln >= 0.0 && sigma_ln.is_finite()) {
            issues.push(ConfigIssue::InvalidValue {
                owner: "hazard".into(),
                reason: format!("sigma_ln must be finite and >= 0, got {sigma_ln}"),
            });
        }
        if attenuation.c0.is_nan() || !attenuation.c1.is_finite() || !attenuation.c2.is_finite() {
            issues.push(ConfigIssue::InvalidValue {
                owner: "hazard.attenuation".into(),
                reason: "coefficients must be numbers (c0 may be -inf)".into(),
            });
        }
        if !issues.is_empty() {
            return Err(Error::invalid(issues));
        }
        Ok(SeismicScenario {
            magnitude,
            epicenter,
            attenuation,
            sigma_ln,
        })
    }
}

impl IntensityModel for SeismicScenario {
    fn ln_median(&self, site: Point) -> f64 {
        let r_km = site.distance(&self.epicenter) / 1000.0;
        let a = &self.attenuation;
        a.c0 + a.c1 * self.magnitude - a.c2 * (r_km + 1.0).ln()
    }

    fn sigma_ln(&self) -> f64 {
        self.sigma_ln
    }
}

/// Samples site intensity in g. One normal variate is always consumed so
/// the stream position does not depend on `sigma_ln`.
pub fn compute_intensity<M, R>(model: &M, site: Point, rng: &mut R) -> f64
where
    M: IntensityModel + ?Sized,
    R: Rng + ?Sized,
{
    let z: f64 = rng.sample(StandardNormal);
    (model.ln_median(site) + model.sigma_ln() * z).exp()
}

// ---------------------------------------------------------------------------
// Fragility
// ---------------------------------------------------------------------------

/// Lognormal fragility curves for the four damage states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragilityCurve {
    /// Median intensity (g) for slight, moderate, extensive, complete.
    pub medians: [f64; 4],
    /// Lognormal dispersion per state.
    pub betas: [f64; 4],
}

impl FragilityCurve {
    pub fn new(medians: [f64; 4], betas: [f64; 4]) -> Result<Self> {
        let curve = FragilityCurve { medians, betas };
        let issues = curve.issues("fragility");
        if issues.is_empty() {
            Ok(curve)
        } else {
            Err(Error::invalid(issues))
        }
    }

    fn issues(&self, owner: &str) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        if !self.medians.iter().all(|m| m.is_finite() && *m > 0.0) || !self.medians.windows(2).all(|w| w[0] < w[1]) {
            issues.push(ConfigIssue::InvalidValue {
                owner: owner.to_string(),
                reason: format!(
                    "medians must be positive and strictly increasing, got {:?}",
                    self.medians
                ),
            });
        }
        if !self.betas.iter().all(|b| b.is_finite() && *b > 0.0) {
            issues.push(ConfigIssue::InvalidValue {
                owner: owner.to_string(),
                reason: format!("dispersions must be positive, got {:?}", self.betas),
            });
        }
        issues
    }

    /// `P(DS >= ds)` for slight..complete. Curves with unequal dispersions can
    /// cross; the ladder is clamped to be nonincreasing so state probabilities
    /// stay nonnegative.
    pub fn exceedance(&self, intensity: f64) -> [f64; 4] {
        let mut ladder = [0.0; 4];
        let mut cap = 1.0f64;
        for ((rung, median), beta) in ladder.iter_mut().zip(self.medians).zip(self.betas) {
            let p = std_normal_cdf((intensity / median).ln() / beta).min(cap);
            *rung = p;
            cap = p;
        }
        ladder
    }

    /// Probability of each state, `None` first.
    pub fn state_probabilities(&self, intensity: f64) -> [f64; 5] {
        let e = self.exceedance(intensity);
        [1.0 - e[0], e[0] - e[1], e[1] - e[2], e[2] - e[3], e[3]]
    }

    /// Inverts the exceedance ladder with one uniform variate in [0, 1).
    pub fn state_for_uniform(&self, intensity: f64, u: f64) -> DamageState {
        let e = self.exceedance(intensity);
        DamageState::from_level(e.iter().take_while(|&&p| u < p).count())
    }
}

pub fn sample_damage_state<R: Rng + ?Sized>(intensity: f64, fragility: &FragilityCurve, rng: &mut R) -> DamageState {
    let u: f64 = rng.random();
    fragility.state_for_uniform(intensity, u)
}

// ---------------------------------------------------------------------------
// Restoration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestorationEntry {
    /// Median repair duration in days for slight..complete.
    pub days: [f64; 4],
    /// Lognormal dispersion of the sampled duration; 0 means deterministic.
    #[serde(default)]
    pub dispersion: f64,
}

impl RestorationEntry {
    fn issues(&self, owner: &str) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        if !self.days.iter().all(|d| d.is_finite() && *d > 0.0) || !self.days.windows(2).all(|w| w[0] <= w[1]) {
            issues.push(ConfigIssue::InvalidValue {
                owner: owner.to_string(),
                reason: format!("durations must be positive and nondecreasing, got {:?}", self.days),
            });
        }
        if !(self.dispersion.is_finite() && self.dispersion >= 0.0) {
            issues.push(ConfigIssue::InvalidValue {
                owner: owner.to_string(),
                reason: format!("dispersion must be >= 0, got {}", self.dispersion),
            });
        }
        issues
    }

    pub fn median(&self, state: DamageState) -> f64 {
        match state {
            DamageState::None => 0.0,
            s => self.days[s.level() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestorationModel {
    pub entries: BTreeMap<ComponentKind, RestorationEntry>,
    /// When false, every repair takes its median duration.
    pub stochastic: bool,
}

impl RestorationModel {
    /// Repair duration in days; consumes one normal variate unconditionally.
    pub fn sample_duration<R: Rng + ?Sized>(
        &self,
        kind: ComponentKind,
        state: DamageState,
        rng: &mut R,
    ) -> Result<f64> {
        let entry = self.entries.get(&kind).ok_or_else(|| {
            Error::invalid(vec![ConfigIssue::MissingBinding {
                kind: kind.as_str().into(),
                table: "restoration",
            }])
        })?;
        let z: f64 = rng.sample(StandardNormal);
        let median = entry.median(state);
        if state == DamageState::None || !self.stochastic || entry.dispersion == 0.0 {
            Ok(median)
        } else {
            Ok(median * (entry.dispersion * z).exp())
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardConfig {
    pub magnitude: f64,
    pub epicenter: Point,
    #[serde(default)]
    pub attenuation: Attenuation,
    #[serde(default = "default_sigma_ln")]
    pub sigma_ln: f64,
    #[serde(default = "default_true")]
    pub stochastic_restoration: bool,
    #[serde(default = "default_fragility")]
    pub fragility: BTreeMap<ComponentKind, FragilityCurve>,
    #[serde(default = "default_restoration")]
    pub restoration: BTreeMap<ComponentKind, RestorationEntry>,
}

fn default_sigma_ln() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

/// HAZUS-order-of-magnitude fragility defaults (PGA, g).
pub fn default_fragility() -> BTreeMap<ComponentKind, FragilityCurve> {
    use ComponentKind::*;
    let table: [(ComponentKind, [f64; 4], [f64; 4]); 9] = [
        (PowerSource, [0.15, 0.29, 0.45, 0.90], [0.70, 0.55, 0.45, 0.45]),
        (Substation, [0.13, 0.26, 0.34, 0.74], [0.65, 0.50, 0.40, 0.40]),
        (TowerLineSegment, [0.28, 0.40, 0.72, 1.10], [0.30, 0.20, 0.15, 0.15]),
        (WaterWell, [0.25, 0.52, 0.72, 1.10], [0.60, 0.60, 0.60, 0.60]),
        (BoosterPump, [0.15, 0.36, 0.66, 1.50], [0.70, 0.65, 0.65, 0.80]),
        (WaterTank, [0.18, 0.73, 1.26, 1.60], [0.60, 0.60, 0.60, 0.60]),
        (PipeSegment, [0.30, 0.60, 0.90, 1.30], [0.60, 0.60, 0.60, 0.60]),
        (Bridge, [0.60, 0.90, 1.10, 1.50], [0.60, 0.60, 0.60, 0.60]),
        (Retailer, [0.30, 0.60, 1.00, 1.60], [0.60, 0.60, 0.60, 0.60]),
    ];
    table
        .into_iter()
        .map(|(k, medians, betas)| (k, FragilityCurve { medians, betas }))
        .collect()
}

/// Median repair days per damage state.
pub fn default_restoration() -> BTreeMap<ComponentKind, RestorationEntry> {
    use ComponentKind::*;
    let table: [(ComponentKind, [f64; 4]); 9] = [
        (PowerSource, [1.0, 3.0, 7.0, 30.0]),
        (Substation, [1.0, 3.0, 7.0, 30.0]),
        (TowerLineSegment, [1.0, 2.0, 5.0, 10.0]),
        (WaterWell, [1.0, 3.0, 14.0, 30.0]),
        (BoosterPump, [1.0, 3.0, 14.0, 30.0]),
        (WaterTank, [1.0, 5.0, 21.0, 60.0]),
        (PipeSegment, [1.0, 3.0, 7.0, 14.0]),
        (Bridge, [2.0, 10.0, 60.0, 150.0]),
        (Retailer, [1.0, 5.0, 30.0, 60.0]),
    ];
    table
        .into_iter()
        .map(|(k, days)| (k, RestorationEntry { days, dispersion: 0.4 }))
        .collect()
}

/// Validated hazard tables plus the scenario earthquake.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardModel {
    pub scenario: SeismicScenario,
    pub fragility: BTreeMap<ComponentKind, FragilityCurve>,
    pub restoration: RestorationModel,
}

impl HazardModel {
    pub fn from_config(config: &HazardConfig) -> Result<Self> {
        let mut issues = Vec::new();
        let scenario =
            match SeismicScenario::new(config.magnitude, config.epicenter, config.attenuation, config.sigma_ln) {
                Ok(s) => Some(s),
                Err(Error::Invalid(list)) => {
                    issues.extend(list.0);
                    None
                }
                Err(e) => return Err(e),
            };
        for (kind, curve) in &config.fragility {
            issues.extend(curve.issues(&format!("hazard.fragility.{}", kind.as_str())));
        }
        for (kind, entry) in &config.restoration {
            issues.extend(entry.issues(&format!("hazard.restoration.{}", kind.as_str())));
        }
        match scenario {
            Some(scenario) if issues.is_empty() => Ok(HazardModel {
                scenario,
                fragility: config.fragility.clone(),
                restoration: RestorationModel {
                    entries: config.restoration.clone(),
                    stochastic: config.stochastic_restoration,
                },
            }),
            _ => Err(Error::invalid(issues)),
        }
    }

    /// Every component kind present in `community` must have both tables.
    pub fn check_bindings(&self, community: &Community) -> Result<()> {
        let mut issues = Vec::new();
        for kind in ComponentKind::ALL {
            if community.count_kind(kind) == 0 {
                continue;
            }
            if !self.fragility.contains_key(&kind) {
                issues.push(ConfigIssue::MissingBinding {
                    kind: kind.as_str().into(),
                    table: "fragility",
                });
            }
            if !self.restoration.entries.contains_key(&kind) {
                issues.push(ConfigIssue::MissingBinding {
                    kind: kind.as_str().into(),
                    table: "restoration",
                });
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(issues))
        }
    }
}

// ---------------------------------------------------------------------------
// Damage scenarios
// ---------------------------------------------------------------------------

/// One sampled realization of post-earthquake damage.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageScenario {
    states: Vec<DamageState>,
    durations: Vec<f64>,
    intensities: Vec<f64>,
    seed: u64,
}

impl DamageScenario {
    /// Builds a scenario from explicit per-component states and durations.
    /// Durations of undamaged components are forced to zero; damaged
    /// components must have a positive finite duration.
    pub fn from_parts(states: Vec<DamageState>, durations: Vec<f64>, seed: u64) -> Result<Self> {
        if states.len() != durations.len() {
            return Err(Error::invalid(vec![ConfigIssue::InvalidValue {
                owner: "scenario".into(),
                reason: "states and durations differ in length".into(),
            }]));
        }
        let mut durations = durations;
        for (i, (s, d)) in states.iter().zip(durations.iter_mut()).enumerate() {
            if *s == DamageState::None {
                *d = 0.0;
            } else if !(d.is_finite() && *d > 0.0) {
                return Err(Error::invalid(vec![ConfigIssue::InvalidValue {
                    owner: format!("scenario component {i}"),
                    reason: format!("repair duration must be positive, got {d}"),
                }]));
            }
        }
        let n = states.len();
        Ok(DamageScenario {
            states,
            durations,
            intensities: vec![f64::NAN; n],
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: ComponentId) -> DamageState {
        self.states[id.0]
    }

    pub fn states(&self) -> &[DamageState] {
        &self.states
    }

    /// Sampled repair duration in days; zero for undamaged components.
    pub fn duration(&self, id: ComponentId) -> f64 {
        self.durations[id.0]
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    /// Site intensities in g (NaN when the scenario was built by hand).
    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// D_0: components with any damage.
    pub fn damaged_set(&self) -> ComponentSet {
        ComponentSet::from_ids(
            self.states.len(),
            self.states
                .iter()
                .enumerate()
                .filter(|(_, s)| **s != DamageState::None)
                .map(|(i, _)| ComponentId(i)),
        )
    }

    /// SHA-256 over damage states and duration bits, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (s, d) in self.states.iter().zip(&self.durations) {
            hasher.update([s.level() as u8]);
            hasher.update(d.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// Samples intensity, damage state and repair duration for every component,
/// in component order, from a ChaCha stream seeded with `seed`.
pub fn sample_scenario(community: &Community, hazard: &HazardModel, seed: u64) -> Result<DamageScenario> {
    hazard.check_bindings(community)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = community.len();
    let mut states = Vec::with_capacity(n);
    let mut durations = Vec::with_capacity(n);
    let mut intensities = Vec::with_capacity(n);
    for comp in community.components() {
        let im = compute_intensity(&hazard.scenario, comp.location, &mut rng);
        let state = sample_damage_state(im, &hazard.fragility[&comp.kind], &mut rng);
        let days = hazard.restoration.sample_duration(comp.kind, state, &mut rng)?;
        intensities.push(im);
        states.push(state);
        durations.push(days);
    }
    Ok(DamageScenario {
        states,
        durations,
        intensities,
        seed,
    })
}
