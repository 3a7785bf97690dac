//! Configuration files and result serialization.
//!
//! A configuration is one TOML document with `[community]`, `[hazard]` and an
//! optional `[experiment]` section; see `configs/` for annotated examples.
//! Results are written as CSV (numbers with 17 significant digits, `\n`
//! line endings) plus a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{validate_community, Community, CommunityConfig};
use crate::error::{ConfigIssue, Error, Result};
use crate::experiment::{ExperimentConfig, ExperimentResult, PolicySummary};
use crate::hazard::{HazardConfig, HazardModel};

/// The bundled desk-scale community.
pub const GILROY_SMALL: &str = include_str!("../../../configs/gilroy_small.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub community: CommunityConfig,
    pub hazard: HazardConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

impl ConfigFile {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            path: "<serialize>".into(),
            message: e.to_string(),
        })
    }

    /// SHA-256 of the canonical JSON form; formatting and comments in the
    /// source file do not affect it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// A parsed and fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub config: ConfigFile,
    pub community: Community,
    pub hazard: HazardModel,
}

impl Bundle {
    pub fn from_config(config: ConfigFile) -> Result<Self> {
        let mut issues: Vec<ConfigIssue> = Vec::new();
        let absorb = |e: Error, issues: &mut Vec<ConfigIssue>| match e {
            Error::Invalid(list) => {
                issues.extend(list.0);
                Ok(())
            }
            other => Err(other),
        };
        let community = match validate_community(&config.community) {
            Ok(c) => Some(c),
            Err(e) => {
                absorb(e, &mut issues)?;
                None
            }
        };
        let hazard = match HazardModel::from_config(&config.hazard) {
            Ok(h) => Some(h),
            Err(e) => {
                absorb(e, &mut issues)?;
                None
            }
        };
        if let (Some(c), Some(h)) = (&community, &hazard) {
            if let Err(e) = h.check_bindings(c) {
                absorb(e, &mut issues)?;
            }
        }
        issues.extend(config.experiment.issues());
        match (community, hazard) {
            (Some(community), Some(hazard)) if issues.is_empty() => Ok(Bundle {
                config,
                community,
                hazard,
            }),
            _ => Err(Error::invalid(issues)),
        }
    }

    /// Re-validates after the experiment section was edited (e.g. CLI overrides).
    pub fn with_experiment(mut self, experiment: ExperimentConfig) -> Result<Self> {
        experiment.validate()?;
        self.config.experiment = experiment;
        Ok(self)
    }
}

/// Parses and validates a configuration document. `origin` names the source
/// in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<Bundle> {
    let config: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    Bundle::from_config(config)
}

pub fn load_config(path: &Path) -> Result<Bundle> {
    let text = fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub replicates: usize,
    pub crews: usize,
    pub population: u64,
    pub policies: Vec<PolicySummary>,
    /// Per-replicate damage-scenario fingerprints, shared by all policies.
    pub scenario_fingerprints: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(config: &ConfigFile, result: &ExperimentResult, wall_clock_seconds: f64) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            master_seed: config.experiment.seed,
            replicates: result.replicates.len(),
            crews: config.experiment.crews,
            population: result.population,
            policies: result.summaries(),
            scenario_fingerprints: result
                .replicates
                .iter()
                .map(|r| r.scenario_fingerprint.clone())
                .collect(),
            wall_clock_seconds,
        }
    }
}

/// 17 significant digits, scientific notation, locale independent.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes `curves.csv`, `rewards.csv`, `histogram.csv` and `manifest.json`
/// into `out_dir`, creating it if needed. Returns the written paths.
pub fn write_results(result: &ExperimentResult, manifest: &RunManifest, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if result.replicates.is_empty() {
        return Err(Error::EmptyExperiment);
    }
    fs::create_dir_all(out_dir)?;
    let curves = &result.curves;
    let histogram = &result.histogram;

    // curves.csv: time, then mean/lower/upper per policy, then every replicate
    let curves_path = out_dir.join("curves.csv");
    let mut w = csv_writer(&curves_path)?;
    let mut header = vec!["time_days".to_string()];
    for p in &curves.policies {
        for stat in ["mean", "lower", "upper"] {
            header.push(format!("{p}_{stat}"));
        }
    }
    for p in &curves.policies {
        for r in &result.replicates {
            header.push(format!("{p}_rep{}", r.replicate));
        }
    }
    w.write_record(&header).map_err(csv_error)?;
    for (g, &t) in curves.grid.iter().enumerate() {
        let mut row = vec![format_number(t)];
        for k in 0..curves.policies.len() {
            row.push(format_number(curves.mean[k][g]));
            row.push(format_number(curves.lower[k][g]));
            row.push(format_number(curves.upper[k][g]));
        }
        for per_rep in &curves.replicates {
            for curve in per_rep {
                row.push(format_number(curve[g]));
            }
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;

    let rewards_path = out_dir.join("rewards.csv");
    let mut w = csv_writer(&rewards_path)?;
    w.write_record(["replicate", "policy", "F"]).map_err(csv_error)?;
    for (i, r) in result.replicates.iter().enumerate() {
        for (k, p) in histogram.policies.iter().enumerate() {
            w.write_record([
                r.replicate.to_string(),
                p.to_string(),
                format_number(histogram.values[k][i]),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;

    let hist_path = out_dir.join("histogram.csv");
    let mut w = csv_writer(&hist_path)?;
    let mut header = vec!["bin_lower".to_string(), "bin_upper".to_string()];
    header.extend(histogram.policies.iter().map(|p| p.to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for b in 0..histogram.edges.len() - 1 {
        let mut row = vec![format_number(histogram.edges[b]), format_number(histogram.edges[b + 1])];
        row.extend(histogram.counts.iter().map(|c| c[b].to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;

    let manifest_path = out_dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    json.push('\n');
    fs::write(&manifest_path, json)?;

    Ok(vec![curves_path, rewards_path, hist_path, manifest_path])
}
