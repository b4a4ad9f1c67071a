//! Config-file schema and the on-disk formats of every run artifact.
//!
//! One TOML file describes one experiment: the level distribution, the
//! estimator parameters, and per-command sections. Variant names in the
//! file match the library types exactly (`PointMass`, `ProductForm`,
//! `DiscreteMixture`, `UniformSimplex`, `UniformInterval`, `DiscreteSet`).
//!
//! Data files carry a versioned comment header: `# morandim-csv v1 <kind>`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimfn::DimensionFunction;
use crate::estimators::{EstimatorRegime, Window};
use crate::experiments::{EstimatorParams, ExperimentConfig, SummaryTable};
use crate::moran::PlacementPolicy;
use crate::randomness::{DistributionSpec, SpecError, TheoryReport};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("invalid spec: {0}")]
    Spec(#[from] SpecError),
    #[error("config is missing the [{0}] section required by this command")]
    MissingSection(&'static str),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot parse data file {path}: {reason}")]
    BadData { path: PathBuf, reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateSection {
    pub regime: EstimatorRegime,
    #[serde(default)]
    pub phi: Option<DimensionFunction>,
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default)]
    pub k_cap: Option<usize>,
    #[serde(default)]
    pub env_length: Option<usize>,
    #[serde(default)]
    pub prefix_len: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub replicates: usize,
    pub base_seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSection {
    pub seed: u64,
    pub depth: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuildSection {
    pub seed: u64,
    pub depth: usize,
    pub policy: PlacementPolicy,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifySection {
    pub seed: u64,
    #[serde(default = "default_sandwich_envs")]
    pub sandwich_envs: usize,
    #[serde(default = "default_sandwich_queries")]
    pub sandwich_queries_per_env: usize,
    #[serde(default = "default_sandwich_depth")]
    pub sandwich_depth: usize,
    #[serde(default = "default_identity_order")]
    pub identity_order_max: usize,
    #[serde(default = "default_cdf_samples")]
    pub cdf_samples: usize,
    #[serde(default = "default_cdf_t")]
    pub cdf_t_values: Vec<usize>,
    /// Multiplier applied to tau in the separation gap check. Values above
    /// 1 are the negative control: the check must then fail.
    #[serde(default = "default_one")]
    pub check_tau_inflation: f64,
}

fn default_sandwich_envs() -> usize {
    6
}
fn default_sandwich_queries() -> usize {
    40
}
fn default_sandwich_depth() -> usize {
    9
}
fn default_identity_order() -> usize {
    20
}
fn default_cdf_samples() -> usize {
    200_000
}
fn default_cdf_t() -> Vec<usize> {
    vec![2, 3, 4, 5]
}
fn default_one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McCheckSection {
    pub seed: u64,
    #[serde(default = "default_mc_t")]
    pub t_values: Vec<usize>,
    #[serde(default = "default_mc_samples")]
    pub samples: usize,
    #[serde(default = "default_se_multiplier")]
    pub se_multiplier: f64,
}

fn default_mc_t() -> Vec<usize> {
    vec![2, 3, 4, 5, 6]
}
fn default_mc_samples() -> usize {
    1_000_000
}
fn default_se_multiplier() -> f64 {
    4.0
}

/// A full experiment description; each command reads the sections it needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub label: String,
    pub spec: DistributionSpec,
    #[serde(default)]
    pub estimate: Option<EstimateSection>,
    #[serde(default)]
    pub experiment: Option<ExperimentSection>,
    #[serde(default)]
    pub sample: Option<SampleSection>,
    #[serde(default)]
    pub build: Option<BuildSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub mc_check: Option<McCheckSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.into(), source: Box::new(source) })?;
        Ok(config)
    }

    /// Estimator parameters assembled from the estimate section.
    pub fn estimator_params(&self) -> Result<EstimatorParams, ConfigError> {
        let section = self.estimate.as_ref().ok_or(ConfigError::MissingSection("estimate"))?;
        Ok(match section.regime {
            EstimatorRegime::Large => EstimatorParams::Large {
                phi: section
                    .phi
                    .clone()
                    .ok_or(ConfigError::MissingSection("estimate.phi"))?,
                window: section.window.ok_or(ConfigError::MissingSection("estimate.window"))?,
                k_cap: section.k_cap.ok_or(ConfigError::MissingSection("estimate.k_cap"))?,
                env_length: section
                    .env_length
                    .ok_or(ConfigError::MissingSection("estimate.env_length"))?,
            },
            EstimatorRegime::Small => EstimatorParams::Small {
                prefix_len: section
                    .prefix_len
                    .ok_or(ConfigError::MissingSection("estimate.prefix_len"))?,
            },
        })
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let section =
            self.experiment.as_ref().ok_or(ConfigError::MissingSection("experiment"))?;
        Ok(ExperimentConfig {
            label: self.label.clone(),
            spec: self.spec.clone(),
            params: self.estimator_params()?,
            replicates: section.replicates,
            base_seed: section.base_seed,
        })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ConfigError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| ConfigError::Write { path: path.into(), source })?;
    }
    std::fs::write(path, contents)
        .map_err(|source| ConfigError::Write { path: path.into(), source })
}

/// Serialized theory report with the flag convention: infinite and
/// undetermined extremes as literal tokens, never sentinel numerics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryFile {
    pub label: String,
    pub ex: Option<f64>,
    pub ey: Option<f64>,
    pub ez: Option<f64>,
    pub d_lower: Option<f64>,
    pub d_upper: Option<f64>,
    pub alpha: String,
    pub beta: String,
    pub mgf_x: String,
    pub mgf_y: String,
    pub mgf_z: String,
}

fn tri_token(t: crate::randomness::TriState) -> String {
    match t {
        crate::randomness::TriState::Yes => "yes".into(),
        crate::randomness::TriState::No => "no".into(),
        crate::randomness::TriState::Unknown => "unknown".into(),
    }
}

impl TheoryFile {
    pub fn from_report(label: &str, report: &TheoryReport) -> Self {
        TheoryFile {
            label: label.to_string(),
            ex: report.ex,
            ey: report.ey,
            ez: report.ez,
            d_lower: report.d_lower,
            d_upper: report.d_upper,
            alpha: report.alpha.token(),
            beta: report.beta.token(),
            mgf_x: tri_token(report.mgf_x),
            mgf_y: tri_token(report.mgf_y),
            mgf_z: tri_token(report.mgf_z),
        }
    }
}

pub fn theory_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join(format!("{label}.theory.toml"))
}

pub fn write_theory(out_dir: &Path, file: &TheoryFile) -> Result<PathBuf, ConfigError> {
    let path = theory_path(out_dir, &file.label);
    let body = toml::to_string_pretty(file).expect("theory file serializes");
    write_file(&path, &body)?;
    Ok(path)
}

pub fn read_theory(path: &Path) -> Result<TheoryFile, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.into(), source })?;
    toml::from_str(&text)
        .map_err(|source| ConfigError::Parse { path: path.into(), source: Box::new(source) })
}

pub fn estimate_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join(format!("{label}.estimate.toml"))
}

pub fn replicates_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join(format!("{label}.replicates.csv"))
}

pub fn write_summary(out_dir: &Path, table: &SummaryTable) -> Result<PathBuf, ConfigError> {
    let path = estimate_path(out_dir, &table.label);
    let body = toml::to_string_pretty(table).expect("summary serializes");
    write_file(&path, &body)?;
    let mut csv = String::new();
    csv.push_str("# morandim-csv v1 replicates\n");
    csv.push_str("replicate,seed,lower,upper\n");
    for row in &table.rows {
        csv.push_str(&format!("{},{},{},{}\n", row.index, row.seed, row.lower, row.upper));
    }
    write_file(&replicates_path(out_dir, &table.label), &csv)?;
    Ok(path)
}

pub fn read_summary(path: &Path) -> Result<SummaryTable, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let table: SummaryTable = toml::from_str(&text)
        .map_err(|source| ConfigError::Parse { path: path.into(), source: Box::new(source) })?;
    table.recompute_check().map_err(|e| ConfigError::BadData {
        path: path.into(),
        reason: e.to_string(),
    })?;
    Ok(table)
}

pub fn env_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join(format!("{label}.env.csv"))
}

/// Environment export: one line per level, probabilities joined by ';'.
pub fn write_environment(
    out_dir: &Path,
    label: &str,
    env: &crate::randomness::Environment,
) -> Result<PathBuf, ConfigError> {
    let path = env_path(out_dir, label);
    let mut body = String::new();
    body.push_str("# morandim-csv v1 environment\n");
    body.push_str(&format!("# spec_id={} seed={}\n", env.spec_id(), env.seed()));
    body.push_str("level,t,r,p\n");
    for (i, d) in env.draws().iter().enumerate() {
        let probs =
            d.probs().iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        body.push_str(&format!("{},{},{},{}\n", i + 1, d.child_count(), d.ratio(), probs));
    }
    write_file(&path, &body)?;
    Ok(path)
}

pub fn tree_path(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join(format!("{label}.tree.csv"))
}

pub fn write_tree(
    out_dir: &Path,
    label: &str,
    tree: &crate::moran::FloatMoranTree,
) -> Result<PathBuf, ConfigError> {
    let path = tree_path(out_dir, label);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| ConfigError::Write { path: path.clone(), source })?;
    }
    let file = std::fs::File::create(&path)
        .map_err(|source| ConfigError::Write { path: path.clone(), source })?;
    let mut w = std::io::BufWriter::new(file);
    tree.export_records(&mut w)
        .and_then(|_| w.flush())
        .map_err(|source| ConfigError::Write { path: path.clone(), source })?;
    Ok(path)
}

/// One row of the assembled comparison report.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub fixture: String,
    pub regime: String,
    pub theory: String,
    pub estimate: f64,
    pub delta: String,
}

/// Joins `<label>.theory.toml` and `<label>.estimate.toml` pairs found in
/// `dir` into comparison rows (one per estimator bound). Returns the rows
/// and the labels that miss one of the two files.
pub fn assemble_report(dir: &Path) -> Result<(Vec<ReportRow>, Vec<PathBuf>), ConfigError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|source| ConfigError::Io { path: dir.into(), source })?;
    let mut theory: BTreeMap<String, TheoryFile> = BTreeMap::new();
    let mut estimates: BTreeMap<String, SummaryTable> = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|source| ConfigError::Io { path: dir.into(), source })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(label) = name.strip_suffix(".theory.toml") {
            theory.insert(label.to_string(), read_theory(&entry.path())?);
        } else if let Some(label) = name.strip_suffix(".estimate.toml") {
            estimates.insert(label.to_string(), read_summary(&entry.path())?);
        }
    }
    let mut missing = Vec::new();
    for label in theory.keys() {
        if !estimates.contains_key(label) {
            missing.push(estimate_path(dir, label));
        }
    }
    for label in estimates.keys() {
        if !theory.contains_key(label) {
            missing.push(theory_path(dir, label));
        }
    }
    let mut rows = Vec::new();
    for (label, table) in &estimates {
        let Some(th) = theory.get(label) else { continue };
        let (lower_name, upper_name, th_lower, th_upper) = match table.regime {
            EstimatorRegime::Large => (
                "large-lower",
                "large-upper",
                th.d_lower.map(|v| v.to_string()).unwrap_or_else(|| "unavailable".into()),
                th.d_upper.map(|v| v.to_string()).unwrap_or_else(|| "unavailable".into()),
            ),
            EstimatorRegime::Small => {
                ("small-beta", "small-alpha", th.beta.clone(), th.alpha.clone())
            }
        };
        for (regime, theory_token, stats) in [
            (lower_name, th_lower, &table.lower),
            (upper_name, th_upper, &table.upper),
        ] {
            let delta = theory_token
                .parse::<f64>()
                .map(|t| (stats.median - t).to_string())
                .unwrap_or_else(|_| "n/a".into());
            rows.push(ReportRow {
                fixture: label.clone(),
                regime: regime.to_string(),
                theory: theory_token,
                estimate: stats.median,
                delta,
            });
        }
    }
    Ok((rows, missing))
}

pub fn write_report_csv(dir: &Path, rows: &[ReportRow]) -> Result<PathBuf, ConfigError> {
    let path = dir.join("report.csv");
    let mut body = String::new();
    body.push_str("# morandim-csv v1 report\n");
    body.push_str("fixture,regime,theory,estimate,delta\n");
    for r in rows {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            r.fixture, r.regime, r.theory, r.estimate, r.delta
        ));
    }
    write_file(&path, &body)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
label = "uniform-simplex-cantor"

[spec]
tau = 0.3333333333333333

[[spec.variant.ProductForm.children]]
t = 2
weight = 1.0
ratio = { PointMass = 0.3333333333333333 }
probs = "UniformSimplex"

[estimate]
regime = "Large"
window = { n_min = 200, n_max = 400 }
k_cap = 5000
env_length = 10000

[estimate.phi]
declared_regime = "Large"
kind = { Constant = 12.0 }

[experiment]
replicates = 32
base_seed = 20240801
"#;

    #[test]
    fn sample_config_parses() {
        let config: RunConfig = toml::from_str(SAMPLE).unwrap();
        assert_eq!(config.label, "uniform-simplex-cantor");
        config.spec.validate().unwrap();
        let params = config.estimator_params().unwrap();
        assert!(matches!(params, EstimatorParams::Large { k_cap: 5000, .. }));
        let exp = config.experiment_config().unwrap();
        assert_eq!(exp.replicates, 32);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = crate::randomness::DistributionSpec::inverse_square_mixture(8, 0.25).unwrap();
        let text = toml::to_string(&spec).unwrap();
        let back: crate::randomness::DistributionSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn theory_file_round_trip() {
        let dir = std::env::temp_dir().join(format!("morandim-test-{}", std::process::id()));
        let spec = crate::randomness::DistributionSpec::point_mass(
            crate::randomness::LevelDraw::new(2, 1.0 / 3.0, vec![0.5, 0.5]).unwrap(),
            0.25,
        )
        .unwrap();
        let report = crate::randomness::moments(&spec).unwrap();
        let file = TheoryFile::from_report("mt", &report);
        let path = write_theory(&dir, &file).unwrap();
        let back = read_theory(&path).unwrap();
        assert_eq!(back.d_lower, file.d_lower);
        assert_eq!(back.alpha, file.alpha);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_section_is_reported() {
        let minimal = r#"
label = "x"
[spec]
tau = 0.25
[spec.variant.PointMass]
t = 2
r = 0.25
p = [0.5, 0.5]
"#;
        let config: RunConfig = toml::from_str(minimal).unwrap();
        config.spec.validate().unwrap();
        assert!(matches!(
            config.estimator_params(),
            Err(ConfigError::MissingSection("estimate"))
        ));
    }
}
