//! End-to-end runs driven by a TOML [`RunConfig`].
//!
//! Stages: dataset, field, bifiltration, significance, regimes. Every file
//! lands in the output directory through an atomic rename and is listed in
//! `manifest.json` with its SHA-256 and size. The manifest carries no
//! timestamps, so identical configs give identical bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifiltration::{
    default_percentiles, run_with_field, BifiltrationConfig, BifiltrationRun, BifiltrationSummary, SizeClasses,
};
use crate::dynamics::{integrate, OdeSystem, SystemKind, TrajectoryConfig};
use crate::error::{Error, Result};
use crate::fields::{FieldSpec, ScalarField};
use crate::geometry::{io, PointCloud};
use crate::persistence::DEFAULT_EDGE_BUDGET;
use crate::regimes::{jet_surrogate, regime_breakpoints, regimes_from_summary, RegimeScheme, RegimeTable};
use crate::report::{sha256_hex, to_json, write_atomic};
use crate::significance::{
    gaussian_reference, sensitivity_sweep, Perturbation, ReferenceConfig, ReferenceTestReport, SensitivityReport,
};
use crate::svg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    /// Trajectory of one of the built-in systems.
    Generator {
        system: SystemKind,
        n_points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        burn_in: Option<usize>,
        /// Unset: 10 for Charney-DeVore, else 1.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stride: Option<usize>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
    /// CSV or binary matrix file.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        meta_column: Option<String>,
    },
    /// Seeded trimodal jet-latitude stand-in.
    Surrogate { n_points: usize },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(flatten)]
    pub source: DatasetSource,
    /// Project onto this many principal components before normalizing; 0 keeps
    /// all coordinates. Unset: 3 for Lorenz-96 and Charney-DeVore, else 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<usize>,
    /// Scale every coordinate to unit standard deviation.
    #[serde(default = "yes")]
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersistenceParams {
    pub max_edge: f64,
    /// Unset: 0.3 for Charney-DeVore, 0.15 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_pers: Option<f64>,
    /// 0 builds the exact Rips complex.
    pub sparse_factor: f64,
    /// Unset: 0.05 for the Lorenz systems, 0.005 for Charney-DeVore, 0 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_sparse_fraction: Option<f64>,
    pub edge_budget: usize,
}

impl Default for PersistenceParams {
    fn default() -> Self {
        PersistenceParams {
            max_edge: 5.0,
            min_pers: None,
            sparse_factor: 0.7,
            pre_sparse_fraction: None,
            edge_budget: DEFAULT_EDGE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifiltrationParams {
    pub percentiles: Vec<f64>,
    pub top_k: usize,
    pub noise_threshold: f64,
    /// Reference report whose recommended threshold replaces `noise_threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_threshold_file: Option<PathBuf>,
    pub representatives: bool,
    pub tighten: bool,
    pub size_classes: SizeClasses,
}

impl Default for BifiltrationParams {
    fn default() -> Self {
        BifiltrationParams {
            percentiles: default_percentiles(),
            top_k: 5,
            noise_threshold: 0.5,
            noise_threshold_file: None,
            representatives: true,
            tighten: false,
            size_classes: SizeClasses::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignificanceParams {
    /// Run the Gaussian reference test.
    pub reference: bool,
    pub reference_n: usize,
    pub reference_dim: usize,
    pub repeats: usize,
    /// Alternative `min_pers` values for the sensitivity reruns.
    pub sensitivity_min_pers: Vec<f64>,
    /// Alternative sparse factors (0 = exact) for the sensitivity reruns.
    pub sensitivity_sparse: Vec<f64>,
}

impl Default for SignificanceParams {
    fn default() -> Self {
        SignificanceParams {
            reference: false,
            reference_n: 10_000,
            reference_dim: 3,
            repeats: 10,
            sensitivity_min_pers: Vec::new(),
            sensitivity_sparse: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeParams {
    /// Label the components when the cloud has a meta channel.
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Fixed breakpoints instead of density minima.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl Default for RegimeParams {
    fn default() -> Self {
        RegimeParams {
            enabled: true,
            bandwidth: None,
            breakpoints: None,
            names: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    pub dir: PathBuf,
    pub svg: bool,
    /// Also write the cloud in the binary matrix format.
    pub binary: bool,
}

impl Default for OutputParams {
    fn default() -> Self {
        OutputParams {
            dir: PathBuf::from("out"),
            svg: true,
            binary: false,
        }
    }
}

fn default_filter() -> FieldSpec {
    FieldSpec::Centrality { k: 1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetConfig,
    #[serde(default = "default_filter")]
    pub filter: FieldSpec,
    #[serde(default)]
    pub persistence: PersistenceParams,
    #[serde(default)]
    pub bifiltration: BifiltrationParams,
    #[serde(default)]
    pub significance: SignificanceParams,
    #[serde(default)]
    pub regimes: RegimeParams,
    #[serde(default)]
    pub output: OutputParams,
}

/// Parses `value` as a TOML value, falling back to a plain string.
fn parse_override_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

/// Sets `dotted.key = value` inside `table`, creating tables on the way.
pub fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_override_value(value));
    Ok(())
}

impl RunConfig {
    /// Minimal config for a generated dataset with all other values defaulted.
    pub fn for_system(system: SystemKind, n_points: usize) -> Self {
        RunConfig {
            seed: 0,
            dataset: DatasetConfig {
                source: DatasetSource::Generator {
                    system,
                    n_points,
                    dt: None,
                    burn_in: None,
                    stride: None,
                    params: BTreeMap::new(),
                },
                pca: None,
                normalize: true,
            },
            filter: default_filter(),
            persistence: PersistenceParams::default(),
            bifiltration: BifiltrationParams::default(),
            significance: SignificanceParams::default(),
            regimes: RegimeParams::default(),
            output: OutputParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `section.key=value` overrides on top.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (k, v) in overrides {
            apply_override(&mut table, k, v)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.dataset.source {
            DatasetSource::Generator { n_points, stride, .. } if *n_points == 0 || *stride == Some(0) => {
                return Err(Error::Config("generator needs n_points >= 1 and stride >= 1".into()))
            }
            DatasetSource::Surrogate { n_points } if *n_points < 3 => {
                return Err(Error::Config("surrogate needs n_points >= 3".into()))
            }
            _ => {}
        }
        if self.persistence.sparse_factor < 0.0 || self.persistence.sparse_factor >= 1.0 {
            return Err(Error::Config("sparse_factor must lie in [0, 1)".into()));
        }
        let mut b = self.bifiltration_config_with_threshold(self.bifiltration.noise_threshold);
        b.filter = self.filter.clone();
        b.validate().map_err(|e| Error::Config(e.to_string()))
    }

    fn system(&self) -> Option<SystemKind> {
        match self.dataset.source {
            DatasetSource::Generator { system, .. } => Some(system),
            _ => None,
        }
    }

    pub fn pca_components(&self) -> usize {
        self.dataset.pca.unwrap_or(match self.system() {
            Some(SystemKind::Lorenz96 | SystemKind::CharneyDeVore) => 3,
            _ => 0,
        })
    }

    pub fn min_pers(&self) -> f64 {
        self.persistence.min_pers.unwrap_or(match self.system() {
            Some(SystemKind::CharneyDeVore) => 0.3,
            _ => 0.15,
        })
    }

    pub fn pre_sparse_fraction(&self) -> f64 {
        self.persistence.pre_sparse_fraction.unwrap_or(match self.system() {
            Some(SystemKind::Lorenz63 | SystemKind::Lorenz96) => 0.05,
            Some(SystemKind::CharneyDeVore) => 0.005,
            None => 0.0,
        })
    }

    fn bifiltration_config_with_threshold(&self, noise_threshold: f64) -> BifiltrationConfig {
        let b = &self.bifiltration;
        BifiltrationConfig {
            percentiles: b.percentiles.clone(),
            filter: self.filter.clone(),
            top_k: b.top_k,
            max_edge: self.persistence.max_edge,
            min_pers: self.min_pers(),
            sparse_factor: (self.persistence.sparse_factor > 0.0).then_some(self.persistence.sparse_factor),
            pre_sparse_fraction: self.pre_sparse_fraction(),
            noise_threshold,
            size_classes: b.size_classes,
            edge_budget: self.persistence.edge_budget,
            representatives: b.representatives,
            tighten: b.tighten,
        }
    }

    /// Resolved bifiltration settings; reads the threshold file if one is set.
    pub fn bifiltration_config(&self) -> Result<BifiltrationConfig> {
        let threshold = match &self.bifiltration.noise_threshold_file {
            Some(path) => read_threshold(path)?,
            None => self.bifiltration.noise_threshold,
        };
        Ok(self.bifiltration_config_with_threshold(threshold))
    }

    /// Fails early when an input file is missing.
    pub fn check_inputs(&self) -> Result<()> {
        let mut paths: Vec<&Path> = Vec::new();
        if let DatasetSource::File { path, .. } = &self.dataset.source {
            paths.push(path);
        }
        if let Some(p) = &self.bifiltration.noise_threshold_file {
            paths.push(p);
        }
        for p in paths {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file does not exist"),
                ));
            }
        }
        Ok(())
    }
}

/// Recommended threshold stored in a reference report.
pub fn read_threshold(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: ReferenceTestReport = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(report.recommended_threshold)
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// After normalization when enabled.
    pub cloud: PointCloud,
    /// Ground-truth mixture labels (surrogate only).
    pub truth: Option<Vec<usize>>,
}

pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let (raw, truth) = match &config.dataset.source {
        DatasetSource::Generator {
            system,
            n_points,
            dt,
            burn_in,
            stride,
            params,
        } => {
            let mut sys = OdeSystem::new(*system);
            for (name, v) in params {
                sys = sys.with_param(name, *v)?;
            }
            let mut traj = TrajectoryConfig::for_system(*system, *n_points);
            if let Some(stride) = stride {
                traj.stride = *stride;
                traj.n_steps = n_points * stride;
            }
            traj.seed = config.seed;
            if let Some(dt) = dt {
                traj.dt = *dt;
            }
            if let Some(b) = burn_in {
                traj.burn_in = *b;
            }
            (integrate(&sys, &traj)?, None)
        }
        DatasetSource::File { path, meta_column } => (io::read_points(path, meta_column.as_deref())?, None),
        DatasetSource::Surrogate { n_points } => {
            let s = jet_surrogate(*n_points, config.seed)?;
            (s.cloud, Some(s.truth))
        }
    };
    let raw = match config.pca_components() {
        0 => raw,
        m if m >= raw.dim() => raw,
        m => {
            let mut projected = raw.pca_project(m)?.cloud;
            if let Some(meta) = raw.meta() {
                projected = projected.with_meta(raw.meta_name().unwrap_or("meta"), meta.to_vec())?;
            }
            projected
        }
    };
    let cloud = if config.dataset.normalize {
        let (c, flat) = raw.normalize()?;
        if !flat.is_empty() {
            log::warn!("coordinates {flat:?} have zero variance and were left unscaled");
        }
        c
    } else {
        raw
    };
    Ok(Dataset { cloud, truth })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub success: bool,
    pub stages: Vec<StageRecord>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

struct Output {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Output {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_atomic(&path, bytes)?;
        self.artifacts.retain(|a| a.path != rel);
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(rel, to_json(value)?.as_bytes())
    }
}

/// File stem for a percentile: `p010`, or `p012_5` for fractional values.
pub fn percentile_stem(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("p{:03}", p as u64)
    } else {
        format!("p{:03}_{}", p.trunc() as u64, format!("{}", p.fract()).trim_start_matches("0."))
    }
}

fn field_csv(field: &ScalarField) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in field.values.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct RegimeReport<'a> {
    scheme: &'a RegimeScheme,
    table: &'a RegimeTable,
}

struct Stages {
    records: Vec<StageRecord>,
}

impl Stages {
    fn record<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => {
                self.records.push(StageRecord {
                    name: name.into(),
                    status: StageStatus::Ok,
                    error: None,
                });
                Some(v)
            }
            Err(e) => {
                log::error!("stage {name} failed: {e}");
                self.records.push(StageRecord {
                    name: name.into(),
                    status: StageStatus::Failed,
                    error: Some(e.to_string()),
                });
                None
            }
        }
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.records.push(StageRecord {
            name: name.into(),
            status: StageStatus::Skipped,
            error: Some(why.into()),
        });
    }
}

/// Runs every stage and writes outputs plus `manifest.json`.
///
/// Configuration and missing-input errors are returned before anything is
/// written; later failures are recorded per stage in the manifest.
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    config.check_inputs()?;
    let bif = config.bifiltration_config()?;
    let dir = config.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut out = Output {
        dir,
        artifacts: Vec::new(),
    };
    let mut st = Stages { records: Vec::new() };
    out.write("config.toml", config.to_toml()?.as_bytes())?;

    let dataset = st.record("dataset", dataset_stage(config, &mut out));
    let field = match &dataset {
        Some(d) => st.record("field", field_stage(config, d, &mut out)),
        None => {
            st.skip("field", "no dataset");
            None
        }
    };
    let run = match (&dataset, field) {
        (Some(d), Some(f)) => st.record("bifiltration", bifiltration_stage(config, &bif, d, f, &mut out)),
        _ => {
            st.skip("bifiltration", "no field");
            None
        }
    };
    let wants_significance = config.significance.reference
        || !config.significance.sensitivity_min_pers.is_empty()
        || !config.significance.sensitivity_sparse.is_empty();
    match &dataset {
        Some(d) if wants_significance => {
            st.record("significance", significance_stage(config, &bif, d, &mut out));
        }
        Some(_) => st.skip("significance", "not requested"),
        None => st.skip("significance", "no dataset"),
    }
    match (&dataset, &run) {
        (Some(d), Some(r)) if config.regimes.enabled && d.cloud.meta().is_some() => {
            st.record("regimes", regime_stage(config, d, &r.summary, &mut out));
        }
        (Some(_), Some(_)) => st.skip("regimes", "no label channel or disabled"),
        _ => st.skip("regimes", "no bifiltration"),
    }

    out.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        success: st.records.iter().all(|s| s.status != StageStatus::Failed),
        stages: st.records,
        artifacts: out.artifacts.clone(),
    };
    let path = out.dir.join("manifest.json");
    write_atomic(&path, to_json(&manifest)?.as_bytes())?;
    Ok(manifest)
}

fn dataset_stage(config: &RunConfig, out: &mut Output) -> Result<Dataset> {
    let d = load_dataset(config)?;
    out.write("cloud.csv", io::csv_string(&d.cloud).as_bytes())?;
    if config.output.binary {
        out.write("cloud.bin", &io::binary_bytes(&d.cloud))?;
    }
    Ok(d)
}

fn field_stage(config: &RunConfig, d: &Dataset, out: &mut Output) -> Result<ScalarField> {
    let field = config.filter.compute(&d.cloud)?;
    for w in &field.warnings {
        log::warn!("{w}");
    }
    out.write("field.csv", field_csv(&field).as_bytes())?;
    if config.output.svg && d.cloud.dim() >= 2 {
        let title = format!("Point cloud colored by {}", config.filter.label());
        out.write("cloud.svg", svg::cloud_svg(&d.cloud, Some(&field), (0, 1), &title).as_bytes())?;
    }
    Ok(field)
}

fn bifiltration_stage(
    config: &RunConfig,
    bif: &BifiltrationConfig,
    d: &Dataset,
    field: ScalarField,
    out: &mut Output,
) -> Result<BifiltrationRun> {
    let run = run_with_field(&d.cloud, field, bif)?;
    out.json("summary.json", &run.summary)?;
    if config.output.svg {
        out.write("summary.svg", svg::summary_svg(&run.summary).as_bytes())?;
    }
    for (row, diagram) in run.summary.rows.iter().zip(&run.diagrams) {
        let Some(diagram) = diagram else { continue };
        let stem = percentile_stem(row.percentile);
        out.write(&format!("diagrams/{stem}.csv"), diagram.to_csv().as_bytes())?;
        if config.output.svg {
            let title = format!("{} at {}%", config.filter.label(), row.percentile);
            out.write(&format!("diagrams/{stem}.svg"), svg::diagram_svg(diagram, &title).as_bytes())?;
        }
    }
    if let Some(bad) = run.summary.failed_rows().next() {
        return Err(Error::Internal(format!(
            "percentile {} failed: {}",
            bad.percentile,
            bad.error.as_deref().unwrap_or("")
        )));
    }
    Ok(run)
}

fn significance_stage(config: &RunConfig, bif: &BifiltrationConfig, d: &Dataset, out: &mut Output) -> Result<()> {
    let s = &config.significance;
    if s.reference {
        let rc = ReferenceConfig {
            n: s.reference_n,
            dim: s.reference_dim,
            repeats: s.repeats,
            seed: config.seed,
            filters: Vec::new(),
            bifiltration: bif.clone(),
            min_component_size: bif.size_classes.noise_below,
        };
        out.json("reference.json", &gaussian_reference(&rc)?)?;
    }
    let mut perturbations: Vec<Perturbation> = s.sensitivity_min_pers.iter().map(|&v| Perturbation::MinPers(v)).collect();
    perturbations.extend(
        s.sensitivity_sparse
            .iter()
            .map(|&v| Perturbation::SparseFactor((v > 0.0).then_some(v))),
    );
    if !perturbations.is_empty() {
        let base = BifiltrationConfig {
            representatives: false,
            ..bif.clone()
        };
        let report: SensitivityReport = sensitivity_sweep(&d.cloud, &base, &perturbations)?;
        out.json("sensitivity.json", &report)?;
    }
    Ok(())
}

fn regime_stage(config: &RunConfig, d: &Dataset, summary: &BifiltrationSummary, out: &mut Output) -> Result<()> {
    let labels = d.cloud.meta().expect("checked by caller");
    let name = d.cloud.meta_name().unwrap_or("label");
    let r = &config.regimes;
    let scheme = match &r.breakpoints {
        Some(b) => RegimeScheme::new(name, b.clone(), r.names.clone())?,
        None => {
            let s = regime_breakpoints(labels, r.bandwidth, name)?;
            match &r.names {
                Some(names) => RegimeScheme {
                    names: RegimeScheme::new(name, s.breakpoints.clone(), Some(names.clone()))?.names,
                    ..s
                },
                None => s,
            }
        }
    };
    let table = regimes_from_summary(summary, labels, &scheme)?;
    out.json(
        "regimes.json",
        &RegimeReport {
            scheme: &scheme,
            table: &table,
        },
    )?;
    out.write("regimes.csv", table.to_csv().as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k: usize,
    /// Lowest percentile with a nontrivial loop.
    pub first_loop_percentile: Option<f64>,
    /// Lowest percentile with at least two robust nontrivial components.
    pub first_split_percentile: Option<f64>,
    pub max_robust_components: usize,
    /// Lowest percentile reaching `max_robust_components`.
    pub max_robust_percentile: Option<f64>,
    pub summary: BifiltrationSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepReport {
    pub n_points: usize,
    pub rows: Vec<KSweepRow>,
}

impl KSweepReport {
    pub fn row(&self, k: usize) -> Option<&KSweepRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

/// Centrality bifiltration of the configured dataset for every `k`.
pub fn select_k_sweep(config: &RunConfig, k_values: &[usize]) -> Result<KSweepReport> {
    config.validate()?;
    config.check_inputs()?;
    let d = load_dataset(config)?;
    sweep_k_on(&d.cloud, &config.bifiltration_config()?, k_values)
}

/// [`select_k_sweep`] on an already prepared cloud.
pub fn sweep_k_on(cloud: &PointCloud, base: &BifiltrationConfig, k_values: &[usize]) -> Result<KSweepReport> {
    let n = cloud.len();
    if let Some(&k) = k_values.iter().find(|&&k| k == 0 || k >= n) {
        return Err(Error::NeighborCount { k, n });
    }
    let rows = k_values
        .par_iter()
        .map(|&k| {
            let cfg = BifiltrationConfig {
                filter: FieldSpec::Centrality { k },
                representatives: false,
                ..base.clone()
            };
            let field = cfg.filter.compute(cloud)?;
            let summary = run_with_field(cloud, field, &cfg)?.summary;
            let mut max_robust = 0;
            let mut max_at = None;
            for r in &summary.rows {
                if r.robust_components() > max_robust {
                    max_robust = r.robust_components();
                    max_at = Some(r.percentile);
                }
            }
            Ok(KSweepRow {
                k,
                first_loop_percentile: summary.first_loop_percentile(),
                first_split_percentile: summary
                    .rows
                    .iter()
                    .find(|r| r.robust_components() >= 2)
                    .map(|r| r.percentile),
                max_robust_components: max_robust,
                max_robust_percentile: max_at,
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KSweepReport { n_points: n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(percentile_stem(10.0), "p010");
        assert_eq!(percentile_stem(100.0), "p100");
        assert_eq!(percentile_stem(12.5), "p012_5");
    }

    #[test]
    fn overrides_parse_values() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "persistence.max_edge", "3.5").unwrap();
        apply_override(&mut t, "output.dir", "runs/a").unwrap();
        apply_override(&mut t, "bifiltration.percentiles", "[10.0, 50.0]").unwrap();
        assert_eq!(t["persistence"]["max_edge"].as_float(), Some(3.5));
        assert_eq!(t["output"]["dir"].as_str(), Some("runs/a"));
        assert_eq!(t["bifiltration"]["percentiles"].as_array().unwrap().len(), 2);
        assert!(apply_override(&mut t, "a..b", "1").is_err());
    }

    #[test]
    fn presets() {
        let c = RunConfig::for_system(SystemKind::CharneyDeVore, 100);
        assert_eq!(c.min_pers(), 0.3);
        assert_eq!(c.pre_sparse_fraction(), 0.005);
        let c = RunConfig::for_system(SystemKind::Lorenz63, 100);
        assert_eq!((c.min_pers(), c.pre_sparse_fraction()), (0.15, 0.05));
        let b = c.bifiltration_config().unwrap();
        assert_eq!((b.max_edge, b.sparse_factor), (5.0, Some(0.7)));
    }
}
