//! `toporeg` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use toporeg::dynamics::{integrate, OdeSystem, SystemKind, TrajectoryConfig};
use toporeg::fields::FieldSpec;
use toporeg::geometry::{read_points, write_binary, write_csv};
use toporeg::pipeline::{run_pipeline, select_k_sweep, Manifest, RunConfig};
use toporeg::regimes::jet_surrogate;
use toporeg::report::write_json;
use toporeg::significance::{gaussian_reference, ReferenceConfig};

#[derive(Parser)]
#[command(name = "toporeg", version, about = "Centrality-radius bifiltration for regime detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a trajectory (l63, l96, cdv) or the jet surrogate (jet) to CSV or .bin.
    Generate(GenerateArgs),
    /// Evaluate a scalar field on a point cloud.
    Field(FieldArgs),
    /// Percentile bifiltration with summary, diagrams and figures.
    Bifilter(RunArgs),
    /// Gaussian reference test for the noise threshold.
    Reference(ReferenceArgs),
    /// Bifiltration plus regime labels of the robust components.
    Regimes(RunArgs),
    /// All stages, with a manifest of every artifact.
    Pipeline(RunArgs),
    /// Centrality bifiltration for several neighbor counts.
    SweepK(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    system: String,
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Keep every n-th step (default 10 for cdv, else 1).
    #[arg(long)]
    stride: Option<usize>,
    /// Project onto this many principal components.
    #[arg(long)]
    pca: Option<usize>,
    /// Output path; `.bin` selects the binary matrix format.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// kde, binning, dtm or centrality.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
}

impl FilterArgs {
    fn spec(&self) -> Result<Option<FieldSpec>> {
        let Some(kind) = &self.filter else {
            if self.k.is_some() || self.bandwidth.is_some() || self.bins.is_some() {
                bail!("--k, --bandwidth and --bins need --filter");
            }
            return Ok(None);
        };
        Ok(Some(match kind.to_ascii_lowercase().as_str() {
            "kde" => FieldSpec::Kde {
                bandwidth: self.bandwidth,
            },
            "binning" | "bin" => FieldSpec::Binning {
                bins: self.bins.unwrap_or(20),
            },
            "dtm" => FieldSpec::Dtm {
                k: self.k.context("--filter dtm needs --k")?,
                r: 2.0,
            },
            "centrality" | "c" => FieldSpec::Centrality {
                k: self.k.context("--filter centrality needs --k")?,
            },
            other => bail!("unknown filter `{other}`"),
        }))
    }
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    meta_column: Option<String>,
    /// Scale coordinates to unit variance first.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    filter: FilterArgs,
    /// CSV with columns `index,value`.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set persistence.max_edge=4.0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Generate the dataset: l63, l96, cdv, or jet for the surrogate.
    #[arg(long, conflicts_with = "input")]
    system: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    meta_column: Option<String>,
    /// Principal components kept before normalizing (0 = all).
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long)]
    max_edge: Option<f64>,
    #[arg(long)]
    min_pers: Option<f64>,
    /// 0 builds the exact complex.
    #[arg(long)]
    sparse_factor: Option<f64>,
    #[arg(long)]
    pre_sparse: Option<f64>,
    #[arg(long)]
    noise_threshold: Option<f64>,
    /// Reference report providing the noise threshold.
    #[arg(long)]
    noise_threshold_file: Option<PathBuf>,
    /// Comma-separated percentile grid.
    #[arg(long, value_delimiter = ',')]
    percentiles: Option<Vec<f64>>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn toml_str(s: &str) -> String {
    format!("{s:?}")
}

fn toml_path(p: &Path) -> String {
    toml_str(&p.to_string_lossy())
}

fn toml_filter(spec: &FieldSpec) -> String {
    match spec {
        FieldSpec::Kde { bandwidth: None } => r#"{ kind = "kde" }"#.into(),
        FieldSpec::Kde { bandwidth: Some(h) } => format!(r#"{{ kind = "kde", bandwidth = {h:?} }}"#),
        FieldSpec::Binning { bins } => format!(r#"{{ kind = "binning", bins = {bins} }}"#),
        FieldSpec::Dtm { k, r } => format!(r#"{{ kind = "dtm", k = {k}, r = {r:?} }}"#),
        FieldSpec::Centrality { k } => format!(r#"{{ kind = "centrality", k = {k} }}"#),
    }
}

impl RunArgs {
    /// Shorthand flags become overrides; explicit `--set` values win.
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut o: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| o.push((k.to_string(), v));
        if let Some(system) = &self.system {
            let n = self.n.unwrap_or(20_000);
            if system == "jet" {
                push("dataset", format!(r#"{{ source = "surrogate", n_points = {n} }}"#));
            } else {
                let kind: SystemKind = system.parse()?;
                push(
                    "dataset",
                    format!(r#"{{ source = "generator", system = "{kind}", n_points = {n} }}"#),
                );
            }
        } else if let Some(path) = &self.input {
            let meta = self
                .meta_column
                .as_ref()
                .map(|m| format!(", meta_column = {}", toml_str(m)))
                .unwrap_or_default();
            push("dataset", format!(r#"{{ source = "file", path = {}{meta} }}"#, toml_path(path)));
        } else if let Some(n) = self.n {
            push("dataset.n_points", n.to_string());
        }
        if let Some(m) = self.pca {
            push("dataset.pca", m.to_string());
        }
        if let Some(spec) = self.filter.spec()? {
            push("filter", toml_filter(&spec));
        }
        if let Some(s) = self.seed {
            push("seed", s.to_string());
        }
        for (key, v) in [
            ("persistence.max_edge", self.max_edge),
            ("persistence.min_pers", self.min_pers),
            ("persistence.sparse_factor", self.sparse_factor),
            ("persistence.pre_sparse_fraction", self.pre_sparse),
            ("bifiltration.noise_threshold", self.noise_threshold),
        ] {
            if let Some(v) = v {
                push(key, format!("{v:?}"));
            }
        }
        if let Some(p) = &self.noise_threshold_file {
            push("bifiltration.noise_threshold_file", toml_path(p));
        }
        if let Some(ps) = &self.percentiles {
            let items: Vec<String> = ps.iter().map(|p| format!("{p:?}")).collect();
            push("bifiltration.percentiles", format!("[{}]", items.join(", ")));
        }
        if let Some(out) = &self.out {
            push("output.dir", toml_path(out));
        }
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            o.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(o)
    }

    fn load(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?,
            None => String::new(),
        };
        if self.config.is_none() && self.system.is_none() && self.input.is_none() {
            bail!("give a dataset with --config, --system or --input");
        }
        Ok(RunConfig::from_toml_with_overrides(&text, &self.overrides()?)?)
    }
}

#[derive(Args)]
struct ReferenceArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5.0)]
    max_edge: f64,
    #[arg(long, default_value_t = 0.15)]
    min_pers: f64,
    /// 0 builds the exact complex.
    #[arg(long, default_value_t = 0.7)]
    sparse_factor: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated neighbor counts.
    #[arg(long, value_delimiter = ',', required = true)]
    k_values: Vec<usize>,
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let cloud = if a.system == "jet" {
        jet_surrogate(a.n, a.seed)?.cloud
    } else {
        let kind: SystemKind = a.system.parse()?;
        let mut cfg = TrajectoryConfig::for_system(kind, a.n);
        cfg.seed = a.seed;
        if let Some(stride) = a.stride {
            cfg.stride = stride;
            cfg.n_steps = a.n * stride;
        }
        if let Some(dt) = a.dt {
            cfg.dt = dt;
        }
        if let Some(b) = a.burn_in {
            cfg.burn_in = b;
        }
        integrate(&OdeSystem::new(kind), &cfg)?
    };
    let cloud = match a.pca {
        Some(m) if m > 0 && m < cloud.dim() => cloud.pca_project(m)?.cloud,
        _ => cloud,
    };
    write_cloud(&cloud, &a.out)?;
    eprintln!("wrote {} points to {}", cloud.len(), a.out.display());
    Ok(())
}

fn write_cloud(cloud: &toporeg::PointCloud, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        write_binary(cloud, path)?;
    } else {
        write_csv(cloud, path)?;
    }
    Ok(())
}

fn field(a: &FieldArgs) -> Result<()> {
    let spec = a.filter.spec()?.context("--filter is required")?;
    let mut cloud = read_points(&a.input, a.meta_column.as_deref())?;
    if a.normalize {
        cloud = cloud.normalize()?.0;
    }
    let field = spec.compute(&cloud)?;
    for w in &field.warnings {
        log::warn!("{w}");
    }
    let mut csv = String::from("index,value\n");
    for (i, v) in field.values.iter().enumerate() {
        csv.push_str(&format!("{i},{v}\n"));
    }
    toporeg::report::write_atomic(&a.out, csv.as_bytes())?;
    if let Some(svg_path) = &a.svg {
        let svg = toporeg::svg::cloud_svg(&cloud, Some(&field), (0, 1.min(cloud.dim() - 1)), &spec.label());
        toporeg::report::write_atomic(svg_path, svg.as_bytes())?;
    }
    Ok(())
}

fn report_manifest(m: &Manifest, dir: &Path) -> ExitCode {
    for s in &m.stages {
        let detail = s.error.as_deref().unwrap_or("");
        println!("{:<13} {:<8} {detail}", s.name, format!("{:?}", s.status).to_lowercase());
    }
    println!("{} artifacts in {}", m.artifacts.len(), dir.display());
    if m.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run_stages(a: &RunArgs, significance: bool, regimes: bool) -> Result<ExitCode> {
    let mut cfg = a.load()?;
    if !significance {
        cfg.significance.reference = false;
        cfg.significance.sensitivity_min_pers.clear();
        cfg.significance.sensitivity_sparse.clear();
    }
    cfg.regimes.enabled &= regimes;
    let m = run_pipeline(&cfg)?;
    Ok(report_manifest(&m, &cfg.output.dir))
}

fn regimes(a: &RunArgs) -> Result<ExitCode> {
    let code = run_stages(a, false, true)?;
    let cfg = a.load()?;
    let path = cfg.output.dir.join("regimes.csv");
    match std::fs::read_to_string(&path) {
        Ok(t) => print!("{t}"),
        Err(_) => eprintln!("no regime table written (the cloud needs a label column)"),
    }
    Ok(code)
}

fn reference(a: &ReferenceArgs) -> Result<()> {
    let mut cfg = ReferenceConfig {
        n: a.n,
        dim: a.dim,
        repeats: a.repeats,
        seed: a.seed,
        ..Default::default()
    };
    cfg.bifiltration.max_edge = a.max_edge;
    cfg.bifiltration.min_pers = a.min_pers;
    cfg.bifiltration.sparse_factor = (a.sparse_factor > 0.0).then_some(a.sparse_factor);
    let report = gaussian_reference(&cfg)?;
    write_json(&a.out, &report)?;
    println!("recommended noise threshold: {:.4}", report.recommended_threshold);
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let cfg = a.run.load()?;
    let report = select_k_sweep(&cfg, &a.k_values)?;
    std::fs::create_dir_all(&cfg.output.dir).with_context(|| format!("creating {}", cfg.output.dir.display()))?;
    write_json(&cfg.output.dir.join("sweep_k.json"), &report)?;
    let show = |p: Option<f64>| p.map_or("-".to_string(), |p| format!("{p}"));
    println!("k\tfirst_loop\tfirst_split\tmax_robust\tat");
    for r in &report.rows {
        println!(
            "{}\t{}\t{}\t{}\t{}",
            r.k,
            show(r.first_loop_percentile),
            show(r.first_split_percentile),
            r.max_robust_components,
            show(r.max_robust_percentile)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a).map(|_| ExitCode::SUCCESS),
        Command::Field(a) => field(a).map(|_| ExitCode::SUCCESS),
        Command::Bifilter(a) => run_stages(a, false, false),
        Command::Reference(a) => reference(a).map(|_| ExitCode::SUCCESS),
        Command::Regimes(a) => regimes(a),
        Command::Pipeline(a) => run_stages(a, true, true),
        Command::SweepK(a) => sweep(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.ends_with(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
