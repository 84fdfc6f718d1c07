//! Experiment runner behind the `chemdist` binary.
//!
//! A run is described by an [`ExperimentConfig`]: the experiment name, its
//! parameters, a master seed and an output directory. [`run`] writes one or
//! more CSV tables plus a `<experiment>.meta.json` sidecar holding the resolved
//! configuration, the crate version, rejection counts and wall time.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chemdist_core::distance::estimate_rho_hat;
use chemdist_core::estimators::{
    estimate_mu, estimate_norm, mean_gap, moderate_deviation_tails, shape_experiment, tail_diagnostics, variance_scaling,
};
use chemdist_core::lattice::l1_norm;
use chemdist_core::meso::MesoPartition;
use chemdist_core::renorm::{coupling_experiment, efron_stein_experiment, renormalized_distance, RedParams};
use chemdist_core::skeleton::{skeleton_length_experiment, CChoice, HTable, SupportFunctional};
use chemdist_core::{cluster, rng, BoxSpec, ClusterLabels, EdgeConfiguration};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run failures, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Runtime(_) => 3,
        }
    }
}

impl From<chemdist_core::Error> for RunError {
    fn from(e: chemdist_core::Error) -> Self {
        if e.is_validation() {
            RunError::Validation(e.to_string())
        } else {
            RunError::Runtime(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(format!("{}: {e}", path.display()))
}

fn d_default() -> usize {
    2
}
fn one() -> usize {
    1
}
fn margin_default() -> i64 {
    0
}

macro_rules! box_of {
    ($p:expr) => {
        BoxSpec::new($p.d, $p.half_side, $p.margin)
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    pub p: f64,
    pub source: Vec<i64>,
    pub target: Vec<i64>,
    /// Also report `D^t` at this scale.
    #[serde(default)]
    pub t: Option<i64>,
    #[serde(default)]
    pub rho_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub y: Vec<i64>,
    pub n_grid: Vec<i64>,
    pub replications: usize,
}

pub type VarParams = MuParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub y: Vec<i64>,
    pub n: i64,
    pub x_grid: Vec<f64>,
    pub replications: usize,
}

/// Where the norm estimate used by `gap`, `shape` and `skeleton` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSource {
    /// Seed of the norm estimate; defaults to a stream derived from the master seed.
    #[serde(default)]
    pub seed: Option<u64>,
    pub n: i64,
    pub replications: usize,
    /// Half-side of the box used for the norm estimate; defaults to the experiment box.
    #[serde(default, rename = "L")]
    pub half_side: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub y: Vec<i64>,
    pub n_grid: Vec<i64>,
    pub replications: usize,
    pub mu: NormSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub t_grid: Vec<i64>,
    #[serde(default = "one")]
    pub replications: usize,
    /// Norm estimate; omitted means the l1 norm (exact at `p = 1`).
    #[serde(default)]
    pub mu: Option<NormSource>,
}

fn rho_configs_default() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub y: Vec<i64>,
    pub t_grid: Vec<i64>,
    pub configs: usize,
    /// Estimated from `rho_configs` samples when omitted.
    #[serde(default)]
    pub rho_hat: Option<f64>,
    #[serde(default = "rho_configs_default")]
    pub rho_configs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfronSteinParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub y: Vec<i64>,
    pub t: i64,
    pub configs: usize,
    #[serde(default = "one")]
    pub draws: usize,
    #[serde(default)]
    pub rho_hat: Option<f64>,
    #[serde(default = "rho_configs_default")]
    pub rho_configs: usize,
    /// Write the per-draw audit table.
    #[serde(default)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoWord {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CSetting {
    Value(f64),
    Word(AutoWord),
}

impl Default for CSetting {
    fn default() -> Self {
        CSetting::Word(AutoWord::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HSource {
    #[serde(default)]
    pub seed: Option<u64>,
    pub replications: usize,
    /// Defaults to `(2d + 1) |x|_1`.
    #[serde(default)]
    pub radius: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub x: Vec<i64>,
    pub n_grid: Vec<i64>,
    pub replications: usize,
    #[serde(default, rename = "C")]
    pub c: CSetting,
    pub mu: NormSource,
    pub h: HSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagTailsParams {
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    #[serde(default = "margin_default")]
    pub margin: i64,
    pub p: f64,
    pub r_grid: Vec<i64>,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "parameters", rename_all = "kebab-case")]
pub enum Experiment {
    Sample(SampleParams),
    Dist(DistParams),
    Mu(MuParams),
    Var(VarParams),
    Tails(TailsParams),
    Gap(GapParams),
    Shape(ShapeParams),
    Coupling(CouplingParams),
    EfronStein(EfronSteinParams),
    Skeleton(SkeletonParams),
    DiagTails(DiagTailsParams),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Sample(_) => "sample",
            Experiment::Dist(_) => "dist",
            Experiment::Mu(_) => "mu",
            Experiment::Var(_) => "var",
            Experiment::Tails(_) => "tails",
            Experiment::Gap(_) => "gap",
            Experiment::Shape(_) => "shape",
            Experiment::Coupling(_) => "coupling",
            Experiment::EfronStein(_) => "efron-stein",
            Experiment::Skeleton(_) => "skeleton",
            Experiment::DiagTails(_) => "diag-tails",
        }
    }
}

pub const EXPERIMENTS: [&str; 11] =
    ["sample", "dist", "mu", "var", "tails", "gap", "shape", "coupling", "efron-stein", "skeleton", "diag-tails"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parse a JSON value, mapping schema problems to validation errors.
    pub fn from_value(v: Value) -> Result<Self, RunError> {
        if let Some(name) = v.get("experiment").and_then(Value::as_str) {
            if !EXPERIMENTS.contains(&name) {
                return Err(RunError::Validation(format!("unknown experiment '{name}'")));
            }
        }
        serde_json::from_value(v).map_err(|e| RunError::Validation(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Validation(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| RunError::Validation(format!("{}: {e}", path.display())))?;
        Self::from_value(v)
    }

    /// Fill every defaulted seed so the sidecar reproduces the run on its own.
    fn resolve(&mut self) -> Result<(), RunError> {
        let master = self.master_seed;
        let fill = |slot: &mut Option<u64>, tag: &str| {
            slot.get_or_insert(rng::derive_tag(master, tag));
        };
        match &mut self.experiment {
            Experiment::Gap(g) => fill(&mut g.mu.seed, "gap/mu"),
            Experiment::Shape(s) => {
                if let Some(mu) = s.mu.as_mut() {
                    fill(&mut mu.seed, "shape/mu")
                }
            }
            Experiment::Skeleton(s) => {
                fill(&mut s.mu.seed, "skeleton/mu");
                fill(&mut s.h.seed, "skeleton/h");
                let radius = (2 * s.d as i64 + 1) * l1_norm(&s.x);
                s.h.radius.get_or_insert(radius);
            }
            Experiment::Coupling(c) if c.rho_hat.is_none() => {
                let spec = box_of!(c)?;
                c.rho_hat = Some(estimate_rho_hat(&spec, c.p, master, c.rho_configs)?.rho_hat);
            }
            Experiment::EfronStein(e) if e.rho_hat.is_none() => {
                let spec = box_of!(e)?;
                e.rho_hat = Some(estimate_rho_hat(&spec, e.p, master, e.rho_configs)?.rho_hat);
            }
            _ => {}
        }
        Ok(())
    }
}

/// Artifacts of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Experiment-specific summary, also stored in the sidecar.
    pub summary: Value,
    pub rejections: u64,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct DiagRow<'a> {
    kind: &'a str,
    r: i64,
    n_samples: usize,
    estimate: f64,
    ci_low: f64,
    ci_high: f64,
}

fn norm_from(
    source: &NormSource,
    d: usize,
    margin: i64,
    default_l: i64,
    p: f64,
) -> Result<(chemdist_core::NormEstimate, u64), RunError> {
    let spec = BoxSpec::new(d, source.half_side.unwrap_or(default_l), margin)?;
    Ok(estimate_norm(&spec, p, source.seed.expect("resolved"), source.n, source.replications)?)
}

/// Run one experiment and write its artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let mut resolved = config.clone();
    resolved.resolve()?;
    let dir = resolved.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let name = resolved.experiment.name();
    let mut w = Writer { dir: &dir, files: Vec::new() };
    let seed = resolved.master_seed;
    let (summary, rejections) = match &resolved.experiment {
        Experiment::Sample(s) => {
            let spec = BoxSpec::new(s.d, s.half_side, 0)?;
            let cfg = EdgeConfiguration::sample(&spec, s.p, seed)?;
            let path = dir.join("sample.bin");
            let f = File::create(&path).map_err(|e| io_err(&path, e))?;
            cfg.write_binary(BufWriter::new(f))?;
            w.files.push(path);
            w.json("sample.json", &cfg.header())?;
            (serde_json::to_value(cfg.header()).unwrap(), 0)
        }
        Experiment::Dist(s) => {
            let spec = BoxSpec::new(s.d, s.half_side, 0)?;
            let cfg = EdgeConfiguration::sample(&spec, s.p, seed)?;
            let field = chemdist_core::bfs_distance(&cfg, &s.source)?;
            let d = field.at(&s.target)?;
            let geodesic = d.map(|_| field.geodesic(&s.target)).transpose()?.map(|g| g.vertices);
            let labels = ClusterLabels::label(&cfg);
            let star = match chemdist_core::star_distance(&cfg, &labels, &s.source, &s.target) {
                Ok(v) => Some(v),
                Err(chemdist_core::Error::NoGiant) => None,
                Err(e) => return Err(e.into()),
            };
            let stars = if star.is_some() {
                Some((cluster::project_star(&labels, &s.source)?, cluster::project_star(&labels, &s.target)?))
            } else {
                None
            };
            let dt = match s.t {
                Some(t) => {
                    let rho = s.rho_hat.ok_or_else(|| RunError::Validation("dist with t needs rho_hat".into()))?;
                    let params = RedParams::from_rho(t, rho)?;
                    let meso = MesoPartition::build(&spec, t)?;
                    Some(renormalized_distance(&cfg, &meso, &params, &s.source, &s.target)?)
                }
                None => None,
            };
            let out = json!({
                "D": d,
                "D_star": star,
                "source_star": stars.as_ref().map(|s| &s.0),
                "target_star": stars.as_ref().map(|s| &s.1),
                "D_t": dt,
                "geodesic": geodesic,
            });
            w.json("dist.json", &out)?;
            (out, 0)
        }
        Experiment::Mu(m) => {
            let spec = box_of!(m)?;
            let r = estimate_mu(&spec, m.p, seed, &m.y, &m.n_grid, m.replications)?;
            w.csv("mu.csv", &r.rows)?;
            w.csv("mu_records.csv", &r.records)?;
            (json!({ "mu": r.value, "doubling": r.doubling }), r.rejections)
        }
        Experiment::Var(m) => {
            let spec = box_of!(m)?;
            let r = variance_scaling(&spec, m.p, seed, &m.y, &m.n_grid, m.replications)?;
            w.csv("var.csv", &r.rows)?;
            w.csv("var_records.csv", &r.records)?;
            (json!({ "normalized_spread": r.normalized_spread() }), r.rejections)
        }
        Experiment::Tails(m) => {
            let spec = box_of!(m)?;
            let r = moderate_deviation_tails(&spec, m.p, seed, &m.y, m.n, &m.x_grid, m.replications)?;
            w.csv("tails.csv", &r.rows)?;
            w.csv("tails_records.csv", &r.records)?;
            (json!({ "mean": r.mean, "log_tail_decreasing": r.log_tail_decreasing(5) }), r.rejections)
        }
        Experiment::Gap(g) => {
            let spec = box_of!(g)?;
            let (mu, mu_rej) = norm_from(&g.mu, g.d, g.margin, g.half_side, g.p)?;
            let r = mean_gap(&spec, g.p, seed, &g.y, &g.n_grid, g.replications, &mu)?;
            w.csv("gap.csv", &r.rows)?;
            w.csv("gap_records.csv", &r.records)?;
            let nonneg = r.rows.iter().all(|row| row.nonnegative);
            (json!({ "nonnegative": nonneg, "doubling": r.doubling, "mu_rejections": mu_rej }), r.rejections + mu_rej)
        }
        Experiment::Shape(s) => {
            let spec = box_of!(s)?;
            let (mu, mu_rej) = match &s.mu {
                Some(src) => norm_from(src, s.d, s.margin, s.half_side, s.p)?,
                None => (chemdist_core::NormEstimate::l1(s.d)?, 0),
            };
            let r = shape_experiment(&spec, s.p, seed, &s.t_grid, &mu, s.replications)?;
            w.csv("shape.csv", &r.rows)?;
            w.csv("shape_radii.csv", &r.radii)?;
            (json!({ "mu_rejections": mu_rej }), r.rejections + mu_rej)
        }
        Experiment::Coupling(c) => {
            let spec = box_of!(c)?;
            let rho = c.rho_hat.expect("resolved");
            let r = coupling_experiment(&spec, c.p, seed, &c.y, &c.t_grid, rho, c.configs)?;
            w.csv("coupling.csv", &r.rows)?;
            (json!({ "order_violations": r.order_violations }), r.rejections)
        }
        Experiment::EfronStein(e) => {
            let spec = box_of!(e)?;
            let rho = e.rho_hat.expect("resolved");
            let r = efron_stein_experiment(&spec, e.p, seed, &e.y, e.t, rho, e.configs, e.draws)?;
            w.csv("efron-stein.csv", &r.rows)?;
            if e.verbose {
                let audit: Vec<_> = r.reports.iter().flat_map(|rep| rep.draws.iter().cloned()).collect();
                w.csv("efron-stein_audit.csv", &audit)?;
            }
            (serde_json::to_value(&r).unwrap(), 0)
        }
        Experiment::Skeleton(s) => {
            let spec = box_of!(s)?;
            let (mu, mu_rej) = norm_from(&s.mu, s.d, s.margin, s.half_side, s.p)?;
            let (table, h_rej) = HTable::<f64>::estimate(
                &spec,
                s.p,
                s.h.seed.expect("resolved"),
                s.h.radius.expect("resolved"),
                s.h.replications,
            )?;
            let c = match s.c {
                CSetting::Value(v) => CChoice::Fixed(v),
                CSetting::Word(AutoWord::Auto) => CChoice::Auto,
            };
            let r = skeleton_length_experiment(&spec, s.p, seed, &s.x, &s.n_grid, c, s.replications, &mu, &table)?;
            w.csv("skeleton.csv", &r.rows)?;
            let support = SupportFunctional::build(&mu, &s.x)?.check(&mu, 1e-9)?;
            let fractions: Vec<Value> = s.n_grid.iter().map(|&n| json!({ "n": n, "pass_fraction": r.pass_fraction(n) })).collect();
            let summary = json!({
                "C": r.c,
                "threshold": r.threshold,
                "below_threshold": r.below_threshold,
                "pass_fractions": fractions,
                "support_check": support,
            });
            (summary, r.rejections + mu_rej + h_rej)
        }
        Experiment::DiagTails(t) => {
            let spec = box_of!(t)?;
            let r = tail_diagnostics(&spec, t.p, seed, &t.r_grid, t.replications)?;
            let rows: Vec<DiagRow> = r
                .finite_cluster
                .iter()
                .map(|row| ("finite_cluster", row))
                .chain(r.holes.iter().map(|row| ("hole", row)))
                .map(|(kind, row)| DiagRow {
                    kind,
                    r: row.r,
                    n_samples: row.n_samples,
                    estimate: row.estimate,
                    ci_low: row.ci_low,
                    ci_high: row.ci_high,
                })
                .collect();
            w.csv("diag-tails.csv", &rows)?;
            (Value::Null, r.rejections)
        }
    };
    let meta = json!({
        "config": resolved,
        "version": VERSION,
        "rejections": rejections,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "summary": summary,
    });
    w.json(&format!("{name}.meta.json"), &meta)?;
    Ok(RunOutput { files: w.files, summary, rejections })
}

/// Run inside a dedicated thread pool when `threads` is given.
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput, RunError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Runtime(e.to_string()))?;
            pool.install(|| run(config))
        }
        None => run(config),
    }
}

/// Parse `key=value` overrides; values are read as JSON, falling back to a string.
pub fn parse_assignment(s: &str) -> Result<(String, Value), RunError> {
    let (k, v) = s.split_once('=').ok_or_else(|| RunError::Validation(format!("expected key=value, got '{s}'")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Merge a config file (if any) with inline overrides into a config for `experiment`.
pub fn assemble(
    experiment: &str,
    file: Option<&Path>,
    overrides: Vec<(String, Value)>,
    master_seed: Option<u64>,
    output_dir: Option<PathBuf>,
) -> Result<ExperimentConfig, RunError> {
    let mut root = match file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| RunError::Validation(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| RunError::Validation(format!("{}: {e}", path.display())))?
        }
        None => json!({}),
    };
    let obj = root.as_object_mut().ok_or_else(|| RunError::Validation("config must be a JSON object".into()))?;
    match obj.get("experiment").and_then(Value::as_str) {
        Some(name) if name != experiment => {
            return Err(RunError::Validation(format!("config is for '{name}', not '{experiment}'")));
        }
        _ => {
            obj.insert("experiment".into(), json!(experiment));
        }
    }
    let params = obj.entry("parameters").or_insert_with(|| json!({}));
    let params = params.as_object_mut().ok_or_else(|| RunError::Validation("parameters must be an object".into()))?;
    for (k, v) in overrides {
        params.insert(k, v);
    }
    if let Some(s) = master_seed {
        obj.insert("master_seed".into(), json!(s));
    }
    if let Some(d) = output_dir {
        obj.insert("output_dir".into(), json!(d));
    }
    obj.entry("output_dir").or_insert_with(|| json!("."));
    ExperimentConfig::from_value(root)
}

/// Read back a binary configuration dump.
pub fn load_configuration(path: &Path) -> Result<EdgeConfiguration, RunError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(EdgeConfiguration::read_binary(std::io::BufReader::new(f))?)
}
