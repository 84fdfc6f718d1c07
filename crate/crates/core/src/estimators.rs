//! Monte Carlo experiments on the regularized distance `D*`.
//!
//! Every replication draws its configuration from
//! `replication_seed(master, experiment, rep)` (rejecting configurations
//! without a spanning giant), so outputs depend only on the parameters and the
//! master seed. Replications run in parallel and are aggregated by index.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{finite_cluster_diameter_tail, hole_size_tail, project_star_index, ClusterLabels, TailRow};
use crate::distance::{bfs_from, distances_to};
use crate::error::{Error, Result};
use crate::lattice::{l1_norm, BoxSpec, EdgeConfiguration};
use crate::norm::{direction_fan, orbit_representative, symmetry_orbit, DirectionEstimate, EstimateMethod, NormEstimate};
use crate::replicate::{replication_seed, sample_with_giant};
use crate::stats::{clopper_pearson, Summary};

/// One raw measurement, keyed by experiment id (which carries the scale) and replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub replication: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub half_side: i64,
    pub p: f64,
    pub seed: u64,
    pub value: f64,
}

fn scale(y: &[i64], n: i64) -> Vec<i64> {
    y.iter().map(|c| c * n).collect()
}

fn origin(spec: &BoxSpec) -> usize {
    spec.index(&vec![0; spec.dim()]).expect("origin lies in the box")
}

/// `D*(0, z)` for every target `z`, from one giant-conditioned configuration.
fn star_distances(spec: &BoxSpec, p: f64, seed: u64, targets: &[Vec<i64>]) -> Result<(Vec<u32>, u32)> {
    let g = sample_with_giant(spec, p, seed)?;
    let o = project_star_index(&g.labels, origin(spec))?;
    let projected: Vec<usize> = targets
        .iter()
        .map(|z| project_star_index(&g.labels, spec.index_or_err(z)?))
        .collect::<Result<_>>()?;
    let d = distances_to(&g.cfg, o, &projected);
    Ok((d.into_iter().map(|x| x.expect("giant cluster is connected")).collect(), g.rejections))
}

fn check_grid(n_grid: &[i64]) -> Result<i64> {
    if n_grid.is_empty() || n_grid.iter().any(|&n| n < 1) {
        return Err(Error::InvalidParameter("n grid must be non-empty and positive".into()));
    }
    Ok(*n_grid.iter().max().unwrap())
}

fn check_direction(spec: &BoxSpec, y: &[i64]) -> Result<()> {
    if y.len() != spec.dim() || y.iter().all(|&c| c == 0) {
        return Err(Error::InvalidParameter(format!("direction {y:?} must be a non-zero vector of dimension {}", spec.dim())));
    }
    Ok(())
}

/// `h(ny)/n` at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuRow {
    pub direction: String,
    pub n: i64,
    pub estimate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `h(2ny)/(2n) <= h(ny)/n + 2 SE` along a doubling pair of the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingCheck {
    pub n: i64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuEstimate {
    pub rows: Vec<MuRow>,
    /// Estimate at the largest `n`.
    pub value: DirectionEstimate<f64>,
    pub doubling: Vec<DoublingCheck>,
    pub rejections: u64,
    pub records: Vec<ExperimentRecord>,
}

fn fmt_vec(y: &[i64]) -> String {
    y.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

/// Estimate `mu(y)` through `h(ny)/n = E[D*(0, ny)]/n`, pooled over the symmetry orbit of `y`.
pub fn estimate_mu(spec: &BoxSpec, p: f64, seed: u64, y: &[i64], n_grid: &[i64], replications: usize) -> Result<MuEstimate> {
    check_direction(spec, y)?;
    let n_max = check_grid(n_grid)?;
    spec.require_reach(n_max * l1_norm(y))?;
    if replications == 0 {
        return Err(Error::EmptySample);
    }
    let orbit = symmetry_orbit(y);
    let targets: Vec<Vec<i64>> = n_grid.iter().flat_map(|&n| orbit.iter().map(move |g| scale(g, n))).collect();
    let per_rep: Vec<(Vec<f64>, u32)> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let (d, rej) = star_distances(spec, p, replication_seed(seed, "mu", rep), &targets)?;
            let pooled = d
                .chunks(orbit.len())
                .zip(n_grid)
                .map(|(c, &n)| c.iter().map(|&v| v as f64).sum::<f64>() / (orbit.len() as f64 * n as f64))
                .collect();
            Ok((pooled, rej))
        })
        .collect::<Result<_>>()?;
    let dir = fmt_vec(y);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (j, &n) in n_grid.iter().enumerate() {
        let vals: Vec<f64> = per_rep.iter().map(|(v, _)| v[j]).collect();
        let s = Summary::<f64>::of(&vals);
        let (lo, hi) = s.ci95();
        rows.push(MuRow { direction: dir.clone(), n, estimate: s.mean, se: s.se, ci_low: lo, ci_high: hi });
        records.extend(vals.iter().enumerate().map(|(rep, &v)| ExperimentRecord {
            experiment: format!("mu/n={n}"),
            replication: rep,
            d: spec.dim(),
            half_side: spec.half_side(),
            p,
            seed,
            value: v,
        }));
    }
    let doubling = doubling_checks(&rows.iter().map(|r| (r.n, r.estimate, r.se)).collect::<Vec<_>>());
    let last = rows.iter().max_by_key(|r| r.n).unwrap();
    let value = DirectionEstimate {
        direction: y.to_vec(),
        value: last.estimate,
        se: last.se,
        ci_low: last.ci_low,
        ci_high: last.ci_high,
    };
    Ok(MuEstimate {
        value,
        doubling,
        rejections: per_rep.iter().map(|(_, r)| *r as u64).sum(),
        rows,
        records,
    })
}

/// Doubling comparisons for `(n, per-n value, standard error)` triples.
fn doubling_checks(rows: &[(i64, f64, f64)]) -> Vec<DoublingCheck> {
    let by_n: BTreeMap<i64, (f64, f64)> = rows.iter().map(|&(n, v, s)| (n, (v, s))).collect();
    by_n.iter()
        .filter_map(|(&n, &(v, s))| {
            by_n.get(&(2 * n)).map(|&(v2, s2)| {
                let slack = 2.0 * (s * s + s2 * s2).sqrt();
                DoublingCheck { n, slack, holds: v2 <= v + slack }
            })
        })
        .collect()
}

/// Estimate `mu` on the whole direction fan at scale `n`, one search per replication.
pub fn estimate_norm(spec: &BoxSpec, p: f64, seed: u64, n: i64, replications: usize) -> Result<(NormEstimate<f64>, u64)> {
    if n < 1 || replications == 0 {
        return Err(Error::InvalidParameter("norm estimation needs n >= 1 and at least one replication".into()));
    }
    let fan = direction_fan(spec.dim());
    let reach = fan.iter().map(|u| l1_norm(u)).max().unwrap_or(1) * n;
    spec.require_reach(reach)?;
    let mut orbits: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, u) in fan.iter().enumerate() {
        orbits.entry(orbit_representative(u)).or_default().push(i);
    }
    let targets: Vec<Vec<i64>> = fan.iter().map(|u| scale(u, n)).collect();
    let per_rep: Vec<(Vec<u32>, u32)> = (0..replications)
        .into_par_iter()
        .map(|rep| star_distances(spec, p, replication_seed(seed, "norm", rep), &targets))
        .collect::<Result<_>>()?;
    let mut estimates = Vec::with_capacity(fan.len());
    for members in orbits.values() {
        let vals: Vec<f64> = per_rep
            .iter()
            .map(|(d, _)| members.iter().map(|&i| d[i] as f64).sum::<f64>() / (members.len() as f64 * n as f64))
            .collect();
        let s = Summary::<f64>::of(&vals);
        let (lo, hi) = s.ci95();
        for &i in members {
            estimates.push(DirectionEstimate { direction: fan[i].clone(), value: s.mean, se: s.se, ci_low: lo, ci_high: hi });
        }
    }
    let method = EstimateMethod { n, replications, master_seed: Some(seed), p };
    let rejections = per_rep.iter().map(|(_, r)| *r as u64).sum();
    Ok((NormEstimate::new(spec.dim(), estimates, method)?, rejections))
}

/// Variance of `D*(0, ny)` at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarRow {
    pub n: i64,
    pub replications: usize,
    pub mean: f64,
    pub var_hat: f64,
    pub var_se: f64,
    /// `var_hat / (|ny|_1 log(1 + |ny|_1))`.
    pub normalized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarReport {
    pub rows: Vec<VarRow>,
    pub rejections: u64,
    pub records: Vec<ExperimentRecord>,
}

impl VarReport {
    /// Max over min of the normalized column.
    pub fn normalized_spread(&self) -> f64 {
        let v: Vec<f64> = self.rows.iter().map(|r| r.normalized).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

fn collect_samples(
    spec: &BoxSpec,
    p: f64,
    seed: u64,
    experiment: &str,
    targets: &[Vec<i64>],
    replications: usize,
) -> Result<(Vec<Vec<u32>>, u64)> {
    let per_rep: Vec<(Vec<u32>, u32)> = (0..replications)
        .into_par_iter()
        .map(|rep| star_distances(spec, p, replication_seed(seed, experiment, rep), targets))
        .collect::<Result<_>>()?;
    let rejections = per_rep.iter().map(|(_, r)| *r as u64).sum();
    Ok((per_rep.into_iter().map(|(d, _)| d).collect(), rejections))
}

/// Unbiased sample variance of `D*(0, ny)` for each `n`.
pub fn variance_scaling(spec: &BoxSpec, p: f64, seed: u64, y: &[i64], n_grid: &[i64], replications: usize) -> Result<VarReport> {
    check_direction(spec, y)?;
    if replications < 2 {
        return Err(Error::InvalidParameter("variance estimation needs at least 2 replications".into()));
    }
    let n_max = check_grid(n_grid)?;
    spec.require_reach(n_max * l1_norm(y))?;
    let targets: Vec<Vec<i64>> = n_grid.iter().map(|&n| scale(y, n)).collect();
    let (samples, rejections) = collect_samples(spec, p, seed, "var", &targets, replications)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (j, &n) in n_grid.iter().enumerate() {
        let vals: Vec<u64> = samples.iter().map(|d| d[j] as u64).collect();
        let s = Summary::<f64>::of_ints(&vals);
        let norm = (n * l1_norm(y)) as f64;
        rows.push(VarRow {
            n,
            replications,
            mean: s.mean,
            var_hat: s.variance,
            var_se: s.variance_se(),
            normalized: s.variance / (norm * norm.ln_1p()),
        });
        records.extend(vals.iter().enumerate().map(|(rep, &v)| ExperimentRecord {
            experiment: format!("var/n={n}"),
            replication: rep,
            d: spec.dim(),
            half_side: spec.half_side(),
            p,
            seed,
            value: v as f64,
        }));
    }
    Ok(VarReport { rows, rejections, records })
}

/// Empirical `P(|D* - mean| > x sqrt(|ny|_1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailsRow {
    pub x: f64,
    pub threshold: f64,
    pub count: usize,
    pub n_samples: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `x <= sqrt(|ny|_1)`: inside the upper end of the moderate-deviation window.
    pub in_window: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailsReport {
    pub rows: Vec<TailsRow>,
    /// Sample mean used for centring; the tail estimates inherit its small bias.
    pub mean: f64,
    pub rejections: u64,
    pub records: Vec<ExperimentRecord>,
}

impl TailsReport {
    /// Log-tail strictly decreasing between consecutive `x` wherever both counts are at least `min_count`.
    pub fn log_tail_decreasing(&self, min_count: usize) -> bool {
        self.rows
            .windows(2)
            .filter(|w| w[0].count >= min_count && w[1].count >= min_count)
            .all(|w| w[1].estimate.ln() < w[0].estimate.ln())
    }
}

pub fn moderate_deviation_tails(
    spec: &BoxSpec,
    p: f64,
    seed: u64,
    y: &[i64],
    n: i64,
    x_grid: &[f64],
    replications: usize,
) -> Result<TailsReport> {
    check_direction(spec, y)?;
    check_grid(&[n])?;
    if replications < 2 {
        return Err(Error::InvalidParameter("tail estimation needs at least 2 replications".into()));
    }
    spec.require_reach(n * l1_norm(y))?;
    let (samples, rejections) = collect_samples(spec, p, seed, "tails", &[scale(y, n)], replications)?;
    let vals: Vec<u64> = samples.iter().map(|d| d[0] as u64).collect();
    let s = Summary::<f64>::of_ints(&vals);
    let root = ((n * l1_norm(y)) as f64).sqrt();
    let rows = x_grid
        .iter()
        .map(|&x| {
            let threshold = x * root;
            let count = vals.iter().filter(|&&v| (v as f64 - s.mean).abs() > threshold).count();
            let (lo, hi) = clopper_pearson(count, replications, 0.95);
            TailsRow {
                x,
                threshold,
                count,
                n_samples: replications,
                estimate: count as f64 / replications as f64,
                ci_low: lo,
                ci_high: hi,
                in_window: x <= root,
            }
        })
        .collect();
    let records = vals
        .iter()
        .enumerate()
        .map(|(rep, &v)| ExperimentRecord {
            experiment: format!("tails/n={n}"),
            replication: rep,
            d: spec.dim(),
            half_side: spec.half_side(),
            p,
            seed,
            value: v as f64,
        })
        .collect();
    Ok(TailsReport { rows, mean: s.mean, rejections, records })
}

/// `h(ny) - n mu(y)` at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub n: i64,
    pub h_hat: f64,
    pub mu_hat: f64,
    pub gap: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `gap / (sqrt(|ny|_1) log(1 + |ny|_1))`.
    pub normalized: f64,
    /// `h(ny)/n - mu(y)`.
    pub per_unit_excess: f64,
    /// `gap >= -2 SE`.
    pub nonnegative: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Doubling checks on `h(ny)/n - mu(y)`.
    pub doubling: Vec<DoublingCheck>,
    pub rejections: u64,
    pub records: Vec<ExperimentRecord>,
}

/// Gap between the mean regularized distance and the norm estimate, which
/// must come from an independent seed stream.
pub fn mean_gap(
    spec: &BoxSpec,
    p: f64,
    seed: u64,
    y: &[i64],
    n_grid: &[i64],
    replications: usize,
    mu_est: &NormEstimate<f64>,
) -> Result<GapReport> {
    check_direction(spec, y)?;
    if mu_est.method().master_seed == Some(seed) {
        return Err(Error::DependentSeeds(seed));
    }
    if replications < 2 {
        return Err(Error::InvalidParameter("mean gap needs at least 2 replications".into()));
    }
    let n_max = check_grid(n_grid)?;
    spec.require_reach(n_max * l1_norm(y))?;
    let (mu_y, mu_se) = match mu_est.raw(y) {
        Some(v) => v,
        None => (mu_est.norm_int(y)?, 0.0),
    };
    let targets: Vec<Vec<i64>> = n_grid.iter().map(|&n| scale(y, n)).collect();
    let (samples, rejections) = collect_samples(spec, p, seed, "gap", &targets, replications)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut per_unit = Vec::new();
    for (j, &n) in n_grid.iter().enumerate() {
        let vals: Vec<u64> = samples.iter().map(|d| d[j] as u64).collect();
        let s = Summary::<f64>::of_ints(&vals);
        let nf = n as f64;
        let mu_hat = nf * mu_y;
        let gap = s.mean - mu_hat;
        let se = (s.se * s.se + (nf * mu_se).powi(2)).sqrt();
        let norm = (n * l1_norm(y)) as f64;
        rows.push(GapRow {
            n,
            h_hat: s.mean,
            mu_hat,
            gap,
            se,
            ci_low: gap - crate::stats::Z95 * se,
            ci_high: gap + crate::stats::Z95 * se,
            normalized: gap / (norm.sqrt() * norm.ln_1p()),
            per_unit_excess: s.mean / nf - mu_y,
            nonnegative: gap >= -2.0 * se,
        });
        per_unit.push((n, s.mean / nf - mu_y, s.se / nf));
        records.extend(vals.iter().enumerate().map(|(rep, &v)| ExperimentRecord {
            experiment: format!("gap/n={n}"),
            replication: rep,
            d: spec.dim(),
            half_side: spec.half_side(),
            p,
            seed,
            value: v as f64,
        }));
    }
    Ok(GapReport { rows, doubling: doubling_checks(&per_unit), rejections, records })
}

/// Giant-cluster vertices within chemical distance `t` of `0*`.
pub fn chemical_ball(cfg: &EdgeConfiguration, labels: &ClusterLabels, t: u32) -> Result<Vec<Vec<i64>>> {
    let spec = cfg.spec();
    let o = project_star_index(labels, origin(spec))?;
    let field = crate::distance::bfs_bounded(cfg, o, t);
    Ok(field.reached().map(|(v, _)| spec.coords(v)).collect())
}

/// Directional radius of the chemical ball along one fan direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusRow {
    pub replication: usize,
    pub t: i64,
    pub direction: String,
    /// Largest `s` with `D*(0, s u) <= t`.
    pub radius: i64,
    /// Distance from 1 to the lattice bracket `[r mu(u)/t, (r+1) mu(u)/t]`.
    pub deviation: f64,
}

/// Shape discrepancy at one radius, averaged over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeRow {
    pub t: i64,
    pub replications: usize,
    pub max_deviation: f64,
    pub max_deviation_se: f64,
    /// `max (t - mu(x)) / (sqrt(t) log t)` over giant points outside the ball.
    pub inner_margin: f64,
    /// `max (mu(x) - t) / (sqrt(t) log t)` over points of the ball.
    pub outer_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeReport {
    pub rows: Vec<ShapeRow>,
    pub radii: Vec<RadiusRow>,
    pub rejections: u64,
}

/// Distance from 1 to the interval `[lo, hi]`.
fn bracket_deviation(lo: f64, hi: f64) -> f64 {
    if lo > 1.0 {
        lo - 1.0
    } else if hi < 1.0 {
        1.0 - hi
    } else {
        0.0
    }
}

/// Compare the chemical ball `B^0(t)` around `0*` with the estimated `mu`-ball.
pub fn shape_experiment(
    spec: &BoxSpec,
    p: f64,
    seed: u64,
    t_grid: &[i64],
    mu_est: &NormEstimate<f64>,
    replications: usize,
) -> Result<ShapeReport> {
    let reach = spec.half_side() - spec.margin();
    let t_max = check_grid(t_grid)?;
    if t_max > reach {
        return Err(Error::BoxTooSmall { required: t_max + spec.margin(), actual: spec.half_side() });
    }
    if replications == 0 {
        return Err(Error::EmptySample);
    }
    let fan = direction_fan(spec.dim());
    let fan_norm: Vec<f64> = fan.iter().map(|u| mu_est.norm_int(u)).collect::<Result<_>>()?;
    let n = spec.vertex_count();
    let inside: Vec<bool> = (0..n).map(|v| spec.depth(v) >= spec.margin()).collect();
    let mu_of: Vec<f64> = (0..n)
        .map(|v| if inside[v] { mu_est.norm_int(&spec.coords(v)) } else { Ok(f64::NAN) })
        .collect::<Result<_>>()?;
    type RepOut = (Vec<Vec<i64>>, Vec<(f64, f64)>, u32);
    let per_rep: Vec<RepOut> = (0..replications)
        .into_par_iter()
        .map(|rep| -> Result<RepOut> {
            let g = sample_with_giant(spec, p, replication_seed(seed, "shape", rep))?;
            let o = project_star_index(&g.labels, origin(spec))?;
            let field = bfs_from(&g.cfg, o);
            let mut radii = Vec::with_capacity(fan.len());
            for u in &fan {
                let umax = u.iter().map(|c| c.abs()).max().unwrap();
                let steps = reach / umax;
                let along: Vec<u32> = (0..=steps)
                    .map(|s| {
                        let z = spec.index(&scale(u, s)).expect("ray stays in box");
                        let zs = project_star_index(&g.labels, z)?;
                        Ok(field.get(zs).expect("giant cluster is connected"))
                    })
                    .collect::<Result<_>>()?;
                let per_t = t_grid
                    .iter()
                    .map(|&t| {
                        if along[steps as usize] as i64 <= t {
                            return Err(Error::BoxTooSmall { required: spec.half_side() + t, actual: spec.half_side() });
                        }
                        Ok(along.iter().rposition(|&d| d as i64 <= t).unwrap_or(0) as i64)
                    })
                    .collect::<Result<Vec<i64>>>()?;
                radii.push(per_t);
            }
            let margins = t_grid
                .iter()
                .map(|&t| {
                    let (mut inner, mut outer) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                    for v in (0..n).filter(|&v| inside[v] && g.labels.in_giant(v)) {
                        let dv = field.get(v).expect("giant cluster is connected") as i64;
                        if dv <= t {
                            outer = outer.max(mu_of[v] - t as f64);
                        } else {
                            inner = inner.max(t as f64 - mu_of[v]);
                        }
                    }
                    let unit = (t as f64).sqrt() * (t as f64).ln().max(f64::MIN_POSITIVE);
                    (inner / unit, outer / unit)
                })
                .collect();
            Ok((radii, margins, g.rejections))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut radius_rows = Vec::new();
    for (j, &t) in t_grid.iter().enumerate() {
        let mut maxima = Vec::with_capacity(replications);
        for (rep, (radii, _, _)) in per_rep.iter().enumerate() {
            let mut worst = 0.0f64;
            for (i, u) in fan.iter().enumerate() {
                let r = radii[i][j];
                let tf = t as f64;
                let dev = bracket_deviation(r as f64 * fan_norm[i] / tf, (r + 1) as f64 * fan_norm[i] / tf);
                worst = worst.max(dev);
                radius_rows.push(RadiusRow { replication: rep, t, direction: fmt_vec(u), radius: r, deviation: dev });
            }
            maxima.push(worst);
        }
        let s = Summary::<f64>::of(&maxima);
        let inner = Summary::<f64>::of(&per_rep.iter().map(|r| r.1[j].0).collect::<Vec<_>>());
        let outer = Summary::<f64>::of(&per_rep.iter().map(|r| r.1[j].1).collect::<Vec<_>>());
        rows.push(ShapeRow {
            t,
            replications,
            max_deviation: s.mean,
            max_deviation_se: s.se,
            inner_margin: inner.mean,
            outer_margin: outer.mean,
        });
    }
    Ok(ShapeReport { rows, radii: radius_rows, rejections: per_rep.iter().map(|r| r.2 as u64).sum() })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailDiagnostics {
    pub finite_cluster: Vec<TailRow>,
    pub holes: Vec<TailRow>,
    pub rejections: u64,
}

/// Finite-cluster diameter and giant-hole tails over giant-conditioned samples.
pub fn tail_diagnostics(spec: &BoxSpec, p: f64, seed: u64, r_grid: &[i64], replications: usize) -> Result<TailDiagnostics> {
    if replications == 0 {
        return Err(Error::EmptySample);
    }
    let samples: Vec<(ClusterLabels, u32)> = (0..replications)
        .into_par_iter()
        .map(|rep| sample_with_giant(spec, p, replication_seed(seed, "diag-tails", rep)).map(|g| (g.labels, g.rejections)))
        .collect::<Result<_>>()?;
    let rejections = samples.iter().map(|s| s.1 as u64).sum();
    let labels: Vec<ClusterLabels> = samples.into_iter().map(|s| s.0).collect();
    Ok(TailDiagnostics {
        finite_cluster: finite_cluster_diameter_tail(&labels, r_grid)?,
        holes: hole_size_tail(&labels, r_grid)?,
        rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(l: i64, margin: i64) -> BoxSpec {
        BoxSpec::new(2, l, margin).unwrap()
    }

    #[test]
    fn mu_is_l1_at_full_occupation() {
        let s = spec(20, 2);
        let m = estimate_mu(&s, 1.0, 3, &[1, 0], &[2, 4, 8], 3).unwrap();
        for r in &m.rows {
            assert_eq!(r.estimate, 1.0);
            assert_eq!(r.se, 0.0);
        }
        assert!(m.doubling.iter().all(|c| c.holds));
        let diag = estimate_mu(&s, 1.0, 3, &[2, 1], &[2, 4], 2).unwrap();
        assert_eq!(diag.value.value, 3.0);
    }

    #[test]
    fn mu_rejects_small_box() {
        let s = spec(10, 2);
        assert!(matches!(estimate_mu(&s, 0.7, 1, &[1, 0], &[16], 2), Err(Error::BoxTooSmall { required: 18, .. })));
    }

    #[test]
    fn norm_fan_at_full_occupation() {
        let s = spec(12, 0);
        let (n, rej) = estimate_norm(&s, 1.0, 1, 3, 2).unwrap();
        assert_eq!(rej, 0);
        for e in n.directions() {
            assert_eq!(e.value, l1_norm(&e.direction) as f64);
        }
    }

    #[test]
    fn variance_needs_two_replications() {
        let s = spec(10, 1);
        assert!(variance_scaling(&s, 0.7, 1, &[1, 0], &[2], 1).is_err());
        let v = variance_scaling(&s, 1.0, 1, &[1, 0], &[1, 4], 3).unwrap();
        assert!(v.rows.iter().all(|r| r.var_hat == 0.0 && r.normalized.is_finite()));
    }

    #[test]
    fn tails_at_full_occupation() {
        let s = spec(10, 1);
        let t = moderate_deviation_tails(&s, 1.0, 1, &[1, 0], 5, &[0.0, 1.0], 4).unwrap();
        assert!(t.rows.iter().all(|r| r.estimate == 0.0));
    }

    #[test]
    fn gap_rejects_shared_seed() {
        let s = spec(10, 1);
        let (mu, _) = estimate_norm(&s, 1.0, 5, 2, 2).unwrap();
        assert!(matches!(mean_gap(&s, 1.0, 5, &[1, 0], &[2], 2, &mu), Err(Error::DependentSeeds(5))));
        let g = mean_gap(&s, 1.0, 6, &[1, 0], &[2, 4], 2, &mu).unwrap();
        assert!(g.rows.iter().all(|r| r.gap == 0.0 && r.nonnegative));
    }

    #[test]
    fn shape_exact_at_full_occupation() {
        let s = spec(14, 1);
        let mu = NormEstimate::<f64>::l1(2).unwrap();
        let r = shape_experiment(&s, 1.0, 1, &[5, 10], &mu, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.max_deviation == 0.0));
        assert!(r.rows.iter().all(|row| row.outer_margin <= 0.0));
        assert!(shape_experiment(&s, 1.0, 1, &[14], &mu, 1).is_err());
    }

    #[test]
    fn unit_ball_is_origin_and_neighbors() {
        let s = spec(3, 0);
        let cfg = EdgeConfiguration::open(&s);
        let labels = ClusterLabels::label(&cfg);
        let mut ball = chemical_ball(&cfg, &labels, 1).unwrap();
        ball.sort();
        assert_eq!(ball, vec![vec![-1, 0], vec![0, -1], vec![0, 0], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn bracket() {
        assert_eq!(bracket_deviation(0.9, 1.1), 0.0);
        assert!((bracket_deviation(1.2, 1.3) - 0.2).abs() < 1e-12);
        assert!((bracket_deviation(0.5, 0.8) - 0.2).abs() < 1e-12);
    }
}
