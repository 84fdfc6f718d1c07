//! Renormalized distance `D^t`: the chemical distance with an extra "red" edge of
//! length `K·t` between any two vertices sharing a mesoscopic box.
//!
//! Red edges are never materialized. During the search a box is expanded the
//! first time one of its vertices is settled; since that vertex is the closest
//! member of the box, later members cannot improve the red relaxation.

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{project_star_index, ClusterLabels};
use crate::distance::{bfs_bounded, chemical_distance_index};
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, EdgeConfiguration};
use crate::meso::MesoPartition;
use crate::replicate::{replication_seed, sample_with_giant};
use crate::rng;
use crate::scalar::Scalar;
use crate::stats::{clopper_pearson, Summary};

/// How the red-edge multiplier was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum KRule {
    /// `K = factor · rho_hat`.
    RhoMultiple { factor: f64 },
    Fixed,
}

/// Default multiplier of `rho_hat` for `K`.
pub const DEFAULT_K_FACTOR: f64 = 8.0;

/// Red-edge parameters. The red length `K·t` is rounded up to an integer so
/// that all path lengths stay exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RedParams<T: Scalar> {
    t: i64,
    k: T,
    rho_hat: T,
    rule: KRule,
    red_length: u64,
}

impl<T: Scalar> RedParams<T> {
    pub fn new(t: i64, k: T, rho_hat: T, rule: KRule) -> Result<Self> {
        if t < 1 {
            return Err(Error::InvalidParameter(format!("meso scale t must be >= 1, got {t}")));
        }
        if !(k > T::of(4.0) * rho_hat) {
            return Err(Error::InvalidParameter(format!("K = {k} must exceed 4 rho_hat = {}", T::of(4.0) * rho_hat)));
        }
        let red_length = (k * T::of_int(t)).ceil().to_u64().ok_or_else(|| Error::InvalidParameter("K·t overflows".into()))?;
        Ok(RedParams { t, k, rho_hat, rule, red_length })
    }

    /// `K = 8 rho_hat`.
    pub fn from_rho(t: i64, rho_hat: T) -> Result<Self> {
        let factor = DEFAULT_K_FACTOR;
        Self::new(t, rho_hat * T::of(factor), rho_hat, KRule::RhoMultiple { factor })
    }

    pub fn t(&self) -> i64 {
        self.t
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn rho_hat(&self) -> T {
        self.rho_hat
    }

    pub fn rule(&self) -> KRule {
        self.rule
    }

    /// `K` actually used: `ceil(K·t) / t`, so that a red edge has length exactly `K·t`.
    pub fn effective_k(&self) -> T {
        T::of(self.red_length as f64) / T::of_int(self.t)
    }

    /// Integer length of a red edge, `ceil(K·t)`.
    pub fn red_length(&self) -> u64 {
        self.red_length
    }

    /// Good-box threshold `4·rho_hat·t`, floored to the integer grid of chemical distances.
    pub fn good_threshold(&self) -> u32 {
        (T::of(4.0) * self.rho_hat * T::of_int(self.t)).floor().to_u32().unwrap_or(u32::MAX)
    }
}

const INF: u64 = u64::MAX;

/// Circular bucket queue for non-negative integer weights bounded by `max_weight`.
struct BucketQueue {
    buckets: Vec<Vec<u32>>,
    cursor: u64,
    len: usize,
}

impl BucketQueue {
    fn new(max_weight: u64) -> Self {
        BucketQueue { buckets: vec![Vec::new(); max_weight as usize + 1], cursor: 0, len: 0 }
    }

    fn push(&mut self, key: u64, v: u32) {
        let n = self.buckets.len() as u64;
        self.buckets[(key % n) as usize].push(v);
        self.len += 1;
    }

    fn pop(&mut self) -> Option<(u64, u32)> {
        if self.len == 0 {
            return None;
        }
        let n = self.buckets.len() as u64;
        loop {
            if let Some(v) = self.buckets[(self.cursor % n) as usize].pop() {
                self.len -= 1;
                return Some((self.cursor, v));
            }
            self.cursor += 1;
        }
    }
}

/// Distances in the lattice-plus-red-edges graph.
#[derive(Debug, Clone)]
pub struct RenormField<'a> {
    cfg: &'a EdgeConfiguration,
    meso: &'a MesoPartition,
    red: u64,
    source: usize,
    dist: Vec<u64>,
}

impl<'a> RenormField<'a> {
    /// Exact search from `source`; stops once `target` (if any) is settled.
    pub fn search(cfg: &'a EdgeConfiguration, meso: &'a MesoPartition, red: u64, source: usize, target: Option<usize>) -> Self {
        let n = cfg.spec().vertex_count();
        let mut dist = vec![INF; n];
        let mut settled = vec![false; n];
        let mut expanded = vec![false; meso.box_count()];
        let mut queue = BucketQueue::new(red.max(1));
        dist[source] = 0;
        queue.push(0, source as u32);
        while let Some((key, v)) = queue.pop() {
            let v = v as usize;
            if settled[v] || key != dist[v] {
                continue;
            }
            settled[v] = true;
            if Some(v) == target {
                break;
            }
            let step = key + 1;
            cfg.for_each_open_neighbor(v, |u| {
                if step < dist[u] {
                    dist[u] = step;
                    queue.push(step, u as u32);
                }
            });
            let jump = key + red;
            for &b in meso.boxes_of_vertex(v) {
                if expanded[b as usize] {
                    continue;
                }
                expanded[b as usize] = true;
                for &u in meso.vertices_of(b as usize) {
                    let u = u as usize;
                    if jump < dist[u] {
                        dist[u] = jump;
                        queue.push(jump, u as u32);
                    }
                }
            }
        }
        RenormField { cfg, meso, red, source, dist }
    }

    pub fn get(&self, v: usize) -> Option<u64> {
        (self.dist[v] != INF).then_some(self.dist[v])
    }

    pub fn source(&self) -> usize {
        self.source
    }

    /// Canonical predecessor: smallest-index vertex `u` with `dist[u] + len(u, v) = dist[v]`.
    fn parent(&self, v: usize) -> Option<usize> {
        let dv = self.dist[v];
        if dv == 0 || dv == INF {
            return None;
        }
        let mut best: Option<usize> = None;
        let mut offer = |u: usize| {
            if best.is_none_or(|b| u < b) {
                best = Some(u);
            }
        };
        self.cfg.for_each_open_neighbor(v, |u| {
            if self.dist[u] != INF && self.dist[u] + 1 == dv {
                offer(u);
            }
        });
        if dv >= self.red {
            for &b in self.meso.boxes_of_vertex(v) {
                for &u in self.meso.vertices_of(b as usize) {
                    let u = u as usize;
                    if u != v && self.dist[u] != INF && self.dist[u] + self.red == dv {
                        offer(u);
                    }
                }
            }
        }
        best
    }

    /// Canonical shortest path from the source to `y` (as vertex indices).
    pub fn geodesic(&self, y: usize) -> Vec<usize> {
        let mut path = vec![y];
        let mut v = y;
        while let Some(u) = self.parent(v) {
            path.push(u);
            v = u;
        }
        path.reverse();
        path
    }

    /// Boxes containing at least one vertex of `path`, as a per-box indicator.
    pub fn visited_boxes(&self, path: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.meso.box_count()];
        for &v in path {
            for &b in self.meso.boxes_of_vertex(v) {
                seen[b as usize] = true;
            }
        }
        seen
    }
}

pub fn renormalized_distance_index(cfg: &EdgeConfiguration, meso: &MesoPartition, red: u64, x: usize, y: usize) -> u64 {
    RenormField::search(cfg, meso, red, x, Some(y)).get(y).expect("red edges connect the box")
}

/// `D^t(x, y)`.
pub fn renormalized_distance<T: Scalar>(
    cfg: &EdgeConfiguration,
    meso: &MesoPartition,
    params: &RedParams<T>,
    x: &[i64],
    y: &[i64],
) -> Result<u64> {
    check_meso(meso, params)?;
    let spec = cfg.spec();
    Ok(renormalized_distance_index(cfg, meso, params.red_length, spec.index_or_err(x)?, spec.index_or_err(y)?))
}

fn check_meso<T: Scalar>(meso: &MesoPartition, params: &RedParams<T>) -> Result<()> {
    if meso.t() != params.t {
        return Err(Error::InvalidParameter(format!("partition scale {} differs from red scale {}", meso.t(), params.t)));
    }
    Ok(())
}

/// Outcome of the good-box test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GoodBox {
    pub good: bool,
    /// False when some of the `3^d - 1` *-adjacent boxes fall outside the domain.
    pub complete: bool,
}

/// A box is good when every connected pair `(x, y)` with `x` in the box and
/// `y` in the box or a *-adjacent box has `D(x, y) <= 4 rho_hat t`.
pub fn good_box_predicate<T: Scalar>(
    cfg: &EdgeConfiguration,
    labels: &ClusterLabels,
    meso: &MesoPartition,
    key: &[i64],
    params: &RedParams<T>,
) -> Result<GoodBox> {
    let id = meso.id(key).ok_or_else(|| Error::InvalidParameter(format!("box {key:?} is not in the domain")))?;
    let neighbors = meso.star_neighbors(id);
    let complete = neighbors.len() + 1 == 3usize.pow(cfg.spec().dim() as u32);
    let mut targets: Vec<usize> = meso.vertices_of(id).iter().map(|&v| v as usize).collect();
    for &n in &neighbors {
        targets.extend(meso.vertices_of(n).iter().map(|&v| v as usize));
    }
    targets.sort_unstable();
    targets.dedup();
    let cap = params.good_threshold();
    for &x in meso.vertices_of(id) {
        let x = x as usize;
        let field = bfs_bounded(cfg, x, cap);
        let bad = targets.iter().any(|&y| labels.connected(x, y) && field.get(y).is_none());
        if bad {
            return Ok(GoodBox { good: false, complete });
        }
    }
    Ok(GoodBox { good: true, complete })
}

/// One row of the coupling / Efron-Stein tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormRow {
    pub t: i64,
    #[serde(rename = "K")]
    pub k: f64,
    pub n: usize,
    pub quantity: String,
    pub statistic: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Result of the coupling experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub rows: Vec<RenormRow>,
    /// Per `t`, number of configurations where `D^t(0*, y*) > D*(0, y)` (must be zero).
    pub order_violations: Vec<usize>,
    pub rejections: u64,
}

/// Fraction of configurations with `D^t(0*, y*) != D*(0, y)` for each `t`.
pub fn coupling_experiment(
    spec: &BoxSpec,
    p: f64,
    master_seed: u64,
    y: &[i64],
    t_grid: &[i64],
    rho_hat: f64,
    configs: usize,
) -> Result<CouplingReport> {
    let yi = spec.index_or_err(y)?;
    if spec.depth(yi) < spec.margin() {
        return Err(Error::InvalidParameter(format!("{y:?} is not a measurement point")));
    }
    if configs == 0 {
        return Err(Error::EmptySample);
    }
    let params: Vec<RedParams<f64>> = t_grid.iter().map(|&t| RedParams::from_rho(t, rho_hat)).collect::<Result<_>>()?;
    let partitions: Vec<MesoPartition> = t_grid.iter().map(|&t| MesoPartition::build(spec, t)).collect::<Result<_>>()?;
    let origin = spec.index_or_err(&vec![0; spec.dim()])?;
    let per_rep: Vec<(Vec<(bool, bool)>, u32)> = (0..configs)
        .into_par_iter()
        .map(|rep| -> Result<_> {
            let g = sample_with_giant(spec, p, replication_seed(master_seed, "coupling", rep))?;
            let o = project_star_index(&g.labels, origin)?;
            let ys = project_star_index(&g.labels, yi)?;
            let star = chemical_distance_index(&g.cfg, o, ys).expect("giant is connected") as u64;
            let flags = params
                .iter()
                .zip(&partitions)
                .map(|(pr, m)| {
                    let dt = renormalized_distance_index(&g.cfg, m, pr.red_length(), o, ys);
                    (dt != star, dt > star)
                })
                .collect();
            Ok((flags, g.rejections))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut order_violations = Vec::new();
    for (j, pr) in params.iter().enumerate() {
        let hits = per_rep.iter().filter(|(f, _)| f[j].0).count();
        let (lo, hi) = clopper_pearson(hits, configs, 0.95);
        rows.push(RenormRow {
            t: pr.t(),
            k: pr.effective_k(),
            n: configs,
            quantity: "mismatch_rate".into(),
            statistic: hits as f64 / configs as f64,
            ci_low: lo,
            ci_high: hi,
        });
        order_violations.push(per_rep.iter().filter(|(f, _)| f[j].1).count());
    }
    Ok(CouplingReport { rows, order_violations, rejections: per_rep.iter().map(|(_, r)| *r as u64).sum() })
}

/// Audit record of one single-box resampling draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawRecord {
    #[serde(rename = "box")]
    pub box_id: usize,
    pub draw: usize,
    /// `S^(i) - S`.
    pub delta: i64,
    pub visited: bool,
}

/// Single-box resampling of `S = D^t(x, y)` for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ResampleReport {
    pub s: u64,
    pub red_length: u64,
    pub t: i64,
    pub dim: usize,
    /// `R_i`: the canonical `D^t` geodesic passes through box `i`.
    pub visited: Vec<bool>,
    /// `Y`: number of boxes visited by the canonical geodesic.
    pub y_boxes: usize,
    pub draws: Vec<DrawRecord>,
    /// Monte Carlo estimate of `V_-`.
    pub v_minus_hat: f64,
}

impl ResampleReport {
    /// `S^(i) - S <= K t` on visited boxes and `<= 0` elsewhere.
    pub fn draw_bound_holds(&self, draw: &DrawRecord) -> bool {
        if draw.visited {
            draw.delta <= self.red_length as i64
        } else {
            draw.delta <= 0
        }
    }

    pub fn all_draws_bounded(&self) -> bool {
        self.draws.iter().all(|d| self.draw_bound_holds(d))
    }

    /// `Y <= 3^d (1 + D^t / t)`, compared exactly as `Y t <= 3^d (t + D^t)`.
    pub fn y_bound_holds(&self) -> bool {
        let pow = 3u64.pow(self.dim as u32);
        self.y_boxes as u64 * self.t as u64 <= pow * (self.t as u64 + self.s)
    }

    /// `V_- <= 3^d K^2 t (D^t + t)` with `K t` the red length.
    pub fn v_minus_bound(&self) -> f64 {
        let pow = 3f64.powi(self.dim as i32);
        let red = self.red_length as f64;
        pow * red * red * (self.s as f64 + self.t as f64) / self.t as f64
    }

    pub fn v_minus_bound_holds(&self) -> bool {
        self.v_minus_hat <= self.v_minus_bound()
    }
}

/// Resample each box's edges `draws` times (seeded by `(seed, "resample", box, draw)`),
/// recompute `D^t(x, y)` and accumulate `V_-`.
#[allow(clippy::too_many_arguments)]
pub fn efron_stein_resample<T: Scalar>(
    cfg: &EdgeConfiguration,
    meso: &MesoPartition,
    params: &RedParams<T>,
    x: &[i64],
    y: &[i64],
    draws: usize,
    seed: u64,
) -> Result<ResampleReport> {
    check_meso(meso, params)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("at least one draw per box is required".into()));
    }
    let spec = cfg.spec();
    let (xi, yi) = (spec.index_or_err(x)?, spec.index_or_err(y)?);
    let red = params.red_length();
    let field = RenormField::search(cfg, meso, red, xi, Some(yi));
    let s = field.get(yi).expect("red edges connect the box");
    let visited = field.visited_boxes(&field.geodesic(yi));
    let stream = rng::derive_tag(seed, "resample");
    let per_box: Vec<Vec<DrawRecord>> = (0..meso.box_count())
        .into_par_iter()
        .map(|b| {
            let slots: Vec<usize> = meso.edges_of(b).collect();
            (0..draws)
                .map(|draw| {
                    let draw_seed = rng::derive(rng::derive(stream, b as u64), draw as u64);
                    let replaced = cfg.with_resampled(&slots, draw_seed);
                    let si = renormalized_distance_index(&replaced, meso, red, xi, yi);
                    DrawRecord { box_id: b, draw, delta: si as i64 - s as i64, visited: visited[b] }
                })
                .collect()
        })
        .collect();
    let v_minus_hat = per_box
        .iter()
        .map(|ds| ds.iter().map(|d| (d.delta.max(0) as f64).powi(2)).sum::<f64>() / draws as f64)
        .sum();
    Ok(ResampleReport {
        s,
        red_length: red,
        t: params.t(),
        dim: spec.dim(),
        y_boxes: visited.iter().filter(|&&v| v).count(),
        visited,
        draws: per_box.into_iter().flatten().collect(),
        v_minus_hat,
    })
}

/// Aggregate Efron-Stein check over many configurations.
#[derive(Debug, Clone, Serialize)]
pub struct EfronSteinSummary {
    pub rows: Vec<RenormRow>,
    pub var_hat: f64,
    pub var_se: f64,
    pub v_minus_mean: f64,
    pub v_minus_se: f64,
    pub draws_checked: usize,
    pub draw_violations: usize,
    pub y_violations: usize,
    pub v_minus_violations: usize,
    /// `Var(D^t) <= mean(V_-) + 3 SE`.
    pub ess_holds: bool,
    #[serde(skip)]
    pub reports: Vec<ResampleReport>,
}

#[allow(clippy::too_many_arguments)]
pub fn efron_stein_experiment(
    spec: &BoxSpec,
    p: f64,
    master_seed: u64,
    y: &[i64],
    t: i64,
    rho_hat: f64,
    configs: usize,
    draws: usize,
) -> Result<EfronSteinSummary> {
    if configs < 2 {
        return Err(Error::InvalidParameter("the Efron-Stein check needs at least 2 configurations".into()));
    }
    let params = RedParams::<f64>::from_rho(t, rho_hat)?;
    let meso = MesoPartition::build(spec, t)?;
    let origin = vec![0; spec.dim()];
    let reports: Vec<ResampleReport> = (0..configs)
        .map(|rep| {
            let seed = replication_seed(master_seed, "efron-stein", rep);
            let cfg = EdgeConfiguration::sample(spec, p, seed)?;
            efron_stein_resample(&cfg, &meso, &params, &origin, y, draws, seed)
        })
        .collect::<Result<_>>()?;
    let s = Summary::<f64>::of_ints(&reports.iter().map(|r| r.s).collect::<Vec<_>>());
    let v = Summary::<f64>::of(&reports.iter().map(|r| r.v_minus_hat).collect::<Vec<_>>());
    let k = params.effective_k();
    let row = |quantity: &str, stat: f64, se: f64| RenormRow {
        t,
        k,
        n: configs,
        quantity: quantity.into(),
        statistic: stat,
        ci_low: stat - crate::stats::Z95 * se,
        ci_high: stat + crate::stats::Z95 * se,
    };
    let rows = vec![
        row("mean_dt", s.mean, s.se),
        row("var_dt", s.variance, s.variance_se()),
        row("v_minus_mean", v.mean, v.se),
    ];
    Ok(EfronSteinSummary {
        rows,
        var_hat: s.variance,
        var_se: s.variance_se(),
        v_minus_mean: v.mean,
        v_minus_se: v.se,
        draws_checked: reports.iter().map(|r| r.draws.len()).sum(),
        draw_violations: reports.iter().map(|r| r.draws.iter().filter(|d| !r.draw_bound_holds(d)).count()).sum(),
        y_violations: reports.iter().filter(|r| !r.y_bound_holds()).count(),
        v_minus_violations: reports.iter().filter(|r| !r.v_minus_bound_holds()).count(),
        ess_holds: s.variance <= v.mean + 3.0 * v.se,
        reports,
    })
}
