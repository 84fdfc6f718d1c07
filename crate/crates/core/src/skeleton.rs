//! Supporting functionals, the sets `Q_x`, skeletons of paths, and the
//! skeleton-length experiment.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::project_star_index;
use crate::distance::bfs_from;
use crate::error::{Error, Result};
use crate::lattice::{l1_norm, BoxSpec};
use crate::norm::{direction_fan, orbit_representative, NormEstimate};
use crate::replicate::{replication_seed, sample_with_giant};
use crate::scalar::Scalar;
use crate::stats::{Summary, Z95};

fn rel_tol<T: Scalar>() -> T {
    T::of(1e-9).max(T::epsilon() * T::of(64.0))
}

fn to_real<T: Scalar>(y: &[i64]) -> Vec<T> {
    y.iter().map(|&c| T::of_int(c)).collect()
}

/// A linear form `mu_x` with `mu_x(x) = mu(x)` supporting the `mu`-ball of radius `mu(x)` at `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportFunctional<T: Scalar> {
    x: Vec<i64>,
    coefficients: Vec<T>,
    mu_x_at_x: T,
}

/// Numerical check of the supporting-functional properties on the direction fan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportCheck {
    /// `|mu_x(x) - mu(x)| / mu(x)`.
    pub at_x_error: f64,
    /// `max_u (mu_x(u mu(x)/mu(u)) - mu(x)) / mu(x)` over the fan.
    pub ball_excess: f64,
    /// `max_u (|mu_x(u)| - mu(u)) / mu(u)` over the fan.
    pub bound_excess: f64,
    pub holds: bool,
}

impl<T: Scalar> SupportFunctional<T> {
    /// Supporting hyperplane of the hull of the scaled fan points at `x`.
    pub fn build(norm: &NormEstimate<T>, x: &[i64]) -> Result<Self> {
        if x.len() != norm.dim() || x.iter().all(|&c| c == 0) {
            return Err(Error::InvalidParameter(format!("x = {x:?} must be a non-zero vector of dimension {}", norm.dim())));
        }
        let gauge = norm.gauge()?;
        let xr = to_real::<T>(x);
        let mu = gauge.gauge(&xr);
        let mut a = gauge
            .support_normal(&xr)
            .ok_or_else(|| Error::DegenerateHull(format!("no supporting facet at {x:?}; refine the direction fan")))?;
        let at = a.iter().zip(&xr).map(|(&ai, &xi)| ai * xi).sum::<T>();
        if !(at > T::zero()) {
            return Err(Error::DegenerateHull(format!("supporting form vanishes at {x:?}")));
        }
        let fix = mu / at;
        for ai in a.iter_mut() {
            *ai = *ai * fix;
        }
        Ok(SupportFunctional { x: x.to_vec(), coefficients: a, mu_x_at_x: mu })
    }

    pub fn x(&self) -> &[i64] {
        &self.x
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// `mu(x)`.
    pub fn mu_at_x(&self) -> T {
        self.mu_x_at_x
    }

    pub fn eval(&self, y: &[i64]) -> T {
        self.coefficients.iter().zip(y).map(|(&a, &c)| a * T::of_int(c)).sum()
    }

    pub fn eval_real(&self, y: &[T]) -> T {
        self.coefficients.iter().zip(y).map(|(&a, &c)| a * c).sum()
    }

    /// Check the three properties against `norm` on its fan, to relative tolerance `tol`.
    pub fn check(&self, norm: &NormEstimate<T>, tol: f64) -> Result<SupportCheck> {
        let mx = self.mu_x_at_x;
        let at_x_error = ((self.eval(&self.x) - norm.norm_int(&self.x)?) / mx).abs().as_f64();
        let mut ball_excess = f64::NEG_INFINITY;
        let mut bound_excess = f64::NEG_INFINITY;
        for u in direction_fan(norm.dim()) {
            let mu_u = norm.norm_int(&u)?;
            let on_ball: Vec<T> = u.iter().map(|&c| T::of_int(c) * mx / mu_u).collect();
            ball_excess = ball_excess.max(((self.eval_real(&on_ball) - mx) / mx).as_f64());
            bound_excess = bound_excess.max(((self.eval(&u).abs() - mu_u) / mu_u).as_f64());
        }
        Ok(SupportCheck {
            at_x_error,
            ball_excess,
            bound_excess,
            holds: at_x_error <= tol && ball_excess <= tol && bound_excess <= tol,
        })
    }
}

/// Source of `h(y) = E[D*(0, y)]` values.
pub trait HOracle<T>: Sync {
    fn h(&self, y: &[i64]) -> Result<T>;
}

impl<T, F> HOracle<T> for F
where
    F: Fn(&[i64]) -> Result<T> + Sync,
{
    fn h(&self, y: &[i64]) -> Result<T> {
        self(y)
    }
}

/// Memoized estimate of `h` on the l1 ball of radius `radius`, pooled over lattice symmetries.
#[derive(Debug, Clone, Serialize)]
pub struct HTable<T: Scalar> {
    dim: usize,
    radius: i64,
    values: Vec<T>,
    se: Vec<T>,
    replications: usize,
    seed: Option<u64>,
}

fn ball_points(d: usize, radius: i64) -> Vec<Vec<i64>> {
    let side = (2 * radius + 1) as usize;
    (0..side.pow(d as u32))
        .map(|mut code| {
            let mut y = vec![0i64; d];
            for a in (0..d).rev() {
                y[a] = (code % side) as i64 - radius;
                code /= side;
            }
            y
        })
        .filter(|y| l1_norm(y) <= radius)
        .collect()
}

impl<T: Scalar> HTable<T> {
    fn slot(&self, y: &[i64]) -> Option<usize> {
        if y.len() != self.dim || l1_norm(y) > self.radius {
            return None;
        }
        let side = (2 * self.radius + 1) as usize;
        Some(y.iter().fold(0usize, |acc, &c| acc * side + (c + self.radius) as usize))
    }

    fn empty(dim: usize, radius: i64, replications: usize, seed: Option<u64>) -> Self {
        let len = ((2 * radius + 1) as usize).pow(dim as u32);
        HTable { dim, radius, values: vec![T::nan(); len], se: vec![T::nan(); len], replications, seed }
    }

    /// Exact table from a known `h`, e.g. the l1 norm at `p = 1`.
    pub fn from_fn(dim: usize, radius: i64, h: impl Fn(&[i64]) -> T) -> Self {
        let mut t = Self::empty(dim, radius, 0, None);
        for y in ball_points(dim, radius) {
            let s = t.slot(&y).unwrap();
            t.values[s] = h(&y);
            t.se[s] = T::zero();
        }
        t
    }

    /// Mean of `D*(0, y)` over `replications` giant-conditioned configurations,
    /// one search from `0*` per configuration. Returns the table and the rejection count.
    pub fn estimate(spec: &BoxSpec, p: f64, seed: u64, radius: i64, replications: usize) -> Result<(Self, u64)> {
        if radius < 0 || replications < 2 {
            return Err(Error::InvalidParameter("h table needs radius >= 0 and at least 2 replications".into()));
        }
        spec.require_reach(radius)?;
        let d = spec.dim();
        let points = ball_points(d, radius);
        let targets: Vec<usize> = points.iter().map(|y| spec.index(y).expect("ball inside box")).collect();
        let origin = spec.index(&vec![0; d]).expect("origin lies in the box");
        let per_rep: Vec<(Vec<u32>, u32)> = (0..replications)
            .into_par_iter()
            .map(|rep| {
                let g = sample_with_giant(spec, p, replication_seed(seed, "h-table", rep))?;
                let o = project_star_index(&g.labels, origin)?;
                let field = bfs_from(&g.cfg, o);
                let dist = targets
                    .iter()
                    .map(|&v| Ok(field.get(project_star_index(&g.labels, v)?).expect("giant cluster is connected")))
                    .collect::<Result<Vec<u32>>>()?;
                Ok((dist, g.rejections))
            })
            .collect::<Result<_>>()?;
        let mut orbits: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (i, y) in points.iter().enumerate() {
            orbits.entry(orbit_representative(y)).or_default().push(i);
        }
        let mut table = Self::empty(d, radius, replications, Some(seed));
        for members in orbits.values() {
            let pooled: Vec<T> = per_rep
                .iter()
                .map(|(dist, _)| T::of(members.iter().map(|&i| dist[i] as f64).sum::<f64>() / members.len() as f64))
                .collect();
            let s = Summary::<T>::of(&pooled);
            for &i in members {
                let slot = table.slot(&points[i]).unwrap();
                table.values[slot] = s.mean;
                table.se[slot] = s.se;
            }
        }
        Ok((table, per_rep.iter().map(|(_, r)| *r as u64).sum()))
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn get(&self, y: &[i64]) -> Result<T> {
        self.slot(y).map(|s| self.values[s]).ok_or_else(|| Error::OutsideTable(y.to_vec()))
    }

    pub fn se(&self, y: &[i64]) -> Result<T> {
        self.slot(y).map(|s| self.se[s]).ok_or_else(|| Error::OutsideTable(y.to_vec()))
    }
}

impl<T: Scalar> HOracle<T> for HTable<T> {
    fn h(&self, y: &[i64]) -> Result<T> {
        self.get(y)
    }
}

/// Membership predicate for skeleton extraction.
pub trait Membership {
    fn contains(&self, y: &[i64]) -> Result<bool>;
}

impl<F: Fn(&[i64]) -> bool> Membership for F {
    fn contains(&self, y: &[i64]) -> Result<bool> {
        Ok(self(y))
    }
}

/// `Q_x(C) = { y : |y|_1 <= (2d+1)|x|_1, mu_x(y) <= mu(x), h(y) <= mu_x(y) + C sqrt(|x|_1) log |x|_1 }`.
pub struct QxSet<'a, T: Scalar> {
    functional: SupportFunctional<T>,
    c: T,
    slack: T,
    cutoff: i64,
    h: &'a dyn HOracle<T>,
}

impl<'a, T: Scalar> QxSet<'a, T> {
    pub fn new(functional: SupportFunctional<T>, c: T, h: &'a dyn HOracle<T>) -> Result<Self> {
        if !(c >= T::zero()) {
            return Err(Error::InvalidParameter("C must be non-negative".into()));
        }
        let nx = l1_norm(functional.x());
        let nxr = T::of_int(nx);
        let cutoff = (2 * functional.x().len() as i64 + 1) * nx;
        Ok(QxSet { slack: c * nxr.sqrt() * nxr.ln(), c, cutoff, functional, h })
    }

    pub fn functional(&self) -> &SupportFunctional<T> {
        &self.functional
    }

    pub fn c(&self) -> T {
        self.c
    }

    /// `C sqrt(|x|_1) log |x|_1`.
    pub fn slack(&self) -> T {
        self.slack
    }

    fn mu_tol(&self) -> T {
        self.functional.mu_at_x() * rel_tol::<T>()
    }

    /// `y` in `G_x = { mu_x(y) > mu(x) }`.
    pub fn in_g(&self, y: &[i64]) -> bool {
        self.functional.eval(y) > self.functional.mu_at_x() + self.mu_tol()
    }

    pub fn h(&self, y: &[i64]) -> Result<T> {
        self.h.h(y)
    }
}

impl<T: Scalar> Membership for QxSet<'_, T> {
    fn contains(&self, y: &[i64]) -> Result<bool> {
        if l1_norm(y) > self.cutoff || self.in_g(y) {
            return Ok(false);
        }
        let m = self.functional.eval(y);
        Ok(self.h.h(y)? <= m + self.slack + self.mu_tol())
    }
}

/// Waypoints `gamma(u_0), ..., gamma(u_m)` of a path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skeleton {
    pub waypoints: Vec<Vec<i64>>,
    /// Path indices `u_0 = 0 < u_1 < ... < u_m = last`.
    pub indices: Vec<usize>,
}

impl Skeleton {
    /// Number of increments.
    pub fn m(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn increments(&self) -> Vec<Vec<i64>> {
        self.waypoints.windows(2).map(|w| diff(&w[1], &w[0])).collect()
    }
}

fn diff(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Greedy skeleton: from `u_i`, advance while `gamma(j) - gamma(u_i)` stays in `q`.
pub fn extract_skeleton<M: Membership + ?Sized>(path: &[Vec<i64>], q: &M) -> Result<Skeleton> {
    if path.is_empty() {
        return Err(Error::InvalidParameter("empty path".into()));
    }
    let last = path.len() - 1;
    let mut indices = vec![0usize];
    let mut u = 0;
    while u < last {
        let mut j = u;
        while j < last && q.contains(&diff(&path[j + 1], &path[u]))? {
            j += 1;
        }
        if j == u {
            return Err(Error::SkeletonStuck { index: u, increment: diff(&path[u + 1], &path[u]) });
        }
        indices.push(j);
        u = j;
    }
    Ok(Skeleton { waypoints: indices.iter().map(|&i| path[i].clone()).collect(), indices })
}

/// Counts of short (`Delta_x`) and long (`D_x`) increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IncrementCounts {
    pub short: usize,
    pub long: usize,
}

fn neighbours(y: &[i64]) -> impl Iterator<Item = Vec<i64>> + '_ {
    (0..y.len()).flat_map(move |a| {
        [-1, 1].into_iter().map(move |s| {
            let mut z = y.to_vec();
            z[a] += s;
            z
        })
    })
}

/// Classify every increment but the last: long if adjacent to `G_x`, short if
/// adjacent to the complement of `Q_x` only.
pub fn increment_classification<T: Scalar>(q: &QxSet<'_, T>, skeleton: &Skeleton) -> Result<IncrementCounts> {
    let incs = skeleton.increments();
    let mut counts = IncrementCounts { short: 0, long: 0 };
    for y in incs.iter().take(incs.len().saturating_sub(1)) {
        if neighbours(y).any(|z| q.in_g(&z)) {
            counts.long += 1;
            continue;
        }
        let mut outside = false;
        for z in neighbours(y) {
            if !q.contains(&z)? {
                outside = true;
                break;
            }
        }
        if !outside {
            return Err(Error::Unclassified(y.clone()));
        }
        counts.short += 1;
    }
    debug_assert_eq!(counts.short + counts.long, skeleton.m().saturating_sub(1));
    Ok(counts)
}

/// Fan directions scaled to l1 norm close to `size`.
pub fn scaled_fan(dim: usize, size: i64) -> Vec<Vec<i64>> {
    direction_fan(dim)
        .into_iter()
        .map(|u| {
            let k = ((size as f64 / l1_norm(&u) as f64).round() as i64).max(1);
            u.iter().map(|c| c * k).collect()
        })
        .collect()
}

/// Outcome of the increment-lemma clauses for one `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub x: Vec<i64>,
    /// Every `y` in `Q_x` has `mu(y) <= 2 mu(x)` (up to CI slack) and `|y|_1 <= 2d |x|_1`.
    pub clause1: bool,
    /// Every `y` in `Q_x` adjacent to `G_x` has `mu_x(y) >= 5/6 mu(x)`.
    pub clause3: bool,
    /// Every `y` with `|y|_1 <= sqrt(|x|_1)` lies in `Q_x`.
    pub clause4: bool,
}

impl LemmaCheck {
    pub fn all(&self) -> bool {
        self.clause1 && self.clause3 && self.clause4
    }
}

fn small_ball_inside<T: Scalar>(q: &QxSet<'_, T>, dim: usize) -> Result<bool> {
    let r = (l1_norm(q.functional().x()) as f64).sqrt().floor() as i64;
    for y in ball_points(dim, r) {
        if !q.contains(&y)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Relative CI half-width of the fan estimates, used as slack in clause 1.
fn relative_ci<T: Scalar>(norm: &NormEstimate<T>) -> f64 {
    norm.directions().iter().map(|e| Z95 * (e.se / e.value).as_f64()).fold(0.0, f64::max)
}

/// Check clauses 1, 3 and 4 for one `x`; `y` ranges over the whole lattice ball `|y|_1 <= (2d+1)|x|_1`.
pub fn lemma_check<T: Scalar>(norm: &NormEstimate<T>, h: &dyn HOracle<T>, x: &[i64], c: T) -> Result<LemmaCheck> {
    let dim = norm.dim();
    let q = QxSet::new(SupportFunctional::build(norm, x)?, c, h)?;
    let mx = q.functional().mu_at_x();
    let rel = T::of(relative_ci(norm)) + rel_tol::<T>();
    let nx = l1_norm(x);
    let mut clause1 = true;
    let mut clause3 = true;
    for y in ball_points(dim, (2 * dim as i64 + 1) * nx) {
        if !q.contains(&y)? {
            continue;
        }
        let my = norm.norm_int(&y)?;
        if my > T::of(2.0) * mx + rel * (my + T::of(2.0) * mx) || l1_norm(&y) > 2 * dim as i64 * nx {
            clause1 = false;
        }
        if neighbours(&y).any(|z| q.in_g(&z)) && q.functional().eval(&y) < T::of(5.0 / 6.0) * mx * (T::one() - rel_tol::<T>()) {
            clause3 = false;
        }
    }
    Ok(LemmaCheck { x: x.to_vec(), clause1, clause3, clause4: small_ball_inside(&q, dim)? })
}

/// `0.05 * sqrt(2)^k`, `k = 0..40`.
pub fn default_c_grid() -> Vec<f64> {
    (0..40).map(|k| 0.05 * 2f64.sqrt().powi(k)).collect()
}

/// Smallest `C` in `grid` for which the small-ball inclusion holds at every `x` in `xs`.
pub fn calibrate_c<T: Scalar>(norm: &NormEstimate<T>, h: &dyn HOracle<T>, xs: &[Vec<i64>], grid: &[T]) -> Result<T> {
    let functionals: Vec<SupportFunctional<T>> = xs.iter().map(|x| SupportFunctional::build(norm, x)).collect::<Result<_>>()?;
    for &c in grid {
        let mut ok = true;
        for f in &functionals {
            let q = QxSet::new(f.clone(), c, h)?;
            if !small_ball_inside(&q, norm.dim())? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(c);
        }
    }
    Err(Error::InvalidParameter("no C in the calibration grid satisfies the small-ball inclusion".into()))
}

/// Per-size clause outcomes over the scaled fan, and the threshold `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    pub sizes: Vec<(i64, bool)>,
    /// Smallest tested size from which every larger tested size passes all clauses.
    pub m_hat: Option<i64>,
}

pub fn threshold_m<T: Scalar>(norm: &NormEstimate<T>, h: &dyn HOracle<T>, c: T, sizes: &[i64]) -> Result<Threshold> {
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    for &s in &sorted {
        let mut pass = true;
        for x in scaled_fan(norm.dim(), s) {
            if !lemma_check(norm, h, &x, c)?.all() {
                pass = false;
                break;
            }
        }
        rows.push((s, pass));
    }
    let m_hat = rows.iter().rposition(|r| !r.1).map_or(rows.first().map(|r| r.0), |i| rows.get(i + 1).map(|r| r.0));
    Ok(Threshold { sizes: rows, m_hat })
}

/// Choice of the constant `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CChoice {
    Fixed(f64),
    /// Calibrate on the fan scaled to `|x|_1` with [`default_c_grid`].
    Auto,
}

/// One configuration of the skeleton-length experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonRow {
    pub replication: usize,
    pub n: i64,
    /// Skeleton vertices from `0*` to `(nx)*`.
    pub m: usize,
    /// `2n + 1`.
    pub bound: usize,
    /// `m + 2 <= 2n + 1`.
    pub pass: bool,
    pub short: usize,
    pub long: usize,
    /// `0* - 0` and `nx - (nx)*` lie in `Q_x`.
    pub ends_in_q: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkeletonReport {
    pub rows: Vec<SkeletonRow>,
    pub c: f64,
    pub threshold: Threshold,
    /// `|x|_1` below the threshold (or no threshold found).
    pub below_threshold: bool,
    pub rejections: u64,
}

impl SkeletonReport {
    pub fn pass_fraction(&self, n: i64) -> f64 {
        let rows: Vec<&SkeletonRow> = self.rows.iter().filter(|r| r.n == n).collect();
        rows.iter().filter(|r| r.pass).count() as f64 / rows.len() as f64
    }
}

/// Skeleton of the canonical geodesic from `0*` to `(nx)*` per configuration.
/// `norm` and `h` must come from seed streams independent of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn skeleton_length_experiment(
    spec: &BoxSpec,
    p: f64,
    seed: u64,
    x: &[i64],
    n_grid: &[i64],
    c: CChoice,
    replications: usize,
    norm: &NormEstimate<f64>,
    h: &HTable<f64>,
) -> Result<SkeletonReport> {
    if norm.method().master_seed == Some(seed) || h.seed() == Some(seed) {
        return Err(Error::DependentSeeds(seed));
    }
    if n_grid.is_empty() || n_grid.iter().any(|&n| n < 1) || replications == 0 {
        return Err(Error::InvalidParameter("skeleton experiment needs positive n and replications".into()));
    }
    let nx = l1_norm(x);
    let n_max = *n_grid.iter().max().unwrap();
    spec.require_reach(n_max * nx)?;
    let dim = spec.dim();
    let c = match c {
        CChoice::Fixed(c) => c,
        CChoice::Auto => calibrate_c(norm, h, &scaled_fan(dim, nx), &default_c_grid())?,
    };
    let max_size = h.radius() / (2 * dim as i64 + 1);
    let sizes: Vec<i64> = (1..=max_size.min(nx)).collect();
    let threshold = threshold_m(norm, h, c, &sizes)?;
    let below_threshold = threshold.m_hat.is_none_or(|m| nx < m);
    let q = QxSet::new(SupportFunctional::build(norm, x)?, c, h)?;
    let origin = spec.index(&vec![0; dim]).expect("origin lies in the box");
    let per_rep: Vec<(Vec<SkeletonRow>, u32)> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let g = sample_with_giant(spec, p, replication_seed(seed, "skeleton", rep))?;
            let o = project_star_index(&g.labels, origin)?;
            let field = bfs_from(&g.cfg, o);
            let start = spec.coords(o);
            let mut rows = Vec::with_capacity(n_grid.len());
            for &n in n_grid {
                let target: Vec<i64> = x.iter().map(|c| c * n).collect();
                let t = project_star_index(&g.labels, spec.index_or_err(&target)?)?;
                let path: Vec<Vec<i64>> = field.geodesic_indices(t)?.into_iter().map(|v| spec.coords(v)).collect();
                let sk = extract_skeleton(&path, &q)?;
                let counts = increment_classification(&q, &sk)?;
                let m = sk.waypoints.len();
                let bound = (2 * n + 1) as usize;
                let end = spec.coords(t);
                rows.push(SkeletonRow {
                    replication: rep,
                    n,
                    m,
                    bound,
                    pass: m + 2 <= bound,
                    short: counts.short,
                    long: counts.long,
                    ends_in_q: q.contains(&start)? && q.contains(&diff(&target, &end))?,
                });
            }
            Ok((rows, g.rejections))
        })
        .collect::<Result<_>>()?;
    let rejections = per_rep.iter().map(|(_, r)| *r as u64).sum();
    let mut rows: Vec<SkeletonRow> = per_rep.into_iter().flat_map(|(r, _)| r).collect();
    rows.sort_by_key(|r| (r.n, r.replication));
    Ok(SkeletonReport { rows, c, threshold, below_threshold, rejections })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1_table(r: i64) -> HTable<f64> {
        HTable::from_fn(2, r, |y| l1_norm(y) as f64)
    }

    #[test]
    fn functional_at_vertex_and_face() {
        let n = NormEstimate::<f64>::l1(2).unwrap();
        let f = SupportFunctional::build(&n, &[1, 0]).unwrap();
        assert!((f.coefficients()[0] - 1.0).abs() < 1e-12 && f.coefficients()[1].abs() < 1e-12);
        let g = SupportFunctional::build(&n, &[1, 1]).unwrap();
        assert!((g.coefficients()[0] - 1.0).abs() < 1e-12 && (g.coefficients()[1] - 1.0).abs() < 1e-12);
        assert!(f.check(&n, 1e-9).unwrap().holds && g.check(&n, 1e-9).unwrap().holds);
    }

    #[test]
    fn membership_basics() {
        let n = NormEstimate::<f64>::l1(2).unwrap();
        let table = l1_table(50);
        let q = QxSet::new(SupportFunctional::build(&n, &[10, 0]).unwrap(), 1.0, &table).unwrap();
        assert!(q.contains(&[0, 0]).unwrap());
        assert!(q.contains(&[1, 0]).unwrap());
        assert!(!q.contains(&[11, 0]).unwrap());
        assert!(!q.contains(&[0, 51]).unwrap());
    }

    #[test]
    fn handcrafted_skeleton() {
        let path: Vec<Vec<i64>> = (0..=10).map(|i| vec![i, 0]).collect();
        let q = |y: &[i64]| l1_norm(y) <= 3;
        let sk = extract_skeleton(&path, &q).unwrap();
        assert_eq!(sk.indices, vec![0, 3, 6, 9, 10]);
        assert_eq!(sk.m(), 4);
        let again = extract_skeleton(&sk.waypoints, &q).unwrap();
        assert_eq!(again.waypoints, sk.waypoints);
    }

    #[test]
    fn stuck_step_is_reported() {
        let path = vec![vec![0, 0], vec![1, 0], vec![1, 1]];
        let q = |y: &[i64]| y[1] == 0;
        let err = extract_skeleton(&path, &q).unwrap_err();
        assert!(matches!(err, Error::SkeletonStuck { index: 1, .. }));
    }

    #[test]
    fn long_increments_at_full_occupation() {
        let n = NormEstimate::<f64>::l1(2).unwrap();
        let table = l1_table(60);
        let q = QxSet::new(SupportFunctional::build(&n, &[10, 0]).unwrap(), 1.0, &table).unwrap();
        let path: Vec<Vec<i64>> = (0..=35).map(|i| vec![i, 0]).collect();
        let sk = extract_skeleton(&path, &q).unwrap();
        assert_eq!(sk.indices, vec![0, 10, 20, 30, 35]);
        let c = increment_classification(&q, &sk).unwrap();
        assert_eq!(c, IncrementCounts { short: 0, long: 3 });
    }

    #[test]
    fn lemma_at_full_occupation() {
        let n = NormEstimate::<f64>::l1(2).unwrap();
        let table = l1_table(60);
        let c = calibrate_c(&n, &table, &scaled_fan(2, 10), &default_c_grid()).unwrap();
        assert!(!lemma_check(&n, &table, &[10, 0], 0.1).unwrap().clause4);
        assert!(lemma_check(&n, &table, &[10, 0], c).unwrap().all());
    }

    #[test]
    fn ball_point_count() {
        assert_eq!(ball_points(2, 3).len(), 25);
        assert_eq!(ball_points(3, 1).len(), 7);
    }
}
