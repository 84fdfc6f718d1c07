//! Chemical distance `D`, regularized distance `D*` and canonical geodesics.

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{project_star_index, ClusterLabels};
use crate::error::{Error, Result};
use crate::lattice::{l1, BoxSpec, EdgeConfiguration};
use crate::rng;
use crate::stats::quantile_sorted;

const INF: u32 = u32::MAX;

/// Single-source open-path distances over a configuration.
#[derive(Debug, Clone)]
pub struct DistanceField<'a> {
    cfg: &'a EdgeConfiguration,
    source: usize,
    dist: Vec<u32>,
}

impl<'a> DistanceField<'a> {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn config(&self) -> &'a EdgeConfiguration {
        self.cfg
    }

    /// Distance to vertex `v`; `None` when `v` is not connected to the source.
    #[inline]
    pub fn get(&self, v: usize) -> Option<u32> {
        match self.dist[v] {
            INF => None,
            d => Some(d),
        }
    }

    pub fn at(&self, x: &[i64]) -> Result<Option<u32>> {
        Ok(self.get(self.cfg.spec().index_or_err(x)?))
    }

    pub fn reached(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.dist.iter().enumerate().filter(|(_, &d)| d != INF).map(|(v, &d)| (v, d))
    }

    /// Canonical predecessor of `v`: the smallest-index open neighbour one step closer.
    pub fn parent(&self, v: usize) -> Option<usize> {
        let dv = self.get(v)?;
        if dv == 0 {
            return None;
        }
        let mut best: Option<usize> = None;
        self.cfg.for_each_open_neighbor(v, |u| {
            if self.dist[u] == dv - 1 && best.is_none_or(|b| u < b) {
                best = Some(u);
            }
        });
        best
    }

    /// Vertex sequence from the source to `y`, following canonical predecessors.
    pub fn geodesic_indices(&self, y: usize) -> Result<Vec<usize>> {
        if self.get(y).is_none() {
            return Err(Error::Unreachable(self.cfg.spec().coords(y)));
        }
        let mut path = vec![y];
        let mut v = y;
        while let Some(u) = self.parent(v) {
            path.push(u);
            v = u;
        }
        path.reverse();
        Ok(path)
    }

    pub fn geodesic(&self, y: &[i64]) -> Result<Geodesic> {
        let spec = self.cfg.spec();
        let path = self.geodesic_indices(spec.index_or_err(y)?)?;
        Ok(Geodesic { vertices: path.into_iter().map(|v| spec.coords(v)).collect() })
    }
}

/// Open path realizing the chemical distance between its endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Geodesic {
    pub vertices: Vec<Vec<i64>>,
}

impl Geodesic {
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }
}

fn bfs_core(cfg: &EdgeConfiguration, source: usize, max_depth: u32, mut stop: impl FnMut(usize) -> bool) -> Vec<u32> {
    let n = cfg.spec().vertex_count();
    let mut dist = vec![INF; n];
    let mut queue: Vec<u32> = Vec::with_capacity(1024);
    dist[source] = 0;
    queue.push(source as u32);
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head] as usize;
        head += 1;
        if stop(v) {
            break;
        }
        let next = dist[v] + 1;
        if next > max_depth {
            continue;
        }
        cfg.for_each_open_neighbor(v, |u| {
            if dist[u] == INF {
                dist[u] = next;
                queue.push(u as u32);
            }
        });
    }
    dist
}

/// Breadth-first distances from `source` to every vertex of the box.
pub fn bfs_distance<'a>(cfg: &'a EdgeConfiguration, source: &[i64]) -> Result<DistanceField<'a>> {
    let s = cfg.spec().index_or_err(source)?;
    Ok(bfs_from(cfg, s))
}

pub fn bfs_from(cfg: &EdgeConfiguration, source: usize) -> DistanceField<'_> {
    DistanceField { cfg, source, dist: bfs_core(cfg, source, INF - 1, |_| false) }
}

/// Breadth-first search cut off after depth `max_depth`; vertices farther away read as unreached.
pub fn bfs_bounded(cfg: &EdgeConfiguration, source: usize, max_depth: u32) -> DistanceField<'_> {
    DistanceField { cfg, source, dist: bfs_core(cfg, source, max_depth, |_| false) }
}

/// Distances from `source` to each target, stopping once all are settled.
pub fn distances_to(cfg: &EdgeConfiguration, source: usize, targets: &[usize]) -> Vec<Option<u32>> {
    let mut pending: Vec<usize> = targets.to_vec();
    pending.sort_unstable();
    pending.dedup();
    let mut remaining = pending.len();
    let dist = bfs_core(cfg, source, INF - 1, |v| {
        if pending.binary_search(&v).is_ok() {
            remaining -= 1;
        }
        remaining == 0
    });
    targets.iter().map(|&t| (dist[t] != INF).then_some(dist[t])).collect()
}

pub fn chemical_distance_index(cfg: &EdgeConfiguration, x: usize, y: usize) -> Option<u32> {
    distances_to(cfg, x, &[y])[0]
}

/// Length of the shortest open path between `x` and `y`, `None` if disconnected.
pub fn chemical_distance(cfg: &EdgeConfiguration, x: &[i64], y: &[i64]) -> Result<Option<u32>> {
    let spec = cfg.spec();
    Ok(chemical_distance_index(cfg, spec.index_or_err(x)?, spec.index_or_err(y)?))
}

/// `D*(x, y) = D(x*, y*)`; finite because both projections lie in the giant.
pub fn star_distance(cfg: &EdgeConfiguration, labels: &ClusterLabels, x: &[i64], y: &[i64]) -> Result<u32> {
    let spec = cfg.spec();
    let xs = project_star_index(labels, spec.index_or_err(x)?)?;
    let ys = project_star_index(labels, spec.index_or_err(y)?)?;
    Ok(chemical_distance_index(cfg, xs, ys).expect("giant cluster is connected"))
}

/// Shortest open path visiting `waypoints` in order: the sum of the leg distances.
pub fn constrained_distance(cfg: &EdgeConfiguration, waypoints: &[Vec<i64>]) -> Result<Option<u32>> {
    if waypoints.len() < 2 {
        return Err(Error::InvalidParameter("constrained distance needs at least two waypoints".into()));
    }
    let mut total = 0u32;
    for leg in waypoints.windows(2) {
        match chemical_distance(cfg, &leg[0], &leg[1])? {
            Some(d) => total += d,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}

/// Working stand-in for the existence constant bounding `D / |x - y|_1`.
#[derive(Debug, Clone, Serialize)]
pub struct RhoEstimate {
    pub rho_hat: f64,
    pub quantile_ratio: f64,
    pub pairs: usize,
}

/// Minimum pair separation used when collecting distance ratios.
pub const RHO_MIN_SEPARATION: i64 = 10;
pub const RHO_QUANTILE: f64 = 0.999;
pub const RHO_SAFETY: f64 = 1.5;

/// 99.9th percentile of `D(x, y) / |x - y|_1` over connected pairs with
/// `|x - y|_1 >= 10`, times a safety factor of 1.5. Each of `configs` samples
/// contributes all pairs from one random measurement point.
pub fn estimate_rho_hat(spec: &BoxSpec, p: f64, seed: u64, configs: usize) -> Result<RhoEstimate> {
    let points = spec.measurement_points();
    if points.is_empty() || configs == 0 {
        return Err(Error::EmptySample);
    }
    let per_config: Vec<Vec<f64>> = (0..configs)
        .into_par_iter()
        .map(|c| -> Result<Vec<f64>> {
            let s = rng::derive(rng::derive_tag(seed, "rho"), c as u64);
            let cfg = EdgeConfiguration::sample(spec, p, s)?;
            let x = &points[rng::index(s, u64::MAX, points.len())];
            let field = bfs_distance(&cfg, x)?;
            Ok(field
                .reached()
                .filter_map(|(v, dv)| {
                    let y = spec.coords(v);
                    let sep = l1(x, &y);
                    (sep >= RHO_MIN_SEPARATION && spec.depth(v) >= spec.margin()).then(|| dv as f64 / sep as f64)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut ratios: Vec<f64> = per_config.into_iter().flatten().collect();
    ratios.sort_by(f64::total_cmp);
    let q = quantile_sorted(&ratios, RHO_QUANTILE).ok_or(Error::EmptySample)?;
    Ok(RhoEstimate { rho_hat: q * RHO_SAFETY, quantile_ratio: q, pairs: ratios.len() })
}

/// Empirical `P(0 <-> y, D(0, y) > rho * |y|_1 * s)` for each `s`.
pub fn ratio_tail(cfgs: &[EdgeConfiguration], y: &[i64], rho: f64, s_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if cfgs.is_empty() {
        return Err(Error::EmptySample);
    }
    let norm = crate::lattice::l1_norm(y) as f64;
    let dists: Vec<Option<u32>> = cfgs
        .iter()
        .map(|c| chemical_distance(c, &vec![0; c.spec().dim()], y))
        .collect::<Result<_>>()?;
    Ok(s_grid
        .iter()
        .map(|&s| {
            let hits = dists.iter().filter(|d| d.is_some_and(|d| d as f64 > rho * norm * s)).count();
            (s, hits as f64 / cfgs.len() as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::l1_norm;

    fn spec(l: i64) -> BoxSpec {
        BoxSpec::new(2, l, 0).unwrap()
    }

    #[test]
    fn full_lattice_distance_is_l1() {
        let s = spec(5);
        let cfg = EdgeConfiguration::open(&s);
        assert_eq!(chemical_distance(&cfg, &[0, 0], &[3, 4]).unwrap(), Some(7));
        let f = bfs_distance(&cfg, &[1, -2]).unwrap();
        for v in 0..s.vertex_count() {
            assert_eq!(f.get(v), Some(l1(&s.coords(v), &[1, -2]) as u32));
        }
    }

    #[test]
    fn empty_lattice_is_disconnected() {
        let s = spec(3);
        let cfg = EdgeConfiguration::closed(&s);
        let f = bfs_distance(&cfg, &[0, 0]).unwrap();
        assert_eq!(f.reached().count(), 1);
        assert_eq!(chemical_distance(&cfg, &[0, 0], &[0, 0]).unwrap(), Some(0));
        assert_eq!(chemical_distance(&cfg, &[0, 0], &[0, 1]).unwrap(), None);
    }

    #[test]
    fn out_of_box_source_rejected() {
        let s = spec(2);
        let cfg = EdgeConfiguration::open(&s);
        assert!(matches!(bfs_distance(&cfg, &[3, 0]), Err(Error::OutOfBox(_))));
    }

    #[test]
    fn staircase_geodesic_tie_rule() {
        let s = spec(3);
        let cfg = EdgeConfiguration::open(&s);
        let f = bfs_distance(&cfg, &[0, 0]).unwrap();
        let g = f.geodesic(&[2, 1]).unwrap();
        assert_eq!(g.vertices, vec![vec![0, 0], vec![0, 1], vec![1, 1], vec![2, 1]]);
        assert_eq!(g.len(), 3);
        assert_eq!(f.geodesic(&[0, 0]).unwrap().len(), 0);
    }

    #[test]
    fn unreachable_geodesic_errors() {
        let s = spec(2);
        let cfg = EdgeConfiguration::closed(&s);
        let f = bfs_distance(&cfg, &[0, 0]).unwrap();
        assert!(matches!(f.geodesic(&[1, 0]), Err(Error::Unreachable(_))));
    }

    #[test]
    fn constrained_round_trip() {
        let s = spec(3);
        let cfg = EdgeConfiguration::open(&s);
        let w = vec![vec![0, 0], vec![1, 0], vec![0, 0]];
        assert_eq!(constrained_distance(&cfg, &w).unwrap(), Some(2));
        assert_eq!(constrained_distance(&cfg, &w[..2]).unwrap(), Some(1));
        assert!(constrained_distance(&cfg, &w[..1]).is_err());
    }

    #[test]
    fn star_distance_full_lattice() {
        let s = spec(3);
        let cfg = EdgeConfiguration::open(&s);
        let labels = ClusterLabels::label(&cfg);
        assert_eq!(star_distance(&cfg, &labels, &[-1, 2], &[3, -3]).unwrap(), l1_norm(&[4, -5]) as u32);
    }

    #[test]
    fn rho_hat_is_one_and_a_half_on_full_lattice() {
        let s = BoxSpec::new(2, 12, 0).unwrap();
        let r = estimate_rho_hat(&s, 1.0, 3, 2).unwrap();
        assert_eq!(r.quantile_ratio, 1.0);
        assert_eq!(r.rho_hat, 1.5);
    }
}
