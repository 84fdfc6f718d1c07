//! Open-cluster labeling, the giant-cluster proxy and the projection `x ↦ x*`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, EdgeConfiguration};
use crate::stats::clopper_pearson;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Connected components of the open subgraph.
///
/// A cluster is identified by its smallest vertex index (equivalently its
/// lexicographically smallest member). Isolated vertices are singletons.
#[derive(Debug, Clone)]
pub struct ClusterLabels {
    spec: BoxSpec,
    label: Vec<u32>,
    size: Vec<u32>,
    faces: Vec<u64>,
    giant: Option<usize>,
}

impl ClusterLabels {
    pub fn label(cfg: &EdgeConfiguration) -> Self {
        let spec = cfg.spec().clone();
        let n = spec.vertex_count();
        let d = spec.dim();
        let mut uf = UnionFind::new(n);
        for v in 0..n {
            for a in 0..d {
                if cfg.is_open_slot(v * d + a) {
                    uf.union(v, v + spec.stride(a));
                }
            }
        }
        const UNSET: u32 = u32::MAX;
        let mut rep = vec![UNSET; n];
        let mut label = vec![0u32; n];
        let mut size = vec![0u32; n];
        let mut faces = vec![0u64; n];
        let l = spec.half_side();
        for v in 0..n {
            let r = uf.find(v);
            if rep[r] == UNSET {
                rep[r] = v as u32;
            }
            let id = rep[r] as usize;
            label[v] = id as u32;
            size[id] += 1;
            for a in 0..d {
                let c = spec.coord(v, a);
                if c == -l {
                    faces[id] |= 1 << (2 * a);
                }
                if c == l {
                    faces[id] |= 1 << (2 * a + 1);
                }
            }
        }
        let mut best: Option<(u32, usize)> = None;
        let mut unique = false;
        for v in 0..n {
            if label[v] as usize == v {
                match best {
                    Some((s, _)) if size[v] < s => {}
                    Some((s, _)) if size[v] == s => unique = false,
                    _ => {
                        best = Some((size[v], v));
                        unique = true;
                    }
                }
            }
        }
        let giant = best.filter(|&(s, _)| unique && s >= 2).map(|(_, v)| v);
        ClusterLabels { spec, label, size, faces, giant }
    }

    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    #[inline]
    pub fn cluster_of(&self, v: usize) -> usize {
        self.label[v] as usize
    }

    pub fn size_of(&self, id: usize) -> usize {
        self.size[id] as usize
    }

    /// `(cluster id, size)` pairs in increasing id order.
    pub fn sizes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.label.len()).filter(|&v| self.label[v] as usize == v).map(|v| (v, self.size[v] as usize))
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes().count()
    }

    pub fn is_spanning(&self, id: usize) -> bool {
        let all = (1u64 << (2 * self.spec.dim())) - 1;
        self.faces[id] == all
    }

    pub fn giant(&self) -> Option<usize> {
        self.giant
    }

    /// The giant cluster when it exists and touches every face.
    pub fn spanning_giant(&self) -> Option<usize> {
        self.giant.filter(|&g| self.is_spanning(g))
    }

    #[inline]
    pub fn in_giant(&self, v: usize) -> bool {
        self.giant == Some(self.label[v] as usize)
    }

    pub fn connected(&self, u: usize, v: usize) -> bool {
        self.label[u] == self.label[v]
    }

    /// Largest l-infinity norm among the members of cluster `id`.
    pub fn radius_of(&self, id: usize) -> i64 {
        let d = self.spec.dim();
        (0..self.label.len())
            .filter(|&v| self.label[v] as usize == id)
            .map(|v| (0..d).map(|a| self.spec.coord(v, a).abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// Visit every `delta` with `|delta|_1 = r` in lexicographic order until `f` returns true.
fn sphere_lex(d: usize, r: i64, prefix: &mut Vec<i64>, f: &mut impl FnMut(&[i64]) -> bool) -> bool {
    if prefix.len() + 1 == d {
        let candidates: &[i64] = if r == 0 { &[0] } else { &[-r, r] };
        for &c in candidates {
            prefix.push(c);
            let hit = f(prefix);
            prefix.pop();
            if hit {
                return true;
            }
        }
        return false;
    }
    for c in -r..=r {
        prefix.push(c);
        let hit = sphere_lex(d, r - c.abs(), prefix, f);
        prefix.pop();
        if hit {
            return true;
        }
    }
    false
}

/// Nearest giant-cluster vertex to `x` in l1, ties broken by the
/// lexicographically smallest displacement `x* - x`.
pub fn project_star(labels: &ClusterLabels, x: &[i64]) -> Result<Vec<i64>> {
    let v = labels.spec.index_or_err(x)?;
    project_star_index(labels, v).map(|w| labels.spec.coords(w))
}

pub fn project_star_index(labels: &ClusterLabels, v: usize) -> Result<usize> {
    if labels.giant.is_none() {
        return Err(Error::NoGiant);
    }
    if labels.in_giant(v) {
        return Ok(v);
    }
    let spec = &labels.spec;
    let d = spec.dim();
    let x = spec.coords(v);
    let max_r = 2 * spec.half_side() * d as i64;
    let mut found = None;
    let mut prefix = Vec::with_capacity(d);
    let mut point = vec![0i64; d];
    for r in 1..=max_r {
        let hit = sphere_lex(d, r, &mut prefix, &mut |delta| {
            for a in 0..d {
                point[a] = x[a] + delta[a];
            }
            match spec.index(&point) {
                Some(w) if labels.in_giant(w) => {
                    found = Some(w);
                    true
                }
                _ => false,
            }
        });
        if hit {
            break;
        }
    }
    found.ok_or(Error::NoGiant)
}

/// The projection `x ↦ x*` tabulated over the whole box.
#[derive(Debug, Clone)]
pub struct StarProjection {
    star: Vec<u32>,
}

impl StarProjection {
    pub fn build(labels: &ClusterLabels) -> Result<Self> {
        let n = labels.spec.vertex_count();
        let star = (0..n).map(|v| project_star_index(labels, v).map(|w| w as u32)).collect::<Result<_>>()?;
        Ok(StarProjection { star })
    }

    pub fn get(&self, v: usize) -> usize {
        self.star[v] as usize
    }
}

/// One row of a tail-probability table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub r: i64,
    pub n_samples: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TailRow {
    pub fn from_counts(r: i64, hits: usize, n: usize) -> Self {
        let (ci_low, ci_high) = clopper_pearson(hits, n, 0.95);
        TailRow { r, n_samples: n, estimate: hits as f64 / n as f64, ci_low, ci_high }
    }
}

fn tail_table(
    labels: &[ClusterLabels],
    r_grid: &[i64],
    event: impl Fn(&ClusterLabels, i64) -> bool,
) -> Result<Vec<TailRow>> {
    if labels.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(r_grid
        .iter()
        .map(|&r| TailRow::from_counts(r, labels.iter().filter(|l| event(l, r)).count(), labels.len()))
        .collect())
}

/// Fraction of samples whose origin cluster is finite (not the giant) yet
/// leaves `[-r, r]^d`. Without a giant every cluster counts as finite.
pub fn finite_cluster_diameter_tail(labels: &[ClusterLabels], r_grid: &[i64]) -> Result<Vec<TailRow>> {
    let radii: Vec<Option<i64>> = labels
        .iter()
        .map(|l| {
            let o = l.spec.index(&vec![0; l.spec.dim()]).expect("origin in box");
            (!l.in_giant(o)).then(|| l.radius_of(l.cluster_of(o)))
        })
        .collect();
    if labels.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(r_grid
        .iter()
        .map(|&r| TailRow::from_counts(r, radii.iter().filter(|x| x.is_some_and(|rad| rad > r)).count(), radii.len()))
        .collect())
}

/// Fraction of samples in which the giant cluster misses `[-r, r]^d`.
pub fn hole_size_tail(labels: &[ClusterLabels], r_grid: &[i64]) -> Result<Vec<TailRow>> {
    tail_table(labels, r_grid, |l, r| {
        let spec = &l.spec;
        let d = spec.dim();
        !(0..spec.vertex_count()).any(|v| l.in_giant(v) && (0..d).all(|a| spec.coord(v, a).abs() <= r))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(l: i64) -> BoxSpec {
        BoxSpec::new(2, l, 0).unwrap()
    }

    #[test]
    fn full_and_empty() {
        let s = spec(3);
        let full = ClusterLabels::label(&EdgeConfiguration::open(&s));
        assert_eq!(full.cluster_count(), 1);
        assert_eq!(full.spanning_giant(), Some(0));
        assert_eq!(full.size_of(0), 49);
        let empty = ClusterLabels::label(&EdgeConfiguration::closed(&s));
        assert_eq!(empty.cluster_count(), 49);
        assert_eq!(empty.giant(), None);
        assert!(empty.sizes().all(|(_, n)| n == 1));
    }

    #[test]
    fn sphere_enumeration_is_lexicographic() {
        let mut seen = Vec::new();
        sphere_lex(2, 2, &mut Vec::new(), &mut |d| {
            seen.push(d.to_vec());
            false
        });
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted);
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn projection_requires_giant() {
        let s = spec(2);
        let empty = ClusterLabels::label(&EdgeConfiguration::closed(&s));
        assert!(matches!(project_star(&empty, &[0, 0]), Err(Error::NoGiant)));
    }

    #[test]
    fn projection_on_full_lattice_is_identity() {
        let s = spec(2);
        let l = ClusterLabels::label(&EdgeConfiguration::open(&s));
        for x in s.measurement_points() {
            assert_eq!(project_star(&l, &x).unwrap(), x);
        }
    }

    #[test]
    fn tails_on_degenerate_configurations() {
        let s = spec(4);
        let full = vec![ClusterLabels::label(&EdgeConfiguration::open(&s))];
        let empty = vec![ClusterLabels::label(&EdgeConfiguration::closed(&s))];
        for rows in [
            finite_cluster_diameter_tail(&full, &[0, 1, 2]).unwrap(),
            finite_cluster_diameter_tail(&empty, &[0, 1, 2]).unwrap(),
            hole_size_tail(&full, &[0, 1, 2, 4]).unwrap(),
        ] {
            assert!(rows.iter().all(|r| r.estimate == 0.0));
        }
        assert!(finite_cluster_diameter_tail(&[], &[1]).is_err());
    }
}
