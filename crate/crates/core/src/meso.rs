//! Mesoscopic partition of the edges into boxes `Λ_k^t`.
//!
//! An edge belongs to the box whose centre `t·k` is closest (Euclidean) to the
//! edge midpoint; ties go to the lexicographically smallest `k`. A vertex
//! belongs to every box owning one of its incident edges.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::BoxSpec;

/// Compressed adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl Csr {
    fn from_pairs(rows: usize, pairs: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0usize; rows + 1];
        for &(r, _) in pairs {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0u32; pairs.len()];
        for &(r, c) in pairs {
            items[fill[r as usize]] = c;
            fill[r as usize] += 1;
        }
        let mut csr = Csr { offsets, items };
        for r in 0..rows {
            let (a, b) = (csr.offsets[r], csr.offsets[r + 1]);
            csr.items[a..b].sort_unstable();
        }
        csr
    }

    fn row(&self, r: usize) -> &[u32] {
        &self.items[self.offsets[r]..self.offsets[r + 1]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MesoPartition {
    t: i64,
    keys: Vec<Vec<i64>>,
    index: BTreeMap<Vec<i64>, usize>,
    edge_box: Vec<u32>,
    box_edges: Csr,
    box_vertices: Csr,
    point_boxes: Csr,
}

/// Nearest multiple index of `2t` to `twice`, ties to the smaller index.
fn nearest(twice: i64, t: i64) -> i64 {
    let step = 2 * t;
    let low = twice.div_euclid(step);
    if twice - step * low <= step * (low + 1) - twice {
        low
    } else {
        low + 1
    }
}

/// Box index owning the edge from `x` towards `+e_axis`.
pub fn edge_box_key(x: &[i64], axis: usize, t: i64) -> Vec<i64> {
    x.iter()
        .enumerate()
        .map(|(b, &c)| nearest(2 * c + i64::from(b == axis), t))
        .collect()
}

const NONE: u32 = u32::MAX;

impl MesoPartition {
    pub fn build(spec: &BoxSpec, t: i64) -> Result<Self> {
        let side = spec.side() as i64;
        if t < 1 || t > side {
            return Err(Error::InvalidParameter(format!("meso scale t must lie in [1, {side}], got {t}")));
        }
        let d = spec.dim();
        let mut edge_keys: Vec<(usize, Vec<i64>)> = Vec::with_capacity(spec.edge_count());
        let mut index = BTreeMap::new();
        for slot in spec.edges() {
            let key = edge_box_key(&spec.coords(slot / d), slot % d, t);
            index.entry(key.clone()).or_insert(0usize);
            edge_keys.push((slot, key));
        }
        let keys: Vec<Vec<i64>> = index.keys().cloned().collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let mut edge_box = vec![NONE; spec.slot_count()];
        let mut edge_pairs = Vec::with_capacity(edge_keys.len());
        let mut vertex_pairs = Vec::with_capacity(2 * edge_keys.len());
        for (slot, key) in &edge_keys {
            let id = index[key] as u32;
            edge_box[*slot] = id;
            edge_pairs.push((id, *slot as u32));
            let (a, b) = spec.endpoints(*slot);
            vertex_pairs.push((id, a as u32));
            vertex_pairs.push((id, b as u32));
        }
        vertex_pairs.sort_unstable();
        vertex_pairs.dedup();
        let point_pairs: Vec<(u32, u32)> = vertex_pairs.iter().map(|&(b, v)| (v, b)).collect();
        Ok(MesoPartition {
            t,
            box_edges: Csr::from_pairs(keys.len(), &edge_pairs),
            box_vertices: Csr::from_pairs(keys.len(), &vertex_pairs),
            point_boxes: Csr::from_pairs(spec.vertex_count(), &point_pairs),
            keys,
            index,
            edge_box,
        })
    }

    pub fn t(&self) -> i64 {
        self.t
    }

    pub fn box_count(&self) -> usize {
        self.keys.len()
    }

    pub fn key(&self, id: usize) -> &[i64] {
        &self.keys[id]
    }

    pub fn id(&self, key: &[i64]) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Box owning the edge in `slot`, if the slot is a real edge.
    pub fn box_of_edge(&self, slot: usize) -> Option<usize> {
        match self.edge_box[slot] {
            NONE => None,
            b => Some(b as usize),
        }
    }

    pub fn edges_of(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.box_edges.row(id).iter().map(|&s| s as usize)
    }

    pub fn vertices_of(&self, id: usize) -> &[u32] {
        self.box_vertices.row(id)
    }

    pub fn boxes_of_vertex(&self, v: usize) -> &[u32] {
        self.point_boxes.row(v)
    }

    /// Boxes at l-infinity index distance exactly 1 that exist in the domain.
    pub fn star_neighbors(&self, id: usize) -> Vec<usize> {
        let key = &self.keys[id];
        let d = key.len();
        let mut out = Vec::new();
        let mut offset = vec![-1i64; d];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let k: Vec<i64> = key.iter().zip(&offset).map(|(a, b)| a + b).collect();
                if let Some(&j) = self.index.get(&k) {
                    out.push(j);
                }
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if offset[a] < 1 {
                    offset[a] += 1;
                    break;
                }
                offset[a] = -1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_domain_in_one_box() {
        let s = BoxSpec::new(2, 2, 0).unwrap();
        let m = MesoPartition::build(&s, 5).unwrap();
        assert_eq!(m.box_count(), 1);
        assert_eq!(m.key(0), &[0, 0]);
        assert_eq!(m.edges_of(0).count(), 40);
        assert_eq!(m.vertices_of(0).len(), 25);
    }

    #[test]
    fn rejects_bad_scale() {
        let s = BoxSpec::new(2, 2, 0).unwrap();
        assert!(MesoPartition::build(&s, 0).is_err());
        assert!(MesoPartition::build(&s, 6).is_err());
    }

    #[test]
    fn nearest_breaks_ties_low() {
        // midpoint 0.5 with t = 1 is equidistant from 0 and 1
        assert_eq!(nearest(1, 1), 0);
        assert_eq!(nearest(-1, 1), -1);
        assert_eq!(nearest(4, 2), 1);
        assert_eq!(nearest(2, 2), 0);
        assert_eq!(nearest(3, 2), 1);
    }

    #[test]
    fn partition_sizes_sum_to_edge_count() {
        let s = BoxSpec::new(2, 2, 0).unwrap();
        for t in 1..=5 {
            let m = MesoPartition::build(&s, t).unwrap();
            let total: usize = (0..m.box_count()).map(|b| m.edges_of(b).count()).sum();
            assert_eq!(total, 40, "t = {t}");
        }
    }

    #[test]
    fn star_neighbors_interior() {
        let s = BoxSpec::new(2, 10, 0).unwrap();
        let m = MesoPartition::build(&s, 3).unwrap();
        let c = m.id(&[0, 0]).unwrap();
        assert_eq!(m.star_neighbors(c).len(), 8);
    }
}
