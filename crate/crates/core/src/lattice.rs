//! Finite boxes of the nearest-neighbour lattice and Bernoulli edge configurations.
//!
//! Vertices are indexed row-major with axis 0 most significant, so index order
//! coincides with lexicographic order on coordinates. Edges are identified by
//! the slot `vertex * d + axis`, pointing from a vertex towards `+e_axis`;
//! slots whose target falls outside the box exist in the bit array but are
//! permanently closed.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// The box `[-L, L]^d` with a boundary-exclusion margin for measurement points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    d: usize,
    half_side: i64,
    margin: i64,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl BoxSpec {
    pub fn new(d: usize, half_side: i64, margin: i64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!("dimension must be >= 2, got {d}")));
        }
        if half_side < 1 {
            return Err(Error::InvalidSpec(format!("half-side must be >= 1, got {half_side}")));
        }
        if margin < 0 || margin >= half_side {
            return Err(Error::InvalidSpec(format!(
                "margin must satisfy 0 <= margin < L, got margin={margin}, L={half_side}"
            )));
        }
        let side = (2 * half_side + 1) as usize;
        let vertices = (side as u128).checked_pow(d as u32).filter(|&n| n < (1u128 << 40));
        if vertices.is_none() {
            return Err(Error::InvalidSpec(format!("box [-{half_side},{half_side}]^{d} is too large")));
        }
        let strides = (0..d).map(|a| side.pow((d - 1 - a) as u32)).collect();
        Ok(BoxSpec { d, half_side, margin, strides })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_side(&self) -> i64 {
        self.half_side
    }

    pub fn margin(&self) -> i64 {
        self.margin
    }

    pub fn side(&self) -> usize {
        (2 * self.half_side + 1) as usize
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn vertex_count(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    /// Number of nearest-neighbour edges with both endpoints in the box.
    pub fn edge_count(&self) -> usize {
        self.d * self.side().pow(self.d as u32 - 1) * (2 * self.half_side as usize)
    }

    /// Number of edge slots, including the closed placeholders on the upper faces.
    pub fn slot_count(&self) -> usize {
        self.vertex_count() * self.d
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.d && x.iter().all(|c| c.abs() <= self.half_side)
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        Some(x.iter().zip(&self.strides).map(|(&c, &s)| (c + self.half_side) as usize * s).sum())
    }

    pub fn index_or_err(&self, x: &[i64]) -> Result<usize> {
        self.index(x).ok_or_else(|| Error::OutOfBox(x.to_vec()))
    }

    #[inline]
    pub fn coord(&self, v: usize, axis: usize) -> i64 {
        ((v / self.strides[axis]) % self.side()) as i64 - self.half_side
    }

    pub fn coords(&self, v: usize) -> Vec<i64> {
        (0..self.d).map(|a| self.coord(v, a)).collect()
    }

    /// Whether slot `(v, axis)` is a real edge of the box.
    #[inline]
    pub fn edge_exists(&self, v: usize, axis: usize) -> bool {
        self.coord(v, axis) < self.half_side
    }

    /// Iterate the slots of real edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.slot_count()).filter(move |&s| self.edge_exists(s / self.d, s % self.d))
    }

    /// Both endpoints of the edge in `slot`.
    pub fn endpoints(&self, slot: usize) -> (usize, usize) {
        let v = slot / self.d;
        (v, v + self.strides[slot % self.d])
    }

    /// Distance from `v` to the nearest face, in the l-infinity sense.
    pub fn depth(&self, v: usize) -> i64 {
        (0..self.d).map(|a| self.half_side - self.coord(v, a).abs()).min().unwrap_or(0)
    }

    /// Vertices at l-infinity distance at least `margin` from the boundary, in
    /// lexicographic order.
    pub fn measurement_points(&self) -> Vec<Vec<i64>> {
        (0..self.vertex_count()).filter(|&v| self.depth(v) >= self.margin).map(|v| self.coords(v)).collect()
    }

    /// Smallest half-side that keeps a point at l1 norm `reach` plus the margin inside.
    pub fn require_reach(&self, reach: i64) -> Result<()> {
        let required = reach + self.margin;
        if required > self.half_side {
            return Err(Error::BoxTooSmall { required, actual: self.half_side });
        }
        Ok(())
    }
}

pub fn l1(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn l1_norm(a: &[i64]) -> i64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Packed bit array, least significant bit first within each word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeBits {
    words: Vec<u64>,
    len: usize,
}

impl EdgeBits {
    pub fn zeros(len: usize) -> Self {
        EdgeBits { words: vec![0; len.div_ceil(64)], len }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Immutable open/closed state of every edge in a box.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConfiguration {
    spec: BoxSpec,
    p: f64,
    seed: u64,
    bits: EdgeBits,
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

impl EdgeConfiguration {
    /// Sample each edge open independently with probability `p`. Edge `slot` is
    /// driven by the counter-based draw `(seed, slot)`.
    pub fn sample(spec: &BoxSpec, p: f64, seed: u64) -> Result<Self> {
        check_probability(p)?;
        let slots = spec.slot_count();
        let mut words = vec![0u64; slots.div_ceil(64)];
        words.par_iter_mut().enumerate().for_each(|(w, word)| {
            let start = w * 64;
            let end = (start + 64).min(slots);
            let mut acc = 0u64;
            for slot in start..end {
                let (v, axis) = (slot / spec.d, slot % spec.d);
                if spec.edge_exists(v, axis) && rng::bernoulli(seed, slot as u64, p) {
                    acc |= 1 << (slot - start);
                }
            }
            *word = acc;
        });
        Ok(EdgeConfiguration { spec: spec.clone(), p, seed, bits: EdgeBits { words, len: slots } })
    }

    /// Build a configuration whose open edges are chosen by `open(slot)`.
    pub fn from_fn(spec: &BoxSpec, p: f64, seed: u64, mut open: impl FnMut(usize) -> bool) -> Self {
        let mut bits = EdgeBits::zeros(spec.slot_count());
        for slot in spec.edges() {
            if open(slot) {
                bits.set(slot, true);
            }
        }
        EdgeConfiguration { spec: spec.clone(), p, seed, bits }
    }

    /// All edges closed.
    pub fn closed(spec: &BoxSpec) -> Self {
        Self::from_fn(spec, 0.0, 0, |_| false)
    }

    /// All edges open.
    pub fn open(spec: &BoxSpec) -> Self {
        Self::from_fn(spec, 1.0, 0, |_| true)
    }

    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn is_open_slot(&self, slot: usize) -> bool {
        self.bits.get(slot)
    }

    pub fn is_open(&self, x: &[i64], axis: usize) -> bool {
        self.spec.index(x).is_some_and(|v| self.bits.get(v * self.spec.d + axis))
    }

    /// Slot of the edge between two adjacent vertices.
    pub fn slot_between(&self, u: usize, v: usize) -> Option<usize> {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        (0..self.spec.d).find(|&a| hi - lo == self.spec.strides[a] && self.spec.edge_exists(lo, a)).map(|a| lo * self.spec.d + a)
    }

    /// Copy with the edge in `slot` set to `open`.
    pub fn with_edge(&self, slot: usize, open: bool) -> Self {
        let mut next = self.clone();
        if self.spec.edge_exists(slot / self.spec.d, slot % self.spec.d) {
            next.bits.set(slot, open);
        }
        next
    }

    /// Copy with the listed slots redrawn from the counter-based stream `seed`.
    pub fn with_resampled(&self, slots: &[usize], seed: u64) -> Self {
        let mut next = self.clone();
        for &slot in slots {
            next.bits.set(slot, rng::bernoulli(seed, slot as u64, self.p));
        }
        next
    }

    /// Call `f` on every vertex joined to `v` by an open edge, in increasing index order
    /// within each axis pair.
    #[inline]
    pub fn for_each_open_neighbor(&self, v: usize, mut f: impl FnMut(usize)) {
        let d = self.spec.d;
        for a in 0..d {
            let s = self.spec.strides[a];
            if v >= s && self.bits.get((v - s) * d + a) {
                f(v - s);
            }
            if self.bits.get(v * d + a) {
                f(v + s);
            }
        }
    }

    pub fn open_neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.spec.d);
        self.for_each_open_neighbor(v, |u| out.push(u));
        out.sort_unstable();
        out
    }

    pub fn open_count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn open_fraction(&self) -> f64 {
        self.open_count() as f64 / self.spec.edge_count() as f64
    }

    pub fn header(&self) -> ConfigHeader {
        ConfigHeader {
            d: self.spec.d as u32,
            half_side: self.spec.half_side as u32,
            p: self.p,
            seed: self.seed,
            edge_count: self.spec.edge_count() as u64,
            open_count: self.open_count() as u64,
        }
    }

    /// Binary dump: `d: u32`, `L: u32`, `p: f64`, `seed: u64` (all little-endian),
    /// then the edge bits in canonical order packed LSB-first into bytes.
    pub fn write_binary(&self, mut out: impl Write) -> Result<()> {
        out.write_all(&(self.spec.d as u32).to_le_bytes())?;
        out.write_all(&(self.spec.half_side as u32).to_le_bytes())?;
        out.write_all(&self.p.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        let mut payload = vec![0u8; self.spec.edge_count().div_ceil(8)];
        for (i, slot) in self.spec.edges().enumerate() {
            if self.bits.get(slot) {
                payload[i >> 3] |= 1 << (i & 7);
            }
        }
        out.write_all(&payload)?;
        Ok(())
    }

    pub fn read_binary(mut input: impl Read) -> Result<Self> {
        let mut header = [0u8; 24];
        input.read_exact(&mut header).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
        let d = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
        let half_side = u32::from_le_bytes(header[4..8].try_into().unwrap()) as i64;
        let p = f64::from_le_bytes(header[8..16].try_into().unwrap());
        let seed = u64::from_le_bytes(header[16..24].try_into().unwrap());
        let spec = BoxSpec::new(d, half_side, 0)?;
        check_probability(p)?;
        let mut payload = vec![0u8; spec.edge_count().div_ceil(8)];
        input.read_exact(&mut payload).map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
        let mut bits = EdgeBits::zeros(spec.slot_count());
        for (i, slot) in spec.edges().enumerate() {
            if payload[i >> 3] >> (i & 7) & 1 == 1 {
                bits.set(slot, true);
            }
        }
        Ok(EdgeConfiguration { spec, p, seed, bits })
    }
}

/// Human-readable sidecar for a binary configuration dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigHeader {
    pub d: u32,
    #[serde(rename = "L")]
    pub half_side: u32,
    pub p: f64,
    pub seed: u64,
    pub edge_count: u64,
    pub open_count: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(BoxSpec::new(1, 3, 0).is_err());
        assert!(BoxSpec::new(2, 0, 0).is_err());
        assert!(BoxSpec::new(2, 2, 2).is_err());
        assert!(BoxSpec::new(2, 2, -1).is_err());
    }

    #[test]
    fn counts() {
        let s = BoxSpec::new(2, 2, 0).unwrap();
        assert_eq!(s.vertex_count(), 25);
        assert_eq!(s.edge_count(), 40);
        assert_eq!(s.edges().count(), 40);
        let s3 = BoxSpec::new(3, 2, 0).unwrap();
        assert_eq!(s3.edges().count(), 3 * 25 * 4);
    }

    #[test]
    fn index_roundtrip_is_lexicographic() {
        let s = BoxSpec::new(3, 2, 0).unwrap();
        let mut prev: Option<Vec<i64>> = None;
        for v in 0..s.vertex_count() {
            let c = s.coords(v);
            assert_eq!(s.index(&c), Some(v));
            if let Some(p) = prev {
                assert!(p < c);
            }
            prev = Some(c);
        }
        assert_eq!(s.index(&[3, 0, 0]), None);
    }

    #[test]
    fn extreme_probabilities() {
        let s = BoxSpec::new(2, 2, 0).unwrap();
        assert_eq!(EdgeConfiguration::sample(&s, 1.0, 7).unwrap().open_count(), 40);
        assert_eq!(EdgeConfiguration::sample(&s, 0.0, 7).unwrap().open_count(), 0);
        assert!(EdgeConfiguration::sample(&s, 1.5, 7).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = BoxSpec::new(2, 20, 0).unwrap();
        let a = EdgeConfiguration::sample(&s, 0.6, 99).unwrap();
        let b = EdgeConfiguration::sample(&s, 0.6, 99).unwrap();
        let c = EdgeConfiguration::sample(&s, 0.6, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn neighbors_respect_faces() {
        let s = BoxSpec::new(2, 2, 0).unwrap();
        let cfg = EdgeConfiguration::open(&s);
        let corner = s.index(&[-2, -2]).unwrap();
        let nb: Vec<_> = cfg.open_neighbors(corner).iter().map(|&u| s.coords(u)).collect();
        assert_eq!(nb, vec![vec![-2, -1], vec![-1, -2]]);
        let edge = s.index(&[-2, 2]).unwrap();
        assert_eq!(cfg.open_neighbors(edge).len(), 2);
        assert_eq!(cfg.open_neighbors(s.index(&[0, 0]).unwrap()).len(), 4);
    }

    #[test]
    fn measurement_points_by_margin() {
        assert_eq!(BoxSpec::new(2, 2, 0).unwrap().measurement_points().len(), 25);
        let m1 = BoxSpec::new(2, 2, 1).unwrap().measurement_points();
        assert_eq!(m1.len(), 9);
        assert!(m1.iter().all(|x| x.iter().all(|c| c.abs() <= 1)));
        assert_eq!(BoxSpec::new(3, 3, 2).unwrap().measurement_points().len(), 27);
    }

    #[test]
    fn binary_roundtrip() {
        let s = BoxSpec::new(2, 5, 0).unwrap();
        let cfg = EdgeConfiguration::sample(&s, 0.5, 3).unwrap();
        let mut buf = Vec::new();
        cfg.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + s.edge_count().div_ceil(8));
        assert_eq!(&buf[0..4], &2u32.to_le_bytes());
        assert_eq!(&buf[8..16], &0.5f64.to_le_bytes());
        let back = EdgeConfiguration::read_binary(&buf[..]).unwrap();
        assert_eq!(back, cfg);
        assert!(EdgeConfiguration::read_binary(&buf[..30]).is_err());
    }
}
