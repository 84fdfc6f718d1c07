//! Empirical norm `mu` on a fan of lattice directions, extended to all of `R^d`
//! by homogeneity and convexity through the gauge of a convex hull.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::l1_norm;
use crate::scalar::Scalar;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub fn is_primitive(y: &[i64]) -> bool {
    y.iter().fold(0, |g, &c| gcd(g, c)) == 1
}

/// Split `y` into `(m, u)` with `u` primitive and `y = m u`. Zero maps to `(0, y)`.
pub fn primitive_part(y: &[i64]) -> (i64, Vec<i64>) {
    let g = y.iter().fold(0, |g, &c| gcd(g, c));
    if g == 0 {
        return (0, y.to_vec());
    }
    (g, y.iter().map(|c| c / g).collect())
}

/// Primitive vectors with coordinates in `{0, ±1, ±2}`, in lexicographic order.
pub fn direction_fan(d: usize) -> Vec<Vec<i64>> {
    let total = 5usize.pow(d as u32);
    let mut out: Vec<Vec<i64>> = (0..total)
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let c = (code % 5) as i64 - 2;
                    code /= 5;
                    c
                })
                .collect::<Vec<i64>>()
        })
        .filter(|y| is_primitive(y))
        .collect();
    out.sort();
    out
}

/// Images of `y` under coordinate permutations and sign flips, sorted and deduplicated.
pub fn symmetry_orbit(y: &[i64]) -> Vec<Vec<i64>> {
    let d = y.len();
    let mut perms = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &perms {
            for i in 0..d {
                if !p.contains(&i) {
                    let mut q = p.clone();
                    q.push(i);
                    next.push(q);
                }
            }
        }
        perms = next;
    }
    let mut out = Vec::new();
    for p in &perms {
        for signs in 0..(1u32 << d) {
            out.push(
                (0..d)
                    .map(|i| {
                        let c = y[p[i]];
                        if signs >> i & 1 == 1 {
                            -c
                        } else {
                            c
                        }
                    })
                    .collect::<Vec<i64>>(),
            );
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Orbit representative: absolute values sorted in decreasing order.
pub fn orbit_representative(y: &[i64]) -> Vec<i64> {
    let mut r: Vec<i64> = y.iter().map(|c| c.abs()).collect();
    r.sort_unstable_by(|a, b| b.cmp(a));
    r
}

/// Gauge of a centrally symmetric polytope: `g(y) = max_f <a_f, y>` where each
/// facet satisfies `<a_f, v> = 1` on its vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexGauge<T: Scalar> {
    facets: Vec<Vec<T>>,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn det3<T: Scalar>(m: [[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl<T: Scalar> ConvexGauge<T> {
    /// Hull of `points`, which must surround the origin.
    pub fn from_points(points: &[Vec<T>]) -> Result<Self> {
        let d = points.first().map(Vec::len).ok_or_else(|| Error::DegenerateHull("no points".into()))?;
        match d {
            2 => Self::hull2(points),
            3 => Self::hull3(points),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    fn tol() -> T {
        T::epsilon().sqrt() * T::of(1e-2)
    }

    fn hull2(points: &[Vec<T>]) -> Result<Self> {
        let mut pts: Vec<(T, T)> = points.iter().map(|p| (p[0], p[1])).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::DegenerateHull("fewer than three distinct points".into()));
        }
        let cross = |o: (T, T), a: (T, T), b: (T, T)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
        let scale = pts.iter().map(|p| p.0.abs().max(p.1.abs())).fold(T::zero(), T::max);
        let eps = Self::tol() * scale * scale;
        let mut hull: Vec<(T, T)> = Vec::new();
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &(T, T)>> =
                if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
            for &p in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        if hull.len() < 3 {
            return Err(Error::DegenerateHull("collinear direction fan".into()));
        }
        let mut facets = Vec::with_capacity(hull.len());
        for i in 0..hull.len() {
            let (v1, v2) = (hull[i], hull[(i + 1) % hull.len()]);
            let det = v1.0 * v2.1 - v2.0 * v1.1;
            if det <= eps {
                return Err(Error::DegenerateHull("origin is not interior to the fan hull".into()));
            }
            facets.push(vec![(v2.1 - v1.1) / det, (v1.0 - v2.0) / det]);
        }
        Ok(ConvexGauge { facets })
    }

    fn hull3(points: &[Vec<T>]) -> Result<Self> {
        let n = points.len();
        let scale = points.iter().flat_map(|p| p.iter().map(|c| c.abs())).fold(T::zero(), T::max);
        let slack = Self::tol();
        let mut facets: Vec<Vec<T>> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (a, b, c) = (&points[i], &points[j], &points[k]);
                    let m = [[a[0], a[1], a[2]], [b[0], b[1], b[2]], [c[0], c[1], c[2]]];
                    let det = det3(m);
                    if det.abs() <= slack * scale * scale * scale {
                        continue;
                    }
                    // Cramer's rule for M a = (1, 1, 1).
                    let col = |col: usize| {
                        let mut mm = m;
                        for row in mm.iter_mut() {
                            row[col] = T::one();
                        }
                        det3(mm) / det
                    };
                    let normal = vec![col(0), col(1), col(2)];
                    if points.iter().all(|p| dot(&normal, p) <= T::one() + slack)
                        && !facets.iter().any(|f| f.iter().zip(&normal).all(|(x, y)| (*x - *y).abs() <= slack * (T::one() + x.abs())))
                    {
                        facets.push(normal);
                    }
                }
            }
        }
        if facets.len() < 4 {
            return Err(Error::DegenerateHull("direction fan does not span R^3".into()));
        }
        Ok(ConvexGauge { facets })
    }

    pub fn facets(&self) -> &[Vec<T>] {
        &self.facets
    }

    pub fn gauge(&self, y: &[T]) -> T {
        self.facets.iter().map(|f| dot(f, y)).fold(T::neg_infinity(), T::max).max(T::zero())
    }

    /// Average of the facet normals attaining the gauge at `y`: a subgradient of the
    /// gauge, hence a supporting linear form at `y`.
    pub fn support_normal(&self, y: &[T]) -> Option<Vec<T>> {
        let g = self.gauge(y);
        let tol = Self::tol() * (T::one() + g.abs());
        let active: Vec<&Vec<T>> = self.facets.iter().filter(|f| dot(f, y) >= g - tol).collect();
        if active.is_empty() || g <= T::zero() {
            return None;
        }
        let count = T::of(active.len() as f64);
        Some((0..y.len()).map(|a| active.iter().map(|f| f[a]).sum::<T>() / count).collect())
    }
}

/// Estimate of `mu` at one fan direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionEstimate<T: Scalar> {
    pub direction: Vec<i64>,
    /// Estimated `mu(u)` for the primitive direction `u`.
    pub value: T,
    pub se: T,
    pub ci_low: T,
    pub ci_high: T,
}

impl<T: Scalar> DirectionEstimate<T> {
    /// `mu(u) / |u|_1`.
    pub fn per_unit(&self) -> T {
        self.value / T::of_int(l1_norm(&self.direction))
    }
}

/// Provenance of a norm estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateMethod {
    pub n: i64,
    pub replications: usize,
    pub master_seed: Option<u64>,
    pub p: f64,
}

/// Estimated norm on the direction fan with its convex extension.
#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate<T: Scalar> {
    dim: usize,
    directions: Vec<DirectionEstimate<T>>,
    method: EstimateMethod,
    #[serde(skip)]
    gauge: Option<ConvexGauge<T>>,
}

impl<T: Scalar> NormEstimate<T> {
    /// Build from per-direction estimates. The hull extension is available for `d` in {2, 3}.
    pub fn new(dim: usize, mut directions: Vec<DirectionEstimate<T>>, method: EstimateMethod) -> Result<Self> {
        if directions.iter().any(|e| e.direction.len() != dim || !is_primitive(&e.direction)) {
            return Err(Error::InvalidParameter("norm directions must be primitive vectors of the box dimension".into()));
        }
        if directions.iter().any(|e| !(e.value > T::zero())) {
            return Err(Error::InvalidParameter("norm estimates must be positive".into()));
        }
        directions.sort_by(|a, b| a.direction.cmp(&b.direction));
        let gauge = if dim == 2 || dim == 3 {
            let pts: Vec<Vec<T>> = directions
                .iter()
                .map(|e| e.direction.iter().map(|&c| T::of_int(c) / e.value).collect())
                .collect();
            Some(ConvexGauge::from_points(&pts)?)
        } else {
            None
        };
        Ok(NormEstimate { dim, directions, method, gauge })
    }

    /// The l1 norm on the full fan, i.e. the exact answer at `p = 1`.
    pub fn l1(dim: usize) -> Result<Self> {
        let directions = direction_fan(dim)
            .into_iter()
            .map(|u| {
                let v = T::of_int(l1_norm(&u));
                DirectionEstimate { direction: u, value: v, se: T::zero(), ci_low: v, ci_high: v }
            })
            .collect();
        Self::new(dim, directions, EstimateMethod { n: 0, replications: 0, master_seed: None, p: 1.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> &EstimateMethod {
        &self.method
    }

    pub fn directions(&self) -> &[DirectionEstimate<T>] {
        &self.directions
    }

    /// Raw estimate at a fan direction or an integer multiple of one.
    pub fn raw(&self, y: &[i64]) -> Option<(T, T)> {
        let (m, u) = primitive_part(y);
        if m == 0 {
            return Some((T::zero(), T::zero()));
        }
        self.directions
            .binary_search_by(|e| e.direction.as_slice().cmp(&u))
            .ok()
            .map(|i| (T::of_int(m) * self.directions[i].value, T::of_int(m) * self.directions[i].se))
    }

    pub fn gauge(&self) -> Result<&ConvexGauge<T>> {
        self.gauge.as_ref().ok_or(Error::UnsupportedDimension(self.dim))
    }

    /// Convex, homogeneous extension of the estimate to a real vector.
    pub fn norm(&self, y: &[T]) -> Result<T> {
        Ok(self.gauge()?.gauge(y))
    }

    pub fn norm_int(&self, y: &[i64]) -> Result<T> {
        let v: Vec<T> = y.iter().map(|&c| T::of_int(c)).collect();
        self.norm(&v)
    }
}
