//! Chemical distance on supercritical Bernoulli bond percolation clusters.
//!
//! The crate samples edge configurations on finite boxes of `Z^d`, labels open
//! clusters, and computes three distances between lattice points:
//!
//! * the chemical distance `D` (shortest open path),
//! * the regularized distance `D*(x, y) = D(x*, y*)` where `x*` is the closest
//!   point of the giant cluster,
//! * the renormalized distance `D^t`, which adds a red edge of length `K t`
//!   between any two vertices of the same mesoscopic box.
//!
//! On top of these sit Monte Carlo estimators (time constant, variance scaling,
//! moderate-deviation tails, mean gap, asymptotic shape) and the skeleton
//! machinery for subadditive approximation. Real-valued quantities are generic
//! over [`Scalar`]; the `f64` aliases below are what the experiments use.

// Negated float comparisons reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cluster;
pub mod distance;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod meso;
pub mod norm;
pub mod renorm;
pub mod replicate;
pub mod rng;
pub mod scalar;
pub mod skeleton;
pub mod stats;

pub use cluster::{project_star, ClusterLabels, StarProjection};
pub use distance::{bfs_distance, chemical_distance, constrained_distance, star_distance, DistanceField, Geodesic};
pub use error::{Error, Result};
pub use lattice::{BoxSpec, EdgeConfiguration};
pub use meso::MesoPartition;
pub use scalar::Scalar;

pub type NormEstimate = norm::NormEstimate<f64>;
pub type NormEstimate32 = norm::NormEstimate<f32>;
pub type ConvexGauge = norm::ConvexGauge<f64>;
pub type RedParams = renorm::RedParams<f64>;
pub type RedParams32 = renorm::RedParams<f32>;
pub type SupportFunctional = skeleton::SupportFunctional<f64>;
pub type SupportFunctional32 = skeleton::SupportFunctional<f32>;
pub type QxSet<'a> = skeleton::QxSet<'a, f64>;
pub type Summary = stats::Summary<f64>;
