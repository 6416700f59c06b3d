//! Periodic geodesics from Killing fields on compact semi-Riemannian
//! manifolds: critical orbits of `g(K,K)`, their certification by numerical
//! integration, and closed approximations of non-closed Killing fields.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix it to
//! `f64`, which is what the gallery, reports and command line use.

// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_approx;
pub mod critical;
pub mod error;
pub mod gallery;
pub mod geodesic;
pub mod geometry;
pub mod killing;
pub mod ode;
pub mod report;
pub mod scalar;

pub use error::{GeoError, Result};
pub use scalar::Real;

pub type Geometry64 = geometry::Geometry<f64>;
pub type Manifold64 = geometry::ManifoldModel<f64>;
pub type Metric64 = geometry::MetricField<f64>;
pub type Field64 = geometry::VectorField<f64>;
pub type Killing64 = killing::KillingField<f64>;
pub type Family64 = killing::KillingFamily<f64>;
pub type Curve64 = geodesic::CurveSample<f64>;
pub type Orbit64 = critical::CriticalOrbit<f64>;
pub type Entry64 = gallery::GalleryEntry<f64>;
pub type Point64 = geometry::Point<f64>;
