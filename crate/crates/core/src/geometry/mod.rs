//! Manifolds, metrics and the Levi-Civita connection in ambient coordinates.

mod connection;
mod field;
mod manifold;
mod metric;

pub use connection::{Christoffel, ConnectionData, Geometry};
pub use field::VectorField;
pub use manifold::{
    Constraint, DeckElement, DeckMap, ImageTracker, Letter, ManifoldKind, ManifoldModel, Point,
    Word, DEFAULT_MAX_WORD_LEN, ON_MANIFOLD_TOL,
};
pub use metric::bilinear;
pub use metric::{MetricField, MetricRole, Signature};
