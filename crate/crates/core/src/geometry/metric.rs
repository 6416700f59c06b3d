use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::manifold::Point;
use crate::error::Result;
use crate::scalar::Real;

type MatrixEval<T> = Arc<dyn Fn(&Point<T>) -> Result<DMatrix<T>> + Send + Sync>;

/// Counts of positive and negative eigenvalues on the tangent space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
}

impl Signature {
    pub fn new(plus: usize, minus: usize) -> Self {
        Self { plus, minus }
    }

    pub fn dim(&self) -> usize {
        self.plus + self.minus
    }

    pub fn role(&self) -> MetricRole {
        match self.minus {
            0 => MetricRole::Riemannian,
            1 => MetricRole::Lorentzian,
            m => MetricRole::SemiRiemannian { index: m },
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.plus, self.minus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MetricRole {
    Riemannian,
    Lorentzian,
    SemiRiemannian { index: usize },
}

/// Point → symmetric bilinear form in ambient coordinates.
///
/// For embedded manifolds the matrix is an ambient extension whose restriction
/// to `T_pM` is the metric; `signature` always refers to that restriction.
#[derive(Clone)]
pub struct MetricField<T: Real> {
    eval: MatrixEval<T>,
    signature: Signature,
    label: String,
}

impl<T: Real> fmt::Debug for MetricField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricField({}, signature {})", self.label, self.signature)
    }
}

impl<T: Real> MetricField<T> {
    pub fn new(
        label: impl Into<String>,
        signature: Signature,
        eval: impl Fn(&Point<T>) -> Result<DMatrix<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            signature,
            label: label.into(),
        }
    }

    pub fn constant(label: impl Into<String>, signature: Signature, matrix: DMatrix<T>) -> Self {
        Self::new(label, signature, move |_| Ok(matrix.clone()))
    }

    /// Constant diagonal metric, e.g. `diag(1, -1)` for the Minkowski plane.
    pub fn diagonal(label: impl Into<String>, diag: &[T]) -> Self {
        let plus = diag.iter().filter(|d| **d > T::zero()).count();
        let minus = diag.iter().filter(|d| **d < T::zero()).count();
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(diag));
        Self::constant(label, Signature::new(plus, minus), m)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn role(&self) -> MetricRole {
        self.signature.role()
    }

    /// Ambient matrix at `p`, symmetrised.
    pub fn matrix_at(&self, p: &Point<T>) -> Result<DMatrix<T>> {
        let m = (self.eval)(p)?;
        let half = T::lit(0.5);
        Ok((&m + m.transpose()) * half)
    }

    /// `g_p(v, w)`, written so that swapping `v` and `w` is bitwise exact.
    pub fn inner(&self, p: &Point<T>, v: &DVector<T>, w: &DVector<T>) -> Result<T> {
        let m = self.matrix_at(p)?;
        Ok(bilinear(&m, v, w))
    }
}

pub fn bilinear<T: Real>(m: &DMatrix<T>, v: &DVector<T>, w: &DVector<T>) -> T {
    let n = v.len();
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            acc += m[(i, j)] * ((v[i] * w[j] + w[i] * v[j]) * half);
        }
    }
    acc
}
