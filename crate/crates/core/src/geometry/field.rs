use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::manifold::Point;
use crate::scalar::Real;

type VectorFn<T> = Arc<dyn Fn(&Point<T>) -> DVector<T> + Send + Sync>;

/// Smooth vector field on ambient space, evaluated pointwise.
#[derive(Clone)]
pub struct VectorField<T: Real> {
    f: VectorFn<T>,
    label: String,
}

impl<T: Real> fmt::Debug for VectorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.label)
    }
}

impl<T: Real> VectorField<T> {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&Point<T>) -> DVector<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn constant(label: impl Into<String>, value: DVector<T>) -> Self {
        Self::new(label, move |_| value.clone())
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant("zero", DVector::zeros(dim))
    }

    /// `sum_i coeffs[i] * fields[i]`.
    pub fn linear_combination(
        label: impl Into<String>,
        fields: &[VectorField<T>],
        coeffs: &[T],
    ) -> Self {
        assert_eq!(fields.len(), coeffs.len());
        let parts: Vec<(VectorField<T>, T)> = fields
            .iter()
            .cloned()
            .zip(coeffs.iter().copied())
            .collect();
        Self::new(label, move |p| {
            let mut acc = DVector::zeros(p.len());
            for (field, c) in &parts {
                if *c != T::zero() {
                    acc += field.at(p) * *c;
                }
            }
            acc
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn at(&self, p: &Point<T>) -> DVector<T> {
        (self.f)(p)
    }

    /// Directional derivative `DX(p)[v]` by central differences.
    pub fn directional(&self, p: &Point<T>, v: &DVector<T>) -> DVector<T> {
        let nv = v.norm();
        if nv == T::zero() {
            return DVector::zeros(p.len());
        }
        let h = T::fd_step();
        let step = v * (h / nv);
        let plus = self.at(&(p + &step));
        let minus = self.at(&(p - &step));
        (plus - minus) * (nv / (h + h))
    }

    /// Second directional derivative `D²X(p)[v, v]`.
    pub fn second_directional(&self, p: &Point<T>, v: &DVector<T>) -> DVector<T> {
        let nv = v.norm();
        if nv == T::zero() {
            return DVector::zeros(p.len());
        }
        let h = T::fd_step2();
        let step = v * (h / nv);
        let plus = self.at(&(p + &step));
        let minus = self.at(&(p - &step));
        let mid = self.at(p);
        (plus + minus - mid * T::lit(2.0)) * (nv * nv / (h * h))
    }
}
