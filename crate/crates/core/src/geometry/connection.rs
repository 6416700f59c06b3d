//! Levi-Civita connection by finite differences, tangential projection for
//! embedded manifolds, and the covariant derivative built from both.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::field::VectorField;
use super::manifold::{ManifoldModel, Point};
use super::metric::{bilinear, MetricField, Signature};
use crate::error::{GeoError, Result};
use crate::scalar::Real;

const DET_TOL: f64 = 1e-12;

/// Christoffel symbols `Γ^k_ij`, stored densely as `[k][i][j]`.
#[derive(Clone, Debug)]
pub struct Christoffel<T: Real> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Christoffel<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// `Γ^k_ij v^i w^j`.
    pub fn contract(&self, v: &DVector<T>, w: &DVector<T>) -> DVector<T> {
        let n = self.dim;
        DVector::from_fn(n, |k, _| {
            let mut acc = T::zero();
            for i in 0..n {
                for j in 0..n {
                    acc += self.get(k, i, j) * v[i] * w[j];
                }
            }
            acc
        })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, b| a.max(b.abs()))
    }
}

/// Metric matrix, its inverse and first derivatives at one point.
#[derive(Clone, Debug)]
pub struct ConnectionData<T: Real> {
    pub metric: DMatrix<T>,
    pub inverse: DMatrix<T>,
    /// `derivatives[l] = ∂_l g`.
    pub derivatives: Vec<DMatrix<T>>,
    pub christoffel: Christoffel<T>,
}

/// A manifold together with a metric field on it.
#[derive(Clone, Debug)]
pub struct Geometry<T: Real> {
    pub manifold: Arc<ManifoldModel<T>>,
    pub metric: MetricField<T>,
}

impl<T: Real> Geometry<T> {
    pub fn new(manifold: Arc<ManifoldModel<T>>, metric: MetricField<T>) -> Self {
        Self { manifold, metric }
    }

    pub fn with_metric(&self, metric: MetricField<T>) -> Self {
        Self {
            manifold: self.manifold.clone(),
            metric,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.manifold.ambient_dim()
    }

    /// `g_p(v, w)` for a point on the manifold.
    pub fn metric_eval(&self, p: &Point<T>, v: &DVector<T>, w: &DVector<T>) -> Result<T> {
        self.manifold.check_on_manifold(p)?;
        self.metric.inner(p, v, w)
    }

    /// Metric, inverse, derivatives and Christoffel symbols of the ambient
    /// matrix field at `p`. Central differences with the first-derivative step.
    pub fn connection_data(&self, p: &Point<T>) -> Result<ConnectionData<T>> {
        let n = self.ambient_dim();
        let metric = self.metric.matrix_at(p)?;
        let det = metric.determinant();
        if !(det.abs() >= T::lit(DET_TOL)) {
            return Err(GeoError::SingularMetric { det: det.as_f64() });
        }
        let inverse = metric
            .clone()
            .try_inverse()
            .ok_or(GeoError::SingularMetric { det: det.as_f64() })?;
        let h = T::fd_step();
        let two_h = h + h;
        let mut derivatives = Vec::with_capacity(n);
        for l in 0..n {
            let mut a = p.clone();
            let mut b = p.clone();
            a[l] += h;
            b[l] -= h;
            let ga = self.metric.matrix_at(&a)?;
            let gb = self.metric.matrix_at(&b)?;
            derivatives.push((ga - gb) / two_h);
        }
        let half = T::lit(0.5);
        let mut data = vec![T::zero(); n * n * n];
        // lowered[m] for fixed (i, j): ∂_i g_jm + ∂_j g_im − ∂_m g_ij
        for i in 0..n {
            for j in i..n {
                let lowered: Vec<T> = (0..n)
                    .map(|m| {
                        (derivatives[i][(j, m)] + derivatives[j][(i, m)]) - derivatives[m][(i, j)]
                    })
                    .collect();
                for k in 0..n {
                    let mut acc = T::zero();
                    for (m, lm) in lowered.iter().enumerate() {
                        acc += inverse[(k, m)] * *lm;
                    }
                    let v = acc * half;
                    data[(k * n + i) * n + j] = v;
                    data[(k * n + j) * n + i] = v;
                }
            }
        }
        Ok(ConnectionData {
            metric,
            inverse,
            derivatives,
            christoffel: Christoffel { dim: n, data },
        })
    }

    /// Christoffel symbols of the ambient matrix field. On an embedded
    /// manifold the induced connection is the tangential part of this one.
    pub fn christoffel(&self, p: &Point<T>) -> Result<Christoffel<T>> {
        Ok(self.connection_data(p)?.christoffel)
    }

    /// Metric-orthogonal projection onto `T_pM` given precomputed data.
    fn tangential_with(&self, p: &Point<T>, inverse: &DMatrix<T>, w: &DVector<T>) -> Result<DVector<T>> {
        let Some(n) = self.manifold.normal(p) else {
            return Ok(w.clone());
        };
        let nu = inverse * &n;
        let nn = n.dot(&nu);
        if nn.abs() <= T::lit(1e-14) * (T::one() + n.norm_squared()) {
            return Err(GeoError::SingularMetric { det: nn.as_f64() });
        }
        Ok(w - nu * (n.dot(w) / nn))
    }

    /// Metric-orthogonal projection of an ambient vector onto `T_pM`.
    pub fn tangential(&self, p: &Point<T>, w: &DVector<T>) -> Result<DVector<T>> {
        if self.manifold.constraint().is_none() {
            return Ok(w.clone());
        }
        let data = self.connection_data(p)?;
        self.tangential_with(p, &data.inverse, w)
    }

    /// `∇_v X` at `p`.
    pub fn covariant_derivative(
        &self,
        field: &VectorField<T>,
        v: &DVector<T>,
        p: &Point<T>,
    ) -> Result<DVector<T>> {
        let data = self.connection_data(p)?;
        self.covariant_derivative_with(&data, field, v, p)
    }

    pub(crate) fn covariant_derivative_with(
        &self,
        data: &ConnectionData<T>,
        field: &VectorField<T>,
        v: &DVector<T>,
        p: &Point<T>,
    ) -> Result<DVector<T>> {
        let x = field.at(p);
        let ambient = field.directional(p, v) + data.christoffel.contract(v, &x);
        self.tangential_with(p, &data.inverse, &ambient)
    }

    /// Covariant acceleration `∇_{c'} c'` of a curve through `p` with
    /// velocity `v` and ambient second derivative `a`.
    pub fn acceleration_residual(
        &self,
        p: &Point<T>,
        v: &DVector<T>,
        a: &DVector<T>,
    ) -> Result<DVector<T>> {
        let data = self.connection_data(p)?;
        let ambient = a + data.christoffel.contract(v, v);
        self.tangential_with(p, &data.inverse, &ambient)
    }

    /// Ambient second derivative of the geodesic through `(p, v)`, including
    /// the normal force that keeps it on the constraint set.
    pub fn geodesic_acceleration(&self, p: &Point<T>, v: &DVector<T>) -> Result<DVector<T>> {
        let data = self.connection_data(p)?;
        let mut a = -data.christoffel.contract(v, v);
        if let Some(c) = self.manifold.constraint() {
            let n = c.gradient(p);
            let hess = c.hessian(p);
            let nu = &data.inverse * &n;
            let nn = n.dot(&nu);
            if nn.abs() <= T::lit(1e-14) {
                return Err(GeoError::SingularMetric { det: nn.as_f64() });
            }
            let curvature_term = v.dot(&(&hess * v));
            let lambda = -(n.dot(&a) + curvature_term) / nn;
            a += nu * lambda;
        }
        Ok(a)
    }

    /// Gram matrix `g(b_i, b_j)` of the given tangent vectors.
    pub fn restricted_metric(&self, p: &Point<T>, basis: &[DVector<T>]) -> Result<DMatrix<T>> {
        let m = self.metric.matrix_at(p)?;
        let k = basis.len();
        Ok(DMatrix::from_fn(k, k, |i, j| bilinear(&m, &basis[i], &basis[j])))
    }

    /// Eigenvalue sign count of the metric restricted to `T_pM`.
    pub fn signature_at(&self, p: &Point<T>) -> Result<Signature> {
        let basis = self.manifold.tangent_basis(p);
        let m = self.restricted_metric(p, &basis)?;
        let eig = SymmetricEigen::new(m);
        let scale = eig
            .eigenvalues
            .iter()
            .fold(T::zero(), |a, b| a.max(b.abs()));
        let thresh = T::lit(1e-12) * (T::one() + scale);
        let plus = eig.eigenvalues.iter().filter(|e| **e > thresh).count();
        let minus = eig.eigenvalues.iter().filter(|e| **e < -thresh).count();
        Ok(Signature::new(plus, minus))
    }

    /// Largest `|g_{γp}(dγ v, dγ w) − g_p(v, w)|` over deck generators.
    pub fn deck_isometry_defect(
        &self,
        p: &Point<T>,
        v: &DVector<T>,
        w: &DVector<T>,
    ) -> Result<T> {
        let base = self.metric.inner(p, v, w)?;
        let mut worst = T::zero();
        for g in self.manifold.generator_maps() {
            let q = g.apply(p);
            let val = self
                .metric
                .inner(&q, &g.push_vector(v), &g.push_vector(w))?;
            worst = worst.max((val - base).abs());
        }
        Ok(worst)
    }

    /// g-gradient of a function from its differential on a tangent basis.
    pub fn raise_index(
        &self,
        p: &Point<T>,
        basis: &[DVector<T>],
        differential: &[T],
    ) -> Result<DVector<T>> {
        let m = self.restricted_metric(p, basis)?;
        let rhs = DVector::from_row_slice(differential);
        let det = m.determinant();
        let coeffs = m
            .lu()
            .solve(&rhs)
            .ok_or(GeoError::SingularMetric { det: det.as_f64() })?;
        let mut out = DVector::zeros(self.ambient_dim());
        for (c, b) in coeffs.iter().zip(basis) {
            out += b * *c;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::manifold::Constraint;

    fn minkowski_plane() -> Geometry<f64> {
        let m = ManifoldModel::flat_quotient("plane", 2, vec![], vec![None, None]).unwrap();
        Geometry::new(Arc::new(m), MetricField::diagonal("dx2-dt2", &[1.0, -1.0]))
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn minkowski_inner_products() {
        let g = minkowski_plane();
        let p = v(&[0.2, 0.7]);
        assert_eq!(g.metric_eval(&p, &v(&[0.0, 1.0]), &v(&[0.0, 1.0])).unwrap(), -1.0);
        assert_eq!(g.metric_eval(&p, &v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn round_s3_restriction() {
        let s3 = ManifoldModel::embedded("s3", 4, Constraint::sphere(&[0, 1, 2, 3], 1.0)).unwrap();
        let g = Geometry::new(Arc::new(s3), MetricField::diagonal("euclid", &[1.0; 4]));
        let p = v(&[1.0, 0.0, 0.0, 0.0]);
        let e = v(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(g.metric_eval(&p, &e, &e).unwrap(), 1.0);
        let off = v(&[1.1, 0.0, 0.0, 0.0]);
        assert!(matches!(
            g.metric_eval(&off, &e, &e),
            Err(GeoError::OffManifold { .. })
        ));
    }

    #[test]
    fn flat_christoffels_vanish() {
        let g = minkowski_plane();
        let c = g.christoffel(&v(&[0.3, 0.4])).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn degenerate_metric_is_singular() {
        let m = ManifoldModel::flat_quotient("plane", 2, vec![], vec![None, None]).unwrap();
        let g = Geometry::new(
            Arc::new(m),
            MetricField::constant("null", Signature::new(1, 0), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])),
        );
        assert!(matches!(
            g.christoffel(&v(&[0.0, 0.0])),
            Err(GeoError::SingularMetric { .. })
        ));
    }

    #[test]
    fn signature_on_sphere_tangent_space() {
        let s2 = ManifoldModel::embedded("s2", 3, Constraint::sphere(&[0, 1, 2], 1.0)).unwrap();
        let g = Geometry::new(Arc::new(s2), MetricField::diagonal("euclid", &[1.0; 3]));
        let p = v(&[0.0, 0.6, 0.8]);
        assert_eq!(g.signature_at(&p).unwrap(), Signature::new(2, 0));
    }
}
