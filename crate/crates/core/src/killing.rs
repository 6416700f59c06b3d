//! Killing fields, their residual, the metric conversions built from a
//! timelike or nonvanishing Killing field, and commuting families.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;

use crate::error::{GeoError, Result};
use crate::geometry::{bilinear, Geometry, MetricField, Point, Signature, VectorField};
use crate::scalar::Real;

/// Residual at or below which a field is certified Killing.
pub const KILLING_TOL: f64 = 1e-8;
/// Pairwise bracket bound for a commuting family.
pub const BRACKET_TOL: f64 = 1e-7;
/// Number of sample points used when certifying a field.
pub const CERTIFY_SAMPLES: usize = 200;
const CERTIFY_SEED: u64 = 0x5eed;

/// Explicit torus action: commuting fields whose flows are circle actions
/// with a common period (2π for rotations, 1 for unit lattice translations).
#[derive(Clone, Debug)]
pub struct TorusAction<T: Real> {
    pub label: String,
    pub basis: Vec<VectorField<T>>,
    /// Period of each basis flow, if the basis fields are closed.
    pub period: Option<T>,
}

impl<T: Real> TorusAction<T> {
    pub fn new(label: impl Into<String>, basis: Vec<VectorField<T>>, period: Option<T>) -> Self {
        Self {
            label: label.into(),
            basis,
            period,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Field `Σ x_i X_i` for the given coordinates.
    pub fn field(&self, coords: &[T]) -> VectorField<T> {
        let label = format!("{}{:?}", self.label, coords.iter().map(|c| c.as_f64()).collect::<Vec<_>>());
        VectorField::linear_combination(label, &self.basis, coords)
    }
}

/// Coordinates of a Lie-algebra element in a torus basis. `exact` is present
/// when the coordinates are known as fractions.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusDirection<T: Real> {
    pub coords: Vec<T>,
    pub exact: Option<Vec<Ratio<i64>>>,
}

impl<T: Real> TorusDirection<T> {
    pub fn real(coords: Vec<T>) -> Self {
        Self {
            coords,
            exact: None,
        }
    }

    pub fn rational(fracs: Vec<Ratio<i64>>) -> Self {
        let coords = fracs
            .iter()
            .map(|r| T::lit(*r.numer() as f64) / T::lit(*r.denom() as f64))
            .collect();
        Self {
            coords,
            exact: Some(fracs),
        }
    }

    /// True iff every pairwise coordinate ratio is rational, which holds
    /// exactly when the stored fraction representation is present.
    pub fn is_rational(&self) -> bool {
        self.exact.is_some()
    }
}

/// Generator of a Killing field inside an explicit torus action.
#[derive(Clone, Debug)]
pub struct TorusGenerator<T: Real> {
    pub action: Arc<TorusAction<T>>,
    pub direction: TorusDirection<T>,
}

/// Outcome of sampling the Killing residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certification {
    pub max_residual: f64,
    pub samples: usize,
    pub passed: bool,
}

#[derive(Clone)]
pub struct KillingField<T: Real> {
    pub field: VectorField<T>,
    pub generator: Option<TorusGenerator<T>>,
    pub label: String,
    pub certification: Option<Certification>,
}

impl<T: Real> fmt::Debug for KillingField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KillingField")
            .field("label", &self.label)
            .field("generator", &self.generator.as_ref().map(|g| &g.direction))
            .field("certification", &self.certification)
            .finish()
    }
}

impl<T: Real> KillingField<T> {
    /// Wraps a field without checking it.
    pub fn uncertified(field: VectorField<T>, label: impl Into<String>) -> Self {
        Self {
            field,
            generator: None,
            label: label.into(),
            certification: None,
        }
    }

    /// Wraps a field and records whether it passes the residual bound on
    /// sampled points. Never fails on a large residual.
    pub fn new(geom: &Geometry<T>, field: VectorField<T>, label: impl Into<String>) -> Result<Self> {
        let mut k = Self::uncertified(field, label);
        k.certify(geom, CERTIFY_SAMPLES, CERTIFY_SEED)?;
        Ok(k)
    }

    /// The field `Σ x_i X_i` of a torus action.
    pub fn from_torus(
        geom: &Geometry<T>,
        action: Arc<TorusAction<T>>,
        direction: TorusDirection<T>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if direction.coords.len() != action.rank() {
            return Err(GeoError::Argument(format!(
                "generator has {} coordinates, torus rank is {}",
                direction.coords.len(),
                action.rank()
            )));
        }
        let field = action.field(&direction.coords);
        let mut k = Self::new(geom, field, label)?;
        k.generator = Some(TorusGenerator { action, direction });
        Ok(k)
    }

    pub fn certify(&mut self, geom: &Geometry<T>, samples: usize, seed: u64) -> Result<Certification> {
        let points = geom.manifold.sample_many(samples, seed);
        let mut worst = T::zero();
        for p in &points {
            worst = worst.max(killing_residual(geom, &self.field, p)?);
        }
        let cert = Certification {
            max_residual: worst.as_f64(),
            samples,
            passed: worst <= T::lit(KILLING_TOL),
        };
        self.certification = Some(cert);
        Ok(cert)
    }

    pub fn is_certified(&self) -> bool {
        self.certification.is_some_and(|c| c.passed)
    }

    #[inline]
    pub fn at(&self, p: &Point<T>) -> DVector<T> {
        self.field.at(p)
    }
}

/// Largest entry of the symmetric part of `g(∇_{v_i}K, v_j)` over a
/// Euclidean-orthonormal tangent probe basis.
pub fn killing_residual<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, p: &Point<T>) -> Result<T> {
    let data = geom.connection_data(p)?;
    let basis = geom.manifold.tangent_basis(p);
    let derivs: Vec<DVector<T>> = basis
        .iter()
        .map(|v| geom.covariant_derivative_with(&data, k, v, p))
        .collect::<Result<_>>()?;
    let mut worst = T::zero();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let s = bilinear(&data.metric, &derivs[i], &basis[j])
                + bilinear(&data.metric, &derivs[j], &basis[i]);
            worst = worst.max(s.abs());
        }
    }
    Ok(worst)
}

/// `m − 2 (m k)(m k)ᵀ / kᵀ m k`, the shared form of both conversions.
fn flip_along<T: Real>(m: &DMatrix<T>, k: &DVector<T>) -> (DMatrix<T>, T) {
    let mk = m * k;
    let kk = k.dot(&mk);
    let two = T::lit(2.0);
    (m - (&mk * mk.transpose()) * (two / kk), kk)
}

/// Riemannian metric `g_R(v,w) = g(v,w) − 2 g(v,K) g(w,K) / g(K,K)` built
/// from a Lorentzian metric and a timelike field. Evaluated lazily.
pub fn lorentz_to_riemann<T: Real>(g: &MetricField<T>, k: &KillingField<T>) -> MetricField<T> {
    let sig = g.signature();
    let base = g.clone();
    let field = k.field.clone();
    MetricField::new(
        format!("R[{}; {}]", g.label(), k.label),
        Signature::new(sig.plus + sig.minus, 0),
        move |p| {
            let m = base.matrix_at(p)?;
            let kp = field.at(p);
            let (out, f) = flip_along(&m, &kp);
            if !(f < T::lit(-1e-10)) {
                return Err(GeoError::NotTimelike { value: f.as_f64() });
            }
            Ok(out)
        },
    )
}

/// Lorentzian metric `g(v,w) = g_R(v,w) − 2 g_R(v,K) g_R(w,K) / g_R(K,K)`
/// built from a Riemannian metric and a nonvanishing field. Evaluated lazily.
pub fn riemann_to_lorentz<T: Real>(g_r: &MetricField<T>, k: &KillingField<T>) -> MetricField<T> {
    let sig = g_r.signature();
    let base = g_r.clone();
    let field = k.field.clone();
    MetricField::new(
        format!("L[{}; {}]", g_r.label(), k.label),
        Signature::new(sig.dim().saturating_sub(1), 1),
        move |p| {
            let kp = field.at(p);
            let norm = kp.norm();
            if !(norm >= T::lit(1e-12)) {
                return Err(GeoError::FieldVanishes { norm: norm.as_f64() });
            }
            let m = base.matrix_at(p)?;
            Ok(flip_along(&m, &kp).0)
        },
    )
}

/// Coordinate bracket `[X,Y] = DY·X − DX·Y` at `p`.
pub fn lie_bracket<T: Real>(x: &VectorField<T>, y: &VectorField<T>, p: &Point<T>) -> DVector<T> {
    let xp = x.at(p);
    let yp = y.at(p);
    y.directional(p, &xp) - x.directional(p, &yp)
}

/// Killing fields `K^1, …, K^m` sharing one geometry.
#[derive(Clone, Debug)]
pub struct KillingFamily<T: Real> {
    pub members: Vec<KillingField<T>>,
    pub commuting: bool,
    pub geometry: Geometry<T>,
    action: Arc<TorusAction<T>>,
}

impl<T: Real> KillingFamily<T> {
    /// Builds the family and checks pairwise brackets on sampled points.
    pub fn new(geometry: Geometry<T>, members: Vec<KillingField<T>>, period: Option<T>) -> Result<Self> {
        if members.is_empty() {
            return Err(GeoError::Argument("empty Killing family".into()));
        }
        let points = geometry.manifold.sample_many(64, CERTIFY_SEED);
        let tol = T::lit(BRACKET_TOL);
        let mut commuting = true;
        'outer: for i in 0..members.len() {
            for j in i + 1..members.len() {
                for p in &points {
                    if lie_bracket(&members[i].field, &members[j].field, p).norm() > tol {
                        commuting = false;
                        break 'outer;
                    }
                }
            }
        }
        let label = members
            .iter()
            .map(|m| m.label.as_str())
            .collect::<Vec<_>>()
            .join(",");
        let action = Arc::new(TorusAction::new(
            format!("span[{label}]"),
            members.iter().map(|m| m.field.clone()).collect(),
            period,
        ));
        Ok(Self {
            members,
            commuting,
            geometry,
            action,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn action(&self) -> &Arc<TorusAction<T>> {
        &self.action
    }
}

/// `A(q)_ij = g(K^i_q, K^j_q)`.
pub fn gram_matrix<T: Real>(family: &KillingFamily<T>, q: &Point<T>) -> Result<DMatrix<T>> {
    let m = family.geometry.metric.matrix_at(q)?;
    let ks: Vec<DVector<T>> = family.members.iter().map(|k| k.at(q)).collect();
    let n = ks.len();
    Ok(DMatrix::from_fn(n, n, |i, j| bilinear(&m, &ks[i], &ks[j])))
}

/// `Σ x_i K^i` for a commuting family, with generator coordinates `x`.
pub fn combine_family<T: Real>(family: &KillingFamily<T>, x: &[T]) -> Result<KillingField<T>> {
    if !family.commuting {
        return Err(GeoError::Argument("family is not commuting".into()));
    }
    if x.len() != family.len() {
        return Err(GeoError::Argument(format!(
            "expected {} coefficients, got {}",
            family.len(),
            x.len()
        )));
    }
    if x.iter().all(|c| *c == T::zero()) {
        return Err(GeoError::Argument("zero coefficient vector".into()));
    }
    let label = format!(
        "combine{:?}",
        x.iter().map(|c| c.as_f64()).collect::<Vec<_>>()
    );
    KillingField::from_torus(
        &family.geometry,
        family.action.clone(),
        TorusDirection::real(x.to_vec()),
        label,
    )
}
