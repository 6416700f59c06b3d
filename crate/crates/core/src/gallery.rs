//! Ready-made manifolds, metrics and Killing fields with known answers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::closed_approx::{rational_approximation, RATIONALITY_DENOMINATOR};
use crate::error::{GeoError, Result};
use crate::geometry::{
    Constraint, DeckMap, Geometry, ManifoldModel, MetricField, Point, VectorField,
};
use crate::killing::{
    combine_family, riemann_to_lorentz, KillingFamily, KillingField, TorusAction, TorusDirection,
};
use crate::scalar::Real;

/// Names accepted by [`by_name`].
pub const ENTRY_NAMES: [&str; 5] = [
    "flat-torus",
    "klein-bottle",
    "stationary-s3",
    "mapping-torus",
    "commuting-t4",
];

/// Known answers for an entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expected {
    /// Critical values of `f`, ascending.
    pub critical_values: Vec<f64>,
    /// Minimal periods of the critical orbits, in the same order.
    pub periods: Vec<f64>,
    pub degenerate_constant: bool,
    /// Number of periodic integral curves, when finite and known.
    pub periodic_orbits: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct GalleryEntry<T: Real> {
    pub name: String,
    pub geometry: Geometry<T>,
    pub killing: KillingField<T>,
    pub family: Option<KillingFamily<T>>,
    pub expected: Expected,
}

/// Gallery parameters with their defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub alpha: f64,
    pub slope: (f64, f64),
    pub theta: f64,
    pub m: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            alpha: std::f64::consts::SQRT_2,
            slope: (0.0, 1.0),
            theta: 1.0,
            m: 2,
        }
    }
}

pub fn by_name<T: Real>(name: &str, params: &Params) -> Result<GalleryEntry<T>> {
    match name {
        "flat-torus" => make_flat_lorentzian_torus(T::lit(params.slope.0), T::lit(params.slope.1)),
        "klein-bottle" => make_klein_bottle(),
        "stationary-s3" => make_stationary_sphere(T::lit(params.alpha)),
        "mapping-torus" => make_mapping_torus(T::lit(params.theta)),
        "commuting-t4" => make_commuting_family_example(params.m),
        other => Err(GeoError::Argument(format!(
            "unknown entry {other:?}; expected one of {}",
            ENTRY_NAMES.join(", ")
        ))),
    }
}

fn unit<T: Real>(dim: usize, i: usize) -> DVector<T> {
    let mut v = DVector::zeros(dim);
    v[i] = T::one();
    v
}

fn lattice_torus<T: Real>(name: &str, dim: usize) -> Result<ManifoldModel<T>> {
    let gens = (0..dim)
        .map(|i| (format!("e{}", i + 1), DeckMap::translation(unit(dim, i))))
        .collect();
    ManifoldModel::flat_quotient(name, dim, gens, vec![Some((T::zero(), T::one())); dim])
}

/// `R²/Z²` with `dx² − dt²` and `K = a∂_x + b∂_t`.
pub fn make_flat_lorentzian_torus<T: Real>(a: T, b: T) -> Result<GalleryEntry<T>> {
    if a == T::zero() && b == T::zero() {
        return Err(GeoError::Argument("slope must be nonzero".into()));
    }
    let manifold = Arc::new(lattice_torus("flat-torus", 2)?);
    let geometry = Geometry::new(manifold, MetricField::diagonal("dx2-dt2", &[T::one(), -T::one()]));
    let action = Arc::new(TorusAction::new(
        "T2",
        vec![
            VectorField::constant("dx", unit(2, 0)),
            VectorField::constant("dt", unit(2, 1)),
        ],
        Some(T::one()),
    ));
    let killing = KillingField::from_torus(
        &geometry,
        action,
        TorusDirection::real(vec![a, b]),
        format!("{}dx+{}dt", a.as_f64(), b.as_f64()),
    )?;
    let f = (a * a - b * b).as_f64();
    let periodic = if a == T::zero() || b == T::zero() {
        true
    } else {
        rational_approximation((a / b).as_f64(), RATIONALITY_DENOMINATOR).is_some()
    };
    Ok(GalleryEntry {
        name: "flat-torus".into(),
        geometry,
        killing,
        family: None,
        expected: Expected {
            critical_values: vec![f],
            periods: Vec::new(),
            degenerate_constant: true,
            periodic_orbits: if periodic { None } else { Some(0) },
        },
    })
}

/// The two Klein bottle deck generators `a(x,t) = (x+1, t)` and
/// `b(x,t) = (1−x, t+1)`.
pub fn klein_generators<T: Real>() -> Vec<(String, DeckMap<T>)> {
    let a = DeckMap::translation(DVector::from_vec(vec![T::one(), T::zero()]));
    let b = DeckMap::new(
        DMatrix::from_row_slice(2, 2, &[-T::one(), T::zero(), T::zero(), T::one()]),
        DVector::from_vec(vec![T::one(), T::one()]),
    );
    vec![("a".into(), a), ("b".into(), b)]
}

/// `R²` with `dx² − dt²` modulo the Klein bottle group, `K = ∂_t`.
pub fn make_klein_bottle<T: Real>() -> Result<GalleryEntry<T>> {
    let manifold = Arc::new(ManifoldModel::flat_quotient(
        "klein-bottle",
        2,
        klein_generators(),
        vec![Some((T::zero(), T::one())); 2],
    )?);
    let geometry = Geometry::new(manifold, MetricField::diagonal("dx2-dt2", &[T::one(), -T::one()]));
    let killing = KillingField::new(&geometry, VectorField::constant("dt", unit(2, 1)), "dt")?;
    Ok(GalleryEntry {
        name: "klein-bottle".into(),
        geometry,
        killing,
        family: None,
        expected: Expected {
            critical_values: vec![-1.0],
            periods: Vec::new(),
            degenerate_constant: true,
            periodic_orbits: None,
        },
    })
}

/// Position of the orbit through `(x0, t)` in the orbit space `[0, ½]`.
pub fn klein_orbit_coordinate<T: Real>(x0: T) -> T {
    let r = x0 - x0.floor();
    r.min(T::one() - r)
}

/// Minimal period of the `∂_t` orbit through `x0` on the Klein bottle.
pub fn klein_expected_period<T: Real>(x0: T) -> T {
    let u = klein_orbit_coordinate(x0);
    if u.abs() <= T::lit(1e-12) || (u - T::lit(0.5)).abs() <= T::lit(1e-12) {
        T::one()
    } else {
        T::lit(2.0)
    }
}

/// Rotation generators `(iz, 0)` and `(0, iw)` of the standard torus action
/// on `C² = R⁴`, with `z = x0 + i x1`, `w = x2 + i x3`.
pub fn sphere_torus_action<T: Real>() -> Arc<TorusAction<T>> {
    let rz = VectorField::new("iz", |p: &Point<T>| {
        DVector::from_vec(vec![-p[1], p[0], T::zero(), T::zero()])
    });
    let rw = VectorField::new("iw", |p: &Point<T>| {
        DVector::from_vec(vec![T::zero(), T::zero(), -p[3], p[2]])
    });
    Arc::new(TorusAction::new("T2(C2)", vec![rz, rw], Some(T::two_pi())))
}

/// `S³ ⊂ C²` with the Lorentzian metric built from the round metric and
/// `K = (iz, iαw)`.
pub fn make_stationary_sphere<T: Real>(alpha: T) -> Result<GalleryEntry<T>> {
    let manifold = Arc::new(ManifoldModel::embedded(
        "stationary-s3",
        4,
        Constraint::sphere(&[0, 1, 2, 3], T::one()),
    )?);
    let round = MetricField::diagonal("round", &[T::one(); 4]);
    let action = sphere_torus_action::<T>();
    let direction = TorusDirection::real(vec![T::one(), alpha]);
    let field = action.field(&direction.coords);
    let probe = KillingField::uncertified(field, "K");
    let metric = riemann_to_lorentz(&round, &probe);
    // the field can only vanish on the two coordinate circles
    for p in [[T::one(), T::zero(), T::zero(), T::zero()], [T::zero(), T::zero(), T::one(), T::zero()]] {
        metric.matrix_at(&DVector::from_row_slice(&p))?;
    }
    let geometry = Geometry::new(manifold, metric);
    let label = format!("(iz, i{}w)", alpha.as_f64());
    let killing = KillingField::from_torus(&geometry, action, direction, label)?;
    let a = alpha.as_f64();
    let tau = std::f64::consts::TAU;
    let mut critical = [(-a * a, tau / a.abs()), (-1.0, tau)];
    critical.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(GalleryEntry {
        name: "stationary-s3".into(),
        geometry,
        killing,
        family: None,
        expected: Expected {
            critical_values: critical.iter().map(|c| c.0).collect(),
            periods: critical.iter().map(|c| c.1).collect(),
            degenerate_constant: a.abs() == 1.0,
            periodic_orbits: Some(2),
        },
    })
}

/// Rotation by `theta` about the `x3` axis, fixing the poles `±e3`.
fn rotation_about_pole<T: Real>(theta: T) -> DMatrix<T> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(
        3,
        3,
        &[c, -s, T::zero(), s, c, T::zero(), T::zero(), T::zero(), T::one()],
    )
}

/// `(S² × R)` modulo `σ(p,t) = (−p,t)` and `τ(p,t) = (R_θ p, t+1)`, with
/// the product metric `h ⊕ (−dt²)` and `K = ∂_t`.
pub fn make_mapping_torus<T: Real>(theta: T) -> Result<GalleryEntry<T>> {
    let ratio = (theta / T::pi()).as_f64();
    if let Some((p, q)) = rational_approximation(ratio, RATIONALITY_DENOMINATOR) {
        return Err(GeoError::PeriodicPointsExist(format!(
            "theta/pi = {p}/{q} is rational, so the rotation has periodic points besides the pole"
        )));
    }
    let mut sigma = -DMatrix::<T>::identity(4, 4);
    sigma[(3, 3)] = T::one();
    let mut tau_lin = DMatrix::<T>::identity(4, 4);
    tau_lin
        .view_mut((0, 0), (3, 3))
        .copy_from(&rotation_about_pole(theta));
    let gens = vec![
        ("s".into(), DeckMap::new(sigma, DVector::zeros(4))),
        ("t".into(), DeckMap::new(tau_lin, unit(4, 3))),
    ];
    let manifold = Arc::new(ManifoldModel::product_quotient(
        "mapping-torus",
        4,
        Constraint::sphere(&[0, 1, 2], T::one()),
        gens,
        vec![None, None, None, Some((T::zero(), T::one()))],
    )?);
    let metric = MetricField::diagonal("h-dt2", &[T::one(), T::one(), T::one(), -T::one()]);
    let geometry = Geometry::new(manifold, metric);
    let killing = KillingField::new(&geometry, VectorField::constant("dt", unit(4, 3)), "dt")?;
    Ok(GalleryEntry {
        name: "mapping-torus".into(),
        geometry,
        killing,
        family: None,
        expected: Expected {
            critical_values: vec![-1.0],
            periods: vec![1.0],
            degenerate_constant: true,
            periodic_orbits: Some(1),
        },
    })
}

/// The pole class `[e3]` at height 0.
pub fn mapping_torus_pole<T: Real>() -> Point<T> {
    unit(4, 2)
}

/// Flat `T^{2+m}` with `dx² + dy² − Σ dt_i²` and the commuting family
/// `{∂_{t_1}, …, ∂_{t_m}}`; the entry's field is `∂_{t_1}`.
pub fn make_commuting_family_example<T: Real>(m: usize) -> Result<GalleryEntry<T>> {
    if !(1..=2).contains(&m) {
        return Err(GeoError::Argument(format!("m must be 1 or 2, got {m}")));
    }
    let dim = 2 + m;
    let manifold = Arc::new(lattice_torus("commuting-t4", dim)?);
    let diag: Vec<T> = (0..dim)
        .map(|i| if i < 2 { T::one() } else { -T::one() })
        .collect();
    let geometry = Geometry::new(manifold, MetricField::diagonal("flat", &diag));
    let members = (0..m)
        .map(|i| {
            let label = format!("dt{}", i + 1);
            KillingField::new(&geometry, VectorField::constant(label.clone(), unit(dim, 2 + i)), label)
        })
        .collect::<Result<Vec<_>>>()?;
    let family = KillingFamily::new(geometry.clone(), members, Some(T::one()))?;
    let mut x = vec![T::zero(); m];
    x[0] = T::one();
    let killing = combine_family(&family, &x)?;
    Ok(GalleryEntry {
        name: "commuting-t4".into(),
        geometry,
        killing,
        family: Some(family),
        expected: Expected {
            critical_values: vec![-1.0],
            periods: vec![1.0],
            degenerate_constant: true,
            periodic_orbits: None,
        },
    })
}
