//! Critical orbits of `f = g(K,K)` and their certification as periodic
//! geodesics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::geodesic::{
    detect_period, directed_distance, flow, flow_sampled, geodesic_residual, PeriodCertificate,
    PeriodOptions, TOL_GEO, TOL_PERIOD,
};
use crate::geometry::{Geometry, Point, VectorField};
use crate::killing::{lorentz_to_riemann, KillingField};
use crate::ode::OdeOptions;
use crate::scalar::Real;

/// Gradient norm below which a point counts as critical.
pub const GRAD_TOL: f64 = 1e-7;
/// Transverse Hessian eigenvalues within this of zero are indeterminate.
pub const HESSIAN_TOL: f64 = 1e-6;
/// Sample variance below which `f` is treated as constant.
pub const VARIANCE_TOL: f64 = 1e-12;
/// Quotient distance under which two critical points share an orbit.
pub const ORBIT_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    Min,
    Max,
    Saddle,
    /// A transverse Hessian eigenvalue is too close to zero to decide.
    Degenerate,
    /// `f` is constant, so every point is critical.
    DegenerateConstant,
}

#[derive(Clone, Debug)]
pub struct CriticalOrbit<T: Real> {
    pub representative: Point<T>,
    pub f_value: T,
    pub grad_norm: T,
    pub classification: Classification,
    pub geodesic_residual: T,
    pub period: Option<T>,
    pub certificate: Option<PeriodCertificate<T>>,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub budget: usize,
    pub seed: u64,
    pub horizon: f64,
    pub tol_geo: f64,
    pub tol_period: f64,
    pub variance_samples: usize,
    pub max_iterations: usize,
    pub ode: OdeOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 64,
            seed: 42,
            horizon: 50.0,
            tol_geo: TOL_GEO,
            tol_period: TOL_PERIOD,
            variance_samples: 256,
            max_iterations: 400,
            ode: OdeOptions::default(),
        }
    }
}

impl SearchOptions {
    fn period_options(&self) -> PeriodOptions {
        PeriodOptions {
            tol_period: self.tol_period,
            ode: self.ode,
            ..PeriodOptions::default()
        }
    }
}

/// `f(p) = g(K_p, K_p)`.
pub fn f_eval<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, p: &Point<T>) -> Result<T> {
    let kp = k.at(p);
    geom.metric.inner(p, &kp, &kp)
}

/// `∇_K K` at `p`.
pub fn nabla_k_k<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, p: &Point<T>) -> Result<DVector<T>> {
    let kp = k.at(p);
    geom.covariant_derivative(k, &kp, p)
}

/// `df(b_i) = 2 g(∇_{b_i} K, K)` on the given tangent vectors.
pub fn differential<T: Real>(
    geom: &Geometry<T>,
    k: &VectorField<T>,
    p: &Point<T>,
    basis: &[DVector<T>],
) -> Result<Vec<T>> {
    let data = geom.connection_data(p)?;
    let kp = k.at(p);
    let two = T::lit(2.0);
    basis
        .iter()
        .map(|b| {
            let d = geom.covariant_derivative_with(&data, k, b, p)?;
            Ok(two * crate::geometry::bilinear(&data.metric, &d, &kp))
        })
        .collect()
}

/// The `g`-gradient of `f`, built from its differential.
pub fn grad_f<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, p: &Point<T>) -> Result<DVector<T>> {
    let basis = geom.manifold.tangent_basis(p);
    let df = differential(geom, k, p, &basis)?;
    geom.raise_index(p, &basis, &df)
}

/// Euclidean-orthonormal basis of the tangent directions orthogonal to `K_p`.
pub fn transverse_basis<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, p: &Point<T>) -> Vec<DVector<T>> {
    let kp = k.at(p);
    let mut frame: Vec<DVector<T>> = Vec::new();
    let has_flow = kp.norm() > T::lit(1e-12);
    if has_flow {
        frame.push(kp.normalize());
    }
    for b in geom.manifold.tangent_basis(p) {
        let mut r = b.clone();
        for e in &frame {
            r -= e * e.dot(&r);
        }
        let n = r.norm();
        if n > T::lit(1e-8) {
            frame.push(r / n);
        }
    }
    if has_flow {
        frame.remove(0);
    }
    frame
}

fn retract<T: Real>(geom: &Geometry<T>, p: &Point<T>, step: &DVector<T>) -> Result<Point<T>> {
    geom.manifold.project_point(&(p + step))
}

/// Hessian of `y ↦ f(R(p + Σ y_j e_j))` at `y = 0` by central differences.
pub fn transverse_hessian<T: Real>(
    geom: &Geometry<T>,
    k: &VectorField<T>,
    p: &Point<T>,
    basis: &[DVector<T>],
) -> Result<DMatrix<T>> {
    let h = T::fd_step2();
    let m = basis.len();
    let f0 = f_eval(geom, k, p)?;
    let fat = |y: &[(usize, T)]| -> Result<T> {
        let mut step = DVector::zeros(p.len());
        for (j, c) in y {
            step += &basis[*j] * *c;
        }
        f_eval(geom, k, &retract(geom, p, &step)?)
    };
    let mut hess = DMatrix::zeros(m, m);
    let four_h2 = T::lit(4.0) * h * h;
    for i in 0..m {
        let fp = fat(&[(i, h)])?;
        let fm = fat(&[(i, -h)])?;
        hess[(i, i)] = (fp - f0 * T::lit(2.0) + fm) / (h * h);
        for j in i + 1..m {
            let fpp = fat(&[(i, h), (j, h)])?;
            let fpm = fat(&[(i, h), (j, -h)])?;
            let fmp = fat(&[(i, -h), (j, h)])?;
            let fmm = fat(&[(i, -h), (j, -h)])?;
            let v = (fpp - fpm - fmp + fmm) / four_h2;
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Second-order classification of a critical point transverse to the flow.
pub fn classify_critical<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, p: &Point<T>) -> Result<Classification> {
    let g = grad_f(geom, k, p)?.norm();
    if g > T::lit(GRAD_TOL) {
        return Err(GeoError::NotCritical(format!("gradient norm {:e}", g.as_f64())));
    }
    let basis = transverse_basis(geom, k, p);
    let hess = transverse_hessian(geom, k, p, &basis)?;
    let eig = SymmetricEigen::new(hess).eigenvalues;
    let tol = T::lit(HESSIAN_TOL);
    if eig.iter().all(|e| e.abs() <= tol) && locally_constant(geom, k, p, &basis)? {
        return Err(GeoError::NotCritical("f is constant near the point".into()));
    }
    if eig.iter().any(|e| e.abs() <= tol) {
        return Ok(Classification::Degenerate);
    }
    let pos = eig.iter().filter(|e| **e > T::zero()).count();
    Ok(if pos == eig.len() {
        Classification::Min
    } else if pos == 0 {
        Classification::Max
    } else {
        Classification::Saddle
    })
}

fn locally_constant<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, p: &Point<T>, basis: &[DVector<T>]) -> Result<bool> {
    let f0 = f_eval(geom, k, p)?;
    let r = T::lit(0.05);
    for b in basis {
        for s in [r, -r] {
            let f = f_eval(geom, k, &retract(geom, p, &(b * s))?)?;
            if (f - f0).abs() > T::lit(1e-12) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Gradient-like step direction: `f`-gradient for the auxiliary Riemannian
/// metric where `K` is timelike, Euclidean otherwise. Also returns `df` of it.
fn ascent_direction<T: Real>(
    geom: &Geometry<T>,
    aux: &Geometry<T>,
    k: &VectorField<T>,
    p: &Point<T>,
) -> Result<(DVector<T>, T)> {
    let basis = geom.manifold.tangent_basis(p);
    let df = differential(geom, k, p, &basis)?;
    let dir = match aux.raise_index(p, &basis, &df) {
        Ok(d) => d,
        Err(GeoError::NotTimelike { .. }) | Err(GeoError::SingularMetric { .. }) => {
            let mut d = DVector::zeros(p.len());
            for (b, c) in basis.iter().zip(&df) {
                d += b * *c;
            }
            d
        }
        Err(e) => return Err(e),
    };
    // basis is Euclidean-orthonormal, so df(dir) is a dot product of coordinates
    let slope = basis
        .iter()
        .zip(&df)
        .fold(T::zero(), |a, (b, c)| a + b.dot(&dir) * *c);
    Ok((dir, slope))
}

/// Projected gradient descent (`sign = 1`) or ascent (`sign = -1`) on `f`
/// followed by transverse Newton polishing. Returns the end point if it is
/// critical.
fn optimize<T: Real>(
    geom: &Geometry<T>,
    aux: &Geometry<T>,
    k: &VectorField<T>,
    start: &Point<T>,
    sign: T,
    max_iterations: usize,
) -> Result<Option<Point<T>>> {
    let mut p = start.clone();
    let mut fp = sign * f_eval(geom, k, &p)?;
    let mut alpha = T::one();
    let c1 = T::lit(1e-4);
    for _ in 0..max_iterations {
        let (dir, slope) = ascent_direction(geom, aux, k, &p)?;
        if dir.norm() <= T::lit(1e-9) {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = match retract(geom, &p, &(&dir * (-sign * alpha))) {
                Ok(c) => c,
                Err(_) => {
                    alpha *= T::lit(0.5);
                    continue;
                }
            };
            let fc = sign * f_eval(geom, k, &cand)?;
            if fc <= fp - c1 * alpha * slope {
                p = cand;
                fp = fc;
                accepted = true;
                break;
            }
            alpha *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
        alpha = (alpha * T::lit(2.0)).min(T::lit(10.0));
        if slope.abs() <= T::lit(1e-16) {
            break;
        }
    }
    let p = newton_polish(geom, k, p)?;
    let g = grad_f(geom, k, &p)?.norm();
    Ok((g <= T::lit(GRAD_TOL)).then_some(p))
}

/// Newton iterations on the transverse Hessian system.
pub fn newton_polish<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, start: Point<T>) -> Result<Point<T>> {
    let mut p = start;
    let mut gnorm = grad_f(geom, k, &p)?.norm();
    for _ in 0..20 {
        if gnorm <= T::lit(GRAD_TOL) * T::lit(1e-2) {
            break;
        }
        let basis = transverse_basis(geom, k, &p);
        if basis.is_empty() {
            break;
        }
        let hess = transverse_hessian(geom, k, &p, &basis)?;
        let grad = DVector::from_vec(differential(geom, k, &p, &basis)?);
        let svd = hess.svd(true, true);
        let cutoff = svd.singular_values.max() * T::lit(1e-8);
        let Ok(y) = svd.solve(&grad, cutoff) else {
            break;
        };
        let mut step = DVector::zeros(p.len());
        for (b, c) in basis.iter().zip(y.iter()) {
            step -= b * *c;
        }
        let Ok(cand) = retract(geom, &p, &step) else {
            break;
        };
        let gc = grad_f(geom, k, &cand)?.norm();
        if !(gc < gnorm) {
            break;
        }
        p = cand;
        gnorm = gc;
    }
    Ok(p)
}

/// Sample mean and variance of `f` at the given points.
fn mean_variance<T: Real>(values: &[T]) -> (T, T) {
    let n = T::from_usize(values.len()).unwrap();
    let mean = values.iter().fold(T::zero(), |a, v| a + *v) / n;
    let var = values
        .iter()
        .fold(T::zero(), |a, v| a + (*v - mean) * (*v - mean))
        / n;
    (mean, var)
}

/// Multi-start search for critical orbits of `f`, sorted by `f` ascending.
pub fn find_critical_orbits<T: Real>(
    geom: &Geometry<T>,
    k: &KillingField<T>,
    options: &SearchOptions,
) -> Result<Vec<CriticalOrbit<T>>> {
    let field = &k.field;
    let manifold = &geom.manifold;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let probes: Vec<Point<T>> = (0..options.variance_samples.max(2))
        .map(|_| manifold.sample(&mut rng))
        .collect();
    let values = probes
        .par_iter()
        .map(|p| f_eval(geom, field, p))
        .collect::<Result<Vec<T>>>()?;
    let (mean, var) = mean_variance(&values);
    if var < T::lit(VARIANCE_TOL) {
        let rep = probes[0].clone();
        let orbit = certify_orbit(geom, field, rep, mean, Classification::DegenerateConstant, options)?;
        return Ok(vec![orbit]);
    }

    let argmin = (0..values.len())
        .min_by(|a, b| values[*a].partial_cmp(&values[*b]).unwrap())
        .unwrap();
    let argmax = (0..values.len())
        .max_by(|a, b| values[*a].partial_cmp(&values[*b]).unwrap())
        .unwrap();
    let mut starts = vec![probes[argmin].clone(), probes[argmax].clone()];
    while starts.len() < options.budget.max(2) {
        starts.push(manifold.sample(&mut rng));
    }

    let aux = geom.with_metric(lorentz_to_riemann(&geom.metric, k));
    let jobs: Vec<(usize, T)> = (0..starts.len())
        .flat_map(|i| [(i, T::one()), (i, -T::one())])
        .collect();
    let converged: Vec<Option<Point<T>>> = jobs
        .par_iter()
        .map(|(i, sign)| optimize(geom, &aux, field, &starts[*i], *sign, options.max_iterations))
        .collect::<Result<_>>()?;
    let found: Vec<Point<T>> = converged.into_iter().flatten().collect();
    if found.is_empty() {
        return Err(GeoError::SearchFailure(format!(
            "none of {} starts converged",
            starts.len()
        )));
    }

    let mut orbits: Vec<(CriticalOrbit<T>, Vec<Point<T>>)> = Vec::new();
    for p in found {
        let fp = f_eval(geom, field, &p)?;
        let same = orbits.iter().any(|(o, curve)| {
            (o.f_value - fp).abs() <= T::lit(1e-6) * (T::one() + fp.abs())
                && directed_distance(manifold, std::slice::from_ref(&p), curve) <= T::lit(ORBIT_TOL)
        });
        if same {
            continue;
        }
        let class = match classify_critical(geom, field, &p) {
            Ok(c) => c,
            Err(GeoError::NotCritical(_)) => Classification::Degenerate,
            Err(e) => return Err(e),
        };
        let orbit = certify_orbit(geom, field, p, fp, class, options)?;
        let span = orbit.period.unwrap_or_else(|| T::lit(options.horizon));
        let curve = flow_sampled(geom, field, &orbit.representative, span, T::lit(0.005), options.ode)?;
        orbits.push((orbit, curve.points));
    }
    let mut out: Vec<CriticalOrbit<T>> = orbits.into_iter().map(|(o, _)| o).collect();
    out.sort_by(|a, b| {
        a.f_value
            .partial_cmp(&b.f_value)
            .unwrap()
            .then_with(|| lex_cmp(&a.representative, &b.representative))
    });
    Ok(out)
}

fn lex_cmp<T: Real>(a: &Point<T>, b: &Point<T>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Period detection and geodesic residual along the integral curve through
/// a critical point.
pub fn certify_orbit<T: Real>(
    geom: &Geometry<T>,
    k: &VectorField<T>,
    p: Point<T>,
    f_value: T,
    classification: Classification,
    options: &SearchOptions,
) -> Result<CriticalOrbit<T>> {
    let grad_norm = match classification {
        Classification::DegenerateConstant => T::zero(),
        _ => grad_f(geom, k, &p)?.norm(),
    };
    let certificate = detect_period(geom, k, &p, T::lit(options.horizon), options.period_options())?;
    let period = certificate.as_ref().map(|c| c.period);
    let span = period.unwrap_or_else(|| T::lit(options.horizon.min(10.0)));
    let curve = flow(geom, k, &p, span, options.ode)?;
    let residual = geodesic_residual(geom, &curve)?;
    Ok(CriticalOrbit {
        representative: p,
        f_value,
        grad_norm,
        classification,
        geodesic_residual: residual,
        period,
        certificate,
    })
}
