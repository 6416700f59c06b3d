//! Killing flows, geodesics, the geodesic residual, and period detection
//! modulo the deck group.

use std::io::Write;

use nalgebra::DVector;

use crate::error::Result;
use crate::geometry::{Geometry, ImageTracker, ManifoldModel, Point, VectorField, Word};
use crate::killing::KillingFamily;
use crate::ode::{Integrator, OdeOptions, Trajectory};
use crate::scalar::Real;

/// Default bound on the geodesic residual for certification.
pub const TOL_GEO: f64 = 1e-5;
/// Default position and velocity gap for a period certificate.
pub const TOL_PERIOD: f64 = 1e-6;

/// Time-stamped points along a curve with velocities, ambient second
/// derivatives and the metric energy `g(c', c')`.
#[derive(Clone, Debug)]
pub struct CurveSample<T: Real> {
    pub times: Vec<T>,
    pub points: Vec<Point<T>>,
    pub velocities: Vec<DVector<T>>,
    pub accelerations: Vec<DVector<T>>,
    pub energy: Vec<T>,
    pub energy_drift: T,
    pub constraint_drift: T,
}

impl<T: Real> CurveSample<T> {
    fn assemble(
        geom: &Geometry<T>,
        times: Vec<T>,
        points: Vec<Point<T>>,
        velocities: Vec<DVector<T>>,
        accelerations: Vec<DVector<T>>,
    ) -> Result<Self> {
        let energy = points
            .iter()
            .zip(&velocities)
            .map(|(p, v)| geom.metric.inner(p, v, v))
            .collect::<Result<Vec<T>>>()?;
        let e0 = energy[0];
        let energy_drift = energy.iter().fold(T::zero(), |a, e| a.max((*e - e0).abs()));
        let constraint_drift = points
            .iter()
            .fold(T::zero(), |a, p| a.max(geom.manifold.constraint_residual(p)));
        Ok(Self {
            times,
            points,
            velocities,
            accelerations,
            energy,
            energy_drift,
            constraint_drift,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> T {
        *self.times.last().expect("curve has at least one sample")
    }

    pub fn last_point(&self) -> &Point<T> {
        self.points.last().expect("curve has at least one sample")
    }
}

#[allow(clippy::type_complexity)]
fn flow_integrator<'a, T: Real>(
    geom: &'a Geometry<T>,
    k: &'a VectorField<T>,
    options: OdeOptions,
) -> Integrator<
    T,
    impl Fn(T, &DVector<T>) -> Result<DVector<T>> + 'a,
    impl Fn(&DVector<T>) -> Result<DVector<T>> + 'a,
> {
    Integrator::new(
        move |_s, x: &DVector<T>| Ok(k.at(x)),
        move |x: &DVector<T>| geom.manifold.project_point(x),
        options,
    )
}

fn flow_curve<T: Real>(geom: &Geometry<T>, k: &VectorField<T>, times: Vec<T>, points: Vec<Point<T>>) -> Result<CurveSample<T>> {
    let velocities: Vec<DVector<T>> = points.iter().map(|p| k.at(p)).collect();
    let accelerations = points
        .iter()
        .zip(&velocities)
        .map(|(p, v)| k.directional(p, v))
        .collect();
    CurveSample::assemble(geom, times, points, velocities, accelerations)
}

/// Integral curve of `k` from `p0` over `[0, t_end]`, sampled at the
/// accepted integrator steps.
pub fn flow<T: Real>(
    geom: &Geometry<T>,
    k: &VectorField<T>,
    p0: &Point<T>,
    t_end: T,
    options: OdeOptions,
) -> Result<CurveSample<T>> {
    let traj = flow_integrator(geom, k, options).run(p0, t_end)?;
    flow_curve(geom, k, traj.times, traj.states)
}

/// Integral curve resampled on a uniform grid of spacing at most `spacing`
/// from the dense output.
pub fn flow_sampled<T: Real>(
    geom: &Geometry<T>,
    k: &VectorField<T>,
    p0: &Point<T>,
    t_end: T,
    spacing: T,
    options: OdeOptions,
) -> Result<CurveSample<T>> {
    let traj = flow_integrator(geom, k, options).run(p0, t_end)?;
    let (times, points) = resample(&traj, t_end, spacing, |x| geom.manifold.project_point(x))?;
    flow_curve(geom, k, times, points)
}

fn resample<T: Real>(
    traj: &Trajectory<T>,
    t_end: T,
    spacing: T,
    project: impl Fn(&DVector<T>) -> Result<DVector<T>>,
) -> Result<(Vec<T>, Vec<DVector<T>>)> {
    let span = t_end.abs();
    let n = (span / spacing).ceil().to_usize().unwrap_or(0).max(1);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = t_end * T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
        times.push(s);
        states.push(project(&traj.hermite(s))?);
    }
    Ok((times, states))
}

fn split<T: Real>(y: &DVector<T>, n: usize) -> (DVector<T>, DVector<T>) {
    (y.rows(0, n).into_owned(), y.rows(n, n).into_owned())
}

fn join<T: Real>(x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
    let n = x.len();
    DVector::from_fn(2 * n, |i, _| if i < n { x[i] } else { v[i - n] })
}

#[allow(clippy::type_complexity)]
fn geodesic_integrator<'a, T: Real>(
    geom: &'a Geometry<T>,
    options: OdeOptions,
) -> Integrator<
    T,
    impl Fn(T, &DVector<T>) -> Result<DVector<T>> + 'a,
    impl Fn(&DVector<T>) -> Result<DVector<T>> + 'a,
> {
    let n = geom.ambient_dim();
    Integrator::new(
        move |_s, y: &DVector<T>| {
            let (x, v) = split(y, n);
            let a = geom.geodesic_acceleration(&x, &v)?;
            Ok(join(&v, &a))
        },
        move |y: &DVector<T>| {
            let (x, v) = split(y, n);
            let x = geom.manifold.project_point(&x)?;
            let v = geom.manifold.project_tangent(&x, &v);
            Ok(join(&x, &v))
        },
        options,
    )
}

/// Geodesic with initial data `(p0, v0)` over `[0, t_end]`.
pub fn shoot_geodesic<T: Real>(
    geom: &Geometry<T>,
    p0: &Point<T>,
    v0: &DVector<T>,
    t_end: T,
    options: OdeOptions,
) -> Result<CurveSample<T>> {
    let n = geom.ambient_dim();
    let traj = geodesic_integrator(geom, options).run(&join(p0, v0), t_end)?;
    geodesic_curve(geom, traj.times, traj.states, traj.derivs, n)
}

/// Geodesic resampled on a uniform grid from the dense output.
pub fn shoot_geodesic_sampled<T: Real>(
    geom: &Geometry<T>,
    p0: &Point<T>,
    v0: &DVector<T>,
    t_end: T,
    spacing: T,
    options: OdeOptions,
) -> Result<CurveSample<T>> {
    let n = geom.ambient_dim();
    let integ = geodesic_integrator(geom, options);
    let traj = integ.run(&join(p0, v0), t_end)?;
    let (times, states) = resample(&traj, t_end, spacing, &integ.project)?;
    let derivs = states
        .iter()
        .map(|y| (integ.rhs)(T::zero(), y))
        .collect::<Result<Vec<_>>>()?;
    geodesic_curve(geom, times, states, derivs, n)
}

fn geodesic_curve<T: Real>(
    geom: &Geometry<T>,
    times: Vec<T>,
    states: Vec<DVector<T>>,
    derivs: Vec<DVector<T>>,
    n: usize,
) -> Result<CurveSample<T>> {
    let mut points = Vec::with_capacity(states.len());
    let mut velocities = Vec::with_capacity(states.len());
    for y in &states {
        let (x, v) = split(y, n);
        points.push(x);
        velocities.push(v);
    }
    let accelerations = derivs.iter().map(|d| split(d, n).1).collect();
    CurveSample::assemble(geom, times, points, velocities, accelerations)
}

/// Supremum over the samples of the Euclidean norm of `∇_{c'} c'`.
pub fn geodesic_residual<T: Real>(geom: &Geometry<T>, c: &CurveSample<T>) -> Result<T> {
    let mut worst = T::zero();
    for ((p, v), a) in c.points.iter().zip(&c.velocities).zip(&c.accelerations) {
        worst = worst.max(geom.acceleration_residual(p, v, a)?.norm());
    }
    Ok(worst)
}

/// Evidence that an integral curve closes up in the quotient: the deck
/// element `deck_word` carries `c(period)` back to `c(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodCertificate<T: Real> {
    pub period: T,
    pub deck_word: Word,
    pub position_gap: T,
    pub velocity_gap: T,
}

#[derive(Clone, Copy, Debug)]
pub struct PeriodOptions {
    pub tol_period: f64,
    /// Dense-output resolution of the return-distance scan.
    pub scan_step: f64,
    /// Scan minima farther than this from the start are not refined.
    pub capture: f64,
    pub bisection_steps: usize,
    pub min_period: f64,
    pub ode: OdeOptions,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        Self {
            tol_period: TOL_PERIOD,
            scan_step: 1e-3,
            capture: 0.05,
            bisection_steps: 60,
            min_period: 1e-6,
            ode: OdeOptions::default(),
        }
    }
}

/// Smallest `s` in `(min_period, horizon]` at which the integral curve of
/// `k` through `p0` returns to `p0` modulo the deck group, with matching
/// velocity. `None` if no return is found.
pub fn detect_period<T: Real>(
    geom: &Geometry<T>,
    k: &VectorField<T>,
    p0: &Point<T>,
    horizon: T,
    options: PeriodOptions,
) -> Result<Option<PeriodCertificate<T>>> {
    let manifold = geom.manifold.as_ref();
    let step = T::lit(options.scan_step);
    if !(horizon > T::zero()) {
        return Ok(None);
    }
    let integ = flow_integrator(geom, k, options.ode);
    // a little slack past the horizon so a return exactly at it can be bracketed
    let traj = integ.run(p0, horizon + step * T::lit(2.0))?;
    let start = traj.states[0].clone();
    let k0 = traj.derivs[0].clone();
    if k0.norm() < T::lit(1e-12) {
        return Ok(None);
    }
    let mut tracker = ImageTracker::new(manifold, start.clone());
    let n = (horizon / step).ceil().to_usize().unwrap_or(0) + 1;
    let at = |i: usize| step * T::from_usize(i).unwrap();
    let capture = T::lit(options.capture);
    let min_period = T::lit(options.min_period);
    let mut prev2 = T::max_value().unwrap_or_else(|| T::lit(1e30));
    let mut prev = tracker.nearest(&traj.hermite(T::zero())).1;
    for i in 1..=n {
        let cur = tracker.nearest(&traj.hermite(at(i))).1;
        // prev is d(at(i-1)); a local minimum there is a return candidate
        let s_mid = at(i - 1);
        if i >= 2 && prev <= prev2 && prev <= cur && prev < capture && s_mid > min_period {
            if let Some(cert) = refine_return(&integ, &traj, &mut tracker, &start, &k0, s_mid, step, &options)? {
                if cert.period <= horizon * (T::one() + T::lit(1e-9)) {
                    return Ok(Some(cert));
                }
                return Ok(None);
            }
        }
        prev2 = prev;
        prev = cur;
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn refine_return<T, F, P>(
    integ: &Integrator<T, F, P>,
    traj: &Trajectory<T>,
    tracker: &mut ImageTracker<'_, T>,
    start: &Point<T>,
    k0: &DVector<T>,
    s_mid: T,
    step: T,
    options: &PeriodOptions,
) -> Result<Option<PeriodCertificate<T>>>
where
    T: Real,
    F: Fn(T, &DVector<T>) -> Result<DVector<T>>,
    P: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    let x_mid = integ.precise(traj, s_mid)?;
    let (idx, _) = tracker.nearest(&x_mid);
    let elem = tracker.element(idx);
    let phi = |s: T| -> Result<(T, Point<T>)> {
        let x = integ.precise(traj, s)?;
        let y = elem.apply(&x);
        let ky = elem.map.push_vector(&(integ.rhs)(s, &x)?);
        Ok(((y - start).dot(&ky), x))
    };
    let mut lo = (s_mid - step).max(T::lit(options.min_period));
    let mut hi = s_mid + step;
    let (f_lo, _) = phi(lo)?;
    let (f_hi, _) = phi(hi)?;
    if f_lo > T::zero() || f_hi < T::zero() {
        return Ok(None);
    }
    for _ in 0..options.bisection_steps {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid)?.0 < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = (lo + hi) * T::lit(0.5);
    let (_, x) = phi(s)?;
    let position_gap = (elem.apply(&x) - start).norm();
    let velocity_gap = (elem.map.push_vector(&(integ.rhs)(s, &x)?) - k0).norm();
    let tol = T::lit(options.tol_period);
    if position_gap <= tol && velocity_gap <= tol {
        Ok(Some(PeriodCertificate {
            period: s,
            deck_word: elem.word,
            position_gap,
            velocity_gap,
        }))
    } else {
        Ok(None)
    }
}

/// Checks whether the integral curve through `p0` is back at `p0` (modulo
/// the deck group) at exactly time `s`.
pub fn return_at<T: Real>(
    geom: &Geometry<T>,
    k: &VectorField<T>,
    p0: &Point<T>,
    s: T,
    options: PeriodOptions,
) -> Result<Option<PeriodCertificate<T>>> {
    let traj = flow_integrator(geom, k, options.ode).run(p0, s)?;
    let start = &traj.states[0];
    let end = traj.states.last().unwrap();
    let (elem, position_gap) = geom.manifold.nearest_image(end, start);
    let velocity_gap = (elem.map.push_vector(traj.derivs.last().unwrap()) - &traj.derivs[0]).norm();
    let tol = T::lit(options.tol_period);
    Ok((position_gap <= tol && velocity_gap <= tol).then_some(PeriodCertificate {
        period: s,
        deck_word: elem.word,
        position_gap,
        velocity_gap,
    }))
}

/// Image of `gamma` under the time-`t` flow of the `l`-th family member,
/// with velocities and accelerations pushed forward by the flow.
pub fn translate_geodesic<T: Real>(
    family: &KillingFamily<T>,
    l: usize,
    gamma: &CurveSample<T>,
    t: T,
    options: OdeOptions,
) -> Result<CurveSample<T>> {
    let geom = &family.geometry;
    let member = family.members.get(l).ok_or_else(|| {
        crate::error::GeoError::Argument(format!("family has no member {l}"))
    })?;
    let k = &member.field;
    let n = geom.ambient_dim();
    if t == T::zero() {
        return Ok(gamma.clone());
    }
    let integ = Integrator::new(
        |_s, y: &DVector<T>| {
            let x = y.rows(0, n).into_owned();
            let v = y.rows(n, n).into_owned();
            let a = y.rows(2 * n, n).into_owned();
            let dx = k.at(&x);
            let dv = k.directional(&x, &v);
            let da = k.directional(&x, &a) + k.second_directional(&x, &v);
            Ok(DVector::from_iterator(
                3 * n,
                dx.iter().chain(dv.iter()).chain(da.iter()).copied(),
            ))
        },
        |y: &DVector<T>| {
            let x = geom.manifold.project_point(&y.rows(0, n).into_owned())?;
            let mut out = y.clone();
            out.rows_mut(0, n).copy_from(&x);
            Ok(out)
        },
        options,
    );
    let mut points = Vec::with_capacity(gamma.len());
    let mut velocities = Vec::with_capacity(gamma.len());
    let mut accelerations = Vec::with_capacity(gamma.len());
    for ((x, v), a) in gamma.points.iter().zip(&gamma.velocities).zip(&gamma.accelerations) {
        let y0 = DVector::from_iterator(3 * n, x.iter().chain(v.iter()).chain(a.iter()).copied());
        let traj = integ.run(&y0, t)?;
        let y = traj.states.last().unwrap();
        points.push(y.rows(0, n).into_owned());
        velocities.push(y.rows(n, n).into_owned());
        accelerations.push(y.rows(2 * n, n).into_owned());
    }
    CurveSample::assemble(geom, gamma.times.clone(), points, velocities, accelerations)
}

fn point_segment_distance<T: Real>(p: &Point<T>, a: &Point<T>, b: &Point<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let u = if len2 > T::zero() {
        ((p - a).dot(&ab) / len2).clamp(T::zero(), T::one())
    } else {
        T::zero()
    };
    (p - (a + ab * u)).norm()
}

/// Largest distance from a point of `a` to the polyline `b`, modulo the deck
/// group.
pub fn directed_distance<T: Real>(manifold: &ManifoldModel<T>, a: &[Point<T>], b: &[Point<T>]) -> T {
    let segments: Vec<(Point<T>, Point<T>)> = if b.len() == 1 {
        let e = manifold.reduce_to_box(&b[0]);
        let q = e.apply(&b[0]);
        vec![(q.clone(), q)]
    } else {
        let mut hint = manifold.reduce_to_box(&b[0]);
        b.windows(2)
            .map(|w| {
                hint = manifold.reduce_to_box_from(&w[0], &hint);
                (hint.apply(&w[0]), hint.apply(&w[1]))
            })
            .collect()
    };
    let neighbours = manifold.neighbour_elements();
    let mut worst = T::zero();
    let mut hint = manifold.reduce_to_box(&a[0]);
    for p in a {
        hint = manifold.reduce_to_box_from(p, &hint);
        let q = hint.apply(p);
        let mut best = T::max_value().unwrap_or_else(|| T::lit(1e30));
        for nb in neighbours {
            let r = nb.apply(&q);
            for (s0, s1) in &segments {
                best = best.min(point_segment_distance(&r, s0, s1));
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Symmetric Hausdorff distance between two sampled curve images.
pub fn hausdorff_distance<T: Real>(manifold: &ManifoldModel<T>, a: &[Point<T>], b: &[Point<T>]) -> T {
    directed_distance(manifold, a, b).max(directed_distance(manifold, b, a))
}

/// Writes `s,x1..xn,v1..vn,f` rows; `f_values` holds one value per sample.
/// Shortest round-trip text for `x`, switching to exponent form for very
/// small or large magnitudes.
fn csv_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn write_csv<T: Real, W: Write>(c: &CurveSample<T>, f_values: &[T], out: W) -> csv::Result<()> {
    let n = c.points.first().map_or(0, |p| p.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["s".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("v{i}")));
    header.push("f".into());
    w.write_record(&header)?;
    for (i, f) in f_values.iter().enumerate().take(c.len()) {
        let mut row = Vec::with_capacity(2 * n + 2);
        row.push(csv_number(c.times[i].as_f64()));
        row.extend(c.points[i].iter().map(|x| csv_number(x.as_f64())));
        row.extend(c.velocities[i].iter().map(|x| csv_number(x.as_f64())));
        row.push(csv_number(f.as_f64()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
