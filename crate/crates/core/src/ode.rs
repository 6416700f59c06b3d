//! Adaptive Dormand–Prince 5(4) integration with a post-step projection hook
//! and cubic Hermite dense output.

use nalgebra::DVector;

use crate::error::{GeoError, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Local error tolerance, mixed absolute/relative.
    pub tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub initial_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_step: 0.05,
            min_step: 1e-12,
            initial_step: 1e-3,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step. Returns the fifth-order solution and the
/// difference to the embedded fourth-order one.
fn dp_step<T, F>(rhs: &F, t: T, y: &DVector<T>, k1: &DVector<T>, h: T) -> Result<(DVector<T>, DVector<T>)>
where
    T: Real,
    F: Fn(T, &DVector<T>) -> Result<DVector<T>>,
{
    let mut k: Vec<DVector<T>> = Vec::with_capacity(7);
    k.push(k1.clone());
    for s in 1..7 {
        let mut ys = y.clone();
        for (j, kj) in k.iter().enumerate() {
            let a = A[s][j];
            if a != 0.0 {
                ys.axpy(h * T::lit(a), kj, T::one());
            }
        }
        k.push(rhs(t + h * T::lit(C[s]), &ys)?);
    }
    let mut y5 = y.clone();
    let mut err = DVector::zeros(y.len());
    for s in 0..7 {
        if B5[s] != 0.0 {
            y5.axpy(h * T::lit(B5[s]), &k[s], T::one());
        }
        let e = B5[s] - B4[s];
        if e != 0.0 {
            err.axpy(h * T::lit(e), &k[s], T::one());
        }
    }
    Ok((y5, err))
}

/// Accepted nodes of an integration, with derivatives for dense output.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    pub derivs: Vec<DVector<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> T {
        *self.times.last().expect("trajectory has at least one node")
    }

    /// Index `i` with `times[i] ≤ s ≤ times[i+1]` in the direction of travel.
    fn segment(&self, s: T) -> usize {
        let n = self.times.len();
        if n < 2 {
            return 0;
        }
        let forward = self.times[n - 1] >= self.times[0];
        let idx = self
            .times
            .partition_point(|t| if forward { *t <= s } else { *t >= s });
        idx.saturating_sub(1).min(n - 2)
    }

    /// Cubic Hermite interpolant of the state at `s`.
    pub fn hermite(&self, s: T) -> DVector<T> {
        if self.times.len() < 2 {
            return self.states[0].clone();
        }
        let i = self.segment(s);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let u = (s - t0) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * u3 - three * u2 + T::one();
        let h10 = u3 - two * u2 + u;
        let h01 = -two * u3 + three * u2;
        let h11 = u3 - u2;
        &self.states[i] * h00
            + &self.derivs[i] * (h10 * h)
            + &self.states[i + 1] * h01
            + &self.derivs[i + 1] * (h11 * h)
    }
}

/// Integrator bound to a right-hand side and a projection onto the
/// admissible state set.
pub struct Integrator<T, F, P>
where
    T: Real,
    F: Fn(T, &DVector<T>) -> Result<DVector<T>>,
    P: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    pub rhs: F,
    pub project: P,
    pub options: OdeOptions,
    _marker: std::marker::PhantomData<T>,
}

impl<T, F, P> Integrator<T, F, P>
where
    T: Real,
    F: Fn(T, &DVector<T>) -> Result<DVector<T>>,
    P: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    pub fn new(rhs: F, project: P, options: OdeOptions) -> Self {
        Self {
            rhs,
            project,
            options,
            _marker: std::marker::PhantomData,
        }
    }

    fn error_norm(&self, y: &DVector<T>, y_new: &DVector<T>, err: &DVector<T>) -> T {
        let tol = T::lit(self.options.tol);
        let mut worst = T::zero();
        for i in 0..y.len() {
            let scale = tol * (T::one() + y[i].abs().max(y_new[i].abs()));
            worst = worst.max(err[i].abs() / scale);
        }
        worst
    }

    /// Integrates from `(0, y0)` to `t_end` (either sign).
    pub fn run(&self, y0: &DVector<T>, t_end: T) -> Result<Trajectory<T>> {
        let y0 = (self.project)(y0)?;
        let f0 = (self.rhs)(T::zero(), &y0)?;
        let mut traj = Trajectory {
            times: vec![T::zero()],
            states: vec![y0.clone()],
            derivs: vec![f0.clone()],
        };
        if t_end == T::zero() {
            return Ok(traj);
        }
        let dir = if t_end > T::zero() { T::one() } else { -T::one() };
        let span = t_end.abs();
        let max_step = T::lit(self.options.max_step);
        let min_step = T::lit(self.options.min_step);
        let mut h = T::lit(self.options.initial_step).min(max_step).min(span);
        let mut t = T::zero();
        let mut y = y0;
        let mut k1 = f0;
        loop {
            let remaining = span - t.abs();
            if remaining <= span * T::lit(1e-14) {
                break;
            }
            let step = h.min(remaining);
            let (y5, err) = dp_step(&self.rhs, t, &y, &k1, dir * step)?;
            let e = self.error_norm(&y, &y5, &err);
            let e = if e.is_finite() { e } else { T::lit(1e30) };
            if e <= T::one() {
                let last = step == remaining;
                t = if last { t_end } else { t + dir * step };
                y = (self.project)(&y5)?;
                k1 = (self.rhs)(t, &y)?;
                traj.times.push(t);
                traj.states.push(y.clone());
                traj.derivs.push(k1.clone());
                if last {
                    break;
                }
            }
            let factor = if e == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * e.powf(T::lit(-0.2))).clamp(T::lit(0.2), T::lit(5.0))
            };
            h = (step * factor).min(max_step);
            if h < min_step {
                return Err(GeoError::StepCollapse {
                    step: h.as_f64(),
                    time: t.as_f64(),
                });
            }
        }
        Ok(traj)
    }

    /// State at `s` from a single full step off the nearest preceding node,
    /// more accurate than the Hermite interpolant.
    pub fn precise(&self, traj: &Trajectory<T>, s: T) -> Result<DVector<T>> {
        let i = traj.segment(s);
        let t0 = traj.times[i];
        let h = s - t0;
        if h == T::zero() {
            return Ok(traj.states[i].clone());
        }
        let (y5, _) = dp_step(&self.rhs, t0, &traj.states[i], &traj.derivs[i], h)?;
        (self.project)(&y5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> impl Fn(f64, &DVector<f64>) -> Result<DVector<f64>> {
        |_t, y: &DVector<f64>| Ok(DVector::from_vec(vec![y[1], -y[0]]))
    }

    fn identity(y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(y.clone())
    }

    #[test]
    fn harmonic_oscillator_full_turn() {
        let ode = Integrator::new(oscillator(), identity, OdeOptions::default());
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let tau = std::f64::consts::TAU;
        let traj = ode.run(&y0, tau).unwrap();
        let end = traj.states.last().unwrap();
        assert!((end - &y0).norm() < 1e-8, "{end}");
        assert_eq!(traj.end_time(), tau);
    }

    #[test]
    fn backward_integration() {
        let ode = Integrator::new(oscillator(), identity, OdeOptions::default());
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let traj = ode.run(&y0, -1.0).unwrap();
        let end = traj.states.last().unwrap();
        assert!((end[0] - 1f64.cos()).abs() < 1e-9);
        assert!((end[1] - 1f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_accuracy() {
        let ode = Integrator::new(oscillator(), identity, OdeOptions::default());
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let traj = ode.run(&y0, 3.0).unwrap();
        for k in 0..300 {
            let s = 0.01 * k as f64 + 0.003;
            let h = traj.hermite(s);
            assert!((h[0] - s.cos()).abs() < 1e-6);
            let p = ode.precise(&traj, s).unwrap();
            assert!((p[0] - s.cos()).abs() < 1e-9);
            assert!((p[1] + s.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_span_gives_single_node() {
        let ode = Integrator::new(oscillator(), identity, OdeOptions::default());
        let traj = ode.run(&DVector::from_vec(vec![1.0, 0.0]), 0.0).unwrap();
        assert_eq!(traj.len(), 1);
    }

    #[test]
    fn blow_up_collapses_step() {
        let ode = Integrator::new(
            |_t, y: &DVector<f64>| Ok(DVector::from_vec(vec![y[0] * y[0]])),
            identity,
            OdeOptions::default(),
        );
        let r = ode.run(&DVector::from_vec(vec![1.0]), 2.0);
        assert!(matches!(r, Err(GeoError::StepCollapse { .. })));
    }
}
