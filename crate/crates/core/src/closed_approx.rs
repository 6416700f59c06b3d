//! Rational approximation of torus directions and the closed Killing fields
//! they generate.

use num_rational::Ratio;
use num_traits::{Float, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::f_eval;
use crate::error::{GeoError, Result};
use crate::geometry::Geometry;
use crate::killing::{KillingField, TorusDirection};
use crate::scalar::Real;

/// Convergent denominators stop growing past this bound.
pub const MAX_DENOMINATOR: i128 = 10_000_000;
/// Largest denominator accepted when deciding that a double is rational.
pub const RATIONALITY_DENOMINATOR: i64 = 1_000_000;

/// Exact value of a finite double as `num / 2^shift`.
fn exact_dyadic(x: f64) -> (i128, u32) {
    let (mantissa, exponent, sign) = Float::integer_decode(x);
    let mut m = mantissa as i128 * sign as i128;
    let mut e = exponent as i32;
    while e < 0 && m % 2 == 0 {
        m /= 2;
        e += 1;
    }
    if e >= 0 {
        let shifted = m.checked_shl(e as u32).filter(|v| v >> e == m);
        return (shifted.unwrap_or(if m >= 0 { i128::MAX } else { i128::MIN }), 0);
    }
    let mut shift = (-e) as u32;
    // beyond 2^-120 the value is far below any denominator bound in use
    while shift > 120 {
        m >>= 1;
        shift -= 1;
    }
    (m, shift)
}

/// Continued-fraction convergents of the stored double `alpha`, computed by
/// the integer Euclidean algorithm on its exact binary value. At most `n`
/// are returned; the list ends early when the expansion terminates or the
/// next denominator would exceed [`MAX_DENOMINATOR`].
pub fn continued_fraction_convergents(alpha: f64, n: usize) -> Vec<Ratio<i64>> {
    if !alpha.is_finite() || n == 0 {
        return Vec::new();
    }
    let (mut num, shift) = exact_dyadic(alpha);
    let mut den: i128 = 1i128 << shift;
    let (mut p_prev, mut p) = (0i128, 1i128);
    let (mut q_prev, mut q) = (1i128, 0i128);
    let mut out = Vec::new();
    while out.len() < n && den != 0 {
        let a = num.div_euclid(den);
        let r = num.rem_euclid(den);
        let (Some(pn), Some(qn)) = (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            break;
        };
        if qn > MAX_DENOMINATOR {
            break;
        }
        let (Some(pi), Some(qi)) = (pn.to_i64(), qn.to_i64()) else {
            break;
        };
        out.push(Ratio::new_raw(pi, qi));
        p_prev = p;
        p = pn;
        q_prev = q;
        q = qn;
        num = den;
        den = r;
    }
    out
}

/// A fraction `p/q` with `q ≤ max_den` equal to `x` up to double rounding,
/// if one exists.
pub fn rational_approximation(x: f64, max_den: i64) -> Option<(i64, i64)> {
    let tol = 8.0 * f64::EPSILON * x.abs().max(1.0);
    continued_fraction_convergents(x, 64)
        .into_iter()
        .take_while(|r| *r.denom() <= max_den)
        .find(|r| (x - ratio_f64(r)).abs() <= tol)
        .map(|r| (*r.numer(), *r.denom()))
}

pub fn ratio_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Closed approximants of a field with torus generator `(1, α)`.
#[derive(Clone, Debug)]
pub struct Approximation<T: Real> {
    pub alpha: f64,
    pub convergents: Vec<Ratio<i64>>,
    pub fields: Vec<KillingField<T>>,
    /// The input direction was already rational; `fields` holds it alone.
    pub already_closed: bool,
}

/// Replaces `α` in the generator `(c, cα)` of `k` by its first `n`
/// convergents.
pub fn approximate_closed<T: Real>(geom: &Geometry<T>, k: &KillingField<T>, n: usize) -> Result<Approximation<T>> {
    let generator = k.generator.as_ref().ok_or(GeoError::EvaluatorOnly)?;
    let coords = &generator.direction.coords;
    if coords.len() != 2 || coords[0] == T::zero() {
        return Err(GeoError::Argument(
            "approximation needs a rank-2 generator with nonzero first coordinate".into(),
        ));
    }
    let scale = coords[0];
    let alpha = (coords[1] / scale).as_f64();
    let exact = generator.direction.is_rational()
        || rational_approximation(alpha, RATIONALITY_DENOMINATOR).is_some();
    if exact {
        let (p, q) = rational_approximation(alpha, RATIONALITY_DENOMINATOR).unwrap_or((0, 1));
        let r = Ratio::new(p, q);
        let field = approximant(geom, k, scale, r)?;
        return Ok(Approximation {
            alpha,
            convergents: if n == 0 { Vec::new() } else { vec![r] },
            fields: if n == 0 { Vec::new() } else { vec![field] },
            already_closed: true,
        });
    }
    let convergents = continued_fraction_convergents(alpha, n);
    let fields = convergents
        .iter()
        .map(|r| approximant(geom, k, scale, *r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Approximation {
        alpha,
        convergents,
        fields,
        already_closed: false,
    })
}

fn approximant<T: Real>(geom: &Geometry<T>, k: &KillingField<T>, scale: T, r: Ratio<i64>) -> Result<KillingField<T>> {
    let generator = k.generator.as_ref().ok_or(GeoError::EvaluatorOnly)?;
    let mut direction = TorusDirection::<T>::rational(vec![Ratio::from_integer(1), r]);
    for c in direction.coords.iter_mut() {
        *c *= scale;
    }
    KillingField::from_torus(
        geom,
        generator.action.clone(),
        direction,
        format!("{}[{}/{}]", k.label, r.numer(), r.denom()),
    )
}

/// A fraction serialized as an integer pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub p: i64,
    pub q: i64,
}

impl From<Ratio<i64>> for Fraction {
    fn from(r: Ratio<i64>) -> Self {
        Self {
            p: *r.numer(),
            q: *r.denom(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationCertificate {
    pub alpha: f64,
    pub convergents: Vec<Fraction>,
    pub gaps: Vec<f64>,
    pub sup_field_gaps: Vec<f64>,
    /// `gap × sup‖X_2‖`, the bound each field gap should respect.
    pub linearity_bounds: Vec<f64>,
    pub min_f_signs: Vec<bool>,
    pub samples: usize,
    pub gaps_decreasing: bool,
    pub best_approximation: bool,
}

/// Samples `samples` points and records how far each approximant is from
/// `k`, and whether it stays timelike somewhere.
pub fn certify_uniform_convergence<T: Real>(
    geom: &Geometry<T>,
    k: &KillingField<T>,
    approx: &Approximation<T>,
    samples: usize,
    seed: u64,
) -> Result<ApproximationCertificate> {
    let points = geom.manifold.sample_many(samples, seed);
    let generator = k.generator.as_ref().ok_or(GeoError::EvaluatorOnly)?;
    let second = &generator.action.basis[1];
    let scale = generator.direction.coords[0].abs().as_f64();
    let second_sup = points
        .par_iter()
        .map(|p| second.at(p).norm().as_f64())
        .reduce(|| 0.0, f64::max);
    let mut gaps = Vec::new();
    let mut sup_field_gaps = Vec::new();
    let mut linearity_bounds = Vec::new();
    let mut min_f_signs = Vec::new();
    for (r, field) in approx.convergents.iter().zip(&approx.fields) {
        let gap = (approx.alpha - ratio_f64(r)).abs();
        let per_point = points
            .par_iter()
            .map(|p| -> Result<(f64, f64)> {
                let d = (field.at(p) - k.at(p)).norm().as_f64();
                let f = f_eval(geom, &field.field, p)?.as_f64();
                Ok((d, f))
            })
            .collect::<Result<Vec<_>>>()?;
        let sup = per_point.iter().fold(0.0f64, |a, x| a.max(x.0));
        let min_f = per_point.iter().fold(f64::INFINITY, |a, x| a.min(x.1));
        gaps.push(gap);
        sup_field_gaps.push(sup);
        linearity_bounds.push(gap * scale * second_sup);
        min_f_signs.push(min_f < 0.0);
    }
    let gaps_decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let best_approximation = approx
        .convergents
        .iter()
        .zip(&gaps)
        .all(|(r, g)| *g < 1.0 / (*r.denom() as f64).powi(2));
    Ok(ApproximationCertificate {
        alpha: approx.alpha,
        convergents: approx.convergents.iter().map(|r| Fraction::from(*r)).collect(),
        gaps,
        sup_field_gaps,
        linearity_bounds,
        min_f_signs,
        samples,
        gaps_decreasing,
        best_approximation,
    })
}
