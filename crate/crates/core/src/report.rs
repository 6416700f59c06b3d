//! Batch analyses over gallery entries and their serialized reports.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_approx::{approximate_closed, certify_uniform_convergence, ApproximationCertificate, Fraction};
use crate::critical::{f_eval, find_critical_orbits, Classification, CriticalOrbit, SearchOptions};
use crate::error::{GeoError, Result};
use crate::gallery::{by_name, klein_orbit_coordinate, mapping_torus_pole, GalleryEntry, Params};
use crate::geodesic::{detect_period, flow, shoot_geodesic, write_csv, PeriodOptions};
use crate::geometry::Point;

/// Samples used for the uniform-convergence certificate.
pub const CERTIFICATE_SAMPLES: usize = 500;
/// Random starts in the mapping-torus periodicity scan.
pub const SCAN_STARTS: usize = 20;

impl GeoError {
    /// Process exit code for the command line: 2 usage or domain, 3 search
    /// or integration failure, 4 unsupported capability.
    pub fn exit_code(&self) -> i32 {
        match self {
            GeoError::Argument(_)
            | GeoError::OffManifold { .. }
            | GeoError::ProjectionFailed { .. }
            | GeoError::PeriodicPointsExist(_)
            | GeoError::NotTimelike { .. }
            | GeoError::FieldVanishes { .. }
            | GeoError::SingularMetric { .. } => 2,
            GeoError::SearchFailure(_) | GeoError::StepCollapse { .. } | GeoError::NotCritical(_) => 3,
            GeoError::EvaluatorOnly => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_geo: f64,
    pub tol_period: f64,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub f_value: f64,
    pub classification: String,
    pub period: Option<f64>,
    pub geodesic_residual: f64,
    pub grad_norm: f64,
    pub representative: Vec<f64>,
    pub deck_word: Option<Vec<String>>,
}

/// One integral curve examined for periodicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub start: Vec<f64>,
    /// Coordinate in the orbit space, where one is known.
    pub orbit_coordinate: Option<f64>,
    pub period: Option<f64>,
    pub deck_word: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximantReport {
    pub fraction: Fraction,
    pub orbit_count: usize,
    /// Orbits with a period certificate and geodesic residual within tolerance.
    pub certified_orbits: usize,
    pub critical_orbits: Vec<OrbitReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub entry_name: String,
    pub parameters: ParamsReport,
    pub signature: String,
    pub killing_residual_max: f64,
    pub killing_certified: bool,
    pub degenerate_constant: bool,
    pub critical_orbits: Vec<OrbitReport>,
    pub fiber_scan: Option<Vec<ScanEntry>>,
    pub approximation: Option<ApproximationCertificate>,
    pub approximants: Option<Vec<ApproximantReport>>,
    pub runtime_ms: u64,
    pub seed: u64,
    pub budget: usize,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub alpha: Option<f64>,
    pub slope: Option<[f64; 2]>,
    pub theta: Option<f64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
}

impl ParamsReport {
    fn for_entry(name: &str, p: &Params, n: Option<usize>) -> Self {
        Self {
            alpha: (name == "stationary-s3").then_some(p.alpha),
            slope: (name == "flat-torus").then_some([p.slope.0, p.slope.1]),
            theta: (name == "mapping-torus").then_some(p.theta),
            m: (name == "commuting-t4").then_some(p.m),
            n,
        }
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

fn classification_name(c: Classification) -> String {
    match c {
        Classification::Min => "Min",
        Classification::Max => "Max",
        Classification::Saddle => "Saddle",
        Classification::Degenerate => "Degenerate",
        Classification::DegenerateConstant => "DegenerateConstant",
    }
    .to_string()
}

fn orbit_report(entry: &GalleryEntry<f64>, o: &CriticalOrbit<f64>) -> OrbitReport {
    let names = entry.geometry.manifold.generator_names();
    OrbitReport {
        f_value: o.f_value,
        classification: classification_name(o.classification),
        period: o.period,
        geodesic_residual: o.geodesic_residual,
        grad_norm: o.grad_norm,
        representative: o.representative.iter().copied().collect(),
        deck_word: o.certificate.as_ref().map(|c| c.deck_word.render(&names)),
    }
}

fn period_options(options: &SearchOptions) -> PeriodOptions {
    PeriodOptions {
        tol_period: options.tol_period,
        ode: options.ode,
        ..PeriodOptions::default()
    }
}

fn scan_entry(entry: &GalleryEntry<f64>, start: Point<f64>, coord: Option<f64>, horizon: f64, options: &SearchOptions) -> Result<ScanEntry> {
    let cert = detect_period(&entry.geometry, &entry.killing.field, &start, horizon, period_options(options))?;
    let names = entry.geometry.manifold.generator_names();
    Ok(ScanEntry {
        start: start.iter().copied().collect(),
        orbit_coordinate: coord,
        period: cert.as_ref().map(|c| c.period),
        deck_word: cert.map(|c| c.deck_word.render(&names)),
    })
}

/// Periods of the `∂_t` orbits through `(k/20, 0)`, `k = 0..20`.
pub fn klein_fiber_scan(entry: &GalleryEntry<f64>, options: &SearchOptions) -> Result<Vec<ScanEntry>> {
    (0..20)
        .map(|k| {
            let x0 = k as f64 / 20.0;
            scan_entry(entry, Point::from_vec(vec![x0, 0.0]), Some(klein_orbit_coordinate(x0)), options.horizon, options)
        })
        .collect()
}

/// Period detection through the pole class and through seeded random starts.
pub fn mapping_torus_scan(entry: &GalleryEntry<f64>, options: &SearchOptions) -> Result<Vec<ScanEntry>> {
    let mut starts = vec![mapping_torus_pole::<f64>()];
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    starts.extend((0..SCAN_STARTS).map(|_| entry.geometry.manifold.sample(&mut rng)));
    starts
        .into_iter()
        .map(|p| scan_entry(entry, p, None, options.horizon, options))
        .collect()
}

fn tolerances(options: &SearchOptions) -> Tolerances {
    Tolerances {
        tol_geo: options.tol_geo,
        tol_period: options.tol_period,
        horizon: options.horizon,
    }
}

/// Killing certification, critical search, period detection and, where the
/// entry has one, the orbit scan.
pub fn analyze(name: &str, params: &Params, options: &SearchOptions) -> Result<AnalysisReport> {
    let clock = Instant::now();
    let entry = by_name::<f64>(name, params)?;
    let orbits = find_critical_orbits(&entry.geometry, &entry.killing, options)?;
    let fiber_scan = match name {
        "klein-bottle" => Some(klein_fiber_scan(&entry, options)?),
        "mapping-torus" => Some(mapping_torus_scan(&entry, options)?),
        _ => None,
    };
    let cert = entry.killing.certification;
    Ok(AnalysisReport {
        entry_name: entry.name.clone(),
        parameters: ParamsReport::for_entry(name, params, None),
        signature: entry.geometry.metric.signature().to_string(),
        killing_residual_max: cert.map_or(f64::NAN, |c| c.max_residual),
        killing_certified: entry.killing.is_certified(),
        degenerate_constant: orbits
            .iter()
            .any(|o| o.classification == Classification::DegenerateConstant),
        critical_orbits: orbits.iter().map(|o| orbit_report(&entry, o)).collect(),
        fiber_scan,
        approximation: None,
        approximants: None,
        runtime_ms: clock.elapsed().as_millis() as u64,
        seed: options.seed,
        budget: options.budget,
        tolerances: tolerances(options),
    })
}

/// Closed approximants of the entry's field with a critical search on each.
pub fn approximate(name: &str, params: &Params, n: usize, options: &SearchOptions) -> Result<AnalysisReport> {
    let clock = Instant::now();
    let entry = by_name::<f64>(name, params)?;
    let approx = approximate_closed(&entry.geometry, &entry.killing, n)?;
    let certificate = certify_uniform_convergence(&entry.geometry, &entry.killing, &approx, CERTIFICATE_SAMPLES, options.seed)?;
    let period_scale = entry
        .killing
        .generator
        .as_ref()
        .and_then(|g| g.action.period)
        .unwrap_or(1.0);
    let mut approximants = Vec::with_capacity(approx.fields.len());
    for (r, field) in approx.convergents.iter().zip(&approx.fields) {
        let q = *r.denom() as f64;
        let opts = SearchOptions {
            horizon: options.horizon.max(period_scale * (q + 1.0)),
            ..*options
        };
        let orbits = find_critical_orbits(&entry.geometry, field, &opts)?;
        let certified = orbits
            .iter()
            .filter(|o| o.period.is_some() && o.geodesic_residual <= options.tol_geo)
            .count();
        approximants.push(ApproximantReport {
            fraction: Fraction::from(*r),
            orbit_count: orbits.len(),
            certified_orbits: certified,
            critical_orbits: orbits.iter().map(|o| orbit_report(&entry, o)).collect(),
        });
    }
    let base = find_critical_orbits(&entry.geometry, &entry.killing, options)?;
    let cert = entry.killing.certification;
    Ok(AnalysisReport {
        entry_name: entry.name.clone(),
        parameters: ParamsReport::for_entry(name, params, Some(n)),
        signature: entry.geometry.metric.signature().to_string(),
        killing_residual_max: cert.map_or(f64::NAN, |c| c.max_residual),
        killing_certified: entry.killing.is_certified(),
        degenerate_constant: base
            .iter()
            .any(|o| o.classification == Classification::DegenerateConstant),
        critical_orbits: base.iter().map(|o| orbit_report(&entry, o)).collect(),
        fiber_scan: None,
        approximation: Some(certificate),
        approximants: Some(approximants),
        runtime_ms: clock.elapsed().as_millis() as u64,
        seed: options.seed,
        budget: options.budget,
        tolerances: tolerances(options),
    })
}

/// Integral curve (or, with `geodesic`, the geodesic with initial velocity
/// `K`) from `start` as CSV text.
pub fn trace(name: &str, params: &Params, start: &[f64], t_end: f64, geodesic: bool, options: &SearchOptions) -> Result<String> {
    let entry = by_name::<f64>(name, params)?;
    let geom = &entry.geometry;
    let dim = geom.ambient_dim();
    if start.len() != dim {
        return Err(GeoError::Argument(format!(
            "start point has {} coordinates, {} expects {dim}",
            start.len(),
            entry.name
        )));
    }
    let raw = Point::from_row_slice(start);
    let residual = geom.manifold.constraint_residual(&raw);
    if residual > 1e-6 {
        return Err(GeoError::OffManifold { residual });
    }
    let p = geom.manifold.project_point(&raw)?;
    let k = &entry.killing.field;
    let curve = if geodesic {
        shoot_geodesic(geom, &p, &k.at(&p), t_end, options.ode)?
    } else {
        flow(geom, k, &p, t_end, options.ode)?
    };
    let f_values = curve
        .points
        .iter()
        .map(|x| f_eval(geom, k, x))
        .collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_csv(&curve, &f_values, &mut buf).map_err(|e| GeoError::Argument(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Gallery entry names with a one-line description each.
pub fn list_entries() -> Vec<(&'static str, &'static str)> {
    vec![
        ("flat-torus", "R^2/Z^2 with dx^2 - dt^2, K = a d_x + b d_t (--slope a,b)"),
        ("klein-bottle", "Lorentzian Klein bottle, K = d_t"),
        ("stationary-s3", "S^3 with the stationary metric of K = (iz, i alpha w) (--alpha)"),
        ("mapping-torus", "(S^2 x R) / <antipodal, rotation by theta and shift>, K = d_t (--theta)"),
        ("commuting-t4", "flat T^(2+m) with m commuting timelike translations (--m)"),
    ]
}
