use thiserror::Error;

/// Failures raised by the geometry, integration and search routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("point is off the manifold (constraint residual {residual:e})")]
    OffManifold { residual: f64 },
    #[error("metric is degenerate at the evaluation point (|det| = {det:e})")]
    SingularMetric { det: f64 },
    #[error("field not timelike here (g(K,K) = {value:e})")]
    NotTimelike { value: f64 },
    #[error("field vanishes (|K| = {norm:e})")]
    FieldVanishes { norm: f64 },
    #[error("step size collapsed to {step:e} at s = {time}")]
    StepCollapse { step: f64, time: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("critical search failed: {0}")]
    SearchFailure(String),
    #[error("field carries no torus generator coordinates (evaluator-only field)")]
    EvaluatorOnly,
    #[error("critical point precondition violated: {0}")]
    NotCritical(String),
    #[error("periodic points exist: {0}")]
    PeriodicPointsExist(String),
    #[error("projection onto the constraint set did not converge (residual {residual:e})")]
    ProjectionFailed { residual: f64 },
}

pub type Result<T, E = GeoError> = std::result::Result<T, E>;
