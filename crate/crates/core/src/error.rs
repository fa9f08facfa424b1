use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("control {control:?} lies outside the control box")]
    ControlOutOfBox { control: Vec<f64> },

    #[error("control has {got} components, the model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("robot and obstacle centers coincide")]
    SingularGeometry,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("the discrete-time rule requires n = 1, got n = {0}")]
    UnsupportedExponent(u32),

    #[error("no feasible gain k up to {cap}")]
    InfeasibleGain { cap: f64 },

    #[error("no safe anchor control at state {state} after {refinements} refinements ({queries} queries)")]
    AnchorNotFound { state: String, refinements: usize, queries: usize },

    #[error("convergence trigger found no admissible safe control in {draws} draws")]
    TriggerFailure { draws: usize },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("rejection sampling gave up after {0} draws")]
    SamplingExhausted(usize),

    #[error("trace error: {0}")]
    Trace(String),
}
