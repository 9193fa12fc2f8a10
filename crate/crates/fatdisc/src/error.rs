use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure contracts of the
/// geometric checks and solvers; numeric tolerances live at the call sites.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value while evaluating {context} at {point:?}")]
    NonFinite { context: String, point: Vec<f64> },

    #[error("degenerate distribution: rank(alpha1, alpha2) < 2 at {point:?}")]
    Degenerate { point: Vec<f64> },

    #[error("distribution has no Reeb direction pair; {needed_for} requires one")]
    MissingReeb { needed_for: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ill-conditioned frame on element {element} (condition number {cond:.3e})")]
    Frame { element: usize, cond: f64 },

    #[error(
        "ellipticity lost on {count} element(s): worst discriminant {worst:.6e} \
         (first offenders: {sample:?})"
    )]
    EllipticityLoss {
        count: usize,
        worst: f64,
        sample: Vec<usize>,
    },

    #[error("singular linear system: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("unsupported capability: {0}")]
    Capability(String),

    #[error("scale error: {msg}; suggested resolution >= {suggested_resolution}")]
    Scale {
        msg: String,
        suggested_resolution: u32,
    },

    #[error("admissibility guard tripped at iteration {iteration}: {detail}")]
    Guard { iteration: usize, detail: String },

    #[error(
        "stagnation after {iterations} iteration(s): residual {residual:.6e}, \
         damping floor {tau:.3e} reached"
    )]
    Stagnation {
        iterations: usize,
        residual: f64,
        tau: f64,
    },

    #[error("continuation failed at t = {t}: {source}")]
    Continuation {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{file}:{line}: {msg}")]
    Config {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("parse error at {at}: {msg}")]
    Parse { at: String, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
