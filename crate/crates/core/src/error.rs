use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),

    #[error("profile/grid mismatch: {0}")]
    ProfileMismatch(String),

    #[error("velocity must vanish at the center: |u(0)| = {value} exceeds tolerance {tol}")]
    CenterVelocity { value: f64, tol: f64 },

    #[error("velocity must vanish on the wall: |u(R)| = {value} exceeds tolerance {tol}")]
    WallVelocity { value: f64, tol: f64 },

    #[error("invalid Lp exponent: p = {0} (need p >= 1)")]
    InvalidExponent(f64),

    #[error("radius {r} outside the ball [0, {radius}]")]
    RadiusOutOfRange { r: f64, radius: f64 },

    #[error("invalid gas parameters: {0}")]
    InvalidGasParams(String),

    #[error("initial density not uniformly positive (min = {0})")]
    Vacuum(f64),

    #[error("time step {dt} exceeds the acoustic stability limit {limit}")]
    StabilityLimit { dt: f64, limit: f64 },

    #[error("specific volume lost positivity at cell {cell} (t = {t})")]
    PositivityLoss { cell: usize, t: f64 },

    #[error("tridiagonal solve failed: zero pivot at row {0}")]
    SingularSystem(usize),

    #[error("CKN parameters are infeasible: {0:?}")]
    InfeasibleCkn(Vec<crate::ckn::Condition>),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("empirical ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("test-function corpus is empty or entirely degenerate")]
    EmptyCorpus,

    #[error("time {t} outside the recorded trajectory [0, {t_end}]")]
    TimeOutOfRange { t: f64, t_end: f64 },

    #[error("trajectory/record sequence too short: {0}")]
    TooShort(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("twin run {run} aborted: {source}")]
    TwinAborted {
        run: u8,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
