//! Error type shared by the solver crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {axis} = {value} lies outside [0,1]")]
    OutOfCube { axis: usize, value: f64 },

    #[error("degenerate rectangle: edge {axis} has lo {lo} >= hi {hi}")]
    DegenerateRect { axis: usize, lo: f64, hi: f64 },

    #[error("rectangle is not contained in the unit cube on axis {axis}")]
    RectOutsideCube { axis: usize },

    #[error("batch query with an empty point list")]
    EmptyBatch,

    #[error("smoothness bound {0} is not finite and positive")]
    BadSmoothnessBound(f64),

    #[error("unknown catalog function `{0}`")]
    UnknownFunction(String),

    #[error("aspect ratio {0} exceeds 3; canonicalize requires a well-conditioned rectangle")]
    AspectRatioTooLarge(f64),

    #[error("grid of about {estimate} points exceeds the cap of {cap}")]
    GridTooLarge { estimate: u128, cap: u128 },

    #[error("step budget of {budget} exceeded after {steps} steps ({context})")]
    StepBudgetExceeded {
        budget: u64,
        steps: u64,
        context: String,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("stationarity claim failed: |g| = {norm} > claimed level {level}")]
    ClaimFailed { norm: f64, level: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
