use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepSizeUnderflow { s: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at s = {s}")]
    TooManySteps { s: f64, max_steps: usize },
    #[error("|s/sqrt(t)| = {scaled} exceeds the integrated range {s_max}")]
    RangeExceeded { scaled: f64, s_max: f64 },
    #[error("window [{lo}, {hi}] too short for a reliable fit: {detail}")]
    WindowTooShort { lo: f64, hi: f64, detail: String },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("negative discriminant {value:e} in |f'| extraction")]
    NegativeDiscriminant { value: f64 },
    #[error("fixed-point map not contractive at iteration {iteration}")]
    NotContractive { iteration: usize },
    #[error("no convergence along the schedule: {0}")]
    NotConverging(String),
    #[error("degenerate axis: |B3| = {b3} leaves no transverse basis")]
    DegenerateAxis { b3: f64 },
    #[error("no sign change of A3+ found on the delta grid")]
    NoSignChange,
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
