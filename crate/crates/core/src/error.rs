use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("jet of order {got} is too short, need order {needed}")]
    InsufficientJetOrder { needed: usize, got: usize },

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("step size underflow at tau = {tau} (h = {h:e})")]
    StepUnderflow { tau: f64, h: f64 },

    #[error("non-finite state at tau = {tau}")]
    NonFinite { tau: f64 },

    #[error("step budget of {steps} exhausted at tau = {tau}")]
    StepBudget { tau: f64, steps: usize },

    #[error("scale factor a = {a:e} too close to zero")]
    BigBang { a: f64 },

    #[error("logarithmic singularity: coefficient of a'''' is {coefficient:e} at a = {a}")]
    LogSingularity { a: f64, coefficient: f64 },

    #[error("second-order singularity: denominator {denominator:e} at a = {a}, a' = {a1}")]
    HubbleSingularity { a: f64, a1: f64, denominator: f64 },

    #[error("blow-up: scale factor a = {a:e}")]
    BlowUp { a: f64 },

    #[error("pole of the energy constraint at a' = {a1:e}")]
    EnergyPole { a1: f64 },

    #[error("no sign change on [{lo}, {hi}]: g = ({g_lo:e}, {g_hi:e})")]
    NoSignChange { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("Picard iteration diverged at iteration {iteration} (gap {gap:e})")]
    PicardDivergence { iteration: usize, gap: f64 },

    #[error("trajectory halted: {0}")]
    Halted(String),
}

pub type Result<T> = std::result::Result<T, SceError>;
