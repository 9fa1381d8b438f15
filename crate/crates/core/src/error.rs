use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("range error: exponent {exponent:.3} exceeds the floating-point range ({context})")]
    Range { exponent: f64, context: String },

    /// Threshold exceedance of the H^s norm. This is a numerical proxy for
    /// blow-up, not a proof of divergence.
    #[error("H^s norm {norm:.3e} exceeded blow-up threshold {threshold:.3e} at t = {time:.6e}")]
    BlowUp { time: f64, norm: f64, threshold: f64 },

    #[error("Picard iteration is not contracting (iteration {iteration}, increment {increment:.3e})")]
    NonContraction { iteration: usize, increment: f64 },

    #[error("decomposition failed: best residual {residual:.3e} above tolerance {tolerance:.1e}")]
    DecompositionFailed { residual: f64, tolerance: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("time cap violated: plan needs {needed:.6e} s, cap is {cap:.6e} s")]
    TimeCap { needed: f64, cap: f64 },

    #[error("argument mismatch of {mismatch:.3e} rad at grid point {index}")]
    ArgumentMismatch { index: usize, mismatch: f64 },

    #[error("modulus {value:.3e} below floor inside mollifier support at grid point {index}")]
    BelowFloor { index: usize, value: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
