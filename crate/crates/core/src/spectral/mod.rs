//! Fourier-space representation of fields on the torus.
//!
//! Coefficients use the normalized measure `dm = dx / (2π)^d`, so the zero
//! mode of a field is its mean value and `‖1‖_s = 1` for every `s`.

mod fft;
mod field;
mod grid;
pub mod io;
mod trig;

pub use field::{SpectralField, MAX_EXPONENT};
pub use grid::{DealiasFraction, GridSpec, Wavevector};
pub(crate) use trig::Part;
pub use trig::TrigPolynomial;
