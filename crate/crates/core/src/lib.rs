//! Pseudospectral simulation and bilinear control synthesis for the complex
//! Ginzburg-Landau equation on the torus `T^d = R^d / 2πZ^d`:
//!
//! ```text
//! ∂tψ = Vψ + (1+iν)Δψ − (1+iμ)|ψ|^{2σ}ψ + (r1+ir2)⟨u(t), Q(x)⟩ψ
//! ```
//!
//! The crate is split into four layers:
//!
//! * [`spectral`]: Fourier representation of complex fields and real
//!   trigonometric polynomials, Sobolev norms and the squared-gradient form
//!   `B(φ) = Σ_j (∂_jφ)²`.
//! * [`dynamics`]: exact-flow operator splitting, the resolving operator,
//!   a Picard fixed-point reference solver and Lipschitz stability probes.
//! * [`saturation`]: frequency-set tests, the growth map `F(H)`, saturation
//!   chains and the decomposition `θ = θ0 + Σ B(θj)`.
//! * [`synthesis`]: null-control and phase-control schedule construction,
//!   the small-time limit probe and the same-argument target builder.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub(crate) mod linalg;
pub mod saturation;
pub mod spectral;
pub mod synthesis;

pub use error::{Error, Result};
pub use num_complex::Complex64;
