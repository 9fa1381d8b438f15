//! Saturating frequency sets, the growth map `F(H) = H + span{∇θ_i·∇θ_j}`
//! and numerical decomposition `θ = θ0 + Σ B(θ_j)` with `B(φ) = |∇φ|²`.

mod decompose;
mod frequency;
mod report;
mod subspace;

pub(crate) use subspace::Dictionary;

pub use decompose::{decompose, decompose_with, DecomposeOptions, Decomposition};
pub use frequency::{chain_condition, is_generator, is_saturating, ChainReport, FrequencySet, PairWitness};
pub use report::{write_levels_csv, write_text_report, LEVELS_CSV_HEADER};
pub use subspace::{check_q_condition, grow, saturation_chain, SaturationChain, SubspaceBasis, MEMBERSHIP_TOLERANCE};
