//! The hard-SAT model: uniform weighting `e^{β C(σ)}` over satisfying
//! assignments, where `C(σ)` counts variables set to 1.
//!
//! Variables are 0-based here; file formats translate to 1-based indices.

mod exact;
mod formula;
pub mod instances;
pub mod lll;
pub mod mpl;

pub use exact::{
    count_satisfying, decompose_components, enumerate_distribution, enumerate_distribution_capped,
    for_each_satisfying, glauber_step, glauber_transitions, sample_exact, sample_glauber, ProductSampler,
};
pub use formula::{Assignment, CnfFormula, Component, FormulaStats, Literal};
