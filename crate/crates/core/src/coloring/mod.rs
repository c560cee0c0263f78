//! H-colorings of a graph `G` weighted by `exp(Σ_r β_r c_r(σ))`.

pub(crate) mod exact;
pub mod instances;
pub mod mpl;
mod types;

pub use exact::{
    enumerate_distribution, enumerate_distribution_capped, find_valid_coloring, for_each_valid_coloring,
    glauber_step, glauber_transitions, is_valid_coloring, q_matrix, sample_exact, sample_glauber,
    ColoringProductSampler,
};
pub use types::{color_counts, BetaVector, Coloring, ConstraintGraph, SimpleGraph, MAX_COLORS};
