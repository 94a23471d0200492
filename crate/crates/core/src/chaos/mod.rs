//! Wiener–Itô chaos expansions over K Gaussian coordinates and the algebra
//! operations on them.

mod algebra;
mod expansion;
mod multi_index;
mod test_function;

pub use algebra::{
    ChaosAlgebra, PhiTildeOutput, Projection, SamplingPlan, DEFAULT_MAX_DEGREE,
};
pub use expansion::{coordinate_weight, hermite_values, ChaosExpansion, PRUNE_EPS};
pub use multi_index::MultiIndex;
pub use test_function::{bump_value, TestFunction};
