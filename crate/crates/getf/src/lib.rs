//! Boolean CP tensor decomposition via geometric rank-1 pattern extraction.
//!
//! The decomposition expresses a binary tensor as the Boolean OR of rank-1
//! tensors, each the outer AND-product of one binary fiber per mode. Patterns
//! are extracted sequentially: the residual tensor is reordered so its dense
//! corner is left-triangular-like, a corner simplex region seeds the most
//! likely pattern fiber, and geometric folding contracts the tensor one mode
//! at a time down to a 2-D base case.
//!
//! Entry points:
//! - [`getf_decompose`] runs the full sequential extraction loop.
//! - [`generate_planted`] builds seeded planted-pattern benchmark tensors.
//! - [`brute_force_best_rank1`] / [`greedy_oracle_decompose`] give an
//!   exhaustive reference for tiny tensors.

pub mod bits;
pub mod error;
pub mod factorization;
pub mod geometry;
pub mod synth;
pub mod tensor;

pub use bits::BitVec;
pub use error::{Error, Result};
pub use factorization::{
    candidate_cost, direction_set, fold_once, geometric_folding, getf_decompose,
    matrix_base_case, pattern_fiber_finding, residual_clear, ConvergedReason,
    DecompositionResult, Direction, FiberPosition, GetfConfig,
};
pub use geometry::{
    is_flat_2ltl, is_p_ltl, ltl_reorder, mask_to_region, segmenting_index, two_ltl_projection,
    two_ltl_projection_with, IrtPlan, Orientation, SimplexRegion,
};
pub use synth::{
    brute_force_best_rank1, generate_planted, greedy_oracle_decompose, score_recovery,
    RecoveryScore, SynthSpec,
};
pub use tensor::{
    reconstruction_error, BoolOp, BoolTensor, FactorSet, IndexTuple, IntTensor, ModeIndexSet,
    Rank1Pattern,
};
