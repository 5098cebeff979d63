//! MILP problems, the two synthesis encodings, and LP-file output.

mod encode;
mod lp_format;
mod problem;

pub use encode::{
    build_dual_encoding, build_encoding, build_vertex_encoding, compute_big_m, decision_pairs, dual_block_lp,
    EncodeOptions, Encoding, EncodingKind, DEFAULT_VERTEX_CAP, PROGRESS_MARGIN,
};
pub use lp_format::{emit_lp, parse_lp};
pub use problem::{
    encoding_stats, sanitize_name, Constraint, ConstraintRole, EncodingStats, MilpProblem, Sense, VarKind, VarRole,
    Variable,
};

#[cfg(test)]
mod tests;
