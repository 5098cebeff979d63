//! Robust permissive controller synthesis for interval MDPs.
//!
//! Given an IMDP and a reachability or expected-reward specification, find a
//! multi-strategy that admits as many state-action pairs as possible while
//! every compliant strategy satisfies the specification under every
//! admissible resolution of the intervals. Two MILP encodings are provided
//! (per-vertex and dualized), together with a built-in solver, an adapter
//! for external LP-file solvers, and robust value iteration to verify the
//! result independently.

pub mod bench;
pub mod error;
pub mod io;
pub mod milp;
pub mod model;
pub mod robust;
pub mod solve;
pub mod synth;
pub mod uncertainty;

pub use error::{BenchError, EncodeError, ModelError, ParseError, RowError, SolveError, SynthError, VerifyError};
pub use milp::EncodingKind;
pub use model::{ImdpModel, ModelBuilder, MultiStrategy, Spec, SpecKind};
pub use synth::{synthesize, SynthConfig, SynthesisReport};
