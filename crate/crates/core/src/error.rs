use thiserror::Error;

use crate::model::Diagnostic;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model: {}", join_diags(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("threshold {0} out of range")]
    ThresholdOutOfRange(f64),
    #[error("target set is empty")]
    EmptyTarget,
    #[error("unknown state {0}")]
    UnknownState(usize),
    #[error("strategy covers {found} states, model has {expected}")]
    StrategyShape { expected: usize, found: usize },
    #[error("state {0} admits no action")]
    EmptyAdmittedSet(usize),
    #[error("action {action} is not enabled at state {state}")]
    ActionNotEnabled { state: usize, action: usize },
    #[error("{count} items exceed the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },
}

fn join_diags(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingHeader,
    Syntax(String),
    UndeclaredIdentifier(String),
    DuplicateTransition,
    UnknownLabel(String),
    ThresholdOutOfRange,
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {}", describe(.kind))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::MissingHeader => "missing header".into(),
        ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ParseErrorKind::UndeclaredIdentifier(id) => format!("undeclared identifier `{id}`"),
        ParseErrorKind::DuplicateTransition => "duplicate transition".into(),
        ParseErrorKind::UnknownLabel(l) => format!("unknown label \"{l}\""),
        ParseErrorKind::ThresholdOutOfRange => "threshold out of range".into(),
        ParseErrorKind::Invalid(m) => format!("invalid model: {m}"),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RowError {
    #[error("interval row is infeasible (lower sum {lower_sum}, upper sum {upper_sum})")]
    Infeasible { lower_sum: f64, upper_sum: f64 },
    #[error("row has {0} vertices, more than the configured cap")]
    TooManyVertices(usize),
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("value iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("expected reward diverges: state {0} does not reach the target almost surely")]
    Divergence(usize),
    #[error(transparent)]
    Row(#[from] RowError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("vertex encoding would need {0} robust constraints, above the cap")]
    VertexExplosion(usize),
    #[error(transparent)]
    Row(#[from] RowError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("numerical trouble in the LP solver: {0}")]
    Numeric(String),
    #[error("external solver failed: {0}")]
    External(String),
    #[error("malformed solution line {line}: {text}")]
    MalformedSolution { line: usize, text: String },
    #[error("solution violates constraint `{0}`")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("solver stopped early: {0}")]
    CapExceeded(String),
    #[error("solver reported an unbounded relaxation")]
    Unbounded,
    #[error("state {0} admits no action in the solver assignment")]
    EmptyActionSet(usize),
    #[error("synthesized multi-strategy fails verification (witness {witness})")]
    Unsound { witness: f64 },
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no trap placement keeps the goal reachable after {0} tries")]
    Placement(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}
