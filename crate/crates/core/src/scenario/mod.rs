//! The conversation-flow DSL: document types, parser, serializer and lint.

mod ast;
mod diagnostic;
mod estimate;
mod lexer;
mod lint;
mod parser;
mod serialize;
mod validate;

pub use ast::{
    Arc, ContentNode, FallbackSpec, NodeId, NodeKind, ScenarioDoc, SpotDef, Startpoint, DEFAULT_BUDGET_S,
    DEFAULT_FALLBACK_REPLY, DEFAULT_RATE_CPS,
};
pub use diagnostic::{has_errors, Code, Diagnostic, Pos, Severity};
pub use estimate::{estimate_duration, Estimator, DEFAULT_LISTEN_S};
pub use lint::{check_source, lint_scenario};
pub use parser::parse_scenario;
pub use serialize::serialize_scenario;
