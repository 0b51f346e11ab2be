use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes. `E_*` codes make a document unloadable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Code {
    Syntax,
    ArcCount,
    DanglingRef,
    Cycle,
    NoFallback,
    DuplicateId,
    Kind,
    NoNext,
    UnknownGesture,
    EmptyKey,
    EmptyReply,
    BudgetInfeasible,
    Unreachable,
    NoFavorable,
    SpotNoPlacetype,
    TagNoBank,
    SharedNode,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Syntax => "E_SYNTAX",
            Code::ArcCount => "E_ARC_COUNT",
            Code::DanglingRef => "E_DANGLING_REF",
            Code::Cycle => "E_CYCLE",
            Code::NoFallback => "E_NO_FALLBACK",
            Code::DuplicateId => "E_DUPLICATE_ID",
            Code::Kind => "E_KIND",
            Code::NoNext => "E_NO_NEXT",
            Code::UnknownGesture => "E_UNKNOWN_GESTURE",
            Code::EmptyKey => "E_EMPTY_KEY",
            Code::EmptyReply => "E_EMPTY_REPLY",
            Code::BudgetInfeasible => "E_BUDGET_INFEASIBLE",
            Code::Unreachable => "W_UNREACHABLE",
            Code::NoFavorable => "W_NO_FAVORABLE",
            Code::SpotNoPlacetype => "W_SPOT_NO_PLACETYPE",
            Code::TagNoBank => "W_TAG_NO_BANK",
            Code::SharedNode => "W_SHARED_NODE",
        }
    }

    pub fn severity(self) -> Severity {
        if self.as_str().starts_with("E_") {
            Severity::Error
        } else {
            Severity::Warning
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// 1-based line and column of a source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos: Option<Pos>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: code.severity(),
            code,
            node: None,
            pos: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, pos: Option<Pos>) -> Self {
        self.pos = pos;
        self
    }

    pub fn on(mut self, node: impl Into<String>) -> Self {
        self.node = Some(node.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]", self.code)?;
        if let Some(pos) = self.pos {
            write!(f, " at {pos}")?;
        }
        if let Some(node) = &self.node {
            write!(f, " in `{node}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
