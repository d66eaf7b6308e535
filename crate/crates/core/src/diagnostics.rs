//! Diagnostics shared by the parser and the checker.

use std::fmt;

use serde::Serialize;

use crate::ast::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Stable diagnostic codes.
pub mod codes {
    pub const LEX: &str = "E-LEX";
    pub const PARSE: &str = "E-PARSE";
    pub const DUPLICATE: &str = "E-DUPLICATE";
    pub const UNBOUND_NAME: &str = "E-UNBOUND-NAME";
    pub const NOT_CONTRACTIVE: &str = "E-NOT-CONTRACTIVE";
    pub const UNKNOWN_CLASS: &str = "E-UNKNOWN-CLASS";
    pub const UNKNOWN_IDENT: &str = "E-UNKNOWN-IDENT";
    pub const UNKNOWN_METHOD: &str = "E-UNKNOWN-METHOD";
    pub const UNDECLARED_METHOD: &str = "E-UNDECLARED-METHOD";
    pub const INIT_NOT_BRANCH: &str = "E-INIT-NOT-BRANCH";
    pub const NO_MAIN: &str = "E-NO-MAIN";
    pub const STRICT_CORE: &str = "E-STRICT-CORE";

    pub const CALL_UNAVAILABLE: &str = "E-T-CALL-UNAVAILABLE";
    pub const LINEAR_REUSE: &str = "E-LINEAR-REUSE";
    pub const VARIANT_OUTSIDE_CONDITION: &str = "E-VARIANT-OUTSIDE-CONDITION";
    pub const BRANCH_ENV_MISMATCH: &str = "E-BRANCH-ENV-MISMATCH";
    pub const SPAWN_LINEAR: &str = "E-SPAWN-LINEAR";
    pub const ASSIGN_OVER_LINEAR: &str = "E-ASSIGN-OVER-LINEAR";
    pub const SEQ_DISCARD_LINEAR: &str = "E-SEQ-DISCARD-LINEAR";
    pub const LIN_FIELD_AT_END: &str = "E-LIN-FIELD-AT-END";
    pub const PARAM_NOT_CONSUMED: &str = "E-PARAM-NOT-CONSUMED";
    pub const VARIANT_ENV_MISMATCH: &str = "E-VARIANT-ENV-MISMATCH";
    pub const USAGE_ENV_MISMATCH: &str = "E-USAGE-ENV-MISMATCH";
    pub const REC_ENV_MISMATCH: &str = "E-REC-ENV-MISMATCH";
    pub const UN_BRANCH_LIN_FIELD: &str = "E-UN-BRANCH-LIN-FIELD";
    pub const TYPE_MISMATCH: &str = "E-TYPE-MISMATCH";
    pub const UNASSIGNED_FIELD: &str = "E-UNASSIGNED-FIELD";
    pub const NOT_AN_OBJECT: &str = "E-NOT-AN-OBJECT";
    pub const ARITY: &str = "E-ARITY";
    pub const NON_USAGE_ALTERS: &str = "E-NON-USAGE-METHOD-ALTERS";
    pub const SELF_CALL_STATE: &str = "E-SELF-CALL-STATE";
    pub const NOT_BOOLEAN_VARIANT: &str = "E-VARIANT-NOT-BOOLEAN";
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: &'static str, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[code]: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}[{}]: {}",
            self.span.start_line, self.span.start_col, self.severity, self.code, self.message
        )
    }

    pub fn to_json(&self, file: &str) -> serde_json::Value {
        serde_json::json!({
            "file": file,
            "line": self.span.start_line,
            "col": self.span.start_col,
            "end_line": self.span.end_line,
            "end_col": self.span.end_col,
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
        })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}[{}]: {}",
            self.span.start_line, self.span.start_col, self.severity, self.code, self.message
        )
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
