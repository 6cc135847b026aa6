//! Diagnostics: every kernel/elaborator failure carries the rule that
//! produced it; rendering is plain text or line-delimited JSON.

use serde::Serialize;

use grind_core::elaborate::ElabError;
use grind_core::surface::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule: Option<String>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    /// Mismatches report both normal forms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_forms: Option<(String, String)>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            rule: None,
            message: message.into(),
            span: None,
            normal_forms: None,
        }
    }

    pub fn with_rule(mut self, rule: impl Into<String>) -> Self {
        self.rule = Some(rule.into());
        self
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            serde_json::to_string(self).unwrap_or_else(|_| self.message.clone())
        } else {
            let mut out = String::new();
            match self.severity {
                Severity::Error => out.push_str("error"),
                Severity::Warning => out.push_str("warning"),
                Severity::Info => out.push_str("info"),
            }
            if let Some(r) = &self.rule {
                out.push_str(&format!("[{r}]"));
            }
            if let Some(s) = &self.span {
                out.push_str(&format!(" at {}..{}", s.start, s.end));
            }
            out.push_str(": ");
            out.push_str(&self.message);
            if let Some((a, b)) = &self.normal_forms {
                out.push_str(&format!("\n  expected normal form: {a}\n  found normal form:    {b}"));
            }
            out
        }
    }
}

pub fn from_elab(e: &ElabError) -> Diagnostic {
    match e {
        ElabError::Rule { rule, msg, span } => Diagnostic {
            severity: Severity::Error,
            rule: Some((*rule).to_string()),
            message: msg.clone(),
            span: Some(*span),
            normal_forms: None,
        },
        ElabError::Inconsistent {
            expected,
            found,
            span,
        } => Diagnostic {
            severity: Severity::Error,
            rule: Some("EConsistent".to_string()),
            message: "the synthesized type is not consistent with the expected type".to_string(),
            span: Some(*span),
            normal_forms: Some((expected.clone(), found.clone())),
        },
        ElabError::Core(te) => {
            let rule = match te {
                grind_core::typing::TypeError::Rule { rule, .. } => rule.to_string(),
                grind_core::typing::TypeError::Mismatch { .. } => "CConv".to_string(),
                grind_core::typing::TypeError::Norm(_) => "normalize".to_string(),
            };
            Diagnostic {
                severity: Severity::Error,
                rule: Some(rule),
                message: te.to_string(),
                span: None,
                normal_forms: None,
            }
        }
        ElabError::Norm(err) => Diagnostic {
            severity: Severity::Error,
            rule: Some("normalize".to_string()),
            message: err.to_string(),
            span: None,
            normal_forms: None,
        },
    }
}
