//! Versioned JSON serialization of the elaborated core: the de Bruijn term
//! tree with explicit node kinds, plus the inductive environment needed to
//! re-check it.

use serde::{Deserialize, Serialize};

use grind_core::sig::Env;
use grind_core::term::Term;

pub const CORE_DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreDump {
    pub version: u32,
    pub env: Env,
    pub defs: Vec<CoreDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreDef {
    pub name: String,
    pub term: Term,
    pub ty: Term,
}

#[derive(Debug, thiserror::Error)]
pub enum CoreDumpError {
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported core dump version {0} (expected {CORE_DUMP_VERSION})")]
    Version(u32),
}

pub fn encode(dump: &CoreDump) -> Result<String, CoreDumpError> {
    Ok(serde_json::to_string_pretty(dump)?)
}

pub fn decode(text: &str) -> Result<CoreDump, CoreDumpError> {
    let dump: CoreDump = serde_json::from_str(text)?;
    if dump.version != CORE_DUMP_VERSION {
        return Err(CoreDumpError::Version(dump.version));
    }
    Ok(dump)
}
