//! A small WMLScript subset: compiler, `.wbc` bytecode files and the VM.
//!
//! Scripts are compiled once into a bytecode file that can be stored and
//! executed any number of times. Decoding re-verifies the module, so a loaded
//! file behaves exactly like a freshly compiled one.

pub mod ast;
pub mod bytecode;
pub mod compiler;
pub mod parser;
pub mod vm;

use thiserror::Error;

use crate::digest::{fnv1a64, to_hex};

pub use bytecode::{decode_module, encode_module, BytecodeModule, DecodeError};
pub use compiler::{compile, compile_program};
pub use parser::parse_program;
pub use vm::{execute, execute_counted, ExecError, Outcome, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("{line}:{column}: parse error: {message}")]
    Parse {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{line}:{column}: undefined name `{name}`")]
    Name { name: String, line: u32, column: u32 },
    #[error("{line}:{column}: `{name}` takes {expected} arguments, got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        line: u32,
        column: u32,
    },
    #[error("{line}:{column}: `{name}` is already declared")]
    Duplicate { name: String, line: u32, column: u32 },
    #[error("limit exceeded: {0}")]
    Limit(String),
}

impl CompileError {
    pub(crate) fn parse(span: ast::Span, message: impl Into<String>) -> Self {
        CompileError::Parse {
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }
}

/// Script text plus its FNV-1a digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptSource {
    text: String,
    digest: u64,
}

impl ScriptSource {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let digest = fnv1a64(text.as_bytes());
        Self { text, digest }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, std::str::Utf8Error> {
        Ok(Self::new(std::str::from_utf8(bytes)?))
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }
}

/// Name under which a script's compiled bytecode is cached.
pub fn cache_key(src: &ScriptSource) -> String {
    to_hex(src.digest())
}
