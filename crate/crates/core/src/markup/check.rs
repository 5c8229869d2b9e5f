//! Single-pass stack check for well-formedness.
//!
//! Start tags are pushed, each end tag pops and must match the popped name,
//! and the stack has to be empty once the token stream is exhausted. An empty
//! element tag is a push immediately followed by its pop. Names compare after
//! ASCII lowercasing.

use thiserror::Error;

use super::token::{Position, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenTag {
    pub name: String,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormednessError {
    #[error("end tag </{found}> does not match open <{expected}> (opened at {expected_position})")]
    MismatchedEndTag {
        expected: String,
        expected_position: Position,
        found: String,
        found_position: Position,
    },
    #[error("unclosed {}", describe_open(.0))]
    UnclosedTags(Vec<OpenTag>),
    #[error("end tag </{name}> has no open element")]
    StrayEndTag { name: String, position: Position },
}

fn describe_open(open: &[OpenTag]) -> String {
    open.iter()
        .map(|t| format!("<{}> at {}", t.name, t.position))
        .collect::<Vec<_>>()
        .join(", ")
}

impl WellFormednessError {
    /// Where the first violation is reported: the offending end tag, or the
    /// innermost start tag left open.
    pub fn position(&self) -> Position {
        match self {
            Self::MismatchedEndTag { found_position, .. } => *found_position,
            Self::StrayEndTag { position, .. } => *position,
            Self::UnclosedTags(open) => open.last().map(|t| t.position).unwrap_or_default(),
        }
    }
}

pub fn check_well_formed(tokens: &[Token]) -> Result<(), WellFormednessError> {
    let mut stack: Vec<OpenTag> = Vec::new();
    for token in tokens {
        match &token.kind {
            TokenKind::StartTag { name, .. } => stack.push(OpenTag {
                name: name.to_ascii_lowercase(),
                position: token.position,
            }),
            TokenKind::EndTag { name } => {
                let found = name.to_ascii_lowercase();
                match stack.pop() {
                    None => {
                        return Err(WellFormednessError::StrayEndTag {
                            name: found,
                            position: token.position,
                        })
                    }
                    Some(open) if open.name != found => {
                        return Err(WellFormednessError::MismatchedEndTag {
                            expected: open.name,
                            expected_position: open.position,
                            found,
                            found_position: token.position,
                        })
                    }
                    Some(_) => {}
                }
            }
            TokenKind::EmptyTag { .. } | TokenKind::Text(_) => {}
        }
    }
    if stack.is_empty() {
        Ok(())
    } else {
        Err(WellFormednessError::UnclosedTags(stack))
    }
}
