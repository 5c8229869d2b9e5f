//! Recursive-descent reference for tag matching.
//!
//! Grammar: `content := (leaf | element)*`, `element := open content close`
//! where `close` must name the same tag as `open` (ASCII case-insensitive).

use whtmlgate_core::markup::{Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Open(String, usize),
    Close(String, usize),
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    /// End tag naming something other than the innermost open element.
    Mismatch(usize),
    /// End tag with nothing open.
    Stray(usize),
    /// Input ended inside an element; offset of the innermost one.
    Unclosed(usize),
}

pub fn from_tokens(tokens: &[Token]) -> Vec<Tok> {
    tokens
        .iter()
        .map(|t| match &t.kind {
            TokenKind::StartTag { name, .. } => Tok::Open(name.clone(), t.position.byte_offset),
            TokenKind::EndTag { name } => Tok::Close(name.clone(), t.position.byte_offset),
            _ => Tok::Leaf,
        })
        .collect()
}

struct Matcher<'a> {
    toks: &'a [Tok],
    at: usize,
}

impl Matcher<'_> {
    /// Consumes children until a close tag or the end. Returns the verdict
    /// for anything that went wrong below this level.
    fn content(&mut self) -> Option<Verdict> {
        while let Some(t) = self.toks.get(self.at) {
            match t {
                Tok::Leaf => self.at += 1,
                Tok::Close(..) => return None,
                Tok::Open(name, offset) => {
                    self.at += 1;
                    if let Some(v) = self.content() {
                        return Some(v);
                    }
                    match self.toks.get(self.at) {
                        None => return Some(Verdict::Unclosed(*offset)),
                        Some(Tok::Close(close, at)) => {
                            if !close.eq_ignore_ascii_case(name) {
                                return Some(Verdict::Mismatch(*at));
                            }
                            self.at += 1;
                        }
                        Some(_) => unreachable!("content stops only at a close tag or the end"),
                    }
                }
            }
        }
        None
    }
}

pub fn check(toks: &[Tok]) -> Verdict {
    let mut m = Matcher { toks, at: 0 };
    if let Some(v) = m.content() {
        return v;
    }
    match toks.get(m.at) {
        None => Verdict::Ok,
        Some(Tok::Close(_, at)) => Verdict::Stray(*at),
        Some(_) => unreachable!("top-level content stops only at a close tag or the end"),
    }
}
