//! Tokenizer for wHTML source.
//!
//! Produces start, end, empty-element and text tokens. Comments, the XML
//! declaration and doctype lines are consumed and discarded; text on either
//! side of a discarded construct is merged into one token.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Position {
    pub byte_offset: usize,
    /// 1-based.
    pub line: u32,
    /// 1-based, counted in characters.
    pub column: u32,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

pub type Attributes = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    StartTag { name: String, attributes: Attributes },
    EndTag { name: String },
    EmptyTag { name: String, attributes: Attributes },
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub position: Position,
}

impl Token {
    /// As-written tag name, `None` for text.
    pub fn raw_name(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::StartTag { name, .. }
            | TokenKind::EndTag { name }
            | TokenKind::EmptyTag { name, .. } => Some(name),
            TokenKind::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct SyntaxError {
    pub position: Position,
    pub message: String,
}

pub fn tokenize(input: &[u8]) -> Result<Vec<Token>, SyntaxError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let valid = &input[..e.valid_up_to()];
        // Safe: prefix is valid UTF-8 by construction.
        let prefix = std::str::from_utf8(valid).unwrap_or_default();
        SyntaxError {
            position: position_after(prefix),
            message: "invalid UTF-8".into(),
        }
    })?;
    Tokenizer::new(text).run()
}

fn position_after(text: &str) -> Position {
    let mut pos = Position {
        byte_offset: 0,
        line: 1,
        column: 1,
    };
    for c in text.chars() {
        advance(&mut pos, c);
    }
    pos
}

fn advance(pos: &mut Position, c: char) {
    pos.byte_offset += c.len_utf8();
    if c == '\n' {
        pos.line += 1;
        pos.column = 1;
    } else {
        pos.column += 1;
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == ':'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '-' | '.')
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: Position,
    tokens: Vec<Token>,
    pending_text: Option<(String, Position)>,
}

impl<'a> Tokenizer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: Position {
                byte_offset: 0,
                line: 1,
                column: 1,
            },
            tokens: Vec::new(),
            pending_text: None,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos.byte_offset..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        advance(&mut self.pos, c);
        Some(c)
    }

    fn bump_str(&mut self, s: &str) {
        for c in s.chars() {
            advance(&mut self.pos, c);
        }
    }

    fn error<T>(&self, at: Position, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            position: at,
            message: message.into(),
        })
    }

    fn flush_text(&mut self) {
        if let Some((text, position)) = self.pending_text.take() {
            self.tokens.push(Token {
                kind: TokenKind::Text(text),
                position,
            });
        }
    }

    fn push_tag(&mut self, kind: TokenKind, position: Position) {
        self.flush_text();
        self.tokens.push(Token { kind, position });
    }

    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        while let Some(c) = self.peek() {
            if c == '<' {
                self.markup()?;
            } else {
                self.text()?;
            }
        }
        self.flush_text();
        Ok(self.tokens)
    }

    fn text(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        let mut buf = String::new();
        while let Some(c) = self.peek() {
            match c {
                '<' => break,
                '&' => buf.push(self.entity()?),
                _ => {
                    buf.push(c);
                    self.bump();
                }
            }
        }
        match &mut self.pending_text {
            Some((text, _)) => text.push_str(&buf),
            None => self.pending_text = Some((buf, start)),
        }
        Ok(())
    }

    fn entity(&mut self) -> Result<char, SyntaxError> {
        let start = self.pos;
        self.bump();
        let rest = self.rest();
        let Some(end) = rest.find(';').filter(|&i| i <= 10) else {
            return self.error(start, "unterminated character reference");
        };
        let name = &rest[..end];
        let decoded = match name {
            "lt" => Some('<'),
            "gt" => Some('>'),
            "amp" => Some('&'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            _ => {
                if let Some(hex) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                    u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
                } else if let Some(dec) = name.strip_prefix('#') {
                    dec.parse::<u32>().ok().and_then(char::from_u32)
                } else {
                    None
                }
            }
        };
        match decoded {
            Some(c) => {
                self.bump_str(&rest[..=end]);
                Ok(c)
            }
            None => self.error(start, format!("unknown character reference `&{name};`")),
        }
    }

    fn markup(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        let rest = self.rest();
        if rest.starts_with("<!--") {
            return self.skip_until(start, "<!--", "-->", "unterminated comment");
        }
        if rest.starts_with("<?") {
            return self.skip_until(start, "<?", "?>", "unterminated declaration");
        }
        if rest.starts_with("<!") {
            return self.skip_until(start, "<!", ">", "unterminated doctype");
        }
        self.bump();
        let closing = self.peek() == Some('/');
        if closing {
            self.bump();
        }
        let name = self.name(start)?;
        if closing {
            self.skip_ws();
            match self.bump() {
                Some('>') => {}
                _ => return self.error(start, format!("unterminated end tag `</{name}`")),
            }
            self.push_tag(TokenKind::EndTag { name }, start);
            return Ok(());
        }

        let mut attributes: Attributes = Vec::new();
        loop {
            let had_ws = self.skip_ws();
            match self.peek() {
                None => return self.error(start, format!("unterminated tag `<{name}`")),
                Some('>') => {
                    self.bump();
                    self.push_tag(TokenKind::StartTag { name, attributes }, start);
                    return Ok(());
                }
                Some('/') => {
                    self.bump();
                    if self.bump() != Some('>') {
                        return self.error(start, format!("expected `/>` to close `<{name}`"));
                    }
                    self.push_tag(TokenKind::EmptyTag { name, attributes }, start);
                    return Ok(());
                }
                Some(c) if is_name_start(c) && had_ws => {
                    let (attr, value) = self.attribute()?;
                    if attributes.iter().any(|(n, _)| *n == attr) {
                        return self.error(start, format!("duplicate attribute `{attr}`"));
                    }
                    attributes.push((attr, value));
                }
                Some(_) => {
                    return self.error(self.pos, format!("bad attribute syntax in `<{name}`"));
                }
            }
        }
    }

    fn skip_until(
        &mut self,
        start: Position,
        open: &str,
        close: &str,
        message: &str,
    ) -> Result<(), SyntaxError> {
        let body = &self.rest()[open.len()..];
        match body.find(close) {
            Some(i) => {
                let consumed = &self.rest()[..open.len() + i + close.len()];
                self.bump_str(consumed);
                Ok(())
            }
            None => self.error(start, message),
        }
    }

    fn skip_ws(&mut self) -> bool {
        let mut any = false;
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.bump();
            any = true;
        }
        any
    }

    fn name(&mut self, tag_start: Position) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(c) if is_name_start(c) => {}
            _ => return self.error(tag_start, "stray `<`"),
        }
        let mut name = String::new();
        while let Some(c) = self.peek().filter(|c| is_name_char(*c)) {
            name.push(c);
            self.bump();
        }
        Ok(name)
    }

    fn attribute(&mut self) -> Result<(String, String), SyntaxError> {
        let at = self.pos;
        let mut name = String::new();
        while let Some(c) = self.peek().filter(|c| is_name_char(*c)) {
            name.push(c);
            self.bump();
        }
        self.skip_ws();
        if self.bump() != Some('=') {
            return self.error(at, format!("attribute `{name}` has no value"));
        }
        self.skip_ws();
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return self.error(self.pos, format!("value of `{name}` must be quoted")),
        };
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                None => return self.error(at, format!("unterminated value for `{name}`")),
                Some(c) if c == quote => {
                    self.bump();
                    break;
                }
                Some('<') => return self.error(self.pos, "`<` in attribute value"),
                Some('&') => value.push(self.entity()?),
                Some(c) => {
                    value.push(c);
                    self.bump();
                }
            }
        }
        Ok((name, value))
    }
}
