//! Lexer and recursive-descent parser for the script subset.

use super::ast::{BinaryOp, Expr, Function, Program, Span, Stmt, UnaryOp};
use super::CompileError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Function,
    Var,
    If,
    Else,
    While,
    Return,
    True,
    False,
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    span: Span,
}

const PUNCTS: [&str; 21] = [
    "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", ",", ";", "=", "+", "-", "*", "/",
    "%", "<", ">", "!",
];

fn lex(src: &str) -> Result<Vec<Lexed>, CompileError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut column) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            let c = chars[i];
            i += 1;
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i + 1 >= chars.len() {
                    return Err(CompileError::parse(span, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                word.push(bump!());
            }
            let tok = match word.as_str() {
                "function" => Tok::Function,
                "var" => Tok::Var,
                "if" => Tok::If,
                "else" => Tok::Else,
                "while" => Tok::While,
                "return" => Tok::Return,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word),
            };
            out.push(Lexed { tok, span });
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                digits.push(bump!());
            }
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err(CompileError::parse(span, "malformed number"));
            }
            let value = digits
                .parse::<i64>()
                .map_err(|_| CompileError::parse(span, "integer literal out of range"))?;
            out.push(Lexed {
                tok: Tok::Int(value),
                span,
            });
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err(CompileError::parse(span, "unterminated string"));
                }
                match bump!() {
                    q if q == quote => break,
                    '\n' => return Err(CompileError::parse(span, "newline in string")),
                    '\\' => {
                        if i >= chars.len() {
                            return Err(CompileError::parse(span, "unterminated string"));
                        }
                        let esc = bump!();
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            '\\' => '\\',
                            '"' => '"',
                            '\'' => '\'',
                            other => {
                                return Err(CompileError::parse(
                                    span,
                                    format!("unknown escape `\\{other}`"),
                                ))
                            }
                        });
                    }
                    other => s.push(other),
                }
            }
            out.push(Lexed {
                tok: Tok::Str(s),
                span,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(*p)) {
            Some(p) => {
                for _ in 0..p.len() {
                    bump!();
                }
                out.push(Lexed {
                    tok: Tok::Punct(p),
                    span,
                });
            }
            None => return Err(CompileError::parse(span, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Lexed {
        tok: Tok::Eof,
        span: Span { line, column },
    });
    Ok(out)
}

/// Parses source text into a syntax tree. Name resolution happens later, in
/// the compiler.
pub fn parse_program(src: &str) -> Result<Program, CompileError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut functions = Vec::new();
    while p.peek() != &Tok::Eof {
        functions.push(p.function()?);
    }
    Ok(Program { functions })
}

struct Parser {
    tokens: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn next(&mut self) -> Lexed {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), CompileError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> CompileError {
        let found = match self.peek() {
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Int(v) => format!("number {v}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
            kw => format!("keyword `{}`", format!("{kw:?}").to_lowercase()),
        };
        CompileError::parse(self.span(), format!("expected {wanted}, found {found}"))
    }

    fn ident(&mut self) -> Result<(String, Span), CompileError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.next().span;
                Ok((name, span))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn function(&mut self) -> Result<Function, CompileError> {
        let span = self.span();
        if self.peek() != &Tok::Function {
            return Err(self.unexpected("`function`"));
        }
        self.next();
        let (name, _) = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                params.push(self.ident()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            body,
            span,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, CompileError> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if self.peek() == &Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.statement()?);
        }
        Ok(stmts)
    }

    fn statement(&mut self) -> Result<Stmt, CompileError> {
        let span = self.span();
        match self.peek() {
            Tok::Punct("{") => Ok(Stmt::Block(self.block()?)),
            Tok::Punct(";") => {
                self.next();
                Ok(Stmt::Block(Vec::new()))
            }
            Tok::Var => {
                self.next();
                let (name, span) = self.ident()?;
                let init = if self.eat_punct("=") {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_punct(";")?;
                Ok(Stmt::Var { name, init, span })
            }
            Tok::If => {
                self.next();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then = Box::new(self.statement()?);
                let otherwise = if self.peek() == &Tok::Else {
                    self.next();
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then,
                    otherwise,
                })
            }
            Tok::While => {
                self.next();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let body = Box::new(self.statement()?);
                Ok(Stmt::While { cond, body })
            }
            Tok::Return => {
                self.next();
                let value = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect_punct(";")?;
                Ok(Stmt::Return(value))
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Punct("=")) => {
                let (name, _) = self.ident()?;
                self.next();
                let value = self.expr()?;
                self.expect_punct(";")?;
                Ok(Stmt::Assign { name, value, span })
            }
            _ => {
                let e = self.expr()?;
                self.expect_punct(";")?;
                Ok(Stmt::Expr(e))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, CompileError> {
        self.or()
    }

    fn or(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.and()?;
        while self.eat_punct("||") {
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.binary_level(0)?;
        while self.eat_punct("&&") {
            let rhs = self.binary_level(0)?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    /// Left-associative levels from loosest to tightest binding.
    fn binary_level(&mut self, level: usize) -> Result<Expr, CompileError> {
        const LEVELS: [&[(&str, BinaryOp)]; 4] = [
            &[("==", BinaryOp::Eq), ("!=", BinaryOp::Ne)],
            &[
                ("<=", BinaryOp::Le),
                (">=", BinaryOp::Ge),
                ("<", BinaryOp::Lt),
                (">", BinaryOp::Gt),
            ],
            &[("+", BinaryOp::Add), ("-", BinaryOp::Sub)],
            &[("*", BinaryOp::Mul), ("/", BinaryOp::Div), ("%", BinaryOp::Mod)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary_level(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.eat_punct(sym) {
                    let rhs = self.binary_level(level + 1)?;
                    lhs = Expr::Binary(*op, Box::new(lhs), Box::new(rhs));
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, CompileError> {
        if self.eat_punct("-") {
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, CompileError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Expr::Str(s))
            }
            Tok::True => {
                self.next();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.next();
                Ok(Expr::Bool(false))
            }
            Tok::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let (name, span) = self.ident()?;
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    Ok(Expr::Call { name, args, span })
                } else {
                    Ok(Expr::Var { name, span })
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}
