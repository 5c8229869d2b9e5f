//! Tree-walking reference interpreter over the parsed syntax tree.

use std::collections::HashMap;

use whtmlgate_core::wmls::ast::{BinaryOp, Expr, Function, Program, Stmt, UnaryOp};
use whtmlgate_core::wmls::{ExecError, Value};

const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefValue {
    Int(i64),
    Str(String),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefError {
    DivideByZero,
    TypeError,
    StackOverflow,
}

pub type RefResult = Result<RefValue, RefError>;

impl RefValue {
    fn truth(&self) -> bool {
        match self {
            RefValue::Int(0) => false,
            RefValue::Int(_) => true,
            RefValue::Str(s) => !s.is_empty(),
            RefValue::Bool(b) => *b,
        }
    }

    pub fn from_value(v: &Value) -> Self {
        match v {
            Value::Integer(i) => RefValue::Int(*i),
            Value::String(s) => RefValue::Str(s.clone()),
            Value::Boolean(b) => RefValue::Bool(*b),
        }
    }
}

/// Maps a VM result onto the reference outcome space.
pub fn normalize(r: Result<Value, ExecError>) -> Result<RefResult, ExecError> {
    match r {
        Ok(v) => Ok(Ok(RefValue::from_value(&v))),
        Err(ExecError::DivideByZero) => Ok(Err(RefError::DivideByZero)),
        Err(ExecError::TypeError(_)) => Ok(Err(RefError::TypeError)),
        Err(ExecError::StackOverflow) => Ok(Err(RefError::StackOverflow)),
        Err(other) => Err(other),
    }
}

enum Flow {
    Next,
    Return(RefValue),
}

struct Interp<'p> {
    functions: HashMap<&'p str, &'p Function>,
}

pub fn run(program: &Program, entry: &str, args: Vec<RefValue>) -> RefResult {
    let interp = Interp {
        functions: program.functions.iter().map(|f| (f.name.as_str(), f)).collect(),
    };
    let f = interp.functions[entry];
    interp.call(f, args, 1)
}

impl<'p> Interp<'p> {
    fn call(&self, f: &'p Function, args: Vec<RefValue>, depth: usize) -> RefResult {
        let mut env: HashMap<&'p str, RefValue> = HashMap::new();
        for ((name, _), v) in f.params.iter().zip(args) {
            env.insert(name, v);
        }
        for s in &f.body {
            if let Flow::Return(v) = self.stmt(s, &mut env, depth)? {
                return Ok(v);
            }
        }
        Ok(RefValue::Int(0))
    }

    fn stmt(&self, s: &'p Stmt, env: &mut HashMap<&'p str, RefValue>, depth: usize) -> Result<Flow, RefError> {
        match s {
            Stmt::Var { name, init, .. } => {
                let v = match init {
                    Some(e) => self.expr(e, env, depth)?,
                    None => RefValue::Int(0),
                };
                env.insert(name, v);
            }
            Stmt::Assign { name, value, .. } => {
                let v = self.expr(value, env, depth)?;
                env.insert(name, v);
            }
            Stmt::If { cond, then, otherwise } => {
                if self.expr(cond, env, depth)?.truth() {
                    return self.stmt(then, env, depth);
                } else if let Some(o) = otherwise {
                    return self.stmt(o, env, depth);
                }
            }
            Stmt::While { cond, body } => {
                while self.expr(cond, env, depth)?.truth() {
                    if let Flow::Return(v) = self.stmt(body, env, depth)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            Stmt::Return(e) => {
                let v = match e {
                    Some(e) => self.expr(e, env, depth)?,
                    None => RefValue::Int(0),
                };
                return Ok(Flow::Return(v));
            }
            Stmt::Expr(e) => {
                self.expr(e, env, depth)?;
            }
            Stmt::Block(stmts) => {
                for s in stmts {
                    if let Flow::Return(v) = self.stmt(s, env, depth)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
        }
        Ok(Flow::Next)
    }

    fn expr(&self, e: &'p Expr, env: &mut HashMap<&'p str, RefValue>, depth: usize) -> RefResult {
        use RefValue::*;
        Ok(match e {
            Expr::Int(i) => Int(*i),
            Expr::Str(s) => Str(s.clone()),
            Expr::Bool(b) => Bool(*b),
            // Declared-but-unassigned slots read as 0.
            Expr::Var { name, .. } => env.get(name.as_str()).cloned().unwrap_or(Int(0)),
            Expr::Unary(UnaryOp::Not, inner) => Bool(!self.expr(inner, env, depth)?.truth()),
            Expr::Unary(UnaryOp::Neg, inner) => match self.expr(inner, env, depth)? {
                Int(i) => Int(0i64.wrapping_sub(i)),
                _ => return Err(RefError::TypeError),
            },
            Expr::And(l, r) => {
                if !self.expr(l, env, depth)?.truth() {
                    Bool(false)
                } else {
                    Bool(self.expr(r, env, depth)?.truth())
                }
            }
            Expr::Or(l, r) => {
                if self.expr(l, env, depth)?.truth() {
                    Bool(true)
                } else {
                    Bool(self.expr(r, env, depth)?.truth())
                }
            }
            Expr::Binary(op, l, r) => {
                let a = self.expr(l, env, depth)?;
                let b = self.expr(r, env, depth)?;
                binary(*op, a, b)?
            }
            Expr::Call { name, args, .. } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.expr(a, env, depth)?);
                }
                if depth >= MAX_DEPTH {
                    return Err(RefError::StackOverflow);
                }
                self.call(self.functions[name.as_str()], vals, depth + 1)?
            }
        })
    }
}

fn binary(op: BinaryOp, a: RefValue, b: RefValue) -> RefResult {
    use RefValue::*;
    match op {
        BinaryOp::Eq => return Ok(Bool(a == b)),
        BinaryOp::Ne => return Ok(Bool(a != b)),
        _ => {}
    }
    if let (BinaryOp::Add, Str(x), Str(y)) = (op, &a, &b) {
        return Ok(Str(format!("{x}{y}")));
    }
    let ord = match (&a, &b) {
        (Str(x), Str(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        _ => None,
    };
    if let Some(o) = ord {
        return match op {
            BinaryOp::Lt => Ok(Bool(o.is_lt())),
            BinaryOp::Le => Ok(Bool(o.is_le())),
            BinaryOp::Gt => Ok(Bool(o.is_gt())),
            BinaryOp::Ge => Ok(Bool(o.is_ge())),
            _ => Err(RefError::TypeError),
        };
    }
    let (Int(x), Int(y)) = (a, b) else {
        return Err(RefError::TypeError);
    };
    // Two's-complement arithmetic through i128 then truncation.
    let wrap = |v: i128| v as i64;
    Ok(match op {
        BinaryOp::Add => Int(wrap(x as i128 + y as i128)),
        BinaryOp::Sub => Int(wrap(x as i128 - y as i128)),
        BinaryOp::Mul => Int(wrap(x as i128 * y as i128)),
        BinaryOp::Div | BinaryOp::Mod if y == 0 => return Err(RefError::DivideByZero),
        BinaryOp::Div => Int(wrap(x as i128 / y as i128)),
        BinaryOp::Mod => Int(wrap(x as i128 % y as i128)),
        BinaryOp::Lt => Bool(x < y),
        BinaryOp::Le => Bool(x <= y),
        BinaryOp::Gt => Bool(x > y),
        BinaryOp::Ge => Bool(x >= y),
        BinaryOp::Eq | BinaryOp::Ne => unreachable!("handled above"),
    })
}
