//! Operand-stack micro VM for verified bytecode modules.

use std::fmt;

use thiserror::Error;

use super::bytecode::{decode_instr, BytecodeModule, Constant, Opcode};

/// Frames allowed on the call stack, the entry frame included.
pub const MAX_CALL_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Integer(i64),
    String(String),
    Boolean(bool),
}

impl Value {
    /// Condition semantics used by `JZ`, `NOT`, `&&` and `||`.
    pub fn truthy(&self) -> bool {
        match self {
            Value::Integer(v) => *v != 0,
            Value::String(s) => !s.is_empty(),
            Value::Boolean(b) => *b,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Integer(_) => "integer",
            Value::String(_) => "string",
            Value::Boolean(_) => "boolean",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Integer(v) => write!(f, "{v}"),
            Value::String(s) => f.write_str(s),
            Value::Boolean(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` takes {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("fuel must be positive")]
    NoFuel,
    #[error("division by zero")]
    DivideByZero,
    #[error("type error: {0}")]
    TypeError(String),
    #[error("stack overflow: call depth exceeds {MAX_CALL_DEPTH}")]
    StackOverflow,
    #[error("fuel exhausted")]
    FuelExhausted,
    /// Only reachable with bytecode that bypassed verification.
    #[error("internal fault: {0}")]
    Fault(&'static str),
}

/// Result of a run together with the number of instructions it executed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub value: Value,
    pub steps: u64,
}

pub fn execute(m: &BytecodeModule, entry: &str, args: &[Value], fuel: u64) -> Result<Value, ExecError> {
    execute_counted(m, entry, args, fuel).map(|o| o.value)
}

struct Frame {
    func: usize,
    pc: usize,
    base: usize,
}

pub fn execute_counted(
    m: &BytecodeModule,
    entry: &str,
    args: &[Value],
    fuel: u64,
) -> Result<Outcome, ExecError> {
    let func = m
        .function_index(entry)
        .ok_or_else(|| ExecError::UnknownFunction(entry.to_string()))?;
    let f = &m.functions()[func];
    if args.len() != usize::from(f.arity) {
        return Err(ExecError::ArityMismatch {
            name: entry.to_string(),
            expected: usize::from(f.arity),
            found: args.len(),
        });
    }
    if fuel == 0 {
        return Err(ExecError::NoFuel);
    }

    let mut locals: Vec<Value> = args.to_vec();
    locals.resize(usize::from(f.local_count), Value::Integer(0));
    let mut stack: Vec<Value> = Vec::new();
    let mut frames = vec![Frame { func, pc: 0, base: 0 }];
    let mut steps: u64 = 0;

    macro_rules! pop {
        () => {
            stack.pop().ok_or(ExecError::Fault("operand stack underflow"))?
        };
    }

    loop {
        if steps == fuel {
            return Err(ExecError::FuelExhausted);
        }
        steps += 1;
        let frame = frames.last_mut().ok_or(ExecError::Fault("no frame"))?;
        let code = &m.functions()[frame.func].code;
        let pc = frame.pc;
        let instr = decode_instr(code, pc).ok_or(ExecError::Fault("pc off instruction"))?;
        frame.pc = pc + instr.op.width();
        let idx = usize::from(instr.operand);

        match instr.op {
            Opcode::ConstI => match m.constants().get(idx) {
                Some(Constant::Integer(v)) => stack.push(Value::Integer(*v)),
                _ => return Err(ExecError::Fault("bad integer constant")),
            },
            Opcode::ConstS => match m.constants().get(idx) {
                Some(Constant::String(s)) => stack.push(Value::String(s.clone())),
                _ => return Err(ExecError::Fault("bad string constant")),
            },
            Opcode::Load => {
                let v = locals
                    .get(frame.base + idx)
                    .ok_or(ExecError::Fault("bad local"))?
                    .clone();
                stack.push(v);
            }
            Opcode::Store => {
                let v = pop!();
                let base = frame.base;
                *locals.get_mut(base + idx).ok_or(ExecError::Fault("bad local"))? = v;
            }
            Opcode::Add => {
                let r = pop!();
                let l = pop!();
                stack.push(match (l, r) {
                    (Value::Integer(a), Value::Integer(b)) => Value::Integer(a.wrapping_add(b)),
                    (Value::String(a), Value::String(b)) => Value::String(a + &b),
                    (a, b) => return Err(type_error("+", &a, &b)),
                });
            }
            Opcode::Sub | Opcode::Mul | Opcode::Div | Opcode::Mod => {
                let r = pop!();
                let l = pop!();
                let (a, b) = match (&l, &r) {
                    (Value::Integer(a), Value::Integer(b)) => (*a, *b),
                    _ => return Err(type_error(arith_symbol(instr.op), &l, &r)),
                };
                let v = match instr.op {
                    Opcode::Sub => a.wrapping_sub(b),
                    Opcode::Mul => a.wrapping_mul(b),
                    Opcode::Div if b == 0 => return Err(ExecError::DivideByZero),
                    Opcode::Div => a.wrapping_div(b),
                    _ if b == 0 => return Err(ExecError::DivideByZero),
                    _ => a.wrapping_rem(b),
                };
                stack.push(Value::Integer(v));
            }
            Opcode::Neg => match pop!() {
                Value::Integer(v) => stack.push(Value::Integer(v.wrapping_neg())),
                other => {
                    return Err(ExecError::TypeError(format!(
                        "unary - on {}",
                        other.kind()
                    )))
                }
            },
            Opcode::Eq | Opcode::Ne => {
                let r = pop!();
                let l = pop!();
                let eq = l == r;
                stack.push(Value::Boolean(if instr.op == Opcode::Eq { eq } else { !eq }));
            }
            Opcode::Lt | Opcode::Le | Opcode::Gt | Opcode::Ge => {
                let r = pop!();
                let l = pop!();
                let ord = match (&l, &r) {
                    (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
                    (Value::String(a), Value::String(b)) => a.cmp(b),
                    _ => return Err(type_error(arith_symbol(instr.op), &l, &r)),
                };
                let v = match instr.op {
                    Opcode::Lt => ord.is_lt(),
                    Opcode::Le => ord.is_le(),
                    Opcode::Gt => ord.is_gt(),
                    _ => ord.is_ge(),
                };
                stack.push(Value::Boolean(v));
            }
            Opcode::Not => {
                let v = pop!();
                stack.push(Value::Boolean(!v.truthy()));
            }
            Opcode::Jmp => frame.pc = instr.jump_target(pc) as usize,
            Opcode::Jz => {
                if !pop!().truthy() {
                    frame.pc = instr.jump_target(pc) as usize;
                }
            }
            Opcode::Call => {
                let callee = m.functions().get(idx).ok_or(ExecError::Fault("bad function"))?;
                if frames.len() >= MAX_CALL_DEPTH {
                    return Err(ExecError::StackOverflow);
                }
                let arity = usize::from(callee.arity);
                if stack.len() < arity {
                    return Err(ExecError::Fault("operand stack underflow"));
                }
                let base = locals.len();
                locals.extend(stack.drain(stack.len() - arity..));
                locals.resize(base + usize::from(callee.local_count), Value::Integer(0));
                frames.push(Frame {
                    func: idx,
                    pc: 0,
                    base,
                });
            }
            Opcode::Ret => {
                let v = pop!();
                let done = frames.pop().ok_or(ExecError::Fault("no frame"))?;
                locals.truncate(done.base);
                if frames.is_empty() {
                    return Ok(Outcome { value: v, steps });
                }
                stack.push(v);
            }
            Opcode::Pop => {
                pop!();
            }
        }
    }
}

fn arith_symbol(op: Opcode) -> &'static str {
    match op {
        Opcode::Sub => "-",
        Opcode::Mul => "*",
        Opcode::Div => "/",
        Opcode::Mod => "%",
        Opcode::Lt => "<",
        Opcode::Le => "<=",
        Opcode::Gt => ">",
        Opcode::Ge => ">=",
        _ => "?",
    }
}

fn type_error(op: &str, l: &Value, r: &Value) -> ExecError {
    ExecError::TypeError(format!("{} {op} {}", l.kind(), r.kind()))
}
