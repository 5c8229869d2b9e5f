//! Code generation from the syntax tree to a verified module.

use std::collections::HashMap;

use super::ast::{BinaryOp, Expr, Function, Program, Span, Stmt, UnaryOp};
use super::bytecode::{BytecodeModule, Constant, FunctionCode, Opcode};
use super::parser::parse_program;
use super::{CompileError, ScriptSource};

pub fn compile(src: &ScriptSource) -> Result<BytecodeModule, CompileError> {
    compile_program(&parse_program(src.text())?)
}

pub fn compile_program(program: &Program) -> Result<BytecodeModule, CompileError> {
    let mut signatures: HashMap<&str, (usize, usize)> = HashMap::new();
    for (idx, f) in program.functions.iter().enumerate() {
        if signatures.insert(&f.name, (idx, f.params.len())).is_some() {
            return Err(CompileError::Duplicate {
                name: f.name.clone(),
                line: f.span.line,
                column: f.span.column,
            });
        }
    }

    let mut pool = ConstantPool::default();
    let mut functions = Vec::with_capacity(program.functions.len());
    for f in &program.functions {
        functions.push(FunctionGen::new(&signatures, &mut pool).function(f)?);
    }
    BytecodeModule::new(pool.constants, functions).map_err(|e| CompileError::Limit(e.to_string()))
}

#[derive(Default)]
struct ConstantPool {
    constants: Vec<Constant>,
    index: HashMap<Constant, u16>,
}

impl ConstantPool {
    fn intern(&mut self, c: Constant) -> Result<u16, CompileError> {
        if let Some(&i) = self.index.get(&c) {
            return Ok(i);
        }
        let i = u16::try_from(self.constants.len())
            .map_err(|_| CompileError::Limit("more than 65535 constants".into()))?;
        self.constants.push(c.clone());
        self.index.insert(c, i);
        Ok(i)
    }
}

struct FunctionGen<'a> {
    signatures: &'a HashMap<&'a str, (usize, usize)>,
    pool: &'a mut ConstantPool,
    locals: HashMap<String, u16>,
    code: Vec<u8>,
}

impl<'a> FunctionGen<'a> {
    fn new(signatures: &'a HashMap<&'a str, (usize, usize)>, pool: &'a mut ConstantPool) -> Self {
        Self {
            signatures,
            pool,
            locals: HashMap::new(),
            code: Vec::new(),
        }
    }

    fn function(mut self, f: &Function) -> Result<FunctionCode, CompileError> {
        for (name, span) in &f.params {
            self.declare(name, *span)?;
        }
        for stmt in &f.body {
            self.stmt(stmt)?;
        }
        // Falling off the end returns integer 0.
        self.int(0)?;
        self.emit(Opcode::Ret);

        let too_many = || CompileError::Limit(format!("function `{}` has more than 255 locals", f.name));
        let arity = u8::try_from(f.params.len()).map_err(|_| too_many())?;
        let local_count = u8::try_from(self.locals.len()).map_err(|_| too_many())?;
        if self.code.len() > usize::from(u16::MAX) {
            return Err(CompileError::Limit(format!("function `{}` is too long", f.name)));
        }
        Ok(FunctionCode {
            name: f.name.clone(),
            arity,
            local_count,
            code: self.code,
        })
    }

    fn declare(&mut self, name: &str, span: Span) -> Result<u16, CompileError> {
        if self.locals.contains_key(name) {
            return Err(CompileError::Duplicate {
                name: name.to_string(),
                line: span.line,
                column: span.column,
            });
        }
        let slot = self.locals.len() as u16;
        self.locals.insert(name.to_string(), slot);
        Ok(slot)
    }

    fn slot(&self, name: &str, span: Span) -> Result<u16, CompileError> {
        self.locals.get(name).copied().ok_or_else(|| CompileError::Name {
            name: name.to_string(),
            line: span.line,
            column: span.column,
        })
    }

    fn emit(&mut self, op: Opcode) {
        self.code.push(op as u8);
    }

    fn emit_with(&mut self, op: Opcode, operand: u16) {
        self.code.push(op as u8);
        self.code.extend_from_slice(&operand.to_le_bytes());
    }

    /// Emits a jump with a placeholder offset, returning its position.
    fn emit_jump(&mut self, op: Opcode) -> usize {
        let at = self.code.len();
        self.emit_with(op, 0);
        at
    }

    fn patch_to(&mut self, jump_at: usize, target: usize) -> Result<(), CompileError> {
        let rel = target as isize - (jump_at + 3) as isize;
        let rel = i16::try_from(rel)
            .map_err(|_| CompileError::Limit("jump distance exceeds 16 bits".into()))?;
        self.code[jump_at + 1..jump_at + 3].copy_from_slice(&(rel as u16).to_le_bytes());
        Ok(())
    }

    fn patch_here(&mut self, jump_at: usize) -> Result<(), CompileError> {
        self.patch_to(jump_at, self.code.len())
    }

    fn int(&mut self, v: i64) -> Result<(), CompileError> {
        let idx = self.pool.intern(Constant::Integer(v))?;
        self.emit_with(Opcode::ConstI, idx);
        Ok(())
    }

    /// There is no boolean constant kind: `true` is `!0`, `false` is `!1`.
    fn boolean(&mut self, b: bool) -> Result<(), CompileError> {
        self.int(if b { 0 } else { 1 })?;
        self.emit(Opcode::Not);
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), CompileError> {
        match stmt {
            Stmt::Var { name, init, span } => {
                match init {
                    Some(e) => self.expr(e)?,
                    None => self.int(0)?,
                }
                let slot = self.declare(name, *span)?;
                self.emit_with(Opcode::Store, slot);
            }
            Stmt::Assign { name, value, span } => {
                let slot = self.slot(name, *span)?;
                self.expr(value)?;
                self.emit_with(Opcode::Store, slot);
            }
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                self.expr(cond)?;
                let to_else = self.emit_jump(Opcode::Jz);
                self.stmt(then)?;
                match otherwise {
                    Some(other) => {
                        let to_end = self.emit_jump(Opcode::Jmp);
                        self.patch_here(to_else)?;
                        self.stmt(other)?;
                        self.patch_here(to_end)?;
                    }
                    None => self.patch_here(to_else)?,
                }
            }
            Stmt::While { cond, body } => {
                let top = self.code.len();
                self.expr(cond)?;
                let to_end = self.emit_jump(Opcode::Jz);
                self.stmt(body)?;
                let back = self.emit_jump(Opcode::Jmp);
                self.patch_to(back, top)?;
                self.patch_here(to_end)?;
            }
            Stmt::Return(value) => {
                match value {
                    Some(e) => self.expr(e)?,
                    None => self.int(0)?,
                }
                self.emit(Opcode::Ret);
            }
            Stmt::Expr(e) => {
                self.expr(e)?;
                self.emit(Opcode::Pop);
            }
            Stmt::Block(stmts) => {
                for s in stmts {
                    self.stmt(s)?;
                }
            }
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> Result<(), CompileError> {
        match e {
            Expr::Int(v) => self.int(*v)?,
            Expr::Str(s) => {
                let idx = self.pool.intern(Constant::String(s.clone()))?;
                self.emit_with(Opcode::ConstS, idx);
            }
            Expr::Bool(b) => self.boolean(*b)?,
            Expr::Var { name, span } => {
                let slot = self.slot(name, *span)?;
                self.emit_with(Opcode::Load, slot);
            }
            Expr::Unary(op, inner) => {
                self.expr(inner)?;
                self.emit(match op {
                    UnaryOp::Neg => Opcode::Neg,
                    UnaryOp::Not => Opcode::Not,
                });
            }
            Expr::Binary(op, l, r) => {
                self.expr(l)?;
                self.expr(r)?;
                self.emit(match op {
                    BinaryOp::Add => Opcode::Add,
                    BinaryOp::Sub => Opcode::Sub,
                    BinaryOp::Mul => Opcode::Mul,
                    BinaryOp::Div => Opcode::Div,
                    BinaryOp::Mod => Opcode::Mod,
                    BinaryOp::Eq => Opcode::Eq,
                    BinaryOp::Ne => Opcode::Ne,
                    BinaryOp::Lt => Opcode::Lt,
                    BinaryOp::Le => Opcode::Le,
                    BinaryOp::Gt => Opcode::Gt,
                    BinaryOp::Ge => Opcode::Ge,
                });
            }
            // Both short-circuit forms yield a boolean.
            Expr::And(l, r) => {
                self.expr(l)?;
                let to_false = self.emit_jump(Opcode::Jz);
                self.expr(r)?;
                self.emit(Opcode::Not);
                self.emit(Opcode::Not);
                let to_end = self.emit_jump(Opcode::Jmp);
                self.patch_here(to_false)?;
                self.boolean(false)?;
                self.patch_here(to_end)?;
            }
            Expr::Or(l, r) => {
                self.expr(l)?;
                let to_rhs = self.emit_jump(Opcode::Jz);
                self.boolean(true)?;
                let to_end = self.emit_jump(Opcode::Jmp);
                self.patch_here(to_rhs)?;
                self.expr(r)?;
                self.emit(Opcode::Not);
                self.emit(Opcode::Not);
                self.patch_here(to_end)?;
            }
            Expr::Call { name, args, span } => {
                let &(idx, arity) =
                    self.signatures
                        .get(name.as_str())
                        .ok_or_else(|| CompileError::Name {
                            name: name.clone(),
                            line: span.line,
                            column: span.column,
                        })?;
                if args.len() != arity {
                    return Err(CompileError::Arity {
                        name: name.clone(),
                        expected: arity,
                        found: args.len(),
                        line: span.line,
                        column: span.column,
                    });
                }
                for a in args {
                    self.expr(a)?;
                }
                self.emit_with(Opcode::Call, idx as u16);
            }
        }
        Ok(())
    }
}
