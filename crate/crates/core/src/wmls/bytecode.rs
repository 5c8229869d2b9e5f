//! Bytecode module, the `.wbc` wire format and the load-time verifier.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "WBC1" | version u8 = 1 | flags u16 = 0
//! const_count u16 | const*   (tag 0: i64, tag 1: u16 len + UTF-8)
//! func_count u16  | func*    (u16 len + UTF-8 name, arity u8,
//!                             local_count u8, code_len u16, code)
//! ```
//!
//! Every opcode is one byte. `CONST_I`, `CONST_S`, `LOAD`, `STORE` and
//! `CALL` take a u16 index; `JMP` and `JZ` take a u16 holding a signed
//! offset relative to the following instruction.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"WBC1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Opcode {
    ConstI = 0x01,
    ConstS = 0x02,
    Load = 0x03,
    Store = 0x04,
    Add = 0x10,
    Sub = 0x11,
    Mul = 0x12,
    Div = 0x13,
    Mod = 0x14,
    Neg = 0x15,
    Eq = 0x20,
    Ne = 0x21,
    Lt = 0x22,
    Le = 0x23,
    Gt = 0x24,
    Ge = 0x25,
    Not = 0x26,
    Jmp = 0x30,
    Jz = 0x31,
    Call = 0x40,
    Ret = 0x41,
    Pop = 0x42,
}

impl Opcode {
    pub fn from_byte(b: u8) -> Option<Self> {
        use Opcode::*;
        Some(match b {
            0x01 => ConstI,
            0x02 => ConstS,
            0x03 => Load,
            0x04 => Store,
            0x10 => Add,
            0x11 => Sub,
            0x12 => Mul,
            0x13 => Div,
            0x14 => Mod,
            0x15 => Neg,
            0x20 => Eq,
            0x21 => Ne,
            0x22 => Lt,
            0x23 => Le,
            0x24 => Gt,
            0x25 => Ge,
            0x26 => Not,
            0x30 => Jmp,
            0x31 => Jz,
            0x40 => Call,
            0x41 => Ret,
            0x42 => Pop,
            _ => return None,
        })
    }

    pub fn has_operand(self) -> bool {
        use Opcode::*;
        matches!(self, ConstI | ConstS | Load | Store | Jmp | Jz | Call)
    }

    pub fn width(self) -> usize {
        if self.has_operand() {
            3
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instr {
    pub op: Opcode,
    pub operand: u16,
}

impl Instr {
    /// Absolute target of a jump located at `pc`.
    pub fn jump_target(&self, pc: usize) -> isize {
        (pc + 3) as isize + isize::from(self.operand as i16)
    }
}

/// Decodes the instruction at `pc`, or `None` if it is unknown or truncated.
pub fn decode_instr(code: &[u8], pc: usize) -> Option<Instr> {
    let op = Opcode::from_byte(*code.get(pc)?)?;
    let operand = if op.has_operand() {
        let lo = *code.get(pc + 1)?;
        let hi = *code.get(pc + 2)?;
        u16::from_le_bytes([lo, hi])
    } else {
        0
    };
    Some(Instr { op, operand })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constant {
    Integer(i64),
    String(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionCode {
    pub name: String,
    pub arity: u8,
    pub local_count: u8,
    pub code: Vec<u8>,
}

/// A verified bytecode module. Construction always runs the verifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BytecodeModule {
    constants: Vec<Constant>,
    functions: Vec<FunctionCode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unsupported module flags {0:#06x}")]
    UnsupportedFlags(u16),
    #[error("truncated at byte {0}")]
    Truncated(usize),
    #[error("unknown constant tag {tag} at byte {offset}")]
    BadConstantTag { tag: u8, offset: usize },
    #[error("invalid UTF-8 at byte {0}")]
    InvalidUtf8(usize),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("function `{function}` at offset {offset}: {message}")]
pub struct VerifyError {
    pub function: String,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("format error: {0}")]
    Format(#[from] FormatError),
    #[error("verify error: {0}")]
    Verify(#[from] VerifyError),
}

impl BytecodeModule {
    pub fn new(constants: Vec<Constant>, functions: Vec<FunctionCode>) -> Result<Self, VerifyError> {
        let m = Self {
            constants,
            functions,
        };
        m.verify()?;
        Ok(m)
    }

    pub fn constants(&self) -> &[Constant] {
        &self.constants
    }

    pub fn functions(&self) -> &[FunctionCode] {
        &self.functions
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    fn verify(&self) -> Result<(), VerifyError> {
        let limit = |what: &str| VerifyError {
            function: String::new(),
            offset: 0,
            message: format!("{what} exceeds the u16 range of the file format"),
        };
        let max = usize::from(u16::MAX);
        if self.constants.len() > max {
            return Err(limit("constant count"));
        }
        if self.functions.len() > max {
            return Err(limit("function count"));
        }
        if self
            .constants
            .iter()
            .any(|c| matches!(c, Constant::String(s) if s.len() > max))
        {
            return Err(limit("string constant length"));
        }
        if self.functions.iter().any(|f| f.name.len() > max) {
            return Err(limit("function name length"));
        }
        let mut names = HashSet::new();
        for f in &self.functions {
            if !names.insert(f.name.as_str()) {
                return Err(VerifyError {
                    function: f.name.clone(),
                    offset: 0,
                    message: "duplicate function name".into(),
                });
            }
        }
        for f in &self.functions {
            self.verify_function(f)?;
        }
        Ok(())
    }

    /// Checks operand ranges and jump targets, then walks every reachable
    /// path tracking operand-stack height: no underflow, equal heights where
    /// paths merge, and no path running off the end of the code.
    fn verify_function(&self, f: &FunctionCode) -> Result<(), VerifyError> {
        let fail = |offset: usize, message: String| VerifyError {
            function: f.name.clone(),
            offset,
            message,
        };
        if f.arity > f.local_count {
            return Err(fail(0, format!("arity {} exceeds local count {}", f.arity, f.local_count)));
        }
        if f.code.len() > usize::from(u16::MAX) {
            return Err(fail(0, "code longer than 65535 bytes".into()));
        }

        let mut instrs = Vec::new();
        let mut boundaries = BTreeSet::new();
        let mut pc = 0;
        while pc < f.code.len() {
            let instr = decode_instr(&f.code, pc).ok_or_else(|| {
                fail(pc, format!("bad or truncated instruction {:#04x}", f.code[pc]))
            })?;
            boundaries.insert(pc);
            instrs.push((pc, instr));
            pc += instr.op.width();
        }

        let mut effects = std::collections::HashMap::new();
        for &(pc, instr) in &instrs {
            let idx = usize::from(instr.operand);
            let (pops, pushes) = match instr.op {
                Opcode::ConstI | Opcode::ConstS => {
                    let ok = matches!(
                        (instr.op, self.constants.get(idx)),
                        (Opcode::ConstI, Some(Constant::Integer(_))) | (Opcode::ConstS, Some(Constant::String(_)))
                    );
                    if !ok {
                        return Err(fail(pc, format!("constant index {idx} out of range or wrong kind")));
                    }
                    (0, 1)
                }
                Opcode::Load | Opcode::Store => {
                    if idx >= usize::from(f.local_count) {
                        return Err(fail(pc, format!("local slot {idx} out of range")));
                    }
                    if instr.op == Opcode::Load {
                        (0, 1)
                    } else {
                        (1, 0)
                    }
                }
                Opcode::Add
                | Opcode::Sub
                | Opcode::Mul
                | Opcode::Div
                | Opcode::Mod
                | Opcode::Eq
                | Opcode::Ne
                | Opcode::Lt
                | Opcode::Le
                | Opcode::Gt
                | Opcode::Ge => (2, 1),
                Opcode::Neg | Opcode::Not => (1, 1),
                Opcode::Jmp | Opcode::Jz => {
                    let target = instr.jump_target(pc);
                    if target < 0 || !boundaries.contains(&(target as usize)) {
                        return Err(fail(pc, format!("jump target {target} is not an instruction boundary")));
                    }
                    (usize::from(instr.op == Opcode::Jz), 0)
                }
                Opcode::Call => {
                    let callee = self
                        .functions
                        .get(idx)
                        .ok_or_else(|| fail(pc, format!("function index {idx} out of range")))?;
                    (usize::from(callee.arity), 1)
                }
                Opcode::Ret => (1, 0),
                Opcode::Pop => (1, 0),
            };
            effects.insert(pc, (pops, pushes));
        }

        if instrs.is_empty() {
            return Err(fail(0, "empty function body".into()));
        }
        let mut heights: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut work = vec![(0usize, 0usize)];
        while let Some((pc, height)) = work.pop() {
            if pc >= f.code.len() {
                return Err(fail(pc, "control reaches end of code".into()));
            }
            match heights.get(&pc) {
                Some(&h) if h == height => continue,
                Some(&h) => {
                    return Err(fail(pc, format!("stack height mismatch ({h} vs {height})")))
                }
                None => {
                    heights.insert(pc, height);
                }
            }
            let instr = decode_instr(&f.code, pc).expect("decoded above");
            let (pops, pushes) = effects[&pc];
            if height < pops {
                return Err(fail(pc, format!("stack underflow ({height} < {pops})")));
            }
            let after = height - pops + pushes;
            let next = pc + instr.op.width();
            match instr.op {
                Opcode::Ret => {}
                Opcode::Jmp => work.push((instr.jump_target(pc) as usize, after)),
                Opcode::Jz => {
                    work.push((instr.jump_target(pc) as usize, after));
                    work.push((next, after));
                }
                _ => work.push((next, after)),
            }
        }
        Ok(())
    }
}

pub fn encode_module(m: &BytecodeModule) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(m.constants.len() as u16).to_le_bytes());
    for c in &m.constants {
        match c {
            Constant::Integer(v) => {
                out.push(0);
                out.extend_from_slice(&v.to_le_bytes());
            }
            Constant::String(s) => {
                out.push(1);
                out.extend_from_slice(&(s.len() as u16).to_le_bytes());
                out.extend_from_slice(s.as_bytes());
            }
        }
    }
    out.extend_from_slice(&(m.functions.len() as u16).to_le_bytes());
    for f in &m.functions {
        out.extend_from_slice(&(f.name.len() as u16).to_le_bytes());
        out.extend_from_slice(f.name.as_bytes());
        out.push(f.arity);
        out.push(f.local_count);
        out.extend_from_slice(&(f.code.len() as u16).to_le_bytes());
        out.extend_from_slice(&f.code);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(FormatError::Truncated(self.bytes.len()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn string(&mut self) -> Result<String, FormatError> {
        let len = usize::from(self.u16()?);
        let at = self.pos;
        let b = self.take(len)?;
        String::from_utf8(b.to_vec()).map_err(|_| FormatError::InvalidUtf8(at))
    }
}

pub fn decode_module(bytes: &[u8]) -> Result<BytecodeModule, DecodeError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| FormatError::BadMagic)? != MAGIC {
        return Err(FormatError::BadMagic.into());
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let flags = r.u16()?;
    if flags != 0 {
        return Err(FormatError::UnsupportedFlags(flags).into());
    }
    let const_count = r.u16()?;
    let mut constants = Vec::with_capacity(usize::from(const_count));
    for _ in 0..const_count {
        let at = r.pos;
        match r.u8()? {
            0 => {
                let b = r.take(8)?;
                constants.push(Constant::Integer(i64::from_le_bytes(b.try_into().expect("8 bytes"))));
            }
            1 => constants.push(Constant::String(r.string()?)),
            tag => return Err(FormatError::BadConstantTag { tag, offset: at }.into()),
        }
    }
    let func_count = r.u16()?;
    let mut functions = Vec::with_capacity(usize::from(func_count));
    for _ in 0..func_count {
        let name = r.string()?;
        let arity = r.u8()?;
        let local_count = r.u8()?;
        let code_len = usize::from(r.u16()?);
        let code = r.take(code_len)?.to_vec();
        functions.push(FunctionCode {
            name,
            arity,
            local_count,
            code,
        });
    }
    if r.pos != bytes.len() {
        return Err(FormatError::TrailingBytes(bytes.len() - r.pos).into());
    }
    Ok(BytecodeModule::new(constants, functions)?)
}
