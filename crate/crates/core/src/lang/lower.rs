//! Lowering of a program, for a fixed thread count and thread id, to a flat
//! instruction list over registers and local slots.
//!
//! Expressions are evaluated left to right with short-circuit `&&`/`||`.
//! Each register occurrence becomes one read instruction per evaluation.

use std::collections::HashMap;

use crate::action::{RegId, MAX_DOMAIN};
use crate::error::ParseError;
use crate::registers::Init;

use super::ast::*;

/// Pure expression over local slots.
#[derive(Clone, Debug, PartialEq)]
pub enum LExpr {
    Const(i64),
    Local(u32),
    LocalIdx { base: u32, len: u32, idx: Box<LExpr> },
    Un(UnOp, Box<LExpr>),
    Bin(BinOp, Box<LExpr>, Box<LExpr>),
}

/// A register, possibly an element selected at run time.
#[derive(Clone, Debug, PartialEq)]
pub struct RegRef {
    pub base: RegId,
    pub len: u16,
    pub idx: Option<LExpr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instr {
    NonCrit,
    Crit,
    Read { reg: RegRef, dst: u32 },
    Write { reg: RegRef, val: LExpr },
    Assign { base: u32, len: u32, idx: Option<LExpr>, val: LExpr },
    /// Jump to `target` if `cond` is non-zero.
    Branch { cond: LExpr, target: u32 },
    Jump(u32),
}

impl Instr {
    pub fn is_visible(&self) -> bool {
        matches!(self, Instr::NonCrit | Instr::Crit | Instr::Read { .. } | Instr::Write { .. })
    }
}

/// One register after instantiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterInfo {
    pub name: String,
    pub domain: u8,
    pub init: Init,
}

#[derive(Clone, Debug)]
struct ArrayInfo {
    base: RegId,
    len: Option<usize>,
}

/// Registers of a program instantiated for `n` threads.
#[derive(Clone, Debug)]
pub struct Layout {
    pub n: usize,
    pub registers: Vec<RegisterInfo>,
    arrays: HashMap<String, ArrayInfo>,
}

impl Layout {
    pub fn register_names(&self) -> Vec<String> {
        self.registers.iter().map(|r| r.name.clone()).collect()
    }

    /// Id of `name` or `name[k]`.
    pub fn lookup(&self, name: &str, index: Option<usize>) -> Option<RegId> {
        let a = self.arrays.get(name)?;
        match (a.len, index) {
            (None, None) => Some(a.base),
            (Some(l), Some(k)) if k < l => Some(a.base + k as RegId),
            _ => None,
        }
    }
}

fn err(pos: Pos, code: &'static str, message: impl Into<String>) -> ParseError {
    ParseError { line: pos.line, col: pos.col, code, message: message.into() }
}

/// Evaluates a compile-time constant expression.
pub fn const_eval(e: &Expr, env: &HashMap<String, i64>) -> Result<i64, ParseError> {
    let pos = e.pos().unwrap_or_default();
    Ok(match e {
        Expr::Int(v) => *v,
        Expr::Bool(b) => *b as i64,
        Expr::Var(n, p) => *env.get(n).ok_or_else(|| err(*p, "not-constant", format!("`{n}` is not a constant here")))?,
        Expr::Un(op, a) => un(*op, const_eval(a, env)?),
        Expr::Bin(op, a, b) => bin(*op, const_eval(a, env)?, const_eval(b, env)?).ok_or_else(|| err(pos, "arith", "division by zero"))?,
        _ => return Err(err(pos, "not-constant", "expected a constant expression")),
    })
}

pub fn un(op: UnOp, v: i64) -> i64 {
    match op {
        UnOp::Not => (v == 0) as i64,
        UnOp::Neg => -v,
    }
}

pub fn bin(op: BinOp, a: i64, b: i64) -> Option<i64> {
    Some(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a.checked_div(b)?,
        BinOp::Mod => a.checked_rem_euclid(b)?,
        BinOp::Eq => (a == b) as i64,
        BinOp::Ne => (a != b) as i64,
        BinOp::Lt => (a < b) as i64,
        BinOp::Le => (a <= b) as i64,
        BinOp::Gt => (a > b) as i64,
        BinOp::Ge => (a >= b) as i64,
        BinOp::And => (a != 0 && b != 0) as i64,
        BinOp::Or => (a != 0 || b != 0) as i64,
    })
}

pub fn instantiate_layout(p: &Program, n: usize) -> Result<Layout, ParseError> {
    let mut env = HashMap::from([("N".to_string(), n as i64)]);
    let mut registers = Vec::new();
    let mut arrays = HashMap::new();
    for d in &p.registers {
        if arrays.contains_key(&d.name) || p.locals.iter().any(|l| l.name == d.name) || reserved(&d.name) {
            return Err(err(d.pos, "duplicate", format!("`{}` declared twice or reserved", d.name)));
        }
        let domain = match &d.ty {
            Ty::Bool => 2,
            Ty::Thread => n as i64,
            Ty::Range(hi) => const_eval(hi, &env)? + 1,
        };
        if domain < 1 || domain as usize > MAX_DOMAIN {
            return Err(err(d.pos, "domain", format!("domain of `{}` has {domain} values, supported 1..={MAX_DOMAIN}", d.name)));
        }
        let len = match &d.size {
            Some(e) => {
                let l = const_eval(e, &env)?;
                if l < 1 {
                    return Err(err(d.pos, "size", "array size must be positive"));
                }
                Some(l as usize)
            }
            None => None,
        };
        let base = registers.len() as RegId;
        for k in 0..len.unwrap_or(1) {
            env.insert("index".into(), k as i64);
            let init = match &d.init {
                InitSpec::Any => Init::Any,
                InitSpec::Value(e) => {
                    let v = const_eval(e, &env)?;
                    if v < 0 || v >= domain {
                        return Err(err(d.pos, "domain", format!("initial value {v} of `{}` outside domain 0..{}", d.name, domain - 1)));
                    }
                    Init::Value(v as u8)
                }
            };
            let name = match len {
                Some(_) => format!("{}[{k}]", d.name),
                None => d.name.clone(),
            };
            registers.push(RegisterInfo { name, domain: domain as u8, init });
        }
        env.remove("index");
        arrays.insert(d.name.clone(), ArrayInfo { base, len });
    }
    if registers.len() > RegId::MAX as usize {
        return Err(err(Pos::default(), "size", "too many registers"));
    }
    Ok(Layout { n, registers, arrays })
}

fn reserved(name: &str) -> bool {
    matches!(name, "N" | "i" | "index")
}

/// Lowered thread code.
#[derive(Clone, Debug)]
pub struct Ir {
    pub instrs: Vec<Instr>,
    /// Source line per instruction.
    pub lines: Vec<usize>,
    pub slot_names: Vec<String>,
    pub slot_init: Vec<i64>,
}

#[derive(Clone, Debug)]
enum Binding {
    Const(i64),
    Local { base: u32, len: Option<u32> },
}

struct LabelScope {
    named: HashMap<String, (u32, Option<Pos>, Pos)>,
}

struct Frame {
    ret_label: u32,
    ret_slot: u32,
}

struct Lower<'a> {
    prog: &'a Program,
    layout: &'a Layout,
    me: i64,
    instrs: Vec<Instr>,
    lines: Vec<usize>,
    slot_names: Vec<String>,
    slot_init: Vec<i64>,
    scopes: Vec<HashMap<String, Binding>>,
    labels: Vec<LabelScope>,
    label_pos: Vec<Option<u32>>,
    frames: Vec<Frame>,
    call_stack: Vec<String>,
    crit_count: usize,
    line: usize,
}

type R<T> = Result<T, ParseError>;

/// Lowers the body of `p` for thread `me` of `layout.n`.
pub fn lower(p: &Program, layout: &Layout, me: usize) -> Result<Ir, ParseError> {
    let mut l = Lower {
        prog: p,
        layout,
        me: me as i64,
        instrs: Vec::new(),
        lines: Vec::new(),
        slot_names: Vec::new(),
        slot_init: Vec::new(),
        scopes: vec![HashMap::new()],
        labels: Vec::new(),
        label_pos: Vec::new(),
        frames: Vec::new(),
        call_stack: Vec::new(),
        crit_count: 0,
        line: 0,
    };
    let env = HashMap::from([("N".to_string(), layout.n as i64), ("i".to_string(), me as i64)]);
    for d in &p.locals {
        if l.scopes[0].contains_key(&d.name) || reserved(&d.name) {
            return Err(err(d.pos, "duplicate", format!("local `{}` declared twice or reserved", d.name)));
        }
        let len = d.size.as_ref().map(|e| const_eval(e, &env)).transpose()?;
        let init = const_eval(&d.init, &env)?;
        let base = l.slot_names.len() as u32;
        for k in 0..len.unwrap_or(1) {
            l.slot_names.push(match len {
                Some(_) => format!("{}[{k}]", d.name),
                None => d.name.clone(),
            });
            l.slot_init.push(init);
        }
        l.scopes[0].insert(d.name.clone(), Binding::Local { base, len: len.map(|x| x as u32) });
    }
    l.emit(Instr::NonCrit);
    l.labels.push(LabelScope { named: HashMap::new() });
    l.stmts(&p.body)?;
    l.close_labels()?;
    if l.crit_count != 1 || !p.body.iter().any(|s| s.kind == StmtKind::Critical) {
        let pos = p.body.first().map(|s| s.pos).unwrap_or_default();
        let msg = if l.crit_count == 0 { "no critical section" } else { "exactly one top-level `critical` statement is required" };
        return Err(err(pos, "no-critical", msg));
    }
    for ins in &mut l.instrs {
        match ins {
            Instr::Branch { target, .. } | Instr::Jump(target) => {
                *target = l.label_pos[*target as usize].expect("label placed");
            }
            _ => {}
        }
    }
    l.line = 0;
    l.emit(Instr::Jump(0));
    Ok(Ir { instrs: l.instrs, lines: l.lines, slot_names: l.slot_names, slot_init: l.slot_init })
}

impl<'a> Lower<'a> {
    fn emit(&mut self, i: Instr) {
        self.instrs.push(i);
        self.lines.push(self.line);
    }

    fn new_label(&mut self) -> u32 {
        self.label_pos.push(None);
        (self.label_pos.len() - 1) as u32
    }

    fn place(&mut self, l: u32) {
        self.label_pos[l as usize] = Some(self.instrs.len() as u32);
    }

    fn here(&self) -> Pos {
        Pos { line: self.line, col: 1 }
    }

    fn named_label(&mut self, name: &str, pos: Pos, define: bool) -> R<u32> {
        let fresh = self.label_pos.len() as u32;
        let scope = self.labels.last_mut().expect("label scope");
        let e = scope.named.entry(name.to_string()).or_insert((fresh, None, pos));
        if define {
            if e.1.is_some() {
                return Err(err(pos, "duplicate", format!("label `{name}` defined twice")));
            }
            e.1 = Some(pos);
        }
        let id = e.0;
        if id == fresh {
            self.label_pos.push(None);
        }
        Ok(id)
    }

    fn close_labels(&mut self) -> R<()> {
        let scope = self.labels.pop().expect("label scope");
        let mut missing: Vec<_> = scope.named.iter().filter(|(_, v)| v.1.is_none()).collect();
        missing.sort_by_key(|(_, v)| (v.2.line, v.2.col));
        if let Some((name, v)) = missing.first() {
            return Err(err(v.2, "undefined-label", format!("goto target `{name}` does not exist")));
        }
        Ok(())
    }

    fn fresh(&mut self, hint: &str) -> u32 {
        self.slot_names.push(format!("${hint}{}", self.slot_names.len()));
        self.slot_init.push(0);
        (self.slot_names.len() - 1) as u32
    }

    fn lookup(&self, name: &str) -> Option<Binding> {
        for s in self.scopes.iter().rev() {
            if let Some(b) = s.get(name) {
                return Some(b.clone());
            }
        }
        match name {
            "N" => Some(Binding::Const(self.layout.n as i64)),
            "i" => Some(Binding::Const(self.me)),
            _ => None,
        }
    }

    fn stmts(&mut self, v: &[Stmt]) -> R<()> {
        for s in v {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> R<()> {
        self.line = s.pos.line;
        match &s.kind {
            StmtKind::Assign { target, value, conditional } => self.assign(target, value, *conditional),
            StmtKind::Await(e) => {
                if let Expr::Quant { all: true, var, filter, body, pos } = e {
                    for j in self.quant_range(filter.as_ref(), var, *pos)? {
                        self.scopes.push(HashMap::from([(var.clone(), Binding::Const(j))]));
                        self.await_loop(body)?;
                        self.scopes.pop();
                    }
                    Ok(())
                } else {
                    self.await_loop(e)
                }
            }
            StmtKind::If { arms, otherwise } => {
                let end = self.new_label();
                for (c, body) in arms {
                    self.line = s.pos.line;
                    let v = self.expr(c)?;
                    if let LExpr::Const(k) = v {
                        if k != 0 {
                            self.stmts(body)?;
                            self.place(end);
                            return Ok(());
                        }
                        continue;
                    }
                    let next = self.new_label();
                    self.emit(Instr::Branch { cond: not(v), target: next });
                    self.stmts(body)?;
                    self.emit(Instr::Jump(end));
                    self.place(next);
                }
                self.stmts(otherwise)?;
                self.place(end);
                Ok(())
            }
            StmtKind::While(c, body) => {
                let top = self.new_label();
                let end = self.new_label();
                self.place(top);
                self.line = s.pos.line;
                let v = self.expr(c)?;
                self.emit(Instr::Branch { cond: not(v), target: end });
                self.stmts(body)?;
                self.emit(Instr::Jump(top));
                self.place(end);
                Ok(())
            }
            StmtKind::Repeat(body, c) => {
                let top = self.new_label();
                self.place(top);
                self.stmts(body)?;
                self.line = s.pos.line;
                let v = self.expr(c)?;
                self.emit(Instr::Branch { cond: not(v), target: top });
                Ok(())
            }
            StmtKind::For { var, from, to, dir, body } => {
                let j = self.fresh(var);
                let hi = self.fresh("hi");
                let f = self.expr(from)?;
                self.emit(Instr::Assign { base: j, len: 1, idx: None, val: f });
                let t = self.expr(to)?;
                self.emit(Instr::Assign { base: hi, len: 1, idx: None, val: t });
                let top = self.new_label();
                let end = self.new_label();
                self.place(top);
                let (jv, hv) = (Box::new(LExpr::Local(j)), Box::new(LExpr::Local(hi)));
                let exit = match dir {
                    Direction::Up => LExpr::Bin(BinOp::Gt, jv.clone(), hv),
                    Direction::Down => LExpr::Bin(BinOp::Lt, jv.clone(), hv),
                    Direction::Cyclic => LExpr::Bin(BinOp::Eq, jv.clone(), hv),
                };
                self.emit(Instr::Branch { cond: exit, target: end });
                self.scopes.push(HashMap::from([(var.clone(), Binding::Local { base: j, len: None })]));
                self.stmts(body)?;
                self.scopes.pop();
                self.line = s.pos.line;
                let step = match dir {
                    Direction::Up => LExpr::Bin(BinOp::Add, jv, Box::new(LExpr::Const(1))),
                    Direction::Down => LExpr::Bin(BinOp::Sub, jv, Box::new(LExpr::Const(1))),
                    Direction::Cyclic => LExpr::Bin(
                        BinOp::Mod,
                        Box::new(LExpr::Bin(BinOp::Add, jv, Box::new(LExpr::Const(1)))),
                        Box::new(LExpr::Const(self.layout.n as i64)),
                    ),
                };
                self.emit(Instr::Assign { base: j, len: 1, idx: None, val: step });
                self.emit(Instr::Jump(top));
                self.place(end);
                Ok(())
            }
            StmtKind::Goto(name) => {
                let l = self.named_label(name, s.pos, false)?;
                self.emit(Instr::Jump(l));
                Ok(())
            }
            StmtKind::Label(name) => {
                let l = self.named_label(name, s.pos, true)?;
                self.place(l);
                Ok(())
            }
            StmtKind::Critical => {
                if !self.call_stack.is_empty() {
                    return Err(err(s.pos, "no-critical", "`critical` inside a procedure"));
                }
                self.crit_count += 1;
                self.emit(Instr::Crit);
                Ok(())
            }
            StmtKind::Skip => Ok(()),
            StmtKind::Return(e) => {
                let (ret_label, ret_slot) = match self.frames.last() {
                    Some(f) => (f.ret_label, f.ret_slot),
                    None => return Err(err(s.pos, "return", "`return` outside a procedure")),
                };
                if let Some(e) = e {
                    let v = self.expr(e)?;
                    self.emit(Instr::Assign { base: ret_slot, len: 1, idx: None, val: v });
                }
                self.emit(Instr::Jump(ret_label));
                Ok(())
            }
            StmtKind::Call(name, args) => {
                self.call(name, args, s.pos)?;
                Ok(())
            }
        }
    }

    fn await_loop(&mut self, e: &Expr) -> R<()> {
        let top = self.new_label();
        self.place(top);
        let v = self.expr(e)?;
        if v == LExpr::Const(0) || !matches!(v, LExpr::Const(_)) {
            self.emit(Instr::Branch { cond: not(v), target: top });
        }
        Ok(())
    }

    fn quant_range(&mut self, filter: Option<&(BinOp, Box<Expr>)>, var: &str, pos: Pos) -> R<Vec<i64>> {
        let mut out = Vec::new();
        for j in 0..self.layout.n as i64 {
            let keep = match filter {
                None => true,
                Some((op, bound)) => {
                    let b = match self.expr(bound)? {
                        LExpr::Const(b) => b,
                        _ => return Err(err(pos, "not-constant", format!("filter of `{var}` must be constant"))),
                    };
                    bin(*op, j, b).unwrap_or(0) != 0
                }
            };
            if keep {
                out.push(j);
            }
        }
        Ok(out)
    }

    fn reg_ref(&mut self, name: &str, index: Option<&Expr>, pos: Pos) -> R<Option<RegRef>> {
        let a = match self.layout.arrays.get(name) {
            Some(a) => a.clone(),
            None => return Ok(None),
        };
        match (a.len, index) {
            (None, None) => Ok(Some(RegRef { base: a.base, len: 1, idx: None })),
            (Some(len), Some(ix)) => {
                let v = self.expr(ix)?;
                if let LExpr::Const(k) = v {
                    if k < 0 || k as usize >= len {
                        return Err(err(pos, "index", format!("index {k} out of range for `{name}`")));
                    }
                    return Ok(Some(RegRef { base: a.base + k as RegId, len: 1, idx: None }));
                }
                Ok(Some(RegRef { base: a.base, len: len as u16, idx: Some(v) }))
            }
            (None, Some(_)) => Err(err(pos, "index", format!("`{name}` is not an array"))),
            (Some(_), None) => Err(err(pos, "index", format!("array `{name}` needs an index"))),
        }
    }

    /// Domain of a statically known register reference, `None` if it varies.
    fn ref_domain(&self, r: &RegRef) -> Option<u8> {
        let doms: Vec<u8> = (0..r.len).map(|k| self.layout.registers[(r.base + k) as usize].domain).collect();
        doms.iter().all(|&d| d == doms[0]).then_some(doms[0])
    }

    fn assign(&mut self, target: &LValue, value: &Expr, conditional: bool) -> R<()> {
        if self.lookup(&target.name).is_none() && self.layout.arrays.contains_key(&target.name) {
            let r = self.reg_ref(&target.name, target.index.as_ref(), target.pos)?.expect("register");
            let v = self.expr(value)?;
            if let (LExpr::Const(k), Some(d)) = (&v, self.ref_domain(&r)) {
                if *k < 0 || *k >= d as i64 {
                    return Err(err(target.pos, "domain", format!("value {k} written to `{}` outside domain 0..{}", target.name, d - 1)));
                }
            }
            let v = self.snapshot(v);
            if conditional {
                let cur = self.fresh("cur");
                let skip = self.new_label();
                self.emit(Instr::Read { reg: r.clone(), dst: cur });
                self.emit(Instr::Branch { cond: LExpr::Bin(BinOp::Eq, Box::new(LExpr::Local(cur)), Box::new(v.clone())), target: skip });
                self.emit(Instr::Write { reg: r, val: v });
                self.place(skip);
            } else {
                self.emit(Instr::Write { reg: r, val: v });
            }
            return Ok(());
        }
        if conditional {
            return Err(err(target.pos, "syntax", "`*:=` applies to registers only"));
        }
        match self.lookup(&target.name) {
            Some(Binding::Local { base, len }) => {
                let idx = match (len, &target.index) {
                    (None, None) => None,
                    (Some(_), Some(ix)) => Some(self.expr(ix)?),
                    _ => return Err(err(target.pos, "index", format!("bad indexing of local `{}`", target.name))),
                };
                let v = self.expr(value)?;
                let (base, len, idx) = match (idx, len) {
                    (Some(LExpr::Const(k)), Some(l)) => {
                        if k < 0 || k >= l as i64 {
                            return Err(err(target.pos, "index", format!("index {k} out of range for `{}`", target.name)));
                        }
                        (base + k as u32, 1, None)
                    }
                    (idx, l) => (base, l.unwrap_or(1), idx),
                };
                self.emit(Instr::Assign { base, len, idx, val: v });
                Ok(())
            }
            Some(Binding::Const(_)) => Err(err(target.pos, "assign", format!("cannot assign to `{}`", target.name))),
            None => Err(err(target.pos, "undeclared", format!("`{}` is not declared", target.name))),
        }
    }

    /// Copies a non-constant value into a fresh slot so later side effects cannot change it.
    fn snapshot(&mut self, v: LExpr) -> LExpr {
        match v {
            LExpr::Const(_) | LExpr::Local(_) => v,
            other => {
                let t = self.fresh("v");
                self.emit(Instr::Assign { base: t, len: 1, idx: None, val: other });
                LExpr::Local(t)
            }
        }
    }

    fn expr(&mut self, e: &Expr) -> R<LExpr> {
        Ok(match e {
            Expr::Int(v) => LExpr::Const(*v),
            Expr::Bool(b) => LExpr::Const(*b as i64),
            Expr::Var(name, pos) => match self.lookup(name) {
                Some(Binding::Const(v)) => LExpr::Const(v),
                Some(Binding::Local { base, len: None }) => LExpr::Local(base),
                Some(Binding::Local { .. }) => return Err(err(*pos, "index", format!("array `{name}` needs an index"))),
                None => match self.reg_ref(name, None, *pos)? {
                    Some(r) => self.read(r),
                    None => return Err(err(*pos, "undeclared", format!("`{name}` is not declared"))),
                },
            },
            Expr::Index(name, ix, pos) => match self.lookup(name) {
                Some(Binding::Local { base, len: Some(len) }) => {
                    let iv = self.expr(ix)?;
                    match iv {
                        LExpr::Const(k) if k < 0 || k >= len as i64 => {
                            return Err(err(*pos, "index", format!("index {k} out of range for `{name}`")));
                        }
                        LExpr::Const(k) => LExpr::Local(base + k as u32),
                        iv => LExpr::LocalIdx { base, len, idx: Box::new(iv) },
                    }
                }
                Some(_) => return Err(err(*pos, "index", format!("`{name}` is not an array"))),
                None => match self.reg_ref(name, Some(ix), *pos)? {
                    Some(r) => self.read(r),
                    None => return Err(err(*pos, "undeclared", format!("`{name}` is not declared"))),
                },
            },
            Expr::Un(op, a) => match self.expr(a)? {
                LExpr::Const(v) => LExpr::Const(un(*op, v)),
                v => LExpr::Un(*op, Box::new(v)),
            },
            Expr::Bin(op @ (BinOp::And | BinOp::Or), a, b) => {
                let va = self.expr(a)?;
                self.short_circuit(*op == BinOp::And, va, &[(b.as_ref(), None)])?
            }
            Expr::Bin(op, a, b) => {
                let va = self.expr(a)?;
                let va = if has_call(b) { self.snapshot(va) } else { va };
                let vb = self.expr(b)?;
                match (&va, &vb) {
                    (LExpr::Const(x), LExpr::Const(y)) => {
                        LExpr::Const(bin(*op, *x, *y).ok_or_else(|| err(self.here(), "arith", "division by zero"))?)
                    }
                    _ => LExpr::Bin(*op, Box::new(va), Box::new(vb)),
                }
            }
            Expr::Quant { all, var, filter, body, pos } => {
                let js = self.quant_range(filter.as_ref(), var, *pos)?;
                if js.is_empty() {
                    return Ok(LExpr::Const(*all as i64));
                }
                let v0 = self.bound_expr(body, &Some((var.clone(), js[0])))?;
                let rest: Vec<(&Expr, Option<(String, i64)>)> = js[1..].iter().map(|&j| (body.as_ref(), Some((var.clone(), j)))).collect();
                self.short_circuit(*all, v0, &rest)?
            }
            Expr::Call(name, args, pos) => {
                let slot = self.call(name, args, *pos)?;
                LExpr::Local(slot)
            }
        })
    }

    /// Lowers `v0 op e1 op e2 ...` with short-circuit evaluation, binding an
    /// optional constant for each operand.
    fn short_circuit(&mut self, and: bool, first: LExpr, rest: &[(&Expr, Option<(String, i64)>)]) -> R<LExpr> {
        let op = if and { BinOp::And } else { BinOp::Or };
        let mut acc = first;
        let mut tmp: Option<(u32, u32)> = None;
        for (e, bind) in rest {
            if tmp.is_none() {
                if let LExpr::Const(k) = acc {
                    if (k != 0) != and {
                        return Ok(LExpr::Const((k != 0) as i64));
                    }
                    acc = truthy(self.bound_expr(e, bind)?);
                    continue;
                }
                if self.is_pure(e, bind) {
                    let vb = self.bound_expr(e, bind)?;
                    acc = LExpr::Bin(op, Box::new(acc), Box::new(vb));
                    continue;
                }
            }
            let (slot, end) = match tmp {
                Some(t) => t,
                None => {
                    let t = (self.fresh("sc"), self.new_label());
                    tmp = Some(t);
                    t
                }
            };
            self.emit(Instr::Assign { base: slot, len: 1, idx: None, val: truthy(acc) });
            let cond = if and { not(LExpr::Local(slot)) } else { LExpr::Local(slot) };
            self.emit(Instr::Branch { cond, target: end });
            acc = self.bound_expr(e, bind)?;
        }
        Ok(match tmp {
            Some((slot, end)) => {
                self.emit(Instr::Assign { base: slot, len: 1, idx: None, val: truthy(acc) });
                self.place(end);
                LExpr::Local(slot)
            }
            None => truthy(acc),
        })
    }

    /// True if `e` reads only locals and constants.
    fn is_pure(&self, e: &Expr, bind: &Option<(String, i64)>) -> bool {
        let mut pure = true;
        e.walk(&mut |x| match x {
            Expr::Var(n, _) | Expr::Index(n, _, _) => {
                let bound = bind.as_ref().is_some_and(|(b, _)| b == n);
                if !bound && !matches!(self.lookup(n), Some(_)) {
                    pure = false;
                }
            }
            Expr::Call(..) | Expr::Quant { .. } => pure = false,
            _ => {}
        });
        pure
    }

    fn bound_expr(&mut self, e: &Expr, bind: &Option<(String, i64)>) -> R<LExpr> {
        match bind {
            Some((n, v)) => {
                self.scopes.push(HashMap::from([(n.clone(), Binding::Const(*v))]));
                let r = self.expr(e);
                self.scopes.pop();
                r
            }
            None => self.expr(e),
        }
    }

    fn read(&mut self, r: RegRef) -> LExpr {
        let dst = self.fresh("rd");
        self.emit(Instr::Read { reg: r, dst });
        LExpr::Local(dst)
    }

    fn call(&mut self, name: &str, args: &[Expr], pos: Pos) -> R<u32> {
        let proc = self
            .prog
            .procs
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| err(pos, "undeclared", format!("procedure `{name}` is not declared")))?;
        if self.call_stack.iter().any(|c| c == name) {
            return Err(err(pos, "recursion", format!("recursive call of `{name}`")));
        }
        if proc.params.len() != args.len() {
            return Err(err(pos, "arity", format!("`{name}` takes {} arguments", proc.params.len())));
        }
        let mut scope = HashMap::new();
        for (p, a) in proc.params.iter().zip(args) {
            let v = self.expr(a)?;
            let slot = self.fresh(p);
            self.emit(Instr::Assign { base: slot, len: 1, idx: None, val: v });
            scope.insert(p.clone(), Binding::Local { base: slot, len: None });
        }
        let env = HashMap::from([("N".to_string(), self.layout.n as i64), ("i".to_string(), self.me)]);
        for d in &proc.locals {
            let len = d.size.as_ref().map(|e| const_eval(e, &env)).transpose()?;
            let init = const_eval(&d.init, &env)?;
            let base = self.slot_names.len() as u32;
            for _ in 0..len.unwrap_or(1) {
                let s = self.fresh(&d.name);
                self.emit(Instr::Assign { base: s, len: 1, idx: None, val: LExpr::Const(init) });
            }
            scope.insert(d.name.clone(), Binding::Local { base, len: len.map(|x| x as u32) });
        }
        let ret_slot = self.fresh("ret");
        let ret_label = self.new_label();
        // Procedure bodies see only their own names plus globals.
        let saved: Vec<HashMap<String, Binding>> = self.scopes.drain(1..).collect();
        self.scopes.push(scope);
        self.frames.push(Frame { ret_label, ret_slot });
        self.labels.push(LabelScope { named: HashMap::new() });
        self.call_stack.push(name.to_string());
        let line = self.line;
        let r = self.stmts(&proc.body);
        self.line = line;
        self.call_stack.pop();
        self.frames.pop();
        self.scopes.truncate(1);
        self.scopes.extend(saved);
        r?;
        self.close_labels()?;
        self.place(ret_label);
        Ok(ret_slot)
    }
}

fn not(v: LExpr) -> LExpr {
    match v {
        LExpr::Const(k) => LExpr::Const((k == 0) as i64),
        v => LExpr::Un(UnOp::Not, Box::new(v)),
    }
}

fn truthy(v: LExpr) -> LExpr {
    match v {
        LExpr::Const(k) => LExpr::Const((k != 0) as i64),
        v @ LExpr::Bin(op, ..) if op.is_comparison() || matches!(op, BinOp::And | BinOp::Or) => v,
        v @ LExpr::Un(UnOp::Not, _) => v,
        v => LExpr::Bin(BinOp::Ne, Box::new(v), Box::new(LExpr::Const(0))),
    }
}

fn has_call(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= matches!(x, Expr::Call(..)));
    found
}

/// Evaluates a lowered expression against local slot values.
pub fn eval(e: &LExpr, locals: &[i64]) -> Result<i64, String> {
    Ok(match e {
        LExpr::Const(v) => *v,
        LExpr::Local(s) => locals[*s as usize],
        LExpr::LocalIdx { base, len, idx } => {
            let k = eval(idx, locals)?;
            if k < 0 || k >= *len as i64 {
                return Err(format!("local index {k} out of range"));
            }
            locals[(*base + k as u32) as usize]
        }
        LExpr::Un(op, a) => un(*op, eval(a, locals)?),
        LExpr::Bin(BinOp::And, a, b) => (eval(a, locals)? != 0 && eval(b, locals)? != 0) as i64,
        LExpr::Bin(BinOp::Or, a, b) => (eval(a, locals)? != 0 || eval(b, locals)? != 0) as i64,
        LExpr::Bin(op, a, b) => bin(*op, eval(a, locals)?, eval(b, locals)?).ok_or("division by zero")?,
    })
}

/// Slots an expression may read.
pub fn uses(e: &LExpr, out: &mut Vec<u32>) {
    match e {
        LExpr::Const(_) => {}
        LExpr::Local(s) => out.push(*s),
        LExpr::LocalIdx { base, len, idx } => {
            out.extend(*base..*base + *len);
            uses(idx, out);
        }
        LExpr::Un(_, a) => uses(a, out),
        LExpr::Bin(_, a, b) => {
            uses(a, out);
            uses(b, out);
        }
    }
}
