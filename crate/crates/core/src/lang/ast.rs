//! Syntax tree of the algorithm language.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub name: String,
    pub min_threads: usize,
    /// `None` means unbounded.
    pub max_threads: Option<usize>,
    pub registers: Vec<RegDecl>,
    pub locals: Vec<LocalDecl>,
    pub procs: Vec<Proc>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ty {
    Bool,
    /// `0..hi`, inclusive.
    Range(Expr),
    /// `0..N-1`.
    Thread,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Any,
    /// Evaluated per element; `index` is bound to the element index.
    Value(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegDecl {
    pub name: String,
    pub size: Option<Expr>,
    pub ty: Ty,
    pub init: InitSpec,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalDecl {
    pub name: String,
    pub size: Option<Expr>,
    pub init: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proc {
    pub name: String,
    pub params: Vec<String>,
    pub locals: Vec<LocalDecl>,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    /// Increments modulo N and stops on reaching the bound, which is skipped.
    Cyclic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LValue {
    pub name: String,
    pub index: Option<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    /// `x := e`, or `x *:= e` when `conditional`.
    Assign { target: LValue, value: Expr, conditional: bool },
    Await(Expr),
    If { arms: Vec<(Expr, Vec<Stmt>)>, otherwise: Vec<Stmt> },
    While(Expr, Vec<Stmt>),
    Repeat(Vec<Stmt>, Expr),
    For { var: String, from: Expr, to: Expr, dir: Direction, body: Vec<Stmt> },
    Goto(String),
    Label(String),
    Critical,
    Skip,
    Return(Option<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String, Pos),
    Index(String, Box<Expr>, Pos),
    Un(UnOp, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `forall j [op bound]: body` or `exists ...`, unrolled over thread ids.
    Quant { all: bool, var: String, filter: Option<(BinOp, Box<Expr>)>, body: Box<Expr>, pos: Pos },
    Call(String, Vec<Expr>, Pos),
}

impl Expr {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            Expr::Var(_, p) | Expr::Index(_, _, p) | Expr::Call(_, _, p) | Expr::Quant { pos: p, .. } => Some(*p),
            Expr::Un(_, e) => e.pos(),
            Expr::Bin(_, a, b) => a.pos().or_else(|| b.pos()),
            _ => None,
        }
    }

    /// Visits every sub-expression, outermost first.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Index(_, e, _) | Expr::Un(_, e) => e.walk(f),
            Expr::Bin(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Quant { filter, body, .. } => {
                if let Some((_, e)) = filter {
                    e.walk(f);
                }
                body.walk(f);
            }
            Expr::Call(_, args, _) => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }
}

impl Stmt {
    /// Visits every statement, outermost first.
    pub fn walk(&self, f: &mut dyn FnMut(&Stmt)) {
        f(self);
        let mut each = |v: &Vec<Stmt>| v.iter().for_each(|s| s.walk(f));
        match &self.kind {
            StmtKind::If { arms, otherwise } => {
                for (_, b) in arms {
                    each(b);
                }
                each(otherwise);
            }
            StmtKind::While(_, b) | StmtKind::Repeat(b, _) | StmtKind::For { body: b, .. } => each(b),
            _ => {}
        }
    }

    /// Expressions appearing directly in this statement.
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { target, value, .. } => target.index.iter().chain(std::iter::once(value)).collect(),
            StmtKind::Await(e) | StmtKind::While(e, _) | StmtKind::Repeat(_, e) => vec![e],
            StmtKind::If { arms, .. } => arms.iter().map(|(c, _)| c).collect(),
            StmtKind::For { from, to, .. } => vec![from, to],
            StmtKind::Return(Some(e)) => vec![e],
            StmtKind::Call(_, args) => args.iter().collect(),
            _ => vec![],
        }
    }
}
