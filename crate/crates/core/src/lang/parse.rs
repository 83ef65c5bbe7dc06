//! Lexer and recursive-descent parser.

use crate::error::ParseError;

use super::ast::*;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: [&str; 24] = [
    "*:=", ":=", "..", "==", "!=", "<=", ">=", "&&", "||", ":", "[", "]", "(", ")", ",", "+", "-", "*", "/", "<", ">", "!", "=", "%",
];

const KEYWORDS: [&str; 32] = [
    "algorithm", "threads", "register", "local", "proc", "begin", "end", "if", "then", "elif", "else", "while", "do", "repeat",
    "until", "for", "from", "to", "downto", "cyclically", "goto", "await", "critical", "skip", "return", "call", "forall",
    "exists", "true", "false", "mod", "any",
];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: ln + 1, col: i + 1 };
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                break;
            } else if c.is_ascii_digit() {
                let st = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[st..i].iter().collect();
                let v = s.parse().map_err(|_| err(pos, "syntax", format!("integer `{s}` too large")))?;
                out.push((Tok::Int(v), pos));
            } else if c.is_alphabetic() || c == '_' {
                let st = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[st..i].iter().collect()), pos));
            } else {
                let rest: String = chars[i..].iter().take(3).collect();
                match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                    Some(s) => {
                        i += s.len();
                        out.push((Tok::Sym(s), pos));
                    }
                    None => return Err(err(pos, "syntax", format!("unexpected character `{c}`"))),
                }
            }
        }
    }
    let end = Pos { line: src.lines().count() + 1, col: 1 };
    out.push((Tok::Eof, end));
    Ok(out)
}

fn err(pos: Pos, code: &'static str, message: String) -> ParseError {
    ParseError { line: pos.line, col: pos.col, code, message }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

type R<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }
    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }
    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }
    fn is_sym(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == k)
    }
    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
    fn expected(&self, what: &str) -> ParseError {
        err(self.pos(), "syntax", format!("expected {what}, found {}", self.describe()))
    }
    fn kw(&mut self, k: &str) -> R<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&format!("`{k}`")))
        }
    }
    fn sym(&mut self, k: &str) -> R<()> {
        if self.is_sym(k) {
            self.bump();
            Ok(())
        } else {
            Err(self.expected(&format!("`{k}`")))
        }
    }
    fn ident(&mut self) -> R<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.expected("an identifier")),
        }
    }
    fn int(&mut self) -> R<i64> {
        match self.peek() {
            Tok::Int(v) => {
                let v = *v;
                self.bump();
                Ok(v)
            }
            _ => Err(self.expected("an integer")),
        }
    }

    fn program(&mut self) -> R<Program> {
        self.kw("algorithm")?;
        let name = self.name()?;
        self.kw("threads")?;
        let min_threads = self.int()? as usize;
        let mut max_threads = Some(min_threads);
        if self.is_sym("..") {
            self.bump();
            max_threads = match self.peek() {
                Tok::Int(_) => Some(self.int()? as usize),
                _ => None,
            };
        }
        let mut registers = Vec::new();
        let mut locals = Vec::new();
        let mut procs = Vec::new();
        loop {
            if self.is_kw("register") {
                registers.push(self.register()?);
            } else if self.is_kw("local") {
                locals.push(self.local()?);
            } else if self.is_kw("proc") {
                procs.push(self.proc()?);
            } else {
                break;
            }
        }
        self.kw("begin")?;
        let body = self.stmts()?;
        self.kw("end")?;
        if *self.peek() != Tok::Eof {
            return Err(self.expected("end of input"));
        }
        Ok(Program { name, min_threads, max_threads, registers, locals, procs, body })
    }

    /// Algorithm names may contain dashes.
    fn name(&mut self) -> R<String> {
        let mut s = match self.bump() {
            Tok::Ident(s) => s,
            _ => return Err(self.expected("a name")),
        };
        while self.is_sym("-") {
            self.bump();
            match self.bump() {
                Tok::Ident(p) => s = format!("{s}-{p}"),
                Tok::Int(v) => {
                    s = format!("{s}-{v}");
                    // `1bit` lexes as a number followed by a name.
                    let end = self.toks[self.at - 1].1;
                    let digits = v.to_string().len();
                    if let Tok::Ident(p) = self.peek().clone() {
                        let here = self.pos();
                        if here.line == end.line && here.col == end.col + digits {
                            self.bump();
                            s.push_str(&p);
                        }
                    }
                }
                _ => return Err(self.expected("a name")),
            }
        }
        Ok(s)
    }

    fn size(&mut self) -> R<Option<Expr>> {
        if self.is_sym("[") {
            self.bump();
            let e = self.expr()?;
            self.sym("]")?;
            Ok(Some(e))
        } else {
            Ok(None)
        }
    }

    fn register(&mut self) -> R<RegDecl> {
        let pos = self.pos();
        self.kw("register")?;
        let name = self.ident()?;
        let size = self.size()?;
        self.sym(":")?;
        let ty = if self.is_kw("bool") {
            self.bump();
            Ty::Bool
        } else if self.is_kw("thread") {
            self.bump();
            Ty::Thread
        } else {
            let lo_pos = self.pos();
            let lo = self.additive()?;
            if lo != Expr::Int(0) {
                return Err(err(lo_pos, "domain", "integer domains must start at 0".into()));
            }
            self.sym("..")?;
            Ty::Range(self.additive()?)
        };
        self.sym("=")?;
        let init = if self.is_kw("any") {
            self.bump();
            InitSpec::Any
        } else {
            InitSpec::Value(self.expr()?)
        };
        Ok(RegDecl { name, size, ty, init, pos })
    }

    fn local(&mut self) -> R<LocalDecl> {
        let pos = self.pos();
        self.kw("local")?;
        let name = self.ident()?;
        let size = self.size()?;
        let init = if self.is_sym("=") {
            self.bump();
            self.expr()?
        } else {
            Expr::Int(0)
        };
        Ok(LocalDecl { name, size, init, pos })
    }

    fn proc(&mut self) -> R<Proc> {
        let pos = self.pos();
        self.kw("proc")?;
        let name = self.ident()?;
        self.sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            params.push(self.ident()?);
            while self.is_sym(",") {
                self.bump();
                params.push(self.ident()?);
            }
        }
        self.sym(")")?;
        let mut locals = Vec::new();
        while self.is_kw("local") {
            locals.push(self.local()?);
        }
        let body = self.stmts()?;
        self.kw("end")?;
        Ok(Proc { name, params, locals, body, pos })
    }

    fn stmts(&mut self) -> R<Vec<Stmt>> {
        let mut v = Vec::new();
        while !(self.is_kw("end") || self.is_kw("else") || self.is_kw("elif") || self.is_kw("until") || *self.peek() == Tok::Eof) {
            v.push(self.stmt()?);
        }
        Ok(v)
    }

    fn stmt(&mut self) -> R<Stmt> {
        let pos = self.pos();
        let word = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.expected("a statement")),
        };
        let kind = match word.as_str() {
            "await" => {
                self.bump();
                StmtKind::Await(self.expr()?)
            }
            "if" => {
                self.bump();
                let mut arms = Vec::new();
                let c = self.expr()?;
                self.kw("then")?;
                arms.push((c, self.stmts()?));
                let mut otherwise = Vec::new();
                loop {
                    if self.is_kw("elif") {
                        self.bump();
                        let c = self.expr()?;
                        self.kw("then")?;
                        arms.push((c, self.stmts()?));
                    } else if self.is_kw("else") {
                        self.bump();
                        otherwise = self.stmts()?;
                        self.kw("end")?;
                        break;
                    } else {
                        self.kw("end")?;
                        break;
                    }
                }
                StmtKind::If { arms, otherwise }
            }
            "while" => {
                self.bump();
                let c = self.expr()?;
                self.kw("do")?;
                let b = self.stmts()?;
                self.kw("end")?;
                StmtKind::While(c, b)
            }
            "repeat" => {
                self.bump();
                let b = self.stmts()?;
                self.kw("until")?;
                StmtKind::Repeat(b, self.expr()?)
            }
            "for" => {
                self.bump();
                let var = self.ident()?;
                self.kw("from")?;
                let from = self.expr()?;
                let dir = if self.is_kw("to") {
                    Direction::Up
                } else if self.is_kw("downto") {
                    Direction::Down
                } else if self.is_kw("cyclically") {
                    self.bump();
                    Direction::Cyclic
                } else {
                    return Err(self.expected("`to`, `downto` or `cyclically to`"));
                };
                if dir == Direction::Down {
                    self.bump();
                } else {
                    self.kw("to")?;
                }
                let to = self.expr()?;
                self.kw("do")?;
                let body = self.stmts()?;
                self.kw("end")?;
                StmtKind::For { var, from, to, dir, body }
            }
            "goto" => {
                self.bump();
                StmtKind::Goto(self.ident()?)
            }
            "critical" => {
                self.bump();
                StmtKind::Critical
            }
            "skip" => {
                self.bump();
                StmtKind::Skip
            }
            "return" => {
                self.bump();
                let same_line = self.pos().line == pos.line && *self.peek() != Tok::Eof && !self.is_kw("end");
                StmtKind::Return(if same_line { Some(self.expr()?) } else { None })
            }
            "call" => {
                self.bump();
                let name = self.ident()?;
                StmtKind::Call(name.clone(), self.args()?)
            }
            _ => {
                let name = self.ident()?;
                if self.is_sym(":") {
                    self.bump();
                    StmtKind::Label(name)
                } else if self.is_sym("(") {
                    StmtKind::Call(name, self.args()?)
                } else {
                    let index = self.size()?;
                    let conditional = if self.is_sym(":=") {
                        false
                    } else if self.is_sym("*:=") {
                        true
                    } else {
                        return Err(self.expected("`:=`, `*:=`, `:` or `(`"));
                    };
                    self.bump();
                    let value = self.expr()?;
                    StmtKind::Assign { target: LValue { name, index, pos }, value, conditional }
                }
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn args(&mut self) -> R<Vec<Expr>> {
        self.sym("(")?;
        let mut v = Vec::new();
        if !self.is_sym(")") {
            v.push(self.expr()?);
            while self.is_sym(",") {
                self.bump();
                v.push(self.expr()?);
            }
        }
        self.sym(")")?;
        Ok(v)
    }

    fn expr(&mut self) -> R<Expr> {
        if self.is_kw("forall") || self.is_kw("exists") {
            let pos = self.pos();
            let all = self.is_kw("forall");
            self.bump();
            let var = self.ident()?;
            let filter = match self.peek() {
                Tok::Sym(s) if ["!=", "<", ">", "<=", ">=", "=="].contains(s) => {
                    let op = cmp_op(s);
                    self.bump();
                    Some((op, Box::new(self.additive()?)))
                }
                _ => None,
            };
            self.sym(":")?;
            let body = self.expr()?;
            return Ok(Expr::Quant { all, var, filter, body: Box::new(body), pos });
        }
        self.or()
    }

    fn or(&mut self) -> R<Expr> {
        let mut e = self.and()?;
        while self.is_sym("||") {
            self.bump();
            let r = self.and_or_quant()?;
            e = Expr::Bin(BinOp::Or, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_or_quant(&mut self) -> R<Expr> {
        if self.is_kw("forall") || self.is_kw("exists") {
            self.expr()
        } else {
            self.and()
        }
    }

    fn and(&mut self) -> R<Expr> {
        let mut e = self.cmp()?;
        while self.is_sym("&&") {
            self.bump();
            let r = if self.is_kw("forall") || self.is_kw("exists") { self.expr()? } else { self.cmp()? };
            e = Expr::Bin(BinOp::And, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn cmp(&mut self) -> R<Expr> {
        let e = self.additive()?;
        if let Tok::Sym(s) = self.peek() {
            if ["==", "!=", "<", ">", "<=", ">="].contains(s) {
                let op = cmp_op(s);
                self.bump();
                let r = self.additive()?;
                return Ok(Expr::Bin(op, Box::new(e), Box::new(r)));
            }
        }
        Ok(e)
    }

    fn additive(&mut self) -> R<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.is_sym("+") {
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.bump();
            let r = self.term()?;
            e = Expr::Bin(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn term(&mut self) -> R<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = if self.is_sym("*") {
                BinOp::Mul
            } else if self.is_sym("/") {
                BinOp::Div
            } else if self.is_kw("mod") || self.is_sym("%") {
                BinOp::Mod
            } else {
                break;
            };
            self.bump();
            let r = self.unary()?;
            e = Expr::Bin(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn unary(&mut self) -> R<Expr> {
        if self.is_sym("!") {
            self.bump();
            return Ok(Expr::Un(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.is_sym("-") {
            self.bump();
            return Ok(Expr::Un(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> R<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_sym("[") {
                    self.bump();
                    let i = self.expr()?;
                    self.sym("]")?;
                    Ok(Expr::Index(name, Box::new(i), pos))
                } else if self.is_sym("(") {
                    Ok(Expr::Call(name, self.args()?, pos))
                } else {
                    Ok(Expr::Var(name, pos))
                }
            }
            _ => Err(self.expected("an expression")),
        }
    }
}

fn cmp_op(s: &str) -> BinOp {
    match s {
        "==" => BinOp::Eq,
        "!=" => BinOp::Ne,
        "<" => BinOp::Lt,
        "<=" => BinOp::Le,
        ">" => BinOp::Gt,
        _ => BinOp::Ge,
    }
}

/// Parses source text into a syntax tree without semantic checks.
pub fn parse_syntax(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    Parser { toks, at: 0 }.program()
}
