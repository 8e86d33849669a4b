//! Abstract syntax of RankPL, desugaring, derived revision statements, and
//! a pretty-printer producing concrete syntax the parser accepts.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::value::Value;

/// 1-based source position. Synthesized nodes use `Pos::default()` (0:0).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumOp {
    Sub,
    Add,
    Mul,
    Div,
    Mod,
    Xor,
    BitAnd,
    BitOr,
}

impl NumOp {
    pub fn symbol(self) -> &'static str {
        match self {
            NumOp::Sub => "-",
            NumOp::Add => "+",
            NumOp::Mul => "*",
            NumOp::Div => "/",
            NumOp::Mod => "%",
            NumOp::Xor => "xor",
            NumOp::BitAnd => "band",
            NumOp::BitOr => "bor",
        }
    }
}

/// Comparison operators. Only `Eq` and `Lt` survive desugaring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn is_core(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Lt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NumExpr {
    Lit(Value),
    /// A variable with its index expressions (empty for scalars).
    Var(String, Vec<NumExpr>),
    RankOf(Box<BoolExpr>),
    Bin(NumOp, Box<NumExpr>, Box<NumExpr>),
}

impl NumExpr {
    pub fn int(n: i64) -> Self {
        NumExpr::Lit(Value::Int(n))
    }

    pub fn var(name: impl Into<String>) -> Self {
        NumExpr::Var(name.into(), Vec::new())
    }

    pub fn indexed(name: impl Into<String>, indices: Vec<NumExpr>) -> Self {
        NumExpr::Var(name.into(), indices)
    }

    pub fn rank(b: BoolExpr) -> Self {
        NumExpr::RankOf(Box::new(b))
    }

    pub fn bin(op: NumOp, a: NumExpr, b: NumExpr) -> Self {
        NumExpr::Bin(op, Box::new(a), Box::new(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Not(Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    /// Sugar for `!(!a || !b)`.
    And(Box<BoolExpr>, Box<BoolExpr>),
    Cmp(CmpOp, NumExpr, NumExpr),
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, a: NumExpr, b: NumExpr) -> Self {
        BoolExpr::Cmp(op, a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(b: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn is_core(&self) -> bool {
        match self {
            BoolExpr::Not(b) => b.is_core(),
            BoolExpr::Or(a, b) => a.is_core() && b.is_core(),
            BoolExpr::And(..) => false,
            BoolExpr::Cmp(op, a, b) => op.is_core() && a.is_core() && b.is_core(),
        }
    }
}

impl NumExpr {
    pub fn is_core(&self) -> bool {
        match self {
            NumExpr::Lit(_) => true,
            NumExpr::Var(_, idx) => idx.iter().all(NumExpr::is_core),
            NumExpr::RankOf(b) => b.is_core(),
            NumExpr::Bin(_, a, b) => a.is_core() && b.is_core(),
        }
    }
}

/// Assignment target `x` or `a[e1][e2]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Target {
    pub name: String,
    pub indices: Vec<NumExpr>,
}

impl Target {
    pub fn scalar(name: impl Into<String>) -> Self {
        Target {
            name: name.into(),
            indices: Vec::new(),
        }
    }

    fn as_expr(&self) -> NumExpr {
        NumExpr::Var(self.name.clone(), self.indices.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Seq(Box<Stmt>, Box<Stmt>),
    Assign(Target, NumExpr),
    If(BoolExpr, Box<Stmt>, Box<Stmt>),
    While(BoolExpr, Box<Stmt>),
    /// `either { s1 } or (e) { s2 }`: `s2` is surprising to degree `e`.
    Choice(Box<Stmt>, NumExpr, Box<Stmt>),
    Observe(BoolExpr),
    Skip,
    // Sugar.
    IfThen(BoolExpr, Box<Stmt>),
    /// `x := e1 or (e) e2`.
    ChoiceAssign {
        target: Target,
        first: NumExpr,
        rank: NumExpr,
        second: NumExpr,
    },
    /// `x := any_of(lo .. hi)`: every value in the range at rank 0.
    UniformPick { target: Target, lo: i64, hi: i64 },
    ObserveJ(NumExpr, BoolExpr),
    ObserveL(NumExpr, BoolExpr),
}

/// A statement node. Equality compares structure only; positions and the
/// revision guard are metadata.
#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
    /// Set on the expansions of `observeJ`/`observeL`: evaluation first
    /// checks that both the condition and its negation are possible.
    pub revision_guard: Option<Box<BoolExpr>>,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Stmt {}

impl std::hash::Hash for Stmt {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
    }
}

impl From<StmtKind> for Stmt {
    fn from(kind: StmtKind) -> Self {
        Stmt {
            kind,
            pos: Pos::default(),
            revision_guard: None,
        }
    }
}

impl Stmt {
    pub fn at(mut self, pos: Pos) -> Self {
        self.pos = pos;
        self
    }

    pub fn skip() -> Self {
        StmtKind::Skip.into()
    }

    pub fn seq(a: Stmt, b: Stmt) -> Self {
        StmtKind::Seq(Box::new(a), Box::new(b)).into()
    }

    /// Right-nested sequence; an empty list is `skip`.
    pub fn sequence(stmts: impl IntoIterator<Item = Stmt>) -> Self {
        let mut items: Vec<Stmt> = stmts.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Stmt::skip();
        };
        while let Some(prev) = items.pop() {
            acc = Stmt::seq(prev, acc);
        }
        acc
    }

    pub fn assign(name: impl Into<String>, e: NumExpr) -> Self {
        StmtKind::Assign(Target::scalar(name), e).into()
    }

    pub fn assign_to(target: Target, e: NumExpr) -> Self {
        StmtKind::Assign(target, e).into()
    }

    pub fn ite(b: BoolExpr, s1: Stmt, s2: Stmt) -> Self {
        StmtKind::If(b, Box::new(s1), Box::new(s2)).into()
    }

    pub fn while_do(b: BoolExpr, body: Stmt) -> Self {
        StmtKind::While(b, Box::new(body)).into()
    }

    pub fn choice(s1: Stmt, e: NumExpr, s2: Stmt) -> Self {
        StmtKind::Choice(Box::new(s1), e, Box::new(s2)).into()
    }

    pub fn observe(b: BoolExpr) -> Self {
        StmtKind::Observe(b).into()
    }

    /// True when no sugar statement, `&&`, or sugar comparison remains.
    pub fn is_core(&self) -> bool {
        match &self.kind {
            StmtKind::Seq(a, b) => a.is_core() && b.is_core(),
            StmtKind::Assign(t, e) => t.indices.iter().all(NumExpr::is_core) && e.is_core(),
            StmtKind::If(b, s1, s2) => b.is_core() && s1.is_core() && s2.is_core(),
            StmtKind::While(b, s) => b.is_core() && s.is_core(),
            StmtKind::Choice(s1, e, s2) => s1.is_core() && e.is_core() && s2.is_core(),
            StmtKind::Observe(b) => b.is_core(),
            StmtKind::Skip => true,
            StmtKind::IfThen(..)
            | StmtKind::ChoiceAssign { .. }
            | StmtKind::UniformPick { .. }
            | StmtKind::ObserveJ(..)
            | StmtKind::ObserveL(..) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DesugarError {
    #[error("empty range in any_of({lo} .. {hi}) at {pos}")]
    EmptyRange { lo: i64, hi: i64, pos: Pos },
}

/// `{observe b} <x> {observe !b}`: J-conditioning on `b` with strength `x`.
pub fn expand_observe_j(x: NumExpr, b: BoolExpr) -> Stmt {
    let neg = BoolExpr::not(b.clone());
    let mut s = Stmt::choice(Stmt::observe(b.clone()), x, Stmt::observe(neg));
    s.revision_guard = Some(Box::new(b));
    s
}

/// L-conditioning on `b` with strength `x`, expressed with ranked choice,
/// observation, and rank expressions:
///
/// ```text
/// if rank(b) <= x then { observe b } <x - rank(b) + rank(!b)> { observe !b }
/// else { observe !b } <rank(b) - x> { observe b }
/// ```
pub fn expand_observe_l(x: NumExpr, b: BoolExpr) -> Stmt {
    let neg = BoolExpr::not(b.clone());
    let rank_b = NumExpr::rank(b.clone());
    let rank_neg = NumExpr::rank(neg.clone());
    let guard = BoolExpr::cmp(CmpOp::Le, rank_b.clone(), x.clone());
    let then_offset = NumExpr::bin(
        NumOp::Add,
        NumExpr::bin(NumOp::Sub, x.clone(), rank_b.clone()),
        rank_neg,
    );
    let else_offset = NumExpr::bin(NumOp::Sub, rank_b, x);
    let then_branch = Stmt::choice(
        Stmt::observe(b.clone()),
        then_offset,
        Stmt::observe(neg.clone()),
    );
    let else_branch = Stmt::choice(Stmt::observe(neg), else_offset, Stmt::observe(b.clone()));
    let mut s = Stmt::ite(guard, then_branch, else_branch);
    s.revision_guard = Some(Box::new(b));
    s
}

pub fn desugar_num(e: &NumExpr) -> NumExpr {
    match e {
        NumExpr::Lit(v) => NumExpr::Lit(*v),
        NumExpr::Var(name, idx) => NumExpr::Var(name.clone(), idx.iter().map(desugar_num).collect()),
        NumExpr::RankOf(b) => NumExpr::rank(desugar_bool(b)),
        NumExpr::Bin(op, a, b) => NumExpr::bin(*op, desugar_num(a), desugar_num(b)),
    }
}

pub fn desugar_bool(b: &BoolExpr) -> BoolExpr {
    match b {
        BoolExpr::Not(inner) => BoolExpr::not(desugar_bool(inner)),
        BoolExpr::Or(x, y) => BoolExpr::or(desugar_bool(x), desugar_bool(y)),
        BoolExpr::And(x, y) => BoolExpr::not(BoolExpr::or(
            BoolExpr::not(desugar_bool(x)),
            BoolExpr::not(desugar_bool(y)),
        )),
        BoolExpr::Cmp(op, x, y) => {
            let (x, y) = (desugar_num(x), desugar_num(y));
            match op {
                CmpOp::Eq => BoolExpr::cmp(CmpOp::Eq, x, y),
                CmpOp::Lt => BoolExpr::cmp(CmpOp::Lt, x, y),
                CmpOp::Gt => BoolExpr::cmp(CmpOp::Lt, y, x),
                CmpOp::Le => BoolExpr::not(BoolExpr::cmp(CmpOp::Lt, y, x)),
                CmpOp::Ge => BoolExpr::not(BoolExpr::cmp(CmpOp::Lt, x, y)),
                CmpOp::Ne => BoolExpr::not(BoolExpr::cmp(CmpOp::Eq, x, y)),
            }
        }
    }
}

fn desugar_target(t: &Target) -> Target {
    Target {
        name: t.name.clone(),
        indices: t.indices.iter().map(desugar_num).collect(),
    }
}

/// Rewrites every sugar node into the seven core statement forms.
pub fn desugar(s: &Stmt) -> Result<Stmt, DesugarError> {
    let pos = s.pos;
    let kind = match &s.kind {
        StmtKind::Seq(a, b) => StmtKind::Seq(Box::new(desugar(a)?), Box::new(desugar(b)?)),
        StmtKind::Assign(t, e) => StmtKind::Assign(desugar_target(t), desugar_num(e)),
        StmtKind::If(b, s1, s2) => StmtKind::If(
            desugar_bool(b),
            Box::new(desugar(s1)?),
            Box::new(desugar(s2)?),
        ),
        StmtKind::While(b, body) => StmtKind::While(desugar_bool(b), Box::new(desugar(body)?)),
        StmtKind::Choice(s1, e, s2) => StmtKind::Choice(
            Box::new(desugar(s1)?),
            desugar_num(e),
            Box::new(desugar(s2)?),
        ),
        StmtKind::Observe(b) => StmtKind::Observe(desugar_bool(b)),
        StmtKind::Skip => StmtKind::Skip,
        StmtKind::IfThen(b, body) => StmtKind::If(
            desugar_bool(b),
            Box::new(desugar(body)?),
            Box::new(Stmt::skip().at(pos)),
        ),
        StmtKind::ChoiceAssign {
            target,
            first,
            rank,
            second,
        } => {
            let t = desugar_target(target);
            StmtKind::Choice(
                Box::new(Stmt::assign_to(t.clone(), desugar_num(first)).at(pos)),
                desugar_num(rank),
                Box::new(Stmt::assign_to(t, desugar_num(second)).at(pos)),
            )
        }
        StmtKind::UniformPick { target, lo, hi } => {
            if lo > hi {
                return Err(DesugarError::EmptyRange {
                    lo: *lo,
                    hi: *hi,
                    pos,
                });
            }
            let t = desugar_target(target);
            let mut acc = Stmt::assign_to(t.clone(), NumExpr::int(*hi)).at(pos);
            let mut n = *hi;
            while n > *lo {
                n -= 1;
                acc = Stmt::choice(
                    Stmt::assign_to(t.clone(), NumExpr::int(n)).at(pos),
                    NumExpr::int(0),
                    acc,
                )
                .at(pos);
            }
            return Ok(acc);
        }
        StmtKind::ObserveJ(x, b) => {
            let mut out = desugar(&expand_observe_j(x.clone(), b.clone()).at(pos))?;
            out.revision_guard = Some(Box::new(desugar_bool(b)));
            return Ok(out);
        }
        StmtKind::ObserveL(x, b) => {
            let mut out = desugar(&expand_observe_l(x.clone(), b.clone()).at(pos))?;
            out.revision_guard = Some(Box::new(desugar_bool(b)));
            return Ok(out);
        }
    };
    Ok(Stmt {
        kind,
        pos,
        revision_guard: s.revision_guard.as_deref().map(|b| Box::new(desugar_bool(b))),
    })
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Lit(v) => write!(f, "{v}"),
            NumExpr::Var(name, idx) => {
                f.write_str(name)?;
                for i in idx {
                    write!(f, "[{i}]")?;
                }
                Ok(())
            }
            NumExpr::RankOf(b) => write!(f, "rank({b})"),
            NumExpr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Not(b) => write!(f, "!({b})"),
            BoolExpr::Or(a, b) => write!(f, "({a} || {b})"),
            BoolExpr::And(a, b) => write!(f, "({a} && {b})"),
            BoolExpr::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_expr())
    }
}

fn write_stmt(out: &mut String, s: &Stmt, sep: &str) {
    match &s.kind {
        StmtKind::Seq(a, b) => {
            if matches!(a.kind, StmtKind::Seq(..)) {
                out.push_str("{ ");
                write_stmt(out, a, "; ");
                out.push_str(" }");
            } else {
                write_stmt(out, a, sep);
            }
            out.push(';');
            out.push_str(if sep == "; " { " " } else { "\n" });
            write_stmt(out, b, sep);
        }
        StmtKind::Assign(t, e) => {
            let _ = write!(out, "{t} := {e}");
        }
        StmtKind::If(b, s1, s2) => {
            let _ = write!(out, "if {b} then ");
            write_block(out, s1);
            out.push_str(" else ");
            write_block(out, s2);
        }
        StmtKind::IfThen(b, s1) => {
            let _ = write!(out, "if {b} then ");
            write_block(out, s1);
        }
        StmtKind::While(b, body) => {
            let _ = write!(out, "while {b} do ");
            write_block(out, body);
        }
        StmtKind::Choice(s1, e, s2) => {
            out.push_str("either ");
            write_block(out, s1);
            let _ = write!(out, " or ({e}) ");
            write_block(out, s2);
        }
        StmtKind::Observe(b) => {
            let _ = write!(out, "observe {b}");
        }
        StmtKind::Skip => out.push_str("skip"),
        StmtKind::ChoiceAssign {
            target,
            first,
            rank,
            second,
        } => {
            let _ = write!(out, "{target} := {first} or ({rank}) {second}");
        }
        StmtKind::UniformPick { target, lo, hi } => {
            let _ = write!(out, "{target} := any_of({lo} .. {hi})");
        }
        StmtKind::ObserveJ(x, b) => {
            let _ = write!(out, "observeJ({x}, {b})");
        }
        StmtKind::ObserveL(x, b) => {
            let _ = write!(out, "observeL({x}, {b})");
        }
    }
}

fn write_block(out: &mut String, s: &Stmt) {
    out.push_str("{ ");
    write_stmt(out, s, "; ");
    out.push_str(" }");
}

/// Renders concrete syntax. Top-level statements go on separate lines;
/// nested blocks are written inline.
pub fn pretty_print(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, "\n");
    out
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}
