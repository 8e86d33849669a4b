//! Concrete syntax.
//!
//! ```text
//! x := e;                         assignment (also a[i][j] := e)
//! x := e1 or (r) e2;              choice between two values
//! x := any_of(lo .. hi);          every value in the range, all at rank 0
//! either { s1 } or (r) { s2 }     ranked choice
//! if b then { s1 } else { s2 }    else part optional
//! while b do { s }
//! observe b;  observeJ(x, b);  observeL(x, b);  skip;
//! ```
//!
//! Numerical operators, loosest first: `xor band bor`, `+ -`, `* / %`,
//! unary `-`. Comparisons: `== != < <= > >=`. Boolean: `!`, `&&`, `||`
//! (`||` loosest). `rank(b)` is the rank of a condition; `inf` is infinity.
//! Statements are separated by `;`, which is optional after a closing brace.

mod lexer;

use std::fmt;

use thiserror::Error;

use crate::ast::{BoolExpr, CmpOp, NumExpr, NumOp, Pos, Stmt, StmtKind, Target};
use crate::value::Value;

pub use lexer::{tokenize, Keyword, Token, TokenKind};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub message: String,
    pub line: u32,
    pub column: u32,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(message: impl Into<String>, line: u32, column: u32) -> Self {
        ParseError {
            message: message.into(),
            line,
            column,
            expected: Vec::new(),
        }
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Parses a whole program. Sugar nodes are kept; see [`crate::ast::desugar`].
/// An empty program is `skip`.
pub fn parse_program(source: &str) -> Result<Stmt, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser::new(tokens, end_position(source));
    let prog = p.sequence(false)?;
    if let Some(tok) = p.peek() {
        return Err(p.error_at(tok, format!("unexpected {}", tok.kind), &["statement"]));
    }
    Ok(prog)
}

/// Parses a single boolean condition, e.g. for command-line filters.
pub fn parse_condition(source: &str) -> Result<BoolExpr, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser::new(tokens, end_position(source));
    let b = p.condition()?;
    if let Some(tok) = p.peek() {
        return Err(p.error_at(tok, format!("unexpected {}", tok.kind), &["end of input"]));
    }
    Ok(b)
}

fn end_position(source: &str) -> Pos {
    let line = source.split('\n').count() as u32;
    let last = source.rsplit('\n').next().unwrap_or("");
    Pos::new(line, last.chars().count() as u32 + 1)
}

enum Expr {
    Num(NumExpr),
    Bool(BoolExpr),
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    eof: Pos,
}

impl Parser {
    fn new(tokens: Vec<Token>, eof: Pos) -> Self {
        Parser { tokens, at: 0, eof }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn here(&self) -> Pos {
        self.peek()
            .map_or(self.eof, |t| Pos::new(t.line, t.column))
    }

    fn bump(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.at).cloned();
        if tok.is_some() {
            self.at += 1;
        }
        tok
    }

    fn is_symbol(&self, s: &str) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Symbol(x)) if *x == s)
    }

    fn is_keyword(&self, k: Keyword) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Keyword(x)) if *x == k)
    }

    fn eat_symbol(&mut self, s: &str) -> bool {
        if self.is_symbol(s) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.is_keyword(k) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn error_at(&self, tok: &Token, message: String, expected: &[&str]) -> ParseError {
        ParseError {
            message,
            line: tok.line,
            column: tok.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error_here(&self, expected: &[&str]) -> ParseError {
        let message = match self.peek() {
            Some(tok) => format!("unexpected {}", tok.kind),
            None => "unexpected end of input".to_string(),
        };
        let pos = self.here();
        ParseError {
            message,
            line: pos.line,
            column: pos.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_symbol(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_symbol(s) {
            Ok(())
        } else {
            Err(self.error_here(&[&format!("`{s}`")]))
        }
    }

    fn expect_keyword(&mut self, k: Keyword, shown: &str) -> Result<(), ParseError> {
        if self.eat_keyword(k) {
            Ok(())
        } else {
            Err(self.error_here(&[&format!("`{shown}`")]))
        }
    }

    /// Statements up to `}` (when `in_block`) or end of input.
    fn sequence(&mut self, in_block: bool) -> Result<Stmt, ParseError> {
        let mut items = Vec::new();
        loop {
            while self.eat_symbol(";") {}
            if self.at_sequence_end(in_block) {
                break;
            }
            let stmt = self.statement()?;
            let ended_with_brace = self.at > 0
                && matches!(self.tokens[self.at - 1].kind, TokenKind::Symbol("}"));
            items.push(stmt);
            if self.eat_symbol(";") || self.at_sequence_end(in_block) || ended_with_brace {
                continue;
            }
            return Err(self.error_here(&["`;`"]));
        }
        Ok(Stmt::sequence(items))
    }

    fn at_sequence_end(&self, in_block: bool) -> bool {
        match self.peek() {
            None => true,
            Some(_) => in_block && self.is_symbol("}"),
        }
    }

    fn block(&mut self) -> Result<Stmt, ParseError> {
        self.expect_symbol("{")?;
        let body = self.sequence(true)?;
        self.expect_symbol("}")?;
        Ok(body)
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.here();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_here(&["statement"]));
        };
        let stmt = match &tok.kind {
            TokenKind::Keyword(Keyword::Skip) => {
                self.bump();
                Stmt::skip()
            }
            TokenKind::Symbol("{") => return self.block(),
            TokenKind::Keyword(Keyword::If) => {
                self.bump();
                let cond = self.condition()?;
                self.expect_keyword(Keyword::Then, "then")?;
                let then_branch = self.statement()?;
                if self.eat_keyword(Keyword::Else) {
                    let else_branch = self.statement()?;
                    Stmt::ite(cond, then_branch, else_branch)
                } else {
                    StmtKind::IfThen(cond, Box::new(then_branch)).into()
                }
            }
            TokenKind::Keyword(Keyword::While) => {
                self.bump();
                let cond = self.condition()?;
                self.expect_keyword(Keyword::Do, "do")?;
                let body = self.statement()?;
                Stmt::while_do(cond, body)
            }
            TokenKind::Keyword(Keyword::Either) => {
                self.bump();
                let first = self.block()?;
                self.expect_keyword(Keyword::Or, "or")?;
                let rank = self.paren_number()?;
                let second = self.block()?;
                Stmt::choice(first, rank, second)
            }
            TokenKind::Keyword(Keyword::Observe) => {
                self.bump();
                Stmt::observe(self.condition()?)
            }
            TokenKind::Keyword(k @ (Keyword::ObserveJ | Keyword::ObserveL)) => {
                let k = *k;
                self.bump();
                self.expect_symbol("(")?;
                let strength = self.number()?;
                self.expect_symbol(",")?;
                let cond = self.condition()?;
                self.expect_symbol(")")?;
                if k == Keyword::ObserveJ {
                    StmtKind::ObserveJ(strength, cond).into()
                } else {
                    StmtKind::ObserveL(strength, cond).into()
                }
            }
            TokenKind::Ident(name) => {
                let name = name.clone();
                self.bump();
                let indices = self.indices()?;
                let target = Target { name, indices };
                self.expect_symbol(":=")?;
                self.assignment_rhs(target, pos)?
            }
            TokenKind::Keyword(Keyword::Else) => {
                return Err(self.error_at(&tok, "`else` without matching `if`".into(), &["statement"]))
            }
            _ => return Err(self.error_here(&["statement"])),
        };
        Ok(stmt.at(pos))
    }

    fn assignment_rhs(&mut self, target: Target, pos: Pos) -> Result<Stmt, ParseError> {
        if self.eat_keyword(Keyword::AnyOf) {
            self.expect_symbol("(")?;
            let lo = self.signed_int()?;
            self.expect_symbol("..")?;
            let hi = self.signed_int()?;
            self.expect_symbol(")")?;
            return Ok(StmtKind::UniformPick { target, lo, hi }.into());
        }
        let first = self.number()?;
        if !self.is_keyword(Keyword::Or) {
            return Ok(Stmt::assign_to(target, first));
        }
        let mut alternatives = vec![first];
        let mut ranks = Vec::new();
        while self.eat_keyword(Keyword::Or) {
            ranks.push(self.paren_number()?);
            alternatives.push(self.number()?);
        }
        // x := e1 or (r1) e2 or (r2) e3 nests to the right.
        let last = alternatives.pop().expect("at least two alternatives");
        let r_last = ranks.pop().expect("one rank per `or`");
        let prev = alternatives.pop().expect("at least two alternatives");
        let mut acc: Stmt = StmtKind::ChoiceAssign {
            target: target.clone(),
            first: prev,
            rank: r_last,
            second: last,
        }
        .into();
        acc = acc.at(pos);
        while let (Some(e), Some(r)) = (alternatives.pop(), ranks.pop()) {
            acc = Stmt::choice(Stmt::assign_to(target.clone(), e).at(pos), r, acc).at(pos);
        }
        Ok(acc)
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let negative = self.eat_symbol("-");
        match self.peek_kind() {
            Some(TokenKind::Int(n)) => {
                let n = *n;
                self.bump();
                Ok(if negative { -n } else { n })
            }
            _ => Err(self.error_here(&["integer literal"])),
        }
    }

    fn indices(&mut self) -> Result<Vec<NumExpr>, ParseError> {
        let mut out = Vec::new();
        while self.eat_symbol("[") {
            out.push(self.number()?);
            self.expect_symbol("]")?;
        }
        Ok(out)
    }

    fn paren_number(&mut self) -> Result<NumExpr, ParseError> {
        self.expect_symbol("(")?;
        let e = self.number()?;
        self.expect_symbol(")")?;
        Ok(e)
    }

    fn number(&mut self) -> Result<NumExpr, ParseError> {
        let pos = self.here();
        match self.or_expr()? {
            Expr::Num(e) => Ok(e),
            Expr::Bool(_) => Err(ParseError {
                message: "expected a numerical expression, found a condition".into(),
                line: pos.line,
                column: pos.column,
                expected: vec!["numerical expression".into()],
            }),
        }
    }

    fn condition(&mut self) -> Result<BoolExpr, ParseError> {
        let pos = self.here();
        match self.or_expr()? {
            Expr::Bool(b) => Ok(b),
            Expr::Num(_) => Err(ParseError {
                message: "expected a condition, found a numerical expression".into(),
                line: pos.line,
                column: pos.column,
                expected: vec!["condition".into()],
            }),
        }
    }

    fn want_bool(&self, e: Expr, pos: Pos, op: &str) -> Result<BoolExpr, ParseError> {
        match e {
            Expr::Bool(b) => Ok(b),
            Expr::Num(_) => Err(ParseError {
                message: format!("operand of `{op}` must be a condition"),
                line: pos.line,
                column: pos.column,
                expected: vec!["condition".into()],
            }),
        }
    }

    fn want_num(&self, e: Expr, pos: Pos, op: &str) -> Result<NumExpr, ParseError> {
        match e {
            Expr::Num(n) => Ok(n),
            Expr::Bool(_) => Err(ParseError {
                message: format!("operand of `{op}` must be numerical"),
                line: pos.line,
                column: pos.column,
                expected: vec!["numerical expression".into()],
            }),
        }
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        let mut lhs = self.and_expr()?;
        while self.is_symbol("||") {
            let lhs_b = self.want_bool(lhs, pos, "||")?;
            self.bump();
            let rpos = self.here();
            let rhs = self.and_expr()?;
            let rhs_b = self.want_bool(rhs, rpos, "||")?;
            lhs = Expr::Bool(BoolExpr::or(lhs_b, rhs_b));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        let mut lhs = self.not_expr()?;
        while self.is_symbol("&&") {
            let lhs_b = self.want_bool(lhs, pos, "&&")?;
            self.bump();
            let rpos = self.here();
            let rhs = self.not_expr()?;
            let rhs_b = self.want_bool(rhs, rpos, "&&")?;
            lhs = Expr::Bool(BoolExpr::and(lhs_b, rhs_b));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_symbol("!") {
            let pos = self.here();
            let inner = self.not_expr()?;
            return Ok(Expr::Bool(BoolExpr::not(self.want_bool(inner, pos, "!")?)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        let lhs = self.bit_expr()?;
        let op = match self.peek_kind() {
            Some(TokenKind::Symbol("==")) => CmpOp::Eq,
            Some(TokenKind::Symbol("!=")) => CmpOp::Ne,
            Some(TokenKind::Symbol("<")) => CmpOp::Lt,
            Some(TokenKind::Symbol("<=")) => CmpOp::Le,
            Some(TokenKind::Symbol(">")) => CmpOp::Gt,
            Some(TokenKind::Symbol(">=")) => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        let a = self.want_num(lhs, pos, op.symbol())?;
        self.bump();
        let rpos = self.here();
        let rhs = self.bit_expr()?;
        let b = self.want_num(rhs, rpos, op.symbol())?;
        Ok(Expr::Bool(BoolExpr::cmp(op, a, b)))
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Parser) -> Result<Expr, ParseError>,
        ops: fn(&TokenKind) -> Option<NumOp>,
    ) -> Result<Expr, ParseError> {
        let pos = self.here();
        let mut lhs = next(self)?;
        while let Some(op) = self.peek_kind().and_then(ops) {
            let a = self.want_num(lhs, pos, op.symbol())?;
            self.bump();
            let rpos = self.here();
            let rhs = next(self)?;
            let b = self.want_num(rhs, rpos, op.symbol())?;
            lhs = Expr::Num(NumExpr::bin(op, a, b));
        }
        Ok(lhs)
    }

    fn bit_expr(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(Parser::add_expr, |k| match k {
            TokenKind::Keyword(Keyword::Xor) => Some(NumOp::Xor),
            TokenKind::Keyword(Keyword::Band) => Some(NumOp::BitAnd),
            TokenKind::Keyword(Keyword::Bor) => Some(NumOp::BitOr),
            _ => None,
        })
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(Parser::mul_expr, |k| match k {
            TokenKind::Symbol("+") => Some(NumOp::Add),
            TokenKind::Symbol("-") => Some(NumOp::Sub),
            _ => None,
        })
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(Parser::unary, |k| match k {
            TokenKind::Symbol("*") => Some(NumOp::Mul),
            TokenKind::Symbol("/") => Some(NumOp::Div),
            TokenKind::Symbol("%") => Some(NumOp::Mod),
            _ => None,
        })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_symbol("-") {
            let pos = self.here();
            let inner = self.unary()?;
            let e = self.want_num(inner, pos, "-")?;
            return Ok(Expr::Num(match e {
                NumExpr::Lit(Value::Int(n)) if n > 0 => NumExpr::int(-n),
                other => NumExpr::bin(NumOp::Sub, NumExpr::int(0), other),
            }));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_here(&["expression"]));
        };
        match tok.kind {
            TokenKind::Int(n) => {
                self.bump();
                Ok(Expr::Num(NumExpr::int(n)))
            }
            TokenKind::Keyword(Keyword::Inf) => {
                self.bump();
                Ok(Expr::Num(NumExpr::Lit(Value::Inf)))
            }
            TokenKind::Ident(name) => {
                self.bump();
                let idx = self.indices()?;
                Ok(Expr::Num(NumExpr::indexed(name, idx)))
            }
            TokenKind::Keyword(Keyword::Rank) => {
                self.bump();
                self.expect_symbol("(")?;
                let b = self.condition()?;
                self.expect_symbol(")")?;
                Ok(Expr::Num(NumExpr::rank(b)))
            }
            TokenKind::Symbol("(") => {
                self.bump();
                let e = self.or_expr()?;
                self.expect_symbol(")")?;
                Ok(e)
            }
            _ => Err(self.error_here(&["expression"])),
        }
    }
}
