//! Expression evaluation against a valuation and a source of `rank` values.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use crate::ast::{BoolExpr, CmpOp, NumExpr, NumOp, Pos};
use crate::ranking::{Valuation, VarKey};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuntimeErrorKind {
    DivisionByZero,
    /// An arithmetic operation on infinity with no defined result, or an
    /// attempt to store infinity in a variable or use it as an index.
    UndefinedInfinityArith,
    IntegerOverflow,
    NegativeChoiceRank,
    NonBooleanBitOp,
    IterationLimit,
    /// `observeJ`/`observeL` applied where the condition or its negation
    /// is impossible.
    RevisionPrecondition,
}

impl RuntimeErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            RuntimeErrorKind::DivisionByZero => "division-by-zero",
            RuntimeErrorKind::UndefinedInfinityArith => "undefined-infinity-arith",
            RuntimeErrorKind::IntegerOverflow => "integer-overflow",
            RuntimeErrorKind::NegativeChoiceRank => "negative-choice-rank",
            RuntimeErrorKind::NonBooleanBitOp => "non-boolean-bit-op",
            RuntimeErrorKind::IterationLimit => "iteration-limit",
            RuntimeErrorKind::RevisionPrecondition => "j-or-l-precondition",
        }
    }
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An error that aborts the run. Distinct from the failure ranking, which
/// is a legal result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at {pos}")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub pos: Pos,
}

impl RuntimeError {
    pub fn new(kind: RuntimeErrorKind, pos: Pos) -> Self {
        RuntimeError { kind, pos }
    }
}

/// Why an expression could not produce a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ExprFail {
    Error(RuntimeErrorKind),
    /// The value depends on ranks the current search budget has not reached.
    Undecided,
}

impl From<RuntimeErrorKind> for ExprFail {
    fn from(k: RuntimeErrorKind) -> Self {
        ExprFail::Error(k)
    }
}

/// Supplies `rank(b)` for the ranking an expression is evaluated against.
pub(crate) trait RankSource {
    fn rank_of(&self, cond: &BoolExpr) -> Result<Value, ExprFail>;
}

/// Memoizes `rank(b)` per syntax node; the value does not depend on the
/// valuation.
#[derive(Default)]
pub(crate) struct RankCache {
    values: RefCell<HashMap<usize, Value>>,
}

impl RankCache {
    pub(crate) fn get_or(
        &self,
        cond: &BoolExpr,
        compute: impl FnOnce() -> Result<Value, ExprFail>,
    ) -> Result<Value, ExprFail> {
        let key = cond as *const BoolExpr as usize;
        if let Some(v) = self.values.borrow().get(&key) {
            return Ok(*v);
        }
        let v = compute()?;
        self.values.borrow_mut().insert(key, v);
        Ok(v)
    }
}

pub(crate) fn eval_num<S: RankSource>(
    src: &S,
    state: &Valuation,
    e: &NumExpr,
) -> Result<Value, ExprFail> {
    match e {
        NumExpr::Lit(v) => Ok(*v),
        NumExpr::Var(name, idx) => {
            let key = eval_key(src, state, name, idx)?;
            Ok(Value::Int(state.get(&key)))
        }
        NumExpr::RankOf(b) => src.rank_of(b),
        NumExpr::Bin(op, a, b) => {
            let a = eval_num(src, state, a)?;
            let b = eval_num(src, state, b)?;
            Ok(apply(*op, a, b)?)
        }
    }
}

pub(crate) fn eval_key<S: RankSource>(
    src: &S,
    state: &Valuation,
    name: &str,
    idx: &[NumExpr],
) -> Result<VarKey, ExprFail> {
    let mut indices = Vec::with_capacity(idx.len());
    for i in idx {
        indices.push(as_storable(eval_num(src, state, i)?)?);
    }
    Ok(VarKey::new(name, indices))
}

pub(crate) fn as_storable(v: Value) -> Result<i64, RuntimeErrorKind> {
    v.as_int().ok_or(RuntimeErrorKind::UndefinedInfinityArith)
}

pub(crate) fn holds<S: RankSource>(
    src: &S,
    state: &Valuation,
    b: &BoolExpr,
) -> Result<bool, ExprFail> {
    match b {
        BoolExpr::Not(inner) => Ok(!holds(src, state, inner)?),
        BoolExpr::Or(x, y) => Ok(holds(src, state, x)? || holds(src, state, y)?),
        BoolExpr::And(x, y) => Ok(holds(src, state, x)? && holds(src, state, y)?),
        BoolExpr::Cmp(op, x, y) => {
            let x = eval_num(src, state, x)?;
            let y = eval_num(src, state, y)?;
            Ok(match op {
                CmpOp::Eq => x == y,
                CmpOp::Ne => x != y,
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
            })
        }
    }
}

/// Binary arithmetic. `inf + n = inf`, `inf - n = inf`; anything else
/// involving infinity is undefined.
pub fn apply(op: NumOp, a: Value, b: Value) -> Result<Value, RuntimeErrorKind> {
    use RuntimeErrorKind::*;
    match (a, b) {
        (Value::Int(a), Value::Int(b)) => {
            let out = match op {
                NumOp::Add => a.checked_add(b).ok_or(IntegerOverflow)?,
                NumOp::Sub => a.checked_sub(b).ok_or(IntegerOverflow)?,
                NumOp::Mul => a.checked_mul(b).ok_or(IntegerOverflow)?,
                NumOp::Div => {
                    if b == 0 {
                        return Err(DivisionByZero);
                    }
                    a.checked_div(b).ok_or(IntegerOverflow)?
                }
                NumOp::Mod => {
                    if b == 0 {
                        return Err(DivisionByZero);
                    }
                    a.checked_rem_euclid(b).ok_or(IntegerOverflow)?
                }
                NumOp::Xor | NumOp::BitAnd | NumOp::BitOr => {
                    if !matches!(a, 0 | 1) || !matches!(b, 0 | 1) {
                        return Err(NonBooleanBitOp);
                    }
                    match op {
                        NumOp::Xor => a ^ b,
                        NumOp::BitAnd => a & b,
                        _ => a | b,
                    }
                }
            };
            Ok(Value::Int(out))
        }
        (Value::Inf, Value::Int(_)) if matches!(op, NumOp::Add | NumOp::Sub) => Ok(Value::Inf),
        (Value::Int(_), Value::Inf) if op == NumOp::Add => Ok(Value::Inf),
        (Value::Inf, Value::Inf) if op == NumOp::Add => Ok(Value::Inf),
        _ => match op {
            NumOp::Xor | NumOp::BitAnd | NumOp::BitOr => Err(NonBooleanBitOp),
            _ => Err(UndefinedInfinityArith),
        },
    }
}
