//! Reference denotational semantics: statements as maps from rankings to
//! rankings, computed exactly over the full support.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{desugar, BoolExpr, DesugarError, NumExpr, Pos, Stmt, StmtKind};
use crate::expr::{
    self, as_storable, eval_key, ExprFail, RankCache, RankSource, RuntimeError, RuntimeErrorKind,
};
use crate::ranking::{
    condition, firmness, min_merge, normalize, rank_of, Event, Rank, RankMap, Ranking, Valuation,
};
use crate::value::Value;

pub const DEFAULT_ITERATION_LIMIT: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    max_while_iterations: u64,
}

impl EvalConfig {
    /// # Panics
    /// If `limit` is zero.
    pub fn with_iteration_limit(limit: u64) -> Self {
        assert!(limit > 0, "iteration limit must be positive");
        EvalConfig {
            max_while_iterations: limit,
        }
    }

    pub fn max_while_iterations(&self) -> u64 {
        self.max_while_iterations
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig::with_iteration_limit(DEFAULT_ITERATION_LIMIT)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Static(#[from] DesugarError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl EvalError {
    pub fn runtime_kind(&self) -> Option<RuntimeErrorKind> {
        match self {
            EvalError::Runtime(e) => Some(e.kind),
            EvalError::Static(_) => None,
        }
    }
}

struct RankingView<'a> {
    ranking: &'a Ranking,
    cache: RankCache,
}

impl<'a> RankingView<'a> {
    fn new(ranking: &'a Ranking) -> Self {
        RankingView {
            ranking,
            cache: RankCache::default(),
        }
    }
}

impl RankSource for RankingView<'_> {
    fn rank_of(&self, cond: &BoolExpr) -> Result<Value, ExprFail> {
        self.cache.get_or(cond, || {
            let mut best = Rank::INF;
            for (v, r) in self.ranking.iter() {
                if Rank::Finite(r) < best && expr::holds(self, v, cond)? {
                    best = Rank::Finite(r);
                }
            }
            Ok(best.into())
        })
    }
}

fn settle(fail: ExprFail) -> RuntimeErrorKind {
    match fail {
        ExprFail::Error(k) => k,
        ExprFail::Undecided => unreachable!("exact rankings decide every rank expression"),
    }
}

/// `σ_κ(e)`.
pub fn eval_num(state: &Valuation, k: &Ranking, e: &NumExpr) -> Result<Value, RuntimeErrorKind> {
    expr::eval_num(&RankingView::new(k), state, e).map_err(settle)
}

/// `[[b]]_κ`: the support members of `k` satisfying `b`.
pub fn eval_bool(k: &Ranking, b: &BoolExpr) -> Result<Event, RuntimeErrorKind> {
    let view = RankingView::new(k);
    models(&view, k, b).map_err(settle)
}

fn models(view: &RankingView<'_>, k: &Ranking, b: &BoolExpr) -> Result<Event, ExprFail> {
    let mut members = Vec::new();
    for v in k.support() {
        if expr::holds(view, v, b)? {
            members.push(v.clone());
        }
    }
    Ok(members.into_iter().collect())
}

/// Runs `s` from the initial ranking.
pub fn run_program(s: &Stmt, cfg: EvalConfig) -> Result<Ranking, EvalError> {
    run_from(s, Ranking::initial(), cfg)
}

/// Desugars `s` and runs it from `prior`.
pub fn run_from(s: &Stmt, prior: Ranking, cfg: EvalConfig) -> Result<Ranking, EvalError> {
    let core = desugar(s)?;
    denote(&core, prior, cfg)
}

/// `D[[s]](κ)`. Sugar nodes are desugared on the fly.
pub fn denote(s: &Stmt, k: Ranking, cfg: EvalConfig) -> Result<Ranking, EvalError> {
    Denoter { cfg }.denote(s, k)
}

struct Denoter {
    cfg: EvalConfig,
}

impl Denoter {
    fn denote(&self, s: &Stmt, k: Ranking) -> Result<Ranking, EvalError> {
        // Failure in, failure out.
        if k.is_failure() {
            return Ok(k);
        }
        let pos = s.pos;
        let err = |kind: RuntimeErrorKind| EvalError::Runtime(RuntimeError::new(kind, pos));
        let fail = |f: ExprFail| err(settle(f));

        if let Some(guard) = &s.revision_guard {
            let cond = eval_bool(&k, guard).map_err(err)?;
            if rank_of(&k, &cond).is_infinite() || firmness(&k, &cond).is_infinite() {
                return Err(err(RuntimeErrorKind::RevisionPrecondition));
            }
        }

        match &s.kind {
            StmtKind::Skip => Ok(k),
            StmtKind::Seq(a, b) => {
                let mid = self.denote(a, k)?;
                self.denote(b, mid)
            }
            StmtKind::Assign(target, e) => {
                let view = RankingView::new(&k);
                let mut raw = RankMap::new();
                for (v, r) in k.iter() {
                    let key = eval_key(&view, v, &target.name, &target.indices).map_err(fail)?;
                    let value = expr::eval_num(&view, v, e).map_err(fail)?;
                    let value = as_storable(value).map_err(err)?;
                    raw.insert_min(v.with(key, value), Rank::Finite(r));
                }
                Ok(normalize(raw))
            }
            StmtKind::If(b, s1, s2) => {
                let cond = eval_bool(&k, b).map_err(err)?;
                let not_cond = cond.complement_in(&k);
                let left = self.branch(s1, &k, &cond, Rank::ZERO, pos)?;
                let right = self.branch(s2, &k, &not_cond, Rank::ZERO, pos)?;
                Ok(normalize(min_merge(left, right)))
            }
            StmtKind::Choice(s1, e, s2) => {
                // Level sets of the offset, evaluated in the prior state.
                let view = RankingView::new(&k);
                let mut parts: BTreeMap<u64, Vec<Valuation>> = BTreeMap::new();
                for (v, _) in k.iter() {
                    match expr::eval_num(&view, v, e).map_err(fail)? {
                        Value::Int(n) if n < 0 => {
                            return Err(err(RuntimeErrorKind::NegativeChoiceRank))
                        }
                        Value::Int(n) => parts.entry(n as u64).or_default().push(v.clone()),
                        Value::Inf => {}
                    }
                }
                let mut merged: RankMap = self.denote(s1, k.clone())?.into();
                for (offset, members) in parts {
                    let part: Event = members.into_iter().collect();
                    let shifted = self.branch(s2, &k, &part, Rank::Finite(offset), pos)?;
                    merged = min_merge(merged, shifted);
                }
                Ok(normalize(merged))
            }
            StmtKind::Observe(b) => {
                let cond = eval_bool(&k, b).map_err(err)?;
                Ok(condition(&k, &cond))
            }
            StmtKind::While(b, body) => {
                let step = Stmt::ite(b.clone(), (**body).clone(), Stmt::skip().at(pos)).at(pos);
                let mut cur = k;
                let mut iterations = 0u64;
                loop {
                    let cond = eval_bool(&cur, b).map_err(err)?;
                    if rank_of(&cur, &cond).is_infinite() {
                        return Ok(cur);
                    }
                    if iterations >= self.cfg.max_while_iterations() {
                        return Err(err(RuntimeErrorKind::IterationLimit));
                    }
                    iterations += 1;
                    cur = self.denote(&step, cur)?;
                }
            }
            StmtKind::IfThen(..)
            | StmtKind::ChoiceAssign { .. }
            | StmtKind::UniformPick { .. }
            | StmtKind::ObserveJ(..)
            | StmtKind::ObserveL(..) => {
                let core = desugar(s)?;
                self.denote(&core, k)
            }
        }
    }

    /// Runs `s` on `k` conditioned on `part`, then shifts the result back up
    /// by the part's prior rank plus `extra`.
    fn branch(
        &self,
        s: &Stmt,
        k: &Ranking,
        part: &Event,
        extra: Rank,
        pos: Pos,
    ) -> Result<RankMap, EvalError> {
        let base = rank_of(k, part);
        if base.is_infinite() {
            return Ok(RankMap::new());
        }
        let overflow = |_| EvalError::Runtime(RuntimeError::new(RuntimeErrorKind::IntegerOverflow, pos));
        let shift = base.checked_add(extra).map_err(overflow)?;
        let result: RankMap = self.denote(s, condition(k, part))?.into();
        result.shifted(shift).map_err(overflow)
    }
}
