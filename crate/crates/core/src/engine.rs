//! Most-plausible-first enumeration by iterative deepening on a rank budget.
//!
//! Each round re-executes the program on a truncated ranking: alternatives
//! whose accumulated rank exceeds the budget are dropped at the choice that
//! would create them. Every intermediate result is a [`Frontier`], which
//! knows all entries below its `floor` exactly and nothing at or above it.
//! Outcomes are emitted once a round proves their normalized rank.

use std::collections::{BTreeMap, VecDeque};
use std::num::NonZeroUsize;

use thiserror::Error;

use crate::ast::{desugar, BoolExpr, DesugarError, Stmt, StmtKind};
use crate::eval::EvalConfig;
use crate::expr::{
    self, as_storable, eval_key, ExprFail, RankCache, RankSource, RuntimeError, RuntimeErrorKind,
};
use crate::ranking::{Rank, Ranking, Valuation, MAX_FINITE};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Highest normalized rank to report.
    pub max_rank: Rank,
    pub max_outcomes: Option<NonZeroUsize>,
    pub eval: EvalConfig,
    /// Highest accumulated path rank a round may explore. Reaching it
    /// before any outcome is proved is [`EngineError::BudgetExhausted`].
    pub max_budget: Rank,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_rank: Rank::INF,
            max_outcomes: None,
            eval: EvalConfig::default(),
            max_budget: Rank::INF,
        }
    }
}

impl SearchOptions {
    pub fn with_max_rank(mut self, r: u64) -> Self {
        self.max_rank = Rank::Finite(r);
        self
    }

    pub fn with_max_outcomes(mut self, n: usize) -> Self {
        self.max_outcomes = NonZeroUsize::new(n);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub valuation: Valuation,
    pub rank: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Every outcome has been produced.
    Complete,
    /// The program observed an impossible condition on every path.
    Failure,
    RankLimit,
    OutcomeLimit,
    /// The budget cap was reached after at least one outcome.
    BudgetLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Static(#[from] DesugarError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("rank budget {0} exhausted before any outcome was determined")]
    BudgetExhausted(Rank),
}

impl EngineError {
    pub fn runtime_kind(&self) -> Option<RuntimeErrorKind> {
        match self {
            EngineError::Runtime(e) => Some(e.kind),
            _ => None,
        }
    }
}

/// Enumerates the outcomes of `s` in ascending rank, ties broken by
/// valuation order.
pub fn enumerate(s: &Stmt, opts: SearchOptions) -> OutcomeStream {
    OutcomeStream {
        program: desugar(s),
        opts,
        budget: 0,
        level: 0,
        emitted: 0,
        rounds: 0,
        pending: VecDeque::new(),
        state: State::Running,
    }
}

/// Runs the whole stream and assembles the normalized result.
pub fn enumerate_collect(s: &Stmt, opts: SearchOptions) -> Result<Ranking, EngineError> {
    let mut stream = enumerate(s, opts);
    let mut pairs = Vec::new();
    for outcome in stream.by_ref() {
        let o = outcome?;
        pairs.push((o.valuation, o.rank));
    }
    if stream.termination() == Some(Termination::Failure) {
        return Ok(Ranking::failure());
    }
    Ok(Ranking::from_pairs(pairs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Running,
    Done(Termination),
    Errored,
}

pub struct OutcomeStream {
    program: Result<Stmt, DesugarError>,
    opts: SearchOptions,
    budget: u64,
    /// Normalized ranks below this have all been emitted.
    level: u64,
    emitted: usize,
    rounds: u64,
    pending: VecDeque<Outcome>,
    state: State,
}

impl OutcomeStream {
    /// How the stream ended, once it has.
    pub fn termination(&self) -> Option<Termination> {
        match self.state {
            State::Done(t) if self.pending.is_empty() => Some(t),
            _ => None,
        }
    }

    /// Number of budget rounds executed so far.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    fn finish(&mut self, t: Termination) {
        self.state = State::Done(t);
    }

    fn round(&mut self) -> Result<(), EngineError> {
        let program = self.program.clone()?;
        self.rounds += 1;
        let mut exec = Exec {
            budget: self.budget,
            cfg: self.opts.eval,
            min_pruned: Rank::INF,
        };
        let out = exec.run(&program, Frontier::initial())?;

        if let Some(m) = out.min() {
            let bound = match out.floor {
                Rank::Finite(f) => Rank::Finite(f - m),
                Rank::Infinite => Rank::INF,
            };
            let mut batch: Vec<(u64, &Valuation)> = out
                .entries
                .iter()
                .map(|(v, &r)| (r - m, v))
                .filter(|&(r, _)| r >= self.level && Rank::Finite(r) < bound)
                .collect();
            batch.sort();
            for (rank, v) in batch {
                if Rank::Finite(rank) > self.opts.max_rank {
                    self.finish(Termination::RankLimit);
                    return Ok(());
                }
                self.pending.push_back(Outcome {
                    valuation: v.clone(),
                    rank,
                });
                self.emitted += 1;
                if self.opts.max_outcomes.is_some_and(|n| self.emitted >= n.get()) {
                    self.finish(Termination::OutcomeLimit);
                    return Ok(());
                }
            }
            match bound {
                Rank::Infinite => {
                    self.finish(Termination::Complete);
                    return Ok(());
                }
                Rank::Finite(b) => {
                    self.level = self.level.max(b);
                    if Rank::Finite(self.level) > self.opts.max_rank {
                        self.finish(Termination::RankLimit);
                        return Ok(());
                    }
                }
            }
        } else if out.floor.is_infinite() {
            self.finish(if self.emitted == 0 {
                Termination::Failure
            } else {
                Termination::Complete
            });
            return Ok(());
        }

        // Skip budgets at which nothing new would survive.
        let next = match exec.min_pruned {
            Rank::Finite(p) => p.max(self.budget + 1),
            Rank::Infinite => self.budget + 1,
        };
        if Rank::Finite(next) > self.opts.max_budget {
            if self.emitted == 0 {
                return Err(EngineError::BudgetExhausted(self.opts.max_budget));
            }
            self.finish(Termination::BudgetLimit);
        }
        self.budget = next;
        Ok(())
    }
}

impl Iterator for OutcomeStream {
    type Item = Result<Outcome, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(o) = self.pending.pop_front() {
                return Some(Ok(o));
            }
            if self.state != State::Running {
                return None;
            }
            if let Err(e) = self.round() {
                self.state = State::Errored;
                return Some(Err(e));
            }
        }
    }
}

/// A truncated unnormalized ranking: `entries` holds exactly the entries
/// with rank below `floor`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Frontier {
    entries: BTreeMap<Valuation, u64>,
    floor: Rank,
}

impl Frontier {
    fn initial() -> Self {
        Frontier {
            entries: BTreeMap::from([(Valuation::initial(), 0)]),
            floor: Rank::INF,
        }
    }

    fn unknown(floor: Rank) -> Self {
        Frontier {
            entries: BTreeMap::new(),
            floor,
        }
    }

    fn min(&self) -> Option<u64> {
        self.entries.values().copied().min()
    }

    fn merge(mut self, other: Frontier) -> Frontier {
        for (v, r) in other.entries {
            self.entries
                .entry(v)
                .and_modify(|old| *old = (*old).min(r))
                .or_insert(r);
        }
        let floor = self.floor.min(other.floor);
        self.entries.retain(|_, r| Rank::Finite(*r) < floor);
        self.floor = floor;
        self
    }

    /// Shifts `self` so its minimum becomes `target`, the minimum of the
    /// input that produced it. With no known entries the result is only
    /// bounded below by `target`.
    fn renormalize(self, target: u64) -> Frontier {
        let Some(m) = self.min() else {
            return match self.floor {
                Rank::Infinite => self,
                Rank::Finite(_) => Frontier::unknown(Rank::Finite(target)),
            };
        };
        let d = m - target;
        if d == 0 {
            return self;
        }
        Frontier {
            entries: self.entries.into_iter().map(|(v, r)| (v, r - d)).collect(),
            floor: match self.floor {
                Rank::Finite(f) => Rank::Finite(f - d),
                Rank::Infinite => Rank::INF,
            },
        }
    }
}

struct FrontierView<'a> {
    frontier: &'a Frontier,
    min: u64,
    cache: RankCache,
}

impl<'a> FrontierView<'a> {
    fn new(frontier: &'a Frontier, min: u64) -> Self {
        FrontierView {
            frontier,
            min,
            cache: RankCache::default(),
        }
    }

    /// Splits the known entries by `b`.
    fn partition(&self, b: &BoolExpr) -> Result<(Frontier, Frontier), ExprFail> {
        let mut yes = Frontier::unknown(self.frontier.floor);
        let mut no = Frontier::unknown(self.frontier.floor);
        for (v, &r) in &self.frontier.entries {
            let side = if expr::holds(self, v, b)? {
                &mut yes
            } else {
                &mut no
            };
            side.entries.insert(v.clone(), r);
        }
        Ok((yes, no))
    }
}

impl RankSource for FrontierView<'_> {
    fn rank_of(&self, cond: &BoolExpr) -> Result<Value, ExprFail> {
        self.cache.get_or(cond, || {
            let mut best: Option<u64> = None;
            for (v, &r) in &self.frontier.entries {
                if best.is_none_or(|b| r < b) && expr::holds(self, v, cond)? {
                    best = Some(r);
                }
            }
            match (best, self.frontier.floor) {
                (Some(b), _) => Ok(Value::Int((b - self.min) as i64)),
                (None, Rank::Infinite) => Ok(Value::Inf),
                (None, Rank::Finite(_)) => Err(ExprFail::Undecided),
            }
        })
    }
}

struct Exec {
    budget: u64,
    cfg: EvalConfig,
    /// Smallest rank dropped this round.
    min_pruned: Rank,
}

/// Outcome of executing one statement on a non-empty frontier.
enum Step {
    Done(Frontier),
    /// Some expression needed ranks beyond the floor.
    Undecided,
}

impl Exec {
    fn run(&mut self, s: &Stmt, f: Frontier) -> Result<Frontier, RuntimeError> {
        // All outputs rank at least as high as the input minimum, so an
        // input with no known entries passes through unchanged.
        let Some(m) = f.min() else { return Ok(f) };
        let floor = f.floor;
        match self.step(s, f, m)? {
            Step::Done(out) => Ok(out),
            Step::Undecided => Ok(Frontier::unknown(floor.min(Rank::Finite(m)))),
        }
    }

    fn step(&mut self, s: &Stmt, f: Frontier, m: u64) -> Result<Step, RuntimeError> {
        let pos = s.pos;
        let err = |kind| RuntimeError::new(kind, pos);
        macro_rules! decide {
            ($e:expr) => {
                match $e {
                    Ok(v) => v,
                    Err(ExprFail::Undecided) => return Ok(Step::Undecided),
                    Err(ExprFail::Error(k)) => return Err(err(k)),
                }
            };
        }

        if let Some(guard) = &s.revision_guard {
            let view = FrontierView::new(&f, m);
            let (yes, no) = decide!(view.partition(guard));
            for side in [&yes, &no] {
                if side.entries.is_empty() {
                    if f.floor.is_infinite() {
                        return Err(err(RuntimeErrorKind::RevisionPrecondition));
                    }
                    return Ok(Step::Undecided);
                }
            }
        }

        let out = match &s.kind {
            StmtKind::Skip => f,
            StmtKind::Seq(a, b) => {
                let mid = self.run(a, f)?;
                self.run(b, mid)?
            }
            StmtKind::Assign(target, e) => {
                let view = FrontierView::new(&f, m);
                let mut out = Frontier::unknown(f.floor);
                for (v, &r) in &f.entries {
                    let key = decide!(eval_key(&view, v, &target.name, &target.indices));
                    let value = decide!(expr::eval_num(&view, v, e));
                    let value = as_storable(value).map_err(err)?;
                    out.entries
                        .entry(v.with(key, value))
                        .and_modify(|old| *old = (*old).min(r))
                        .or_insert(r);
                }
                out
            }
            StmtKind::Observe(b) => {
                let (yes, _) = decide!(FrontierView::new(&f, m).partition(b));
                yes
            }
            StmtKind::If(b, s1, s2) => {
                let (yes, no) = decide!(FrontierView::new(&f, m).partition(b));
                let left = self.branch(s1, yes)?;
                let right = self.branch(s2, no)?;
                left.merge(right)
            }
            StmtKind::Choice(s1, e, s2) => {
                let view = FrontierView::new(&f, m);
                let mut parts: BTreeMap<u64, BTreeMap<Valuation, u64>> = BTreeMap::new();
                for (v, &r) in &f.entries {
                    match decide!(expr::eval_num(&view, v, e)) {
                        Value::Int(n) if n < 0 => {
                            return Err(err(RuntimeErrorKind::NegativeChoiceRank))
                        }
                        Value::Int(n) => {
                            parts.entry(n as u64).or_default().insert(v.clone(), r);
                        }
                        Value::Inf => {}
                    }
                }
                let floor = f.floor;
                let mut out = self.branch(s1, f)?.merge(Frontier::unknown(floor));
                for (offset, entries) in parts {
                    let shifted = self.shift_and_prune(entries, floor, offset, pos)?;
                    out = out.merge(self.branch(s2, shifted)?);
                }
                out
            }
            StmtKind::While(b, body) => self.run_while(b, body, f, pos)?,
            StmtKind::IfThen(..)
            | StmtKind::ChoiceAssign { .. }
            | StmtKind::UniformPick { .. }
            | StmtKind::ObserveJ(..)
            | StmtKind::ObserveL(..) => unreachable!("programs are desugared before enumeration"),
        };
        Ok(Step::Done(out))
    }

    /// Runs a branch scope: the result keeps the minimum of its input.
    fn branch(&mut self, s: &Stmt, part: Frontier) -> Result<Frontier, RuntimeError> {
        let Some(m) = part.min() else { return Ok(part) };
        Ok(self.run(s, part)?.renormalize(m))
    }

    /// Adds `offset` to a choice part and drops entries above the budget.
    fn shift_and_prune(
        &mut self,
        entries: BTreeMap<Valuation, u64>,
        floor: Rank,
        offset: u64,
        pos: crate::ast::Pos,
    ) -> Result<Frontier, RuntimeError> {
        let overflow = |_| RuntimeError::new(RuntimeErrorKind::IntegerOverflow, pos);
        let mut out = Frontier::unknown(
            floor
                .checked_add(Rank::Finite(offset))
                .unwrap_or(Rank::Finite(MAX_FINITE)),
        );
        for (v, r) in entries {
            let shifted = Rank::Finite(r)
                .checked_add(Rank::Finite(offset))
                .map_err(overflow)?;
            let r = shifted.finite().expect("finite sum");
            if r > self.budget {
                self.min_pruned = self.min_pruned.min(shifted);
                out.floor = out.floor.min(shifted);
            } else {
                out.entries.insert(v, r);
            }
        }
        out.entries.retain(|_, r| Rank::Finite(*r) < out.floor);
        Ok(out)
    }

    /// Iterates `if b then body else skip` until no known entry satisfies
    /// `b`.
    fn run_while(
        &mut self,
        b: &BoolExpr,
        body: &Stmt,
        mut f: Frontier,
        pos: crate::ast::Pos,
    ) -> Result<Frontier, RuntimeError> {
        let mut iterations = 0u64;
        loop {
            let Some(m) = f.min() else { return Ok(f) };
            let split = FrontierView::new(&f, m).partition(b);
            let (yes, no) = match split {
                Ok(parts) => parts,
                Err(ExprFail::Undecided) => return Ok(Frontier::unknown(f.floor.min(Rank::Finite(m)))),
                Err(ExprFail::Error(k)) => return Err(RuntimeError::new(k, pos)),
            };
            if yes.entries.is_empty() {
                return Ok(f);
            }
            if iterations >= self.cfg.max_while_iterations() {
                return Err(RuntimeError::new(RuntimeErrorKind::IterationLimit, pos));
            }
            iterations += 1;
            f = self.branch(body, yes)?.merge(no);
        }
    }
}
