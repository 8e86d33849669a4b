//! Test support: an independent path-list interpreter, pointwise revision
//! formulas, and seeded random generators for rankings and programs.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rankpl::ast::{desugar, BoolExpr, CmpOp, NumExpr, NumOp, Stmt, StmtKind};
use rankpl::ranking::{Ranking, Valuation, VarKey};
use rankpl::value::Value;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// True when `k` is failure or has minimum rank exactly 0.
pub fn is_normalized(k: &Ranking) -> bool {
    k.is_failure() || k.iter().map(|(_, r)| r).min() == Some(0)
}

// ---------------------------------------------------------------------------
// Path-list oracle.
//
// The state is a list of (valuation, accumulated rank) paths, never merged
// until the end. Observes filter paths; every if/choice branch has its
// output shifted so its minimum equals the minimum of the paths that went
// in, plus the choice offset.

type State = BTreeMap<(String, Vec<i64>), i64>;

#[derive(Clone, Debug)]
struct Path {
    state: State,
    rank: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum V {
    I(i64),
    Inf,
}

pub const ORACLE_LOOP_LIMIT: u64 = 10_000;

/// Runs `s` from the initial state. `Err` carries a short reason.
pub fn oracle_run(s: &Stmt) -> Result<Ranking, String> {
    let core = desugar(s).map_err(|e| e.to_string())?;
    let start = vec![Path {
        state: State::new(),
        rank: 0,
    }];
    let paths = exec(&core, start)?;
    Ok(Ranking::from_pairs(paths.into_iter().map(|p| {
        let mut v = Valuation::initial();
        for ((name, idx), x) in p.state {
            v.set(VarKey::new(name.as_str(), idx), x);
        }
        (v, p.rank)
    })))
}

fn min_rank(paths: &[Path]) -> Option<u64> {
    paths.iter().map(|p| p.rank).min()
}

fn rescope(mut out: Vec<Path>, target: u64) -> Vec<Path> {
    if let Some(m) = min_rank(&out) {
        for p in &mut out {
            p.rank = p.rank - m + target;
        }
    }
    out
}

fn exec(s: &Stmt, paths: Vec<Path>) -> Result<Vec<Path>, String> {
    if paths.is_empty() {
        return Ok(paths);
    }
    if let Some(g) = &s.revision_guard {
        let mut yes = false;
        let mut no = false;
        for p in &paths {
            if test(&paths, &p.state, g)? {
                yes = true;
            } else {
                no = true;
            }
        }
        if !(yes && no) {
            return Err("revision precondition".into());
        }
    }
    match &s.kind {
        StmtKind::Skip => Ok(paths),
        StmtKind::Seq(a, b) => exec(b, exec(a, paths)?),
        StmtKind::Assign(t, e) => {
            let mut out = Vec::with_capacity(paths.len());
            for p in &paths {
                let mut idx = Vec::new();
                for i in &t.indices {
                    idx.push(int(num(&paths, &p.state, i)?)?);
                }
                let x = int(num(&paths, &p.state, e)?)?;
                let mut state = p.state.clone();
                state.insert((t.name.clone(), idx), x);
                out.push(Path {
                    state,
                    rank: p.rank,
                });
            }
            Ok(out)
        }
        StmtKind::Observe(b) => {
            let mut out = Vec::new();
            for p in &paths {
                if test(&paths, &p.state, b)? {
                    out.push(p.clone());
                }
            }
            Ok(out)
        }
        StmtKind::If(b, s1, s2) => {
            let (mut yes, mut no) = (Vec::new(), Vec::new());
            for p in &paths {
                if test(&paths, &p.state, b)? {
                    yes.push(p.clone());
                } else {
                    no.push(p.clone());
                }
            }
            let mut out = Vec::new();
            for (part, body) in [(yes, s1), (no, s2)] {
                if let Some(m) = min_rank(&part) {
                    out.extend(rescope(exec(body, part)?, m));
                }
            }
            Ok(out)
        }
        StmtKind::Choice(s1, e, s2) => {
            let mut groups: BTreeMap<u64, Vec<Path>> = BTreeMap::new();
            for p in &paths {
                match num(&paths, &p.state, e)? {
                    V::I(n) if n < 0 => return Err("negative choice rank".into()),
                    V::I(n) => groups.entry(n as u64).or_default().push(p.clone()),
                    V::Inf => {}
                }
            }
            let m = min_rank(&paths).expect("non-empty");
            let mut out = rescope(exec(s1, paths)?, m);
            for (offset, group) in groups {
                let gm = min_rank(&group).expect("non-empty group");
                out.extend(rescope(exec(s2, group)?, gm + offset));
            }
            Ok(out)
        }
        StmtKind::While(b, body) => {
            let step = Stmt::ite(b.clone(), (**body).clone(), Stmt::skip());
            let mut cur = paths;
            let mut n = 0;
            loop {
                let mut any = false;
                for p in &cur {
                    if test(&cur, &p.state, b)? {
                        any = true;
                        break;
                    }
                }
                if !any {
                    return Ok(cur);
                }
                n += 1;
                if n > ORACLE_LOOP_LIMIT {
                    return Err("iteration limit".into());
                }
                cur = exec(&step, cur)?;
            }
        }
        _ => Err("sugar after desugaring".into()),
    }
}

fn int(v: V) -> Result<i64, String> {
    match v {
        V::I(n) => Ok(n),
        V::Inf => Err("infinity stored".into()),
    }
}

fn rank_in(paths: &[Path], b: &BoolExpr) -> Result<V, String> {
    let all = min_rank(paths).expect("rank of an empty path list");
    let mut best = None;
    for p in paths {
        if test(paths, &p.state, b)? {
            best = Some(best.map_or(p.rank, |x: u64| x.min(p.rank)));
        }
    }
    Ok(best.map_or(V::Inf, |r| V::I((r - all) as i64)))
}

fn num(paths: &[Path], st: &State, e: &NumExpr) -> Result<V, String> {
    match e {
        NumExpr::Lit(Value::Int(n)) => Ok(V::I(*n)),
        NumExpr::Lit(Value::Inf) => Ok(V::Inf),
        NumExpr::Var(name, idx) => {
            let mut key = Vec::new();
            for i in idx {
                key.push(int(num(paths, st, i)?)?);
            }
            Ok(V::I(*st.get(&(name.clone(), key)).unwrap_or(&0)))
        }
        NumExpr::RankOf(b) => rank_in(paths, b),
        NumExpr::Bin(op, a, b) => {
            let a = num(paths, st, a)?;
            let b = num(paths, st, b)?;
            arith(*op, a, b)
        }
    }
}

fn arith(op: NumOp, a: V, b: V) -> Result<V, String> {
    let (a, b) = match (a, b) {
        (V::I(a), V::I(b)) => (a, b),
        (V::Inf, V::I(_)) if matches!(op, NumOp::Add | NumOp::Sub) => return Ok(V::Inf),
        (_, V::Inf) | (V::Inf, _) if op == NumOp::Add => return Ok(V::Inf),
        _ => return Err("undefined infinity arithmetic".into()),
    };
    let overflow = || "overflow".to_string();
    let r = match op {
        NumOp::Add => a.checked_add(b).ok_or_else(overflow)?,
        NumOp::Sub => a.checked_sub(b).ok_or_else(overflow)?,
        NumOp::Mul => a.checked_mul(b).ok_or_else(overflow)?,
        NumOp::Div if b == 0 => return Err("division by zero".into()),
        NumOp::Div => a.checked_div(b).ok_or_else(overflow)?,
        NumOp::Mod if b == 0 => return Err("division by zero".into()),
        NumOp::Mod => a.checked_rem_euclid(b).ok_or_else(overflow)?,
        _ if !(0..=1).contains(&a) || !(0..=1).contains(&b) => {
            return Err("bit op on non-bit".into())
        }
        NumOp::Xor => (a != b) as i64,
        NumOp::BitAnd => (a == 1 && b == 1) as i64,
        NumOp::BitOr => (a == 1 || b == 1) as i64,
    };
    Ok(V::I(r))
}

fn test(paths: &[Path], st: &State, b: &BoolExpr) -> Result<bool, String> {
    Ok(match b {
        BoolExpr::Not(x) => !test(paths, st, x)?,
        BoolExpr::Or(x, y) => test(paths, st, x)? || test(paths, st, y)?,
        BoolExpr::And(x, y) => test(paths, st, x)? && test(paths, st, y)?,
        BoolExpr::Cmp(op, x, y) => {
            let (x, y) = (num(paths, st, x)?, num(paths, st, y)?);
            match op {
                CmpOp::Eq => x == y,
                CmpOp::Ne => x != y,
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Pointwise revision formulas over plain maps.

pub type Table = BTreeMap<Valuation, u64>;

pub fn table(k: &Ranking) -> Table {
    k.iter().map(|(v, r)| (v.clone(), r)).collect()
}

/// `min(κ(σ|A), κ(σ|Ā) + x)` for each σ.
pub fn j_table(k: &Table, a: impl Fn(&Valuation) -> bool, x: u64) -> Table {
    let ka = k.iter().filter(|(v, _)| a(v)).map(|(_, &r)| r).min().unwrap();
    let kna = k.iter().filter(|(v, _)| !a(v)).map(|(_, &r)| r).min().unwrap();
    k.iter()
        .map(|(v, &r)| (v.clone(), if a(v) { r - ka } else { r - kna + x }))
        .collect()
}

/// `min(κ(A∩σ) − y, κ(Ā∩σ) + x − y)` with `y = min(κ(A), x)`.
pub fn l_table(k: &Table, a: impl Fn(&Valuation) -> bool, x: u64) -> Table {
    let ka = k.iter().filter(|(v, _)| a(v)).map(|(_, &r)| r).min().unwrap();
    let y = ka.min(x);
    k.iter()
        .map(|(v, &r)| (v.clone(), if a(v) { r - y } else { r + x - y }))
        .collect()
}

// ---------------------------------------------------------------------------
// Random rankings.

/// A random normalized ranking over `(x, y)` with `x, y < side`.
pub fn random_table(rng: &mut impl Rng, side: i64, max_rank: u64) -> Table {
    let mut cells: Vec<(i64, i64)> = (0..side)
        .flat_map(|x| (0..side).map(move |y| (x, y)))
        .collect();
    cells.shuffle(rng);
    let n = rng.gen_range(2..=cells.len());
    let mut t = Table::new();
    for &(x, y) in &cells[..n] {
        let v: Valuation = [("x", x), ("y", y)].into_iter().collect();
        t.insert(v, rng.gen_range(0..=max_rank));
    }
    let m = *t.values().min().unwrap();
    t.values_mut().for_each(|r| *r -= m);
    t
}

pub fn table_ranking(t: &Table) -> Ranking {
    Ranking::from_pairs(t.iter().map(|(v, &r)| (v.clone(), r)))
}

/// A program whose result from the initial state is exactly `t`: a right
/// nested choice over the entries in ascending rank.
pub fn encode_table(t: &Table) -> String {
    let mut entries: Vec<(&Valuation, u64)> = t.iter().map(|(v, &r)| (v, r)).collect();
    entries.sort_by_key(|&(v, r)| (r, v.clone()));
    fn assigns(v: &Valuation) -> String {
        let x = v.get_scalar("x");
        let y = v.get_scalar("y");
        format!("x := {x}; y := {y}")
    }
    let (last_v, _) = entries[entries.len() - 1];
    let mut src = format!("{{ {} }}", assigns(last_v));
    for i in (0..entries.len() - 1).rev() {
        let gap = entries[i + 1].1 - entries[i].1;
        src = format!("{{ either {{ {} }} or ({gap}) {src} }}", assigns(entries[i].0));
    }
    src
}

/// A random condition over `x` and `y`, as source text.
pub fn random_condition(rng: &mut impl Rng, side: i64) -> String {
    let atom = |rng: &mut ChaCha8Rng| {
        let var = if rng.gen_bool(0.5) { "x" } else { "y" };
        let op = ["==", "!=", "<", "<=", ">", ">="][rng.gen_range(0..6)];
        format!("{var} {op} {}", rng.gen_range(0..side))
    };
    let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
    match r.gen_range(0..4) {
        0 => atom(&mut r),
        1 => format!("{} && {}", atom(&mut r), atom(&mut r)),
        2 => format!("{} || {}", atom(&mut r), atom(&mut r)),
        _ => format!("!({})", atom(&mut r)),
    }
}

// ---------------------------------------------------------------------------
// Random loop-free programs.

pub struct ProgramGen<R> {
    rng: R,
    vars: Vec<&'static str>,
    pub max_choice_depth: u32,
    pub rank_exprs: bool,
}

impl<R: Rng> ProgramGen<R> {
    pub fn new(rng: R, n_vars: usize) -> Self {
        let vars = ["a", "b", "c", "d", "e"];
        ProgramGen {
            rng,
            vars: vars[..n_vars.clamp(1, 5)].to_vec(),
            max_choice_depth: 6,
            rank_exprs: true,
        }
    }

    /// A sequence of top-level statements, starting from a ranked choice
    /// over every variable.
    pub fn program(&mut self) -> String {
        let mut stmts: Vec<String> = Vec::new();
        for v in self.vars.clone() {
            let r = self.rng.gen_range(0..3);
            let (a, b) = (self.rng.gen_range(0..3), self.rng.gen_range(0..3));
            stmts.push(format!("{v} := {a} or ({r}) {b}"));
        }
        let n = self.rng.gen_range(1..=5);
        stmts.extend((0..n).map(|_| self.stmt(0, 2)));
        stmts.join(";\n")
    }

    fn var(&mut self) -> &'static str {
        self.vars[self.rng.gen_range(0..self.vars.len())]
    }

    fn expr(&mut self, depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.5);
        if leaf {
            return if self.rng.gen_bool(0.5) {
                self.rng.gen_range(0..4).to_string()
            } else {
                self.var().to_string()
            };
        }
        let op = ["+", "*", "%"][self.rng.gen_range(0..3)];
        let a = self.expr(depth - 1);
        if op == "%" {
            return format!("({a} % {})", self.rng.gen_range(1..4));
        }
        let b = self.expr(depth - 1);
        format!("({a} {op} {b})")
    }

    fn cond(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..10) {
            0 if depth > 0 => format!("!({})", self.cond(depth - 1)),
            1 if depth > 0 => format!("({} || {})", self.cond(depth - 1), self.cond(depth - 1)),
            2 if depth > 0 => format!("({} && {})", self.cond(depth - 1), self.cond(depth - 1)),
            3 if self.rank_exprs && depth > 0 => {
                let op = ["<", "<=", "==", ">"][self.rng.gen_range(0..4)];
                format!("rank({}) {op} {}", self.cond(depth - 1), self.rng.gen_range(0..3))
            }
            _ => {
                let op = ["==", "!=", "<", "<=", ">", ">="][self.rng.gen_range(0..6)];
                format!("{} {op} {}", self.expr(1), self.expr(1))
            }
        }
    }

    fn offset(&mut self) -> String {
        match self.rng.gen_range(0..8) {
            0 if self.rank_exprs => format!("rank({})", self.cond(1)),
            1 if self.rank_exprs => format!("rank({}) + {}", self.cond(1), self.rng.gen_range(0..3)),
            2 => self.var().to_string(),
            _ => self.rng.gen_range(0..4).to_string(),
        }
    }

    fn stmt(&mut self, choice_depth: u32, nest: u32) -> String {
        let can_choose = choice_depth < self.max_choice_depth;
        match self.rng.gen_range(0..12) {
            0..=2 => format!("{} := {}", self.var(), self.expr(2)),
            3 | 4 if can_choose => {
                let v = self.var();
                format!("{v} := {} or ({}) {}", self.expr(1), self.offset(), self.expr(1))
            }
            5 | 6 if can_choose && nest > 0 => format!(
                "either {{ {} }} or ({}) {{ {} }}",
                self.block(choice_depth + 1, nest - 1),
                self.offset(),
                self.block(choice_depth + 1, nest - 1)
            ),
            7 | 8 if nest > 0 => format!(
                "if {} then {{ {} }} else {{ {} }}",
                self.cond(1),
                self.block(choice_depth, nest - 1),
                self.block(choice_depth, nest - 1)
            ),
            9 => {
                let op = ["==", "!=", "<", ">"][self.rng.gen_range(0..4)];
                format!("observe {} {op} {}", self.var(), self.rng.gen_range(0..3))
            }
            10 => format!("observe {}", self.cond(1)),
            _ => "skip".to_string(),
        }
    }

    fn block(&mut self, choice_depth: u32, nest: u32) -> String {
        let n = self.rng.gen_range(1..=2);
        let stmts: Vec<String> = (0..n).map(|_| self.stmt(choice_depth, nest)).collect();
        stmts.join("; ")
    }
}
