//! Ranking functions over program states.
//!
//! A [`Ranking`] maps finitely many [`Valuation`]s to finite ranks; every
//! valuation not stored has rank infinity. Non-failure rankings are always
//! normalized (some valuation has rank 0). The failure ranking, which assigns
//! infinity everywhere, is the ranking with empty support.
//!
//! All operations are pure and evaluate events extensionally over the
//! support of the ranking they are applied to.

mod rank;
mod valuation;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use rank::{Rank, RankError, MAX_FINITE};
pub use valuation::{Valuation, VarKey};

/// An unnormalized map from valuations to finite ranks (absent = infinity).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RankMap {
    entries: BTreeMap<Valuation, u64>,
}

impl RankMap {
    pub fn new() -> Self {
        RankMap::default()
    }

    /// Inserts `v` at `rank`, keeping the smaller rank on collision.
    /// Infinite ranks are ignored.
    pub fn insert_min(&mut self, v: Valuation, rank: Rank) {
        let Some(r) = rank.finite() else { return };
        self.entries
            .entry(v)
            .and_modify(|old| *old = (*old).min(r))
            .or_insert(r);
    }

    pub fn get(&self, v: &Valuation) -> Rank {
        self.entries.get(v).map_or(Rank::INF, |&r| Rank::Finite(r))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Valuation, Rank)> {
        self.entries.iter().map(|(v, &r)| (v, Rank::Finite(r)))
    }

    /// Minimum over all entries; infinity when empty.
    pub fn min_rank(&self) -> Rank {
        self.entries
            .values()
            .min()
            .map_or(Rank::INF, |&r| Rank::Finite(r))
    }

    /// Adds `by` to every entry. Shifting by infinity empties the map.
    pub fn shifted(self, by: Rank) -> Result<RankMap, RankError> {
        let Some(by) = by.finite() else {
            return Ok(RankMap::new());
        };
        if by == 0 {
            return Ok(self);
        }
        let mut entries = BTreeMap::new();
        for (v, r) in self.entries {
            let shifted = Rank::Finite(r).checked_add(Rank::Finite(by))?;
            entries.insert(v, shifted.finite().expect("finite sum"));
        }
        Ok(RankMap { entries })
    }
}

impl FromIterator<(Valuation, Rank)> for RankMap {
    fn from_iter<I: IntoIterator<Item = (Valuation, Rank)>>(iter: I) -> Self {
        let mut map = RankMap::new();
        for (v, r) in iter {
            map.insert_min(v, r);
        }
        map
    }
}

impl From<Ranking> for RankMap {
    fn from(k: Ranking) -> Self {
        RankMap { entries: k.entries }
    }
}

/// A normalized ranking function, or the failure ranking.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking {
    entries: BTreeMap<Valuation, u64>,
}

impl Ranking {
    /// The failure ranking: infinity everywhere.
    pub fn failure() -> Self {
        Ranking {
            entries: BTreeMap::new(),
        }
    }

    /// The initial ranking: the all-zero valuation at rank 0.
    pub fn initial() -> Self {
        Ranking::point(Valuation::initial())
    }

    /// The ranking that is certain of `v`.
    pub fn point(v: Valuation) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(v, 0);
        Ranking { entries }
    }

    /// Normalizes arbitrary `(valuation, rank)` pairs (collisions keep the min).
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Valuation, u64)>) -> Self {
        normalize(
            pairs
                .into_iter()
                .map(|(v, r)| (v, Rank::Finite(r)))
                .collect(),
        )
    }

    pub fn is_failure(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, v: &Valuation) -> Rank {
        self.entries.get(v).map_or(Rank::INF, |&r| Rank::Finite(r))
    }

    /// Support in valuation order.
    pub fn iter(&self) -> impl Iterator<Item = (&Valuation, u64)> {
        self.entries.iter().map(|(v, &r)| (v, r))
    }

    pub fn support(&self) -> impl Iterator<Item = &Valuation> {
        self.entries.keys()
    }

    /// Support sorted by ascending rank, ties broken by valuation order.
    pub fn by_rank(&self) -> Vec<(&Valuation, u64)> {
        let mut out: Vec<_> = self.iter().collect();
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        out
    }

    /// Largest stored rank, or `None` for the failure ranking.
    pub fn max_rank(&self) -> Option<u64> {
        self.entries.values().max().copied()
    }

    /// Entries of rank at most `bound`, as a (possibly unnormalized) map.
    pub fn slice(&self, bound: u64) -> RankMap {
        self.iter()
            .filter(|(_, r)| *r <= bound)
            .map(|(v, r)| (v.clone(), Rank::Finite(r)))
            .collect()
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_failure() {
            return f.write_str("FAILURE");
        }
        for (i, (v, r)) in self.by_rank().into_iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}:{r}")?;
        }
        Ok(())
    }
}

/// A set of valuations, represented extensionally.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Event {
    members: BTreeSet<Valuation>,
}

impl Event {
    pub fn empty() -> Self {
        Event::default()
    }

    /// The whole support of `k`.
    pub fn everything(k: &Ranking) -> Self {
        k.support().cloned().collect()
    }

    /// Support members of `k` satisfying `pred`.
    pub fn select(k: &Ranking, mut pred: impl FnMut(&Valuation) -> bool) -> Self {
        k.support().filter(|v| pred(v)).cloned().collect()
    }

    /// Complement relative to the support of `k`.
    pub fn complement_in(&self, k: &Ranking) -> Self {
        Event::select(k, |v| !self.contains(v))
    }

    pub fn contains(&self, v: &Valuation) -> bool {
        self.members.contains(v)
    }

    pub fn union(&self, other: &Event) -> Event {
        self.members.union(&other.members).cloned().collect()
    }

    pub fn intersection(&self, other: &Event) -> Event {
        self.members.intersection(&other.members).cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Valuation> {
        self.members.iter()
    }
}

impl FromIterator<Valuation> for Event {
    fn from_iter<I: IntoIterator<Item = Valuation>>(iter: I) -> Self {
        Event {
            members: iter.into_iter().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum RevisionError {
    /// Generalized conditioning needs both the event and its complement to
    /// be possible.
    #[error("J-conditioning undefined: event or its complement has infinite rank")]
    Undefined,
    #[error("revision strength must be finite")]
    InfiniteStrength,
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// `κ(A)`: the minimum rank of a member of `event`; infinity if none.
pub fn rank_of(k: &Ranking, event: &Event) -> Rank {
    k.iter()
        .filter(|(v, _)| event.contains(v))
        .map(|(_, r)| Rank::Finite(r))
        .min()
        .unwrap_or(Rank::INF)
}

/// `‖λ‖`: subtracts the minimum rank. An empty map normalizes to failure.
pub fn normalize(raw: RankMap) -> Ranking {
    let Some(min) = raw.min_rank().finite() else {
        return Ranking::failure();
    };
    let entries = raw.entries.into_iter().map(|(v, r)| (v, r - min)).collect();
    Ranking { entries }
}

/// Pointwise minimum; the support is the union of the supports.
pub fn min_merge(a: RankMap, b: RankMap) -> RankMap {
    let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    for (v, r) in small.entries {
        big.insert_min(v, Rank::Finite(r));
    }
    big
}

/// `κ_A`: members of `event` shifted down by `κ(A)`, everything else dropped.
pub fn condition(k: &Ranking, event: &Event) -> Ranking {
    let Some(base) = rank_of(k, event).finite() else {
        return Ranking::failure();
    };
    let entries = k
        .iter()
        .filter(|(v, _)| event.contains(v))
        .map(|(v, r)| (v.clone(), r - base))
        .collect();
    Ranking { entries }
}

/// Makes `event` believed with firmness exactly `strength`:
/// `κ_{A→x}(B) = min(κ(B|A), κ(B|Ā) + x)`.
pub fn j_condition(k: &Ranking, event: &Event, strength: Rank) -> Result<Ranking, RevisionError> {
    let x = strength.finite().ok_or(RevisionError::InfiniteStrength)?;
    let (in_rank, out_rank) = split_ranks(k, event)?;
    let mut entries = BTreeMap::new();
    for (v, r) in k.iter() {
        let new = if event.contains(v) {
            r - in_rank
        } else {
            Rank::Finite(r - out_rank)
                .checked_add(Rank::Finite(x))?
                .finite()
                .expect("finite sum")
        };
        entries.insert(v.clone(), new);
    }
    Ok(Ranking { entries })
}

/// Improves `event` by `strength` ranks relative to its complement:
/// `κ_{A↑x}(B) = min(κ(A∩B) − y, κ(Ā∩B) + x − y)` with `y = min(κ(A), x)`.
pub fn l_condition(k: &Ranking, event: &Event, strength: Rank) -> Result<Ranking, RevisionError> {
    let x = strength.finite().ok_or(RevisionError::InfiniteStrength)?;
    let (in_rank, _) = split_ranks(k, event)?;
    let y = in_rank.min(x);
    let mut entries = BTreeMap::new();
    for (v, r) in k.iter() {
        let new = if event.contains(v) {
            r - y
        } else {
            Rank::Finite(r)
                .checked_add(Rank::Finite(x - y))?
                .finite()
                .expect("finite sum")
        };
        entries.insert(v.clone(), new);
    }
    Ok(Ranking { entries })
}

/// The firmness with which `event` is believed: the rank of its complement.
pub fn firmness(k: &Ranking, event: &Event) -> Rank {
    k.iter()
        .filter(|(v, _)| !event.contains(v))
        .map(|(_, r)| Rank::Finite(r))
        .min()
        .unwrap_or(Rank::INF)
}

/// Projects onto the named variables; each projected state gets the minimum
/// rank of the states agreeing with it.
pub fn marginalize<S: AsRef<str>>(k: &Ranking, vars: &[S]) -> Ranking {
    let keep: BTreeSet<&str> = vars.iter().map(AsRef::as_ref).collect();
    let raw: RankMap = k
        .iter()
        .map(|(v, r)| (v.restrict(|name| keep.contains(name)), Rank::Finite(r)))
        .collect();
    normalize(raw)
}

fn split_ranks(k: &Ranking, event: &Event) -> Result<(u64, u64), RevisionError> {
    let inside = rank_of(k, event).finite();
    let outside = firmness(k, event).finite();
    match (inside, outside) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(RevisionError::Undefined),
    }
}
