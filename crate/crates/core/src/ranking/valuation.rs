use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// A variable name together with its (possibly empty) index path, `a[1][2]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarKey {
    name: Arc<str>,
    indices: Vec<i64>,
}

impl VarKey {
    pub fn new(name: impl Into<Arc<str>>, indices: Vec<i64>) -> Self {
        VarKey {
            name: name.into(),
            indices,
        }
    }

    pub fn scalar(name: impl Into<Arc<str>>) -> Self {
        VarKey::new(name, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for i in &self.indices {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

/// A program state. Total: unbound keys read as 0.
///
/// Only non-zero bindings are stored, so structural equality and ordering
/// coincide with "agree on every variable". The derived ordering is the
/// lexicographic order on sorted non-zero bindings, which the engine uses
/// to break ties between equally ranked outcomes.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation {
    bindings: BTreeMap<VarKey, i64>,
}

impl Valuation {
    /// The initial valuation: every variable is 0.
    pub fn initial() -> Self {
        Valuation::default()
    }

    pub fn get(&self, key: &VarKey) -> i64 {
        self.bindings.get(key).copied().unwrap_or(0)
    }

    pub fn get_scalar(&self, name: &str) -> i64 {
        self.get(&VarKey::scalar(name))
    }

    pub fn set(&mut self, key: VarKey, value: i64) {
        if value == 0 {
            self.bindings.remove(&key);
        } else {
            self.bindings.insert(key, value);
        }
    }

    /// `σ[x → n]`.
    pub fn with(&self, key: VarKey, value: i64) -> Self {
        let mut out = self.clone();
        out.set(key, value);
        out
    }

    /// Non-zero bindings in key order.
    pub fn bindings(&self) -> impl Iterator<Item = (&VarKey, i64)> {
        self.bindings.iter().map(|(k, v)| (k, *v))
    }

    pub fn is_initial(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Keeps only bindings whose variable name satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        Valuation {
            bindings: self
                .bindings
                .iter()
                .filter(|(k, _)| keep(k.name()))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }
}

impl<K: Into<Arc<str>>> FromIterator<(K, i64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (K, i64)>>(iter: I) -> Self {
        let mut v = Valuation::default();
        for (name, value) in iter {
            v.set(VarKey::scalar(name), value);
        }
        v
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}
