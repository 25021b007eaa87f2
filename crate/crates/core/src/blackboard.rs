//! Registry of externally owned variables and zero-argument function outputs
//! that conditions read, frozen into a [`Snapshot`] once per tick.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::model::{Condition, ValueMode};
use crate::scalar::Scalar;

/// Address of one readable value. The same `(source, name)` pair may exist
/// independently under both modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub source: String,
    pub name: String,
    pub mode: ValueMode,
}

impl VarKey {
    pub fn property(source: &str, name: &str) -> Self {
        VarKey {
            source: source.to_owned(),
            name: name.to_owned(),
            mode: ValueMode::Property,
        }
    }

    pub fn function(source: &str, name: &str) -> Self {
        VarKey {
            mode: ValueMode::Function,
            ..VarKey::property(source, name)
        }
    }

    pub fn of(condition: &Condition) -> Self {
        VarKey {
            source: condition.source.clone(),
            name: condition.name.clone(),
            mode: condition.mode,
        }
    }
}

/// Borrowed view of a key, so lookups by condition need no allocation.
trait KeyParts {
    fn parts(&self) -> (&str, &str, ValueMode);
}

impl KeyParts for VarKey {
    fn parts(&self) -> (&str, &str, ValueMode) {
        (&self.source, &self.name, self.mode)
    }
}

impl KeyParts for Condition {
    fn parts(&self) -> (&str, &str, ValueMode) {
        (&self.source, &self.name, self.mode)
    }
}

impl<'a> Borrow<dyn KeyParts + 'a> for VarKey {
    fn borrow(&self) -> &(dyn KeyParts + 'a) {
        self
    }
}

impl PartialEq for dyn KeyParts + '_ {
    fn eq(&self, other: &Self) -> bool {
        self.parts() == other.parts()
    }
}

impl Eq for dyn KeyParts + '_ {}

impl PartialOrd for dyn KeyParts + '_ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for dyn KeyParts + '_ {
    fn cmp(&self, other: &Self) -> Ordering {
        self.parts().cmp(&other.parts())
    }
}

/// Formats as a trace address: `source.name` or `source.name()`.
impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            ValueMode::Property => write!(f, "{}.{}", self.source, self.name),
            ValueMode::Function => write!(f, "{}.{}()", self.source, self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed address `{0}` (expected `source.name` or `source.name()`)")]
pub struct AddressError(pub String);

impl FromStr for VarKey {
    type Err = AddressError;

    fn from_str(address: &str) -> Result<Self, AddressError> {
        let bad = || AddressError(address.to_owned());
        let (source, rest) = address.split_once('.').ok_or_else(bad)?;
        let (name, mode) = match rest.strip_suffix("()") {
            Some(name) => (name, ValueMode::Function),
            None => (rest, ValueMode::Property),
        };
        let valid = |s: &str| !s.is_empty() && !s.contains(['.', '(', ')']) && !s.contains(char::is_whitespace);
        if !valid(source) || !valid(name) {
            return Err(bad());
        }
        Ok(VarKey {
            source: source.to_owned(),
            name: name.to_owned(),
            mode,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("non-finite value for `{0}`")]
pub struct NonFiniteValue(pub VarKey);

/// Mutable variable store. Values persist until overwritten.
///
/// Writes are copy-on-write against the last snapshot, so taking a snapshot
/// is cheap and never observes later writes.
#[derive(Debug, Clone, Default)]
pub struct Blackboard {
    entries: Arc<BTreeMap<VarKey, Scalar>>,
}

impl Blackboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_var(&mut self, key: VarKey, value: Scalar) -> Result<(), NonFiniteValue> {
        if !value.is_finite() {
            return Err(NonFiniteValue(key));
        }
        Arc::make_mut(&mut self.entries).insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &VarKey) -> Option<&Scalar> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarKey, &Scalar)> {
        self.entries.iter()
    }

    pub fn snapshot(&self, tick: u64) -> Snapshot {
        Snapshot {
            tick,
            entries: Arc::clone(&self.entries),
        }
    }
}

/// Immutable view of the blackboard at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    tick: u64,
    entries: Arc<BTreeMap<VarKey, Scalar>>,
}

impl Snapshot {
    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Returns the stored value, or `None` when the key is missing.
    pub fn read(&self, key: &VarKey) -> Option<&Scalar> {
        self.entries.get(key)
    }

    /// Reads the value a condition refers to.
    pub fn read_for(&self, condition: &Condition) -> Option<&Scalar> {
        self.entries.get(condition as &dyn KeyParts)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarKey, &Scalar)> {
        self.entries.iter()
    }
}

impl FromIterator<(VarKey, Scalar)> for Snapshot {
    /// Builds a tick-0 snapshot directly; non-finite reals are dropped.
    fn from_iter<I: IntoIterator<Item = (VarKey, Scalar)>>(iter: I) -> Self {
        let mut bb = Blackboard::new();
        for (k, v) in iter {
            let _ = bb.set_var(k, v);
        }
        bb.snapshot(0)
    }
}
