//! Name-keyed registries of interchangeable strategy implementations.
//!
//! Every pluggable family in the crate (crypto suites, verifier-election
//! rules, node verification policies) exposes a `static` [`Registry`] of
//! trait objects. Configuration and the command line select an entry by
//! name; the selected entry travels around as a [`Handle`], which compares
//! and prints by name so it can live inside plain-data config structs.

use std::fmt;

/// Anything that can be looked up by name in a [`Registry`].
pub trait Named: Send + Sync {
    fn name(&self) -> &'static str;
}

/// A fixed set of named implementations of some trait `T`.
pub struct Registry<T: ?Sized + 'static> {
    kind: &'static str,
    entries: &'static [&'static T],
}

impl<T: ?Sized + Named + 'static> Registry<T> {
    pub const fn new(kind: &'static str, entries: &'static [&'static T]) -> Self {
        Self { kind, entries }
    }

    /// What this registry holds, e.g. `"election strategy"`.
    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn get(&self, name: &str) -> Result<Handle<T>, UnknownName> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| Handle(*e))
            .ok_or_else(|| UnknownName {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|e| e.name())
    }

    pub fn iter(&self) -> impl Iterator<Item = Handle<T>> + '_ {
        self.entries.iter().map(|e| Handle(*e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{name}` (known: {known})")]
pub struct UnknownName {
    pub kind: &'static str,
    pub name: String,
    pub known: String,
}

/// A selected registry entry.
pub struct Handle<T: ?Sized + 'static>(&'static T);

impl<T: ?Sized + Named> Handle<T> {
    pub fn name(&self) -> &'static str {
        self.0.name()
    }
}

impl<T: ?Sized> Clone for Handle<T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T: ?Sized> Copy for Handle<T> {}

impl<T: ?Sized> std::ops::Deref for Handle<T> {
    type Target = T;

    fn deref(&self) -> &T {
        self.0
    }
}

impl<T: ?Sized + Named> PartialEq for Handle<T> {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl<T: ?Sized + Named> Eq for Handle<T> {}

impl<T: ?Sized + Named> fmt::Debug for Handle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl<T: ?Sized + Named> fmt::Display for Handle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
