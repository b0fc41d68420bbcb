//! Name-keyed registries for interchangeable strategies.
//!
//! Each strategy family (nonlocal energy evaluators, criticality conventions,
//! initial guesses) is a trait; implementations are registered under a stable
//! name and looked up at runtime, e.g. from a CLI flag or a config file.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Something that can be registered: it knows its own name.
pub trait Named {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str {
        ""
    }
}

pub struct Registry<T: ?Sized + Named> {
    family: &'static str,
    entries: BTreeMap<&'static str, Arc<T>>,
    default: Option<&'static str>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: BTreeMap::new(),
            default: None,
        }
    }

    /// Registers a strategy. The first registered entry becomes the default.
    pub fn register(&mut self, strategy: Arc<T>) -> &mut Self {
        let name = strategy.name();
        if self.default.is_none() {
            self.default = Some(name);
        }
        self.entries.insert(name, strategy);
        self
    }

    pub fn with(mut self, strategy: Arc<T>) -> Self {
        self.register(strategy);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                family: self.family,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn default_strategy(&self) -> Arc<T> {
        let name = self.default.expect("registry has no entries");
        self.entries[name].clone()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<T>> {
        self.entries.values()
    }
}
