//! Name-keyed registry of interchangeable strategies.

use std::sync::Arc;

pub trait Named {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str {
        ""
    }
}

/// Strategies kept in registration order; lookup is by exact name.
pub struct Registry<T: ?Sized + Named> {
    entries: Vec<Arc<T>>,
}

impl<T: ?Sized + Named> Default for Registry<T> {
    fn default() -> Self {
        Self { entries: Vec::new() }
    }
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a strategy. A later registration with the same name replaces
    /// the earlier one.
    pub fn register(&mut self, item: Arc<T>) -> &mut Self {
        self.entries.retain(|e| e.name() != item.name());
        self.entries.push(item);
        self
    }

    pub fn get(&self, name: &str) -> Option<Arc<T>> {
        self.entries.iter().find(|e| e.name() == name).cloned()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}
