//! Name-keyed registries of interchangeable strategies.
//!
//! Interchangeable pieces live behind small traits; a [`Registry`] maps user-facing names (CLI
//! flags, config strings) onto boxed implementations.

use std::fmt;

/// Anything that can be looked up by name.
pub trait Named {
    fn name(&self) -> &str;

    /// Alternative spellings accepted by [`Registry::get`].
    fn aliases(&self) -> &[&str] {
        &[]
    }
}

pub struct Registry<T: ?Sized + Named> {
    entries: Vec<Box<T>>,
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

    /// Adds an entry. A later registration under an existing name replaces
    /// the earlier one.
    pub fn register(&mut self, entry: Box<T>) -> &mut Self {
        let name = entry.name().to_string();
        self.entries.retain(|e| e.name() != name);
        self.entries.push(entry);
        self
    }

    pub fn get(&self, name: &str) -> Option<&T> {
        let key = name.trim().to_ascii_lowercase();
        self.entries.iter().find(|e| e.name() == key || e.aliases().iter().any(|a| *a == key)).map(|e| e.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|e| e.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<T: ?Sized + Named> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Thing(&'static str);

    impl Named for Thing {
        fn name(&self) -> &str {
            self.0
        }
        fn aliases(&self) -> &[&str] {
            if self.0 == "alpha" {
                &["a"]
            } else {
                &[]
            }
        }
    }

    #[test]
    fn lookup_by_name_and_alias() {
        let mut reg: Registry<Thing> = Registry::new();
        reg.register(Box::new(Thing("alpha"))).register(Box::new(Thing("beta")));
        assert_eq!(reg.get("alpha").unwrap().name(), "alpha");
        assert_eq!(reg.get(" A ").unwrap().name(), "alpha");
        assert!(reg.get("gamma").is_none());
        assert_eq!(reg.names(), vec!["alpha", "beta"]);
    }

    #[test]
    fn re_registration_replaces() {
        let mut reg: Registry<Thing> = Registry::new();
        reg.register(Box::new(Thing("beta"))).register(Box::new(Thing("beta")));
        assert_eq!(reg.len(), 1);
    }
}
