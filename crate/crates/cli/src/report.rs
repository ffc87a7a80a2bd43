//! Residual reports: one line per invariant with its value, threshold and
//! verdict.

use std::fmt::Write as _;

/// How a value is compared with its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    /// Passes when `value <= threshold`.
    Upper,
    /// Passes when `value >= threshold`.
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
}

impl Entry {
    pub fn upper(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, bound: Bound::Upper }
    }

    pub fn lower(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, bound: Bound::Lower }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::Upper => self.value <= self.threshold,
            Bound::Lower => self.value >= self.threshold,
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub title: String,
    pub entries: Vec<Entry>,
    /// Informational lines that are not judged.
    pub notes: Vec<(String, String)>,
}

impl RunReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Self::default() }
    }

    pub fn push(&mut self, entry: Entry) {
        debug_assert!(self.entries.iter().all(|e| e.name != entry.name), "duplicate invariant {}", entry.name);
        self.entries.push(entry);
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.notes.push((key.into(), value.into()));
    }

    pub fn extend(&mut self, other: RunReport) {
        for e in other.entries {
            self.push(e);
        }
        self.notes.extend(other.notes);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(Entry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Human-readable report: notes as comments, then one aligned line per
    /// invariant.
    pub fn render(&self) -> String {
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(0).max(9);
        let mut out = String::new();
        writeln!(out, "# {}", self.title).unwrap();
        for (k, v) in &self.notes {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        writeln!(out, "{:<width$}  {:>12}  {:>9}  result", "invariant", "value", "threshold").unwrap();
        for e in &self.entries {
            let cmp = match e.bound {
                Bound::Upper => "<=",
                Bound::Lower => ">=",
            };
            writeln!(out, "{:<width$}  {:>12.4e}  {cmp}{:>7e}  {}", e.name, e.value, e.threshold, e.verdict()).unwrap();
        }
        out
    }

    /// `key = value` summary, one line per invariant plus the overall status.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "title = {}", self.title).unwrap();
        writeln!(out, "status = {}", if self.passed() { "PASS" } else { "FAIL" }).unwrap();
        writeln!(out, "invariants = {}", self.entries.len()).unwrap();
        writeln!(out, "failures = {}", self.failures().count()).unwrap();
        for e in &self.entries {
            writeln!(out, "invariant.{} = {} {:.16e}", e.name, e.verdict(), e.value).unwrap();
        }
        out
    }
}
