use std::fmt::{self, Write};

use serde::ser::Serializer;
use serde::Serialize;

use super::event::Event;
use crate::id::ClassKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStatus {
    Executed,
    SkippedDuplicate,
    SkippedCondition,
    NoStrategy,
    NoMatchingRule,
    UnknownTarget,
}

impl TraceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceStatus::Executed => "executed",
            TraceStatus::SkippedDuplicate => "skipped-duplicate",
            TraceStatus::SkippedCondition => "skipped-condition",
            TraceStatus::NoStrategy => "no-strategy",
            TraceStatus::NoMatchingRule => "no-matching-rule",
            TraceStatus::UnknownTarget => "unknown-target",
        }
    }
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub seq: usize,
    pub depth: usize,
    pub event: Event,
    pub strategy: Option<String>,
    pub rule: Option<String>,
    pub status: TraceStatus,
    /// Why a rule was skipped: the failing guard, a direction mismatch, or
    /// `mode-restricted` for a suppressed raise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Kind of the target when the entry was recorded; used for rendering.
    #[serde(skip)]
    pub target_kind: Option<ClassKind>,
}

impl TraceEntry {
    pub fn is_executed(&self) -> bool {
        self.status == TraceStatus::Executed
    }

    /// `R6@C1` style label.
    pub fn label(&self) -> String {
        format!("{}@{}", self.rule.as_deref().unwrap_or("-"), self.event.target)
    }
}

/// The activation record of one root event.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PropagationTrace {
    pub root: Option<Event>,
    pub entries: Vec<TraceEntry>,
    /// Keys in the order they were first seen.
    pub dedup_keys: Vec<Event>,
    /// Number of primitives invoked, including a failing one.
    pub primitives: usize,
}

impl PropagationTrace {
    pub fn executed(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| e.is_executed())
    }

    pub fn executed_labels(&self) -> Vec<String> {
        self.executed().map(TraceEntry::label).collect()
    }

    /// Entries nested under `index`: the following entries with greater depth.
    pub fn descendants(&self, index: usize) -> &[TraceEntry] {
        let depth = self.entries[index].depth;
        let rest = &self.entries[index + 1..];
        let end = rest.iter().position(|e| e.depth <= depth).unwrap_or(rest.len());
        &rest[..end]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// Indented outline, one entry per line, depth as indentation.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let indent = "  ".repeat(e.depth);
            let bullet = if e.depth % 2 == 0 { '-' } else { 'o' };
            let on = match e.target_kind {
                Some(k) => format!("{k} {}", e.event.target),
                None => e.event.target.to_string(),
            };
            let _ = write!(out, "{indent}{bullet} {}: ", e.event);
            let _ = match (&e.strategy, &e.rule) {
                (Some(s), Some(r)) => write!(out, "Strategy {s}, rule {r} on {on}"),
                (None, Some(r)) => write!(out, "rule {r} on {on}"),
                (Some(s), None) => write!(out, "Strategy {s} on {on}"),
                (None, None) => write!(out, "{on}"),
            };
            let _ = write!(out, " [{}]", e.status);
            if let Some(reason) = &e.reason {
                let _ = write!(out, " ({reason})");
            }
            out.push('\n');
        }
        out
    }
}

impl Serialize for PropagationTrace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}
