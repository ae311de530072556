//! Workspaces for the propagation benchmarks.

use std::fmt::Write;

use gevo_core::{dsl, load_text, Engine};

/// A single graph `G` holding the chain `N0 -> N1 -> ... -> N{n-1}` of
/// exclusive compositions, with the default rules bound by kind.
pub fn chain_source(n: usize) -> String {
    let mut src = String::from(dsl::BUILTIN_SOURCE);
    for i in 0..n {
        let _ = writeln!(src, "node N{i};");
    }
    for i in 1..n {
        let _ = writeln!(src, "relation r{i} : composition (N{} -> N{i}) exclusive card=1 reverse-card=1;", i - 1);
    }
    let nodes: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    let relations: Vec<String> = (1..n).map(|i| format!("r{i}")).collect();
    let _ = writeln!(src, "graph G {{ nodes = [{}]; relations = [{}]; }}", nodes.join(", "), relations.join(", "));
    src
}

pub fn chain(n: usize) -> Engine {
    load_text(&chain_source(n)).expect("chain workspace loads").into_engine()
}

/// The three-class example workspace.
pub fn example() -> Engine {
    dsl::example_model().into_engine()
}
