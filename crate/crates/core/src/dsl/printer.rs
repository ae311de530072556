//! Canonical text form: one item per block, two-space indent, flags sorted.

use std::fmt::{self, Write};

use super::ast::{BindTargets, Item, RuleDocument};
use super::lexer::{is_ident_char, is_ident_start};
use super::parser::is_reserved;
use crate::engine::{Action, Call, CondStep, EvolutionRule, Expr, PropagationStrategy};
use crate::schema::{Member, MemberKind, RelationDescriptor};

pub fn print_document(doc: &RuleDocument) -> String {
    let mut out = String::new();
    let mut prev: Option<&Item> = None;
    for item in &doc.items {
        if let Some(p) = prev {
            if !(one_liner(p) && one_liner(item) && std::mem::discriminant(p) == std::mem::discriminant(item)) {
                out.push('\n');
            }
        }
        print_item(&mut out, item);
        prev = Some(item);
    }
    out
}

fn one_liner(item: &Item) -> bool {
    match item {
        Item::Event { .. } | Item::Bind { .. } | Item::Lineage { .. } => true,
        Item::Node(n) => n.members.is_empty(),
        Item::Relation(r) => r.descriptor.members.is_empty(),
        _ => false,
    }
}

/// Whether `s` lexes back as a single plain identifier.
pub fn is_plain_ident(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    if chars.is_empty() || !is_ident_start(chars[0]) || is_reserved(s) {
        return false;
    }
    chars.iter().enumerate().all(|(i, &c)| {
        is_ident_char(c) || (c == '-' && i + 1 < chars.len() && is_ident_char(chars[i + 1]) && chars[i - 1] != '-')
    })
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn text(s: &str) -> String {
    if is_plain_ident(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

fn print_members(out: &mut String, members: &[Member], indent: &str) {
    for m in members {
        let kw = match m.member_kind {
            MemberKind::Attribute => "attribute",
            MemberKind::Method => "method",
        };
        let _ = write!(out, "{indent}{kw} {}", text(&m.name));
        if !m.signature.is_empty() {
            let _ = write!(out, ": {}", quote(&m.signature));
        }
        out.push_str(";\n");
    }
}

fn members_tail(out: &mut String, members: &[Member]) {
    if members.is_empty() {
        out.push_str(";\n");
    } else {
        out.push_str(" {\n");
        print_members(out, members, "  ");
        out.push_str("}\n");
    }
}

fn relation_flags(d: &RelationDescriptor) -> String {
    let mut s = String::new();
    for (on, name) in [(d.dependent, "dependent"), (d.exclusive, "exclusive"), (d.predominant, "predominant")] {
        if on {
            s.push(' ');
            s.push_str(name);
        }
    }
    let _ = write!(s, " card={} reverse-card={}", d.card, d.reverse_card);
    s
}

fn print_item(out: &mut String, item: &Item) {
    match item {
        Item::Event { name, params } => {
            let _ = writeln!(out, "event {name}({});", params.join(", "));
        }
        Item::Node(n) => {
            let _ = write!(out, "node {}", n.id);
            if !n.versionable {
                out.push_str(" unversionable");
            }
            members_tail(out, &n.members);
        }
        Item::Relation(r) => {
            let d = &r.descriptor;
            let _ = write!(out, "relation {} : {} ({} -> {}){}", r.id, text(d.nature.as_str()), r.source, r.destination, relation_flags(d));
            members_tail(out, &d.members);
        }
        Item::Graph(g) => {
            let _ = writeln!(out, "graph {} {{", g.id);
            let _ = writeln!(out, "  nodes = [{}];", join(&g.nodes));
            let _ = writeln!(out, "  relations = [{}];", join(&g.relations));
            print_members(out, &g.members, "  ");
            out.push_str("}\n");
        }
        Item::Rule(r) => print_rule(out, r),
        Item::Strategy(s) => print_strategy(out, s),
        Item::Bind { strategy, targets } => {
            let _ = match targets {
                BindTargets::Kind(k) => writeln!(out, "bind {strategy} to kind {k};"),
                BindTargets::Classes(ids) => writeln!(out, "bind {strategy} to {};", join(ids)),
            };
        }
        Item::Lineage { parent, child } => {
            let _ = writeln!(out, "lineage {parent} -> {child};");
        }
    }
}

pub fn print_rule(out: &mut String, r: &EvolutionRule) {
    let _ = write!(out, "rule {} : {}", r.id, r.applies_to);
    if let Some(o) = r.relation {
        let _ = write!(out, " direction={} mode={}", o.direction.as_str(), o.mode.as_str());
    }
    out.push_str(" {\n");
    let params: Vec<String> = r
        .pattern
        .params
        .iter()
        .map(|p| match p.kind {
            Some(k) => format!("{}: {k}", p.name),
            None => p.name.clone(),
        })
        .collect();
    let _ = writeln!(out, "  on {}({})", r.pattern.name, params.join(", "));
    for step in &r.condition {
        let _ = match step {
            CondStep::When(e) => writeln!(out, "  when {e}"),
            CondStep::Let(v, e) => writeln!(out, "  let {v} = {e}"),
        };
    }
    out.push_str("  do {\n");
    print_actions(out, &r.actions, 2);
    out.push_str("  }\n}\n");
}

fn print_actions(out: &mut String, actions: &[Action], level: usize) {
    let indent = "  ".repeat(level);
    for a in actions {
        match a {
            Action::Raise(c) => {
                let _ = writeln!(out, "{indent}raise {c};");
            }
            Action::Exec(c) => {
                let _ = writeln!(out, "{indent}exec {c};");
            }
            Action::For { var, iter, body } => {
                let _ = writeln!(out, "{indent}for {var} in {iter} {{");
                print_actions(out, body, level + 1);
                let _ = writeln!(out, "{indent}}}");
            }
            Action::If { cond, then, otherwise } => {
                let _ = writeln!(out, "{indent}if {cond} {{");
                print_actions(out, then, level + 1);
                if otherwise.is_empty() {
                    let _ = writeln!(out, "{indent}}}");
                } else {
                    let _ = writeln!(out, "{indent}}} else {{");
                    print_actions(out, otherwise, level + 1);
                    let _ = writeln!(out, "{indent}}}");
                }
            }
        }
    }
}

pub fn print_strategy(out: &mut String, s: &PropagationStrategy) {
    let _ = writeln!(out, "strategy {} : {} {{", s.id, s.applies_to);
    for c in crate::engine::Category::ALL {
        let rules = s.rules(c);
        if !rules.is_empty() {
            let _ = writeln!(out, "  {c} rules = [{}];", rules.join(", "));
        }
    }
    out.push_str("}\n");
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write_expr(f, a, 1)?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 1)
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(_) => 3,
        Expr::Eq(..) | Expr::Ne(..) => 4,
        _ => 5,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        f.write_str("(")?;
        write_expr(f, e, 1)?;
        return f.write_str(")");
    }
    match e {
        Expr::Var(v) => f.write_str(v),
        Expr::Side(s) => f.write_str(s.as_str()),
        Expr::Bool(b) => write!(f, "{b}"),
        Expr::Int(i) => write!(f, "{i}"),
        Expr::Str(s) => f.write_str(&quote(s)),
        Expr::List(items) => {
            f.write_str("[")?;
            for (i, a) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, a, 1)?;
            }
            f.write_str("]")
        }
        Expr::Call(name, args) => write!(f, "{}", Call { name: name.clone(), args: args.clone() }),
        Expr::Field(base, field) => {
            write_expr(f, base, 5)?;
            write!(f, ".{field}")
        }
        Expr::Not(x) => {
            f.write_str("not ")?;
            write_expr(f, x, 3)
        }
        Expr::And(a, b) => {
            write_expr(f, a, 2)?;
            f.write_str(" and ")?;
            write_expr(f, b, 3)
        }
        Expr::Or(a, b) => {
            write_expr(f, a, 1)?;
            f.write_str(" or ")?;
            write_expr(f, b, 2)
        }
        Expr::Eq(a, b) | Expr::Ne(a, b) => {
            write_expr(f, a, 5)?;
            f.write_str(if matches!(e, Expr::Eq(..)) { " == " } else { " != " })?;
            write_expr(f, b, 5)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_document;
    use super::*;

    fn roundtrip(src: &str) -> String {
        let doc = parse_document(src).unwrap();
        let printed = print_document(&doc);
        assert_eq!(parse_document(&printed).unwrap(), doc, "printed:\n{printed}");
        printed
    }

    #[test]
    fn r4_prints_canonically() {
        let printed = roundtrip(
            "rule R4 : relation direction = FORWARD mode=Extended { on delete-relation(R) let G = graph-of(R) \
             do { raise modify-graph(G, R); exec delete-relation(R); } }",
        );
        assert_eq!(
            printed,
            "rule R4 : relation direction=forward mode=extended {\n  on delete-relation(R)\n  let G = graph-of(R)\n  do {\n    raise modify-graph(G, R);\n    exec delete-relation(R);\n  }\n}\n"
        );
    }

    #[test]
    fn parentheses_only_where_needed() {
        let printed = roundtrip("rule X : node { on e(N) when (a and (b or c)) == d or not (x == y) do { } }");
        assert!(printed.contains("when (a and (b or c)) == d or not x == y"), "{printed}");
    }

    #[test]
    fn flags_sorted_and_custom_natures_quoted() {
        let printed = roundtrip(
            "node A; node B;\nrelation r : \"part of\" (A -> B) predominant exclusive dependent card=n reverse-card=3 { attribute w: \"int\"; }",
        );
        assert!(printed.contains("relation r : \"part of\" (A -> B) dependent exclusive predominant card=n reverse-card=3 {"));
    }

    #[test]
    fn plain_identifiers() {
        assert!(is_plain_ident("graph-of"));
        assert!(!is_plain_ident("a--b"));
        assert!(!is_plain_ident("a-"));
        assert!(!is_plain_ident("not"));
        assert!(!is_plain_ident("part of"));
    }
}
