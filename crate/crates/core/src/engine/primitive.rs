//! The raw operations a rule's `exec` actions may invoke.

use std::collections::HashMap;

use super::eval::{class_arg, side_arg, text_arg, EvalError, EvalResult};
use super::event::Value;
use super::EngineState;
use crate::id::ClassId;
use crate::schema::{Class, Member, MemberChange, MemberKind, Nature, NodeClass, RelationClass};

pub const PRIMITIVES: &[(&str, usize)] = &[
    ("add-node", 2),
    ("delete-node", 1),
    ("add-relation", 5),
    ("delete-relation", 1),
    ("detach", 3),
    ("attach", 3),
    ("rename-class", 2),
    ("add-attribute", 3),
    ("delete-attribute", 2),
    ("rename-attribute", 3),
    ("add-method", 3),
    ("delete-method", 2),
    ("rename-method", 3),
    ("version-node", 1),
    ("derive-relation", 1),
    ("assign-version-endpoints", 3),
    ("version-graph", 1),
    ("delete-version", 1),
];

pub fn primitive_arity(name: &str) -> Option<usize> {
    PRIMITIVES.iter().find(|(n, _)| *n == name).map(|&(_, a)| a)
}

fn new_id(v: &Value) -> EvalResult<ClassId> {
    match v {
        Value::Class(c) => Ok(c.clone()),
        Value::Str(s) => s.parse().map_err(|_| EvalError::Domain(format!("invalid class name `{s}`"))),
        _ => Err(EvalError::Type { expected: "class name", found: v.to_string() }),
    }
}

fn member_change(name: &str, args: &[Value]) -> EvalResult<MemberChange> {
    let kind = if name.ends_with("attribute") { MemberKind::Attribute } else { MemberKind::Method };
    Ok(match name.split('-').next() {
        Some("add") => MemberChange::Add(Member { member_kind: kind, name: text_arg(&args[1])?, signature: text_arg(&args[2])? }),
        Some("delete") => MemberChange::Delete { kind, name: text_arg(&args[1])? },
        _ => MemberChange::Rename { kind, from: text_arg(&args[1])?, to: text_arg(&args[2])? },
    })
}

/// Applies one primitive. Deleted records move to `graveyard` so that later
/// actions in the same propagation can still read their fields.
pub(crate) fn apply(
    state: &mut EngineState,
    graveyard: &mut HashMap<ClassId, Class>,
    name: &str,
    args: &[Value],
) -> EvalResult<()> {
    let expected = primitive_arity(name).ok_or_else(|| EvalError::UnknownBuiltin(name.to_string()))?;
    if args.len() != expected {
        return Err(EvalError::Arity { name: name.to_string(), expected, found: args.len() });
    }
    let ws = &mut state.workspace;
    match name {
        "add-node" => ws.exec_add_node(class_arg(&args[1])?, NodeClass::new(new_id(&args[0])?))?,
        "add-relation" => {
            let descriptor = match &args[4] {
                Value::Descriptor(d) => (**d).clone(),
                other => crate::schema::RelationDescriptor::with_nature(Nature::parse(&text_arg(other)?)),
            };
            let spec = RelationClass::from_descriptor(
                new_id(&args[0])?,
                descriptor,
                Some(class_arg(&args[1])?.clone()),
                Some(class_arg(&args[2])?.clone()),
            );
            ws.exec_add_relation(class_arg(&args[3])?, spec)?;
        }
        "delete-node" | "delete-relation" | "delete-version" => {
            let id = class_arg(&args[0])?;
            let record = ws.get(id).cloned();
            match name {
                "delete-node" => ws.exec_delete_node(id)?,
                "delete-relation" => ws.exec_delete_relation(id)?,
                _ => state.versions.delete_leaf_version(ws, id)?,
            }
            if let Some(record) = record {
                graveyard.insert(id.clone(), record);
            }
            state.registry.per_class.shift_remove(id);
        }
        "detach" => ws.exec_detach(class_arg(&args[0])?, side_arg(&args[1])?, class_arg(&args[2])?)?,
        "attach" => ws.exec_attach(class_arg(&args[0])?, side_arg(&args[1])?, class_arg(&args[2])?)?,
        "rename-class" => {
            let old = class_arg(&args[0])?;
            let new = ws.exec_member_change(old, MemberChange::RenameClass(text_arg(&args[1])?))?;
            state.versions.rename(old, &new);
            if let Some(i) = state.registry.per_class.get_index_of(old) {
                let (_, strategy) = state.registry.per_class.shift_remove_index(i).expect("index is valid");
                state.registry.per_class.shift_insert(i, new, strategy);
            }
        }
        "add-attribute" | "delete-attribute" | "rename-attribute" | "add-method" | "delete-method"
        | "rename-method" => {
            ws.exec_member_change(class_arg(&args[0])?, member_change(name, args)?)?;
        }
        "version-node" => {
            state.versions.execute_create_version_node(ws, class_arg(&args[0])?)?;
        }
        "derive-relation" => {
            state.versions.derive_relation(ws, class_arg(&args[0])?)?;
        }
        "assign-version-endpoints" => state.versions.assign_version_endpoints(
            ws,
            class_arg(&args[0])?,
            class_arg(&args[1])?,
            class_arg(&args[2])?,
        )?,
        "version-graph" => {
            state.versions.execute_create_version_graph(ws, class_arg(&args[0])?)?;
        }
        _ => unreachable!("primitive table and dispatch agree"),
    }
    Ok(())
}
