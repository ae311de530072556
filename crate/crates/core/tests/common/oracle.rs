//! Naive reference interpreter for the default rule set.
//!
//! Each default rule is written out by hand as a recursive function over the
//! raw workspace and versioning primitives. There is no trace, no dedup and
//! no rule selection machinery; it relies on the rules' own guards to stop,
//! with a hard cap on the number of events.

use std::collections::HashMap;

use gevo_core::engine::EngineState;
use gevo_core::schema::{Class, RelationDescriptor};
use gevo_core::{ClassId, ClassKind, Event, RelationClass, Side, Value};

pub const EVENT_CAP: usize = 10_000;

#[derive(Debug)]
pub struct Abort(pub String);

type Step = Result<(), Abort>;

pub struct Reference {
    pub state: EngineState,
    graveyard: HashMap<ClassId, Class>,
    events: usize,
}

fn abort(e: impl std::fmt::Display) -> Abort {
    Abort(e.to_string())
}

impl Reference {
    /// Runs one root event to completion. On abort the caller should keep
    /// its copy of the original state.
    pub fn run(state: &EngineState, event: &Event) -> Result<EngineState, Abort> {
        let mut r = Reference { state: state.clone(), graveyard: HashMap::new(), events: 0 };
        r.state.versions.begin_propagation();
        r.dispatch(event)?;
        let EngineState { workspace, versions, .. } = &mut r.state;
        versions.finalize(workspace).map_err(abort)?;
        Ok(r.state)
    }

    fn lookup(&self, id: &ClassId) -> Option<&Class> {
        self.state.workspace.get(id).or_else(|| self.graveyard.get(id))
    }

    fn relation(&self, id: &ClassId) -> Option<&RelationClass> {
        self.lookup(id).and_then(Class::as_relation)
    }

    fn in_graph(&self, x: &ClassId, g: &ClassId) -> Option<bool> {
        self.state.workspace.graph(g).ok().map(|g| g.contains(x))
    }

    fn dispatch(&mut self, e: &Event) -> Step {
        self.events += 1;
        if self.events > EVENT_CAP {
            return Err(Abort("event cap".into()));
        }
        let live = self.state.workspace.kind_of(&e.target);
        let class = |i: usize| e.args.get(i).and_then(Value::as_class).cloned();
        match (e.name.as_str(), live) {
            ("delete-node", Some(ClassKind::Node)) => self.delete_node(&e.target),
            ("delete-relation", Some(ClassKind::Relation)) => self.delete_relation(&e.target),
            ("modify-graph", Some(ClassKind::Graph)) => {
                let x = class(0).expect("class argument");
                match self.lookup(&x).map(Class::kind) {
                    Some(ClassKind::Node) => self.r3(&e.target, &x),
                    Some(ClassKind::Relation) => self.r5(&e.target, &x),
                    _ => Ok(()),
                }
            }
            ("modify-node", Some(ClassKind::Node)) => {
                let Value::Side(side) = e.args[0] else { panic!("side argument") };
                self.r6(&e.target, side, &class(1).expect("relation argument"))
            }
            ("add-relation", None) => {
                let Value::Descriptor(d) = &e.args[3] else { panic!("descriptor argument") };
                self.r1(&e.target, &class(0).unwrap(), &class(1).unwrap(), &class(2).unwrap(), d)
            }
            ("add-relation", Some(_)) => panic!("reference only handles fresh relation ids"),
            ("create-version-node", Some(ClassKind::Node)) => self.r7(&e.target),
            ("create-version-graph", Some(ClassKind::Graph)) => self.r9(&e.target, &class(0).unwrap()),
            ("create-version-relation", Some(ClassKind::Relation)) => {
                self.r8(&e.target, &class(0).unwrap(), &class(1).unwrap())
            }
            _ => Ok(()),
        }
    }

    fn raise(&mut self, name: &str, target: &ClassId, args: Vec<Value>) -> Step {
        self.dispatch(&Event::new(name, target.clone(), args))
    }

    fn bury(&mut self, id: &ClassId) {
        if let Some(c) = self.state.workspace.get(id) {
            self.graveyard.insert(id.clone(), c.clone());
        }
    }

    // R2
    fn delete_node(&mut self, n: &ClassId) -> Step {
        let ws = &self.state.workspace;
        if ws.shared(n).unwrap_or(true) {
            return Ok(());
        }
        let Ok(g) = ws.graph_of(n) else { return Ok(()) };
        self.raise("modify-graph", &g, vec![Value::Class(n.clone())])?;
        self.bury(n);
        self.state.workspace.exec_delete_node(n).map_err(abort)
    }

    // R4
    fn delete_relation(&mut self, r: &ClassId) -> Step {
        let Ok(g) = self.state.workspace.graph_of(r) else { return Ok(()) };
        self.raise("modify-graph", &g, vec![Value::Class(r.clone())])?;
        self.bury(r);
        self.state.workspace.exec_delete_relation(r).map_err(abort)
    }

    // R3
    fn r3(&mut self, g: &ClassId, n: &ClassId) -> Step {
        if self.in_graph(n, g) != Some(true) {
            return Ok(());
        }
        let Some(node) = self.lookup(n).and_then(Class::as_node) else { return Ok(()) };
        let (ins, outs) = (node.afferent.clone(), node.efferent.clone());
        for r in &ins {
            self.raise("delete-relation", r, vec![])?;
            let src = self.relation(r).and_then(|x| x.source.clone()).expect("relation source");
            self.raise("modify-node", &src, vec![Value::Side(Side::Efferent), Value::Class(r.clone())])?;
        }
        for r in &outs {
            self.raise("delete-relation", r, vec![])?;
            let dst = self.relation(r).and_then(|x| x.destination.clone()).expect("relation destination");
            self.raise("modify-node", &dst, vec![Value::Side(Side::Afferent), Value::Class(r.clone())])?;
        }
        if ins.len() == 1 && outs.len() == 1 && ins[0] != outs[0] {
            let a = self.relation(&ins[0]).unwrap().clone();
            let b = self.relation(&outs[0]).unwrap().clone();
            let args = vec![
                Value::Class(a.source.clone().unwrap()),
                Value::Class(b.destination.clone().unwrap()),
                Value::Class(g.clone()),
                Value::Descriptor(Box::new(a.descriptor())),
            ];
            self.raise("add-relation", &ins[0], args)?;
        }
        Ok(())
    }

    // R5
    fn r5(&mut self, g: &ClassId, r: &ClassId) -> Step {
        if self.in_graph(r, g) != Some(true) {
            return Ok(());
        }
        let rel = self.relation(r).unwrap().clone();
        let (Some(n1), Some(n2)) = (rel.source, rel.destination) else { return Ok(()) };
        self.raise("modify-node", &n1, vec![Value::Side(Side::Efferent), Value::Class(r.clone())])?;
        self.raise("modify-node", &n2, vec![Value::Side(Side::Afferent), Value::Class(r.clone())])
    }

    // R6
    fn r6(&mut self, n: &ClassId, side: Side, r: &ClassId) -> Step {
        let node = self.state.workspace.node(n).unwrap();
        if node.side(side).contains(r) {
            self.state.workspace.exec_detach(n, side, r).map_err(abort)?;
        }
        Ok(())
    }

    // R1
    fn r1(&mut self, r: &ClassId, n1: &ClassId, n2: &ClassId, g: &ClassId, d: &RelationDescriptor) -> Step {
        match (self.in_graph(n1, g), self.in_graph(n2, g)) {
            (Some(true), Some(true)) => {}
            _ => return Ok(()),
        }
        let spec = RelationClass::from_descriptor(r.clone(), d.clone(), Some(n1.clone()), Some(n2.clone()));
        self.state.workspace.exec_add_relation(g, spec).map(|_| ()).map_err(abort)
    }

    fn version_exists(&self, x: &ClassId) -> bool {
        self.state.versions.current_bindings().contains_key(x)
    }

    // R7
    fn r7(&mut self, n: &ClassId) -> Step {
        if !self.state.workspace.node(n).unwrap().versionable || self.version_exists(n) {
            return Ok(());
        }
        let Ok(g) = self.state.workspace.graph_of(n) else { return Ok(()) };
        let EngineState { workspace, versions, .. } = &mut self.state;
        versions.execute_create_version_node(workspace, n).map_err(abort)?;
        self.raise("create-version-graph", &g, vec![Value::Class(n.clone())])
    }

    // R9: the default R8 propagates forward, so only relations that leave
    // `n` (self-loops included) carry versioning to their far end.
    fn r9(&mut self, g: &ClassId, n: &ClassId) -> Step {
        if self.in_graph(n, g) != Some(true) {
            return Ok(());
        }
        let node = self.state.workspace.node(n).unwrap();
        let mut rs = Vec::new();
        for r in node.incident() {
            if self.relation(&r).is_some_and(|x| x.source.as_ref() == Some(n)) {
                rs.push(r);
            }
        }
        for r in rs {
            let far = self.relation(&r).unwrap().destination.clone().unwrap();
            self.raise("create-version-relation", &r, vec![Value::Class(n.clone()), Value::Class(far)])?;
        }
        let EngineState { workspace, versions, .. } = &mut self.state;
        versions.execute_create_version_graph(workspace, g).map(|_| ()).map_err(abort)
    }

    // R8
    fn r8(&mut self, r: &ClassId, n: &ClassId, n1: &ClassId) -> Step {
        let rel = self.relation(r).unwrap();
        if rel.source.as_ref() != Some(n) {
            return Ok(());
        }
        if !self.version_exists(n) || self.version_exists(r) {
            return Ok(());
        }
        let EngineState { workspace, versions, .. } = &mut self.state;
        versions.derive_relation(workspace, r).map_err(abort)?;
        self.raise("create-version-node", n1, vec![])?;
        let bindings = self.state.versions.current_bindings();
        let or_self = |x: &ClassId| bindings.get(x).cloned().unwrap_or_else(|| x.clone());
        let (vr, vs, vd) = (bindings[r].clone(), or_self(n), or_self(n1));
        let EngineState { workspace, versions, .. } = &mut self.state;
        versions.assign_version_endpoints(workspace, &vr, &vs, &vd).map_err(abort)
    }
}
