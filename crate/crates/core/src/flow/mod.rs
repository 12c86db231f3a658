//! Logic flow graphs.
//!
//! Two vocabularies share one representation. The concrete graph has one node
//! per element (`billing.DR1`), a node per service entry (`billing`), and one
//! synthesized product per service (`billing.P1`). The abstract graph
//! summarizes behaviour with tags (`get`, `r:select`, `r:cmp`, `store`, ...).

mod analysis;
mod slice;
pub(crate) mod text;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{
    is_ident_dashed, is_label, ElementIndex, ElementKind, LogicElement, LogicModel, Operation, ServiceDef,
};

pub use analysis::{reachable, terminal_paths, PathReport, WeightedPaths};
pub use slice::backward_slice;
pub(crate) use slice::is_known;
pub use text::{emit_productions, parse_flow_productions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("invoke target `{0}` is neither defined nor declared external")]
    UnresolvedInvoke(String),
    #[error("node not in graph: {0}")]
    NotFound(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no trace variables given")]
    EmptyTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowNode {
    Concrete(ElementIndex),
    Abstract(String),
    Product(ElementIndex),
}

pub const RETURN_TAG: &str = "return";
const FIXED_TAGS: [&str; 7] = ["get", "set", "compute", "store", "return", "r:select", "r:cmp"];

/// Whether `tag` belongs to the abstract vocabulary (fixed tags, `r:updateN`, or a service name).
pub fn is_abstract_tag(tag: &str) -> bool {
    FIXED_TAGS.contains(&tag)
        || tag.strip_prefix("r:update").is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
        || (!tag.starts_with("r:") && is_ident_dashed(tag))
}

impl FlowNode {
    pub fn tag(tag: &str) -> FlowNode {
        FlowNode::Abstract(tag.to_string())
    }

    pub fn is_terminal(&self) -> bool {
        match self {
            FlowNode::Product(_) => true,
            FlowNode::Abstract(t) => t == RETURN_TAG,
            FlowNode::Concrete(_) => false,
        }
    }

    /// Parses the textual form used in production listings.
    pub fn parse(text: &str) -> Option<FlowNode> {
        if let Some((svc, local)) = text.split_once('.') {
            if !is_ident_dashed(svc) || !is_label(local) {
                return None;
            }
            let ix = ElementIndex::new(svc, local);
            return Some(match ElementKind::from_label(local) {
                Some(ElementKind::Product) => FlowNode::Product(ix),
                _ => FlowNode::Concrete(ix),
            });
        }
        is_abstract_tag(text).then(|| FlowNode::tag(text))
    }
}

impl fmt::Display for FlowNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowNode::Concrete(ix) | FlowNode::Product(ix) => write!(f, "{ix}"),
            FlowNode::Abstract(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Successor {
    Node(FlowNode),
    /// Parallel branches that all precede the next join.
    Fork(Vec<FlowNode>),
}

impl Successor {
    pub fn nodes(&self) -> &[FlowNode] {
        match self {
            Successor::Node(n) => std::slice::from_ref(n),
            Successor::Fork(ns) => ns,
        }
    }
}

/// `heads -> {successors} bindings`. More than one head denotes a join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub heads: Vec<FlowNode>,
    pub successors: Vec<Successor>,
    /// `(consumer, producer)` pairs, printed `consumer=producer`.
    pub bindings: Vec<(FlowNode, FlowNode)>,
}

impl Production {
    pub fn new(head: FlowNode, successors: Vec<FlowNode>) -> Production {
        Production {
            heads: vec![head],
            successors: successors.into_iter().map(Successor::Node).collect(),
            bindings: Vec::new(),
        }
    }

    pub fn successor_nodes(&self) -> impl Iterator<Item = &FlowNode> {
        self.successors.iter().flat_map(|s| s.nodes().iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowGraph {
    pub productions: Vec<Production>,
    pub entries: Vec<FlowNode>,
}

impl FlowGraph {
    /// Edges in production order, deduplicated.
    pub fn edges(&self) -> Vec<(&FlowNode, &FlowNode)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.productions {
            for h in &p.heads {
                for s in p.successor_nodes() {
                    if seen.insert((h, s)) {
                        out.push((h, s));
                    }
                }
            }
        }
        out
    }

    pub fn successors_of<'a>(&'a self, node: &FlowNode) -> Vec<&'a FlowNode> {
        self.edges().into_iter().filter(|(h, _)| *h == node).map(|(_, s)| s).collect()
    }

    pub fn nodes(&self) -> BTreeSet<&FlowNode> {
        let mut out: BTreeSet<&FlowNode> = self.entries.iter().collect();
        for p in &self.productions {
            out.extend(p.heads.iter());
            out.extend(p.successor_nodes());
            for (a, b) in &p.bindings {
                out.insert(a);
                out.insert(b);
            }
        }
        out
    }

    pub fn contains(&self, node: &FlowNode) -> bool {
        self.nodes().contains(node)
    }

    /// Equality of the production lists, ignoring recorded entry nodes.
    pub fn same_productions(&self, other: &FlowGraph) -> bool {
        self.productions == other.productions
    }
}

impl fmt::Display for FlowGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_productions(self))
    }
}

fn check_invokes(model: &LogicModel) -> Result<(), FlowError> {
    for el in model.elements() {
        if el.operation == Operation::Invoke {
            let target = el.target.clone().unwrap_or_default();
            if !model.services.contains_key(&target) && !model.externals.contains(&target) {
                return Err(FlowError::UnresolvedInvoke(target));
            }
        }
    }
    Ok(())
}

pub(crate) fn product_node(svc: &ServiceDef) -> FlowNode {
    FlowNode::Product(ElementIndex::new(&svc.name, svc.product_label()))
}

/// Where control goes once `local` (and its branch, for conditionals) is done.
fn fall_through(svc: &ServiceDef, local: &str) -> FlowNode {
    let mut current = local.to_string();
    loop {
        let parent = svc.parent_of(&current);
        let siblings = parent.map(|p| &p.children).unwrap_or(&svc.roots);
        if let Some(pos) = siblings.iter().position(|s| *s == current) {
            if let Some(next) = siblings.get(pos + 1) {
                return FlowNode::Concrete(ElementIndex::new(&svc.name, next));
            }
        }
        match parent {
            Some(p) => current = p.index.local.clone(),
            None => return product_node(svc),
        }
    }
}

/// Concrete element-level flow graph.
pub fn build_flow(model: &LogicModel) -> Result<FlowGraph, FlowError> {
    check_invokes(model)?;
    let mut graph = FlowGraph::default();
    for svc in model.services.values() {
        let entry = FlowNode::tag(&svc.name);
        graph.entries.push(entry.clone());
        let Some(first) = svc.roots.first() else { continue };
        graph.productions.push(Production::new(entry, vec![FlowNode::Concrete(ElementIndex::new(&svc.name, first))]));
        for el in &svc.elements {
            let next = fall_through(svc, el.local());
            let mut succ = Vec::new();
            match el.operation {
                Operation::If => {
                    if let Some(c) = el.children.first() {
                        succ.push(FlowNode::Concrete(ElementIndex::new(&svc.name, c)));
                    }
                    succ.push(next);
                }
                Operation::Output => {
                    let product = product_node(svc);
                    if next != product {
                        succ.push(next);
                    }
                    succ.push(product);
                }
                Operation::Invoke => {
                    let target = el.target.as_deref().unwrap_or_default();
                    if model.services.get(target).is_some_and(|t| !t.elements.is_empty()) {
                        succ.push(FlowNode::tag(target));
                    }
                    succ.push(next);
                }
                _ => succ.push(next),
            }
            succ.dedup();
            graph.productions.push(Production::new(FlowNode::Concrete(el.index.clone()), succ));
        }
    }
    Ok(graph)
}

/// Abstract tag of an element; `None` for constant assignments, which the
/// abstract view folds away.
fn abstract_tag(el: &LogicElement, update_no: &mut usize) -> Option<String> {
    let tag = match el.operation {
        Operation::Get => "get",
        Operation::Set if el.params.iter().all(|p| p.value.as_ref().is_some_and(|v| v.as_literal().is_some())) => {
            return None
        }
        Operation::Set | Operation::Receive => "set",
        Operation::Compute => "compute",
        Operation::Select => "r:select",
        Operation::Update => {
            *update_no += 1;
            return Some(format!("r:update{update_no}"));
        }
        Operation::If => "r:cmp",
        Operation::Output | Operation::Invoke => "store",
    };
    Some(tag.to_string())
}

/// Tag an element would carry in bindings, constants included.
fn binding_tag(svc: &ServiceDef, el: &LogicElement) -> String {
    let mut n = 0;
    let updates_before =
        svc.elements.iter().take_while(|e| e.index != el.index).filter(|e| e.operation == Operation::Update).count();
    if el.operation == Operation::Update {
        return format!("r:update{}", updates_before + 1);
    }
    abstract_tag(el, &mut n).unwrap_or_else(|| "set".to_string())
}

enum Step {
    Nodes(Vec<FlowNode>),
    /// Values received from an invoking service.
    Receive(Vec<(FlowNode, FlowNode)>),
    /// Call of another service: `store -> {target}`.
    Call(FlowNode),
}

/// `(consumer, producer)` tag pairs for the values a receive element gets.
fn receive_bindings(model: &LogicModel, svc: &ServiceDef, receive: &LogicElement) -> Vec<(FlowNode, FlowNode)> {
    let mut out: Vec<(FlowNode, FlowNode)> = Vec::new();
    for caller in model.services.values() {
        for (pos, inv) in caller.elements.iter().enumerate() {
            if inv.operation != Operation::Invoke || inv.target.as_deref() != Some(svc.name.as_str()) {
                continue;
            }
            for arg in &inv.params {
                if !receive.params.iter().any(|p| p.name == arg.name) {
                    continue;
                }
                let consumer =
                    svc.elements.iter().find(|e| e.index != receive.index && e.uses().contains(&arg.name.as_str()));
                let sources: Vec<&str> = arg.value.iter().flat_map(|v| v.vars()).collect();
                let producer =
                    caller.elements[..pos].iter().rev().find(|e| e.defs().iter().any(|d| sources.contains(d)));
                if let (Some(c), Some(p)) = (consumer, producer) {
                    let pair = (FlowNode::tag(&binding_tag(svc, c)), FlowNode::tag(&binding_tag(caller, p)));
                    if !out.contains(&pair) {
                        out.push(pair);
                    }
                }
            }
        }
    }
    out
}

/// Abstract flow in the summary vocabulary.
pub fn abstract_flow(model: &LogicModel) -> Result<FlowGraph, FlowError> {
    check_invokes(model)?;
    let mut graph = FlowGraph::default();
    for svc in model.services.values() {
        let entry = FlowNode::tag(svc.flow_name());
        graph.entries.push(entry.clone());
        if svc.elements.is_empty() {
            continue;
        }
        let mut steps: Vec<Step> = Vec::new();
        let mut update_no = 0;
        svc.walk(|el, _, _| {
            if el.operation == Operation::Receive {
                steps.push(Step::Receive(receive_bindings(model, svc, el)));
                return;
            }
            let Some(tag) = abstract_tag(el, &mut update_no) else { return };
            let node = FlowNode::tag(&tag);
            match steps.last_mut() {
                Some(Step::Nodes(group)) if el.operation == Operation::Update && tag_is_update(&group[0]) => {
                    group.push(node)
                }
                _ => steps.push(Step::Nodes(vec![node])),
            }
            if el.operation == Operation::Invoke {
                let target = el.target.as_deref().unwrap_or_default();
                let name = model.services.get(target).map(|t| t.flow_name()).unwrap_or(target);
                steps.push(Step::Call(FlowNode::tag(name)));
            }
        });
        if svc.ret.as_ref().is_some_and(|r| r.value.is_some()) {
            steps.push(Step::Nodes(vec![FlowNode::tag("store")]));
        }
        if !matches!(steps.last(), Some(Step::Call(_))) {
            steps.push(Step::Nodes(vec![FlowNode::tag(RETURN_TAG)]));
        }

        let mut prev = vec![entry];
        let mut i = 0;
        while i < steps.len() {
            match &steps[i] {
                Step::Nodes(nodes) => {
                    graph.productions.push(Production {
                        heads: prev.clone(),
                        successors: nodes.iter().cloned().map(Successor::Node).collect(),
                        bindings: Vec::new(),
                    });
                    prev = nodes.clone();
                }
                Step::Call(target) => {
                    let is_last = i + 1 == steps.len();
                    graph.productions.push(Production {
                        heads: prev.clone(),
                        successors: vec![Successor::Node(target.clone())],
                        bindings: Vec::new(),
                    });
                    if is_last {
                        prev = vec![target.clone()];
                    }
                }
                Step::Receive(bindings) => {
                    let mut succ = vec![Successor::Node(FlowNode::tag("set"))];
                    let mut next_prev = vec![FlowNode::tag("set")];
                    if let Some(Step::Nodes(nodes)) = steps.get(i + 1) {
                        succ.extend(nodes.iter().cloned().map(Successor::Node));
                        next_prev = nodes.clone();
                        i += 1;
                    }
                    graph.productions.push(Production {
                        heads: prev.clone(),
                        successors: succ,
                        bindings: bindings.clone(),
                    });
                    prev = next_prev;
                }
            }
            i += 1;
        }
    }
    Ok(graph)
}

fn tag_is_update(node: &FlowNode) -> bool {
    matches!(node, FlowNode::Abstract(t) if t.starts_with("r:update"))
}
