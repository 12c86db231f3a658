//! Random model generation and brute-force oracles shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use blm::model::{ElementIndex, ElementKind, LogicElement, LogicModel, Operation, ServiceDef};
use blm::props::CostModel;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> LogicModel {
    blm::parse_source(&read_fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub type Chacha = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const VARS: [&str; 5] = ["a", "b", "c", "d", "e"];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    budget: usize,
    services: Vec<String>,
}

impl<R: Rng> Gen<'_, R> {
    fn var(&mut self) -> &'static str {
        VARS[self.rng.random_range(0..VARS.len())]
    }

    fn operand(&mut self) -> String {
        match self.rng.random_range(0..6) {
            0 => format!("{}", self.rng.random_range(0..100)),
            1 => "\"x\"".to_string(),
            2 => format!("${} + ${}", self.var(), self.var()),
            _ => format!("${}", self.var()),
        }
    }

    fn statement(&mut self, depth: usize, out: &mut String, indent: usize) {
        self.budget -= 1;
        let pad = "  ".repeat(indent);
        let kind = self.rng.random_range(0..if depth < 2 { 10 } else { 9 });
        let line = match kind {
            0 => format!("get {}, {}", self.var(), self.var()).replace(", a, a", ", a"),
            1 => format!("set {} = {}", self.var(), self.operand()),
            2 => format!("compute {} = f(${})", self.var(), self.var()),
            3 => format!("select {} from t where db.k == ${}", self.var(), self.var()),
            4 => format!("update t set {} = ${} - 1 where db.k == ${}", self.var(), self.var(), self.var()),
            5 => format!("output {} = ${}", self.var(), self.var()),
            6 | 7 => {
                let n = self.services.len();
                let pick = self.rng.random_range(0..=n);
                let target = if pick == n { "ext".to_string() } else { self.services[pick].clone() };
                format!("invoke {target}(p = ${})", self.var())
            }
            8 => format!("receive {}", self.var()),
            _ => {
                let mut body = String::new();
                let n = if self.budget == 0 { 0 } else { self.rng.random_range(0..=self.budget.min(3)) };
                for _ in 0..n {
                    if self.budget > 0 {
                        self.statement(depth + 1, &mut body, indent + 1);
                    }
                }
                format!("if (${} > {}) {{\n{body}{pad}}}", self.var(), self.rng.random_range(0..10))
            }
        };
        out.push_str(&pad);
        out.push_str(&line);
        out.push('\n');
    }
}

/// DSL text for a random valid model with at most `max_elements` elements.
/// Invokes may target any service, the caller itself included, so cycles occur.
pub fn random_source<R: Rng>(rng: &mut R, max_elements: usize) -> String {
    let n_services = rng.random_range(1..=3);
    let services: Vec<String> = (0..n_services).map(|i| format!("s{i}")).collect();
    let total = rng.random_range(0..=max_elements);
    let mut g = Gen { rng, budget: total, services: services.clone() };
    let mut out = String::from("external ext;\n");
    for (i, s) in services.iter().enumerate() {
        out.push_str(&format!("service {s} {{\n"));
        let share = if i + 1 == n_services { g.budget } else { g.rng.random_range(0..=g.budget) };
        let stop = g.budget - share;
        while g.budget > stop {
            g.statement(0, &mut out, 1);
        }
        match g.rng.random_range(0..3) {
            0 => out.push_str(&format!("  return {}\n", g.var())),
            1 => {
                let (v, w) = (g.var(), g.var());
                out.push_str(&format!("  P1: return {v} = ${w}\n"));
            }
            _ => {}
        }
        out.push_str("}\n");
    }
    out
}

pub fn random_model<R: Rng>(rng: &mut R, max_elements: usize) -> (String, LogicModel) {
    let src = random_source(rng, max_elements);
    let model = blm::parse_source(&src).unwrap_or_else(|e| panic!("generator produced invalid source: {e}\n{src}"));
    (src, model)
}

pub fn random_cost<R: Rng>(rng: &mut R) -> CostModel {
    let mut c = CostModel::default();
    for k in
        [ElementKind::BusinessLogic, ElementKind::BusinessFunction, ElementKind::DataRule, ElementKind::ConditionalRule]
    {
        c.set_weight(k, rng.random_range(1..=5));
    }
    c
}

// ---------------------------------------------------------------------------
// computability oracle: explicit control semantics plus exhaustive path walk

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Elem(String, String),
    Entry(String),
    Product(String),
}

fn next_after(svc: &ServiceDef, local: &str) -> Node {
    let parent = svc.elements.iter().find(|e| e.children.iter().any(|c| c == local));
    let siblings = match parent {
        Some(p) => &p.children,
        None => &svc.roots,
    };
    let pos = siblings.iter().position(|s| s == local).expect("element in its sibling list");
    match (siblings.get(pos + 1), parent) {
        (Some(n), _) => Node::Elem(svc.name.clone(), n.clone()),
        (None, Some(p)) => next_after(svc, &p.index.local),
        (None, None) => Node::Product(svc.name.clone()),
    }
}

fn successors(model: &LogicModel, node: &Node) -> Vec<Node> {
    match node {
        Node::Product(_) => Vec::new(),
        Node::Entry(s) => {
            let svc = &model.services[s];
            svc.roots.first().map(|r| vec![Node::Elem(s.clone(), r.clone())]).unwrap_or_default()
        }
        Node::Elem(s, l) => {
            let svc = &model.services[s];
            let el = svc.elements.iter().find(|e| &e.index.local == l).unwrap();
            let next = next_after(svc, l);
            let mut out = Vec::new();
            match el.operation {
                Operation::If => {
                    if let Some(c) = el.children.first() {
                        out.push(Node::Elem(s.clone(), c.clone()));
                    }
                }
                Operation::Invoke => {
                    let t = el.target.clone().unwrap();
                    if model.services.get(&t).is_some_and(|ts| !ts.elements.is_empty()) {
                        out.push(Node::Entry(t));
                    }
                }
                _ => {}
            }
            out.push(next);
            if el.operation == Operation::Output {
                out.push(Node::Product(s.clone()));
            }
            out.dedup();
            out.sort();
            out.dedup();
            out
        }
    }
}

fn weight(model: &LogicModel, cost: &CostModel, node: &Node) -> u64 {
    match node {
        Node::Elem(s, l) => cost.weight(model.services[s].element(l).unwrap().kind),
        Node::Entry(_) => cost.weight(ElementKind::BusinessLogic),
        // reaching the product is free
        Node::Product(_) => 0,
    }
}

/// Walks every path from `node`; false on a loop, a dead end, or a path over budget.
fn all_paths_ok(
    model: &LogicModel,
    cost: &CostModel,
    node: &Node,
    spent: u64,
    budget: u64,
    on_path: &mut Vec<Node>,
) -> bool {
    if on_path.contains(node) {
        return false;
    }
    let spent = spent + weight(model, cost, node);
    let succ = successors(model, node);
    if succ.is_empty() {
        return matches!(node, Node::Product(_)) && spent <= budget;
    }
    if spent > budget {
        return false;
    }
    on_path.push(node.clone());
    let ok = succ.iter().all(|s| all_paths_ok(model, cost, s, spent, budget, on_path));
    on_path.pop();
    ok
}

pub fn oracle_cf(model: &LogicModel, cost: &CostModel, budget: u64) -> BTreeSet<ElementIndex> {
    model
        .elements()
        .filter(|e| {
            let start = Node::Elem(e.index.service.clone(), e.index.local.clone());
            all_paths_ok(model, cost, &start, 0, budget, &mut Vec::new())
        })
        .map(|e| e.index.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// slice oracle: naive fixpoint over all element pairs

fn defs(e: &LogicElement) -> BTreeSet<String> {
    match e.operation {
        Operation::Select => e.retrieves.iter().cloned().collect(),
        Operation::If | Operation::Invoke => BTreeSet::new(),
        _ => e.params.iter().map(|p| p.name.clone()).collect(),
    }
}

fn operand_vars(text: &str) -> BTreeSet<String> {
    // Operands print as `$x`, `$x + $y`, literals, or `db.k`.
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '$'))
        .filter_map(|t| t.strip_prefix('$'))
        .map(str::to_string)
        .collect()
}

fn uses(e: &LogicElement) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in &e.params {
        if let Some(v) = &p.value {
            out.extend(operand_vars(&v.to_string()));
        }
    }
    for c in &e.conditions {
        out.extend(operand_vars(&c.lhs.to_string()));
        out.extend(operand_vars(&c.rhs.to_string()));
    }
    for a in &e.args {
        out.extend(operand_vars(&a.to_string()));
    }
    out
}

pub fn oracle_slice(model: &LogicModel, trace: &BTreeSet<String>) -> BTreeSet<ElementIndex> {
    let all: Vec<&LogicElement> = model.elements().collect();
    let mut slice: BTreeSet<ElementIndex> = BTreeSet::new();
    for e in &all {
        if !defs(e).is_disjoint(trace) {
            slice.insert(e.index.clone());
        }
    }
    for svc in model.services.values() {
        if let Some(r) = svc.ret.as_ref().filter(|r| r.value.is_some() && trace.contains(&r.var)) {
            let read = operand_vars(&r.value.as_ref().unwrap().to_string());
            for e in &svc.elements {
                if !defs(e).is_disjoint(&read) {
                    slice.insert(e.index.clone());
                }
            }
        }
    }
    loop {
        let before = slice.len();
        for e in &all {
            if slice.contains(&e.index) {
                continue;
            }
            let pulled = all.iter().filter(|x| slice.contains(&x.index)).any(|x| {
                let same = x.index.service == e.index.service;
                (same && !defs(e).is_disjoint(&uses(x)))
                    || (same && e.children.contains(&x.index.local))
                    || (x.operation == Operation::Receive
                        && e.operation == Operation::Invoke
                        && e.target.as_deref() == Some(x.index.service.as_str()))
            });
            if pulled {
                slice.insert(e.index.clone());
            }
        }
        if slice.len() == before {
            return slice;
        }
    }
}

/// Variables read or written anywhere in the model.
pub fn model_vars(model: &LogicModel) -> Vec<String> {
    let mut out: BTreeSet<String> = BTreeSet::new();
    for e in model.elements() {
        out.extend(defs(e));
        out.extend(uses(e));
    }
    for svc in model.services.values() {
        if let Some(r) = &svc.ret {
            out.insert(r.var.clone());
        }
    }
    out.into_iter().collect()
}

pub fn locals(set: &BTreeSet<ElementIndex>) -> Vec<String> {
    blm::props::sorted(set).into_iter().map(|i| i.local).collect()
}

pub fn count_by_service(set: &BTreeSet<ElementIndex>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for ix in set {
        *out.entry(ix.service.clone()).or_insert(0) += 1;
    }
    out
}
