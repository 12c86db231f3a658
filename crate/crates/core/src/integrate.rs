//! Cross-service integration: an output of one service becomes an invoke
//! of another, which in turn receives the values.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::contract::Contract;
use crate::flow::{backward_slice, build_flow, is_known, FlowError, WeightedPaths};
use crate::model::{
    is_ident, validate_model, ElementIndex, LogicElement, LogicModel, Operand, Operation, Param, ServiceDef,
};
use crate::props::{computability_on, eval_accessibility, PropError, PropertySets};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrationError {
    #[error("unknown index `{0}`")]
    UnknownIndex(String),
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("service `{0}` is defined by both inputs")]
    ServiceClash(String),
    #[error("binding passes {found} values but `{service}` takes {expected}")]
    ArityMismatch { service: String, expected: usize, found: usize },
    #[error("binding {0} would make services invoke each other")]
    CycleIntroduced(String),
    #[error("malformed binding `{0}`")]
    BindingSyntax(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl From<PropError> for IntegrationError {
    fn from(e: PropError) -> Self {
        match e {
            PropError::Flow(f) => IntegrationError::Flow(f),
            PropError::UnknownIndex(ix) => IntegrationError::UnknownIndex(ix),
        }
    }
}

/// `source.INDEX->target(var, var:param, ...)`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingSpec {
    pub source: ElementIndex,
    pub target: String,
    /// `(source variable, target parameter)`
    pub args: Vec<(String, String)>,
}

impl BindingSpec {
    pub fn parse(text: &str) -> Result<BindingSpec, IntegrationError> {
        let bad = || IntegrationError::BindingSyntax(text.to_string());
        let (src, rest) = text.split_once("->").ok_or_else(bad)?;
        let source = ElementIndex::parse(src.trim()).map_err(|_| bad())?;
        let (target, args) = rest.trim().strip_suffix(')').and_then(|r| r.split_once('(')).ok_or_else(bad)?;
        let target = target.trim();
        if !crate::model::is_ident_dashed(target) {
            return Err(bad());
        }
        let mut out = Vec::new();
        for item in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (var, param) = item.split_once(':').map(|(a, b)| (a.trim(), b.trim())).unwrap_or((item, item));
            if !is_ident(var) || !is_ident(param) || out.iter().any(|(_, p)| p == param) {
                return Err(bad());
            }
            out.push((var.to_string(), param.to_string()));
        }
        Ok(BindingSpec { source, target: target.to_string(), args: out })
    }
}

impl fmt::Display for BindingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> =
            self.args.iter().map(|(v, p)| if v == p { v.clone() } else { format!("{v}:{p}") }).collect();
        write!(f, "{}->{}({})", self.source, self.target, args.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    AccessViolation,
    ComputabilityViolation,
    TraceBreak,
    InvalidStructure,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.kind, self.subject, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rewrite {
    Replaced { index: ElementIndex, from: Operation, to: Operation },
    Inserted(ElementIndex),
    Bound { index: ElementIndex, param: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationResult {
    pub binding: BindingSpec,
    /// Both inputs side by side, before any rewrite.
    pub original: LogicModel,
    pub model: LogicModel,
    pub rewrites: Vec<Rewrite>,
    pub properties: PropertySets,
    pub violations: Vec<Violation>,
}

impl IntegrationResult {
    pub fn is_rewritten(&self) -> bool {
        !self.rewrites.is_empty()
    }

    pub fn inserted(&self) -> BTreeSet<ElementIndex> {
        self.rewrites
            .iter()
            .filter_map(|r| match r {
                Rewrite::Inserted(ix) => Some(ix.clone()),
                _ => None,
            })
            .collect()
    }
}

fn merge(a: &LogicModel, b: &LogicModel) -> Result<LogicModel, IntegrationError> {
    let mut out = a.clone();
    for (name, svc) in &b.services {
        if out.services.insert(name.clone(), svc.clone()).is_some() {
            return Err(IntegrationError::ServiceClash(name.clone()));
        }
    }
    out.externals.extend(b.externals.iter().cloned());
    let defined: BTreeSet<String> = out.services.keys().cloned().collect();
    out.externals.retain(|x| !defined.contains(x));
    Ok(out)
}

/// Services reachable from `from` through invoke elements.
fn callees(model: &LogicModel, from: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut work = vec![from.to_string()];
    while let Some(s) = work.pop() {
        let Some(svc) = model.service(&s) else { continue };
        for e in &svc.elements {
            if let (Operation::Invoke, Some(t)) = (e.operation, &e.target) {
                if seen.insert(t.clone()) {
                    work.push(t.clone());
                }
            }
        }
    }
    seen
}

fn receive_label(svc: &ServiceDef) -> String {
    (1..)
        .map(|n| if n == 1 { "BFrcv".to_string() } else { format!("BFrcv{n}") })
        .find(|l| svc.element(l).is_none() && svc.product_label() != l)
        .expect("unbounded label supply")
}

/// Boundary checks that stop the rewrite: the source must be an accessible output.
fn boundary_violations(model: &LogicModel, binding: &BindingSpec, contract: &Contract) -> Vec<Violation> {
    let subject = binding.source.to_string();
    let mut out = Vec::new();
    if !contract.is_accessible(&binding.source) {
        out.push(Violation {
            kind: ViolationKind::AccessViolation,
            subject: subject.clone(),
            detail: format!("{subject} is not in the accessible set of {}", binding.source.service),
        });
    } else if !contract.allows_binding(&binding.source, &binding.target) {
        out.push(Violation {
            kind: ViolationKind::AccessViolation,
            subject: subject.clone(),
            detail: format!("contract does not permit binding {subject} to {}", binding.target),
        });
    } else if model.lookup(&binding.source).map(|e| e.operation) != Ok(Operation::Output) {
        out.push(Violation {
            kind: ViolationKind::InvalidStructure,
            subject,
            detail: "binding source is not an output element".into(),
        });
    }
    out
}

/// Merges both models and, when the binding is admissible, rewrites the
/// source output into an invoke of the target, which gains a receive.
pub fn integrate(
    model_a: &LogicModel,
    model_b: &LogicModel,
    binding: &BindingSpec,
    contract: &Contract,
) -> Result<IntegrationResult, IntegrationError> {
    model_a.lookup(&binding.source).map_err(|_| IntegrationError::UnknownIndex(binding.source.to_string()))?;
    let target =
        model_b.service(&binding.target).ok_or_else(|| IntegrationError::UnknownService(binding.target.clone()))?;
    let original = merge(model_a, model_b)?;
    let mut result = IntegrationResult {
        binding: binding.clone(),
        original: original.clone(),
        model: original.clone(),
        rewrites: Vec::new(),
        properties: PropertySets::default(),
        violations: Vec::new(),
    };
    if !boundary_violations(&original, binding, contract).is_empty() {
        result.properties = integrated_properties(&result, contract)?;
        result.violations = validate_integration(&result, contract);
        return Ok(result);
    }

    let first_get = target.elements.iter().find(|e| e.operation == Operation::Get);
    if let Some(get) = first_get {
        if get.params.len() != binding.args.len() {
            return Err(IntegrationError::ArityMismatch {
                service: target.name.clone(),
                expected: get.params.len(),
                found: binding.args.len(),
            });
        }
    }
    if binding.source.service == binding.target || callees(&original, &binding.target).contains(&binding.source.service)
    {
        return Err(IntegrationError::CycleIntroduced(binding.to_string()));
    }

    let param_type =
        |name: &str| first_get.and_then(|g| g.params.iter().find(|p| p.name == name)).map(|p| p.ty).unwrap_or_default();
    let args: Vec<Param> = binding
        .args
        .iter()
        .map(|(var, param)| Param { name: param.clone(), ty: param_type(param), value: Some(Operand::var(var)) })
        .collect();

    let model = &mut result.model;
    let src_svc = model.services.get_mut(&binding.source.service).expect("source service exists");
    let pos = src_svc.position(&binding.source.local).expect("source exists");
    let src = &mut src_svc.elements[pos];
    let mut invoke = LogicElement::new(src.index.clone(), Operation::Invoke);
    invoke.target = Some(binding.target.clone());
    invoke.params = args.clone();
    result.rewrites.push(Rewrite::Replaced { index: src.index.clone(), from: src.operation, to: Operation::Invoke });
    *src = invoke;

    let tgt = model.services.get_mut(&binding.target).expect("target service exists");
    let label = receive_label(tgt);
    let mut receive = LogicElement::new(ElementIndex::new(&tgt.name, &label), Operation::Receive);
    receive.params = args.iter().map(|p| Param { name: p.name.clone(), ty: p.ty, value: None }).collect();
    if let Some(get) = tgt.elements.iter_mut().find(|e| e.operation == Operation::Get) {
        for p in get.params.iter_mut().filter(|p| binding.args.iter().any(|(_, t)| *t == p.name)) {
            p.value = Some(Operand::var(&p.name));
            result.rewrites.push(Rewrite::Bound { index: get.index.clone(), param: p.name.clone() });
        }
    }
    tgt.elements.insert(0, receive);
    tgt.roots.insert(0, label.clone());
    result.rewrites.insert(1, Rewrite::Inserted(ElementIndex::new(&binding.target, &label)));

    result.properties = integrated_properties(&result, contract)?;
    result.violations = validate_integration(&result, contract);
    Ok(result)
}

/// Property sets of the merged model. Inserted receive elements are glue,
/// not logic of either partner, and are left out of CF.
pub fn integrated_properties(
    result: &IntegrationResult,
    contract: &Contract,
) -> Result<PropertySets, IntegrationError> {
    let model = &result.model;
    let graph = build_flow(model)?;
    let (mut cf, total_cost) = computability_on(model, &graph, &contract.cost, contract.budget);
    for ix in result.inserted() {
        cf.remove(&ix);
    }
    let trace: BTreeSet<String> = contract.trace.iter().filter(|v| is_known(model, v)).cloned().collect();
    let tf = if trace.is_empty() { BTreeSet::new() } else { backward_slice(model, &graph, &trace)? };
    let (af, naf) = eval_accessibility(model, &contract.accessible_in(model))?;
    Ok(PropertySets { cf, tf, af, naf, total_cost })
}

fn defined_vars(model: &LogicModel) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for svc in model.services.values() {
        for e in &svc.elements {
            out.extend(e.defs().into_iter().map(str::to_string));
        }
        if let Some(r) = svc.ret.as_ref().filter(|r| r.value.is_some()) {
            out.insert(r.var.clone());
        }
    }
    out
}

/// All contract breaches of an integration, sorted by kind then subject.
pub fn validate_integration(result: &IntegrationResult, contract: &Contract) -> Vec<Violation> {
    let mut out = boundary_violations(&result.original, &result.binding, contract);
    let model = &result.model;

    for v in validate_model(model).violations {
        out.push(Violation { kind: ViolationKind::InvalidStructure, subject: v.subject, detail: v.message });
    }

    match build_flow(model) {
        Ok(graph) => {
            let paths = WeightedPaths::new(&graph, |n| contract.cost.node_weight(model, n));
            for (entry, svc) in graph.entries.iter().zip(model.services.keys()) {
                let detail = match paths.cost(entry) {
                    None => "a cycle or dead end is reachable from the entry".to_string(),
                    Some(c) if c > contract.budget => {
                        format!("longest weighted path {c} exceeds budget {}", contract.budget)
                    }
                    Some(_) => continue,
                };
                out.push(Violation { kind: ViolationKind::ComputabilityViolation, subject: svc.clone(), detail });
            }
        }
        Err(e) => out.push(Violation {
            kind: ViolationKind::InvalidStructure,
            subject: result.binding.to_string(),
            detail: e.to_string(),
        }),
    }

    let before = defined_vars(&result.original);
    let after = defined_vars(model);
    for var in &contract.trace {
        if before.contains(var) && !after.contains(var) {
            out.push(Violation {
                kind: ViolationKind::TraceBreak,
                subject: var.clone(),
                detail: format!("`{var}` is no longer defined after the rewrite"),
            });
        }
    }

    if result.is_rewritten() {
        let source_ok = model.lookup(&result.binding.source).is_ok_and(|e| {
            e.operation == Operation::Invoke && e.target.as_deref() == Some(result.binding.target.as_str())
        });
        let receive_ok = model
            .service(&result.binding.target)
            .and_then(|s| s.elements.first())
            .is_some_and(|e| e.operation == Operation::Receive);
        if !source_ok || !receive_ok {
            out.push(Violation {
                kind: ViolationKind::InvalidStructure,
                subject: result.binding.to_string(),
                detail: "rewrite did not produce an invoke/receive pair".into(),
            });
        }
    }

    let mut out: Vec<Violation> = out.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    out.sort_by(|a, b| (a.kind, &a.subject).cmp(&(b.kind, &b.subject)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binding_syntax() {
        let b = BindingSpec::parse("billing.BFf1->transact(accno, accno1, amount)").unwrap();
        assert_eq!(b.source, ElementIndex::new("billing", "BFf1"));
        assert_eq!(b.target, "transact");
        assert_eq!(b.args[2], ("amount".into(), "amount".into()));
        let b = BindingSpec::parse("a.BF1 -> b(x:y)").unwrap();
        assert_eq!(b.to_string(), "a.BF1->b(x:y)");
        for bad in ["a.BF1", "a.BF1->b", "BF1->b(x)", "a.BF1->b(x,x)", "a.BF1->(x)", "a.BF1->b(1x)"] {
            assert!(BindingSpec::parse(bad).is_err(), "{bad}");
        }
    }
}
