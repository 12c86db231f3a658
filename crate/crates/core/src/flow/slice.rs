use std::collections::BTreeSet;

use super::{FlowError, FlowGraph, FlowNode};
use crate::model::{ElementIndex, LogicElement, LogicModel, Operation, ServiceDef};

fn definers<'a>(svc: &'a ServiceDef, var: &str) -> impl Iterator<Item = &'a LogicElement> + 'a {
    let var = var.to_string();
    svc.elements.iter().filter(move |e| e.defs().contains(&var.as_str()))
}

pub(crate) fn is_known(model: &LogicModel, var: &str) -> bool {
    model.services.values().any(|svc| {
        svc.elements.iter().any(|e| e.defs().contains(&var) || e.uses().contains(&var))
            || svc.ret.as_ref().is_some_and(|r| r.var == var || r.uses().contains(&var))
    })
}

/// Elements that may influence the final value of any of `trace`.
///
/// Dependencies are flow-insensitive def-use pairs within a service, guards
/// of enclosing conditionals, and the invokes feeding a receive (taken from
/// the call edges of `graph`).
pub fn backward_slice(
    model: &LogicModel,
    graph: &FlowGraph,
    trace: &BTreeSet<String>,
) -> Result<BTreeSet<ElementIndex>, FlowError> {
    if trace.is_empty() {
        return Err(FlowError::EmptyTrace);
    }
    let mut work: Vec<&LogicElement> = Vec::new();
    for var in trace {
        if !is_known(model, var) {
            return Err(FlowError::UnknownVariable(var.clone()));
        }
        for svc in model.services.values() {
            work.extend(definers(svc, var));
            if let Some(ret) = svc.ret.as_ref().filter(|r| r.var == *var && r.value.is_some()) {
                for u in ret.uses() {
                    work.extend(definers(svc, u));
                }
            }
        }
    }

    let mut slice: BTreeSet<ElementIndex> = BTreeSet::new();
    while let Some(el) = work.pop() {
        if !slice.insert(el.index.clone()) {
            continue;
        }
        let Some(svc) = model.service(&el.index.service) else { continue };
        for u in el.uses() {
            work.extend(definers(svc, u));
        }
        if let Some(guard) = svc.parent_of(el.local()) {
            work.push(guard);
        }
        if el.operation == Operation::Receive {
            let entry = FlowNode::tag(&svc.name);
            for (h, s) in graph.edges() {
                if *s == entry {
                    if let FlowNode::Concrete(ix) = h {
                        if let Ok(caller) = model.lookup(ix) {
                            work.push(caller);
                        }
                    }
                }
            }
        }
    }
    Ok(slice)
}
