//! Computability, traceability and accessibility property sets.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::contract::Contract;
use crate::flow::{backward_slice, build_flow, is_known, FlowError, FlowGraph, FlowNode, WeightedPaths};
use crate::model::{ElementIndex, ElementKind, LogicModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("unknown index `{0}`")]
    UnknownIndex(String),
}

/// Step cost charged for leaving an element of each kind.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CostModel {
    weights: BTreeMap<ElementKind, u64>,
}

impl CostModel {
    /// Sets the weight of `kind`; zero is raised to one.
    pub fn with_weight(mut self, kind: ElementKind, weight: u64) -> CostModel {
        self.set_weight(kind, weight);
        self
    }

    pub fn set_weight(&mut self, kind: ElementKind, weight: u64) {
        self.weights.insert(kind, weight.max(1));
    }

    pub fn weight(&self, kind: ElementKind) -> u64 {
        self.weights.get(&kind).copied().unwrap_or(1)
    }

    /// Kinds given an explicit weight.
    pub fn overrides(&self) -> impl Iterator<Item = (ElementKind, u64)> + '_ {
        self.weights.iter().map(|(k, w)| (*k, *w))
    }

    pub fn scaled(&self, factor: u64) -> CostModel {
        let mut out = CostModel::default();
        for kind in [
            ElementKind::BusinessLogic,
            ElementKind::BusinessFunction,
            ElementKind::DataRule,
            ElementKind::ConditionalRule,
        ] {
            out.set_weight(kind, self.weight(kind).saturating_mul(factor));
        }
        out
    }

    /// Weight of a flow node: the element's kind for concrete nodes, nothing
    /// for products, the service-entry weight for abstract nodes.
    pub fn node_weight(&self, model: &LogicModel, node: &FlowNode) -> u64 {
        match node {
            FlowNode::Concrete(ix) => {
                model.lookup(ix).map(|e| self.weight(e.kind)).unwrap_or(self.weight(ElementKind::BusinessLogic))
            }
            FlowNode::Product(_) => 0,
            FlowNode::Abstract(_) => self.weight(ElementKind::BusinessLogic),
        }
    }
}

/// Listing order for property sets: service, then kind, then label.
pub fn property_order(a: &ElementIndex, b: &ElementIndex) -> std::cmp::Ordering {
    let rank = |ix: &ElementIndex| ix.kind().map(ElementKind::rank).unwrap_or(u8::MAX);
    (&a.service, rank(a), &a.local).cmp(&(&b.service, rank(b), &b.local))
}

pub fn sorted(set: &BTreeSet<ElementIndex>) -> Vec<ElementIndex> {
    let mut v: Vec<ElementIndex> = set.iter().cloned().collect();
    v.sort_by(property_order);
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PropertySets {
    pub cf: BTreeSet<ElementIndex>,
    pub tf: BTreeSet<ElementIndex>,
    pub af: BTreeSet<ElementIndex>,
    pub naf: BTreeSet<ElementIndex>,
    pub total_cost: u64,
}

/// Computable elements under `graph` and the heaviest entry-to-terminal cost.
pub fn computability_on(
    model: &LogicModel,
    graph: &FlowGraph,
    cost: &CostModel,
    budget: u64,
) -> (BTreeSet<ElementIndex>, u64) {
    let paths = WeightedPaths::new(graph, |n| cost.node_weight(model, n));
    let cf = model
        .elements()
        .filter(|e| paths.cost(&FlowNode::Concrete(e.index.clone())).is_some_and(|c| c <= budget))
        .map(|e| e.index.clone())
        .collect();
    let total = graph.entries.iter().filter_map(|n| paths.cost(n)).max().unwrap_or(0);
    (cf, total)
}

/// Elements from which every path reaches a product within `budget`, with no reachable cycle.
pub fn eval_computability(
    model: &LogicModel,
    cost: &CostModel,
    budget: u64,
) -> Result<(BTreeSet<ElementIndex>, u64), PropError> {
    let graph = build_flow(model)?;
    Ok(computability_on(model, &graph, cost, budget))
}

pub fn eval_traceability(model: &LogicModel, trace: &BTreeSet<String>) -> Result<BTreeSet<ElementIndex>, PropError> {
    let graph = build_flow(model)?;
    Ok(backward_slice(model, &graph, trace)?)
}

/// Splits every element of the model into accessible and not accessible.
pub fn eval_accessibility(
    model: &LogicModel,
    accessible: &BTreeSet<ElementIndex>,
) -> Result<(BTreeSet<ElementIndex>, BTreeSet<ElementIndex>), PropError> {
    if let Some(bad) = accessible.iter().find(|ix| model.lookup(ix).is_err()) {
        return Err(PropError::UnknownIndex(bad.to_string()));
    }
    Ok(model.elements().map(|e| e.index.clone()).partition(|ix| accessible.contains(ix)))
}

/// All property sets under `contract`. Trace variables the model never
/// mentions are skipped, so one contract can cover several services.
pub fn evaluate_all(model: &LogicModel, contract: &Contract) -> Result<PropertySets, PropError> {
    let graph = build_flow(model)?;
    let (cf, total_cost) = computability_on(model, &graph, &contract.cost, contract.budget);
    let trace: BTreeSet<String> = contract.trace.iter().filter(|v| is_known(model, v)).cloned().collect();
    let tf = if trace.is_empty() { BTreeSet::new() } else { backward_slice(model, &graph, &trace)? };
    let (af, naf) = eval_accessibility(model, &contract.accessible_in(model))?;
    Ok(PropertySets { cf, tf, af, naf, total_cost })
}
