//! Integration contracts (`.ctr`) and their expansion into constraints.
//!
//! ```text
//! contract-version 1
//! contract e-payment
//! budget 100
//! trace transid
//! weight DR 2
//! bind billing.BFf1 transact
//!
//! service billing:
//!   accessible CRr1, BFf1
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{is_ident, is_label, ElementIndex, ElementKind, LogicModel};
use crate::props::{eval_accessibility, sorted, CostModel, PropError};

pub const CONTRACT_VERSION: &str = "1";
pub const DEFAULT_BUDGET: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: budget must be at least 1")]
    InvalidBudget { line: usize },
    #[error("unknown index `{0}`")]
    UnknownIndex(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    pub name: String,
    pub budget: u64,
    pub trace: BTreeSet<String>,
    pub cost: CostModel,
    /// Accessible local labels per service.
    pub accessible: BTreeMap<String, BTreeSet<String>>,
    /// Permitted `(source element, target service)` bindings.
    pub bindings: Vec<(ElementIndex, String)>,
}

impl Default for Contract {
    fn default() -> Self {
        Contract {
            name: String::new(),
            budget: DEFAULT_BUDGET,
            trace: BTreeSet::new(),
            cost: CostModel::default(),
            accessible: BTreeMap::new(),
            bindings: Vec::new(),
        }
    }
}

impl Contract {
    /// Accessible indices for the services the model defines.
    pub fn accessible_in(&self, model: &LogicModel) -> BTreeSet<ElementIndex> {
        self.accessible
            .iter()
            .filter(|(svc, _)| model.services.contains_key(*svc))
            .flat_map(|(svc, locals)| locals.iter().map(move |l| ElementIndex::new(svc, l)))
            .collect()
    }

    pub fn is_accessible(&self, index: &ElementIndex) -> bool {
        self.accessible.get(&index.service).is_some_and(|s| s.contains(&index.local))
    }

    /// Whether the binding list permits `source -> target`; an empty list permits everything.
    pub fn allows_binding(&self, source: &ElementIndex, target: &str) -> bool {
        self.bindings.is_empty() || self.bindings.iter().any(|(s, t)| s == source && t == target)
    }
}

fn kind_from_name(name: &str) -> Option<ElementKind> {
    [ElementKind::BusinessLogic, ElementKind::BusinessFunction, ElementKind::DataRule, ElementKind::ConditionalRule]
        .into_iter()
        .find(|k| k.prefix() == name)
}

fn split_list(rest: &str) -> Vec<&str> {
    rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

pub fn load_contract(text: &str) -> Result<Contract, ContractError> {
    let mut c = Contract::default();
    let mut section: Option<String> = None;
    let mut seen_header = false;
    let mut seen_name = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| ContractError::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).map(|(k, r)| (k, r.trim())).unwrap_or((line, ""));
        if !seen_header {
            if key != "contract-version" {
                return Err(err("expected `contract-version 1` header".into()));
            }
            if rest != CONTRACT_VERSION {
                return Err(err(format!("unsupported contract version `{rest}`")));
            }
            seen_header = true;
            continue;
        }
        match key {
            "contract" => {
                if seen_name || rest.split_whitespace().count() != 1 {
                    return Err(err("`contract` takes one name and appears once".into()));
                }
                c.name = rest.to_string();
                seen_name = true;
            }
            "budget" => {
                let n: u64 = rest.parse().map_err(|_| err(format!("invalid budget `{rest}`")))?;
                if n == 0 {
                    return Err(ContractError::InvalidBudget { line: line_no });
                }
                c.budget = n;
            }
            "trace" => {
                for v in split_list(rest) {
                    if !is_ident(v) {
                        return Err(err(format!("invalid variable name `{v}`")));
                    }
                    c.trace.insert(v.to_string());
                }
            }
            "weight" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [kind, w] = parts[..] else { return Err(err("expected `weight <kind> <n>`".into())) };
                let kind = kind_from_name(kind).ok_or_else(|| err(format!("unknown element kind `{kind}`")))?;
                let w: u64 = w.parse().ok().filter(|w| *w >= 1).ok_or_else(|| err(format!("invalid weight `{w}`")))?;
                c.cost.set_weight(kind, w);
            }
            "bind" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [src, target] = parts[..] else {
                    return Err(err("expected `bind <service.index> <target>`".into()));
                };
                let src = ElementIndex::parse(src).map_err(|e| err(e.to_string()))?;
                c.bindings.push((src, target.to_string()));
            }
            "service" => {
                let name = rest
                    .strip_suffix(':')
                    .map(str::trim)
                    .filter(|n| crate::model::is_ident_dashed(n))
                    .ok_or_else(|| err("expected `service <name>:`".into()))?;
                c.accessible.entry(name.to_string()).or_default();
                section = Some(name.to_string());
            }
            "accessible" => {
                let Some(svc) = &section else { return Err(err("`accessible` outside a service section".into())) };
                for item in split_list(rest) {
                    let local = match item.split_once('.') {
                        Some((s, l)) if s == svc => l,
                        Some(_) => return Err(err(format!("`{item}` does not belong to service `{svc}`"))),
                        None => item,
                    };
                    if !is_label(local) {
                        return Err(err(format!("invalid index `{item}`")));
                    }
                    c.accessible.get_mut(svc).expect("section exists").insert(local.to_string());
                }
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    if !seen_header {
        return Err(ContractError::Parse { line: 1, message: "expected `contract-version 1` header".into() });
    }
    Ok(c)
}

/// Canonical text; `load_contract` reads it back unchanged.
pub fn print_contract(c: &Contract) -> String {
    let mut out = format!("contract-version {CONTRACT_VERSION}\n");
    if !c.name.is_empty() {
        let _ = writeln!(out, "contract {}", c.name);
    }
    let _ = writeln!(out, "budget {}", c.budget);
    if !c.trace.is_empty() {
        let _ = writeln!(out, "trace {}", c.trace.iter().cloned().collect::<Vec<_>>().join(", "));
    }
    for (kind, w) in c.cost.overrides() {
        let _ = writeln!(out, "weight {} {w}", kind.prefix());
    }
    for (src, target) in &c.bindings {
        let _ = writeln!(out, "bind {src} {target}");
    }
    for (svc, locals) in &c.accessible {
        let _ = writeln!(out, "\nservice {svc}:");
        if !locals.is_empty() {
            let _ = writeln!(out, "  accessible {}", locals.iter().cloned().collect::<Vec<_>>().join(", "));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintKind {
    Accessibility,
    Computability,
    Traceability,
    Binding,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Accessibility => "accessibility",
            ConstraintKind::Computability => "computability",
            ConstraintKind::Traceability => "traceability",
            ConstraintKind::Binding => "binding",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintList {
    pub constraints: Vec<Constraint>,
}

impl ConstraintList {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }
}

/// Expands `contract` against `model`. Sections and bindings naming services
/// the model does not define are ignored.
pub fn analyze_constraints(contract: &Contract, model: &LogicModel) -> Result<ConstraintList, ContractError> {
    let (_, naf) = eval_accessibility(model, &contract.accessible_in(model)).map_err(|e| match e {
        PropError::UnknownIndex(ix) => ContractError::UnknownIndex(ix),
        other => ContractError::UnknownIndex(other.to_string()),
    })?;
    let mut out = Vec::new();
    for ix in sorted(&naf) {
        out.push(Constraint {
            kind: ConstraintKind::Accessibility,
            subject: ix.to_string(),
            detail: "not accessible to integrating services".into(),
        });
    }
    for svc in model.services.keys() {
        out.push(Constraint {
            kind: ConstraintKind::Computability,
            subject: svc.clone(),
            detail: format!("every element terminates within {} steps", contract.budget),
        });
    }
    for v in &contract.trace {
        out.push(Constraint {
            kind: ConstraintKind::Traceability,
            subject: v.clone(),
            detail: "slice must survive integration".into(),
        });
    }
    for (src, target) in &contract.bindings {
        if !model.services.contains_key(&src.service) {
            continue;
        }
        if model.lookup(src).is_err() {
            return Err(ContractError::UnknownIndex(src.to_string()));
        }
        out.push(Constraint {
            kind: ConstraintKind::Binding,
            subject: src.to_string(),
            detail: format!("may bind to {target}"),
        });
    }
    Ok(ConstraintList { constraints: out })
}
