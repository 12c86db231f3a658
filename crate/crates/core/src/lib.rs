//! Business logic models: parsing, flow graphs, property evaluation,
//! contracts, BLPS documents, service integration and change auditing.

#![allow(clippy::result_large_err)]

pub mod audit;
pub mod blps;
pub mod contract;
pub mod flow;
pub mod integrate;
pub mod model;
pub mod parser;
pub mod props;

pub use contract::{analyze_constraints, load_contract, print_contract, Contract, ContractError};
pub use flow::{abstract_flow, build_flow, FlowError, FlowGraph, FlowNode, Production, Successor};
pub use model::{ElementIndex, ElementKind, LogicElement, LogicModel, Operation, ServiceDef};
pub use parser::{parse_source, print_model, ParseError};
pub use props::{eval_accessibility, eval_computability, eval_traceability, evaluate_all, CostModel, PropertySets};
