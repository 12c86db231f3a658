//! In-memory business logic model.
//!
//! A [`LogicModel`] is a set of services; each service is an ordered tree of
//! labeled [`LogicElement`]s. Elements are addressed by a service-local label
//! (`BFr2`) or by the qualified form `service.local`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("element not found: {0}")]
    NotFound(String),
    #[error("malformed qualified index `{0}` (expected service.LOCAL)")]
    BadIndex(String),
}

/// Element taxonomy. `Product` only ever appears as a flow graph node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    BusinessLogic,
    BusinessFunction,
    DataRule,
    ConditionalRule,
    Product,
}

impl ElementKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ElementKind::BusinessLogic => "BL",
            ElementKind::BusinessFunction => "BF",
            ElementKind::DataRule => "DR",
            ElementKind::ConditionalRule => "CR",
            ElementKind::Product => "P",
        }
    }

    /// Kind implied by a label's prefix.
    pub fn from_label(label: &str) -> Option<ElementKind> {
        [
            ElementKind::BusinessLogic,
            ElementKind::BusinessFunction,
            ElementKind::DataRule,
            ElementKind::ConditionalRule,
            ElementKind::Product,
        ]
        .into_iter()
        .find(|k| label.starts_with(k.prefix()))
    }

    /// Position in canonical property-list order (functions, data rules, conditionals).
    pub fn rank(self) -> u8 {
        match self {
            ElementKind::BusinessLogic => 0,
            ElementKind::BusinessFunction => 1,
            ElementKind::DataRule => 2,
            ElementKind::ConditionalRule => 3,
            ElementKind::Product => 4,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operation {
    Get,
    Set,
    Compute,
    Select,
    Update,
    If,
    Output,
    Invoke,
    Receive,
}

impl Operation {
    pub const ALL: [Operation; 9] = [
        Operation::Get,
        Operation::Set,
        Operation::Compute,
        Operation::Select,
        Operation::Update,
        Operation::If,
        Operation::Output,
        Operation::Invoke,
        Operation::Receive,
    ];

    pub fn kind(self) -> ElementKind {
        match self {
            Operation::Select | Operation::Update => ElementKind::DataRule,
            Operation::If => ElementKind::ConditionalRule,
            _ => ElementKind::BusinessFunction,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Operation::Get => "get",
            Operation::Set => "set",
            Operation::Compute => "compute",
            Operation::Select => "select",
            Operation::Update => "update",
            Operation::If => "if",
            Operation::Output => "output",
            Operation::Invoke => "invoke",
            Operation::Receive => "receive",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Operation> {
        Operation::ALL.into_iter().find(|op| op.keyword() == s)
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum SemanticType {
    #[default]
    String,
    Double,
    Boolean,
}

impl SemanticType {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticType::String => "string",
            SemanticType::Double => "double",
            SemanticType::Boolean => "boolean",
        }
    }

    pub fn parse(s: &str) -> Option<SemanticType> {
        match s {
            "string" => Some(SemanticType::String),
            "double" => Some(SemanticType::Double),
            "boolean" => Some(SemanticType::Boolean),
            _ => None,
        }
    }
}

impl fmt::Display for SemanticType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Num(f64),
    Bool(bool),
}

impl Literal {
    pub fn semantic_type(&self) -> SemanticType {
        match self {
            Literal::Str(_) => SemanticType::String,
            Literal::Num(_) => SemanticType::Double,
            Literal::Bool(_) => SemanticType::Boolean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `$name`
    Var(String),
    /// `db.name`
    Db(String),
    Lit(Literal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
}

impl ArithOp {
    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
        }
    }
}

/// A variable, database field, literal, or a sum/difference of two of them.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Atom(Atom),
    Binary(Atom, ArithOp, Atom),
}

impl Operand {
    pub fn var(name: &str) -> Operand {
        Operand::Atom(Atom::Var(name.to_string()))
    }

    fn atoms(&self) -> impl Iterator<Item = &Atom> {
        let (a, b) = match self {
            Operand::Atom(a) => (a, None),
            Operand::Binary(a, _, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }

    /// Variable names read by this operand.
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.atoms().filter_map(|a| match a {
            Atom::Var(v) => Some(v.as_str()),
            _ => None,
        })
    }

    pub fn mentions_db(&self) -> bool {
        self.atoms().any(|a| matches!(a, Atom::Db(_)))
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.atoms().filter_map(|a| match a {
            Atom::Lit(l) => Some(l),
            _ => None,
        })
    }

    /// The single literal this operand consists of, if any.
    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Operand::Atom(Atom::Lit(l)) => Some(l),
            _ => None,
        }
    }

    /// Compact spelling used inside BLPS attributes: `$a-$b`, `'text'`.
    pub fn to_compact(&self) -> String {
        let mut out = String::new();
        match self {
            Operand::Atom(a) => write_atom(&mut out, a, '\''),
            Operand::Binary(a, op, b) => {
                write_atom(&mut out, a, '\'');
                out.push(op.symbol());
                write_atom(&mut out, b, '\'');
            }
        }
        out
    }

    /// Inverse of [`Operand::to_compact`].
    pub fn parse_compact(text: &str) -> Option<Operand> {
        let text = text.trim();
        let (first, rest) = split_atom(text)?;
        let first = parse_atom(first)?;
        let rest = rest.trim_start();
        if rest.is_empty() {
            return Some(Operand::Atom(first));
        }
        let op = match rest.chars().next()? {
            '+' => ArithOp::Add,
            '-' => ArithOp::Sub,
            _ => return None,
        };
        let (second, tail) = split_atom(rest[1..].trim_start())?;
        if !tail.trim().is_empty() {
            return None;
        }
        Some(Operand::Binary(first, op, parse_atom(second)?))
    }
}

fn split_atom(text: &str) -> Option<(&str, &str)> {
    if let Some(body) = text.strip_prefix('\'') {
        let end = body.find('\'')?;
        return Some((&text[..end + 2], &text[end + 2..]));
    }
    let end = text
        .char_indices()
        .find(|&(_, c)| c == '+' || c == '-' || c.is_whitespace())
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    if end == 0 {
        return None;
    }
    Some((&text[..end], &text[end..]))
}

fn parse_atom(tok: &str) -> Option<Atom> {
    if let Some(v) = tok.strip_prefix('$') {
        return is_ident(v).then(|| Atom::Var(v.to_string()));
    }
    if let Some(f) = tok.strip_prefix("db.") {
        return is_ident(f).then(|| Atom::Db(f.to_string()));
    }
    if let Some(s) = tok.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')) {
        return Some(Atom::Lit(Literal::Str(s.to_string())));
    }
    match tok {
        "true" => return Some(Atom::Lit(Literal::Bool(true))),
        "false" => return Some(Atom::Lit(Literal::Bool(false))),
        _ => {}
    }
    if tok.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return tok.parse::<f64>().ok().map(|n| Atom::Lit(Literal::Num(n)));
    }
    None
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_atom(out: &mut String, atom: &Atom, quote: char) {
    use std::fmt::Write;
    match atom {
        Atom::Var(v) => {
            out.push('$');
            out.push_str(v);
        }
        Atom::Db(f) => {
            out.push_str("db.");
            out.push_str(f);
        }
        Atom::Lit(Literal::Str(s)) => {
            out.push(quote);
            out.push_str(s);
            out.push(quote);
        }
        Atom::Lit(Literal::Num(n)) => {
            let _ = write!(out, "{n}");
        }
        Atom::Lit(Literal::Bool(b)) => {
            let _ = write!(out, "{b}");
        }
    }
}

/// DSL spelling: `$a - $b`, `"text"`.
impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        match self {
            Operand::Atom(a) => write_atom(&mut out, a, '"'),
            Operand::Binary(a, op, b) => {
                write_atom(&mut out, a, '"');
                out.push(' ');
                out.push(op.symbol());
                out.push(' ');
                write_atom(&mut out, b, '"');
            }
        }
        f.write_str(&out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Lt, CmpOp::Ge, CmpOp::Le];

    /// Token used in BLPS `expr` attributes.
    pub fn token(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Ne => "ne",
            CmpOp::Gt => "gt",
            CmpOp::Lt => "lt",
            CmpOp::Ge => "ge",
            CmpOp::Le => "le",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        }
    }

    pub fn from_token(s: &str) -> Option<CmpOp> {
        CmpOp::ALL.into_iter().find(|op| op.token() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl Condition {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.lhs.vars().chain(self.rhs.vars())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: SemanticType,
    pub value: Option<Operand>,
}

impl Param {
    pub fn new(name: &str, ty: SemanticType) -> Param {
        Param { name: name.to_string(), ty, value: None }
    }
}

/// `service.local` address of an element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementIndex {
    pub service: String,
    pub local: String,
}

impl ElementIndex {
    pub fn new(service: &str, local: &str) -> ElementIndex {
        ElementIndex { service: service.to_string(), local: local.to_string() }
    }

    pub fn parse(qualified: &str) -> Result<ElementIndex, ModelError> {
        match qualified.split_once('.') {
            Some((s, l)) if is_ident_dashed(s) && is_label(l) => Ok(ElementIndex::new(s, l)),
            _ => Err(ModelError::BadIndex(qualified.to_string())),
        }
    }

    pub fn kind(&self) -> Option<ElementKind> {
        ElementKind::from_label(&self.local)
    }
}

impl fmt::Display for ElementIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.service, self.local)
    }
}

/// Service names may carry dashes (`e-billing`); element labels may not.
pub(crate) fn is_ident_dashed(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// A kind-prefixed label such as `BF1` or `CRr1`.
pub fn is_label(s: &str) -> bool {
    ElementKind::from_label(s).is_some() && s.chars().all(|c| c.is_ascii_alphanumeric())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicElement {
    pub index: ElementIndex,
    pub kind: ElementKind,
    pub operation: Operation,
    /// Inputs (`get`, `receive`), the assigned variable (`set`, `compute`,
    /// `output`, `update`), or call arguments (`invoke`, name = target parameter).
    pub params: Vec<Param>,
    pub conditions: Vec<Condition>,
    /// Local labels of the guarded branch; only conditionals have children.
    pub children: Vec<String>,
    /// Local function for `compute`, target service for `invoke`.
    pub target: Option<String>,
    /// Database table for `select`/`update`.
    pub table: Option<String>,
    /// Call arguments of `compute`.
    pub args: Vec<Operand>,
    /// Variables bound by `select`.
    pub retrieves: Vec<String>,
}

impl LogicElement {
    pub fn new(index: ElementIndex, operation: Operation) -> LogicElement {
        LogicElement {
            index,
            kind: operation.kind(),
            operation,
            params: Vec::new(),
            conditions: Vec::new(),
            children: Vec::new(),
            target: None,
            table: None,
            args: Vec::new(),
            retrieves: Vec::new(),
        }
    }

    pub fn local(&self) -> &str {
        &self.index.local
    }

    /// Variables this element assigns, in declaration order.
    pub fn defs(&self) -> Vec<&str> {
        match self.operation {
            Operation::Get
            | Operation::Set
            | Operation::Compute
            | Operation::Output
            | Operation::Update
            | Operation::Receive => self.params.iter().map(|p| p.name.as_str()).collect(),
            Operation::Select => self.retrieves.iter().map(String::as_str).collect(),
            Operation::If | Operation::Invoke => Vec::new(),
        }
    }

    /// Variables this element reads. Receive inputs arrive from invoking
    /// services and are not listed here.
    pub fn uses(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.params {
            if let Some(v) = &p.value {
                out.extend(v.vars());
            }
        }
        for c in &self.conditions {
            out.extend(c.vars());
        }
        for a in &self.args {
            out.extend(a.vars());
        }
        out
    }

    fn operands(&self) -> impl Iterator<Item = &Operand> {
        self.params
            .iter()
            .filter_map(|p| p.value.as_ref())
            .chain(self.conditions.iter().flat_map(|c| [&c.lhs, &c.rhs]))
            .chain(self.args.iter())
    }
}

/// Terminal return of a service; labels the synthesized product node.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnDef {
    pub label: String,
    pub var: String,
    /// Present when the return also assigns `var`.
    pub value: Option<Operand>,
}

impl ReturnDef {
    pub fn uses(&self) -> Vec<&str> {
        match &self.value {
            Some(v) => v.vars().collect(),
            None => vec![self.var.as_str()],
        }
    }
}

pub const DEFAULT_PRODUCT_LABEL: &str = "P1";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceDef {
    pub name: String,
    /// Name used for the service in abstract flow productions.
    pub alias: Option<String>,
    pub roots: Vec<String>,
    /// Every element in document (pre-)order.
    pub elements: Vec<LogicElement>,
    pub ret: Option<ReturnDef>,
}

impl ServiceDef {
    pub fn new(name: &str) -> ServiceDef {
        ServiceDef { name: name.to_string(), alias: None, roots: Vec::new(), elements: Vec::new(), ret: None }
    }

    pub fn element(&self, local: &str) -> Option<&LogicElement> {
        self.elements.iter().find(|e| e.index.local == local)
    }

    pub fn position(&self, local: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.index.local == local)
    }

    /// The conditional whose branch directly contains `local`.
    pub fn parent_of(&self, local: &str) -> Option<&LogicElement> {
        self.elements.iter().find(|e| e.children.iter().any(|c| c == local))
    }

    pub fn product_label(&self) -> &str {
        self.ret.as_ref().map(|r| r.label.as_str()).unwrap_or(DEFAULT_PRODUCT_LABEL)
    }

    pub fn flow_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }

    /// Visits the element tree depth-first; each element is paired with the
    /// sibling list it belongs to and its position there.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&'a LogicElement, &'a [String], usize)) {
        fn go<'a>(
            svc: &'a ServiceDef,
            siblings: &'a [String],
            visit: &mut dyn FnMut(&'a LogicElement, &'a [String], usize),
            depth: usize,
        ) {
            // Malformed trees (cycles through children) are reported by validation.
            if depth > svc.elements.len() {
                return;
            }
            for (pos, label) in siblings.iter().enumerate() {
                if let Some(el) = svc.element(label) {
                    visit(el, siblings, pos);
                    go(svc, &el.children, visit, depth + 1);
                }
            }
        }
        go(self, &self.roots, &mut visit, 0);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogicModel {
    pub services: BTreeMap<String, ServiceDef>,
    /// Services that may be invoked but are defined elsewhere.
    pub externals: BTreeSet<String>,
}

impl LogicModel {
    pub fn new() -> LogicModel {
        LogicModel::default()
    }

    pub fn service(&self, name: &str) -> Option<&ServiceDef> {
        self.services.get(name)
    }

    pub fn lookup(&self, index: &ElementIndex) -> Result<&LogicElement, ModelError> {
        self.services
            .get(&index.service)
            .and_then(|s| s.element(&index.local))
            .ok_or_else(|| ModelError::NotFound(index.to_string()))
    }

    /// Looks up a qualified `service.LOCAL` index.
    pub fn element_lookup(&self, qualified: &str) -> Result<&LogicElement, ModelError> {
        let index = ElementIndex::parse(qualified).map_err(|_| ModelError::NotFound(qualified.to_string()))?;
        self.lookup(&index)
    }

    pub fn elements(&self) -> impl Iterator<Item = &LogicElement> {
        self.services.values().flat_map(|s| s.elements.iter())
    }

    pub fn element_count(&self) -> usize {
        self.services.values().map(|s| s.elements.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelViolation {
    /// Qualified index or service name.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<ModelViolation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every model invariant and reports each breach.
pub fn validate_model(model: &LogicModel) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |subject: String, message: String| out.push(ModelViolation { subject, message });

    for (name, svc) in &model.services {
        if name != &svc.name {
            push(name.clone(), format!("service registered under `{name}` is named `{}`", svc.name));
        }
        let mut seen = BTreeSet::new();
        for el in &svc.elements {
            let q = el.index.to_string();
            if el.index.service != svc.name {
                push(q.clone(), format!("element belongs to service `{}`", svc.name));
            }
            if !seen.insert(el.index.local.as_str()) {
                push(q.clone(), "duplicate index".into());
            }
            if !is_label(&el.index.local) {
                push(q.clone(), "label is not a kind-prefixed alphanumeric index".into());
            } else if ElementKind::from_label(&el.index.local) != Some(el.kind) {
                push(q.clone(), format!("label prefix does not match kind {}", el.kind));
            }
            if el.kind == ElementKind::Product || el.kind == ElementKind::BusinessLogic {
                push(q.clone(), format!("{} is not a statement kind", el.kind));
            } else if el.operation.kind() != el.kind {
                push(q.clone(), format!("operation `{}` requires kind {}", el.operation, el.operation.kind()));
            }
            if !el.children.is_empty() && el.kind != ElementKind::ConditionalRule {
                push(q.clone(), "only conditional rules may have children".into());
            }
            for c in &el.children {
                if svc.element(c).is_none() {
                    push(q.clone(), format!("child `{c}` is not defined"));
                }
            }
            if el.operation == Operation::Invoke {
                match &el.target {
                    None => push(q.clone(), "invoke without target service".into()),
                    Some(t) if !model.services.contains_key(t) && !model.externals.contains(t) => {
                        push(q.clone(), format!("invoke target `{t}` is neither defined nor external"))
                    }
                    _ => {}
                }
            }
            if el.kind != ElementKind::DataRule && el.operands().any(Operand::mentions_db) {
                push(q.clone(), "db.* operands are only allowed in data rules".into());
            }
            for p in &el.params {
                if p.name.is_empty() {
                    push(q.clone(), "parameter with empty name".into());
                }
                if let Some(lit) = p.value.as_ref().and_then(Operand::as_literal) {
                    if lit.semantic_type() != p.ty {
                        push(
                            q.clone(),
                            format!(
                                "parameter `{}` declared {} but holds a {} literal",
                                p.name,
                                p.ty,
                                lit.semantic_type()
                            ),
                        );
                    }
                }
            }
            for lit in el.operands().flat_map(Operand::literals) {
                if let Literal::Str(s) = lit {
                    if s.contains(['"', '\'']) {
                        push(q.clone(), "string literals may not contain quote characters".into());
                    }
                }
            }
        }
        for r in &svc.roots {
            if svc.element(r).is_none() {
                push(svc.name.clone(), format!("root `{r}` is not defined"));
            }
        }
        let mut visited = 0usize;
        svc.walk(|_, _, _| visited += 1);
        if visited != svc.elements.len() {
            push(svc.name.clone(), "element table does not match the element tree".into());
        }
        if let Some(ret) = &svc.ret {
            if ElementKind::from_label(&ret.label) != Some(ElementKind::Product) || !is_label(&ret.label) {
                push(svc.name.clone(), format!("return label `{}` must start with P", ret.label));
            }
            if seen.contains(ret.label.as_str()) {
                push(format!("{}.{}", svc.name, ret.label), "duplicate index".into());
            }
        }
    }
    ValidationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LogicModel {
        let mut svc = ServiceDef::new("billing");
        let mut get = LogicElement::new(ElementIndex::new("billing", "BF1"), Operation::Get);
        get.params.push(Param::new("username", SemanticType::String));
        svc.roots.push("BF1".into());
        svc.elements.push(get);
        let mut m = LogicModel::new();
        m.services.insert("billing".into(), svc);
        m
    }

    #[test]
    fn empty_model_is_valid() {
        assert!(validate_model(&LogicModel::new()).is_empty());
    }

    #[test]
    fn duplicate_label_reported_once() {
        let mut m = tiny();
        let svc = m.services.get_mut("billing").unwrap();
        let dup = svc.elements[0].clone();
        svc.roots.push("BF1".into());
        svc.elements.push(dup);
        let report = validate_model(&m);
        let dups: Vec<_> = report.violations.iter().filter(|v| v.message == "duplicate index").collect();
        assert_eq!(dups.len(), 1);
        assert_eq!(dups[0].subject, "billing.BF1");
    }

    #[test]
    fn lookup_not_found() {
        let m = tiny();
        assert!(m.element_lookup("billing.BF1").is_ok());
        assert_eq!(m.element_lookup("billing.ZZ9"), Err(ModelError::NotFound("billing.ZZ9".into())));
    }

    #[test]
    fn db_operand_outside_data_rule() {
        let mut m = tiny();
        let el = &mut m.services.get_mut("billing").unwrap().elements[0];
        el.params[0].value = Some(Operand::Atom(Atom::Db("x".into())));
        assert_eq!(validate_model(&m).violations.len(), 1);
    }

    #[test]
    fn literal_type_mismatch() {
        let mut m = tiny();
        let el = &mut m.services.get_mut("billing").unwrap().elements[0];
        el.params[0].value = Some(Operand::Atom(Atom::Lit(Literal::Num(3.0))));
        assert!(validate_model(&m).violations[0].message.contains("literal"));
    }

    #[test]
    fn compact_operands_roundtrip() {
        for text in ["$balance-$amount", "db.accountno", "1000", "'123456'", "true", "$a+2.5"] {
            let op = Operand::parse_compact(text).unwrap();
            assert_eq!(op.to_compact(), text);
        }
        assert!(Operand::parse_compact("$").is_none());
        assert!(Operand::parse_compact("$a-$b-$c").is_none());
    }

    #[test]
    fn qualified_index_parse() {
        let ix = ElementIndex::parse("e-billing.CRr1").unwrap();
        assert_eq!(ix.kind(), Some(ElementKind::ConditionalRule));
        assert!(ElementIndex::parse("billing").is_err());
        assert!(ElementIndex::parse("billing.xx").is_err());
    }
}
