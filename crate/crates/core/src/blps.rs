//! BLPS 1.0: canonical XML documents describing a service's logic and
//! evaluated properties.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::model::{
    validate_model, CmpOp, Condition, ElementIndex, LogicElement, LogicModel, Operand, Operation, Param, ReturnDef,
    SemanticType, ServiceDef,
};
use crate::props::{sorted, PropertySets};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlpsError {
    #[error("malformed XML at byte {position}: {message}")]
    Xml { position: u64, message: String },
    #[error("<{element}>: {reason}")]
    Schema { element: String, reason: String },
    #[error("property index `{0}` does not name a body element")]
    DanglingIndex(String),
    #[error("unknown service `{0}`")]
    UnknownService(String),
}

fn schema(element: &str, reason: impl Into<String>) -> BlpsError {
    BlpsError::Schema { element: element.to_string(), reason: reason.into() }
}

/// Property lists as written in the document. Entries are local labels, or
/// qualified `service.label` in multi-service documents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PropertyBlock {
    pub cf: Option<Vec<String>>,
    pub tf: Option<Vec<String>>,
    /// `(AF, NAF)`
    pub access: Option<(Vec<String>, Vec<String>)>,
}

impl PropertyBlock {
    fn entries(&self) -> impl Iterator<Item = &String> {
        self.cf
            .iter()
            .flatten()
            .chain(self.tf.iter().flatten())
            .chain(self.access.iter().flat_map(|(a, n)| a.iter().chain(n)))
    }
}

/// A body element and its guarded branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BlpsElement {
    /// The element without its `children` labels; those are `children` here.
    pub element: LogicElement,
    pub children: Vec<BlpsElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlpsService {
    pub name: String,
    pub alias: Option<String>,
    pub elements: Vec<BlpsElement>,
    pub ret: Option<ReturnDef>,
}

impl BlpsService {
    fn labels(&self) -> BTreeSet<String> {
        fn go(out: &mut BTreeSet<String>, els: &[BlpsElement]) {
            for e in els {
                out.insert(e.element.index.local.clone());
                go(out, &e.children);
            }
        }
        let mut out = BTreeSet::new();
        go(&mut out, &self.elements);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlpsDocument {
    pub name: String,
    pub properties: PropertyBlock,
    /// One service named like the document, or the inner services of an
    /// integrated document.
    pub services: Vec<BlpsService>,
    pub externals: Vec<String>,
}

impl BlpsDocument {
    pub fn is_integrated(&self) -> bool {
        !(self.services.len() == 1 && self.services[0].name == self.name)
    }
}

fn service_body(svc: &ServiceDef) -> BlpsService {
    fn build(svc: &ServiceDef, labels: &[String]) -> Vec<BlpsElement> {
        labels
            .iter()
            .filter_map(|l| svc.element(l))
            .map(|e| {
                let mut element = e.clone();
                element.children.clear();
                BlpsElement { element, children: build(svc, &e.children) }
            })
            .collect()
    }
    BlpsService {
        name: svc.name.clone(),
        alias: svc.alias.clone(),
        elements: build(svc, &svc.roots),
        ret: svc.ret.clone(),
    }
}

fn listed(set: &BTreeSet<ElementIndex>, keep: impl Fn(&ElementIndex) -> bool, qualified: bool) -> Vec<String> {
    sorted(set).into_iter().filter(|ix| keep(ix)).map(|ix| if qualified { ix.to_string() } else { ix.local }).collect()
}

fn property_block(props: &PropertySets, keep: impl Fn(&ElementIndex) -> bool + Copy, qualified: bool) -> PropertyBlock {
    PropertyBlock {
        cf: Some(listed(&props.cf, keep, qualified)),
        tf: Some(listed(&props.tf, keep, qualified)),
        access: Some((listed(&props.af, keep, qualified), listed(&props.naf, keep, qualified))),
    }
}

/// Single-service document with local indices.
pub fn generate_blps(model: &LogicModel, props: &PropertySets, service: &str) -> Result<BlpsDocument, BlpsError> {
    let svc = model.service(service).ok_or_else(|| BlpsError::UnknownService(service.to_string()))?;
    Ok(BlpsDocument {
        name: service.to_string(),
        properties: property_block(props, |ix| ix.service == service, false),
        services: vec![service_body(svc)],
        externals: model.externals.iter().cloned().collect(),
    })
}

/// Document named `name` wrapping every service of the model, with qualified indices.
pub fn generate_integrated_blps(model: &LogicModel, props: &PropertySets, name: &str) -> BlpsDocument {
    BlpsDocument {
        name: name.to_string(),
        properties: property_block(props, |_| true, true),
        services: model.services.values().map(service_body).collect(),
        externals: model.externals.iter().cloned().collect(),
    }
}

// ---------------------------------------------------------------------------
// serialization

fn attr_rank(key: &str) -> usize {
    ["index", "name", "type"].iter().position(|k| *k == key).unwrap_or(3)
}

struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    fn tag(&mut self, name: &str, attrs: &[(&str, String)], close: bool) {
        let mut attrs: Vec<&(&str, String)> = attrs.iter().collect();
        attrs.sort_by(|a, b| (attr_rank(a.0), a.0).cmp(&(attr_rank(b.0), b.0)));
        let _ = write!(self.out, "{}<{name}", "  ".repeat(self.depth));
        for (k, v) in attrs {
            let _ =
                write!(self.out, " {k}=\"{}\"", quick_xml::escape::partial_escape(v.as_str()).replace('"', "&quot;"));
        }
        self.out.push_str(if close { "/>\n" } else { ">\n" });
        if !close {
            self.depth += 1;
        }
    }

    fn end(&mut self, name: &str) {
        self.depth -= 1;
        let _ = writeln!(self.out, "{}</{name}>", "  ".repeat(self.depth));
    }

    /// `<name attrs>` with `body` inside, or `<name attrs/>` when `body` writes nothing.
    fn node(&mut self, name: &str, attrs: &[(&str, String)], body: impl FnOnce(&mut Writer)) {
        let mark = self.out.len();
        self.tag(name, attrs, false);
        let inner = self.out.len();
        body(self);
        if self.out.len() == inner {
            self.out.truncate(mark);
            self.depth -= 1;
            self.tag(name, attrs, true);
        } else {
            self.end(name);
        }
    }
}

fn param_attrs(p: &Param) -> Vec<(&'static str, String)> {
    let mut a = vec![("name", p.name.clone()), ("datatype", p.ty.as_str().to_string())];
    if let Some(v) = &p.value {
        a.push(("value", v.to_compact()));
    }
    a
}

fn write_conditions(w: &mut Writer, conds: &[Condition]) {
    if conds.is_empty() {
        return;
    }
    w.node("conditions", &[], |w| {
        for c in conds {
            w.tag(
                "condition",
                &[("expr", c.op.token().to_string()), ("lvar", c.lhs.to_compact()), ("rvar", c.rhs.to_compact())],
                true,
            );
        }
    });
}

fn write_element(w: &mut Writer, be: &BlpsElement) {
    let e = &be.element;
    let index = ("index", e.local().to_string());
    match e.operation {
        Operation::Get | Operation::Set | Operation::Output => {
            let (name, ty) = match e.operation {
                Operation::Get => ("get", "input"),
                Operation::Set => ("set", "set"),
                _ => ("assign", "output"),
            };
            w.node("function", &[index, ("name", name.into()), ("type", ty.into())], |w| {
                for p in &e.params {
                    w.tag("param", &param_attrs(p), true);
                }
            });
        }
        Operation::Compute => {
            let mut attrs = vec![index, ("name", "compute".into()), ("type", "call".into())];
            attrs.push(("target-function", e.target.clone().unwrap_or_default()));
            if let Some(p) = e.params.first() {
                attrs.push(("store-result", p.name.clone()));
                attrs.push(("return-type", p.ty.as_str().into()));
            }
            w.node("function", &attrs, |w| {
                for a in &e.args {
                    w.tag("arg", &[("value", a.to_compact())], true);
                }
            });
        }
        Operation::Invoke | Operation::Receive => {
            let mut attrs = vec![index];
            if e.operation == Operation::Invoke {
                attrs.extend([("name", "call".into()), ("type", "invoke".into())]);
                attrs.push(("target-service", e.target.clone().unwrap_or_default()));
            } else {
                attrs.extend([("name", "receive".into()), ("type", "receive".into())]);
            }
            w.node("function", &attrs, |w| {
                for p in &e.params {
                    w.tag("arg", &param_attrs(p), true);
                }
            });
        }
        Operation::Select | Operation::Update => {
            let name = if e.operation == Operation::Select { "select" } else { "update" };
            let mut attrs = vec![index, ("name", name.into()), ("type", "data manipulation".into())];
            attrs.push(("dbname", e.table.clone().unwrap_or_default()));
            w.node("rule", &attrs, |w| {
                write_conditions(w, &e.conditions);
                for r in &e.retrieves {
                    w.tag("retrieve", &[("name", r.clone())], true);
                }
                for p in &e.params {
                    let mut a = vec![("lvar", p.name.clone()), ("datatype", p.ty.as_str().to_string())];
                    a.push(("rvar", p.value.as_ref().map(Operand::to_compact).unwrap_or_default()));
                    w.tag("assign", &a, true);
                }
            });
        }
        Operation::If => {
            w.node("rule", &[index, ("name", "if".into()), ("type", "conditional".into())], |w| {
                write_conditions(w, &e.conditions);
                for c in &be.children {
                    write_element(w, c);
                }
            });
        }
    }
}

fn write_service_body(w: &mut Writer, svc: &BlpsService) {
    for e in &svc.elements {
        write_element(w, e);
    }
    if let Some(r) = &svc.ret {
        let mut a = vec![("index", r.label.clone()), ("name", r.var.clone())];
        if let Some(v) = &r.value {
            a.push(("value", v.to_compact()));
        }
        w.tag("return", &a, true);
    }
}

fn service_attrs(name: &str, alias: &Option<String>) -> Vec<(&'static str, String)> {
    let mut a = vec![("name", name.to_string())];
    if let Some(al) = alias {
        a.push(("alias", al.clone()));
    }
    a
}

/// Canonical text of `doc`.
pub fn serialize(doc: &BlpsDocument) -> String {
    let mut w = Writer { out: String::new(), depth: 0 };
    let single = (!doc.is_integrated()).then(|| &doc.services[0]);
    let alias = single.and_then(|s| s.alias.clone());
    w.node("service", &service_attrs(&doc.name, &alias), |w| {
        let p = &doc.properties;
        w.node("property", &[], |w| {
            if let Some(cf) = &p.cf {
                w.tag("computability", &[("CF", cf.join(","))], true);
            }
            if let Some(tf) = &p.tf {
                w.tag("traceability", &[("TF", tf.join(","))], true);
            }
            if let Some((af, naf)) = &p.access {
                w.tag("accessibility", &[("AF", af.join(",")), ("NAF", naf.join(","))], true);
            }
        });
        for x in &doc.externals {
            w.tag("external", &[("name", x.clone())], true);
        }
        match single {
            Some(svc) => write_service_body(w, svc),
            None => {
                for svc in &doc.services {
                    w.node("service", &service_attrs(&svc.name, &svc.alias), |w| write_service_body(w, svc));
                }
            }
        }
    });
    w.out
}

// ---------------------------------------------------------------------------
// deserialization

#[derive(Debug)]
struct XmlNode {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<XmlNode>,
}

impl XmlNode {
    fn check_attrs(&self, allowed: &[&str]) -> Result<(), BlpsError> {
        let mut seen = BTreeSet::new();
        for (k, _) in &self.attrs {
            if !allowed.contains(&k.as_str()) {
                return Err(schema(&self.name, format!("unknown attribute `{k}`")));
            }
            if !seen.insert(k) {
                return Err(schema(&self.name, format!("duplicate attribute `{k}`")));
            }
        }
        Ok(())
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn req(&self, key: &str) -> Result<&str, BlpsError> {
        self.opt(key).ok_or_else(|| schema(&self.name, format!("missing attribute `{key}`")))
    }

    fn no_children(&self) -> Result<(), BlpsError> {
        match self.children.first() {
            Some(c) => Err(schema(&self.name, format!("unexpected child <{}>", c.name))),
            None => Ok(()),
        }
    }
}

fn read_tree(text: &str) -> Result<XmlNode, BlpsError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let xml_err =
        |reader: &Reader<&[u8]>, message: String| BlpsError::Xml { position: reader.buffer_position(), message };
    let start = |e: &BytesStart<'_>, reader: &Reader<&[u8]>| -> Result<XmlNode, BlpsError> {
        let name = e.name().as_ref().to_string();
        let mut attrs = Vec::new();
        for a in e.attributes() {
            let a = a.map_err(|err| xml_err(reader, err.to_string()))?;
            let key = a.key.as_ref().to_string();
            let value = a
                .normalized_value(quick_xml::XmlVersion::Implicit1_0)
                .map_err(|err| xml_err(reader, err.to_string()))?
                .into_owned();
            attrs.push((key, value));
        }
        Ok(XmlNode { name, attrs, children: Vec::new() })
    };
    let mut stack: Vec<XmlNode> = Vec::new();
    let mut root: Option<XmlNode> = None;
    loop {
        let event = reader.read_event().map_err(|e| xml_err(&reader, e.to_string()))?;
        match event {
            Event::Start(e) | Event::Empty(e) if root.is_some() => {
                let _ = e;
                return Err(xml_err(&reader, "content after the root element".into()));
            }
            Event::Start(e) => stack.push(start(&e, &reader)?),
            Event::Empty(e) => {
                let node = start(&e, &reader)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::End(e) => {
                let node = stack.pop().ok_or_else(|| xml_err(&reader, "unbalanced end tag".into()))?;
                if e.name().as_ref() != node.name.as_str() {
                    return Err(xml_err(&reader, format!("mismatched end tag for <{}>", node.name)));
                }
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => root = Some(node),
                }
            }
            Event::Text(t) => {
                if !t.as_ref().chars().all(char::is_whitespace) {
                    return Err(xml_err(&reader, "unexpected text content".into()));
                }
            }
            Event::Decl(_) | Event::Comment(_) => {}
            Event::Eof => break,
            _ => return Err(xml_err(&reader, "unsupported XML construct".into())),
        }
    }
    if !stack.is_empty() {
        return Err(BlpsError::Xml { position: text.len() as u64, message: "unclosed element".into() });
    }
    root.ok_or_else(|| BlpsError::Xml { position: 0, message: "no root element".into() })
}

fn operand(node: &XmlNode, key: &str) -> Result<Operand, BlpsError> {
    let raw = node.req(key)?;
    Operand::parse_compact(raw).ok_or_else(|| schema(&node.name, format!("invalid operand `{raw}` in `{key}`")))
}

fn datatype(node: &XmlNode) -> Result<SemanticType, BlpsError> {
    let raw = node.req("datatype")?;
    SemanticType::parse(raw).ok_or_else(|| schema(&node.name, format!("unknown datatype `{raw}`")))
}

fn read_param(node: &XmlNode, tag: &str) -> Result<Param, BlpsError> {
    if node.name != tag {
        return Err(schema(&node.name, format!("expected <{tag}>")));
    }
    node.check_attrs(&["name", "datatype", "value"])?;
    node.no_children()?;
    let value = if node.opt("value").is_some() { Some(operand(node, "value")?) } else { None };
    Ok(Param { name: node.req("name")?.to_string(), ty: datatype(node)?, value })
}

fn read_conditions(node: &XmlNode) -> Result<Vec<Condition>, BlpsError> {
    node.check_attrs(&[])?;
    if node.children.is_empty() {
        return Err(schema("conditions", "empty condition list"));
    }
    node.children
        .iter()
        .map(|c| {
            if c.name != "condition" {
                return Err(schema(&c.name, "expected <condition>"));
            }
            c.check_attrs(&["expr", "lvar", "rvar"])?;
            c.no_children()?;
            let expr = c.req("expr")?;
            let op = CmpOp::from_token(expr).ok_or_else(|| schema("condition", format!("unknown expr `{expr}`")))?;
            Ok(Condition { lhs: operand(c, "lvar")?, op, rhs: operand(c, "rvar")? })
        })
        .collect()
}

fn read_element(node: &XmlNode, service: &str) -> Result<BlpsElement, BlpsError> {
    let index = node.req("index")?;
    if !crate::model::is_label(index) {
        return Err(schema(&node.name, format!("invalid index `{index}`")));
    }
    let name = node.req("name")?;
    let ty = node.req("type")?;
    let op = match (node.name.as_str(), name, ty) {
        ("function", "get", "input") => Operation::Get,
        ("function", "set", "set") => Operation::Set,
        ("function", "assign", "output") => Operation::Output,
        ("function", "compute", "call") => Operation::Compute,
        ("function", "call", "invoke") => Operation::Invoke,
        ("function", "receive", "receive") => Operation::Receive,
        ("rule", "select", "data manipulation") => Operation::Select,
        ("rule", "update", "data manipulation") => Operation::Update,
        ("rule", "if", "conditional") => Operation::If,
        _ => return Err(schema(&node.name, format!("unknown kind name=`{name}` type=`{ty}`"))),
    };
    let mut e = LogicElement::new(ElementIndex::new(service, index), op);
    let mut children = Vec::new();
    match op {
        Operation::Get | Operation::Set | Operation::Output => {
            node.check_attrs(&["index", "name", "type"])?;
            for c in &node.children {
                e.params.push(read_param(c, "param")?);
            }
        }
        Operation::Compute => {
            node.check_attrs(&["index", "name", "type", "target-function", "store-result", "return-type"])?;
            e.target = Some(node.req("target-function")?.to_string());
            let ty = node.req("return-type")?;
            let ty =
                SemanticType::parse(ty).ok_or_else(|| schema("function", format!("unknown return-type `{ty}`")))?;
            e.params.push(Param { name: node.req("store-result")?.to_string(), ty, value: None });
            for c in &node.children {
                if c.name != "arg" {
                    return Err(schema(&c.name, "expected <arg>"));
                }
                c.check_attrs(&["value"])?;
                c.no_children()?;
                e.args.push(operand(c, "value")?);
            }
        }
        Operation::Invoke | Operation::Receive => {
            if op == Operation::Invoke {
                node.check_attrs(&["index", "name", "type", "target-service"])?;
                e.target = Some(node.req("target-service")?.to_string());
            } else {
                node.check_attrs(&["index", "name", "type"])?;
            }
            for c in &node.children {
                e.params.push(read_param(c, "arg")?);
            }
        }
        Operation::Select | Operation::Update | Operation::If => {
            if op == Operation::If {
                node.check_attrs(&["index", "name", "type"])?;
            } else {
                node.check_attrs(&["index", "name", "type", "dbname"])?;
                e.table = Some(node.req("dbname")?.to_string());
            }
            for (i, c) in node.children.iter().enumerate() {
                match c.name.as_str() {
                    "conditions" if i == 0 => e.conditions = read_conditions(c)?,
                    "retrieve" if op == Operation::Select => {
                        c.check_attrs(&["name"])?;
                        c.no_children()?;
                        e.retrieves.push(c.req("name")?.to_string());
                    }
                    "assign" if op == Operation::Update => {
                        c.check_attrs(&["lvar", "datatype", "rvar"])?;
                        c.no_children()?;
                        e.params.push(Param {
                            name: c.req("lvar")?.to_string(),
                            ty: datatype(c)?,
                            value: Some(operand(c, "rvar")?),
                        });
                    }
                    "function" | "rule" if op == Operation::If => children.push(read_element(c, service)?),
                    other => return Err(schema(other, format!("not allowed inside <rule name=\"{name}\">"))),
                }
            }
        }
    }
    Ok(BlpsElement { element: e, children })
}

fn read_service_body<'a>(
    nodes: impl Iterator<Item = &'a XmlNode>,
    name: &str,
    alias: Option<String>,
) -> Result<BlpsService, BlpsError> {
    let mut svc = BlpsService { name: name.to_string(), alias, elements: Vec::new(), ret: None };
    for n in nodes {
        if svc.ret.is_some() {
            return Err(schema(&n.name, "content after <return>"));
        }
        match n.name.as_str() {
            "function" | "rule" => svc.elements.push(read_element(n, name)?),
            "return" => {
                n.check_attrs(&["index", "name", "value"])?;
                n.no_children()?;
                let value = if n.opt("value").is_some() { Some(operand(n, "value")?) } else { None };
                svc.ret =
                    Some(ReturnDef { label: n.req("index")?.to_string(), var: n.req("name")?.to_string(), value });
            }
            other => return Err(schema(other, "unexpected element in service body")),
        }
    }
    Ok(svc)
}

fn split_list(s: &str) -> Vec<String> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split(',').map(str::to_string).collect()
    }
}

fn read_properties(node: &XmlNode) -> Result<PropertyBlock, BlpsError> {
    node.check_attrs(&[])?;
    let mut p = PropertyBlock::default();
    let mut last = 0;
    for c in &node.children {
        c.no_children()?;
        let rank = match c.name.as_str() {
            "computability" => {
                c.check_attrs(&["CF"])?;
                p.cf = Some(split_list(c.req("CF")?));
                1
            }
            "traceability" => {
                c.check_attrs(&["TF"])?;
                p.tf = Some(split_list(c.req("TF")?));
                2
            }
            "accessibility" => {
                c.check_attrs(&["AF", "NAF"])?;
                p.access = Some((split_list(c.req("AF")?), split_list(c.req("NAF")?)));
                3
            }
            other => return Err(schema(other, "unknown property")),
        };
        if rank <= last {
            return Err(schema(&c.name, "properties out of order or repeated"));
        }
        last = rank;
    }
    Ok(p)
}

pub fn deserialize(text: &str) -> Result<BlpsDocument, BlpsError> {
    let root = read_tree(text)?;
    if root.name != "service" {
        return Err(schema(&root.name, "root element must be <service>"));
    }
    root.check_attrs(&["name", "alias"])?;
    let name = root.req("name")?.to_string();
    let mut rest = root.children.iter().peekable();
    let properties = match rest.next() {
        Some(p) if p.name == "property" => read_properties(p)?,
        _ => return Err(schema("service", "first child must be <property>")),
    };
    let mut externals = Vec::new();
    while let Some(x) = rest.next_if(|n| n.name == "external") {
        x.check_attrs(&["name"])?;
        x.no_children()?;
        externals.push(x.req("name")?.to_string());
    }
    let nested: Vec<&XmlNode> = rest.collect();
    let services = if !nested.is_empty() && nested.iter().all(|n| n.name == "service") {
        if root.opt("alias").is_some() {
            return Err(schema("service", "alias is not allowed on an integrated document"));
        }
        let mut out = Vec::new();
        for n in nested {
            n.check_attrs(&["name", "alias"])?;
            out.push(read_service_body(n.children.iter(), n.req("name")?, n.opt("alias").map(str::to_string))?);
        }
        out
    } else {
        vec![read_service_body(nested.into_iter(), &name, root.opt("alias").map(str::to_string))?]
    };
    let doc = BlpsDocument { name, properties, services, externals };
    check_indices(&doc)?;
    Ok(doc)
}

fn check_indices(doc: &BlpsDocument) -> Result<(), BlpsError> {
    let labels: Vec<(String, BTreeSet<String>)> = doc.services.iter().map(|s| (s.name.clone(), s.labels())).collect();
    for entry in doc.properties.entries() {
        let ok = match entry.split_once('.') {
            Some((svc, local)) => labels.iter().any(|(s, l)| s == svc && l.contains(local)),
            None => labels.iter().any(|(_, l)| l.contains(entry)),
        };
        if !ok {
            return Err(BlpsError::DanglingIndex(entry.clone()));
        }
    }
    Ok(())
}

/// Rebuilds the logic model described by the document body.
pub fn to_model(doc: &BlpsDocument) -> Result<LogicModel, BlpsError> {
    fn flatten(svc: &mut ServiceDef, els: &[BlpsElement]) -> Vec<String> {
        let mut labels = Vec::new();
        for be in els {
            let pos = svc.elements.len();
            svc.elements.push(be.element.clone());
            let children = flatten(svc, &be.children);
            svc.elements[pos].children = children;
            labels.push(be.element.index.local.clone());
        }
        labels
    }
    let mut model = LogicModel::new();
    model.externals = doc.externals.iter().cloned().collect();
    for s in &doc.services {
        let mut svc = ServiceDef::new(&s.name);
        svc.alias = s.alias.clone();
        svc.ret = s.ret.clone();
        svc.roots = flatten(&mut svc, &s.elements);
        if model.services.insert(s.name.clone(), svc).is_some() {
            return Err(schema("service", format!("duplicate service `{}`", s.name)));
        }
    }
    if let Some(v) = validate_model(&model).violations.first() {
        return Err(schema("service", format!("{}: {}", v.subject, v.message)));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;

    #[test]
    fn empty_service_document() {
        let m = parse_source("service s {}").unwrap();
        let doc = generate_blps(&m, &PropertySets::default(), "s").unwrap();
        let doc = BlpsDocument { properties: PropertyBlock::default(), ..doc };
        assert_eq!(serialize(&doc), "<service name=\"s\">\n  <property/>\n</service>\n");
        assert_eq!(deserialize(&serialize(&doc)).unwrap(), doc);
    }

    #[test]
    fn unknown_service() {
        let m = parse_source("service s {}").unwrap();
        assert_eq!(generate_blps(&m, &PropertySets::default(), "t"), Err(BlpsError::UnknownService("t".into())));
    }

    #[test]
    fn dangling_and_schema_errors() {
        let text = "<service name=\"s\">\n  <property>\n    <computability CF=\"ZZ9\"/>\n  </property>\n</service>\n";
        assert_eq!(deserialize(text), Err(BlpsError::DanglingIndex("ZZ9".into())));
        let text = "<service name=\"s\">\n  <property/>\n  <widget/>\n</service>\n";
        assert!(matches!(deserialize(text), Err(BlpsError::Schema { .. })));
        let text = "<service name=\"s\" colour=\"red\"><property/></service>";
        assert!(matches!(deserialize(text), Err(BlpsError::Schema { .. })));
        assert!(matches!(deserialize("<service name=\"s\"><property/>"), Err(BlpsError::Xml { .. })));
    }

    #[test]
    fn body_round_trip_through_model() {
        let src = "service t as tt {\n  BF1: get a, b: double\n  DR1: select c from x where db.k == $a\n  CR1: if ($c - $b > 10) {\n    DR2: update x set c: double = $c - $b where db.k == $a\n    BF2: compute d: double = f($c, \"q\")\n  }\n  BF3: invoke u(p = $a)\n  P1: return d\n}\nexternal u;\n";
        let m = parse_source(src).unwrap();
        let doc = generate_blps(&m, &PropertySets::default(), "t").unwrap();
        let text = serialize(&doc);
        let back = deserialize(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(serialize(&back), text);
        assert_eq!(to_model(&back).unwrap(), m);
    }
}
