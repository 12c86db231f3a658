//! Recursive-descent parser and pretty-printer for `.blm` sources.
//!
//! ```text
//! file    := (service | external)*
//! external:= "external" IDENT [";"]
//! service := "service" IDENT ["as" IDENT] "{" stmt* "}"
//! stmt    := [LABEL ":"] op [";"]
//! ```
//! See `docs/blm-grammar.md` for the statement forms.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{
    is_label, validate_model, ArithOp, Atom, CmpOp, Condition, ElementIndex, ElementKind, Literal, LogicElement,
    LogicModel, Operand, Operation, Param, ReturnDef, SemanticType, ServiceDef,
};

pub use crate::flow::text::parse_flow_productions;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub(crate) fn at(line: usize, column: usize, length: usize) -> SourceSpan {
        SourceSpan { file: "<input>".into(), line, column, length }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    DuplicateLabel(String),
    UnknownStatement(String),
    /// The text parsed but breaks a model invariant.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn syntax(span: SourceSpan, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax,
            span,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Attach a file name to the span.
    pub fn in_file(mut self, file: &str) -> ParseError {
        self.span.file = file.to_string();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Num(f64),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Var(s) => write!(f, "`${s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

const PUNCTS: [&str; 20] =
    ["->", "==", "!=", ">=", "<=", "&&", "{", "}", "(", ")", "[", "]", ",", ";", ":", "=", ">", "<", "+", "-"];

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' || (c == '/' && bytes.get(i + 1) == Some(&'/')) {
            while i < bytes.len() && bytes[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let span = |len: usize| SourceSpan::at(start.0, start.1, len);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == '_') {
                j += 1;
            }
            let word: String = bytes[i..j].iter().collect();
            out.push(Token { tok: Tok::Ident(word), span: span(j - i) });
            advance(j - i, &mut i, &mut col);
            continue;
        }
        if c == '$' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == '_') {
                j += 1;
            }
            let name: String = bytes[i + 1..j].iter().collect();
            if !crate::model::is_ident(&name) {
                return Err(ParseError::syntax(span(j - i), "expected variable name after `$`", &["identifier"]));
            }
            out.push(Token { tok: Tok::Var(name), span: span(j - i) });
            advance(j - i, &mut i, &mut col);
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < bytes.len() && bytes[j] == '.' && bytes[j + 1].is_ascii_digit() {
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let num: String = bytes[i..j].iter().collect();
            let value =
                num.parse::<f64>().map_err(|_| ParseError::syntax(span(j - i), "malformed number", &["number"]))?;
            out.push(Token { tok: Tok::Num(value), span: span(j - i) });
            advance(j - i, &mut i, &mut col);
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j] != '"' && bytes[j] != '\n' {
                j += 1;
            }
            if j >= bytes.len() || bytes[j] != '"' {
                return Err(ParseError::syntax(span(j - i), "unterminated string literal", &["\""]));
            }
            let s: String = bytes[i + 1..j].iter().collect();
            out.push(Token { tok: Tok::Str(s), span: span(j + 1 - i) });
            advance(j + 1 - i, &mut i, &mut col);
            continue;
        }
        if c == '→' {
            out.push(Token { tok: Tok::Punct("->"), span: span(1) });
            advance(1, &mut i, &mut col);
            continue;
        }
        let rest: String = bytes[i..(i + 2).min(bytes.len())].iter().collect();
        if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            out.push(Token { tok: Tok::Punct(p), span: span(p.len()) });
            advance(p.len(), &mut i, &mut col);
            continue;
        }
        if c == '.' {
            out.push(Token { tok: Tok::Punct("."), span: span(1) });
            advance(1, &mut i, &mut col);
            continue;
        }
        return Err(ParseError::syntax(span(1), format!("unexpected character `{c}`"), &[]));
    }
    out.push(Token { tok: Tok::Eof, span: SourceSpan::at(line, col, 0) });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    spans: HashMap<String, SourceSpan>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::syntax(
            self.span(),
            format!("unexpected {}, expected {}", self.peek(), expected.join(" or ")),
            expected,
        )
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&[p]))
        }
    }

    fn expect_word(&mut self, w: &'static str) -> Result<(), ParseError> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[w]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn file(&mut self) -> Result<LogicModel, ParseError> {
        let mut model = LogicModel::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(w) if w == "external" => {
                    self.bump();
                    let name = self.ident()?;
                    self.eat_punct(";");
                    model.externals.insert(name);
                }
                Tok::Ident(w) if w == "service" => {
                    let span = self.span();
                    let svc = self.service()?;
                    if model.services.contains_key(&svc.name) || model.externals.contains(&svc.name) {
                        return Err(ParseError::syntax(span, format!("service `{}` declared twice", svc.name), &[]));
                    }
                    model.services.insert(svc.name.clone(), svc);
                }
                _ => return Err(self.unexpected(&["service", "external"])),
            }
        }
        Ok(model)
    }

    fn service(&mut self) -> Result<ServiceDef, ParseError> {
        self.expect_word("service")?;
        let name = self.ident()?;
        let mut svc = ServiceDef::new(&name);
        if self.is_word("as") {
            self.bump();
            svc.alias = Some(self.ident()?);
        }
        self.expect_punct("{")?;
        let mut ordinals: BTreeMap<ElementKind, usize> = BTreeMap::new();
        let roots = self.block(&mut svc, &mut ordinals, true)?;
        svc.roots = roots;
        self.expect_punct("}")?;
        self.eat_punct(";");
        Ok(svc)
    }

    /// Parses statements until `}`; returns the labels of the block's direct members.
    fn block(
        &mut self,
        svc: &mut ServiceDef,
        ordinals: &mut BTreeMap<ElementKind, usize>,
        top: bool,
    ) -> Result<Vec<String>, ParseError> {
        let mut members = Vec::new();
        while !self.is_punct("}") {
            if svc.ret.is_some() {
                return Err(ParseError::syntax(
                    self.span(),
                    "`return` must be the last statement of a service",
                    &["}"],
                ));
            }
            let label_span = self.span();
            let label = match (self.peek().clone(), self.peek_at(1)) {
                (Tok::Ident(l), Tok::Punct(":")) => {
                    if !is_label(&l) {
                        return Err(ParseError::syntax(
                            label_span,
                            format!("`{l}` is not a valid label"),
                            &["BF", "DR", "CR", "P"],
                        ));
                    }
                    self.bump();
                    self.bump();
                    Some(l)
                }
                _ => None,
            };
            let kw_span = self.span();
            let keyword = match self.peek().clone() {
                Tok::Ident(w) => w,
                Tok::Eof => return Err(self.unexpected(&["statement", "}"])),
                _ => return Err(self.unexpected(&["statement"])),
            };
            if keyword == "return" {
                if !top {
                    return Err(ParseError::syntax(kw_span, "`return` is only allowed at service level", &[]));
                }
                self.bump();
                let label = label.unwrap_or_else(|| crate::model::DEFAULT_PRODUCT_LABEL.to_string());
                if ElementKind::from_label(&label) != Some(ElementKind::Product) {
                    return Err(ParseError::syntax(
                        label_span,
                        format!("return label `{label}` must start with P"),
                        &["P"],
                    ));
                }
                if svc.element(&label).is_some() {
                    return Err(duplicate(&svc.name, &label, label_span));
                }
                let var = self.ident()?;
                let value = if self.eat_punct("=") { Some(self.operand()?) } else { None };
                self.eat_punct(";");
                svc.ret = Some(ReturnDef { label, var, value });
                continue;
            }
            let Some(op) = Operation::from_keyword(&keyword) else {
                return Err(ParseError {
                    kind: ParseErrorKind::UnknownStatement(keyword.clone()),
                    span: kw_span,
                    message: format!("unknown statement `{keyword}`"),
                    expected: Operation::ALL.iter().map(|o| o.keyword().to_string()).collect(),
                });
            };
            self.bump();
            let kind = op.kind();
            let n = ordinals.entry(kind).or_insert(0);
            *n += 1;
            let local = match label {
                Some(l) => {
                    if ElementKind::from_label(&l) != Some(kind) {
                        return Err(ParseError::syntax(
                            label_span,
                            format!("label `{l}` does not match statement kind {kind}"),
                            &[kind.prefix()],
                        ));
                    }
                    l
                }
                None => format!("{}{}", kind.prefix(), n),
            };
            if svc.element(&local).is_some() {
                return Err(duplicate(&svc.name, &local, label_span));
            }
            self.spans.insert(format!("{}.{}", svc.name, local), label_span);
            let mut el = LogicElement::new(ElementIndex::new(&svc.name, &local), op);
            let position = svc.elements.len();
            svc.elements.push(el.clone());
            self.statement(&mut el, svc, ordinals)?;
            svc.elements[position] = el;
            members.push(local);
            if !self.is_punct("}") {
                self.eat_punct(";");
            }
        }
        Ok(members)
    }

    fn statement(
        &mut self,
        el: &mut LogicElement,
        svc: &mut ServiceDef,
        ordinals: &mut BTreeMap<ElementKind, usize>,
    ) -> Result<(), ParseError> {
        match el.operation {
            Operation::Get | Operation::Receive => {
                el.params.push(self.param(false)?);
                while self.eat_punct(",") {
                    el.params.push(self.param(false)?);
                }
            }
            Operation::Set | Operation::Output => el.params.push(self.param(true)?),
            Operation::Compute => {
                let (name, ty) = self.typed_name()?;
                self.expect_punct("=")?;
                el.target = Some(self.ident()?);
                self.expect_punct("(")?;
                if !self.is_punct(")") {
                    el.args.push(self.operand()?);
                    while self.eat_punct(",") {
                        el.args.push(self.operand()?);
                    }
                }
                self.expect_punct(")")?;
                el.params.push(Param { name, ty: ty.unwrap_or_default(), value: None });
            }
            Operation::Select => {
                el.retrieves.push(self.ident()?);
                while self.eat_punct(",") {
                    el.retrieves.push(self.ident()?);
                }
                self.expect_word("from")?;
                el.table = Some(self.ident()?);
                if self.is_word("where") {
                    self.bump();
                    el.conditions = self.conditions()?;
                }
            }
            Operation::Update => {
                el.table = Some(self.ident()?);
                self.expect_word("set")?;
                el.params.push(self.param(true)?);
                if self.is_word("where") {
                    self.bump();
                    el.conditions = self.conditions()?;
                }
            }
            Operation::If => {
                self.expect_punct("(")?;
                el.conditions = self.conditions()?;
                self.expect_punct(")")?;
                self.expect_punct("{")?;
                el.children = self.block(svc, ordinals, false)?;
                self.expect_punct("}")?;
            }
            Operation::Invoke => {
                el.target = Some(self.ident()?);
                self.expect_punct("(")?;
                if !self.is_punct(")") {
                    el.params.push(self.arg()?);
                    while self.eat_punct(",") {
                        el.params.push(self.arg()?);
                    }
                }
                self.expect_punct(")")?;
            }
        }
        Ok(())
    }

    fn typed_name(&mut self) -> Result<(String, Option<SemanticType>), ParseError> {
        let name = self.ident()?;
        if !self.eat_punct(":") {
            return Ok((name, None));
        }
        let span = self.span();
        let ty = self.ident()?;
        let ty = SemanticType::parse(&ty).ok_or_else(|| {
            ParseError::syntax(span, format!("unknown type `{ty}`"), &["string", "double", "boolean"])
        })?;
        Ok((name, Some(ty)))
    }

    /// `name[: type][= operand]`; the type defaults to the literal's type, else string.
    fn param(&mut self, value_required: bool) -> Result<Param, ParseError> {
        let (name, ty) = self.typed_name()?;
        let value = if value_required {
            self.expect_punct("=")?;
            Some(self.operand()?)
        } else if self.eat_punct("=") {
            Some(self.operand()?)
        } else {
            None
        };
        let inferred = value.as_ref().and_then(Operand::as_literal).map(Literal::semantic_type);
        Ok(Param { name, ty: ty.or(inferred).unwrap_or_default(), value })
    }

    /// Invoke argument: `param[: type][= operand]`, the value defaulting to `$param`.
    fn arg(&mut self) -> Result<Param, ParseError> {
        let mut p = self.param(false)?;
        if p.value.is_none() {
            p.value = Some(Operand::var(&p.name));
        }
        Ok(p)
    }

    fn conditions(&mut self) -> Result<Vec<Condition>, ParseError> {
        let mut out = vec![self.condition()?];
        loop {
            if self.is_word("and") {
                self.bump();
            } else if !self.eat_punct("&&") {
                break;
            }
            out.push(self.condition()?);
        }
        Ok(out)
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let lhs = self.operand()?;
        let op = match self.peek() {
            Tok::Punct(p) => CmpOp::ALL.into_iter().find(|c| c.symbol() == *p),
            _ => None,
        };
        let Some(op) = op else {
            return Err(self.unexpected(&["==", "!=", ">", "<", ">=", "<="]));
        };
        self.bump();
        let rhs = self.operand()?;
        Ok(Condition { lhs, op, rhs })
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        let first = self.atom()?;
        let op = if self.is_punct("+") {
            ArithOp::Add
        } else if self.is_punct("-") {
            ArithOp::Sub
        } else {
            return Ok(Operand::Atom(first));
        };
        self.bump();
        Ok(Operand::Binary(first, op, self.atom()?))
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let atom = match self.peek().clone() {
            Tok::Var(v) => Atom::Var(v),
            Tok::Num(n) => Atom::Lit(Literal::Num(n)),
            Tok::Str(s) => Atom::Lit(Literal::Str(s)),
            Tok::Ident(w) if w == "true" || w == "false" => Atom::Lit(Literal::Bool(w == "true")),
            Tok::Ident(w) if w == "db" && *self.peek_at(1) == Tok::Punct(".") => {
                self.bump();
                self.bump();
                let field = self.ident()?;
                return Ok(Atom::Db(field));
            }
            _ => return Err(self.unexpected(&["$variable", "db.field", "literal"])),
        };
        self.bump();
        Ok(atom)
    }
}

fn duplicate(service: &str, local: &str, span: SourceSpan) -> ParseError {
    let q = format!("{service}.{local}");
    ParseError {
        kind: ParseErrorKind::DuplicateLabel(q.clone()),
        span,
        message: format!("duplicate label `{q}`"),
        expected: Vec::new(),
    }
}

/// Parses `.blm` text into a validated model.
pub fn parse_source(text: &str) -> Result<LogicModel, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, spans: HashMap::new() };
    let model = p.file()?;
    let report = validate_model(&model);
    if let Some(v) = report.violations.first() {
        let span = p.spans.get(&v.subject).cloned().unwrap_or_else(|| SourceSpan::at(1, 1, 0));
        return Err(ParseError { kind: ParseErrorKind::Invalid, span, message: v.to_string(), expected: Vec::new() });
    }
    Ok(model)
}

/// Renders a model as `.blm` text that parses back to an equal model.
pub fn print_model(model: &LogicModel) -> String {
    let mut out = String::new();
    for ext in &model.externals {
        let _ = writeln!(out, "external {ext};");
    }
    for (i, svc) in model.services.values().enumerate() {
        if i > 0 || !model.externals.is_empty() {
            out.push('\n');
        }
        let _ = write!(out, "service {}", svc.name);
        if let Some(alias) = &svc.alias {
            let _ = write!(out, " as {alias}");
        }
        out.push_str(" {\n");
        print_block(&mut out, svc, &svc.roots, 1);
        if let Some(ret) = &svc.ret {
            let _ = write!(out, "  {}: return {}", ret.label, ret.var);
            if let Some(v) = &ret.value {
                let _ = write!(out, " = {v}");
            }
            out.push_str(";\n");
        }
        out.push_str("}\n");
    }
    out
}

fn print_block(out: &mut String, svc: &ServiceDef, labels: &[String], depth: usize) {
    let pad = "  ".repeat(depth);
    for label in labels {
        let Some(el) = svc.element(label) else { continue };
        let _ = write!(out, "{pad}{}: {} ", el.index.local, el.operation);
        match el.operation {
            Operation::Get | Operation::Receive => out.push_str(&join_params(&el.params)),
            Operation::Set | Operation::Output => out.push_str(&join_params(&el.params)),
            Operation::Compute => {
                let p = &el.params[0];
                let args: Vec<String> = el.args.iter().map(|a| a.to_string()).collect();
                let _ = write!(
                    out,
                    "{}: {} = {}({})",
                    p.name,
                    p.ty,
                    el.target.as_deref().unwrap_or_default(),
                    args.join(", ")
                );
            }
            Operation::Select => {
                let _ = write!(out, "{} from {}", el.retrieves.join(", "), el.table.as_deref().unwrap_or_default());
                write_where(out, &el.conditions);
            }
            Operation::Update => {
                let _ = write!(out, "{} set {}", el.table.as_deref().unwrap_or_default(), join_params(&el.params));
                write_where(out, &el.conditions);
            }
            Operation::If => {
                let _ = writeln!(out, "({}) {{", join_conditions(&el.conditions));
                print_block(out, svc, &el.children, depth + 1);
                let _ = writeln!(out, "{pad}}}");
                continue;
            }
            Operation::Invoke => {
                let _ = write!(out, "{}({})", el.target.as_deref().unwrap_or_default(), join_params(&el.params));
            }
        }
        out.push_str(";\n");
    }
}

fn join_params(params: &[Param]) -> String {
    params
        .iter()
        .map(|p| match &p.value {
            Some(v) => format!("{}: {} = {}", p.name, p.ty, v),
            None => format!("{}: {}", p.name, p.ty),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn join_conditions(conds: &[Condition]) -> String {
    conds.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" && ")
}

fn write_where(out: &mut String, conds: &[Condition]) {
    if !conds.is_empty() {
        let _ = write!(out, " where {}", join_conditions(conds));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_service() {
        let m = parse_source("service s { }").unwrap();
        assert_eq!(m.services["s"].elements.len(), 0);
    }

    #[test]
    fn duplicate_label() {
        let err = parse_source("service s { BF1: get a; BF1: get b }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateLabel("s.BF1".into()));
        assert_eq!((err.span.line, err.span.column), (1, 25));
    }

    #[test]
    fn unknown_statement() {
        let err = parse_source("service s {\n  frobnicate x\n}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownStatement("frobnicate".into()));
        assert_eq!(err.span.line, 2);
    }

    #[test]
    fn auto_indices_count_per_kind() {
        let m = parse_source("service s { get a; select b from t; BF7: set c = 1; if ($a == 1) { output d = $c } }")
            .unwrap();
        let labels: Vec<_> = m.services["s"].elements.iter().map(|e| e.local().to_string()).collect();
        assert_eq!(labels, ["BF1", "DR1", "BF7", "CR1", "BF3"]);
    }

    #[test]
    fn label_kind_mismatch() {
        let err = parse_source("service s { DR1: get a }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn db_outside_data_rule_is_invalid() {
        let err = parse_source("service s { set a = db.x }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Invalid);
    }

    #[test]
    fn unresolved_invoke_is_invalid_unless_external() {
        assert!(parse_source("service s { invoke t() }").is_err());
        assert!(parse_source("external t;\nservice s { invoke t() }").is_ok());
    }

    #[test]
    fn print_roundtrip() {
        let text = "external gw;\nservice s as flow { get a: double; select b, c from t where db.k == $a && $a > 3;\n\
                    if ($b != \"x\") { compute d: double = f($a, 2); update t set b: string = $b + \"y\" where db.k == $a; invoke gw(z: double = $d) }\n\
                    P4: return r = $d - 1 }";
        let m = parse_source(text).unwrap();
        let printed = print_model(&m);
        assert_eq!(parse_source(&printed).unwrap(), m);
    }

    #[test]
    fn errors_point_inside_input() {
        for bad in
            ["service", "service s {", "service s { get }", "service s { if ($a) {} }", "service s { set a = \"x }"]
        {
            let err = parse_source(bad).unwrap_err();
            let lines: Vec<&str> = bad.split('\n').collect();
            assert!(err.span.line >= 1 && err.span.line <= lines.len(), "{bad}: {err}");
            assert!(err.span.column >= 1 && err.span.column <= lines[err.span.line - 1].chars().count() + 1);
        }
    }
}
