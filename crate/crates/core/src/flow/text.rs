//! Line-oriented production text: `head -> {a, [b, c]} x=y`.

use std::fmt::Write as _;

use super::{FlowGraph, FlowNode, Production, Successor};
use crate::parser::{ParseError, SourceSpan};

fn join(nodes: &[FlowNode]) -> String {
    nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
}

/// One production per line, in stored order.
pub fn emit_productions(graph: &FlowGraph) -> String {
    let mut out = String::new();
    for p in &graph.productions {
        if p.heads.len() == 1 {
            out.push_str(&p.heads[0].to_string());
        } else {
            let _ = write!(out, "{{{}}}", join(&p.heads));
        }
        let succ: Vec<String> = p
            .successors
            .iter()
            .map(|s| match s {
                Successor::Node(n) => n.to_string(),
                Successor::Fork(ns) => format!("[{}]", join(ns)),
            })
            .collect();
        let _ = write!(out, " -> {{{}}}", succ.join(", "));
        for (a, b) in &p.bindings {
            let _ = write!(out, " {a}={b}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Arrow,
    Sym(char),
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let is_word = |c: char| c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '.' | '-' | '=');
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '→' {
            out.push((Tok::Arrow, col));
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, col));
            i += 2;
        } else if matches!(c, '{' | '}' | '[' | ']' | ',') {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else if is_word(c) {
            let start = i;
            while i < chars.len() && is_word(chars[i]) && !(chars[i] == '-' && chars.get(i + 1) == Some(&'>')) {
                i += 1;
            }
            out.push((Tok::Word(chars[start..i].iter().collect()), col));
        } else {
            return Err(ParseError::syntax(
                SourceSpan::at(line_no, col, 1),
                format!("unexpected character `{c}`"),
                &[],
            ));
        }
    }
    Ok(out)
}

struct LineParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    width: usize,
}

impl LineParser {
    fn err(&self, message: &str, expected: &[&str]) -> ParseError {
        let col = self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.width + 1);
        ParseError::syntax(SourceSpan::at(self.line, col, 1), message, expected)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, sym: char) -> bool {
        if self.peek() == Some(&Tok::Sym(sym)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: char) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{sym}`"), &[&sym.to_string()]))
        }
    }

    fn node(&mut self) -> Result<FlowNode, ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => match FlowNode::parse(w) {
                Some(n) => {
                    self.pos += 1;
                    Ok(n)
                }
                None => Err(self.err(&format!("`{w}` is not a flow node"), &["node"])),
            },
            _ => Err(self.err("expected a flow node", &["node"])),
        }
    }

    fn node_list(&mut self, close: char) -> Result<Vec<FlowNode>, ParseError> {
        let mut out = vec![self.node()?];
        while self.eat(',') {
            out.push(self.node()?);
        }
        self.expect(close)?;
        Ok(out)
    }

    fn production(&mut self) -> Result<Production, ParseError> {
        let heads = if self.eat('{') { self.node_list('}')? } else { vec![self.node()?] };
        if self.peek() != Some(&Tok::Arrow) {
            return Err(self.err("expected `->`", &["->"]));
        }
        self.pos += 1;
        self.expect('{')?;
        let mut successors = Vec::new();
        loop {
            if self.eat('[') {
                let fork = self.node_list(']')?;
                if fork.len() < 2 {
                    return Err(self.err("a fork needs at least two branches", &[]));
                }
                successors.push(Successor::Fork(fork));
            } else {
                successors.push(Successor::Node(self.node()?));
            }
            if !self.eat(',') {
                break;
            }
        }
        self.expect('}')?;
        let mut bindings = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            let pair = w.split_once('=').and_then(|(a, b)| Some((FlowNode::parse(a)?, FlowNode::parse(b)?)));
            match pair {
                Some(p) => bindings.push(p),
                None => return Err(self.err(&format!("malformed binding `{w}`"), &["consumer=producer"])),
            }
            self.pos += 1;
        }
        if self.pos < self.toks.len() {
            return Err(self.err("unexpected trailing input", &[]));
        }
        Ok(Production { heads, successors, bindings })
    }
}

/// Parses production text. Blank lines and `#` comments are ignored. Entry
/// nodes are the heads that never appear as a successor, in first-seen order.
pub fn parse_flow_productions(text: &str) -> Result<FlowGraph, ParseError> {
    let mut graph = FlowGraph::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default();
        if line.trim().is_empty() {
            continue;
        }
        let toks = lex_line(line, i + 1)?;
        let mut p = LineParser { toks, pos: 0, line: i + 1, width: line.chars().count() };
        graph.productions.push(p.production()?);
    }
    let targets: Vec<&FlowNode> = graph.productions.iter().flat_map(|p| p.successor_nodes()).collect();
    let mut entries: Vec<FlowNode> = Vec::new();
    for p in &graph.productions {
        for h in &p.heads {
            if !targets.contains(&h) && !entries.contains(h) {
                entries.push(h.clone());
            }
        }
    }
    graph.entries = entries;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_join_fork_and_bindings() {
        let text = "billing -> {get}\n{r:update1, r:update2} -> {store}\ntransaction -> {set, get} get=r:select get=set\nx -> {[a, b], return}\nbilling.CRr1 -> {billing.BFr1, billing.P1}\n";
        let g = parse_flow_productions(text).unwrap();
        assert_eq!(emit_productions(&g), text);
        assert_eq!(
            g.productions[4].successors[1],
            Successor::Node(FlowNode::Product(crate::model::ElementIndex::new("billing", "P1")))
        );
    }

    #[test]
    fn unicode_arrow_and_comments() {
        let g = parse_flow_productions("# c\ns → {return}\n\n").unwrap();
        assert_eq!(emit_productions(&g), "s -> {return}\n");
        assert_eq!(g.entries, vec![FlowNode::tag("s")]);
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = parse_flow_productions("s -> {get}\nget {store}\n").unwrap_err();
        assert_eq!((e.span.line, e.span.column), (2, 5));
        let e = parse_flow_productions("s -> {r:bogus}\n").unwrap_err();
        assert_eq!(e.span.column, 7);
        assert!(parse_flow_productions("s -> {}\n").is_err());
        assert!(parse_flow_productions("s -> {[a]}\n").is_err());
    }
}
