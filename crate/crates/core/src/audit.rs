//! Model diffs, property impact of a change, and the append-only audit log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::contract::Contract;
use crate::model::{ElementIndex, LogicElement, LogicModel};
use crate::props::{evaluate_all, sorted, PropError, PropertySets};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDelta {
    pub field: String,
    pub old: String,
    pub new: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChangeSet {
    pub added: BTreeSet<ElementIndex>,
    pub removed: BTreeSet<ElementIndex>,
    pub modified: BTreeMap<ElementIndex, Vec<FieldDelta>>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

/// Field name and rendered value pairs compared by the diff.
fn fields(el: &LogicElement, parent: Option<&str>) -> Vec<(String, String)> {
    let mut out = vec![("operation".to_string(), el.operation.keyword().to_string())];
    out.push(("parent".into(), parent.unwrap_or("-").to_string()));
    for (i, p) in el.params.iter().enumerate() {
        out.push((format!("param[{i}].name"), p.name.clone()));
        out.push((format!("param[{i}].type"), p.ty.as_str().to_string()));
        out.push((format!("param[{i}].value"), p.value.as_ref().map(|v| v.to_string()).unwrap_or_default()));
    }
    for (i, c) in el.conditions.iter().enumerate() {
        out.push((format!("condition[{i}].lvar"), c.lhs.to_string()));
        out.push((format!("condition[{i}].expr"), c.op.symbol().to_string()));
        out.push((format!("condition[{i}].rvar"), c.rhs.to_string()));
    }
    out.push(("children".into(), join(&el.children)));
    out.push(("target".into(), el.target.clone().unwrap_or_default()));
    out.push(("table".into(), el.table.clone().unwrap_or_default()));
    out.push(("args".into(), join(&el.args)));
    out.push(("retrieves".into(), join(&el.retrieves)));
    out
}

/// Position of a field name in the layout produced by `fields`.
fn field_rank(key: &str) -> (usize, usize, usize) {
    const SECTIONS: [&str; 9] =
        ["operation", "parent", "param", "condition", "children", "target", "table", "args", "retrieves"];
    const SUBFIELDS: [&str; 6] = ["name", "type", "value", "lvar", "expr", "rvar"];
    let (head, rest) = key.split_once('[').unwrap_or((key, ""));
    let section = SECTIONS.iter().position(|s| *s == head).unwrap_or(SECTIONS.len());
    let (pos, sub) = rest.split_once("].").unwrap_or(("0", ""));
    let sub = SUBFIELDS.iter().position(|s| *s == sub).unwrap_or(0);
    (section, pos.parse().unwrap_or(0), sub)
}

fn element_fields(model: &LogicModel) -> BTreeMap<ElementIndex, Vec<(String, String)>> {
    let mut out = BTreeMap::new();
    for svc in model.services.values() {
        for e in &svc.elements {
            let parent = svc.parent_of(e.local()).map(|p| p.local());
            out.insert(e.index.clone(), fields(e, parent));
        }
    }
    out
}

/// Element-level differences, keyed by qualified index.
pub fn diff_models(old: &LogicModel, new: &LogicModel) -> ChangeSet {
    let a = element_fields(old);
    let b = element_fields(new);
    let mut cs = ChangeSet::default();
    for (ix, fa) in &a {
        let Some(fb) = b.get(ix) else {
            cs.removed.insert(ix.clone());
            continue;
        };
        let ma: BTreeMap<&str, &str> = fa.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let mb: BTreeMap<&str, &str> = fb.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let mut deltas = Vec::new();
        let mut keys: Vec<&str> = fa.iter().map(|(k, _)| k.as_str()).collect();
        keys.extend(fb.iter().map(|(k, _)| k.as_str()).filter(|k| !ma.contains_key(k)));
        keys.sort_by_key(|k| field_rank(k));
        for k in keys {
            let (x, y) = (ma.get(k).copied().unwrap_or(""), mb.get(k).copied().unwrap_or(""));
            if x != y {
                deltas.push(FieldDelta { field: k.to_string(), old: x.to_string(), new: y.to_string() });
            }
        }
        if !deltas.is_empty() {
            cs.modified.insert(ix.clone(), deltas);
        }
    }
    cs.added = b.keys().filter(|ix| !a.contains_key(*ix)).cloned().collect();
    cs
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SetDelta {
    pub entered: BTreeSet<ElementIndex>,
    pub left: BTreeSet<ElementIndex>,
}

impl SetDelta {
    fn between(old: &BTreeSet<ElementIndex>, new: &BTreeSet<ElementIndex>) -> SetDelta {
        SetDelta { entered: new.difference(old).cloned().collect(), left: old.difference(new).cloned().collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.entered.is_empty() && self.left.is_empty()
    }
}

impl fmt::Display for SetDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &BTreeSet<ElementIndex>| join(&sorted(s));
        write!(f, "+[{}] -[{}]", list(&self.entered), list(&self.left))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    PropertiesPreserved,
    PropertiesChanged,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactReport {
    pub changes: ChangeSet,
    pub cf: SetDelta,
    pub tf: SetDelta,
    pub af: SetDelta,
    pub naf: SetDelta,
    pub verdict: Verdict,
}

pub fn impact(old: &LogicModel, new: &LogicModel, contract: &Contract) -> Result<ImpactReport, PropError> {
    let a: PropertySets = evaluate_all(old, contract)?;
    let b: PropertySets = evaluate_all(new, contract)?;
    let cf = SetDelta::between(&a.cf, &b.cf);
    let tf = SetDelta::between(&a.tf, &b.tf);
    let af = SetDelta::between(&a.af, &b.af);
    let naf = SetDelta::between(&a.naf, &b.naf);
    let verdict = if [&cf, &tf, &af, &naf].iter().all(|d| d.is_empty()) {
        Verdict::PropertiesPreserved
    } else {
        Verdict::PropertiesChanged
    };
    Ok(ImpactReport { changes: diff_models(old, new), cf, tf, af, naf, verdict })
}

/// Lowercase hex SHA-256.
pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("audit log {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("audit log line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    pub timestamp: DateTime<Utc>,
    pub actor: String,
    pub operation: String,
    pub digest: String,
    pub summary: String,
}

fn clean(field: &str) -> String {
    field.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }).collect()
}

impl AuditRecord {
    pub fn new(actor: &str, operation: &str, digest: &str, summary: &str) -> AuditRecord {
        AuditRecord {
            timestamp: Utc::now().trunc_subsecs(3),
            actor: clean(actor),
            operation: clean(operation),
            digest: clean(digest),
            summary: clean(summary),
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true),
            self.actor,
            self.operation,
            self.digest,
            self.summary
        )
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<AuditRecord, AuditError> {
        let bad = |message: &str| AuditError::Malformed { line: line_no, message: message.to_string() };
        let parts: Vec<&str> = line.splitn(5, '\t').collect();
        let [ts, actor, operation, digest, summary] = parts[..] else {
            return Err(bad("expected five tab-separated fields"));
        };
        let timestamp = DateTime::parse_from_rfc3339(ts).map_err(|_| bad("invalid timestamp"))?.with_timezone(&Utc);
        Ok(AuditRecord {
            timestamp,
            actor: actor.into(),
            operation: operation.into(),
            digest: digest.into(),
            summary: summary.into(),
        })
    }
}

/// Append-only log file, one record per line.
#[derive(Debug, Clone)]
pub struct AuditLog {
    path: PathBuf,
}

impl AuditLog {
    pub fn new(path: impl AsRef<Path>) -> AuditLog {
        AuditLog { path: path.as_ref().to_path_buf() }
    }

    fn io(&self, source: std::io::Error) -> AuditError {
        AuditError::Io { path: self.path.clone(), source }
    }

    /// Appends `rec`, raising its timestamp to the last logged one if the clock went backwards.
    pub fn record(&self, mut rec: AuditRecord) -> Result<AuditRecord, AuditError> {
        if let Some(last) = self.read_all()?.last() {
            if rec.timestamp < last.timestamp {
                rec.timestamp = last.timestamp;
            }
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(|e| self.io(e))?;
        writeln!(f, "{}", rec.to_line()).map_err(|e| self.io(e))?;
        f.sync_data().map_err(|e| self.io(e))?;
        Ok(rec)
    }

    /// Every record in order; a missing file is an empty log.
    pub fn read_all(&self) -> Result<Vec<AuditRecord>, AuditError> {
        let f = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(self.io(e)),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| self.io(e))?;
            if !line.is_empty() {
                out.push(AuditRecord::parse_line(&line, i + 1)?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_source;

    #[test]
    fn diff_identity_and_addition() {
        let m = parse_source("service s {\n  BF1: get a\n  BF2: set b = $a\n}").unwrap();
        assert!(diff_models(&m, &m).is_empty());
        let cs = diff_models(&LogicModel::new(), &m);
        assert_eq!(cs.added.len(), 2);
        assert_eq!(diff_models(&m, &LogicModel::new()).removed, cs.added);
    }

    #[test]
    fn field_level_delta() {
        let a = parse_source("service s {\n  BF1: get a\n  CR1: if ($a > 1) { BF2: set b = $a }\n}").unwrap();
        let b = parse_source("service s {\n  BF1: get a\n  CR1: if ($a > 2) { BF2: set b = $a }\n}").unwrap();
        let cs = diff_models(&a, &b);
        let d = &cs.modified[&ElementIndex::new("s", "CR1")];
        assert_eq!(d, &vec![FieldDelta { field: "condition[0].rvar".into(), old: "1".into(), new: "2".into() }]);
    }

    #[test]
    fn log_round_trip_and_clamp() {
        let dir = tempfile::tempdir().unwrap();
        let log = AuditLog::new(dir.path().join("a.log"));
        let first = log.record(AuditRecord::new("me", "eval", &digest(b"x"), "ok\twith tab")).unwrap();
        let mut early = AuditRecord::new("me", "flow", &digest(b"y"), "ok");
        early.timestamp = first.timestamp - chrono::Duration::hours(1);
        let second = log.record(early).unwrap();
        assert!(second.timestamp >= first.timestamp);
        let all = log.read_all().unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].summary, "ok with tab");
        assert_eq!(all[0].digest.len(), 64);
    }
}
