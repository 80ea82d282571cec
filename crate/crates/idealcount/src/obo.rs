//! A pragmatic reader for OBO 1.2 ontologies.
//!
//! Only `[Term]` stanzas are read, and within them only `id`, `name`,
//! `namespace`, `is_a`, `relationship`, `is_obsolete` and `alt_id`. Edges
//! run from the general term to the specific one.

use std::collections::{BTreeMap, BTreeSet};

use idealcount_core::{Dag, GraphError};
use serde::Serialize;

pub const DEFAULT_RELATIONS: [&str; 2] = ["is_a", "part_of"];

#[derive(Debug, thiserror::Error)]
pub enum OboError {
    #[error("line {line}: malformed stanza: {reason}")]
    MalformedStanza { line: usize, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OntologyTerm {
    pub id: String,
    pub name: String,
    pub namespace: String,
    pub obsolete: bool,
    pub alt_ids: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct OboOptions {
    pub relations: BTreeSet<String>,
    pub namespace: Option<String>,
}

impl Default for OboOptions {
    fn default() -> Self {
        OboOptions {
            relations: DEFAULT_RELATIONS.iter().map(|r| r.to_string()).collect(),
            namespace: None,
        }
    }
}

/// Tallies of everything the parser dropped or merged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OboReport {
    pub stanzas: usize,
    pub obsolete: usize,
    pub outside_namespace: usize,
    /// Edges whose other end is unknown or obsolete.
    pub dangling: usize,
    /// Edges into a term of another namespace while a filter is active.
    pub cross_namespace: usize,
    /// Repeated parent links folded into one edge.
    pub parallel: usize,
    /// Links through relations outside the configured set.
    pub ignored_relations: usize,
}

#[derive(Debug, Clone)]
pub struct Ontology {
    pub dag: Dag,
    /// Every parsed term, obsolete ones included.
    pub terms: BTreeMap<String, OntologyTerm>,
    pub report: OboReport,
}

impl Ontology {
    pub fn namespaces(&self) -> BTreeMap<String, usize> {
        let mut tally = BTreeMap::new();
        for name in self.dag.names() {
            if let Some(t) = self.terms.get(name) {
                *tally.entry(t.namespace.clone()).or_insert(0) += 1;
            }
        }
        tally
    }
}

struct Stanza {
    line: usize,
    term: OntologyTerm,
    links: Vec<(String, String, usize)>,
}

/// Value of a tag line without its trailing `! comment` and `{modifiers}`.
fn strip(value: &str) -> &str {
    let value = value.split(" !").next().unwrap_or("");
    let value = match value.find(" {") {
        Some(i) => &value[..i],
        None => value,
    };
    value.trim()
}

fn finish(current: Option<Stanza>, out: &mut Vec<Stanza>) -> Result<(), OboError> {
    if let Some(s) = current {
        if s.term.id.is_empty() {
            return Err(OboError::MalformedStanza {
                line: s.line,
                reason: "[Term] stanza without an id".into(),
            });
        }
        out.push(s);
    }
    Ok(())
}

fn read_stanzas(text: &str) -> Result<Vec<Stanza>, OboError> {
    let mut stanzas = Vec::new();
    let mut current: Option<Stanza> = None;
    let mut in_term = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(OboError::MalformedStanza {
                    line: line_no,
                    reason: format!("bad stanza header {line:?}"),
                });
            }
            finish(current.take(), &mut stanzas)?;
            in_term = line == "[Term]";
            if in_term {
                current = Some(Stanza {
                    line: line_no,
                    term: OntologyTerm {
                        id: String::new(),
                        name: String::new(),
                        namespace: String::new(),
                        obsolete: false,
                        alt_ids: Vec::new(),
                    },
                    links: Vec::new(),
                });
            }
            continue;
        }
        let Some(s) = current.as_mut().filter(|_| in_term) else {
            continue;
        };
        let Some((tag, value)) = line.split_once(':') else {
            return Err(OboError::MalformedStanza {
                line: line_no,
                reason: format!("expected `tag: value`, found {line:?}"),
            });
        };
        let value = strip(value);
        let t = &mut s.term;
        match tag.trim() {
            "id" if !t.id.is_empty() => {
                return Err(OboError::MalformedStanza {
                    line: line_no,
                    reason: format!("second id in the stanza of {}", t.id),
                })
            }
            "id" => t.id = value.to_string(),
            "name" => t.name = value.to_string(),
            "namespace" => t.namespace = value.to_string(),
            "alt_id" => t.alt_ids.push(value.to_string()),
            "is_obsolete" => t.obsolete = value == "true",
            "is_a" => {
                let target = value.split_whitespace().next().unwrap_or("");
                if target.is_empty() {
                    return Err(OboError::MalformedStanza {
                        line: line_no,
                        reason: "is_a without a target".into(),
                    });
                }
                s.links.push(("is_a".into(), target.into(), line_no));
            }
            "relationship" => {
                let mut parts = value.split_whitespace();
                match (parts.next(), parts.next()) {
                    (Some(rel), Some(target)) => s.links.push((rel.into(), target.into(), line_no)),
                    _ => {
                        return Err(OboError::MalformedStanza {
                            line: line_no,
                            reason: format!("relationship needs a type and a target, found {value:?}"),
                        })
                    }
                }
            }
            _ => {}
        }
    }
    finish(current, &mut stanzas)?;
    Ok(stanzas)
}

pub fn parse_obo(text: &str, options: &OboOptions) -> Result<Ontology, OboError> {
    let stanzas = read_stanzas(text)?;
    let mut report = OboReport {
        stanzas: stanzas.len(),
        ..OboReport::default()
    };
    let mut terms = BTreeMap::new();
    let mut alt = BTreeMap::new();
    for s in &stanzas {
        for a in &s.term.alt_ids {
            alt.insert(a.clone(), s.term.id.clone());
        }
        terms.insert(s.term.id.clone(), s.term.clone());
    }
    let resolve = |id: &str| -> Option<&OntologyTerm> {
        let primary = alt.get(id).map(String::as_str).unwrap_or(id);
        terms.get(primary)
    };
    let in_scope =
        |t: &OntologyTerm| !t.obsolete && options.namespace.as_ref().is_none_or(|ns| *ns == t.namespace);

    let mut vertices = Vec::new();
    let mut edges = BTreeSet::new();
    for s in &stanzas {
        let t = &s.term;
        if t.obsolete {
            report.obsolete += 1;
            continue;
        }
        if !in_scope(t) {
            report.outside_namespace += 1;
            continue;
        }
        vertices.push(t.id.as_str());
        for (rel, target, line) in &s.links {
            if !options.relations.contains(rel) {
                report.ignored_relations += 1;
                continue;
            }
            let parent = match resolve(target) {
                Some(p) if !p.obsolete => p,
                _ => {
                    log::warn!(
                        "line {line}: {} {rel} {target}: unknown or obsolete term, edge dropped",
                        t.id
                    );
                    report.dangling += 1;
                    continue;
                }
            };
            if !in_scope(parent) {
                report.cross_namespace += 1;
                continue;
            }
            if !edges.insert((parent.id.as_str(), t.id.as_str())) {
                report.parallel += 1;
            }
        }
    }
    let dag = Dag::build(vertices, edges)?;
    Ok(Ontology { dag, terms, report })
}
