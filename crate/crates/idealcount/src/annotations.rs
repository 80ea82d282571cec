//! Annotation corpora: which entities (genes, proteins) carry which terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use idealcount_core::{Dag, VertexSet};
use serde::Serialize;

/// Experimental codes plus traceable author statement and curator inference.
pub const DEFAULT_EVIDENCE: [&str; 8] = ["EXP", "IDA", "IPI", "IMP", "IGI", "IEP", "TAS", "IC"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationCorpus {
    pub entries: BTreeMap<String, BTreeSet<String>>,
    /// Where the corpus came from and how it was filtered.
    pub provenance: String,
}

impl AnnotationCorpus {
    pub fn new(provenance: impl Into<String>) -> Self {
        AnnotationCorpus {
            entries: BTreeMap::new(),
            provenance: provenance.into(),
        }
    }

    pub fn insert(&mut self, entity: &str, term: &str) -> bool {
        self.entries
            .entry(entity.to_string())
            .or_default()
            .insert(term.to_string())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every term used by at least one entity.
    pub fn terms(&self) -> BTreeSet<&str> {
        self.entries.values().flatten().map(String::as_str).collect()
    }

    /// Each entity's terms as vertex indices of `d`; unknown terms are left
    /// out.
    pub fn vertex_sets<'a>(&'a self, d: &'a Dag) -> impl Iterator<Item = VertexSet> + 'a {
        self.entries
            .values()
            .map(move |terms| terms.iter().filter_map(|t| d.index(t)).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub rows: usize,
    pub kept: usize,
    pub duplicates: usize,
    /// Rows with a `NOT` qualifier.
    pub negated: usize,
    /// Rows whose evidence code is outside the filter.
    pub filtered_evidence: usize,
    pub malformed: usize,
    /// Line numbers of the first malformed rows.
    pub malformed_lines: Vec<usize>,
}

const MALFORMED_SAMPLE: usize = 20;

impl ParseReport {
    fn malformed_row(&mut self, line: usize, why: &str) {
        log::warn!("line {line}: malformed row ({why}), skipped");
        self.malformed += 1;
        if self.malformed_lines.len() < MALFORMED_SAMPLE {
            self.malformed_lines.push(line);
        }
    }

    fn keep(&mut self, corpus: &mut AnnotationCorpus, entity: &str, term: &str) {
        if corpus.insert(entity, term) {
            self.kept += 1;
        } else {
            self.duplicates += 1;
        }
    }
}

pub fn default_evidence() -> BTreeSet<String> {
    DEFAULT_EVIDENCE.iter().map(|c| c.to_string()).collect()
}

/// Reads GAF 1.0 and 2.x text. Rows need at least the 15 columns of GAF 1.0;
/// the entity is column 2, the qualifier column 4, the term column 5 and the
/// evidence code column 7 (1-based).
pub fn parse_gaf(text: &str, evidence: &BTreeSet<String>) -> (AnnotationCorpus, ParseReport) {
    let codes: Vec<&str> = evidence.iter().map(String::as_str).collect();
    let mut corpus = AnnotationCorpus::new(format!("gaf; evidence {}", codes.join(",")));
    let mut report = ParseReport::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('!') {
            continue;
        }
        report.rows += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 15 || cols.len() > 17 {
            report.malformed_row(i + 1, &format!("{} columns", cols.len()));
            continue;
        }
        let (entity, qualifier, term, code) = (cols[1].trim(), cols[3], cols[4].trim(), cols[6].trim());
        if entity.is_empty() || term.is_empty() {
            report.malformed_row(i + 1, "empty entity or term");
            continue;
        }
        if qualifier.split('|').any(|q| q.trim() == "NOT") {
            report.negated += 1;
            continue;
        }
        if !evidence.contains(code) {
            report.filtered_evidence += 1;
            continue;
        }
        report.keep(&mut corpus, entity, term);
    }
    (corpus, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TsvColumns {
    /// 0-based column of the entity id.
    pub entity: usize,
    /// 0-based column of the term id.
    pub term: usize,
    /// Skip the first non-comment line.
    pub header: bool,
}

/// Generic tab-separated entity/term pairs. Lines starting with `#` are
/// comments.
pub fn parse_gene_tsv(text: &str, columns: TsvColumns) -> (AnnotationCorpus, ParseReport) {
    let mut corpus = AnnotationCorpus::new(format!(
        "tsv; entity column {}, term column {}",
        columns.entity, columns.term
    ));
    let mut report = ParseReport::default();
    let mut header = columns.header;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if header {
            header = false;
            continue;
        }
        report.rows += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        let (Some(entity), Some(term)) = (cols.get(columns.entity), cols.get(columns.term)) else {
            report.malformed_row(i + 1, &format!("{} columns", cols.len()));
            continue;
        };
        let (entity, term) = (entity.trim(), term.trim());
        if entity.is_empty() || term.is_empty() {
            report.malformed_row(i + 1, "empty entity or term");
            continue;
        }
        report.keep(&mut corpus, entity, term);
    }
    (corpus, report)
}

/// Replaces every entity's terms by the union of their extended ancestors in
/// `d`. Terms missing from `d` are dropped; their number is returned.
pub fn propagate(corpus: &AnnotationCorpus, d: &Dag) -> (AnnotationCorpus, usize) {
    let mut unknown = 0;
    let mut out = AnnotationCorpus::new(format!("{}; propagated", corpus.provenance));
    let mut cache: BTreeMap<usize, VertexSet> = BTreeMap::new();
    for (entity, terms) in &corpus.entries {
        let mut closed = VertexSet::new();
        for t in terms {
            let Some(v) = d.index(t) else {
                log::warn!("{entity}: term {t} is not in the ontology, dropped");
                unknown += 1;
                continue;
            };
            if closed.contains(&v) {
                continue;
            }
            let up = cache
                .entry(v)
                .or_insert_with(|| d.ancestors(v, true).expect("index from the same graph"));
            closed.extend(up.iter().copied());
        }
        out.entries.insert(
            entity.clone(),
            closed.into_iter().map(|v| d.name(v).to_string()).collect(),
        );
    }
    (out, unknown)
}

/// The subgraph on vertices whose level is at most `level`.
pub fn truncate_to_level(d: &Dag, level: usize) -> Dag {
    let keep: VertexSet = d
        .levels()
        .into_iter()
        .enumerate()
        .filter(|&(_, l)| l <= level)
        .map(|(v, _)| v)
        .collect();
    d.induced_subgraph(&keep).expect("indices from the same graph")
}

/// The subgraph on every vertex of `d` used by at least one entity.
pub fn used_subontology(d: &Dag, corpus: &AnnotationCorpus) -> Dag {
    let keep: VertexSet = corpus.terms().into_iter().filter_map(|t| d.index(t)).collect();
    d.induced_subgraph(&keep).expect("indices from the same graph")
}

/// `root` and all of its descendants.
pub fn restrict_to_root(d: &Dag, root: &str) -> Result<Dag, idealcount_core::GraphError> {
    let v = d.require(root)?;
    d.induced_subgraph(&d.descendants(v, true)?)
}

/// Whether a term counts as used only when assigned directly or also when
/// implied through an assigned descendant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UsedMode {
    Direct,
    #[default]
    Propagated,
}

impl fmt::Display for UsedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UsedMode::Direct => "direct",
            UsedMode::Propagated => "propagated",
        })
    }
}

impl FromStr for UsedMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(UsedMode::Direct),
            "propagated" => Ok(UsedMode::Propagated),
            _ => Err(format!("unknown used mode `{s}` (expected direct or propagated)")),
        }
    }
}
