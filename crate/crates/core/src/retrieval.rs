//! Patient embeddings, the case index and nearest-neighbour retrieval.
//!
//! A patient with phenotype set `p` is embedded as the IC-weighted centroid
//! `sum(IC(t) * f(t)) / sum(IC(t))` over the terms of `p` that have both an
//! IC entry and an embedding row.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::embedding::EmbeddingMatrix;
use crate::graph::IcTable;
use crate::ontology::{AnnotationSource, TermId};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("case {case_id}: no phenotype resolves to an IC entry and an embedding row (dropped: {})", join(.dropped))]
    Unresolvable { case_id: String, dropped: Vec<TermId> },

    #[error("case {case_id}: every resolved phenotype has IC 0, the weight sum is zero")]
    ZeroWeight { case_id: String },

    #[error("case {case_id}: {message}")]
    InvalidCase { case_id: String, message: String },

    #[error("duplicate case id {0}")]
    DuplicateCase(String),

    #[error("no case could be embedded")]
    EmptyIndex,

    #[error("query has dimension {found}, index has {expected}")]
    Dimension { expected: usize, found: usize },

    #[error("case file line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn join(ids: &[TermId]) -> String {
    ids.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

/// One patient: phenotype terms (input order, deduplicated) and confirmed
/// diagnoses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientCase {
    pub case_id: String,
    pub phenotype_ids: Vec<TermId>,
    pub gold_diagnoses: BTreeSet<String>,
    pub source_label: String,
}

impl PatientCase {
    pub fn new(
        case_id: impl Into<String>,
        phenotype_ids: impl IntoIterator<Item = TermId>,
        gold_diagnoses: impl IntoIterator<Item = impl Into<String>>,
        source_label: impl Into<String>,
    ) -> Result<Self, RetrievalError> {
        let case_id = case_id.into();
        let invalid = |message: String| RetrievalError::InvalidCase {
            case_id: case_id.clone(),
            message,
        };
        if case_id.is_empty() || case_id.contains(['\t', '\n']) {
            return Err(invalid("case id is empty or contains a tab/newline".into()));
        }
        let mut seen = BTreeSet::new();
        let phenotype_ids: Vec<TermId> = phenotype_ids.into_iter().filter(|t| seen.insert(*t)).collect();
        if phenotype_ids.is_empty() {
            return Err(invalid("no phenotype terms".into()));
        }
        let gold_diagnoses: BTreeSet<String> = gold_diagnoses.into_iter().map(Into::into).collect();
        if gold_diagnoses.is_empty() {
            return Err(invalid("no gold diagnosis".into()));
        }
        if let Some(bad) = gold_diagnoses.iter().find(|c| AnnotationSource::for_code(c).is_none()) {
            return Err(invalid(format!("gold code {bad:?} has no known source prefix")));
        }
        let source_label = source_label.into();
        if source_label.contains(['\t', '\n']) {
            return Err(invalid("source label contains a tab/newline".into()));
        }
        Ok(Self {
            case_id,
            phenotype_ids,
            gold_diagnoses,
            source_label,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientVector {
    pub case_id: String,
    pub vector: Vec<f64>,
    pub resolved_terms: Vec<TermId>,
    pub dropped_terms: Vec<TermId>,
}

/// IC-weighted centroid of the case's phenotype vectors.
///
/// Terms are summed in ascending id order so the result is bit-identical
/// under any permutation of `phenotype_ids`.
pub fn embed_patient(case: &PatientCase, ic: &IcTable, matrix: &EmbeddingMatrix) -> Result<PatientVector, RetrievalError> {
    let mut terms = case.phenotype_ids.clone();
    terms.sort_unstable();
    let mut sum = vec![0.0f64; matrix.dim()];
    let mut weight = 0.0f64;
    let mut resolved = Vec::new();
    let mut dropped = Vec::new();
    for t in terms {
        match (ic.ic(t), matrix.row(&t.to_string())) {
            (Some(w), Some(row)) => {
                for (s, &v) in sum.iter_mut().zip(row) {
                    *s += w * v as f64;
                }
                weight += w;
                resolved.push(t);
            }
            _ => dropped.push(t),
        }
    }
    if resolved.is_empty() {
        return Err(RetrievalError::Unresolvable {
            case_id: case.case_id.clone(),
            dropped,
        });
    }
    if !dropped.is_empty() {
        log::warn!("case {}: dropped unresolvable terms {}", case.case_id, join(&dropped));
    }
    if weight == 0.0 {
        return Err(RetrievalError::ZeroWeight {
            case_id: case.case_id.clone(),
        });
    }
    sum.iter_mut().for_each(|s| *s /= weight);
    Ok(PatientVector {
        case_id: case.case_id.clone(),
        vector: sum,
        resolved_terms: resolved,
        dropped_terms: dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub vector: PatientVector,
    pub gold: BTreeSet<String>,
    norm: f64,
}

/// Immutable pool of embedded cases, kept sorted by case id.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalIndex {
    entries: Vec<IndexEntry>,
    dim: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexReport {
    /// `(case_id, reason)` for every case left out of the index.
    pub failures: Vec<(String, String)>,
}

impl IndexReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("failed_cases={}\n", self.failures.len());
        for (id, reason) in &self.failures {
            let _ = writeln!(out, "{id}\t{reason}");
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl RetrievalIndex {
    /// Index over pre-embedded vectors.
    pub fn from_vectors(items: impl IntoIterator<Item = (PatientVector, BTreeSet<String>)>) -> Result<Self, RetrievalError> {
        let mut entries: Vec<IndexEntry> = items
            .into_iter()
            .map(|(vector, gold)| IndexEntry {
                norm: norm(&vector.vector),
                vector,
                gold,
            })
            .collect();
        if entries.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        entries.sort_by(|a, b| a.vector.case_id.cmp(&b.vector.case_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].vector.case_id == w[1].vector.case_id) {
            return Err(RetrievalError::DuplicateCase(w[0].vector.case_id.clone()));
        }
        let dim = entries[0].vector.vector.len();
        if let Some(e) = entries.iter().find(|e| e.vector.vector.len() != dim) {
            return Err(RetrievalError::Dimension {
                expected: dim,
                found: e.vector.vector.len(),
            });
        }
        Ok(Self { entries, dim })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn get(&self, case_id: &str) -> Option<&IndexEntry> {
        self.entries
            .binary_search_by(|e| e.vector.case_id.as_str().cmp(case_id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Ids of indexed cases sharing at least one gold code with `gold`.
    pub fn cases_sharing_gold(&self, gold: &BTreeSet<String>) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| !e.gold.is_disjoint(gold))
            .map(|e| e.vector.case_id.clone())
            .collect()
    }
}

/// Embeds every case; cases that fail are reported, not fatal.
pub fn build_index(
    cases: &[PatientCase],
    ic: &IcTable,
    matrix: &EmbeddingMatrix,
) -> Result<(RetrievalIndex, IndexReport), RetrievalError> {
    let mut seen = BTreeSet::new();
    if let Some(dup) = cases.iter().find(|c| !seen.insert(c.case_id.as_str())) {
        return Err(RetrievalError::DuplicateCase(dup.case_id.clone()));
    }
    let mut report = IndexReport::default();
    let mut items = Vec::with_capacity(cases.len());
    for case in cases {
        match embed_patient(case, ic, matrix) {
            Ok(v) => items.push((v, case.gold_diagnoses.clone())),
            Err(e) => report.failures.push((case.case_id.clone(), e.to_string())),
        }
    }
    Ok((RetrievalIndex::from_vectors(items)?, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub case_id: String,
    pub cosine: f64,
}

/// Raw top-`m` scan by vector. Nothing is excluded beyond `exclude`; this is
/// the leakage-mode path, [`retrieve_topm`] is the normal one.
pub fn search(index: &RetrievalIndex, vector: &[f64], m: usize, exclude: &BTreeSet<String>) -> Result<Vec<Neighbor>, RetrievalError> {
    if vector.len() != index.dim {
        return Err(RetrievalError::Dimension {
            expected: index.dim,
            found: vector.len(),
        });
    }
    let qn = norm(vector);
    let mut scored: Vec<Neighbor> = index
        .entries
        .iter()
        .filter(|e| !exclude.contains(&e.vector.case_id))
        .map(|e| {
            let cosine = if qn == 0.0 || e.norm == 0.0 {
                0.0
            } else {
                let dot: f64 = vector.iter().zip(&e.vector.vector).map(|(a, b)| a * b).sum();
                dot / (qn * e.norm)
            };
            Neighbor {
                case_id: e.vector.case_id.clone(),
                cosine,
            }
        })
        .collect();
    // entries are id-sorted, so a stable sort on cosine keeps ties by id
    scored.sort_by(|a, b| b.cosine.total_cmp(&a.cosine));
    scored.truncate(m);
    Ok(scored)
}

/// The `m` most similar indexed cases, never including the query's own
/// case id.
pub fn retrieve_topm(
    index: &RetrievalIndex,
    query: &PatientVector,
    m: usize,
    exclude: &BTreeSet<String>,
) -> Result<Vec<Neighbor>, RetrievalError> {
    let mut exclude = exclude.clone();
    exclude.insert(query.case_id.clone());
    search(index, &query.vector, m, &exclude)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDiagnosis {
    pub code: String,
    pub score: f64,
}

/// LLM-free baseline: each gold code among the `k_pool` nearest cases
/// scores the sum of those neighbours' cosines.
pub fn knn_diagnose(
    index: &RetrievalIndex,
    query: &PatientVector,
    k_pool: usize,
    exclude: &BTreeSet<String>,
) -> Result<Vec<ScoredDiagnosis>, RetrievalError> {
    let neighbors = retrieve_topm(index, query, k_pool, exclude)?;
    Ok(score_neighbors(index, &neighbors))
}

pub fn score_neighbors(index: &RetrievalIndex, neighbors: &[Neighbor]) -> Vec<ScoredDiagnosis> {
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for n in neighbors {
        if let Some(entry) = index.get(&n.case_id) {
            for code in &entry.gold {
                *scores.entry(code.as_str()).or_default() += n.cosine;
            }
        }
    }
    let mut out: Vec<ScoredDiagnosis> = scores
        .into_iter()
        .map(|(code, score)| ScoredDiagnosis {
            code: code.to_string(),
            score,
        })
        .collect();
    out.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => a.code.cmp(&b.code),
        o => o,
    });
    out
}

/// Parses normal-form case lines: `case_id<TAB>terms<TAB>gold<TAB>source`,
/// with comma-separated lists. Blank lines and `#` lines are skipped.
pub fn parse_case_file(text: &str) -> Result<Vec<PatientCase>, RetrievalError> {
    let mut cases = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |message: String| RetrievalError::Parse { line, message };
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let terms = split_list(fields[1])
            .map(|t| t.parse::<TermId>().map_err(|e| err(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let case = PatientCase::new(fields[0], terms, split_list(fields[2]), fields[3]).map_err(|e| err(e.to_string()))?;
        if let Some(first) = ids.insert(case.case_id.clone(), line) {
            return Err(err(format!("case id {} already used on line {first}", case.case_id)));
        }
        cases.push(case);
    }
    Ok(cases)
}

fn split_list(field: &str) -> impl Iterator<Item = &str> {
    field.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn format_case_file(cases: &[PatientCase]) -> String {
    let mut out = String::new();
    for c in cases {
        let terms: Vec<String> = c.phenotype_ids.iter().map(|t| t.to_string()).collect();
        let gold: Vec<&str> = c.gold_diagnoses.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{}\t{}\t{}\t{}", c.case_id, terms.join(","), gold.join(","), c.source_label);
    }
    out
}
