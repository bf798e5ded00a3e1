//! Benchmark runs with one journal file per finished case.
//!
//! A rerun over the same run directory reuses every journaled case and only
//! predicts the rest, so an interrupted run converges to the same report.
//! Failed cases are not journaled: they are retried next time and scored as
//! misses meanwhile.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matching::MatchRule;
use super::metrics::{compute_metrics, MethodReport, PredictionRecord};
use super::EvalError;
use crate::embedding::{derive_seed, EmbeddingMatrix};
use crate::graph::{IcTable, KnowledgeGraph};
use crate::llm::{build_prompt, DiagnosisBackend, FewShotExample, PromptMode};
use crate::retrieval::{embed_patient, retrieve_topm, score_neighbors, search, Neighbor, PatientCase, PatientVector, RetrievalIndex};

pub enum Method<'a> {
    /// Nearest-neighbour vote over `k_pool` retrieved cases.
    Knn { k_pool: usize },
    Llm { backend: &'a dyn DiagnosisBackend, mode: PromptMode },
}

impl Method<'_> {
    pub fn label(&self) -> String {
        match self {
            Method::Knn { .. } => "knn".into(),
            Method::Llm { mode, .. } => mode.label(),
        }
    }

    fn needs_index(&self) -> bool {
        matches!(self, Method::Knn { .. } | Method::Llm { mode: PromptMode::DynamicFewShot(_), .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkOptions {
    /// Journal root; `None` keeps everything in memory.
    pub run_dir: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
    /// Leave out pool cases sharing a gold code with the query.
    pub exclude_same_gold: bool,
    /// When false the query may retrieve itself (leakage mode).
    pub self_exclusion: bool,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            run_dir: None,
            workers: 1,
            seed: 42,
            exclude_same_gold: false,
            self_exclusion: true,
        }
    }
}

pub struct BenchmarkContext<'a> {
    pub graph: &'a KnowledgeGraph,
    pub ic: &'a IcTable,
    pub matrix: Option<&'a EmbeddingMatrix>,
    pub index: Option<&'a RetrievalIndex>,
    /// Example pool; ids must match the index entries.
    pub pool: &'a [PatientCase],
    pub rule: &'a MatchRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub case_id: String,
    pub method: String,
    pub predictions: Vec<String>,
    pub example_ids: Vec<String>,
    pub attempts: u32,
    pub raw_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutcome {
    pub report: MethodReport,
    pub records: Vec<PredictionRecord>,
    /// `(case_id, reason)` for cases scored as misses after a failure.
    pub failures: Vec<(String, String)>,
    /// Cases predicted in this invocation.
    pub predicted: usize,
    /// Cases taken from existing journal files.
    pub resumed: usize,
}

fn case_hash(case_id: &str) -> u64 {
    let d = Sha256::digest(case_id.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn journal_path(dir: &Path, case_id: &str) -> PathBuf {
    let safe: String = case_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_".contains(c) { c } else { '_' })
        .collect();
    dir.join(format!("{safe}-{:016x}.json", case_hash(case_id)))
}

fn read_journal(path: &Path, case_id: &str, method: &str) -> Result<Option<JournalEntry>, EvalError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let entry: JournalEntry = serde_json::from_str(&text)
        .map_err(|e| EvalError::Report(format!("journal {}: {e}", path.display())))?;
    if entry.case_id != case_id || entry.method != method {
        return Err(EvalError::Report(format!(
            "journal {} belongs to {} / {}",
            path.display(),
            entry.case_id,
            entry.method
        )));
    }
    Ok(Some(entry))
}

fn write_journal(path: &Path, entry: &JournalEntry) -> Result<(), EvalError> {
    let dir = path.parent().expect("journal files live in a directory");
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(serde_json::to_string_pretty(entry).expect("serializable").as_bytes())?;
    tmp.write_all(b"\n")?;
    match tmp.persist_noclobber(path) {
        Ok(_) => Ok(()),
        // another worker finished the same case first; its record stands
        Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => Ok(()),
        Err(e) => Err(e.error.into()),
    }
}

/// Primary name of the first gold code the graph knows, else the code.
pub fn diagnosis_name(graph: &KnowledgeGraph, gold: &BTreeSet<String>) -> String {
    gold.iter()
        .find_map(|c| graph.disease_by_code(c).map(|d| d.primary_name().to_string()))
        .or_else(|| gold.iter().next().cloned())
        .unwrap_or_default()
}

struct Runner<'a, 'b> {
    ctx: &'a BenchmarkContext<'a>,
    method: &'a Method<'b>,
    opts: &'a BenchmarkOptions,
    pool_by_id: BTreeMap<&'a str, &'a PatientCase>,
}

impl Runner<'_, '_> {
    fn exclusions(&self, case: &PatientCase) -> BTreeSet<String> {
        let mut ex = BTreeSet::new();
        if self.opts.exclude_same_gold {
            ex.extend(
                self.ctx
                    .pool
                    .iter()
                    .filter(|p| !p.gold_diagnoses.is_disjoint(&case.gold_diagnoses))
                    .map(|p| p.case_id.clone()),
            );
            if !self.opts.self_exclusion {
                ex.remove(&case.case_id);
            }
        }
        ex
    }

    fn neighbors(&self, case: &PatientCase, m: usize) -> Result<Vec<Neighbor>, String> {
        let (matrix, index) = match (self.ctx.matrix, self.ctx.index) {
            (Some(m), Some(i)) => (m, i),
            _ => return Err("retrieval needs an embedding matrix and an index".into()),
        };
        let q: PatientVector = embed_patient(case, self.ctx.ic, matrix).map_err(|e| e.to_string())?;
        let exclude = self.exclusions(case);
        let found = if self.opts.self_exclusion {
            retrieve_topm(index, &q, m, &exclude)
        } else {
            search(index, &q.vector, m, &exclude)
        };
        found.map_err(|e| e.to_string())
    }

    fn examples(&self, case: &PatientCase, mode: PromptMode) -> Result<Vec<FewShotExample>, String> {
        let m = mode.shots();
        let picked: Vec<(String, f64)> = match mode {
            PromptMode::ZeroShot | PromptMode::CoT => return Ok(Vec::new()),
            PromptMode::DynamicFewShot(_) => self.neighbors(case, m)?.into_iter().map(|n| (n.case_id, n.cosine)).collect(),
            PromptMode::RandomFewShot(_) => {
                let exclude = self.exclusions(case);
                let candidates: Vec<&str> = self
                    .pool_by_id
                    .keys()
                    .copied()
                    .filter(|id| !exclude.contains(*id) && (!self.opts.self_exclusion || *id != case.case_id))
                    .collect();
                if candidates.len() < m {
                    return Err(format!("pool has {} eligible examples, mode needs {m}", candidates.len()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.opts.seed, case_hash(&case.case_id), 0));
                sample(&mut rng, candidates.len(), m)
                    .into_iter()
                    .map(|i| (candidates[i].to_string(), 0.0))
                    .collect()
            }
        };
        if picked.len() < m {
            return Err(format!("retrieved {} examples, mode needs {m}", picked.len()));
        }
        picked
            .into_iter()
            .map(|(id, similarity)| {
                let ex = self
                    .pool_by_id
                    .get(id.as_str())
                    .ok_or_else(|| format!("example {id} is indexed but not in the case pool"))?;
                Ok(FewShotExample {
                    case: (*ex).clone(),
                    diagnosis_name: diagnosis_name(self.ctx.graph, &ex.gold_diagnoses),
                    similarity,
                })
            })
            .collect()
    }

    fn predict(&self, case: &PatientCase) -> Result<JournalEntry, String> {
        let label = self.method.label();
        match self.method {
            Method::Knn { k_pool } => {
                let neighbors = self.neighbors(case, *k_pool)?;
                let index = self.ctx.index.expect("checked by neighbors");
                let predictions = score_neighbors(index, &neighbors)
                    .into_iter()
                    .map(|d| {
                        self.ctx
                            .graph
                            .disease_by_code(&d.code)
                            .map_or(d.code.clone(), |e| e.primary_name().to_string())
                    })
                    .collect();
                Ok(JournalEntry {
                    case_id: case.case_id.clone(),
                    method: label,
                    predictions,
                    example_ids: neighbors.into_iter().map(|n| n.case_id).collect(),
                    attempts: 0,
                    raw_text: None,
                })
            }
            Method::Llm { backend, mode } => {
                let examples = self.examples(case, *mode)?;
                let prompt = build_prompt(case, *mode, &examples, self.ctx.graph).map_err(|e| e.to_string())?;
                let out = backend.diagnose(&prompt, &case.case_id).map_err(|e| e.to_string())?;
                Ok(JournalEntry {
                    case_id: case.case_id.clone(),
                    method: label,
                    predictions: out.response.ranked_diagnoses,
                    example_ids: prompt.example_ids,
                    attempts: out.attempts,
                    raw_text: Some(out.response.raw_text),
                })
            }
        }
    }
}

/// Predicts and scores every case with `method`.
pub fn run_benchmark(
    cases: &[PatientCase],
    method: &Method<'_>,
    ctx: &BenchmarkContext<'_>,
    opts: &BenchmarkOptions,
) -> Result<BenchmarkOutcome, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::NoCases);
    }
    if opts.workers == 0 {
        return Err(EvalError::Report("workers must be >= 1".into()));
    }
    if let Method::Knn { k_pool: 0 } = method {
        return Err(EvalError::Report("k_pool must be >= 1".into()));
    }
    if method.needs_index() && (ctx.matrix.is_none() || ctx.index.is_none()) {
        return Err(EvalError::Report(format!("{} needs an embedding matrix and a case index", method.label())));
    }
    let mut ids = BTreeSet::new();
    if let Some(dup) = cases.iter().find(|c| !ids.insert(c.case_id.as_str())) {
        return Err(EvalError::DuplicateRecord(dup.case_id.clone()));
    }
    let label = method.label();
    let journal_dir = match &opts.run_dir {
        Some(dir) => {
            let d = dir.join("journal").join(&label);
            fs::create_dir_all(&d)?;
            Some(d)
        }
        None => None,
    };

    let mut done: BTreeMap<String, JournalEntry> = BTreeMap::new();
    if let Some(dir) = &journal_dir {
        for c in cases {
            if let Some(e) = read_journal(&journal_path(dir, &c.case_id), &c.case_id, &label)? {
                done.insert(c.case_id.clone(), e);
            }
        }
    }
    let resumed = done.len();
    let pending: Vec<&PatientCase> = cases.iter().filter(|c| !done.contains_key(&c.case_id)).collect();

    let runner = Runner {
        ctx,
        method,
        opts,
        pool_by_id: ctx.pool.iter().map(|c| (c.case_id.as_str(), c)).collect(),
    };
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| EvalError::Report(format!("worker pool: {e}")))?;
    let results: Vec<(String, Result<JournalEntry, String>)> = threads.install(|| {
        pending
            .par_iter()
            .map(|c| {
                let r = runner.predict(c);
                if let (Ok(entry), Some(dir)) = (&r, &journal_dir) {
                    if let Err(e) = write_journal(&journal_path(dir, &c.case_id), entry) {
                        return (c.case_id.clone(), Err(format!("journal write failed: {e}")));
                    }
                }
                (c.case_id.clone(), r)
            })
            .collect()
    });
    let predicted = results.len();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(e) => {
                done.insert(id, e);
            }
            Err(reason) => {
                log::warn!("case {id}: {reason}");
                failures.push((id, reason));
            }
        }
    }
    failures.sort();

    let records: Vec<PredictionRecord> = cases
        .iter()
        .map(|c| {
            let preds = done.get(&c.case_id).map(|e| e.predictions.clone()).unwrap_or_default();
            PredictionRecord::new(c.case_id.clone(), preds, label.clone())
        })
        .collect();
    let gold: BTreeMap<String, BTreeSet<String>> = cases.iter().map(|c| (c.case_id.clone(), c.gold_diagnoses.clone())).collect();
    let mut report = compute_metrics(&records, &gold, ctx.rule)?;
    report.incomplete = failures.iter().map(|(id, _)| id.clone()).collect();
    Ok(BenchmarkOutcome {
        report,
        records,
        failures,
        predicted,
        resumed,
    })
}
