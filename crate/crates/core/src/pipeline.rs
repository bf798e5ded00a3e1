//! File-level glue: source files to graph, graph to embeddings.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::embedding::{train_skipgram, TrainConfig, TrainOutcome, WalkConfig, WalkGraph};
use crate::graph::{build_graph, BuildOptions, BuildReport, IcTable, KnowledgeGraph};
use crate::ontology::{hpoa_version, obo_data_version, parse_ccrd_tsv, parse_hpoa, parse_obo, SkipReport};

#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub obo: PathBuf,
    pub hpoa: Vec<PathBuf>,
    pub ccrd: Vec<PathBuf>,
    /// Two-column TSV of disease codes naming the same disease.
    pub cross_references: Option<PathBuf>,
}

#[derive(Debug)]
pub struct Ingested {
    pub graph: KnowledgeGraph,
    pub build: BuildReport,
    pub skipped: SkipReport,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn file_label(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn parse_cross_references(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 2 || f.iter().any(|s| s.is_empty()) {
            bail!("cross-reference line {}: expected two disease codes", i + 1);
        }
        out.push((f[0].to_string(), f[1].to_string()));
    }
    Ok(out)
}

/// Parses every source and builds the consolidated graph. Version labels
/// come from the files' own headers, falling back to the file name.
pub fn ingest(sources: &Sources) -> Result<Ingested> {
    let obo_text = read(&sources.obo)?;
    let terms = parse_obo(&obo_text).with_context(|| format!("parsing {}", sources.obo.display()))?;
    let mut labels = vec![obo_data_version(&obo_text).unwrap_or_else(|| file_label(&sources.obo))];
    let mut annotations = Vec::new();
    let mut skipped = SkipReport::default();
    for path in &sources.hpoa {
        let text = read(path)?;
        let batch = parse_hpoa(&text).with_context(|| format!("parsing {}", path.display()))?;
        labels.push(format!("hpoa:{}", hpoa_version(&text).unwrap_or_else(|| file_label(path))));
        annotations.extend(batch.records);
        skipped.extend(batch.skipped);
    }
    for path in &sources.ccrd {
        let text = read(path)?;
        annotations.extend(parse_ccrd_tsv(&text).with_context(|| format!("parsing {}", path.display()))?);
        labels.push(format!("ccrd:{}", file_label(path)));
    }
    let cross_references = match &sources.cross_references {
        Some(p) => parse_cross_references(&read(p)?)?,
        None => Vec::new(),
    };
    let opts = BuildOptions {
        cross_references,
        version_labels: labels,
    };
    let (graph, build) = build_graph(&terms, &annotations, &opts)?;
    Ok(Ingested { graph, build, skipped })
}

/// IC-biased walks followed by skip-gram training.
pub fn train_embeddings(
    graph: &KnowledgeGraph,
    ic: &IcTable,
    walk: &WalkConfig,
    train: &TrainConfig,
) -> Result<TrainOutcome> {
    let walker = WalkGraph::from_knowledge_graph(graph, ic)?;
    let corpus = walker.generate(walk, train.threads)?;
    Ok(train_skipgram(&corpus, train)?)
}
