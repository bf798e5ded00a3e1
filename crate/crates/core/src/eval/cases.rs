//! Public case collections.
//!
//! Two shapes are accepted:
//!
//! * `tsv`: the normal form, `case_id<TAB>terms<TAB>gold<TAB>source`.
//! * `jsonl`: one JSON object per line with `Phenotype` (list of term ids)
//!   and `RareDisease` (list of disease codes), as distributed for the MME,
//!   LIRICAL, HMS and RAMEDIS collections. Case ids are `<dataset>-<n>` with
//!   `n` the 1-based line number; codes without a known prefix are dropped.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::EvalError;
use crate::ontology::{AnnotationSource, TermId};
use crate::retrieval::{parse_case_file, PatientCase};

/// Cases with fewer phenotypes than this are dropped at load time.
pub const MIN_PHENOTYPES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    Tsv,
    Jsonl,
}

impl FromStr for CaseFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s {
            "tsv" => Ok(Self::Tsv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CaseFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tsv => "tsv",
            Self::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCases {
    pub cases: Vec<PatientCase>,
    /// Cases removed for having fewer than [`MIN_PHENOTYPES`] terms.
    pub dropped_short: usize,
    /// Records without a usable gold code (jsonl only).
    pub dropped_no_gold: usize,
}

impl LoadedCases {
    pub fn distinct_diagnoses(&self) -> usize {
        self.cases
            .iter()
            .map(|c| c.gold_diagnoses.iter().cloned().collect::<Vec<_>>().join(","))
            .collect::<std::collections::BTreeSet<_>>()
            .len()
    }
}

#[derive(Deserialize)]
struct JsonCase {
    #[serde(rename = "Phenotype")]
    phenotype: Vec<String>,
    #[serde(rename = "RareDisease")]
    rare_disease: Vec<String>,
}

fn parse_jsonl(text: &str, dataset: &str) -> Result<(Vec<PatientCase>, usize), EvalError> {
    let mut cases = Vec::new();
    let mut no_gold = 0;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EvalError::Parse { line: n, message };
        let rec: JsonCase = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let terms = rec
            .phenotype
            .iter()
            .map(|t| t.trim().parse::<TermId>().map_err(|e| err(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let gold: Vec<String> = rec
            .rare_disease
            .iter()
            .map(|c| c.trim().to_string())
            .filter(|c| AnnotationSource::for_code(c).is_some())
            .collect();
        if gold.is_empty() {
            no_gold += 1;
            continue;
        }
        let case = PatientCase::new(format!("{dataset}-{n}"), terms, gold, dataset).map_err(|e| err(e.to_string()))?;
        cases.push(case);
    }
    Ok((cases, no_gold))
}

/// Parses `text` in the given shape and applies the phenotype-count filter.
pub fn load_cases_from_str(text: &str, format: CaseFormat, dataset: &str) -> Result<LoadedCases, EvalError> {
    let (cases, dropped_no_gold) = match format {
        CaseFormat::Tsv => (parse_case_file(text)?, 0),
        CaseFormat::Jsonl => parse_jsonl(text, dataset)?,
    };
    let before = cases.len();
    let cases: Vec<PatientCase> = cases
        .into_iter()
        .filter(|c| c.phenotype_ids.len() >= MIN_PHENOTYPES)
        .collect();
    let dropped_short = before - cases.len();
    if cases.is_empty() {
        return Err(EvalError::NoCases);
    }
    Ok(LoadedCases {
        cases,
        dropped_short,
        dropped_no_gold,
    })
}

/// Loads a case file; the dataset label for jsonl records is the file stem.
pub fn load_public_cases(path: &Path, format: CaseFormat) -> Result<LoadedCases, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let dataset = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cases");
    load_cases_from_str(&text, format, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_form_line() {
        let got = load_cases_from_str("C1\tHP:0000001,HP:0000002,HP:0000003\tOMIM:154700\tMME\n", CaseFormat::Tsv, "x").unwrap();
        assert_eq!(got.cases.len(), 1);
        assert_eq!(got.cases[0].source_label, "MME");
        assert_eq!(got.dropped_short, 0);
    }

    #[test]
    fn short_cases_are_dropped_and_counted() {
        let text = "C1\tHP:0000001,HP:0000002,HP:0000003\tOMIM:1\tMME\nC2\tHP:0000001,HP:0000002\tOMIM:2\tMME\n";
        let got = load_cases_from_str(text, CaseFormat::Tsv, "x").unwrap();
        assert_eq!(got.cases.len(), 1);
        assert_eq!(got.dropped_short, 1);
        assert!(matches!(
            load_cases_from_str("C2\tHP:0000001,HP:0000002\tOMIM:2\tMME\n", CaseFormat::Tsv, "x"),
            Err(EvalError::NoCases)
        ));
    }

    #[test]
    fn jsonl_shape() {
        let text = concat!(
            r#"{"Phenotype": ["HP:0000001", "HP:0000002", "HP:0000003"], "RareDisease": ["OMIM:154700", "ORPHA:558"], "Department": null}"#,
            "\n\n",
            r#"{"Phenotype": ["HP:0000001", "HP:0000002", "HP:0000003"], "RareDisease": ["MONDO:1"]}"#,
            "\n",
            r#"{"Phenotype": ["HP:0000001"], "RareDisease": ["OMIM:1"]}"#,
            "\n"
        );
        let got = load_cases_from_str(text, CaseFormat::Jsonl, "MME").unwrap();
        assert_eq!(got.cases.len(), 1);
        assert_eq!(got.cases[0].case_id, "MME-1");
        assert_eq!(got.cases[0].gold_diagnoses.len(), 2);
        assert_eq!(got.dropped_no_gold, 1);
        assert_eq!(got.dropped_short, 1);
    }

    #[test]
    fn unknown_format_and_bad_lines() {
        assert!(matches!("phenopacket".parse::<CaseFormat>(), Err(EvalError::UnknownFormat(_))));
        assert!(matches!(
            load_cases_from_str("{not json}\n", CaseFormat::Jsonl, "x"),
            Err(EvalError::Parse { line: 1, .. })
        ));
    }
}
