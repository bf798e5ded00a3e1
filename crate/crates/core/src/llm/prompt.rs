use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::graph::KnowledgeGraph;
use crate::retrieval::PatientCase;

pub const SYSTEM_PROMPT: &str = "You are a specialist in the field of rare diseases. You will be provided and asked about a complicated clinical case; read it carefully and then provide a diverse and comprehensive differential diagnosis.";
pub const ANSWER_LEAD: &str = "The top 10 diagnoses are:";
pub const COT_SUFFIX: &str = "Let us think step by step.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptMode {
    ZeroShot,
    CoT,
    RandomFewShot(usize),
    DynamicFewShot(usize),
}

impl PromptMode {
    /// Number of examples the mode requires.
    pub fn shots(self) -> usize {
        match self {
            Self::ZeroShot | Self::CoT => 0,
            Self::RandomFewShot(m) | Self::DynamicFewShot(m) => m,
        }
    }

    /// Short label used in reports, e.g. `dynamic-3shot`.
    pub fn label(self) -> String {
        match self {
            Self::ZeroShot => "zero-shot".into(),
            Self::CoT => "cot".into(),
            Self::RandomFewShot(m) => format!("random-{m}shot"),
            Self::DynamicFewShot(m) => format!("dynamic-{m}shot"),
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroShot => f.write_str("zero-shot"),
            Self::CoT => f.write_str("cot"),
            Self::RandomFewShot(m) => write!(f, "random:{m}"),
            Self::DynamicFewShot(m) => write!(f, "dynamic:{m}"),
        }
    }
}

impl FromStr for PromptMode {
    type Err = LlmError;

    /// Accepts `zero-shot`, `cot`, `random:<m>` and `dynamic:<m>`.
    fn from_str(s: &str) -> Result<Self, LlmError> {
        let bad = || LlmError::Config(format!("unknown prompt mode {s:?} (zero-shot, cot, random:<m>, dynamic:<m>)"));
        match s {
            "zero-shot" | "zeroshot" => return Ok(Self::ZeroShot),
            "cot" => return Ok(Self::CoT),
            _ => {}
        }
        let (kind, m) = s.split_once(':').ok_or_else(bad)?;
        let m: usize = m.parse().map_err(|_| bad())?;
        if m == 0 {
            return Err(LlmError::Config("few-shot modes need m >= 1".into()));
        }
        match kind {
            "random" => Ok(Self::RandomFewShot(m)),
            "dynamic" => Ok(Self::DynamicFewShot(m)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for PromptMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PromptMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A solved case offered to the model as an example.
#[derive(Debug, Clone, PartialEq)]
pub struct FewShotExample {
    pub case: PatientCase,
    /// Primary name of the gold disease.
    pub diagnosis_name: String,
    /// Cosine similarity to the query; orders dynamic examples.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system_text: String,
    pub user_text: String,
    pub mode: PromptMode,
    pub example_ids: Vec<String>,
}

/// Phenotype names for a case, in case order. Terms missing from the graph
/// are rendered by id.
pub fn phenotype_text(case: &PatientCase, graph: &KnowledgeGraph) -> String {
    case.phenotype_ids
        .iter()
        .map(|t| graph.phenotype(*t).map(|p| p.name.clone()).unwrap_or_else(|| t.to_string()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// `1st`, `2nd`, `3rd`, `4th`, ..., `11th`, `21st`.
pub fn ordinal(i: usize) -> String {
    let suffix = match (i % 10, i % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{i}{suffix}")
}

fn zero_shot_text(phenotypes: &str) -> String {
    format!(
        "This rare disease patient suffers from symptoms: {phenotypes}.\n\
         Enumerate the top 10 most likely diagnoses. Be precise, listing one diagnosis per line, \
         and try to cover many unique possibilities (at least 10).\n{ANSWER_LEAD}"
    )
}

pub fn build_prompt(
    case: &PatientCase,
    mode: PromptMode,
    examples: &[FewShotExample],
    graph: &KnowledgeGraph,
) -> Result<RenderedPrompt, LlmError> {
    if examples.len() != mode.shots() {
        return Err(LlmError::ExampleCount {
            expected: mode.shots(),
            found: examples.len(),
        });
    }
    let zero = zero_shot_text(&phenotype_text(case, graph));
    let mut ordered: Vec<&FewShotExample> = examples.iter().collect();
    if let PromptMode::DynamicFewShot(_) = mode {
        ordered.sort_by(|a, b| {
            b.similarity
                .total_cmp(&a.similarity)
                .then_with(|| a.case.case_id.cmp(&b.case.case_id))
        });
    }
    let user_text = match mode {
        PromptMode::ZeroShot => zero,
        PromptMode::CoT => format!("{zero}\n{COT_SUFFIX}"),
        PromptMode::RandomFewShot(k) | PromptMode::DynamicFewShot(k) => {
            let mut text = format!("Let me give you {k} examples first:");
            for (i, ex) in ordered.iter().enumerate() {
                text.push_str(&format!(
                    " The {} patient has a rare disease {}, and his/her phenotype is as follows: {}.",
                    ordinal(i + 1),
                    ex.diagnosis_name,
                    phenotype_text(&ex.case, graph)
                ));
            }
            text.push_str(" Next is the patient case you need to diagnose:  ");
            text.push_str(&zero);
            text
        }
    };
    Ok(RenderedPrompt {
        system_text: SYSTEM_PROMPT.to_string(),
        user_text,
        mode,
        example_ids: ordered.iter().map(|e| e.case.case_id.clone()).collect(),
    })
}
