use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::EvalError;
use crate::graph::KnowledgeGraph;

/// Lowercase, punctuation folded to spaces, whitespace collapsed.
pub fn normalize_diagnosis(s: &str) -> String {
    let folded: String = s
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        }
    }
}

/// Strict name matching plus manual overrides keyed by `(case_id, rank)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchRule {
    /// disease code -> normalized names of its entity, code included
    names: HashMap<String, BTreeSet<String>>,
    overrides: BTreeMap<(String, usize), Verdict>,
}

impl MatchRule {
    /// Every source code of every entity maps to all the entity's names.
    pub fn from_graph(graph: &KnowledgeGraph) -> Self {
        let mut names = HashMap::new();
        for d in graph.diseases() {
            let mut set: BTreeSet<String> = d.names.iter().map(|n| normalize_diagnosis(n)).collect();
            set.extend(d.source_codes.iter().map(|c| normalize_diagnosis(c)));
            for code in &d.source_codes {
                names.insert(code.clone(), set.clone());
            }
        }
        Self {
            names,
            overrides: BTreeMap::new(),
        }
    }

    /// Adds names for one code, for codes absent from the graph.
    pub fn add_names(&mut self, code: &str, extra: impl IntoIterator<Item = impl AsRef<str>>) {
        let set = self
            .names
            .entry(code.to_string())
            .or_insert_with(|| [normalize_diagnosis(code)].into());
        set.extend(extra.into_iter().map(|n| normalize_diagnosis(n.as_ref())));
    }

    /// Override lines: `case_id<TAB>rank<TAB>accept|reject`; `#` comments
    /// and blank lines skipped.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, EvalError> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| EvalError::Parse {
                line: i + 1,
                message: format!("override: {m}"),
            };
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 3 {
                return Err(err("expected case_id, rank, verdict"));
            }
            let rank: usize = f[1].parse().ok().filter(|&r| r >= 1).ok_or_else(|| err("rank must be >= 1"))?;
            let verdict = match f[2] {
                "accept" => Verdict::Accept,
                "reject" => Verdict::Reject,
                _ => return Err(err("verdict must be accept or reject")),
            };
            self.overrides.insert((f[0].to_string(), rank), verdict);
        }
        Ok(self)
    }

    pub fn overrides(&self) -> &BTreeMap<(String, usize), Verdict> {
        &self.overrides
    }

    pub fn knows_code(&self, code: &str) -> bool {
        self.names.contains_key(code)
    }

    /// Whether the prediction at 1-based `rank` for `case_id` names any of
    /// the gold codes. An override for `(case_id, rank)` decides outright.
    pub fn matches(&self, case_id: &str, rank: usize, prediction: &str, gold: &BTreeSet<String>) -> bool {
        if let Some(v) = self.overrides.get(&(case_id.to_string(), rank)) {
            return *v == Verdict::Accept;
        }
        let p = normalize_diagnosis(prediction);
        if p.is_empty() {
            return false;
        }
        gold.iter().any(|code| match self.names.get(code) {
            Some(set) => set.contains(&p),
            None => normalize_diagnosis(code) == p,
        })
    }
}
