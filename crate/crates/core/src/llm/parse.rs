use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Expected answer length; shorter lists are flagged as truncated.
pub const LIST_LENGTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisResponse {
    pub ranked_diagnoses: Vec<String>,
    pub raw_text: String,
    pub truncated: bool,
}

/// `1. text`, `2) text`, `**3.** text` and similar; returns the number and
/// the remaining text.
fn ordinal_line(line: &str) -> Option<(u32, &str)> {
    let s = line.trim_start().trim_start_matches(['*', '_', '#', ' ']);
    let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 || digits > 3 {
        return None;
    }
    let n: u32 = s[..digits].parse().ok()?;
    let rest = s[digits..].strip_prefix(['.', ')'])?;
    let rest = rest.trim_start_matches(['*', '_']);
    if !rest.starts_with(char::is_whitespace) && !rest.is_empty() {
        return None;
    }
    Some((n, rest))
}

fn strip_bullet(line: &str) -> &str {
    let t = line.trim_start();
    for b in ["- ", "* ", "• "] {
        if let Some(rest) = t.strip_prefix(b) {
            return rest;
        }
    }
    t
}

/// Removes markdown emphasis and wrapping punctuation.
pub fn clean_item(text: &str) -> String {
    let no_marks: String = text.replace("**", "").replace("__", "").replace('`', "");
    let wrap = |c: char| matches!(c, '*' | '_' | '"' | '\'' | '“' | '”' | '.' | ',' | ';' | ':' | '-' | '–' | ' ' | '\t');
    let trimmed = no_marks.trim_matches(wrap);
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Extracts the ranked list from a model answer.
///
/// Ordinal lines win. When the text restarts its numbering (reasoning steps
/// followed by the list, as chain-of-thought answers tend to do), the last
/// run starting at 1 is taken. Without ordinal lines, every non-empty line
/// after the last line ending in `:` is taken.
pub fn parse_response(raw: &str) -> DiagnosisResponse {
    let lines: Vec<&str> = raw.lines().collect();
    let ordinals: Vec<(usize, u32, &str)> = lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| ordinal_line(l).map(|(n, t)| (i, n, t)))
        .collect();
    let items: Vec<String> = if !ordinals.is_empty() {
        let start = ordinals.iter().rposition(|&(_, n, _)| n == 1).unwrap_or(0);
        ordinals[start..].iter().map(|&(_, _, t)| clean_item(t)).collect()
    } else {
        let start = lines
            .iter()
            .rposition(|l| l.trim_end().ends_with(':'))
            .map_or(0, |i| i + 1);
        lines[start..].iter().map(|l| clean_item(strip_bullet(l))).collect()
    };
    let mut seen = HashSet::new();
    let ranked_diagnoses: Vec<String> = items
        .into_iter()
        .filter(|s| !s.is_empty() && seen.insert(s.to_lowercase()))
        .collect();
    DiagnosisResponse {
        truncated: ranked_diagnoses.len() < LIST_LENGTH,
        ranked_diagnoses,
        raw_text: raw.to_string(),
    }
}

/// The answer shape the prompt asks for: one numbered diagnosis per line.
pub fn render_diagnosis_list(names: &[String]) -> String {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{}. {n}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        let r = parse_response("1. Fabry disease\n2. Gaucher disease");
        assert_eq!(r.ranked_diagnoses, ["Fabry disease", "Gaucher disease"]);
        assert!(r.truncated);

        let ten: String = (1..=10).map(|i| format!("{i}. Disease {i}\n")).collect();
        let r = parse_response(&ten);
        assert_eq!(r.ranked_diagnoses.len(), 10);
        assert!(!r.truncated);

        let r = parse_response("1. Fabry disease\n2. A\n3. B\n4. Fabry disease\n5. C");
        assert_eq!(r.ranked_diagnoses, ["Fabry disease", "A", "B", "C"]);
    }

    #[test]
    fn strips_markdown_and_punctuation() {
        let raw = "Here you go:\n1. **Fabry disease**.\n2) *Gaucher disease*\n**3.** `Pompe disease`;\n4. \"Marfan syndrome\"";
        let r = parse_response(raw);
        assert_eq!(r.ranked_diagnoses, ["Fabry disease", "Gaucher disease", "Pompe disease", "Marfan syndrome"]);
        assert_eq!(r.raw_text, raw);
    }

    #[test]
    fn fallback_after_colon_preamble() {
        let raw = "Let me think.\nThe top 10 diagnoses are:\nFabry disease\n\n- Gaucher disease\n";
        assert_eq!(parse_response(raw).ranked_diagnoses, ["Fabry disease", "Gaucher disease"]);
        assert_eq!(parse_response("Fabry disease\nPompe disease").ranked_diagnoses, ["Fabry disease", "Pompe disease"]);
    }

    #[test]
    fn reasoning_steps_then_list() {
        let raw = "1. The patient has seizures.\n2. Ataxia suggests cerebellar involvement.\nThe top 10 diagnoses are:\n1. Fabry disease\n2. Pompe disease";
        assert_eq!(parse_response(raw).ranked_diagnoses, ["Fabry disease", "Pompe disease"]);
    }

    #[test]
    fn empty_extraction_is_not_an_error() {
        let r = parse_response("");
        assert!(r.ranked_diagnoses.is_empty());
        assert!(r.truncated);
        assert!(parse_response("The top 10 diagnoses are:").ranked_diagnoses.is_empty());
    }

    #[test]
    fn numbers_inside_names_are_not_ordinals() {
        let r = parse_response("1. Spinocerebellar ataxia type 3\n2. 22q11.2 deletion syndrome");
        assert_eq!(r.ranked_diagnoses, ["Spinocerebellar ataxia type 3", "22q11.2 deletion syndrome"]);
    }

    fn arb_name() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9 ()/-]{0,30}[A-Za-z0-9)]"
            .prop_map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
    }

    proptest! {
        #[test]
        fn round_trip_through_answer_format(names in prop::collection::vec(arb_name(), 0..15)) {
            let mut seen = HashSet::new();
            let names: Vec<String> = names.into_iter().filter(|n| seen.insert(n.to_lowercase())).collect();
            let parsed = parse_response(&render_diagnosis_list(&names));
            prop_assert_eq!(&parsed.ranked_diagnoses, &names);
            prop_assert_eq!(parsed.truncated, names.len() < 10);
        }
    }
}
