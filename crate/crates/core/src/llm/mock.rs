use std::time::Duration;

use super::backend::{CallOutcome, DiagnosisBackend};
use super::parse::{parse_response, render_diagnosis_list, LIST_LENGTH};
use super::prompt::RenderedPrompt;
use super::LlmError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockPolicy {
    /// Rank 1 is the first few-shot example's diagnosis, padded with fillers.
    EchoFirstExample,
    FixedList(Vec<String>),
}

/// Offline stand-in for a chat model. Deterministic; the optional latency
/// only slows it down.
#[derive(Debug, Clone)]
pub struct MockBackend {
    pub policy: MockPolicy,
    pub latency: Option<Duration>,
}

impl MockBackend {
    pub fn new(policy: MockPolicy) -> Self {
        Self { policy, latency: None }
    }

    pub fn answer(&self, prompt: &RenderedPrompt) -> Result<String, LlmError> {
        let names = match &self.policy {
            MockPolicy::FixedList(list) => list.clone(),
            MockPolicy::EchoFirstExample => {
                if prompt.example_ids.is_empty() {
                    return Err(LlmError::Policy(format!(
                        "EchoFirstExample needs a few-shot prompt, got {}",
                        prompt.mode
                    )));
                }
                let first = first_example_diagnosis(&prompt.user_text)
                    .ok_or_else(|| LlmError::Policy("no example diagnosis found in prompt".into()))?;
                let mut names = vec![first.to_string()];
                names.extend((1..LIST_LENGTH).map(|i| format!("Unrelated filler condition {i}")));
                names
            }
        };
        Ok(render_diagnosis_list(&names))
    }
}

const EXAMPLE_LEAD: &str = "The 1st patient has a rare disease ";
const EXAMPLE_TAIL: &str = ", and his/her phenotype is as follows:";

fn first_example_diagnosis(user_text: &str) -> Option<&str> {
    let start = user_text.find(EXAMPLE_LEAD)? + EXAMPLE_LEAD.len();
    let len = user_text[start..].find(EXAMPLE_TAIL)?;
    Some(&user_text[start..start + len])
}

impl DiagnosisBackend for MockBackend {
    fn diagnose(&self, prompt: &RenderedPrompt, _label: &str) -> Result<CallOutcome, LlmError> {
        let raw = self.answer(prompt)?;
        if let Some(d) = self.latency {
            std::thread::sleep(d);
        }
        Ok(CallOutcome {
            response: parse_response(&raw),
            attempts: 1,
        })
    }

    fn describe(&self) -> String {
        match &self.policy {
            MockPolicy::EchoFirstExample => "mock policy=echo-first-example".into(),
            MockPolicy::FixedList(l) => format!("mock policy=fixed-list({})", l.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::PromptMode;

    fn prompt(mode: PromptMode, user: &str, ids: &[&str]) -> RenderedPrompt {
        RenderedPrompt {
            system_text: "s".into(),
            user_text: user.into(),
            mode,
            example_ids: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn echo_first_example() {
        let p = prompt(
            PromptMode::DynamicFewShot(2),
            "Let me give you 2 examples first: The 1st patient has a rare disease Fabry disease, type 2, and his/her phenotype is as follows: Fever. The 2nd patient has a rare disease Pompe disease, and his/her phenotype is as follows: Ataxia. Next ...",
            &["a", "b"],
        );
        let m = MockBackend::new(MockPolicy::EchoFirstExample);
        let out = m.diagnose(&p, "q").unwrap();
        assert_eq!(out.response.ranked_diagnoses[0], "Fabry disease, type 2");
        assert_eq!(out.response.ranked_diagnoses.len(), 10);
        assert!(!out.response.truncated);
        assert_eq!(m.diagnose(&p, "q").unwrap(), out);
    }

    #[test]
    fn echo_on_zero_shot_is_policy_error() {
        let m = MockBackend::new(MockPolicy::EchoFirstExample);
        let err = m.diagnose(&prompt(PromptMode::ZeroShot, "x", &[]), "q");
        assert!(matches!(err, Err(LlmError::Policy(_))));
    }

    #[test]
    fn fixed_list() {
        let m = MockBackend::new(MockPolicy::FixedList(vec!["X".into()]));
        for mode in [PromptMode::ZeroShot, PromptMode::CoT] {
            let out = m.diagnose(&prompt(mode, "anything", &[]), "q").unwrap();
            assert_eq!(out.response.ranked_diagnoses, ["X"]);
            assert!(out.response.truncated);
        }
    }
}
