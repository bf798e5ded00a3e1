//! Prompt rendering, chat-completion backends and answer parsing.

mod backend;
mod mock;
mod parse;
mod prompt;

pub use backend::{
    BackendConfig, CallJournal, CallOutcome, DiagnosisBackend, HttpReply, HttpTransport, LiveBackend, Provider,
    RateLimiter, Transport,
};
pub use mock::{MockBackend, MockPolicy};
pub use parse::{clean_item, parse_response, render_diagnosis_list, DiagnosisResponse, LIST_LENGTH};
pub use prompt::{
    build_prompt, ordinal, phenotype_text, FewShotExample, PromptMode, RenderedPrompt, ANSWER_LEAD, COT_SUFFIX,
    SYSTEM_PROMPT,
};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("credential variable {var} is not set")]
    MissingCredential { var: String },

    #[error("mode needs {expected} examples, got {found}")]
    ExampleCount { expected: usize, found: usize },

    #[error("transport failed after {attempts} attempt(s){}: {message}", .status.map(|s| format!(" (last status {s})")).unwrap_or_default())]
    Transport {
        attempts: u32,
        status: Option<u16>,
        message: String,
    },

    #[error("mock policy: {0}")]
    Policy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
