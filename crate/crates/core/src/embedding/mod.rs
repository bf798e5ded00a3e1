//! IC-biased random walks and skip-gram node embeddings.

mod matrix;
mod sgns;
mod walk;

pub use matrix::{
    cosine, decode_embeddings, encode_embeddings, load_embeddings, nearest_nodes, save_embeddings,
    EmbeddingFormat, EmbeddingHeader, EmbeddingMatrix, EMBEDDING_REVISION,
};
pub use sgns::{sgns_gradients, sgns_loss, train_skipgram, SgnsGradients, TrainConfig, TrainOutcome};
pub use walk::{generate_walks, transition_weights, WalkConfig, WalkCorpus, WalkGraph};

pub(crate) use walk::derive_seed;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("cannot walk an empty graph")]
    EmptyGraph,

    #[error("cannot train on an empty corpus")]
    EmptyCorpus,

    #[error("embedding file: {0}")]
    Format(String),

    #[error("embedding row {row} ({id}) has a non-finite value")]
    NonFinite { row: usize, id: String },

    #[error("embedding file was trained on graph {found}, expected {expected}")]
    GraphVersion { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
