//! Skip-gram with negative sampling over walk sequences.
//!
//! Every (center, context) pair inside a symmetric window of radius
//! `context_size` yields one positive update and `num_negative_samples`
//! negative updates; negatives come from the corpus unigram distribution
//! raised to the 3/4 power. Per-pair loss:
//!
//! `-ln σ(u·v⁺) - Σ ln σ(-u·v⁻)`
//!
//! with `u` the center's input vector and `v` output vectors.

use std::sync::atomic::{AtomicU32, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{EmbeddingHeader, EmbeddingMatrix};
use super::walk::{derive_seed, WalkCorpus};
use super::EmbeddingError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub embedding_dim: usize,
    pub context_size: usize,
    pub num_negative_samples: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Walks per shuffled batch; in parallel mode a batch is split across workers.
    pub batch_size: usize,
    pub seed: u64,
    /// 1 = deterministic single writer; >1 = lock-free parallel updates.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 256,
            context_size: 35,
            num_negative_samples: 1,
            learning_rate: 0.01,
            epochs: 36,
            batch_size: 256,
            seed: 42,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, walk_length: usize) -> Result<(), EmbeddingError> {
        let positive = [
            ("embedding_dim", self.embedding_dim),
            ("context_size", self.context_size),
            ("num_negative_samples", self.num_negative_samples),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("threads", self.threads),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(EmbeddingError::Config(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(EmbeddingError::Config("learning_rate must be positive".into()));
        }
        if self.context_size >= walk_length {
            return Err(EmbeddingError::Config(format!(
                "context_size {} must be smaller than walk_length {walk_length}",
                self.context_size
            )));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss contribution of one target with score `dot`: `-ln σ(dot)` for the
/// positive, `-ln σ(-dot)` for a negative.
fn target_loss(dot: f64, positive: bool) -> f64 {
    if positive {
        softplus(-dot)
    } else {
        softplus(dot)
    }
}

/// Derivative of [`target_loss`] with respect to `dot`.
fn target_slope(dot: f64, positive: bool) -> f64 {
    sigmoid(dot) - if positive { 1.0 } else { 0.0 }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss for a single center vector, its positive context
/// vector and a set of negative output vectors.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    target_loss(dot(center, context), true)
        + negatives
            .iter()
            .map(|n| target_loss(dot(center, n), false))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`] with respect to each input.
pub fn sgns_gradients(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> SgnsGradients {
    let mut grad_center = vec![0.0; center.len()];
    let mut targets: Vec<(&[f64], bool)> = vec![(context, true)];
    targets.extend(negatives.iter().map(|n| (n.as_slice(), false)));
    let mut out = Vec::with_capacity(targets.len());
    for (vector, positive) in targets {
        let g = target_slope(dot(center, vector), positive);
        for (gc, v) in grad_center.iter_mut().zip(vector) {
            *gc += g * v;
        }
        out.push(center.iter().map(|c| g * c).collect::<Vec<f64>>());
    }
    let context_grad = out.remove(0);
    SgnsGradients {
        center: grad_center,
        context: context_grad,
        negatives: out,
    }
}

/// Floor of the linearly decayed learning rate, relative to the initial one.
const MIN_LR_FRACTION: f64 = 1e-4;

/// f32 parameter storage shared between workers. Relaxed atomics give the
/// usual lock-free word2vec update semantics without data races.
struct Params {
    dim: usize,
    input: Vec<AtomicU32>,
    output: Vec<AtomicU32>,
}

impl Params {
    #[inline]
    fn get(cells: &[AtomicU32], i: usize) -> f32 {
        f32::from_bits(cells[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(cells: &[AtomicU32], i: usize, v: f32) {
        cells[i].store(v.to_bits(), Ordering::Relaxed);
    }

    /// One center/target update, word2vec style: the output row moves
    /// immediately, the input-row gradient accumulates in `pending`.
    fn update_target(&self, center: usize, target: usize, positive: bool, lr: f32, pending: &mut [f32]) -> f64 {
        let (c0, t0) = (center * self.dim, target * self.dim);
        let mut score = 0.0f32;
        for k in 0..self.dim {
            score += Self::get(&self.input, c0 + k) * Self::get(&self.output, t0 + k);
        }
        let score = score as f64;
        let g = target_slope(score, positive) as f32;
        for (k, p) in pending.iter_mut().enumerate() {
            let out_k = Self::get(&self.output, t0 + k);
            *p += g * out_k;
            let in_k = Self::get(&self.input, c0 + k);
            Self::set(&self.output, t0 + k, out_k - lr * g * in_k);
        }
        target_loss(score, positive)
    }

    fn apply_pending(&self, center: usize, lr: f32, pending: &[f32]) {
        let c0 = center * self.dim;
        for (k, p) in pending.iter().enumerate() {
            let v = Self::get(&self.input, c0 + k);
            Self::set(&self.input, c0 + k, v - lr * p);
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub matrix: EmbeddingMatrix,
    /// Mean per-pair loss on a fixed probe (same walks, same negatives)
    /// after each epoch, parameters frozen. Comparable across epochs.
    pub epoch_losses: Vec<f64>,
    /// Mean pre-update loss seen while training. Biased low, since a walk
    /// fits itself as it goes, and the bias shrinks as the rate decays.
    pub running_losses: Vec<f64>,
}

struct Vocabulary {
    /// corpus node index -> row
    row_of: Vec<Option<u32>>,
    ids: Vec<String>,
    counts: Vec<u64>,
}

fn vocabulary(corpus: &WalkCorpus) -> Vocabulary {
    let mut counts_by_node = vec![0u64; corpus.node_ids.len()];
    for seq in &corpus.sequences {
        for &n in seq {
            counts_by_node[n as usize] += 1;
        }
    }
    let mut row_of = vec![None; corpus.node_ids.len()];
    let mut ids = Vec::new();
    let mut counts = Vec::new();
    for (node, &c) in counts_by_node.iter().enumerate() {
        if c > 0 {
            row_of[node] = Some(ids.len() as u32);
            ids.push(corpus.node_ids[node].clone());
            counts.push(c);
        }
    }
    Vocabulary { row_of, ids, counts }
}

fn train_walk(
    params: &Params,
    walk: &[u32],
    config: &TrainConfig,
    noise: &WeightedAliasIndex<f64>,
    lr: f32,
    seed: u64,
) -> (f64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pending = vec![0f32; params.dim];
    let (mut loss, mut pairs) = (0.0, 0u64);
    let len = walk.len();
    for i in 0..len {
        let center = walk[i] as usize;
        let lo = i.saturating_sub(config.context_size);
        let hi = (i + config.context_size).min(len - 1);
        for j in lo..=hi {
            if j == i {
                continue;
            }
            let context = walk[j] as usize;
            pending.iter_mut().for_each(|p| *p = 0.0);
            loss += params.update_target(center, context, true, lr, &mut pending);
            for _ in 0..config.num_negative_samples {
                let negative = noise.sample(&mut rng);
                if negative == context {
                    continue;
                }
                loss += params.update_target(center, negative, false, lr, &mut pending);
            }
            params.apply_pending(center, lr, &pending);
            pairs += 1;
        }
    }
    (loss, pairs)
}

/// Walks used to measure the loss after every epoch.
const PROBE_WALKS: usize = 512;

fn probe_walks(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX, 1));
    let mut all: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(all.as_mut_slice(), &mut rng);
    all.truncate(PROBE_WALKS);
    all.sort_unstable();
    all
}

/// Mean loss over the probe walks without updating anything. Negatives
/// are drawn from a per-walk seed that does not change between epochs.
fn probe_loss(params: &Params, walks: &[Vec<u32>], probe: &[usize], config: &TrainConfig, noise: &WeightedAliasIndex<f64>) -> f64 {
    let dim = params.dim;
    let row = |cells: &[AtomicU32], r: usize| -> Vec<f64> {
        (0..dim).map(|k| Params::get(cells, r * dim + k) as f64).collect()
    };
    let (mut loss, mut pairs) = (0.0, 0u64);
    for &w in probe {
        let walk = &walks[w];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX - 1, w as u64));
        for i in 0..walk.len() {
            let center = row(&params.input, walk[i] as usize);
            let lo = i.saturating_sub(config.context_size);
            let hi = (i + config.context_size).min(walk.len() - 1);
            for j in lo..=hi {
                if j == i {
                    continue;
                }
                let context = walk[j] as usize;
                loss += target_loss(dot(&center, &row(&params.output, context)), true);
                for _ in 0..config.num_negative_samples {
                    let negative = noise.sample(&mut rng);
                    if negative != context {
                        loss += target_loss(dot(&center, &row(&params.output, negative)), false);
                    }
                }
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        loss / pairs as f64
    }
}

/// Trains node vectors on `corpus`.
pub fn train_skipgram(corpus: &WalkCorpus, config: &TrainConfig) -> Result<TrainOutcome, EmbeddingError> {
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    config.validate(corpus.walk_length())?;
    let vocab = vocabulary(corpus);
    let walks: Vec<Vec<u32>> = corpus
        .sequences
        .iter()
        .map(|s| s.iter().map(|&n| vocab.row_of[n as usize].expect("in vocabulary")).collect())
        .collect();
    let noise = WeightedAliasIndex::new(vocab.counts.iter().map(|&c| (c as f64).powf(0.75)).collect())
        .map_err(|e| EmbeddingError::Config(format!("noise distribution: {e}")))?;

    let dim = config.embedding_dim;
    let rows = vocab.ids.len();
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX, 0));
    let half_width = 0.5 / dim as f32;
    let input: Vec<AtomicU32> = (0..rows * dim)
        .map(|_| AtomicU32::new(init_rng.random_range(-half_width..half_width).to_bits()))
        .collect();
    let output: Vec<AtomicU32> = (0..rows * dim).map(|_| AtomicU32::new(0f32.to_bits())).collect();
    let params = Params { dim, input, output };

    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| EmbeddingError::Config(e.to_string()))?,
        )
    } else {
        None
    };

    let mut order: Vec<usize> = (0..walks.len()).collect();
    let batches_per_epoch = walks.len().div_ceil(config.batch_size);
    let total_batches = (config.epochs * batches_per_epoch) as f64;
    let probe = probe_walks(walks.len(), config.seed);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut running_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, epoch as u64, u64::MAX));
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut shuffle_rng);
        let (mut loss, mut pairs) = (0.0, 0u64);
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            // word2vec-style linear decay, fixed per batch so parallel
            // workers agree on it
            let done = (epoch * batches_per_epoch + b) as f64 / total_batches;
            let lr = (config.learning_rate * (1.0 - done).max(MIN_LR_FRACTION)) as f32;
            let walk_seed = |w: usize| derive_seed(config.seed, epoch as u64, w as u64);
            let (l, p) = match &pool {
                None => batch.iter().fold((0.0, 0), |(l, p), &w| {
                    let (dl, dp) = train_walk(&params, &walks[w], config, &noise, lr, walk_seed(w));
                    (l + dl, p + dp)
                }),
                Some(pool) => pool.install(|| {
                    batch
                        .par_iter()
                        .map(|&w| train_walk(&params, &walks[w], config, &noise, lr, walk_seed(w)))
                        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
                }),
            };
            loss += l;
            pairs += p;
        }
        let mean = if pairs == 0 { 0.0 } else { loss / pairs as f64 };
        let probe_loss = probe_loss(&params, &walks, &probe, config, &noise);
        log::debug!("epoch {} probe loss {probe_loss:.6} running loss {mean:.6}", epoch + 1);
        epoch_losses.push(probe_loss);
        running_losses.push(mean);
    }

    let data: Vec<f32> = params
        .input
        .iter()
        .map(|c| f32::from_bits(c.load(Ordering::Relaxed)))
        .collect();
    let header = EmbeddingHeader {
        dim,
        vocab: rows,
        graph_version: corpus.graph_version.clone(),
        config: serde_json::json!({ "walk": corpus.walk_config, "train": config }).to_string(),
    };
    let matrix = EmbeddingMatrix::new(header, vocab.ids, data)?;
    Ok(TrainOutcome {
        matrix,
        epoch_losses,
        running_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::walk::WalkConfig;

    fn corpus(seqs: Vec<Vec<u32>>, n: usize) -> WalkCorpus {
        WalkCorpus {
            graph_version: "toy".into(),
            walk_config: WalkConfig::default(),
            node_ids: (0..n).map(|i| format!("n{i}")).collect(),
            sequences: seqs,
        }
    }

    /// Central differences of `sgns_loss` along every coordinate.
    fn numeric_gradient(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> SgnsGradients {
        let h = 1e-6;
        let mut flat: Vec<f64> = center.iter().chain(context).copied().collect();
        for n in negatives {
            flat.extend(n);
        }
        let d = center.len();
        let eval = |v: &[f64]| {
            let negs: Vec<Vec<f64>> = v[2 * d..].chunks(d).map(<[f64]>::to_vec).collect();
            sgns_loss(&v[..d], &v[d..2 * d], &negs)
        };
        let grad: Vec<f64> = (0..flat.len())
            .map(|i| {
                let mut plus = flat.clone();
                let mut minus = flat.clone();
                plus[i] += h;
                minus[i] -= h;
                (eval(&plus) - eval(&minus)) / (2.0 * h)
            })
            .collect();
        SgnsGradients {
            center: grad[..d].to_vec(),
            context: grad[d..2 * d].to_vec(),
            negatives: grad[2 * d..].chunks(d).map(<[f64]>::to_vec).collect(),
        }
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        if scale == 0.0 { diff } else { diff / scale }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let v = |rng: &mut ChaCha8Rng| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (c, p) = (v(&mut rng), v(&mut rng));
            let negs = vec![v(&mut rng), v(&mut rng)];
            let a = sgns_gradients(&c, &p, &negs);
            let n = numeric_gradient(&c, &p, &negs);
            assert!(rel_err(&a.center, &n.center) < 1e-4);
            assert!(rel_err(&a.context, &n.context) < 1e-4);
            for (x, y) in a.negatives.iter().zip(&n.negatives) {
                assert!(rel_err(x, y) < 1e-4);
            }
        }
    }

    #[test]
    fn loss_is_stable_for_large_scores() {
        let big = vec![100.0];
        assert!(sgns_loss(&big, &big, &[]) < 1e-40);
        assert!((sgns_loss(&big, &[0.0], &[big.clone()]) - (2f64.ln() + 10_000.0)).abs() < 1e-6);
    }

    #[test]
    fn rejects_empty_corpus_and_bad_window() {
        let cfg = TrainConfig { context_size: 2, ..Default::default() };
        assert!(matches!(train_skipgram(&corpus(vec![], 2), &cfg), Err(EmbeddingError::EmptyCorpus)));
        let c = corpus(vec![vec![0, 1, 0]], 2);
        let wide = TrainConfig { context_size: 3, ..Default::default() };
        assert!(matches!(train_skipgram(&c, &wide), Err(EmbeddingError::Config(_))));
    }

    #[test]
    fn shape_follows_vocabulary() {
        // node 2 never appears and gets no row
        let c = corpus(vec![vec![0, 1, 0, 1], vec![1, 0, 1, 3]], 4);
        let cfg = TrainConfig { context_size: 2, epochs: 2, ..Default::default() };
        let out = train_skipgram(&c, &cfg).unwrap();
        assert_eq!(out.matrix.len(), 3);
        assert_eq!(out.matrix.dim(), 256);
        assert!(out.matrix.row("n2").is_none());
        for id in ["n0", "n1", "n3"] {
            let row = out.matrix.row(id).unwrap();
            assert!(row.iter().all(|v| v.is_finite()));
            assert!(row.iter().any(|&v| v != 0.0));
        }
    }

    /// Nodes 0 and 1 only ever co-occur with each other; nodes 2-5 mix freely
    /// among themselves.
    fn two_clique_corpus(seed: u64) -> WalkCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seqs = Vec::new();
        for w in 0..200 {
            let seq = if w % 3 == 0 {
                (0..10).map(|_| rng.random_range(0..2)).collect()
            } else {
                (0..10).map(|_| rng.random_range(2..6)).collect()
            };
            seqs.push(seq);
        }
        corpus(seqs, 6)
    }

    #[test]
    fn loss_decreases_and_exclusive_pair_is_most_similar() {
        let cfg = TrainConfig {
            embedding_dim: 16,
            context_size: 3,
            epochs: 5,
            ..Default::default()
        };
        let out = train_skipgram(&two_clique_corpus(1), &cfg).unwrap();
        assert!(out.epoch_losses.last().unwrap() < out.epoch_losses.first().unwrap());

        let m = &out.matrix;
        let mut all = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                all.push(m.cosine(&format!("n{a}"), &format!("n{b}")).unwrap());
            }
        }
        all.sort_by(f64::total_cmp);
        // 90th percentile by nearest rank: the 14th of 15 sorted values
        let p90 = all[(0.9 * all.len() as f64).ceil() as usize - 1];
        assert!(m.cosine("n0", "n1").unwrap() >= p90, "{all:?}");
    }

    #[test]
    fn deterministic_mode_is_bit_identical() {
        let cfg = TrainConfig { embedding_dim: 8, context_size: 2, epochs: 2, ..Default::default() };
        let c = two_clique_corpus(2);
        let a = train_skipgram(&c, &cfg).unwrap();
        let b = train_skipgram(&c, &cfg).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn parallel_mode_still_learns() {
        let cfg = TrainConfig {
            embedding_dim: 16,
            context_size: 3,
            epochs: 5,
            learning_rate: 0.05,
            threads: 4,
            batch_size: 32,
            ..Default::default()
        };
        let out = train_skipgram(&two_clique_corpus(4), &cfg).unwrap();
        assert!(out.epoch_losses.last().unwrap() < out.epoch_losses.first().unwrap());
        let m = &out.matrix;
        assert!(m.cosine("n0", "n1").unwrap() > m.cosine("n0", "n4").unwrap());
    }
}
