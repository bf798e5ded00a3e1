//! First-order random walks whose transition weights come from information
//! content rather than node2vec's return/in-out parameters.
//!
//! Standing on phenotype `t1`, a step to phenotype `t2` has weight
//! `IC(t2)` and a step to disease `d` has weight `IC(t1)`. Standing on a
//! disease, a step to phenotype `t` has weight `IC(t)`. IS_A edges are
//! walked in both directions. Weights are normalised per node at sampling
//! time; a node whose neighbour weights are all zero samples uniformly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EmbeddingError;
use crate::graph::{IcTable, KnowledgeGraph, NodeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walk_length: 45,
            walks_per_node: 40,
            seed: 42,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.walk_length < 2 {
            return Err(EmbeddingError::Config("walk_length must be at least 2".into()));
        }
        if self.walks_per_node < 1 {
            return Err(EmbeddingError::Config("walks_per_node must be at least 1".into()));
        }
        Ok(())
    }
}

/// Walk sequences over interned node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub graph_version: String,
    pub walk_config: WalkConfig,
    /// Id table; sequences hold indices into it.
    pub node_ids: Vec<String>,
    pub sequences: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn walk_length(&self) -> usize {
        self.sequences.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Sequence `i` as node id strings.
    pub fn sequence_ids(&self, i: usize) -> Vec<&str> {
        self.sequences[i]
            .iter()
            .map(|&n| self.node_ids[n as usize].as_str())
            .collect()
    }
}

#[derive(Debug, Clone)]
struct NodeSampler {
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NodeSampler {
    fn new(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let (neighbors, weights): (Vec<u32>, Vec<f64>) = pairs.into_iter().unzip();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self {
            neighbors,
            weights,
            cumulative,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Option<u32> {
        let total = *self.cumulative.last()?;
        if total <= 0.0 {
            let i = rng.random_range(0..self.neighbors.len());
            return Some(self.neighbors[i]);
        }
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        Some(self.neighbors[i.min(self.neighbors.len() - 1)])
    }

    fn probabilities(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        if total <= 0.0 {
            let n = self.weights.len() as f64;
            return vec![1.0 / n; self.weights.len()];
        }
        self.weights.iter().map(|w| w / total).collect()
    }
}

/// Weighted adjacency ready for sampling.
#[derive(Debug, Clone)]
pub struct WalkGraph {
    graph_version: String,
    node_ids: Vec<String>,
    samplers: Vec<NodeSampler>,
}

fn node_slot(graph: &KnowledgeGraph, node: NodeRef) -> u32 {
    match node {
        NodeRef::Phenotype(i) => i as u32,
        NodeRef::Disease(i) => (graph.phenotype_count() + i) as u32,
    }
}

fn weights_for(graph: &KnowledgeGraph, ic: &IcTable, node: NodeRef) -> Vec<(NodeRef, f64)> {
    match node {
        NodeRef::Phenotype(t1) => {
            let own = ic.at(t1);
            graph
                .parents_of(t1)
                .iter()
                .chain(graph.children_of(t1))
                .map(|&t2| (NodeRef::Phenotype(t2), ic.at(t2)))
                .chain(graph.diseases_of(t1).iter().map(|&d| (NodeRef::Disease(d), own)))
                .collect()
        }
        NodeRef::Disease(d) => graph
            .phenotypes_of(d)
            .iter()
            .map(|&t| (NodeRef::Phenotype(t), ic.at(t)))
            .collect(),
    }
}

fn check_ic(graph: &KnowledgeGraph, ic: &IcTable) -> Result<(), EmbeddingError> {
    let aligned = ic.len() == graph.phenotype_count()
        && ic
            .iter()
            .zip(graph.phenotypes())
            .all(|((t, _, _), p)| t == p.id);
    if aligned {
        Ok(())
    } else {
        Err(EmbeddingError::Config(
            "IC table was not computed on this graph".into(),
        ))
    }
}

/// Unnormalised transition weights out of `node` (a term id or disease
/// entity id), in neighbour id order.
pub fn transition_weights(
    graph: &KnowledgeGraph,
    ic: &IcTable,
    node: &str,
) -> Result<Vec<(String, f64)>, EmbeddingError> {
    check_ic(graph, ic)?;
    let node = graph
        .resolve_node(node)
        .ok_or_else(|| EmbeddingError::UnknownNode(node.to_string()))?;
    let mut out: Vec<(NodeRef, f64)> = weights_for(graph, ic, node);
    out.sort_by_key(|(n, _)| node_slot(graph, *n));
    Ok(out
        .into_iter()
        .map(|(n, w)| (graph.node_id(n), w))
        .collect())
}

impl WalkGraph {
    pub fn from_knowledge_graph(graph: &KnowledgeGraph, ic: &IcTable) -> Result<Self, EmbeddingError> {
        check_ic(graph, ic)?;
        let node_ids = graph.nodes().map(|n| graph.node_id(n)).collect();
        let samplers = graph
            .nodes()
            .map(|n| {
                NodeSampler::new(
                    weights_for(graph, ic, n)
                        .into_iter()
                        .map(|(m, w)| (node_slot(graph, m), w))
                        .collect(),
                )
            })
            .collect();
        Ok(Self {
            graph_version: graph.version_tag(),
            node_ids,
            samplers,
        })
    }

    /// Generic weighted digraph: `adjacency[i]` lists `(neighbour, weight)`.
    pub fn from_adjacency(
        graph_version: impl Into<String>,
        node_ids: Vec<String>,
        adjacency: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self, EmbeddingError> {
        if node_ids.len() != adjacency.len() {
            return Err(EmbeddingError::Config("one adjacency list per node expected".into()));
        }
        let n = node_ids.len();
        let mut samplers = Vec::with_capacity(n);
        for list in adjacency {
            let mut pairs = Vec::with_capacity(list.len());
            for (m, w) in list {
                if m >= n || !(w >= 0.0 && w.is_finite()) {
                    return Err(EmbeddingError::Config(format!("bad edge to {m} with weight {w}")));
                }
                pairs.push((m as u32, w));
            }
            samplers.push(NodeSampler::new(pairs));
        }
        Ok(Self {
            graph_version: graph_version.into(),
            node_ids,
            samplers,
        })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    /// Normalised transition probabilities out of node `i`.
    pub fn probabilities(&self, i: usize) -> Vec<(usize, f64)> {
        let s = &self.samplers[i];
        s.neighbors
            .iter()
            .map(|&n| n as usize)
            .zip(s.probabilities())
            .collect()
    }

    /// Draws the next node after `i`, or `None` for an isolated node.
    pub fn sample_next<R: Rng>(&self, i: usize, rng: &mut R) -> Option<usize> {
        self.samplers[i].sample(rng).map(|n| n as usize)
    }

    fn walk(&self, start: usize, length: usize, seed: u64) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seq = Vec::with_capacity(length);
        seq.push(start as u32);
        while seq.len() < length {
            let current = *seq.last().expect("non-empty") as usize;
            let next = self.samplers[current].sample(&mut rng).unwrap_or(start as u32);
            seq.push(next);
        }
        seq
    }

    /// `walks_per_node` walks from every node, round by round. Each walk
    /// draws from its own seed derived from `(seed, round, start)`, so the
    /// corpus does not depend on `threads`.
    pub fn generate(&self, config: &WalkConfig, threads: usize) -> Result<WalkCorpus, EmbeddingError> {
        config.validate()?;
        if self.is_empty() {
            return Err(EmbeddingError::EmptyGraph);
        }
        let n = self.len();
        let jobs = config.walks_per_node * n;
        let run = |job: usize| {
            let (round, start) = (job / n, job % n);
            self.walk(start, config.walk_length, derive_seed(config.seed, round as u64, start as u64))
        };
        let sequences = if threads <= 1 {
            (0..jobs).map(run).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| EmbeddingError::Config(e.to_string()))?;
            pool.install(|| (0..jobs).into_par_iter().map(run).collect())
        };
        Ok(WalkCorpus {
            graph_version: self.graph_version.clone(),
            walk_config: *config,
            node_ids: self.node_ids.clone(),
            sequences,
        })
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b)
}

/// IC-biased walk corpus over the knowledge graph, single-threaded.
pub fn generate_walks(
    graph: &KnowledgeGraph,
    ic: &IcTable,
    config: &WalkConfig,
) -> Result<WalkCorpus, EmbeddingError> {
    WalkGraph::from_knowledge_graph(graph, ic)?.generate(config, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_support::*;
    use crate::graph::{build_graph, BuildOptions};
    use crate::ontology::TermId;

    fn ic_of(pairs: &[(u32, f64)]) -> IcTable {
        IcTable::from_values(pairs.iter().map(|&(t, v)| (hp(t), v)), 4)
    }

    /// t1 -- t2, t1 -- t3 via IS_A (t2, t3 children of t1); optional disease on t1.
    fn star(with_disease: bool) -> KnowledgeGraph {
        let terms = vec![term(1, "t1", &[]), term(2, "t2", &[1]), term(3, "t3", &[1])];
        let anns = if with_disease { vec![ann("OMIM:1", "d1", 1)] } else { vec![] };
        build_graph(&terms, &anns, &BuildOptions::default()).unwrap().0
    }

    #[test]
    fn phenotype_neighbours_weighted_by_their_ic() {
        let g = star(false);
        let ic = ic_of(&[(1, 0.5), (2, 2.0), (3, 1.0)]);
        let w = transition_weights(&g, &ic, "HP:0000001").unwrap();
        assert_eq!(w, vec![("HP:0000002".to_string(), 2.0), ("HP:0000003".to_string(), 1.0)]);

        let wg = WalkGraph::from_knowledge_graph(&g, &ic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| wg.sample_next(0, &mut rng) == Some(1)).count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.02, "{freq}");
    }

    #[test]
    fn sole_disease_neighbour_has_probability_one() {
        let terms = vec![term(1, "t1", &[])];
        let (g, _) = build_graph(&terms, &[ann("OMIM:1", "d1", 1)], &BuildOptions::default()).unwrap();
        let ic = ic_of(&[(1, 1.5)]);
        let wg = WalkGraph::from_knowledge_graph(&g, &ic).unwrap();
        assert_eq!(wg.probabilities(0), vec![(1, 1.0)]);
    }

    #[test]
    fn disease_step_uses_source_ic() {
        let terms = vec![term(1, "t1", &[]), term(2, "t2", &[1])];
        let (g, _) = build_graph(&terms, &[ann("OMIM:1", "d1", 1)], &BuildOptions::default()).unwrap();
        let ic = ic_of(&[(1, 1.5), (2, 4.5)]);
        let w = transition_weights(&g, &ic, "HP:0000001").unwrap();
        assert_eq!(w, vec![("HP:0000002".to_string(), 4.5), ("OMIM:1".to_string(), 1.5)]);
        let wg = WalkGraph::from_knowledge_graph(&g, &ic).unwrap();
        let p = wg.probabilities(0);
        assert!((p[0].1 - 4.5 / 6.0).abs() < 1e-15);
        assert!((p[1].1 - 1.5 / 6.0).abs() < 1e-15);
        // from the disease back to its only phenotype
        assert_eq!(transition_weights(&g, &ic, "OMIM:1").unwrap(), vec![("HP:0000001".to_string(), 1.5)]);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let g = star(false);
        let ic = ic_of(&[(1, 0.5), (2, 2.0), (3, 1.0)]);
        assert!(matches!(
            transition_weights(&g, &ic, "HP:0000099"),
            Err(EmbeddingError::UnknownNode(_))
        ));
    }

    #[test]
    fn zero_weights_fall_back_to_uniform() {
        let g = star(false);
        let ic = ic_of(&[(1, 0.0), (2, 0.0), (3, 0.0)]);
        let wg = WalkGraph::from_knowledge_graph(&g, &ic).unwrap();
        assert_eq!(wg.probabilities(0), vec![(1, 0.5), (2, 0.5)]);
    }

    #[test]
    fn two_node_graph_alternates() {
        let terms = vec![term(1, "t1", &[])];
        let (g, _) = build_graph(&terms, &[ann("OMIM:1", "d1", 1)], &BuildOptions::default()).unwrap();
        let ic = ic_of(&[(1, 0.7)]);
        let cfg = WalkConfig {
            walk_length: 4,
            walks_per_node: 3,
            seed: 1,
        };
        let corpus = generate_walks(&g, &ic, &cfg).unwrap();
        assert_eq!(corpus.sequences.len(), 6);
        for i in 0..corpus.sequences.len() {
            let ids = corpus.sequence_ids(i);
            let alt: Vec<&str> = if ids[0] == "OMIM:1" {
                vec!["OMIM:1", "HP:0000001", "OMIM:1", "HP:0000001"]
            } else {
                vec!["HP:0000001", "OMIM:1", "HP:0000001", "OMIM:1"]
            };
            assert_eq!(ids, alt);
        }
    }

    #[test]
    fn walks_follow_edges_and_are_seed_deterministic() {
        let g = star(true);
        let ic = ic_of(&[(1, 0.5), (2, 2.0), (3, 1.0)]);
        let cfg = WalkConfig {
            walk_length: 12,
            walks_per_node: 5,
            seed: 99,
        };
        let a = generate_walks(&g, &ic, &cfg).unwrap();
        let b = generate_walks(&g, &ic, &cfg).unwrap();
        assert_eq!(a, b);
        let parallel = WalkGraph::from_knowledge_graph(&g, &ic).unwrap().generate(&cfg, 4).unwrap();
        assert_eq!(a, parallel);
        let wg = WalkGraph::from_knowledge_graph(&g, &ic).unwrap();
        for seq in &a.sequences {
            assert_eq!(seq.len(), 12);
            for pair in seq.windows(2) {
                assert!(wg.probabilities(pair[0] as usize).iter().any(|(n, _)| *n == pair[1] as usize));
            }
        }
        let other = generate_walks(&g, &ic, &WalkConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn isolated_node_restarts_at_start() {
        let wg = WalkGraph::from_adjacency("t", vec!["a".into(), "b".into()], vec![vec![], vec![]]).unwrap();
        let corpus = wg
            .generate(&WalkConfig { walk_length: 3, walks_per_node: 1, seed: 0 }, 1)
            .unwrap();
        assert_eq!(corpus.sequences, vec![vec![0, 0, 0], vec![1, 1, 1]]);
    }

    #[test]
    fn config_is_validated() {
        let g = star(false);
        let ic = ic_of(&[(1, 0.5), (2, 2.0), (3, 1.0)]);
        let bad = WalkConfig { walk_length: 1, ..Default::default() };
        assert!(generate_walks(&g, &ic, &bad).is_err());
        let mismatched = IcTable::from_values([(TermId::new(5).unwrap(), 1.0)], 1);
        assert!(generate_walks(&g, &mismatched, &WalkConfig::default()).is_err());
    }

    #[test]
    fn high_ic_leaf_is_visited_more_often() {
        // hub 0 with leaves 1 (IC 3) and 2 (IC 1): the chain alternates hub/leaf,
        // so leaf visit counts are in the ratio of their weights.
        let g = star(false);
        let ic = ic_of(&[(1, 0.5), (2, 3.0), (3, 1.0)]);
        let wg = WalkGraph::from_knowledge_graph(&g, &ic).unwrap();
        let corpus = wg
            .generate(&WalkConfig { walk_length: 1000, walks_per_node: 334, seed: 5 }, 1)
            .unwrap();
        let mut counts = [0usize; 3];
        for seq in &corpus.sequences {
            for &n in &seq[1..] {
                counts[n as usize] += 1;
            }
        }
        let ratio = counts[1] as f64 / counts[2] as f64;
        assert!((ratio / 3.0 - 1.0).abs() < 0.05, "ratio {ratio}");
    }
}
