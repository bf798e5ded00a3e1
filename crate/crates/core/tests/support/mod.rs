//! Synthetic graphs and cohorts shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rarekg::embedding::WalkGraph;
use rarekg::graph::{build_graph, BuildOptions, KnowledgeGraph};
use rarekg::ontology::{AnnotationRecord, AnnotationSource, OntologyTerm, TermId};
use rarekg::retrieval::PatientCase;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn hp(n: u32) -> TermId {
    TermId::new(n).expect("small id")
}

pub fn term(id: u32, name: &str, parents: &[u32]) -> OntologyTerm {
    OntologyTerm {
        id: hp(id),
        name: name.to_string(),
        parent_ids: parents.iter().map(|&p| hp(p)).collect(),
        synonyms: Vec::new(),
        is_obsolete: false,
        replaced_by: None,
    }
}

pub fn annotation(code: &str, name: &str, phenotype: u32) -> AnnotationRecord {
    AnnotationRecord {
        disease_code: code.to_string(),
        disease_name: name.to_string(),
        phenotype_id: hp(phenotype),
        source: AnnotationSource::for_code(code).expect("known prefix"),
        negated: false,
    }
}

pub fn graph_of(terms: &[OntologyTerm], annotations: &[AnnotationRecord]) -> KnowledgeGraph {
    build_graph(terms, annotations, &BuildOptions::default()).expect("valid toy graph").0
}

/// Random DAG over `np` terms (HP:1 is the root, every other term has one
/// to three parents with smaller ids) and random annotations of `nd`
/// diseases.
pub fn random_dag(rng: &mut ChaCha8Rng, np: usize, nd: usize) -> (Vec<OntologyTerm>, Vec<AnnotationRecord>) {
    let mut terms = vec![term(1, "root", &[])];
    for id in 2..=np as u32 {
        let k = rng.random_range(1..=3.min(id as usize - 1));
        let parents: BTreeSet<u32> = (0..k).map(|_| rng.random_range(1..id)).collect();
        terms.push(term(id, &format!("term {id}"), &parents.into_iter().collect::<Vec<_>>()));
    }
    let mut anns = Vec::new();
    for d in 0..nd {
        let code = format!("OMIM:{}", 100 + d);
        // some diseases stay unannotated on purpose
        let k = rng.random_range(0..=4);
        for _ in 0..k {
            anns.push(annotation(&code, &format!("disease {d}"), rng.random_range(1..=np as u32)));
        }
    }
    (terms, anns)
}

/// Two `size`-node cliques joined by a single bridge edge between node
/// `size - 1` and node `size`. Unit weights.
pub fn two_cliques(size: usize) -> WalkGraph {
    let n = 2 * size;
    let mut adj = vec![Vec::new(); n];
    for block in [0..size, size..n] {
        for i in block.clone() {
            for j in block.clone() {
                if i != j {
                    adj[i].push((j, 1.0));
                }
            }
        }
    }
    adj[size - 1].push((size, 1.0));
    adj[size].push((size - 1, 1.0));
    let ids = (0..n).map(|i| format!("n{i:02}")).collect();
    WalkGraph::from_adjacency("two-cliques", ids, adj).expect("valid adjacency")
}

/// Synthetic cohort: an ontology of `groups` branches with `leaves` leaf
/// terms each, `diseases` diseases annotated with `per_disease` leaves drawn
/// mostly from one branch, and `patients` patients per disease carrying
/// `sampled` of their disease's phenotypes plus one uniformly drawn noise
/// term.
pub struct Cohort {
    pub graph: KnowledgeGraph,
    pub cases: Vec<PatientCase>,
}

pub struct CohortSpec {
    pub groups: u32,
    pub leaves: u32,
    pub diseases: usize,
    pub per_disease: usize,
    pub patients: usize,
    pub sampled: usize,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            groups: 10,
            leaves: 12,
            diseases: 20,
            per_disease: 8,
            patients: 10,
            sampled: 5,
            seed: 7,
        }
    }
}

pub fn cohort(spec: &CohortSpec) -> Cohort {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut terms = vec![term(1, "root", &[])];
    let group_id = |g: u32| 10 + g;
    let leaf_id = |g: u32, l: u32| 1000 + g * 100 + l;
    for g in 0..spec.groups {
        terms.push(term(group_id(g), &format!("group {g}"), &[1]));
        for l in 0..spec.leaves {
            terms.push(term(leaf_id(g, l), &format!("group {g} sign {l}"), &[group_id(g)]));
        }
    }
    let all_leaves: Vec<u32> = (0..spec.groups)
        .flat_map(|g| (0..spec.leaves).map(move |l| leaf_id(g, l)))
        .collect();
    let all_terms: Vec<u32> = terms.iter().map(|t| t.id.number()).collect();

    let mut anns = Vec::new();
    let mut profiles = Vec::new();
    for d in 0..spec.diseases {
        let home = d as u32 % spec.groups;
        let mut chosen = BTreeSet::new();
        while chosen.len() < spec.per_disease {
            // three in four phenotypes come from the home branch
            let t = if rng.random_bool(0.75) {
                leaf_id(home, rng.random_range(0..spec.leaves))
            } else {
                *all_leaves.choose(&mut rng).expect("leaves")
            };
            chosen.insert(t);
        }
        let code = format!("OMIM:{}", 700_000 + d);
        for &t in &chosen {
            anns.push(annotation(&code, &format!("Synthetic disorder {d}"), t));
        }
        profiles.push((code, chosen.into_iter().collect::<Vec<u32>>()));
    }

    let mut cases = Vec::new();
    for (d, (code, profile)) in profiles.iter().enumerate() {
        for p in 0..spec.patients {
            let mut ids: Vec<u32> = profile.choose_multiple(&mut rng, spec.sampled).copied().collect();
            ids.push(*all_terms.choose(&mut rng).expect("terms"));
            let case = PatientCase::new(format!("S{d:02}-{p:02}"), ids.into_iter().map(hp), [code.clone()], "SYNTH")
                .expect("valid case");
            cases.push(case);
        }
    }
    Cohort {
        graph: graph_of(&terms, &anns),
        cases,
    }
}
