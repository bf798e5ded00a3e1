use std::collections::HashMap;

use super::{GraphError, KnowledgeGraph};
use crate::ontology::TermId;

/// Information content of every phenotype node.
///
/// `n(t)` counts the distinct diseases annotated to `t` or any of its
/// descendants; `IC(t) = -ln(n(t) / N)` with `N` the number of annotated
/// diseases. Terms with `n(t) = 0` get `ln(N)`, the largest finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct IcTable {
    terms: Vec<TermId>,
    counts: Vec<usize>,
    values: Vec<f64>,
    index: HashMap<TermId, usize>,
    total_diseases: usize,
}

impl IcTable {
    pub fn ic(&self, term: TermId) -> Option<f64> {
        self.index.get(&term).map(|&i| self.values[i])
    }

    /// `n(t)`.
    pub fn annotated_count(&self, term: TermId) -> Option<usize> {
        self.index.get(&term).map(|&i| self.counts[i])
    }

    /// IC of the phenotype at graph position `i`.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn total_diseases(&self) -> usize {
        self.total_diseases
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(term, n(t), IC(t))` in graph order.
    pub fn iter(&self) -> impl Iterator<Item = (TermId, usize, f64)> + '_ {
        self.terms
            .iter()
            .zip(&self.counts)
            .zip(&self.values)
            .map(|((t, n), v)| (*t, *n, *v))
    }

    /// Same table with every value multiplied by `factor`. Handy for
    /// checking scale invariance downstream.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Builds a table from explicit values, e.g. for tests or imported IC.
    pub fn from_values(values: impl IntoIterator<Item = (TermId, f64)>, total_diseases: usize) -> Self {
        let (terms, values): (Vec<_>, Vec<_>) = values.into_iter().unzip();
        let index = terms.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        Self {
            counts: vec![0; terms.len()],
            terms,
            values,
            index,
            total_diseases,
        }
    }

    /// `term <TAB> n(t) <TAB> IC(t)` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#N\t{}\n", self.total_diseases);
        for (t, n, v) in self.iter() {
            out.push_str(&format!("{t}\t{n}\t{v}\n"));
        }
        out
    }
}

struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(bits: usize) -> Self {
        Self {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

pub fn compute_ic(graph: &KnowledgeGraph) -> Result<IcTable, GraphError> {
    let annotated = (0..graph.disease_count())
        .filter(|&d| !graph.phenotypes_of(d).is_empty())
        .count();
    if annotated == 0 {
        return Err(GraphError::NoAnnotatedDiseases);
    }
    let n_total = annotated as f64;
    let np = graph.phenotype_count();

    let mut sets: Vec<Option<BitSet>> = (0..np).map(|_| None).collect();
    let mut remaining_parents: Vec<usize> = (0..np).map(|i| graph.parents_of(i).len()).collect();
    let mut counts = vec![0usize; np];
    for &node in graph.children_first() {
        let mut set = BitSet::new(graph.disease_count());
        for &d in graph.diseases_of(node) {
            set.insert(d);
        }
        for &child in graph.children_of(node) {
            set.union_with(sets[child].as_ref().expect("children are processed first"));
            remaining_parents[child] -= 1;
            if remaining_parents[child] == 0 {
                sets[child] = None;
            }
        }
        counts[node] = set.count();
        if remaining_parents[node] > 0 {
            sets[node] = Some(set);
        }
    }

    // ln N - ln n rather than -ln(n/N): exact at n = 1 and n = N, and
    // monotone in n after rounding
    let ln_total = n_total.ln();
    let values = counts
        .iter()
        .map(|&n| if n == 0 { ln_total } else { ln_total - (n as f64).ln() })
        .collect();
    let terms: Vec<TermId> = graph.phenotypes().iter().map(|p| p.id).collect();
    let index = terms.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    Ok(IcTable {
        terms,
        counts,
        values,
        index,
        total_diseases: annotated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_support::*;
    use crate::graph::{build_graph, descendant_closure, BuildOptions};
    use crate::ontology::{AnnotationRecord, OntologyTerm};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    /// n(t) by enumerating every (closure member, disease) annotation pair.
    fn brute_counts(graph: &KnowledgeGraph) -> Vec<usize> {
        graph
            .phenotypes()
            .iter()
            .map(|p| {
                let closure = descendant_closure(graph, p.id).unwrap();
                let diseases: BTreeSet<usize> = graph
                    .pd_edges()
                    .iter()
                    .filter(|e| closure.contains(&graph.phenotypes()[e.phenotype].id))
                    .map(|e| e.disease)
                    .collect();
                diseases.len()
            })
            .collect()
    }

    #[test]
    fn single_annotation_of_four() {
        // root with four leaves, each leaf annotated to its own disease
        let terms = vec![
            term(1, "root", &[]),
            term(2, "a", &[1]),
            term(3, "b", &[1]),
            term(4, "c", &[1]),
            term(5, "d", &[1]),
            term(6, "unused", &[1]),
        ];
        let anns = [
            ann("OMIM:1", "D1", 2),
            ann("OMIM:2", "D2", 3),
            ann("OMIM:3", "D3", 4),
            ann("OMIM:4", "D4", 5),
        ];
        let (g, _) = build_graph(&terms, &anns, &BuildOptions::default()).unwrap();
        let ic = compute_ic(&g).unwrap();
        assert_eq!(ic.total_diseases(), 4);
        assert_eq!(ic.annotated_count(hp(2)), Some(1));
        assert!((ic.ic(hp(2)).unwrap() - 1.386_294_361_119_890_6).abs() < 1e-12);
        assert_eq!(ic.ic(hp(1)), Some(0.0));
        assert_eq!(ic.annotated_count(hp(6)), Some(0));
        assert!((ic.ic(hp(6)).unwrap() - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_annotated_diseases_is_error() {
        let (g, _) = build_graph(&[term(1, "r", &[])], &[], &BuildOptions::default()).unwrap();
        assert!(matches!(compute_ic(&g), Err(GraphError::NoAnnotatedDiseases)));
    }

    fn arb_instance() -> impl Strategy<Value = (Vec<OntologyTerm>, Vec<AnnotationRecord>)> {
        (2usize..30, 1usize..10).prop_flat_map(|(nt, nd)| {
            let parents = prop::collection::vec(prop::collection::btree_set(0usize..1000, 0..3), nt);
            let anns = prop::collection::vec((0..nd, 0..nt), 1..40);
            (Just(nt), parents, anns).prop_map(|(nt, parents, anns)| {
                let terms = (0..nt)
                    .map(|i| {
                        // parents always have a smaller index, so the result is a DAG
                        let ps: Vec<u32> = if i == 0 {
                            vec![]
                        } else {
                            parents[i].iter().map(|p| (p % i) as u32 + 1).collect()
                        };
                        term(i as u32 + 1, "t", &ps)
                    })
                    .collect();
                let anns = anns
                    .into_iter()
                    .map(|(d, t)| ann(&format!("OMIM:{d}"), &format!("D{d}"), t as u32 + 1))
                    .collect();
                (terms, anns)
            })
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_is_anti_monotone((terms, anns) in arb_instance()) {
            let (g, _) = build_graph(&terms, &anns, &BuildOptions::default()).unwrap();
            let ic = compute_ic(&g).unwrap();
            let brute = brute_counts(&g);
            for (i, (_, n, v)) in ic.iter().enumerate() {
                prop_assert_eq!(n, brute[i]);
                prop_assert!(v >= 0.0 && v <= (ic.total_diseases() as f64).ln() + 1e-12);
            }
            for &(child, parent) in g.pp_edges() {
                prop_assert!(ic.at(parent) <= ic.at(child));
            }
        }
    }
}
