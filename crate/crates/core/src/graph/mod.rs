//! The integrated phenotype–disease knowledge graph.
//!
//! Phenotype nodes are live ontology terms connected child→parent by IS_A
//! edges (a DAG). Disease nodes are consolidated entities, each merging one
//! or more source codes; they connect to the phenotypes they are annotated
//! with. The graph is immutable once built.

mod ic;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::ontology::{AnnotationRecord, AnnotationSource, OntologyTerm, TermId};

pub use ic::{compute_ic, IcTable};
pub use snapshot::{load_graph, save_graph, write_graph, read_graph, SNAPSHOT_REVISION};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("IS_A cycle through {0}")]
    Cycle(TermId),

    #[error("{child} has is_a parent {parent}, which is not a live term")]
    UnknownParent { child: TermId, parent: TermId },

    #[error("annotations cite unknown phenotype terms: {}", join_ids(.0))]
    UnknownAnnotationTerms(Vec<TermId>),

    #[error("unknown phenotype term {0}")]
    UnknownTerm(TermId),

    #[error("graph has no annotated diseases; information content is undefined")]
    NoAnnotatedDiseases,

    #[error("invalid graph: {0}")]
    Invalid(String),

    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },

    #[error("snapshot format revision {found} is not supported (expected {expected})")]
    Revision { found: String, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_ids(ids: &[TermId]) -> String {
    ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhenotypeNode {
    pub id: TermId,
    pub name: String,
    pub synonyms: Vec<String>,
}

/// A consolidated disease: one or more source codes believed to denote the
/// same condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiseaseEntity {
    /// The lexicographically smallest member code.
    pub entity_id: String,
    pub names: Vec<String>,
    pub source_codes: BTreeSet<String>,
}

impl DiseaseEntity {
    pub fn primary_name(&self) -> &str {
        self.names.first().map(String::as_str).unwrap_or(&self.entity_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdEdge {
    pub phenotype: usize,
    pub disease: usize,
    pub sources: BTreeSet<AnnotationSource>,
}

/// Node handle into a [`KnowledgeGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Phenotype(usize),
    Disease(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    phenotypes: Vec<PhenotypeNode>,
    diseases: Vec<DiseaseEntity>,
    pp_edges: Vec<(usize, usize)>,
    pd_edges: Vec<PdEdge>,
    version_header: Vec<String>,

    phenotype_index: HashMap<TermId, usize>,
    disease_index: HashMap<String, usize>,
    code_index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    term_diseases: Vec<Vec<usize>>,
    disease_terms: Vec<Vec<usize>>,
    /// Phenotype indices ordered so every child precedes its parents.
    children_first: Vec<usize>,
}

/// Operator inputs to [`build_graph`] beyond the parsed records.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Pairs of disease codes known to denote the same disease.
    pub cross_references: Vec<(String, String)>,
    /// Source version labels, recorded verbatim in the graph header.
    pub version_labels: Vec<String>,
}

/// What [`build_graph`] dropped or rewrote on the way in.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub negated_excluded: usize,
    pub obsolete_substituted: usize,
    pub obsolete_dropped: usize,
    /// Codes that had annotation rows but ended with no phenotype edge.
    pub isolated_codes: Vec<String>,
}

impl BuildReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "negated_excluded={}\nobsolete_substituted={}\nobsolete_dropped={}\nisolated_diseases={}\n",
            self.negated_excluded,
            self.obsolete_substituted,
            self.obsolete_dropped,
            self.isolated_codes.len()
        );
        for code in &self.isolated_codes {
            out.push_str(&format!("isolated={code}\n"));
        }
        out
    }
}

pub(crate) fn normalize_disease_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Follows `replaced_by` links from an obsolete term to a live one.
fn resolve_replacement(
    start: TermId,
    live: &HashMap<TermId, usize>,
    obsolete: &HashMap<TermId, Option<TermId>>,
) -> Option<TermId> {
    let mut current = start;
    for _ in 0..=obsolete.len() {
        match obsolete.get(&current) {
            Some(Some(next)) => {
                if live.contains_key(next) {
                    return Some(*next);
                }
                current = *next;
            }
            _ => return None,
        }
    }
    None
}

/// Consolidates parsed ontology terms and annotation records into a graph.
pub fn build_graph(
    terms: &[OntologyTerm],
    annotations: &[AnnotationRecord],
    options: &BuildOptions,
) -> Result<(KnowledgeGraph, BuildReport), GraphError> {
    let mut live: Vec<&OntologyTerm> = terms.iter().filter(|t| !t.is_obsolete).collect();
    live.sort_by_key(|t| t.id);
    let live_index: HashMap<TermId, usize> =
        live.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    let obsolete: HashMap<TermId, Option<TermId>> = terms
        .iter()
        .filter(|t| t.is_obsolete)
        .map(|t| (t.id, t.replaced_by))
        .collect();

    let mut pp_edges = Vec::new();
    for (child, term) in live.iter().enumerate() {
        for parent in &term.parent_ids {
            let &p = live_index.get(parent).ok_or(GraphError::UnknownParent {
                child: term.id,
                parent: *parent,
            })?;
            pp_edges.push((child, p));
        }
    }

    let mut report = BuildReport::default();
    let mut unknown = BTreeSet::new();
    // (code, name, term index, source)
    let mut resolved: Vec<(&str, &str, usize, AnnotationSource)> = Vec::new();
    let mut all_codes = BTreeSet::new();
    for a in annotations {
        all_codes.insert(a.disease_code.as_str());
        if a.negated {
            report.negated_excluded += 1;
            continue;
        }
        let term = if let Some(&i) = live_index.get(&a.phenotype_id) {
            i
        } else if obsolete.contains_key(&a.phenotype_id) {
            match resolve_replacement(a.phenotype_id, &live_index, &obsolete) {
                Some(r) => {
                    report.obsolete_substituted += 1;
                    live_index[&r]
                }
                None => {
                    report.obsolete_dropped += 1;
                    continue;
                }
            }
        } else {
            unknown.insert(a.phenotype_id);
            continue;
        };
        resolved.push((&a.disease_code, &a.disease_name, term, a.source));
    }
    if !unknown.is_empty() {
        return Err(GraphError::UnknownAnnotationTerms(unknown.into_iter().collect()));
    }

    // Consolidate codes that survived into entities.
    let mut code_names: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for &(code, name, _, _) in &resolved {
        let names = code_names.entry(code).or_default();
        if !names.contains(&name) {
            names.push(name);
        }
    }
    report.isolated_codes = all_codes
        .iter()
        .filter(|c| !code_names.contains_key(*c))
        .map(|c| c.to_string())
        .collect();
    let codes: Vec<&str> = code_names.keys().copied().collect();
    let code_pos: HashMap<&str, usize> = codes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut uf = UnionFind::new(codes.len());
    for (a, b) in &options.cross_references {
        if let (Some(&x), Some(&y)) = (code_pos.get(a.as_str()), code_pos.get(b.as_str())) {
            uf.union(x, y);
        }
    }
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (i, code) in codes.iter().enumerate() {
        for name in &code_names[code] {
            let key = normalize_disease_name(name);
            if key.is_empty() {
                continue;
            }
            match by_name.get(&key) {
                Some(&j) => uf.union(i, j),
                None => {
                    by_name.insert(key, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..codes.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut diseases: Vec<DiseaseEntity> = groups
        .into_values()
        .map(|members| {
            let source_codes: BTreeSet<String> =
                members.iter().map(|&i| codes[i].to_string()).collect();
            let mut names: Vec<String> = Vec::new();
            for code in &source_codes {
                for name in &code_names[code.as_str()] {
                    let key = normalize_disease_name(name);
                    if !names.iter().any(|n| normalize_disease_name(n) == key) {
                        names.push(name.to_string());
                    }
                }
            }
            DiseaseEntity {
                entity_id: source_codes.iter().next().expect("non-empty group").clone(),
                names,
                source_codes,
            }
        })
        .collect();
    diseases.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
    let code_entity: HashMap<&str, usize> = diseases
        .iter()
        .enumerate()
        .flat_map(|(i, d)| d.source_codes.iter().map(move |c| (c.as_str(), i)))
        .collect();

    let mut merged: BTreeMap<(usize, usize), BTreeSet<AnnotationSource>> = BTreeMap::new();
    for &(code, _, term, source) in &resolved {
        merged
            .entry((term, code_entity[code]))
            .or_default()
            .insert(source);
    }
    let pd_edges = merged
        .into_iter()
        .map(|((phenotype, disease), sources)| PdEdge {
            phenotype,
            disease,
            sources,
        })
        .collect();

    let phenotypes = live
        .iter()
        .map(|t| PhenotypeNode {
            id: t.id,
            name: t.name.clone(),
            synonyms: t.synonyms.clone(),
        })
        .collect();
    let graph = KnowledgeGraph::from_parts(
        phenotypes,
        diseases,
        pp_edges,
        pd_edges,
        options.version_labels.clone(),
    )?;
    Ok((graph, report))
}

impl KnowledgeGraph {
    /// Assembles a graph from already-consolidated parts, validating every
    /// structural invariant and deriving the adjacency indexes.
    pub fn from_parts(
        phenotypes: Vec<PhenotypeNode>,
        diseases: Vec<DiseaseEntity>,
        mut pp_edges: Vec<(usize, usize)>,
        mut pd_edges: Vec<PdEdge>,
        version_header: Vec<String>,
    ) -> Result<Self, GraphError> {
        let np = phenotypes.len();
        let nd = diseases.len();
        let mut phenotype_index = HashMap::with_capacity(np);
        for (i, p) in phenotypes.iter().enumerate() {
            if phenotype_index.insert(p.id, i).is_some() {
                return Err(GraphError::Invalid(format!("duplicate phenotype {}", p.id)));
            }
        }
        let mut disease_index = HashMap::with_capacity(nd);
        let mut code_index = HashMap::new();
        for (i, d) in diseases.iter().enumerate() {
            if d.source_codes.is_empty() {
                return Err(GraphError::Invalid(format!("{} has no source codes", d.entity_id)));
            }
            if disease_index.insert(d.entity_id.clone(), i).is_some() {
                return Err(GraphError::Invalid(format!("duplicate disease {}", d.entity_id)));
            }
            for code in &d.source_codes {
                if code_index.insert(code.clone(), i).is_some() {
                    return Err(GraphError::Invalid(format!("{code} belongs to two entities")));
                }
            }
        }

        pp_edges.sort_unstable();
        pp_edges.dedup();
        let mut parents = vec![Vec::new(); np];
        let mut children = vec![Vec::new(); np];
        for &(c, p) in &pp_edges {
            if c >= np || p >= np || c == p {
                return Err(GraphError::Invalid(format!("bad P-P edge ({c}, {p})")));
            }
            parents[c].push(p);
            children[p].push(c);
        }

        pd_edges.sort_by_key(|e| (e.phenotype, e.disease));
        let mut term_diseases = vec![Vec::new(); np];
        let mut disease_terms = vec![Vec::new(); nd];
        for pair in pd_edges.windows(2) {
            if (pair[0].phenotype, pair[0].disease) == (pair[1].phenotype, pair[1].disease) {
                return Err(GraphError::Invalid("duplicate P-D edge".into()));
            }
        }
        for e in &pd_edges {
            if e.phenotype >= np || e.disease >= nd || e.sources.is_empty() {
                return Err(GraphError::Invalid(format!(
                    "bad P-D edge ({}, {})",
                    e.phenotype, e.disease
                )));
            }
            term_diseases[e.phenotype].push(e.disease);
            disease_terms[e.disease].push(e.phenotype);
        }

        // Kahn's algorithm from the leaves upward.
        let mut pending: Vec<usize> = children.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..np).filter(|&i| pending[i] == 0).collect();
        let mut children_first = Vec::with_capacity(np);
        while let Some(node) = queue.pop_front() {
            children_first.push(node);
            for &p in &parents[node] {
                pending[p] -= 1;
                if pending[p] == 0 {
                    queue.push_back(p);
                }
            }
        }
        if children_first.len() != np {
            let stuck = (0..np).find(|&i| pending[i] > 0).expect("some node in a cycle");
            return Err(GraphError::Cycle(phenotypes[stuck].id));
        }

        Ok(Self {
            phenotypes,
            diseases,
            pp_edges,
            pd_edges,
            version_header,
            phenotype_index,
            disease_index,
            code_index,
            parents,
            children,
            term_diseases,
            disease_terms,
            children_first,
        })
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new())
            .expect("empty graph is valid")
    }

    pub fn phenotypes(&self) -> &[PhenotypeNode] {
        &self.phenotypes
    }

    pub fn diseases(&self) -> &[DiseaseEntity] {
        &self.diseases
    }

    pub fn pp_edges(&self) -> &[(usize, usize)] {
        &self.pp_edges
    }

    pub fn pd_edges(&self) -> &[PdEdge] {
        &self.pd_edges
    }

    pub fn version_header(&self) -> &[String] {
        &self.version_header
    }

    pub fn phenotype_count(&self) -> usize {
        self.phenotypes.len()
    }

    pub fn disease_count(&self) -> usize {
        self.diseases.len()
    }

    pub fn node_count(&self) -> usize {
        self.phenotypes.len() + self.diseases.len()
    }

    pub fn phenotype_position(&self, id: TermId) -> Option<usize> {
        self.phenotype_index.get(&id).copied()
    }

    pub fn phenotype(&self, id: TermId) -> Option<&PhenotypeNode> {
        self.phenotype_position(id).map(|i| &self.phenotypes[i])
    }

    pub fn disease_position(&self, entity_id: &str) -> Option<usize> {
        self.disease_index.get(entity_id).copied()
    }

    /// Entity that a source code (e.g. `ORPHA:558`) was merged into.
    pub fn disease_by_code(&self, code: &str) -> Option<&DiseaseEntity> {
        self.code_index.get(code).map(|&i| &self.diseases[i])
    }

    pub fn parents_of(&self, phenotype: usize) -> &[usize] {
        &self.parents[phenotype]
    }

    pub fn children_of(&self, phenotype: usize) -> &[usize] {
        &self.children[phenotype]
    }

    pub fn diseases_of(&self, phenotype: usize) -> &[usize] {
        &self.term_diseases[phenotype]
    }

    pub fn phenotypes_of(&self, disease: usize) -> &[usize] {
        &self.disease_terms[disease]
    }

    pub(crate) fn children_first(&self) -> &[usize] {
        &self.children_first
    }

    /// Stable textual id of a node: the term id or the disease entity id.
    pub fn node_id(&self, node: NodeRef) -> String {
        match node {
            NodeRef::Phenotype(i) => self.phenotypes[i].id.to_string(),
            NodeRef::Disease(i) => self.diseases[i].entity_id.clone(),
        }
    }

    pub fn resolve_node(&self, id: &str) -> Option<NodeRef> {
        if let Ok(term) = id.parse::<TermId>() {
            return self.phenotype_position(term).map(NodeRef::Phenotype);
        }
        self.disease_position(id).map(NodeRef::Disease)
    }

    /// All nodes, phenotypes first, each group in index order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeRef> + '_ {
        (0..self.phenotypes.len())
            .map(NodeRef::Phenotype)
            .chain((0..self.diseases.len()).map(NodeRef::Disease))
    }

    /// Content fingerprint plus source labels; embeds into downstream headers.
    pub fn version_tag(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(write_graph(self).as_bytes());
        let labels = if self.version_header.is_empty() {
            "unlabelled".to_string()
        } else {
            self.version_header.join("|")
        };
        format!("{labels}@{}", &hex::encode(digest)[..12])
    }
}

/// `{term} ∪ {all specialisations of term}`.
pub fn descendant_closure(
    graph: &KnowledgeGraph,
    term: TermId,
) -> Result<BTreeSet<TermId>, GraphError> {
    let start = graph
        .phenotype_position(term)
        .ok_or(GraphError::UnknownTerm(term))?;
    let mut seen = vec![false; graph.phenotype_count()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut out = BTreeSet::new();
    while let Some(node) = stack.pop() {
        out.insert(graph.phenotypes[node].id);
        for &child in graph.children_of(node) {
            if !seen[child] {
                seen[child] = true;
                stack.push(child);
            }
        }
    }
    Ok(out)
}

/// Node and edge counts in the shape of the published graph statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatReport {
    pub phenotype_nodes: usize,
    pub disease_entities: usize,
    pub pp_edges: usize,
    pub pd_edges: usize,
    pub pd_edges_by_source: BTreeMap<AnnotationSource, usize>,
}

impl StatReport {
    /// `key=value` lines in a fixed order.
    pub fn to_kv_text(&self) -> String {
        let mut out = format!(
            "phenotype_nodes={}\ndisease_entities={}\npp_edges={}\npd_edges={}\n",
            self.phenotype_nodes, self.disease_entities, self.pp_edges, self.pd_edges
        );
        for source in AnnotationSource::ALL {
            let n = self.pd_edges_by_source.get(&source).copied().unwrap_or(0);
            out.push_str(&format!("pd_edges.{}={n}\n", source.label()));
        }
        out
    }
}

pub fn graph_stats(graph: &KnowledgeGraph) -> StatReport {
    let mut by_source = BTreeMap::new();
    for e in &graph.pd_edges {
        for s in &e.sources {
            *by_source.entry(*s).or_insert(0) += 1;
        }
    }
    StatReport {
        phenotype_nodes: graph.phenotypes.len(),
        disease_entities: graph.diseases.len(),
        pp_edges: graph.pp_edges.len(),
        pd_edges: graph.pd_edges.len(),
        pd_edges_by_source: by_source,
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn chain() -> Vec<OntologyTerm> {
        vec![term(1, "root", &[]), term(2, "B", &[1]), term(3, "A", &[2])]
    }

    #[test]
    fn toy_chain_counts() {
        let (g, _) = build_graph(&chain(), &[ann("OMIM:1", "D", 3)], &BuildOptions::default()).unwrap();
        let s = graph_stats(&g);
        assert_eq!(
            (s.phenotype_nodes, s.disease_entities, s.pp_edges, s.pd_edges),
            (3, 1, 2, 1)
        );
    }

    #[test]
    fn empty_graph_stats_are_zero() {
        let s = graph_stats(&KnowledgeGraph::empty());
        assert_eq!(s, StatReport::default());
        assert!(s.to_kv_text().contains("pd_edges.CCRD=0\n"));
    }

    #[test]
    fn same_pair_from_two_sources_is_one_edge() {
        let anns = [ann("OMIM:1", "Fabry disease", 3), ann("ORPHA:324", "fabry  Disease", 3)];
        let (g, _) = build_graph(&chain(), &anns, &BuildOptions::default()).unwrap();
        assert_eq!(g.disease_count(), 1);
        assert_eq!(g.pd_edges().len(), 1);
        assert_eq!(
            g.pd_edges()[0].sources,
            BTreeSet::from([AnnotationSource::HpoaOmim, AnnotationSource::HpoaOrpha])
        );
        let s = graph_stats(&g);
        assert_eq!(s.pd_edges_by_source[&AnnotationSource::HpoaOmim], 1);
        assert_eq!(s.pd_edges_by_source[&AnnotationSource::HpoaOrpha], 1);
        assert_eq!(g.disease_by_code("ORPHA:324").unwrap().entity_id, "OMIM:1");
    }

    #[test]
    fn cross_references_merge_differently_named_codes() {
        let anns = [ann("OMIM:1", "Alpha", 3), ann("ORPHA:9", "Beta", 2)];
        let opts = BuildOptions {
            cross_references: vec![("ORPHA:9".into(), "OMIM:1".into())],
            ..Default::default()
        };
        let (g, _) = build_graph(&chain(), &anns, &opts).unwrap();
        assert_eq!(g.disease_count(), 1);
        assert_eq!(g.diseases()[0].names, vec!["Alpha", "Beta"]);
        let (g, _) = build_graph(&chain(), &anns, &BuildOptions::default()).unwrap();
        assert_eq!(g.disease_count(), 2);
    }

    #[test]
    fn negated_annotations_never_become_edges() {
        let mut neg = ann("OMIM:2", "E", 2);
        neg.negated = true;
        let (g, report) =
            build_graph(&chain(), &[ann("OMIM:1", "D", 3), neg], &BuildOptions::default()).unwrap();
        assert_eq!(g.pd_edges().len(), 1);
        assert_eq!(report.negated_excluded, 1);
        assert_eq!(report.isolated_codes, vec!["OMIM:2"]);
    }

    #[test]
    fn obsolete_terms_are_replaced_or_dropped() {
        let mut terms = chain();
        let mut old = term(10, "old", &[]);
        old.is_obsolete = true;
        old.replaced_by = Some(hp(3));
        let mut gone = term(11, "gone", &[]);
        gone.is_obsolete = true;
        terms.extend([old, gone]);
        let anns = [ann("OMIM:1", "D", 10), ann("OMIM:1", "D", 11)];
        let (g, report) = build_graph(&terms, &anns, &BuildOptions::default()).unwrap();
        assert_eq!(g.phenotype_count(), 3);
        assert_eq!(report.obsolete_substituted, 1);
        assert_eq!(report.obsolete_dropped, 1);
        assert_eq!(g.phenotypes()[g.pd_edges()[0].phenotype].id, hp(3));
    }

    #[test]
    fn unknown_annotation_terms_are_listed() {
        let err = build_graph(
            &chain(),
            &[ann("OMIM:1", "D", 77), ann("OMIM:1", "D", 78)],
            &BuildOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "annotations cite unknown phenotype terms: HP:0000077, HP:0000078");
    }

    #[test]
    fn cycle_is_rejected() {
        let terms = vec![term(1, "a", &[3]), term(2, "b", &[1]), term(3, "c", &[2])];
        assert!(matches!(
            build_graph(&terms, &[], &BuildOptions::default()),
            Err(GraphError::Cycle(_))
        ));
    }

    #[test]
    fn unknown_parent_is_rejected() {
        let terms = vec![term(2, "b", &[1])];
        assert!(matches!(
            build_graph(&terms, &[], &BuildOptions::default()),
            Err(GraphError::UnknownParent { .. })
        ));
    }

    fn diamond() -> KnowledgeGraph {
        let terms = vec![
            term(1, "A", &[]),
            term(2, "B", &[1]),
            term(3, "C", &[1]),
            term(4, "D", &[2, 3]),
        ];
        build_graph(&terms, &[], &BuildOptions::default()).unwrap().0
    }

    /// Independent reachability: repeatedly add any term whose parent is
    /// already in the set until nothing changes.
    fn brute_closure(terms: &[(u32, Vec<u32>)], root: u32) -> BTreeSet<TermId> {
        let mut set = BTreeSet::from([root]);
        loop {
            let before = set.len();
            for (id, parents) in terms {
                if parents.iter().any(|p| set.contains(p)) {
                    set.insert(*id);
                }
            }
            if set.len() == before {
                return set.into_iter().map(hp).collect();
            }
        }
    }

    #[test]
    fn diamond_closure_counts_shared_descendant_once() {
        let g = diamond();
        let spec = [(1, vec![]), (2, vec![1]), (3, vec![1]), (4, vec![2, 3])];
        let expected = brute_closure(&spec, 1);
        assert_eq!(expected.len(), 4);
        assert_eq!(descendant_closure(&g, hp(1)).unwrap(), expected);
        assert_eq!(descendant_closure(&g, hp(2)).unwrap(), brute_closure(&spec, 2));
    }

    #[test]
    fn leaf_closure_is_singleton() {
        assert_eq!(descendant_closure(&diamond(), hp(4)).unwrap(), BTreeSet::from([hp(4)]));
    }

    #[test]
    fn closure_of_unknown_term_fails() {
        assert!(matches!(
            descendant_closure(&diamond(), hp(99)),
            Err(GraphError::UnknownTerm(_))
        ));
    }

    #[test]
    fn node_ids_resolve_both_kinds() {
        let (g, _) = build_graph(&chain(), &[ann("OMIM:1", "D", 3)], &BuildOptions::default()).unwrap();
        assert_eq!(g.resolve_node("HP:0000002"), Some(NodeRef::Phenotype(1)));
        assert_eq!(g.resolve_node("OMIM:1"), Some(NodeRef::Disease(0)));
        assert_eq!(g.resolve_node("OMIM:2"), None);
        assert_eq!(g.node_id(NodeRef::Disease(0)), "OMIM:1");
    }
}
