//! Library-level run over the committed fixture.

mod support;

use std::collections::BTreeSet;

use rarekg::embedding::{load_embeddings, save_embeddings, EmbeddingError, EmbeddingFormat, TrainConfig, WalkConfig};
use rarekg::eval::{load_public_cases, run_benchmark, BenchmarkContext, BenchmarkOptions, CaseFormat, MatchRule, Method};
use rarekg::graph::{compute_ic, read_graph, write_graph};
use rarekg::pipeline::{ingest, train_embeddings, Sources};
use rarekg::retrieval::{build_index, embed_patient, retrieve_topm};

use support::data_dir;

fn sources() -> Sources {
    let d = data_dir();
    Sources {
        obo: d.join("hp_fixture.obo"),
        hpoa: vec![d.join("phenotype_fixture.hpoa")],
        ccrd: vec![d.join("ccrd_fixture.tsv")],
        cross_references: None,
    }
}

fn small_training() -> (WalkConfig, TrainConfig) {
    let walk = WalkConfig {
        walk_length: 12,
        walks_per_node: 4,
        seed: 11,
    };
    let train = TrainConfig {
        embedding_dim: 16,
        context_size: 4,
        epochs: 2,
        seed: 11,
        ..TrainConfig::default()
    };
    (walk, train)
}

#[test]
fn fixture_graph_survives_a_snapshot_round_trip() {
    let ing = ingest(&sources()).unwrap();
    let g = &ing.graph;
    assert_eq!(g.phenotype_count(), 500);
    assert!(g.version_tag().starts_with("hp/releases/fixture-2023-06-06|hpoa:fixture-2023-06-06|ccrd:"));
    let back = read_graph(&write_graph(g)).unwrap();
    assert_eq!(&back, g);
    assert_eq!(write_graph(&back), write_graph(g));
}

#[test]
fn embeddings_are_tied_to_their_graph_version() {
    let g = ingest(&sources()).unwrap().graph;
    let ic = compute_ic(&g).unwrap();
    let (walk, train) = small_training();
    let m = train_embeddings(&g, &ic, &walk, &train).unwrap().matrix;
    let tmp = tempfile::tempdir().unwrap();
    for format in [EmbeddingFormat::Text, EmbeddingFormat::Binary] {
        let path = tmp.path().join("e");
        save_embeddings(&m, &path, format).unwrap();
        let back = load_embeddings(&path, Some(&g.version_tag())).unwrap();
        assert_eq!(back.ids(), m.ids());
        let err = load_embeddings(&path, Some("some-other-graph")).unwrap_err();
        assert!(matches!(err, EmbeddingError::GraphVersion { .. }), "{err}");
    }
}

#[test]
fn knn_benchmark_resumes_from_its_journal() {
    let g = ingest(&sources()).unwrap().graph;
    let ic = compute_ic(&g).unwrap();
    let (walk, train) = small_training();
    let m = train_embeddings(&g, &ic, &walk, &train).unwrap().matrix;
    let loaded = load_public_cases(&data_dir().join("cases_fixture.tsv"), CaseFormat::Tsv).unwrap();
    assert_eq!(loaded.cases.len(), 72);
    assert_eq!(loaded.dropped_short, 3);
    let (index, report) = build_index(&loaded.cases, &ic, &m).unwrap();
    assert!(report.failures.is_empty());

    let q = embed_patient(&loaded.cases[0], &ic, &m).unwrap();
    let near = retrieve_topm(&index, &q, 3, &BTreeSet::new()).unwrap();
    assert!(near.iter().all(|n| n.case_id != loaded.cases[0].case_id));

    let rule = MatchRule::from_graph(&g);
    let ctx = BenchmarkContext {
        graph: &g,
        ic: &ic,
        matrix: Some(&m),
        index: Some(&index),
        pool: &loaded.cases,
        rule: &rule,
    };
    let tmp = tempfile::tempdir().unwrap();
    let opts = BenchmarkOptions {
        run_dir: Some(tmp.path().to_path_buf()),
        workers: 3,
        ..BenchmarkOptions::default()
    };
    let method = Method::Knn { k_pool: 10 };
    let first = run_benchmark(&loaded.cases, &method, &ctx, &opts).unwrap();
    assert_eq!((first.predicted, first.resumed), (72, 0));
    let second = run_benchmark(&loaded.cases, &method, &ctx, &opts).unwrap();
    assert_eq!((second.predicted, second.resumed), (0, 72));
    assert_eq!(first.report, second.report);
    assert!(first.report.hits[2] > first.report.hits[0]);
}
