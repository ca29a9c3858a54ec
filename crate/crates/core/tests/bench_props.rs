use std::collections::{BTreeSet, HashMap};

use proxsearch::bench::{build_index, generate_corpus, generate_queries, run_bench, BenchConfig, CorpusSpec, QuerySpec};
use proxsearch::{search, IndexMode, LemmaClass, LexiconConfig};

#[test]
fn corpus_is_deterministic() {
    let spec = CorpusSpec {
        docs: 50,
        ambiguous_fraction: 0.2,
        ..CorpusSpec::default()
    };
    let a = generate_corpus(&spec);
    let b = generate_corpus(&spec);
    assert_eq!(a.documents, b.documents);
    let (mut da, mut db) = (Vec::new(), Vec::new());
    a.dictionary.write_to(&mut da).unwrap();
    b.dictionary.write_to(&mut db).unwrap();
    assert_eq!(da, db);
    let c = generate_corpus(&CorpusSpec { seed: 2, ..spec });
    assert_ne!(a.documents, c.documents);
}

#[test]
fn rank_frequencies_follow_zipf() {
    let c = generate_corpus(&CorpusSpec {
        seed: 5,
        docs: 2000,
        vocab: 10_000,
        zipf_exponent: 1.0,
        doc_len: 200,
        ambiguous_fraction: 0.0,
    });
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for w in c.documents.iter().flat_map(|d| d.split(' ')) {
        *counts.entry(w).or_default() += 1;
    }
    let mut sorted: Vec<u64> = counts.into_values().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let ratio = sorted[0] as f64 / sorted[9] as f64;
    assert!((8.0..=12.0).contains(&ratio), "rank1/rank10 = {ratio}");
}

#[test]
fn stop_queries_use_stop_lemmas_only() {
    let c = generate_corpus(&CorpusSpec {
        docs: 100,
        vocab: 500,
        doc_len: 50,
        ..CorpusSpec::default()
    });
    let cfg = LexiconConfig {
        sw_count: 20,
        fu_count: 20,
        max_distance: 5,
        min_count: 2,
    };
    let idx = build_index(&c.documents, &c.dictionary, cfg, IndexMode::Idx1).unwrap();
    let lex = idx.lexicon();
    let qs = generate_queries(lex, &QuerySpec::stop_only(9, 50));
    assert_eq!(qs, generate_queries(lex, &QuerySpec::stop_only(9, 50)));
    assert_eq!(qs.len(), 50);
    for q in &qs {
        let words: Vec<&str> = q.split(' ').collect();
        assert!((3..=5).contains(&words.len()));
        for w in words {
            assert_eq!(lex.fl_list.classify(w).class, LemmaClass::Stop, "{w}");
        }
        // Plain-index postings are exactly the occurrences of the distinct lemmas.
        let distinct: BTreeSet<&str> = q.split(' ').collect();
        let expected: u64 = distinct.iter().map(|w| lex.fl_list.classify(w).count).sum();
        assert_eq!(search(&idx, q).unwrap().stats.postings_read, expected, "{q}");
    }
}

#[test]
fn bench_counters_reproduce_and_grow_with_distance() {
    let c = generate_corpus(&CorpusSpec {
        seed: 4,
        docs: 300,
        vocab: 3000,
        doc_len: 100,
        ..CorpusSpec::default()
    });
    let cfg = BenchConfig {
        repetitions: 1,
        sw_count: 40,
        fu_count: 80,
        ..BenchConfig::default()
    };
    let lexicon = build_index(&c.documents, &c.dictionary, LexiconConfig { sw_count: 40, fu_count: 80, ..LexiconConfig::default() }, IndexMode::Idx1)
        .unwrap()
        .lexicon()
        .clone();
    let queries = generate_queries(&lexicon, &QuerySpec::stop_only(1, 40));
    let a = run_bench(&c.documents, &c.dictionary, &queries, &cfg).unwrap();
    let b = run_bench(&c.documents, &c.dictionary, &queries, &cfg).unwrap();
    assert_eq!(a.without_timings(), b.without_timings());
    assert_eq!(a.common_queries, 40);
    let bytes: Vec<f64> = a.variants[1..].iter().map(|v| v.averages.bytes_read).collect();
    assert!(bytes[0] <= bytes[1] && bytes[1] <= bytes[2], "{bytes:?}");
    assert!(a.variants[1].averages.postings < a.variants[0].averages.postings);
    let json = serde_json::to_string(&a).unwrap();
    assert!(json.contains("\"vs_idx1\""));
    assert!(a.render_table().contains("Idx4"));
}
