//! Measurement harness: a Zipf corpus generator, a frequent-lemma query
//! generator, and a runner comparing a plain positional index against full
//! index families at several maximum distances.
//!
//! Counters (bytes, postings, lists) come from the index read path and are
//! deterministic. Timings are wall-clock and are the only non-reproducible
//! fields of a [`BenchReport`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use crate::index::{Index, IndexBuilder, IndexMode, ReadStats};
use crate::lexicon::{LemmaClass, LemmaDictionary, Lexicon, LexiconConfig, LexiconError};
use crate::query::{search, QueryError};

/// Label attached to every report: the query set is generated, not the
/// original evaluation set.
pub const QUERY_SET_NOTE: &str =
    "synthetic query set: stop lemmas sampled in proportion to corpus frequency (approximation)";

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwxz";
const VOWELS: &[u8] = b"aeiou";

/// Pronounceable, unique surface form for a 0-based vocabulary rank.
pub fn synthetic_word(rank: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut n = rank;
    let mut word = String::new();
    loop {
        let syl = n % base;
        word.push(CONSONANTS[syl / VOWELS.len()] as char);
        word.push(VOWELS[syl % VOWELS.len()] as char);
        n /= base;
        if n == 0 {
            break;
        }
        n -= 1;
    }
    word
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub docs: usize,
    pub vocab: usize,
    pub zipf_exponent: f64,
    /// Mean document length in tokens; actual lengths are uniform in
    /// `[len/2, 3*len/2]`.
    pub doc_len: usize,
    /// Share of vocabulary ranks that get an inflected form mapping to two
    /// lemmas in the generated dictionary. Zero keeps lemmatization trivial.
    pub ambiguous_fraction: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            docs: 1000,
            vocab: 10_000,
            zipf_exponent: 1.0,
            doc_len: 200,
            ambiguous_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<String>,
    pub dictionary: LemmaDictionary,
}

/// Deterministic Zipf-distributed corpus. Zero documents or an empty
/// vocabulary give an empty corpus.
pub fn generate_corpus(spec: &CorpusSpec) -> SyntheticCorpus {
    let mut dictionary = LemmaDictionary::new();
    if spec.docs == 0 || spec.vocab == 0 || spec.doc_len == 0 {
        return SyntheticCorpus {
            documents: Vec::new(),
            dictionary,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let words: Vec<String> = (0..spec.vocab).map(synthetic_word).collect();

    // Inflected forms: "<word>s" lemmatizes to the word and to a second,
    // randomly chosen lemma.
    let mut inflected = vec![false; spec.vocab];
    if spec.ambiguous_fraction > 0.0 && spec.vocab > 1 {
        for (rank, flag) in inflected.iter_mut().enumerate() {
            if rng.random_bool(spec.ambiguous_fraction.min(1.0)) {
                *flag = true;
                let mut other = rng.random_range(0..spec.vocab - 1);
                if other >= rank {
                    other += 1;
                }
                dictionary.insert(&format!("{}s", words[rank]), [words[rank].as_str(), words[other].as_str()]);
            }
        }
    }

    let zipf = Zipf::new(spec.vocab as f64, spec.zipf_exponent).expect("positive vocabulary and exponent");
    let lo = (spec.doc_len / 2).max(1);
    let hi = (spec.doc_len * 3 / 2).max(lo);
    let mut documents = Vec::with_capacity(spec.docs);
    for _ in 0..spec.docs {
        let len = rng.random_range(lo..=hi);
        let mut doc = String::with_capacity(len * 4);
        for i in 0..len {
            let rank = zipf.sample(&mut rng) as usize - 1;
            if i > 0 {
                doc.push(' ');
            }
            doc.push_str(&words[rank]);
            if inflected[rank] && rng.random_bool(0.5) {
                doc.push('s');
            }
        }
        documents.push(doc);
    }
    SyntheticCorpus {
        documents,
        dictionary,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub seed: u64,
    pub count: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Each query word picks one of these classes uniformly, then a lemma of
    /// that class weighted by corpus count.
    pub classes: Vec<LemmaClass>,
}

impl QuerySpec {
    /// Stop-lemma-only queries of 3 to 5 words.
    pub fn stop_only(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            min_len: 3,
            max_len: 5,
            classes: vec![LemmaClass::Stop],
        }
    }
}

/// Generates queries as space-separated lemmas. Classes without lemmas are
/// ignored; if none remain, no queries are produced.
pub fn generate_queries(lexicon: &Lexicon, spec: &QuerySpec) -> Vec<String> {
    let mut pools: Vec<(Vec<&str>, Option<WeightedIndex<u64>>)> = Vec::new();
    for class in &spec.classes {
        let members: Vec<_> = lexicon
            .fl_list
            .entries()
            .iter()
            .filter(|e| e.class == *class)
            .collect();
        if members.is_empty() {
            continue;
        }
        let weights = WeightedIndex::new(members.iter().map(|e| e.count)).ok();
        pools.push((members.iter().map(|e| e.lemma.as_str()).collect(), weights));
    }
    if pools.is_empty() || spec.min_len == 0 || spec.max_len < spec.min_len {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|_| {
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    let (lemmas, weights) = pools.choose(&mut rng).expect("non-empty pools");
                    match weights {
                        Some(w) => lemmas[w.sample(&mut rng)],
                        None => lemmas.choose(&mut rng).expect("non-empty pool"),
                    }
                })
                .collect();
            words.join(" ")
        })
        .collect()
}

/// Builds a lexicon and index over `documents` in one pass each.
pub fn build_index(
    documents: &[String],
    dictionary: &LemmaDictionary,
    config: LexiconConfig,
    mode: IndexMode,
) -> Result<Index, LexiconError> {
    let lexicon = Lexicon::build(documents.iter().map(String::as_str), config, dictionary.clone())?;
    let mut builder = IndexBuilder::new(lexicon, mode);
    for doc in documents {
        builder.add_document(doc);
    }
    Ok(builder.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub mode: IndexMode,
    pub max_distance: u32,
}

impl Variant {
    /// Idx1 plus full indexes at distances 5, 7 and 9.
    pub fn standard_set() -> Vec<Variant> {
        let mut v = vec![Variant {
            name: "Idx1".into(),
            mode: IndexMode::Idx1,
            max_distance: 5,
        }];
        for (i, md) in [5, 7, 9].into_iter().enumerate() {
            v.push(Variant {
                name: format!("Idx{}", i + 2),
                mode: IndexMode::Full,
                max_distance: md,
            });
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub variants: Vec<Variant>,
    pub repetitions: usize,
    pub sw_count: u32,
    pub fu_count: u32,
    pub min_count: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let lex = LexiconConfig::default();
        Self {
            variants: Variant::standard_set(),
            repetitions: 3,
            sw_count: lex.sw_count,
            fu_count: lex.fu_count,
            min_count: lex.min_count,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub query_time: f64,
    pub bytes_read: f64,
    pub postings: f64,
    pub lists_opened: f64,
}

/// Improvement factors against Idx1 (`idx1 / this`) and growth against the
/// distance-5 full variant (`this / md5`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub time: Option<f64>,
    pub bytes: Option<f64>,
    pub postings: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    pub length: usize,
    pub queries: usize,
    pub averages: Averages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub executed: usize,
    pub skipped: usize,
    pub fragments: u64,
    pub index_postings: u64,
    pub index_bytes: u64,
    pub averages: Averages,
    pub by_length: Vec<LengthRow>,
    pub vs_idx1: Ratios,
    pub vs_md5: Ratios,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub note: String,
    pub documents: usize,
    pub queries: usize,
    /// Queries executed by every variant; only these enter the averages.
    pub common_queries: usize,
    pub repetitions: usize,
    pub variants: Vec<VariantReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("query {query:?} failed on {variant}: {source}")]
    Query {
        query: String,
        variant: String,
        source: QueryError,
    },
}

struct Sample {
    seconds: f64,
    stats: ReadStats,
    fragments: u64,
}

fn run_query(index: &Index, query: &str, repetitions: usize) -> Result<Option<Sample>, QueryError> {
    let mut seconds = 0.0;
    let mut last = None;
    for _ in 0..repetitions.max(1) {
        let t = Instant::now();
        let r = search(index, query);
        seconds += t.elapsed().as_secs_f64();
        match r {
            Ok(res) => last = Some(res),
            Err(QueryError::UnsupportedLength { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let res = last.expect("at least one repetition");
    Ok(Some(Sample {
        seconds: seconds / repetitions.max(1) as f64,
        stats: res.stats,
        fragments: res.fragments.len() as u64,
    }))
}

fn average(samples: &[&Sample]) -> Averages {
    if samples.is_empty() {
        return Averages::default();
    }
    let n = samples.len() as f64;
    let sum = |f: &dyn Fn(&Sample) -> f64| samples.iter().map(|s| f(s)).sum::<f64>() / n;
    Averages {
        query_time: sum(&|s| s.seconds),
        bytes_read: sum(&|s| s.stats.bytes_read as f64),
        postings: sum(&|s| s.stats.postings_read as f64),
        lists_opened: sum(&|s| s.stats.lists_opened as f64),
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Builds every variant over `documents` and runs `queries` against each,
/// single-threaded. Queries rejected as unsupported by a variant count as
/// skipped there and are left out of all averages.
pub fn run_bench(
    documents: &[String],
    dictionary: &LemmaDictionary,
    queries: &[String],
    config: &BenchConfig,
) -> Result<BenchReport, BenchError> {
    let queries: Vec<&str> = queries.iter().map(|q| q.trim()).filter(|q| !q.is_empty()).collect();
    let mut per_variant: Vec<(u64, u64, Vec<Option<Sample>>)> = Vec::new();
    for variant in &config.variants {
        let lex_config = LexiconConfig {
            sw_count: config.sw_count,
            fu_count: config.fu_count,
            max_distance: variant.max_distance,
            min_count: config.min_count,
        };
        let index = build_index(documents, dictionary, lex_config, variant.mode)?;
        let stats = index.stats();
        let families = [Some(stats.ordinary), stats.nsw, stats.two_key, stats.three_key];
        let postings = families.iter().flatten().map(|f| f.postings).sum();
        let bytes = families.iter().flatten().map(|f| f.dict_bytes + f.data_bytes).sum();
        let mut samples = Vec::with_capacity(queries.len());
        for q in &queries {
            let s = run_query(&index, q, config.repetitions).map_err(|source| BenchError::Query {
                query: q.to_string(),
                variant: variant.name.clone(),
                source,
            })?;
            samples.push(s);
        }
        per_variant.push((postings, bytes, samples));
    }

    let common: Vec<usize> = (0..queries.len())
        .filter(|&i| per_variant.iter().all(|(_, _, s)| s[i].is_some()))
        .collect();
    let lengths: Vec<usize> = queries.iter().map(|q| q.split_whitespace().count()).collect();

    let mut reports: Vec<VariantReport> = config
        .variants
        .iter()
        .zip(&per_variant)
        .map(|(variant, (index_postings, index_bytes, samples))| {
            let used: Vec<&Sample> = common.iter().map(|&i| samples[i].as_ref().unwrap()).collect();
            let mut by_len: BTreeMap<usize, Vec<&Sample>> = BTreeMap::new();
            for &i in &common {
                by_len.entry(lengths[i]).or_default().push(samples[i].as_ref().unwrap());
            }
            VariantReport {
                variant: variant.clone(),
                executed: samples.iter().filter(|s| s.is_some()).count(),
                skipped: samples.iter().filter(|s| s.is_none()).count(),
                fragments: used.iter().map(|s| s.fragments).sum(),
                index_postings: *index_postings,
                index_bytes: *index_bytes,
                averages: average(&used),
                by_length: by_len
                    .into_iter()
                    .map(|(length, s)| LengthRow {
                        length,
                        queries: s.len(),
                        averages: average(&s),
                    })
                    .collect(),
                vs_idx1: Ratios::default(),
                vs_md5: Ratios::default(),
            }
        })
        .collect();

    if !common.is_empty() {
        let find = |mode: IndexMode, md: Option<u32>| {
            reports
                .iter()
                .find(|r| r.variant.mode == mode && md.is_none_or(|m| r.variant.max_distance == m))
                .map(|r| r.averages)
        };
        let idx1 = find(IndexMode::Idx1, None);
        let md5 = find(IndexMode::Full, Some(5));
        for r in &mut reports {
            let a = r.averages;
            if let Some(b) = idx1 {
                r.vs_idx1 = Ratios {
                    time: ratio(b.query_time, a.query_time),
                    bytes: ratio(b.bytes_read, a.bytes_read),
                    postings: ratio(b.postings, a.postings),
                };
            }
            if let Some(b) = md5 {
                r.vs_md5 = Ratios {
                    time: ratio(a.query_time, b.query_time),
                    bytes: ratio(a.bytes_read, b.bytes_read),
                    postings: ratio(a.postings, b.postings),
                };
            }
        }
    }

    Ok(BenchReport {
        note: QUERY_SET_NOTE.to_string(),
        documents: documents.len(),
        queries: queries.len(),
        common_queries: common.len(),
        repetitions: config.repetitions,
        variants: reports,
    })
}

impl BenchReport {
    /// Copy with every timing field and time ratio cleared, for comparing
    /// runs.
    pub fn without_timings(&self) -> BenchReport {
        let mut r = self.clone();
        for v in &mut r.variants {
            v.averages.query_time = 0.0;
            v.vs_idx1.time = None;
            v.vs_md5.time = None;
            for row in &mut v.by_length {
                row.averages.query_time = 0.0;
            }
        }
        r
    }

    pub fn render_table(&self) -> String {
        let fmt_ratio = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.note);
        let _ = writeln!(
            s,
            "# documents={} queries={} common={} repetitions={}",
            self.documents, self.queries, self.common_queries, self.repetitions
        );
        let _ = writeln!(
            s,
            "{:<6} {:<5} {:>3} {:>6} {:>7} {:>12} {:>14} {:>14} {:>9} {:>9} {:>9}",
            "index", "mode", "md", "run", "skipped", "avg_time_ms", "avg_bytes", "avg_postings", "x_time", "x_post", "bytes/md5"
        );
        for v in &self.variants {
            let _ = writeln!(
                s,
                "{:<6} {:<5} {:>3} {:>6} {:>7} {:>12.4} {:>14.1} {:>14.1} {:>9} {:>9} {:>9}",
                v.variant.name,
                v.variant.mode,
                v.variant.max_distance,
                v.executed,
                v.skipped,
                v.averages.query_time * 1e3,
                v.averages.bytes_read,
                v.averages.postings,
                fmt_ratio(v.vs_idx1.time),
                fmt_ratio(v.vs_idx1.postings),
                fmt_ratio(v.vs_md5.bytes),
            );
        }
        let _ = writeln!(s, "\nby query length (avg_time_ms / avg_postings):");
        for v in &self.variants {
            let cells: Vec<String> = v
                .by_length
                .iter()
                .map(|r| format!("len{}: {:.4} / {:.1}", r.length, r.averages.query_time * 1e3, r.averages.postings))
                .collect();
            let _ = writeln!(s, "{:<6} {}", v.variant.name, cells.join("  "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_are_unique() {
        let words: std::collections::HashSet<String> = (0..20_000).map(synthetic_word).collect();
        assert_eq!(words.len(), 20_000);
        assert_eq!(synthetic_word(0), "ba");
    }

    #[test]
    fn empty_specs() {
        let c = generate_corpus(&CorpusSpec {
            docs: 0,
            ..CorpusSpec::default()
        });
        assert!(c.documents.is_empty());
    }

    #[test]
    fn ambiguous_forms_have_two_lemmas() {
        let c = generate_corpus(&CorpusSpec {
            docs: 5,
            vocab: 50,
            doc_len: 20,
            ambiguous_fraction: 0.5,
            ..CorpusSpec::default()
        });
        assert!(!c.dictionary.is_empty());
        let form = c.documents.iter().flat_map(|d| d.split(' ')).find(|w| w.ends_with('s'));
        if let Some(w) = form {
            assert_eq!(c.dictionary.lemmatize(w).len(), 2);
        }
    }

    #[test]
    fn empty_query_file() {
        let c = generate_corpus(&CorpusSpec {
            docs: 20,
            vocab: 100,
            doc_len: 30,
            ..CorpusSpec::default()
        });
        let cfg = BenchConfig {
            sw_count: 5,
            fu_count: 10,
            repetitions: 1,
            ..BenchConfig::default()
        };
        let r = run_bench(&c.documents, &c.dictionary, &[], &cfg).unwrap();
        assert_eq!(r.queries, 0);
        assert!(r.variants.iter().all(|v| v.vs_idx1 == Ratios::default() && v.vs_md5 == Ratios::default()));
    }
}
