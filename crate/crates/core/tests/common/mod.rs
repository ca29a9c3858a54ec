#![allow(dead_code)]

use std::collections::BTreeSet;

use proxsearch::bench::{generate_corpus, CorpusSpec, SyntheticCorpus};
use proxsearch::index::codec::{decode_postings, encode_postings};
use proxsearch::index::{Posting, ReadStats, ThreeKey, TwoKey};
use proxsearch::lexicon::LemmatizedDoc;
use proxsearch::merge::PostingIterator;
use proxsearch::oracle::oracle_search;
use proxsearch::query::{evaluate, expand_subqueries};
use proxsearch::QueryError;
use proxsearch::{FlList, FlNumber, Index, IndexBuilder, IndexMode, LemmaClass, LemmaDictionary, Lexicon, LexiconConfig};

/// Lexicon with the FL-numbers of the worked examples.
pub fn sample_lexicon(config: LexiconConfig) -> Lexicon {
    let dict = LemmaDictionary::read_from(
        "are\tare,be\ntinged\tting,tinge\nmine\tmine,my\nwas\tbe\nthem\tthey\n".as_bytes(),
    )
    .unwrap();
    let r = FlNumber::Rank;
    let fl = FlList::from_assigned(
        [
            ("all", r(60)),
            ("be", r(21)),
            ("fresh", r(2667)),
            ("around", r(2177)),
            ("they", r(134)),
            ("familiar", FlNumber::Rare),
            ("and", r(28)),
            ("yet", r(632)),
            ("new", r(376)),
            ("ting", FlNumber::Rare),
            ("tinge", FlNumber::Rare),
            ("with", r(40)),
            ("the", r(10)),
            ("beauty", FlNumber::Rare),
            ("who", r(293)),
            ("are", r(268)),
            ("you", r(47)),
            ("my", r(264)),
            ("mine", r(2482)),
        ],
        config,
    )
    .unwrap();
    Lexicon::new(dict, fl)
}

pub struct Fixture {
    pub corpus: SyntheticCorpus,
    pub lexicon: Lexicon,
    pub docs: Vec<LemmatizedDoc>,
    pub full: Index,
    pub idx1: Index,
}

pub fn fixture(spec: &CorpusSpec, config: LexiconConfig) -> Fixture {
    fixture_from(generate_corpus(spec), config)
}

pub fn fixture_from(corpus: SyntheticCorpus, config: LexiconConfig) -> Fixture {
    let lexicon = Lexicon::build(corpus.documents.iter().map(String::as_str), config, corpus.dictionary.clone()).unwrap();
    let docs: Vec<LemmatizedDoc> = corpus.documents.iter().map(|d| lexicon.lemmatize_document(d)).collect();
    let build = |mode| {
        let mut b = IndexBuilder::new(lexicon.clone(), mode);
        for d in &docs {
            b.add_lemmatized(d);
        }
        b.finish()
    };
    let full = build(IndexMode::Full);
    let idx1 = build(IndexMode::Idx1);
    Fixture {
        corpus,
        lexicon,
        docs,
        full,
        idx1,
    }
}

/// Outcome of comparing engine and oracle on one query.
#[derive(Debug, Default)]
pub struct Comparison {
    pub subqueries: usize,
    pub engine_fragments: usize,
    pub oracle_hits: usize,
    /// Sub-queries a full index rejects as unsupported.
    pub unsupported: usize,
    pub mismatches: Vec<String>,
}

/// Checks, per sub-query and for both index modes: equal document sets,
/// every fragment start is an oracle window start, and every fragment
/// contains an oracle anchor.
pub fn compare_with_oracle(f: &Fixture, query: &str) -> Comparison {
    let mut out = Comparison::default();
    let subs = match expand_subqueries(query, &f.lexicon) {
        Ok(s) => s,
        Err(e) => {
            out.mismatches.push(format!("{query:?}: expansion failed: {e}"));
            return out;
        }
    };
    for sub in &subs {
        out.subqueries += 1;
        let hits = match oracle_search(sub, &f.docs, &f.lexicon) {
            Ok(h) => h,
            Err(e) => {
                out.mismatches.push(format!("{query:?}: oracle failed: {e}"));
                continue;
            }
        };
        out.oracle_hits += hits.len();
        let oracle_docs: BTreeSet<u32> = hits.iter().map(|h| h.doc_id).collect();
        let oracle_starts: BTreeSet<(u32, u32)> = hits.iter().map(|h| (h.doc_id, h.anchor)).collect();
        for (name, index) in [("full", &f.full), ("idx1", &f.idx1)] {
            let frags = match evaluate(sub, index, &mut ReadStats::default()) {
                Ok(fr) => fr,
                Err(QueryError::UnsupportedLength { .. }) if name == "full" => {
                    out.unsupported += 1;
                    continue;
                }
                Err(e) => {
                    out.mismatches.push(format!("{query:?} [{name}]: engine failed: {e}"));
                    continue;
                }
            };
            out.engine_fragments += frags.len();
            let docs: BTreeSet<u32> = frags.iter().map(|fr| fr.doc_id).collect();
            if docs != oracle_docs {
                let missing: Vec<_> = oracle_docs.difference(&docs).take(5).collect();
                let extra: Vec<_> = docs.difference(&oracle_docs).take(5).collect();
                out.mismatches
                    .push(format!("{query:?} [{name}]: doc sets differ, missing {missing:?} extra {extra:?}"));
            }
            for fr in &frags {
                if !oracle_starts.contains(&(fr.doc_id, fr.start)) {
                    out.mismatches.push(format!("{query:?} [{name}]: fragment {fr:?} starts off any oracle window"));
                }
                let contained = oracle_starts
                    .range((fr.doc_id, fr.start)..=(fr.doc_id, fr.end))
                    .next()
                    .is_some();
                if !contained {
                    out.mismatches.push(format!("{query:?} [{name}]: fragment {fr:?} contains no oracle anchor"));
                }
            }
        }
    }
    out
}

/// Encoded posting list of `(doc, pos)` pairs.
pub fn encode(postings: &[(u32, u32)]) -> (Vec<u8>, u64) {
    let p: Vec<Posting> = postings.iter().map(|&(d, q)| Posting::new(d, q)).collect();
    (encode_postings(&p), p.len() as u64)
}

pub fn iterators(lists: &[(Vec<u8>, u64)]) -> Vec<PostingIterator<'_>> {
    lists
        .iter()
        .enumerate()
        .map(|(i, (b, c))| PostingIterator::from_encoded(i, b, *c))
        .collect()
}

/// Common documents found by repeatedly advancing the list with the smallest
/// current document, scanning all cursors each step.
pub fn naive_common_docs(lists: &[Vec<(u32, u32)>]) -> Vec<u32> {
    let mut cur = vec![0usize; lists.len()];
    let mut out = Vec::new();
    if lists.is_empty() {
        return out;
    }
    loop {
        if lists.iter().zip(&cur).any(|(l, &c)| c >= l.len()) {
            return out;
        }
        let docs: Vec<u32> = lists.iter().zip(&cur).map(|(l, &c)| l[c].0).collect();
        let lo = *docs.iter().min().unwrap();
        let hi = *docs.iter().max().unwrap();
        if lo == hi {
            out.push(lo);
            for (l, c) in lists.iter().zip(cur.iter_mut()) {
                while *c < l.len() && l[*c].0 == lo {
                    *c += 1;
                }
            }
        } else {
            let k = docs.iter().position(|&d| d == lo).unwrap();
            cur[k] += 1;
        }
    }
}

/// `(FL-number, position)` of every occurrence whose lemma is in `class`.
fn ranked(doc: &LemmatizedDoc, fl: &FlList, class: LemmaClass) -> Vec<(u32, u32)> {
    doc.occurrences
        .iter()
        .filter_map(|o| {
            let e = fl.entry(o.lemma as usize);
            (e.class == class).then(|| (e.fl_number.rank().unwrap(), o.pos))
        })
        .collect()
}

fn within(a: u32, b: u32, md: u32) -> bool {
    a != b && a.abs_diff(b) <= md
}

/// Every `(key, doc, pos)` triple co-occurrence, enumerated from scratch:
/// stop lemma `f` at `pos`, stop lemmas `s` and `t` at two distinct other
/// positions within `md`, and `f` no larger than `s` or `t`.
pub fn brute_three_key(docs: &[LemmatizedDoc], fl: &FlList, md: u32) -> BTreeSet<(ThreeKey, u32, u32)> {
    let mut out = BTreeSet::new();
    for (d, doc) in docs.iter().enumerate() {
        let stops = ranked(doc, fl, LemmaClass::Stop);
        for &(f, p) in &stops {
            for &(s, q1) in &stops {
                for &(t, q2) in &stops {
                    if within(q1, p, md) && within(q2, p, md) && q1 != q2 && f <= s && f <= t {
                        let (s, t) = (s.min(t), s.max(t));
                        out.insert((ThreeKey { f, s, t }, d as u32, p));
                    }
                }
            }
        }
    }
    out
}

pub fn brute_two_key(docs: &[LemmatizedDoc], fl: &FlList, md: u32) -> BTreeSet<(TwoKey, u32, u32)> {
    let mut out = BTreeSet::new();
    for (d, doc) in docs.iter().enumerate() {
        let fu = ranked(doc, fl, LemmaClass::FrequentlyUsed);
        for &(w, p) in &fu {
            for &(v, q) in &fu {
                if within(p, q, md) && w <= v {
                    out.insert((TwoKey { w, v }, d as u32, p));
                }
            }
        }
    }
    out
}

/// Every three-key posting stored in `index`.
pub fn stored_three_key(index: &Index) -> BTreeSet<(ThreeKey, u32, u32)> {
    let mut out = BTreeSet::new();
    for key in index.three_keys() {
        let h = index.three_key_list(&key, &mut ReadStats::default()).unwrap();
        for p in decode_postings(h.postings, h.count).unwrap() {
            out.insert((key, p.doc_id, p.pos));
        }
    }
    out
}

/// Stored two-key postings, probing every frequently-used pair.
pub fn stored_two_key(index: &Index) -> BTreeSet<(TwoKey, u32, u32)> {
    let fl = &index.lexicon().fl_list;
    let ranks: Vec<u32> = fl
        .entries()
        .iter()
        .filter(|e| e.class == LemmaClass::FrequentlyUsed)
        .map(|e| e.fl_number.rank().unwrap())
        .collect();
    let mut out = BTreeSet::new();
    for &w in &ranks {
        for &v in ranks.iter().filter(|&&v| v >= w) {
            let key = TwoKey { w, v };
            if let Some(h) = index.two_key_list(&key, &mut ReadStats::default()) {
                for p in decode_postings(h.postings, h.count).unwrap() {
                    out.insert((key, p.doc_id, p.pos));
                }
            }
        }
    }
    out
}
