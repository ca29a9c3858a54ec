//! Query pipeline: lemmatize, expand into sub-queries, plan each sub-query
//! against the index families, evaluate, and combine.
//!
//! # Match semantics
//!
//! A sub-query is planned into *units*, each producing anchor positions in a
//! document:
//!
//! * a lemma unit anchors at every occurrence of its lemma;
//! * a `(w, v)` unit anchors at occurrences of `w` having `v` at another
//!   position within `max_distance`;
//! * an `(f, s, t)` unit anchors at occurrences of `f` having `s` and `t` at
//!   two further distinct positions within `max_distance`.
//!
//! Stop lemmas of a mixed (QT5) sub-query become *stop filters* instead of
//! units. A document matches when some window `[L, L + max_distance]`, with
//! `L` an anchor position, contains an anchor of every unit and every stop
//! filter lemma occurs within `max_distance` of one of those anchors (at a
//! different position). Both index modes evaluate exactly this predicate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::codec::DecodeError;
use crate::index::{Index, IndexMode, ListHandle, ReadStats, ThreeKey, TwoKey};
use crate::lexicon::{tokenize, FlNumber, LemmaClass, Lexicon};
use crate::merge::{match_in_document, Anchor, MergeSession, PostingIterator};

/// Longest accepted query, in words.
pub const MAX_QUERY_WORDS: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query is empty")]
    Empty,
    #[error("query has {words} words; at most {limit} are supported, divide it into parts")]
    TooLong { words: usize, limit: usize },
    #[error("stop-lemma-only query of {len} words is not supported by a full index (needs at least 3)")]
    UnsupportedLength { len: usize },
    #[error("corrupt posting data: {0}")]
    Corrupt(#[from] DecodeError),
}

/// A search hit: text window `[start, end]` of `doc_id` with its relevance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub doc_id: u32,
    pub start: u32,
    pub end: u32,
    pub relevance: f64,
}

impl Fragment {
    /// Relevance is the inverse window length.
    pub fn new(doc_id: u32, start: u32, end: u32) -> Self {
        debug_assert!(start <= end);
        Self {
            doc_id,
            start,
            end,
            relevance: 1.0 / (end - start + 1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTerm {
    /// Word position in the query.
    pub query_pos: usize,
    pub lemma: String,
    pub fl_number: FlNumber,
    pub class: LemmaClass,
}

/// One lemma choice per query word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubQuery {
    pub terms: Vec<QueryTerm>,
}

impl SubQuery {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lemmas(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.lemma.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QueryType {
    /// Stop lemmas only.
    QT1,
    /// Frequently used lemmas only.
    QT2,
    /// Ordinary lemmas only.
    QT3,
    /// Frequently used and ordinary lemmas, no stop lemmas.
    QT4,
    /// Stop lemmas mixed with other lemmas.
    QT5,
}

/// Expands a query into the cartesian product of its words' lemma sets, the
/// first word's alternatives varying slowest.
pub fn expand_subqueries(query: &str, lexicon: &Lexicon) -> Result<Vec<SubQuery>, QueryError> {
    let words = tokenize(query);
    if words.is_empty() {
        return Err(QueryError::Empty);
    }
    if words.len() > MAX_QUERY_WORDS {
        return Err(QueryError::TooLong {
            words: words.len(),
            limit: MAX_QUERY_WORDS,
        });
    }
    let alternatives: Vec<Vec<QueryTerm>> = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            lexicon
                .lemmatize(&w.text)
                .into_iter()
                .map(|lemma| {
                    let entry = lexicon.fl_list.classify(&lemma);
                    QueryTerm {
                        query_pos: i,
                        lemma,
                        fl_number: entry.fl_number,
                        class: entry.class,
                    }
                })
                .collect()
        })
        .collect();

    let mut out = vec![SubQuery { terms: Vec::new() }];
    for alts in &alternatives {
        out = out
            .into_iter()
            .flat_map(|sq| {
                alts.iter().map(move |t| {
                    let mut terms = sq.terms.clone();
                    terms.push(t.clone());
                    SubQuery { terms }
                })
            })
            .collect();
    }
    Ok(out)
}

pub fn classify_query(sub: &SubQuery) -> QueryType {
    let has = |c: LemmaClass| sub.terms.iter().any(|t| t.class == c);
    let (stop, frequent, ordinary) = (
        has(LemmaClass::Stop),
        has(LemmaClass::FrequentlyUsed),
        has(LemmaClass::Ordinary),
    );
    match (stop, frequent, ordinary) {
        (true, false, false) => QueryType::QT1,
        (true, _, _) => QueryType::QT5,
        (false, true, false) => QueryType::QT2,
        (false, true, true) => QueryType::QT4,
        // Ordinary only, or an empty sub-query.
        (false, false, _) => QueryType::QT3,
    }
}

/// A selected three-component key; `roles[c]` lists the query positions
/// served by component `c` (0 = anchor `f`, 1 = `s`, 2 = `t`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeySelection {
    pub key: ThreeKey,
    pub roles: [Vec<usize>; 3],
}

/// Terms ordered most frequent first, query order breaking ties.
fn by_frequency<'a>(terms: impl IntoIterator<Item = &'a QueryTerm>) -> Vec<&'a QueryTerm> {
    let mut sorted: Vec<&QueryTerm> = terms.into_iter().collect();
    sorted.sort_by_key(|t| (t.fl_number, t.query_pos));
    sorted
}

fn rank_of(t: &QueryTerm) -> u32 {
    t.fl_number.rank().expect("stop and frequently used lemmas are ranked")
}

/// Three-component keys covering a stop-lemma-only sub-query.
///
/// The most frequent term anchors every key; the remaining terms, in
/// frequency order, are taken two at a time, and an odd last term is paired
/// with its predecessor. For `[who, are, you, who]` this yields
/// `(you, are, who)` and `(you, who, who)`. Keys that come out identical are
/// merged, joining their roles.
pub fn select_three_keys(sub: &SubQuery) -> Result<Vec<KeySelection>, QueryError> {
    if sub.len() < 3 {
        return Err(QueryError::UnsupportedLength { len: sub.len() });
    }
    let sorted = by_frequency(&sub.terms);
    let anchor = sorted[0];
    let rest = &sorted[1..];
    let mut out: Vec<KeySelection> = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        let (a, b) = if i + 1 < rest.len() {
            (rest[i], rest[i + 1])
        } else {
            (rest[i - 1], rest[i])
        };
        let key = ThreeKey {
            f: rank_of(anchor),
            s: rank_of(a),
            t: rank_of(b),
        };
        debug_assert_eq!(key, ThreeKey::canonical(key.f, key.s, key.t));
        let roles = [vec![anchor.query_pos], vec![a.query_pos], vec![b.query_pos]];
        match out.iter_mut().find(|k| k.key == key) {
            Some(existing) => {
                for (have, add) in existing.roles.iter_mut().zip(roles) {
                    for p in add {
                        if !have.contains(&p) {
                            have.push(p);
                        }
                    }
                    have.sort_unstable();
                }
            }
            None => out.push(KeySelection { key, roles }),
        }
        i += 2;
    }
    Ok(out)
}

/// Where a unit's anchors come from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum UnitSource {
    Lemma(String),
    TwoKey(TwoKey),
    ThreeKey(ThreeKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryUnit {
    pub source: UnitSource,
    /// Query positions served by each key component, anchor first. Lemma
    /// units have a single component.
    pub roles: Vec<Vec<usize>>,
}

impl QueryUnit {
    /// Every query position this unit accounts for, ascending.
    pub fn query_positions(&self) -> Vec<usize> {
        let mut all = self.roles.concat();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// A stop lemma that must occur near the matched anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopFilter {
    pub lemma: String,
    pub fl_number: u32,
    pub query_positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    pub query_type: QueryType,
    pub units: Vec<QueryUnit>,
    pub stop_filters: Vec<StopFilter>,
}

impl QueryPlan {
    /// Bit set with one bit per stop filter.
    pub fn required_stops(&self) -> u16 {
        ((1u32 << self.stop_filters.len()) - 1) as u16
    }
}

/// Distinct lemmas in frequency order with the query positions of each.
fn distinct_lemmas<'a>(terms: impl IntoIterator<Item = &'a QueryTerm>) -> Vec<(&'a QueryTerm, Vec<usize>)> {
    let mut out: Vec<(&QueryTerm, Vec<usize>)> = Vec::new();
    for t in by_frequency(terms) {
        match out.iter_mut().find(|(u, _)| u.lemma == t.lemma) {
            Some((_, positions)) => positions.push(t.query_pos),
            None => out.push((t, vec![t.query_pos])),
        }
    }
    out
}

fn lemma_units(lemmas: &[(&QueryTerm, Vec<usize>)]) -> Vec<QueryUnit> {
    lemmas
        .iter()
        .map(|(t, positions)| QueryUnit {
            source: UnitSource::Lemma(t.lemma.clone()),
            roles: vec![positions.clone()],
        })
        .collect()
}

/// Two-component keys over distinct frequently used lemmas: the most frequent
/// one is paired with each of the others.
fn two_key_units(lemmas: &[(&QueryTerm, Vec<usize>)]) -> Vec<QueryUnit> {
    let (anchor, anchor_positions) = &lemmas[0];
    lemmas[1..]
        .iter()
        .map(|(t, positions)| QueryUnit {
            source: UnitSource::TwoKey(TwoKey::canonical(rank_of(anchor), rank_of(t))),
            roles: vec![anchor_positions.clone(), positions.clone()],
        })
        .collect()
}

/// Chooses units and stop filters for `sub`.
///
/// * QT1: three-component keys (lemma units below three words);
/// * QT2: two-component keys, or a lemma unit for a single distinct lemma;
/// * QT3: lemma units;
/// * QT4: two-component keys over the frequently used lemmas when there are
///   at least two of them, plus lemma units for the rest;
/// * QT5: lemma units for the non-stop lemmas, stop filters for the others.
pub fn plan_subquery(sub: &SubQuery) -> Result<QueryPlan, QueryError> {
    if sub.is_empty() {
        return Err(QueryError::Empty);
    }
    let query_type = classify_query(sub);
    let mut stop_filters = Vec::new();
    let units = match query_type {
        QueryType::QT1 if sub.len() >= 3 => select_three_keys(sub)?
            .into_iter()
            .map(|k| QueryUnit {
                source: UnitSource::ThreeKey(k.key),
                roles: k.roles.to_vec(),
            })
            .collect(),
        QueryType::QT1 | QueryType::QT3 => lemma_units(&distinct_lemmas(&sub.terms)),
        QueryType::QT2 => {
            let lemmas = distinct_lemmas(&sub.terms);
            if lemmas.len() == 1 {
                lemma_units(&lemmas)
            } else {
                two_key_units(&lemmas)
            }
        }
        QueryType::QT4 => {
            let frequent = distinct_lemmas(sub.terms.iter().filter(|t| t.class == LemmaClass::FrequentlyUsed));
            let ordinary = distinct_lemmas(sub.terms.iter().filter(|t| t.class == LemmaClass::Ordinary));
            let mut units = if frequent.len() >= 2 {
                two_key_units(&frequent)
            } else {
                lemma_units(&frequent)
            };
            units.extend(lemma_units(&ordinary));
            units
        }
        QueryType::QT5 => {
            for (t, query_positions) in distinct_lemmas(sub.terms.iter().filter(|t| t.class == LemmaClass::Stop)) {
                stop_filters.push(StopFilter {
                    lemma: t.lemma.clone(),
                    fl_number: rank_of(t),
                    query_positions,
                });
            }
            lemma_units(&distinct_lemmas(sub.terms.iter().filter(|t| t.class != LemmaClass::Stop)))
        }
    };
    Ok(QueryPlan {
        query_type,
        units,
        stop_filters,
    })
}

/// Evaluates one sub-query; fragments come back sorted by `(doc_id, start)`.
/// A key or lemma missing from the index yields no fragments.
pub fn evaluate(sub: &SubQuery, index: &Index, stats: &mut ReadStats) -> Result<Vec<Fragment>, QueryError> {
    let plan = plan_subquery(sub)?;
    match index.mode() {
        IndexMode::Full => evaluate_full(&plan, sub, index, stats),
        IndexMode::Idx1 => evaluate_plain(&plan, index, stats),
    }
}

fn evaluate_full(
    plan: &QueryPlan,
    sub: &SubQuery,
    index: &Index,
    stats: &mut ReadStats,
) -> Result<Vec<Fragment>, QueryError> {
    let with_nsw = !plan.stop_filters.is_empty();
    let fl_list = &index.lexicon().fl_list;
    let mut handles: Vec<ListHandle<'_>> = Vec::with_capacity(plan.units.len());
    for unit in &plan.units {
        let handle = match &unit.source {
            UnitSource::Lemma(lemma) => {
                if fl_list.classify(lemma).class == LemmaClass::Stop {
                    return Err(QueryError::UnsupportedLength { len: sub.len() });
                }
                index.ordinary_list(lemma, with_nsw, stats)
            }
            UnitSource::TwoKey(key) => index.two_key_list(key, stats),
            UnitSource::ThreeKey(key) => index.three_key_list(key, stats),
        };
        match handle {
            Some(h) => handles.push(h),
            None => return Ok(Vec::new()),
        }
    }

    let max_distance = index.config().max_distance;
    let required = plan.required_stops();
    let iters = handles
        .into_iter()
        .enumerate()
        .map(|(i, h)| PostingIterator::new(i, h))
        .collect();
    let mut session = MergeSession::new(iters);
    let mut fragments = Vec::new();
    while let Some(doc) = session.next_document() {
        let drained = session.drain_document(doc);
        let units: Vec<Vec<Anchor>> = drained
            .into_iter()
            .map(|postings| {
                postings
                    .into_iter()
                    .map(|p| {
                        let mut stops = 0u16;
                        if let Some(nsw) = &p.nsw {
                            for (bit, filter) in plan.stop_filters.iter().enumerate() {
                                if nsw.contains_lemma(filter.fl_number) {
                                    stops |= 1 << bit;
                                }
                            }
                        }
                        Anchor { pos: p.pos, stops }
                    })
                    .collect()
            })
            .collect();
        let last = index.doc_len(doc).saturating_sub(1);
        fragments.extend(match_in_document(doc, &units, required, max_distance, last));
    }
    if let Some(e) = session.error() {
        return Err(QueryError::Corrupt(e.clone()));
    }
    Ok(fragments)
}

/// Positions within `max_distance` of `pos`, excluding `pos` itself.
fn near(positions: &[u32], pos: u32, max_distance: u32) -> impl Iterator<Item = u32> + '_ {
    let lo = pos.saturating_sub(max_distance);
    let hi = pos.saturating_add(max_distance);
    let start = positions.partition_point(|&p| p < lo);
    positions[start..].iter().copied().take_while(move |&p| p <= hi).filter(move |&p| p != pos)
}

/// Evaluation over a plain positional index: every lemma the plan mentions is
/// read from the ordinary family and unit anchors are derived per document.
fn evaluate_plain(plan: &QueryPlan, index: &Index, stats: &mut ReadStats) -> Result<Vec<Fragment>, QueryError> {
    let fl_list = &index.lexicon().fl_list;
    let lemma_of_rank = |fl: u32| fl_list.by_rank(fl).map(|e| e.lemma.clone());

    let mut lemmas: Vec<String> = Vec::new();
    let mut add = |l: Option<String>| -> bool {
        match l {
            Some(l) => {
                if !lemmas.contains(&l) {
                    lemmas.push(l);
                }
                true
            }
            None => false,
        }
    };
    for unit in &plan.units {
        let ok = match &unit.source {
            UnitSource::Lemma(l) => add(Some(l.clone())),
            UnitSource::TwoKey(k) => add(lemma_of_rank(k.w)) & add(lemma_of_rank(k.v)),
            UnitSource::ThreeKey(k) => add(lemma_of_rank(k.f)) & add(lemma_of_rank(k.s)) & add(lemma_of_rank(k.t)),
        };
        if !ok {
            return Ok(Vec::new());
        }
    }
    for f in &plan.stop_filters {
        add(Some(f.lemma.clone()));
    }
    let slot: HashMap<&str, usize> = lemmas.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let slot_of_rank = |fl: u32| slot[fl_list.by_rank(fl).expect("resolved above").lemma.as_str()];

    let mut handles = Vec::with_capacity(lemmas.len());
    for lemma in &lemmas {
        match index.ordinary_list(lemma, false, stats) {
            Some(h) => handles.push(h),
            None => return Ok(Vec::new()),
        }
    }

    let max_distance = index.config().max_distance;
    let required = plan.required_stops();
    let iters = handles
        .into_iter()
        .enumerate()
        .map(|(i, h)| PostingIterator::new(i, h))
        .collect();
    let mut session = MergeSession::new(iters);
    let mut fragments = Vec::new();
    while let Some(doc) = session.next_document() {
        let positions: Vec<Vec<u32>> = session
            .drain_document(doc)
            .into_iter()
            .map(|d| d.into_iter().map(|p| p.pos).collect())
            .collect();
        let units: Vec<Vec<Anchor>> = plan
            .units
            .iter()
            .map(|unit| match &unit.source {
                UnitSource::Lemma(l) => positions[slot[l.as_str()]]
                    .iter()
                    .map(|&p| {
                        let mut stops = 0u16;
                        for (bit, f) in plan.stop_filters.iter().enumerate() {
                            if near(&positions[slot[f.lemma.as_str()]], p, max_distance).next().is_some() {
                                stops |= 1 << bit;
                            }
                        }
                        Anchor { pos: p, stops }
                    })
                    .collect(),
                UnitSource::TwoKey(k) => {
                    let v = &positions[slot_of_rank(k.v)];
                    positions[slot_of_rank(k.w)]
                        .iter()
                        .filter(|&&p| near(v, p, max_distance).next().is_some())
                        .map(|&p| Anchor { pos: p, stops: 0 })
                        .collect()
                }
                UnitSource::ThreeKey(k) => {
                    let s = &positions[slot_of_rank(k.s)];
                    let t = &positions[slot_of_rank(k.t)];
                    positions[slot_of_rank(k.f)]
                        .iter()
                        .filter(|&&p| near(s, p, max_distance).any(|p1| near(t, p, max_distance).any(|p2| p2 != p1)))
                        .map(|&p| Anchor { pos: p, stops: 0 })
                        .collect()
                }
            })
            .collect();
        let last = index.doc_len(doc).saturating_sub(1);
        fragments.extend(match_in_document(doc, &units, required, max_distance, last));
    }
    if let Some(e) = session.error() {
        return Err(QueryError::Corrupt(e.clone()));
    }
    Ok(fragments)
}

/// Union of per-sub-query fragments. Duplicate windows keep the highest
/// relevance; the result is ordered by relevance, then document and start.
pub fn combine_results(per_subquery: Vec<Vec<Fragment>>) -> Vec<Fragment> {
    let mut best: HashMap<(u32, u32, u32), f64> = HashMap::new();
    for f in per_subquery.into_iter().flatten() {
        let r = best.entry((f.doc_id, f.start, f.end)).or_insert(f.relevance);
        if f.relevance > *r {
            *r = f.relevance;
        }
    }
    let mut out: Vec<Fragment> = best
        .into_iter()
        .map(|((doc_id, start, end), relevance)| Fragment {
            doc_id,
            start,
            end,
            relevance,
        })
        .collect();
    out.sort_by(|a, b| {
        b.relevance
            .total_cmp(&a.relevance)
            .then(a.doc_id.cmp(&b.doc_id))
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
    });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub subqueries: Vec<SubQuery>,
    pub fragments: Vec<Fragment>,
    pub stats: ReadStats,
}

impl SearchResult {
    /// Best relevance per document, ordered like the fragments.
    pub fn documents(&self) -> Vec<(u32, f64)> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for f in &self.fragments {
            if seen.insert(f.doc_id, ()).is_none() {
                out.push((f.doc_id, f.relevance));
            }
        }
        out
    }
}

/// Runs the whole pipeline for `query`.
pub fn search(index: &Index, query: &str) -> Result<SearchResult, QueryError> {
    let subqueries = expand_subqueries(query, index.lexicon())?;
    let mut stats = ReadStats::default();
    let mut per = Vec::with_capacity(subqueries.len());
    for sub in &subqueries {
        per.push(evaluate(sub, index, &mut stats)?);
    }
    Ok(SearchResult {
        subqueries,
        fragments: combine_results(per),
        stats,
    })
}
