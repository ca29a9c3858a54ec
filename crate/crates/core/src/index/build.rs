use std::collections::HashMap;

use super::codec::{encode_nsw, PostingEncoder};
use super::store::{Family, Index, Manifest};
use super::{IndexMode, NswRecord, Posting, ThreeKey, TwoKey};
use crate::lexicon::{FlList, LemmaClass, LemmatizedDoc, Lexicon, Occurrence};

/// One record of the ordinary index for a single document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinaryEntry {
    /// Index into the FL-list.
    pub lemma: u32,
    pub pos: u32,
    /// Present in full mode only.
    pub nsw: Option<NswRecord>,
}

/// `(position, FL-number)` of every occurrence whose lemma is in `class`,
/// ordered by position.
fn occurrences_of_class(doc: &LemmatizedDoc, fl_list: &FlList, class: LemmaClass) -> Vec<(u32, u32)> {
    doc.occurrences
        .iter()
        .filter_map(|o| {
            let e = fl_list.entry(o.lemma as usize);
            (e.class == class).then(|| (o.pos, e.fl_number.rank().expect("classed lemma is ranked")))
        })
        .collect()
}

/// Slice of `occ` (sorted by position) within `max_distance` of `pos`.
fn window(occ: &[(u32, u32)], pos: u32, max_distance: u32) -> &[(u32, u32)] {
    let lo = pos.saturating_sub(max_distance);
    let hi = pos.saturating_add(max_distance);
    let start = occ.partition_point(|&(p, _)| p < lo);
    let end = occ.partition_point(|&(p, _)| p <= hi);
    &occ[start..end]
}

/// Ordinary-index records for one document, sorted by lemma then position.
///
/// In full mode stop lemmas are left out (the three-component index covers
/// them) and each record carries the stop lemmas within `max_distance`. In
/// Idx1 mode every occurrence is recorded without NSW data.
pub fn build_ordinary(
    doc: &LemmatizedDoc,
    fl_list: &FlList,
    mode: IndexMode,
    max_distance: u32,
) -> Vec<OrdinaryEntry> {
    let mut out: Vec<OrdinaryEntry> = match mode {
        IndexMode::Idx1 => doc
            .occurrences
            .iter()
            .map(|o| OrdinaryEntry {
                lemma: o.lemma,
                pos: o.pos,
                nsw: None,
            })
            .collect(),
        IndexMode::Full => {
            let stops = occurrences_of_class(doc, fl_list, LemmaClass::Stop);
            doc.occurrences
                .iter()
                .filter(|o| fl_list.entry(o.lemma as usize).class != LemmaClass::Stop)
                .map(|&Occurrence { pos, lemma }| {
                    let mut neighbors: Vec<(u32, i32)> = window(&stops, pos, max_distance)
                        .iter()
                        .filter(|&&(q, _)| q != pos)
                        .map(|&(q, fl)| (fl, q as i64 as i32 - pos as i32))
                        .collect();
                    neighbors.sort_unstable_by_key(|&(fl, off)| (off, fl));
                    OrdinaryEntry {
                        lemma,
                        pos,
                        nsw: Some(NswRecord { neighbors }),
                    }
                })
                .collect()
        }
    };
    out.sort_by_key(|e| (e.lemma, e.pos));
    out
}

/// Three-component key postings for one document as sorted, deduplicated
/// `(key, anchor position)` pairs.
///
/// `(f, s, t)` records position `p` when stop lemma `f` occurs at `p`, and
/// stop lemmas `s` and `t` occur at two further distinct positions within
/// `max_distance` of `p`. Only the canonical anchor (smallest FL-number) is
/// recorded, so `f <= s <= t`.
pub fn build_three_key(doc: &LemmatizedDoc, fl_list: &FlList, max_distance: u32) -> Vec<(ThreeKey, u32)> {
    let stops = occurrences_of_class(doc, fl_list, LemmaClass::Stop);
    let mut out = Vec::new();
    let mut near: Vec<(u32, u32)> = Vec::new();
    for &(pos, f) in &stops {
        near.clear();
        near.extend(
            window(&stops, pos, max_distance)
                .iter()
                .filter(|&&(q, fl)| q != pos && fl >= f),
        );
        for (i, &(p1, s)) in near.iter().enumerate() {
            for &(p2, t) in &near[i + 1..] {
                if p1 != p2 {
                    out.push((ThreeKey::canonical(f, s, t), pos));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Two-component key postings for one document: `(w, v)` records position
/// `p` when frequently used lemma `w` occurs at `p` and frequently used lemma
/// `v >= w` occurs at another position within `max_distance`.
pub fn build_two_key(doc: &LemmatizedDoc, fl_list: &FlList, max_distance: u32) -> Vec<(TwoKey, u32)> {
    let frequent = occurrences_of_class(doc, fl_list, LemmaClass::FrequentlyUsed);
    let mut out = Vec::new();
    for &(pos, w) in &frequent {
        for &(q, v) in window(&frequent, pos, max_distance) {
            if q != pos && v >= w {
                out.push((TwoKey::canonical(w, v), pos));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Default)]
struct OrdinaryList {
    postings: PostingEncoder,
    nsw: Vec<u8>,
}

/// Accumulates documents into an index. Documents get consecutive ids in
/// insertion order.
#[derive(Debug)]
pub struct IndexBuilder {
    lexicon: Lexicon,
    mode: IndexMode,
    ordinary: HashMap<u32, OrdinaryList>,
    two_key: HashMap<TwoKey, PostingEncoder>,
    three_key: HashMap<ThreeKey, PostingEncoder>,
    doc_lens: Vec<u32>,
    token_count: u64,
}

impl IndexBuilder {
    pub fn new(lexicon: Lexicon, mode: IndexMode) -> Self {
        Self {
            lexicon,
            mode,
            ordinary: HashMap::new(),
            two_key: HashMap::new(),
            three_key: HashMap::new(),
            doc_lens: Vec::new(),
            token_count: 0,
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn add_document(&mut self, text: &str) -> u32 {
        let doc = self.lexicon.lemmatize_document(text);
        self.add_lemmatized(&doc)
    }

    pub fn add_lemmatized(&mut self, doc: &LemmatizedDoc) -> u32 {
        let doc_id = self.doc_lens.len() as u32;
        let fl_list = &self.lexicon.fl_list;
        let max_distance = fl_list.config().max_distance;

        for entry in build_ordinary(doc, fl_list, self.mode, max_distance) {
            let list = self.ordinary.entry(entry.lemma).or_default();
            list.postings.push(Posting::new(doc_id, entry.pos));
            if let Some(nsw) = &entry.nsw {
                encode_nsw(&mut list.nsw, nsw);
            }
        }
        if self.mode == IndexMode::Full {
            for (key, pos) in build_three_key(doc, fl_list, max_distance) {
                self.three_key.entry(key).or_default().push(Posting::new(doc_id, pos));
            }
            for (key, pos) in build_two_key(doc, fl_list, max_distance) {
                self.two_key.entry(key).or_default().push(Posting::new(doc_id, pos));
            }
        }
        self.doc_lens.push(doc.len);
        self.token_count += doc.len as u64;
        doc_id
    }

    pub fn finish(self) -> Index {
        let config = *self.lexicon.config();
        let manifest = Manifest::new(
            self.mode,
            config,
            self.doc_lens.len() as u64,
            self.token_count,
        );
        let fl_list = &self.lexicon.fl_list;

        let mut ordinary: Vec<(String, OrdinaryList)> = self
            .ordinary
            .into_iter()
            .map(|(idx, list)| (fl_list.entry(idx as usize).lemma.clone(), list))
            .collect();
        ordinary.sort_by(|a, b| a.0.cmp(&b.0));
        let mut nsw_lists = Vec::new();
        let mut posting_lists = Vec::with_capacity(ordinary.len());
        for (lemma, list) in ordinary {
            let (bytes, count) = list.postings.into_parts();
            if self.mode == IndexMode::Full {
                nsw_lists.push((lemma.clone(), list.nsw, count));
            }
            posting_lists.push((lemma, bytes, count));
        }
        let ordinary = Family::from_sorted_lists(posting_lists);

        let (nsw, two_key, three_key) = match self.mode {
            IndexMode::Idx1 => (None, None, None),
            IndexMode::Full => (
                Some(Family::from_sorted_lists(nsw_lists)),
                Some(Family::from_sorted_lists(sorted_lists(self.two_key))),
                Some(Family::from_sorted_lists(sorted_lists(self.three_key))),
            ),
        };
        Index::from_parts(manifest, self.lexicon, self.doc_lens, ordinary, nsw, two_key, three_key)
    }
}

fn sorted_lists<K: Ord>(map: HashMap<K, PostingEncoder>) -> Vec<(K, Vec<u8>, u64)> {
    let mut lists: Vec<(K, Vec<u8>, u64)> = map
        .into_iter()
        .map(|(k, enc)| {
            let (bytes, count) = enc.into_parts();
            (k, bytes, count)
        })
        .collect();
    lists.sort_by(|a, b| a.0.cmp(&b.0));
    lists
}
