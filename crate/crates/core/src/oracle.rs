//! Brute-force reference search.
//!
//! Scans lemmatized documents position by position and applies the match
//! predicate described in [`crate::query`] directly, without touching any
//! index structure. Used as ground truth in tests and benchmarks; it is
//! quadratic in the window size and meant for desk-scale corpora only.

use crate::lexicon::{LemmatizedDoc, Lexicon};
use crate::query::{plan_subquery, QueryError, QueryUnit, SubQuery, UnitSource};

/// A matching window, witnessed by concrete positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleHit {
    pub doc_id: u32,
    /// Window start: the smallest anchor position of the witness.
    pub anchor: u32,
    /// `(query position, document position)` pairs. Key units contribute
    /// their anchor and satellite positions, so a query position may appear
    /// once per unit that serves it.
    pub witness: Vec<(usize, u32)>,
}

/// Lemma indexes present at each position.
struct PositionTable {
    at: Vec<Vec<u32>>,
}

impl PositionTable {
    fn new(doc: &LemmatizedDoc) -> Self {
        let mut at = vec![Vec::new(); doc.len as usize];
        for o in &doc.occurrences {
            at[o.pos as usize].push(o.lemma);
        }
        Self { at }
    }

    fn has(&self, pos: u32, lemma: Option<u32>) -> bool {
        lemma.is_some_and(|l| self.at[pos as usize].contains(&l))
    }

    /// Positions `q != pos` with `|q - pos| <= max_distance`.
    fn around(&self, pos: u32, max_distance: u32) -> impl Iterator<Item = u32> {
        let lo = pos.saturating_sub(max_distance);
        let hi = (pos as u64 + max_distance as u64).min(self.at.len() as u64 - 1) as u32;
        (lo..=hi).filter(move |&q| q != pos)
    }
}

/// An anchor and the positions filling the unit's other components.
#[derive(Debug, Clone)]
struct UnitAnchor {
    pos: u32,
    satellites: Vec<u32>,
}

fn unit_anchors(
    unit: &QueryUnit,
    table: &PositionTable,
    lexicon: &Lexicon,
    max_distance: u32,
) -> Vec<UnitAnchor> {
    let fl = &lexicon.fl_list;
    let by_lemma = |l: &str| fl.index_of(l).map(|i| i as u32);
    let by_rank = |r: u32| fl.by_rank(r).and_then(|e| by_lemma(&e.lemma));
    let mut out = Vec::new();
    for pos in 0..table.at.len() as u32 {
        let found = match &unit.source {
            UnitSource::Lemma(l) => table.has(pos, by_lemma(l)).then(Vec::new),
            UnitSource::TwoKey(k) => {
                if !table.has(pos, by_rank(k.w)) {
                    continue;
                }
                let v = by_rank(k.v);
                table.around(pos, max_distance).find(|&q| table.has(q, v)).map(|q| vec![q])
            }
            UnitSource::ThreeKey(k) => {
                if !table.has(pos, by_rank(k.f)) {
                    continue;
                }
                let (s, t) = (by_rank(k.s), by_rank(k.t));
                let mut pair = None;
                'outer: for q1 in table.around(pos, max_distance) {
                    if !table.has(q1, s) {
                        continue;
                    }
                    for q2 in table.around(pos, max_distance) {
                        if q2 != q1 && table.has(q2, t) {
                            pair = Some(vec![q1, q2]);
                            break 'outer;
                        }
                    }
                }
                pair
            }
        };
        if let Some(satellites) = found {
            out.push(UnitAnchor { pos, satellites });
        }
    }
    out
}

/// Every matching window of `sub` in `corpus`, ordered by document and
/// window start. Document ids are corpus indexes.
pub fn oracle_search(sub: &SubQuery, corpus: &[LemmatizedDoc], lexicon: &Lexicon) -> Result<Vec<OracleHit>, QueryError> {
    let plan = plan_subquery(sub)?;
    let max_distance = lexicon.config().max_distance;
    let stop_lemmas: Vec<Option<u32>> = plan
        .stop_filters
        .iter()
        .map(|f| lexicon.fl_list.index_of(&f.lemma).map(|i| i as u32))
        .collect();

    let mut hits = Vec::new();
    for (doc_id, doc) in corpus.iter().enumerate() {
        if doc.len == 0 {
            continue;
        }
        let table = PositionTable::new(doc);
        let anchors: Vec<Vec<UnitAnchor>> = plan
            .units
            .iter()
            .map(|u| unit_anchors(u, &table, lexicon, max_distance))
            .collect();
        if anchors.iter().any(Vec::is_empty) {
            continue;
        }
        let mut starts: Vec<u32> = anchors.iter().flatten().map(|a| a.pos).collect();
        starts.sort_unstable();
        starts.dedup();

        for left in starts {
            let right = left.saturating_add(max_distance);
            let in_window = |a: &&UnitAnchor| a.pos >= left && a.pos <= right;
            let chosen: Option<Vec<&UnitAnchor>> =
                anchors.iter().map(|list| list.iter().find(in_window)).collect();
            let Some(chosen) = chosen else { continue };

            let window_anchors: Vec<u32> = anchors.iter().flatten().filter(in_window).map(|a| a.pos).collect();
            let mut stop_hits = Vec::with_capacity(stop_lemmas.len());
            for &lemma in &stop_lemmas {
                let hit = window_anchors.iter().find_map(|&a| {
                    table.around(a, max_distance).find(|&q| table.has(q, lemma))
                });
                match hit {
                    Some(q) => stop_hits.push(q),
                    None => break,
                }
            }
            if stop_hits.len() != stop_lemmas.len() {
                continue;
            }

            let mut witness = Vec::new();
            for (unit, a) in plan.units.iter().zip(&chosen) {
                let positions = std::iter::once(a.pos).chain(a.satellites.iter().copied());
                for (role, doc_pos) in unit.roles.iter().zip(positions) {
                    witness.extend(role.iter().map(|&q| (q, doc_pos)));
                }
            }
            for (filter, &q) in plan.stop_filters.iter().zip(&stop_hits) {
                witness.extend(filter.query_positions.iter().map(|&qp| (qp, q)));
            }
            witness.sort_unstable();
            witness.dedup();
            hits.push(OracleHit {
                doc_id: doc_id as u32,
                anchor: left,
                witness,
            });
        }
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{FlList, FlNumber, LemmaDictionary, LexiconConfig};
    use crate::query::expand_subqueries;

    fn lexicon(md: u32) -> Lexicon {
        let config = LexiconConfig {
            max_distance: md,
            ..LexiconConfig::default()
        };
        let dict = LemmaDictionary::read_from("are\tare,be\n".as_bytes()).unwrap();
        let fl = FlList::from_assigned(
            [
                ("who", FlNumber::Rank(293)),
                ("are", FlNumber::Rank(268)),
                ("be", FlNumber::Rank(21)),
                ("you", FlNumber::Rank(47)),
                ("the", FlNumber::Rank(10)),
                ("beauty", FlNumber::Rare),
                ("x", FlNumber::Rare),
            ],
            config,
        )
        .unwrap();
        Lexicon::new(dict, fl)
    }

    #[test]
    fn single_document_q1() {
        let lex = lexicon(5);
        let corpus = vec![lex.lemmatize_document("who are you who")];
        let q1 = &expand_subqueries("who are you who", &lex).unwrap()[0];
        let hits = oracle_search(q1, &corpus, &lex).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].doc_id, 0);
        assert_eq!(hits[0].anchor, 2);
        // "you" anchors both keys at position 2.
        assert!(hits[0].witness.contains(&(2, 2)));
        assert!(hits[0].witness.contains(&(1, 1)));
    }

    #[test]
    fn no_match() {
        let lex = lexicon(5);
        let corpus = vec![lex.lemmatize_document("beauty x x")];
        let q = &expand_subqueries("who are you", &lex).unwrap()[0];
        assert!(oracle_search(q, &corpus, &lex).unwrap().is_empty());
    }

    #[test]
    fn stop_filter_distance() {
        let lex = lexicon(3);
        let q = &expand_subqueries("the beauty", &lex).unwrap()[0];
        let near = vec![lex.lemmatize_document("the x x beauty")];
        assert_eq!(oracle_search(q, &near, &lex).unwrap().len(), 1);
        let far = vec![lex.lemmatize_document("the x x x beauty")];
        assert!(oracle_search(q, &far, &lex).unwrap().is_empty());
    }
}
