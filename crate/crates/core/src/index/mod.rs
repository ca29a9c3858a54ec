//! Positional index families.
//!
//! A full index ("IdxK") holds three families built in one pass:
//!
//! * the ordinary index: one posting per frequently used or ordinary lemma
//!   occurrence, with a parallel stream of NSW records listing the stop
//!   lemmas within `max_distance` of the posting;
//! * the two-component `(w, v)` index over frequently used lemmas;
//! * the three-component `(f, s, t)` index over stop lemmas.
//!
//! The baseline ("Idx1") holds only a plain ordinary index covering every
//! lemma, stop lemmas included.

mod build;
pub mod codec;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use build::{build_ordinary, build_three_key, build_two_key, IndexBuilder, OrdinaryEntry};
pub use store::{FamilyStats, Index, IndexError, IndexStats, ListEntry, ListHandle, ReadStats};

/// A `(document, word position)` pair. Ordered by document, then position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: u32,
    pub pos: u32,
}

impl Posting {
    pub const fn new(doc_id: u32, pos: u32) -> Self {
        Self { doc_id, pos }
    }
}

/// Stop lemmas near one posting, as `(FL-number, signed offset)` pairs sorted
/// by offset then FL-number. Offsets are never zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NswRecord {
    pub neighbors: Vec<(u32, i32)>,
}

impl NswRecord {
    pub fn contains_lemma(&self, fl: u32) -> bool {
        self.neighbors.iter().any(|&(f, _)| f == fl)
    }
}

/// Key of the two-component index; `w <= v` by FL-number, `w` is the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TwoKey {
    pub w: u32,
    pub v: u32,
}

impl TwoKey {
    pub fn canonical(a: u32, b: u32) -> Self {
        Self {
            w: a.min(b),
            v: a.max(b),
        }
    }

    pub fn anchor(&self) -> u32 {
        self.w
    }
}

/// Key of the three-component index; `f <= s <= t` by FL-number, `f` is the
/// anchor whose positions the posting list records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ThreeKey {
    pub f: u32,
    pub s: u32,
    pub t: u32,
}

impl ThreeKey {
    pub fn canonical(a: u32, b: u32, c: u32) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        Self {
            f: v[0],
            s: v[1],
            t: v[2],
        }
    }

    pub fn anchor(&self) -> u32 {
        self.f
    }
}

/// A composite key in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompositeKey {
    Two(TwoKey),
    Three(ThreeKey),
}

impl CompositeKey {
    pub fn anchor(&self) -> u32 {
        match self {
            CompositeKey::Two(k) => k.anchor(),
            CompositeKey::Three(k) => k.anchor(),
        }
    }
}

/// Canonicalizes two or three FL-numbers: components ascending, the smallest
/// (most frequent lemma) is the anchor. Other arities yield `None`.
pub fn canonical_key(fl_numbers: &[u32]) -> Option<CompositeKey> {
    match *fl_numbers {
        [a, b] => Some(CompositeKey::Two(TwoKey::canonical(a, b))),
        [a, b, c] => Some(CompositeKey::Three(ThreeKey::canonical(a, b, c))),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    /// Plain positional index over every lemma.
    Idx1,
    /// Ordinary index with NSW records plus two- and three-component keys.
    Full,
}

impl fmt::Display for IndexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexMode::Idx1 => "idx1",
            IndexMode::Full => "full",
        })
    }
}

impl FromStr for IndexMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "idx1" => Ok(IndexMode::Idx1),
            "full" => Ok(IndexMode::Full),
            other => Err(format!("unknown index mode {other:?} (expected idx1 or full)")),
        }
    }
}
