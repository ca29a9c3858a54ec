//! Posting-list intersection with a pair of binary heaps.
//!
//! Every iterator taking part in a query is referenced from two heaps at
//! once: `MinHeap` keeps the iterator with the smallest current document on
//! top, `MaxHeap` the one with the largest. Each iterator stores its slot in
//! both arrays (`min_index`, `max_index`) so that after `Next` it can be
//! re-sifted in `O(log n)` without searching. When both tops agree on the
//! document, every iterator stands on that document.

use thiserror::Error;

use crate::index::codec::{DecodeError, NswDecoder, PostingDecoder};
use crate::index::{ListHandle, NswRecord, Posting};
use crate::query::Fragment;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeapError {
    #[error("heap capacity {0} exceeded")]
    CapacityExceeded(usize),
    #[error("heap is empty")]
    Empty,
    #[error("slot {slot} out of range 1..={count}")]
    SlotOutOfRange { slot: usize, count: usize },
}

/// Reads one posting list front to back.
#[derive(Debug, Clone)]
pub struct PostingIterator<'a> {
    /// Caller-assigned label, usually the index of the query unit it serves.
    pub unit: usize,
    decoder: PostingDecoder<'a>,
    nsw: Option<NswDecoder<'a>>,
    nsw_taken: bool,
    value: Posting,
    pub min_index: usize,
    pub max_index: usize,
    exhausted: bool,
    next_calls: u64,
    error: Option<DecodeError>,
}

impl<'a> PostingIterator<'a> {
    pub fn new(unit: usize, handle: ListHandle<'a>) -> Self {
        let mut it = Self {
            unit,
            decoder: PostingDecoder::new(handle.postings, handle.count),
            nsw: handle.nsw.map(NswDecoder::new),
            nsw_taken: true,
            value: Posting::default(),
            min_index: 0,
            max_index: 0,
            exhausted: false,
            next_calls: 0,
            error: None,
        };
        it.load_next();
        it.next_calls = 0;
        it
    }

    /// Iterator over an encoded list without NSW data.
    pub fn from_encoded(unit: usize, bytes: &'a [u8], count: u64) -> Self {
        Self::new(
            unit,
            ListHandle {
                postings: bytes,
                count,
                nsw: None,
            },
        )
    }

    fn load_next(&mut self) {
        if self.exhausted {
            return;
        }
        if let Some(nsw) = self.nsw.as_mut() {
            if !self.nsw_taken {
                if let Err(e) = nsw.skip_record() {
                    self.fail(e);
                    return;
                }
            }
            self.nsw_taken = false;
        }
        match self.decoder.next_posting() {
            Ok(Some(p)) => self.value = p,
            Ok(None) => self.exhausted = true,
            Err(e) => self.fail(e),
        }
    }

    fn fail(&mut self, e: DecodeError) {
        self.error = Some(e);
        self.exhausted = true;
    }

    /// Current posting. Meaningless once exhausted.
    pub fn value(&self) -> Posting {
        self.value
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Moves to the next posting; returns false when the list has run out.
    /// Not an `Iterator`: the cursor keeps its value after advancing.
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> bool {
        self.next_calls += 1;
        self.load_next();
        !self.exhausted
    }

    pub fn next_calls(&self) -> u64 {
        self.next_calls
    }

    pub fn has_nsw(&self) -> bool {
        self.nsw.is_some()
    }

    /// NSW record of the current posting; `None` without an NSW stream or if
    /// already taken for this posting.
    pub fn take_nsw(&mut self) -> Option<NswRecord> {
        if self.exhausted || self.nsw_taken {
            return None;
        }
        let nsw = self.nsw.as_mut()?;
        self.nsw_taken = true;
        match nsw.read_record() {
            Ok(r) => Some(r),
            Err(e) => {
                self.fail(e);
                None
            }
        }
    }

    pub fn error(&self) -> Option<&DecodeError> {
        self.error.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Top holds the smallest document id.
    Min,
    /// Top holds the largest document id.
    Max,
}

/// Binary heap of iterator ids (indexes into a caller-owned iterator slice),
/// 1-indexed, ordered by the iterators' current document id.
#[derive(Debug, Clone)]
pub struct DualHeap {
    heap: Vec<usize>,
    capacity: usize,
    orientation: Orientation,
    comparisons: u64,
}

impl DualHeap {
    pub fn new(orientation: Orientation, capacity: usize) -> Self {
        let mut heap = Vec::with_capacity(capacity + 1);
        heap.push(usize::MAX);
        Self {
            heap,
            capacity,
            orientation,
            comparisons: 0,
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn len(&self) -> usize {
        self.heap.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterator ids in array order; element 0 is slot 1.
    pub fn slots(&self) -> &[usize] {
        &self.heap[1..]
    }

    /// Number of element comparisons performed so far.
    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    fn back_index(&self, it: &PostingIterator<'_>) -> usize {
        match self.orientation {
            Orientation::Min => it.min_index,
            Orientation::Max => it.max_index,
        }
    }

    fn set_back_index(&self, it: &mut PostingIterator<'_>, slot: usize) {
        match self.orientation {
            Orientation::Min => it.min_index = slot,
            Orientation::Max => it.max_index = slot,
        }
    }

    /// Heap order between the elements at slots `a` and `b`.
    fn less(&mut self, iters: &[PostingIterator<'_>], a: usize, b: usize) -> bool {
        self.comparisons += 1;
        let da = iters[self.heap[a]].value.doc_id;
        let db = iters[self.heap[b]].value.doc_id;
        match self.orientation {
            Orientation::Min => da < db,
            Orientation::Max => da > db,
        }
    }

    fn swap(&mut self, iters: &mut [PostingIterator<'_>], a: usize, b: usize) {
        self.heap.swap(a, b);
        let (ia, ib) = (self.heap[a], self.heap[b]);
        self.set_back_index(&mut iters[ia], a);
        self.set_back_index(&mut iters[ib], b);
    }

    /// Appends iterator `it` and sifts it up, keeping back-indexes current.
    pub fn insert(&mut self, iters: &mut [PostingIterator<'_>], it: usize) -> Result<(), HeapError> {
        if self.len() >= self.capacity {
            return Err(HeapError::CapacityExceeded(self.capacity));
        }
        self.heap.push(it);
        let mut i = self.len();
        self.set_back_index(&mut iters[it], i);
        while i > 1 && self.less(iters, i, i / 2) {
            self.swap(iters, i, i / 2);
            i /= 2;
        }
        Ok(())
    }

    /// Id of the top iterator.
    pub fn get_min(&self) -> Result<usize, HeapError> {
        self.heap.get(1).copied().ok_or(HeapError::Empty)
    }

    /// Restores the heap property after the iterator at `slot` changed value.
    pub fn update(&mut self, iters: &mut [PostingIterator<'_>], slot: usize) -> Result<(), HeapError> {
        let count = self.len();
        if slot < 1 || slot > count {
            return Err(HeapError::SlotOutOfRange { slot, count });
        }
        let mut i = slot;
        while i > 1 && self.less(iters, i, i / 2) {
            self.swap(iters, i, i / 2);
            i /= 2;
        }
        if i != slot {
            return Ok(());
        }
        loop {
            let left = 2 * i;
            if left > count {
                break;
            }
            let mut child = left;
            if left < count && self.less(iters, left + 1, left) {
                child = left + 1;
            }
            if !self.less(iters, child, i) {
                break;
            }
            self.swap(iters, i, child);
            i = child;
        }
        Ok(())
    }

    /// Full scan of the heap property and back-index consistency.
    pub fn validate(&self, iters: &[PostingIterator<'_>]) -> Result<(), String> {
        let count = self.len();
        for i in 1..=count {
            let it = &iters[self.heap[i]];
            if self.back_index(it) != i {
                return Err(format!(
                    "{:?} heap: iterator {} at slot {i} records slot {}",
                    self.orientation,
                    self.heap[i],
                    self.back_index(it)
                ));
            }
            for child in [2 * i, 2 * i + 1] {
                if child > count {
                    continue;
                }
                let (p, c) = (it.value.doc_id, iters[self.heap[child]].value.doc_id);
                let ok = match self.orientation {
                    Orientation::Min => p <= c,
                    Orientation::Max => p >= c,
                };
                if !ok {
                    return Err(format!(
                        "{:?} heap: slot {i} (doc {p}) violates order with slot {child} (doc {c})",
                        self.orientation
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equalized {
    /// Every iterator stands on this document.
    Doc(u32),
    /// Some iterator ran out; no further common document exists.
    Exhausted,
}

/// Advances the iterator with the smallest document until the smallest and
/// largest current documents coincide.
pub fn equalize(
    iters: &mut [PostingIterator<'_>],
    min_heap: &mut DualHeap,
    max_heap: &mut DualHeap,
) -> Equalized {
    let (Ok(_), Ok(_)) = (min_heap.get_min(), max_heap.get_min()) else {
        return Equalized::Exhausted;
    };
    loop {
        let lo = min_heap.get_min().expect("non-empty");
        let hi = max_heap.get_min().expect("non-empty");
        let doc = iters[lo].value.doc_id;
        if doc == iters[hi].value.doc_id {
            return Equalized::Doc(doc);
        }
        if !iters[lo].next() {
            return Equalized::Exhausted;
        }
        let (min_slot, max_slot) = (iters[lo].min_index, iters[lo].max_index);
        min_heap.update(iters, min_slot).expect("slot from back-index");
        max_heap.update(iters, max_slot).expect("slot from back-index");
    }
}

/// One posting drained from a document, with its NSW record when the
/// iterator carries an NSW stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrainedPosting {
    pub pos: u32,
    pub nsw: Option<NswRecord>,
}

/// Iterators plus both heaps for one query.
#[derive(Debug)]
pub struct MergeSession<'a> {
    iters: Vec<PostingIterator<'a>>,
    min_heap: DualHeap,
    max_heap: DualHeap,
    done: bool,
}

impl<'a> MergeSession<'a> {
    pub fn new(mut iters: Vec<PostingIterator<'a>>) -> Self {
        let n = iters.len();
        let mut min_heap = DualHeap::new(Orientation::Min, n);
        let mut max_heap = DualHeap::new(Orientation::Max, n);
        let done = n == 0 || iters.iter().any(PostingIterator::is_exhausted);
        if !done {
            for id in 0..n {
                min_heap.insert(&mut iters, id).expect("capacity is the iterator count");
                max_heap.insert(&mut iters, id).expect("capacity is the iterator count");
            }
        }
        Self {
            iters,
            min_heap,
            max_heap,
            done,
        }
    }

    /// Next document present in every list.
    pub fn next_document(&mut self) -> Option<u32> {
        if self.done {
            return None;
        }
        match equalize(&mut self.iters, &mut self.min_heap, &mut self.max_heap) {
            Equalized::Doc(d) => Some(d),
            Equalized::Exhausted => {
                self.done = true;
                None
            }
        }
    }

    /// Collects every posting of `doc` from each iterator (indexed like the
    /// iterators) and leaves each iterator on its first posting past `doc`.
    /// Running out while draining ends the session after this document.
    pub fn drain_document(&mut self, doc: u32) -> Vec<Vec<DrainedPosting>> {
        let mut out = Vec::with_capacity(self.iters.len());
        for id in 0..self.iters.len() {
            let mut postings = Vec::new();
            let it = &mut self.iters[id];
            while !it.is_exhausted() && it.value().doc_id == doc {
                let nsw = it.take_nsw();
                postings.push(DrainedPosting {
                    pos: it.value().pos,
                    nsw,
                });
                it.next();
            }
            if it.is_exhausted() {
                self.done = true;
            } else if !self.done {
                let (min_slot, max_slot) = (it.min_index, it.max_index);
                self.min_heap.update(&mut self.iters, min_slot).expect("slot from back-index");
                self.max_heap.update(&mut self.iters, max_slot).expect("slot from back-index");
            }
            out.push(postings);
        }
        out
    }

    pub fn iterators(&self) -> &[PostingIterator<'a>] {
        &self.iters
    }

    pub fn heaps(&self) -> (&DualHeap, &DualHeap) {
        (&self.min_heap, &self.max_heap)
    }

    /// Total `Next` calls over all iterators.
    pub fn next_calls(&self) -> u64 {
        self.iters.iter().map(PostingIterator::next_calls).sum()
    }

    pub fn error(&self) -> Option<&DecodeError> {
        self.iters.iter().find_map(PostingIterator::error)
    }
}

/// An anchor position of one query unit inside a document. `stops` is a bit
/// set over the query's required stop lemmas found within `max_distance` of
/// the position (at a different position).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub pos: u32,
    pub stops: u16,
}

/// Fragments of `doc_id` given each unit's anchors.
///
/// A window starting at anchor position `L` matches when, scanning anchors in
/// `[L, L + max_distance]`, every unit is represented and every required stop
/// lemma is near one of the scanned anchors; `R` is the position where the
/// scan completes. Windows strictly containing another window are dropped.
/// Each survivor yields `P = L`, `E = min(R + max_distance, last_pos)`.
pub fn match_in_document(
    doc_id: u32,
    units: &[Vec<Anchor>],
    required_stops: u16,
    max_distance: u32,
    last_pos: u32,
) -> Vec<Fragment> {
    assert!(units.len() <= 64, "at most 64 units per query");
    if units.is_empty() || units.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let full: u64 = if units.len() == 64 { u64::MAX } else { (1u64 << units.len()) - 1 };
    let mut all: Vec<(u32, usize, u16)> = units
        .iter()
        .enumerate()
        .flat_map(|(u, anchors)| anchors.iter().map(move |a| (a.pos, u, a.stops)))
        .collect();
    all.sort_unstable();

    let mut windows: Vec<(u32, u32)> = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let left = all[i].0;
        let limit = left.saturating_add(max_distance);
        let (mut covered, mut stops) = (0u64, 0u16);
        for &(pos, unit, near) in all[i..].iter().take_while(|e| e.0 <= limit) {
            covered |= 1 << unit;
            stops |= near;
            if covered == full && stops & required_stops == required_stops {
                windows.push((left, pos));
                break;
            }
        }
        while i < all.len() && all[i].0 == left {
            i += 1;
        }
    }

    let mut keep = vec![false; windows.len()];
    let mut min_right = u32::MAX;
    for (k, &(_, right)) in windows.iter().enumerate().rev() {
        keep[k] = right < min_right;
        min_right = min_right.min(right);
    }
    windows
        .into_iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|((left, right), _)| Fragment::new(doc_id, left, right.saturating_add(max_distance).min(last_pos)))
        .collect()
}
