//! Byte-level encodings shared by every index family.
//!
//! Integers are LEB128 varints. A posting list is a sequence of
//! `(doc delta, position)` pairs where the position is delta-coded against the
//! previous posting of the same document and absolute after a document change.
//! An NSW record is a count followed by `(zigzag fl delta, zigzag offset)`
//! pairs sorted by offset.

use super::{NswRecord, Posting};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("truncated varint at byte {0}")]
    Truncated(usize),
    #[error("varint overflow at byte {0}")]
    Overflow(usize),
    #[error("invalid data: {0}")]
    Invalid(&'static str),
}

pub fn write_varint(out: &mut Vec<u8>, mut value: u64) {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Reads a varint at `*pos`, advancing it.
pub fn read_varint(buf: &[u8], pos: &mut usize) -> Result<u64, DecodeError> {
    let start = *pos;
    let mut value = 0u64;
    let mut shift = 0u32;
    loop {
        let byte = *buf.get(*pos).ok_or(DecodeError::Truncated(start))?;
        *pos += 1;
        if shift == 63 && byte > 1 {
            return Err(DecodeError::Overflow(start));
        }
        value |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(value);
        }
        shift += 7;
        if shift > 63 {
            return Err(DecodeError::Overflow(start));
        }
    }
}

pub fn read_u32(buf: &[u8], pos: &mut usize) -> Result<u32, DecodeError> {
    u32::try_from(read_varint(buf, pos)?).map_err(|_| DecodeError::Invalid("value exceeds u32"))
}

pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

/// Incremental posting-list writer; postings must arrive strictly increasing.
#[derive(Debug, Clone, Default)]
pub struct PostingEncoder {
    bytes: Vec<u8>,
    count: u64,
    last: Option<Posting>,
}

impl PostingEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: Posting) {
        match self.last {
            Some(q) if q.doc_id == p.doc_id => {
                debug_assert!(p.pos > q.pos, "postings must be strictly increasing");
                write_varint(&mut self.bytes, 0);
                write_varint(&mut self.bytes, (p.pos - q.pos) as u64);
            }
            Some(q) => {
                debug_assert!(p.doc_id > q.doc_id, "postings must be strictly increasing");
                write_varint(&mut self.bytes, (p.doc_id - q.doc_id) as u64);
                write_varint(&mut self.bytes, p.pos as u64);
            }
            None => {
                write_varint(&mut self.bytes, p.doc_id as u64);
                write_varint(&mut self.bytes, p.pos as u64);
            }
        }
        self.last = Some(p);
        self.count += 1;
    }

    pub fn last(&self) -> Option<Posting> {
        self.last
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn into_parts(self) -> (Vec<u8>, u64) {
        (self.bytes, self.count)
    }
}

/// Encodes `postings` (strictly increasing) as a standalone list.
pub fn encode_postings(postings: &[Posting]) -> Vec<u8> {
    let mut enc = PostingEncoder::new();
    for &p in postings {
        enc.push(p);
    }
    enc.into_parts().0
}

/// Streaming decoder over an encoded posting list of known length.
#[derive(Debug, Clone)]
pub struct PostingDecoder<'a> {
    buf: &'a [u8],
    pos: usize,
    remaining: u64,
    prev: Option<Posting>,
}

impl<'a> PostingDecoder<'a> {
    pub fn new(buf: &'a [u8], count: u64) -> Self {
        Self {
            buf,
            pos: 0,
            remaining: count,
            prev: None,
        }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn next_posting(&mut self) -> Result<Option<Posting>, DecodeError> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let doc_delta = read_u32(self.buf, &mut self.pos)?;
        let pos_value = read_u32(self.buf, &mut self.pos)?;
        let posting = match self.prev {
            None => Posting::new(doc_delta, pos_value),
            Some(prev) if doc_delta == 0 => {
                if pos_value == 0 {
                    return Err(DecodeError::Invalid("non-increasing posting"));
                }
                let pos = prev
                    .pos
                    .checked_add(pos_value)
                    .ok_or(DecodeError::Invalid("position overflow"))?;
                Posting::new(prev.doc_id, pos)
            }
            Some(prev) => {
                let doc = prev
                    .doc_id
                    .checked_add(doc_delta)
                    .ok_or(DecodeError::Invalid("doc id overflow"))?;
                Posting::new(doc, pos_value)
            }
        };
        self.prev = Some(posting);
        self.remaining -= 1;
        Ok(Some(posting))
    }
}

/// Decodes a whole posting list.
pub fn decode_postings(buf: &[u8], count: u64) -> Result<Vec<Posting>, DecodeError> {
    let mut dec = PostingDecoder::new(buf, count);
    let mut out = Vec::with_capacity(count as usize);
    while let Some(p) = dec.next_posting()? {
        out.push(p);
    }
    Ok(out)
}

pub fn encode_nsw(out: &mut Vec<u8>, record: &NswRecord) {
    write_varint(out, record.neighbors.len() as u64);
    let mut prev_fl = 0i64;
    for &(fl, offset) in &record.neighbors {
        write_varint(out, zigzag(fl as i64 - prev_fl));
        write_varint(out, zigzag(offset as i64));
        prev_fl = fl as i64;
    }
}

/// Reader over a stream of consecutive NSW records.
#[derive(Debug, Clone)]
pub struct NswDecoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> NswDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn read_record(&mut self) -> Result<NswRecord, DecodeError> {
        let n = read_varint(self.buf, &mut self.pos)?;
        let mut neighbors = Vec::with_capacity(n.min(64) as usize);
        let mut fl = 0i64;
        for _ in 0..n {
            fl += unzigzag(read_varint(self.buf, &mut self.pos)?);
            let offset = unzigzag(read_varint(self.buf, &mut self.pos)?);
            let fl = u32::try_from(fl).map_err(|_| DecodeError::Invalid("negative FL-number"))?;
            let offset = i32::try_from(offset).map_err(|_| DecodeError::Invalid("offset range"))?;
            neighbors.push((fl, offset));
        }
        Ok(NswRecord { neighbors })
    }

    /// Steps over one record without materializing it.
    pub fn skip_record(&mut self) -> Result<(), DecodeError> {
        let n = read_varint(self.buf, &mut self.pos)?;
        for _ in 0..2 * n {
            read_varint(self.buf, &mut self.pos)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn varint_known_bytes() {
        let mut out = Vec::new();
        write_varint(&mut out, 0);
        write_varint(&mut out, 127);
        write_varint(&mut out, 300);
        assert_eq!(out, vec![0x00, 0x7f, 0xac, 0x02]);
    }

    #[test]
    fn varint_truncated() {
        let mut pos = 0;
        assert_eq!(read_varint(&[0x80], &mut pos), Err(DecodeError::Truncated(0)));
    }

    #[test]
    fn varint_overflow() {
        let mut pos = 0;
        let buf = [0xff; 11];
        assert!(matches!(read_varint(&buf, &mut pos), Err(DecodeError::Overflow(_))));
    }

    #[test]
    fn posting_layout() {
        let out = encode_postings(&[Posting::new(2, 5), Posting::new(2, 9), Posting::new(4, 1)]);
        // (2,5) (0,4) (2,1)
        assert_eq!(out, vec![2, 5, 0, 4, 2, 1]);
    }

    #[test]
    fn nsw_layout_and_skip() {
        let rec = NswRecord {
            neighbors: vec![(10, -1), (3, 2)],
        };
        let mut out = Vec::new();
        encode_nsw(&mut out, &rec);
        encode_nsw(&mut out, &NswRecord::default());
        assert_eq!(out, vec![2, 20, 1, 13, 4, 0]);
        let mut dec = NswDecoder::new(&out);
        dec.skip_record().unwrap();
        assert_eq!(dec.read_record().unwrap(), NswRecord::default());
        let mut dec = NswDecoder::new(&out);
        assert_eq!(dec.read_record().unwrap(), rec);
    }

    fn posting_lists() -> impl Strategy<Value = Vec<Posting>> {
        proptest::collection::btree_set((0u32..50, 0u32..2000), 0..200)
            .prop_map(|s| s.into_iter().map(|(d, p)| Posting::new(d, p)).collect())
    }

    proptest! {
        #[test]
        fn postings_round_trip(list in posting_lists()) {
            let out = encode_postings(&list);
            prop_assert_eq!(decode_postings(&out, list.len() as u64).unwrap(), list);
        }

        #[test]
        fn zigzag_round_trip(v in any::<i32>()) {
            prop_assert_eq!(unzigzag(zigzag(v as i64)), v as i64);
        }
    }
}
