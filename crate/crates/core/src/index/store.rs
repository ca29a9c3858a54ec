//! On-disk layout and read access.
//!
//! An index directory contains:
//!
//! | file              | content                                              |
//! |-------------------|------------------------------------------------------|
//! | `manifest.json`   | mode, lexicon config, document and token counts      |
//! | `fl_list.tsv`     | `lemma<TAB>count<TAB>fl_number` in FL order           |
//! | `lemmas.dict`     | lemma dictionary used at build time                  |
//! | `doclens.bin`     | varint document count, then one varint length per doc |
//! | `ordinary.dict`   | dictionary of the ordinary family                    |
//! | `ordinary.post`   | posting data of the ordinary family                  |
//! | `ordinary.nswdict`| offset table of the NSW stream (full mode)           |
//! | `ordinary.nsw`    | NSW records aligned with `ordinary.post` (full mode) |
//! | `two_key.*`       | `(w, v)` family (full mode)                          |
//! | `three_key.*`     | `(f, s, t)` family (full mode)                       |
//!
//! A `.dict` file is a varint entry count followed by `key, offset, length,
//! count` per entry in ascending key order. Lemma keys are a varint byte
//! length plus UTF-8; composite keys are their FL-numbers as varints.

use std::collections::HashMap;
use std::fs;
use std::hash::Hash;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::codec::{read_u32, read_varint, write_varint, DecodeError};
use super::{IndexMode, ThreeKey, TwoKey};
use crate::lexicon::{ClassSizes, FlList, LemmaDictionary, LexiconConfig, LexiconError, Lexicon};

const FORMAT: &str = "proxsearch-index";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: corrupt index data: {reason}")]
    Corrupt { file: &'static str, reason: String },
    #[error("index already exists at {0} (pass overwrite to replace it)")]
    Exists(PathBuf),
    #[error("invalid manifest")]
    Manifest(#[from] serde_json::Error),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IndexError + '_ {
    move |source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(file: &'static str) -> impl Fn(DecodeError) -> IndexError {
    move |e| IndexError::Corrupt {
        file,
        reason: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub mode: IndexMode,
    #[serde(flatten)]
    pub config: LexiconConfig,
    pub doc_count: u64,
    pub token_count: u64,
}

impl Manifest {
    pub fn new(mode: IndexMode, config: LexiconConfig, doc_count: u64, token_count: u64) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: FORMAT_VERSION,
            mode,
            config,
            doc_count,
            token_count,
        }
    }
}

/// Where a posting list lives in its family's data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListEntry {
    pub offset: u64,
    pub len: u64,
    pub count: u64,
}

pub(crate) trait FamilyKey: Sized + Eq + Hash + Ord + Clone {
    fn encode(&self, out: &mut Vec<u8>);
    fn decode(buf: &[u8], pos: &mut usize) -> Result<Self, DecodeError>;
}

impl FamilyKey for String {
    fn encode(&self, out: &mut Vec<u8>) {
        write_varint(out, self.len() as u64);
        out.extend_from_slice(self.as_bytes());
    }

    fn decode(buf: &[u8], pos: &mut usize) -> Result<Self, DecodeError> {
        let len = read_varint(buf, pos)? as usize;
        let end = pos.checked_add(len).filter(|&e| e <= buf.len()).ok_or(DecodeError::Truncated(*pos))?;
        let s = std::str::from_utf8(&buf[*pos..end]).map_err(|_| DecodeError::Invalid("key is not UTF-8"))?;
        *pos = end;
        Ok(s.to_string())
    }
}

impl FamilyKey for TwoKey {
    fn encode(&self, out: &mut Vec<u8>) {
        write_varint(out, self.w as u64);
        write_varint(out, self.v as u64);
    }

    fn decode(buf: &[u8], pos: &mut usize) -> Result<Self, DecodeError> {
        Ok(TwoKey {
            w: read_u32(buf, pos)?,
            v: read_u32(buf, pos)?,
        })
    }
}

impl FamilyKey for ThreeKey {
    fn encode(&self, out: &mut Vec<u8>) {
        write_varint(out, self.f as u64);
        write_varint(out, self.s as u64);
        write_varint(out, self.t as u64);
    }

    fn decode(buf: &[u8], pos: &mut usize) -> Result<Self, DecodeError> {
        Ok(ThreeKey {
            f: read_u32(buf, pos)?,
            s: read_u32(buf, pos)?,
            t: read_u32(buf, pos)?,
        })
    }
}

/// One index family: a key dictionary over a concatenated data buffer.
#[derive(Debug, Clone)]
pub(crate) struct Family<K> {
    entries: HashMap<K, ListEntry>,
    dict: Vec<u8>,
    data: Vec<u8>,
}

impl<K: FamilyKey> Family<K> {
    /// `lists` must be sorted by key.
    pub(crate) fn from_sorted_lists(lists: Vec<(K, Vec<u8>, u64)>) -> Self {
        let mut dict = Vec::new();
        let mut data = Vec::new();
        let mut entries = HashMap::with_capacity(lists.len());
        write_varint(&mut dict, lists.len() as u64);
        for (key, bytes, count) in lists {
            let entry = ListEntry {
                offset: data.len() as u64,
                len: bytes.len() as u64,
                count,
            };
            data.extend_from_slice(&bytes);
            key.encode(&mut dict);
            write_varint(&mut dict, entry.offset);
            write_varint(&mut dict, entry.len);
            write_varint(&mut dict, entry.count);
            entries.insert(key, entry);
        }
        Self { entries, dict, data }
    }

    fn from_bytes(dict: Vec<u8>, data: Vec<u8>, file: &'static str) -> Result<Self, IndexError> {
        let err = corrupt(file);
        let mut pos = 0;
        let n = read_varint(&dict, &mut pos).map_err(&err)?;
        let mut entries = HashMap::with_capacity(n.min(1 << 20) as usize);
        let mut prev: Option<K> = None;
        for _ in 0..n {
            let key = K::decode(&dict, &mut pos).map_err(&err)?;
            let entry = ListEntry {
                offset: read_varint(&dict, &mut pos).map_err(&err)?,
                len: read_varint(&dict, &mut pos).map_err(&err)?,
                count: read_varint(&dict, &mut pos).map_err(&err)?,
            };
            if entry.offset.checked_add(entry.len).is_none_or(|end| end > data.len() as u64) {
                return Err(IndexError::Corrupt {
                    file,
                    reason: "list extends past end of data".into(),
                });
            }
            if prev.as_ref().is_some_and(|p| *p >= key) {
                return Err(IndexError::Corrupt {
                    file,
                    reason: "dictionary keys out of order".into(),
                });
            }
            prev = Some(key.clone());
            entries.insert(key, entry);
        }
        if pos != dict.len() {
            return Err(IndexError::Corrupt {
                file,
                reason: "trailing bytes in dictionary".into(),
            });
        }
        Ok(Self { entries, dict, data })
    }

    fn get<Q>(&self, key: &Q) -> Option<(ListEntry, &[u8])>
    where
        K: std::borrow::Borrow<Q>,
        Q: Hash + Eq + ?Sized,
    {
        self.entries.get(key).map(|&e| {
            let start = e.offset as usize;
            (e, &self.data[start..start + e.len as usize])
        })
    }

    fn stats(&self) -> FamilyStats {
        FamilyStats {
            keys: self.entries.len() as u64,
            postings: self.entries.values().map(|e| e.count).sum(),
            dict_bytes: self.dict.len() as u64,
            data_bytes: self.data.len() as u64,
        }
    }

    pub(crate) fn keys(&self) -> impl Iterator<Item = &K> {
        self.entries.keys()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyStats {
    pub keys: u64,
    pub postings: u64,
    pub dict_bytes: u64,
    pub data_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexStats {
    pub mode: IndexMode,
    pub config: LexiconConfig,
    pub docs: u64,
    pub tokens: u64,
    pub lemma_classes: ClassSizes,
    pub ordinary: FamilyStats,
    pub nsw: Option<FamilyStats>,
    pub two_key: Option<FamilyStats>,
    pub three_key: Option<FamilyStats>,
}

/// Storage-level read counters. A list counts fully when it is opened, the
/// way a whole posting list is fetched from disk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadStats {
    pub lists_opened: u64,
    pub bytes_read: u64,
    pub postings_read: u64,
}

impl ReadStats {
    pub fn add(&mut self, other: &ReadStats) {
        self.lists_opened += other.lists_opened;
        self.bytes_read += other.bytes_read;
        self.postings_read += other.postings_read;
    }
}

/// Encoded posting list plus, optionally, its aligned NSW stream.
#[derive(Debug, Clone, Copy)]
pub struct ListHandle<'a> {
    pub postings: &'a [u8],
    pub count: u64,
    pub nsw: Option<&'a [u8]>,
}

/// An immutable, fully loaded index.
#[derive(Debug, Clone)]
pub struct Index {
    manifest: Manifest,
    lexicon: Lexicon,
    doc_lens: Vec<u32>,
    ordinary: Family<String>,
    nsw: Option<Family<String>>,
    two_key: Option<Family<TwoKey>>,
    three_key: Option<Family<ThreeKey>>,
}

impl Index {
    pub(crate) fn from_parts(
        manifest: Manifest,
        lexicon: Lexicon,
        doc_lens: Vec<u32>,
        ordinary: Family<String>,
        nsw: Option<Family<String>>,
        two_key: Option<Family<TwoKey>>,
        three_key: Option<Family<ThreeKey>>,
    ) -> Self {
        Self {
            manifest,
            lexicon,
            doc_lens,
            ordinary,
            nsw,
            two_key,
            three_key,
        }
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn mode(&self) -> IndexMode {
        self.manifest.mode
    }

    pub fn config(&self) -> &LexiconConfig {
        &self.manifest.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn doc_count(&self) -> u32 {
        self.doc_lens.len() as u32
    }

    /// Number of word positions in `doc_id`.
    pub fn doc_len(&self, doc_id: u32) -> u32 {
        self.doc_lens.get(doc_id as usize).copied().unwrap_or(0)
    }

    /// Opens the ordinary list of `lemma`. The NSW stream is read only when
    /// requested and available.
    pub fn ordinary_list(&self, lemma: &str, with_nsw: bool, stats: &mut ReadStats) -> Option<ListHandle<'_>> {
        let (entry, postings) = self.ordinary.get(lemma)?;
        stats.lists_opened += 1;
        stats.bytes_read += entry.len;
        stats.postings_read += entry.count;
        let nsw = if with_nsw {
            self.nsw.as_ref().and_then(|f| f.get(lemma)).map(|(e, bytes)| {
                stats.bytes_read += e.len;
                bytes
            })
        } else {
            None
        };
        Some(ListHandle {
            postings,
            count: entry.count,
            nsw,
        })
    }

    pub fn has_nsw(&self) -> bool {
        self.nsw.is_some()
    }

    pub fn two_key_list(&self, key: &TwoKey, stats: &mut ReadStats) -> Option<ListHandle<'_>> {
        let (entry, postings) = self.two_key.as_ref()?.get(key)?;
        stats.lists_opened += 1;
        stats.bytes_read += entry.len;
        stats.postings_read += entry.count;
        Some(ListHandle {
            postings,
            count: entry.count,
            nsw: None,
        })
    }

    pub fn three_key_list(&self, key: &ThreeKey, stats: &mut ReadStats) -> Option<ListHandle<'_>> {
        let (entry, postings) = self.three_key.as_ref()?.get(key)?;
        stats.lists_opened += 1;
        stats.bytes_read += entry.len;
        stats.postings_read += entry.count;
        Some(ListHandle {
            postings,
            count: entry.count,
            nsw: None,
        })
    }

    /// All three-component keys, sorted.
    pub fn three_keys(&self) -> Vec<ThreeKey> {
        let mut keys: Vec<ThreeKey> = self.three_key.iter().flat_map(|f| f.keys().copied()).collect();
        keys.sort_unstable();
        keys
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            mode: self.manifest.mode,
            config: self.manifest.config,
            docs: self.manifest.doc_count,
            tokens: self.manifest.token_count,
            lemma_classes: self.lexicon.fl_list.class_sizes(),
            ordinary: self.ordinary.stats(),
            nsw: self.nsw.as_ref().map(Family::stats),
            two_key: self.two_key.as_ref().map(Family::stats),
            three_key: self.three_key.as_ref().map(Family::stats),
        }
    }

    /// Files making up this index, as `(name, bytes)` in a fixed order.
    pub fn files(&self) -> Result<Vec<(&'static str, Vec<u8>)>, IndexError> {
        let mut files = Vec::new();
        let mut manifest = serde_json::to_vec_pretty(&self.manifest)?;
        manifest.push(b'\n');
        files.push(("manifest.json", manifest));
        let mut fl = Vec::new();
        self.lexicon.fl_list.write_to(&mut fl).expect("write to Vec");
        files.push(("fl_list.tsv", fl));
        let mut dict = Vec::new();
        self.lexicon.dictionary.write_to(&mut dict).expect("write to Vec");
        files.push(("lemmas.dict", dict));
        let mut lens = Vec::new();
        write_varint(&mut lens, self.doc_lens.len() as u64);
        for &l in &self.doc_lens {
            write_varint(&mut lens, l as u64);
        }
        files.push(("doclens.bin", lens));
        files.push(("ordinary.dict", self.ordinary.dict.clone()));
        files.push(("ordinary.post", self.ordinary.data.clone()));
        if let Some(nsw) = &self.nsw {
            files.push(("ordinary.nswdict", nsw.dict.clone()));
            files.push(("ordinary.nsw", nsw.data.clone()));
        }
        if let Some(f) = &self.two_key {
            files.push(("two_key.dict", f.dict.clone()));
            files.push(("two_key.post", f.data.clone()));
        }
        if let Some(f) = &self.three_key {
            files.push(("three_key.dict", f.dict.clone()));
            files.push(("three_key.post", f.data.clone()));
        }
        Ok(files)
    }

    /// Writes the index into `dir`, creating it if needed. An existing index
    /// there is replaced only when `overwrite` is set.
    pub fn write(&self, dir: &Path, overwrite: bool) -> Result<(), IndexError> {
        let manifest_path = dir.join("manifest.json");
        if manifest_path.exists() {
            if !overwrite {
                return Err(IndexError::Exists(dir.to_path_buf()));
            }
            for name in OPTIONAL_FILES {
                let p = dir.join(name);
                if p.exists() {
                    fs::remove_file(&p).map_err(io_err(&p))?;
                }
            }
        }
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, bytes) in self.files()? {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io_err(&path))?;
        }
        Ok(())
    }

    pub fn open(dir: &Path) -> Result<Self, IndexError> {
        let read = |name: &str| -> Result<Vec<u8>, IndexError> {
            let path = dir.join(name);
            fs::read(&path).map_err(io_err(&path))
        };
        let read_opt = |name: &str| -> Result<Option<Vec<u8>>, IndexError> {
            let path = dir.join(name);
            match fs::read(&path) {
                Ok(b) => Ok(Some(b)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(IndexError::Io { path, source }),
            }
        };

        let manifest: Manifest = serde_json::from_slice(&read("manifest.json")?)?;
        if manifest.format != FORMAT || manifest.version != FORMAT_VERSION {
            return Err(IndexError::Corrupt {
                file: "manifest.json",
                reason: format!("unsupported format {} v{}", manifest.format, manifest.version),
            });
        }
        let fl_list = FlList::read_from(&read("fl_list.tsv")?[..], manifest.config)?;
        let dictionary = LemmaDictionary::read_from(&read("lemmas.dict")?[..])?;

        let lens = read("doclens.bin")?;
        let mut pos = 0;
        let err = corrupt("doclens.bin");
        let n = read_varint(&lens, &mut pos).map_err(&err)?;
        let doc_lens = (0..n)
            .map(|_| read_u32(&lens, &mut pos))
            .collect::<Result<Vec<u32>, _>>()
            .map_err(&err)?;
        if doc_lens.len() as u64 != manifest.doc_count {
            return Err(IndexError::Corrupt {
                file: "doclens.bin",
                reason: "document count disagrees with manifest".into(),
            });
        }

        let ordinary = Family::from_bytes(read("ordinary.dict")?, read("ordinary.post")?, "ordinary.dict")?;
        let (nsw, two_key, three_key) = match manifest.mode {
            IndexMode::Idx1 => (None, None, None),
            IndexMode::Full => {
                let nsw = Family::from_bytes(read("ordinary.nswdict")?, read("ordinary.nsw")?, "ordinary.nswdict")?;
                let two = Family::from_bytes(read("two_key.dict")?, read("two_key.post")?, "two_key.dict")?;
                let three = Family::from_bytes(read("three_key.dict")?, read("three_key.post")?, "three_key.dict")?;
                (Some(nsw), Some(two), Some(three))
            }
        };
        if manifest.mode == IndexMode::Idx1 && read_opt("three_key.dict")?.is_some() {
            return Err(IndexError::Corrupt {
                file: "three_key.dict",
                reason: "composite family present in an idx1 index".into(),
            });
        }
        Ok(Self {
            manifest,
            lexicon: Lexicon::new(dictionary, fl_list),
            doc_lens,
            ordinary,
            nsw,
            two_key,
            three_key,
        })
    }
}

const OPTIONAL_FILES: [&str; 6] = [
    "ordinary.nswdict",
    "ordinary.nsw",
    "two_key.dict",
    "two_key.post",
    "three_key.dict",
    "three_key.post",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::codec::decode_postings;
    use crate::index::{IndexBuilder, Posting};

    fn toy_index(mode: IndexMode) -> Index {
        let docs = ["who are you who", "the who are here", "you are who you are"];
        let config = LexiconConfig {
            sw_count: 3,
            fu_count: 1,
            max_distance: 3,
            min_count: 1,
        };
        let lex = Lexicon::build(docs, config, LemmaDictionary::new()).unwrap();
        let mut b = IndexBuilder::new(lex, mode);
        for d in docs {
            b.add_document(d);
        }
        b.finish()
    }

    #[test]
    fn write_open_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy_index(IndexMode::Full);
        index.write(dir.path(), false).unwrap();
        let reopened = Index::open(dir.path()).unwrap();
        assert_eq!(reopened.stats(), index.stats());
        assert_eq!(reopened.files().unwrap(), index.files().unwrap());
        for key in index.three_keys() {
            let mut s = ReadStats::default();
            let a = index.three_key_list(&key, &mut s).unwrap();
            let b = reopened.three_key_list(&key, &mut s).unwrap();
            assert_eq!(a.postings, b.postings);
        }
    }

    #[test]
    fn refuses_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy_index(IndexMode::Full);
        index.write(dir.path(), false).unwrap();
        assert!(matches!(index.write(dir.path(), false), Err(IndexError::Exists(_))));
        toy_index(IndexMode::Idx1).write(dir.path(), true).unwrap();
        assert!(!dir.path().join("three_key.dict").exists());
        assert_eq!(Index::open(dir.path()).unwrap().mode(), IndexMode::Idx1);
    }

    #[test]
    fn idx1_has_no_composite_files() {
        let index = toy_index(IndexMode::Idx1);
        let names: Vec<&str> = index.files().unwrap().into_iter().map(|(n, _)| n).collect();
        assert!(!names.iter().any(|n| n.starts_with("two_key") || n.starts_with("three_key") || n.contains("nsw")));
        assert_eq!(index.stats().three_key, None);
    }

    #[test]
    fn read_counters() {
        let index = toy_index(IndexMode::Idx1);
        let mut stats = ReadStats::default();
        let h = index.ordinary_list("who", false, &mut stats).unwrap();
        assert_eq!(h.count, 4);
        assert_eq!(stats.postings_read, 4);
        assert_eq!(stats.bytes_read, h.postings.len() as u64);
        let list = decode_postings(h.postings, h.count).unwrap();
        assert_eq!(
            list,
            vec![Posting::new(0, 0), Posting::new(0, 3), Posting::new(1, 1), Posting::new(2, 2)]
        );
        assert!(index.ordinary_list("missing", false, &mut stats).is_none());
        assert_eq!(stats.lists_opened, 1);
    }

    #[test]
    fn open_missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Index::open(dir.path()), Err(IndexError::Io { .. })));
    }

    #[test]
    fn corrupt_dictionary_detected() {
        let dir = tempfile::tempdir().unwrap();
        toy_index(IndexMode::Idx1).write(dir.path(), false).unwrap();
        let path = dir.path().join("ordinary.dict");
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 1);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(Index::open(dir.path()), Err(IndexError::Corrupt { .. })));
    }
}
