//! Tokenization, dictionary lemmatization and the frequency-ranked lemma list.
//!
//! Every lemma of the corpus is ranked by decreasing occurrence count. The
//! rank (1-based) is the lemma's FL-number; the first `sw_count` ranks are
//! stop lemmas, the next `fu_count` ranks are frequently used lemmas and the
//! rest are ordinary. Lemmas seen fewer than `min_count` times are not ranked
//! at all and carry [`FlNumber::Rare`].

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("corpus contains no tokens; cannot compute lemma statistics")]
    EmptyCorpus,
    #[error("invalid lexicon config: {0}")]
    InvalidConfig(&'static str),
    #[error("malformed line {line} in {what}: {reason}")]
    Malformed {
        what: &'static str,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A word occurrence in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub position: u32,
}

/// Splits text into maximal alphanumeric runs, lowercased, numbered from 0.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .enumerate()
        .map(|(i, w)| Token {
            text: w.to_lowercase(),
            position: i as u32,
        })
        .collect()
}

/// Word → lemma alternatives. Words missing from the dictionary are their own
/// lemma.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaDictionary {
    entries: HashMap<String, Vec<String>>,
}

impl LemmaDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) the lemma alternatives of `word`. Order is kept,
    /// duplicates and empty strings are dropped.
    pub fn insert<I, S>(&mut self, word: &str, lemmas: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list: Vec<String> = Vec::new();
        for lemma in lemmas {
            let lemma = lemma.into().trim().to_lowercase();
            if !lemma.is_empty() && !list.contains(&lemma) {
                list.push(lemma);
            }
        }
        if !list.is_empty() {
            self.entries.insert(word.to_lowercase(), list);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns every lemma of `word` in dictionary order; never empty.
    pub fn lemmatize(&self, word: &str) -> Vec<String> {
        match self.entries.get(word) {
            Some(lemmas) => lemmas.clone(),
            None => vec![word.to_string()],
        }
    }

    /// Parses `word<TAB>lemma1,lemma2,...` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut dict = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (word, lemmas) = trimmed.split_once('\t').ok_or_else(|| LexiconError::Malformed {
                what: "lemma dictionary",
                line: idx + 1,
                reason: "expected word<TAB>lemmas".into(),
            })?;
            let word = word.trim();
            if word.is_empty() {
                return Err(LexiconError::Malformed {
                    what: "lemma dictionary",
                    line: idx + 1,
                    reason: "empty word".into(),
                });
            }
            dict.insert(word, lemmas.split(','));
        }
        Ok(dict)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// Writes the dictionary sorted by word.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut words: Vec<&String> = self.entries.keys().collect();
        words.sort();
        for word in words {
            writeln!(out, "{}\t{}", word, self.entries[word].join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconConfig {
    pub sw_count: u32,
    pub fu_count: u32,
    pub max_distance: u32,
    /// Lemmas occurring fewer times than this are left unranked.
    pub min_count: u64,
}

impl Default for LexiconConfig {
    fn default() -> Self {
        Self {
            sw_count: 700,
            fu_count: 2100,
            max_distance: 5,
            min_count: 2,
        }
    }
}

impl LexiconConfig {
    pub fn validate(&self) -> Result<(), LexiconError> {
        if self.sw_count < 1 {
            return Err(LexiconError::InvalidConfig("sw_count must be at least 1"));
        }
        if self.max_distance < 1 {
            return Err(LexiconError::InvalidConfig("max_distance must be at least 1"));
        }
        Ok(())
    }

    pub fn class_of(&self, fl: FlNumber) -> LemmaClass {
        match fl {
            FlNumber::Rank(r) if r <= self.sw_count => LemmaClass::Stop,
            FlNumber::Rank(r) if (r as u64) <= self.sw_count as u64 + self.fu_count as u64 => {
                LemmaClass::FrequentlyUsed
            }
            _ => LemmaClass::Ordinary,
        }
    }
}

/// Position of a lemma in the frequency-ranked list. `Rare` sorts after every
/// rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlNumber {
    Rank(u32),
    Rare,
}

impl FlNumber {
    pub fn rank(self) -> Option<u32> {
        match self {
            FlNumber::Rank(r) => Some(r),
            FlNumber::Rare => None,
        }
    }
}

impl fmt::Display for FlNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlNumber::Rank(r) => write!(f, "{r}"),
            FlNumber::Rare => f.write_str("RARE"),
        }
    }
}

impl FromStr for FlNumber {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "RARE" || s == "~" {
            return Ok(FlNumber::Rare);
        }
        match s.parse::<u32>() {
            Ok(0) => Err("FL-number must be positive".into()),
            Ok(r) => Ok(FlNumber::Rank(r)),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LemmaClass {
    Stop,
    FrequentlyUsed,
    Ordinary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaEntry {
    pub lemma: String,
    pub count: u64,
    pub fl_number: FlNumber,
    pub class: LemmaClass,
}

/// All known lemmas in FL order (ranked lemmas first, then rare ones).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlList {
    config: LexiconConfig,
    entries: Vec<LemmaEntry>,
    by_lemma: HashMap<String, usize>,
    by_rank: HashMap<u32, usize>,
}

impl FlList {
    /// Counts lemma occurrences over `documents` and ranks them. A word with
    /// several lemmas counts once toward each. Equal counts rank in
    /// lexicographic lemma order.
    pub fn build<'a, I>(
        documents: I,
        config: LexiconConfig,
        dictionary: &LemmaDictionary,
    ) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        config.validate()?;
        let mut word_lemmas: HashMap<String, Vec<String>> = HashMap::new();
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in documents {
            for token in tokenize(doc) {
                let lemmas = word_lemmas
                    .entry(token.text)
                    .or_insert_with_key(|w| dictionary.lemmatize(w));
                for lemma in lemmas.iter() {
                    *counts.entry(lemma.clone()).or_insert(0) += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(LexiconError::EmptyCorpus);
        }
        Ok(Self::from_counts(counts, config))
    }

    /// Ranks precomputed lemma counts.
    pub fn from_counts<I>(counts: I, config: LexiconConfig) -> Self
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let mut sorted: Vec<(String, u64)> = counts.into_iter().collect();
        sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let entries = sorted
            .into_iter()
            .enumerate()
            .map(|(i, (lemma, count))| {
                let fl_number = if count >= config.min_count {
                    FlNumber::Rank(i as u32 + 1)
                } else {
                    FlNumber::Rare
                };
                LemmaEntry {
                    lemma,
                    count,
                    fl_number,
                    class: config.class_of(fl_number),
                }
            })
            .collect();
        Self::from_entries_unchecked(entries, config)
    }

    /// Builds a list from externally assigned FL-numbers (for instance a
    /// table computed over a different corpus). Classes are derived from
    /// `config`; counts are zero.
    pub fn from_assigned<I, S>(assigned: I, config: LexiconConfig) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, FlNumber)>,
        S: Into<String>,
    {
        config.validate()?;
        let mut entries: Vec<LemmaEntry> = assigned
            .into_iter()
            .map(|(lemma, fl_number)| LemmaEntry {
                lemma: lemma.into(),
                count: 0,
                fl_number,
                class: config.class_of(fl_number),
            })
            .collect();
        entries.sort_by(|a, b| a.fl_number.cmp(&b.fl_number).then_with(|| a.lemma.cmp(&b.lemma)));
        let list = Self::from_entries_unchecked(entries, config);
        if list.by_lemma.len() != list.entries.len() {
            return Err(LexiconError::InvalidConfig("duplicate lemma in FL table"));
        }
        if list.by_rank.len() != list.entries.iter().filter(|e| e.fl_number != FlNumber::Rare).count() {
            return Err(LexiconError::InvalidConfig("duplicate FL-number in FL table"));
        }
        Ok(list)
    }

    fn from_entries_unchecked(entries: Vec<LemmaEntry>, config: LexiconConfig) -> Self {
        let by_lemma = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.lemma.clone(), i))
            .collect();
        let by_rank = entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.fl_number.rank().map(|r| (r, i)))
            .collect();
        Self {
            config,
            entries,
            by_lemma,
            by_rank,
        }
    }

    pub fn config(&self) -> &LexiconConfig {
        &self.config
    }

    pub fn entries(&self) -> &[LemmaEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense index of `lemma` in [`FlList::entries`].
    pub fn index_of(&self, lemma: &str) -> Option<usize> {
        self.by_lemma.get(lemma).copied()
    }

    pub fn entry(&self, index: usize) -> &LemmaEntry {
        &self.entries[index]
    }

    pub fn by_rank(&self, rank: u32) -> Option<&LemmaEntry> {
        self.by_rank.get(&rank).map(|&i| &self.entries[i])
    }

    /// Unknown lemmas are ordinary and unranked.
    pub fn classify(&self, lemma: &str) -> LemmaEntry {
        match self.index_of(lemma) {
            Some(i) => self.entries[i].clone(),
            None => LemmaEntry {
                lemma: lemma.to_string(),
                count: 0,
                fl_number: FlNumber::Rare,
                class: LemmaClass::Ordinary,
            },
        }
    }

    /// Number of lemmas in each class.
    pub fn class_sizes(&self) -> ClassSizes {
        let mut sizes = ClassSizes::default();
        for e in &self.entries {
            match e.class {
                LemmaClass::Stop => sizes.stop += 1,
                LemmaClass::FrequentlyUsed => sizes.frequently_used += 1,
                LemmaClass::Ordinary => sizes.ordinary += 1,
            }
            if e.fl_number == FlNumber::Rare {
                sizes.rare += 1;
            }
        }
        sizes
    }

    /// `lemma<TAB>count<TAB>fl_number` per line in FL order.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.entries {
            writeln!(out, "{}\t{}\t{}", e.lemma, e.count, e.fl_number)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, config: LexiconConfig) -> Result<Self, LexiconError> {
        config.validate()?;
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: String| LexiconError::Malformed {
                what: "FL-list",
                line: idx + 1,
                reason,
            };
            let mut parts = line.split('\t');
            let (Some(lemma), Some(count), Some(fl), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(malformed("expected lemma<TAB>count<TAB>fl_number".into()));
            };
            let count: u64 = count.parse().map_err(|e| malformed(format!("count: {e}")))?;
            let fl_number: FlNumber = fl.parse().map_err(|e| malformed(format!("fl_number: {e}")))?;
            entries.push(LemmaEntry {
                lemma: lemma.to_string(),
                count,
                fl_number,
                class: config.class_of(fl_number),
            });
        }
        Ok(Self::from_entries_unchecked(entries, config))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSizes {
    pub stop: usize,
    pub frequently_used: usize,
    pub ordinary: usize,
    pub rare: usize,
}

/// One lemma of one word occurrence, resolved against the FL-list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub pos: u32,
    /// Index into [`FlList::entries`].
    pub lemma: u32,
}

/// A document reduced to lemma occurrences, sorted by position then lemma.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmatizedDoc {
    pub occurrences: Vec<Occurrence>,
    /// Number of word positions in the document.
    pub len: u32,
}

impl LemmatizedDoc {
    pub fn last_position(&self) -> u32 {
        self.len.saturating_sub(1)
    }
}

/// Dictionary plus FL-list: everything needed to turn text into classified
/// lemmas.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub dictionary: LemmaDictionary,
    pub fl_list: FlList,
}

impl Lexicon {
    pub fn new(dictionary: LemmaDictionary, fl_list: FlList) -> Self {
        Self {
            dictionary,
            fl_list,
        }
    }

    /// Builds the FL-list from `documents` and pairs it with `dictionary`.
    pub fn build<'a, I>(
        documents: I,
        config: LexiconConfig,
        dictionary: LemmaDictionary,
    ) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let fl_list = FlList::build(documents, config, &dictionary)?;
        Ok(Self::new(dictionary, fl_list))
    }

    pub fn config(&self) -> &LexiconConfig {
        self.fl_list.config()
    }

    pub fn lemmatize(&self, word: &str) -> Vec<String> {
        self.dictionary.lemmatize(word)
    }

    /// Lemmas absent from the FL-list are dropped; with a list built from the
    /// same corpus this never happens.
    pub fn lemmatize_document(&self, text: &str) -> LemmatizedDoc {
        let tokens = tokenize(text);
        let mut occurrences = Vec::with_capacity(tokens.len());
        for token in &tokens {
            let start = occurrences.len();
            for lemma in self.dictionary.lemmatize(&token.text) {
                if let Some(i) = self.fl_list.index_of(&lemma) {
                    occurrences.push(Occurrence {
                        pos: token.position,
                        lemma: i as u32,
                    });
                }
            }
            occurrences[start..].sort_unstable();
        }
        LemmatizedDoc {
            occurrences,
            len: tokens.len() as u32,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict(lines: &str) -> LemmaDictionary {
        LemmaDictionary::read_from(lines.as_bytes()).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        let toks = tokenize("All was fresh");
        let got: Vec<(&str, u32)> = toks.iter().map(|t| (t.text.as_str(), t.position)).collect();
        assert_eq!(got, vec![("all", 0), ("was", 1), ("fresh", 2)]);
        assert!(tokenize("").is_empty());
        let got: Vec<String> = tokenize("Who are You").into_iter().map(|t| t.text).collect();
        assert_eq!(got, vec!["who", "are", "you"]);
    }

    #[test]
    fn tokenize_separators_and_digits() {
        let got: Vec<String> = tokenize("it's 2nd--time, ok?").into_iter().map(|t| t.text).collect();
        assert_eq!(got, vec!["it", "s", "2nd", "time", "ok"]);
    }

    #[test]
    fn lemmatize_dictionary_and_fallback() {
        let d = dict("tinged\tting,tinge\nmine\tmine,my\n");
        assert_eq!(d.lemmatize("tinged"), vec!["ting", "tinge"]);
        assert_eq!(d.lemmatize("mine"), vec!["mine", "my"]);
        assert_eq!(d.lemmatize("zzyzx"), vec!["zzyzx"]);
    }

    #[test]
    fn dictionary_rejects_missing_tab() {
        let err = LemmaDictionary::read_from("word lemma\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::Malformed { line: 1, .. }));
    }

    #[test]
    fn dictionary_round_trip() {
        let d = dict("# comment\nb\tx,y\na\tz\n\n");
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a\tz\nb\tx,y\n");
        assert_eq!(LemmaDictionary::read_from(&buf[..]).unwrap(), d);
    }

    #[test]
    fn fl_list_empty_corpus() {
        let err = FlList::build(Vec::<&str>::new(), LexiconConfig::default(), &LemmaDictionary::new());
        assert!(matches!(err, Err(LexiconError::EmptyCorpus)));
        let err = FlList::build(["  ,, "], LexiconConfig::default(), &LemmaDictionary::new());
        assert!(matches!(err, Err(LexiconError::EmptyCorpus)));
    }

    #[test]
    fn fl_list_three_lemma_toy_corpus() {
        // a ×3, b ×2, c ×2 → ranks a=1, b=2, c=3 (b before c by lemma order).
        let config = LexiconConfig {
            sw_count: 1,
            fu_count: 1,
            max_distance: 5,
            min_count: 1,
        };
        let fl = FlList::build(["a b c", "a c b a"], config, &LemmaDictionary::new()).unwrap();
        let a = fl.classify("a");
        let b = fl.classify("b");
        let c = fl.classify("c");
        assert_eq!((a.fl_number, a.class), (FlNumber::Rank(1), LemmaClass::Stop));
        assert_eq!((b.fl_number, b.class), (FlNumber::Rank(2), LemmaClass::FrequentlyUsed));
        assert_eq!((c.fl_number, c.class), (FlNumber::Rank(3), LemmaClass::Ordinary));
    }

    #[test]
    fn most_frequent_lemma_ranks_first() {
        let text = "the cat and the dog saw the bird";
        let fl = FlList::build([text], LexiconConfig::default(), &LemmaDictionary::new()).unwrap();
        let the = fl.classify("the");
        assert_eq!(the.fl_number, FlNumber::Rank(1));
        assert_eq!(the.class, LemmaClass::Stop);
        // Everything else occurs once, below the default min_count of 2.
        assert_eq!(fl.classify("cat").fl_number, FlNumber::Rare);
    }

    #[test]
    fn multi_lemma_word_counts_for_each_lemma() {
        let d = dict("mine\tmine,my\n");
        let config = LexiconConfig {
            min_count: 1,
            ..LexiconConfig::default()
        };
        let fl = FlList::build(["mine my mine"], config, &d).unwrap();
        assert_eq!(fl.classify("my").count, 3);
        assert_eq!(fl.classify("mine").count, 2);
    }

    #[test]
    fn unknown_lemma_is_rare_ordinary() {
        let fl = FlList::build(["x x"], LexiconConfig::default(), &LemmaDictionary::new()).unwrap();
        let e = fl.classify("never");
        assert_eq!((e.fl_number, e.class), (FlNumber::Rare, LemmaClass::Ordinary));
    }

    #[test]
    fn assigned_table_classes() {
        let config = LexiconConfig::default();
        let fl = FlList::from_assigned(
            [
                ("be", FlNumber::Rank(21)),
                ("fresh", FlNumber::Rank(2667)),
                ("around", FlNumber::Rank(2177)),
                ("with", FlNumber::Rank(40)),
                ("familiar", FlNumber::Rare),
            ],
            config,
        )
        .unwrap();
        assert_eq!(fl.classify("be").class, LemmaClass::Stop);
        assert_eq!(fl.classify("fresh").class, LemmaClass::FrequentlyUsed);
        let around = fl.classify("around");
        assert_eq!((around.fl_number, around.class), (FlNumber::Rank(2177), LemmaClass::FrequentlyUsed));
        let with = fl.classify("with");
        assert_eq!((with.fl_number, with.class), (FlNumber::Rank(40), LemmaClass::Stop));
        assert_eq!(fl.classify("familiar").class, LemmaClass::Ordinary);
        assert_eq!(fl.by_rank(21).unwrap().lemma, "be");
    }

    #[test]
    fn assigned_table_rejects_duplicates() {
        let r = FlList::from_assigned([("a", FlNumber::Rank(1)), ("b", FlNumber::Rank(1))], LexiconConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn class_boundaries() {
        let c = LexiconConfig {
            sw_count: 700,
            fu_count: 2100,
            max_distance: 5,
            min_count: 2,
        };
        assert_eq!(c.class_of(FlNumber::Rank(700)), LemmaClass::Stop);
        assert_eq!(c.class_of(FlNumber::Rank(701)), LemmaClass::FrequentlyUsed);
        assert_eq!(c.class_of(FlNumber::Rank(2800)), LemmaClass::FrequentlyUsed);
        assert_eq!(c.class_of(FlNumber::Rank(2801)), LemmaClass::Ordinary);
        assert_eq!(c.class_of(FlNumber::Rare), LemmaClass::Ordinary);
    }

    #[test]
    fn invalid_config() {
        let bad = LexiconConfig {
            sw_count: 0,
            ..LexiconConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = LexiconConfig {
            max_distance: 0,
            ..LexiconConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fl_list_file_round_trip() {
        let config = LexiconConfig::default();
        let fl = FlList::build(["b a b c c c"], config, &LemmaDictionary::new()).unwrap();
        let mut buf = Vec::new();
        fl.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "c\t3\t1\nb\t2\t2\na\t1\tRARE\n");
        assert_eq!(FlList::read_from(&buf[..], config).unwrap(), fl);
    }

    #[test]
    fn lemmatized_document_orders_occurrences() {
        let d = dict("mine\tmy,mine\n");
        let lex = Lexicon::build(["mine mine x x"], LexiconConfig::default(), d).unwrap();
        let doc = lex.lemmatize_document("x mine");
        assert_eq!(doc.len, 2);
        assert_eq!(doc.occurrences.len(), 3);
        assert!(doc.occurrences.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(doc.occurrences[0].pos, 0);
    }
}
