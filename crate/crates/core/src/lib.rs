//! Proximity full-text search over lemmatized text.
//!
//! Lemmas are split by corpus frequency into stop, frequently-used and
//! ordinary classes. Besides plain per-lemma posting lists the index keeps
//! composite keys built from nearby frequent lemmas, which makes queries made
//! of common words cheap to answer within a bounded distance.

pub mod bench;
pub mod index;
pub mod lexicon;
pub mod merge;
pub mod oracle;
pub mod query;

pub use index::{Index, IndexBuilder, IndexError, IndexMode};
pub use lexicon::{FlList, FlNumber, LemmaClass, LemmaDictionary, Lexicon, LexiconConfig};
pub use query::{search, Fragment, QueryError, SearchResult};
