use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use proxsearch::bench::{self, BenchConfig, CorpusSpec, QuerySpec, Variant};
use proxsearch::index::{FamilyStats, IndexStats};
use proxsearch::{Index, IndexBuilder, IndexMode, LemmaDictionary, Lexicon, LexiconConfig, QueryError};

#[derive(Parser)]
#[command(name = "proxsearch", version, about = "Proximity full-text search with frequent-lemma key indexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index a directory of UTF-8 `.txt` documents.
    Build(BuildArgs),
    /// Run a query against an index.
    Search(SearchArgs),
    /// Print index statistics.
    Stats(StatsArgs),
    /// Compare Idx1 against full indexes at several distances.
    Bench(BenchArgs),
    /// Write a synthetic Zipf corpus.
    GenCorpus(GenArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Idx1,
    Full,
}

impl From<ModeArg> for IndexMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Idx1 => IndexMode::Idx1,
            ModeArg::Full => IndexMode::Full,
        }
    }
}

#[derive(Args)]
struct LexiconArgs {
    /// Number of stop lemmas (most frequent ranks).
    #[arg(long, default_value_t = 700, value_parser = clap::value_parser!(u32).range(1..))]
    sw_count: u32,
    /// Number of frequently used lemmas following the stop lemmas.
    #[arg(long, default_value_t = 2100)]
    fu_count: u32,
    /// Lemmas seen fewer times than this are unranked.
    #[arg(long, default_value_t = 2)]
    min_count: u64,
    /// Word-lemma dictionary: `word<TAB>lemma1,lemma2` per line.
    #[arg(long)]
    dict: Option<PathBuf>,
}

impl LexiconArgs {
    fn config(&self, max_distance: u32) -> LexiconConfig {
        LexiconConfig {
            sw_count: self.sw_count,
            fu_count: self.fu_count,
            max_distance,
            min_count: self.min_count,
        }
    }

    fn dictionary(&self) -> Result<LemmaDictionary> {
        match &self.dict {
            Some(p) => LemmaDictionary::load(p).with_context(|| format!("reading dictionary {}", p.display())),
            None => Ok(LemmaDictionary::new()),
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Directory of `.txt` documents; document ids follow file name order.
    #[arg(long)]
    corpus: PathBuf,
    /// Output index directory.
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    max_distance: u32,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Replace an existing index.
    #[arg(long)]
    overwrite: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    /// Print at most this many fragments.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Query words.
    #[arg(required = true, num_args = 1..)]
    query: Vec<String>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Query file, one query per line. Without it queries are generated.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Number of generated stop-lemma queries.
    #[arg(long, default_value_t = 200)]
    generate: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: u64,
    /// Distances for the full-index variants.
    #[arg(long, value_delimiter = ',', default_values_t = vec![5u32, 7, 9])]
    max_distances: Vec<u32>,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Also write the report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    docs: usize,
    #[arg(long, default_value_t = 10_000)]
    vocab: usize,
    #[arg(long, default_value_t = 1.0)]
    zipf: f64,
    #[arg(long, default_value_t = 200)]
    doc_len: usize,
    /// Share of words given a second lemma; writes `lemmas.dict` when > 0.
    #[arg(long, default_value_t = 0.0)]
    ambiguous: f64,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Operational(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Operational(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Search(a) => cmd_search(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Bench(a) => cmd_bench(a),
        Command::GenCorpus(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Operational(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_corpus(dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading corpus directory {}", dir.display()))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e.with_context(|| format!("listing {}", dir.display()))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "txt") {
            paths.push(p);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading document {}", p.display())))
        .collect()
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn family_rows(stats: &IndexStats) -> Vec<(&'static str, FamilyStats)> {
    let mut rows = vec![("ordinary", stats.ordinary)];
    rows.extend(stats.nsw.map(|f| ("nsw", f)));
    rows.extend(stats.two_key.map(|f| ("two_key", f)));
    rows.extend(stats.three_key.map(|f| ("three_key", f)));
    rows
}

fn print_stats_text(stats: &IndexStats) {
    let c = &stats.config;
    println!("mode\t{}", stats.mode);
    println!("max_distance\t{}", c.max_distance);
    println!("sw_count\t{}\nfu_count\t{}\nmin_count\t{}", c.sw_count, c.fu_count, c.min_count);
    println!("documents\t{}\ntokens\t{}", stats.docs, stats.tokens);
    let l = &stats.lemma_classes;
    println!(
        "lemmas\tstop={} frequently_used={} ordinary={} rare={}",
        l.stop, l.frequently_used, l.ordinary, l.rare
    );
    println!("family\tkeys\tpostings\tdict_bytes\tdata_bytes");
    for (name, f) in family_rows(stats) {
        println!("{name}\t{}\t{}\t{}\t{}", f.keys, f.postings, f.dict_bytes, f.data_bytes);
    }
}

fn cmd_build(a: BuildArgs) -> Result<(), Failure> {
    if a.index.join("manifest.json").exists() && !a.overwrite {
        return Err(anyhow::anyhow!("index already exists at {} (pass --overwrite)", a.index.display()).into());
    }
    let docs = read_corpus(&a.corpus)?;
    let dict = a.lexicon.dictionary()?;
    let config = a.lexicon.config(a.max_distance);
    let lexicon = Lexicon::build(docs.iter().map(String::as_str), config, dict)
        .with_context(|| format!("building FL-list from {}", a.corpus.display()))?;
    let mut builder = IndexBuilder::new(lexicon, a.mode.into());
    for d in &docs {
        builder.add_document(d);
    }
    let index = builder.finish();
    index.write(&a.index, a.overwrite).context("writing index")?;
    let stats = index.stats();
    match a.format {
        Format::Json => print_json(&stats)?,
        Format::Text => print_stats_text(&stats),
    }
    Ok(())
}

#[derive(Serialize)]
struct SearchOutput<'a> {
    query: String,
    subqueries: usize,
    documents: usize,
    fragments: &'a [proxsearch::Fragment],
    stats: proxsearch::index::ReadStats,
}

fn cmd_search(a: SearchArgs) -> Result<(), Failure> {
    let index = Index::open(&a.index).with_context(|| format!("opening index {}", a.index.display()))?;
    let query = a.query.join(" ");
    let result = match proxsearch::search(&index, &query) {
        Ok(r) => r,
        Err(e @ (QueryError::Empty | QueryError::TooLong { .. } | QueryError::UnsupportedLength { .. })) => {
            return Err(Failure::Usage(e.to_string()))
        }
        Err(e) => return Err(anyhow::Error::new(e).into()),
    };
    let shown = &result.fragments[..a.limit.unwrap_or(usize::MAX).min(result.fragments.len())];
    match a.format {
        Format::Json => print_json(&SearchOutput {
            query,
            subqueries: result.subqueries.len(),
            documents: result.documents().len(),
            fragments: shown,
            stats: result.stats,
        })?,
        Format::Text => {
            for f in shown {
                println!("{}\t{}\t{}\t{}", f.doc_id, f.start, f.end, f.relevance);
            }
        }
    }
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<(), Failure> {
    let index = Index::open(&a.index).with_context(|| format!("opening index {}", a.index.display()))?;
    let stats = index.stats();
    match a.format {
        Format::Json => print_json(&stats)?,
        Format::Text => print_stats_text(&stats),
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let docs = read_corpus(&a.corpus)?;
    let dict = a.lexicon.dictionary()?;
    let queries = match &a.queries {
        Some(p) => fs::read_to_string(p)
            .with_context(|| format!("reading query file {}", p.display()))?
            .lines()
            .map(str::to_string)
            .collect(),
        None => {
            let lexicon = Lexicon::build(docs.iter().map(String::as_str), a.lexicon.config(5), dict.clone())
                .context("building FL-list")?;
            bench::generate_queries(&lexicon, &QuerySpec::stop_only(a.seed, a.generate))
        }
    };
    let mut variants = vec![Variant {
        name: "Idx1".into(),
        mode: IndexMode::Idx1,
        max_distance: 5,
    }];
    for (i, &md) in a.max_distances.iter().enumerate() {
        if md == 0 {
            return Err(Failure::Usage("max distances must be at least 1".into()));
        }
        variants.push(Variant {
            name: format!("Idx{}", i + 2),
            mode: IndexMode::Full,
            max_distance: md,
        });
    }
    let config = BenchConfig {
        variants,
        repetitions: a.repetitions as usize,
        sw_count: a.lexicon.sw_count,
        fu_count: a.lexicon.fu_count,
        min_count: a.lexicon.min_count,
    };
    let report = bench::run_bench(&docs, &dict, &queries, &config).context("running benchmark")?;
    if let Some(p) = &a.report {
        let json = serde_json::to_string_pretty(&report).context("serializing report")?;
        fs::write(p, json + "\n").with_context(|| format!("writing report {}", p.display()))?;
    }
    match a.format {
        Format::Json => print_json(&report)?,
        Format::Text => print!("{}", report.render_table()),
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    if a.zipf.is_nan() || a.zipf <= 0.0 || !(0.0..=1.0).contains(&a.ambiguous) {
        return Err(Failure::Usage("zipf must be positive and ambiguous within [0, 1]".into()));
    }
    let corpus = bench::generate_corpus(&CorpusSpec {
        seed: a.seed,
        docs: a.docs,
        vocab: a.vocab,
        zipf_exponent: a.zipf,
        doc_len: a.doc_len,
        ambiguous_fraction: a.ambiguous,
    });
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let width = corpus.documents.len().saturating_sub(1).to_string().len().max(6);
    for (i, doc) in corpus.documents.iter().enumerate() {
        let p = a.out.join(format!("doc_{i:0width$}.txt"));
        fs::write(&p, doc).with_context(|| format!("writing {}", p.display()))?;
    }
    if !corpus.dictionary.is_empty() {
        let p = a.out.join("lemmas.dict");
        let mut buf = Vec::new();
        corpus.dictionary.write_to(&mut buf).context("serializing dictionary")?;
        fs::write(&p, buf).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("wrote {} documents to {}", corpus.documents.len(), a.out.display());
    Ok(())
}
