//! The `doq` command line: build distribution tables from text and query them.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use doq_core::aggregate::{AggregateError, HistogramPoint, TableConfig};
use doq_core::eval::{
    detect_leakage, evaluate, load_dataset, make_clean_split, write_dataset, EvalMode,
};
use doq_core::inference::{
    compare_adjectives, compare_nouns, relax_time_of_day, relax_to_decade, resolve_object,
};
use doq_core::pipeline::{
    read_annotated, split_sentences, tokenize, write_record, write_record_header,
    AnnotatedSentence, BuildSettings, Extractor, RecordReader,
};
use doq_core::units::{denormalize, parse_rates, DEFAULT_LEXICON, DEFAULT_RATES};
use doq_core::{
    CompareConfig, CooccurrenceRecord, Dimension, DoQTable, ExtractionConfig, ObjectKey, Pos,
    Quantity, UnitDef, UnitRegistry,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {message}")]
    Data { context: String, message: String },
}

impl CliError {
    fn data(context: impl AsRef<Path>, message: impl ToString) -> Self {
        CliError::Data {
            context: context.as_ref().display().to_string(),
            message: message.to_string(),
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Debug, Parser)]
#[command(
    name = "doq",
    version,
    about = "Build and query distributions over quantities mentioned in text"
)]
struct Cli {
    /// Unit lexicon replacing the built-in one.
    #[arg(long, global = true, env = "DOQ_REGISTRY", value_name = "FILE")]
    units: Option<PathBuf>,
    /// Currency exchange rates replacing the built-in ones.
    #[arg(long, global = true, env = "DOQ_CURRENCY_RATES", value_name = "FILE")]
    rates: Option<PathBuf>,
    /// Output style for query results: aligned text or JSON lines.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract co-occurrence records from a corpus.
    Extract(ExtractCmd),
    /// Fold record streams into a partial table.
    Aggregate(AggregateCmd),
    /// Merge partial tables.
    Merge(MergeCmd),
    /// Apply occurrence thresholds to a table.
    Finalize(FinalizeCmd),
    /// Extract, aggregate and finalize in one pass.
    Build(BuildCmd),
    /// Show the distribution of one object in one dimension.
    Query(QueryCmd),
    /// Compare two nouns or two adjectives.
    Compare(CompareCmd),
    /// Score a table against a comparison dataset.
    Eval(EvalCmd),
    /// Report leakage from a training set into an evaluation set.
    Audit(AuditCmd),
    /// Split a dataset into leakage-free train, dev and test files.
    Split(SplitCmd),
    /// Export histogram points for plotting.
    PlotExport(PlotCmd),
}

#[derive(Debug, Clone, Copy)]
struct Distance(Option<u32>);

fn parse_distance_arg(s: &str) -> std::result::Result<Distance, String> {
    if s == "sentence" {
        return Ok(Distance(None));
    }
    match s.parse::<u32>() {
        Ok(k) if (1..=100).contains(&k) => Ok(Distance(Some(k))),
        _ => Err("expected `sentence` or a token count in 1..=100".to_string()),
    }
}

fn parse_positive(s: &str) -> std::result::Result<u64, String> {
    match s.parse::<u64>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err("expected an integer >= 1".to_string()),
    }
}

fn parse_tau(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() && t >= 1.0 => Ok(t),
        _ => Err("expected a number >= 1".to_string()),
    }
}

fn parse_ratios(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad ratio `{p}`"))
        })
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected three comma-separated ratios".to_string())
}

#[derive(Debug, Args)]
struct ExtractOpts {
    /// Co-occurrence window: `sentence` or a maximum token gap.
    #[arg(long, default_value = "sentence", value_parser = parse_distance_arg)]
    distance: Distance,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    max_phrase_len: u64,
    /// Noun phrases seen fewer times are dropped when finalizing.
    #[arg(long, default_value_t = 5, value_parser = parse_positive)]
    min_phrase_count: u64,
    /// Inputs are token-per-line annotated files instead of plain text.
    #[arg(long)]
    annotated: bool,
    /// Plain-text inputs hold one sentence per line.
    #[arg(long, conflicts_with = "annotated")]
    line_delimited: bool,
}

#[derive(Debug, Args)]
struct ExtractCmd {
    #[command(flatten)]
    opts: ExtractOpts,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Corpus files; `-` reads standard input.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct AggregateCmd {
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Record streams; `-` reads standard input.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct MergeCmd {
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(required = true)]
    tables: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct FinalizeCmd {
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    min_count: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    table: PathBuf,
}

#[derive(Debug, Args)]
struct BuildCmd {
    #[command(flatten)]
    opts: ExtractOpts,
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    min_count: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct EntryArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    object: String,
    #[arg(long)]
    dim: Dimension,
    /// Restrict to entries with this syntactic head.
    #[arg(long)]
    head: Option<String>,
    /// Restrict to one part of speech; the most frequent one otherwise.
    #[arg(long)]
    pos: Option<Pos>,
}

#[derive(Debug, Args)]
struct QueryCmd {
    #[command(flatten)]
    entry: EntryArgs,
    /// Display unit; the dimension's standard unit when omitted.
    #[arg(long)]
    unit: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("pair").required(true).args(["noun", "adj"])))]
struct CompareCmd {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    noun: Option<Vec<String>>,
    #[arg(long, num_args = 2, value_names = ["X", "Z"])]
    adj: Option<Vec<String>>,
    #[arg(long)]
    dim: Dimension,
    #[command(flatten)]
    compare: CompareOpts,
}

#[derive(Debug, Args)]
struct CompareOpts {
    /// Medians within this ratio compare as equal.
    #[arg(long, default_value_t = 1.1, value_parser = parse_tau)]
    tau: f64,
    /// Entries seen fewer times count as missing.
    #[arg(long = "min-evidence", default_value_t = 1, value_parser = parse_positive)]
    min_evidence: u64,
}

impl CompareOpts {
    fn config(&self) -> CompareConfig {
        CompareConfig {
            tau: self.tau,
            min_count: self.min_evidence,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Nouns,
    Adjectives,
}

#[derive(Debug, Args)]
struct EvalCmd {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Nouns)]
    mode: Mode,
    #[command(flatten)]
    compare: CompareOpts,
}

#[derive(Debug, Args)]
struct AuditCmd {
    train: PathBuf,
    eval: PathBuf,
}

#[derive(Debug, Args)]
struct SplitCmd {
    dataset: PathBuf,
    /// Train, dev and test shares.
    #[arg(long, default_value = "0.8,0.1,0.1", value_parser = parse_ratios)]
    ratios: [f64; 3],
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct PlotCmd {
    #[command(flatten)]
    entry: EntryArgs,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "doq: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Extract(cmd) => extract(cli, cmd, out),
        Command::Aggregate(cmd) => aggregate(cmd, out),
        Command::Merge(cmd) => merge(cmd, out),
        Command::Finalize(cmd) => finalize(cmd, out),
        Command::Build(cmd) => build(cli, cmd, out),
        Command::Query(cmd) => query(cli, cmd, out),
        Command::Compare(cmd) => compare(cli, cmd, out),
        Command::Eval(cmd) => eval(cli, cmd, out),
        Command::Audit(cmd) => audit(cli, cmd, out),
        Command::Split(cmd) => split(cmd, out),
        Command::PlotExport(cmd) => plot_export(cli, cmd, out),
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::data(path, e)
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| io_error(path, e))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).map_err(|e| io_error(path, e))?;
    Ok(Box::new(BufReader::new(f)))
}

/// Writes to `output` when given, else to standard output.
fn with_output(
    output: &Option<PathBuf>,
    out: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match output {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_error(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)
                .and_then(|()| w.flush())
                .map_err(|e| io_error(path, e))
        }
        None => f(out).map_err(|e| CliError::data("<stdout>", e)),
    }
}

fn load_registry(cli: &Cli) -> Result<UnitRegistry> {
    if cli.units.is_none() && cli.rates.is_none() {
        return Ok(UnitRegistry::builtin());
    }
    let lexicon = match &cli.units {
        Some(p) => read_text(p)?,
        None => DEFAULT_LEXICON.to_string(),
    };
    let rates = match &cli.rates {
        Some(p) => {
            let text = read_text(p)?;
            parse_rates(&text).map_err(|e| CliError::data(p, e))?;
            text
        }
        None => DEFAULT_RATES.to_string(),
    };
    let context = cli
        .units
        .as_ref()
        .or(cli.rates.as_ref())
        .expect("one source given");
    UnitRegistry::from_sources(&lexicon, &rates).map_err(|e| CliError::data(context, e))
}

fn extractor<'r>(registry: &'r UnitRegistry, opts: &ExtractOpts) -> Result<Extractor<'r>> {
    let config = ExtractionConfig {
        max_distance: opts.distance.0,
        max_phrase_len: opts.max_phrase_len as usize,
        min_phrase_count: opts.min_phrase_count,
        ..ExtractionConfig::default()
    };
    Extractor::new(registry, config).map_err(|e| CliError::Usage(e.to_string()))
}

fn extract_file(
    ex: &Extractor,
    opts: &ExtractOpts,
    path: &Path,
) -> Result<Vec<CooccurrenceRecord>> {
    if opts.annotated {
        let reader: Box<dyn Iterator<Item = _>> = if path == Path::new("-") {
            Box::new(doq_core::pipeline::AnnotatedReader::new(BufReader::new(
                io::stdin(),
            )))
        } else {
            Box::new(read_annotated(path).map_err(|e| CliError::data(path, e))?)
        };
        let mut out = Vec::new();
        for sentence in reader {
            out.extend(ex.extract_records(&sentence.map_err(|e| CliError::data(path, e))?));
        }
        return Ok(out);
    }
    let text = read_text(path)?;
    if opts.line_delimited {
        Ok(text
            .lines()
            .flat_map(|line| ex.extract_records(&AnnotatedSentence::plain(tokenize(line))))
            .collect())
    } else {
        Ok(split_sentences(&text)
            .iter()
            .flat_map(|s| ex.extract_records(&AnnotatedSentence::plain(tokenize(s))))
            .collect())
    }
}

/// Extracts every input on the worker pool, keeping input order.
fn extract_all(
    ex: &Extractor,
    opts: &ExtractOpts,
    inputs: &[PathBuf],
) -> Result<Vec<Vec<CooccurrenceRecord>>> {
    inputs
        .par_iter()
        .map(|p| extract_file(ex, opts, p))
        .collect()
}

fn extract(cli: &Cli, cmd: &ExtractCmd, out: &mut dyn Write) -> Result<()> {
    let registry = load_registry(cli)?;
    let ex = extractor(&registry, &cmd.opts)?;
    let shards = extract_all(&ex, &cmd.opts, &cmd.inputs)?;
    with_output(&cmd.output, out, |w| {
        write_record_header(w, &ex.settings())?;
        for r in shards.iter().flatten() {
            write_record(w, r)?;
        }
        Ok(())
    })
}

fn table_from_records(
    settings: BuildSettings,
    records: &[CooccurrenceRecord],
    context: &Path,
) -> Result<DoQTable> {
    let mut t = DoQTable::new(TableConfig::new(settings));
    for r in records {
        t.observe(r).map_err(|e| CliError::data(context, e))?;
    }
    Ok(t)
}

fn merge_tables(tables: Vec<(PathBuf, DoQTable)>) -> Result<DoQTable> {
    let mut iter = tables.into_iter();
    let (_, mut acc) = iter.next().expect("at least one input");
    for (path, t) in iter {
        acc.merge(&t).map_err(|e| CliError::data(&path, e))?;
    }
    Ok(acc)
}

fn aggregate_file(path: &Path) -> Result<DoQTable> {
    let reader = RecordReader::new(open_input(path)?).map_err(|e| CliError::data(path, e))?;
    let mut t = DoQTable::new(TableConfig::new(reader.settings().clone()));
    for r in reader {
        let r = r.map_err(|e| CliError::data(path, e))?;
        t.observe(&r).map_err(|e| CliError::data(path, e))?;
    }
    Ok(t)
}

fn aggregate(cmd: &AggregateCmd, out: &mut dyn Write) -> Result<()> {
    let tables = cmd
        .inputs
        .par_iter()
        .map(|p| aggregate_file(p).map(|t| (p.clone(), t)))
        .collect::<Result<Vec<_>>>()?;
    let table = merge_tables(tables)?;
    with_output(&cmd.output, out, |w| table.write_to(w))
}

fn read_table(path: &Path) -> Result<DoQTable> {
    DoQTable::read_file(path).map_err(|e| match e {
        AggregateError::Io(e) => io_error(path, e),
        e => CliError::data(path, e),
    })
}

fn merge(cmd: &MergeCmd, out: &mut dyn Write) -> Result<()> {
    let tables = cmd
        .tables
        .iter()
        .map(|p| read_table(p).map(|t| (p.clone(), t)))
        .collect::<Result<Vec<_>>>()?;
    let table = merge_tables(tables)?;
    with_output(&cmd.output, out, |w| table.write_to(w))
}

fn finalize(cmd: &FinalizeCmd, out: &mut dyn Write) -> Result<()> {
    let mut table = read_table(&cmd.table)?;
    table.finalize(cmd.min_count);
    with_output(&cmd.output, out, |w| table.write_to(w))
}

fn build(cli: &Cli, cmd: &BuildCmd, out: &mut dyn Write) -> Result<()> {
    let registry = load_registry(cli)?;
    let ex = extractor(&registry, &cmd.opts)?;
    let tables = cmd
        .inputs
        .par_iter()
        .map(|p| {
            let records = extract_file(&ex, &cmd.opts, p)?;
            table_from_records(ex.settings(), &records, p).map(|t| (p.clone(), t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = merge_tables(tables)?;
    table.finalize(cmd.min_count);
    with_output(&cmd.output, out, |w| table.write_to(w))
}

/// Six significant digits, trailing zeros dropped.
fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    format!("{rounded}")
}

fn find_entry<'t>(
    table: &'t DoQTable,
    entry: &EntryArgs,
) -> Result<(&'t ObjectKey, &'t doq_core::Distribution)> {
    let found = match (&entry.head, entry.pos) {
        (None, None) => resolve_object(table, &entry.object, entry.dim),
        (head, pos) => {
            let head = head.as_ref().map(|h| h.to_lowercase());
            table
                .entries_for_surface(&entry.object)
                .filter(|((k, d), _)| {
                    *d == entry.dim && k.head == head && pos.is_none_or(|p| k.pos == p)
                })
                .fold(
                    None,
                    |best: Option<(&ObjectKey, &doq_core::Distribution)>, ((k, _), d)| match best {
                        Some((_, b)) if b.count() >= d.count() => best,
                        _ => Some((k, d)),
                    },
                )
        }
    };
    found.ok_or_else(|| {
        CliError::data(
            &entry.table,
            format!("no entry for `{}` in {}", entry.object, entry.dim),
        )
    })
}

fn display_unit<'r>(registry: &'r UnitRegistry, name: &str, dim: Dimension) -> Result<&'r UnitDef> {
    let unit = registry
        .lookup_unit(name, true)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if unit.dimension != dim {
        return Err(CliError::Usage(format!(
            "unit `{name}` measures {}, not {dim}",
            unit.dimension
        )));
    }
    Ok(unit)
}

#[derive(Serialize)]
struct QueryRecord<'a> {
    object: &'a str,
    head: Option<&'a str>,
    pos: Pos,
    dimension: Dimension,
    unit: String,
    count: u64,
    median: f64,
    mean: f64,
    p5: f64,
    p95: f64,
    min: f64,
    max: f64,
    range: Option<(f64, f64)>,
}

fn json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| CliError::data("<stdout>", e))?;
    writeln!(out, "{line}").map_err(|e| CliError::data("<stdout>", e))
}

fn text_lines(out: &mut dyn Write, lines: &[(&str, String)]) -> Result<()> {
    for (k, v) in lines {
        writeln!(out, "{k} {v}").map_err(|e| CliError::data("<stdout>", e))?;
    }
    Ok(())
}

fn query(cli: &Cli, cmd: &QueryCmd, out: &mut dyn Write) -> Result<()> {
    let registry = load_registry(cli)?;
    let dim = cmd.entry.dim;
    let unit = cmd
        .unit
        .as_deref()
        .map(|u| display_unit(&registry, u, dim))
        .transpose()?;
    let table = read_table(&cmd.entry.table)?;
    let (key, dist) = find_entry(&table, &cmd.entry)?;
    let stats = dist
        .stats()
        .map_err(|e| CliError::data(&cmd.entry.table, e))?;
    let convert = |v: f64| match unit {
        Some(u) => {
            let q = Quantity {
                dimension: dim,
                value_std: v,
                source_value: v,
                source_unit: String::new(),
            };
            denormalize(&q, u).unwrap_or(v)
        }
        None => v,
    };
    let unit_name = cmd
        .unit
        .clone()
        .unwrap_or_else(|| dim.standard_unit_name().to_string());
    let median = convert(stats.median);
    let range = if dim == Dimension::Time {
        Some(relax_time_of_day(median))
    } else {
        relax_to_decade(median).ok()
    };
    let record = QueryRecord {
        object: &key.surface,
        head: key.head.as_deref(),
        pos: key.pos,
        dimension: dim,
        unit: unit_name.clone(),
        count: stats.count,
        median,
        mean: convert(stats.mean),
        p5: convert(stats.p5),
        p95: convert(stats.p95),
        min: convert(stats.min),
        max: convert(stats.max),
        range,
    };
    if cli.format == Format::Records {
        return json_line(out, &record);
    }
    let with_unit = |v: f64| format!("{} {unit_name}", fmt_value(v));
    let mut lines = vec![
        ("object", key.to_string()),
        ("dimension", dim.to_string()),
        ("count", stats.count.to_string()),
        ("median", with_unit(record.median)),
        ("mean", with_unit(record.mean)),
        ("p5", with_unit(record.p5)),
        ("p95", with_unit(record.p95)),
        ("min", with_unit(record.min)),
        ("max", with_unit(record.max)),
    ];
    lines.push((
        "range",
        match range {
            Some((lo, hi)) => format!("{}–{} {unit_name}", fmt_value(lo), fmt_value(hi)),
            None => "n/a".to_string(),
        },
    ));
    text_lines(out, &lines)
}

#[derive(Serialize)]
struct CompareRecord<'a> {
    kind: &'a str,
    first: &'a str,
    second: &'a str,
    dimension: Dimension,
    label: doq_core::ComparisonLabel,
    symbol: &'a str,
}

fn compare(cli: &Cli, cmd: &CompareCmd, out: &mut dyn Write) -> Result<()> {
    let table = read_table(&cmd.table)?;
    let cfg = cmd.compare.config();
    let (kind, pair, label) = match (&cmd.noun, &cmd.adj) {
        (Some(p), _) => (
            "noun",
            p,
            compare_nouns(&table, &p[0], &p[1], cmd.dim, &cfg),
        ),
        (None, Some(p)) => {
            let label = compare_adjectives(&table, &p[0], &p[1], cmd.dim, &cfg)
                .map_err(|e| CliError::data(&cmd.table, format!("{} and {}: {e}", p[0], p[1])))?;
            ("adjective", p, label)
        }
        (None, None) => unreachable!("clap requires one of --noun or --adj"),
    };
    if cli.format == Format::Records {
        return json_line(
            out,
            &CompareRecord {
                kind,
                first: &pair[0],
                second: &pair[1],
                dimension: cmd.dim,
                label,
                symbol: label.symbol(),
            },
        );
    }
    writeln!(out, "{}", label.symbol()).map_err(|e| CliError::data("<stdout>", e))
}

fn eval(cli: &Cli, cmd: &EvalCmd, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(&cmd.dataset).map_err(|e| CliError::data(&cmd.dataset, e))?;
    let table = read_table(&cmd.table)?;
    let mode = match cmd.mode {
        Mode::Nouns => EvalMode::Nouns,
        Mode::Adjectives => EvalMode::Adjectives,
    };
    let report = evaluate(&table, &data, mode, &cmd.compare.config());
    if cli.format == Format::Records {
        return json_line(out, &report);
    }
    let mut lines = vec![
        ("examples", report.examples.to_string()),
        ("scoreable", report.overall.scoreable.to_string()),
        ("not_comparable", report.not_comparable.to_string()),
        ("out_of_coverage", report.out_of_coverage.to_string()),
        ("accuracy", format!("{:.4}", report.overall.accuracy)),
        ("coverage", format!("{:.4}", report.coverage)),
        (
            "majority_baseline",
            format!(
                "{:.4} {}",
                report.majority_baseline,
                report.majority_label.map_or("-", |l| l.symbol())
            ),
        ),
    ];
    let per_dim: Vec<String> = report
        .per_dimension
        .iter()
        .map(|(d, s)| format!("{d} {:.4} {}/{}", s.accuracy, s.correct, s.scoreable))
        .collect();
    lines.extend(per_dim.into_iter().map(|s| ("dimension", s)));
    text_lines(out, &lines)
}

fn audit(cli: &Cli, cmd: &AuditCmd, out: &mut dyn Write) -> Result<()> {
    let train = load_dataset(&cmd.train).map_err(|e| CliError::data(&cmd.train, e))?;
    let held = load_dataset(&cmd.eval).map_err(|e| CliError::data(&cmd.eval, e))?;
    let report = detect_leakage(&train, &held);
    if cli.format == Format::Records {
        return json_line(out, &report);
    }
    let mut lines = vec![
        ("examples", report.eval_examples.to_string()),
        (
            "transitive_flags",
            report.transitive_flags.len().to_string(),
        ),
        ("transitive_rate", format!("{:.4}", report.transitive_rate)),
        ("object_flags", report.object_flags.len().to_string()),
        ("object_rate", format!("{:.4}", report.object_rate)),
    ];
    for &i in &report.transitive_flags {
        lines.push(("transitive", held[i].to_tsv_line()));
    }
    text_lines(out, &lines)
}

fn split(cmd: &SplitCmd, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(&cmd.dataset).map_err(|e| CliError::data(&cmd.dataset, e))?;
    let s = make_clean_split(&data, cmd.ratios, cmd.seed)
        .map_err(|e| CliError::data(&cmd.dataset, e))?;
    fs::create_dir_all(&cmd.out_dir).map_err(|e| io_error(&cmd.out_dir, e))?;
    let mut lines = Vec::new();
    for (name, part) in [("train", &s.train), ("dev", &s.dev), ("test", &s.test)] {
        let path = cmd.out_dir.join(format!("{name}.tsv"));
        fs::write(&path, write_dataset(part)).map_err(|e| io_error(&path, e))?;
        lines.push((name, format!("{} {}", part.len(), path.display())));
    }
    text_lines(out, &lines)
}

fn plot_export(cli: &Cli, cmd: &PlotCmd, out: &mut dyn Write) -> Result<()> {
    let table = read_table(&cmd.entry.table)?;
    let (_, dist) = find_entry(&table, &cmd.entry)?;
    let points: Vec<HistogramPoint> = dist.histogram();
    let io_err = |e: io::Error| CliError::data("<stdout>", e);
    if cli.format == Format::Records {
        for p in &points {
            json_line(out, p)?;
        }
        return Ok(());
    }
    writeln!(out, "bucket_center\tdensity\tcount").map_err(io_err)?;
    for p in &points {
        writeln!(out, "{:?}\t{:?}\t{}", p.center, p.density, p.count).map_err(io_err)?;
    }
    Ok(())
}
