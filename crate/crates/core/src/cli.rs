//! The `pasta` command line: ingest, synth, prep, split and verify-oracle.
//!
//! [`run`] parses arguments and returns the process exit code: 0 on
//! success, 1 when a verification fails, 2 for usage or input errors.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::finetune::{
    prepare_pair, split_by_trigger, PrepError, PrepOptions, Statement, TriggerCatalog,
    DEFAULT_BUDGET,
};
use crate::pipeline::{synthesize_to_files, write_stats, SynthOptions, SynthPaths};
use crate::polish::{default_candidate_sets, Scorer, ScorerBinding, ScorerKind, DEFAULT_TIMEOUT};
use crate::sql::random::{compare_with_oracle, OracleReport};
use crate::sql::{evaluate, QueryPlan, QueryResult, SqlError};
use crate::table::{
    eligibility, read_store, write_store, IngestReport, InputFormat, Table, TableStream,
    MAX_PRETRAIN_CELLS,
};
use crate::template::{self, default_templates, GenerationConfig, OpType};

#[derive(Debug, Parser)]
#[command(
    name = "pasta",
    version,
    about = "Operation-aware sentence-table cloze corpus tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read raw tables, filter them and write the normalized table store.
    Ingest(IngestArgs),
    /// Synthesize a cloze corpus from a table store.
    Synth(SynthArgs),
    /// Select-then-rank and linearize fact-verification statements.
    Prep(PrepArgs),
    /// Split statements into per-operation test sets by trigger words.
    Split(SplitArgs),
    /// Compare the SQL evaluator with the brute-force oracle.
    VerifyOracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// wikitables-json (one record per line) or csv-dir.
    #[arg(long, default_value = "wikitables-json")]
    pub format: InputFormat,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Store directory (gets tables.jsonl) or a .jsonl file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = MAX_PRETRAIN_CELLS)]
    pub max_cells: usize,
    /// Keep tables that fail the pre-training eligibility checks.
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long, default_value_t = ',')]
    pub csv_delimiter: char,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Table store written by `ingest`.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Tables to sample; every eligible table when absent.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus file; provenance and stats are written beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Operation weights, e.g. `aggregation=0.30,filter=0.06`; unnamed
    /// types keep their defaults.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub max_per_table: Option<usize>,
    #[arg(long)]
    pub max_cells: Option<usize>,
    /// lexicon or remote.
    #[arg(long)]
    pub scorer: Option<ScorerKind>,
    #[arg(long, env = "PASTA_SCORER_URL")]
    pub scorer_url: Option<String>,
    /// Remote scorer timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Abort when the remote scorer fails instead of using the lexicon.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Template catalog JSON replacing the shipped one.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Statements, one `{"id","statement","label","table_id"}` per line.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub tables: PathBuf,
    /// Cell budget per table.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Skip column selection.
    #[arg(long)]
    pub no_col: bool,
    /// Skip row ranking.
    #[arg(long)]
    pub no_row: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub per_type: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving one `<type>.jsonl` per operation type.
    #[arg(long)]
    pub out: PathBuf,
    /// Trigger catalog JSON replacing the shipped one.
    #[arg(long)]
    pub triggers: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A failed command and the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Verification(_) => 1,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

/// Synthesis settings as read from `--config`. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub max_per_table: Option<usize>,
    pub max_cells: Option<usize>,
    pub type_weights: Option<BTreeMap<OpType, f64>>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default)]
    pub paths: PathConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerConfig {
    pub kind: Option<ScorerKind>,
    pub url: Option<String>,
    pub timeout_secs: Option<f64>,
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub tables: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

/// Fully resolved synthesis run.
#[derive(Debug, Clone)]
pub struct SynthPlan {
    pub tables: PathBuf,
    pub out: PathBuf,
    pub templates: Option<PathBuf>,
    pub options: SynthOptions,
    pub scorer: ScorerBinding,
    pub strict: bool,
    pub jobs: Option<usize>,
}

/// Parses `aggregation=0.3,filter=0.06`.
pub fn parse_weights(spec: &str) -> Result<BTreeMap<OpType, f64>, String> {
    let mut out = BTreeMap::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| format!("weight {part:?} is not of the form type=value"))?;
        let op: OpType = name.trim().parse()?;
        let w: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("weight for {op} is not a number: {value:?}"))?;
        out.insert(op, w);
    }
    Ok(out)
}

impl SynthArgs {
    /// Merges flags over the config file over built-in defaults.
    pub fn resolve(&self) -> Result<SynthPlan, CliError> {
        let config: SynthConfig = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| input(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| input(format!("config {}: {e}", path.display())))?
            }
            None => SynthConfig::default(),
        };
        let tables = self
            .tables
            .clone()
            .or(config.paths.tables)
            .ok_or_else(|| input("--tables is required"))?;
        let out = self
            .out
            .clone()
            .or(config.paths.out)
            .ok_or_else(|| input("--out is required"))?;

        let mut generation = GenerationConfig::default();
        if let Some(w) = config.type_weights {
            generation.weights.extend(w);
        }
        if let Some(spec) = &self.weights {
            generation
                .weights
                .extend(parse_weights(spec).map_err(input)?);
        }
        for (op, w) in &generation.weights {
            if !w.is_finite() || *w <= 0.0 {
                return Err(input(format!(
                    "weight for {op} must be positive and finite, got {w}"
                )));
            }
        }
        generation.max_per_table = self
            .max_per_table
            .or(config.max_per_table)
            .unwrap_or(generation.max_per_table);
        if generation.max_per_table == 0 {
            return Err(input("--max-per-table must be at least 1"));
        }

        let kind = self
            .scorer
            .or(config.scorer.kind)
            .unwrap_or(ScorerKind::Lexicon);
        let timeout = match self.timeout.or(config.scorer.timeout_secs) {
            Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
            Some(s) => return Err(input(format!("--timeout must be positive, got {s}"))),
            None => DEFAULT_TIMEOUT,
        };
        let scorer = match kind {
            ScorerKind::Lexicon => ScorerBinding::lexicon(),
            ScorerKind::Remote => {
                let url = self
                    .scorer_url
                    .clone()
                    .or(config.scorer.url)
                    .ok_or_else(|| {
                        input("--scorer remote needs --scorer-url or PASTA_SCORER_URL")
                    })?;
                ScorerBinding::remote(url, timeout)
            }
        };
        let jobs = self.jobs.or(config.jobs);
        if jobs == Some(0) {
            return Err(input("--jobs must be at least 1"));
        }
        Ok(SynthPlan {
            tables,
            out,
            templates: self.templates.clone().or(config.paths.templates),
            options: SynthOptions {
                sample: self.k.or(config.k),
                seed: self.seed.or(config.seed).unwrap_or(0),
                generation,
                max_cells: self
                    .max_cells
                    .or(config.max_cells)
                    .unwrap_or(MAX_PRETRAIN_CELLS),
                polish: true,
            },
            scorer,
            strict: self.strict || config.scorer.strict.unwrap_or(false),
            jobs,
        })
    }
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => cmd_ingest(&a, out).map(|_| ()),
        Command::Synth(a) => cmd_synth(&a, out, err),
        Command::Prep(a) => cmd_prep(&a, out).map(|_| ()),
        Command::Split(a) => cmd_split(&a, out),
        Command::VerifyOracle(a) => cmd_verify_oracle(&a, evaluate, out, err),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(input)?;
            Ok(pool.install(f))
        }
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(input)?;
    writeln!(out, "{text}").map_err(input)
}

pub fn cmd_ingest(args: &IngestArgs, out: &mut dyn Write) -> Result<IngestReport, CliError> {
    if !args.input.exists() {
        return Err(input(format!(
            "input {} does not exist",
            args.input.display()
        )));
    }
    if !args.csv_delimiter.is_ascii() {
        return Err(input("--csv-delimiter must be a single ASCII character"));
    }
    let mut stream = match args.format {
        InputFormat::CsvDir => TableStream::csv_dir(&args.input, args.csv_delimiter as u8),
        InputFormat::WikitablesJson => crate::table::ingest_tables(&args.input, args.format),
    }
    .map_err(input)?;
    let mut kept: Vec<Table> = Vec::new();
    let mut rejected: Vec<&'static str> = Vec::new();
    for table in stream.by_ref() {
        let table = table.map_err(input)?;
        match eligibility(&table, args.max_cells) {
            Err(why) if !args.no_filter => rejected.push(why.reason()),
            _ => kept.push(table),
        }
    }
    let mut report = stream.into_report();
    for reason in rejected {
        report.demote(reason);
    }
    let file = write_store(&args.out, &kept).map_err(input)?;
    print_json(out, &report)?;
    writeln!(out, "wrote {} tables to {}", kept.len(), file.display()).map_err(input)?;
    Ok(report)
}

pub fn cmd_synth(
    args: &SynthArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let plan = args.resolve()?;
    let tables = read_store(&plan.tables).map_err(input)?;
    let catalog = match &plan.templates {
        Some(p) => template::load_templates(p).map_err(input)?,
        None => default_templates(),
    };
    let mut scorer = Scorer::new(plan.scorer.clone());
    scorer.strict = plan.strict;
    if let Some(dir) = plan.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| input(format!("cannot create {}: {e}", dir.display())))?;
    }
    let paths = SynthPaths::beside(&plan.out);
    let (report, stats) = with_jobs(plan.jobs, || {
        synthesize_to_files(
            tables,
            &catalog,
            &default_candidate_sets(),
            &scorer,
            &plan.options,
            &paths,
        )
    })?
    .map_err(input)?;
    write_stats(&stats, &crate::pipeline::sidecar(&plan.out, "stats.json")).map_err(input)?;
    if report.scorer_fallbacks > 0 {
        let _ = writeln!(
            err,
            "warning: remote scorer failed for {} sentences; the lexicon scorer was used instead",
            report.scorer_fallbacks
        );
    }
    writeln!(out, "{stats}").map_err(input)?;
    print_json(out, &report)?;
    if report.verify_failed > 0 {
        return Err(CliError::Verification(format!(
            "{} instantiations failed re-execution",
            report.verify_failed
        )));
    }
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let f = File::open(path).map_err(|e| input(format!("cannot open {}: {e}", path.display())))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| input(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(
            serde_json::from_str(&line)
                .map_err(|e| input(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(items)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| input(format!("cannot write {}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(fail)?;
    let mut w = BufWriter::new(tempfile::NamedTempFile::new_in(dir).map_err(fail)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| fail(e.into()))?;
        w.write_all(b"\n").map_err(fail)?;
    }
    let tmp = w.into_inner().map_err(|e| fail(e.into_error()))?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepReport {
    pub statements: usize,
    pub records: usize,
    pub missing_table: usize,
    pub budget_too_small: usize,
}

pub fn cmd_prep(args: &PrepArgs, out: &mut dyn Write) -> Result<PrepReport, CliError> {
    let mut statements: Vec<Statement> = read_jsonl(&args.data)?;
    statements.sort_by(|a, b| a.id.cmp(&b.id));
    let tables = read_store(&args.tables).map_err(input)?;
    let by_id: HashMap<&str, &Table> = tables.iter().map(|t| (t.id.as_str(), t)).collect();
    let options = PrepOptions {
        budget: args.budget,
        select_columns: !args.no_col,
        rank_rows: !args.no_row,
    };
    let results = with_jobs(args.jobs, || {
        statements
            .par_iter()
            .map(|s| {
                by_id
                    .get(s.table_id.as_str())
                    .map(|t| prepare_pair(s, t, options))
            })
            .collect::<Vec<_>>()
    })?;
    let mut report = PrepReport {
        statements: statements.len(),
        ..Default::default()
    };
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            None => report.missing_table += 1,
            Some(Err(PrepError::BudgetTooSmall { .. })) => report.budget_too_small += 1,
            Some(Ok(rec)) => records.push(rec),
        }
    }
    report.records = records.len();
    write_jsonl(&args.out, &records)?;
    print_json(out, &report)?;
    Ok(report)
}

pub fn cmd_split(args: &SplitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let statements: Vec<Statement> = read_jsonl(&args.data)?;
    let catalog = match &args.triggers {
        Some(p) => TriggerCatalog::load(p).map_err(input)?,
        None => TriggerCatalog::default(),
    };
    let sets = split_by_trigger(&statements, &catalog, args.per_type, args.seed).map_err(input)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| input(format!("cannot create {}: {e}", args.out.display())))?;
    for (op, set) in &sets {
        let path = args.out.join(format!("{}.jsonl", op.name()));
        write_jsonl(&path, set)?;
        writeln!(out, "{op}: {} statements -> {}", set.len(), path.display()).map_err(input)?;
    }
    Ok(())
}

/// Runs the oracle comparison with a given evaluator; the command itself
/// passes the production one.
pub fn cmd_verify_oracle<F>(
    args: &OracleArgs,
    evaluator: F,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError>
where
    F: Fn(&QueryPlan, &Table) -> Result<QueryResult, SqlError>,
{
    if args.trials == 0 {
        let _ = writeln!(err, "warning: 0 trials requested; nothing was checked");
    }
    let report: OracleReport = compare_with_oracle(args.trials, args.seed, evaluator);
    writeln!(
        out,
        "{}/{} agreements ({} errored on both sides)",
        report.agreements, report.trials, report.both_errored
    )
    .map_err(input)?;
    match report.first_counterexample {
        None => Ok(()),
        Some(c) => Err(CliError::Verification(format!(
            "{} disagreements; first counterexample:\n{c}",
            report.trials - report.agreements
        ))),
    }
}
