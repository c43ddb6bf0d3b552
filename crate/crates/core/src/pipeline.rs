//! End-to-end corpus synthesis: sample, generate, polish, mask, emit, plus
//! re-execution verification of a written corpus.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloze::{
    linearize, mask_answer, read_corpus, write_line, ClozeError, ClozeExample, CorpusStats,
    CorpusWriter, StatsTally,
};
use crate::polish::{polish_instantiations, CandidateSet, PolishError, Scorer};
use crate::sql::{evaluate_view, parse_query, TableView};
use crate::table::{eligibility, sample_tables, Table, TableError, MAX_PRETRAIN_CELLS};
use crate::template::{generate_for_table, table_seed, GenerationConfig, MaskTarget, TemplatePair};

/// Tables handled per parallel chunk; bounds memory and groups remote
/// scoring requests.
const CHUNK: usize = 256;

/// What produced an example: the bound SQL and its rendered result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    pub sql: String,
    pub sql_answer: String,
    pub answer_is_result: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthReport {
    pub tables_in: usize,
    pub tables_used: usize,
    pub instantiations: usize,
    pub polish_dropped: usize,
    pub mask_dropped: usize,
    pub verify_failed: usize,
    pub examples: usize,
    pub scorer_fallbacks: u64,
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    /// Tables to sample; `None` uses every eligible table.
    pub sample: Option<usize>,
    pub seed: u64,
    pub generation: GenerationConfig,
    pub max_cells: usize,
    pub polish: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            sample: None,
            seed: 0,
            generation: GenerationConfig::default(),
            max_cells: MAX_PRETRAIN_CELLS,
            polish: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Polish(#[from] PolishError),
    #[error(transparent)]
    Cloze(#[from] ClozeError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Examples of one table, in within-table order.
fn table_examples(
    table: &Table,
    catalog: &[TemplatePair],
    sets: &[CandidateSet],
    scorer: &Scorer,
    options: &SynthOptions,
    report: &mut SynthReport,
) -> Result<Vec<(ClozeExample, Provenance)>, PipelineError> {
    let insts = generate_for_table(
        table,
        catalog,
        &options.generation,
        table_seed(options.seed, &table.id),
    );
    report.instantiations += insts.len();
    let insts = if options.polish {
        let out = polish_instantiations(insts, sets, scorer)?;
        report.polish_dropped += out.dropped;
        out.kept
    } else {
        insts
    };
    let linearized = linearize(table);
    let view = TableView::new(table);
    let mut out = Vec::with_capacity(insts.len());
    for inst in insts {
        if !inst.verify_view(&view) {
            report.verify_failed += 1;
            continue;
        }
        match mask_answer(&inst, &table.id, out.len()) {
            Ok(mut ex) => {
                ex.linearized_table = linearized.clone();
                let prov = Provenance {
                    id: ex.id.clone(),
                    sql: inst.sql.clone(),
                    sql_answer: inst.answer.clone(),
                    answer_is_result: inst.template.mask_target == MaskTarget::answer(),
                };
                out.push((ex, prov));
            }
            Err(_) => report.mask_dropped += 1,
        }
    }
    Ok(out)
}

/// Eligible tables, sampled when requested, sorted by id.
pub fn select_tables(
    tables: Vec<Table>,
    options: &SynthOptions,
) -> Result<Vec<Table>, PipelineError> {
    let mut eligible: Vec<Table> = tables
        .into_iter()
        .filter(|t| eligibility(t, options.max_cells).is_ok())
        .collect();
    eligible.sort_by(|a, b| a.id.cmp(&b.id));
    eligible.dedup_by(|a, b| a.id == b.id);
    Ok(match options.sample {
        Some(k) => sample_tables(eligible, k, options.seed)?,
        None => eligible,
    })
}

/// Examples of one table with their provenance, plus that table's counts.
type TableOutput = (Vec<(ClozeExample, Provenance)>, SynthReport);

/// Runs the pipeline over `tables` and hands each example, in corpus order,
/// to `sink`.
pub fn synthesize<F>(
    tables: Vec<Table>,
    catalog: &[TemplatePair],
    sets: &[CandidateSet],
    scorer: &Scorer,
    options: &SynthOptions,
    mut sink: F,
) -> Result<SynthReport, PipelineError>
where
    F: FnMut(ClozeExample, Provenance) -> Result<(), PipelineError>,
{
    let mut report = SynthReport {
        tables_in: tables.len(),
        ..Default::default()
    };
    let tables = select_tables(tables, options)?;
    report.tables_used = tables.len();
    for chunk in tables.chunks(CHUNK) {
        let results: Vec<Result<TableOutput, PipelineError>> = chunk
            .par_iter()
            .map(|t| {
                let mut r = SynthReport::default();
                table_examples(t, catalog, sets, scorer, options, &mut r).map(|v| (v, r))
            })
            .collect();
        for res in results {
            let (examples, r) = res?;
            report.instantiations += r.instantiations;
            report.polish_dropped += r.polish_dropped;
            report.mask_dropped += r.mask_dropped;
            report.verify_failed += r.verify_failed;
            for (ex, prov) in examples {
                report.examples += 1;
                sink(ex, prov)?;
            }
        }
    }
    report.scorer_fallbacks = scorer.warnings();
    Ok(report)
}

/// Output locations of one synthesis run.
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub corpus: std::path::PathBuf,
    pub provenance: Option<std::path::PathBuf>,
}

impl SynthPaths {
    /// `corpus.jsonl` with its provenance sidecar `corpus.provenance.jsonl`.
    pub fn beside(corpus: &Path) -> Self {
        SynthPaths {
            corpus: corpus.to_path_buf(),
            provenance: Some(sidecar(corpus, "provenance.jsonl")),
        }
    }
}

/// `dir/name.jsonl` to `dir/name.<suffix>`.
pub fn sidecar(corpus: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = corpus
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    corpus.with_file_name(format!("{stem}.{suffix}"))
}

/// Synthesizes straight to disk and returns the run report and corpus
/// statistics.
pub fn synthesize_to_files(
    tables: Vec<Table>,
    catalog: &[TemplatePair],
    sets: &[CandidateSet],
    scorer: &Scorer,
    options: &SynthOptions,
    paths: &SynthPaths,
) -> Result<(SynthReport, CorpusStats), PipelineError> {
    let mut writer = CorpusWriter::create(&paths.corpus)?;
    let mut prov = match &paths.provenance {
        Some(p) => Some((
            p.clone(),
            BufWriter::new(tempfile::NamedTempFile::new_in(parent(p)).map_err(io_err(p))?),
        )),
        None => None,
    };
    let mut tally = StatsTally::default();
    let report = synthesize(tables, catalog, sets, scorer, options, |ex, pv| {
        writer.write(&ex)?;
        if let Some((path, w)) = prov.as_mut() {
            write_line(w, &pv).map_err(io_err(path))?;
        }
        tally.add(&ex);
        Ok(())
    })?;
    writer.finish()?;
    if let Some((path, w)) = prov {
        let tmp = w.into_inner().map_err(|e| io_err(&path)(e.into_error()))?;
        tmp.persist(&path).map_err(|e| io_err(&path)(e.error))?;
    }
    Ok((report, tally.finish()))
}

fn parent(p: &Path) -> &Path {
    p.parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
}

pub fn write_stats(stats: &CorpusStats, path: &Path) -> Result<(), PipelineError> {
    let mut f = BufWriter::new(File::create(path).map_err(io_err(path))?);
    serde_json::to_writer_pretty(&mut f, stats).map_err(|e| io_err(path)(e.into()))?;
    f.write_all(b"\n").map_err(io_err(path))?;
    Ok(())
}

pub fn read_provenance(path: &Path) -> Result<Vec<Provenance>, PipelineError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(io_err(path))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| io_err(path)(e.into()))?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub passed: usize,
    /// Ids of the first few failures with a reason.
    pub failures: Vec<(String, String)>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.checked == self.passed
    }
}

/// Re-executes every example's SQL against its table and checks the
/// recorded answer, the mask round trip and the linearization.
pub fn verify_corpus(
    corpus: &Path,
    provenance: &Path,
    tables: &[Table],
) -> Result<VerifyReport, PipelineError> {
    let examples = read_corpus(corpus)?;
    let prov: HashMap<String, Provenance> = read_provenance(provenance)?
        .into_iter()
        .map(|p| (p.id.clone(), p))
        .collect();
    let by_id: HashMap<&str, (TableView<'_>, String)> = tables
        .par_iter()
        .map(|t| (t.id.as_str(), (TableView::new(t), linearize(t))))
        .collect();
    let outcomes: Vec<Result<(), (String, String)>> = examples
        .par_iter()
        .map(|ex| {
            check_example(
                ex,
                prov.get(&ex.id),
                by_id
                    .get(ex.table_id.as_str())
                    .map(|(v, l)| (v, l.as_str())),
            )
        })
        .collect();
    let mut report = VerifyReport {
        checked: examples.len(),
        ..Default::default()
    };
    for o in outcomes {
        match o {
            Ok(()) => report.passed += 1,
            Err(f) if report.failures.len() < 20 => report.failures.push(f),
            Err(_) => {}
        }
    }
    Ok(report)
}

/// Checks one example against its provenance record and its table's view
/// and linearization.
pub fn check_example(
    ex: &ClozeExample,
    prov: Option<&Provenance>,
    table: Option<(&TableView<'_>, &str)>,
) -> Result<(), (String, String)> {
    let fail = |why: &str| Err((ex.id.clone(), why.to_string()));
    let (Some(prov), Some((table, linearized))) = (prov, table) else {
        return fail("missing provenance or table");
    };
    if ex.unmask() != ex.sentence
        || ex.sentence.get(ex.answer_span.clone()) != Some(ex.answer.as_str())
    {
        return fail("mask does not round-trip");
    }
    if ex.linearized_table != linearized {
        return fail("linearized table differs");
    }
    let Ok(plan) = parse_query(&prov.sql) else {
        return fail("sql does not parse");
    };
    match evaluate_view(&plan, table) {
        Ok((r, _)) if r.render(&plan.projection) == prov.sql_answer => {}
        Ok(_) => return fail("re-execution gives a different answer"),
        Err(_) => return fail("re-execution fails"),
    }
    if prov.answer_is_result && prov.sql_answer != ex.answer {
        return fail("masked answer is not the query result");
    }
    if !ex.sentence.contains(&prov.sql_answer) {
        return fail("sentence does not state the query result");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::demo_tables;
    use crate::polish::default_candidate_sets;
    use crate::template::default_templates;

    #[test]
    fn small_run_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let paths = SynthPaths::beside(&dir.path().join("corpus.jsonl"));
        let tables = demo_tables(30, 1);
        let options = SynthOptions {
            seed: 4,
            ..Default::default()
        };
        let (report, stats) = synthesize_to_files(
            tables.clone(),
            &default_templates(),
            &default_candidate_sets(),
            &Scorer::lexicon(),
            &options,
            &paths,
        )
        .unwrap();
        assert_eq!(report.verify_failed, 0);
        assert_eq!(stats.total, report.examples);
        let v = verify_corpus(&paths.corpus, paths.provenance.as_ref().unwrap(), &tables).unwrap();
        assert!(v.ok(), "{:?}", v.failures);
        assert_eq!(v.checked, report.examples);
    }
}
