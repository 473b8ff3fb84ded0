//! End-to-end driver: bundle in, deterministic report directory out.
//!
//! Layout of the output directory:
//!
//! ```text
//! summary.json
//! real/extraction.ndj   one record per surviving construction
//! real/types.ndj        one record per construction type
//! real/rows.csv         analysis rows
//! real/rounds.csv       per-round aggregates
//! pseudo/...            same four files for the pseudo-pair corpus
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    analysis1, analysis2, analysis3, process_corpus, summarize1, summarize2, summarize3, Analysis1Summary,
    Analysis2Summary, Analysis3Summary, AnalysisRow, DyadResult,
};
use crate::bundle::{parse_corpus, write_lines, BundleError};
use crate::corpus::{Corpus, DyadId, FribbleId};
use crate::extraction::Occurrence;
use crate::pseudo::{build_pseudo_corpus, PseudoError};

pub const REPORT_VERSION: &str = "shcx-report/1";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("building pseudo-pairs")]
    Pseudo(#[from] PseudoError),
    #[error("{}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("writing table")]
    Csv(#[from] csv::Error),
    #[error("unknown analysis {0}; expected 1, 2 or 3")]
    UnknownAnalysis(u8),
}

impl PipelineError {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Bundle(e) => e.kind(),
            PipelineError::Pseudo(_) => "pseudo_pairs",
            PipelineError::Io { .. } => "io",
            PipelineError::Json { .. } => "malformed_report",
            PipelineError::Csv(_) => "io",
            PipelineError::UnknownAnalysis(_) => "usage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub output: PathBuf,
    pub seed: u64,
    pub analyses: BTreeSet<u8>,
    pub pseudo: bool,
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            corpus: corpus.into(),
            output: output.into(),
            seed: 0,
            analyses: [1, 2, 3].into(),
            pseudo: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub dialogues: usize,
    pub constructions: usize,
    pub types: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub role_conflicts: Option<u32>,
    pub analysis1: Option<Analysis1Summary>,
    pub analysis2: Option<Analysis2Summary>,
    pub analysis3: Option<Analysis3Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format: String,
    pub seed: u64,
    pub analyses: Vec<u8>,
    pub real: CorpusSummary,
    pub pseudo: Option<CorpusSummary>,
}

impl Summary {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = dir.as_ref().join(SUMMARY_FILE);
        let text = fs::read_to_string(&path).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| PipelineError::Json { path, source })
    }
}

/// Everything computed for one corpus.
#[derive(Debug, Clone)]
pub struct CorpusReport {
    pub results: Vec<DyadResult>,
    pub rows: Vec<AnalysisRow>,
    pub summary: CorpusSummary,
}

pub fn analyze_corpus(corpus: &Corpus, analyses: &BTreeSet<u8>) -> Result<CorpusReport, PipelineError> {
    if let Some(&bad) = analyses.iter().find(|&&a| !(1..=3).contains(&a)) {
        return Err(PipelineError::UnknownAnalysis(bad));
    }
    let results = process_corpus(corpus);
    let mut rows = Vec::new();
    let mut summary = CorpusSummary {
        dialogues: corpus.dialogues.len(),
        constructions: results.iter().flat_map(|r| r.extraction.values()).map(Vec::len).sum(),
        types: results.iter().flat_map(|r| &r.timelines).map(|t| t.types.len()).sum(),
        role_conflicts: corpus.pseudo.as_ref().map(|p| p.role_conflicts),
        analysis1: None,
        analysis2: None,
        analysis3: None,
    };
    if analyses.contains(&1) {
        let r = analysis1(corpus, &results);
        summary.analysis1 = Some(summarize1(&r));
        rows.extend(r);
    }
    if analyses.contains(&2) {
        let r = analysis2(corpus, &results);
        summary.analysis2 = Some(summarize2(&r));
        rows.extend(r);
    }
    if analyses.contains(&3) {
        let r = analysis3(corpus, &results);
        summary.analysis3 = Some(summarize3(&r));
        rows.extend(r);
    }
    Ok(CorpusReport { results, rows, summary })
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let corpus = parse_corpus(&cfg.corpus)?;
    run_on_corpus(&corpus, cfg)
}

/// Same as [`run_pipeline`] for a corpus already in memory; `cfg.corpus` is
/// not read.
pub fn run_on_corpus(corpus: &Corpus, cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let real = analyze_corpus(corpus, &cfg.analyses)?;
    write_report(&real, &cfg.output.join("real"))?;
    let pseudo = if cfg.pseudo {
        let pc = build_pseudo_corpus(corpus, cfg.seed)?;
        let report = analyze_corpus(&pc, &cfg.analyses)?;
        write_report(&report, &cfg.output.join("pseudo"))?;
        Some(report.summary)
    } else {
        None
    };
    let summary = Summary {
        format: REPORT_VERSION.to_string(),
        seed: cfg.seed,
        analyses: cfg.analyses.iter().copied().collect(),
        real: real.summary,
        pseudo,
    };
    let path = cfg.output.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(&summary).map_err(|source| PipelineError::Json {
        path: path.clone(),
        source,
    })?;
    text.push('\n');
    write_lines(&path, |w| w.write_all(text.as_bytes()))?;
    Ok(summary)
}

#[derive(Serialize)]
struct ExtractionRecord<'a> {
    dyad: &'a DyadId,
    fribble: &'a FribbleId,
    lemmas: &'a [String],
    content: &'a [bool],
    is_maximal: bool,
    occurrences: &'a [Occurrence],
}

#[derive(Serialize)]
struct TypeRecord<'a> {
    dyad: &'a DyadId,
    fribble: &'a FribbleId,
    core: &'a str,
    dominant: bool,
    rounds_used: Vec<u32>,
    occurrence_count: usize,
    first_round: u32,
    last_round: u32,
    members: Vec<&'a [String]>,
}

fn ndjson<T: Serialize>(w: &mut impl Write, rec: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, rec)?;
    w.write_all(b"\n")
}

/// Writes `extraction.ndj` and `types.ndj`.
pub fn write_extraction(results: &[DyadResult], dir: &Path) -> Result<(), PipelineError> {
    make_dir(dir)?;
    write_lines(&dir.join("extraction.ndj"), |w| {
        for r in results {
            for (fribble, cs) in &r.extraction {
                for c in cs {
                    ndjson(
                        w,
                        &ExtractionRecord {
                            dyad: &r.dyad,
                            fribble,
                            lemmas: &c.lemmas,
                            content: &c.content,
                            is_maximal: c.is_maximal,
                            occurrences: &c.occurrences,
                        },
                    )?;
                }
            }
        }
        Ok(())
    })?;
    write_lines(&dir.join("types.ndj"), |w| {
        for r in results {
            for t in &r.timelines {
                let dominant = t.dominant().map(|d| d.core.as_str());
                for ty in &t.types {
                    ndjson(
                        w,
                        &TypeRecord {
                            dyad: &t.dyad,
                            fribble: &t.fribble,
                            core: &ty.core,
                            dominant: dominant == Some(ty.core.as_str()),
                            rounds_used: ty.rounds_used.iter().copied().collect(),
                            occurrence_count: ty.occurrence_count,
                            first_round: ty.first_round,
                            last_round: ty.last_round,
                            members: ty.members.iter().map(|m| m.lemmas.as_slice()).collect(),
                        },
                    )?;
                }
            }
        }
        Ok(())
    })?;
    Ok(())
}

fn make_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_csv<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    write_lines(path, |out| out.write_all(&bytes))?;
    Ok(())
}

#[derive(Serialize)]
struct RoundRecord {
    round: u32,
    coverage_mean: Option<f64>,
    coverage_pooled: Option<f64>,
    types_mean: Option<f64>,
    pre_name_similarity: Option<f64>,
    post_name_similarity: Option<f64>,
}

fn round_records(s: &CorpusSummary) -> Vec<RoundRecord> {
    let a1 = s.analysis1.as_ref();
    let a2 = s.analysis2.as_ref();
    let last = a1
        .map(|a| a.rounds.len())
        .into_iter()
        .chain(a2.map(|a| a.post.mean_similarity_by_round.len()))
        .max()
        .unwrap_or(0);
    (1..=last as u32)
        .map(|round| {
            let r1 = a1.and_then(|a| a.rounds.iter().find(|r| r.round == round));
            let sim = |by_round: &[(u32, Option<f64>)]| by_round.iter().find(|(r, _)| *r == round).and_then(|(_, s)| *s);
            RoundRecord {
                round,
                coverage_mean: r1.and_then(|r| r.mean),
                coverage_pooled: r1.and_then(|r| r.pooled),
                types_mean: r1.and_then(|r| r.mean_types),
                pre_name_similarity: a2.and_then(|a| sim(&a.pre.mean_similarity_by_round)),
                post_name_similarity: a2.and_then(|a| sim(&a.post.mean_similarity_by_round)),
            }
        })
        .collect()
}

/// Writes the four per-corpus files into `dir`.
pub fn write_report(report: &CorpusReport, dir: &Path) -> Result<(), PipelineError> {
    write_extraction(&report.results, dir)?;
    if report.rows.is_empty() {
        // csv writes no header without records
        write_lines(&dir.join("rows.csv"), |w| {
            w.write_all(b"analysis,dyad,fribble,round,speaker,phase,core,metric,value\n")
        })?;
    } else {
        write_csv(&dir.join("rows.csv"), &report.rows)?;
    }
    write_csv(&dir.join("rounds.csv"), round_records(&report.summary))?;
    Ok(())
}

/// Reads `rows.csv` back into rows.
pub fn read_rows(path: &Path) -> Result<Vec<AnalysisRow>, PipelineError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Result<Vec<AnalysisRow>, csv::Error> = r.deserialize().collect();
    Ok(rows?)
}
