//! On-disk corpus bundles.
//!
//! A bundle is a directory holding three UTF-8 files:
//!
//! * `corpus.manifest`: one JSON object with `format_version`, `rounds`,
//!   `dyads` (each `{dyad, speakers, rounds}`) and `pseudo`. Pseudo-pair
//!   bundles also carry `seed`, `pairs` and `role_conflicts`.
//! * `transcripts.ndj`: one JSON object per utterance with `dyad`, `round`,
//!   `fribble`, `director`, `speaker`, `global_index` and `tokens`, where each
//!   token is a `[surface, lemma, pos, disfluency]` array.
//! * `namings.ndj`: one JSON object per name with `speaker`, `fribble`,
//!   `phase` (`"pre"` or `"post"`) and `lemmas`.
//!
//! Utterances of a trial must be contiguous in `transcripts.ndj`; the matcher
//! of a trial is the dyad speaker who is not the director.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::corpus::{
    validate, Corpus, Dialogue, NamingRecord, Phase, Pos, PseudoOrigin, Token, Trial, Utterance,
    ValidationReport,
};

pub const FORMAT_VERSION: &str = "shcx-corpus/1";
pub const MANIFEST_FILE: &str = "corpus.manifest";
pub const TRANSCRIPTS_FILE: &str = "transcripts.ndj";
pub const NAMINGS_FILE: &str = "namings.ndj";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{file}:{line}: {kind}")]
    Record {
        file: &'static str,
        line: usize,
        kind: RecordError,
    },
    #[error("unsupported format version '{found}' (expected '{FORMAT_VERSION}')")]
    VersionMismatch { found: String },
    #[error("corpus failed validation with {} violation(s)", .0.violations.len())]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("record must be a JSON object")]
    NotObject,
    #[error("missing required field '{0}'")]
    MissingField(&'static str),
    #[error("field '{field}' must be {expected}")]
    FieldType {
        field: &'static str,
        expected: &'static str,
    },
    #[error("token {index}: unknown part-of-speech tag '{tag}'")]
    UnknownPos { index: usize, tag: String },
    #[error("dyad '{0}' is not listed in the manifest")]
    UnknownDyad(String),
    #[error("duplicate trial for dyad '{dyad}', fribble '{fribble}', round {round}")]
    DuplicateTrial {
        dyad: String,
        fribble: String,
        round: u32,
    },
    #[error("director '{found}' conflicts with '{expected}' for the same trial")]
    DirectorConflict { found: String, expected: String },
    #[error("director '{0}' is not a speaker of the dyad")]
    UnknownDirector(String),
}

impl BundleError {
    fn io(path: &Path, source: io::Error) -> Self {
        BundleError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stable short name for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            BundleError::Io { .. } => "io",
            BundleError::Record { kind, .. } => match kind {
                RecordError::UnknownPos { .. } => "unknown_pos",
                RecordError::DuplicateTrial { .. } => "duplicate_trial",
                _ => "malformed_record",
            },
            BundleError::VersionMismatch { .. } => "version_mismatch",
            BundleError::Invalid(_) => "invalid_corpus",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestDyad {
    dyad: String,
    speakers: [String; 2],
    #[serde(default)]
    rounds: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format_version: String,
    rounds: u32,
    dyads: Vec<ManifestDyad>,
    #[serde(default)]
    pseudo: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role_conflicts: Option<u32>,
}

/// Reads a bundle and validates it. Validation problems come back as
/// [`BundleError::Invalid`].
pub fn parse_corpus(dir: impl AsRef<Path>) -> Result<Corpus, BundleError> {
    let corpus = read_corpus(dir)?;
    let report = validate(&corpus);
    if report.is_valid() {
        Ok(corpus)
    } else {
        Err(BundleError::Invalid(report))
    }
}

/// Reads a bundle without running corpus validation; only record-level
/// problems are errors.
pub fn read_corpus(dir: impl AsRef<Path>) -> Result<Corpus, BundleError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| BundleError::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| BundleError::Record {
        file: MANIFEST_FILE,
        line: e.line(),
        kind: RecordError::Json(e.to_string()),
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(BundleError::VersionMismatch {
            found: manifest.format_version,
        });
    }

    let mut dialogues: Vec<Dialogue> = manifest
        .dyads
        .iter()
        .map(|m| Dialogue {
            dyad: m.dyad.clone(),
            speakers: m.speakers.clone(),
            rounds: m.rounds.unwrap_or(manifest.rounds),
            trials: Vec::new(),
        })
        .collect();
    let dyad_slot: HashMap<String, usize> = dialogues
        .iter()
        .enumerate()
        .map(|(i, d)| (d.dyad.clone(), i))
        .collect();

    let transcripts = dir.join(TRANSCRIPTS_FILE);
    for_each_record(&transcripts, TRANSCRIPTS_FILE, |obj| {
        let dyad = str_field(obj, "dyad")?;
        let slot = *dyad_slot
            .get(dyad)
            .ok_or_else(|| RecordError::UnknownDyad(dyad.to_string()))?;
        let d = &mut dialogues[slot];
        let round = u32_field(obj, "round")?;
        let fribble = str_field(obj, "fribble")?;
        let director = str_field(obj, "director")?;
        let utterance = Utterance {
            speaker: str_field(obj, "speaker")?.to_string(),
            global_index: u32_field(obj, "global_index")?,
            tokens: tokens_field(obj)?,
        };

        let continues_last = d
            .trials
            .last()
            .is_some_and(|t| t.fribble == fribble && t.round == round);
        if continues_last {
            let t = d.trials.last_mut().expect("checked above");
            if t.director != director {
                return Err(RecordError::DirectorConflict {
                    found: director.to_string(),
                    expected: t.director.clone(),
                });
            }
            t.utterances.push(utterance);
            return Ok(());
        }
        if d.trial(fribble, round).is_some() {
            return Err(RecordError::DuplicateTrial {
                dyad: dyad.to_string(),
                fribble: fribble.to_string(),
                round,
            });
        }
        let matcher = d
            .other_speaker(director)
            .ok_or_else(|| RecordError::UnknownDirector(director.to_string()))?
            .to_string();
        d.trials.push(Trial {
            fribble: fribble.to_string(),
            round,
            director: director.to_string(),
            matcher,
            utterances: vec![utterance],
        });
        Ok(())
    })?;

    let mut namings = Vec::new();
    let namings_path = dir.join(NAMINGS_FILE);
    for_each_record(&namings_path, NAMINGS_FILE, |obj| {
        let phase = match str_field(obj, "phase")? {
            "pre" => Phase::Pre,
            "post" => Phase::Post,
            _ => {
                return Err(RecordError::FieldType {
                    field: "phase",
                    expected: "\"pre\" or \"post\"",
                })
            }
        };
        let lemmas = obj
            .get("lemmas")
            .ok_or(RecordError::MissingField("lemmas"))?
            .as_array()
            .and_then(|items| {
                items
                    .iter()
                    .map(|v| v.as_str().map(str::to_string))
                    .collect::<Option<BTreeSet<_>>>()
            })
            .ok_or(RecordError::FieldType {
                field: "lemmas",
                expected: "an array of strings",
            })?;
        namings.push(NamingRecord {
            speaker: str_field(obj, "speaker")?.to_string(),
            fribble: str_field(obj, "fribble")?.to_string(),
            phase,
            lemmas,
        });
        Ok(())
    })?;

    let pseudo = manifest.pseudo.then(|| PseudoOrigin {
        seed: manifest.seed.unwrap_or(0),
        pairs: manifest.pairs.clone().unwrap_or_default(),
        role_conflicts: manifest.role_conflicts.unwrap_or(0),
    });

    Ok(Corpus {
        dialogues,
        namings,
        pseudo,
    })
}

fn for_each_record(
    path: &Path,
    file: &'static str,
    mut handle: impl FnMut(&Map<String, Value>) -> Result<(), RecordError>,
) -> Result<(), BundleError> {
    let reader = BufReader::new(File::open(path).map_err(|e| BundleError::io(path, e))?);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| BundleError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |kind| BundleError::Record {
            file,
            line: i + 1,
            kind,
        };
        let value: Value =
            serde_json::from_str(&line).map_err(|e| at(RecordError::Json(e.to_string())))?;
        let obj = value.as_object().ok_or_else(|| at(RecordError::NotObject))?;
        handle(obj).map_err(at)?;
    }
    Ok(())
}

fn str_field<'a>(obj: &'a Map<String, Value>, field: &'static str) -> Result<&'a str, RecordError> {
    obj.get(field)
        .ok_or(RecordError::MissingField(field))?
        .as_str()
        .ok_or(RecordError::FieldType {
            field,
            expected: "a string",
        })
}

fn u32_field(obj: &Map<String, Value>, field: &'static str) -> Result<u32, RecordError> {
    obj.get(field)
        .ok_or(RecordError::MissingField(field))?
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or(RecordError::FieldType {
            field,
            expected: "a non-negative 32-bit integer",
        })
}

fn tokens_field(obj: &Map<String, Value>) -> Result<Vec<Token>, RecordError> {
    let bad = RecordError::FieldType {
        field: "tokens",
        expected: "an array of [surface, lemma, pos, disfluency] arrays",
    };
    let items = obj
        .get("tokens")
        .ok_or(RecordError::MissingField("tokens"))?
        .as_array()
        .ok_or_else(|| bad.clone())?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| match item.as_array().map(Vec::as_slice) {
            Some([Value::String(surface), Value::String(lemma), Value::String(tag), Value::Bool(disfluency)]) => {
                let pos = tag.parse::<Pos>().map_err(|_| RecordError::UnknownPos {
                    index,
                    tag: tag.clone(),
                })?;
                Ok(Token {
                    surface: surface.clone(),
                    lemma: lemma.clone(),
                    pos,
                    disfluency: *disfluency,
                })
            }
            _ => Err(bad.clone()),
        })
        .collect()
}

/// Writes `c` into the bundle directory `dir`, creating it if needed.
/// Output is a pure function of `c`.
pub fn write_corpus(c: &Corpus, dir: impl AsRef<Path>) -> Result<(), BundleError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| BundleError::io(dir, e))?;

    let rounds = c.max_rounds();
    let manifest = Manifest {
        format_version: FORMAT_VERSION.to_string(),
        rounds,
        dyads: c
            .dialogues
            .iter()
            .map(|d| ManifestDyad {
                dyad: d.dyad.clone(),
                speakers: d.speakers.clone(),
                rounds: Some(d.rounds),
            })
            .collect(),
        pseudo: c.pseudo.is_some(),
        seed: c.pseudo.as_ref().map(|p| p.seed),
        pairs: c.pseudo.as_ref().map(|p| p.pairs.clone()),
        role_conflicts: c.pseudo.as_ref().map(|p| p.role_conflicts),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| BundleError::io(&manifest_path, e))?;

    write_lines(&dir.join(TRANSCRIPTS_FILE), |out| {
        for d in &c.dialogues {
            for t in &d.trials {
                for u in &t.utterances {
                    let tokens: Vec<Value> = u
                        .tokens
                        .iter()
                        .map(|tok| json!([tok.surface, tok.lemma, tok.pos.as_str(), tok.disfluency]))
                        .collect();
                    let record = json!({
                        "dyad": d.dyad,
                        "round": t.round,
                        "fribble": t.fribble,
                        "director": t.director,
                        "speaker": u.speaker,
                        "global_index": u.global_index,
                        "tokens": tokens,
                    });
                    writeln!(out, "{record}")?;
                }
            }
        }
        Ok(())
    })?;

    write_lines(&dir.join(NAMINGS_FILE), |out| {
        for n in &c.namings {
            let record = json!({
                "speaker": n.speaker,
                "fribble": n.fribble,
                "phase": n.phase.as_str(),
                "lemmas": n.lemmas,
            });
            writeln!(out, "{record}")?;
        }
        Ok(())
    })
}

pub(crate) fn write_lines(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), BundleError> {
    let file = File::create(path).map_err(|e| BundleError::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| BundleError::io(path, e))
}
