//! Synthetic referential-game corpora with known ground truth.
//!
//! Every (dyad, fribble) cell gets `type_prune_schedule[0]` planted cores,
//! lemmas that no other cell uses. In round `r` only the first
//! `type_prune_schedule[r - 1]` cores are alive, so `cores[0]` survives
//! longest and is the expected dominant type. An utterance carries alive
//! cores with probability `reuse_probability[r - 1]`; such an utterance
//! names each alive core with probability `core_mention_rate`, and at least
//! one.
//!
//! Besides cores an utterance may hold:
//! - a descriptor from a small per-fribble pool shared by all dyads, at a
//!   rate that does not depend on the round (stimulus-driven overlap, the
//!   only source of chance sharing in pseudo-pairs);
//! - a generic word from a corpus-wide pool, always first and followed by
//!   padding, which the multi-referent filter is expected to remove;
//! - padding drawn from a large per-fribble distractor pool;
//! - disfluent fillers, which extraction ignores.
//!
//! Names: pre names are an idiosyncratic lemma, plus a descriptor half of
//! the time. Post names swap the idiosyncratic lemma for `cores[0]` with
//! `name_adoption_probability`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{write_corpus, write_lines, BundleError};
use crate::corpus::{Corpus, Dialogue, DyadId, FribbleId, NamingRecord, Phase, Pos, Token, Trial, Utterance};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.ndj";

const FUNCTION_TAGS: [Pos; 6] = [Pos::Det, Pos::Adp, Pos::Pron, Pos::Cconj, Pos::Aux, Pos::Part];
const DISTRACTOR_TAGS: [Pos; 3] = [Pos::Noun, Pos::Verb, Pos::Adv];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub dyads: usize,
    pub fribbles: usize,
    pub rounds: u32,
    /// Distractor pool size per fribble.
    pub content_vocabulary: usize,
    /// Function words shared by the whole corpus.
    pub function_vocabulary: usize,
    /// Descriptor pool size per fribble.
    pub descriptors: usize,
    pub descriptor_rate: f64,
    pub generic_words: usize,
    pub generic_rate: f64,
    /// Chance that a padding lemma comes from a pool shared by all fribbles.
    pub distractor_overlap: f64,
    pub disfluency_rate: f64,
    pub reuse_probability: Vec<f64>,
    pub core_mention_rate: f64,
    pub type_prune_schedule: Vec<usize>,
    pub name_adoption_probability: f64,
    pub director_utterances: [u32; 2],
    pub matcher_utterances: [u32; 2],
    pub utterance_length: [u32; 2],
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            dyads: 66,
            fribbles: 16,
            rounds: 6,
            content_vocabulary: 1_000_000,
            function_vocabulary: 12,
            descriptors: 5,
            descriptor_rate: 0.2,
            generic_words: 4,
            generic_rate: 0.5,
            distractor_overlap: 0.0,
            disfluency_rate: 0.05,
            reuse_probability: vec![0.5, 0.58, 0.66, 0.74, 0.82, 0.9],
            core_mention_rate: 0.6,
            type_prune_schedule: vec![4, 3, 2, 2, 1, 1],
            name_adoption_probability: 0.7,
            director_utterances: [3, 5],
            matcher_utterances: [1, 3],
            utterance_length: [3, 8],
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be at least {1}")]
    TooSmall(&'static str, usize),
    #[error("{field} has {got} entries, expected one per round ({expected})")]
    ScheduleLength {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field} = {value} is not a probability")]
    Probability { field: &'static str, value: f64 },
    #[error("{0} range is empty or starts at zero")]
    Range(&'static str),
    #[error("type_prune_schedule must not increase")]
    GrowingSchedule,
    #[error("cannot read generator config: {0}")]
    Read(String),
}

impl GeneratorConfig {
    /// Parses and validates a TOML config; missing fields take their defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Read(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Same config with a constant reuse probability in every round.
    pub fn with_reuse(mut self, p: f64) -> Self {
        self.reuse_probability = vec![p; self.rounds as usize];
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, value, min) in [
            ("dyads", self.dyads, 2),
            ("fribbles", self.fribbles, 1),
            ("rounds", self.rounds as usize, 1),
            ("content_vocabulary", self.content_vocabulary, 1),
            ("function_vocabulary", self.function_vocabulary, 1),
        ] {
            if value < min {
                return Err(ConfigError::TooSmall(field, min));
            }
        }
        let rounds = self.rounds as usize;
        for (field, got) in [
            ("reuse_probability", self.reuse_probability.len()),
            ("type_prune_schedule", self.type_prune_schedule.len()),
        ] {
            if got != rounds {
                return Err(ConfigError::ScheduleLength {
                    field,
                    expected: rounds,
                    got,
                });
            }
        }
        let mut probabilities = vec![
            ("descriptor_rate", self.descriptor_rate),
            ("generic_rate", self.generic_rate),
            ("distractor_overlap", self.distractor_overlap),
            ("disfluency_rate", self.disfluency_rate),
            ("name_adoption_probability", self.name_adoption_probability),
            ("core_mention_rate", self.core_mention_rate),
        ];
        probabilities.extend(self.reuse_probability.iter().map(|&p| ("reuse_probability", p)));
        for (field, value) in probabilities {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { field, value });
            }
        }
        for (field, [lo, hi]) in [
            ("director_utterances", self.director_utterances),
            ("matcher_utterances", self.matcher_utterances),
            ("utterance_length", self.utterance_length),
        ] {
            if lo == 0 || lo > hi {
                return Err(ConfigError::Range(field));
            }
        }
        if self.descriptor_rate > 0.0 && self.descriptors == 0 {
            return Err(ConfigError::TooSmall("descriptors", 1));
        }
        if self.generic_rate > 0.0 && self.generic_words == 0 {
            return Err(ConfigError::TooSmall("generic_words", 1));
        }
        if self.type_prune_schedule.windows(2).any(|w| w[1] > w[0]) {
            return Err(ConfigError::GrowingSchedule);
        }
        Ok(())
    }
}

/// Bookkeeping for one (dyad, fribble) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTruth {
    pub dyad: DyadId,
    pub fribble: FribbleId,
    /// Planted cores in survival order; `cores[0]` lives longest.
    pub cores: Vec<String>,
    /// Cores alive in each round, index 0 being round 1.
    pub alive: Vec<Vec<String>>,
    /// Cores actually emitted by each speaker in each round.
    pub emitted: Vec<[Vec<String>; 2]>,
    pub expected_dominant: Option<String>,
    /// Whether each speaker's post name took `cores[0]`.
    pub adopted: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub function_words: Vec<String>,
    pub generic_words: Vec<String>,
    pub descriptors: BTreeMap<FribbleId, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub vocabulary: Vocabulary,
    pub cells: Vec<CellTruth>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TruthRecord {
    Vocabulary(Vocabulary),
    Cell(CellTruth),
}

impl GroundTruth {
    pub fn cell(&self, dyad: &str, fribble: &str) -> Option<&CellTruth> {
        self.cells.iter().find(|c| c.dyad == dyad && c.fribble == fribble)
    }

    pub fn is_planted(&self, lemma: &str) -> bool {
        self.cells.iter().any(|c| c.cores.iter().any(|k| k == lemma))
    }

    pub fn is_descriptor(&self, lemma: &str) -> bool {
        self.vocabulary.descriptors.values().flatten().any(|d| d == lemma)
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        let mut push = |rec: &TruthRecord| {
            out.push_str(&serde_json::to_string(rec).expect("serialisable"));
            out.push('\n');
        };
        push(&TruthRecord::Vocabulary(self.vocabulary.clone()));
        for c in &self.cells {
            push(&TruthRecord::Cell(c.clone()));
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, serde_json::Error> {
        let mut vocabulary = None;
        let mut cells = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line)? {
                TruthRecord::Vocabulary(v) => vocabulary = Some(v),
                TruthRecord::Cell(c) => cells.push(c),
            }
        }
        Ok(GroundTruth {
            vocabulary: vocabulary.unwrap_or(Vocabulary {
                function_words: Vec::new(),
                generic_words: Vec::new(),
                descriptors: BTreeMap::new(),
            }),
            cells,
        })
    }
}

struct Lexicon {
    function_words: Vec<String>,
    generic_words: Vec<String>,
    descriptors: Vec<Vec<String>>,
    fribbles: Vec<FribbleId>,
    shared_distractors: Vec<String>,
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

fn lexicon(cfg: &GeneratorConfig) -> Lexicon {
    let fw = width(cfg.fribbles + 1);
    let fribbles: Vec<FribbleId> = (1..=cfg.fribbles).map(|f| format!("f{f:0fw$}")).collect();
    Lexicon {
        function_words: (0..cfg.function_vocabulary).map(|i| format!("fn{i}")).collect(),
        generic_words: (0..cfg.generic_words).map(|i| format!("gen{i}")).collect(),
        descriptors: fribbles
            .iter()
            .map(|f| (0..cfg.descriptors).map(|i| format!("{f}desc{i}")).collect())
            .collect(),
        shared_distractors: (0..8).map(|i| format!("common{i}")).collect(),
        fribbles,
    }
}

fn range(rng: &mut ChaCha8Rng, [lo, hi]: [u32; 2]) -> u32 {
    rng.random_range(lo..=hi)
}

/// Builds the corpus and its ground truth. Each dyad draws from its own
/// ChaCha stream, so adding dyads never changes the earlier ones.
pub fn generate(cfg: &GeneratorConfig) -> Result<(Corpus, GroundTruth), ConfigError> {
    cfg.validate()?;
    let lex = lexicon(cfg);
    let dw = width(cfg.dyads + 1);
    let mut dialogues = Vec::with_capacity(cfg.dyads);
    let mut namings = Vec::new();
    let mut cells = Vec::new();
    for i in 0..cfg.dyads {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let dyad = format!("d{:0dw$}", i + 1);
        let (d, mut n, mut c) = generate_dyad(cfg, &lex, dyad, &mut rng);
        dialogues.push(d);
        namings.append(&mut n);
        cells.append(&mut c);
    }
    let truth = GroundTruth {
        vocabulary: Vocabulary {
            function_words: lex.function_words.clone(),
            generic_words: lex.generic_words.clone(),
            descriptors: lex.fribbles.iter().cloned().zip(lex.descriptors.iter().cloned()).collect(),
        },
        cells,
    };
    Ok((
        Corpus {
            dialogues,
            namings,
            pseudo: None,
        },
        truth,
    ))
}

/// Writes the corpus bundle plus the ground-truth stream into `dir`.
pub fn write_synthetic(corpus: &Corpus, truth: &GroundTruth, dir: impl AsRef<Path>) -> Result<(), BundleError> {
    let dir = dir.as_ref();
    write_corpus(corpus, dir)?;
    let body = truth.to_ndjson();
    write_lines(&dir.join(GROUND_TRUTH_FILE), |w| w.write_all(body.as_bytes()))
}

fn generate_dyad(
    cfg: &GeneratorConfig,
    lex: &Lexicon,
    dyad: DyadId,
    rng: &mut ChaCha8Rng,
) -> (Dialogue, Vec<NamingRecord>, Vec<CellTruth>) {
    let speakers = [format!("{dyad}a"), format!("{dyad}b")];
    let planted = cfg.type_prune_schedule.first().copied().unwrap_or(0);
    let cores: Vec<Vec<String>> = lex
        .fribbles
        .iter()
        .map(|f| (0..planted).map(|k| format!("{dyad}{f}core{k}")).collect())
        .collect();
    let mut emitted: Vec<Vec<[Vec<String>; 2]>> =
        vec![vec![[Vec::new(), Vec::new()]; cfg.rounds as usize]; lex.fribbles.len()];

    let mut trials = Vec::new();
    let mut next_index = 0u32;
    for round in 1..=cfg.rounds {
        let r = round as usize - 1;
        let alive = cfg.type_prune_schedule[r];
        let reuse = cfg.reuse_probability[r];
        let mut order: Vec<usize> = (0..lex.fribbles.len()).collect();
        order.shuffle(rng);
        for f in order {
            let director = (f + round as usize) % 2;
            let mut turns = Vec::new();
            let (mut left_d, mut left_m) = (
                range(rng, cfg.director_utterances),
                range(rng, cfg.matcher_utterances),
            );
            while left_d + left_m > 0 {
                if left_d > 0 {
                    turns.push(director);
                    left_d -= 1;
                }
                if left_m > 0 {
                    turns.push(1 - director);
                    left_m -= 1;
                }
            }
            let mut utterances = Vec::with_capacity(turns.len());
            for who in turns {
                let mut chosen: Vec<&String> = Vec::new();
                if alive > 0 && rng.random_bool(reuse) {
                    chosen = cores[f][..alive]
                        .iter()
                        .filter(|_| rng.random_bool(cfg.core_mention_rate))
                        .collect();
                    if chosen.is_empty() {
                        chosen.push(cores[f][..alive].choose(rng).expect("alive > 0"));
                    }
                }
                for c in &chosen {
                    let slot = &mut emitted[f][r][who];
                    if !slot.contains(c) {
                        slot.push((*c).clone());
                    }
                }
                let tokens = utterance(cfg, lex, f, &chosen, rng);
                utterances.push(Utterance {
                    speaker: speakers[who].clone(),
                    tokens,
                    global_index: next_index,
                });
                next_index += 1;
            }
            trials.push(Trial {
                fribble: lex.fribbles[f].clone(),
                round,
                director: speakers[director].clone(),
                matcher: speakers[1 - director].clone(),
                utterances,
            });
        }
    }

    let mut namings = Vec::new();
    let mut cells = Vec::new();
    for (f, fribble) in lex.fribbles.iter().enumerate() {
        let mut adopted = [false; 2];
        for (s, speaker) in speakers.iter().enumerate() {
            for phase in [Phase::Pre, Phase::Post] {
                let adopt = phase == Phase::Post
                    && !cores[f].is_empty()
                    && rng.random_bool(cfg.name_adoption_probability);
                let head = if adopt {
                    adopted[s] = true;
                    cores[f][0].clone()
                } else {
                    format!("{speaker}{fribble}{}", phase.as_str())
                };
                let mut lemmas = std::collections::BTreeSet::from([head]);
                if !lex.descriptors[f].is_empty() && rng.random_bool(0.5) {
                    lemmas.insert(lex.descriptors[f].choose(rng).expect("non-empty").clone());
                }
                namings.push(NamingRecord {
                    speaker: speaker.clone(),
                    fribble: fribble.clone(),
                    phase,
                    lemmas,
                });
            }
        }
        cells.push(CellTruth {
            dyad: dyad.clone(),
            fribble: fribble.clone(),
            alive: cfg
                .type_prune_schedule
                .iter()
                .map(|&k| cores[f][..k].to_vec())
                .collect(),
            emitted: std::mem::take(&mut emitted[f]),
            expected_dominant: cores[f].first().cloned(),
            cores: cores[f].clone(),
            adopted,
        });
    }

    (
        Dialogue {
            dyad,
            speakers,
            rounds: cfg.rounds,
            trials,
        },
        namings,
        cells,
    )
}

fn function_word(lex: &Lexicon, rng: &mut ChaCha8Rng) -> Token {
    let i = rng.random_range(0..lex.function_words.len());
    let w = &lex.function_words[i];
    Token::new(w.clone(), w.clone(), FUNCTION_TAGS[i % FUNCTION_TAGS.len()])
}

fn distractor(cfg: &GeneratorConfig, lex: &Lexicon, f: usize, rng: &mut ChaCha8Rng) -> Token {
    let lemma = if rng.random_bool(cfg.distractor_overlap) {
        lex.shared_distractors.choose(rng).expect("non-empty").clone()
    } else {
        format!("{}w{}", lex.fribbles[f], rng.random_range(0..cfg.content_vocabulary))
    };
    let pos = *DISTRACTOR_TAGS.choose(rng).expect("non-empty");
    Token::new(lemma.clone(), lemma, pos)
}

fn utterance(cfg: &GeneratorConfig, lex: &Lexicon, f: usize, cores: &[&String], rng: &mut ChaCha8Rng) -> Vec<Token> {
    let mut units: Vec<Vec<Token>> = Vec::new();
    let phrase = |head: Token, rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.5) {
            vec![function_word(lex, rng), head]
        } else {
            vec![head]
        }
    };
    for c in cores {
        units.push(phrase(Token::new(c.as_str(), c.as_str(), Pos::Noun), rng));
    }
    if rng.random_bool(cfg.descriptor_rate) {
        let d = lex.descriptors[f].choose(rng).expect("validated");
        units.push(phrase(Token::new(d.as_str(), d.as_str(), Pos::Adj), rng));
    }
    let target = range(rng, cfg.utterance_length) as usize;
    let mut len: usize = units.iter().map(Vec::len).sum();
    while len < target {
        units.push(vec![distractor(cfg, lex, f, rng)]);
        len += 1;
    }
    units.shuffle(rng);
    // generic words sit between the utterance start and padding, so the only
    // shared sequence they can form is the bare word
    if rng.random_bool(cfg.generic_rate) {
        let g = lex.generic_words.choose(rng).expect("validated");
        let pad = distractor(cfg, lex, f, rng);
        units.insert(0, vec![Token::new(g.as_str(), g.as_str(), Pos::Noun), pad]);
    }
    let mut tokens = Vec::with_capacity(len + 2);
    for unit in units {
        if rng.random_bool(cfg.disfluency_rate) {
            tokens.push(Token::disfluent("uh", "uh", Pos::Intj));
        }
        tokens.extend(unit);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            dyads: 4,
            fribbles: 3,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn output_is_valid_and_deterministic() {
        let (c, t) = generate(&small()).unwrap();
        assert!(validate(&c).is_valid(), "{:?}", validate(&c).violations.first());
        assert_eq!(c.dialogues.len(), 4);
        assert_eq!(c.namings.len(), 4 * 3 * 2 * 2);
        assert_eq!(t.cells.len(), 12);
        let (c2, t2) = generate(&small()).unwrap();
        assert_eq!(c, c2);
        assert_eq!(t, t2);
        let (c3, _) = generate(&GeneratorConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(c, c3);
    }

    #[test]
    fn dyads_do_not_depend_on_dyad_count() {
        let (c, _) = generate(&small()).unwrap();
        let (more, _) = generate(&GeneratorConfig { dyads: 6, ..small() }).unwrap();
        assert_eq!(c.dialogues[..], more.dialogues[..4]);
    }

    #[test]
    fn alive_sets_follow_schedule() {
        let (_, t) = generate(&small()).unwrap();
        let cell = &t.cells[0];
        let sizes: Vec<usize> = cell.alive.iter().map(Vec::len).collect();
        assert_eq!(sizes, [4, 3, 2, 2, 1, 1]);
        assert_eq!(cell.expected_dominant.as_ref(), Some(&cell.cores[0]));
        for (r, round) in cell.emitted.iter().enumerate() {
            for core in round.iter().flatten() {
                assert!(cell.alive[r].contains(core));
            }
        }
    }

    #[test]
    fn zero_reuse_emits_no_cores() {
        let (_, t) = generate(&small().with_reuse(0.0)).unwrap();
        assert!(t.cells.iter().all(|c| c.emitted.iter().flatten().all(Vec::is_empty)));
    }

    #[test]
    fn ground_truth_round_trips() {
        let (_, t) = generate(&small()).unwrap();
        assert_eq!(GroundTruth::from_ndjson(&t.to_ndjson()).unwrap(), t);
    }

    #[test]
    fn config_errors() {
        let bad = GeneratorConfig {
            reuse_probability: vec![0.5; 3],
            ..small()
        };
        assert!(matches!(bad.validate(), Err(ConfigError::ScheduleLength { .. })));
        let bad = small().with_reuse(1.5);
        assert!(matches!(bad.validate(), Err(ConfigError::Probability { .. })));
        let bad = GeneratorConfig {
            type_prune_schedule: vec![1, 2, 2, 2, 2, 2],
            ..small()
        };
        assert_eq!(bad.validate(), Err(ConfigError::GrowingSchedule));
        let bad = GeneratorConfig { dyads: 1, ..small() };
        assert_eq!(bad.validate(), Err(ConfigError::TooSmall("dyads", 2)));
    }

    #[test]
    fn toml_config_uses_defaults_for_missing_keys() {
        let cfg = GeneratorConfig::from_toml("dyads = 10\nseed = 7\nreuse_probability = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0]\n").unwrap();
        assert_eq!((cfg.dyads, cfg.seed, cfg.fribbles), (10, 7, 16));
        assert!(GeneratorConfig::from_toml("dyad = 3").is_err());
    }
}
