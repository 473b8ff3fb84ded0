//! In-memory representation of a referential-communication corpus.
//!
//! A corpus is a list of dyadic dialogues plus the individual naming records
//! collected before and after each dialogue. Each dialogue is split into
//! trials: one director/matcher episode for one referent (a "fribble") in one
//! round. Tokens arrive already tokenised, tagged with a Universal
//! Dependencies coarse tag, lemmatised and flagged for disfluency.
//!
//! Nothing here normalises text. Lemmas are compared by exact string
//! equality, and [`validate`] reports lemmas that are not lowercase NFC.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::is_nfc;

pub type SpeakerId = String;
pub type DyadId = String;
pub type FribbleId = String;

/// Universal Dependencies coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Cconj,
    Sconj,
    Num,
    Part,
    Intj,
    Aux,
    AdvOther,
    X,
}

impl Pos {
    pub const ALL: [Pos; 15] = [
        Pos::Noun,
        Pos::Verb,
        Pos::Adj,
        Pos::Adv,
        Pos::Pron,
        Pos::Det,
        Pos::Adp,
        Pos::Cconj,
        Pos::Sconj,
        Pos::Num,
        Pos::Part,
        Pos::Intj,
        Pos::Aux,
        Pos::AdvOther,
        Pos::X,
    ];

    /// Nouns, verbs, adjectives and adverbs. Everything else is a function word.
    pub fn is_content(self) -> bool {
        matches!(self, Pos::Noun | Pos::Verb | Pos::Adj | Pos::Adv)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Pron => "PRON",
            Pos::Det => "DET",
            Pos::Adp => "ADP",
            Pos::Cconj => "CCONJ",
            Pos::Sconj => "SCONJ",
            Pos::Num => "NUM",
            Pos::Part => "PART",
            Pos::Intj => "INTJ",
            Pos::Aux => "AUX",
            Pos::AdvOther => "ADV_OTHER",
            Pos::X => "X",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPos(pub String);

impl fmt::Display for UnknownPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown part-of-speech tag '{}'", self.0)
    }
}

impl std::error::Error for UnknownPos {}

impl FromStr for Pos {
    type Err = UnknownPos;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pos::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownPos(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
    pub disfluency: bool,
}

impl Token {
    pub fn new(surface: impl Into<String>, lemma: impl Into<String>, pos: Pos) -> Self {
        Token {
            surface: surface.into(),
            lemma: lemma.into(),
            pos,
            disfluency: false,
        }
    }

    pub fn disfluent(surface: impl Into<String>, lemma: impl Into<String>, pos: Pos) -> Self {
        Token {
            disfluency: true,
            ..Token::new(surface, lemma, pos)
        }
    }

    pub fn is_content(&self) -> bool {
        !self.disfluency && self.pos.is_content()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub speaker: SpeakerId,
    pub tokens: Vec<Token>,
    pub global_index: u32,
}

impl Utterance {
    /// The lemma stream used for matching: every non-disfluent token, in order.
    pub fn lemma_stream(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| !t.disfluency)
    }
}

/// Lemmas of the non-disfluent content-word tokens of `u`, in order.
pub fn content_lemmas(u: &Utterance) -> Vec<&str> {
    u.tokens
        .iter()
        .filter(|t| t.is_content())
        .map(|t| t.lemma.as_str())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub fribble: FribbleId,
    pub round: u32,
    pub director: SpeakerId,
    pub matcher: SpeakerId,
    pub utterances: Vec<Utterance>,
}

impl Trial {
    pub fn role_of(&self, speaker: &str) -> Option<Role> {
        if self.director == speaker {
            Some(Role::Director)
        } else if self.matcher == speaker {
            Some(Role::Matcher)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Director,
    Matcher,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub dyad: DyadId,
    pub speakers: [SpeakerId; 2],
    pub rounds: u32,
    pub trials: Vec<Trial>,
}

impl Dialogue {
    /// Distinct fribbles in order of first appearance.
    pub fn fribbles(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.trials
            .iter()
            .map(|t| t.fribble.as_str())
            .filter(|f| seen.insert(*f))
            .collect()
    }

    pub fn trial(&self, fribble: &str, round: u32) -> Option<&Trial> {
        self.trials
            .iter()
            .find(|t| t.fribble == fribble && t.round == round)
    }

    pub fn utterances(&self) -> impl Iterator<Item = (&Trial, &Utterance)> {
        self.trials
            .iter()
            .flat_map(|t| t.utterances.iter().map(move |u| (t, u)))
    }

    pub fn other_speaker(&self, speaker: &str) -> Option<&str> {
        match &self.speakers {
            [a, b] if a == speaker => Some(b),
            [a, b] if b == speaker => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pre,
    Post,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Pre => "pre",
            Phase::Post => "post",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamingRecord {
    pub speaker: SpeakerId,
    pub fribble: FribbleId,
    pub phase: Phase,
    pub lemmas: BTreeSet<String>,
}

/// Provenance of a pseudo-pair control corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoOrigin {
    pub seed: u64,
    /// `(anchor_dyad, partner_dyad)` per pseudo dialogue, in corpus order.
    pub pairs: Vec<(DyadId, DyadId)>,
    /// Trials where both recombined speakers held the same role in their source dialogues.
    pub role_conflicts: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
    pub namings: Vec<NamingRecord>,
    pub pseudo: Option<PseudoOrigin>,
}

impl Corpus {
    pub fn dialogue(&self, dyad: &str) -> Option<&Dialogue> {
        self.dialogues.iter().find(|d| d.dyad == dyad)
    }

    /// Naming lookup keyed by `(speaker, fribble, phase)`.
    pub fn naming_index(&self) -> HashMap<(&str, &str, Phase), &NamingRecord> {
        self.namings
            .iter()
            .map(|n| ((n.speaker.as_str(), n.fribble.as_str(), n.phase), n))
            .collect()
    }

    pub fn max_rounds(&self) -> u32 {
        self.dialogues.iter().map(|d| d.rounds).max().unwrap_or(0)
    }
}

/// Where in the corpus a violation was found.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "scope", rename_all = "snake_case")]
pub enum Locator {
    Corpus,
    Dialogue {
        dyad: DyadId,
    },
    Trial {
        dyad: DyadId,
        fribble: FribbleId,
        round: u32,
    },
    Utterance {
        dyad: DyadId,
        global_index: u32,
    },
    Naming {
        index: usize,
        speaker: SpeakerId,
        fribble: FribbleId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub at: Locator,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.at {
            Locator::Corpus => write!(f, "corpus: {}", self.message),
            Locator::Dialogue { dyad } => write!(f, "dyad {dyad}: {}", self.message),
            Locator::Trial {
                dyad,
                fribble,
                round,
            } => write!(
                f,
                "dyad {dyad}, fribble {fribble}, round {round}: {}",
                self.message
            ),
            Locator::Utterance { dyad, global_index } => {
                write!(f, "dyad {dyad}, utterance {global_index}: {}", self.message)
            }
            Locator::Naming {
                index,
                speaker,
                fribble,
            } => write!(
                f,
                "naming #{index} ({speaker}, {fribble}): {}",
                self.message
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, at: Locator, message: impl Into<String>) {
        self.violations.push(Violation {
            at,
            message: message.into(),
        });
    }
}

fn lemma_problem(lemma: &str) -> Option<&'static str> {
    if lemma.is_empty() {
        Some("empty lemma")
    } else if lemma.chars().any(char::is_uppercase) {
        Some("lemma is not lowercase")
    } else if !is_nfc(lemma) {
        Some("lemma is not NFC-normalised")
    } else {
        None
    }
}

/// Checks every structural invariant of the corpus. Never panics; problems
/// come back as violations.
pub fn validate(c: &Corpus) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut dyads_seen = HashSet::new();
    let mut speaker_home: HashMap<&str, &str> = HashMap::new();
    let mut covered: HashSet<(&str, &str)> = HashSet::new();

    for d in &c.dialogues {
        let here = || Locator::Dialogue {
            dyad: d.dyad.clone(),
        };
        if !dyads_seen.insert(d.dyad.as_str()) {
            report.push(here(), "duplicate dyad id");
        }
        if d.speakers[0] == d.speakers[1] {
            report.push(here(), "the two speakers share an id");
        }
        for s in &d.speakers {
            if let Some(prev) = speaker_home.insert(s.as_str(), d.dyad.as_str()) {
                if prev != d.dyad {
                    report.push(here(), format!("speaker {s} also appears in dyad {prev}"));
                }
            }
        }
        if d.rounds == 0 {
            report.push(here(), "round count must be at least 1");
        }

        let mut trial_keys = HashSet::new();
        let mut last_index: Option<u32> = None;
        let mut last_round = 0;
        for t in &d.trials {
            let at = || Locator::Trial {
                dyad: d.dyad.clone(),
                fribble: t.fribble.clone(),
                round: t.round,
            };
            if !trial_keys.insert((t.fribble.as_str(), t.round)) {
                report.push(at(), "duplicate (fribble, round) trial");
            }
            if t.round == 0 || t.round > d.rounds {
                report.push(at(), format!("round outside 1..={}", d.rounds));
            }
            if t.round < last_round {
                report.push(at(), "trials are not in chronological round order");
            }
            last_round = last_round.max(t.round);
            if t.director == t.matcher {
                report.push(at(), "director and matcher are the same speaker");
            }
            for role in [&t.director, &t.matcher] {
                if !d.speakers.contains(role) {
                    report.push(at(), format!("speaker {role} is not part of the dyad"));
                }
            }
            if t.utterances.is_empty() {
                report.push(at(), "trial has no utterances");
            }
            covered.extend(d.speakers.iter().map(|s| (s.as_str(), t.fribble.as_str())));

            for u in &t.utterances {
                let at = || Locator::Utterance {
                    dyad: d.dyad.clone(),
                    global_index: u.global_index,
                };
                if let Some(prev) = last_index {
                    if u.global_index <= prev {
                        report.push(at(), "global_index is not strictly increasing");
                    }
                }
                last_index = Some(u.global_index);
                if !d.speakers.contains(&u.speaker) {
                    report.push(at(), format!("speaker {} is not part of the dyad", u.speaker));
                }
                if u.tokens.is_empty() {
                    report.push(at(), "utterance has no tokens");
                }
                for (i, tok) in u.tokens.iter().enumerate() {
                    if let Some(problem) = lemma_problem(&tok.lemma) {
                        report.push(at(), format!("token {i}: {problem}"));
                    }
                }
            }
        }
    }

    let mut naming_keys: BTreeMap<(&str, &str, Phase), usize> = BTreeMap::new();
    for (index, n) in c.namings.iter().enumerate() {
        let at = || Locator::Naming {
            index,
            speaker: n.speaker.clone(),
            fribble: n.fribble.clone(),
        };
        if !speaker_home.contains_key(n.speaker.as_str()) {
            report.push(at(), "speaker does not appear in any dialogue");
        } else if !covered.contains(&(n.speaker.as_str(), n.fribble.as_str())) {
            report.push(at(), "fribble is never discussed by this speaker's dyad");
        }
        if n.lemmas.is_empty() {
            report.push(at(), "name has no lemmas");
        }
        for l in &n.lemmas {
            if let Some(problem) = lemma_problem(l) {
                report.push(at(), problem);
            }
        }
        if let Some(first) = naming_keys.insert((&n.speaker, &n.fribble, n.phase), index) {
            report.push(at(), format!("duplicate of naming #{first}"));
        }
    }

    if let Some(origin) = &c.pseudo {
        if origin.pairs.len() != c.dialogues.len() {
            report.push(
                Locator::Corpus,
                "pseudo-pair plan length differs from dialogue count",
            );
        }
    }

    report
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn content_lemmas_keep_content_in_order() {
        let u = utt(
            "a",
            0,
            vec![
                tok("dat", Pos::Det),
                tok("boek", Pos::Noun),
                tok("bovenop", Pos::Adv),
            ],
        );
        assert_eq!(content_lemmas(&u), vec!["boek", "bovenop"]);
    }

    #[test]
    fn content_lemmas_of_function_words_is_empty() {
        let u = utt("a", 0, vec![tok("op", Pos::Adp), tok("het", Pos::Det)]);
        assert!(content_lemmas(&u).is_empty());
    }

    #[test]
    fn content_lemmas_drop_disfluencies() {
        let u = utt(
            "a",
            0,
            vec![Token::disfluent("uh", "uh", Pos::Intj), tok("bal", Pos::Noun)],
        );
        assert_eq!(content_lemmas(&u), vec!["bal"]);
        // even a content-tagged disfluency is dropped
        let u = utt(
            "a",
            0,
            vec![Token::disfluent("ba-", "ba", Pos::Noun), tok("bal", Pos::Noun)],
        );
        assert_eq!(content_lemmas(&u), vec!["bal"]);
    }

    #[test]
    fn pos_tags_round_trip_through_strings() {
        for p in Pos::ALL {
            assert_eq!(p.as_str().parse::<Pos>().unwrap(), p);
        }
        assert_eq!("XYZ".parse::<Pos>(), Err(UnknownPos("XYZ".into())));
        assert!(!Pos::AdvOther.is_content());
    }

    #[test]
    fn well_formed_fixture_is_valid() {
        assert!(validate(&two_dyads()).is_valid());
    }

    #[test]
    fn director_equal_matcher_is_one_violation() {
        let mut c = two_dyads();
        c.dialogues[0].trials[0].matcher = "d1a".into();
        let report = validate(&c);
        assert_eq!(report.violations.len(), 1, "{:?}", report);
        assert_eq!(
            report.violations[0].at,
            Locator::Trial {
                dyad: "d1".into(),
                fribble: "f1".into(),
                round: 1
            }
        );
    }

    #[test]
    fn naming_for_unknown_speaker_is_one_violation() {
        let mut c = two_dyads();
        c.namings[0].speaker = "ghost".into();
        let report = validate(&c);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0].at, Locator::Naming { .. }));
    }

    #[test]
    fn lemma_normalisation_is_checked() {
        let mut c = two_dyads();
        c.dialogues[0].trials[0].utterances[0].tokens[1].lemma = "Bal".into();
        c.dialogues[1].trials[0].utterances[0].tokens[1].lemma = "cafe\u{301}".into();
        let report = validate(&c);
        assert_eq!(report.violations.len(), 2);
    }

    #[test]
    fn ordering_and_range_checks() {
        let mut c = two_dyads();
        c.dialogues[0].trials[1].utterances[0].global_index = 1;
        c.dialogues[1].trials[1].round = 3;
        let report = validate(&c);
        let msgs: Vec<_> = report.violations.iter().map(|v| v.to_string()).collect();
        assert_eq!(msgs.len(), 2, "{msgs:?}");
        assert!(msgs[0].contains("strictly increasing"));
        assert!(msgs[1].contains("round outside"));
    }
}
