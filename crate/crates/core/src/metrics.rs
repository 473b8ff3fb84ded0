//! Corpus-level measurements built on top of extraction and typing.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Dialogue, DyadId, FribbleId, NamingRecord, Phase, SpeakerId};
use crate::extraction::Extraction;
use crate::stats::lexical_cosine;
use crate::typing::ConstructionType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundCoverage {
    pub round: u32,
    pub utterances: usize,
    pub covered: usize,
}

impl RoundCoverage {
    /// `None` when the round has no utterances.
    pub fn fraction(&self) -> Option<f64> {
        (self.utterances > 0).then(|| self.covered as f64 / self.utterances as f64)
    }
}

/// Per round, how many utterances hold at least one occurrence of a surviving
/// shared construction of their own trial's fribble.
pub fn utterance_coverage(d: &Dialogue, extraction: &Extraction) -> Vec<RoundCoverage> {
    let hits: HashSet<(&str, u32)> = extraction
        .iter()
        .flat_map(|(fribble, cs)| {
            cs.iter()
                .flat_map(|c| c.occurrences.iter())
                .map(move |o| (fribble.as_str(), o.utterance_index))
        })
        .collect();
    let mut out: Vec<RoundCoverage> = (1..=d.rounds)
        .map(|round| RoundCoverage {
            round,
            utterances: 0,
            covered: 0,
        })
        .collect();
    for (trial, u) in d.utterances() {
        let Some(slot) = out.get_mut(trial.round as usize - 1) else {
            continue;
        };
        slot.utterances += 1;
        if hits.contains(&(trial.fribble.as_str(), u.global_index)) {
            slot.covered += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NameOverlap {
    pub overlaps: bool,
    pub max_sim: f64,
    pub mean_sim: Option<f64>,
    /// `(core, similarity)` in the order of the input types.
    pub per_type: Vec<(String, f64)>,
}

/// Similarity of one name to each construction type, comparing the name's
/// lemmas with the union of each type's content lemmas.
pub fn name_overlap(name: &NamingRecord, types: &[ConstructionType]) -> NameOverlap {
    let lemmas: BTreeSet<&str> = name.lemmas.iter().map(String::as_str).collect();
    let per_type: Vec<(String, f64)> = types
        .iter()
        .map(|t| {
            let sim = lexical_cosine(&lemmas, &t.lemma_set()).unwrap_or(0.0);
            (t.core.clone(), sim)
        })
        .collect();
    let max_sim = per_type.iter().map(|(_, s)| *s).fold(0.0, f64::max);
    let mean_sim = (!per_type.is_empty())
        .then(|| per_type.iter().map(|(_, s)| s).sum::<f64>() / per_type.len() as f64);
    NameOverlap {
        overlaps: max_sim > 0.0,
        max_sim,
        mean_sim,
        per_type,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub dyad: DyadId,
    pub fribble: FribbleId,
    pub s_pre: f64,
    pub s_post: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvergenceSkip {
    #[error("no {} name for speaker {speaker}", phase.as_str())]
    Missing { speaker: SpeakerId, phase: Phase },
    #[error("naming records refer to different fribbles")]
    FribbleMismatch,
    #[error("a name has no lemmas")]
    EmptyName,
}

pub struct NamePair<'a> {
    pub speakers: [&'a str; 2],
    pub pre: [Option<&'a NamingRecord>; 2],
    pub post: [Option<&'a NamingRecord>; 2],
}

/// Cross-speaker name similarity before and after the interaction.
pub fn convergence(dyad: &str, names: &NamePair) -> Result<ConvergenceRecord, ConvergenceSkip> {
    let need = |rec: Option<&NamingRecord>, i: usize, phase| {
        rec.cloned().ok_or_else(|| ConvergenceSkip::Missing {
            speaker: names.speakers[i].to_string(),
            phase,
        })
    };
    let pre = [need(names.pre[0], 0, Phase::Pre)?, need(names.pre[1], 1, Phase::Pre)?];
    let post = [need(names.post[0], 0, Phase::Post)?, need(names.post[1], 1, Phase::Post)?];
    let fribble = &pre[0].fribble;
    if pre.iter().chain(&post).any(|n| &n.fribble != fribble) {
        return Err(ConvergenceSkip::FribbleMismatch);
    }
    let sim = |a: &NamingRecord, b: &NamingRecord| {
        lexical_cosine(&a.lemmas, &b.lemmas).map_err(|_| ConvergenceSkip::EmptyName)
    };
    let s_pre = sim(&pre[0], &pre[1])?;
    let s_post = sim(&post[0], &post[1])?;
    Ok(ConvergenceRecord {
        dyad: dyad.to_string(),
        fribble: fribble.clone(),
        s_pre,
        s_post,
        delta: s_post - s_pre,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{tok, utt};
    use crate::corpus::{Pos, Trial};
    use crate::extraction::extract_shared_constructions;
    use crate::typing::group_into_types;

    fn name(speaker: &str, phase: Phase, words: &str) -> NamingRecord {
        NamingRecord {
            speaker: speaker.into(),
            fribble: "f".into(),
            phase,
            lemmas: words.split_whitespace().map(str::to_string).collect(),
        }
    }

    fn dialogue(utts: Vec<(u32, &str, Vec<&str>)>) -> Dialogue {
        let mut trials: Vec<Trial> = Vec::new();
        for (i, (round, speaker, words)) in utts.into_iter().enumerate() {
            if trials.last().is_none_or(|t| t.round != round) {
                trials.push(Trial {
                    fribble: "f".into(),
                    round,
                    director: "a".into(),
                    matcher: "b".into(),
                    utterances: Vec::new(),
                });
            }
            let tokens = words.into_iter().map(|w| tok(w, Pos::Noun)).collect();
            trials.last_mut().unwrap().utterances.push(utt(speaker, i as u32, tokens));
        }
        Dialogue {
            dyad: "d".into(),
            speakers: ["a".into(), "b".into()],
            rounds: 3,
            trials,
        }
    }

    #[test]
    fn coverage_without_constructions_is_zero() {
        let d = dialogue(vec![(1, "a", vec!["x"]), (1, "b", vec!["y"]), (2, "a", vec!["z"])]);
        let ex = extract_shared_constructions(&d);
        let cov = utterance_coverage(&d, &ex);
        let fractions: Vec<_> = cov.iter().map(RoundCoverage::fraction).collect();
        assert_eq!(fractions, [Some(0.0), Some(0.0), None]);
    }

    #[test]
    fn coverage_when_every_utterance_matches() {
        let d = dialogue(vec![
            (1, "a", vec!["x", "q"]),
            (1, "b", vec!["x"]),
            (2, "a", vec!["x"]),
            (3, "b", vec!["r", "x"]),
        ]);
        let ex = extract_shared_constructions(&d);
        let fractions: Vec<_> = utterance_coverage(&d, &ex).iter().map(RoundCoverage::fraction).collect();
        assert_eq!(fractions, [Some(1.0), Some(1.0), Some(1.0)]);
    }

    #[test]
    fn name_overlap_cases() {
        let d = dialogue(vec![(1, "a", vec!["boiler"]), (1, "b", vec!["boiler"])]);
        let ex = extract_shared_constructions(&d);
        let types = group_into_types(&ex["f"]);
        let hit = name_overlap(&name("a", Phase::Post, "boiler"), &types);
        assert!(hit.overlaps);
        assert_eq!(hit.max_sim, 1.0);
        let miss = name_overlap(&name("a", Phase::Post, "kubus"), &types);
        assert!(!miss.overlaps);
        let none = name_overlap(&name("a", Phase::Post, "kubus"), &[]);
        assert_eq!((none.overlaps, none.max_sim, none.per_type.len()), (false, 0.0, 0));
        assert_eq!(none.mean_sim, None);
    }

    #[test]
    fn convergence_cases() {
        let (pa, pb) = (name("a", Phase::Pre, "raket"), name("b", Phase::Pre, "ijsje"));
        let (qa, qb) = (name("a", Phase::Post, "boiler"), name("b", Phase::Post, "boiler"));
        let pair = NamePair {
            speakers: ["a", "b"],
            pre: [Some(&pa), Some(&pb)],
            post: [Some(&qa), Some(&qb)],
        };
        let r = convergence("d", &pair).unwrap();
        assert_eq!((r.s_pre, r.s_post, r.delta), (0.0, 1.0, 1.0));

        let same = NamePair {
            speakers: ["a", "b"],
            pre: [Some(&qa), Some(&qb)],
            post: [Some(&qa), Some(&qb)],
        };
        assert_eq!(convergence("d", &same).unwrap().delta, 0.0);

        let missing = NamePair {
            speakers: ["a", "b"],
            pre: [Some(&pa), None],
            post: [Some(&qa), Some(&qb)],
        };
        assert_eq!(
            convergence("d", &missing),
            Err(ConvergenceSkip::Missing {
                speaker: "b".into(),
                phase: Phase::Pre
            })
        );
    }
}
