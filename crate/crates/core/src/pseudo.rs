//! Pseudo-pair control corpora.
//!
//! A pseudo dialogue recombines two participants from different dyads who
//! never talked to each other: the first speaker of the anchor dyad and the
//! second speaker of the partner dyad. For every (fribble, round) both source
//! dialogues cover, the pseudo trial holds each participant's own utterances
//! from that trial. The director is the anchor speaker when they directed in
//! their source trial, otherwise the partner speaker. Trials where the two
//! held the same role are counted as role conflicts.
//!
//! The plan is a seeded derangement of the dyad list, so every dyad is
//! anchor once and partner once and every participant appears in exactly one
//! pseudo dialogue.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, Dialogue, DyadId, PseudoOrigin, Role, Trial, Utterance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PseudoError {
    #[error("pseudo-pairs need at least two dyads, got {0}")]
    TooFewDyads(usize),
    #[error("dyad '{0}' is not in the corpus")]
    UnknownDyad(DyadId),
    #[error("dyads '{0}' and '{1}' discuss different fribble sets")]
    IncompatibleSources(DyadId, DyadId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PseudoAssignment {
    pub anchor: DyadId,
    pub partner: DyadId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PseudoPairPlan {
    pub seed: u64,
    pub assignments: Vec<PseudoAssignment>,
}

/// Draws a random derangement of `dyads`: entry `i` pairs `dyads[i]` as
/// anchor with a different dyad as partner.
pub fn plan_pseudo_pairs(dyads: &[DyadId], seed: u64) -> Result<PseudoPairPlan, PseudoError> {
    let n = dyads.len();
    if n < 2 {
        return Err(PseudoError::TooFewDyads(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    // rejection sampling; about e attempts on average
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, &j)| i != j) {
            break;
        }
    }
    Ok(PseudoPairPlan {
        seed,
        assignments: perm
            .iter()
            .enumerate()
            .map(|(i, &j)| PseudoAssignment {
                anchor: dyads[i].clone(),
                partner: dyads[j].clone(),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoDialogue {
    pub dialogue: Dialogue,
    pub role_conflicts: u32,
}

/// Builds one pseudo dialogue. Anchor and partner may be the same dyad, in
/// which case the original dialogue's content is reproduced.
pub fn materialize_pseudo_dialogue(
    entry: &PseudoAssignment,
    corpus: &Corpus,
) -> Result<PseudoDialogue, PseudoError> {
    let source = |id: &DyadId| corpus.dialogue(id).ok_or_else(|| PseudoError::UnknownDyad(id.clone()));
    let a = source(&entry.anchor)?;
    let b = source(&entry.partner)?;
    let fribbles = |d: &Dialogue| d.fribbles().into_iter().map(str::to_string).collect::<BTreeSet<_>>();
    if fribbles(a) != fribbles(b) {
        return Err(PseudoError::IncompatibleSources(a.dyad.clone(), b.dyad.clone()));
    }

    let x = &a.speakers[0];
    let y = &b.speakers[1];
    let mut trials = Vec::new();
    let mut role_conflicts = 0;
    let mut next_index = 0u32;
    for ta in &a.trials {
        let Some(tb) = b.trial(&ta.fribble, ta.round) else {
            continue;
        };
        let x_role = ta.role_of(x);
        if x_role == tb.role_of(y) {
            role_conflicts += 1;
        }
        let (director, matcher, first, second) = if x_role == Some(Role::Director) {
            (x, y, (ta, x), (tb, y))
        } else {
            (y, x, (tb, y), (ta, x))
        };
        let mut utterances: Vec<Utterance> = Vec::new();
        for (trial, who) in [first, second] {
            for u in trial.utterances.iter().filter(|u| &u.speaker == who) {
                utterances.push(Utterance {
                    global_index: next_index,
                    ..u.clone()
                });
                next_index += 1;
            }
        }
        if utterances.is_empty() {
            continue;
        }
        trials.push(Trial {
            fribble: ta.fribble.clone(),
            round: ta.round,
            director: director.clone(),
            matcher: matcher.clone(),
            utterances,
        });
    }

    Ok(PseudoDialogue {
        dialogue: Dialogue {
            dyad: format!("{}+{}", a.dyad, b.dyad),
            speakers: [x.clone(), y.clone()],
            rounds: a.rounds.max(b.rounds),
            trials,
        },
        role_conflicts,
    })
}

/// Pseudo-pair corpus with the same dyad count, fribble set and rounds as
/// `corpus`. Each participant keeps their own naming records.
pub fn build_pseudo_corpus(corpus: &Corpus, seed: u64) -> Result<Corpus, PseudoError> {
    let dyads: Vec<DyadId> = corpus.dialogues.iter().map(|d| d.dyad.clone()).collect();
    let plan = plan_pseudo_pairs(&dyads, seed)?;
    let mut dialogues = Vec::with_capacity(plan.assignments.len());
    let mut role_conflicts = 0;
    for entry in &plan.assignments {
        let pd = materialize_pseudo_dialogue(entry, corpus)?;
        role_conflicts += pd.role_conflicts;
        dialogues.push(pd.dialogue);
    }
    let speakers: BTreeSet<&str> = dialogues
        .iter()
        .flat_map(|d| d.speakers.iter().map(String::as_str))
        .collect();
    let namings = corpus
        .namings
        .iter()
        .filter(|n| speakers.contains(n.speaker.as_str()))
        .cloned()
        .collect();
    Ok(Corpus {
        dialogues,
        namings,
        pseudo: Some(PseudoOrigin {
            seed,
            pairs: plan
                .assignments
                .iter()
                .map(|e| (e.anchor.clone(), e.partner.clone()))
                .collect(),
            role_conflicts,
        }),
    })
}
