//! Mining of shared lemmatised constructions.
//!
//! For one dyad and one fribble, all trials across rounds are pooled. A lemma
//! sequence is shared when it occurs contiguously inside at least one
//! utterance of each speaker. Matching runs over the full non-disfluent lemma
//! stream (function words included); content-ness only matters for the
//! function-word filter. Sequences never span two utterances.
//!
//! The matcher is a generalised suffix automaton built over one speaker's
//! utterances and scanned with the other speaker's.

mod automaton;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use serde::Serialize;

use crate::corpus::{Dialogue, FribbleId, SpeakerId, Trial, Utterance};

pub use automaton::SuffixAutomaton;

/// Shared sequences mapped to their maximality flag.
pub type SharedSet<T> = BTreeMap<Vec<T>, bool>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Occurrence {
    pub speaker: SpeakerId,
    pub round: u32,
    pub utterance_index: u32,
    pub token_offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SharedConstruction {
    pub lemmas: Vec<String>,
    /// Per lemma: does it bear a content tag somewhere in this fribble's trials?
    pub content: Vec<bool>,
    pub fribble: FribbleId,
    pub occurrences: Vec<Occurrence>,
    pub is_maximal: bool,
}

impl SharedConstruction {
    pub fn content_lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas
            .iter()
            .zip(&self.content)
            .filter(|(_, &c)| c)
            .map(|(l, _)| l.as_str())
    }

    pub fn first_occurrence(&self) -> Option<&Occurrence> {
        self.occurrences.first()
    }
}

/// Surviving shared constructions per fribble of one dialogue. Fribbles with
/// no survivors are absent.
pub type Extraction = BTreeMap<FribbleId, Vec<SharedConstruction>>;

/// Every contiguous sequence that occurs in some utterance of `a` and in some
/// utterance of `b`, with flags marking those that cannot be extended on
/// either side and stay shared.
pub fn shared_sequences<T>(a: &[Vec<T>], b: &[Vec<T>]) -> SharedSet<T>
where
    T: Clone + Ord + Hash,
{
    let mut symbols: HashMap<&T, u32> = HashMap::new();
    let a_ids = intern(&mut symbols, a);
    let b_ids = intern(&mut symbols, b);
    let shared = shared_ids(&a_ids, &b_ids);
    let maximal = maximal_flags(&shared);

    let mut by_id: Vec<Option<&T>> = vec![None; symbols.len()];
    for (x, &id) in &symbols {
        by_id[id as usize] = Some(*x);
    }
    shared
        .into_iter()
        .map(|seq| {
            let is_max = maximal.contains(&seq);
            let lemmas = seq
                .iter()
                .map(|&id| by_id[id as usize].expect("interned").clone())
                .collect();
            (lemmas, is_max)
        })
        .collect()
}

fn intern<'a, T: Hash + Eq>(symbols: &mut HashMap<&'a T, u32>, seqs: &'a [Vec<T>]) -> Vec<Vec<u32>> {
    seqs.iter()
        .map(|seq| {
            seq.iter()
                .map(|x| {
                    let next = symbols.len() as u32;
                    *symbols.entry(x).or_insert(next)
                })
                .collect()
        })
        .collect()
}

/// Cross-speaker shared lemma sequences between two utterance lists.
pub fn cross_speaker_sequences(a: &[&Utterance], b: &[&Utterance]) -> SharedSet<String> {
    let stream = |u: &&Utterance| -> Vec<String> {
        u.lemma_stream().map(|t| t.lemma.clone()).collect()
    };
    let a: Vec<_> = a.iter().map(stream).collect();
    let b: Vec<_> = b.iter().map(stream).collect();
    shared_sequences(&a, &b)
}

fn shared_ids(a: &[Vec<u32>], b: &[Vec<u32>]) -> HashSet<Vec<u32>> {
    let sam = SuffixAutomaton::new(a.iter().map(Vec::as_slice));
    let mut shared = HashSet::new();
    for text in b {
        for (end, len) in sam.match_lengths(text).into_iter().enumerate() {
            for start in end + 1 - len..=end {
                shared.insert(text[start..=end].to_vec());
            }
        }
    }
    shared
}

fn maximal_flags(shared: &HashSet<Vec<u32>>) -> HashSet<Vec<u32>> {
    let mut extendable: HashSet<&[u32]> = HashSet::new();
    for seq in shared.iter().filter(|s| s.len() > 1) {
        extendable.insert(&seq[1..]);
        extendable.insert(&seq[..seq.len() - 1]);
    }
    shared
        .iter()
        .filter(|s| !extendable.contains(s.as_slice()))
        .cloned()
        .collect()
}

/// Drops sequences without a single content lemma.
pub fn filter_function_word_only<T, F>(seqs: SharedSet<T>, is_content: F) -> SharedSet<T>
where
    T: Ord,
    F: Fn(&T) -> bool,
{
    seqs.into_iter()
        .filter(|(seq, _)| seq.iter().any(&is_content))
        .collect()
}

/// Drops every sequence that is shared for two or more fribbles of the same dyad.
pub fn filter_multi_referent<K, T>(per_fribble: BTreeMap<K, SharedSet<T>>) -> BTreeMap<K, SharedSet<T>>
where
    K: Ord,
    T: Ord + Clone,
{
    let mut seen: BTreeMap<Vec<T>, usize> = BTreeMap::new();
    for set in per_fribble.values() {
        for seq in set.keys() {
            *seen.entry(seq.clone()).or_default() += 1;
        }
    }
    per_fribble
        .into_iter()
        .map(|(k, set)| {
            let kept = set.into_iter().filter(|(seq, _)| seen[seq] == 1).collect();
            (k, kept)
        })
        .collect()
}

/// Dialogue-wide lemma interner; ids follow first appearance.
#[derive(Default)]
struct Lexicon<'a> {
    ids: HashMap<&'a str, u32>,
    lemmas: Vec<&'a str>,
}

impl<'a> Lexicon<'a> {
    fn id(&mut self, lemma: &'a str) -> u32 {
        if let Some(&id) = self.ids.get(lemma) {
            return id;
        }
        let id = self.lemmas.len() as u32;
        self.ids.insert(lemma, id);
        self.lemmas.push(lemma);
        id
    }
}

struct PooledUtterance<'a> {
    trial: &'a Trial,
    utterance: &'a Utterance,
    stream: Vec<u32>,
}

struct FribblePool<'a> {
    utterances: Vec<PooledUtterance<'a>>,
    content: HashSet<u32>,
}

/// Runs the full pipeline for one dialogue: pool trials per fribble, match
/// across speakers, apply the function-word and multi-referent filters and
/// attach every occurrence of each survivor.
pub fn extract_shared_constructions(d: &Dialogue) -> Extraction {
    let mut lexicon = Lexicon::default();
    let mut pools: BTreeMap<&str, FribblePool> = BTreeMap::new();
    for trial in &d.trials {
        let pool = pools.entry(trial.fribble.as_str()).or_insert_with(|| FribblePool {
            utterances: Vec::new(),
            content: HashSet::new(),
        });
        for utterance in &trial.utterances {
            let mut stream = Vec::new();
            for tok in utterance.lemma_stream() {
                let id = lexicon.id(&tok.lemma);
                if tok.pos.is_content() {
                    pool.content.insert(id);
                }
                stream.push(id);
            }
            pool.utterances.push(PooledUtterance {
                trial,
                utterance,
                stream,
            });
        }
    }

    let mut raw: BTreeMap<&str, HashSet<Vec<u32>>> = BTreeMap::new();
    let mut filtered: BTreeMap<&str, SharedSet<u32>> = BTreeMap::new();
    for (&fribble, pool) in &pools {
        let side = |who: &str| -> Vec<Vec<u32>> {
            pool.utterances
                .iter()
                .filter(|p| p.utterance.speaker == who && !p.stream.is_empty())
                .map(|p| p.stream.clone())
                .collect()
        };
        let (a, b) = (side(&d.speakers[0]), side(&d.speakers[1]));
        let shared = shared_ids(&a, &b);
        let maximal = maximal_flags(&shared);
        let set: SharedSet<u32> = shared
            .iter()
            .map(|s| (s.clone(), maximal.contains(s)))
            .collect();
        filtered.insert(
            fribble,
            filter_function_word_only(set, |id| pool.content.contains(id)),
        );
        raw.insert(fribble, shared);
    }
    let survivors = filter_multi_referent(filtered);

    let mut out = Extraction::new();
    for (fribble, set) in survivors {
        if set.is_empty() {
            continue;
        }
        let pool = &pools[fribble];
        let shared = &raw[fribble];
        let max_len = set.keys().map(Vec::len).max().unwrap_or(0);
        let mut occurrences: HashMap<&[u32], Vec<Occurrence>> = HashMap::new();
        for p in &pool.utterances {
            for start in 0..p.stream.len() {
                let longest = max_len.min(p.stream.len() - start);
                for len in 1..=longest {
                    let window = &p.stream[start..start + len];
                    // shared sets are closed under taking substrings
                    if !shared.contains(window) {
                        break;
                    }
                    if let Some((seq, _)) = set.get_key_value(window) {
                        occurrences.entry(seq.as_slice()).or_default().push(Occurrence {
                            speaker: p.utterance.speaker.clone(),
                            round: p.trial.round,
                            utterance_index: p.utterance.global_index,
                            token_offset: start as u32,
                        });
                    }
                }
            }
        }

        let mut constructions: Vec<SharedConstruction> = set
            .iter()
            .map(|(seq, &is_maximal)| {
                let mut occ = occurrences.remove(seq.as_slice()).unwrap_or_default();
                occ.sort_by(|x, y| {
                    (x.utterance_index, x.token_offset).cmp(&(y.utterance_index, y.token_offset))
                });
                SharedConstruction {
                    lemmas: seq.iter().map(|&id| lexicon.lemmas[id as usize].to_string()).collect(),
                    content: seq.iter().map(|id| pool.content.contains(id)).collect(),
                    fribble: fribble.to_string(),
                    occurrences: occ,
                    is_maximal,
                }
            })
            .collect();
        constructions.sort_by(|x, y| {
            let key = |c: &SharedConstruction| {
                c.first_occurrence()
                    .map(|o| (o.utterance_index, o.token_offset))
            };
            key(x)
                .cmp(&key(y))
                .then(x.lemmas.len().cmp(&y.lemmas.len()))
                .then_with(|| x.lemmas.cmp(&y.lemmas))
        });
        out.insert(fribble.to_string(), constructions);
    }
    out
}
