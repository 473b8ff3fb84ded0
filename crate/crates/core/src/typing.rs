//! Grouping of shared constructions into construction types.
//!
//! Each construction goes to exactly one core: the content lemma it contains
//! with the highest total occurrence count over all constructions of the
//! (dyad, fribble). Ties go to the lemma seen first, then to the
//! lexicographically smaller one.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{DyadId, FribbleId, SpeakerId};
use crate::extraction::{Extraction, SharedConstruction};

/// One use of a type's core lemma inside an occurrence of one of its members.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CoreSite {
    pub utterance_index: u32,
    pub token_offset: u32,
    pub round: u32,
    pub speaker: SpeakerId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionType {
    pub core: String,
    pub members: Vec<SharedConstruction>,
    pub rounds_used: BTreeSet<u32>,
    /// Distinct core sites; overlapping member occurrences count once.
    pub occurrence_count: usize,
    pub first_round: u32,
    pub last_round: u32,
    pub sites: Vec<CoreSite>,
}

impl ConstructionType {
    /// Core sites produced by `speaker`.
    pub fn usage_by(&self, speaker: &str) -> usize {
        self.sites.iter().filter(|s| s.speaker == speaker).count()
    }

    /// Union of the members' content lemmas; always holds the core.
    pub fn lemma_set(&self) -> BTreeSet<&str> {
        let mut set: BTreeSet<&str> = self.members.iter().flat_map(|m| m.content_lemmas()).collect();
        set.insert(&self.core);
        set
    }

    pub fn features(&self, rounds_total: u32) -> TypeFeatures {
        type_features(self, rounds_total)
    }

    fn first_site(&self) -> Option<&CoreSite> {
        self.sites.first()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TypeFeatures {
    /// Number of rounds the type is used in.
    pub frequency: u32,
    /// Last round of use.
    pub recency: u32,
    pub rounds_total: u32,
}

impl TypeFeatures {
    pub fn rounds_from_end(&self) -> u32 {
        self.rounds_total.saturating_sub(self.recency)
    }
}

pub fn type_features(t: &ConstructionType, rounds_total: u32) -> TypeFeatures {
    debug_assert!(1 <= t.first_round && t.first_round <= t.last_round && t.last_round <= rounds_total);
    TypeFeatures {
        frequency: t.rounds_used.len() as u32,
        recency: t.last_round,
        rounds_total,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeTimeline {
    pub dyad: DyadId,
    pub fribble: FribbleId,
    pub types: Vec<ConstructionType>,
}

impl TypeTimeline {
    pub fn dominant(&self) -> Option<&ConstructionType> {
        dominant_type(&self.types)
    }

    pub fn types_in_round(&self, round: u32) -> usize {
        self.types.iter().filter(|t| t.rounds_used.contains(&round)).count()
    }
}

type SiteKey = (u32, u32);

fn first_key(c: &SharedConstruction) -> SiteKey {
    c.first_occurrence()
        .map(|o| (o.utterance_index, o.token_offset))
        .unwrap_or((u32::MAX, u32::MAX))
}

/// Groups the constructions of one (dyad, fribble) into types, ordered by
/// first round, then first use, then core.
pub fn group_into_types(constructions: &[SharedConstruction]) -> Vec<ConstructionType> {
    // per candidate core: (total occurrences, earliest use)
    let mut score: BTreeMap<&str, (usize, SiteKey)> = BTreeMap::new();
    for c in constructions {
        let distinct: BTreeSet<&str> = c.content_lemmas().collect();
        for lemma in distinct {
            let entry = score.entry(lemma).or_insert((0, first_key(c)));
            entry.0 += c.occurrences.len();
            entry.1 = entry.1.min(first_key(c));
        }
    }

    let mut members: BTreeMap<&str, Vec<&SharedConstruction>> = BTreeMap::new();
    for c in constructions {
        let best = c.content_lemmas().max_by(|x, y| {
            let (sx, fx) = score[x];
            let (sy, fy) = score[y];
            sx.cmp(&sy)
                .then(fy.cmp(&fx))
                .then_with(|| y.cmp(x))
        });
        match best {
            Some(core) => members.entry(core).or_default().push(c),
            None => debug_assert!(false, "construction without content lemma"),
        }
    }

    let mut types: Vec<ConstructionType> = members
        .into_iter()
        .map(|(core, group)| build_type(core, group))
        .collect();
    types.sort_by(|x, y| {
        x.first_round
            .cmp(&y.first_round)
            .then_with(|| x.first_site().cmp(&y.first_site()))
            .then_with(|| x.core.cmp(&y.core))
    });
    types
}

fn build_type(core: &str, group: Vec<&SharedConstruction>) -> ConstructionType {
    let mut sites = BTreeSet::new();
    for m in &group {
        let offsets: Vec<u32> = m
            .lemmas
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == core)
            .map(|(i, _)| i as u32)
            .collect();
        for o in &m.occurrences {
            for k in &offsets {
                sites.insert(CoreSite {
                    utterance_index: o.utterance_index,
                    token_offset: o.token_offset + k,
                    round: o.round,
                    speaker: o.speaker.clone(),
                });
            }
        }
    }
    let sites: Vec<CoreSite> = sites.into_iter().collect();
    let rounds_used: BTreeSet<u32> = sites.iter().map(|s| s.round).collect();
    ConstructionType {
        core: core.to_string(),
        members: group.into_iter().cloned().collect(),
        occurrence_count: sites.len(),
        first_round: rounds_used.first().copied().unwrap_or(0),
        last_round: rounds_used.last().copied().unwrap_or(0),
        rounds_used,
        sites,
    }
}

fn dominance(x: &ConstructionType, y: &ConstructionType) -> Ordering {
    x.rounds_used
        .len()
        .cmp(&y.rounds_used.len())
        .then(x.last_round.cmp(&y.last_round))
        .then(x.occurrence_count.cmp(&y.occurrence_count))
        .then_with(|| Reverse(&x.core).cmp(&Reverse(&y.core)))
}

/// The type used in the most rounds; ties go to the later last round, then
/// the larger occurrence count, then the lexicographically smaller core.
pub fn dominant_type(types: &[ConstructionType]) -> Option<&ConstructionType> {
    types.iter().max_by(|x, y| dominance(x, y))
}

/// Type timelines for every fribble with surviving constructions.
pub fn build_timelines(dyad: &str, extraction: &Extraction) -> Vec<TypeTimeline> {
    extraction
        .iter()
        .map(|(fribble, constructions)| TypeTimeline {
            dyad: dyad.to_string(),
            fribble: fribble.clone(),
            types: group_into_types(constructions),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::Occurrence;
    use proptest::prelude::*;

    fn occ(speaker: &str, round: u32, utterance_index: u32, token_offset: u32) -> Occurrence {
        Occurrence {
            speaker: speaker.into(),
            round,
            utterance_index,
            token_offset,
        }
    }

    fn construction(lemmas: &str, content: &[&str], occurrences: Vec<Occurrence>) -> SharedConstruction {
        let lemmas: Vec<String> = lemmas.split_whitespace().map(str::to_string).collect();
        SharedConstruction {
            content: lemmas.iter().map(|l| content.contains(&l.as_str())).collect(),
            lemmas,
            fribble: "f".into(),
            occurrences,
            is_maximal: false,
        }
    }

    fn ty(core: &str, rounds: &[u32], occurrence_count: usize) -> ConstructionType {
        let rounds_used: BTreeSet<u32> = rounds.iter().copied().collect();
        ConstructionType {
            core: core.into(),
            members: Vec::new(),
            occurrence_count,
            first_round: *rounds_used.first().unwrap(),
            last_round: *rounds_used.last().unwrap(),
            rounds_used,
            sites: Vec::new(),
        }
    }

    #[test]
    fn book_constructions_form_one_type() {
        let content = ["boek", "bovenop"];
        let cs = vec![
            construction("dat boek bovenop", &content, vec![occ("a", 1, 1, 0), occ("b", 2, 5, 2)]),
            construction("boek bovenop", &content, vec![occ("a", 1, 1, 1), occ("b", 2, 5, 3)]),
            construction("dat boek", &content, vec![occ("a", 1, 1, 0), occ("b", 2, 5, 2)]),
            construction(
                "boek",
                &content,
                vec![occ("a", 1, 1, 1), occ("b", 2, 5, 3), occ("a", 3, 9, 0)],
            ),
        ];
        let types = group_into_types(&cs);
        assert_eq!(types.len(), 1);
        let t = &types[0];
        assert_eq!(t.core, "boek");
        assert_eq!(t.members.len(), 4);
        assert_eq!(t.occurrence_count, 3);
        assert_eq!(t.rounds_used, BTreeSet::from([1, 2, 3]));
        assert_eq!(t.usage_by("a"), 2);
        assert_eq!(t.lemma_set(), BTreeSet::from(["boek", "bovenop"]));
    }

    #[test]
    fn single_lemma_construction() {
        let types = group_into_types(&[construction("kubus", &["kubus"], vec![occ("a", 2, 0, 0), occ("b", 2, 1, 0)])]);
        assert_eq!(types.len(), 1);
        assert_eq!(types[0].core, "kubus");
        assert_eq!((types[0].first_round, types[0].last_round), (2, 2));
    }

    #[test]
    fn frequent_core_wins() {
        // bal: 1 (rode bal) + 4 (bal) = 5 occurrences, rood: 1
        let content = ["rood", "bal"];
        let cs = vec![
            construction("rood bal", &content, vec![occ("a", 1, 0, 0)]),
            construction(
                "bal",
                &content,
                vec![occ("a", 1, 0, 1), occ("b", 1, 1, 0), occ("b", 2, 2, 0), occ("a", 3, 3, 0)],
            ),
        ];
        let types = group_into_types(&cs);
        assert_eq!(types.len(), 1);
        assert_eq!(types[0].core, "bal");
        assert_eq!(types[0].members.len(), 2);
    }

    #[test]
    fn score_ties_go_to_earliest_then_lexicographic() {
        let content = ["neus", "lang"];
        let early_neus = vec![
            construction("lang neus", &content, vec![occ("a", 1, 0, 0), occ("b", 1, 1, 0)]),
            construction("neus", &content, vec![occ("a", 1, 0, 1)]),
            construction("lang", &content, vec![occ("b", 1, 1, 0)]),
        ];
        // lang: 3 occurrences from (0,0); neus: 3 from (0,0) -> lexicographic: lang
        assert_eq!(group_into_types(&early_neus)[0].core, "lang");
    }

    #[test]
    fn dominant_examples() {
        let book = ty("boek", &[1, 2, 3], 5);
        let pinocchio = ty("pinocchio", &[1, 2, 3], 4);
        let boiler = ty("boiler", &[1, 2, 3, 4, 5, 6], 11);
        let types = vec![book, pinocchio, boiler];
        assert_eq!(dominant_type(&types).unwrap().core, "boiler");
        assert_eq!(dominant_type(&types[..1]).unwrap().core, "boek");
        let tie = vec![ty("a", &[1, 2], 9), ty("b", &[1, 4], 2)];
        assert_eq!(dominant_type(&tie).unwrap().core, "b");
        let lex = vec![ty("z", &[1, 4], 2), ty("y", &[1, 4], 2)];
        assert_eq!(dominant_type(&lex).unwrap().core, "y");
        assert!(dominant_type(&[]).is_none());
    }

    #[test]
    fn features() {
        let boiler = ty("boiler", &[1, 2, 3, 4, 5, 6], 11);
        assert_eq!(
            type_features(&boiler, 6),
            TypeFeatures {
                frequency: 6,
                recency: 6,
                rounds_total: 6
            }
        );
        let f = type_features(&ty("x", &[1], 1), 6);
        assert_eq!((f.frequency, f.recency, f.rounds_from_end()), (1, 1, 5));
        let f = type_features(&ty("x", &[2, 5], 1), 6);
        assert_eq!((f.frequency, f.recency), (2, 5));
    }

    fn arb_constructions() -> impl Strategy<Value = Vec<SharedConstruction>> {
        let lemma = prop::sample::select(vec!["a", "b", "c", "d", "x"]);
        let one = (
            prop::collection::vec(lemma, 1..4),
            prop::collection::vec((1u32..7, 0u32..20, 0u32..3, any::<bool>()), 1..5),
        )
            .prop_map(|(lemmas, occ_spec)| {
                let mut lemmas: Vec<String> = lemmas.into_iter().map(str::to_string).collect();
                // guarantee a content lemma
                if lemmas.iter().all(|l| l == "x") {
                    lemmas[0] = "a".into();
                }
                let mut occurrences: Vec<Occurrence> = occ_spec
                    .into_iter()
                    .map(|(r, u, o, s)| occ(if s { "a" } else { "b" }, r, u, o))
                    .collect();
                occurrences.sort_by_key(|o| (o.utterance_index, o.token_offset));
                SharedConstruction {
                    content: lemmas.iter().map(|l| l != "x").collect(),
                    lemmas,
                    fribble: "f".into(),
                    occurrences,
                    is_maximal: true,
                }
            });
        prop::collection::vec(one, 1..8).prop_map(|mut cs| {
            cs.sort_by(|x, y| x.lemmas.cmp(&y.lemmas));
            cs.dedup_by(|x, y| x.lemmas == y.lemmas);
            cs
        })
    }

    proptest! {
        #[test]
        fn partition_and_core_containment(cs in arb_constructions()) {
            let types = group_into_types(&cs);
            let total: usize = types.iter().map(|t| t.members.len()).sum();
            prop_assert_eq!(total, cs.len());
            let cores: BTreeSet<&str> = types.iter().map(|t| t.core.as_str()).collect();
            prop_assert_eq!(cores.len(), types.len());
            for t in &types {
                for m in &t.members {
                    prop_assert!(m.content_lemmas().any(|l| l == t.core));
                }
                let member_rounds: BTreeSet<u32> =
                    t.members.iter().flat_map(|m| m.occurrences.iter().map(|o| o.round)).collect();
                prop_assert_eq!(&t.rounds_used, &member_rounds);
                let f = type_features(t, 6);
                prop_assert!(f.frequency <= 6);
                prop_assert!(t.rounds_used.contains(&f.recency));
            }
        }

        #[test]
        fn dominant_ignores_input_order(cs in arb_constructions(), rot in 0usize..8) {
            let mut types = group_into_types(&cs);
            let expected = dominant_type(&types).map(|t| t.core.clone());
            let len = types.len();
            types.rotate_left(rot % len);
            types.reverse();
            prop_assert_eq!(dominant_type(&types).map(|t| t.core.clone()), expected);
        }
    }
}
