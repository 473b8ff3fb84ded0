//! Analyses 1-3 as row tables plus summaries computed from those rows only.
//!
//! Every analysis first emits [`AnalysisRow`]s; the `summarize*` functions
//! take nothing but rows, so any reported number can be recomputed from the
//! emitted tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, DyadId, Phase};
use crate::extraction::{extract_shared_constructions, Extraction};
use crate::metrics::{convergence, name_overlap, utterance_coverage, NamePair};
use crate::stats::{lexical_cosine, mean, spearman, std_dev, t_test, StatResult, StatsError};
use crate::typing::{build_timelines, TypeTimeline};

/// Closed set of metric names used in row tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// 1 when the (dyad, fribble) cell has a surviving construction.
    HasConstruction,
    ConstructionCount,
    TypeCount,
    /// Types of the cell used in the given round.
    TypesInRound,
    Utterances,
    CoveredUtterances,
    /// Covered fraction of one dialogue round.
    Coverage,
    /// Covered fraction of the whole dialogue.
    DialogueCoverage,
    /// Cosine between a speaker's own pre and post names.
    SelfSimilarity,
    /// 1 when the name shares a lemma with some type of the cell.
    NameOverlaps,
    NameMaxSimilarity,
    NameMeanSimilarity,
    /// Name-vs-type cosine, one row per round in which the type occurs.
    NameTypeSimilarity,
    /// 1 when a speaker lacks the pre or the post name of a fribble.
    NamingMissing,
    TypeLastRound,
    /// Core sites of the type produced by the speaker.
    TypeUsage,
    TypePostSimilarity,
    SPre,
    SPost,
    Delta,
    DominantFrequency,
    DominantRecency,
    NoDominantType,
    ConvergenceSkipped,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::HasConstruction => "has_construction",
            Metric::ConstructionCount => "construction_count",
            Metric::TypeCount => "type_count",
            Metric::TypesInRound => "types_in_round",
            Metric::Utterances => "utterances",
            Metric::CoveredUtterances => "covered_utterances",
            Metric::Coverage => "coverage",
            Metric::DialogueCoverage => "dialogue_coverage",
            Metric::SelfSimilarity => "self_similarity",
            Metric::NameOverlaps => "name_overlaps",
            Metric::NameMaxSimilarity => "name_max_similarity",
            Metric::NameMeanSimilarity => "name_mean_similarity",
            Metric::NameTypeSimilarity => "name_type_similarity",
            Metric::NamingMissing => "naming_missing",
            Metric::TypeLastRound => "type_last_round",
            Metric::TypeUsage => "type_usage",
            Metric::TypePostSimilarity => "type_post_similarity",
            Metric::SPre => "s_pre",
            Metric::SPost => "s_post",
            Metric::Delta => "delta",
            Metric::DominantFrequency => "dominant_frequency",
            Metric::DominantRecency => "dominant_recency",
            Metric::NoDominantType => "no_dominant_type",
            Metric::ConvergenceSkipped => "convergence_skipped",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub analysis: u8,
    pub dyad: DyadId,
    pub fribble: Option<String>,
    pub round: Option<u32>,
    pub speaker: Option<String>,
    pub phase: Option<Phase>,
    pub core: Option<String>,
    pub metric: Metric,
    pub value: f64,
}

impl AnalysisRow {
    fn new(analysis: u8, dyad: &str, metric: Metric, value: f64) -> Self {
        AnalysisRow {
            analysis,
            dyad: dyad.to_string(),
            fribble: None,
            round: None,
            speaker: None,
            phase: None,
            core: None,
            metric,
            value,
        }
    }

    fn fribble(mut self, f: &str) -> Self {
        self.fribble = Some(f.to_string());
        self
    }

    fn round(mut self, r: u32) -> Self {
        self.round = Some(r);
        self
    }

    fn speaker(mut self, s: &str) -> Self {
        self.speaker = Some(s.to_string());
        self
    }

    fn phase(mut self, p: Phase) -> Self {
        self.phase = Some(p);
        self
    }

    fn core(mut self, c: &str) -> Self {
        self.core = Some(c.to_string());
        self
    }
}

/// Extraction and typing for one dialogue.
#[derive(Debug, Clone)]
pub struct DyadResult {
    pub dyad: DyadId,
    pub extraction: Extraction,
    pub timelines: Vec<TypeTimeline>,
}

impl DyadResult {
    pub fn timeline(&self, fribble: &str) -> Option<&TypeTimeline> {
        self.timelines.iter().find(|t| t.fribble == fribble)
    }
}

pub fn process_dialogue(d: &Dialogue) -> DyadResult {
    let extraction = extract_shared_constructions(d);
    let timelines = build_timelines(&d.dyad, &extraction);
    DyadResult {
        dyad: d.dyad.clone(),
        extraction,
        timelines,
    }
}

/// Results in corpus dialogue order.
pub fn process_corpus(c: &Corpus) -> Vec<DyadResult> {
    c.dialogues.iter().map(process_dialogue).collect()
}

/// A statistic, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stat {
    Value(StatResult),
    Unavailable { unavailable: String },
}

impl Stat {
    pub fn result(&self) -> Option<&StatResult> {
        match self {
            Stat::Value(r) => Some(r),
            Stat::Unavailable { .. } => None,
        }
    }
}

impl From<Result<StatResult, StatsError>> for Stat {
    fn from(r: Result<StatResult, StatsError>) -> Self {
        match r {
            Ok(v) => Stat::Value(v),
            Err(e) => Stat::Unavailable {
                unavailable: e.to_string(),
            },
        }
    }
}

fn pairs(d: &Dialogue, results: &[DyadResult]) -> Option<usize> {
    results.iter().position(|r| r.dyad == d.dyad)
}

// ---------------------------------------------------------------- analysis 1

pub fn analysis1(corpus: &Corpus, results: &[DyadResult]) -> Vec<AnalysisRow> {
    let mut rows = Vec::new();
    for d in &corpus.dialogues {
        let Some(i) = pairs(d, results) else { continue };
        let res = &results[i];
        for f in d.fribbles() {
            let n = res.extraction.get(f).map_or(0, Vec::len);
            let timeline = res.timeline(f);
            rows.push(AnalysisRow::new(1, &d.dyad, Metric::HasConstruction, (n > 0) as u8 as f64).fribble(f));
            rows.push(AnalysisRow::new(1, &d.dyad, Metric::ConstructionCount, n as f64).fribble(f));
            let types = timeline.map_or(0, |t| t.types.len());
            rows.push(AnalysisRow::new(1, &d.dyad, Metric::TypeCount, types as f64).fribble(f));
            for r in 1..=d.rounds {
                let k = timeline.map_or(0, |t| t.types_in_round(r));
                rows.push(AnalysisRow::new(1, &d.dyad, Metric::TypesInRound, k as f64).fribble(f).round(r));
            }
        }
        let coverage = utterance_coverage(d, &res.extraction);
        let (mut total, mut covered) = (0, 0);
        for c in &coverage {
            total += c.utterances;
            covered += c.covered;
            rows.push(AnalysisRow::new(1, &d.dyad, Metric::Utterances, c.utterances as f64).round(c.round));
            rows.push(AnalysisRow::new(1, &d.dyad, Metric::CoveredUtterances, c.covered as f64).round(c.round));
            if let Some(x) = c.fraction() {
                rows.push(AnalysisRow::new(1, &d.dyad, Metric::Coverage, x).round(c.round));
            }
        }
        if total > 0 {
            rows.push(AnalysisRow::new(1, &d.dyad, Metric::DialogueCoverage, covered as f64 / total as f64));
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundCoverageSummary {
    pub round: u32,
    /// Mean of per-dialogue fractions.
    pub mean: Option<f64>,
    /// Covered over total utterances, pooled across dialogues.
    pub pooled: Option<f64>,
    pub mean_types: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis1Summary {
    pub dyads: usize,
    pub cells: usize,
    /// Share of dyads with a construction for every fribble.
    pub dyads_all_fribbles: Option<f64>,
    pub cells_with_constructions: Option<f64>,
    pub mean_dialogue_coverage: Option<f64>,
    pub rounds: Vec<RoundCoverageSummary>,
    /// Spearman of round vs per-dialogue round coverage.
    pub coverage_trend: Stat,
    pub mean_types_per_fribble: Option<f64>,
    pub first_round_types: Option<f64>,
    pub last_round_types: Option<f64>,
    /// Paired t-test over (dyad, fribble) cells, first vs last round.
    pub first_vs_last: Stat,
}

fn values(rows: &[AnalysisRow], metric: Metric) -> impl Iterator<Item = &AnalysisRow> {
    rows.iter().filter(move |r| r.metric == metric)
}

fn collect(rows: &[AnalysisRow], metric: Metric) -> Vec<f64> {
    values(rows, metric).map(|r| r.value).collect()
}

pub fn summarize1(rows: &[AnalysisRow]) -> Analysis1Summary {
    let mut per_dyad: BTreeMap<&str, bool> = BTreeMap::new();
    for r in values(rows, Metric::HasConstruction) {
        *per_dyad.entry(&r.dyad).or_insert(true) &= r.value > 0.0;
    }
    let has = collect(rows, Metric::HasConstruction);
    let all: Vec<f64> = per_dyad.values().map(|&b| b as u8 as f64).collect();

    let coverage: Vec<&AnalysisRow> = values(rows, Metric::Coverage).collect();
    let last = rows.iter().filter_map(|r| r.round).max().unwrap_or(0);
    let mut rounds = Vec::new();
    for round in 1..=last {
        let at = |m: Metric| -> Vec<f64> {
            values(rows, m).filter(|r| r.round == Some(round)).map(|r| r.value).collect()
        };
        let total: f64 = at(Metric::Utterances).iter().sum();
        let covered: f64 = at(Metric::CoveredUtterances).iter().sum();
        rounds.push(RoundCoverageSummary {
            round,
            mean: mean(&at(Metric::Coverage)),
            pooled: (total > 0.0).then(|| covered / total),
            mean_types: mean(&at(Metric::TypesInRound)),
        });
    }
    let trend = spearman(
        &coverage.iter().map(|r| r.round.unwrap_or(0) as f64).collect::<Vec<_>>(),
        &coverage.iter().map(|r| r.value).collect::<Vec<_>>(),
    );

    let mut first: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut final_: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in values(rows, Metric::TypesInRound) {
        let key = (r.dyad.as_str(), r.fribble.as_deref().unwrap_or(""));
        if r.round == Some(1) {
            first.insert(key, r.value);
        }
        if r.round == Some(last) {
            final_.insert(key, r.value);
        }
    }
    let (a, b): (Vec<f64>, Vec<f64>) = first
        .iter()
        .filter_map(|(k, &x)| final_.get(k).map(|&y| (x, y)))
        .unzip();

    Analysis1Summary {
        dyads: per_dyad.len(),
        cells: has.len(),
        dyads_all_fribbles: mean(&all),
        cells_with_constructions: mean(&has),
        mean_dialogue_coverage: mean(&collect(rows, Metric::DialogueCoverage)),
        rounds,
        coverage_trend: trend.into(),
        mean_types_per_fribble: mean(&collect(rows, Metric::TypeCount)),
        first_round_types: mean(&a),
        last_round_types: mean(&b),
        first_vs_last: t_test(&a, &b, true).into(),
    }
}

// ---------------------------------------------------------------- analysis 2

pub fn analysis2(corpus: &Corpus, results: &[DyadResult]) -> Vec<AnalysisRow> {
    let names = corpus.naming_index();
    let mut rows = Vec::new();
    for d in &corpus.dialogues {
        let Some(i) = pairs(d, results) else { continue };
        let res = &results[i];
        for f in d.fribbles() {
            let types = res.timeline(f).map_or(&[][..], |t| &t.types[..]);
            for speaker in &d.speakers {
                let pre = names.get(&(speaker.as_str(), f, Phase::Pre)).copied();
                let post = names.get(&(speaker.as_str(), f, Phase::Post)).copied();
                let row = |m: Metric, v: f64| AnalysisRow::new(2, &d.dyad, m, v).fribble(f).speaker(speaker);
                let (Some(pre), Some(post)) = (pre, post) else {
                    rows.push(row(Metric::NamingMissing, 1.0));
                    continue;
                };
                if let Ok(s) = lexical_cosine(&pre.lemmas, &post.lemmas) {
                    rows.push(row(Metric::SelfSimilarity, s));
                }
                for name in [pre, post] {
                    let ov = name_overlap(name, types);
                    rows.push(row(Metric::NameOverlaps, ov.overlaps as u8 as f64).phase(name.phase));
                    rows.push(row(Metric::NameMaxSimilarity, ov.max_sim).phase(name.phase));
                    if let Some(m) = ov.mean_sim {
                        rows.push(row(Metric::NameMeanSimilarity, m).phase(name.phase));
                    }
                    for (t, (core, sim)) in types.iter().zip(&ov.per_type) {
                        for &r in &t.rounds_used {
                            rows.push(row(Metric::NameTypeSimilarity, *sim).phase(name.phase).core(core).round(r));
                        }
                    }
                }
                let post_sims = name_overlap(post, types).per_type;
                for (t, (_, sim)) in types.iter().zip(post_sims) {
                    rows.push(row(Metric::TypeLastRound, t.last_round as f64).core(&t.core));
                    rows.push(row(Metric::TypeUsage, t.usage_by(speaker) as f64).core(&t.core));
                    rows.push(row(Metric::TypePostSimilarity, sim).core(&t.core));
                }
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    /// Mean over participants of their share of overlapping names.
    pub overlap_rate: Option<f64>,
    pub overlap_rate_std: Option<f64>,
    pub mean_max_similarity: Option<f64>,
    pub mean_similarity_by_round: Vec<(u32, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis2Summary {
    pub speaker_fribbles: usize,
    pub naming_missing: usize,
    pub self_similarity: Option<f64>,
    pub self_similarity_std: Option<f64>,
    pub pre: PhaseSummary,
    pub post: PhaseSummary,
    /// Spearman of type last round vs post-name similarity.
    pub recency: Stat,
    /// Spearman of per-speaker type usage vs post-name similarity.
    pub frequency: Stat,
}

pub fn summarize2(rows: &[AnalysisRow]) -> Analysis2Summary {
    let last = rows.iter().filter_map(|r| r.round).max().unwrap_or(0);
    let phase = |p: Phase| {
        let mut per_speaker: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
        for r in values(rows, Metric::NameOverlaps).filter(|r| r.phase == Some(p)) {
            let key = (r.dyad.as_str(), r.speaker.as_deref().unwrap_or(""));
            per_speaker.entry(key).or_default().push(r.value);
        }
        let rates: Vec<f64> = per_speaker.values().filter_map(|v| mean(v)).collect();
        let by_round = (1..=last)
            .map(|round| {
                let sims: Vec<f64> = values(rows, Metric::NameTypeSimilarity)
                    .filter(|r| r.phase == Some(p) && r.round == Some(round))
                    .map(|r| r.value)
                    .collect();
                (round, mean(&sims))
            })
            .collect();
        PhaseSummary {
            overlap_rate: mean(&rates),
            overlap_rate_std: std_dev(&rates),
            mean_max_similarity: mean(
                &values(rows, Metric::NameMaxSimilarity)
                    .filter(|r| r.phase == Some(p))
                    .map(|r| r.value)
                    .collect::<Vec<_>>(),
            ),
            mean_similarity_by_round: by_round,
        }
    };

    type Key<'a> = (&'a str, Option<&'a str>, Option<&'a str>, Option<&'a str>);
    let keyed = |m: Metric| -> BTreeMap<Key, f64> {
        values(rows, m)
            .map(|r| {
                let key = (r.dyad.as_str(), r.speaker.as_deref(), r.fribble.as_deref(), r.core.as_deref());
                (key, r.value)
            })
            .collect()
    };
    let sim = keyed(Metric::TypePostSimilarity);
    let against = |m: Metric| -> Stat {
        let (x, y): (Vec<f64>, Vec<f64>) = keyed(m)
            .into_iter()
            .filter_map(|(k, v)| sim.get(&k).map(|&s| (v, s)))
            .unzip();
        spearman(&x, &y).into()
    };
    let selfsim = collect(rows, Metric::SelfSimilarity);
    let speaker_fribbles: BTreeSet<Key> = rows
        .iter()
        .filter(|r| r.analysis == 2)
        .map(|r| (r.dyad.as_str(), r.speaker.as_deref(), r.fribble.as_deref(), None))
        .collect();
    Analysis2Summary {
        speaker_fribbles: speaker_fribbles.len(),
        naming_missing: values(rows, Metric::NamingMissing).count(),
        self_similarity: mean(&selfsim),
        self_similarity_std: std_dev(&selfsim),
        pre: phase(Phase::Pre),
        post: phase(Phase::Post),
        recency: against(Metric::TypeLastRound),
        frequency: against(Metric::TypeUsage),
    }
}

// ---------------------------------------------------------------- analysis 3

pub fn analysis3(corpus: &Corpus, results: &[DyadResult]) -> Vec<AnalysisRow> {
    let names = corpus.naming_index();
    let mut rows = Vec::new();
    for d in &corpus.dialogues {
        let Some(i) = pairs(d, results) else { continue };
        let res = &results[i];
        let [a, b] = [d.speakers[0].as_str(), d.speakers[1].as_str()];
        for f in d.fribbles() {
            let row = |m: Metric, v: f64| AnalysisRow::new(3, &d.dyad, m, v).fribble(f);
            let get = |s: &str, p: Phase| names.get(&(s, f, p)).copied();
            let pair = NamePair {
                speakers: [a, b],
                pre: [get(a, Phase::Pre), get(b, Phase::Pre)],
                post: [get(a, Phase::Post), get(b, Phase::Post)],
            };
            let timeline = res.timeline(f);
            rows.push(row(Metric::TypeCount, timeline.map_or(0, |t| t.types.len()) as f64));
            match convergence(&d.dyad, &pair) {
                Ok(c) => {
                    rows.push(row(Metric::SPre, c.s_pre));
                    rows.push(row(Metric::SPost, c.s_post));
                    rows.push(row(Metric::Delta, c.delta));
                }
                Err(_) => rows.push(row(Metric::ConvergenceSkipped, 1.0)),
            }
            match timeline.and_then(TypeTimeline::dominant) {
                Some(t) => {
                    let feat = t.features(d.rounds);
                    rows.push(row(Metric::DominantFrequency, feat.frequency as f64).core(&t.core));
                    rows.push(row(Metric::DominantRecency, feat.recency as f64).core(&t.core));
                }
                None => rows.push(row(Metric::NoDominantType, 1.0)),
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis3Summary {
    pub cells: usize,
    pub convergence_skipped: usize,
    pub no_dominant_type: usize,
    pub mean_s_pre: Option<f64>,
    pub mean_s_post: Option<f64>,
    pub mean_delta: Option<f64>,
    pub types_vs_s_post: Stat,
    pub dominant_frequency_vs_s_post: Stat,
    pub dominant_recency_vs_s_post: Stat,
}

pub fn summarize3(rows: &[AnalysisRow]) -> Analysis3Summary {
    let keyed = |m: Metric| -> BTreeMap<(&str, &str), f64> {
        values(rows, m)
            .filter(|r| r.analysis == 3)
            .map(|r| ((r.dyad.as_str(), r.fribble.as_deref().unwrap_or("")), r.value))
            .collect()
    };
    let s_post = keyed(Metric::SPost);
    let against = |m: Metric| -> Stat {
        let (x, y): (Vec<f64>, Vec<f64>) = keyed(m)
            .into_iter()
            .filter_map(|(k, v)| s_post.get(&k).map(|&s| (v, s)))
            .unzip();
        spearman(&x, &y).into()
    };
    let of = |m: Metric| keyed(m).into_values().collect::<Vec<_>>();
    Analysis3Summary {
        cells: keyed(Metric::TypeCount).len(),
        convergence_skipped: keyed(Metric::ConvergenceSkipped).len(),
        no_dominant_type: keyed(Metric::NoDominantType).len(),
        mean_s_pre: mean(&of(Metric::SPre)),
        mean_s_post: mean(&of(Metric::SPost)),
        mean_delta: mean(&of(Metric::Delta)),
        types_vs_s_post: against(Metric::TypeCount),
        dominant_frequency_vs_s_post: against(Metric::DominantFrequency),
        dominant_recency_vs_s_post: against(Metric::DominantRecency),
    }
}
