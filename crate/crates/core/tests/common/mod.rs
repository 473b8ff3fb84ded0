#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::Rng;
use shared_constructions::corpus::{Corpus, Dialogue, Pos, Token, Trial, Utterance};
use shared_constructions::extraction::Extraction;

pub const SPEAKERS: [&str; 2] = ["m01a", "m01b"];
pub const FRIBBLES: [&str; 2] = ["f1", "f2"];
pub const VOCAB: usize = 10;

const TAGS: [Pos; 8] = [
    Pos::Noun,
    Pos::Verb,
    Pos::Adj,
    Pos::Adv,
    Pos::Det,
    Pos::Adp,
    Pos::Pron,
    Pos::Intj,
];

/// `(lemma index, tag index, disfluent)`.
pub type RawToken = (usize, usize, bool);

#[derive(Debug, Clone)]
pub struct RawUtterance {
    pub fribble: usize,
    pub round: u32,
    pub tokens: Vec<RawToken>,
}

/// Up to five utterances per speaker.
#[derive(Debug, Clone)]
pub struct MiniSpec {
    pub by_speaker: [Vec<RawUtterance>; 2],
}

fn raw_utterance() -> impl Strategy<Value = RawUtterance> {
    (
        0..FRIBBLES.len(),
        1u32..=2,
        prop::collection::vec((0..VOCAB, 0..TAGS.len(), prop::bool::weighted(0.1)), 1..=8),
    )
        .prop_map(|(fribble, round, tokens)| RawUtterance { fribble, round, tokens })
}

pub fn mini_spec() -> impl Strategy<Value = MiniSpec> {
    (
        prop::collection::vec(raw_utterance(), 0..=5),
        prop::collection::vec(raw_utterance(), 0..=5),
    )
        .prop_map(|(a, b)| MiniSpec { by_speaker: [a, b] })
}

/// Same distribution as [`mini_spec`], drawn from an explicit RNG.
pub fn random_spec(rng: &mut impl Rng) -> MiniSpec {
    let mut side = || -> Vec<RawUtterance> {
        let n = rng.random_range(0..=5);
        (0..n)
            .map(|_| {
                let len = rng.random_range(1..=8);
                RawUtterance {
                    fribble: rng.random_range(0..FRIBBLES.len()),
                    round: rng.random_range(1..=2),
                    tokens: (0..len)
                        .map(|_| {
                            (
                                rng.random_range(0..VOCAB),
                                rng.random_range(0..TAGS.len()),
                                rng.random_bool(0.1),
                            )
                        })
                        .collect(),
                }
            })
            .collect()
    };
    let a = side();
    let b = side();
    MiniSpec { by_speaker: [a, b] }
}

pub fn lemma(i: usize) -> String {
    format!("w{i}")
}

/// One dyad; trials ordered by round then fribble, utterances numbered in
/// that order.
pub fn build_corpus(spec: &MiniSpec) -> Corpus {
    let mut all: Vec<(usize, &RawUtterance)> = spec
        .by_speaker
        .iter()
        .enumerate()
        .flat_map(|(s, us)| us.iter().map(move |u| (s, u)))
        .collect();
    all.sort_by_key(|(_, u)| (u.round, u.fribble));

    let mut trials: Vec<Trial> = Vec::new();
    for (gi, (s, u)) in all.into_iter().enumerate() {
        let tokens = u
            .tokens
            .iter()
            .map(|&(l, t, disfluent)| Token {
                surface: lemma(l),
                lemma: lemma(l),
                pos: TAGS[t],
                disfluency: disfluent,
            })
            .collect();
        let utterance = Utterance {
            speaker: SPEAKERS[s].to_string(),
            tokens,
            global_index: gi as u32,
        };
        let fribble = FRIBBLES[u.fribble];
        match trials.last_mut() {
            Some(t) if t.round == u.round && t.fribble == fribble => t.utterances.push(utterance),
            _ => trials.push(Trial {
                fribble: fribble.to_string(),
                round: u.round,
                director: SPEAKERS[s].to_string(),
                matcher: SPEAKERS[1 - s].to_string(),
                utterances: vec![utterance],
            }),
        }
    }
    Corpus {
        dialogues: vec![Dialogue {
            dyad: "m01".into(),
            speakers: SPEAKERS.map(String::from),
            rounds: 2,
            trials,
        }],
        namings: Vec::new(),
        pseudo: None,
    }
}

/// `(speaker, round, utterance index, token offset)`.
pub type Site = (String, u32, u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleEntry {
    pub maximal: bool,
    pub sites: Vec<Site>,
}

pub type OracleResult = BTreeMap<String, BTreeMap<Vec<String>, OracleEntry>>;

fn ngrams(stream: &[String]) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    for i in 0..stream.len() {
        for j in i + 1..=stream.len() {
            out.insert(stream[i..j].to_vec());
        }
    }
    out
}

/// Brute force: enumerate every n-gram per speaker, intersect, drop
/// function-only sequences, then drop sequences left under two fribbles.
pub fn oracle_extract(d: &Dialogue) -> OracleResult {
    struct Pool {
        streams: Vec<(String, u32, u32, Vec<String>)>,
        content: BTreeSet<String>,
    }
    let mut pools: BTreeMap<String, Pool> = BTreeMap::new();
    for t in &d.trials {
        let pool = pools.entry(t.fribble.clone()).or_insert(Pool {
            streams: Vec::new(),
            content: BTreeSet::new(),
        });
        for u in &t.utterances {
            let mut stream = Vec::new();
            for tok in &u.tokens {
                if tok.disfluency {
                    continue;
                }
                if matches!(tok.pos, Pos::Noun | Pos::Verb | Pos::Adj | Pos::Adv) {
                    pool.content.insert(tok.lemma.clone());
                }
                stream.push(tok.lemma.clone());
            }
            pool.streams.push((u.speaker.clone(), t.round, u.global_index, stream));
        }
    }

    let mut raw: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    let mut kept: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    for (f, pool) in &pools {
        let grams = |who: &str| -> BTreeSet<Vec<String>> {
            pool.streams
                .iter()
                .filter(|s| s.0 == who)
                .flat_map(|s| ngrams(&s.3))
                .collect()
        };
        let shared: BTreeSet<Vec<String>> = grams(&d.speakers[0])
            .intersection(&grams(&d.speakers[1]))
            .cloned()
            .collect();
        let content: BTreeSet<Vec<String>> = shared
            .iter()
            .filter(|s| s.iter().any(|l| pool.content.contains(l)))
            .cloned()
            .collect();
        raw.insert(f.clone(), shared);
        kept.insert(f.clone(), content);
    }

    let mut out = OracleResult::new();
    for (f, set) in &kept {
        let survivors: Vec<&Vec<String>> = set
            .iter()
            .filter(|s| kept.iter().filter(|(g, _)| *g != f).all(|(_, other)| !other.contains(*s)))
            .collect();
        if survivors.is_empty() {
            continue;
        }
        let shared = &raw[f];
        let pool = &pools[f];
        let mut entries = BTreeMap::new();
        for s in survivors {
            let extends = shared.iter().any(|t| {
                t.len() == s.len() + 1 && (t[1..] == s[..] || t[..s.len()] == s[..])
            });
            let mut sites = Vec::new();
            for (speaker, round, gi, stream) in &pool.streams {
                if stream.len() < s.len() {
                    continue;
                }
                for start in 0..=stream.len() - s.len() {
                    if stream[start..start + s.len()] == s[..] {
                        sites.push((speaker.clone(), *round, *gi, start as u32));
                    }
                }
            }
            sites.sort_by_key(|x| (x.2, x.3));
            entries.insert(
                s.clone(),
                OracleEntry {
                    maximal: !extends,
                    sites,
                },
            );
        }
        out.insert(f.clone(), entries);
    }
    out
}

/// The pipeline's extraction in the oracle's shape.
pub fn as_oracle(x: &Extraction) -> OracleResult {
    x.iter()
        .map(|(f, cs)| {
            let entries = cs
                .iter()
                .map(|c| {
                    let sites = c
                        .occurrences
                        .iter()
                        .map(|o| (o.speaker.clone(), o.round, o.utterance_index, o.token_offset))
                        .collect();
                    (
                        c.lemmas.clone(),
                        OracleEntry {
                            maximal: c.is_maximal,
                            sites,
                        },
                    )
                })
                .collect();
            (f.clone(), entries)
        })
        .collect()
}

/// Function-only survivors and survivors listed under two fribbles.
pub fn filter_violations(d: &Dialogue, x: &Extraction) -> (usize, usize) {
    let mut content: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for t in &d.trials {
        for tok in t.utterances.iter().flat_map(|u| &u.tokens) {
            if !tok.disfluency && tok.pos.is_content() {
                content.entry(t.fribble.as_str()).or_default().insert(&tok.lemma);
            }
        }
    }
    let mut function_only = 0;
    let mut seen: BTreeMap<&[String], usize> = BTreeMap::new();
    for (f, cs) in x {
        for c in cs {
            let lex = content.get(f.as_str());
            if !c.lemmas.iter().any(|l| lex.is_some_and(|s| s.contains(l.as_str()))) {
                function_only += 1;
            }
            *seen.entry(&c.lemmas).or_default() += 1;
        }
    }
    (function_only, seen.values().filter(|&&n| n > 1).count())
}

// ---- statistics oracles ----

/// Spearman's rho for tie-free data: `1 - 6 sum d^2 / (n (n^2 - 1))`.
pub fn spearman_closed_form(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; v.len()];
        for (i, a) in v.iter().enumerate() {
            r[i] = 1.0 + v.iter().filter(|b| *b < a).count() as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Pearson on mid-ranks, computed with counting instead of sorting.
pub fn spearman_midrank(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Two-sided Student-t tail probability by quadrature. With
/// `x = sqrt(df) tan(theta)` the density becomes `cos(theta)^(df - 1)` on
/// `[0, pi/2)`, so no gamma function is needed.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let theta = (t.abs() / df.sqrt()).atan();
    let f = |th: f64| th.cos().powf(df - 1.0);
    let whole = simpson(f, 0.0, std::f64::consts::FRAC_PI_2, 20_000);
    let tail = simpson(f, theta, std::f64::consts::FRAC_PI_2, 20_000);
    tail / whole
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// `(t, df)` for Welch's test.
pub fn welch_closed_form(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    (t, df)
}

/// `(t, df)` for the paired test.
pub fn paired_closed_form(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (m, v) = mean_var(&d);
    let n = d.len() as f64;
    (m / (v / n).sqrt(), n - 1.0)
}
