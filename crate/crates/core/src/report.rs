//! Plain-text rendering of a report directory's summary.

use std::fmt::Write;

use crate::analysis::Stat;
use crate::pipeline::{CorpusSummary, Summary};

/// A published headline number and where to find its counterpart in a summary.
pub struct Reference {
    pub label: &'static str,
    pub published: f64,
    pub pick: fn(&Summary) -> Option<f64>,
}

fn statistic(s: &Stat) -> Option<f64> {
    s.result().map(|r| r.statistic)
}

/// Headline values reported for the original 66-dyad corpus. They are only
/// meaningful when the analysed bundle is that corpus.
pub const PUBLISHED: &[Reference] = &[
    Reference {
        label: "dyads with a construction for every fribble",
        published: 0.92,
        pick: |s| s.real.analysis1.as_ref()?.dyads_all_fribbles,
    },
    Reference {
        label: "mean utterance coverage",
        published: 0.34,
        pick: |s| s.real.analysis1.as_ref()?.mean_dialogue_coverage,
    },
    Reference {
        label: "coverage, first round",
        published: 0.27,
        pick: |s| s.real.analysis1.as_ref()?.rounds.first()?.mean,
    },
    Reference {
        label: "coverage, last round",
        published: 0.37,
        pick: |s| s.real.analysis1.as_ref()?.rounds.last()?.mean,
    },
    Reference {
        label: "coverage trend (rho)",
        published: 0.36,
        pick: |s| statistic(&s.real.analysis1.as_ref()?.coverage_trend),
    },
    Reference {
        label: "pseudo-pair utterance coverage",
        published: 0.14,
        pick: |s| s.pseudo.as_ref()?.analysis1.as_ref()?.mean_dialogue_coverage,
    },
    Reference {
        label: "types per fribble",
        published: 4.0,
        pick: |s| s.real.analysis1.as_ref()?.mean_types_per_fribble,
    },
    Reference {
        label: "types per fribble, first round",
        published: 4.25,
        pick: |s| s.real.analysis1.as_ref()?.first_round_types,
    },
    Reference {
        label: "types per fribble, last round",
        published: 1.86,
        pick: |s| s.real.analysis1.as_ref()?.last_round_types,
    },
    Reference {
        label: "first vs last round (t)",
        published: 16.45,
        pick: |s| statistic(&s.real.analysis1.as_ref()?.first_vs_last),
    },
    Reference {
        label: "pre/post self-similarity",
        published: 0.27,
        pick: |s| s.real.analysis2.as_ref()?.self_similarity,
    },
    Reference {
        label: "pre names overlapping constructions",
        published: 0.413,
        pick: |s| s.real.analysis2.as_ref()?.pre.overlap_rate,
    },
    Reference {
        label: "post names overlapping constructions",
        published: 0.615,
        pick: |s| s.real.analysis2.as_ref()?.post.overlap_rate,
    },
    Reference {
        label: "recency vs post-name similarity (rho)",
        published: 0.2,
        pick: |s| statistic(&s.real.analysis2.as_ref()?.recency),
    },
    Reference {
        label: "usage vs post-name similarity (rho)",
        published: 0.45,
        pick: |s| statistic(&s.real.analysis2.as_ref()?.frequency),
    },
    Reference {
        label: "S_pre",
        published: 0.06,
        pick: |s| s.real.analysis3.as_ref()?.mean_s_pre,
    },
    Reference {
        label: "S_post",
        published: 0.43,
        pick: |s| s.real.analysis3.as_ref()?.mean_s_post,
    },
    Reference {
        label: "S_post - S_pre",
        published: 0.37,
        pick: |s| s.real.analysis3.as_ref()?.mean_delta,
    },
    Reference {
        label: "pseudo-pair S_post",
        published: 0.07,
        pick: |s| s.pseudo.as_ref()?.analysis3.as_ref()?.mean_s_post,
    },
    Reference {
        label: "pseudo-pair S_post - S_pre",
        published: 0.0,
        pick: |s| s.pseudo.as_ref()?.analysis3.as_ref()?.mean_delta,
    },
    Reference {
        label: "type count vs S_post (rho)",
        published: -0.13,
        pick: |s| statistic(&s.real.analysis3.as_ref()?.types_vs_s_post),
    },
    Reference {
        label: "dominant frequency vs S_post (rho)",
        published: 0.28,
        pick: |s| statistic(&s.real.analysis3.as_ref()?.dominant_frequency_vs_s_post),
    },
    Reference {
        label: "dominant recency vs S_post (rho)",
        published: 0.17,
        pick: |s| statistic(&s.real.analysis3.as_ref()?.dominant_recency_vs_s_post),
    },
];

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

fn stat(s: &Stat) -> String {
    match s {
        Stat::Value(r) => format!("{:.3} (p = {:.3e}, n = {})", r.statistic, r.p_value, r.n),
        Stat::Unavailable { unavailable } => format!("n/a ({unavailable})"),
    }
}

fn corpus_section(out: &mut String, name: &str, c: &CorpusSummary) {
    let _ = writeln!(out, "== {name} ==");
    let _ = writeln!(
        out,
        "dialogues {}, constructions {}, types {}",
        c.dialogues, c.constructions, c.types
    );
    if let Some(k) = c.role_conflicts {
        let _ = writeln!(out, "role conflicts {k}");
    }
    if let Some(a) = &c.analysis1 {
        let _ = writeln!(out, "-- analysis 1");
        let _ = writeln!(out, "dyads with constructions for every fribble  {}", num(a.dyads_all_fribbles));
        let _ = writeln!(out, "mean utterance coverage                     {}", num(a.mean_dialogue_coverage));
        let _ = writeln!(out, "coverage trend                              {}", stat(&a.coverage_trend));
        let _ = writeln!(out, "round  coverage  pooled  types");
        for r in &a.rounds {
            let _ = writeln!(
                out,
                "{:>5}  {:>8}  {:>6}  {:>5}",
                r.round,
                num(r.mean),
                num(r.pooled),
                num(r.mean_types)
            );
        }
        let _ = writeln!(out, "types per fribble                           {}", num(a.mean_types_per_fribble));
        let _ = writeln!(
            out,
            "first vs last round types                   {} vs {}, t = {}",
            num(a.first_round_types),
            num(a.last_round_types),
            stat(&a.first_vs_last)
        );
    }
    if let Some(a) = &c.analysis2 {
        let _ = writeln!(out, "-- analysis 2");
        let _ = writeln!(
            out,
            "pre/post self-similarity                    {} (sd {})",
            num(a.self_similarity),
            num(a.self_similarity_std)
        );
        let _ = writeln!(
            out,
            "names overlapping constructions             pre {} / post {}",
            num(a.pre.overlap_rate),
            num(a.post.overlap_rate)
        );
        let _ = writeln!(out, "recency vs post-name similarity             {}", stat(&a.recency));
        let _ = writeln!(out, "usage vs post-name similarity               {}", stat(&a.frequency));
        if a.naming_missing > 0 {
            let _ = writeln!(out, "speaker-fribble pairs without both names    {}", a.naming_missing);
        }
    }
    if let Some(a) = &c.analysis3 {
        let _ = writeln!(out, "-- analysis 3");
        let _ = writeln!(
            out,
            "S_pre {}  S_post {}  delta {}",
            num(a.mean_s_pre),
            num(a.mean_s_post),
            num(a.mean_delta)
        );
        let _ = writeln!(out, "type count vs S_post                        {}", stat(&a.types_vs_s_post));
        let _ = writeln!(out, "dominant frequency vs S_post                {}", stat(&a.dominant_frequency_vs_s_post));
        let _ = writeln!(out, "dominant recency vs S_post                  {}", stat(&a.dominant_recency_vs_s_post));
        let _ = writeln!(
            out,
            "cells skipped (names) {}, without dominant type {}",
            a.convergence_skipped, a.no_dominant_type
        );
    }
}

/// Human-readable summary; with `compare`, a table against [`PUBLISHED`].
pub fn render(s: &Summary, compare: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} (seed {}, analyses {:?})", s.format, s.seed, s.analyses);
    corpus_section(&mut out, "real pairs", &s.real);
    if let Some(p) = &s.pseudo {
        corpus_section(&mut out, "pseudo-pairs", p);
    }
    if compare {
        let _ = writeln!(out, "== published reference ==");
        let _ = writeln!(out, "{:<44} {:>9} {:>9}", "metric", "published", "this");
        for r in PUBLISHED {
            let _ = writeln!(out, "{:<44} {:>9.3} {:>9}", r.label, r.published, num((r.pick)(s)));
        }
    }
    out
}
