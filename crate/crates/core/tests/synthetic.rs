use std::collections::BTreeMap;

use shared_constructions::analysis::process_corpus;
use shared_constructions::bundle::parse_corpus;
use shared_constructions::pipeline::analyze_corpus;
use shared_constructions::synth::{generate, write_synthetic, GeneratorConfig, GroundTruth, GROUND_TRUTH_FILE};

fn small() -> GeneratorConfig {
    GeneratorConfig {
        dyads: 20,
        fribbles: 8,
        ..GeneratorConfig::default()
    }
}

#[test]
fn dominant_cores_are_recovered_at_full_reuse() {
    let (corpus, truth) = generate(&small().with_reuse(1.0)).unwrap();
    let results = process_corpus(&corpus);
    let mut hits = 0;
    let mut cells = 0;
    for r in &results {
        for t in &r.timelines {
            let cell = truth.cell(&r.dyad, &t.fribble).unwrap();
            cells += 1;
            if t.dominant().map(|d| &d.core) == cell.expected_dominant.as_ref() {
                hits += 1;
            }
        }
    }
    assert_eq!(cells, 20 * 8);
    assert_eq!(hits, cells);
}

#[test]
fn unplanted_types_are_rare() {
    let (corpus, truth) = generate(&small()).unwrap();
    let results = process_corpus(&corpus);
    let types: Vec<&str> = results
        .iter()
        .flat_map(|r| &r.timelines)
        .flat_map(|t| &t.types)
        .map(|t| t.core.as_str())
        .collect();
    let spurious = types
        .iter()
        .filter(|c| !truth.is_planted(c) && !truth.is_descriptor(c))
        .count();
    let rate = spurious as f64 / types.len() as f64;
    assert!(rate < 0.01, "{spurious} of {} types unplanted", types.len());
}

#[test]
fn every_alive_core_emitted_by_both_speakers_is_found() {
    let (corpus, truth) = generate(&small()).unwrap();
    let results = process_corpus(&corpus);
    for r in &results {
        for t in &r.timelines {
            let cell = truth.cell(&r.dyad, &t.fribble).unwrap();
            let mut both: BTreeMap<&str, bool> = BTreeMap::new();
            for [a, b] in &cell.emitted {
                for core in a {
                    if b.contains(core) {
                        both.insert(core, true);
                    }
                }
            }
            for core in both.keys() {
                assert!(t.types.iter().any(|ty| ty.core == *core), "{} {} {core}", r.dyad, t.fribble);
            }
        }
    }
}

#[test]
fn usage_predicts_post_name_similarity() {
    let (corpus, _) = generate(&small()).unwrap();
    let report = analyze_corpus(&corpus, &[2].into()).unwrap();
    let freq = report.summary.analysis2.unwrap().frequency;
    let r = freq.result().expect("enough rows");
    assert!(r.statistic > 0.0 && r.p_value < 0.01, "{r:?}");
}

#[test]
fn generation_is_seeded() {
    let cfg = small();
    assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
    let other = GeneratorConfig { seed: 2, ..cfg.clone() };
    assert_ne!(generate(&cfg).unwrap().0, generate(&other).unwrap().0);
}

#[test]
fn written_bundle_is_valid_and_carries_ground_truth() {
    let (corpus, truth) = generate(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(&corpus, &truth, dir.path()).unwrap();
    assert_eq!(parse_corpus(dir.path()).unwrap(), corpus);
    let text = std::fs::read_to_string(dir.path().join(GROUND_TRUTH_FILE)).unwrap();
    assert_eq!(GroundTruth::from_ndjson(&text).unwrap(), truth);
}

#[test]
fn toml_config_overrides_defaults() {
    let cfg = GeneratorConfig::from_toml("dyads = 5\nseed = 9\n").unwrap();
    assert_eq!((cfg.dyads, cfg.seed, cfg.fribbles), (5, 9, 16));
    assert!(GeneratorConfig::from_toml("dyadz = 5\n").is_err());
    assert!(GeneratorConfig::from_toml("type_prune_schedule = [1, 2, 2, 2, 2, 2]\n").is_err());
}
