//! Similarity and test statistics.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("similarity is undefined for an empty lemma set")]
    EmptyVector,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("input is constant; the rank correlation is undefined")]
    ConstantInput,
    #[error("zero variance; the t statistic is undefined")]
    DegenerateVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    /// Spearman's rho or Student's t.
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    /// Degrees of freedom of the reference t distribution; absent for permutation tests.
    pub df: Option<f64>,
}

/// Binary bag-of-lemmas cosine: `|a ∩ b| / sqrt(|a| |b|)`.
pub fn lexical_cosine<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyVector);
    }
    let common = a.intersection(b).count() as f64;
    Ok(common / ((a.len() * b.len()) as f64).sqrt())
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    (xs.len() > 1).then(|| {
        let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
        (ss / (xs.len() - 1) as f64).sqrt()
    })
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x)?;
    let my = mean(y)?;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn two_sided_t(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

fn check_pair(x: &[f64], y: &[f64], needed: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < needed {
        return Err(StatsError::TooFewSamples {
            needed,
            got: x.len(),
        });
    }
    Ok(())
}

fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    pearson(&average_ranks(x), &average_ranks(y)).ok_or(StatsError::ConstantInput)
}

/// Tie-corrected Spearman correlation with a t-approximation p-value.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<StatResult, StatsError> {
    check_pair(x, y, 3)?;
    let rho = spearman_rho(x, y)?;
    let n = x.len();
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        two_sided_t(rho * (df / (1.0 - rho * rho)).sqrt(), df)
    };
    Ok(StatResult {
        statistic: rho,
        p_value,
        n,
        df: Some(df),
    })
}

/// Welch's t-test, or the paired t-test when `paired` is set. Two-sided.
pub fn t_test(a: &[f64], b: &[f64], paired: bool) -> Result<StatResult, StatsError> {
    if paired {
        check_pair(a, b, 2)?;
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let n = d.len();
        let md = mean(&d).expect("non-empty");
        let sd = std_dev(&d).expect("n >= 2");
        let df = (n - 1) as f64;
        if sd == 0.0 {
            return zero_variance(md, n, df);
        }
        let t = md / (sd / (n as f64).sqrt());
        return Ok(StatResult {
            statistic: t,
            p_value: two_sided_t(t, df),
            n,
            df: Some(df),
        });
    }

    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFewSamples {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a).unwrap(), mean(b).unwrap());
    let va = std_dev(a).unwrap().powi(2) / na;
    let vb = std_dev(b).unwrap().powi(2) / nb;
    let n = a.len() + b.len();
    if va + vb == 0.0 {
        return zero_variance(ma - mb, n, na + nb - 2.0);
    }
    let t = (ma - mb) / (va + vb).sqrt();
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(StatResult {
        statistic: t,
        p_value: two_sided_t(t, df),
        n,
        df: Some(df),
    })
}

// identical samples are a legitimate "no difference" outcome
fn zero_variance(diff: f64, n: usize, df: f64) -> Result<StatResult, StatsError> {
    if diff == 0.0 {
        Ok(StatResult {
            statistic: 0.0,
            p_value: 1.0,
            n,
            df: Some(df),
        })
    } else {
        Err(StatsError::DegenerateVariance)
    }
}

fn permutation_p(
    observed: f64,
    permutations: usize,
    mut draw: impl FnMut() -> Option<f64>,
) -> f64 {
    let tol = 1e-12 * observed.abs().max(1.0);
    let at_least = (0..permutations)
        .filter(|_| draw().is_some_and(|s| s.abs() + tol >= observed.abs()))
        .count();
    (1 + at_least) as f64 / (1 + permutations) as f64
}

/// Spearman's rho with a seeded permutation p-value, for small samples.
pub fn spearman_permutation(
    x: &[f64],
    y: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<StatResult, StatsError> {
    check_pair(x, y, 3)?;
    let rho = spearman_rho(x, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = y.to_vec();
    let p_value = permutation_p(rho, permutations, || {
        shuffled.shuffle(&mut rng);
        spearman_rho(x, &shuffled).ok()
    });
    Ok(StatResult {
        statistic: rho,
        p_value,
        n: x.len(),
        df: None,
    })
}

/// Permutation test on the mean difference: sign flips when paired, label
/// shuffles otherwise. The reported statistic is the observed difference.
pub fn mean_difference_permutation(
    a: &[f64],
    b: &[f64],
    paired: bool,
    permutations: usize,
    seed: u64,
) -> Result<StatResult, StatsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if paired {
        check_pair(a, b, 2)?;
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let observed = mean(&d).unwrap();
        let p_value = permutation_p(observed, permutations, || {
            let flipped: f64 = d
                .iter()
                .map(|v| if rng.random::<bool>() { *v } else { -v })
                .sum();
            Some(flipped / d.len() as f64)
        });
        return Ok(StatResult {
            statistic: observed,
            p_value,
            n: d.len(),
            df: None,
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::TooFewSamples {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    let observed = mean(a).unwrap() - mean(b).unwrap();
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let p_value = permutation_p(observed, permutations, || {
        pooled.shuffle(&mut rng);
        let (x, y) = pooled.split_at(a.len());
        Some(mean(x).unwrap() - mean(y).unwrap())
    });
    Ok(StatResult {
        statistic: observed,
        p_value,
        n: pooled.len(),
        df: None,
    })
}
