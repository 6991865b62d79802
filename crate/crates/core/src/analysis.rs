//! Design-analysis helpers: the chance that `n` verifiers cover both sides
//! of a sender, and how many receivers each election strategy picks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::obu::Election;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("mutual-set size must be at least 1")]
    EmptyMutualSet,
    #[error("p must be at least 1")]
    ZeroP,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbResult {
    pub n: u32,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub mc_trials: u64,
    pub mc_stderr: f64,
}

impl ProbResult {
    /// Closed form and estimate agree within four standard errors.
    pub fn agrees(&self) -> bool {
        (self.closed_form - self.monte_carlo).abs() <= 4.0 * self.mc_stderr
    }
}

/// `1 - 2·(1/2)^n`: each verifier independently ahead of or behind the
/// sender with probability ½, and both sides must be covered.
pub fn prob_both_sides_closed_form(n: u32) -> f64 {
    if n <= 1 {
        0.0
    } else {
        1.0 - 2.0 * 0.5f64.powi(n as i32)
    }
}

fn both_sides_once(n: u32, rng: &mut impl RngCore) -> bool {
    let (mut ahead, mut behind) = (false, false);
    let mut left = n;
    while left > 0 && !(ahead && behind) {
        let take = left.min(64);
        let bits = rng.next_u64();
        let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
        ahead |= bits & mask != 0;
        behind |= !bits & mask != 0;
        left -= take;
    }
    ahead && behind
}

pub fn prob_both_sides(n: u32, trials: u64, seed: u64) -> Result<ProbResult, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let hits = (0..trials).filter(|_| both_sides_once(n, &mut rng)).count() as f64;
    let p_hat = hits / trials as f64;
    Ok(ProbResult {
        n,
        closed_form: prob_both_sides_closed_form(n),
        monte_carlo: p_hat,
        mc_trials: trials,
        mc_stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
    })
}

pub const PROB_CSV_HEADER: &str = "n,closed_form,monte_carlo,stderr";

pub fn prob_csv(rows: &[ProbResult]) -> String {
    let mut out = format!("{PROB_CSV_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{:.6},{:.6},{:.6}", r.n, r.closed_form, r.monte_carlo, r.mc_stderr).unwrap();
    }
    out
}

/// Verifier counts for one sender and `k + 1` receivers that all know each
/// other, so every receiver's mutual set is the other `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifierDistribution {
    pub k: usize,
    pub p: usize,
    pub strategy: Election,
    pub trials: u64,
    /// Verifier count → number of trials.
    pub histogram: BTreeMap<usize, u64>,
    /// Verifier count → probability, by enumeration. Only for `k ≤ 12`.
    pub exact: Option<BTreeMap<usize, f64>>,
}

impl VerifierDistribution {
    pub fn empirical(&self) -> BTreeMap<usize, f64> {
        self.histogram
            .iter()
            .map(|(&c, &n)| (c, n as f64 / self.trials as f64))
            .collect()
    }

    /// Every exact probability within four binomial standard errors of its
    /// empirical frequency. Vacuously true without an exact distribution.
    pub fn exact_matches_empirical(&self) -> bool {
        let Some(exact) = &self.exact else { return true };
        let emp = self.empirical();
        let t = self.trials as f64;
        exact.keys().chain(emp.keys()).all(|c| {
            let q = exact.get(c).copied().unwrap_or(0.0);
            let f = emp.get(c).copied().unwrap_or(0.0);
            let se = (q * (1.0 - q) / t).sqrt();
            (q - f).abs() <= 4.0 * se + 1e-12
        })
    }
}

/// Number of the `ids` (receivers) that elect themselves for `sender`.
pub fn count_verifiers(sender: u64, ids: &[u64], p: usize, strategy: Election) -> usize {
    let mut mutual = Vec::with_capacity(ids.len());
    ids.iter()
        .enumerate()
        .filter(|&(i, &me)| {
            mutual.clear();
            mutual.extend(ids.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &m)| m));
            strategy.is_verifier(me, sender, &mutual, p)
        })
        .count()
}

/// Exact distribution by enumeration. Receivers sit at distances
/// `1..=k+1` from the sender; every assignment of sides (ahead/behind) is
/// tried. With distinct distances only the rank order matters, and random
/// 64-bit ids tie with negligible probability.
pub fn exact_verifier_distribution(k: usize, p: usize, strategy: Election) -> BTreeMap<usize, f64> {
    let sender = 1u64 << 63;
    let n = k + 1;
    let patterns = 1u64 << n;
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    let mut ids = vec![0u64; n];
    for sides in 0..patterns {
        for (d, id) in ids.iter_mut().enumerate() {
            let dist = d as u64 + 1;
            *id = if sides >> d & 1 == 1 { sender + dist } else { sender - dist };
        }
        *counts.entry(count_verifiers(sender, &ids, p, strategy)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(c, n)| (c, n as f64 / patterns as f64))
        .collect()
}

/// Largest `k` for which [`verifier_count_distribution`] enumerates.
pub const EXACT_K_MAX: usize = 12;

pub fn verifier_count_distribution(
    k: usize,
    p: usize,
    strategy: Election,
    trials: u64,
    seed: u64,
) -> Result<VerifierDistribution, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::EmptyMutualSet);
    }
    if p == 0 {
        return Err(AnalysisError::ZeroP);
    }
    if trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut histogram = BTreeMap::new();
    let mut ids = vec![0u64; k + 1];
    for _ in 0..trials {
        let sender: u64 = rng.gen();
        for id in ids.iter_mut() {
            *id = loop {
                let v: u64 = rng.gen();
                if v != sender {
                    break v;
                }
            };
        }
        *histogram.entry(count_verifiers(sender, &ids, p, strategy)).or_default() += 1;
    }
    Ok(VerifierDistribution {
        k,
        p,
        strategy,
        trials,
        histogram,
        exact: (k <= EXACT_K_MAX).then(|| exact_verifier_distribution(k, p, strategy)),
    })
}

pub const ELECTION_CSV_HEADER: &str = "strategy,k,p,verifiers,frequency,exact";

pub fn election_csv(rows: &[VerifierDistribution]) -> String {
    let mut out = format!("{ELECTION_CSV_HEADER}\n");
    for d in rows {
        let emp = d.empirical();
        let mut counts: Vec<usize> = emp.keys().copied().collect();
        if let Some(ex) = &d.exact {
            counts.extend(ex.keys());
        }
        counts.sort_unstable();
        counts.dedup();
        for c in counts {
            let exact = d
                .exact
                .as_ref()
                .map(|e| format!("{:.6}", e.get(&c).copied().unwrap_or(0.0)))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{:.6},{}",
                d.strategy,
                d.k,
                d.p,
                c,
                emp.get(&c).copied().unwrap_or(0.0),
                exact
            )
            .unwrap();
        }
    }
    out
}
