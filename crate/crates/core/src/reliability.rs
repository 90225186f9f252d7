//! Probability that an allocation keeps at least `dem` instances alive.
//!
//! Machines fail independently with a common probability `fail`. Three
//! evaluators are provided: an exact dynamic program over alive-instance
//! totals, an exhaustive enumeration of alive sets (test oracle, small `m`
//! only) and a seeded Monte Carlo estimator. Homogeneous allocations reduce
//! to binomial tails, computed here from log-gamma terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;

use crate::model::check_fail;
use crate::sum::CompensatedSum;
use crate::{Error, Result};

/// Largest machine count accepted by [`reliability_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 25;

/// Trials per Monte Carlo chunk. Chunk `c` draws from the ChaCha8 stream `c`
/// of the seeded generator, so the estimate depends only on `(seed, trials)`
/// and not on how chunks are spread over threads.
pub const MONTE_CARLO_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dp,
    BruteForce,
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::BruteForce => "bruteforce",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

/// A success probability and how it was obtained. `trials`, `seed` and
/// `stderr` are set only for [`Method::MonteCarlo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityEstimate {
    pub value: f64,
    pub method: Method,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub stderr: Option<f64>,
}

impl ReliabilityEstimate {
    fn exact(value: f64, method: Method) -> Self {
        ReliabilityEstimate {
            value,
            method,
            trials: None,
            seed: None,
            stderr: None,
        }
    }
}

/// `ln P(Binomial(m, 1 - fail) = i)` for `0 < fail < 1`.
fn ln_alive_pmf(m: u64, i: u64, ln_fail: f64, ln_alive: f64) -> f64 {
    ln_binomial(m, i) + i as f64 * ln_alive + (m - i) as f64 * ln_fail
}

/// `(P(alive < k), P(alive >= k))` for `alive ~ Binomial(m, 1 - fail)`.
///
/// The smaller side is summed term by term and the other obtained by
/// complement.
pub fn binom_alive_tails(m: u64, fail: f64, k: i64) -> (f64, f64) {
    debug_assert!((0.0..1.0).contains(&fail));
    if k <= 0 {
        return (0.0, 1.0);
    }
    let k = k as u64;
    if k > m {
        return (1.0, 0.0);
    }
    if fail == 0.0 {
        // everything survives, and k <= m
        return (0.0, 1.0);
    }
    let ln_fail = fail.ln();
    let ln_alive = (-fail).ln_1p();
    let mean = m as f64 * (1.0 - fail);
    if ((k - 1) as f64) < mean {
        let below: CompensatedSum = (0..k)
            .map(|i| ln_alive_pmf(m, i, ln_fail, ln_alive).exp())
            .collect();
        let below = below.value().clamp(0.0, 1.0);
        (below, 1.0 - below)
    } else {
        let above: CompensatedSum = (k..=m)
            .map(|i| ln_alive_pmf(m, i, ln_fail, ln_alive).exp())
            .collect();
        let above = above.value().clamp(0.0, 1.0);
        (1.0 - above, above)
    }
}

/// `P(alive >= k)` where `alive ~ Binomial(m, 1 - fail)`.
pub fn binom_alive_tail(m: u64, fail: f64, k: i64) -> f64 {
    binom_alive_tails(m, fail, k).1
}

/// `P(alive < k)`, computed without cancellation when it is small.
pub fn binom_alive_below(m: u64, fail: f64, k: i64) -> f64 {
    binom_alive_tails(m, fail, k).0
}

/// Largest `m'` in `[0, m]` such that at least `m'` of `m` machines survive
/// with probability at least `1 - rel`.
///
/// The threshold is tested as `P(alive < m') <= rel`.
pub fn alive_quantile(m: u64, fail: f64, rel: f64) -> u64 {
    // P(alive < k) is nondecreasing in k and zero at k = 0.
    let (mut lo, mut hi) = (0u64, m);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if binom_alive_below(m, fail, mid as i64) <= rel {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Whether any allocation on `m` machines can meet the SLA: the best one
/// fails only when every machine does, with probability `fail^m`.
pub fn feasible(m: u64, fail: f64, rel: f64) -> bool {
    fail.powf(m as f64) <= rel
}

/// Exact probability that fewer than `dem` instances survive.
///
/// Tracks the distribution of the alive-instance total over `[0, dem)`;
/// mass that reaches `dem` or more can never fall back and is dropped.
/// Cost is `O(m * dem)`.
pub fn failure_dp(loads: &[u64], fail: f64, dem: u64) -> f64 {
    if dem == 0 {
        return 0.0;
    }
    let total: u64 = loads.iter().sum();
    if total < dem {
        return 1.0;
    }
    if fail == 0.0 {
        return 0.0;
    }
    let cap = dem as usize;
    let alive = 1.0 - fail;
    let mut dist = vec![0.0f64; cap];
    dist[0] = 1.0;
    // highest total reachable so far, capped to the tracked range
    let mut reach = 0usize;
    for &load in loads.iter().filter(|&&a| a > 0) {
        let load = load as usize;
        let new_reach = (reach + load.min(cap)).min(cap - 1);
        if load <= new_reach {
            for t in (load..=new_reach).rev() {
                dist[t] = fail * dist[t] + alive * dist[t - load];
            }
        }
        for x in &mut dist[..load.min(new_reach + 1)] {
            *x *= fail;
        }
        reach = new_reach;
    }
    let sum: CompensatedSum = dist.into_iter().collect();
    sum.value().clamp(0.0, 1.0)
}

/// Exact probability that at least `dem` instances survive.
pub fn reliability_dp(loads: &[u64], fail: f64, dem: u64) -> f64 {
    1.0 - failure_dp(loads, fail, dem)
}

/// Success probability by enumerating all `2^m` alive sets.
pub fn reliability_bruteforce(loads: &[u64], fail: f64, dem: u64) -> Result<f64> {
    if loads.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::BruteForceTooLarge {
            machines: loads.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    fn visit(loads: &[u64], fail: f64, dem: u64, prob: f64, total: u64, acc: &mut CompensatedSum) {
        match loads.split_first() {
            None => {
                if total >= dem {
                    acc.add(prob);
                }
            }
            Some((&load, rest)) => {
                visit(rest, fail, dem, prob * (1.0 - fail), total + load, acc);
                visit(rest, fail, dem, prob * fail, total, acc);
            }
        }
    }
    let mut acc = CompensatedSum::default();
    visit(loads, fail, dem, 1.0, 0, &mut acc);
    Ok(acc.value().clamp(0.0, 1.0))
}

/// Seeded Monte Carlo estimate of the success probability.
pub fn reliability_montecarlo(
    loads: &[u64],
    fail: f64,
    dem: u64,
    trials: u64,
    seed: u64,
) -> Result<ReliabilityEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let chunks = trials.div_ceil(MONTE_CARLO_CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = MONTE_CARLO_CHUNK.min(trials - chunk * MONTE_CARLO_CHUNK);
            let mut hits = 0u64;
            for _ in 0..n {
                let survived: u64 = loads
                    .iter()
                    .filter(|_| rng.random::<f64>() >= fail)
                    .sum();
                if survived >= dem {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let value = successes as f64 / trials as f64;
    Ok(ReliabilityEstimate {
        value,
        method: Method::MonteCarlo,
        trials: Some(trials),
        seed: Some(seed),
        stderr: Some((value * (1.0 - value) / trials as f64).sqrt()),
    })
}

/// Dispatches to the requested evaluator. `trials` and `seed` are used by
/// Monte Carlo only.
pub fn evaluate(
    method: Method,
    loads: &[u64],
    fail: f64,
    dem: u64,
    trials: u64,
    seed: u64,
) -> Result<ReliabilityEstimate> {
    check_fail(fail)?;
    match method {
        Method::Dp => Ok(ReliabilityEstimate::exact(reliability_dp(loads, fail, dem), method)),
        Method::BruteForce => Ok(ReliabilityEstimate::exact(
            reliability_bruteforce(loads, fail, dem)?,
            method,
        )),
        Method::MonteCarlo => reliability_montecarlo(loads, fail, dem, trials, seed),
    }
}
