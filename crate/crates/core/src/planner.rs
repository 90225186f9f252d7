//! Integral allocation heuristics.
//!
//! Every plan returned here carries an allocation whose exact failure
//! probability, computed by [`failure_dp`], is at most `rel`.

use rayon::prelude::*;

use crate::bounds::{chernoff_margin, chernoff_min_machines, min_energy_frac};
use crate::energy::{best_k, EnergyCurveParams};
use crate::model::{energy_parts, Allocation, Platform, PlanResult, Policy, Sla};
use crate::reliability::{alive_quantile, failure_dp, feasible};
use crate::{Error, Result};

/// How many machines a plan may switch on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MachineCount {
    /// All `m` machines stay on and pay static energy.
    All,
    /// Machines may be switched off; the count comes from [`best_k`].
    Heuristic,
    /// Machines may be switched off; every count in `1..=m` is planned and the
    /// cheapest kept. Expensive for `BestStep`.
    Exhaustive,
}

fn check_k(platform: &Platform, k: usize) -> Result<()> {
    if k == 0 || k > platform.m() {
        return Err(Error::ContractViolation(format!(
            "machine count {k} outside 1..={}",
            platform.m()
        )));
    }
    Ok(())
}

/// Per-machine capacity of the Chernoff homogeneous plan on `k` machines:
/// `ceil(dem / (k * (1 - fail - sqrt(l / k))))`.
pub fn theo_homo_capacity(p: &EnergyCurveParams, k: usize) -> Result<u64> {
    let margin = chernoff_margin(p.fail, &p.coeffs, k);
    if margin <= 0.0 {
        return Err(Error::ChernoffInfeasible {
            machines: k,
            min_machines: chernoff_min_machines(p.fail, &p.coeffs),
        });
    }
    Ok((p.dem as f64 / (k as f64 * margin)).ceil() as u64)
}

/// Energy of the Chernoff homogeneous plan on `k` machines, without building
/// it.
pub fn theo_homo_energy(p: &EnergyCurveParams, k: usize) -> Result<f64> {
    let capacity = theo_homo_capacity(p, k)?;
    if capacity == 0 {
        return Ok(0.0);
    }
    Ok(k as f64 * (p.estat + p.ecoeff * (capacity as f64).powf(p.alpha)))
}

/// Smallest capacity `A` such that `A` instances on each of `k` machines
/// meet the SLA: `ceil(dem / m')` with `m'` the alive quantile.
pub fn best_homo_capacity(k: usize, fail: f64, sla: &Sla) -> Result<u64> {
    if sla.dem() == 0 {
        return Ok(0);
    }
    let quantile = alive_quantile(k as u64, fail, sla.rel());
    if quantile == 0 {
        return Err(Error::Infeasible(format!(
            "on {k} machines no homogeneous allocation reaches the reliability target"
        )));
    }
    Ok(sla.dem().div_ceil(quantile))
}

fn finish(policy: Policy, platform: &Platform, sla: &Sla, allocation: Allocation) -> Result<PlanResult> {
    let failure = failure_dp(allocation.loads(), platform.fail(), sla.dem());
    if failure > sla.rel() {
        return Err(Error::ContractViolation(format!(
            "{policy} plan fails the exact check ({failure:e} > {:e})",
            sla.rel()
        )));
    }
    let (stat, dynamic) = energy_parts(&allocation, platform, None)?;
    Ok(PlanResult::new(
        policy,
        allocation.on_count(),
        Some(allocation),
        Some(failure),
        stat,
        dynamic,
    ))
}

/// Chernoff homogeneous plan on the first `k` machines.
pub fn theo_homo(platform: &Platform, sla: &Sla, k: usize) -> Result<PlanResult> {
    check_k(platform, k)?;
    let p = EnergyCurveParams::new(platform, sla);
    let capacity = theo_homo_capacity(&p, k)?;
    finish(Policy::TheoHomo, platform, sla, Allocation::uniform(k, capacity, platform.m()))
}

/// Cheapest homogeneous plan on the first `k` machines.
pub fn best_homo(platform: &Platform, sla: &Sla, k: usize) -> Result<PlanResult> {
    check_k(platform, k)?;
    let capacity = best_homo_capacity(k, platform.fail(), sla)?;
    finish(Policy::BestHomo, platform, sla, Allocation::uniform(k, capacity, platform.m()))
}

fn step_allocation(k: usize, capacity: u64, demoted: usize, m: usize) -> Allocation {
    Allocation::steps(&[(k - demoted, capacity), (demoted, capacity - 1)], m)
}

/// Largest number of machines that can drop from `capacity` to
/// `capacity - 1` while the plan stays valid. Validity is monotone in the
/// count, so a binary search applies.
pub fn max_demotions(platform: &Platform, sla: &Sla, k: usize, capacity: u64) -> usize {
    if capacity == 0 {
        return 0;
    }
    let valid = |n: usize| {
        let alloc = step_allocation(k, capacity, n, platform.m());
        failure_dp(alloc.loads(), platform.fail(), sla.dem()) <= sla.rel()
    };
    let (mut lo, mut hi) = (0usize, k);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if valid(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Two-level plan on the first `k` machines: the [`best_homo`] capacity `A`
/// on some machines and `A - 1` on as many others as the target allows.
pub fn best_step(platform: &Platform, sla: &Sla, k: usize) -> Result<PlanResult> {
    check_k(platform, k)?;
    let capacity = best_homo_capacity(k, platform.fail(), sla)?;
    let demoted = max_demotions(platform, sla, k, capacity);
    let alloc = if capacity == 0 {
        Allocation::uniform(0, 0, platform.m())
    } else {
        step_allocation(k, capacity, demoted, platform.m())
    };
    finish(Policy::BestStep, platform, sla, alloc)
}

/// The fractional Hoeffding lower bound `E_lb(k)`; no allocation.
pub fn lower_bound(platform: &Platform, sla: &Sla, k: usize) -> Result<PlanResult> {
    check_k(platform, k)?;
    let dynamic = platform.ecoeff()
        * min_energy_frac(sla.dem(), platform.fail(), sla.rel(), k, platform.alpha())?;
    Ok(PlanResult::new(
        Policy::LowerBound,
        k,
        None,
        None,
        k as f64 * platform.estat(),
        dynamic,
    ))
}

/// Runs `policy` on exactly `k` machines.
pub fn plan_at(policy: Policy, platform: &Platform, sla: &Sla, k: usize) -> Result<PlanResult> {
    match policy {
        Policy::LowerBound => lower_bound(platform, sla, k),
        Policy::TheoHomo => theo_homo(platform, sla, k),
        Policy::BestHomo => best_homo(platform, sla, k),
        Policy::BestStep => best_step(platform, sla, k),
    }
}

/// Plans `policy` on the platform. With `shutdown`, the machine count is
/// chosen by [`best_k`]; otherwise all machines stay on.
pub fn plan(policy: Policy, platform: &Platform, sla: &Sla, shutdown: bool) -> Result<PlanResult> {
    let count = if shutdown {
        MachineCount::Heuristic
    } else {
        MachineCount::All
    };
    plan_with(policy, platform, sla, count)
}

pub fn plan_with(
    policy: Policy,
    platform: &Platform,
    sla: &Sla,
    count: MachineCount,
) -> Result<PlanResult> {
    let m = platform.m();
    if !feasible(m as u64, platform.fail(), sla.rel()) {
        return Err(Error::Infeasible(format!(
            "all {m} machines fail together with probability {:e} > {:e}",
            platform.fail().powf(m as f64),
            sla.rel()
        )));
    }
    if sla.dem() == 0 {
        let on = if count == MachineCount::All { m } else { 0 };
        let (allocation, failure) = match policy {
            Policy::LowerBound => (None, None),
            _ => (Some(Allocation::uniform(0, 0, m)), Some(0.0)),
        };
        return Ok(PlanResult::new(
            policy,
            on,
            allocation,
            failure,
            on as f64 * platform.estat(),
            0.0,
        ));
    }
    match count {
        MachineCount::All => {
            let mut result = plan_at(policy, platform, sla, m)?;
            result.k = m;
            result.energy_static = m as f64 * platform.estat();
            result.energy_total = result.energy_static + result.energy_dynamic;
            Ok(result)
        }
        MachineCount::Heuristic => {
            let k = best_k(policy, &EnergyCurveParams::new(platform, sla), m)?;
            plan_at(policy, platform, sla, k)
        }
        MachineCount::Exhaustive => match policy {
            Policy::LowerBound | Policy::TheoHomo => {
                plan_with(policy, platform, sla, MachineCount::Heuristic)
            }
            Policy::BestHomo | Policy::BestStep => {
                let energies: Vec<Option<f64>> = (1..=m)
                    .into_par_iter()
                    .map(|k| plan_at(policy, platform, sla, k).ok().map(|r| r.energy_total))
                    .collect();
                let best = energies
                    .iter()
                    .enumerate()
                    .filter_map(|(i, e)| e.map(|e| (e, i + 1)))
                    .fold(None, |best: Option<(f64, usize)>, (e, k)| match best {
                        Some((be, _)) if be <= e => best,
                        _ => Some((e, k)),
                    });
                match best {
                    Some((_, k)) => plan_at(policy, platform, sla, k),
                    None => Err(Error::Infeasible(format!(
                        "{policy} finds no valid plan on any machine count up to {m}"
                    ))),
                }
            }
        },
    }
}
