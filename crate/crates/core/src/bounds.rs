//! Closed-form bounds for fractional allocations on a fixed set of machines.
//!
//! Lower bounds follow from Hoeffding's inequality combined with Hölder's
//! inequality and hold for every valid allocation. Upper bounds come from a
//! Chernoff bound on the number of alive machines and are achieved by
//! fractional homogeneous allocations. All values are exact formula values;
//! rounding to integral plans happens in [`crate::planner`].

use crate::model::RelCoeffs;
use crate::{Error, Result};

pub fn rel_coeffs(rel: f64) -> Result<RelCoeffs> {
    if !(rel > 0.0 && rel < 1.0) {
        return Err(Error::invalid("reliability target", format!("{rel} is outside (0, 1)")));
    }
    Ok(RelCoeffs {
        l: -rel.ln() / 2.0,
        lprime: -(-rel).ln_1p() / 2.0,
    })
}

/// Smallest machine count for which `1 - fail - sqrt(l / m) > 0`.
pub fn chernoff_min_machines(fail: f64, coeffs: &RelCoeffs) -> usize {
    let pole = coeffs.l / ((1.0 - fail) * (1.0 - fail));
    let mut m = pole.floor().max(0.0) as usize + 1;
    // guard against rounding right at the pole
    while chernoff_margin(fail, coeffs, m) <= 0.0 {
        m += 1;
    }
    m
}

/// `1 - fail - sqrt(l / m)`: the Chernoff guarantee needs this positive.
pub fn chernoff_margin(fail: f64, coeffs: &RelCoeffs, m: usize) -> f64 {
    1.0 - fail - (coeffs.l / m as f64).sqrt()
}

fn checked_margin(fail: f64, coeffs: &RelCoeffs, m: usize) -> Result<f64> {
    let margin = chernoff_margin(fail, coeffs, m);
    if margin > 0.0 {
        Ok(margin)
    } else {
        Err(Error::ChernoffInfeasible {
            machines: m,
            min_machines: chernoff_min_machines(fail, coeffs),
        })
    }
}

/// Hoeffding lower bound on the total number of instances of any valid
/// allocation: `dem / (1 - fail + sqrt(lprime))`.
pub fn min_rep(dem: u64, fail: f64, rel: f64) -> Result<f64> {
    let c = rel_coeffs(rel)?;
    Ok(dem as f64 / (1.0 - fail + c.lprime.sqrt()))
}

/// Total instances of the Chernoff-valid fractional homogeneous allocation
/// on `m` machines: `dem / (1 - fail - sqrt(l / m))`.
pub fn max_rep(dem: u64, fail: f64, rel: f64, m: usize) -> Result<f64> {
    let c = rel_coeffs(rel)?;
    Ok(dem as f64 / checked_margin(fail, &c, m)?)
}

/// Lower bound on `sum_j load_j^alpha` for any valid allocation on `m`
/// machines.
pub fn min_energy_frac(dem: u64, fail: f64, rel: f64, m: usize, alpha: f64) -> Result<f64> {
    let c = rel_coeffs(rel)?;
    let m = m as f64;
    let denom = (1.0 - fail) * m.powf(1.0 - 1.0 / alpha) + c.lprime.sqrt() * m.powf(0.5 - 1.0 / alpha);
    Ok((dem as f64 / denom).powf(alpha))
}

/// Dynamic energy of the Chernoff-valid fractional homogeneous allocation on
/// `m` machines, `m * (max_rep / m)^alpha`.
pub fn max_energy_frac(dem: u64, fail: f64, rel: f64, m: usize, alpha: f64) -> Result<f64> {
    let c = rel_coeffs(rel)?;
    checked_margin(fail, &c, m)?;
    let mf = m as f64;
    let denom = (1.0 - fail) * mf.powf(1.0 - 1.0 / alpha) - c.l.sqrt() * mf.powf(0.5 - 1.0 / alpha);
    Ok((dem as f64 / denom).powf(alpha))
}

/// Bound on `m^alpha * V'` for any valid allocation whose dynamic energy
/// does not exceed [`max_energy_frac`], where `V'` is [`dispersion`].
pub fn dispersion_bound(dem: u64, fail: f64, rel: f64, m: usize, alpha: f64) -> Result<f64> {
    let upper = max_rep(dem, fail, rel, m)?;
    let lower = min_rep(dem, fail, rel)?;
    Ok(upper.powf(alpha) - lower.powf(alpha))
}

/// `V' = sum_j (a_j^2)^(alpha/2) / m - (sum_j a_j^2 / m)^(alpha/2)`, the
/// spread of the squared loads measured at the `alpha/2`-th moment.
pub fn dispersion(loads: &[u64], alpha: f64) -> f64 {
    if loads.is_empty() {
        return 0.0;
    }
    let m = loads.len() as f64;
    let squares = loads.iter().map(|&a| (a as f64) * (a as f64));
    let moment = squares.clone().map(|s| s.powf(alpha / 2.0)).sum::<f64>() / m;
    let mean = squares.sum::<f64>() / m;
    moment - mean.powf(alpha / 2.0)
}

/// Limit of `max_rep / min_rep` as `m` grows: `(1 - fail + sqrt(lprime)) / (1 - fail)`.
pub fn rep_ratio_limit(fail: f64, rel: f64) -> Result<f64> {
    let c = rel_coeffs(rel)?;
    Ok((1.0 - fail + c.lprime.sqrt()) / (1.0 - fail))
}

/// Every bound at one operating point, as printed by the `bounds` command.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub min_rep: f64,
    pub min_energy: f64,
    /// `Err` when the Chernoff bound is unusable on this many machines.
    pub upper: Result<UpperBounds>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBounds {
    pub max_rep: f64,
    pub max_energy: f64,
    pub dispersion: f64,
    pub rep_ratio: f64,
    pub energy_ratio: f64,
}

pub fn report(dem: u64, fail: f64, rel: f64, m: usize, alpha: f64) -> Result<BoundsReport> {
    crate::model::check_fail(fail)?;
    if m == 0 {
        return Err(Error::invalid("machine count", "must be at least 1"));
    }
    let min_rep = min_rep(dem, fail, rel)?;
    let min_energy = min_energy_frac(dem, fail, rel, m, alpha)?;
    let upper = max_rep(dem, fail, rel, m).and_then(|max_rep| {
        let max_energy = max_energy_frac(dem, fail, rel, m, alpha)?;
        Ok(UpperBounds {
            max_rep,
            max_energy,
            dispersion: dispersion_bound(dem, fail, rel, m, alpha)?,
            rep_ratio: max_rep / min_rep,
            energy_ratio: max_energy / min_energy,
        })
    });
    Ok(BoundsReport {
        min_rep,
        min_energy,
        upper,
    })
}
