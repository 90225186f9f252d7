//! Energy as a function of the number of switched-on machines.
//!
//! When machines may be switched off, the static term `k * estat` competes
//! with the dynamic term, which shrinks as load spreads over more machines.
//! Two convex curves bracket the optimum: the Hoeffding lower bound `E_lb(k)`
//! and the Chernoff homogeneous upper bound `E_ub(k)`. Both are minimized by
//! golden-section search, which their convexity makes exact.

use crate::model::{Platform, Policy, RelCoeffs, Sla};
use crate::reliability::feasible;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// `E_lb(k) = k*estat + ecoeff*k*(dem / ((1-fail)*k + sqrt(lprime*k)))^alpha`
    LowerBound,
    /// `E_ub(k) = k*estat + ecoeff*k^(1-alpha)*(dem / (1-fail-sqrt(l/k)))^alpha`
    HomoUpper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCurveParams {
    pub dem: u64,
    pub fail: f64,
    pub rel: f64,
    pub coeffs: RelCoeffs,
    pub alpha: f64,
    pub estat: f64,
    pub ecoeff: f64,
}

impl EnergyCurveParams {
    pub fn new(platform: &Platform, sla: &Sla) -> Self {
        EnergyCurveParams {
            dem: sla.dem(),
            fail: platform.fail(),
            rel: sla.rel(),
            coeffs: sla.coeffs(),
            alpha: platform.alpha(),
            estat: platform.estat(),
            ecoeff: platform.ecoeff(),
        }
    }

    /// `l / (1 - fail)^2`: `E_ub` is finite only strictly above this.
    pub fn pole(&self) -> f64 {
        self.coeffs.l / ((1.0 - self.fail) * (1.0 - self.fail))
    }
}

/// Value of the chosen curve at a (real) machine count `k`. `HomoUpper`
/// yields `f64::INFINITY` where the Chernoff margin is not positive.
pub fn energy_curve(kind: CurveKind, k: f64, p: &EnergyCurveParams) -> Result<f64> {
    if k.is_nan() || k <= 0.0 {
        return Err(Error::invalid("machine count", format!("{k} is not positive")));
    }
    let dem = p.dem as f64;
    let dynamic = match kind {
        CurveKind::LowerBound => {
            let denom = (1.0 - p.fail) * k + (p.coeffs.lprime * k).sqrt();
            k * (dem / denom).powf(p.alpha)
        }
        CurveKind::HomoUpper => {
            let margin = (1.0 - p.fail) - (p.coeffs.l / k).sqrt();
            if margin <= 0.0 {
                return Ok(f64::INFINITY);
            }
            (dem / margin).powf(p.alpha) / k.powf(p.alpha - 1.0)
        }
    };
    Ok(k * p.estat + p.ecoeff * dynamic)
}

const ARGMIN_REL_TOL: f64 = 1e-9;

/// Minimizer of `f` on `[lo, hi]` for unimodal `f`, to relative tolerance
/// `ARGMIN_REL_TOL` in x. An endpoint is returned when it is at least as good
/// as the interior estimate.
fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > ARGMIN_REL_TOL * a.abs().max(b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if f(hi) <= fx {
        hi
    } else if f(lo) <= fx {
        lo
    } else {
        x
    }
}

/// Minimizer of the curve over `[lo, hi]`. When the unconstrained minimizer
/// lies outside the bracket the nearer endpoint is returned.
pub fn argmin_unimodal(kind: CurveKind, p: &EnergyCurveParams, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidBracket { lo, hi });
    }
    if kind == CurveKind::HomoUpper && lo <= p.pole() {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let curve = |k: f64| energy_curve(kind, k, p).expect("bracket is positive");
    Ok(golden_section(curve, lo, hi))
}

/// Continuous minimizer of the curve clamped to `[1, m]`, or `None` when
/// `E_ub` is infinite on the whole range.
pub fn clamped_minimizer(kind: CurveKind, p: &EnergyCurveParams, m: usize) -> Result<Option<f64>> {
    let hi = m as f64;
    let lo = match kind {
        CurveKind::LowerBound => 1.0,
        CurveKind::HomoUpper => {
            let pole = p.pole();
            if pole >= 1.0 {
                // smallest representable step above the pole
                pole * (1.0 + 4.0 * f64::EPSILON)
            } else {
                1.0
            }
        }
    };
    if lo > hi {
        return Ok(None);
    }
    if lo == hi {
        return Ok(Some(lo));
    }
    argmin_unimodal(kind, p, lo, hi).map(Some)
}

/// Machine count used by `policy` when machines may be switched off.
///
/// * `LowerBound`: the better of floor and ceiling of the clamped `E_lb`
///   minimizer.
/// * `TheoHomo`: exhaustive scan over `1..=m` of the integral Chernoff
///   homogeneous energy.
/// * `BestHomo`, `BestStep`: the mean of the clamped `E_lb` and `E_ub`
///   minimizers, rounded half up; `m` when `E_ub` is infinite up to `m`.
///
/// Ties go to the smaller count.
pub fn best_k(policy: Policy, p: &EnergyCurveParams, m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::invalid("machine count", "must be at least 1"));
    }
    if !feasible(m as u64, p.fail, p.rel) {
        return Err(Error::Infeasible(format!(
            "even with every machine on, all {m} machines fail with probability above the target"
        )));
    }
    let lower = clamped_minimizer(CurveKind::LowerBound, p, m)?.expect("[1, m] is never empty");
    match policy {
        Policy::LowerBound => {
            let floor = lower.floor().max(1.0);
            let ceil = lower.ceil().min(m as f64);
            let e_floor = energy_curve(CurveKind::LowerBound, floor, p)?;
            let e_ceil = energy_curve(CurveKind::LowerBound, ceil, p)?;
            Ok(if e_ceil < e_floor { ceil } else { floor } as usize)
        }
        Policy::TheoHomo => {
            let mut best: Option<(f64, usize)> = None;
            for k in 1..=m {
                let Ok(energy) = crate::planner::theo_homo_energy(p, k) else {
                    continue;
                };
                if best.is_none_or(|(e, _)| energy < e) {
                    best = Some((energy, k));
                }
            }
            best.map(|(_, k)| k).ok_or(Error::ChernoffInfeasible {
                machines: m,
                min_machines: crate::bounds::chernoff_min_machines(p.fail, &p.coeffs),
            })
        }
        Policy::BestHomo | Policy::BestStep => {
            let Some(upper) = clamped_minimizer(CurveKind::HomoUpper, p, m)? else {
                return Ok(m);
            };
            let mean = 0.5 * (lower + upper);
            Ok(((mean + 0.5).floor() as usize).clamp(1, m))
        }
    }
}
