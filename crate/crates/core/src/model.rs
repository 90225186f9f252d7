//! Domain types shared by every module, and the energy accounting of an
//! allocation.

use std::fmt;

use crate::{Error, Result};

/// A set of `m` identical machines.
///
/// Each machine fails independently with probability `fail` during the
/// period. A switched-on machine running `a` instances consumes
/// `estat + ecoeff * a^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Platform {
    m: usize,
    fail: f64,
    estat: f64,
    ecoeff: f64,
    alpha: f64,
}

impl Platform {
    pub fn new(m: usize, fail: f64, estat: f64, ecoeff: f64, alpha: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("machine count", "must be at least 1"));
        }
        check_fail(fail)?;
        if !(estat >= 0.0 && estat.is_finite()) {
            return Err(Error::invalid("estat", format!("{estat} is not a finite nonnegative value")));
        }
        if !(ecoeff > 0.0 && ecoeff.is_finite()) {
            return Err(Error::invalid("ecoeff", format!("{ecoeff} is not a finite positive value")));
        }
        if !(alpha >= 2.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("{alpha} must be at least 2")));
        }
        Ok(Platform {
            m,
            fail,
            estat,
            ecoeff,
            alpha,
        })
    }

    /// Platform with no static energy and unit dynamic coefficient.
    pub fn dynamic_only(m: usize, fail: f64, alpha: f64) -> Result<Self> {
        Platform::new(m, fail, 0.0, 1.0, alpha)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn fail(&self) -> f64 {
        self.fail
    }

    pub fn estat(&self) -> f64 {
        self.estat
    }

    pub fn ecoeff(&self) -> f64 {
        self.ecoeff
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The same platform restricted to (or extended to) `m` machines.
    pub fn with_machines(&self, m: usize) -> Result<Self> {
        Platform::new(m, self.fail, self.estat, self.ecoeff, self.alpha)
    }
}

pub(crate) fn check_fail(fail: f64) -> Result<()> {
    if (0.0..1.0).contains(&fail) {
        Ok(())
    } else {
        Err(Error::invalid("failure probability", format!("{fail} is outside [0, 1)")))
    }
}

/// Service-level agreement: at least `dem` instances alive at the end of the
/// period, except with probability at most `rel`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sla {
    dem: u64,
    rel: f64,
}

impl Sla {
    pub fn new(dem: u64, rel: f64) -> Result<Self> {
        if !(rel > 0.0 && rel < 1.0) {
            return Err(Error::invalid("reliability target", format!("{rel} is outside (0, 1)")));
        }
        Ok(Sla { dem, rel })
    }

    pub fn dem(&self) -> u64 {
        self.dem
    }

    pub fn rel(&self) -> f64 {
        self.rel
    }

    pub fn coeffs(&self) -> RelCoeffs {
        crate::bounds::rel_coeffs(self.rel).expect("rel validated on construction")
    }
}

/// Log-reliability constants: `l = -ln(rel) / 2` drives the Chernoff upper
/// bounds, `lprime = -ln(1 - rel) / 2` the Hoeffding lower bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelCoeffs {
    pub(crate) l: f64,
    pub(crate) lprime: f64,
}

impl RelCoeffs {
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn lprime(&self) -> f64 {
        self.lprime
    }
}

/// Per-machine instance counts. A machine with load zero is off.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation(Vec<u64>);

impl Allocation {
    pub fn new(loads: Vec<u64>) -> Self {
        Allocation(loads)
    }

    /// `count` machines at `load` each, padded with idle machines up to `m`.
    pub fn uniform(count: usize, load: u64, m: usize) -> Self {
        Allocation::steps(&[(count, load)], m)
    }

    /// Concatenated `(count, load)` groups, padded with zeros to length `m`.
    pub fn steps(groups: &[(usize, u64)], m: usize) -> Self {
        let mut loads = Vec::with_capacity(m);
        for &(count, load) in groups {
            loads.extend(std::iter::repeat_n(load, count));
        }
        debug_assert!(loads.len() <= m);
        loads.resize(m.max(loads.len()), 0);
        Allocation(loads)
    }

    pub fn loads(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Number of switched-on machines.
    pub fn on_count(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    /// `sum_j load_j^alpha`.
    pub fn power_sum(&self, alpha: f64) -> f64 {
        self.0.iter().map(|&a| (a as f64).powf(alpha)).sum()
    }

    /// Run-length groups in machine order, e.g. `[(6, 7), (4, 6)]`.
    pub fn groups(&self) -> Vec<(usize, u64)> {
        let mut groups: Vec<(usize, u64)> = Vec::new();
        for &a in &self.0 {
            match groups.last_mut() {
                Some((count, load)) if *load == a => *count += 1,
                _ => groups.push((1, a)),
            }
        }
        groups
    }
}

/// Formats as `count×load` groups separated by spaces.
impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let groups = self.groups();
        if groups.is_empty() {
            return f.write_str("(empty)");
        }
        for (i, (count, load)) in groups.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{count}×{load}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// The fractional Hoeffding lower bound; a value, not a plan.
    LowerBound,
    /// Chernoff-sized homogeneous allocation, rounded up.
    TheoHomo,
    /// Smallest valid homogeneous capacity, from the exact binomial quantile.
    BestHomo,
    /// Two-level allocation with capacities `A` and `A - 1`.
    BestStep,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::LowerBound,
        Policy::TheoHomo,
        Policy::BestHomo,
        Policy::BestStep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::LowerBound => "lower-bound",
            Policy::TheoHomo => "theo-homo",
            Policy::BestHomo => "best-homo",
            Policy::BestStep => "best-step",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of a planning policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub policy: Policy,
    /// Machines paying static energy.
    pub k: usize,
    /// `None` for [`Policy::LowerBound`].
    pub allocation: Option<Allocation>,
    /// Exact probability that at least `dem` instances survive; `None` for
    /// [`Policy::LowerBound`].
    pub success_prob: Option<f64>,
    /// Exact probability of an SLA violation, computed directly rather than
    /// as `1 - success_prob` so that small values keep their precision.
    pub failure_prob: Option<f64>,
    pub energy_static: f64,
    pub energy_dynamic: f64,
    pub energy_total: f64,
}

impl PlanResult {
    pub(crate) fn new(
        policy: Policy,
        k: usize,
        allocation: Option<Allocation>,
        failure_prob: Option<f64>,
        energy_static: f64,
        energy_dynamic: f64,
    ) -> Self {
        PlanResult {
            policy,
            k,
            allocation,
            success_prob: failure_prob.map(|f| 1.0 - f),
            failure_prob,
            energy_static,
            energy_dynamic,
            energy_total: energy_static + energy_dynamic,
        }
    }
}

/// Total energy of `alloc` on `platform`.
///
/// Static energy is paid by every machine with a positive load, or by
/// `force_on` machines when given (the no-shutdown setting passes `m`).
pub fn energy_of(alloc: &Allocation, platform: &Platform, force_on: Option<usize>) -> Result<f64> {
    let (stat, dynamic) = energy_parts(alloc, platform, force_on)?;
    Ok(stat + dynamic)
}

/// `(static, dynamic)` split of [`energy_of`].
pub fn energy_parts(
    alloc: &Allocation,
    platform: &Platform,
    force_on: Option<usize>,
) -> Result<(f64, f64)> {
    if alloc.len() != platform.m() {
        return Err(Error::ContractViolation(format!(
            "allocation has {} entries for {} machines",
            alloc.len(),
            platform.m()
        )));
    }
    let used = alloc.on_count();
    let on = match force_on {
        Some(n) if n < used => {
            return Err(Error::ContractViolation(format!(
                "force_on = {n} but {used} machines carry load"
            )))
        }
        Some(n) => n,
        None => used,
    };
    Ok((
        on as f64 * platform.estat(),
        platform.ecoeff() * alloc.power_sum(platform.alpha()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn platform(m: usize, estat: f64, alpha: f64) -> Platform {
        Platform::new(m, 0.1, estat, 1.0, alpha).unwrap()
    }

    #[test]
    fn empty_allocation_costs_nothing() {
        let alloc = Allocation::new(vec![0, 0, 0]);
        assert_eq!(energy_of(&alloc, &platform(3, 50.0, 2.0), None).unwrap(), 0.0);
    }

    #[test]
    fn motivating_optimum_dynamic_energy() {
        let alloc = Allocation::new(vec![10, 10, 5, 5, 5, 5, 5, 5, 5, 5]);
        assert_eq!(energy_of(&alloc, &platform(10, 0.0, 2.0), None).unwrap(), 400.0);
    }

    #[test]
    fn cubic_with_static() {
        let alloc = Allocation::uniform(10, 7, 10);
        assert_eq!(energy_of(&alloc, &platform(10, 50.0, 3.0), None).unwrap(), 3930.0);
    }

    #[test]
    fn force_on_pays_for_idle_machines() {
        let alloc = Allocation::uniform(2, 3, 5);
        let p = platform(5, 10.0, 2.0);
        assert_eq!(energy_of(&alloc, &p, None).unwrap(), 20.0 + 18.0);
        assert_eq!(energy_of(&alloc, &p, Some(5)).unwrap(), 50.0 + 18.0);
    }

    #[test]
    fn force_on_below_used_is_rejected() {
        let alloc = Allocation::uniform(3, 1, 3);
        let err = energy_of(&alloc, &platform(3, 1.0, 2.0), Some(2)).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let alloc = Allocation::new(vec![1, 2]);
        assert!(energy_of(&alloc, &platform(3, 0.0, 2.0), None).is_err());
    }

    #[test]
    fn platform_invariants() {
        assert!(Platform::new(0, 0.1, 0.0, 1.0, 2.0).is_err());
        assert!(Platform::new(1, 1.0, 0.0, 1.0, 2.0).is_err());
        assert!(Platform::new(1, -0.1, 0.0, 1.0, 2.0).is_err());
        assert!(Platform::new(1, 0.1, -1.0, 1.0, 2.0).is_err());
        assert!(Platform::new(1, 0.1, 0.0, 0.0, 2.0).is_err());
        assert!(Platform::new(1, 0.1, 0.0, 1.0, 1.5).is_err());
        assert!(Platform::new(1, 0.0, 0.0, 1.0, 2.0).is_ok());
    }

    #[test]
    fn sla_invariants() {
        assert!(Sla::new(10, 0.0).is_err());
        assert!(Sla::new(10, 1.0).is_err());
        assert!(Sla::new(0, 0.5).is_ok());
    }

    #[test]
    fn display_groups() {
        let alloc = Allocation::steps(&[(6, 7), (4, 6)], 12);
        assert_eq!(alloc.to_string(), "6×7 4×6 2×0");
        assert_eq!(alloc.total(), 66);
        assert_eq!(alloc.on_count(), 10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn permutation_invariant(mut loads in prop::collection::vec(0u64..30, 1..12), estat in 0.0f64..100.0, alpha in 2.0f64..4.0) {
                let p = Platform::new(loads.len(), 0.1, estat, 1.5, alpha).unwrap();
                let before = energy_of(&Allocation::new(loads.clone()), &p, None).unwrap();
                loads.reverse();
                loads.rotate_left(1);
                let after = energy_of(&Allocation::new(loads), &p, None).unwrap();
                prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
            }

            #[test]
            fn monotone_in_loads_and_parameters(loads in prop::collection::vec(1u64..30, 1..12), idx in 0usize..12, estat in 0.0f64..100.0, alpha in 2.0f64..4.0) {
                let p = Platform::new(loads.len(), 0.1, estat, 1.0, alpha).unwrap();
                let alloc = Allocation::new(loads.clone());
                let base = energy_of(&alloc, &p, None).unwrap();
                let mut bumped = loads.clone();
                let i = idx % loads.len();
                bumped[i] += 1;
                prop_assert!(energy_of(&Allocation::new(bumped), &p, None).unwrap() >= base);
                let richer = Platform::new(loads.len(), 0.1, estat + 1.0, 1.1, alpha + 0.5).unwrap();
                prop_assert!(energy_of(&alloc, &richer, None).unwrap() >= base);
            }
        }
    }
}
