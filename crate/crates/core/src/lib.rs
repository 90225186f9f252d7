//! Energy-minimal placement of service replicas on failure-prone machines.
//!
//! A service needs `dem` live instances at the end of a period, with
//! probability at least `1 - rel`. Machines fail independently with a
//! common probability and consume `estat + ecoeff * load^alpha` energy when
//! switched on (DVFS lets each machine run exactly at its load). This crate
//! provides:
//!
//! * [`bounds`] for Hoeffding lower bounds and Chernoff homogeneous upper bounds
//!   on replica counts and dynamic energy,
//! * [`energy`] for the energy-versus-machine-count curves and their minimizers,
//! * [`reliability`] for exact (binomial tail, dynamic programming, brute force)
//!   and Monte Carlo evaluation of an allocation's success probability,
//! * [`planner`] for integral allocation heuristics (`theo.homo`, `best.homo`,
//!   `best.step`) and machine-count selection,
//! * [`cli`] for the command-line front end and the machine-count sweep.

pub mod bounds;
pub mod cli;
pub mod energy;
mod error;
pub mod model;
pub mod planner;
pub mod reliability;
mod sum;

pub use error::{Error, Result};
pub use model::{energy_of, Allocation, Platform, PlanResult, Policy, RelCoeffs, Sla};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
