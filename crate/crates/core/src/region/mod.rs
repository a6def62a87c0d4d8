//! Maximal satisfiable region: the closed form for symmetric ON-OFF
//! networks, the general linear-programming feasibility test and an
//! independent support-function oracle.

mod duality;
mod lp;
mod simplex;

pub use duality::{duality_oracle, DualityReport};
pub use lp::{lp_feasibility, GeneralRegionInstance, LpReport, WitnessEntry, MAX_JOINT_SUPPORT, MAX_LINKS};
pub use simplex::{maximize, SimplexError, SimplexSolution};

use crate::error::{Error, Result};

/// Tolerance around equality for symmetric membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Absolute tolerance of the boundary bisection.
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

impl Membership {
    pub fn name(self) -> &'static str {
        match self {
            Membership::Inside => "inside",
            Membership::Boundary => "boundary",
            Membership::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricRegionQuery {
    pub n: usize,
    pub rho: f64,
    pub p: f64,
    pub lambda: f64,
}

fn check_symmetric(n: usize, rho: f64, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::param("rho", format!("{rho} outside [0, 1)")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("{p} outside (0, 1]")));
    }
    Ok(())
}

/// `h(lambda) = N (1 - rho) lambda - (1 - (1 - p lambda)^N)`; the symmetric
/// region is `{lambda : h(lambda) < 0}`.
pub fn symmetric_gap(n: usize, rho: f64, p: f64, lambda: f64) -> f64 {
    let nf = n as f64;
    let busy = -(nf * (-p * lambda).ln_1p()).exp_m1();
    nf * (1.0 - rho) * lambda - busy
}

/// Per-link service the symmetric network can sustain at rate `lambda`:
/// `(1 - (1 - p lambda)^N) / N`.
pub fn symmetric_service_capacity(n: usize, p: f64, lambda: f64) -> f64 {
    let nf = n as f64;
    -(nf * (-p * lambda).ln_1p()).exp_m1() / nf
}

/// Supremum of the symmetric region in `(0, 1]`, or 0 when it is empty.
pub fn symmetric_boundary(n: usize, rho: f64, p: f64) -> Result<f64> {
    check_symmetric(n, rho, p)?;
    let h = |l: f64| symmetric_gap(n, rho, p, l);
    // h is convex with h(0) = 0, so the region is empty iff h'(0) >= 0.
    if (1.0 - rho) >= p {
        return Ok(0.0);
    }
    if h(1.0) < 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BOUNDARY_TOL / 16.0 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn membership_symmetric(q: &SymmetricRegionQuery) -> Result<Membership> {
    check_symmetric(q.n, q.rho, q.p)?;
    if !(0.0..=1.0).contains(&q.lambda) {
        return Err(Error::param("lambda", format!("{} outside [0, 1]", q.lambda)));
    }
    let h = symmetric_gap(q.n, q.rho, q.p, q.lambda);
    Ok(if h < -MEMBERSHIP_TOL {
        Membership::Inside
    } else if h <= MEMBERSHIP_TOL {
        Membership::Boundary
    } else {
        Membership::Outside
    })
}
