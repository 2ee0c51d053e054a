//! Numerical checks of the ordering properties the method relies on: PQD
//! ordering in theta, TP2/RR2 densities, monotone entropy, and the two
//! inequalities behind the entropy ordering.

use alloc::vec::Vec;
use core::fmt;

use crate::copula::BivariateCopula;
use crate::dependence::{cross_entropy_term, negative_entropy};
use crate::error::{Error, Result};
use crate::family::{CopulaFamily, OrderingDirection, Positivity};
use crate::quadrature::Resolution;

/// Default tolerance for the sign of the mixed partial of `log c`.
pub const TP2_TOLERANCE: f64 = 1e-6;
/// Finite-difference step for the mixed partial.
pub const TP2_STEP: f64 = 1e-4;
/// Grid points per axis for the TP2 check.
pub const TP2_GRID: usize = 50;
/// Slack for the entropy and proof-chain inequalities.
pub const ENTROPY_SLACK: f64 = 1e-3;
/// Slack for the PQD inequality.
pub const PQD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Pqd,
    Tp2,
    Monotonicity,
    ProofChain,
}

impl Check {
    pub fn token(self) -> &'static str {
        match self {
            Check::Pqd => "pqd",
            Check::Tp2 => "tp2",
            Check::Monotonicity => "monotonicity",
            Check::ProofChain => "proof_chain",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Point where the worst violation (or the tightest margin) occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub family: CopulaFamily,
    pub check: Check,
    pub theta_grid: Vec<f64>,
    pub passed: bool,
    /// Largest amount by which an inequality is broken; 0 if none is.
    pub worst_violation: f64,
    pub location: Option<Location>,
    /// Class the density was found to have (TP2 check only). `None` means
    /// neither class fits.
    pub detected: Option<Positivity>,
}

impl VerificationReport {
    fn new(family: CopulaFamily, check: Check, theta_grid: Vec<f64>) -> Self {
        VerificationReport {
            family,
            check,
            theta_grid,
            passed: true,
            worst_violation: 0.0,
            location: None,
            detected: None,
        }
    }

    fn record(&mut self, violation: f64, at: Location) {
        if violation > self.worst_violation || self.location.is_none() {
            self.worst_violation = self.worst_violation.max(violation);
            if violation >= self.worst_violation {
                self.location = Some(at);
            }
        }
    }

    fn finish(mut self, tolerance: f64) -> Self {
        self.passed = self.worst_violation <= tolerance;
        self
    }
}

fn interior_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// `C_theta1 <= C_theta2` on an interior grid (reversed for negatively
/// ordered families).
pub fn pqd_check(
    family: CopulaFamily,
    theta1: f64,
    theta2: f64,
    grid_n: usize,
) -> Result<VerificationReport> {
    if !(theta1 <= theta2) {
        return Err(Error::Config(alloc::format!(
            "pqd check needs theta1 <= theta2, got {theta1} and {theta2}"
        )));
    }
    let c1 = BivariateCopula::new(family, theta1)?;
    let c2 = BivariateCopula::new(family, theta2)?;
    let sign = match family.ordering_direction() {
        OrderingDirection::Positive => 1.0,
        OrderingDirection::Negative => -1.0,
    };
    let mut report = VerificationReport::new(family, Check::Pqd, alloc::vec![theta1, theta2]);
    let step = 1.0 / (grid_n as f64 + 1.0);
    for a in 1..=grid_n {
        for b in 1..=grid_n {
            let (u, v) = (a as f64 * step, b as f64 * step);
            let gap = sign * (c1.cdf_unchecked(u, v) - c2.cdf_unchecked(u, v));
            report.record(gap.max(0.0), Location { u, v, theta: theta2 });
        }
    }
    Ok(report.finish(PQD_TOLERANCE))
}

/// Centered finite-difference `d^2 log c / du dv` at `(u, v)`.
pub fn log_density_mixed_partial(c: &BivariateCopula, u: f64, v: f64, h: f64) -> Result<f64> {
    let l = |a: f64, b: f64| c.log_pdf(a, b);
    Ok((l(u + h, v + h)? - l(u + h, v - h)? - l(u - h, v + h)? + l(u - h, v - h)?) / (4.0 * h * h))
}

/// Mixed partials of `log c` on a `grid_n x grid_n` grid over
/// `[0.02, 0.98]^2`, row-major in `u`.
pub fn mixed_partial_grid(c: &BivariateCopula, grid_n: usize, h: f64) -> Result<Vec<(f64, f64, f64)>> {
    let g = interior_grid(grid_n, 0.02, 0.98);
    let mut out = Vec::with_capacity(grid_n * grid_n);
    for &u in &g {
        for &v in &g {
            let d = log_density_mixed_partial(c, u, v, h).map_err(|e| {
                Error::Numerical(alloc::format!(
                    "{} (theta = {}): density failed at ({u}, {v}): {e}",
                    c.family(),
                    c.theta()
                ))
            })?;
            if !d.is_finite() {
                return Err(Error::Numerical(alloc::format!(
                    "{} (theta = {}): mixed partial is {d} at ({u}, {v})",
                    c.family(),
                    c.theta()
                )));
            }
            out.push((u, v, d));
        }
    }
    Ok(out)
}

/// Classifies the density at `theta` as TP2 (log-supermodular) and/or RR2
/// and compares with the family's documented class.
pub fn tp2_check(family: CopulaFamily, theta: f64, grid_n: usize) -> Result<VerificationReport> {
    let c = BivariateCopula::new(family, theta)?;
    let partials = mixed_partial_grid(&c, grid_n, TP2_STEP)?;
    let expected = family.positivity_at(theta);
    let (mut min, mut max) = ((0.0, 0.5, 0.5), (0.0, 0.5, 0.5));
    for &(u, v, d) in &partials {
        if d < min.0 {
            min = (d, u, v);
        }
        if d > max.0 {
            max = (d, u, v);
        }
    }
    let is_tp2 = min.0 >= -TP2_TOLERANCE;
    let is_rr2 = max.0 <= TP2_TOLERANCE;
    let mut report = VerificationReport::new(family, Check::Tp2, alloc::vec![theta]);
    report.detected = match (is_tp2, is_rr2) {
        (true, true) => Some(expected),
        (true, false) => Some(Positivity::Tp2),
        (false, true) => Some(Positivity::Rr2),
        (false, false) => None,
    };
    let (violation, u, v) = match expected {
        Positivity::Tp2 => (-min.0, min.1, min.2),
        Positivity::Rr2 => (max.0, max.1, max.2),
    };
    report.worst_violation = violation.max(0.0);
    report.location = Some(Location { u, v, theta });
    Ok(report.finish(TP2_TOLERANCE))
}

/// +1 if negative entropy should grow with theta at `theta`, -1 if it should
/// shrink.
pub fn entropy_direction(family: CopulaFamily, theta: f64) -> i8 {
    let ordering = match family.ordering_direction() {
        OrderingDirection::Positive => 1,
        OrderingDirection::Negative => -1,
    };
    let class = match family.positivity_at(theta) {
        Positivity::Tp2 => 1,
        Positivity::Rr2 => -1,
    };
    ordering * class
}

/// Negative entropy along `theta_grid` is monotone in the direction implied
/// by the ordering and density class, within [`ENTROPY_SLACK`]. Grids that
/// cross a change of class are checked piecewise.
pub fn monotonicity_check(
    family: CopulaFamily,
    theta_grid: &[f64],
    res: Resolution,
) -> Result<VerificationReport> {
    if theta_grid.len() < 10 || theta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(alloc::format!(
            "monotonicity check needs at least 10 strictly increasing theta values, got {}",
            theta_grid.len()
        )));
    }
    let values = theta_grid
        .iter()
        .map(|&t| negative_entropy(&BivariateCopula::new(family, t)?, res))
        .collect::<Result<Vec<f64>>>()?;
    let mut report = VerificationReport::new(family, Check::Monotonicity, theta_grid.to_vec());
    for k in 0..theta_grid.len() - 1 {
        let (t1, t2) = (theta_grid[k], theta_grid[k + 1]);
        let d1 = entropy_direction(family, t1);
        let d2 = entropy_direction(family, t2);
        // A pair straddling the class boundary belongs to neither branch,
        // unless one end sits exactly on the boundary.
        let dir = if d1 == d2 || t2 == family.independence_theta() {
            d1
        } else if t1 == family.independence_theta() {
            d2
        } else {
            continue;
        };
        let drop = f64::from(dir) * (values[k] - values[k + 1]);
        report.record(drop.max(0.0), Location { u: f64::NAN, v: f64::NAN, theta: t2 });
    }
    Ok(report.finish(ENTROPY_SLACK))
}

/// The three integrals of the entropy-ordering argument for `theta1 <
/// theta2`: `(int c1 log c1, int c2 log c1, int c2 log c2)` and the
/// cross term `int c1 log c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofChain {
    pub self1: f64,
    pub cross21: f64,
    pub cross12: f64,
    pub self2: f64,
}

pub fn proof_chain_integrals(
    family: CopulaFamily,
    theta1: f64,
    theta2: f64,
    res: Resolution,
) -> Result<ProofChain> {
    let c1 = BivariateCopula::new(family, theta1)?;
    let c2 = BivariateCopula::new(family, theta2)?;
    Ok(ProofChain {
        self1: negative_entropy(&c1, res)?,
        cross21: cross_entropy_term(&c2, &c1, res)?,
        cross12: cross_entropy_term(&c1, &c2, res)?,
        self2: negative_entropy(&c2, res)?,
    })
}

/// `int c1 log c1 <= int c2 log c1 <= int c2 log c2` within
/// [`ENTROPY_SLACK`], with the roles of the two densities swapped where
/// entropy decreases in theta.
pub fn proof_chain_check(
    family: CopulaFamily,
    theta1: f64,
    theta2: f64,
    res: Resolution,
) -> Result<VerificationReport> {
    if !(theta1 <= theta2) {
        return Err(Error::Config(alloc::format!(
            "proof chain check needs theta1 <= theta2, got {theta1} and {theta2}"
        )));
    }
    let p = proof_chain_integrals(family, theta1, theta2, res)?;
    let dir = entropy_direction(family, theta2);
    let (first, second) = if dir > 0 {
        (p.self1 - p.cross21, p.cross21 - p.self2)
    } else {
        (p.self2 - p.cross12, p.cross12 - p.self1)
    };
    let mut report = VerificationReport::new(family, Check::ProofChain, alloc::vec![theta1, theta2]);
    let at = Location { u: f64::NAN, v: f64::NAN, theta: theta2 };
    report.record(first.max(0.0), at);
    report.record(second.max(0.0), at);
    Ok(report.finish(ENTROPY_SLACK))
}

/// Closed-form `KL(c_r2 || c_r1)` for Gaussian copulas.
pub fn gaussian_copula_kl(r2: f64, r1: f64) -> f64 {
    0.5 * ((2.0 - 2.0 * r1 * r2) / (1.0 - r1 * r1) - 2.0
        + libm::log((1.0 - r1 * r1) / (1.0 - r2 * r2)))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    interior_grid(n, lo, hi)
}

/// Twenty parameter values per family covering the bulk of its support.
pub fn default_theta_grid(family: CopulaFamily) -> Vec<f64> {
    use CopulaFamily::*;
    match family {
        Gaussian => linspace(-0.9, 0.9, 20),
        Fgm | Amh => linspace(-1.0, 1.0, 20),
        Gumbel | Joe => linspace(1.0, 5.0, 20),
        Frank => linspace(0.25, 15.0, 20),
        Clayton => (1..=20).map(|k| 0.25 * k as f64).collect(),
        GumbelBarnett => linspace(0.05, 1.0, 20),
    }
}

/// Every other point of the default grid: ten values per family.
pub fn default_tp2_thetas(family: CopulaFamily) -> Vec<f64> {
    default_theta_grid(family).into_iter().step_by(2).collect()
}

/// Five consecutive pairs from six points spread over the TP2 side of the
/// default grid (the whole grid for families without a sign split).
pub fn default_chain_pairs(family: CopulaFamily) -> Vec<(f64, f64)> {
    let grid: Vec<f64> = default_theta_grid(family)
        .into_iter()
        .filter(|&t| family.positivity_at(t) == family.positivity_at(*default_theta_grid(family).last().unwrap_or(&t)))
        .collect();
    let last = grid.len() - 1;
    let pick: Vec<f64> = (0..6).map(|k| grid[k * last / 5]).collect();
    pick.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Twenty `(theta1, theta2)` pairs, ordered, for the PQD check.
pub fn default_pqd_pairs(family: CopulaFamily) -> Vec<(f64, f64)> {
    let g = default_theta_grid(family);
    (0..20).map(|k| (g[k], g[(k * 7 + 3) % 20])).map(|(a, b)| (a.min(b), a.max(b))).collect()
}
