//! Dependence functionals of a copula: Spearman's rho, its inverse, and
//! entropy-type integrals of the density.

use core::f64::consts::PI;
use core::sync::atomic::{AtomicU64, Ordering};

use libm::{asin, exp, sin};

use crate::copula::BivariateCopula;
use crate::error::{Error, Result};
use crate::family::CopulaFamily;
use crate::quadrature::{AxisRule, Resolution, DEFAULT_NODES};

/// Largest |rho| represented on characteristic curves and used to cap
/// unbounded parameter supports.
pub const RHO_CAP: f64 = 0.99;

/// Interval of Spearman's rho values a family can reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRange {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl RhoRange {
    pub fn contains(&self, rho: f64) -> bool {
        let above = if self.lo_open { rho > self.lo } else { rho >= self.lo };
        let below = if self.hi_open { rho < self.hi } else { rho <= self.hi };
        above && below
    }
}

/// Gaussian copula: `rho_s = (6 / pi) asin(theta / 2)`.
pub fn gaussian_rho(theta: f64) -> f64 {
    6.0 / PI * asin(0.5 * theta)
}

pub fn gaussian_theta(rho: f64) -> f64 {
    2.0 * sin(PI * rho / 6.0)
}

/// `12 * int C(u, v) du dv - 3` by tensor Gauss-Legendre with `nodes` points
/// per axis.
pub fn rho_by_quadrature(copula: &BivariateCopula, nodes: usize) -> f64 {
    RhoQuadrature::new(nodes).rho(copula)
}

struct RhoQuadrature {
    rule: AxisRule,
}

impl RhoQuadrature {
    fn new(nodes: usize) -> Self {
        RhoQuadrature {
            rule: AxisRule::uniform(nodes),
        }
    }

    fn rho(&self, c: &BivariateCopula) -> f64 {
        // All supported families are exchangeable.
        12.0 * self.rule.integrate_square_symmetric(|u, v| c.cdf_unchecked(u, v)) - 3.0
    }

    fn rho_at(&self, family: CopulaFamily, theta: f64) -> Result<f64> {
        if family == CopulaFamily::Gaussian {
            return Ok(gaussian_rho(theta));
        }
        Ok(self.rho(&BivariateCopula::new(family, theta)?))
    }
}

/// Spearman's rho of `C_theta`.
///
/// Closed form for the Gaussian family; every other family goes through the
/// `12 int C - 3` identity on a 200 x 200 Gauss-Legendre grid.
pub fn rho_from_theta(family: CopulaFamily, theta: f64) -> Result<f64> {
    let c = BivariateCopula::new(family, theta)?;
    let rho = if family == CopulaFamily::Gaussian {
        gaussian_rho(theta)
    } else if theta == family.independence_theta() {
        // C = uv; quadrature would leave roundoff of either sign
        0.0
    } else {
        rho_by_quadrature(&c, DEFAULT_NODES)
    };
    if !rho.is_finite() {
        return Err(Error::Numerical(alloc::format!(
            "{family}: rho quadrature at theta = {theta} returned {rho}"
        )));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

const UNSET: u64 = u64::MAX;
static RHO_ENDPOINTS: [AtomicU64; 16] = [const { AtomicU64::new(UNSET) }; 16];
static THETA_CAPS: [AtomicU64; 16] = [const { AtomicU64::new(UNSET) }; 16];

fn family_index(f: CopulaFamily) -> usize {
    CopulaFamily::ALL.iter().position(|&g| g == f).unwrap_or(0)
}

/// Memoizes an idempotent computation in a lock-free slot.
fn cached(slot: &AtomicU64, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
    let bits = slot.load(Ordering::Relaxed);
    if bits != UNSET {
        return Ok(f64::from_bits(bits));
    }
    let value = compute()?;
    slot.store(value.to_bits(), Ordering::Relaxed);
    Ok(value)
}

fn endpoint_rho(family: CopulaFamily, which: usize, theta: f64) -> f64 {
    let slot = &RHO_ENDPOINTS[2 * family_index(family) + which];
    cached(slot, || rho_from_theta(family, theta)).unwrap_or(0.0)
}

/// Attainable range of Spearman's rho, induced by the parameter support.
pub fn attainable_rho(family: CopulaFamily) -> RhoRange {
    let half_open_unit = RhoRange {
        lo: 0.0,
        hi: 1.0,
        lo_open: false,
        hi_open: true,
    };
    match family {
        CopulaFamily::Gaussian => RhoRange {
            lo: -1.0,
            hi: 1.0,
            lo_open: true,
            hi_open: true,
        },
        CopulaFamily::Fgm | CopulaFamily::Amh => RhoRange {
            lo: endpoint_rho(family, 0, -1.0),
            hi: endpoint_rho(family, 1, 1.0),
            lo_open: false,
            hi_open: false,
        },
        CopulaFamily::Gumbel | CopulaFamily::Joe | CopulaFamily::Frank => half_open_unit,
        CopulaFamily::Clayton => RhoRange {
            lo_open: true,
            ..half_open_unit
        },
        CopulaFamily::GumbelBarnett => RhoRange {
            lo: endpoint_rho(family, 0, 1.0),
            hi: 0.0,
            lo_open: false,
            hi_open: true,
        },
    }
}

/// Parameter value with the given Spearman's rho.
///
/// Closed form for the Gaussian family. Otherwise the rho map is monotone in
/// theta, so the root is bracketed and refined by Illinois-modified regula
/// falsi, which falls back to bisection when progress stalls.
pub fn theta_from_rho(family: CopulaFamily, rho: f64) -> Result<f64> {
    let range = attainable_rho(family);
    if !rho.is_finite() || !range.contains(rho) {
        return Err(Error::RhoOutOfRange {
            family,
            rho,
            lo: range.lo,
            hi: range.hi,
        });
    }
    if family == CopulaFamily::Gaussian {
        return Ok(gaussian_theta(rho));
    }
    let support = family.support();
    let t0 = family.independence_theta();
    if rho == 0.0 && support.contains(t0) {
        return Ok(t0);
    }
    let q = RhoQuadrature::new(DEFAULT_NODES);

    // Lower end: either a closed support bound or the independence limit.
    let a = support.lo;
    let fa = if support.lo_open {
        0.0 - rho
    } else {
        q.rho_at(family, a)? - rho
    };
    if fa == 0.0 {
        return Ok(a);
    }
    let (b, fb) = if support.hi.is_finite() {
        let fb = q.rho_at(family, support.hi)? - rho;
        (support.hi, fb)
    } else {
        // Expand until the target is bracketed.
        let mut step = 1.0;
        loop {
            let b = a + step;
            let fb = q.rho_at(family, b)? - rho;
            if fb.signum() != fa.signum() || fb == 0.0 {
                break (b, fb);
            }
            step *= 2.0;
            if step > 1e7 {
                return Err(Error::Numerical(alloc::format!(
                    "{family}: could not bracket rho = {rho} (rho({b}) = {})",
                    fb + rho
                )));
            }
        }
    };
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(alloc::format!(
            "{family}: rho = {rho} not bracketed by the support ends"
        )));
    }
    illinois(|t| q.rho_at(family, t).map(|r| r - rho), a, fa, b, fb).map_err(|e| match e {
        Error::Numerical(msg) => Error::Numerical(alloc::format!("{family}, rho = {rho}: {msg}")),
        other => other,
    })
}

fn illinois(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
) -> Result<f64> {
    const MAX_ITER: usize = 300;
    let mut side = 0i8;
    for iter in 0..MAX_ITER {
        let width = (b - a).abs();
        if width <= 1e-14 * a.abs().max(b.abs()).max(1.0) {
            return Ok(0.5 * (a + b));
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        // Plain bisection when the secant point is degenerate, or every
        // few steps after the first fifty to guarantee the bracket shrinks.
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(c > lo && c < hi) || (iter > 50 && iter % 3 == 0) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 || fc.abs() < 1e-15 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Numerical(alloc::format!(
        "root search did not converge in {MAX_ITER} iterations (bracket [{a}, {b}])"
    )))
}

/// Parameter interval matching `attainable_rho ∩ [-RHO_CAP, RHO_CAP]`.
///
/// Open support ends that sit at independence are replaced by a point a hair
/// inside the support.
pub fn theta_bounds(family: CopulaFamily) -> Result<(f64, f64)> {
    let support = family.support();
    let range = attainable_rho(family);
    let i = family_index(family);
    let lo = if range.lo < -RHO_CAP {
        cached(&THETA_CAPS[2 * i], || theta_from_rho(family, -RHO_CAP))?
    } else if support.lo_open {
        support.lo + 1e-8
    } else {
        support.lo
    };
    let hi = if range.hi > RHO_CAP {
        cached(&THETA_CAPS[2 * i + 1], || theta_from_rho(family, RHO_CAP))?
    } else {
        support.hi
    };
    Ok((lo, hi))
}

/// Negative differential entropy `int c log c` over the margin-trimmed unit
/// square.
pub fn negative_entropy(c: &BivariateCopula, res: Resolution) -> Result<f64> {
    cross_entropy_term(c, c, res)
}

/// `int c_data(u, v) log c_model(u, v) du dv`.
pub fn cross_entropy_term(
    data: &BivariateCopula,
    model: &BivariateCopula,
    res: Resolution,
) -> Result<f64> {
    let rule = AxisRule::normal_scores(res);
    let value = rule.integrate_square_symmetric(|u, v| {
        exp(data.ln_density(u, v)) * model.ln_density(u, v)
    });
    if !value.is_finite() {
        return Err(Error::Numerical(alloc::format!(
            "{} (theta = {}) against {} (theta = {}): integral diverged at {} nodes",
            data.family(),
            data.theta(),
            model.family(),
            model.theta(),
            res.nodes
        )));
    }
    Ok(value)
}

/// `int c` over the margin-trimmed unit square (should be ~1).
pub fn density_mass(c: &BivariateCopula, res: Resolution) -> f64 {
    AxisRule::normal_scores(res).integrate_square_symmetric(|u, v| exp(c.ln_density(u, v)))
}
