//! Bivariate copulas: CDF, density, conditional distribution and sampling.

use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use libm::{exp, expm1, log, log1p, sqrt};
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::CopulaFamily;
use crate::math::{bivariate_normal_cdf, ln_exp_sum_m1, log_add_exp, normal_cdf, normal_quantile};

/// Densities below this value are clamped before taking the logarithm.
pub const DENSITY_FLOOR: f64 = 1e-300;
const LN_DENSITY_FLOOR: f64 = -690.775_527_898_213_7;

static FLOOR_HITS: AtomicUsize = AtomicUsize::new(0);

/// Number of density evaluations clamped at [`DENSITY_FLOOR`] since start
/// (or since the last [`reset_density_floor_hits`]).
pub fn density_floor_hits() -> usize {
    FLOOR_HITS.load(Ordering::Relaxed)
}

pub fn reset_density_floor_hits() {
    FLOOR_HITS.store(0, Ordering::Relaxed);
}

/// A copula family together with a valid dependence parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateCopula {
    family: CopulaFamily,
    theta: f64,
}

impl BivariateCopula {
    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        if !family.support().contains(theta) {
            return Err(Error::ParameterDomain {
                family,
                theta,
                support: family.support_label(),
            });
        }
        Ok(BivariateCopula { family, theta })
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `C(u, v)` for `u, v` in `[0, 1]`.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::UnitDomain { u, v });
        }
        Ok(self.cdf_unchecked(u, v))
    }

    /// `C(u, v)` without argument validation. Arguments on the border of the
    /// square are handled exactly.
    pub fn cdf_unchecked(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v;
        }
        if v >= 1.0 {
            return u;
        }
        let t = self.theta;
        let c = match self.family {
            CopulaFamily::Gaussian => {
                if t == 0.0 {
                    u * v
                } else {
                    bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), t)
                }
            }
            CopulaFamily::Fgm => u * v * (1.0 + t * (1.0 - u) * (1.0 - v)),
            CopulaFamily::Gumbel => {
                let lu = -log(u);
                let lv = -log(v);
                exp(-exp(gumbel_ln_s(lu, lv, t) / t))
            }
            CopulaFamily::Frank => {
                if t == 0.0 {
                    u * v
                } else {
                    let x = tau(t, u) * tau(t, v) / tau(t, 1.0);
                    if x < 0.5 {
                        -log1p(-x) / t
                    } else {
                        -(log(frank_denominator(t, u, v)) - log(tau(t, 1.0))) / t
                    }
                }
            }
            CopulaFamily::Clayton => exp(-clayton_ln_s(u, v, t) / t),
            CopulaFamily::Joe => {
                let (ln_s, _, _) = joe_parts(u, v, t);
                -expm1(ln_s / t)
            }
            CopulaFamily::Amh => u * v / (1.0 - t * (1.0 - u) * (1.0 - v)),
            CopulaFamily::GumbelBarnett => {
                let (lu, lv) = (log(u), log(v));
                exp(lu + lv - t * lu * lv)
            }
        };
        c.clamp(0.0, u.min(v))
    }

    /// `ln c(u, v)` for `u, v` strictly inside `(0, 1)`.
    pub fn log_pdf(&self, u: f64, v: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(Error::UnitDomain { u, v });
        }
        Ok(self.ln_density(u, v))
    }

    pub fn pdf(&self, u: f64, v: f64) -> Result<f64> {
        self.log_pdf(u, v).map(exp)
    }

    /// `ln c(u, v)` without argument validation, clamped below at
    /// `ln(DENSITY_FLOOR)`.
    pub fn ln_density(&self, u: f64, v: f64) -> f64 {
        let raw = self.ln_density_raw(u, v);
        if raw >= LN_DENSITY_FLOOR {
            raw
        } else {
            FLOOR_HITS.fetch_add(1, Ordering::Relaxed);
            LN_DENSITY_FLOOR
        }
    }

    fn ln_density_raw(&self, u: f64, v: f64) -> f64 {
        let t = self.theta;
        match self.family {
            CopulaFamily::Gaussian => {
                if t == 0.0 {
                    return 0.0;
                }
                let x = normal_quantile(u);
                let y = normal_quantile(v);
                let one_m = 1.0 - t * t;
                -0.5 * log(one_m) - (t * t * (x * x + y * y) - 2.0 * t * x * y) / (2.0 * one_m)
            }
            CopulaFamily::Fgm => log(1.0 + t * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)),
            CopulaFamily::Gumbel => {
                let lu = -log(u);
                let lv = -log(v);
                let ln_s = gumbel_ln_s(lu, lv, t);
                let a = exp(ln_s / t);
                -a - log(u) - log(v) + (t - 1.0) * (log(lu) + log(lv)) + (1.0 / t - 2.0) * ln_s
                    + log(a + t - 1.0)
            }
            CopulaFamily::Frank => {
                if t == 0.0 {
                    return 0.0;
                }
                log(t) + log(tau(t, 1.0)) - t * (u + v) - 2.0 * log(frank_denominator(t, u, v))
            }
            CopulaFamily::Clayton => {
                let l = clayton_ln_s(u, v, t);
                log1p(t) - (t + 1.0) * (log(u) + log(v)) - (1.0 / t + 2.0) * l
            }
            CopulaFamily::Joe => {
                let (ln_s, _, _) = joe_parts(u, v, t);
                (1.0 / t - 2.0) * ln_s
                    + (t - 1.0) * (log1p(-u) + log1p(-v))
                    + log(t - 1.0 + exp(ln_s))
            }
            CopulaFamily::Amh => {
                let (ub, vb) = (1.0 - u, 1.0 - v);
                let num = 1.0 + t * ((1.0 + u) * (1.0 + v) - 3.0) + t * t * ub * vb;
                log(num) - 3.0 * log(1.0 - t * ub * vb)
            }
            CopulaFamily::GumbelBarnett => {
                let (lu, lv) = (log(u), log(v));
                -t * lu * lv + log((1.0 - t * lu) * (1.0 - t * lv) - t)
            }
        }
    }

    /// Conditional distribution `P(V <= v | U = u) = dC/du (u, v)`.
    pub fn conditional_cdf(&self, u: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        let t = self.theta;
        let h = match self.family {
            CopulaFamily::Gaussian => {
                let x = normal_quantile(u);
                let y = normal_quantile(v);
                normal_cdf((y - t * x) / sqrt(1.0 - t * t))
            }
            CopulaFamily::Fgm => v * (1.0 + t * (1.0 - v) * (1.0 - 2.0 * u)),
            CopulaFamily::Gumbel => {
                let lu = -log(u);
                let lv = -log(v);
                let ln_s = gumbel_ln_s(lu, lv, t);
                exp(-exp(ln_s / t) + (1.0 / t - 1.0) * ln_s + (t - 1.0) * log(lu) - log(u))
            }
            CopulaFamily::Frank => {
                if t == 0.0 {
                    v
                } else {
                    exp(-t * u) * tau(t, v) / frank_denominator(t, u, v)
                }
            }
            CopulaFamily::Clayton => {
                exp(-(t + 1.0) * log(u) - (1.0 / t + 1.0) * clayton_ln_s(u, v, t))
            }
            CopulaFamily::Joe => {
                let (ln_s, _, q) = joe_parts(u, v, t);
                exp((1.0 / t - 1.0) * ln_s + (t - 1.0) * log1p(-u)) * q
            }
            CopulaFamily::Amh => {
                let d = 1.0 - t * (1.0 - u) * (1.0 - v);
                v * (1.0 - t * (1.0 - v)) / (d * d)
            }
            CopulaFamily::GumbelBarnett => {
                let (lu, lv) = (log(u), log(v));
                v * exp(-t * lu * lv) * (1.0 - t * lv)
            }
        };
        h.clamp(0.0, 1.0)
    }

    /// Solves `conditional_cdf(u, v) = p` for `v`.
    pub fn conditional_quantile(&self, u: f64, p: f64) -> f64 {
        if self.family == CopulaFamily::Gaussian {
            let t = self.theta;
            let y = t * normal_quantile(u) + sqrt(1.0 - t * t) * normal_quantile(p);
            return normal_cdf(y);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.conditional_cdf(u, mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `m` independent draws, reproducible for a fixed seed.
    pub fn sample(&self, m: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, m)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Vec<(f64, f64)> {
        (0..m)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                let p: f64 = rng.sample(Open01);
                (u, self.conditional_quantile(u, p))
            })
            .collect()
    }
}

/// `ln(lu^t + lv^t)` for positive `lu`, `lv`.
#[inline]
fn gumbel_ln_s(lu: f64, lv: f64, t: f64) -> f64 {
    let (hi, lo) = if lu >= lv { (lu, lv) } else { (lv, lu) };
    t * log(hi) + log1p(exp(t * (log(lo) - log(hi))))
}

/// `ln(u^-t + v^-t - 1)`.
#[inline]
fn clayton_ln_s(u: f64, v: f64, t: f64) -> f64 {
    ln_exp_sum_m1(-t * log(u), -t * log(v))
}

/// Frank's `tau(x) = 1 - exp(-t x)`.
#[inline]
fn tau(t: f64, x: f64) -> f64 {
    -expm1(-t * x)
}

/// `tau(1) - tau(u) tau(v)`, written as a sum of non-negative terms.
#[inline]
fn frank_denominator(t: f64, u: f64, v: f64) -> f64 {
    exp(-t * u) * tau(t, 1.0 - u) + exp(-t * v) * tau(t, u)
}

/// Joe copula pieces: `(ln S, 1 - (1-u)^t, 1 - (1-v)^t)` with
/// `S = (1-u)^t + (1-v)^t - (1-u)^t (1-v)^t`.
#[inline]
fn joe_parts(u: f64, v: f64, t: f64) -> (f64, f64, f64) {
    let ln_a = t * log1p(-u);
    let ln_b = t * log1p(-v);
    let p = -expm1(ln_a);
    let q = -expm1(ln_b);
    let pq = p * q;
    let ln_s = if pq < 0.5 {
        log1p(-pq)
    } else {
        log_add_exp(ln_a, ln_b + log(p))
    };
    (ln_s, p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use CopulaFamily::*;

    fn cop(f: CopulaFamily, t: f64) -> BivariateCopula {
        BivariateCopula::new(f, t).unwrap()
    }

    /// A parameter inside each family's support, away from independence.
    fn typical(f: CopulaFamily) -> f64 {
        match f {
            Gaussian => 0.6,
            Fgm => 0.7,
            Gumbel => 2.3,
            Frank => 5.0,
            Clayton => 1.7,
            Joe => 2.5,
            Amh => 0.8,
            GumbelBarnett => 0.6,
        }
    }

    #[test]
    fn cdf_examples() {
        assert!((cop(Gaussian, 0.5).cdf(1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert!((cop(Clayton, 1.0).cdf(0.5, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!((cop(Fgm, 0.5).cdf(0.5, 0.5).unwrap() - 0.28125).abs() < 1e-15);
    }

    #[test]
    fn log_pdf_examples() {
        assert_eq!(cop(Gaussian, 0.0).log_pdf(0.2, 0.9).unwrap(), 0.0);
        assert!(cop(Fgm, 1.0).log_pdf(0.5, 0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn amh_density_matches_closed_form() {
        // numerator / (1 - theta (1-u)(1-v))^3
        let (t, u, v): (f64, f64, f64) = (0.5, 0.3, 0.7);
        let (ub, vb) = (1.0 - u, 1.0 - v);
        let num = 1.0 + t * ((1.0 + u) * (1.0 + v) - 3.0) + t * t * ub * vb;
        let want = num / (1.0 - t * ub * vb).powi(3);
        let got = cop(Amh, t).pdf(u, v).unwrap();
        assert!((got - want).abs() < 1e-14, "got={got} want={want}");
        assert!((want - 0.917_121_028_068_262_2).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            BivariateCopula::new(Clayton, -0.5),
            Err(Error::ParameterDomain { .. })
        ));
        assert!(BivariateCopula::new(Clayton, 0.0).is_err());
        assert!(BivariateCopula::new(Gumbel, 0.5).is_err());
        let c = cop(Frank, 2.0);
        assert!(matches!(c.log_pdf(0.0, 0.5), Err(Error::UnitDomain { .. })));
        assert!(c.log_pdf(0.5, 1.0).is_err());
        assert!(c.cdf(1.2, 0.5).is_err());
    }

    #[test]
    fn cdf_margins_on_every_family() {
        for f in CopulaFamily::ALL {
            let c = cop(f, typical(f));
            for k in 0..50 {
                let u = k as f64 / 49.0;
                assert!((c.cdf(u, 1.0).unwrap() - u).abs() < 1e-12);
                assert!((c.cdf(1.0, u).unwrap() - u).abs() < 1e-12);
                assert_eq!(c.cdf(u, 0.0).unwrap(), 0.0);
            }
        }
    }

    /// Mixed partial of the CDF by central differences must equal the
    /// density; first partial must equal the conditional CDF.
    #[test]
    fn density_and_conditional_match_cdf_derivatives() {
        let h = 1e-4;
        for f in CopulaFamily::ALL {
            let c = cop(f, typical(f));
            for &(u, v) in &[(0.3, 0.6), (0.15, 0.2), (0.8, 0.7), (0.5, 0.05)] {
                let cdf = |a: f64, b: f64| c.cdf_unchecked(a, b);
                let mixed = (cdf(u + h, v + h) - cdf(u + h, v - h) - cdf(u - h, v + h)
                    + cdf(u - h, v - h))
                    / (4.0 * h * h);
                let dens = c.pdf(u, v).unwrap();
                assert!(
                    (mixed - dens).abs() < 2e-4 * dens.max(1.0),
                    "{f}: ({u},{v}) fd={mixed} pdf={dens}"
                );
                let first = (cdf(u + h, v) - cdf(u - h, v)) / (2.0 * h);
                let cond = c.conditional_cdf(u, v);
                assert!((first - cond).abs() < 1e-6, "{f}: h fd={first} h={cond}");
            }
        }
    }

    #[test]
    fn conditional_quantile_inverts() {
        for f in CopulaFamily::ALL {
            let c = cop(f, typical(f));
            for &(u, p) in &[(0.1, 0.3), (0.5, 0.5), (0.93, 0.01), (0.02, 0.99)] {
                let v = c.conditional_quantile(u, p);
                assert!((c.conditional_cdf(u, v) - p).abs() < 1e-10, "{f}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        for f in CopulaFamily::ALL {
            let c = cop(f, typical(f));
            assert_eq!(c.sample(5, 11), c.sample(5, 11));
            assert_ne!(c.sample(5, 11), c.sample(5, 12));
        }
    }

    #[test]
    fn independence_limits() {
        for (f, t) in [(Gumbel, 1.0), (Joe, 1.0), (Frank, 0.0), (Fgm, 0.0), (Amh, 0.0)] {
            let c = cop(f, t);
            assert!(c.ln_density(0.3, 0.8).abs() < 1e-12, "{f}");
            assert!((c.cdf_unchecked(0.3, 0.8) - 0.24).abs() < 1e-12, "{f}");
        }
        // Frank and Clayton close to independence stay accurate.
        let c = cop(Frank, 1e-9);
        assert!((c.cdf_unchecked(0.3, 0.8) - 0.24).abs() < 1e-9);
        let c = cop(Clayton, 1e-7);
        assert!((c.cdf_unchecked(0.3, 0.8) - 0.24).abs() < 1e-7);
    }

    #[test]
    fn strong_dependence_stays_finite() {
        for (f, t) in [(Clayton, 60.0), (Gumbel, 40.0), (Joe, 60.0), (Frank, 200.0)] {
            let c = cop(f, t);
            for &(u, v) in &[(1e-6, 1e-6), (0.999_999, 0.999_999), (1e-6, 0.999_999), (0.4, 0.41)] {
                let l = c.ln_density(u, v);
                assert!(l.is_finite(), "{f} ({u},{v}) -> {l}");
                let cdf = c.cdf_unchecked(u, v);
                assert!((0.0..=u.min(v)).contains(&cdf), "{f}");
            }
        }
    }
}
