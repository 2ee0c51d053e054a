//! Gaussian-kernel estimates of univariate marginals.

use alloc::string::String;
use alloc::vec::Vec;

use libm::{exp, log, pow, sqrt};

use crate::error::{Error, Result};
use crate::math::{normal_cdf, LN_SQRT_2PI};

/// Evaluated CDF values are clamped to `[CDF_CLAMP, 1 - CDF_CLAMP]`.
pub const CDF_CLAMP: f64 = 1e-6;

// Beyond this many bandwidths a kernel's CDF is 0 or 1 to double precision.
const CDF_REACH: f64 = 9.0;

/// Kernel density estimate with a Gaussian kernel and Silverman bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    /// Training values, sorted ascending.
    centers: Vec<f64>,
    bandwidth: f64,
}

impl EmpiricalMarginal {
    /// `h = 1.06 * min(sd, iqr / 1.34) * M^(-1/5)`.
    pub fn fit(x: &[f64]) -> Result<Self> {
        Self::fit_named(x, "x")
    }

    pub fn fit_named(x: &[f64], name: &str) -> Result<Self> {
        if x.len() < 3 {
            return Err(Error::Data(alloc::format!(
                "`{name}`: need at least 3 values, got {}",
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(alloc::format!(
                "`{name}`: non-finite value {} at position {i}",
                x[i]
            )));
        }
        let mut centers = x.to_vec();
        centers.sort_by(f64::total_cmp);
        let m = centers.len() as f64;
        let mean = centers.iter().sum::<f64>() / m;
        let sd = sqrt(centers.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (m - 1.0));
        let iqr = quantile_sorted(&centers, 0.75) - quantile_sorted(&centers, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        if !(spread > 0.0) {
            return Err(Error::DegenerateVariance {
                variable: String::from(name),
            });
        }
        Ok(EmpiricalMarginal {
            centers,
            bandwidth: 1.06 * spread * pow(m, -0.2),
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Unclamped mixture CDF.
    pub fn raw_cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.centers.partition_point(|&c| c < x - CDF_REACH * h);
        let hi = self.centers.partition_point(|&c| c <= x + CDF_REACH * h);
        let near: f64 = self.centers[lo..hi].iter().map(|&c| normal_cdf((x - c) / h)).sum();
        (lo as f64 + near) / self.centers.len() as f64
    }

    /// Mixture CDF clamped to `[CDF_CLAMP, 1 - CDF_CLAMP]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.raw_cdf(x).clamp(CDF_CLAMP, 1.0 - CDF_CLAMP)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let k = self.centers.partition_point(|&c| c < x);
        let nearest = [k.wrapping_sub(1), k]
            .into_iter()
            .filter_map(|i| self.centers.get(i))
            .map(|&c| (x - c).abs())
            .fold(f64::INFINITY, f64::min);
        // Kernels further out than this are below e^-40 of the nearest one.
        let zmin = nearest / h;
        let reach = h * sqrt(zmin * zmin + 80.0);
        let lo = self.centers.partition_point(|&c| c < x - reach);
        let hi = self.centers.partition_point(|&c| c <= x + reach);
        let top = -0.5 * zmin * zmin;
        let sum: f64 = self.centers[lo..hi]
            .iter()
            .map(|&c| {
                let z = (x - c) / h;
                exp(-0.5 * z * z - top)
            })
            .sum();
        top + log(sum) - LN_SQRT_2PI - log(h) - log(self.centers.len() as f64)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        exp(self.log_pdf(x))
    }
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::normal_quantile;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn normal_draws(m: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| normal_quantile(rng.gen_range(1e-12..1.0)))
            .collect()
    }

    #[test]
    fn silverman_bandwidth() {
        let x = normal_draws(10_000, 3);
        let h = EmpiricalMarginal::fit(&x).unwrap().bandwidth();
        let want = 1.06 * 10_000f64.powf(-0.2);
        assert!((h / want - 1.0).abs() < 0.15, "h={h} want={want}");
        let scaled: Vec<f64> = x.iter().map(|v| 10.0 * v).collect();
        let h10 = EmpiricalMarginal::fit(&scaled).unwrap().bandwidth();
        assert!((h10 / h - 10.0).abs() < 1e-9);
    }

    #[test]
    fn constant_column_is_degenerate() {
        assert!(matches!(
            EmpiricalMarginal::fit(&[2.0; 5]),
            Err(Error::DegenerateVariance { .. })
        ));
        // zero IQR with positive spread still fits
        assert!(EmpiricalMarginal::fit(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn cdf_limits_and_symmetry() {
        let m = EmpiricalMarginal::fit(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        assert!((m.cdf(0.0) - 0.5).abs() < 1e-9);
        assert_eq!(m.cdf(-1e6), CDF_CLAMP);
        assert_eq!(m.cdf(1e6), 1.0 - CDF_CLAMP);
        assert!(m.log_pdf(1e6).is_finite());
    }

    #[test]
    fn log_pdf_matches_full_sum() {
        let x = normal_draws(500, 11);
        let m = EmpiricalMarginal::fit(&x).unwrap();
        let h = m.bandwidth();
        for &q in &[-7.0, -1.3, 0.0, 0.4, 2.9, 15.0] {
            let full: f64 = x
                .iter()
                .map(|&c| crate::math::normal_pdf((q - c) / h) / h)
                .sum::<f64>()
                / 500.0;
            let full_cdf: f64 = x.iter().map(|&c| normal_cdf((q - c) / h)).sum::<f64>() / 500.0;
            assert!((m.pdf(q) / full - 1.0).abs() < 1e-12, "q={q}");
            assert!((m.raw_cdf(q) - full_cdf).abs() < 1e-15, "q={q}");
        }
    }

    #[test]
    fn cdf_derivative_matches_pdf() {
        let x = normal_draws(300, 5);
        let m = EmpiricalMarginal::fit(&x).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let q: f64 = rng.gen_range(-2.5..2.5);
            let e = 1e-5;
            let d = (m.raw_cdf(q + e) - m.raw_cdf(q - e)) / (2.0 * e);
            assert!((d / m.pdf(q) - 1.0).abs() < 1e-4, "q={q}");
        }
    }

    proptest! {
        #[test]
        fn cdf_monotone(x in proptest::collection::vec(-10.0..10.0f64, 3..40),
                        mut q in proptest::collection::vec(-20.0..20.0f64, 2..30)) {
            prop_assume!(EmpiricalMarginal::fit(&x).is_ok());
            let m = EmpiricalMarginal::fit(&x).unwrap();
            q.sort_by(f64::total_cmp);
            let c: Vec<f64> = q.iter().map(|&t| m.cdf(t)).collect();
            prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(c.iter().all(|&p| (CDF_CLAMP..=1.0 - CDF_CLAMP).contains(&p)));
            prop_assert!(q.iter().all(|&t| m.pdf(t) > 0.0));
        }
    }
}
