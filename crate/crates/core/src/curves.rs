//! Characteristic curves: expected edge log-likelihood as a function of
//! Spearman's rho, per family, with an optional log prior added.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::{expm1, log};

use crate::copula::BivariateCopula;
use crate::dependence::{attainable_rho, negative_entropy, rho_from_theta, theta_from_rho, RHO_CAP};
use crate::error::{Error, Result};
use crate::family::CopulaFamily;
use crate::quadrature::Resolution;

/// Default spacing of the rho grid.
pub const DEFAULT_STEP: f64 = 0.01;

/// Shape of a prior over the dependence parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorForm {
    /// Laplace centred at the independence parameter, truncated to the
    /// support.
    TruncatedLaplace { scale: f64 },
    /// Exponential in `theta - lo`, where `lo` is the lower support bound.
    ShiftedExponential { rate: f64 },
    /// Exponential in `theta`, truncated to the support.
    Exponential { rate: f64 },
    /// Constant log density in rho. Improper; meant for comparisons.
    Flat,
}

impl PriorForm {
    fn token(&self) -> &'static str {
        match self {
            PriorForm::TruncatedLaplace { .. } => "truncated_laplace_on_theta",
            PriorForm::ShiftedExponential { .. } => "shifted_exponential_on_theta",
            PriorForm::Exponential { .. } => "exponential_on_theta",
            PriorForm::Flat => "flat",
        }
    }

    fn parameter(&self) -> Option<f64> {
        match *self {
            PriorForm::TruncatedLaplace { scale } => Some(scale),
            PriorForm::ShiftedExponential { rate } | PriorForm::Exponential { rate } => Some(rate),
            PriorForm::Flat => None,
        }
    }
}

/// Prior over a family's parameter, moved to rho by change of variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPrior {
    family: CopulaFamily,
    form: PriorForm,
    jacobian: bool,
    log_norm: f64,
}

impl FamilyPrior {
    pub fn new(family: CopulaFamily, form: PriorForm) -> Result<Self> {
        Self::with_jacobian(family, form, true)
    }

    /// With `jacobian = false` the theta density is used directly as a
    /// density in rho.
    pub fn with_jacobian(family: CopulaFamily, form: PriorForm, jacobian: bool) -> Result<Self> {
        let s = family.support();
        let bad = |what: &str| {
            Err(Error::Config(alloc::format!(
                "{family}: {} prior {what}",
                form.token()
            )))
        };
        if let Some(p) = form.parameter() {
            if !(p.is_finite() && p > 0.0) {
                return bad("needs a positive finite parameter");
            }
        }
        let log_norm = match form {
            PriorForm::TruncatedLaplace { scale } => {
                let t0 = family.independence_theta();
                let left = -expm1(-(t0 - s.lo) / scale);
                let right = -expm1(-(s.hi - t0) / scale);
                log(scale * (left + right))
            }
            PriorForm::ShiftedExponential { rate } => {
                if !s.lo.is_finite() {
                    return bad("needs a finite lower support bound");
                }
                log(-expm1(-rate * (s.hi - s.lo)))
            }
            PriorForm::Exponential { rate } => {
                if s.lo < 0.0 {
                    return bad("needs a nonnegative support");
                }
                // log(exp(-rate lo) - exp(-rate hi))
                -rate * s.lo + log(-expm1(-rate * (s.hi - s.lo)))
            }
            PriorForm::Flat => 0.0,
        };
        Ok(FamilyPrior {
            family,
            form,
            jacobian,
            log_norm,
        })
    }

    /// Priors used when none is configured.
    pub fn default_for(family: CopulaFamily) -> FamilyPrior {
        use CopulaFamily::*;
        let form = match family {
            Gaussian | Fgm | Amh => PriorForm::TruncatedLaplace { scale: 1.0 },
            Gumbel | Joe => PriorForm::ShiftedExponential { rate: 1.0 },
            Clayton => PriorForm::Exponential { rate: 4.0 },
            Frank | GumbelBarnett => PriorForm::Exponential { rate: 1.0 },
        };
        FamilyPrior::new(family, form).expect("default priors are valid")
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn form(&self) -> PriorForm {
        self.form
    }

    pub fn jacobian(&self) -> bool {
        self.jacobian
    }

    /// Normalized log density of the prior on theta.
    pub fn log_density_theta(&self, theta: f64) -> f64 {
        if !self.family.support().contains(theta) {
            return f64::NEG_INFINITY;
        }
        let kernel = match self.form {
            PriorForm::TruncatedLaplace { scale } => {
                -(theta - self.family.independence_theta()).abs() / scale
            }
            PriorForm::ShiftedExponential { rate } => {
                log(rate) - rate * (theta - self.family.support().lo)
            }
            PriorForm::Exponential { rate } => log(rate) - rate * theta,
            PriorForm::Flat => 0.0,
        };
        kernel - self.log_norm
    }

    /// Rebinds the prior to another family, keeping form and switches.
    pub fn for_family(&self, family: CopulaFamily) -> Result<FamilyPrior> {
        FamilyPrior::with_jacobian(family, self.form, self.jacobian)
    }
}

/// `form[:param][:no_jacobian]`, e.g. `exponential_on_theta:4`.
impl fmt::Display for FamilyPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.form.token())?;
        if let Some(p) = self.form.parameter() {
            write!(f, ":{p}")?;
        }
        if !self.jacobian {
            f.write_str(":no_jacobian")?;
        }
        Ok(())
    }
}

/// Prior spec without the family, as written in configuration and curve
/// headers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub form: PriorForm,
    pub jacobian: bool,
}

impl PriorSpec {
    pub fn bind(&self, family: CopulaFamily) -> Result<FamilyPrior> {
        FamilyPrior::with_jacobian(family, self.form, self.jacobian)
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts: Vec<&str> = s.split(':').collect();
        let jacobian = if parts.last() == Some(&"no_jacobian") {
            parts.pop();
            false
        } else {
            true
        };
        let param = |parts: &[&str]| -> Result<f64> {
            match parts {
                [_, p] => p.parse::<f64>().map_err(|_| {
                    Error::Config(alloc::format!("prior `{s}`: bad parameter `{p}`"))
                }),
                _ => Err(Error::Config(alloc::format!(
                    "prior `{s}`: expected exactly one parameter"
                ))),
            }
        };
        let form = match parts.first().copied() {
            Some("truncated_laplace_on_theta") => PriorForm::TruncatedLaplace { scale: param(&parts)? },
            Some("shifted_exponential_on_theta") => PriorForm::ShiftedExponential { rate: param(&parts)? },
            Some("exponential_on_theta") => PriorForm::Exponential { rate: param(&parts)? },
            Some("flat") if parts.len() == 1 => PriorForm::Flat,
            _ => {
                return Err(Error::Config(alloc::format!(
                    "unknown prior `{s}` (valid forms: truncated_laplace_on_theta:<scale>, \
                     shifted_exponential_on_theta:<rate>, exponential_on_theta:<rate>, flat)"
                )))
            }
        };
        Ok(PriorSpec { form, jacobian })
    }
}

/// `log |d rho / d theta|` at `theta`, by second-order finite differences
/// that stay inside the support.
pub fn log_rho_slope(family: CopulaFamily, theta: f64) -> Result<f64> {
    let s = family.support();
    let h = 1e-4 * theta.abs().max(1.0);
    let rho = |t: f64| rho_from_theta(family, t);
    let slope = if s.contains(theta - h) && s.contains(theta + h) {
        (rho(theta + h)? - rho(theta - h)?) / (2.0 * h)
    } else if s.contains(theta + 2.0 * h) {
        (-3.0 * rho(theta)? + 4.0 * rho(theta + h)? - rho(theta + 2.0 * h)?) / (2.0 * h)
    } else {
        (3.0 * rho(theta)? - 4.0 * rho(theta - h)? + rho(theta - 2.0 * h)?) / (2.0 * h)
    };
    if !(slope.abs() > 0.0) || !slope.is_finite() {
        return Err(Error::Numerical(alloc::format!(
            "{family}: rho map has slope {slope} at theta = {theta}"
        )));
    }
    Ok(log(slope.abs()))
}

/// `log f(rho)` of the prior after moving it from theta to rho.
pub fn prior_log_density_in_rho(p: &FamilyPrior, rho: f64) -> Result<f64> {
    let range = attainable_rho(p.family);
    if !range.contains(rho) {
        return Err(Error::RhoOutOfRange {
            family: p.family,
            rho,
            lo: range.lo,
            hi: range.hi,
        });
    }
    if p.form == PriorForm::Flat {
        return Ok(0.0);
    }
    let theta = theta_from_rho(p.family, rho)?;
    let base = p.log_density_theta(theta);
    if p.jacobian {
        Ok(base - log_rho_slope(p.family, theta)?)
    } else {
        Ok(base)
    }
}

/// Expected log-likelihood (and optionally log posterior) on a rho grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicCurve {
    pub family: CopulaFamily,
    pub step: f64,
    pub rho_grid: Vec<f64>,
    pub raw_values: Vec<f64>,
    /// `None` until a prior has been combined with the raw curve.
    pub prior: Option<FamilyPrior>,
    pub posterior_values: Vec<f64>,
}

/// Grid points `k * step` with `|rho| <= 0.99` that the family can attain.
pub fn rho_grid(family: CopulaFamily, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::Config(alloc::format!(
            "curve grid step must lie in (0, 0.1], got {step}"
        )));
    }
    let range = attainable_rho(family);
    let kmax = libm::floor(RHO_CAP / step + 1e-9) as i64;
    Ok((-kmax..=kmax)
        .map(|k| k as f64 * step)
        .filter(|&r| range.contains(r))
        .collect())
}

/// Raw curve value at one rho: negative entropy of the family member with
/// that rho.
pub fn raw_curve_point(family: CopulaFamily, rho: f64, res: Resolution) -> Result<f64> {
    let point = || -> Result<f64> {
        let theta = theta_from_rho(family, rho)?;
        negative_entropy(&BivariateCopula::new(family, theta)?, res)
    };
    point().map_err(|e| Error::CurvePoint {
        rho,
        source: alloc::boxed::Box::new(e),
    })
}

pub fn build_raw_curve(
    family: CopulaFamily,
    step: f64,
    res: Resolution,
) -> Result<CharacteristicCurve> {
    let grid = rho_grid(family, step)?;
    let raw = grid
        .iter()
        .map(|&r| raw_curve_point(family, r, res))
        .collect::<Result<Vec<f64>>>()?;
    CharacteristicCurve::from_raw(family, step, grid, raw)
}

/// `posterior = raw + log prior` at every grid point.
pub fn build_posterior_curve(
    raw: &CharacteristicCurve,
    p: &FamilyPrior,
) -> Result<CharacteristicCurve> {
    let log_prior = prior_log_densities(raw, p)?;
    raw.clone().with_posterior(*p, log_prior)
}

/// Log prior at every grid point of `raw`.
pub fn prior_log_densities(raw: &CharacteristicCurve, p: &FamilyPrior) -> Result<Vec<f64>> {
    if p.family != raw.family {
        return Err(Error::Config(alloc::format!(
            "prior for {} applied to the {} curve",
            p.family,
            raw.family
        )));
    }
    raw.rho_grid
        .iter()
        .map(|&r| {
            prior_log_density_in_rho(p, r).map_err(|e| Error::CurvePoint {
                rho: r,
                source: alloc::boxed::Box::new(e),
            })
        })
        .collect()
}

impl CharacteristicCurve {
    /// Raw curve from precomputed parts; the grid must be strictly increasing.
    pub fn from_raw(
        family: CopulaFamily,
        step: f64,
        rho_grid: Vec<f64>,
        raw_values: Vec<f64>,
    ) -> Result<Self> {
        let curve = CharacteristicCurve {
            family,
            step,
            rho_grid,
            raw_values,
            prior: None,
            posterior_values: Vec::new(),
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn with_posterior(mut self, prior: FamilyPrior, log_prior: Vec<f64>) -> Result<Self> {
        if log_prior.len() != self.rho_grid.len() {
            return Err(Error::Config(alloc::format!(
                "{}: {} prior values for {} grid points",
                self.family,
                log_prior.len(),
                self.rho_grid.len()
            )));
        }
        self.posterior_values = self.raw_values.iter().zip(&log_prior).map(|(r, l)| r + l).collect();
        self.prior = Some(prior);
        Ok(self)
    }

    /// Checks grid ordering, lengths and finiteness.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Schema(alloc::format!("{} curve: {msg}", self.family)));
        if self.rho_grid.is_empty() {
            return fail(String::from("empty grid"));
        }
        if self.raw_values.len() != self.rho_grid.len() {
            return fail(alloc::format!(
                "{} raw values for {} grid points",
                self.raw_values.len(),
                self.rho_grid.len()
            ));
        }
        if let Some(k) = self.rho_grid.windows(2).position(|w| !(w[0] < w[1])) {
            return fail(alloc::format!("grid not strictly increasing at index {}", k + 1));
        }
        if self.rho_grid.iter().any(|r| !(r.abs() < 1.0)) {
            return fail(String::from("grid leaves (-1, 1)"));
        }
        if self.raw_values.iter().chain(&self.posterior_values).any(|v| !v.is_finite()) {
            return fail(String::from("non-finite value"));
        }
        match self.prior {
            Some(p) if p.family != self.family => fail(alloc::format!("prior is for {}", p.family)),
            Some(_) if self.posterior_values.len() != self.rho_grid.len() => {
                fail(String::from("posterior length differs from grid"))
            }
            None if !self.posterior_values.is_empty() => {
                fail(String::from("posterior values without a prior"))
            }
            _ => Ok(()),
        }
    }

    /// Piecewise-linear interpolation of the posterior curve, held flat past
    /// the grid ends. `None` when the family cannot attain `rho`.
    pub fn posterior_at(&self, rho: f64) -> Option<f64> {
        if self.posterior_values.is_empty() {
            return None;
        }
        self.interpolate(&self.posterior_values, rho)
    }

    pub fn raw_at(&self, rho: f64) -> Option<f64> {
        self.interpolate(&self.raw_values, rho)
    }

    fn interpolate(&self, values: &[f64], rho: f64) -> Option<f64> {
        if !attainable_rho(self.family).contains(rho) {
            return None;
        }
        let g = &self.rho_grid;
        let k = g.partition_point(|&r| r < rho);
        if k < g.len() && g[k] == rho {
            return Some(values[k]);
        }
        if k == 0 {
            return Some(values[0]);
        }
        if k == g.len() {
            return Some(values[k - 1]);
        }
        let t = (rho - g[k - 1]) / (g[k] - g[k - 1]);
        Some(values[k - 1] + t * (values[k] - values[k - 1]))
    }
}

/// Family maximizing the interpolated posterior at `rho_hat`; ties go to the
/// family with the lower selection rank.
pub fn select_family(curves: &[CharacteristicCurve], rho_hat: f64) -> Result<(CopulaFamily, f64)> {
    select_by(curves, rho_hat, CharacteristicCurve::posterior_at)
}

/// Same as [`select_family`] using the raw curves, ignoring priors.
pub fn select_family_raw(curves: &[CharacteristicCurve], rho_hat: f64) -> Result<(CopulaFamily, f64)> {
    select_by(curves, rho_hat, CharacteristicCurve::raw_at)
}

fn select_by(
    curves: &[CharacteristicCurve],
    rho_hat: f64,
    value: impl Fn(&CharacteristicCurve, f64) -> Option<f64>,
) -> Result<(CopulaFamily, f64)> {
    let mut best: Option<(CopulaFamily, f64)> = None;
    for c in curves {
        let Some(v) = value(c, rho_hat) else { continue };
        best = match best {
            Some((f, b))
                if b > v || (b == v && f.selection_rank() <= c.family.selection_rank()) =>
            {
                Some((f, b))
            }
            _ => Some((c.family, v)),
        };
    }
    best.ok_or(Error::Selection { rho: rho_hat })
}

/// Raw and posterior curves for each family with its default prior.
pub fn build_default_curves(
    families: &[CopulaFamily],
    step: f64,
    res: Resolution,
) -> Result<Vec<CharacteristicCurve>> {
    families
        .iter()
        .map(|&f| build_posterior_curve(&build_raw_curve(f, step, res)?, &FamilyPrior::default_for(f)))
        .collect()
}
