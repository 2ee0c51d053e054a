//! The eight supported one-parameter bivariate copula families.

use core::fmt;
use core::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CopulaFamily {
    Gaussian,
    Fgm,
    Gumbel,
    Frank,
    Clayton,
    Joe,
    Amh,
    GumbelBarnett,
}

/// Direction of the PQD ordering induced by increasing theta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingDirection {
    Positive,
    Negative,
}

/// Total-positivity class of the copula density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityClass {
    Tp2,
    Rr2,
    /// TP2 for `theta >= 0`, RR2 for `theta < 0`.
    SignOfTheta,
}

/// Total-positivity class of a density at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positivity {
    Tp2,
    Rr2,
}

/// Parameter support: an interval with optionally open ends. Infinite
/// bounds are always open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSupport {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl ThetaSupport {
    pub fn contains(&self, theta: f64) -> bool {
        if theta.is_nan() {
            return false;
        }
        let above = if self.lo_open { theta > self.lo } else { theta >= self.lo };
        let below = if self.hi_open { theta < self.hi } else { theta <= self.hi };
        above && below && theta.is_finite()
    }
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 8] = [
        CopulaFamily::Gaussian,
        CopulaFamily::Fgm,
        CopulaFamily::Gumbel,
        CopulaFamily::Frank,
        CopulaFamily::Clayton,
        CopulaFamily::Joe,
        CopulaFamily::Amh,
        CopulaFamily::GumbelBarnett,
    ];

    /// Families used for model selection unless configured otherwise.
    pub const DEFAULT_SELECTION: [CopulaFamily; 3] =
        [CopulaFamily::Gaussian, CopulaFamily::Gumbel, CopulaFamily::Clayton];

    pub fn token(self) -> &'static str {
        match self {
            CopulaFamily::Gaussian => "gaussian",
            CopulaFamily::Fgm => "fgm",
            CopulaFamily::Gumbel => "gumbel",
            CopulaFamily::Frank => "frank",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Joe => "joe",
            CopulaFamily::Amh => "amh",
            CopulaFamily::GumbelBarnett => "gumbel_barnett",
        }
    }

    pub fn support(self) -> ThetaSupport {
        let closed = |lo, hi| ThetaSupport {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        };
        match self {
            // Degenerate at |theta| = 1.
            CopulaFamily::Gaussian => ThetaSupport {
                lo: -1.0,
                hi: 1.0,
                lo_open: true,
                hi_open: true,
            },
            CopulaFamily::Fgm | CopulaFamily::Amh => closed(-1.0, 1.0),
            CopulaFamily::Gumbel | CopulaFamily::Joe => ThetaSupport {
                lo: 1.0,
                hi: f64::INFINITY,
                lo_open: false,
                hi_open: true,
            },
            CopulaFamily::Frank => ThetaSupport {
                lo: 0.0,
                hi: f64::INFINITY,
                lo_open: false,
                hi_open: true,
            },
            // Negative theta would bring in the max(., 0) boundary region.
            CopulaFamily::Clayton => ThetaSupport {
                lo: 0.0,
                hi: f64::INFINITY,
                lo_open: true,
                hi_open: true,
            },
            CopulaFamily::GumbelBarnett => ThetaSupport {
                lo: 0.0,
                hi: 1.0,
                lo_open: true,
                hi_open: false,
            },
        }
    }

    pub(crate) fn support_label(self) -> &'static str {
        match self {
            CopulaFamily::Gaussian => "(-1, 1)",
            CopulaFamily::Fgm | CopulaFamily::Amh => "[-1, 1]",
            CopulaFamily::Gumbel | CopulaFamily::Joe => "[1, inf)",
            CopulaFamily::Frank => "[0, inf)",
            CopulaFamily::Clayton => "(0, inf)",
            CopulaFamily::GumbelBarnett => "(0, 1]",
        }
    }

    /// Parameter value giving the independence copula (possibly only as a
    /// limit outside the support).
    pub fn independence_theta(self) -> f64 {
        match self {
            CopulaFamily::Gumbel | CopulaFamily::Joe => 1.0,
            _ => 0.0,
        }
    }

    pub fn ordering_direction(self) -> OrderingDirection {
        match self {
            CopulaFamily::GumbelBarnett => OrderingDirection::Negative,
            _ => OrderingDirection::Positive,
        }
    }

    pub fn density_class(self) -> DensityClass {
        match self {
            CopulaFamily::Gaussian | CopulaFamily::Fgm | CopulaFamily::Amh => {
                DensityClass::SignOfTheta
            }
            CopulaFamily::GumbelBarnett => DensityClass::Rr2,
            _ => DensityClass::Tp2,
        }
    }

    /// Class the density is expected to have at `theta`.
    pub fn positivity_at(self, theta: f64) -> Positivity {
        match self.density_class() {
            DensityClass::Tp2 => Positivity::Tp2,
            DensityClass::Rr2 => Positivity::Rr2,
            DensityClass::SignOfTheta if theta >= 0.0 => Positivity::Tp2,
            DensityClass::SignOfTheta => Positivity::Rr2,
        }
    }

    /// Rank used to break ties in family selection (lower wins).
    pub fn selection_rank(self) -> u8 {
        match self {
            CopulaFamily::Gaussian => 0,
            CopulaFamily::Gumbel => 1,
            CopulaFamily::Clayton => 2,
            CopulaFamily::Frank => 3,
            CopulaFamily::Fgm => 4,
            CopulaFamily::Joe => 5,
            CopulaFamily::Amh => 6,
            CopulaFamily::GumbelBarnett => 7,
        }
    }

    /// Comma-separated list of all tokens, for error messages.
    pub fn valid_tokens() -> &'static str {
        "gaussian, fgm, gumbel, frank, clayton, joe, amh, gumbel_barnett"
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CopulaFamily::ALL
            .into_iter()
            .find(|f| f.token() == s)
            .ok_or_else(|| {
                Error::Config(alloc::format!(
                    "unknown copula family `{s}` (valid: {})",
                    CopulaFamily::valid_tokens()
                ))
            })
    }
}
