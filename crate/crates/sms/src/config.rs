//! Run settings: built-in defaults, overridden by a TOML file, overridden by
//! command-line flags.
//!
//! ```toml
//! families = ["gaussian", "gumbel", "clayton"]
//! seed = 42
//! threads = 4
//!
//! [curves]
//! step = 0.01
//! nodes = 200
//! jacobian = true
//! priors = { clayton = "exponential_on_theta:4" }
//!
//! [learn]
//! method = "sms"
//! mle_tolerance = 1e-6
//! refine_theta = false
//!
//! [compare]
//! folds = 10
//! baseline = true
//!
//! [verify]
//! grid = 50
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use sms_core::curves::{PriorSpec, DEFAULT_STEP};
use sms_core::quadrature::DEFAULT_NODES;
use sms_core::verify::TP2_GRID;
use sms_core::{CopulaFamily, FamilyPrior, LearnConfig, LearnMethod, Resolution};

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub families: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub curves: CurvesSection,
    #[serde(default)]
    pub learn: LearnSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesSection {
    pub step: Option<f64>,
    pub nodes: Option<usize>,
    pub jacobian: Option<bool>,
    #[serde(default)]
    pub priors: BTreeMap<String, String>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnSection {
    pub method: Option<String>,
    pub mle_tolerance: Option<f64>,
    pub refine_theta: Option<bool>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub folds: Option<usize>,
    pub baseline: Option<bool>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub grid: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Values given on the command line; `None` defers to the file.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Overrides {
    pub families: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub step: Option<f64>,
    pub nodes: Option<usize>,
    pub no_jacobian: bool,
    pub priors: Vec<String>,
    pub method: Option<String>,
    pub mle_tolerance: Option<f64>,
    pub refine_theta: bool,
    pub folds: Option<usize>,
    pub baseline: bool,
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub families: Vec<CopulaFamily>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub step: f64,
    pub resolution: Resolution,
    pub priors: Vec<FamilyPrior>,
    pub method: LearnMethod,
    pub mle_tolerance: f64,
    pub refine_theta: bool,
    pub folds: usize,
    pub baseline: bool,
    pub grid: usize,
}

pub fn parse_families(list: &str) -> Result<Vec<CopulaFamily>> {
    let fams = list
        .split(',')
        .map(|t| t.trim().parse::<CopulaFamily>())
        .collect::<sms_core::Result<Vec<_>>>()?;
    check_families(fams)
}

fn check_families(fams: Vec<CopulaFamily>) -> Result<Vec<CopulaFamily>> {
    if fams.is_empty() {
        return Err(Error::Config("family list is empty".into()));
    }
    for (k, f) in fams.iter().enumerate() {
        if fams[..k].contains(f) {
            return Err(Error::Config(format!("family {f} listed twice")));
        }
    }
    Ok(fams)
}

fn parse_prior_override(s: &str) -> Result<(CopulaFamily, PriorSpec)> {
    let (fam, spec) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("prior override `{s}` is not of the form family=spec")))?;
    Ok((fam.trim().parse()?, spec.trim().parse()?))
}

impl Settings {
    pub fn resolve(file: &FileConfig, cli: &Overrides) -> Result<Settings> {
        let families = match (&cli.families, &file.families) {
            (Some(s), _) => parse_families(s)?,
            (None, Some(list)) => check_families(
                list.iter().map(|t| t.parse()).collect::<sms_core::Result<Vec<_>>>()?,
            )?,
            (None, None) => CopulaFamily::DEFAULT_SELECTION.to_vec(),
        };
        let jacobian = !cli.no_jacobian && file.curves.jacobian.unwrap_or(true);
        let mut specs: BTreeMap<CopulaFamily, PriorSpec> = BTreeMap::new();
        for (fam, spec) in &file.curves.priors {
            specs.insert(fam.parse()?, spec.parse()?);
        }
        for s in &cli.priors {
            let (f, spec) = parse_prior_override(s)?;
            specs.insert(f, spec);
        }
        let priors = families
            .iter()
            .map(|&f| {
                let p = match specs.get(&f) {
                    Some(spec) => spec.bind(f)?,
                    None => FamilyPrior::default_for(f),
                };
                let jac = jacobian && p.jacobian();
                Ok(FamilyPrior::with_jacobian(f, p.form(), jac)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let method = cli
            .method
            .as_deref()
            .or(file.learn.method.as_deref())
            .map_or(Ok(LearnMethod::Sms), str::parse)?;
        let nodes = cli.nodes.or(file.curves.nodes).unwrap_or(DEFAULT_NODES);
        if nodes < 8 {
            return Err(Error::Config(format!("quadrature needs at least 8 nodes, got {nodes}")));
        }
        let grid = cli.grid.or(file.verify.grid).unwrap_or(TP2_GRID);
        if grid < 2 {
            return Err(Error::Config(format!("verifier grid needs at least 2 points, got {grid}")));
        }
        let settings = Settings {
            families,
            seed: cli.seed.or(file.seed).unwrap_or(0),
            threads: cli.threads.or(file.threads),
            step: cli.step.or(file.curves.step).unwrap_or(DEFAULT_STEP),
            resolution: Resolution::with_nodes(nodes),
            priors,
            method,
            mle_tolerance: cli.mle_tolerance.or(file.learn.mle_tolerance).unwrap_or(1e-6),
            refine_theta: cli.refine_theta || file.learn.refine_theta.unwrap_or(false),
            folds: cli.folds.or(file.compare.folds).unwrap_or(10),
            baseline: cli.baseline || file.compare.baseline.unwrap_or(false),
            grid,
        };
        settings.learn_config().validate()?;
        Ok(settings)
    }

    pub fn learn_config(&self) -> LearnConfig {
        LearnConfig {
            families: self.families.clone(),
            method: self.method,
            mle_tolerance: self.mle_tolerance,
            seed: self.seed,
            refine_theta: self.refine_theta,
        }
    }

    /// Effective settings for the header of an output file.
    pub fn comments(&self, command: &str) -> Vec<String> {
        let fams: Vec<&str> = self.families.iter().map(|f| f.token()).collect();
        let mut out = vec![
            format!("command = {command}"),
            format!("seed = {}", self.seed),
            format!("families = {}", fams.join(",")),
        ];
        match command {
            "curves" => {
                out.push(format!("step = {}", self.step));
                out.push(format!("nodes = {}", self.resolution.nodes));
                for p in &self.priors {
                    out.push(format!("prior.{} = {p}", p.family()));
                }
            }
            "learn" | "compare" => {
                out.push(format!("method = {}", self.method.token()));
                out.push(format!("mle_tolerance = {}", self.mle_tolerance));
                out.push(format!("refine_theta = {}", self.refine_theta));
                if command == "compare" {
                    out.push(format!("folds = {}", self.folds));
                    out.push(format!("baseline = {}", self.baseline));
                }
            }
            "verify" => {
                out.push(format!("grid = {}", self.grid));
                out.push(format!("nodes = {}", self.resolution.nodes));
            }
            _ => {}
        }
        out
    }
}
