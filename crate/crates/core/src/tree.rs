//! Tree-structured copula models and the two structure learners.

use alloc::string::String;
use alloc::vec::Vec;

use crate::copula::BivariateCopula;
use crate::curves::{select_family, CharacteristicCurve};
use crate::dependence::{gaussian_theta, theta_bounds, theta_from_rho};
use crate::error::{Error, Result};
use crate::family::CopulaFamily;
use crate::mst::{is_spanning_tree, max_spanning_tree};
use crate::optimize::brent_minimize;
use crate::stats::{pairwise_rho_matrix, pseudo_observations, ranked_columns, Dataset, SymmetricMatrix};

/// Below this |rho_hat| an edge is treated as independent and given a
/// Gaussian copula.
pub const NEGLIGIBLE_RHO: f64 = 0.01;

// Empirical rho of exactly +-1 has no copula in any family; parameterize
// slightly inside instead.
pub const RHO_CLAMP: f64 = 0.999;

const MLE_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeEdge {
    pub i: usize,
    pub j: usize,
    pub family: CopulaFamily,
    pub theta: f64,
    pub rho_hat: f64,
    pub score: f64,
}

impl TreeEdge {
    pub fn copula(&self) -> Result<BivariateCopula> {
        BivariateCopula::new(self.family, self.theta)
    }
}

/// Spanning tree over named variables with a copula on every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaTree {
    names: Vec<String>,
    edges: Vec<TreeEdge>,
}

impl CopulaTree {
    /// Validates the edge set and stores it sorted by `(i, j)`.
    pub fn new(names: Vec<String>, mut edges: Vec<TreeEdge>) -> Result<Self> {
        let n = names.len();
        for e in &edges {
            if e.i >= e.j {
                return Err(Error::Schema(alloc::format!(
                    "edge ({}, {}) is not in canonical i < j orientation",
                    e.i,
                    e.j
                )));
            }
            if !e.family.support().contains(e.theta) {
                return Err(Error::Schema(alloc::format!(
                    "edge ({}, {}): theta = {} outside the {} support {}",
                    e.i,
                    e.j,
                    e.theta,
                    e.family,
                    e.family.support_label()
                )));
            }
            if !(-1.0..=1.0).contains(&e.rho_hat) || !e.score.is_finite() {
                return Err(Error::Schema(alloc::format!(
                    "edge ({}, {}): rho_hat = {} or score = {} out of range",
                    e.i,
                    e.j,
                    e.rho_hat,
                    e.score
                )));
            }
        }
        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.i, e.j)).collect();
        if !is_spanning_tree(n, &pairs) {
            return Err(Error::Schema(alloc::format!(
                "{} edges do not form a spanning tree on {n} variables",
                edges.len()
            )));
        }
        edges.sort_by_key(|e| (e.i, e.j));
        Ok(CopulaTree { names, edges })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&TreeEdge> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.edges.iter().find(|e| e.i == i && e.j == j)
    }

    /// Replaces the copula on one existing edge.
    pub fn with_edge_copula(&self, i: usize, j: usize, c: BivariateCopula) -> Result<CopulaTree> {
        let mut edges = self.edges.clone();
        let e = edges
            .iter_mut()
            .find(|e| (e.i, e.j) == (i.min(j), i.max(j)))
            .ok_or_else(|| Error::Config(alloc::format!("no edge ({i}, {j}) in the tree")))?;
        e.family = c.family();
        e.theta = c.theta();
        CopulaTree::new(self.names.clone(), edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnMethod {
    Sms,
    Mle,
}

impl LearnMethod {
    pub fn token(self) -> &'static str {
        match self {
            LearnMethod::Sms => "sms",
            LearnMethod::Mle => "mle",
        }
    }
}

impl core::str::FromStr for LearnMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sms" => Ok(LearnMethod::Sms),
            "mle" => Ok(LearnMethod::Mle),
            _ => Err(Error::Config(alloc::format!(
                "unknown method `{s}` (valid: sms, mle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub families: Vec<CopulaFamily>,
    pub method: LearnMethod,
    pub mle_tolerance: f64,
    pub seed: u64,
    /// Re-fit each SMS edge's theta by maximum likelihood within the
    /// selected family.
    pub refine_theta: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            families: CopulaFamily::DEFAULT_SELECTION.to_vec(),
            method: LearnMethod::Sms,
            mle_tolerance: 1e-6,
            seed: 0,
            refine_theta: false,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::Config(String::from("family set is empty")));
        }
        if !(self.mle_tolerance > 0.0 && self.mle_tolerance.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "mle tolerance must be positive, got {}",
                self.mle_tolerance
            )));
        }
        Ok(())
    }

    /// The posterior curves for the configured families, in configured order.
    pub fn pick_curves<'a>(
        &self,
        curves: &'a [CharacteristicCurve],
    ) -> Result<Vec<&'a CharacteristicCurve>> {
        self.families
            .iter()
            .map(|&f| {
                curves
                    .iter()
                    .find(|c| c.family == f && c.prior.is_some())
                    .ok_or_else(|| {
                        Error::Config(alloc::format!("no posterior curve loaded for family {f}"))
                    })
            })
            .collect()
    }
}

/// Family, parameter and interpolated posterior for one edge from its
/// empirical rho alone.
pub fn sms_edge(curves: &[CharacteristicCurve], rho_hat: f64) -> Result<(CopulaFamily, f64, f64)> {
    let rho = rho_hat.clamp(-RHO_CLAMP, RHO_CLAMP);
    if rho.abs() < NEGLIGIBLE_RHO {
        let score = curves
            .iter()
            .find(|c| c.family == CopulaFamily::Gaussian)
            .and_then(|c| c.posterior_at(rho))
            .unwrap_or(0.0);
        return Ok((CopulaFamily::Gaussian, gaussian_theta(rho), score));
    }
    let (family, score) = select_family(curves, rho)?;
    Ok((family, theta_from_rho(family, rho)?, score))
}

/// SMS structure learning: maximum spanning tree of `|rho_hat|`, families
/// from the posterior curves, parameters by matching rho.
pub fn sms_learn(d: &Dataset, curves: &[CharacteristicCurve], cfg: &LearnConfig) -> Result<CopulaTree> {
    cfg.validate()?;
    let picked: Vec<CharacteristicCurve> = cfg.pick_curves(curves)?.into_iter().cloned().collect();
    let rho = pairwise_rho_matrix(d)?;
    let mut tree = sms_tree_from_rho(d.names().to_vec(), &rho, &picked)?;
    if cfg.refine_theta {
        tree = refine_thetas(d, &tree, cfg.mle_tolerance)?;
    }
    Ok(tree)
}

/// The SMS scoring step given a precomputed rho matrix and the curves to
/// choose from.
pub fn sms_tree_from_rho(
    names: Vec<String>,
    rho: &SymmetricMatrix,
    curves: &[CharacteristicCurve],
) -> Result<CopulaTree> {
    let pairs = max_spanning_tree(&rho.map(f64::abs))?;
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let r = rho.get(i, j);
            let (family, theta, score) = sms_edge(curves, r).map_err(|e| e.at_edge(i, j))?;
            Ok(TreeEdge {
                i,
                j,
                family,
                theta,
                rho_hat: r,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CopulaTree::new(names, edges)
}

fn refine_thetas(d: &Dataset, tree: &CopulaTree, tol: f64) -> Result<CopulaTree> {
    let pseudo = pseudo_observations(d)?;
    let edges = tree
        .edges()
        .iter()
        .map(|e| {
            let (theta, _) = mle_edge_fit(&pseudo[e.i], &pseudo[e.j], e.family, tol)
                .map_err(|err| err.at_edge(e.i, e.j))?;
            Ok(TreeEdge { theta, ..*e })
        })
        .collect::<Result<Vec<_>>>()?;
    CopulaTree::new(tree.names().to_vec(), edges)
}

/// Sum of copula log densities over paired pseudo-observations.
pub fn copula_loglik(c: &BivariateCopula, u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| c.ln_density(a, b)).sum()
}

/// Maximum-likelihood parameter of one family for one pair of
/// pseudo-observation columns, and the maximized log-likelihood.
pub fn mle_edge_fit(u: &[f64], v: &[f64], family: CopulaFamily, tol: f64) -> Result<(f64, f64)> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::Data(alloc::format!(
            "pseudo-observation columns of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    if let Some(x) = u.iter().chain(v).find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::UnitDomain { u: *x, v: *x });
    }
    let (lo, hi) = theta_bounds(family)?;
    let objective = |t: f64| match BivariateCopula::new(family, t) {
        Ok(c) => -copula_loglik(&c, u, v),
        Err(_) => f64::INFINITY,
    };
    let best = brent_minimize(objective, lo, hi, tol, MLE_MAX_ITER).map_err(|e| match e {
        Error::Numerical(msg) => Error::Numerical(alloc::format!("{family} fit: {msg}")),
        other => other,
    })?;
    Ok((best.x, -best.fx))
}

/// Best family for one pair: `(family, theta, loglik)`. Ties go to the lower
/// selection rank.
pub fn mle_pair_fit(
    u: &[f64],
    v: &[f64],
    families: &[CopulaFamily],
    tol: f64,
) -> Result<(CopulaFamily, f64, f64)> {
    let mut best: Option<(CopulaFamily, f64, f64)> = None;
    for &f in families {
        let (theta, ll) = mle_edge_fit(u, v, f, tol)?;
        let better = match best {
            None => true,
            Some((bf, _, bll)) => ll > bll || (ll == bll && f.selection_rank() < bf.selection_rank()),
        };
        if better {
            best = Some((f, theta, ll));
        }
    }
    best.ok_or_else(|| Error::Config(String::from("family set is empty")))
}

/// Exact maximum-likelihood learner: every family is fitted on every pair
/// and the tree maximizes the total best-family log-likelihood.
pub fn mle_learn(d: &Dataset, cfg: &LearnConfig) -> Result<CopulaTree> {
    cfg.validate()?;
    let pseudo = pseudo_observations(d)?;
    let n = d.n_vars();
    let mut fits = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let fit = mle_pair_fit(&pseudo[i], &pseudo[j], &cfg.families, cfg.mle_tolerance)
                .map_err(|e| e.at_edge(i, j))?;
            fits.push(fit);
        }
    }
    mle_tree_from_fits(d, &fits)
}

/// Assembles the MLE tree from per-pair fits listed in `(0,1), (0,2), ...,
/// (1,2), ...` order.
pub fn mle_tree_from_fits(d: &Dataset, fits: &[(CopulaFamily, f64, f64)]) -> Result<CopulaTree> {
    let n = d.n_vars();
    if fits.len() != n * (n - 1) / 2 {
        return Err(Error::Config(alloc::format!(
            "{} pair fits for {n} variables",
            fits.len()
        )));
    }
    let pair_index = |i: usize, j: usize| i * n - i * (i + 1) / 2 + (j - i - 1);
    let weights = SymmetricMatrix::from_fn(n, 0.0, |i, j| fits[pair_index(i, j)].2);
    let ranked = ranked_columns(d)?;
    let edges = max_spanning_tree(&weights)?
        .into_iter()
        .map(|(i, j)| {
            let (family, theta, ll) = fits[pair_index(i, j)];
            TreeEdge {
                i,
                j,
                family,
                theta,
                rho_hat: ranked[i].rho(&ranked[j]),
                score: ll,
            }
        })
        .collect();
    CopulaTree::new(d.names().to_vec(), edges)
}

/// Runs the configured learner.
pub fn learn(d: &Dataset, curves: &[CharacteristicCurve], cfg: &LearnConfig) -> Result<CopulaTree> {
    match cfg.method {
        LearnMethod::Sms => sms_learn(d, curves, cfg),
        LearnMethod::Mle => mle_learn(d, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{FamilyPrior, PriorForm};
    use alloc::string::ToString;
    use CopulaFamily::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|k| alloc::format!("v{k}")).collect()
    }

    fn edge(i: usize, j: usize, family: CopulaFamily, theta: f64) -> TreeEdge {
        TreeEdge {
            i,
            j,
            family,
            theta,
            rho_hat: 0.5,
            score: 0.0,
        }
    }

    #[test]
    fn tree_validation() {
        let ok = CopulaTree::new(names(3), alloc::vec![edge(1, 2, Clayton, 1.0), edge(0, 1, Gaussian, 0.2)]).unwrap();
        assert_eq!(ok.pairs(), [(0, 1), (1, 2)]);
        assert!(ok.edge(2, 1).is_some() && ok.edge(0, 2).is_none());
        // reversed orientation, cycle/disconnected, bad theta
        assert!(CopulaTree::new(names(3), alloc::vec![edge(1, 0, Gaussian, 0.2), edge(1, 2, Gaussian, 0.2)]).is_err());
        assert!(CopulaTree::new(names(4), alloc::vec![edge(0, 1, Gaussian, 0.2), edge(2, 3, Gaussian, 0.2), edge(0, 1, Gaussian, 0.1)]).is_err());
        assert!(CopulaTree::new(names(2), alloc::vec![edge(0, 1, Gumbel, 0.5)]).is_err());
        let swapped = ok.with_edge_copula(2, 1, BivariateCopula::new(Gumbel, 2.0).unwrap()).unwrap();
        assert_eq!(swapped.edge(1, 2).unwrap().family, Gumbel);
    }

    #[test]
    fn method_tokens() {
        assert_eq!("sms".parse::<LearnMethod>().unwrap(), LearnMethod::Sms);
        assert_eq!("mle".parse::<LearnMethod>().unwrap().token(), "mle");
        assert!("exact".parse::<LearnMethod>().is_err());
    }

    fn flat_curve(family: CopulaFamily, grid: &[f64], raw: &[f64]) -> CharacteristicCurve {
        CharacteristicCurve::from_raw(family, 0.1, grid.to_vec(), raw.to_vec())
            .unwrap()
            .with_posterior(FamilyPrior::new(family, PriorForm::Flat).unwrap(), alloc::vec![0.0; grid.len()])
            .unwrap()
    }

    #[test]
    fn sms_edges() {
        let g = flat_curve(Gaussian, &[-0.5, 0.0, 0.5], &[0.2, 0.0, 0.2]);
        let c = flat_curve(Clayton, &[0.1, 0.5], &[0.1, 0.4]);
        let curves = [g, c];
        let (f, t, _) = sms_edge(&curves, 0.005).unwrap();
        assert_eq!(f, Gaussian);
        assert!((t - gaussian_theta(0.005)).abs() < 1e-15);
        let (f, t, s) = sms_edge(&curves, 0.3).unwrap();
        assert_eq!(f, Clayton);
        assert!((crate::dependence::rho_from_theta(Clayton, t).unwrap() - 0.3).abs() < 1e-6);
        assert!((s - 0.25).abs() < 1e-12);
        assert_eq!(sms_edge(&curves, -1.0).unwrap().0, Gaussian);

        let cfg = LearnConfig {
            families: alloc::vec![Gaussian, Gumbel],
            ..LearnConfig::default()
        };
        assert!(matches!(cfg.pick_curves(&curves), Err(Error::Config(_))));
        let bad = LearnConfig {
            families: Vec::new(),
            ..LearnConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sms_tree_follows_rho() {
        let g = flat_curve(Gaussian, &[-0.5, 0.0, 0.5], &[0.2, 0.0, 0.2]);
        let mut rho = SymmetricMatrix::filled(3, 1.0);
        rho.set(0, 1, -0.8);
        rho.set(0, 2, 0.1);
        rho.set(1, 2, 0.5);
        let t = sms_tree_from_rho(names(3), &rho, &[g]).unwrap();
        assert_eq!(t.pairs(), [(0, 1), (1, 2)]);
        assert_eq!(t.edge(0, 1).unwrap().rho_hat, -0.8);
        assert!(t.edges().iter().all(|e| e.family == Gaussian));
        assert_eq!(t.names()[2], "v2".to_string());
    }

    #[test]
    fn mle_fit_rejects_bad_input() {
        assert!(mle_edge_fit(&[0.5, 1.0], &[0.5, 0.5], Gaussian, 1e-6).is_err());
        assert!(mle_edge_fit(&[0.5], &[0.5, 0.5], Gaussian, 1e-6).is_err());
    }
}
