//! Joint densities of fitted tree models and model comparison metrics.

use alloc::vec::Vec;

use crate::copula::BivariateCopula;
use crate::error::{Error, Result};
use crate::marginal::EmpiricalMarginal;
use crate::stats::Dataset;
use crate::tree::CopulaTree;

/// A copula tree together with one kernel marginal per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    tree: CopulaTree,
    marginals: Vec<EmpiricalMarginal>,
    copulas: Vec<BivariateCopula>,
}

impl FittedModel {
    pub fn new(tree: CopulaTree, marginals: Vec<EmpiricalMarginal>) -> Result<Self> {
        if marginals.len() != tree.n_vars() {
            return Err(Error::Schema(alloc::format!(
                "{} marginals for a tree over {} variables",
                marginals.len(),
                tree.n_vars()
            )));
        }
        let copulas = tree
            .edges()
            .iter()
            .map(|e| e.copula())
            .collect::<Result<Vec<_>>>()?;
        Ok(FittedModel {
            tree,
            marginals,
            copulas,
        })
    }

    /// Fits kernel marginals to `train`, whose variables must match the tree.
    pub fn fit(tree: CopulaTree, train: &Dataset) -> Result<Self> {
        check_schema(tree.names(), train)?;
        let marginals = fit_marginals(train)?;
        Self::new(tree, marginals)
    }

    pub fn tree(&self) -> &CopulaTree {
        &self.tree
    }

    pub fn marginals(&self) -> &[EmpiricalMarginal] {
        &self.marginals
    }

    /// `sum_edges log c_ij(F_i(x_i), F_j(x_j)) + sum_i log f_i(x_i)`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.marginals.len() {
            return Err(Error::Schema(alloc::format!(
                "point has {} coordinates, model has {} variables",
                x.len(),
                self.marginals.len()
            )));
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(alloc::format!("coordinate {k} is {}", x[k])));
        }
        let u: Vec<f64> = x.iter().zip(&self.marginals).map(|(&v, m)| m.cdf(v)).collect();
        let marginal: f64 = x.iter().zip(&self.marginals).map(|(&v, m)| m.log_pdf(v)).sum();
        Ok(marginal + self.copula_term(|k| u[k]))
    }

    fn copula_term(&self, u: impl Fn(usize) -> f64) -> f64 {
        self.tree
            .edges()
            .iter()
            .zip(&self.copulas)
            .map(|(e, c)| c.ln_density(u(e.i), u(e.j)))
            .sum()
    }

    /// Mean log density over pre-transformed rows.
    pub fn avg_logprob_transformed(&self, t: &TransformedData) -> Result<f64> {
        if t.u.len() != self.marginals.len() {
            return Err(Error::Schema(alloc::format!(
                "transformed data has {} variables, model has {}",
                t.u.len(),
                self.marginals.len()
            )));
        }
        let rows = t.log_marginal.len();
        let total: f64 = (0..rows)
            .map(|r| t.log_marginal[r] + self.copula_term(|k| t.u[k][r]))
            .sum();
        Ok(total / rows as f64)
    }
}

/// Kernel marginals for every column of `d`.
pub fn fit_marginals(d: &Dataset) -> Result<Vec<EmpiricalMarginal>> {
    d.columns()
        .iter()
        .zip(d.names())
        .map(|(c, name)| EmpiricalMarginal::fit_named(c, name))
        .collect()
}

fn check_schema(names: &[alloc::string::String], d: &Dataset) -> Result<()> {
    if names != d.names() {
        return Err(Error::Schema(alloc::format!(
            "model variables [{}] differ from data columns [{}]",
            names.join(", "),
            d.names().join(", ")
        )));
    }
    Ok(())
}

/// Data pushed through a set of marginals: clamped CDF values per variable
/// and the summed marginal log densities per row. Shared by every tree
/// evaluated with the same marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedData {
    pub u: Vec<Vec<f64>>,
    pub log_marginal: Vec<f64>,
}

impl TransformedData {
    pub fn new(marginals: &[EmpiricalMarginal], d: &Dataset) -> Result<Self> {
        if marginals.len() != d.n_vars() {
            return Err(Error::Schema(alloc::format!(
                "{} marginals for {} data columns",
                marginals.len(),
                d.n_vars()
            )));
        }
        let u = marginals
            .iter()
            .zip(d.columns())
            .map(|(m, c)| c.iter().map(|&x| m.cdf(x)).collect())
            .collect();
        let mut log_marginal = alloc::vec![0.0; d.n_samples()];
        for (m, c) in marginals.iter().zip(d.columns()) {
            for (acc, &x) in log_marginal.iter_mut().zip(c) {
                *acc += m.log_pdf(x);
            }
        }
        Ok(TransformedData { u, log_marginal })
    }
}

/// Average log density per test row.
pub fn avg_test_logprob(m: &FittedModel, test: &Dataset) -> Result<f64> {
    check_schema(m.tree().names(), test)?;
    m.avg_logprob_transformed(&TransformedData::new(m.marginals(), test)?)
}

fn check_same_variables(a: &CopulaTree, b: &CopulaTree) -> Result<()> {
    if a.names() != b.names() {
        return Err(Error::Config(alloc::format!(
            "trees are over different variables ([{}] vs [{}])",
            a.names().join(", "),
            b.names().join(", ")
        )));
    }
    Ok(())
}

/// Fraction of the `n - 1` edges present in both trees.
pub fn edge_overlap(a: &CopulaTree, b: &CopulaTree) -> Result<f64> {
    check_same_variables(a, b)?;
    let common = a.edges().iter().filter(|e| b.edge(e.i, e.j).is_some()).count();
    Ok(common as f64 / (a.n_vars() - 1) as f64)
}

/// Among edges present in both trees, the fraction with the same family.
pub fn family_agreement(a: &CopulaTree, b: &CopulaTree) -> Result<f64> {
    check_same_variables(a, b)?;
    let (mut common, mut agree) = (0usize, 0usize);
    for e in a.edges() {
        if let Some(f) = b.edge(e.i, e.j) {
            common += 1;
            agree += usize::from(f.family == e.family);
        }
    }
    if common == 0 {
        return Err(Error::UndefinedMetric("family agreement of trees without common edges"));
    }
    Ok(agree as f64 / common as f64)
}
