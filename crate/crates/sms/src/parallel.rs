//! Rayon drivers for the pairwise and per-grid-point work. Every driver
//! collects results in input order, so output does not depend on the
//! schedule or the thread count.

use rayon::prelude::*;

use sms_core::curves::{prior_log_densities, raw_curve_point, rho_grid};
use sms_core::mst::max_spanning_tree;
use sms_core::quadrature::Resolution;
use sms_core::stats::{pseudo_observations, RankedColumn, SymmetricMatrix};
use sms_core::tree::{mle_edge_fit, mle_pair_fit, mle_tree_from_fits, sms_edge, LearnMethod};
use sms_core::{CharacteristicCurve, CopulaFamily, CopulaTree, Dataset, FamilyPrior, LearnConfig, TreeEdge};

use crate::error::{Error, Result};

/// A pool with `threads` workers, or one per available core.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    if threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

fn edge_err(i: usize, j: usize, e: sms_core::Error) -> sms_core::Error {
    sms_core::Error::Edge { i, j, source: Box::new(e) }
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

pub fn par_ranked_columns(d: &Dataset) -> Result<Vec<RankedColumn>> {
    Ok(d.columns()
        .par_iter()
        .zip(d.names())
        .map(|(c, name)| RankedColumn::new(c, name))
        .collect::<sms_core::Result<Vec<_>>>()?)
}

/// Same values as `stats::pairwise_rho_matrix`, bit for bit.
pub fn par_rho_matrix(d: &Dataset) -> Result<SymmetricMatrix> {
    let ranked = par_ranked_columns(d)?;
    let pairs = upper_pairs(d.n_vars());
    let values: Vec<f64> = pairs.par_iter().map(|&(i, j)| ranked[i].rho(&ranked[j])).collect();
    let mut m = SymmetricMatrix::filled(d.n_vars(), 1.0);
    for (&(i, j), v) in pairs.iter().zip(values) {
        m.set(i, j, v);
    }
    Ok(m)
}

/// Raw and posterior curves, one task per grid point.
pub fn par_build_curves(
    priors: &[FamilyPrior],
    step: f64,
    res: Resolution,
) -> Result<Vec<CharacteristicCurve>> {
    let grids = priors
        .iter()
        .map(|p| rho_grid(p.family(), step))
        .collect::<sms_core::Result<Vec<_>>>()?;
    let jobs: Vec<(usize, f64)> = grids
        .iter()
        .enumerate()
        .flat_map(|(k, g)| g.iter().map(move |&r| (k, r)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(k, r)| raw_curve_point(priors[k].family(), r, res))
        .collect::<sms_core::Result<Vec<f64>>>()?;
    let mut values = values.into_iter();
    priors
        .iter()
        .zip(grids)
        .map(|(p, g)| {
            let raw: Vec<f64> = values.by_ref().take(g.len()).collect();
            let curve = CharacteristicCurve::from_raw(p.family(), step, g, raw)?;
            let log_prior = prior_log_densities(&curve, p)?;
            Ok(curve.with_posterior(*p, log_prior)?)
        })
        .collect()
}

/// The SMS learner with the rho matrix and edge annotation spread over the
/// pool.
pub fn par_sms_learn(d: &Dataset, curves: &[CharacteristicCurve], cfg: &LearnConfig) -> Result<CopulaTree> {
    cfg.validate()?;
    let picked: Vec<CharacteristicCurve> = cfg.pick_curves(curves)?.into_iter().cloned().collect();
    let rho = par_rho_matrix(d)?;
    let pairs = max_spanning_tree(&rho.map(f64::abs))?;
    let pseudo = if cfg.refine_theta { Some(pseudo_observations(d)?) } else { None };
    let edges = pairs
        .par_iter()
        .map(|&(i, j)| {
            let r = rho.get(i, j);
            let (family, mut theta, score) = sms_edge(&picked, r).map_err(|e| edge_err(i, j, e))?;
            if let Some(p) = &pseudo {
                theta = mle_edge_fit(&p[i], &p[j], family, cfg.mle_tolerance)
                    .map_err(|e| edge_err(i, j, e))?
                    .0;
            }
            Ok(TreeEdge { i, j, family, theta, rho_hat: r, score })
        })
        .collect::<sms_core::Result<Vec<_>>>()?;
    Ok(CopulaTree::new(d.names().to_vec(), edges)?)
}

/// Best-family fits for every pair, in `(0,1), (0,2), ...` order.
pub fn par_mle_fits(
    pseudo: &[Vec<f64>],
    families: &[CopulaFamily],
    tol: f64,
) -> Result<Vec<(CopulaFamily, f64, f64)>> {
    Ok(upper_pairs(pseudo.len())
        .par_iter()
        .map(|&(i, j)| mle_pair_fit(&pseudo[i], &pseudo[j], families, tol).map_err(|e| edge_err(i, j, e)))
        .collect::<sms_core::Result<Vec<_>>>()?)
}

pub fn par_mle_learn(d: &Dataset, cfg: &LearnConfig) -> Result<CopulaTree> {
    cfg.validate()?;
    let pseudo = pseudo_observations(d)?;
    let fits = par_mle_fits(&pseudo, &cfg.families, cfg.mle_tolerance)?;
    Ok(mle_tree_from_fits(d, &fits)?)
}

pub fn par_learn(d: &Dataset, curves: &[CharacteristicCurve], cfg: &LearnConfig) -> Result<CopulaTree> {
    match cfg.method {
        LearnMethod::Sms => par_sms_learn(d, curves, cfg),
        LearnMethod::Mle => par_mle_learn(d, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sms_core::stats::pairwise_rho_matrix;
    use sms_core::synth::{random_mixed_tree, sample_tree};
    use sms_core::tree::{mle_learn, sms_learn};

    fn data() -> Dataset {
        let t = random_mixed_tree(6, &CopulaFamily::DEFAULT_SELECTION, 0.3, 0.8, 4).unwrap();
        Dataset::from_columns(t.names().to_vec(), sample_tree(&t, 400, 5).unwrap()).unwrap()
    }

    #[test]
    fn matches_sequential_learners() {
        let d = data();
        let priors: Vec<FamilyPrior> = CopulaFamily::DEFAULT_SELECTION.iter().map(|&f| FamilyPrior::default_for(f)).collect();
        let curves = par_build_curves(&priors, 0.1, Resolution::default()).unwrap();
        let seq = sms_core::curves::build_default_curves(&CopulaFamily::DEFAULT_SELECTION, 0.1, Resolution::default()).unwrap();
        assert_eq!(curves, seq);
        for threads in [1, 3] {
            let pool = thread_pool(Some(threads)).unwrap();
            pool.install(|| {
                assert_eq!(par_rho_matrix(&d).unwrap(), pairwise_rho_matrix(&d).unwrap());
                let cfg = LearnConfig::default();
                assert_eq!(par_sms_learn(&d, &curves, &cfg).unwrap(), sms_learn(&d, &curves, &cfg).unwrap());
                let refine = LearnConfig { refine_theta: true, ..LearnConfig::default() };
                assert_eq!(par_sms_learn(&d, &curves, &refine).unwrap(), sms_learn(&d, &curves, &refine).unwrap());
                let mle = LearnConfig { method: LearnMethod::Mle, ..LearnConfig::default() };
                assert_eq!(par_learn(&d, &curves, &mle).unwrap(), mle_learn(&d, &mle).unwrap());
            });
        }
        assert!(thread_pool(Some(0)).is_err());
    }
}
