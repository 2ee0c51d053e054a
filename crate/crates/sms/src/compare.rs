//! Timed learning and repeated random-split comparison of SMS against the
//! exact learner.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sms_core::curves::select_family;
use sms_core::eval::{edge_overlap, family_agreement, fit_marginals, TransformedData};
use sms_core::mst::max_spanning_tree;
use sms_core::stats::{pseudo_observations, SymmetricMatrix};
use sms_core::tree::{mle_tree_from_fits, LearnMethod, NEGLIGIBLE_RHO, RHO_CLAMP};
use sms_core::{CharacteristicCurve, CopulaFamily, CopulaTree, Dataset, FittedModel, LearnConfig};

use crate::data::write_comments;
use crate::error::{Error, Result};
use crate::parallel::{par_mle_fits, par_rho_matrix, par_sms_learn};

/// A learned tree and the wall time of its scoring phase: the rho matrix,
/// spanning tree and family selection for SMS; all pairwise fits and the
/// spanning tree for the exact learner. Parameter annotation and I/O are
/// not timed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub tree: CopulaTree,
    pub scoring_seconds: f64,
    pub candidate_pairs: usize,
}

pub fn learn_timed(d: &Dataset, curves: &[CharacteristicCurve], cfg: &LearnConfig) -> Result<Scored> {
    cfg.validate()?;
    let n = d.n_vars();
    let candidate_pairs = n * (n - 1) / 2;
    match cfg.method {
        LearnMethod::Sms => {
            let picked: Vec<CharacteristicCurve> = cfg.pick_curves(curves)?.into_iter().cloned().collect();
            let start = Instant::now();
            let rho = par_rho_matrix(d)?;
            let pairs = max_spanning_tree(&rho.map(f64::abs))?;
            for &(i, j) in &pairs {
                let r = rho.get(i, j).clamp(-RHO_CLAMP, RHO_CLAMP);
                if r.abs() >= NEGLIGIBLE_RHO {
                    select_family(&picked, r).map_err(|e| sms_core::Error::Edge { i, j, source: Box::new(e) })?;
                }
            }
            let scoring_seconds = start.elapsed().as_secs_f64();
            // Annotation repeats the cheap selection step and adds theta.
            let tree = par_sms_learn(d, curves, cfg)?;
            Ok(Scored { tree, scoring_seconds, candidate_pairs })
        }
        LearnMethod::Mle => {
            let pseudo = pseudo_observations(d)?;
            let start = Instant::now();
            let fits = par_mle_fits(&pseudo, &cfg.families, cfg.mle_tolerance)?;
            let mut k = 0;
            let weights = SymmetricMatrix::from_fn(n, 0.0, |_, _| {
                k += 1;
                fits[k - 1].2
            });
            max_spanning_tree(&weights)?;
            let scoring_seconds = start.elapsed().as_secs_f64();
            let tree = mle_tree_from_fits(d, &fits)?;
            Ok(Scored { tree, scoring_seconds, candidate_pairs })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub method: LearnMethod,
    pub seconds: f64,
    /// Scoring time divided by the number of candidate pairs.
    pub per_edge_seconds: f64,
    pub edges: usize,
}

pub fn learn_timing(d: &Dataset, curves: &[CharacteristicCurve], cfg: &LearnConfig) -> Result<Timing> {
    let s = learn_timed(d, curves, cfg)?;
    Ok(Timing {
        method: cfg.method,
        seconds: s.scoring_seconds,
        per_edge_seconds: s.scoring_seconds / s.candidate_pairs as f64,
        edges: s.tree.edges().len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    AvgLogprob,
    OverlapVsMle,
    FamilyAgreementVsMle,
    ScoringSeconds,
}

impl Metric {
    pub fn token(self) -> &'static str {
        match self {
            Metric::AvgLogprob => "avg_logprob",
            Metric::OverlapVsMle => "overlap_vs_mle",
            Metric::FamilyAgreementVsMle => "family_agreement_vs_mle",
            Metric::ScoringSeconds => "scoring_seconds",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub split: usize,
    pub method: &'static str,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalConfig {
    pub splits: usize,
    pub seed: u64,
    /// Families and tolerances shared by both learners.
    pub learn: LearnConfig,
    /// Also score a Gaussian-only SMS model as method `gaussian`.
    pub gaussian_baseline: bool,
}

/// Train and test row indices of one random equal split. Train gets
/// `floor(M / 2)` rows.
pub fn split_indices(m: usize, split: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(split as u64);
    let mut rows: Vec<usize> = (0..m).collect();
    rows.shuffle(&mut rng);
    let test = rows.split_off(m / 2);
    (rows, test)
}

/// Per split: learns SMS and exact trees on the train half and reports
/// held-out log probability, agreement with the exact tree and scoring time.
/// Rows come out ordered by split, then method.
pub fn crossval_report(d: &Dataset, curves: &[CharacteristicCurve], cfg: &CrossvalConfig) -> Result<Vec<ReportRow>> {
    if cfg.splits < 2 {
        return Err(Error::Config(format!("need at least 2 splits, got {}", cfg.splits)));
    }
    cfg.learn.validate()?;
    let per_split = (0..cfg.splits)
        .into_par_iter()
        .map(|s| one_split(d, curves, cfg, s).map_err(|e| Error::Split { split: s, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_split.into_iter().flatten().collect())
}

fn one_split(d: &Dataset, curves: &[CharacteristicCurve], cfg: &CrossvalConfig, s: usize) -> Result<Vec<ReportRow>> {
    let (train_rows, test_rows) = split_indices(d.n_samples(), s, cfg.seed);
    let train = d.select_rows(&train_rows)?;
    let test = d.select_rows(&test_rows)?;
    let marginals = fit_marginals(&train)?;
    let transformed = TransformedData::new(&marginals, &test)?;
    let score = |tree: &CopulaTree| -> Result<f64> {
        let m = FittedModel::new(tree.clone(), marginals.clone())?;
        Ok(m.avg_logprob_transformed(&transformed)?)
    };

    let sms_cfg = LearnConfig { method: LearnMethod::Sms, ..cfg.learn.clone() };
    let mle = learn_timed(&train, curves, &LearnConfig { method: LearnMethod::Mle, ..cfg.learn.clone() })?;
    let mut methods = vec![("sms", learn_timed(&train, curves, &sms_cfg)?)];
    if cfg.gaussian_baseline {
        let g = LearnConfig { families: vec![CopulaFamily::Gaussian], ..sms_cfg };
        methods.push(("gaussian", learn_timed(&train, curves, &g)?));
    }

    let mut rows = Vec::new();
    let mut push = |method, metric, value| rows.push(ReportRow { split: s, method, metric, value });
    for (name, scored) in &methods {
        push(*name, Metric::AvgLogprob, score(&scored.tree)?);
        push(*name, Metric::OverlapVsMle, edge_overlap(&scored.tree, &mle.tree)?);
        // No common edge leaves agreement undefined; recorded as NaN.
        let agree = family_agreement(&scored.tree, &mle.tree).unwrap_or(f64::NAN);
        push(*name, Metric::FamilyAgreementVsMle, agree);
        push(*name, Metric::ScoringSeconds, scored.scoring_seconds);
    }
    push("mle", Metric::AvgLogprob, score(&mle.tree)?);
    push("mle", Metric::ScoringSeconds, mle.scoring_seconds);
    Ok(rows)
}

pub fn write_report(w: &mut impl Write, rows: &[ReportRow], comments: &[String]) -> std::io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "split,method,metric,value")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.17e}", r.split, r.method, r.metric, r.value)?;
    }
    Ok(())
}

/// Mean of `metric` for `method` over splits, skipping NaN entries.
pub fn metric_mean(rows: &[ReportRow], method: &str, metric: Metric) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && r.metric == metric && !r.value.is_nan())
        .map(|r| r.value)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
