//! Runs the property checks over default grids and writes their CSV.

use std::io::Write;

use rayon::prelude::*;

use sms_core::family::Positivity;
use sms_core::verify::{
    default_chain_pairs, default_pqd_pairs, default_theta_grid, default_tp2_thetas, monotonicity_check,
    pqd_check, proof_chain_check, tp2_check, Check, VerificationReport, TP2_GRID,
};
use sms_core::{CopulaFamily, Resolution};

use crate::data::write_comments;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub families: Vec<CopulaFamily>,
    /// Parameters for the TP2 check; default grids when empty.
    pub tp2_thetas: Vec<f64>,
    pub grid_n: usize,
    pub resolution: Resolution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            families: CopulaFamily::ALL.to_vec(),
            tp2_thetas: Vec::new(),
            grid_n: TP2_GRID,
            resolution: Resolution::default(),
        }
    }
}

/// One CSV row: a finished check, or a check that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub family: CopulaFamily,
    pub check: Check,
    pub theta1: f64,
    pub theta2: f64,
    pub outcome: Result<VerificationReport, String>,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.passed)
    }

    /// `pass` / `fail` / `error`; TP2 rows append the detected class
    /// (`pass:rr2`, `fail:neither`, ...).
    pub fn verdict(&self) -> String {
        match &self.outcome {
            Err(_) => "error".into(),
            Ok(r) => {
                let base = if r.passed { "pass" } else { "fail" };
                if r.check != Check::Tp2 {
                    return base.into();
                }
                let class = match r.detected {
                    Some(Positivity::Tp2) => "tp2",
                    Some(Positivity::Rr2) => "rr2",
                    None => "neither",
                };
                format!("{base}:{class}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Pqd(CopulaFamily, f64, f64),
    Tp2(CopulaFamily, f64),
    Monotonicity(CopulaFamily),
    Chain(CopulaFamily, f64, f64),
}

fn jobs(cfg: &VerifyConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &f in &cfg.families {
        out.extend(default_pqd_pairs(f).into_iter().map(|(a, b)| Job::Pqd(f, a, b)));
        let thetas = if cfg.tp2_thetas.is_empty() { default_tp2_thetas(f) } else { cfg.tp2_thetas.clone() };
        out.extend(thetas.into_iter().map(|t| Job::Tp2(f, t)));
        out.push(Job::Monotonicity(f));
        out.extend(default_chain_pairs(f).into_iter().map(|(a, b)| Job::Chain(f, a, b)));
    }
    out
}

fn run(job: Job, cfg: &VerifyConfig) -> VerifyRow {
    let res = cfg.resolution;
    let (family, check, theta1, theta2, outcome) = match job {
        Job::Pqd(f, a, b) => (f, Check::Pqd, a, b, pqd_check(f, a, b, cfg.grid_n)),
        Job::Tp2(f, t) => (f, Check::Tp2, t, f64::NAN, tp2_check(f, t, cfg.grid_n)),
        Job::Monotonicity(f) => {
            let g = default_theta_grid(f);
            let (lo, hi) = (g[0], g[g.len() - 1]);
            (f, Check::Monotonicity, lo, hi, monotonicity_check(f, &g, res))
        }
        Job::Chain(f, a, b) => (f, Check::ProofChain, a, b, proof_chain_check(f, a, b, res)),
    };
    VerifyRow { family, check, theta1, theta2, outcome: outcome.map_err(|e| e.to_string()) }
}

/// Every check for every configured family; rows in job order.
pub fn run_verifier(cfg: &VerifyConfig) -> Vec<VerifyRow> {
    jobs(cfg).into_par_iter().map(|j| run(j, cfg)).collect()
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn write_verify_csv(w: &mut impl Write, rows: &[VerifyRow], comments: &[String]) -> std::io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "family,check,theta1,theta2,verdict,worst_violation,u,v")?;
    for r in rows {
        let (worst, u, v) = match &r.outcome {
            Ok(rep) => {
                let loc = rep.location.map_or((f64::NAN, f64::NAN), |l| (l.u, l.v));
                (rep.worst_violation, loc.0, loc.1)
            }
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.check,
            num(r.theta1),
            num(r.theta2),
            r.verdict(),
            num(worst),
            num(u),
            num(v)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amh_negative_theta_row() {
        let cfg = VerifyConfig { families: vec![CopulaFamily::Amh], tp2_thetas: vec![-0.5], ..VerifyConfig::default() };
        let rows = run_verifier(&cfg);
        let tp2: Vec<&VerifyRow> = rows.iter().filter(|r| r.check == Check::Tp2).collect();
        assert_eq!(tp2.len(), 1);
        assert_eq!(tp2[0].verdict(), "pass:rr2");
        assert!(rows.iter().all(VerifyRow::passed));
        let mut buf = Vec::new();
        write_verify_csv(&mut buf, &rows, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\namh,tp2,-0.5,,pass:rr2,0,"), "{text}");
    }

    #[test]
    fn errors_become_rows() {
        let cfg = VerifyConfig { families: vec![CopulaFamily::Clayton], tp2_thetas: vec![-1.0], ..VerifyConfig::default() };
        let rows = run_verifier(&cfg);
        let bad = rows.iter().find(|r| r.check == Check::Tp2).unwrap();
        assert_eq!(bad.verdict(), "error");
        assert!(!bad.passed());
    }
}
