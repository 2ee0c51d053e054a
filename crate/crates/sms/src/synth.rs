//! Synthetic datasets drawn from a ground-truth tree.

use std::str::FromStr;

use sms_core::math::normal_quantile;
use sms_core::synth::sample_tree;
use sms_core::{CopulaTree, Dataset};

use crate::error::{Error, Result};

/// Marginal scale of generated columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Margins {
    /// The copula scale itself, values in (0, 1).
    #[default]
    Uniform,
    /// Standard normal margins.
    Normal,
}

impl FromStr for Margins {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Margins::Uniform),
            "normal" => Ok(Margins::Normal),
            _ => Err(Error::Config(format!("unknown margins `{s}` (valid: uniform, normal)"))),
        }
    }
}

/// Stream used for sampling, kept apart from the one that drew the tree.
pub fn sample_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// `rows` draws from `truth`, columns named after its variables.
pub fn synthesize(truth: &CopulaTree, rows: usize, seed: u64, margins: Margins) -> Result<Dataset> {
    if rows < 2 {
        return Err(Error::Config(format!("need at least 2 rows, got {rows}")));
    }
    let mut cols = sample_tree(truth, rows, sample_seed(seed))?;
    if margins == Margins::Normal {
        for c in &mut cols {
            c.iter_mut().for_each(|u| *u = normal_quantile(*u));
        }
    }
    Ok(Dataset::from_columns(truth.names().to_vec(), cols)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sms_core::synth::random_mixed_tree;
    use sms_core::CopulaFamily;

    #[test]
    fn shapes_and_margins() {
        let t = random_mixed_tree(4, &CopulaFamily::DEFAULT_SELECTION, 0.3, 0.8, 5).unwrap();
        let u = synthesize(&t, 300, 5, Margins::Uniform).unwrap();
        let z = synthesize(&t, 300, 5, Margins::Normal).unwrap();
        assert_eq!((u.n_vars(), u.n_samples()), (4, 300));
        assert!(u.columns().iter().flatten().all(|&x| x > 0.0 && x < 1.0));
        assert!(z.columns().iter().flatten().any(|&x| x < 0.0));
        let back = normal_quantile(u.column(2)[17]);
        assert_eq!(back, z.column(2)[17]);
        assert!("cauchy".parse::<Margins>().is_err());
    }
}
