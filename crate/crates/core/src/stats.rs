//! Datasets and rank statistics.

use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;

use crate::error::{Error, Result};

/// Column-named matrix of `M` samples over `n` real variables.
///
/// Values are stored column-major since every consumer works per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    /// Requires `n >= 2`, `M >= 3`, equal column lengths and finite values.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Data(alloc::format!(
                "{} variable names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if names.len() < 2 {
            return Err(Error::Data(alloc::format!(
                "need at least 2 variables, got {}",
                names.len()
            )));
        }
        let m = columns[0].len();
        if m < 3 {
            return Err(Error::Data(alloc::format!("need at least 3 samples, got {m}")));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != m {
                return Err(Error::Data(alloc::format!(
                    "column `{}` has {} values, expected {m}",
                    names[j],
                    col.len()
                )));
            }
            if let Some(r) = col.iter().position(|x| !x.is_finite()) {
                return Err(Error::Data(alloc::format!(
                    "non-finite value {} in column `{}`, sample {r}",
                    col[r],
                    names[j]
                )));
            }
        }
        for (j, a) in names.iter().enumerate() {
            if names[..j].contains(a) {
                return Err(Error::Data(alloc::format!("duplicate variable name `{a}`")));
            }
        }
        Ok(Dataset { names, columns })
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = names.len();
        let mut columns = alloc::vec![Vec::with_capacity(rows.len()); n];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Data(alloc::format!(
                    "sample {r} has {} values, expected {n}",
                    row.len()
                )));
            }
            for (col, &x) in columns.iter_mut().zip(row) {
                col.push(x);
            }
        }
        Self::from_columns(names, columns)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn n_samples(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, m: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[m]).collect()
    }

    /// Dataset restricted to the given sample indices, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Dataset::from_columns(self.names.clone(), columns)
    }

    /// Dataset with columns reordered as `order[k]` -> position `k`.
    pub fn select_columns(&self, order: &[usize]) -> Result<Dataset> {
        Dataset::from_columns(
            order.iter().map(|&j| self.names[j].clone()).collect(),
            order.iter().map(|&j| self.columns[j].clone()).collect(),
        )
    }
}

/// Ranks `1..=M`, ties sharing the average of their positions.
pub fn average_ranks(x: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(alloc::format!("non-finite value {} at position {i}", x[i])));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = alloc::vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let r = 0.5 * ((start + 1 + end) as f64);
        for &k in &order[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    Ok(ranks)
}

/// Centered ranks of a column plus their sum of squares, ready for repeated
/// correlation with other columns.
#[derive(Debug, Clone)]
pub struct RankedColumn {
    centered: Vec<f64>,
    norm2: f64,
}

impl RankedColumn {
    pub fn new(x: &[f64], name: &str) -> Result<Self> {
        let ranks = average_ranks(x)?;
        let mean = 0.5 * (x.len() as f64 + 1.0);
        let centered: Vec<f64> = ranks.iter().map(|r| r - mean).collect();
        let norm2: f64 = centered.iter().map(|c| c * c).sum();
        if norm2 == 0.0 {
            return Err(Error::DegenerateVariance {
                variable: String::from(name),
            });
        }
        Ok(RankedColumn { centered, norm2 })
    }

    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    /// Pearson correlation of the two rank vectors.
    pub fn rho(&self, other: &RankedColumn) -> f64 {
        let sxy: f64 = self
            .centered
            .iter()
            .zip(&other.centered)
            .map(|(a, b)| a * b)
            .sum();
        (sxy / sqrt(self.norm2 * other.norm2)).clamp(-1.0, 1.0)
    }
}

/// Spearman's rank correlation with average ranks for ties.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Data(alloc::format!(
            "columns differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Data(alloc::format!("need at least 3 samples, got {}", x.len())));
    }
    Ok(RankedColumn::new(x, "x")?.rho(&RankedColumn::new(y, "y")?))
}

/// Dense symmetric `n x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        SymmetricMatrix {
            n,
            data: alloc::vec![value; n * n],
        }
    }

    pub fn from_fn(n: usize, diag: f64, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::filled(n, diag);
        for i in 0..n {
            for j in (i + 1)..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        SymmetricMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

pub fn ranked_columns(d: &Dataset) -> Result<Vec<RankedColumn>> {
    d.columns()
        .iter()
        .zip(d.names())
        .map(|(c, name)| RankedColumn::new(c, name))
        .collect()
}

/// Spearman correlation of every pair of variables; unit diagonal.
pub fn pairwise_rho_matrix(d: &Dataset) -> Result<SymmetricMatrix> {
    let ranked = ranked_columns(d)?;
    Ok(SymmetricMatrix::from_fn(d.n_vars(), 1.0, |i, j| ranked[i].rho(&ranked[j])))
}

/// Column-wise `rank / (M + 1)`, all strictly inside (0, 1).
pub fn pseudo_observations(d: &Dataset) -> Result<Vec<Vec<f64>>> {
    let scale = 1.0 / (d.n_samples() as f64 + 1.0);
    d.columns()
        .iter()
        .map(|c| Ok(average_ranks(c)?.into_iter().map(|r| r * scale).collect()))
        .collect()
}
