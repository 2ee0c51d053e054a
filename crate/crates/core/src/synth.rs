//! Ground-truth trees and sampling from tree models.

use alloc::string::String;
use alloc::vec::Vec;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dependence::theta_from_rho;
use crate::error::{Error, Result};
use crate::family::CopulaFamily;
use crate::tree::{CopulaTree, TreeEdge};

/// Random tree on `n` variables named `x0, x1, ...`: node `k` attaches to a
/// uniformly chosen earlier node, each edge draws its family uniformly from
/// `families` and its rho uniformly from `[rho_lo, rho_hi]`.
pub fn random_mixed_tree(
    n: usize,
    families: &[CopulaFamily],
    rho_lo: f64,
    rho_hi: f64,
    seed: u64,
) -> Result<CopulaTree> {
    if n < 2 || families.is_empty() || !(rho_lo <= rho_hi) {
        return Err(Error::Config(alloc::format!(
            "random tree needs n >= 2 and a family set; got n = {n}, rho in [{rho_lo}, {rho_hi}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n - 1);
    for k in 1..n {
        let parent = rng.gen_range(0..k);
        let family = families[rng.gen_range(0..families.len())];
        let rho = rho_lo + (rho_hi - rho_lo) * rng.gen::<f64>();
        let theta = theta_from_rho(family, rho).map_err(|e| e.at_edge(parent, k))?;
        edges.push(TreeEdge {
            i: parent,
            j: k,
            family,
            theta,
            rho_hat: rho,
            score: 0.0,
        });
    }
    let names: Vec<String> = (0..n).map(|k| alloc::format!("x{k}")).collect();
    CopulaTree::new(names, edges)
}

/// `m` joint draws of the copula-scale variables, as one column per
/// variable.
///
/// Variable 0 is drawn uniformly; every other variable is drawn from the
/// conditional distribution given its already-sampled neighbour, walking the
/// tree outward from the root.
pub fn sample_tree(tree: &CopulaTree, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = tree.n_vars();
    let mut adjacency: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); n];
    for (k, e) in tree.edges().iter().enumerate() {
        adjacency[e.i].push((e.j, k));
        adjacency[e.j].push((e.i, k));
    }
    // Breadth-first order from the root; each entry is (node, parent, edge).
    let mut order: Vec<(usize, usize, usize)> = Vec::with_capacity(n - 1);
    let mut seen = alloc::vec![false; n];
    seen[0] = true;
    let mut head = 0;
    let mut frontier = alloc::vec![0usize];
    while head < frontier.len() {
        let p = frontier[head];
        head += 1;
        for &(c, k) in &adjacency[p] {
            if !seen[c] {
                seen[c] = true;
                order.push((c, p, k));
                frontier.push(c);
            }
        }
    }
    let copulas = tree
        .edges()
        .iter()
        .map(|e| e.copula())
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = alloc::vec![alloc::vec![0.0; m]; n];
    #[allow(clippy::needless_range_loop)]
    for r in 0..m {
        columns[0][r] = rng.sample(Open01);
        for &(c, p, k) in &order {
            let q: f64 = rng.sample(Open01);
            // Every supported family is exchangeable, so the conditional
            // law of either endpoint given the other is the same.
            let x = copulas[k].conditional_quantile(columns[p][r], q);
            columns[c][r] = x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        }
    }
    Ok(columns)
}
