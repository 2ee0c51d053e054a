//! Maximum spanning trees.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::SymmetricMatrix;

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: alloc::vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            core::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Kruskal's algorithm on the upper triangle of `weights`.
///
/// Equal weights are taken in lexicographic `(i, j)` order, so the result is
/// fully determined by the matrix. Edges come back with `i < j`, in the order
/// they were accepted.
pub fn max_spanning_tree(weights: &SymmetricMatrix) -> Result<Vec<(usize, usize)>> {
    let n = weights.n();
    if n < 2 {
        return Err(Error::Data(alloc::format!("spanning tree needs at least 2 nodes, got {n}")));
    }
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = weights.get(i, j);
            if !w.is_finite() {
                return Err(Error::Data(alloc::format!("edge weight ({i}, {j}) is {w}")));
            }
            candidates.push((w, i, j));
        }
    }
    // Stable sort keeps the lexicographic order among ties.
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut sets = DisjointSets::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for (_, i, j) in candidates {
        if sets.union(i, j) {
            edges.push((i, j));
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(edges)
}

/// True if `edges` (with `i < j`) form a spanning tree on `n` nodes.
pub fn is_spanning_tree(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 || edges.len() != n - 1 {
        return false;
    }
    let mut sets = DisjointSets::new(n);
    edges
        .iter()
        .all(|&(i, j)| i < j && j < n && sets.union(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(n: usize, w: &[(usize, usize, f64)]) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::filled(n, 0.0);
        for &(i, j, x) in w {
            m.set(i, j, x);
        }
        m
    }

    #[test]
    fn three_nodes() {
        let m = matrix(3, &[(0, 1, 0.8), (0, 2, 0.5), (1, 2, 0.3)]);
        let mut e = max_spanning_tree(&m).unwrap();
        e.sort();
        assert_eq!(e, [(0, 1), (0, 2)]);
    }

    #[test]
    fn two_nodes_and_ties() {
        assert_eq!(max_spanning_tree(&matrix(2, &[(0, 1, 0.1)])).unwrap(), [(0, 1)]);
        let flat = SymmetricMatrix::filled(4, 0.5);
        assert_eq!(max_spanning_tree(&flat).unwrap(), [(0, 1), (0, 2), (0, 3)]);
        assert!(max_spanning_tree(&SymmetricMatrix::filled(1, 0.0)).is_err());
        assert!(max_spanning_tree(&matrix(3, &[(0, 2, f64::NAN)])).is_err());
    }

    fn brute_force_best(n: usize, m: &SymmetricMatrix) -> f64 {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << pairs.len()) {
            if mask.count_ones() as usize != n - 1 {
                continue;
            }
            let e: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &p)| p)
                .collect();
            if is_spanning_tree(n, &e) {
                best = best.max(e.iter().map(|&(i, j)| m.get(i, j)).sum());
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 2usize..6, w in proptest::collection::vec(-1.0..1.0f64, 10)) {
            let mut m = SymmetricMatrix::filled(n, 1.0);
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    m.set(i, j, w[k]);
                    k += 1;
                }
            }
            let e = max_spanning_tree(&m).unwrap();
            prop_assert!(is_spanning_tree(n, &e));
            let total: f64 = e.iter().map(|&(i, j)| m.get(i, j)).sum();
            prop_assert!((total - brute_force_best(n, &m)).abs() < 1e-12);
        }
    }
}
