use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Assignment of N rows to k folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index of each row.
    pub assignments: Vec<usize>,
}

/// Seeded shuffle followed by contiguous chunking; the first `n mod k`
/// folds get one extra row.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k-fold needs 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let perm = rng::permutation(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut assignments = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &row in &perm[pos..pos + size] {
            assignments[row] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan { k, seed, assignments })
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignments[i] == fold).collect()
    }

    /// `(train, test)` row indices for `fold`, each ascending.
    pub fn split_indices(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.n()).partition(|&i| self.assignments[i] != fold)
    }
}
