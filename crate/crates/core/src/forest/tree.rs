//! Greedy CART regression trees with squared-error splits.
//!
//! Candidate thresholds are midpoints between consecutive distinct values
//! of a feature among the node's samples. A sample goes left when
//! `x[feature] <= threshold`. Among splits whose child squared error is
//! within [`TIE_TOLERANCE`] (relative to the node's squared error) of the
//! best, the lowest feature index and then the lowest threshold wins. A node
//! becomes a leaf when it is pure, has fewer than `min_samples_split`
//! samples, sits at `max_depth`, or no candidate reduces its squared error
//! by more than the same tolerance.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{ForestParams, MaxFeatures};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Relative tolerance for split ties and for the "no reduction" stop.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Squared-error reduction achieved by this split.
        gain: f64,
        count: usize,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

/// A fitted tree stored as a node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FlatTree", try_from = "FlatTree")]
pub struct Tree {
    nodes: Vec<TreeNode>,
    n_features: usize,
}

/// Column arrays for serialisation. Leaves have `feature == -1`; `left`
/// and `right` are -1 on leaves, `threshold` and `gain` are 0 there, and
/// `value` is 0 on splits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatTree {
    pub n_features: usize,
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<i64>,
    pub right: Vec<i64>,
    pub value: Vec<f64>,
    pub gain: Vec<f64>,
    pub count: Vec<usize>,
}

impl From<Tree> for FlatTree {
    fn from(tree: Tree) -> Self {
        let n = tree.nodes.len();
        let mut flat = FlatTree {
            n_features: tree.n_features,
            feature: Vec::with_capacity(n),
            threshold: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            right: Vec::with_capacity(n),
            value: Vec::with_capacity(n),
            gain: Vec::with_capacity(n),
            count: Vec::with_capacity(n),
        };
        for node in tree.nodes {
            let (f, t, l, r, v, g, c) = match node {
                TreeNode::Split { feature, threshold, left, right, gain, count } => {
                    (feature as i64, threshold, left as i64, right as i64, 0.0, gain, count)
                }
                TreeNode::Leaf { value, count } => (-1, 0.0, -1, -1, value, 0.0, count),
            };
            flat.feature.push(f);
            flat.threshold.push(t);
            flat.left.push(l);
            flat.right.push(r);
            flat.value.push(v);
            flat.gain.push(g);
            flat.count.push(c);
        }
        flat
    }
}

impl TryFrom<FlatTree> for Tree {
    type Error = Error;

    fn try_from(flat: FlatTree) -> Result<Self> {
        let n = flat.feature.len();
        let lens = [flat.threshold.len(), flat.left.len(), flat.right.len(), flat.value.len(), flat.gain.len(), flat.count.len()];
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err(Error::InvalidData("flattened tree arrays are empty or of unequal length".into()));
        }
        let child = |c: i64, i: usize| -> Result<usize> {
            usize::try_from(c)
                .ok()
                .filter(|&c| c > i && c < n)
                .ok_or_else(|| Error::InvalidData(format!("node {i} has invalid child {c}")))
        };
        let nodes = (0..n)
            .map(|i| {
                if flat.feature[i] < 0 {
                    Ok(TreeNode::Leaf { value: flat.value[i], count: flat.count[i] })
                } else {
                    let feature = flat.feature[i] as usize;
                    if feature >= flat.n_features {
                        return Err(Error::InvalidData(format!("node {i} splits on missing feature {feature}")));
                    }
                    Ok(TreeNode::Split {
                        feature,
                        threshold: flat.threshold[i],
                        left: child(flat.left[i], i)?,
                        right: child(flat.right[i], i)?,
                        gain: flat.gain[i],
                        count: flat.count[i],
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(Tree { nodes, n_features: flat.n_features })
    }
}

impl Tree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Route a row to its leaf value without a dimension check.
    #[inline]
    pub(crate) fn predict_unchecked(&self, x: impl Fn(usize) -> f64) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if x(*feature) <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Total split gain per feature.
    pub fn gain_by_feature(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let TreeNode::Split { feature, gain, .. } = node {
                out[*feature] += gain;
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

pub fn predict_tree(tree: &Tree, x: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != tree.n_features {
        return Err(Error::DimensionMismatch { expected: tree.n_features, got: x.len() });
    }
    Ok(tree.predict_unchecked(|j| x[j]))
}

/// Column-major copy of a training matrix with each column's row order
/// sorted by value (ties by row index). Shared by all trees of a forest.
pub(crate) struct Presorted {
    pub columns: Vec<Vec<f64>>,
    pub order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: ArrayView2<'_, f64>) -> Presorted {
        let columns: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let order = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted { columns, order }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

struct Builder<'a> {
    params: &'a ForestParams,
    /// Per feature, the value of each sample slot.
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    /// Per feature, slots of the current node range sorted by value.
    sorted: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    residual: Vec<f64>,
    rng: Rng,
    nodes: Vec<TreeNode>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn leaf(&mut self, lo: usize, hi: usize) -> usize {
        // Sum in slot (= row) order so the value does not depend on how
        // the node was reached.
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.sorted[0][lo..hi]);
        self.scratch.sort_unstable();
        let value = self.scratch.iter().map(|&s| self.ys[s as usize]).sum::<f64>() / (hi - lo) as f64;
        self.nodes.push(TreeNode::Leaf { value, count: hi - lo });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.xs.len();
        match self.params.features_per_split {
            MaxFeatures::Count(m) if m < d => {
                let mut all: Vec<usize> = (0..d).collect();
                // partial Fisher-Yates: the first m positions are a uniform draw
                for i in 0..m {
                    let j = i + rng::bounded(&mut self.rng, d - i);
                    all.swap(i, j);
                }
                let mut chosen = all[..m].to_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, lo: usize, hi: usize, node_sse: f64) -> Option<Candidate> {
        let n = (hi - lo) as f64;
        let total: f64 = self.sorted[0][lo..hi].iter().map(|&s| self.residual[s as usize]).sum();
        let tol = TIE_TOLERANCE * node_sse;
        let mut best: Option<Candidate> = None;
        for f in self.candidate_features() {
            let xs = &self.xs[f];
            let slots = &self.sorted[f][lo..hi];
            let mut sum_left = 0.0;
            for k in 0..slots.len() - 1 {
                let s = slots[k] as usize;
                sum_left += self.residual[s];
                let (v, v_next) = (xs[s], xs[slots[k + 1] as usize]);
                if v >= v_next {
                    continue;
                }
                let n_left = (k + 1) as f64;
                let sum_right = total - sum_left;
                // child SSE = sum r^2 - score, so a larger score is better
                let score = sum_left * sum_left / n_left + sum_right * sum_right / (n - n_left);
                if best.as_ref().is_none_or(|b| score > b.score + tol) {
                    let mut threshold = 0.5 * (v + v_next);
                    if threshold >= v_next {
                        threshold = v;
                    }
                    best = Some(Candidate { feature: f, threshold, score });
                }
            }
        }
        best
    }

    fn build(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let n = hi - lo;
        let slots = &self.sorted[0][lo..hi];
        let (mut y_min, mut y_max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &s in slots {
            let y = self.ys[s as usize];
            y_min = y_min.min(y);
            y_max = y_max.max(y);
            sum += y;
        }
        let depth_reached = self.params.max_depth.is_some_and(|m| depth >= m);
        if n < self.params.min_samples_split || depth_reached || y_min == y_max {
            return self.leaf(lo, hi);
        }

        let mean = sum / n as f64;
        let mut node_sse = 0.0;
        for &s in &self.sorted[0][lo..hi] {
            let r = self.ys[s as usize] - mean;
            self.residual[s as usize] = r;
            node_sse += r * r;
        }
        let Some(split) = self.best_split(lo, hi, node_sse) else {
            return self.leaf(lo, hi);
        };
        let total: f64 = self.sorted[0][lo..hi].iter().map(|&s| self.residual[s as usize]).sum();
        let gain = split.score - total * total / n as f64;
        if !(gain > TIE_TOLERANCE * node_sse) {
            return self.leaf(lo, hi);
        }

        let xs = &self.xs[split.feature];
        let mut n_left = 0;
        for &s in &self.sorted[split.feature][lo..hi] {
            let left = xs[s as usize] <= split.threshold;
            self.goes_left[s as usize] = left;
            n_left += left as usize;
        }
        for f in 0..self.sorted.len() {
            let range = &mut self.sorted[f][lo..hi];
            self.scratch.clear();
            let mut w = 0;
            for i in 0..range.len() {
                let s = range[i];
                if self.goes_left[s as usize] {
                    range[w] = s;
                    w += 1;
                } else {
                    self.scratch.push(s);
                }
            }
            range[w..].copy_from_slice(&self.scratch);
        }

        let idx = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0, count: 0 });
        let left = self.build(lo, lo + n_left, depth + 1);
        let right = self.build(lo + n_left, hi, depth + 1);
        self.nodes[idx] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            gain,
            count: n,
        };
        idx
    }
}

/// Grow a tree on the sample multiset `rows` (indices into the presorted
/// matrix, repeats allowed).
pub(crate) fn grow(pre: &Presorted, y: &[f64], rows: &[usize], params: &ForestParams, seed: u64) -> Tree {
    let n_rows = pre.n_rows();
    let d = pre.columns.len();
    let mut counts = vec![0u32; n_rows];
    for &r in rows {
        counts[r] += 1;
    }
    // slots are grouped by row so that slot order follows row order
    let mut first_slot = vec![0u32; n_rows + 1];
    for r in 0..n_rows {
        first_slot[r + 1] = first_slot[r] + counts[r];
    }
    let n_slots = rows.len();
    let mut slot_row = Vec::with_capacity(n_slots);
    for r in 0..n_rows {
        slot_row.extend(std::iter::repeat_n(r, counts[r] as usize));
    }
    let xs: Vec<Vec<f64>> = pre.columns.iter().map(|col| slot_row.iter().map(|&r| col[r]).collect()).collect();
    let ys: Vec<f64> = slot_row.iter().map(|&r| y[r]).collect();
    let sorted: Vec<Vec<u32>> = pre
        .order
        .iter()
        .map(|order| {
            let mut v = Vec::with_capacity(n_slots);
            for &r in order {
                let r = r as usize;
                v.extend(first_slot[r]..first_slot[r + 1]);
            }
            v
        })
        .collect();

    let mut builder = Builder {
        params,
        xs,
        ys,
        sorted,
        goes_left: vec![false; n_slots],
        scratch: Vec::with_capacity(n_slots),
        residual: vec![0.0; n_slots],
        rng: rng::rng_from_seed(seed),
        nodes: Vec::new(),
    };
    if d == 0 {
        // no features: a single mean leaf
        let value = builder.ys.iter().sum::<f64>() / n_slots as f64;
        return Tree { nodes: vec![TreeNode::Leaf { value, count: n_slots }], n_features: 0 };
    }
    builder.build(0, n_slots, 0);
    Tree { nodes: builder.nodes, n_features: d }
}

/// Fit one tree on all rows of `x`. `seed` only matters when
/// `features_per_split` samples a subset of features.
pub fn fit_tree(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, params: &ForestParams, seed: u64) -> Result<Tree> {
    params.validate()?;
    super::check_training_data(x, y)?;
    let pre = Presorted::new(x);
    let rows: Vec<usize> = (0..x.nrows()).collect();
    Ok(grow(&pre, &y.to_vec(), &rows, params, seed))
}
