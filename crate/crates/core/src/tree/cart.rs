use serde::{Deserialize, Serialize};

use super::{Regressor, SplitCriterion, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` descend left.
    Internal { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64, count: usize },
}

/// Nodes in pre-order; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

impl Tree {
    pub fn leaf(value: f64, count: usize, n_features: usize) -> Self {
        Self { nodes: vec![TreeNode::Leaf { value, count }], n_features }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            TreeNode::Leaf { value, count } => Some((value, count)),
            _ => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_checked(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::ShapeMismatch { expected: self.n_features, actual: x.len() });
        }
        Ok(self.predict_row(x))
    }
}

impl Regressor for Tree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Internal { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// Greedy CART regression tree on every row of `x`.
///
/// Candidate thresholds are midpoints between consecutive distinct values.
/// Among splits of equal loss the lower feature index wins, then the lower
/// threshold. `rng` only drives feature subsampling.
pub fn fit_tree(x: &Matrix, y: &[f64], params: &TreeParams, rng: &mut SplitMix64) -> Result<Tree> {
    let idx: Vec<usize> = (0..x.rows()).collect();
    fit_on_indices(x, y, &idx, params, rng)
}

/// Fits on the multiset of rows `idx` (repeats allowed).
pub(crate) fn fit_on_indices(
    x: &Matrix,
    y: &[f64],
    idx: &[usize],
    params: &TreeParams,
    rng: &mut SplitMix64,
) -> Result<Tree> {
    if idx.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if y.len() != x.rows() {
        return Err(Error::ShapeMismatch { expected: x.rows(), actual: y.len() });
    }
    if let Some(i) = idx.iter().find(|&&i| x.row(i).iter().any(|v| !v.is_finite()) || !y[i].is_finite()) {
        return Err(Error::NonFinite(format!("training row {i}")));
    }
    params.validate()?;
    let m = idx.len();
    let f = x.cols();
    let cols: Vec<Vec<f64>> = (0..f).map(|j| idx.iter().map(|&i| x.get(i, j)).collect()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let order: Vec<Vec<u32>> = cols
        .iter()
        .map(|c| {
            let mut o: Vec<u32> = (0..m as u32).collect();
            o.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]));
            o
        })
        .collect();
    let mut b = Builder {
        cols,
        ys,
        order,
        params: *params,
        goes_left: vec![false; m],
        scratch: Vec::with_capacity(m),
        nodes: Vec::new(),
        n_features: f,
    };
    b.grow(0, m, 0, rng);
    Ok(Tree { nodes: b.nodes, n_features: f })
}

struct Builder {
    cols: Vec<Vec<f64>>,
    ys: Vec<f64>,
    /// per feature, sample positions sorted by value; each node owns the
    /// same contiguous range in every feature's order
    order: Vec<Vec<u32>>,
    params: TreeParams,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    nodes: Vec<TreeNode>,
    n_features: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    n_left: usize,
}

impl Builder {
    fn grow(&mut self, lo: usize, hi: usize, depth: usize, rng: &mut SplitMix64) -> usize {
        let id = self.nodes.len();
        let positions: &[u32] = if self.n_features > 0 { &self.order[0][lo..hi] } else { &[] };
        let values: Vec<f64> = if self.n_features > 0 {
            positions.iter().map(|&p| self.ys[p as usize]).collect()
        } else {
            (lo..hi).map(|p| self.ys[p]).collect()
        };
        let value = leaf_value(&values, self.params.criterion);
        let count = hi - lo;
        self.nodes.push(TreeNode::Leaf { value, count });

        let depth_ok = self.params.max_depth.map_or(true, |d| depth < d);
        if !depth_ok || count < 2 * self.params.min_samples_leaf || self.n_features == 0 {
            return id;
        }
        let split = match self.params.criterion {
            SplitCriterion::L2 => self.best_split_l2(lo, hi, rng),
            SplitCriterion::L1 => self.best_split_l1(lo, hi, rng),
        };
        let Some(split) = split else { return id };

        let col = &self.cols[split.feature];
        for &p in &self.order[split.feature][lo..hi] {
            self.goes_left[p as usize] = col[p as usize] <= split.threshold;
        }
        for f in 0..self.n_features {
            self.scratch.clear();
            let seg = &mut self.order[f][lo..hi];
            let mut w = 0;
            for k in 0..seg.len() {
                let p = seg[k];
                if self.goes_left[p as usize] {
                    seg[w] = p;
                    w += 1;
                } else {
                    self.scratch.push(p);
                }
            }
            debug_assert_eq!(w, split.n_left);
            seg[w..].copy_from_slice(&self.scratch);
        }
        let mid = lo + split.n_left;
        let left = self.grow(lo, mid, depth + 1, rng);
        let right = self.grow(mid, hi, depth + 1, rng);
        self.nodes[id] = TreeNode::Internal { feature: split.feature, threshold: split.threshold, left, right };
        id
    }

    fn candidate_features(&self, rng: &mut SplitMix64) -> Vec<usize> {
        let k = self.params.max_features.resolve(self.n_features);
        if k >= self.n_features {
            return (0..self.n_features).collect();
        }
        let mut all: Vec<usize> = (0..self.n_features).collect();
        for i in 0..k {
            let j = i + rng.index(self.n_features - i);
            all.swap(i, j);
        }
        let mut chosen = all[..k].to_vec();
        chosen.sort_unstable();
        chosen
    }

    /// Maximizes `S_L^2 / n_L + S_R^2 / n_R`, equivalent to minimizing the
    /// summed squared error of the children.
    fn best_split_l2(&self, lo: usize, hi: usize, rng: &mut SplitMix64) -> Option<Split> {
        let msl = self.params.min_samples_leaf;
        let n = hi - lo;
        let seg0 = &self.order[0][lo..hi];
        let total: f64 = seg0.iter().map(|&p| self.ys[p as usize]).sum();
        let total_sq: f64 = seg0.iter().map(|&p| self.ys[p as usize].powi(2)).sum();
        let parent = total * total / n as f64;
        let tol = 1e-12 * total_sq.max(f64::MIN_POSITIVE);
        let mut best_gain = parent + tol;
        let mut best: Option<Split> = None;
        for f in self.candidate_features(rng) {
            let col = &self.cols[f];
            let seg = &self.order[f][lo..hi];
            let mut sl = 0.0;
            for i in 1..n {
                sl += self.ys[seg[i - 1] as usize];
                if i < msl || n - i < msl {
                    continue;
                }
                let (a, b) = (col[seg[i - 1] as usize], col[seg[i] as usize]);
                if a >= b {
                    continue;
                }
                let sr = total - sl;
                let gain = sl * sl / i as f64 + sr * sr / (n - i) as f64;
                if gain > best_gain + if best.is_some() { tol } else { 0.0 } {
                    best_gain = gain;
                    best = Some(Split { feature: f, threshold: midpoint(a, b), n_left: i });
                }
            }
        }
        best
    }

    /// Quadratic-time scan; only used when the L1 criterion is requested.
    fn best_split_l1(&self, lo: usize, hi: usize, rng: &mut SplitMix64) -> Option<Split> {
        let msl = self.params.min_samples_leaf;
        let n = hi - lo;
        let all: Vec<f64> = self.order[0][lo..hi].iter().map(|&p| self.ys[p as usize]).collect();
        let parent = abs_dev(&all);
        let tol = 1e-12 * all.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let mut best_loss = parent - tol;
        let mut best: Option<Split> = None;
        for f in self.candidate_features(rng) {
            let col = &self.cols[f];
            let seg = &self.order[f][lo..hi];
            let ys: Vec<f64> = seg.iter().map(|&p| self.ys[p as usize]).collect();
            for i in msl.max(1)..=(n - msl) {
                let (a, b) = (col[seg[i - 1] as usize], col[seg[i] as usize]);
                if a >= b {
                    continue;
                }
                let loss = abs_dev(&ys[..i]) + abs_dev(&ys[i..]);
                if loss < best_loss - if best.is_some() { tol } else { 0.0 } {
                    best_loss = loss;
                    best = Some(Split { feature: f, threshold: midpoint(a, b), n_left: i });
                }
            }
        }
        best
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + 0.5 * (b - a);
    if m >= b {
        a
    } else {
        m
    }
}

fn leaf_value(values: &[f64], criterion: SplitCriterion) -> f64 {
    match criterion {
        SplitCriterion::L2 => values.iter().sum::<f64>() / values.len() as f64,
        SplitCriterion::L1 => crate::eval::median(values.to_vec()),
    }
}

fn abs_dev(v: &[f64]) -> f64 {
    let med = crate::eval::median(v.to_vec());
    v.iter().map(|x| (x - med).abs()).sum()
}
