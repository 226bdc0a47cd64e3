//! Regression trees for the two ensemble families.
//!
//! Splits maximize variance reduction summed over both targets. Each split
//! considers ceil(d/3) randomly drawn candidate features; random forests scan
//! midpoint thresholds exhaustively, extra trees draw one uniform threshold
//! per candidate between the node's min and max. When no candidate yields a
//! positive gain but the node is still impure, the search widens to an exact
//! scan over all features, so a single tree can always memorize distinct
//! rows. Ties break toward the lowest feature index, then the smallest
//! threshold.
//!
//! All randomness comes from a per-tree stream keyed by tree index: training
//! is deterministic for a seed and invariant to caller row order (rows are
//! pre-sorted upstream) and thread count.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::util;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub random_thresholds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> [f64; 2] {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

/// Sum over both targets of the within-node sum of squared deviations.
fn node_sse(y: &DMatrix<f64>, rows: &[usize]) -> (f64, [f64; 2]) {
    let n = rows.len() as f64;
    let mut sums = [0.0, 0.0];
    for &r in rows {
        sums[0] += y[(r, 0)];
        sums[1] += y[(r, 1)];
    }
    let means = [sums[0] / n, sums[1] / n];
    let mut sse = 0.0;
    for &r in rows {
        let d0 = y[(r, 0)] - means[0];
        let d1 = y[(r, 1)] - means[1];
        sse += d0 * d0 + d1 * d1;
    }
    (sse, means)
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Exact best-split scan for one feature over midpoint thresholds.
fn best_split_for_feature(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    rows: &[usize],
    feature: usize,
    parent_sse: f64,
) -> Option<Candidate> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| x[(a, feature)].total_cmp(&x[(b, feature)]).then(a.cmp(&b)));

    let n = order.len();
    let total: [f64; 2] = order.iter().fold([0.0, 0.0], |acc, &r| {
        [acc[0] + y[(r, 0)], acc[1] + y[(r, 1)]]
    });
    let total_sq: [f64; 2] = order.iter().fold([0.0, 0.0], |acc, &r| {
        [
            acc[0] + y[(r, 0)] * y[(r, 0)],
            acc[1] + y[(r, 1)] * y[(r, 1)],
        ]
    });

    let mut best: Option<Candidate> = None;
    let mut left_sum = [0.0, 0.0];
    let mut left_sq = [0.0, 0.0];
    for i in 0..n - 1 {
        let r = order[i];
        left_sum[0] += y[(r, 0)];
        left_sum[1] += y[(r, 1)];
        left_sq[0] += y[(r, 0)] * y[(r, 0)];
        left_sq[1] += y[(r, 1)] * y[(r, 1)];

        let v = x[(r, feature)];
        let v_next = x[(order[i + 1], feature)];
        if v == v_next {
            continue;
        }
        let threshold = 0.5 * (v + v_next);
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let mut child_sse = 0.0;
        for t in 0..2 {
            let right_sum = total[t] - left_sum[t];
            let right_sq = total_sq[t] - left_sq[t];
            child_sse += left_sq[t] - left_sum[t] * left_sum[t] / nl;
            child_sse += right_sq - right_sum * right_sum / nr;
        }
        let gain = parent_sse - child_sse;
        let better = match &best {
            None => true,
            Some(b) => gain > b.gain,
        };
        if better {
            best = Some(Candidate {
                feature,
                threshold,
                gain,
            });
        }
    }
    best
}

/// Evaluate one fixed threshold on one feature.
fn split_gain_at(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    rows: &[usize],
    feature: usize,
    threshold: f64,
    parent_sse: f64,
) -> Option<Candidate> {
    let mut left_sum = [0.0, 0.0];
    let mut left_sq = [0.0, 0.0];
    let mut right_sum = [0.0, 0.0];
    let mut right_sq = [0.0, 0.0];
    let mut nl = 0.0;
    let mut nr = 0.0;
    for &r in rows {
        let t0 = y[(r, 0)];
        let t1 = y[(r, 1)];
        if x[(r, feature)] <= threshold {
            nl += 1.0;
            left_sum[0] += t0;
            left_sum[1] += t1;
            left_sq[0] += t0 * t0;
            left_sq[1] += t1 * t1;
        } else {
            nr += 1.0;
            right_sum[0] += t0;
            right_sum[1] += t1;
            right_sq[0] += t0 * t0;
            right_sq[1] += t1 * t1;
        }
    }
    if nl == 0.0 || nr == 0.0 {
        return None;
    }
    let mut child_sse = 0.0;
    for t in 0..2 {
        child_sse += left_sq[t] - left_sum[t] * left_sum[t] / nl;
        child_sse += right_sq[t] - right_sum[t] * right_sum[t] / nr;
    }
    Some(Candidate {
        feature,
        threshold,
        gain: parent_sse - child_sse,
    })
}

/// ceil(d/3) candidate features, drawn without replacement, returned sorted.
fn draw_features(d: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mtry = d.div_ceil(3);
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..mtry {
        let j = rng.random_range(i..d);
        pool.swap(i, j);
    }
    let mut picked: Vec<usize> = pool[..mtry].to_vec();
    picked.sort_unstable();
    picked
}

fn pick_best(candidates: Vec<Candidate>) -> Option<Candidate> {
    // candidates arrive in ascending feature order with at most one
    // threshold per feature (random mode) or the best per feature (scan
    // mode); strict comparison keeps the earliest on ties
    let mut best: Option<Candidate> = None;
    for c in candidates {
        let better = match &best {
            None => c.gain > 0.0,
            Some(b) => {
                c.gain > 0.0
                    && (c.gain > b.gain
                        || (c.gain == b.gain
                            && (c.feature, c.threshold) < (b.feature, b.threshold)))
            }
        };
        if better {
            best = Some(c);
        }
    }
    best
}

fn build_node(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    rows: &[usize],
    depth: usize,
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> Node {
    let (sse, means) = node_sse(y, rows);
    let depth_capped = params.max_depth.is_some_and(|limit| depth >= limit);
    if rows.len() < 2 || sse <= 0.0 || depth_capped {
        return Node::Leaf { value: means };
    }

    let features = draw_features(x.ncols(), rng);
    let mut candidates = Vec::with_capacity(features.len());
    for &feature in &features {
        if params.random_thresholds {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in rows {
                lo = lo.min(x[(r, feature)]);
                hi = hi.max(x[(r, feature)]);
            }
            if lo == hi {
                continue;
            }
            let mut threshold = lo + rng.random::<f64>() * (hi - lo);
            if threshold >= hi || threshold <= lo {
                threshold = 0.5 * (lo + hi);
            }
            if let Some(c) = split_gain_at(x, y, rows, feature, threshold, sse) {
                candidates.push(c);
            }
        } else if let Some(c) = best_split_for_feature(x, y, rows, feature, sse) {
            candidates.push(c);
        }
    }

    let mut chosen = pick_best(candidates);
    if chosen.is_none() {
        // widen to an exact scan over every feature before giving up
        let mut all = Vec::new();
        for feature in 0..x.ncols() {
            if let Some(c) = best_split_for_feature(x, y, rows, feature, sse) {
                all.push(c);
            }
        }
        chosen = pick_best(all);
    }

    match chosen {
        None => Node::Leaf { value: means },
        Some(c) => {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| x[(r, c.feature)] <= c.threshold);
            Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left: Box::new(build_node(x, y, &left_rows, depth + 1, params, rng)),
                right: Box::new(build_node(x, y, &right_rows, depth + 1, params, rng)),
            }
        }
    }
}

fn build_tree(x: &DMatrix<f64>, y: &DMatrix<f64>, params: &ForestParams, seed: u64, index: usize) -> Tree {
    let mut rng = util::substream(seed, index as u64);
    let n = x.nrows();
    let rows: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    Tree {
        root: build_node(x, y, &rows, 0, params, &mut rng),
    }
}

/// Train `n_estimators` trees; tree `i` draws only from substream `i`.
pub fn fit_forest(x: &DMatrix<f64>, y: &DMatrix<f64>, params: &ForestParams, seed: u64) -> Vec<Tree> {
    exec::map_range(params.n_estimators, |i| build_tree(x, y, params, seed, i))
}

/// Average the trees' predictions per query row.
pub fn predict_forest(trees: &[Tree], queries: &DMatrix<f64>) -> DMatrix<f64> {
    let indices: Vec<usize> = (0..queries.nrows()).collect();
    let rows = exec::map_items(&indices, |&i| {
        let row: Vec<f64> = queries.row(i).iter().copied().collect();
        let mut sum = [0.0, 0.0];
        for tree in trees {
            let value = tree.predict_row(&row);
            sum[0] += value[0];
            sum[1] += value[1];
        }
        let n = trees.len() as f64;
        [sum[0] / n, sum[1] / n]
    });
    DMatrix::from_fn(queries.nrows(), 2, |i, j| rows[i][j])
}
