//! Single decision tree: axis-aligned threshold splits chosen by Gini
//! impurity decrease, thresholds at midpoints of consecutive distinct
//! sorted values, leaves storing the in-bag class-1 fraction.
//!
//! Each feature's in-bag entries are sorted once and kept sorted through
//! splitting by stable partition, so growing costs O(d · n · depth) after
//! the initial sort.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) enum Node {
    /// Left child is the next node in pre-order; right child is indexed.
    Split { feature: u32, threshold: f64, right: u32 },
    Leaf { fraction: f64 },
}

/// Structure-of-arrays tree layout for branch-light traversal: `feature[i]
/// == LEAF_MARK` marks a leaf whose value sits in `value[i]`; otherwise
/// `value[i]` is the threshold and `right[i]` the right-child index (left
/// child is `i + 1`, pre-order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Tree {
    feature: Vec<u32>,
    value: Vec<f64>,
    right: Vec<u32>,
}

const LEAF_MARK: u32 = u32::MAX;

impl Tree {
    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        let mut feature = Vec::with_capacity(nodes.len());
        let mut value = Vec::with_capacity(nodes.len());
        let mut right = Vec::with_capacity(nodes.len());
        for n in nodes {
            match n {
                Node::Split { feature: f, threshold, right: r } => {
                    feature.push(f);
                    value.push(threshold);
                    right.push(r);
                }
                Node::Leaf { fraction } => {
                    feature.push(LEAF_MARK);
                    value.push(fraction);
                    right.push(0);
                }
            }
        }
        Self { feature, value, right }
    }

    #[inline]
    pub(crate) fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            let f = self.feature[at];
            if f == LEAF_MARK {
                return self.value[at];
            }
            at = if row[f as usize] <= self.value[at] {
                at + 1
            } else {
                self.right[at] as usize
            };
        }
    }

    /// Node list view for oracle-style re-evaluation in tests.
    #[cfg(test)]
    pub(crate) fn nodes(&self) -> Vec<Node> {
        (0..self.feature.len())
            .map(|i| {
                if self.feature[i] == LEAF_MARK {
                    Node::Leaf { fraction: self.value[i] }
                } else {
                    Node::Split {
                        feature: self.feature[i],
                        threshold: self.value[i],
                        right: self.right[i],
                    }
                }
            })
            .collect()
    }
}

pub(crate) struct GrowParams {
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    class1: &'a [bool],
    params: &'a GrowParams,
    rng: ChaCha8Rng,
    /// entries[f] holds the in-bag row ids sorted by feature f within each
    /// node segment.
    orders: Vec<Vec<u32>>,
    scratch_left: Vec<u32>,
    scratch_right: Vec<u32>,
    feature_pool: Vec<u32>,
    nodes: Vec<Node>,
}

/// Sort row ids by each feature's value (row id as tiebreak); shared by
/// every tree of a forest so individual trees never sort.
pub(crate) fn presort_columns(columns: &[Vec<f64>]) -> Vec<Vec<u32>> {
    columns
        .iter()
        .map(|col| {
            let mut o: Vec<u32> = (0..col.len() as u32).collect();
            o.sort_unstable_by(|&a, &b| {
                col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b))
            });
            o
        })
        .collect()
}

/// Grow a tree on a bootstrap draw given by per-row multiplicities.
/// The in-bag sorted order per feature comes from a linear walk over the
/// presorted full-table order.
pub(crate) fn grow(
    columns: &[Vec<f64>],
    presorted: &[Vec<u32>],
    class1: &[bool],
    multiplicity: &[u16],
    in_bag_total: usize,
    params: &GrowParams,
    rng: ChaCha8Rng,
) -> Tree {
    let d = columns.len();
    let m = in_bag_total;
    let orders: Vec<Vec<u32>> = presorted
        .iter()
        .map(|global| {
            let mut o = Vec::with_capacity(m);
            for &row in global {
                for _ in 0..multiplicity[row as usize] {
                    o.push(row);
                }
            }
            o
        })
        .collect();
    let mut b = Builder {
        columns,
        class1,
        params,
        rng,
        orders,
        scratch_left: Vec::with_capacity(m),
        scratch_right: Vec::with_capacity(m),
        feature_pool: (0..d as u32).collect(),
        nodes: Vec::new(),
    };
    b.build_node(0, m, 0);
    Tree::from_nodes(b.nodes)
}

struct BestSplit {
    feature: u32,
    threshold: f64,
    left_size: usize,
    score: f64,
}

impl Builder<'_> {
    fn build_node(&mut self, lo: usize, hi: usize, depth: usize) {
        let m = hi - lo;
        let c1 = self.orders[0][lo..hi]
            .iter()
            .filter(|&&r| self.class1[r as usize])
            .count();

        let depth_stop = self.params.max_depth.is_some_and(|d| depth >= d);
        if c1 == 0 || c1 == m || m < 2 * self.params.min_leaf || depth_stop {
            self.nodes.push(Node::Leaf { fraction: c1 as f64 / m as f64 });
            return;
        }

        let best = self.best_split(lo, hi, c1);
        let Some(best) = best else {
            self.nodes.push(Node::Leaf { fraction: c1 as f64 / m as f64 });
            return;
        };

        self.partition(lo, hi, best.feature, best.threshold);

        let split_at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            right: 0,
        });
        self.build_node(lo, lo + best.left_size, depth + 1);
        let right_index = self.nodes.len() as u32;
        if let Node::Split { right, .. } = &mut self.nodes[split_at] {
            *right = right_index;
        }
        self.build_node(lo + best.left_size, hi, depth + 1);
    }

    /// Draw the feature subset for this node, then scan each candidate
    /// feature's sorted segment for the best Gini split.
    fn best_split(&mut self, lo: usize, hi: usize, c1_total: usize) -> Option<BestSplit> {
        let d = self.feature_pool.len();
        let k = self.params.features_per_split.min(d);
        for i in 0..k {
            let j = self.rng.random_range(i..d);
            self.feature_pool.swap(i, j);
        }
        let m = hi - lo;
        let min_leaf = self.params.min_leaf;
        let mut best: Option<BestSplit> = None;

        for fi in 0..k {
            let f = self.feature_pool[fi];
            let col = &self.columns[f as usize];
            let order = &self.orders[f as usize][lo..hi];
            let mut c1_left = 0usize;
            for i in 0..m - 1 {
                let row = order[i] as usize;
                if self.class1[row] {
                    c1_left += 1;
                }
                let n_left = i + 1;
                let n_right = m - n_left;
                if n_left < min_leaf {
                    continue;
                }
                if n_right < min_leaf {
                    break;
                }
                let v = col[row];
                let v_next = col[order[i + 1] as usize];
                if v_next <= v {
                    continue; // not a boundary between distinct values
                }
                let c1_right = c1_total - c1_left;
                // Zero impurity decrease iff the class-1 proportions of the
                // children are equal; compare exactly in integers.
                if c1_left * n_right == c1_right * n_left {
                    continue;
                }
                let c0_left = (n_left - c1_left) as f64;
                let c0_right = (n_right - c1_right) as f64;
                let c1_l = c1_left as f64;
                let c1_r = c1_right as f64;
                let score = (c1_l * c1_l + c0_left * c0_left) / n_left as f64
                    + (c1_r * c1_r + c0_right * c0_right) / n_right as f64;
                let better = match &best {
                    None => true,
                    Some(b) => score > b.score,
                };
                if better {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: 0.5 * (v + v_next),
                        left_size: n_left,
                        score,
                    });
                }
            }
        }
        best
    }

    /// Stable-partition every feature's sorted segment by the chosen split
    /// predicate so child segments stay sorted.
    fn partition(&mut self, lo: usize, hi: usize, feature: u32, threshold: f64) {
        let col = &self.columns[feature as usize];
        for order in &mut self.orders {
            self.scratch_left.clear();
            self.scratch_right.clear();
            for &e in &order[lo..hi] {
                if col[e as usize] <= threshold {
                    self.scratch_left.push(e);
                } else {
                    self.scratch_right.push(e);
                }
            }
            order[lo..lo + self.scratch_left.len()].copy_from_slice(&self.scratch_left);
            order[lo + self.scratch_left.len()..hi].copy_from_slice(&self.scratch_right);
        }
    }
}
