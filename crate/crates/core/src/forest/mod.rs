//! Random forest of bagged decision trees producing class-1 posterior
//! estimates as vote fractions (no calibration by default; see
//! [`Forest::predict_proba_platt`] for the optional sigmoid rescaling).
//!
//! Training is deterministic for a fixed seed regardless of worker count:
//! tree `t` draws from a substream derived from `(seed, t)`.

mod tree;

use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EventTable;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

use tree::{grow, presort_columns, GrowParams, Tree};

/// Candidate features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    /// ⌈√d⌉ features per split.
    Sqrt,
    Fixed(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows to purity / `min_leaf`.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 5,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn resolve_features(&self, d: usize) -> usize {
        match self.features_per_split {
            FeaturesPerSplit::Sqrt => (d as f64).sqrt().ceil() as usize,
            FeaturesPerSplit::Fixed(k) => k.clamp(1, d),
        }
        .clamp(1, d)
    }
}

/// Trained probabilistic classifier. `prior` is the class-1 share of the
/// training sample (the classification threshold π of the tests).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    prior: f64,
    feature_count: usize,
    class0_count: usize,
    class1_count: usize,
}

/// Train a forest separating `class0` from `class1`.
///
/// Each tree is grown on a bootstrap resample of the pooled rows using
/// Gini impurity-decrease splits with thresholds at midpoints of sorted
/// distinct values.
pub fn fit(class0: &EventTable, class1: &EventTable, cfg: &ForestConfig) -> Result<Forest> {
    if class0.n_cols() != class1.n_cols() {
        return Err(Error::Shape(format!(
            "class tables have {} and {} columns",
            class0.n_cols(),
            class1.n_cols()
        )));
    }
    if cfg.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    if cfg.min_leaf == 0 {
        return Err(Error::Config("min_leaf must be at least 1".into()));
    }
    let d = class0.n_cols();
    let n0 = class0.n_rows();
    let n1 = class1.n_rows();
    let n = n0 + n1;

    // Pool the two classes column-wise; rows [0, n0) are class 0.
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut c = Vec::with_capacity(n);
            c.extend_from_slice(class0.column(j));
            c.extend_from_slice(class1.column(j));
            c
        })
        .collect();
    let class1_mask: Vec<bool> = (0..n).map(|i| i >= n0).collect();

    let params = GrowParams {
        min_leaf: cfg.min_leaf,
        max_depth: cfg.max_depth,
        features_per_split: cfg.resolve_features(d),
    };
    let presorted = presort_columns(&columns);

    let trees: Vec<Tree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(cfg.seed, "forest-tree", t as u64);
            let mut multiplicity = vec![0u16; n];
            for _ in 0..n {
                multiplicity[rng.random_range(0..n)] += 1;
            }
            grow(&columns, &presorted, &class1_mask, &multiplicity, n, &params, rng)
        })
        .collect();

    Ok(Forest {
        trees,
        prior: n1 as f64 / n as f64,
        feature_count: d,
        class0_count: n0,
        class1_count: n1,
    })
}

impl Forest {
    /// Class-1 probability per row: the mean of leaf fractions over trees.
    ///
    /// Evaluation runs tree-major over row blocks so each tree's nodes stay
    /// cache-resident; per-row sums accumulate in tree order, so results are
    /// identical for any block size or worker count.
    pub fn predict_proba(&self, t: &EventTable) -> Result<Vec<f64>> {
        if t.n_cols() != self.feature_count {
            return Err(Error::Shape(format!(
                "table has {} columns, forest expects {}",
                t.n_cols(),
                self.feature_count
            )));
        }
        let n = t.n_rows();
        let d = self.feature_count;
        let chunk = 2048usize;
        let out: Vec<f64> = (0..n.div_ceil(chunk))
            .into_par_iter()
            .flat_map_iter(|c| {
                let lo = c * chunk;
                let hi = (lo + chunk).min(n);
                let len = hi - lo;
                let mut rows = vec![0.0; len * d];
                for (j, col) in t.columns().iter().enumerate() {
                    for i in 0..len {
                        rows[i * d + j] = col[lo + i];
                    }
                }
                let mut sums = vec![0.0f64; len];
                for tree in &self.trees {
                    for i in 0..len {
                        sums[i] += tree.predict_row(&rows[i * d..(i + 1) * d]);
                    }
                }
                let k = self.trees.len() as f64;
                sums.iter_mut().for_each(|s| *s /= k);
                sums
            })
            .collect();
        Ok(out)
    }

    /// Optional Platt-style sigmoid recalibration of the vote fractions,
    /// off by default everywhere; raw fractions behave comparably in the
    /// downstream tests.
    pub fn predict_proba_platt(&self, t: &EventTable, a: f64, b: f64) -> Result<Vec<f64>> {
        let raw = self.predict_proba(t)?;
        Ok(raw.iter().map(|p| 1.0 / (1.0 + (-(a * p + b)).exp())).collect())
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        (self.class0_count, self.class1_count)
    }

    /// Write the forest as a version-tagged JSON file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let envelope = ForestFile { format: FOREST_FORMAT.into(), version: FOREST_VERSION, forest: self.clone() };
        serde_json::to_writer(BufWriter::new(file), &envelope)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let envelope: ForestFile = serde_json::from_reader(BufReader::new(file))?;
        if envelope.format != FOREST_FORMAT {
            return Err(Error::Schema(format!("not a forest file: format '{}'", envelope.format)));
        }
        if envelope.version != FOREST_VERSION {
            return Err(Error::Schema(format!(
                "unsupported forest file version {}",
                envelope.version
            )));
        }
        Ok(envelope.forest)
    }
}

/// Degenerate forest emitting a constant score; test scaffolding for the
/// calibration layer.
#[cfg(test)]
pub(crate) fn constant_forest(fraction: f64, prior: f64, feature_count: usize) -> Forest {
    Forest {
        trees: vec![Tree::from_nodes(vec![tree::Node::Leaf { fraction }])],
        prior,
        feature_count,
        class0_count: 1,
        class1_count: 1,
    }
}

const FOREST_FORMAT: &str = "sigsleuth-forest";
const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestFile {
    format: String,
    version: u32,
    forest: Forest,
}

#[cfg(test)]
mod tests {
    use super::tree::{Node, Tree};
    use super::*;
    use crate::data::EventTable;

    fn table_1d(values: Vec<f64>) -> EventTable {
        EventTable::new(vec!["x".into()], vec![values], None, None).unwrap()
    }

    fn small_cfg(seed: u64) -> ForestConfig {
        ForestConfig { n_trees: 30, seed, ..Default::default() }
    }

    #[test]
    fn separable_classes_predict_confidently() {
        let class0 = table_1d((0..100).map(|i| -1.0 - i as f64 / 100.0).collect());
        let class1 = table_1d((0..100).map(|i| 1.0 + i as f64 / 100.0).collect());
        let f = fit(&class0, &class1, &small_cfg(3)).unwrap();
        let p = f.predict_proba(&class1).unwrap();
        assert!(p.iter().all(|&v| v >= 0.9), "min p = {:?}", p.iter().cloned().fold(1.0, f64::min));
        assert_eq!(f.prior(), 0.5);
    }

    #[test]
    fn identical_classes_hover_near_half() {
        let vals: Vec<f64> = (0..500).map(|i| (i as f64 * 0.7).sin()).collect();
        let t = table_1d(vals);
        let f = fit(&t, &t, &small_cfg(5)).unwrap();
        let p = f.predict_proba(&t).unwrap();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean = {mean}");
    }

    #[test]
    fn identical_classes_concentrate_with_many_trees() {
        let vals: Vec<f64> = (0..2000).map(|i| ((i * 37 % 2000) as f64 / 61.0).sin()).collect();
        let t = table_1d(vals);
        let cfg = ForestConfig { n_trees: 200, seed: 11, ..Default::default() };
        let f = fit(&t, &t, &cfg).unwrap();
        let p = f.predict_proba(&t).unwrap();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean = {mean}");
    }

    #[test]
    fn same_seed_same_forest() {
        let class0 = table_1d((0..200).map(|i| (i as f64).sin()).collect());
        let class1 = table_1d((0..200).map(|i| (i as f64).cos() + 0.3).collect());
        let a = fit(&class0, &class1, &small_cfg(9)).unwrap();
        let b = fit(&class0, &class1, &small_cfg(9)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let a = table_1d(vec![1.0, 2.0]);
        let b = EventTable::new(
            vec!["x".into(), "y".into()],
            vec![vec![1.0], vec![2.0]],
            None,
            None,
        )
        .unwrap();
        assert!(matches!(fit(&a, &b, &small_cfg(0)), Err(Error::Shape(_))));
    }

    #[test]
    fn single_leaf_tree_outputs_its_fraction() {
        let forest = Forest {
            trees: vec![Tree::from_nodes(vec![Node::Leaf { fraction: 0.3 }])],
            prior: 0.5,
            feature_count: 1,
            class0_count: 1,
            class1_count: 1,
        };
        let t = table_1d(vec![0.0, 5.0, -3.0]);
        assert_eq!(forest.predict_proba(&t).unwrap(), vec![0.3, 0.3, 0.3]);
    }

    #[test]
    fn vote_is_mean_over_trees() {
        let forest = Forest {
            trees: vec![
                Tree::from_nodes(vec![Node::Leaf { fraction: 0.2 }]),
                Tree::from_nodes(vec![Node::Leaf { fraction: 0.6 }]),
            ],
            prior: 0.5,
            feature_count: 1,
            class0_count: 1,
            class1_count: 1,
        };
        let t = table_1d(vec![0.0]);
        assert_eq!(forest.predict_proba(&t).unwrap(), vec![0.4]);
    }

    // Independent oracle: re-evaluate every tree by explicit traversal and
    // require exact agreement with predict_proba on each row.
    #[test]
    fn predictions_match_manual_traversal() {
        fn walk(nodes: &[Node], row: &[f64]) -> f64 {
            let mut stack = vec![0usize];
            loop {
                let at = stack.pop().unwrap();
                match &nodes[at] {
                    Node::Leaf { fraction } => return *fraction,
                    Node::Split { feature, threshold, right } => {
                        if row[*feature as usize] <= *threshold {
                            stack.push(at + 1);
                        } else {
                            stack.push(*right as usize);
                        }
                    }
                }
            }
        }
        let xs: Vec<f64> = (0..50).map(|i| ((i * 13) % 50) as f64 / 7.0).collect();
        let ys: Vec<f64> = (0..50).map(|i| ((i * 29) % 50) as f64 / 11.0).collect();
        let class0 = EventTable::new(
            vec!["x".into(), "y".into()],
            vec![xs.clone(), ys.clone()],
            None,
            None,
        )
        .unwrap();
        let class1 = EventTable::new(
            vec!["x".into(), "y".into()],
            vec![ys, xs],
            None,
            None,
        )
        .unwrap();
        let f = fit(&class0, &class1, &small_cfg(21)).unwrap();
        let probe = class0.concat(&class1).unwrap();
        let pred = f.predict_proba(&probe).unwrap();
        let mut row = Vec::new();
        for i in 0..probe.n_rows() {
            probe.fill_row(i, &mut row);
            let manual: f64 = f.trees.iter().map(|t| walk(&t.nodes(), &row)).sum::<f64>()
                / f.trees.len() as f64;
            assert_eq!(pred[i], manual, "row {i}");
        }
    }

    #[test]
    fn row_order_invariance() {
        let class0 = table_1d((0..100).map(|i| (i as f64 * 0.13).sin()).collect());
        let class1 = table_1d((0..100).map(|i| (i as f64 * 0.29).cos()).collect());
        let f = fit(&class0, &class1, &small_cfg(2)).unwrap();
        let t = table_1d(vec![0.1, -0.4, 0.9, 0.5]);
        let rev = t.take_rows(&[3, 2, 1, 0]).unwrap();
        let p = f.predict_proba(&t).unwrap();
        let q = f.predict_proba(&rev).unwrap();
        assert_eq!(p[0], q[3]);
        assert_eq!(p[1], q[2]);
        assert_eq!(p[3], q[0]);
    }

    // Integer-grid data so shifted midpoints are exact in floating point:
    // translating one feature in both classes must not change predictions.
    #[test]
    fn translation_equivariance_on_integer_grid() {
        let xs: Vec<f64> = (0..64).map(|i| ((i * 7) % 64) as f64).collect();
        let ys: Vec<f64> = (0..64).map(|i| ((i * 11) % 64) as f64).collect();
        let shift = 512.0;
        let mk = |x: &[f64], y: &[f64]| {
            EventTable::new(
                vec!["x".into(), "y".into()],
                vec![x.to_vec(), y.to_vec()],
                None,
                None,
            )
            .unwrap()
        };
        let c0 = mk(&xs, &ys);
        let c1 = mk(&ys, &xs);
        let c0_shifted = mk(&xs.iter().map(|v| v + shift).collect::<Vec<_>>(), &ys);
        let c1_shifted = mk(&ys.iter().map(|v| v + shift).collect::<Vec<_>>(), &xs);
        let f0 = fit(&c0, &c1, &small_cfg(4)).unwrap();
        let f1 = fit(&c0_shifted, &c1_shifted, &small_cfg(4)).unwrap();
        let probe: Vec<f64> = vec![3.0, 17.5, 40.0, 63.0];
        let probe_y: Vec<f64> = vec![10.0, 2.0, 55.0, 31.0];
        let t0 = mk(&probe, &probe_y);
        let t1 = mk(&probe.iter().map(|v| v + shift).collect::<Vec<_>>(), &probe_y);
        assert_eq!(f0.predict_proba(&t0).unwrap(), f1.predict_proba(&t1).unwrap());
    }

    #[test]
    fn save_load_round_trip() {
        let class0 = table_1d((0..60).map(|i| (i as f64 * 0.31).sin()).collect());
        let class1 = table_1d((0..60).map(|i| (i as f64 * 0.17).cos() + 0.2).collect());
        let f = fit(&class0, &class1, &small_cfg(8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forest.json");
        f.save(&path).unwrap();
        let g = Forest::load(&path).unwrap();
        let t = table_1d(vec![0.3, -0.2, 0.8]);
        assert_eq!(f.predict_proba(&t).unwrap(), g.predict_proba(&t).unwrap());
        assert_eq!(f.prior(), g.prior());
    }
}
