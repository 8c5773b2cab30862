//! Event tables: ingestion, preprocessing, weighted sampling and
//! train/test splitting.
//!
//! An [`EventTable`] is an immutable n×d matrix of finite feature values
//! with named columns, optional non-negative event weights and optional
//! background/signal labels. All sampling takes an explicit seed.

mod csv_io;
mod preprocess;
mod sampling;

pub use csv_io::{load_csv, write_csv};
pub use preprocess::{preprocess, wrap_angle};
pub use sampling::{bootstrap_split, split, split_background, weighted_sample, SplitParts};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Event class label as found in labeled samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Background,
    Signal,
}

/// Immutable feature matrix with named columns, optional weights and labels.
///
/// Storage is column-major: `columns[j]` holds the n values of feature j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventTable {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
    labels: Option<Vec<Label>>,
}

impl EventTable {
    /// Build a table, validating every invariant: n ≥ 1, d ≥ 1, unique
    /// column names, finite features, weights (if any) non-negative with a
    /// positive sum and matching length.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        if names.is_empty() || columns.is_empty() {
            return Err(Error::Schema("a table needs at least one column".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(Error::Schema(format!("duplicate column name '{a}'")));
            }
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::Size("a table needs at least one row".into()));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Shape(format!(
                    "column '{name}' has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: i + 1,
                    msg: format!("non-finite value in column '{name}'"),
                });
            }
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return Err(Error::Shape("weights length differs from row count".into()));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Domain("weights must be finite and non-negative".into()));
            }
            if w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Domain("weights must have a positive sum".into()));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Shape("labels length differs from row count".into()));
            }
        }
        Ok(Self { names, columns, weights, labels })
    }

    /// Unlabeled, unweighted table from row-major data.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Shape(format!("row {i} has {} values, expected {d}", row.len())));
            }
            for (j, v) in row.iter().enumerate() {
                columns[j].push(*v);
            }
        }
        Self::new(names, columns, None, None)
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Result<&[f64]> {
        self.column_index(name)
            .map(|j| self.column(j))
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    /// Event weights, substituting uniform weights when none are present.
    pub fn effective_weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0; self.n_rows()],
        }
    }

    /// Copy row `i` into `buf`.
    pub fn fill_row(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.columns.iter().map(|c| c[i]));
    }

    /// New table holding the given rows (indices may repeat).
    pub fn take_rows(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Size("cannot build an empty table".into()));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| idx.iter().map(|&i| c[i]).collect())
            .collect();
        let weights = self
            .weights
            .as_ref()
            .map(|w| idx.iter().map(|&i| w[i]).collect());
        let labels = self
            .labels
            .as_ref()
            .map(|l| idx.iter().map(|&i| l[i]).collect());
        Ok(Self { names: self.names.clone(), columns, weights, labels })
    }

    /// Vertical concatenation; both tables must share the column layout.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.names != other.names {
            return Err(Error::Shape("cannot concatenate tables with different columns".into()));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| {
                let mut c = a.clone();
                c.extend_from_slice(b);
                c
            })
            .collect();
        let weights = match (&self.weights, &other.weights) {
            (None, None) => None,
            (a, b) => {
                let mut w = a.clone().unwrap_or_else(|| vec![1.0; self.n_rows()]);
                w.extend(b.clone().unwrap_or_else(|| vec![1.0; other.n_rows()]));
                Some(w)
            }
        };
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => {
                let mut l = a.clone();
                l.extend_from_slice(b);
                Some(l)
            }
            _ => None,
        };
        Ok(Self { names: self.names.clone(), columns, weights, labels })
    }

    /// Table with `labels` replaced (or attached).
    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::Shape("labels length differs from row count".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Table with labels stripped.
    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Table with the named column's values replaced.
    pub(crate) fn replace_column(&mut self, j: usize, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.n_rows());
        self.columns[j] = values;
    }

    /// Table restricted to the given column indices.
    pub(crate) fn keep_columns(&self, keep: &[usize]) -> Self {
        Self {
            names: keep.iter().map(|&j| self.names[j].clone()).collect(),
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            weights: self.weights.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// Row filter applied at load time: keep events whose jet-count column
/// equals a given value. The column is parameterized because different
/// search channels key on different counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JetFilter {
    pub column: String,
    pub equals: f64,
}

/// Declarative preprocessing recipe.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PreprocessRecipe {
    /// Keep only rows whose jet-count column equals the given value; the
    /// filter column is removed afterwards.
    #[serde(default)]
    pub jet_filter: Option<JetFilter>,
    /// Columns removed after the other transformations.
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Columns replaced by their natural logarithm (values must be > 0).
    #[serde(default)]
    pub log_columns: Vec<String>,
    /// When set, every column whose name ends in `_phi` is replaced by
    /// `wrap(phi − anchor)` in (−π, π], and the anchor column is dropped.
    #[serde(default)]
    pub phi_rotation_anchor: Option<String>,
}

/// Sizes and seed for the disjoint train/test splits of the background and
/// experimental samples. Test halves must match: `test_experimental ==
/// test_background`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_background: usize,
    pub test_background: usize,
    pub train_experimental: usize,
    pub test_experimental: usize,
    pub seed: u64,
}

impl SplitSpec {
    /// Split both samples roughly in half, with equal test halves.
    pub fn balanced_halves(m_b: usize, n: usize, seed: u64) -> Self {
        let test = m_b.min(n) / 2;
        Self {
            train_background: m_b - test,
            test_background: test,
            train_experimental: n - test,
            test_experimental: test,
            seed,
        }
    }

    pub fn validate(&self, m_b: usize, n: usize) -> Result<()> {
        if self.test_experimental != self.test_background {
            return Err(Error::Config(format!(
                "test halves must match: test_experimental={} vs test_background={}",
                self.test_experimental, self.test_background
            )));
        }
        if self.train_background == 0
            || self.test_background == 0
            || self.train_experimental == 0
            || self.test_experimental == 0
        {
            return Err(Error::Config("all split parts must be non-empty".into()));
        }
        if self.train_background + self.test_background > m_b {
            return Err(Error::Size(format!(
                "background split {}+{} exceeds {m_b} available rows",
                self.train_background, self.test_background
            )));
        }
        if self.train_experimental + self.test_experimental > n {
            return Err(Error::Size(format!(
                "experimental split {}+{} exceeds {n} available rows",
                self.train_experimental, self.test_experimental
            )));
        }
        Ok(())
    }
}
