//! Seeded weighted sampling and train/test splitting.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

use super::{EventTable, SplitSpec};

/// Draw `k` rows with probability proportional to weight (uniform when the
/// table has no weights). Deterministic given the seed.
///
/// Without replacement this uses the exponential-key method (sort rows by
/// `ln(u)/w`), so `k = n` with uniform weights yields a permutation of the
/// table.
pub fn weighted_sample(table: &EventTable, k: usize, replace: bool, seed: u64) -> Result<EventTable> {
    let n = table.n_rows();
    if k == 0 {
        return Err(Error::Size("cannot draw zero rows".into()));
    }
    if !replace && k > n {
        return Err(Error::Size(format!(
            "cannot draw {k} rows without replacement from {n}"
        )));
    }
    let weights = table.effective_weights();
    let mut rng = stream_rng(seed, "weighted-sample", 0);
    let idx: Vec<usize> = if replace {
        let cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let total = *cumulative.last().expect("non-empty");
        (0..k)
            .map(|_| {
                let u: f64 = rng.random_range(0.0..total);
                cumulative.partition_point(|c| *c <= u).min(n - 1)
            })
            .collect()
    } else {
        // Key ln(u)/w is monotone in u^(1/w); zero-weight rows get -inf keys
        // and are only reached once every positive-weight row is taken.
        let mut keyed: Vec<(f64, usize)> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                let key = if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY };
                (key, i)
            })
            .collect();
        keyed.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.truncate(k);
        keyed.into_iter().map(|(_, i)| i).collect()
    };
    table.take_rows(&idx)
}

/// The four disjoint tables produced by [`split`].
pub struct SplitParts {
    pub train_background: EventTable,
    pub test_background: EventTable,
    pub train_experimental: EventTable,
    pub test_experimental: EventTable,
}

/// Randomly split the background and experimental samples into disjoint
/// train/test parts of the sizes in `spec`. Reproducible given `spec.seed`.
pub fn split(background: &EventTable, experimental: &EventTable, spec: &SplitSpec) -> Result<SplitParts> {
    spec.validate(background.n_rows(), experimental.n_rows())?;
    let (bg_train, bg_test) = split_indices(
        background.n_rows(),
        spec.train_background,
        spec.test_background,
        spec.seed,
        "split-background",
    );
    let (ex_train, ex_test) = split_indices(
        experimental.n_rows(),
        spec.train_experimental,
        spec.test_experimental,
        spec.seed,
        "split-experimental",
    );
    Ok(SplitParts {
        train_background: background.take_rows(&bg_train)?,
        test_background: background.take_rows(&bg_test)?,
        train_experimental: experimental.take_rows(&ex_train)?,
        test_experimental: experimental.take_rows(&ex_test)?,
    })
}

fn split_indices(
    n: usize,
    take_train: usize,
    take_test: usize,
    seed: u64,
    stream: &str,
) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, stream, 0));
    let train = idx[..take_train].to_vec();
    let test = idx[take_train..take_train + take_test].to_vec();
    (train, test)
}

/// Split only the background sample into a training part and a held-out
/// part (the supervised tests keep the experimental sample whole and use
/// the held-out background to anchor the null resampling).
pub fn split_background(
    background: &EventTable,
    train: usize,
    held_out: usize,
    seed: u64,
) -> Result<(EventTable, EventTable)> {
    let m_b = background.n_rows();
    if train == 0 || held_out == 0 || train + held_out > m_b {
        return Err(Error::Size(format!(
            "background split {train}+{held_out} does not fit {m_b} rows"
        )));
    }
    let (train_idx, test_idx) = split_indices(m_b, train, held_out, seed, "split-background");
    Ok((background.take_rows(&train_idx)?, background.take_rows(&test_idx)?))
}

/// Bootstrap redraw of both samples honoring the split's disjointness:
/// the original rows are first partitioned into train/test pools of the
/// requested sizes, then each part is drawn with replacement from its own
/// pool. Train and test therefore never share an original row, which keeps
/// the re-trained classifier out-of-sample on the test parts.
pub fn bootstrap_split(
    background: &EventTable,
    experimental: &EventTable,
    spec: &SplitSpec,
    rng: &mut impl Rng,
) -> Result<SplitParts> {
    spec.validate(background.n_rows(), experimental.n_rows())?;
    let mut part = |t: &EventTable, n_train: usize, n_test: usize| -> Result<(EventTable, EventTable)> {
        let mut idx: Vec<usize> = (0..t.n_rows()).collect();
        idx.shuffle(rng);
        let (train_pool, rest) = idx.split_at(n_train);
        let test_pool = &rest[..n_test];
        let train: Vec<usize> =
            (0..n_train).map(|_| train_pool[rng.random_range(0..n_train)]).collect();
        let test: Vec<usize> =
            (0..n_test).map(|_| test_pool[rng.random_range(0..n_test)]).collect();
        Ok((t.take_rows(&train)?, t.take_rows(&test)?))
    };
    let (train_background, test_background) =
        part(background, spec.train_background, spec.test_background)?;
    let (train_experimental, test_experimental) =
        part(experimental, spec.train_experimental, spec.test_experimental)?;
    Ok(SplitParts { train_background, test_background, train_experimental, test_experimental })
}
