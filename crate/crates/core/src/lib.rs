//! Classifier-based detection of a collective anomaly ("signal") mixed
//! into a reference ("background") sample.
//!
//! The toolkit covers both search modes:
//!
//! * **model-dependent (supervised)**: a classifier trained on background
//!   vs. a hypothesized signal sample yields density-ratio statistics
//!   (LRT, score);
//! * **model-independent (semi-supervised)**: a classifier trained on
//!   background vs. the unlabeled experimental sample yields the LRT, AUC
//!   and MCE statistics without any signal model.
//!
//! Null distributions come from bootstrap/permutation resampling with the
//! classifier held fixed, a slow in-sample permutation that re-trains it
//! every cycle, or conditional asymptotic approximations. On top of the
//! tests sit a signal-strength estimator (quantile transform + boundary
//! Poisson regression) and an active-subspace interpretation of the
//! trained classifier. Everything is deterministic for a fixed seed,
//! independent of worker count.

pub mod calibrate;
pub mod data;
pub mod error;
pub mod forest;
pub mod numeric;
pub mod rng;
pub mod simlab;
pub mod strength;
pub mod subspace;
pub mod teststats;

pub use error::{Error, Result};
