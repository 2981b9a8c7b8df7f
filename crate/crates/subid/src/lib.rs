//! Regression-based subspace identification for LTI state-space systems.
//!
//! The crate covers the full desk-scale workflow: simulating open- and
//! closed-loop data, estimating the predictor subspace by (constrained)
//! least squares, reducing its rank by a weighted SVD, extracting a
//! state-space realization, and scoring the estimate against ground truth.
//!
//! Open-loop estimators: joint OLS, projected OLS, MOESP-style RQ,
//! and three Toeplitz-constrained variants. Closed-loop estimators:
//! IEM, SSARX and PBSID, all built on a high-order VARX pre-estimation
//! step that stays consistent under output feedback.

pub mod closedloop;
pub mod error;
pub mod evalmetrics;
pub mod io;
pub mod numerics;
pub mod openloop;
pub mod simdata;
pub mod ssmodel;
pub mod stacking;

pub use error::SubidError;
pub use numerics::Mat;
pub use simdata::DataSet;
pub use ssmodel::{NoiseSpec, SsModel};
