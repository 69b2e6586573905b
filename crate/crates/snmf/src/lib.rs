//! Supervised nonnegative matrix factorization.
//!
//! Factorizes a nonnegative data matrix X ≈ UV while jointly fitting a
//! logistic classifier on the latent coefficients U, so the learned
//! representation stays predictive of the labels. The crate also carries the
//! full experimental harness around the solver: a two-Gaussian simulation
//! generator, stratified splitting, cross-validated grid search, AUC, and a
//! paired permutation test.
//!
//! Crate layout:
//! - [`numerics`]: dense matrices, the nonnegative cone, seeded sampling,
//!   and the finite-difference gradient oracle used by tests.
//! - [`factorization`]: NNDSVD initialization, the projected-gradient engine
//!   with Armijo backtracking, unsupervised NMF, and out-of-sample NNLS.
//! - [`supervised`]: the joint objective, its four analytic gradients, the
//!   four-block alternating solver, and a standalone logistic trainer.
//! - [`evaluation`]: AUC, splits, k-fold CV with grid search, permutation
//!   test.
//! - [`simulation`]: the synthetic dataset generator.
//! - [`dataset`], [`model`], [`report`], [`gridspec`], [`repro`]: file
//!   formats and orchestration behind the `snmf` CLI.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod factorization;
pub mod gridspec;
pub mod model;
pub mod numerics;
pub mod report;
pub mod repro;
pub mod simulation;
pub mod supervised;

pub use error::{Result, SnmfError};
