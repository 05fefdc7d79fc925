//! Path functionals of the last passage time below zero, for random walks
//! and compound-Poisson-with-drift paths.
//!
//! Let `sigma` be the last time a path sits in `(-inf, 0]`. This crate
//! computes, per realization, the occupation times of the half-lines up to
//! `sigma`, the forward/backward times of the running extrema, and the
//! analogous quantities taken relative to the pre-`sigma` level. Around
//! those kernels it provides:
//!
//! - [`walk`]: exact rational-arithmetic functionals of finite random walks
//!   and the time reversal at `sigma`;
//! - [`enumerate`]: exhaustive weighted path enumeration producing exact
//!   conditional laws, and certified equality checks between them;
//! - [`levy`]: piecewise-linear compound-Poisson paths, segment-analytic
//!   functionals, first passage and truncated-horizon simulation;
//! - [`transforms`]: the Laplace exponent, its inverse, and the closed-form
//!   transforms the sampled laws are compared against;
//! - [`stats`]: reproducible parallel sample tables and the
//!   Kolmogorov-Smirnov / z-test machinery;
//! - [`verify`]: named verification suites tying every check to the
//!   distributional claim it certifies, with JSON/CSV reports.

pub mod config;
pub mod enumerate;
pub mod levy;
pub mod stats;
pub mod streams;
pub mod transforms;
pub mod verify;
pub mod walk;

// pub use config::ModelConfig;
pub use enumerate::{ConditionEvent, ExactDist, Functional, StepLaw};
// pub use levy::{CpModel, CpPath, Horizon, JumpLaw, JumpSign, LevyFunctionals};
// pub use stats::{KsResult, SampleTable};
// pub use transforms::{TransformContext, TransformKind};
// pub use verify::{SuiteKind, VerifyReport};
pub use walk::{WalkFunctionals, WalkPath};
