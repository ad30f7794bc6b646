//! Regression-discontinuity estimation for right-censored time-to-event
//! outcomes.
//!
//! The crate turns censored observations into censoring-unbiased
//! pseudo-responses (IPCW or doubly robust), then runs one-sided local linear
//! regression at the cutoff on those pseudo-responses. Around that core sit
//! the censoring-distribution fits, the working failure-time models used by
//! the doubly robust transform, cross-validated bandwidth selection, sandwich
//! and bootstrap standard errors, and the data-generating processes used for
//! Monte-Carlo checks.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line and thread-pool drivers live in the `rdcensor` companion crate; they
//! plug into [`exec::Executor`] for parallel bootstrap and simulation runs.

#![no_std]
#![forbid(unsafe_code)]
// NaN must fail every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod bandwidth;
pub mod condexp;
pub mod data;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod inference;
pub mod local_linear;
pub mod numeric;
pub mod pipeline;
pub mod quadrature;
pub mod rdplot;
pub mod rng;
pub mod simulation;
pub mod special;
pub mod step;
pub mod survival;
pub mod transform;

pub use bandwidth::{BandwidthChoice, CvResult};
pub use condexp::{AftFit, CondExpModel, CovariateSet, CoxFit, Distribution, ModelKind, WorkingCovariates};
pub use data::{ObservedRecord, ObservedSample};
pub use error::{Error, Result, Side};
pub use estimate::{Design, RdEstimate};
pub use local_linear::SideFit;
pub use pipeline::{Analysis, BandwidthMode, PipelineConfig, SeScheme};
pub use step::StepFunction;
pub use transform::{TransformMethod, TransformedSample};
