//! Feedback-controlled Full/Cache scheduling for cache-based iterative
//! inference.
//!
//! The crate simulates the control stack that decides, at every step of an
//! iterative inference run, whether to execute the true model computation
//! (a *Full* step) or to reuse a cheap finite-difference extrapolation of the
//! hidden state (a *Cache* step):
//!
//! - [`trajectory`] generates synthetic per-step hidden-state trajectories
//!   (polynomial, smooth-noise, regime-switching) standing in for the model
//!   features that drive the loop.
//! - [`cache`] maintains the Full anchor and its finite-difference stack and
//!   extrapolates features across skipped steps.
//! - [`observer`] fuses four low-cost drift cues into a risk score for the
//!   current cached trajectory.
//! - [`controller`] converts a soft compute ceiling into a dynamic risk
//!   threshold with a clamped PI rule over the budget-tracking error.
//! - [`policy`] runs the per-step risk-gated decision loop with warmup and
//!   max-skip guard paths, producing a fully recorded [`policy::RunTrace`].
//! - [`cost`] accounts per-step and total compute cost and speedups.
//!
//! The core is `no_std`-compatible (with `alloc`); file formats, trace IO,
//! and the CLI live in the companion `softcap` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod cache;
pub mod controller;
pub mod cost;
pub mod error;
pub mod observer;
pub mod policy;
pub mod tensor;
pub mod trajectory;

mod math;

pub use cache::{AnchorState, CacheConfig, CoefficientScheme};
pub use controller::{ControllerConfig, ControllerState, ReferenceProfile};
pub use cost::CostModel;
pub use error::{Error, Result};
pub use observer::{Cues, ObserverConfig, RiskReport};
pub use policy::{Action, PolicyConfig, Reason, RunTrace, StepRecord, Summary, ThresholdRule};
pub use tensor::FeatureTensor;
pub use trajectory::{BurstWindow, TrajectoryKind, TrajectorySpec};
