//! Abstract compute-cost accounting.
//!
//! A run's cost decomposes into the Full evaluations, the cached steps, and
//! the per-step observer/controller overheads:
//!
//! ```text
//! cost = n_full * full + (T - n_full) * cache + T * (observer + controller)
//! ```
//!
//! Units are abstract; [`CostModel::calibrated`] scales the Full-step cost
//! so a 50-step all-Full run totals 3719.50 units, making reported speedups
//! comparable in form to measured tera-FLOP baselines.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostModel {
    full: f64,
    cache: f64,
    observer: f64,
    controller: f64,
}

impl CostModel {
    pub fn new(full: f64, cache: f64, observer: f64, controller: f64) -> Result<Self> {
        if !(full.is_finite() && full > 0.0) || !(cache.is_finite() && cache > 0.0) {
            return Err(Error::Config("step costs must be positive".into()));
        }
        if cache >= full {
            return Err(Error::Config(
                "cache-step cost must be strictly below the full-step cost".into(),
            ));
        }
        if !(observer.is_finite() && observer >= 0.0)
            || !(controller.is_finite() && controller >= 0.0)
        {
            return Err(Error::Config("overhead costs must be nonnegative".into()));
        }
        Ok(Self {
            full,
            cache,
            observer,
            controller,
        })
    }

    /// Preset calibrated so that 50 Full steps cost 3719.50 units.
    pub fn calibrated() -> Self {
        Self {
            full: 74.39,
            cache: 1.0,
            observer: 0.01,
            controller: 0.01,
        }
    }

    /// Overhead-free unit-cost model, handy where only Full counts matter.
    pub fn unit() -> Self {
        Self {
            full: 1.0,
            cache: 0.01,
            observer: 0.0,
            controller: 0.0,
        }
    }

    pub fn full(&self) -> f64 {
        self.full
    }

    pub fn cache(&self) -> f64 {
        self.cache
    }

    pub fn observer(&self) -> f64 {
        self.observer
    }

    pub fn controller(&self) -> f64 {
        self.controller
    }

    /// Cost charged for one Full step, overheads included.
    pub fn full_step_cost(&self) -> f64 {
        self.full + self.observer + self.controller
    }

    /// Cost charged for one Cache step, overheads included.
    pub fn cache_step_cost(&self) -> f64 {
        self.cache + self.observer + self.controller
    }

    /// Total run cost for `n_full` Full evaluations over `total_steps`.
    pub fn total_cost(&self, n_full: usize, total_steps: usize) -> Result<f64> {
        if total_steps == 0 {
            return Err(Error::Accounting("run must have at least one step".into()));
        }
        if n_full > total_steps {
            return Err(Error::Accounting(alloc::format!(
                "{n_full} Full steps exceed the {total_steps}-step run"
            )));
        }
        Ok(n_full as f64 * self.full
            + (total_steps - n_full) as f64 * self.cache
            + total_steps as f64 * (self.observer + self.controller))
    }

    /// Speedup of a run against the all-Full baseline `T * full`.
    pub fn speedup(&self, trace_cost: f64, total_steps: usize) -> Result<f64> {
        if !(trace_cost.is_finite() && trace_cost > 0.0) {
            return Err(Error::Accounting("trace cost must be positive".into()));
        }
        Ok(total_steps as f64 * self.full / trace_cost)
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self::calibrated()
    }
}
