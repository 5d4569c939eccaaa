//! Error type shared by the core modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by trajectory generation, the cache engine, the observer,
/// the controller, and the decision loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration or specification (bad ranges, overlaps, lengths).
    Config(String),
    /// Two tensors that must share a shape do not.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A step index moved backwards relative to the anchor.
    StepOrder { anchor: usize, step: usize },
    /// Requested cache distance exceeds the configured maximum skip.
    SkipGuard { distance: usize, max_skip: usize },
    /// Cost accounting precondition violated.
    Accounting(String),
    /// Reference-profile construction produced no Full evaluations to tabulate.
    DegenerateProfile,
    /// Internal run-state invariant violated.
    State(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::ShapeMismatch { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::StepOrder { anchor, step } => write!(
                f,
                "step {step} does not follow the anchor at step {anchor}"
            ),
            Error::SkipGuard { distance, max_skip } => write!(
                f,
                "cache distance {distance} exceeds the maximum skip {max_skip}"
            ),
            Error::Accounting(msg) => write!(f, "accounting error: {msg}"),
            Error::DegenerateProfile => {
                write!(f, "reference run produced zero Full evaluations")
            }
            Error::State(msg) => write!(f, "state error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
