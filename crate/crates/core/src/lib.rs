//! Repetitive quantum-logic readout: round-level simulation, Bayesian
//! subspace estimation with adaptive stopping, and rigorous readout-error
//! bounds with Clopper-Pearson confidence bounds.

pub mod binomial;
pub mod bounds;
pub mod config;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod manifest;
pub mod model;
pub mod optimize;
pub mod selfcheck;
pub mod sim;

pub use bounds::{BetaChoice, BoundsReport, GridReport, GridRow};
pub use error::{Error, Result};
pub use estimator::{AdaptiveResult, ReadoutPolicy, ReferenceCounts, ReferenceTable, StopReason};
pub use harness::{SweepAxis, SweepPoint, SweepResult};
pub use manifest::RunManifest;
pub use model::{
    CoarseModel, ConditionalRates, DoubleReadoutCounts, PrepLabel, ReadoutBit, RoundOutcome, Subspace,
};
pub use sim::{GenerativeConfig, PhotonModel, TrialRecord};
