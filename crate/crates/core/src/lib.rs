//! Ballpark and team-defense effects from Total Bases Residuals.
//!
//! The pipeline runs in stages:
//!
//! 1. [`ingest`] turns a Statcast-style CSV export into [`BattedBall`] records.
//! 2. [`baseline`] pools those balls into an exit-velocity × launch-angle grid of
//!    expected total bases and scores each ball's residual against it.
//! 3. [`estimator`] collapses residuals into (park, defense) cells and fits the
//!    additive fixed-effects model by weighted least squares.
//! 4. [`standardize`] re-centers estimates at the league mean and maps them onto
//!    the 100-based index.
//! 5. [`diagnostics`] builds home/away splits, stability and intercept reports.
//!
//! [`synthetic`] generates data from the same additive model with known truth.

pub mod baseline;
pub mod diagnostics;
pub mod estimator;
mod ids;
pub mod ingest;
pub mod roster;
pub mod standardize;
pub mod synthetic;

pub use baseline::{BaselineGrid, Cell, EmptyCellPolicy, GridSpec, Residual};
pub use estimator::{CellAggregate, EffectEstimates, References, Universe};
pub use ids::{InningHalf, ParkId, TeamId};
pub use ingest::{BattedBall, IngestOptions, IngestReport, SeasonFilter};
pub use roster::Roster;
pub use standardize::{CenteredEstimates, Effects, IndexTable, SdConvention};
