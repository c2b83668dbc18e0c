use tbr_core::baseline::{build_baseline, residuals};
use tbr_core::{BattedBall, EmptyCellPolicy, GridSpec, Residual};

/// Pooled grid over all balls, then residuals against it.
pub fn self_baseline(balls: &[BattedBall]) -> Vec<Residual> {
    let grid = build_baseline(balls, GridSpec::default()).unwrap();
    residuals(balls, &grid, EmptyCellPolicy::Abort).unwrap().0
}
