#![allow(dead_code)]
pub mod pipeline;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbr_core::synthetic::{Schedule, ScheduleCell, SyntheticConfig};

/// Random connected schedule for `n` teams: every team fields at home and at
/// its neighbour's park, plus a random subset of other parks.
pub fn random_schedule(seed: u64, n: usize, visit_prob: f64, max_balls: u64) -> Schedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::new();
    for team in 0..n {
        for park in 0..n {
            let forced = park == team || park == (team + 1) % n;
            if forced || rng.random_bool(visit_prob) {
                cells.push(ScheduleCell { park: park as u16 + 1, team: team as u16 + 1, balls: rng.random_range(1..=max_balls) });
            }
        }
    }
    Schedule::Explicit { cells }
}

/// Random effects of magnitude up to `spread`, with a random schedule.
pub fn random_config(seed: u64, n: usize, noise_sd: f64) -> SyntheticConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let mut cfg = SyntheticConfig::balanced(seed, n, 0, 0.0, noise_sd);
    cfg.schedule = random_schedule(seed, n, rng.random_range(0.2..0.9), 40);
    cfg.true_intercept = rng.random_range(-0.05..0.05);
    cfg.true_park = (0..n).map(|_| rng.random_range(-0.08..0.08)).collect();
    cfg.true_def = (0..n).map(|_| rng.random_range(-0.05..0.05)).collect();
    cfg
}

/// Largest coefficient difference relative to the larger vector's max norm.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}
