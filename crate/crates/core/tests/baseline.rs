use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbr_core::baseline::{build_baseline, residuals};
use tbr_core::{BattedBall, EmptyCellPolicy, GridSpec, InningHalf, ParkId, TeamId};

fn ball(ev: f64, la: f64, tb: u8) -> BattedBall {
    BattedBall { ev, la, tb, park: ParkId(1), def_team: TeamId(1), bat_team: TeamId(2), half: InningHalf::Top, season: 2020 }
}

fn random_balls(seed: u64, n: usize) -> Vec<BattedBall> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            // Concentrate on a small region so cells hold several balls.
            let ev = rng.random_range(80.0..110.0);
            let la = rng.random_range(-10.0..40.0);
            ball(ev, la, rng.random_range(0..=4))
        })
        .collect()
}

/// Group-by oracle keyed on bin edges found by linear scan.
fn group_by(balls: &[BattedBall]) -> BTreeMap<(usize, usize), (u64, f64)> {
    let scan = |x: f64, lo: f64, w: f64, bins: usize| (0..bins).find(|&k| x >= lo + k as f64 * w && x < lo + (k + 1) as f64 * w).unwrap_or(bins - 1);
    let mut acc: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for b in balls {
        let e = acc.entry((scan(b.ev, 0.0, 3.0, 40), scan(b.la, -90.0, 3.0, 60))).or_default();
        e.0 += 1;
        e.1 += u64::from(b.tb);
    }
    acc.into_iter().map(|(k, (n, s))| (k, (n, s as f64 / n as f64))).collect()
}

#[test]
fn grid_matches_group_by_on_1000_balls() {
    let balls = random_balls(7, 1000);
    let grid = build_baseline(&balls, GridSpec::default()).unwrap();
    let oracle = group_by(&balls);
    assert_eq!(grid.populated_cells(), oracle.len());
    assert_eq!(grid.total_count(), 1000);
    for ((e, l), (n, mu)) in oracle {
        let cell = tbr_core::Cell { ev_bin: e, la_bin: l };
        assert_eq!(grid.count(cell), n);
        assert_eq!(grid.mu(cell), Some(mu));
    }
}

#[test]
fn residuals_match_per_ball_subtraction() {
    let pool = random_balls(8, 400);
    let grid = build_baseline(&pool, GridSpec::default()).unwrap();
    let oracle = group_by(&pool);
    let scan = |x: f64, lo: f64, bins: usize| (0..bins).find(|&k| x >= lo + k as f64 * 3.0 && x < lo + (k + 1) as f64 * 3.0).unwrap_or(bins - 1);
    let sample = &pool[..50];
    let (res, report) = residuals(sample, &grid, EmptyCellPolicy::Abort).unwrap();
    assert_eq!(report.scored, 50);
    for (r, b) in res.iter().zip(sample) {
        let mu = oracle[&(scan(b.ev, 0.0, 40), scan(b.la, -90.0, 60))].1;
        assert_eq!(r.r, f64::from(b.tb) - mu);
    }
}

#[test]
fn rebuild_is_byte_identical() {
    let balls = random_balls(9, 3000);
    let mut a = Vec::new();
    let mut b = Vec::new();
    build_baseline(&balls, GridSpec::default()).unwrap().write_to(&mut a, "m").unwrap();
    build_baseline(&balls, GridSpec::default()).unwrap().write_to(&mut b, "m").unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn permutation_invariant(seed in any::<u64>(), n in 1usize..300, shuffle_seed in any::<u64>()) {
        let balls = random_balls(seed, n);
        let mut shuffled = balls.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let a = build_baseline(&balls, GridSpec::default()).unwrap();
        let b = build_baseline(&shuffled, GridSpec::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn self_baseline_cells_sum_to_zero(seed in any::<u64>(), n in 1usize..500) {
        let balls = random_balls(seed, n);
        let grid = build_baseline(&balls, GridSpec::default()).unwrap();
        let (res, _) = residuals(&balls, &grid, EmptyCellPolicy::Abort).unwrap();
        let mut per_cell: BTreeMap<_, (f64, u64)> = BTreeMap::new();
        for r in &res {
            prop_assert!((-4.0..=4.0).contains(&r.r));
            let e = per_cell.entry(grid.spec.cell_of(r.ball.ev, r.ball.la).unwrap()).or_default();
            e.0 += r.r;
            e.1 += 1;
        }
        for (sum, count) in per_cell.values() {
            prop_assert!((sum / *count as f64).abs() < 1e-9);
        }
        let grand: f64 = res.iter().map(|r| r.r).sum::<f64>() / res.len() as f64;
        prop_assert!(grand.abs() < 1e-9);
    }

    #[test]
    fn mu_is_bounded_by_cell_extremes(seed in any::<u64>(), n in 1usize..300) {
        let balls = random_balls(seed, n);
        let grid = build_baseline(&balls, GridSpec::default()).unwrap();
        let mut extremes: BTreeMap<_, (u8, u8)> = BTreeMap::new();
        for b in &balls {
            let e = extremes.entry(grid.spec.cell_of(b.ev, b.la).unwrap()).or_insert((4, 0));
            e.0 = e.0.min(b.tb);
            e.1 = e.1.max(b.tb);
        }
        for (cell, (lo, hi)) in extremes {
            let mu = grid.mu(cell).unwrap();
            prop_assert!(mu >= f64::from(lo) && mu <= f64::from(hi));
        }
    }
}

#[test]
fn residual_csv_round_trips() {
    use tbr_core::baseline::{read_residuals_csv, write_residuals_csv};
    use tbr_core::synthetic::{generate, synthetic_roster, SyntheticConfig};

    let data = generate(&SyntheticConfig::balanced(3, 5, 2_000, 0.05, 0.9)).unwrap();
    let roster = synthetic_roster(5);
    let mut buf = b"# provenance line\n".to_vec();
    write_residuals_csv(&mut buf, &data.residuals, &roster).unwrap();
    let back = read_residuals_csv(buf.as_slice(), &roster).unwrap();
    assert_eq!(back, data.residuals);
}
