//! One line per acceptance criterion. Run with `-- --nocapture` to see them.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbr_core::baseline::{build_baseline, residuals};
use tbr_core::diagnostics::home_away_split;
use tbr_core::estimator::{aggregate_cells, fit_ols_ball_level, fit_season, fit_wls, CellAggregate, EstimateError};
use tbr_core::ingest::parse_events;
use tbr_core::standardize::{center, center_effects, normal_upper_tail};
use tbr_core::synthetic::{generate, Mode, SyntheticConfig};
use tbr_core::{
    BattedBall, Effects, EmptyCellPolicy, GridSpec, InningHalf, IngestOptions, ParkId, References, Roster, SdConvention, TeamId,
    Universe,
};

use common::{max_rel_diff, random_config};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within_budget(outcome: Outcome, elapsed: Duration, budget: Option<Duration>) -> Outcome {
    match (outcome, budget) {
        (Outcome::Pass(d), Some(b)) if elapsed > b => Outcome::Fail(format!("{d}; over the {:.0?} budget", b)),
        (o, _) => o,
    }
}

/// Instance sizes spread over 4..=30 teams.
fn instance_sizes() -> Vec<(u64, usize)> {
    (0..24u64).map(|k| (1_000 + k, 4 + (k as usize * 26) / 23)).collect()
}

fn c1_aggregation_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let sizes = instance_sizes();
    for &(seed, n) in &sizes {
        let cfg = random_config(seed, n, 0.9);
        let data = generate(&cfg).unwrap();
        let universe = cfg.universe();
        let w = fit_wls(&aggregate_cells(&data.residuals), &universe, cfg.references()).unwrap();
        let o = fit_ols_ball_level(&data.residuals, &universe, cfg.references()).unwrap();
        worst = worst.max(max_rel_diff(&w.coefficients(), &o.coefficients()));
    }
    verdict(worst < 1e-10, format!("{} instances, worst relative gap {worst:.2e}", sizes.len()))
}

fn c2_exact_recovery() -> Outcome {
    let mut worst = 0.0f64;
    let mut rss = 0.0f64;
    let mut configs: Vec<SyntheticConfig> = vec![SyntheticConfig::balanced(1, 30, 9_000, 0.08, 0.0)];
    configs.extend((0..6).map(|k| random_config(50 + k, 5 + 4 * k as usize, 0.0)));
    for cfg in &configs {
        let data = generate(cfg).unwrap();
        let est = fit_wls(&aggregate_cells(&data.residuals), &cfg.universe(), cfg.references()).unwrap();
        let t = &data.truth;
        let (p1, d1) = (t.park[&ParkId(1)], t.def[&TeamId(1)]);
        worst = worst.max((est.intercept - (t.intercept + p1 - d1)).abs());
        for (p, v) in &est.park_effects {
            worst = worst.max((v - (t.park[p] - p1)).abs());
        }
        for (d, v) in &est.def_effects {
            worst = worst.max((v - (t.def[d] - d1)).abs());
        }
        rss = rss.max(est.weighted_rss);
    }
    verdict(worst < 1e-9 && rss < 1e-20, format!("{} instances, max coefficient error {worst:.2e}, max weighted RSS {rss:.2e}", configs.len()))
}

fn c3_statistical_recovery() -> Outcome {
    let reps = 50u64;
    let tol = 0.005;
    let mut inside = 0;
    let mut max_errors = Vec::new();
    let mut sq = 0.0;
    let mut count = 0usize;
    for rep in 0..reps {
        let cfg = SyntheticConfig::balanced(1_000 + rep, 30, 100_000, 0.05, 0.9);
        let data = generate(&cfg).unwrap();
        let est = fit_wls(&aggregate_cells(&data.residuals), &cfg.universe(), cfg.references()).unwrap();
        let c = center_effects(&Effects::from(&est)).effects;
        let errors: Vec<f64> = c
            .park
            .iter()
            .map(|(k, v)| v - data.truth.park[k])
            .chain(c.def.iter().map(|(k, v)| v - data.truth.def[k]))
            .collect();
        let max = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if max <= tol {
            inside += 1;
        }
        sq += errors.iter().map(|e| e * e).sum::<f64>();
        count += errors.len();
        max_errors.push(max);
    }
    max_errors.sort_by(f64::total_cmp);
    let rate = inside as f64 / reps as f64;
    let theory = 0.9 * (29.0f64 / 100_000.0).sqrt();
    verdict(
        rate >= 0.95,
        format!(
            "{inside}/{reps} replicates with every effect within ±{tol}; RMSE {:.4} (sampling SE {theory:.4}), median max error {:.4}",
            (sq / count as f64).sqrt(),
            max_errors[max_errors.len() / 2]
        ),
    )
}

fn c4_centering() -> Outcome {
    let (mut fit_gap, mut mean_gap, mut idem_gap) = (0.0f64, 0.0f64, 0.0f64);
    let sizes = instance_sizes();
    for &(seed, n) in &sizes {
        let cfg = random_config(seed, n, 0.9);
        let data = generate(&cfg).unwrap();
        let universe = cfg.universe();
        let est = fit_wls(&aggregate_cells(&data.residuals), &universe, cfg.references()).unwrap();
        let c = center(&est, &universe).unwrap();
        for p in &universe.parks {
            for t in &universe.teams {
                fit_gap = fit_gap.max((est.fitted(*p, *t).unwrap() - c.effects.fitted(*p, *t).unwrap()).abs());
            }
        }
        mean_gap = mean_gap.max((c.effects.park.values().sum::<f64>() / n as f64).abs());
        mean_gap = mean_gap.max((c.effects.def.values().sum::<f64>() / n as f64).abs());
        let again = center_effects(&c.effects).effects;
        idem_gap = idem_gap.max((again.intercept - c.effects.intercept).abs());
        for (k, v) in &c.effects.park {
            idem_gap = idem_gap.max((again.park[k] - v).abs());
        }
        for (k, v) in &c.effects.def {
            idem_gap = idem_gap.max((again.def[k] - v).abs());
        }
    }
    verdict(
        fit_gap < 1e-12 && mean_gap < 1e-12 && idem_gap < 1e-12,
        format!("fitted gap {fit_gap:.1e}, group mean {mean_gap:.1e}, re-centering drift {idem_gap:.1e}"),
    )
}

fn c5_index() -> Outcome {
    let (mut mean_gap, mut sd_gap) = (0.0f64, 0.0f64);
    for &(seed, n) in &instance_sizes() {
        let cfg = random_config(seed, n, 0.9);
        let data = generate(&cfg).unwrap();
        let universe = cfg.universe();
        let est = fit_wls(&aggregate_cells(&data.residuals), &universe, cfg.references()).unwrap();
        let c = center(&est, &universe).unwrap();
        for t in [c.park_index(SdConvention::Population).unwrap(), c.defense_index(SdConvention::Population).unwrap()] {
            let idx: Vec<f64> = t.rows.iter().map(|r| r.index).collect();
            let (m, s) = SdConvention::Population.mean_sd(&idx);
            mean_gap = mean_gap.max((m - 100.0).abs());
            sd_gap = sd_gap.max((s - 20.0).abs());
        }
    }
    let printed = [(1.0, "15.87"), (2.0, "2.28"), (3.0, "0.135"), (4.0, "0.0032"), (5.0, "0.00003")];
    let mut tail_ok = true;
    let mut shown = Vec::new();
    for (z, text) in printed {
        let decimals = text.split('.').nth(1).unwrap().len();
        let got = format!("{:.decimals$}", 100.0 * normal_upper_tail(z));
        tail_ok &= got == text;
        shown.push(format!("{got}%"));
    }
    verdict(
        mean_gap < 1e-9 && sd_gap < 1e-9 && tail_ok,
        format!("index mean gap {mean_gap:.1e}, SD gap {sd_gap:.1e}; tail {}", shown.join(" ")),
    )
}

fn c6_self_baseline() -> Outcome {
    let mut cfg = SyntheticConfig::balanced(66, 12, 200_000, 0.04, 0.0);
    cfg.mode = Mode::EndToEnd;
    let balls = generate(&cfg).unwrap().balls();
    let grid = build_baseline(&balls, GridSpec::default()).unwrap();
    let (res, _) = residuals(&balls, &grid, EmptyCellPolicy::Abort).unwrap();
    let grand = res.iter().map(|r| r.r).sum::<f64>() / res.len() as f64;
    let mut cells: BTreeMap<usize, (f64, u64)> = BTreeMap::new();
    for r in &res {
        let e = cells.entry(grid.spec.index(grid.spec.cell_of(r.ball.ev, r.ball.la).unwrap())).or_default();
        e.0 += r.r;
        e.1 += 1;
    }
    let worst = cells.values().map(|(s, n)| (s / *n as f64).abs()).fold(0.0, f64::max);
    verdict(
        grand.abs() < 1e-9 && worst < 1e-9,
        format!("{} balls in {} cells; grand mean {grand:.1e}, worst cell mean {worst:.1e}", res.len(), cells.len()),
    )
}

fn c7_grid_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7_000);
    let balls: Vec<BattedBall> = (0..1_000)
        .map(|_| BattedBall {
            ev: rng.random_range(60.0..120.0),
            la: rng.random_range(-45.0..60.0),
            tb: rng.random_range(0..=4),
            park: ParkId(1),
            def_team: TeamId(1),
            bat_team: TeamId(2),
            half: InningHalf::Top,
            season: 2024,
        })
        .collect();
    let grid = build_baseline(&balls, GridSpec::default()).unwrap();
    // Brute force: compare every ball against every bin's edges.
    let mut oracle: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for b in &balls {
        let ev_bin = (0..40).find(|&k| b.ev >= 3.0 * k as f64 && (b.ev < 3.0 * (k + 1) as f64 || k == 39)).unwrap();
        let la_bin = (0..60).find(|&k| b.la >= -90.0 + 3.0 * k as f64 && (b.la < -90.0 + 3.0 * (k + 1) as f64 || k == 59)).unwrap();
        let e = oracle.entry((ev_bin, la_bin)).or_default();
        e.0 += 1;
        e.1 += u64::from(b.tb);
    }
    let mut mismatches = 0;
    for ev_bin in 0..40 {
        for la_bin in 0..60 {
            let cell = tbr_core::Cell { ev_bin, la_bin };
            let (n, s) = oracle.get(&(ev_bin, la_bin)).copied().unwrap_or_default();
            let mu = (n > 0).then(|| s as f64 / n as f64);
            if grid.count(cell) != n || grid.tb_sum(cell) != s || grid.mu(cell) != mu {
                mismatches += 1;
            }
        }
    }
    verdict(mismatches == 0, format!("1000 balls, {} populated cells, {mismatches} of 2400 cells differ", oracle.len()))
}

fn c8_identifiability() -> Outcome {
    let cell = |p: u16, t: u16, y: f64| CellAggregate { park: ParkId(p), def_team: TeamId(t), n: 10, y };
    let split = vec![
        cell(1, 1, 0.1),
        cell(1, 2, 0.0),
        cell(2, 1, 0.2),
        cell(2, 2, 0.1),
        cell(3, 3, -0.1),
        cell(3, 4, 0.0),
        cell(4, 3, 0.05),
        cell(4, 4, 0.0),
    ];
    let universe = Universe::new((1..=4).map(ParkId), (1..=4).map(TeamId));
    let refs = References { park: ParkId(1), team: TeamId(1) };
    let disconnected = match fit_wls(&split, &universe, refs) {
        Err(e @ EstimateError::Disconnected { .. }) => {
            let msg = e.to_string();
            let named = msg.contains("parks [1 2]") && msg.contains("parks [3 4]") && msg.contains("teams [1 2]") && msg.contains("teams [3 4]");
            (named, msg)
        }
        other => (false, format!("unexpected {other:?}")),
    };
    let crossed = generate(&SyntheticConfig::balanced(8, 30, 9_000, 0.05, 0.5)).unwrap();
    let cells = aggregate_cells(&crossed.residuals);
    let crossed_ok = cells.len() == 900 && fit_wls(&cells, &Universe::from_cells(&cells), refs).is_ok();
    verdict(disconnected.0 && crossed_ok, format!("{}; fully crossed 30x30 fits: {crossed_ok}", disconnected.1))
}

/// Paths to Statcast CSV exports, separated like `PATH`.
const STATCAST_ENV: &str = "TBR_STATCAST_CSV";

fn c9_real_data() -> Outcome {
    let Some(raw) = std::env::var_os(STATCAST_ENV) else {
        return Outcome::Skip(format!("set {STATCAST_ENV} to Statcast CSV export(s) to run"));
    };
    let paths: Vec<PathBuf> = std::env::split_paths(&raw).collect();
    let roster = Roster::mlb();
    let mut balls = Vec::new();
    for p in &paths {
        let file = std::fs::File::open(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        balls.extend(parse_events(std::io::BufReader::new(file), &roster, &IngestOptions::default()).unwrap().0);
    }
    let grid = build_baseline(&balls, GridSpec::default()).unwrap();
    let (res, _) = residuals(&balls, &grid, EmptyCellPolicy::Drop).unwrap();
    let seasons: Vec<i32> = grid.seasons_pooled.clone();
    let (cin, col) = (roster.park_by_code("CIN").unwrap(), roster.park_by_code("COL").unwrap());
    let mut notes = Vec::new();
    let mut ok = true;
    let mut cin_positive = 0;
    let mut col_top2 = 0;
    let mut intercepts = BTreeMap::new();
    for &s in &seasons {
        let universe = Universe::from_roster(&roster, s);
        let est = fit_season(&res, s, &universe, References::mlb(&roster).expect("roster has ATL")).unwrap();
        let c = center(&est, &universe).unwrap();
        if c.effects.park[&cin] > 0.0 {
            cin_positive += 1;
        }
        let col_v = c.effects.park[&col];
        if c.effects.park.values().filter(|v| **v > col_v).count() < 2 {
            col_top2 += 1;
        }
        intercepts.insert(s, c.effects.intercept);
    }
    ok &= cin_positive == seasons.len();
    notes.push(format!("CIN positive {cin_positive}/{}", seasons.len()));
    let col_needed = (seasons.len() * 8).div_ceil(10);
    ok &= col_top2 >= col_needed;
    notes.push(format!("COL top two {col_top2}/{} (need {col_needed})", seasons.len()));
    match intercepts.get(&2022) {
        Some(b) => {
            ok &= (b - -0.0331).abs() <= 0.003;
            notes.push(format!("2022 intercept {b:.4}"));
        }
        None => notes.push("2022 absent".into()),
    }
    if seasons.contains(&2017) {
        let det = roster.team_by_code("DET").unwrap();
        let s = home_away_split(&res, det, 2017);
        let (home, away) = (s.opp_home.mean.unwrap_or(f64::NAN), s.opp_away.mean.unwrap_or(f64::NAN));
        ok &= away > home;
        notes.push(format!("DET 2017 opp home {home:.4} / away {away:.4}"));
    } else {
        notes.push("2017 absent".into());
    }
    verdict(ok, notes.join(", "))
}

#[test]
fn acceptance() {
    let criteria: [(&str, Check, Option<Duration>); 9] = [
        ("1 aggregation equivalence", c1_aggregation_equivalence, Some(Duration::from_secs(10))),
        ("2 exact recovery", c2_exact_recovery, Some(Duration::from_secs(1))),
        ("3 statistical recovery", c3_statistical_recovery, Some(Duration::from_secs(60))),
        ("4 centering contract", c4_centering, None),
        ("5 index contract", c5_index, None),
        ("6 self-baseline zero mean", c6_self_baseline, None),
        ("7 grid oracle", c7_grid_oracle, None),
        ("8 identifiability diagnostics", c8_identifiability, None),
        ("9 real-data spot checks", c9_real_data, None),
    ];
    let mut failed = Vec::new();
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let (tag, detail) = match within_budget(outcome, elapsed, budget) {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed.push(name);
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] criterion {name} ({:.2}s): {detail}", elapsed.as_secs_f64());
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
