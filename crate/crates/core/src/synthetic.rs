//! Synthetic leagues drawn from the additive park/defense model.
//!
//! Team `i` owns park `i` (ids start at 1). Every (season, cell) pair draws
//! from its own ChaCha stream, so output depends only on the seed and the
//! configuration, never on generation order.
//!
//! Two modes:
//! * `residual`: each ball's residual is `intercept + offset + park − def + ε`
//!   with Gaussian `ε`; it feeds the estimator directly.
//! * `end-to-end`: each ball gets EV/LA and an integer total-bases outcome
//!   whose expectation is a fixed contact-quality curve plus the same additive
//!   shift, so ingest and the baseline grid are exercised too. The outcome's
//!   own Bernoulli spread plays the role of noise; `noise_sd` is unused.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::Residual;
use crate::estimator::{components, Component, EstimateError, References, Universe};
use crate::ids::{InningHalf, ParkId, TeamId};
use crate::ingest::{event_code_for, BattedBall, RawEventRow};
use crate::roster::{Roster, TeamEntry};
use crate::standardize::{center_effects, Effects};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Schedule(#[from] EstimateError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Residual,
    EndToEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCell {
    pub park: u16,
    pub team: u16,
    pub balls: u64,
}

/// Who fields where, and how often, in each season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// Every team fields at every park; `balls` is split evenly over the cells.
    Balanced { balls: u64 },
    /// Half of each team's balls at home, the rest spread over `road_parks`
    /// other parks. The next team's park is always one of them, which keeps
    /// the schedule connected.
    LeagueShaped { balls: u64, road_parks: usize },
    Explicit { cells: Vec<ScheduleCell> },
}

/// Normal EV and LA, redrawn until inside the default grid range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvLaSampler {
    pub ev_mean: f64,
    pub ev_sd: f64,
    pub la_mean: f64,
    pub la_sd: f64,
}

impl Default for EvLaSampler {
    fn default() -> Self {
        EvLaSampler { ev_mean: 89.0, ev_sd: 14.0, la_mean: 12.0, la_sd: 26.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonSpec {
    pub season: i32,
    /// Added to the intercept for this season.
    #[serde(default)]
    pub offset: f64,
}

fn default_seasons() -> Vec<SeasonSpec> {
    vec![SeasonSpec { season: 2024, offset: 0.0 }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_parks: usize,
    pub n_teams: usize,
    pub schedule: Schedule,
    #[serde(default)]
    pub true_intercept: f64,
    /// Indexed by park id − 1; centered before use.
    pub true_park: Vec<f64>,
    /// Indexed by team id − 1, bases-saved orientation; centered before use.
    pub true_def: Vec<f64>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default = "default_seasons")]
    pub seasons: Vec<SeasonSpec>,
    #[serde(default)]
    pub ev_la: EvLaSampler,
    #[serde(default)]
    pub mode: Mode,
}

impl SyntheticConfig {
    /// `n` teams on a balanced schedule with effects evenly spread over ±`spread`.
    pub fn balanced(seed: u64, n: usize, balls: u64, spread: f64, noise_sd: f64) -> Self {
        let ramp = |k: usize, phase: usize| {
            if n < 2 {
                0.0
            } else {
                spread * (2.0 * ((k * 7 + phase) % n) as f64 / (n - 1) as f64 - 1.0)
            }
        };
        SyntheticConfig {
            seed,
            n_parks: n,
            n_teams: n,
            schedule: Schedule::Balanced { balls },
            true_intercept: 0.0,
            true_park: (0..n).map(|k| ramp(k, 0)).collect(),
            true_def: (0..n).map(|k| ramp(k, 3)).collect(),
            noise_sd,
            seasons: default_seasons(),
            ev_la: EvLaSampler::default(),
            mode: Mode::Residual,
        }
    }

    pub fn universe(&self) -> Universe {
        Universe::new((1..=self.n_parks as u16).map(ParkId), (1..=self.n_teams as u16).map(TeamId))
    }

    /// Park 1 and team 1.
    pub fn references(&self) -> References {
        References { park: ParkId(1), team: TeamId(1) }
    }

    fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |m: String| Err(SyntheticError::Invalid(m));
        if self.n_teams < 2 || self.n_parks != self.n_teams {
            return bad(format!("need n_parks == n_teams >= 2, got {} parks / {} teams", self.n_parks, self.n_teams));
        }
        if self.n_teams > 999 {
            return bad("at most 999 teams".into());
        }
        if self.true_park.len() != self.n_parks || self.true_def.len() != self.n_teams {
            return bad("true_park / true_def length must match n_parks / n_teams".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be a finite non-negative number, got {}", self.noise_sd));
        }
        if self.seasons.is_empty() {
            return bad("no seasons".into());
        }
        let s = &self.ev_la;
        if !(s.ev_sd > 0.0 && s.la_sd > 0.0) {
            return bad("sampler standard deviations must be positive".into());
        }
        Ok(())
    }

    /// Resolved (park index, team index, balls) triples, zero-ball cells removed.
    pub fn schedule_cells(&self) -> Result<Vec<(usize, usize, u64)>, SyntheticError> {
        let n = self.n_teams;
        let cells: Vec<(usize, usize, u64)> = match &self.schedule {
            Schedule::Balanced { balls } => {
                let total = (n * n) as u64;
                (0..n * n)
                    .map(|k| (k / n, k % n, balls / total + u64::from((k as u64) < balls % total)))
                    .collect()
            }
            Schedule::LeagueShaped { balls, road_parks } => {
                let road_parks = (*road_parks).clamp(1, n - 1);
                let per_team = balls / n as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5EED_5C4E_D01E);
                let mut out = Vec::new();
                for team in 0..n {
                    let home = per_team / 2;
                    out.push((team, team, home));
                    let mut others: Vec<usize> = (1..n).map(|k| (team + k) % n).collect();
                    // Keep the neighbour, shuffle the rest and take what is needed.
                    let neighbour = others.remove(0);
                    for i in (1..others.len()).rev() {
                        others.swap(i, rng.random_range(0..=i));
                    }
                    let mut road = vec![neighbour];
                    road.extend(others.into_iter().take(road_parks - 1));
                    let away = per_team - home;
                    for (j, park) in road.iter().enumerate() {
                        let extra = u64::from((j as u64) < away % road.len() as u64);
                        out.push((*park, team, away / road.len() as u64 + extra));
                    }
                }
                out.sort();
                out
            }
            Schedule::Explicit { cells } => {
                let mut out = Vec::new();
                for c in cells {
                    let (p, t) = (c.park as usize, c.team as usize);
                    if p == 0 || p > n || t == 0 || t > n {
                        return Err(SyntheticError::Invalid(format!("schedule cell ({}, {}) out of range", c.park, c.team)));
                    }
                    out.push((p - 1, t - 1, c.balls));
                }
                out
            }
        };
        Ok(cells.into_iter().filter(|c| c.2 > 0).collect())
    }
}

/// Parameters the data were generated from, in centered form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub mode: Mode,
    pub intercept: f64,
    pub park: BTreeMap<ParkId, f64>,
    pub def: BTreeMap<TeamId, f64>,
    pub season_offsets: BTreeMap<i32, f64>,
    pub noise_sd: f64,
}

impl GroundTruth {
    /// Centered intercept expected for `season`.
    pub fn intercept_for(&self, season: i32) -> f64 {
        self.intercept + self.season_offsets.get(&season).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// In end-to-end mode `r` is the outcome minus the generator's own
    /// contact-quality curve, not a grid residual.
    pub residuals: Vec<Residual>,
    pub truth: GroundTruth,
}

impl SyntheticData {
    pub fn balls(&self) -> Vec<BattedBall> {
        self.residuals.iter().map(|r| r.ball).collect()
    }

    /// Rows in the ingest schema, coded against [`synthetic_roster`].
    pub fn event_rows(&self) -> Vec<RawEventRow> {
        self.residuals
            .iter()
            .map(|r| {
                let b = &r.ball;
                let home = b.home_team();
                let away = if home == b.def_team { b.bat_team } else { b.def_team };
                RawEventRow {
                    launch_speed: Some(b.ev),
                    launch_angle: Some(b.la),
                    events: event_code_for(b.tb).to_string(),
                    home_team: team_code(home),
                    away_team: team_code(away),
                    inning_topbot: b.half.as_statcast().to_string(),
                    game_date: format!("{}-06-15", b.season),
                    game_year: b.season,
                    game_type: "R".to_string(),
                }
            })
            .collect()
    }
}

fn team_code(team: TeamId) -> String {
    format!("T{:03}", team.0)
}

/// Roster for `n` synthetic teams: code `T001`.. with team `i` at park `i`.
pub fn synthetic_roster(n: usize) -> Roster {
    let teams = (1..=n as u16)
        .map(|i| TeamEntry {
            code: team_code(TeamId(i)),
            aliases: vec![],
            id: i,
            park: i,
            park_name: Some(format!("Park {i}")),
            first_season: None,
            last_season: None,
        })
        .collect();
    Roster::new(teams).expect("synthetic roster is a bijection")
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hit value and base hit probability for a contact profile. Expected total
/// bases is their product.
pub fn hit_profile(ev: f64, la: f64) -> (u8, f64) {
    let hard = sigmoid((ev - 95.0) / 6.0);
    let value = if ev >= 98.0 && (22.0..=40.0).contains(&la) {
        4
    } else if ev >= 90.0 && (10.0..30.0).contains(&la) {
        2
    } else {
        1
    };
    let p = 0.08 + 0.55 * hard * (-((la - 15.0) / 25.0).powi(2)).exp();
    (value, p)
}

fn draw_truncated(rng: &mut ChaCha8Rng, dist: &Normal<f64>, lo: f64, hi: f64) -> f64 {
    for _ in 0..64 {
        let v = dist.sample(rng);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
    dist.sample(rng).clamp(lo, hi)
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData, SyntheticError> {
    config.validate()?;
    let n = config.n_teams;
    let cells = config.schedule_cells()?;
    let universe = config.universe();
    let comps: Vec<Component> =
        components(&universe.parks, &universe.teams, cells.iter().map(|&(p, t, _)| (ParkId(p as u16 + 1), TeamId(t as u16 + 1))));
    if comps.len() > 1 {
        return Err(EstimateError::Disconnected { components: comps }.into());
    }

    let raw = Effects {
        intercept: config.true_intercept,
        park: config.true_park.iter().enumerate().map(|(i, v)| (ParkId(i as u16 + 1), *v)).collect(),
        def: config.true_def.iter().enumerate().map(|(i, v)| (TeamId(i as u16 + 1), *v)).collect(),
    };
    let truth_effects = center_effects(&raw).effects;
    let truth = GroundTruth {
        seed: config.seed,
        mode: config.mode,
        intercept: truth_effects.intercept,
        park: truth_effects.park.clone(),
        def: truth_effects.def.clone(),
        season_offsets: config.seasons.iter().map(|s| (s.season, s.offset)).collect(),
        noise_sd: config.noise_sd,
    };

    let noise = Normal::new(0.0, config.noise_sd.max(0.0)).map_err(|e| SyntheticError::Invalid(e.to_string()))?;
    let ev_dist = Normal::new(config.ev_la.ev_mean, config.ev_la.ev_sd).map_err(|e| SyntheticError::Invalid(e.to_string()))?;
    let la_dist = Normal::new(config.ev_la.la_mean, config.ev_la.la_sd).map_err(|e| SyntheticError::Invalid(e.to_string()))?;

    let total: u64 = cells.iter().map(|c| c.2).sum::<u64>() * config.seasons.len() as u64;
    let mut residuals = Vec::with_capacity(total as usize);
    for (season_ix, spec) in config.seasons.iter().enumerate() {
        for &(p, t, balls) in &cells {
            let park = ParkId(p as u16 + 1);
            let def_team = TeamId(t as u16 + 1);
            let shift = truth.intercept + spec.offset + truth.park[&park] - truth.def[&def_team];
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((season_ix * n * n + p * n + t) as u64);
            for _ in 0..balls {
                let ev = draw_truncated(&mut rng, &ev_dist, 0.0, 120.0);
                let la = draw_truncated(&mut rng, &la_dist, -90.0, 90.0);
                let (half, bat_team) = if p == t {
                    let k = rng.random_range(1..n);
                    (InningHalf::Top, TeamId(((t + k) % n) as u16 + 1))
                } else {
                    (InningHalf::Bottom, TeamId(p as u16 + 1))
                };
                let (tb, r) = match config.mode {
                    Mode::Residual => (0, shift + if config.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 }),
                    Mode::EndToEnd => {
                        let (value, p_hit) = hit_profile(ev, la);
                        let expected = f64::from(value) * p_hit;
                        let prob = ((expected + shift) / f64::from(value)).clamp(0.0, 1.0);
                        let tb = if rng.random::<f64>() < prob { value } else { 0 };
                        (tb, f64::from(tb) - expected)
                    }
                };
                let ball = BattedBall { ev, la, tb, park, def_team, bat_team, half, season: spec.season };
                residuals.push(Residual { ball, r });
            }
        }
    }
    Ok(SyntheticData { residuals, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::aggregate_cells;

    #[test]
    fn noise_free_cell_means_are_exact() {
        let cfg = SyntheticConfig::balanced(3, 5, 500, 0.05, 0.0);
        let data = generate(&cfg).unwrap();
        for c in aggregate_cells(&data.residuals) {
            let want = data.truth.intercept + data.truth.park[&c.park] - data.truth.def[&c.def_team];
            assert!((c.y - want).abs() < 1e-12);
        }
    }

    #[test]
    fn truth_is_centered() {
        let mut cfg = SyntheticConfig::balanced(3, 4, 100, 0.05, 0.0);
        cfg.true_park = vec![1.0, 2.0, 3.0, 4.0];
        let data = generate(&cfg).unwrap();
        assert!(data.truth.park.values().sum::<f64>().abs() < 1e-12);
        assert!((data.truth.intercept - 2.5).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_output() {
        let mut cfg = SyntheticConfig::balanced(11, 6, 2_000, 0.05, 0.9);
        cfg.mode = Mode::EndToEnd;
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 12;
        assert_ne!(generate(&cfg).unwrap().residuals, generate(&other).unwrap().residuals);
    }

    #[test]
    fn balanced_schedule_splits_exactly() {
        let cfg = SyntheticConfig::balanced(1, 3, 100, 0.0, 0.0);
        let cells = cfg.schedule_cells().unwrap();
        assert_eq!(cells.len(), 9);
        assert_eq!(cells.iter().map(|c| c.2).sum::<u64>(), 100);
    }

    #[test]
    fn league_shaped_schedule_is_sparse_and_connected() {
        let mut cfg = SyntheticConfig::balanced(9, 30, 100_000, 0.05, 0.9);
        cfg.schedule = Schedule::LeagueShaped { balls: 100_000, road_parks: 12 };
        let cells = cfg.schedule_cells().unwrap();
        assert_eq!(cells.len(), 30 * 13);
        assert!(generate(&cfg).is_ok());
    }

    #[test]
    fn disconnected_schedule_is_refused() {
        let mut cfg = SyntheticConfig::balanced(1, 4, 0, 0.0, 0.0);
        cfg.schedule = Schedule::Explicit {
            cells: [(1, 1), (1, 2), (2, 1), (2, 2), (3, 3), (3, 4), (4, 3), (4, 4)]
                .map(|(park, team)| ScheduleCell { park, team, balls: 10 })
                .to_vec(),
        };
        assert!(matches!(generate(&cfg), Err(SyntheticError::Schedule(EstimateError::Disconnected { .. }))));
    }

    #[test]
    fn half_inning_attribution_is_consistent() {
        let data = generate(&SyntheticConfig::balanced(5, 4, 400, 0.05, 0.5)).unwrap();
        for r in &data.residuals {
            let b = r.ball;
            assert_ne!(b.bat_team, b.def_team);
            assert_eq!(b.home_team().0, b.park.0);
        }
    }

    #[test]
    fn hit_profile_stays_in_bounds() {
        for ev in (0..=120).step_by(3) {
            for la in (-90..=90).step_by(3) {
                let (v, p) = hit_profile(ev as f64, la as f64);
                assert!((1..=4).contains(&v));
                assert!((0.08..=0.63).contains(&p));
            }
        }
    }
}
