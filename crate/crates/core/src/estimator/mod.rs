//! Simultaneous park and defense fixed-effects model.
//!
//! Each residual is modelled as `intercept + park[p] − defense[d] + noise`.
//! One park and one defensive team are pinned to zero. Residuals are first
//! collapsed into (park, defense) cells; the cell means are then fitted by
//! weighted least squares with the cell counts as weights, which gives the
//! same coefficients as ordinary least squares on the individual balls.
//! [`fit_ols_ball_level`] fits the ball-level system directly and exists to
//! check that equivalence.

mod identify;
mod qr;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use identify::{components, Component};

use crate::baseline::Residual;
use crate::ids::{ParkId, TeamId};
use crate::roster::Roster;
use qr::{householder, GivensAccumulator, Triangular};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("reference park {0} is not in the universe")]
    ReferenceParkMissing(ParkId),
    #[error("reference team {0} is not in the universe")]
    ReferenceTeamMissing(TeamId),
    #[error("cell ({park}, {team}) refers to an entity outside the universe")]
    UnknownEntity { park: ParkId, team: TeamId },
    #[error("cell ({park}, {team}) has zero weight")]
    EmptyCell { park: ParkId, team: TeamId },
    #[error("underdetermined: {observations} observations for {parameters} parameters")]
    Underdetermined { observations: usize, parameters: usize },
    #[error("not identifiable: park-team graph splits into {} components: {}", .components.len(), display_components(.components))]
    Disconnected { components: Vec<Component> },
    #[error("design is rank deficient at column {column}")]
    RankDeficient { column: usize },
}

fn display_components(components: &[Component]) -> String {
    components.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Reference categories whose effects are pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct References {
    pub park: ParkId,
    pub team: TeamId,
}

impl References {
    /// Truist Park and the Atlanta Braves.
    pub fn mlb(roster: &Roster) -> Option<Self> {
        Some(References { park: roster.park_by_code("ATL")?, team: roster.team_by_code("ATL")? })
    }
}

/// The parks and teams that receive a coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe {
    pub parks: Vec<ParkId>,
    pub teams: Vec<TeamId>,
}

impl Universe {
    pub fn new(parks: impl IntoIterator<Item = ParkId>, teams: impl IntoIterator<Item = TeamId>) -> Self {
        let parks: BTreeSet<_> = parks.into_iter().collect();
        let teams: BTreeSet<_> = teams.into_iter().collect();
        Universe { parks: parks.into_iter().collect(), teams: teams.into_iter().collect() }
    }

    pub fn from_roster(roster: &Roster, season: i32) -> Self {
        Universe::new(roster.parks_in(season), roster.teams_in(season))
    }

    /// Every park and team that appears in at least one cell.
    pub fn from_cells(cells: &[CellAggregate]) -> Self {
        Universe::new(cells.iter().map(|c| c.park), cells.iter().map(|c| c.def_team))
    }

    /// Intercept plus one column per non-reference park and team.
    pub fn n_parameters(&self) -> usize {
        1 + self.parks.len().saturating_sub(1) + self.teams.len().saturating_sub(1)
    }
}

/// One (park, defensive team) cell: ball count and mean residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub park: ParkId,
    pub def_team: TeamId,
    pub n: u64,
    pub y: f64,
}

/// Groups residuals by (park, defensive team); output is sorted by that key.
pub fn aggregate_cells(residuals: &[Residual]) -> Vec<CellAggregate> {
    let mut acc: BTreeMap<(ParkId, TeamId), (u64, f64)> = BTreeMap::new();
    for r in residuals {
        let e = acc.entry((r.ball.park, r.ball.def_team)).or_default();
        e.0 += 1;
        e.1 += r.r;
    }
    acc.into_iter().map(|((park, def_team), (n, sum))| CellAggregate { park, def_team, n, y: sum / n as f64 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub intercept: f64,
    pub park: BTreeMap<ParkId, f64>,
    pub def: BTreeMap<TeamId, f64>,
}

/// Reference-based fit of one season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimates {
    pub season: Option<i32>,
    pub refs: References,
    pub intercept: f64,
    /// Park effects, reference park included as an explicit zero.
    pub park_effects: BTreeMap<ParkId, f64>,
    /// Defensive effects in bases-saved orientation; reference team is zero.
    pub def_effects: BTreeMap<TeamId, f64>,
    pub n_cells: usize,
    pub n_balls: u64,
    /// Σ weight × (observed − fitted)² at the level the model was fitted.
    pub weighted_rss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<StdErrors>,
}

impl EffectEstimates {
    /// Model prediction for a ball at `park` fielded by `team`.
    pub fn fitted(&self, park: ParkId, team: TeamId) -> Option<f64> {
        Some(self.intercept + self.park_effects.get(&park)? - self.def_effects.get(&team)?)
    }

    /// Intercept, then every park effect, then every defense effect, in id order.
    pub fn coefficients(&self) -> Vec<f64> {
        std::iter::once(self.intercept)
            .chain(self.park_effects.values().copied())
            .chain(self.def_effects.values().copied())
            .collect()
    }

    pub fn with_season(mut self, season: i32) -> Self {
        self.season = Some(season);
        self
    }

    /// Long format: `season,entity_type,entity_id,estimate,std_error`.
    pub fn write_long_csv<W: Write>(&self, mut w: W, roster: Option<&Roster>) -> std::io::Result<()> {
        let season = self.season.map(|s| s.to_string()).unwrap_or_default();
        let fmt_se = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let park_label = |p: ParkId| roster.map_or_else(|| p.0.to_string(), |r| r.park_code(p));
        let team_label = |t: TeamId| roster.map_or_else(|| t.0.to_string(), |r| r.team_code(t));
        writeln!(w, "season,entity_type,entity_id,estimate,std_error")?;
        let se = self.stderr.as_ref();
        writeln!(w, "{season},intercept,,{},{}", self.intercept, fmt_se(se.map(|s| s.intercept)))?;
        for (p, v) in &self.park_effects {
            writeln!(w, "{season},park,{},{v},{}", park_label(*p), fmt_se(se.and_then(|s| s.park.get(p).copied())))?;
        }
        for (t, v) in &self.def_effects {
            writeln!(w, "{season},defense,{},{v},{}", team_label(*t), fmt_se(se.and_then(|s| s.def.get(t).copied())))?;
        }
        Ok(())
    }
}

/// Column layout of the reference-coded design.
struct Layout<'a> {
    universe: &'a Universe,
    refs: References,
    park_col: BTreeMap<ParkId, usize>,
    team_col: BTreeMap<TeamId, usize>,
}

impl<'a> Layout<'a> {
    fn new(universe: &'a Universe, refs: References) -> Result<Self, EstimateError> {
        if !universe.parks.contains(&refs.park) {
            return Err(EstimateError::ReferenceParkMissing(refs.park));
        }
        if !universe.teams.contains(&refs.team) {
            return Err(EstimateError::ReferenceTeamMissing(refs.team));
        }
        let mut col = 1;
        let mut park_col = BTreeMap::new();
        for &p in universe.parks.iter().filter(|&&p| p != refs.park) {
            park_col.insert(p, col);
            col += 1;
        }
        let mut team_col = BTreeMap::new();
        for &t in universe.teams.iter().filter(|&&t| t != refs.team) {
            team_col.insert(t, col);
            col += 1;
        }
        Ok(Layout { universe, refs, park_col, team_col })
    }

    fn n_params(&self) -> usize {
        1 + self.park_col.len() + self.team_col.len()
    }

    /// Sparse design row; the defense indicator enters with −1.
    fn row(&self, park: ParkId, team: TeamId) -> Result<([(usize, f64); 3], usize), EstimateError> {
        let known = self.universe.parks.binary_search(&park).is_ok() && self.universe.teams.binary_search(&team).is_ok();
        if !known {
            return Err(EstimateError::UnknownEntity { park, team });
        }
        let mut row = [(0, 1.0), (0, 0.0), (0, 0.0)];
        let mut len = 1;
        if let Some(&c) = self.park_col.get(&park) {
            row[len] = (c, 1.0);
            len += 1;
        }
        if let Some(&c) = self.team_col.get(&team) {
            row[len] = (c, -1.0);
            len += 1;
        }
        Ok((row, len))
    }

    fn check_identifiable(&self, observations: usize, edges: impl IntoIterator<Item = (ParkId, TeamId)>) -> Result<(), EstimateError> {
        let parameters = self.n_params();
        if observations < parameters {
            return Err(EstimateError::Underdetermined { observations, parameters });
        }
        let comps = components(&self.universe.parks, &self.universe.teams, edges);
        if comps.len() > 1 {
            return Err(EstimateError::Disconnected { components: comps });
        }
        Ok(())
    }

    fn unpack(&self, tri: &Triangular, dof: Option<f64>, n_cells: usize, n_balls: u64) -> Result<EffectEstimates, EstimateError> {
        let beta = tri.solve().map_err(|column| EstimateError::RankDeficient { column })?;
        let coef_of_park = |p: &ParkId| self.park_col.get(p).map_or(0.0, |&c| beta[c]);
        let coef_of_team = |t: &TeamId| self.team_col.get(t).map_or(0.0, |&c| beta[c]);
        let park_effects = self.universe.parks.iter().map(|p| (*p, coef_of_park(p))).collect();
        let def_effects = self.universe.teams.iter().map(|t| (*t, coef_of_team(t))).collect();

        let stderr = dof.filter(|&d| d > 0.0).map(|dof| {
            let sigma2 = tri.rss / dof;
            let var = tri.inverse_gram_diagonal();
            let se = |c: Option<&usize>| c.map_or(0.0, |&c| (sigma2 * var[c]).sqrt());
            StdErrors {
                intercept: (sigma2 * var[0]).sqrt(),
                park: self.universe.parks.iter().map(|p| (*p, se(self.park_col.get(p)))).collect(),
                def: self.universe.teams.iter().map(|t| (*t, se(self.team_col.get(t)))).collect(),
            }
        });
        Ok(EffectEstimates {
            season: None,
            refs: self.refs,
            intercept: beta[0],
            park_effects,
            def_effects,
            n_cells,
            n_balls,
            weighted_rss: tri.rss,
            stderr,
        })
    }
}

/// Weighted least squares on cell means with weights `n`.
///
/// Rows are scaled by `√n` and solved by Householder QR. The park–team
/// incidence graph must be connected over the whole universe.
pub fn fit_wls(cells: &[CellAggregate], universe: &Universe, refs: References) -> Result<EffectEstimates, EstimateError> {
    let layout = Layout::new(universe, refs)?;
    let p = layout.n_params();
    let m = cells.len();
    let mut a = vec![0.0; m * p];
    let mut b = vec![0.0; m];
    for (i, cell) in cells.iter().enumerate() {
        if cell.n == 0 {
            return Err(EstimateError::EmptyCell { park: cell.park, team: cell.def_team });
        }
        let (row, len) = layout.row(cell.park, cell.def_team)?;
        let w = (cell.n as f64).sqrt();
        for &(j, v) in &row[..len] {
            a[i * p + j] = w * v;
        }
        b[i] = w * cell.y;
    }
    layout.check_identifiable(m, cells.iter().map(|c| (c.park, c.def_team)))?;
    let tri = householder(a, m, p, b);
    let n_balls = cells.iter().map(|c| c.n).sum();
    layout.unpack(&tri, Some((m - p) as f64), m, n_balls)
}

/// Ordinary least squares directly on per-ball residuals, by streaming Givens QR.
pub fn fit_ols_ball_level(residuals: &[Residual], universe: &Universe, refs: References) -> Result<EffectEstimates, EstimateError> {
    let layout = Layout::new(universe, refs)?;
    let p = layout.n_params();
    let mut acc = GivensAccumulator::new(p);
    let mut cells = BTreeSet::new();
    for r in residuals {
        let (row, len) = layout.row(r.ball.park, r.ball.def_team)?;
        cells.insert((r.ball.park, r.ball.def_team));
        acc.push(&row[..len], r.r);
    }
    layout.check_identifiable(residuals.len(), cells.iter().copied())?;
    let tri = acc.finish();
    layout.unpack(&tri, Some(residuals.len() as f64 - p as f64), cells.len(), residuals.len() as u64)
}

/// Aggregates the residuals of `season` and fits them.
pub fn fit_season(residuals: &[Residual], season: i32, universe: &Universe, refs: References) -> Result<EffectEstimates, EstimateError> {
    let in_season: Vec<Residual> = residuals.iter().filter(|r| r.ball.season == season).copied().collect();
    let cells = aggregate_cells(&in_season);
    Ok(fit_wls(&cells, universe, refs)?.with_season(season))
}
