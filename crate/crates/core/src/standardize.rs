//! League-centered effects, z-scores and the 100-based index.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::estimator::{EffectEstimates, Universe};
use crate::ids::{ParkId, TeamId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StandardizeError {
    #[error("incomplete roster: missing parks {missing_parks:?}, missing teams {missing_teams:?}")]
    IncompleteRoster { missing_parks: Vec<u16>, missing_teams: Vec<u16> },
    #[error("need at least 2 entities to standardize, got {0}")]
    TooFewEntities(usize),
    #[error("effects have zero spread; z-scores are undefined")]
    ZeroSpread,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N − 1.
    Sample,
}

impl SdConvention {
    pub fn mean_sd(self, values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let denom = match self {
            SdConvention::Population => n,
            SdConvention::Sample => n - 1.0,
        };
        (mean, (ss / denom).sqrt())
    }
}

/// An intercept with park and defense effects, in any parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effects {
    pub intercept: f64,
    pub park: BTreeMap<ParkId, f64>,
    pub def: BTreeMap<TeamId, f64>,
}

impl Effects {
    pub fn fitted(&self, park: ParkId, team: TeamId) -> Option<f64> {
        Some(self.intercept + self.park.get(&park)? - self.def.get(&team)?)
    }
}

impl From<&EffectEstimates> for Effects {
    fn from(est: &EffectEstimates) -> Self {
        Effects { intercept: est.intercept, park: est.park_effects.clone(), def: est.def_effects.clone() }
    }
}

/// Effects re-expressed relative to the league mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteredEstimates {
    pub season: Option<i32>,
    pub effects: Effects,
    /// Means that were subtracted from the reference-based effects.
    pub park_mean: f64,
    pub def_mean: f64,
}

/// Subtracts each group's mean and moves the difference into the intercept
/// so that every fitted value is unchanged.
pub fn center_effects(e: &Effects) -> CenteredEstimates {
    let park_mean = e.park.values().sum::<f64>() / e.park.len() as f64;
    let def_mean = e.def.values().sum::<f64>() / e.def.len() as f64;
    CenteredEstimates {
        season: None,
        effects: Effects {
            intercept: e.intercept + park_mean - def_mean,
            park: e.park.iter().map(|(k, v)| (*k, v - park_mean)).collect(),
            def: e.def.iter().map(|(k, v)| (*k, v - def_mean)).collect(),
        },
        park_mean,
        def_mean,
    }
}

/// Centers a reference-based fit. Every park and team of `roster` must carry
/// an estimate; the mean runs over all of them, reference zeros included.
pub fn center(est: &EffectEstimates, roster: &Universe) -> Result<CenteredEstimates, StandardizeError> {
    let missing_parks: Vec<u16> = roster.parks.iter().filter(|p| !est.park_effects.contains_key(p)).map(|p| p.0).collect();
    let missing_teams: Vec<u16> = roster.teams.iter().filter(|t| !est.def_effects.contains_key(t)).map(|t| t.0).collect();
    if !missing_parks.is_empty() || !missing_teams.is_empty() {
        return Err(StandardizeError::IncompleteRoster { missing_parks, missing_teams });
    }
    let parks: BTreeSet<_> = roster.parks.iter().collect();
    let teams: BTreeSet<_> = roster.teams.iter().collect();
    let effects = Effects {
        intercept: est.intercept,
        park: est.park_effects.iter().filter(|(k, _)| parks.contains(k)).map(|(k, v)| (*k, *v)).collect(),
        def: est.def_effects.iter().filter(|(k, _)| teams.contains(k)).map(|(k, v)| (*k, *v)).collect(),
    };
    let mut centered = center_effects(&effects);
    centered.season = est.season;
    Ok(centered)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityGroup {
    Park,
    Defense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub entity: u16,
    pub effect: f64,
    pub z: f64,
    pub index: f64,
}

/// Standardized effects of one group in one season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexTable {
    pub season: Option<i32>,
    pub group: EntityGroup,
    pub sd_convention: SdConvention,
    pub mean: f64,
    pub sd: f64,
    pub rows: Vec<IndexRow>,
}

impl IndexTable {
    pub fn get(&self, entity: u16) -> Option<&IndexRow> {
        self.rows.iter().find(|r| r.entity == entity)
    }
}

/// Maps an index value from a z-score.
pub fn index_of(z: f64) -> f64 {
    100.0 + 20.0 * z
}

/// z-scores against the group's own mean and SD, and `index = 100 + 20 z`.
pub fn zscore_index(
    effects: &[(u16, f64)],
    group: EntityGroup,
    sd_convention: SdConvention,
) -> Result<IndexTable, StandardizeError> {
    if effects.len() < 2 {
        return Err(StandardizeError::TooFewEntities(effects.len()));
    }
    let values: Vec<f64> = effects.iter().map(|(_, v)| *v).collect();
    let (mean, sd) = sd_convention.mean_sd(&values);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // NaN spread counts as zero.
    if sd.is_nan() || sd <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(StandardizeError::ZeroSpread);
    }
    let rows = effects
        .iter()
        .map(|&(entity, effect)| {
            let z = (effect - mean) / sd;
            IndexRow { entity, effect, z, index: index_of(z) }
        })
        .collect();
    Ok(IndexTable { season: None, group, sd_convention, mean, sd, rows })
}

impl CenteredEstimates {
    pub fn park_index(&self, sd: SdConvention) -> Result<IndexTable, StandardizeError> {
        let effects: Vec<_> = self.effects.park.iter().map(|(k, v)| (k.0, *v)).collect();
        let mut table = zscore_index(&effects, EntityGroup::Park, sd)?;
        table.season = self.season;
        Ok(table)
    }

    pub fn defense_index(&self, sd: SdConvention) -> Result<IndexTable, StandardizeError> {
        let effects: Vec<_> = self.effects.def.iter().map(|(k, v)| (k.0, *v)).collect();
        let mut table = zscore_index(&effects, EntityGroup::Defense, sd)?;
        table.season = self.season;
        Ok(table)
    }
}

/// `Pr(Z > z)` for a standard normal `Z`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Which column of an [`IndexTable`] to lay out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableValue {
    Effect,
    Z,
    Index,
}

/// Entity-by-season layout of several index tables.
#[derive(Debug, Clone, PartialEq)]
pub struct WideTable {
    pub seasons: Vec<i32>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl WideTable {
    /// Rows are sorted by label; tables without a season are skipped.
    pub fn build(tables: &[IndexTable], value: TableValue, label: impl Fn(u16) -> String) -> Self {
        let seasons: Vec<i32> = tables.iter().filter_map(|t| t.season).collect::<BTreeSet<_>>().into_iter().collect();
        let mut grid: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
        for t in tables {
            let Some(col) = t.season.and_then(|s| seasons.iter().position(|&x| x == s)) else { continue };
            for row in &t.rows {
                let cells = grid.entry(label(row.entity)).or_insert_with(|| vec![None; seasons.len()]);
                cells[col] = Some(match value {
                    TableValue::Effect => row.effect,
                    TableValue::Z => row.z,
                    TableValue::Index => row.index,
                });
            }
        }
        WideTable { seasons, rows: grid.into_iter().collect() }
    }

    /// Full-precision CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("team".to_string()).chain(self.seasons.iter().map(|s| s.to_string())).collect();
        writeln!(w, "{}", header.join(","))?;
        for (label, cells) in &self.rows {
            let cells: Vec<String> = cells.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()).collect();
            writeln!(w, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Markdown with `decimals` digits; 0 prints rounded integers.
    pub fn write_markdown<W: Write>(&self, mut w: W, decimals: usize) -> std::io::Result<()> {
        let seasons: Vec<String> = self.seasons.iter().map(|s| s.to_string()).collect();
        writeln!(w, "| Team | {} |", seasons.join(" | "))?;
        writeln!(w, "|---|{}", "---:|".repeat(self.seasons.len()))?;
        for (label, cells) in &self.rows {
            let cells: Vec<String> =
                cells.iter().map(|c| c.map(|v| format!("{v:.decimals$}")).unwrap_or_default()).collect();
            writeln!(w, "| {label} | {} |", cells.join(" | "))?;
        }
        Ok(())
    }
}
