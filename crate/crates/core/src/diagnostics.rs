//! Home/away residual splits, index stability, and the league intercept series.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::baseline::Residual;
use crate::ids::{InningHalf, TeamId};
use crate::standardize::{CenteredEstimates, IndexTable, SdConvention};

/// Mean residual over one quadrant; `mean` is `None` when the quadrant is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Quadrant {
    pub n: u64,
    pub mean: Option<f64>,
}

impl Quadrant {
    fn from_sum(n: u64, sum: f64) -> Self {
        Quadrant { n, mean: (n > 0).then(|| sum / n as f64) }
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Four-way split of the residuals involving one team in one season.
///
/// `team_*` are the team's own batted balls, `opp_*` are balls hit by its
/// opponents while it fields. Home and away follow the listed home team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeAwaySplit {
    pub team: TeamId,
    pub season: i32,
    pub team_home: Quadrant,
    pub team_away: Quadrant,
    pub opp_home: Quadrant,
    pub opp_away: Quadrant,
}

impl HomeAwaySplit {
    pub fn total(&self) -> u64 {
        self.team_home.n + self.team_away.n + self.opp_home.n + self.opp_away.n
    }

    pub fn empty_quadrants(&self) -> Vec<&'static str> {
        [
            ("team_home", &self.team_home),
            ("team_away", &self.team_away),
            ("opp_home", &self.opp_home),
            ("opp_away", &self.opp_away),
        ]
        .into_iter()
        .filter(|(_, q)| q.is_empty())
        .map(|(name, _)| name)
        .collect()
    }
}

pub fn home_away_split(residuals: &[Residual], team: TeamId, season: i32) -> HomeAwaySplit {
    // [team_home, team_away, opp_home, opp_away]
    let mut n = [0u64; 4];
    let mut sum = [0f64; 4];
    for r in residuals.iter().filter(|r| r.ball.season == season) {
        let b = &r.ball;
        let slot = if b.bat_team == team {
            match b.half {
                InningHalf::Bottom => 0,
                InningHalf::Top => 1,
            }
        } else if b.def_team == team {
            match b.half {
                InningHalf::Top => 2,
                InningHalf::Bottom => 3,
            }
        } else {
            continue;
        };
        n[slot] += 1;
        sum[slot] += r.r;
    }
    HomeAwaySplit {
        team,
        season,
        team_home: Quadrant::from_sum(n[0], sum[0]),
        team_away: Quadrant::from_sum(n[1], sum[1]),
        opp_home: Quadrant::from_sum(n[2], sum[2]),
        opp_away: Quadrant::from_sum(n[3], sum[3]),
    }
}

/// Splits for every (team, season) that appears in the residuals.
pub fn home_away_all(residuals: &[Residual]) -> Vec<HomeAwaySplit> {
    let keys: BTreeSet<(i32, TeamId)> = residuals
        .iter()
        .flat_map(|r| [(r.ball.season, r.ball.bat_team), (r.ball.season, r.ball.def_team)])
        .collect();
    let mut by_season: BTreeMap<i32, Vec<Residual>> = BTreeMap::new();
    for r in residuals {
        by_season.entry(r.ball.season).or_default().push(*r);
    }
    keys.into_iter().map(|(season, team)| home_away_split(&by_season[&season], team, season)).collect()
}

fn fmt_mean(q: &Quadrant, decimals: usize) -> String {
    q.mean.map(|m| format!("{m:.decimals$}")).unwrap_or_else(|| "empty".to_string())
}

pub fn write_home_away_csv<W: Write>(mut w: W, splits: &[HomeAwaySplit], label: impl Fn(TeamId) -> String) -> std::io::Result<()> {
    writeln!(w, "team,season,team_tbr_home,team_tbr_away,opp_tbr_home,opp_tbr_away,n_team_home,n_team_away,n_opp_home,n_opp_away")?;
    let v = |q: &Quadrant| q.mean.map(|m| m.to_string()).unwrap_or_default();
    for s in splits {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            label(s.team),
            s.season,
            v(&s.team_home),
            v(&s.team_away),
            v(&s.opp_home),
            v(&s.opp_away),
            s.team_home.n,
            s.team_away.n,
            s.opp_home.n,
            s.opp_away.n
        )?;
    }
    Ok(())
}

pub fn write_home_away_markdown<W: Write>(mut w: W, splits: &[HomeAwaySplit], label: impl Fn(TeamId) -> String) -> std::io::Result<()> {
    writeln!(w, "| Team (Season) | Opp TBR (home) | Opp TBR (away) | Team TBR (home) | Team TBR (away) |")?;
    writeln!(w, "|---|---:|---:|---:|---:|")?;
    for s in splits {
        writeln!(
            w,
            "| {} ({}) | {} | {} | {} | {} |",
            label(s.team),
            s.season,
            fmt_mean(&s.opp_home, 3),
            fmt_mean(&s.opp_away, 3),
            fmt_mean(&s.team_home, 3),
            fmt_mean(&s.team_away, 3)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub entity: u16,
    pub metric: String,
    pub n_seasons: usize,
    /// `None` when the entity has fewer than two seasons.
    pub sd_over_seasons: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub metric: String,
    pub sd_convention: SdConvention,
    pub rows: Vec<StabilityRow>,
    /// Mean of the per-entity SDs.
    pub average: Option<f64>,
}

/// Per-entity SD of the index across seasons.
pub fn stability_report(tables: &[IndexTable], metric: &str, sd: SdConvention) -> StabilityReport {
    let mut series: BTreeMap<u16, Vec<f64>> = BTreeMap::new();
    for t in tables {
        for row in &t.rows {
            series.entry(row.entity).or_default().push(row.index);
        }
    }
    let rows: Vec<StabilityRow> = series
        .into_iter()
        .map(|(entity, values)| StabilityRow {
            entity,
            metric: metric.to_string(),
            n_seasons: values.len(),
            sd_over_seasons: (values.len() >= 2).then(|| sd.mean_sd(&values).1),
        })
        .collect();
    let sds: Vec<f64> = rows.iter().filter_map(|r| r.sd_over_seasons).collect();
    let average = (!sds.is_empty()).then(|| sds.iter().sum::<f64>() / sds.len() as f64);
    StabilityReport { metric: metric.to_string(), sd_convention: sd, rows, average }
}

impl StabilityReport {
    pub fn write_csv<W: Write>(&self, mut w: W, label: impl Fn(u16) -> String) -> std::io::Result<()> {
        writeln!(w, "team,metric,n_seasons,sd_over_seasons")?;
        for r in &self.rows {
            let sd = r.sd_over_seasons.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{sd}", label(r.entity), r.metric, r.n_seasons)?;
        }
        let avg = self.average.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "Average,{},,{avg}", self.metric)
    }

    pub fn write_markdown<W: Write>(&self, mut w: W, label: impl Fn(u16) -> String) -> std::io::Result<()> {
        writeln!(w, "| Team | SD of {} ({:?} SD) |", self.metric, self.sd_convention)?;
        writeln!(w, "|---|---:|")?;
        for r in &self.rows {
            let sd = r.sd_over_seasons.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into());
            writeln!(w, "| {} | {sd} |", label(r.entity))?;
        }
        let avg = self.average.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into());
        writeln!(w, "| **Average** | **{avg}** |")
    }
}

/// Centered intercept by season.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterceptSeries {
    pub points: BTreeMap<i32, f64>,
}

/// Estimates without a season are skipped.
pub fn intercept_series(estimates: &[CenteredEstimates]) -> InterceptSeries {
    InterceptSeries {
        points: estimates.iter().filter_map(|e| Some((e.season?, e.effects.intercept))).collect(),
    }
}

impl InterceptSeries {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "season,intercept")?;
        for (s, v) in &self.points {
            writeln!(w, "{s},{v}")?;
        }
        Ok(())
    }

    /// Bar chart around a zero baseline.
    pub fn to_svg(&self) -> String {
        let (width, height, margin) = (640.0, 320.0, 40.0);
        let n = self.points.len().max(1) as f64;
        let peak = self.points.values().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
        let plot_h = (height - 2.0 * margin) / 2.0;
        let zero_y = margin + plot_h;
        let slot = (width - 2.0 * margin) / n;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
        );
        svg += &format!("<text x=\"{margin}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">League intercept by season (bases)</text>\n");
        svg += &format!(
            "<line x1=\"{margin}\" y1=\"{zero_y}\" x2=\"{}\" y2=\"{zero_y}\" stroke=\"black\"/>\n",
            width - margin
        );
        for (i, (season, v)) in self.points.iter().enumerate() {
            let h = v.abs() / peak * plot_h;
            let x = margin + i as f64 * slot + slot * 0.15;
            let y = if *v >= 0.0 { zero_y - h } else { zero_y };
            let fill = if *v >= 0.0 { "#c0392b" } else { "#2471a3" };
            svg += &format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{fill}\"><title>{season}: {v:.4}</title></rect>\n",
                slot * 0.7
            );
            svg += &format!(
                "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{season}</text>\n",
                x + slot * 0.35,
                height - 10.0
            );
        }
        svg += "</svg>\n";
        svg
    }
}

/// Pearson correlation; `None` for fewer than two pairs or zero variance.
pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Externally published metric keyed by (season, team code).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceMetric {
    pub values: BTreeMap<(i32, String), f64>,
}

impl ReferenceMetric {
    /// Reads a `season,team,value` CSV.
    pub fn read_csv<R: Read>(source: R) -> Result<Self, csv::Error> {
        #[derive(Deserialize)]
        struct Row {
            season: i32,
            team: String,
            value: f64,
        }
        let mut values = BTreeMap::new();
        for row in csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(source).deserialize() {
            let row: Row = row?;
            values.insert((row.season, row.team.trim().to_string()), row.value);
        }
        Ok(ReferenceMetric { values })
    }

    /// Per-season correlation between our index and the reference metric.
    pub fn correlate(&self, tables: &[IndexTable], label: impl Fn(u16) -> String) -> BTreeMap<i32, Option<f64>> {
        tables
            .iter()
            .filter_map(|t| {
                let season = t.season?;
                let pairs: Vec<(f64, f64)> = t
                    .rows
                    .iter()
                    .filter_map(|r| self.values.get(&(season, label(r.entity))).map(|&v| (r.index, v)))
                    .collect();
                Some((season, pearson(&pairs)))
            })
            .collect()
    }
}
