use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tbr_core::baseline::{residuals, write_residuals_csv};
use tbr_core::estimator::fit_season;
use tbr_core::standardize::{center, IndexTable, TableValue, WideTable};
use tbr_core::{BaselineGrid, CenteredEstimates, EffectEstimates, ParkId, References, Residual, Roster, TeamId, Universe};

use super::ingest_files;
use crate::args::{require_paths, Common, EmptyCell, Format, IngestArgs, Sd};
use crate::error::CliError;
use crate::output::{Kind, Meta, Outputs};

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    /// Grid written by `build-baseline`
    #[arg(long)]
    pub baseline: PathBuf,
    /// Statcast-style CSV files
    #[arg(required = true)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Park pinned to zero, by home-team code (default ATL, else the lowest id)
    #[arg(long)]
    pub ref_park: Option<String>,
    /// Defensive team pinned to zero (default ATL, else the lowest id)
    #[arg(long)]
    pub ref_team: Option<String>,
    /// Handling of balls whose baseline cell is empty
    #[arg(long, value_enum, default_value = "drop")]
    pub empty_cell: EmptyCell,
    /// SD convention for the standardized indices
    #[arg(long, value_enum, default_value = "population")]
    pub sd: Sd,
}

/// Everything estimated for one season; the `season_<year>.json` artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeasonResult {
    pub season: i32,
    pub estimates: EffectEstimates,
    pub centered: CenteredEstimates,
    pub park_index: IndexTable,
    pub defense_index: IndexTable,
}

fn references(args: &EstimateArgs, roster: &Roster) -> Result<References, CliError> {
    let fallback = References::mlb(roster).unwrap_or(References { park: roster.park_ids()[0], team: roster.team_ids()[0] });
    let park = match &args.ref_park {
        Some(code) => roster.park_by_code(code).ok_or_else(|| CliError::usage("reference", format!("unknown park {code:?}")))?,
        None => fallback.park,
    };
    let team = match &args.ref_team {
        Some(code) => roster.team_by_code(code).ok_or_else(|| CliError::usage("reference", format!("unknown team {code:?}")))?,
        None => fallback.team,
    };
    Ok(References { park, team })
}

fn fit_one(res: &[Residual], season: i32, roster: &Roster, refs: References, args: &EstimateArgs) -> Result<SeasonResult, CliError> {
    let universe = Universe::from_roster(roster, season);
    let estimates = fit_season(res, season, &universe, refs).map_err(|e| CliError::from(e).in_season(season))?;
    let centered = center(&estimates, &universe)?;
    let park_index = centered.park_index(args.sd.into())?;
    let defense_index = centered.defense_index(args.sd.into())?;
    Ok(SeasonResult { season, estimates, centered, park_index, defense_index })
}

fn write_centered_csv(w: &mut Vec<u8>, c: &CenteredEstimates, roster: &Roster) -> std::io::Result<()> {
    let season = c.season.map(|s| s.to_string()).unwrap_or_default();
    writeln!(w, "season,entity_type,entity_id,estimate")?;
    writeln!(w, "{season},intercept,,{}", c.effects.intercept)?;
    for (p, v) in &c.effects.park {
        writeln!(w, "{season},park,{},{v}", roster.park_code(*p))?;
    }
    for (t, v) in &c.effects.def {
        writeln!(w, "{season},defense,{},{v}", roster.team_code(*t))?;
    }
    Ok(())
}

fn write_index_csv(w: &mut Vec<u8>, tables: [&IndexTable; 2], roster: &Roster) -> std::io::Result<()> {
    writeln!(w, "season,group,entity_id,effect,z,index")?;
    for t in tables {
        let season = t.season.map(|s| s.to_string()).unwrap_or_default();
        for r in &t.rows {
            let (group, label) = match t.group {
                tbr_core::standardize::EntityGroup::Park => ("park", roster.park_code(ParkId(r.entity))),
                tbr_core::standardize::EntityGroup::Defense => ("defense", roster.team_code(TeamId(r.entity))),
            };
            writeln!(w, "{season},{group},{label},{},{},{}", r.effect, r.z, r.index)?;
        }
    }
    Ok(())
}

pub fn run(args: &EstimateArgs) -> Result<Outputs, CliError> {
    require_paths(
        [args.baseline.as_path()].into_iter().chain(args.data.iter().map(PathBuf::as_path)).chain(args.common.roster.as_deref()),
    )?;
    let roster = args.common.load_roster()?;
    let refs = references(args, &roster)?;
    let file = File::open(&args.baseline).map_err(|e| CliError::io(&args.baseline, e))?;
    let (grid, _) = BaselineGrid::read_from(BufReader::new(file)).map_err(|e| CliError::from(e).in_file(&args.baseline))?;
    let (balls, ingest_report) = ingest_files(&args.data, &roster, &args.ingest.options(grid.spec))?;
    let (res, residual_report) = residuals(&balls, &grid, args.empty_cell.into())?;

    let seasons: BTreeSet<i32> = res.iter().map(|r| r.ball.season).collect();
    if seasons.is_empty() {
        return Err(CliError::runtime("data", "no batted balls left to estimate from"));
    }
    let results: Vec<SeasonResult> = seasons
        .par_iter()
        .map(|&s| fit_one(&res, s, &roster, refs, args))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;

    let formats = args.common.formats();
    let mut out = Outputs::create(&args.common.out, Meta::new("estimate", args))?;
    for r in &results {
        out.write_json(&format!("season_{}.json", r.season), r)?;
        if formats.contains(&Format::Csv) {
            out.write(&format!("estimates_{}.csv", r.season), Kind::Csv, |w| r.estimates.write_long_csv(w, Some(&roster)))?;
            out.write(&format!("centered_{}.csv", r.season), Kind::Csv, |w| write_centered_csv(w, &r.centered, &roster))?;
            out.write(&format!("index_{}.csv", r.season), Kind::Csv, |w| write_index_csv(w, [&r.park_index, &r.defense_index], &roster))?;
        }
    }

    let parks: Vec<IndexTable> = results.iter().map(|r| r.park_index.clone()).collect();
    let defs: Vec<IndexTable> = results.iter().map(|r| r.defense_index.clone()).collect();
    let park_label = |e: u16| roster.park_code(ParkId(e));
    let team_label = |e: u16| roster.team_code(TeamId(e));
    let wide = [
        ("park_effects", WideTable::build(&parks, TableValue::Effect, park_label), 4),
        ("park_index", WideTable::build(&parks, TableValue::Index, park_label), 0),
        ("defense_effects", WideTable::build(&defs, TableValue::Effect, team_label), 4),
        ("defense_index", WideTable::build(&defs, TableValue::Index, team_label), 0),
    ];
    for (name, table, decimals) in &wide {
        for f in &formats {
            match f {
                Format::Csv => out.write(&format!("{name}.csv"), Kind::Csv, |w| table.write_csv(w))?,
                Format::Md => out.write(&format!("{name}.md"), Kind::Markdown, |w| table.write_markdown(w, *decimals))?,
                Format::Json => {
                    out.write_json(&format!("{name}.json"), &serde_json::json!({ "seasons": table.seasons, "rows": table.rows }))?
                }
            }
        }
    }

    out.write("residuals.csv", Kind::Csv, |w| write_residuals_csv(w, &res, &roster).map_err(std::io::Error::other))?;
    out.write_json("estimate_report.json", &serde_json::json!({ "ingest": ingest_report, "residuals": residual_report }))?;
    for r in &results {
        eprintln!(
            "season {}: {} balls in {} cells, centered intercept {:.4}",
            r.season, r.estimates.n_balls, r.estimates.n_cells, r.centered.effects.intercept
        );
    }
    Ok(out)
}
