use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use tbr_core::baseline::read_residuals_csv;
use tbr_core::diagnostics::{
    home_away_all, intercept_series, stability_report, write_home_away_csv, write_home_away_markdown, ReferenceMetric, StabilityReport,
};
use tbr_core::standardize::{zscore_index, EntityGroup, IndexTable};
use tbr_core::{ParkId, Roster, SdConvention, TeamId};

use super::estimate::SeasonResult;
use crate::args::{require_paths, Common, Format, Sd};
use crate::error::CliError;
use crate::output::{read_json, Kind, Meta, Outputs};

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Park,
    Defense,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiagnoseArgs {
    /// `season_<year>.json` files, or directories holding them
    #[arg(long, required = true, num_args = 1..)]
    pub estimates: Vec<PathBuf>,
    /// `residuals.csv` from `estimate`; enables the home/away report
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
    /// SD convention for the across-season stability report
    #[arg(long, value_enum, default_value = "sample")]
    pub stability_sd: Sd,
    /// External metric as a `season,team,value` CSV
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Which of our indices the reference metric is compared with
    #[arg(long, value_enum, default_value = "park")]
    pub reference_group: Group,
    /// Label for the reference metric in reports
    #[arg(long, default_value = "reference")]
    pub reference_name: String,
}

fn season_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| CliError::io(p, e))?;
            for entry in entries {
                let path = entry.map_err(|e| CliError::io(p, e))?.path();
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                if name.starts_with("season_") && name.ends_with(".json") {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    if files.is_empty() {
        return Err(CliError::usage("missing-input", "no season_<year>.json estimates found"));
    }
    Ok(files)
}

/// Index tables of an external metric, standardized the same way as ours.
fn reference_tables(metric: &ReferenceMetric, group: Group, roster: &Roster) -> Result<Vec<IndexTable>, CliError> {
    let seasons: std::collections::BTreeSet<i32> = metric.values.keys().map(|(s, _)| *s).collect();
    let mut tables = Vec::new();
    for season in seasons {
        let mut rows = Vec::new();
        for ((_, code), v) in metric.values.range((season, String::new())..=(season, "\u{10FFFF}".to_string())) {
            let id = match group {
                Group::Park => roster.park_by_code(code).map(|p| p.0),
                Group::Defense => roster.team_by_code(code).map(|t| t.0),
            };
            let id = id.ok_or_else(|| CliError::usage("reference", format!("season {season}: unknown team {code:?}")))?;
            rows.push((id, *v));
        }
        let entity_group = match group {
            Group::Park => EntityGroup::Park,
            Group::Defense => EntityGroup::Defense,
        };
        let mut table = zscore_index(&rows, entity_group, SdConvention::Population).map_err(|e| CliError::from(e).in_season(season))?;
        table.season = Some(season);
        tables.push(table);
    }
    Ok(tables)
}

fn write_stability(out: &mut Outputs, name: &str, report: &StabilityReport, formats: &[Format], label: &dyn Fn(u16) -> String) -> Result<(), CliError> {
    for f in formats {
        match f {
            Format::Csv => out.write(&format!("{name}.csv"), Kind::Csv, |w| report.write_csv(w, label))?,
            Format::Md => out.write(&format!("{name}.md"), Kind::Markdown, |w| report.write_markdown(w, label))?,
            Format::Json => out.write_json(&format!("{name}.json"), report)?,
        }
    }
    Ok(())
}

pub fn run(args: &DiagnoseArgs) -> Result<Outputs, CliError> {
    let inputs = args.estimates.iter().chain(&args.residuals).chain(&args.reference).chain(&args.common.roster);
    require_paths(inputs.map(PathBuf::as_path))?;
    let roster = args.common.load_roster()?;
    let mut results: Vec<SeasonResult> = season_files(&args.estimates)?.iter().map(|p| read_json(p)).collect::<Result<_, _>>()?;
    results.sort_by_key(|r| r.season);
    let formats: Vec<Format> = args.common.formats().into_iter().collect();
    let park_label = |e: u16| roster.park_code(ParkId(e));
    let team_label = |e: u16| roster.team_code(TeamId(e));
    let mut out = Outputs::create(&args.common.out, Meta::new("diagnose", args))?;

    if let Some(path) = &args.residuals {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let res = read_residuals_csv(BufReader::new(file), &roster).map_err(|e| CliError::from(e).in_file(path))?;
        let splits = home_away_all(&res);
        let label = |t: TeamId| roster.team_code(t);
        for f in &formats {
            match f {
                Format::Csv => out.write("home_away.csv", Kind::Csv, |w| write_home_away_csv(w, &splits, label))?,
                Format::Md => out.write("home_away.md", Kind::Markdown, |w| write_home_away_markdown(w, &splits, label))?,
                Format::Json => out.write_json("home_away.json", &splits)?,
            }
        }
    }

    let sd: SdConvention = args.stability_sd.into();
    let park_tables: Vec<IndexTable> = results.iter().map(|r| r.park_index.clone()).collect();
    write_stability(&mut out, "stability_park", &stability_report(&park_tables, "park index", sd), &formats, &park_label)?;

    let series = intercept_series(&results.iter().map(|r| r.centered.clone()).collect::<Vec<_>>());
    out.write("intercept_series.csv", Kind::Csv, |w| series.write_csv(w))?;
    out.write("intercept_series.svg", Kind::Svg, |w| w.write_all(series.to_svg().as_bytes()))?;
    if formats.contains(&Format::Json) {
        out.write_json("intercept_series.json", &series)?;
    }

    if let Some(path) = &args.reference {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let metric = ReferenceMetric::read_csv(BufReader::new(file)).map_err(|e| CliError::usage("schema", e).in_file(path))?;
        let refs = reference_tables(&metric, args.reference_group, &roster)?;
        let (ours, label): (Vec<IndexTable>, &dyn Fn(u16) -> String) = match args.reference_group {
            Group::Park => (park_tables.clone(), &park_label),
            Group::Defense => (results.iter().map(|r| r.defense_index.clone()).collect(), &team_label),
        };
        let name = &args.reference_name;
        let report = stability_report(&refs, name, sd);
        write_stability(&mut out, &format!("stability_{}", file_stem(name)), &report, &formats, label)?;
        let corr = metric.correlate(&ours, label);
        out.write("correlation.csv", Kind::Csv, |w| {
            writeln!(w, "season,metric,pearson")?;
            for (season, r) in &corr {
                writeln!(w, "{season},{name},{}", r.map(|v| v.to_string()).unwrap_or_default())?;
            }
            Ok(())
        })?;
    }
    Ok(out)
}

fn file_stem(name: &str) -> String {
    let stem: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect();
    if stem.is_empty() || stem == "park" {
        "reference".into()
    } else {
        stem
    }
}
