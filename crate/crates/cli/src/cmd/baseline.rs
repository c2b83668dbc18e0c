use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tbr_core::baseline::build_baseline;

use super::ingest_files;
use crate::args::{require_paths, Common, GridArgs, IngestArgs};
use crate::error::CliError;
use crate::output::{Kind, Meta, Outputs};

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildBaselineArgs {
    /// Statcast-style CSV files
    #[arg(required = true)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub ingest: IngestArgs,
}

pub fn run(args: &BuildBaselineArgs) -> Result<Outputs, CliError> {
    require_paths(args.data.iter().map(PathBuf::as_path).chain(args.common.roster.as_deref()))?;
    let spec = args.grid.spec()?;
    let roster = args.common.load_roster()?;
    let (balls, report) = ingest_files(&args.data, &roster, &args.ingest.options(spec))?;
    let grid = build_baseline(&balls, spec)?;

    let mut out = Outputs::create(&args.common.out, Meta::new("build-baseline", args))?;
    let meta = out.meta.to_json();
    out.write("baseline.grid", Kind::Raw, |w| grid.write_to(w, &meta).map_err(std::io::Error::other))?;
    out.write("baseline.csv", Kind::Csv, |w| grid.write_csv(w))?;
    out.write_json("ingest_report.json", &report)?;
    eprintln!(
        "baseline: {} balls in {} populated cells, seasons {:?}; {} of {} rows dropped",
        grid.total_count(),
        grid.populated_cells(),
        grid.seasons_pooled,
        report.dropped(),
        report.input_rows
    );
    Ok(out)
}
