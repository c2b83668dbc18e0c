pub mod baseline;
pub mod diagnose;
pub mod estimate;
pub mod simulate;

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rayon::prelude::*;
use tbr_core::ingest::parse_events;
use tbr_core::{BattedBall, IngestOptions, IngestReport, Roster};

use crate::error::CliError;

/// Parses every file in parallel; balls keep the order of `paths`.
pub fn ingest_files(paths: &[PathBuf], roster: &Roster, options: &IngestOptions) -> Result<(Vec<BattedBall>, IngestReport), CliError> {
    let parts: Vec<Result<(Vec<BattedBall>, IngestReport), CliError>> = paths
        .par_iter()
        .map(|p| {
            let file = File::open(p).map_err(|e| CliError::io(p, e))?;
            parse_events(BufReader::new(file), roster, options).map_err(|e| CliError::from(e).in_file(p))
        })
        .collect();
    let mut balls = Vec::new();
    let mut report = IngestReport::default();
    for part in parts {
        let (b, r) = part?;
        balls.extend(b);
        report.merge(&r);
    }
    Ok((balls, report))
}
