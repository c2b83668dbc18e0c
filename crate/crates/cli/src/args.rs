use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Serialize, Serializer};
use tbr_core::ingest::UnknownEventPolicy;
use tbr_core::{EmptyCellPolicy, GridSpec, IngestOptions, Roster, SdConvention, SeasonFilter};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyCell {
    Drop,
    Nearest,
    GlobalMean,
    Abort,
}

impl From<EmptyCell> for EmptyCellPolicy {
    fn from(v: EmptyCell) -> Self {
        match v {
            EmptyCell::Drop => EmptyCellPolicy::Drop,
            EmptyCell::Nearest => EmptyCellPolicy::Nearest,
            EmptyCell::GlobalMean => EmptyCellPolicy::GlobalMean,
            EmptyCell::Abort => EmptyCellPolicy::Abort,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sd {
    Population,
    Sample,
}

impl From<Sd> for SdConvention {
    fn from(v: Sd) -> Self {
        match v {
            Sd::Population => SdConvention::Population,
            Sd::Sample => SdConvention::Sample,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownEvent {
    Drop,
    Abort,
}

/// A season or an inclusive `first-last` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seasons {
    pub first: i32,
    pub last: i32,
}

impl FromStr for Seasons {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| v.trim().parse::<i32>().map_err(|_| format!("bad season {v:?}"));
        let (first, last) = match s.split_once('-') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => (parse(s)?, parse(s)?),
        };
        if first > last {
            return Err(format!("empty season range {s:?}"));
        }
        Ok(Seasons { first, last })
    }
}

impl Serialize for Seasons {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.first == self.last {
            s.serialize_str(&self.first.to_string())
        } else {
            s.serialize_str(&format!("{}-{}", self.first, self.last))
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Roster file (TOML, or JSON by extension); the built-in MLB roster when omitted
    #[arg(long)]
    pub roster: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = "TBR_OUT_DIR", default_value = "tbr-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Table formats to write, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv")]
    pub format: Vec<Format>,
}

impl Common {
    pub fn load_roster(&self) -> Result<Roster, CliError> {
        match &self.roster {
            Some(p) => Ok(Roster::load(p)?),
            None => Ok(Roster::mlb()),
        }
    }

    pub fn formats(&self) -> BTreeSet<Format> {
        self.format.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Seasons to keep, e.g. `2015-2024` or `2019,2021`
    #[arg(long, visible_alias = "season", value_delimiter = ',')]
    pub seasons: Vec<Seasons>,
    /// Keep postseason and spring games
    #[arg(long)]
    pub include_postseason: bool,
    /// Policy for event codes outside the known vocabulary
    #[arg(long, value_enum, default_value = "drop")]
    pub unknown_event: UnknownEvent,
    /// Drop reached-on-error and fielder's-choice plays instead of scoring them 0
    #[arg(long)]
    pub exclude_errors: bool,
}

impl IngestArgs {
    pub fn options(&self, grid: GridSpec) -> IngestOptions {
        let seasons = (!self.seasons.is_empty()).then(|| self.seasons.iter().flat_map(|s| s.first..=s.last).collect());
        IngestOptions {
            grid,
            filter: SeasonFilter { seasons, regular_season_only: !self.include_postseason },
            unknown_event: match self.unknown_event {
                UnknownEvent::Drop => UnknownEventPolicy::Drop,
                UnknownEvent::Abort => UnknownEventPolicy::Abort,
            },
            include_errors: !self.exclude_errors,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long)]
    pub ev_min: Option<f64>,
    #[arg(long)]
    pub ev_max: Option<f64>,
    /// EV bin width, mph
    #[arg(long)]
    pub ev_width: Option<f64>,
    #[arg(long)]
    pub la_min: Option<f64>,
    #[arg(long)]
    pub la_max: Option<f64>,
    /// LA bin width, degrees
    #[arg(long)]
    pub la_width: Option<f64>,
}

impl GridArgs {
    pub fn spec(&self) -> Result<GridSpec, CliError> {
        let d = GridSpec::default();
        let spec = GridSpec {
            ev_min: self.ev_min.unwrap_or(d.ev_min),
            ev_max: self.ev_max.unwrap_or(d.ev_max),
            ev_width: self.ev_width.unwrap_or(d.ev_width),
            la_min: self.la_min.unwrap_or(d.la_min),
            la_max: self.la_max.unwrap_or(d.la_max),
            la_width: self.la_width.unwrap_or(d.la_width),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Every referenced path must exist before any stage runs.
pub fn require_paths<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), CliError> {
    let missing: Vec<String> = paths.into_iter().filter(|p| !p.exists()).map(|p| p.display().to_string()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::usage("missing-input", format!("not found: {}", missing.join(", "))))
    }
}
