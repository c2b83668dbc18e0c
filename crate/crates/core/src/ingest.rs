//! Statcast-style CSV ingestion.
//!
//! Rows are classified by their `events` code, attributed to a fielding team
//! and ballpark through the [`Roster`], and filtered to in-play balls with a
//! measured exit velocity and launch angle inside the grid range. Every input
//! row is either parsed or counted under exactly one drop reason.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::GridSpec;
use crate::ids::{InningHalf, ParkId, TeamId};
use crate::roster::Roster;

/// Columns that must be present in the header.
pub const REQUIRED_COLUMNS: [&str; 7] =
    ["launch_speed", "launch_angle", "events", "home_team", "away_team", "inning_topbot", "game_date"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error: missing columns {}", .missing.join(", "))]
    Schema { missing: Vec<String> },
    #[error("row {row}: unrecognized event code {code:?}")]
    UnknownEvent { row: u64, code: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Unrecognized event code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized event code {0:?}")]
pub struct UnknownEvent(pub String);

/// What kind of in-play result an event code records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlayKind {
    Hit,
    Out,
    Sacrifice,
    Error,
    FieldersChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventClass {
    InPlay { tb: u8, kind: PlayKind },
    NotBattedBall,
}

/// Classifies a Statcast `events` code. An empty code is a non-terminal pitch.
pub fn classify_event(code: &str) -> Result<EventClass, UnknownEvent> {
    use EventClass::*;
    use PlayKind::*;
    let class = match code.trim() {
        "single" => InPlay { tb: 1, kind: Hit },
        "double" => InPlay { tb: 2, kind: Hit },
        "triple" => InPlay { tb: 3, kind: Hit },
        "home_run" => InPlay { tb: 4, kind: Hit },
        "field_out" | "force_out" | "grounded_into_double_play" | "double_play" | "triple_play" => {
            InPlay { tb: 0, kind: Out }
        }
        "sac_fly" | "sac_bunt" | "sac_fly_double_play" | "sac_bunt_double_play" => {
            InPlay { tb: 0, kind: Sacrifice }
        }
        "field_error" => InPlay { tb: 0, kind: Error },
        "fielders_choice" | "fielders_choice_out" => InPlay { tb: 0, kind: FieldersChoice },
        "" | "strikeout" | "strikeout_double_play" | "walk" | "intent_walk" | "hit_by_pitch"
        | "catcher_interf" | "batter_interference" | "fan_interference" | "truncated_pa" | "other_out"
        | "wild_pitch" | "passed_ball" | "balk" | "stolen_base_2b" | "stolen_base_3b"
        | "stolen_base_home" | "caught_stealing_2b" | "caught_stealing_3b" | "caught_stealing_home"
        | "pickoff_1b" | "pickoff_2b" | "pickoff_3b" | "pickoff_caught_stealing_2b"
        | "pickoff_caught_stealing_3b" | "pickoff_caught_stealing_home" | "pickoff_error_1b"
        | "pickoff_error_2b" | "pickoff_error_3b" | "other_advance" | "runner_double_play"
        | "game_advisory" | "ejection" | "defensive_indiff" | "pitcher_step_off" | "no_pitch"
        | "passed_ball_error" | "wild_pitch_error" => NotBattedBall,
        other => return Err(UnknownEvent(other.to_string())),
    };
    Ok(class)
}

/// Total bases credited to an event: `Ok(None)` for codes that are not batted balls.
pub fn total_bases(code: &str) -> Result<Option<u8>, UnknownEvent> {
    Ok(match classify_event(code)? {
        EventClass::InPlay { tb, .. } => Some(tb),
        EventClass::NotBattedBall => None,
    })
}

/// One in-play batted ball, attributed to a park and a fielding team.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BattedBall {
    pub ev: f64,
    pub la: f64,
    pub tb: u8,
    pub park: ParkId,
    pub def_team: TeamId,
    pub bat_team: TeamId,
    pub half: InningHalf,
    pub season: i32,
}

impl BattedBall {
    /// The listed home team: it fields in the top half and bats in the bottom.
    pub fn home_team(&self) -> TeamId {
        match self.half {
            InningHalf::Top => self.def_team,
            InningHalf::Bottom => self.bat_team,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeasonFilter {
    /// Seasons to keep; `None` keeps every season.
    pub seasons: Option<BTreeSet<i32>>,
    /// Drop rows whose `game_type` column is present and not `R`.
    pub regular_season_only: bool,
}

impl SeasonFilter {
    pub fn regular_season() -> Self {
        SeasonFilter { seasons: None, regular_season_only: true }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownEventPolicy {
    #[default]
    Drop,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// EV/LA ranges come from the grid the balls will be binned on.
    pub grid: GridSpec,
    pub filter: SeasonFilter,
    pub unknown_event: UnknownEventPolicy,
    /// Keep reached-on-error and fielder's-choice plays as zero-base outcomes.
    pub include_errors: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            grid: GridSpec::default(),
            filter: SeasonFilter::regular_season(),
            unknown_event: UnknownEventPolicy::Drop,
            include_errors: true,
        }
    }
}

/// Row accounting for one ingest run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub input_rows: u64,
    pub parsed: u64,
    pub season_filtered: u64,
    pub non_regular_season: u64,
    pub non_batted_ball: u64,
    pub unknown_event: u64,
    pub unknown_team: u64,
    pub malformed: u64,
    pub null_ev: u64,
    pub null_la: u64,
    pub out_of_range: u64,
    pub excluded_error: u64,
    pub unknown_team_codes: BTreeMap<String, u64>,
    pub unknown_event_codes: BTreeMap<String, u64>,
}

impl IngestReport {
    pub fn dropped(&self) -> u64 {
        self.season_filtered
            + self.non_regular_season
            + self.non_batted_ball
            + self.unknown_event
            + self.unknown_team
            + self.malformed
            + self.null_ev
            + self.null_la
            + self.out_of_range
            + self.excluded_error
    }

    /// Parsed plus dropped equals input.
    pub fn is_conserved(&self) -> bool {
        self.parsed + self.dropped() == self.input_rows
    }

    /// Adds another report's counts into this one.
    pub fn merge(&mut self, other: &IngestReport) {
        self.input_rows += other.input_rows;
        self.parsed += other.parsed;
        self.season_filtered += other.season_filtered;
        self.non_regular_season += other.non_regular_season;
        self.non_batted_ball += other.non_batted_ball;
        self.unknown_event += other.unknown_event;
        self.unknown_team += other.unknown_team;
        self.malformed += other.malformed;
        self.null_ev += other.null_ev;
        self.null_la += other.null_la;
        self.out_of_range += other.out_of_range;
        self.excluded_error += other.excluded_error;
        for (k, v) in &other.unknown_team_codes {
            *self.unknown_team_codes.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.unknown_event_codes {
            *self.unknown_event_codes.entry(k.clone()).or_default() += v;
        }
    }
}

struct Columns {
    launch_speed: usize,
    launch_angle: usize,
    events: usize,
    home_team: usize,
    away_team: usize,
    inning_topbot: usize,
    game_date: usize,
    game_year: Option<usize>,
    game_type: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord) -> Result<Self, IngestError> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let missing: Vec<String> =
            REQUIRED_COLUMNS.iter().filter(|c| find(c).is_none()).map(|c| c.to_string()).collect();
        if !missing.is_empty() {
            return Err(IngestError::Schema { missing });
        }
        Ok(Columns {
            launch_speed: find("launch_speed").unwrap(),
            launch_angle: find("launch_angle").unwrap(),
            events: find("events").unwrap(),
            home_team: find("home_team").unwrap(),
            away_team: find("away_team").unwrap(),
            inning_topbot: find("inning_topbot").unwrap(),
            game_date: find("game_date").unwrap(),
            game_year: find("game_year"),
            game_type: find("game_type"),
        })
    }
}

enum Measure {
    Null,
    Value(f64),
    Malformed,
}

fn parse_measure(raw: &str) -> Measure {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("null") {
        return Measure::Null;
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_nan() => Measure::Null,
        Ok(v) if v.is_finite() => Measure::Value(v),
        _ => Measure::Malformed,
    }
}

fn parse_season(record: &csv::StringRecord, cols: &Columns) -> Option<i32> {
    if let Some(year) = cols.game_year.and_then(|i| record.get(i)).map(str::trim).filter(|s| !s.is_empty()) {
        return year.parse().ok();
    }
    let date = record.get(cols.game_date)?.trim();
    let mut parts = date.splitn(3, '-');
    let year: i32 = parts.next()?.parse().ok()?;
    let month: u32 = parts.next()?.parse().ok()?;
    let day: u32 = parts.next()?.get(..2)?.parse().ok()?;
    ((1..=12).contains(&month) && (1..=31).contains(&day)).then_some(year)
}

/// Parses an event table into batted balls.
///
/// A missing required column is fatal. Row-level problems (unknown team,
/// null measurement, etc.) drop the row and are tallied in the report; an
/// unrecognized event code aborts only under [`UnknownEventPolicy::Abort`].
pub fn parse_events<R: Read>(
    source: R,
    roster: &Roster,
    options: &IngestOptions,
) -> Result<(Vec<BattedBall>, IngestReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).comment(Some(b'#')).from_reader(source);
    let cols = Columns::resolve(reader.headers()?)?;
    let spec = &options.grid;
    let mut report = IngestReport::default();
    let mut balls = Vec::new();
    let mut record = csv::StringRecord::new();

    while reader.read_record(&mut record)? {
        report.input_rows += 1;
        let field = |i: usize| record.get(i).unwrap_or("").trim();

        let Some(season) = parse_season(&record, &cols) else {
            report.malformed += 1;
            continue;
        };
        if let Some(keep) = &options.filter.seasons {
            if !keep.contains(&season) {
                report.season_filtered += 1;
                continue;
            }
        }
        if options.filter.regular_season_only {
            if let Some(gt) = cols.game_type.map(field) {
                if !gt.is_empty() && gt != "R" {
                    report.non_regular_season += 1;
                    continue;
                }
            }
        }

        let code = field(cols.events);
        let (tb, kind) = match classify_event(code) {
            Ok(EventClass::InPlay { tb, kind }) => (tb, kind),
            Ok(EventClass::NotBattedBall) => {
                report.non_batted_ball += 1;
                continue;
            }
            Err(UnknownEvent(code)) => {
                if options.unknown_event == UnknownEventPolicy::Abort {
                    return Err(IngestError::UnknownEvent { row: report.input_rows, code });
                }
                report.unknown_event += 1;
                *report.unknown_event_codes.entry(code).or_default() += 1;
                continue;
            }
        };

        let Some(half) = InningHalf::parse(field(cols.inning_topbot)) else {
            report.malformed += 1;
            continue;
        };
        let home_code = field(cols.home_team);
        let away_code = field(cols.away_team);
        let (home, away) = match (roster.lookup(home_code, season), roster.lookup(away_code, season)) {
            (Some(h), Some(a)) if h.id != a.id => (h, a),
            (h, a) => {
                report.unknown_team += 1;
                let bad = if h.is_none() { home_code } else if a.is_none() { away_code } else { home_code };
                *report.unknown_team_codes.entry(bad.to_string()).or_default() += 1;
                continue;
            }
        };

        let ev = match parse_measure(field(cols.launch_speed)) {
            Measure::Value(v) => v,
            Measure::Null => {
                report.null_ev += 1;
                continue;
            }
            Measure::Malformed => {
                report.malformed += 1;
                continue;
            }
        };
        let la = match parse_measure(field(cols.launch_angle)) {
            Measure::Value(v) => v,
            Measure::Null => {
                report.null_la += 1;
                continue;
            }
            Measure::Malformed => {
                report.malformed += 1;
                continue;
            }
        };
        if !spec.contains(ev, la) {
            report.out_of_range += 1;
            continue;
        }
        if !options.include_errors && matches!(kind, PlayKind::Error | PlayKind::FieldersChoice) {
            report.excluded_error += 1;
            continue;
        }

        let (def_team, bat_team) = match half {
            InningHalf::Top => (home.team(), away.team()),
            InningHalf::Bottom => (away.team(), home.team()),
        };
        balls.push(BattedBall { ev, la, tb, park: home.home_park(), def_team, bat_team, half, season });
        report.parsed += 1;
    }
    Ok((balls, report))
}

/// One row of the event schema, as written by the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEventRow {
    pub launch_speed: Option<f64>,
    pub launch_angle: Option<f64>,
    pub events: String,
    pub home_team: String,
    pub away_team: String,
    pub inning_topbot: String,
    pub game_date: String,
    pub game_year: i32,
    pub game_type: String,
}

pub fn write_events<W: Write, I: IntoIterator<Item = RawEventRow>>(sink: W, rows: I) -> Result<(), IngestError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    writer.write_record([
        "launch_speed",
        "launch_angle",
        "events",
        "home_team",
        "away_team",
        "inning_topbot",
        "game_date",
        "game_year",
        "game_type",
    ])?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Event code used when writing a given total-bases outcome.
pub fn event_code_for(tb: u8) -> &'static str {
    match tb {
        1 => "single",
        2 => "double",
        3 => "triple",
        4 => "home_run",
        _ => "field_out",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "game_date,game_year,game_type,events,launch_speed,launch_angle,home_team,away_team,inning_topbot\n";

    fn parse(body: &str) -> (Vec<BattedBall>, IngestReport) {
        let text = format!("{HEADER}{body}");
        parse_events(text.as_bytes(), &Roster::mlb(), &IngestOptions::default()).unwrap()
    }

    #[test]
    fn coding_table() {
        assert_eq!(total_bases("double"), Ok(Some(2)));
        assert_eq!(total_bases("field_out"), Ok(Some(0)));
        assert_eq!(total_bases("home_run"), Ok(Some(4)));
        assert_eq!(total_bases("sac_fly"), Ok(Some(0)));
        assert_eq!(total_bases("field_error"), Ok(Some(0)));
        assert_eq!(total_bases("strikeout"), Ok(None));
        assert_eq!(total_bases(""), Ok(None));
        assert_eq!(total_bases("moonshot"), Err(UnknownEvent("moonshot".into())));
    }

    #[test]
    fn home_run_top_of_inning_is_fielded_by_home_team() {
        let (balls, report) = parse("2024-05-01,2024,R,home_run,105.0,28.0,ATL,NYM,Top\n");
        assert_eq!(report.parsed, 1);
        let b = balls[0];
        assert_eq!(b.tb, 4);
        let roster = Roster::mlb();
        assert_eq!(roster.team_code(b.def_team), "ATL");
        assert_eq!(roster.team_code(b.bat_team), "NYM");
        assert_eq!(roster.park_name(b.park), Some("Truist Park"));
        assert_eq!(b.home_team(), b.def_team);
    }

    #[test]
    fn bottom_half_is_fielded_by_visitors() {
        let (balls, _) = parse("2024-05-01,2024,R,single,90,10,ATL,NYM,Bot\n");
        let roster = Roster::mlb();
        assert_eq!(roster.team_code(balls[0].def_team), "NYM");
        assert_eq!(roster.park_code(balls[0].park), "ATL");
    }

    #[test]
    fn null_launch_speed_is_counted() {
        let (balls, report) = parse("2024-05-01,2024,R,single,,10,ATL,NYM,Bot\n");
        assert!(balls.is_empty());
        assert_eq!(report.null_ev, 1);
        assert!(report.is_conserved());
    }

    #[test]
    fn unknown_team_is_not_fatal() {
        let (balls, report) = parse("2024-05-01,2024,R,single,90,10,XXX,NYM,Bot\n2024-05-01,2024,R,single,90,10,ATL,NYM,Bot\n");
        assert_eq!(balls.len(), 1);
        assert_eq!(report.unknown_team, 1);
        assert_eq!(report.unknown_team_codes.get("XXX"), Some(&1));
    }

    #[test]
    fn out_of_range_and_postseason_are_dropped() {
        let (balls, report) = parse(
            "2024-05-01,2024,R,single,121,10,ATL,NYM,Bot\n\
             2024-10-01,2024,F,single,90,10,ATL,NYM,Bot\n\
             2024-05-01,2024,R,single,90,-91,ATL,NYM,Bot\n",
        );
        assert!(balls.is_empty());
        assert_eq!(report.out_of_range, 2);
        assert_eq!(report.non_regular_season, 1);
        assert!(report.is_conserved());
    }

    #[test]
    fn missing_columns_are_named() {
        let text = "game_date,events,launch_speed,home_team,away_team\n";
        match parse_events(text.as_bytes(), &Roster::mlb(), &IngestOptions::default()) {
            Err(IngestError::Schema { missing }) => assert_eq!(missing, vec!["launch_angle", "inning_topbot"]),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_event_policy() {
        let text = format!("{HEADER}2024-05-01,2024,R,moonshot,90,10,ATL,NYM,Bot\n");
        let (_, report) = parse_events(text.as_bytes(), &Roster::mlb(), &IngestOptions::default()).unwrap();
        assert_eq!(report.unknown_event, 1);
        let abort = IngestOptions { unknown_event: UnknownEventPolicy::Abort, ..IngestOptions::default() };
        assert!(matches!(
            parse_events(text.as_bytes(), &Roster::mlb(), &abort),
            Err(IngestError::UnknownEvent { row: 1, .. })
        ));
    }

    #[test]
    fn errors_can_be_excluded() {
        let text = format!("{HEADER}2024-05-01,2024,R,field_error,90,10,ATL,NYM,Bot\n");
        let (balls, _) = parse_events(text.as_bytes(), &Roster::mlb(), &IngestOptions::default()).unwrap();
        assert_eq!(balls[0].tb, 0);
        let strict = IngestOptions { include_errors: false, ..IngestOptions::default() };
        let (balls, report) = parse_events(text.as_bytes(), &Roster::mlb(), &strict).unwrap();
        assert!(balls.is_empty());
        assert_eq!(report.excluded_error, 1);
    }

    #[test]
    fn season_falls_back_to_game_date() {
        let text = "game_date,events,launch_speed,launch_angle,home_team,away_team,inning_topbot\n\
                    2019-07-04,double,100,20,COL,SF,Top\n";
        let (balls, _) = parse_events(text.as_bytes(), &Roster::mlb(), &IngestOptions::default()).unwrap();
        assert_eq!(balls[0].season, 2019);
    }
}
