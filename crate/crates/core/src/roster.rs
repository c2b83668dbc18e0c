//! Team-code to (team, home park) mapping.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ParkId, TeamId};

const MLB_ROSTER: &str = include_str!("../data/mlb_roster.toml");

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("failed to read roster {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid roster TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid roster JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("roster is empty")]
    Empty,
    #[error("season {season}: team code {code} is assigned more than once")]
    DuplicateCode { season: i32, code: String },
    #[error("season {season}: team id {id} is assigned more than once")]
    DuplicateTeam { season: i32, id: u16 },
    #[error("season {season}: park id {id} is home to more than one team")]
    DuplicatePark { season: i32, id: u16 },
    #[error("team {code}: first_season {first} is after last_season {last}")]
    BadSeasonRange { code: String, first: i32, last: i32 },
}

/// One club and its registered home venue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamEntry {
    pub code: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    pub id: u16,
    pub park: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub park_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_season: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_season: Option<i32>,
}

impl TeamEntry {
    pub fn team(&self) -> TeamId {
        TeamId(self.id)
    }

    pub fn home_park(&self) -> ParkId {
        ParkId(self.park)
    }

    fn active_in(&self, season: i32) -> bool {
        self.first_season.is_none_or(|s| season >= s) && self.last_season.is_none_or(|s| season <= s)
    }

    fn answers_to(&self, code: &str) -> bool {
        self.code.eq_ignore_ascii_case(code) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(code))
    }
}

/// Validated roster. Within any season the active entries form a bijection
/// between team ids and park ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    teams: Vec<TeamEntry>,
}

impl Roster {
    pub fn new(teams: Vec<TeamEntry>) -> Result<Self, RosterError> {
        let roster = Roster { teams };
        roster.validate()?;
        Ok(roster)
    }

    /// The 30 MLB clubs under Statcast team codes; ATL / Truist Park carry id 1.
    pub fn mlb() -> Self {
        Self::from_toml_str(MLB_ROSTER).expect("bundled roster is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RosterError> {
        #[derive(Deserialize)]
        struct File {
            teams: Vec<TeamEntry>,
        }
        let file: File = toml::from_str(text)?;
        Self::new(file.teams)
    }

    pub fn from_json_str(text: &str) -> Result<Self, RosterError> {
        let roster: Roster = serde_json::from_str(text)?;
        roster.validate()?;
        Ok(roster)
    }

    /// Loads a `.json` roster, or TOML for any other extension.
    pub fn load(path: &Path) -> Result<Self, RosterError> {
        let text = std::fs::read_to_string(path).map_err(|source| RosterError::Io {
            path: path.display().to_string(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            teams: &'a [TeamEntry],
        }
        toml::to_string(&File { teams: &self.teams }).expect("roster serializes")
    }

    pub fn entries(&self) -> &[TeamEntry] {
        &self.teams
    }

    pub fn lookup(&self, code: &str, season: i32) -> Option<&TeamEntry> {
        let code = code.trim();
        self.teams.iter().find(|t| t.active_in(season) && t.answers_to(code))
    }

    pub fn entry(&self, team: TeamId) -> Option<&TeamEntry> {
        self.teams.iter().find(|t| t.id == team.0)
    }

    pub fn team_by_code(&self, code: &str) -> Option<TeamId> {
        let code = code.trim();
        self.teams.iter().find(|t| t.answers_to(code)).map(TeamEntry::team)
    }

    /// Park whose registered home team answers to `code`.
    pub fn park_by_code(&self, code: &str) -> Option<ParkId> {
        let code = code.trim();
        self.teams.iter().find(|t| t.answers_to(code)).map(TeamEntry::home_park)
    }

    pub fn team_code(&self, team: TeamId) -> String {
        self.entry(team).map_or_else(|| team.0.to_string(), |t| t.code.clone())
    }

    /// Parks are labelled with their home team's code, matching the tables.
    pub fn park_code(&self, park: ParkId) -> String {
        self.teams
            .iter()
            .find(|t| t.park == park.0)
            .map_or_else(|| park.0.to_string(), |t| t.code.clone())
    }

    pub fn park_name(&self, park: ParkId) -> Option<&str> {
        self.teams.iter().find(|t| t.park == park.0).and_then(|t| t.park_name.as_deref())
    }

    /// All distinct team ids, sorted.
    pub fn team_ids(&self) -> Vec<TeamId> {
        self.teams.iter().map(TeamEntry::team).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// All distinct park ids, sorted.
    pub fn park_ids(&self) -> Vec<ParkId> {
        self.teams.iter().map(TeamEntry::home_park).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn teams_in(&self, season: i32) -> Vec<TeamId> {
        let set: BTreeSet<_> = self.teams.iter().filter(|t| t.active_in(season)).map(TeamEntry::team).collect();
        set.into_iter().collect()
    }

    pub fn parks_in(&self, season: i32) -> Vec<ParkId> {
        let set: BTreeSet<_> =
            self.teams.iter().filter(|t| t.active_in(season)).map(TeamEntry::home_park).collect();
        set.into_iter().collect()
    }

    fn validate(&self) -> Result<(), RosterError> {
        if self.teams.is_empty() {
            return Err(RosterError::Empty);
        }
        // Every season boundary is a point where the active set can change.
        let mut probes: BTreeSet<i32> = BTreeSet::new();
        probes.insert(0);
        for t in &self.teams {
            if let (Some(first), Some(last)) = (t.first_season, t.last_season) {
                if first > last {
                    return Err(RosterError::BadSeasonRange { code: t.code.clone(), first, last });
                }
            }
            if let Some(s) = t.first_season {
                probes.insert(s);
            }
            if let Some(s) = t.last_season {
                probes.insert(s);
                probes.insert(s + 1);
            }
        }
        for season in probes {
            let mut codes: BTreeMap<String, ()> = BTreeMap::new();
            let mut ids = BTreeSet::new();
            let mut parks = BTreeSet::new();
            for t in self.teams.iter().filter(|t| t.active_in(season)) {
                for code in std::iter::once(&t.code).chain(&t.aliases) {
                    if codes.insert(code.to_ascii_uppercase(), ()).is_some() {
                        return Err(RosterError::DuplicateCode { season, code: code.clone() });
                    }
                }
                if !ids.insert(t.id) {
                    return Err(RosterError::DuplicateTeam { season, id: t.id });
                }
                if !parks.insert(t.park) {
                    return Err(RosterError::DuplicatePark { season, id: t.park });
                }
            }
        }
        Ok(())
    }
}
