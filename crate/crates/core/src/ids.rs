use std::fmt;

use serde::{Deserialize, Serialize};

/// Ballpark identifier as assigned by the roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParkId(pub u16);

/// Team identifier as assigned by the roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TeamId(pub u16);

impl fmt::Display for ParkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "park#{}", self.0)
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "team#{}", self.0)
    }
}

/// Half of the inning. The home team fields in the top half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InningHalf {
    Top,
    Bottom,
}

impl InningHalf {
    /// Parses Statcast's `inning_topbot` column (`Top` / `Bot`).
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "top" | "t" => Some(InningHalf::Top),
            "bot" | "bottom" | "b" => Some(InningHalf::Bottom),
            _ => None,
        }
    }

    pub fn as_statcast(self) -> &'static str {
        match self {
            InningHalf::Top => "Top",
            InningHalf::Bottom => "Bot",
        }
    }
}
