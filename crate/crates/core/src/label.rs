use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Class of a fish image. `Infected` is the detection target and maps to
/// `+1` in the margin-based classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fresh,
    Infected,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Fresh, Label::Infected];

    /// `+1.0` for infected, `-1.0` for fresh.
    pub fn sign(self) -> f64 {
        match self {
            Label::Infected => 1.0,
            Label::Fresh => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Label {
        if value >= 0.0 {
            Label::Infected
        } else {
            Label::Fresh
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Fresh => Label::Infected,
            Label::Infected => Label::Fresh,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fresh => "fresh",
            Label::Infected => "infected",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}` (expected `fresh` or `infected`)")]
pub struct ParseLabelError(pub alloc::string::String);

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "fresh" => Ok(Label::Fresh),
            "infected" => Ok(Label::Infected),
            other => Err(ParseLabelError(other.into())),
        }
    }
}
