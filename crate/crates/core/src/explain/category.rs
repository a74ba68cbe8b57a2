use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProbabilityCategory {
    Low,
    Medium,
    High,
}

/// All categories in tie-breaking order.
pub const CATEGORIES: [ProbabilityCategory; 3] = [
    ProbabilityCategory::Low,
    ProbabilityCategory::Medium,
    ProbabilityCategory::High,
];

impl ProbabilityCategory {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "LOW",
            Self::Medium => "MEDIUM",
            Self::High => "HIGH",
        }
    }
}

impl fmt::Display for ProbabilityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProbabilityCategory {
    type Err = CategoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "LOW" => Ok(Self::Low),
            "MEDIUM" => Ok(Self::Medium),
            "HIGH" => Ok(Self::High),
            other => Err(CategoryError::UnknownLabel(other.to_owned())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CategoryError {
    #[error("score {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("thresholds must satisfy 0 < medium < high <= 1, got ({0}, {1})")]
    InvalidThresholds(f64, f64),
    #[error("unknown category `{0}`")]
    UnknownLabel(String),
}

/// Lower bounds of the MEDIUM and HIGH categories. LOW is `[0, medium)`,
/// MEDIUM is `[medium, high)` and HIGH is `[high, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryThresholds {
    pub medium: f64,
    pub high: f64,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        Self {
            medium: 0.33,
            high: 0.68,
        }
    }
}

impl CategoryThresholds {
    pub fn new(medium: f64, high: f64) -> Result<Self, CategoryError> {
        let t = Self { medium, high };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), CategoryError> {
        if 0.0 < self.medium && self.medium < self.high && self.high <= 1.0 {
            Ok(())
        } else {
            Err(CategoryError::InvalidThresholds(self.medium, self.high))
        }
    }

    pub fn categorize(&self, score: f64) -> Result<ProbabilityCategory, CategoryError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(CategoryError::OutOfRange(score));
        }
        Ok(if score < self.medium {
            ProbabilityCategory::Low
        } else if score < self.high {
            ProbabilityCategory::Medium
        } else {
            ProbabilityCategory::High
        })
    }
}

/// Category of `score` under the default thresholds (0.33, 0.68).
pub fn categorize(score: f64) -> Result<ProbabilityCategory, CategoryError> {
    CategoryThresholds::default().categorize(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ProbabilityCategory::*;

    #[test]
    fn boundaries_are_half_open() {
        assert_eq!(categorize(0.0), Ok(Low));
        assert_eq!(categorize(0.329999), Ok(Low));
        assert_eq!(categorize(0.33), Ok(Medium));
        assert_eq!(categorize(0.679999), Ok(Medium));
        assert_eq!(categorize(0.68), Ok(High));
        assert_eq!(categorize(1.0), Ok(High));
    }

    #[test]
    fn out_of_range_scores() {
        assert_eq!(categorize(-0.01), Err(CategoryError::OutOfRange(-0.01)));
        assert_eq!(categorize(1.01), Err(CategoryError::OutOfRange(1.01)));
        assert!(categorize(f64::NAN).is_err());
    }

    #[test]
    fn thresholds_must_increase() {
        assert!(CategoryThresholds::new(0.5, 0.5).is_err());
        assert!(CategoryThresholds::new(0.0, 0.5).is_err());
        assert!(CategoryThresholds::new(0.2, 1.2).is_err());
        assert!(CategoryThresholds::new(0.2, 0.9).is_ok());
    }

    #[test]
    fn labels_round_trip() {
        for c in CATEGORIES {
            assert_eq!(c.as_str().parse::<ProbabilityCategory>(), Ok(c));
        }
    }
}
