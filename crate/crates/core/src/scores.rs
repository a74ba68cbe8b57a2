//! Probability scores of every case under the three elicitation approaches.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_space::{CaseSet, CaseVector, WeightSumTable};
use crate::density::{GaussianMixture, KernelDensity};
use crate::explain::{CategoryError, CategoryThresholds, FcaError, FormalContext, ProbabilityCategory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("{cases} cases but {sums} weight sums")]
    LengthMismatch { cases: usize, sums: usize },
    #[error("case {index} has {found} answers, expected {expected}")]
    AnswerCount {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error("invalid band [{lower}, {upper}]")]
    InvalidBand { lower: f64, upper: f64 },
    #[error("unknown approach {0} (expected 1, 2 or 3)")]
    UnknownApproach(u8),
    #[error(transparent)]
    Context(#[from] FcaError),
}

/// The three ways of turning a normalized sum into a probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Approach {
    /// CDF of the Gaussian mixture.
    GmmCdf = 1,
    /// CDF of the kernel density estimate.
    KdeCdf = 2,
    /// Posterior of the highest-mean mixture component.
    Posterior = 3,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::GmmCdf, Approach::KdeCdf, Approach::Posterior];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn column_name(self) -> &'static str {
        match self {
            Self::GmmCdf => "p_gmm_cdf",
            Self::KdeCdf => "p_kde_cdf",
            Self::Posterior => "p_posterior",
        }
    }
}

impl TryFrom<u8> for Approach {
    type Error = ScoreError;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(Self::GmmCdf),
            2 => Ok(Self::KdeCdf),
            3 => Ok(Self::Posterior),
            other => Err(ScoreError::UnknownApproach(other)),
        }
    }
}

impl From<Approach> for u8 {
    fn from(a: Approach) -> u8 {
        a.number()
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachScores {
    pub gmm_cdf: f64,
    pub kde_cdf: f64,
    pub posterior: f64,
}

impl ApproachScores {
    /// Scores of one normalized sum.
    pub fn evaluate(x: f64, gmm: &GaussianMixture, kde: &KernelDensity) -> Self {
        let ill = gmm.highest_component();
        Self {
            gmm_cdf: gmm.cdf(x),
            kde_cdf: kde.cdf(x),
            posterior: gmm.posteriors(x)[ill],
        }
    }

    pub fn get(&self, approach: Approach) -> f64 {
        match approach {
            Approach::GmmCdf => self.gmm_cdf,
            Approach::KdeCdf => self.kde_cdf,
            Approach::Posterior => self.posterior,
        }
    }
}

/// Stable textual id of a case index.
pub fn case_id(index: usize) -> String {
    format!("c{index:04}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub case_index: usize,
    pub answers: CaseVector,
    pub raw_sum: f64,
    pub normalized_sum: f64,
    pub scores: ApproachScores,
    /// Category of the approach-1 score.
    pub category: ProbabilityCategory,
}

impl ScoreRow {
    pub fn case_id(&self) -> String {
        case_id(self.case_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub answer_ids: Vec<String>,
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn categories(&self) -> Vec<ProbabilityCategory> {
        self.rows.iter().map(|r| r.category).collect()
    }

    pub fn scores(&self, approach: Approach) -> Vec<f64> {
        self.rows.iter().map(|r| r.scores.get(approach)).collect()
    }

    pub fn cases(&self) -> CaseSet {
        CaseSet::from_cases(self.rows.iter().map(|r| r.answers.clone()).collect())
    }
}

/// Scores every case. Rows take their index from the position in `cases`,
/// which for an enumerated case set is the canonical index.
pub fn elicit_probabilities(
    cases: &CaseSet,
    answer_ids: &[String],
    table: &WeightSumTable,
    gmm: &GaussianMixture,
    kde: &KernelDensity,
    thresholds: &CategoryThresholds,
) -> Result<ScoreTable, ScoreError> {
    if cases.len() != table.len() {
        return Err(ScoreError::LengthMismatch {
            cases: cases.len(),
            sums: table.len(),
        });
    }
    thresholds.validate()?;
    let rows = cases
        .iter()
        .zip(table.raw().iter().zip(table.normalized()))
        .enumerate()
        .map(|(index, (case, (&raw_sum, &normalized_sum)))| {
            if case.len() != answer_ids.len() {
                return Err(ScoreError::AnswerCount {
                    index,
                    expected: answer_ids.len(),
                    found: case.len(),
                });
            }
            let scores = ApproachScores::evaluate(normalized_sum, gmm, kde);
            Ok(ScoreRow {
                case_index: index,
                answers: case.clone(),
                raw_sum,
                normalized_sum,
                scores,
                category: thresholds.categorize(scores.gmm_cdf)?,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(ScoreTable {
        answer_ids: answer_ids.to_vec(),
        rows,
    })
}

/// Score interval `[lower, upper)`, or `[lower, upper]` when `include_upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreBand {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub include_upper: bool,
}

impl ScoreBand {
    pub fn new(lower: f64, upper: f64, include_upper: bool) -> Result<Self, ScoreError> {
        let band = Self {
            lower,
            upper,
            include_upper,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        if 0.0 <= self.lower && self.lower < self.upper && self.upper <= 1.0 {
            Ok(())
        } else {
            Err(ScoreError::InvalidBand {
                lower: self.lower,
                upper: self.upper,
            })
        }
    }

    pub fn contains(&self, score: f64) -> bool {
        self.lower <= score && (score < self.upper || self.include_upper && score == self.upper)
    }

    /// File-name stem such as `band_000_010`, from the bounds in hundredths.
    pub fn file_stem(&self) -> String {
        let pct = |x: f64| (x * 100.0).round() as u32;
        format!("band_{:03}_{:03}", pct(self.lower), pct(self.upper))
    }

    /// Ten equal bands over `[0, 1]`, the last one closed.
    pub fn deciles() -> Vec<ScoreBand> {
        (0..10)
            .map(|i| ScoreBand {
                lower: i as f64 / 10.0,
                upper: (i + 1) as f64 / 10.0,
                include_upper: i == 9,
            })
            .collect()
    }
}

impl fmt::Display for ScoreBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.include_upper { ']' } else { ')' };
        write!(f, "[{}, {}{close}", self.lower, self.upper)
    }
}

/// Formal context of the cases whose score under `approach` lies in `band`.
/// Objects are case ids, attributes the answer ids. An empty band gives a
/// context without objects.
pub fn build_band_context(
    scores: &ScoreTable,
    band: ScoreBand,
    approach: Approach,
) -> Result<FormalContext, ScoreError> {
    band.validate()?;
    let m = scores.answer_ids.len();
    let mut objects = Vec::new();
    let mut rows = Vec::new();
    for row in &scores.rows {
        if !band.contains(row.scores.get(approach)) {
            continue;
        }
        let mut bits = FixedBitSet::with_capacity(m);
        for p in row.answers.true_positions() {
            bits.insert(p);
        }
        objects.push(row.case_id());
        rows.push(bits);
    }
    Ok(FormalContext::from_rows(
        objects,
        scores.answer_ids.clone(),
        rows,
    )?)
}
