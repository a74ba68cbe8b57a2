//! Enumeration of admissible answer combinations and their weight sums.
//!
//! Cases are ordered lexicographically over questions in schema order, the
//! first question being the most significant digit. Within an exclusive
//! question the digit is the answer position. Within a multi-select question
//! digit 0 is the none answer and digit `d > 0` selects the options whose bit
//! is set in `d`, bit `b` standing for the `b`-th non-none answer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::questionnaire::{AnswerWeightVector, Question, QuestionMode, Questionnaire};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("case has {found} answers, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("question `{question}`: {reason}")]
    Inadmissible { question: String, reason: String },
    #[error("case index {index} out of range (case space has {count} cases)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("case space size overflows")]
    TooLarge,
    #[error("answer `{0}` has no weight")]
    UnknownAnswer(String),
    #[error("normalization needs at least two distinct finite sums")]
    DegenerateRange,
    #[error("non-finite weight sum {0}")]
    NonFinite(f64),
}

/// One answer assignment, indexed by flat answer position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CaseVector {
    answers: Vec<bool>,
}

impl CaseVector {
    pub fn new(answers: Vec<bool>) -> Self {
        Self { answers }
    }

    /// Builds the case in which exactly the listed answers are true.
    pub fn from_answer_ids<S: AsRef<str>>(q: &Questionnaire, ids: &[S]) -> Result<Self, CaseError> {
        let mut answers = vec![false; q.answer_count()];
        for id in ids {
            let pos = q
                .position(id.as_ref())
                .ok_or_else(|| CaseError::UnknownAnswer(id.as_ref().to_owned()))?;
            answers[pos] = true;
        }
        Ok(Self { answers })
    }

    pub fn answers(&self) -> &[bool] {
        &self.answers
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn is_true(&self, position: usize) -> bool {
        self.answers[position]
    }

    /// Flat positions of the true answers.
    pub fn true_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.answers
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaseSet {
    cases: Vec<CaseVector>,
}

impl CaseSet {
    /// Wraps an arbitrary list of cases (no admissibility check).
    pub fn from_cases(cases: Vec<CaseVector>) -> Self {
        Self { cases }
    }

    pub fn cases(&self) -> &[CaseVector] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CaseVector> {
        self.cases.iter()
    }
}

impl<'a> IntoIterator for &'a CaseSet {
    type Item = &'a CaseVector;
    type IntoIter = std::slice::Iter<'a, CaseVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.cases.iter()
    }
}

fn write_digit(question: &Question, digit: usize, out: &mut [bool]) {
    match question.mode {
        QuestionMode::Exclusive => out[digit] = true,
        QuestionMode::MultiSelectWithExclusiveNone => {
            if digit == 0 {
                out[question.none_position().unwrap()] = true;
            } else {
                for (bit, pos) in question.option_positions().into_iter().enumerate() {
                    if digit >> bit & 1 == 1 {
                        out[pos] = true;
                    }
                }
            }
        }
    }
}

fn read_digit(question: &Question, slots: &[bool]) -> Result<usize, String> {
    match question.mode {
        QuestionMode::Exclusive => {
            let mut chosen = slots.iter().enumerate().filter(|(_, &b)| b);
            match (chosen.next(), chosen.next()) {
                (Some((pos, _)), None) => Ok(pos),
                (None, _) => Err("no answer selected".into()),
                (Some(_), Some(_)) => Err("more than one answer selected".into()),
            }
        }
        QuestionMode::MultiSelectWithExclusiveNone => {
            let none = question.none_position().unwrap();
            let mut digit = 0;
            for (bit, pos) in question.option_positions().into_iter().enumerate() {
                if slots[pos] {
                    digit |= 1 << bit;
                }
            }
            match (slots[none], digit) {
                (true, 0) => Ok(0),
                (true, _) => Err("none answer combined with other answers".into()),
                (false, 0) => Err("no answer selected".into()),
                (false, d) => Ok(d),
            }
        }
    }
}

/// Every admissible case in canonical order.
pub fn enumerate_cases(q: &Questionnaire) -> Result<CaseSet, CaseError> {
    let count = q.case_count().ok_or(CaseError::TooLarge)?;
    let cases = (0..count)
        .map(|i| case_at(q, i))
        .collect::<Result<_, _>>()?;
    Ok(CaseSet { cases })
}

/// Inverse of [`canonical_index`].
pub fn case_at(q: &Questionnaire, index: usize) -> Result<CaseVector, CaseError> {
    let count = q.case_count().ok_or(CaseError::TooLarge)?;
    if index >= count {
        return Err(CaseError::IndexOutOfRange { index, count });
    }
    let mut answers = vec![false; q.answer_count()];
    let mut rest = index;
    for (i, question) in q.questions().iter().enumerate().rev() {
        let radix = question.combination_count();
        let start = q.offset(i);
        let slots = &mut answers[start..start + question.answers.len()];
        write_digit(question, rest % radix, slots);
        rest /= radix;
    }
    Ok(CaseVector { answers })
}

/// Position of `c` in the canonical order. Fails if the case violates any
/// question's mode.
pub fn canonical_index(c: &CaseVector, q: &Questionnaire) -> Result<usize, CaseError> {
    if c.len() != q.answer_count() {
        return Err(CaseError::WrongLength {
            expected: q.answer_count(),
            found: c.len(),
        });
    }
    let mut index = 0usize;
    for (i, question) in q.questions().iter().enumerate() {
        let start = q.offset(i);
        let slots = &c.answers[start..start + question.answers.len()];
        let digit = read_digit(question, slots).map_err(|reason| CaseError::Inadmissible {
            question: question.id.clone(),
            reason,
        })?;
        index = index
            .checked_mul(question.combination_count())
            .and_then(|x| x.checked_add(digit))
            .ok_or(CaseError::TooLarge)?;
    }
    Ok(index)
}

/// Checks `c` against every question's mode.
pub fn validate_case(c: &CaseVector, q: &Questionnaire) -> Result<(), CaseError> {
    canonical_index(c, q).map(|_| ())
}

/// Sum of the mean weights of the true answers. `v` must follow the same flat
/// answer order as the case.
pub fn weight_sum(c: &CaseVector, v: &AnswerWeightVector) -> Result<f64, CaseError> {
    if c.len() != v.len() {
        return Err(CaseError::WrongLength {
            expected: v.len(),
            found: c.len(),
        });
    }
    let means = v.means();
    Ok(c.true_positions().map(|p| means[p]).sum())
}

/// Bounds of the min-max normalization, kept so that single cases can be
/// scored later on the same scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub min: f64,
    pub max: f64,
}

impl NormalizationBounds {
    pub fn new(min: f64, max: f64) -> Result<Self, CaseError> {
        if !min.is_finite() {
            return Err(CaseError::NonFinite(min));
        }
        if !max.is_finite() {
            return Err(CaseError::NonFinite(max));
        }
        if max <= min {
            return Err(CaseError::DegenerateRange);
        }
        Ok(Self { min, max })
    }

    /// Unclamped min-max normalized value.
    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.min) / (self.max - self.min)
    }

    /// Normalized value clamped to `[0, 1]`, and whether clamping happened.
    pub fn normalize_clamped(&self, raw: f64) -> (f64, bool) {
        let x = self.normalize(raw);
        if x < 0.0 {
            (0.0, true)
        } else if x > 1.0 {
            (1.0, true)
        } else {
            (x, false)
        }
    }
}

/// Raw and normalized weight sums in case order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSumTable {
    raw: Vec<f64>,
    normalized: Vec<f64>,
    bounds: NormalizationBounds,
}

impl WeightSumTable {
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn bounds(&self) -> NormalizationBounds {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Min-max normalizes `sums` using their own minimum and maximum.
pub fn normalize_sums(sums: &[f64]) -> Result<WeightSumTable, CaseError> {
    if let Some(&bad) = sums.iter().find(|s| !s.is_finite()) {
        return Err(CaseError::NonFinite(bad));
    }
    let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if sums.is_empty() {
        return Err(CaseError::DegenerateRange);
    }
    let bounds = NormalizationBounds::new(min, max)?;
    Ok(WeightSumTable {
        raw: sums.to_vec(),
        normalized: sums.iter().map(|&s| bounds.normalize(s)).collect(),
        bounds,
    })
}

/// Weight sums of every case in `cases`, normalized over the set.
pub fn weight_sum_table(
    cases: &CaseSet,
    v: &AnswerWeightVector,
) -> Result<WeightSumTable, CaseError> {
    let sums = cases
        .iter()
        .map(|c| weight_sum(c, v))
        .collect::<Result<Vec<_>, _>>()?;
    normalize_sums(&sums)
}
