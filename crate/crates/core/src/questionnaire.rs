//! Questionnaire schema, expert weight matrices and answer merging.
//!
//! A questionnaire is an ordered list of questions. Each question is either
//! exclusive (exactly one answer per case) or multi-select with an exclusive
//! "none" answer (either the none answer alone, or any non-empty subset of the
//! remaining answers). Answers are addressed by stable string ids; the
//! concatenation of every question's answer list defines the flat answer
//! position used everywhere else in the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest weight a doctor may assign to an answer.
pub const MIN_WEIGHT: f64 = -1.0;
/// Highest weight a doctor may assign to an answer.
pub const MAX_WEIGHT: f64 = 3.0;

/// Upper bound on the non-none answers of a multi-select question, so that
/// subsets fit in a `u32` mask.
pub const MAX_MULTI_SELECT_OPTIONS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("failed to parse questionnaire document: {0}")]
    Parse(String),
    #[error("duplicate question id `{0}`")]
    DuplicateQuestion(String),
    #[error("duplicate answer id `{0}`")]
    DuplicateAnswer(String),
    #[error("question `{0}` has no answers")]
    EmptyAnswers(String),
    #[error("multi-select question `{0}` has no none_answer_id")]
    MissingNoneAnswer(String),
    #[error("none_answer_id `{answer}` is not an answer of question `{question}`")]
    UnknownNoneAnswer { question: String, answer: String },
    #[error("exclusive question `{0}` must not declare a none_answer_id")]
    UnexpectedNoneAnswer(String),
    #[error("multi-select question `{question}` has {count} options (limit {limit})")]
    TooManyOptions {
        question: String,
        count: usize,
        limit: usize,
    },
    #[error("unknown answer id `{0}`")]
    UnknownAnswer(String),
    #[error("merge rule has no source answers")]
    EmptyMerge,
    #[error("merge sources span questions `{0}` and `{1}`")]
    MergeAcrossQuestions(String, String),
    #[error("merge sources include the none answer `{0}`")]
    MergeIncludesNone(String),
    #[error("merged answer id `{0}` collides with an existing answer")]
    MergeIdCollision(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("failed to read weight table: {0}")]
    Parse(String),
    #[error("weight table has no doctors")]
    NoDoctors,
    #[error("duplicate doctor id `{0}`")]
    DuplicateDoctor(String),
    #[error("duplicate answer column `{0}`")]
    DuplicateColumn(String),
    #[error("answer `{0}` is missing from the weight table")]
    MissingAnswer(String),
    #[error("weight table column `{0}` is not an answer of the questionnaire")]
    UnknownAnswer(String),
    #[error("missing weight for doctor `{doctor}`, answer `{answer}`")]
    MissingCell { doctor: String, answer: String },
    #[error("weight {value} for doctor `{doctor}`, answer `{answer}` is outside [-1, 3]")]
    OutOfRange {
        doctor: String,
        answer: String,
        value: f64,
    },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionMode {
    Exclusive,
    MultiSelectWithExclusiveNone,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub id: String,
    pub label: String,
    pub question_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub label: String,
    pub mode: QuestionMode,
    pub answers: Vec<AnswerOption>,
    pub none_answer_id: Option<String>,
}

impl Question {
    /// Position of the none answer inside `answers`, for multi-select questions.
    pub fn none_position(&self) -> Option<usize> {
        let none = self.none_answer_id.as_deref()?;
        self.answers.iter().position(|a| a.id == none)
    }

    /// Positions (inside `answers`) of the options that can be combined freely.
    pub fn option_positions(&self) -> Vec<usize> {
        let none = self.none_position();
        (0..self.answers.len()).filter(|&p| Some(p) != none).collect()
    }

    /// Number of admissible answer combinations for this question alone.
    pub fn combination_count(&self) -> usize {
        match self.mode {
            QuestionMode::Exclusive => self.answers.len(),
            // the none answer alone, plus every non-empty subset of the options
            QuestionMode::MultiSelectWithExclusiveNone => 1usize << (self.answers.len() - 1),
        }
    }
}

/// A validated questionnaire.
#[derive(Debug, Clone, PartialEq)]
pub struct Questionnaire {
    questions: Vec<Question>,
    offsets: Vec<usize>,
    positions: BTreeMap<String, usize>,
}

impl Questionnaire {
    pub fn new(questions: Vec<Question>) -> Result<Self, SchemaError> {
        let mut seen_questions = BTreeSet::new();
        let mut positions = BTreeMap::new();
        let mut offsets = Vec::with_capacity(questions.len());
        let mut next = 0;
        for question in &questions {
            if !seen_questions.insert(question.id.clone()) {
                return Err(SchemaError::DuplicateQuestion(question.id.clone()));
            }
            if question.answers.is_empty() {
                return Err(SchemaError::EmptyAnswers(question.id.clone()));
            }
            match (question.mode, &question.none_answer_id) {
                (QuestionMode::Exclusive, Some(_)) => {
                    return Err(SchemaError::UnexpectedNoneAnswer(question.id.clone()))
                }
                (QuestionMode::MultiSelectWithExclusiveNone, None) => {
                    return Err(SchemaError::MissingNoneAnswer(question.id.clone()))
                }
                (QuestionMode::MultiSelectWithExclusiveNone, Some(none)) => {
                    if question.none_position().is_none() {
                        return Err(SchemaError::UnknownNoneAnswer {
                            question: question.id.clone(),
                            answer: none.clone(),
                        });
                    }
                    let options = question.answers.len() - 1;
                    if options > MAX_MULTI_SELECT_OPTIONS {
                        return Err(SchemaError::TooManyOptions {
                            question: question.id.clone(),
                            count: options,
                            limit: MAX_MULTI_SELECT_OPTIONS,
                        });
                    }
                }
                (QuestionMode::Exclusive, None) => {}
            }
            offsets.push(next);
            for answer in &question.answers {
                if positions.insert(answer.id.clone(), next).is_some() {
                    return Err(SchemaError::DuplicateAnswer(answer.id.clone()));
                }
                next += 1;
            }
        }
        Ok(Self {
            questions,
            offsets,
            positions,
        })
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    /// Flat position of the first answer of question `q`.
    pub fn offset(&self, q: usize) -> usize {
        self.offsets[q]
    }

    pub fn answer_count(&self) -> usize {
        self.positions.len()
    }

    /// Answer ids in flat position order.
    pub fn answer_ids(&self) -> Vec<String> {
        self.answers().map(|a| a.id.clone()).collect()
    }

    pub fn answers(&self) -> impl Iterator<Item = &AnswerOption> {
        self.questions.iter().flat_map(|q| q.answers.iter())
    }

    pub fn position(&self, answer_id: &str) -> Option<usize> {
        self.positions.get(answer_id).copied()
    }

    /// Index of the question owning `answer_id`.
    pub fn question_of(&self, answer_id: &str) -> Option<usize> {
        let pos = self.position(answer_id)?;
        Some(self.offsets.partition_point(|&o| o <= pos) - 1)
    }

    /// Product of the per-question combination counts, `None` on overflow.
    pub fn case_count(&self) -> Option<usize> {
        self.questions
            .iter()
            .try_fold(1usize, |acc, q| acc.checked_mul(q.combination_count()))
    }
}

/// Replaces several answers of one question with a single answer whose
/// per-doctor weight is the arithmetic mean of the source weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRule {
    pub source_answer_ids: Vec<String>,
    pub merged_answer: MergedAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedAnswer {
    pub id: String,
    #[serde(default)]
    pub label: String,
}

impl MergeRule {
    /// Checks the rule against `q`, returning the owning question index and the
    /// answer positions (within that question) of the sources, sorted.
    fn resolve(&self, q: &Questionnaire) -> Result<(usize, Vec<usize>), SchemaError> {
        let first = self.source_answer_ids.first().ok_or(SchemaError::EmptyMerge)?;
        let question = q
            .question_of(first)
            .ok_or_else(|| SchemaError::UnknownAnswer(first.clone()))?;
        let mut local = Vec::with_capacity(self.source_answer_ids.len());
        for id in &self.source_answer_ids {
            let owner = q
                .question_of(id)
                .ok_or_else(|| SchemaError::UnknownAnswer(id.clone()))?;
            if owner != question {
                return Err(SchemaError::MergeAcrossQuestions(
                    q.questions[question].id.clone(),
                    q.questions[owner].id.clone(),
                ));
            }
            if q.questions[question].none_answer_id.as_deref() == Some(id.as_str()) {
                return Err(SchemaError::MergeIncludesNone(id.clone()));
            }
            local.push(q.position(id).unwrap() - q.offset(question));
        }
        local.sort_unstable();
        local.dedup();
        let merged = &self.merged_answer.id;
        if q.position(merged).is_some() && !self.source_answer_ids.contains(merged) {
            return Err(SchemaError::MergeIdCollision(merged.clone()));
        }
        Ok((question, local))
    }

    /// The questionnaire with the source answers replaced by the merged answer,
    /// placed where the first source answer was.
    pub fn apply_to_questionnaire(&self, q: &Questionnaire) -> Result<Questionnaire, SchemaError> {
        let (question, local) = self.resolve(q)?;
        let mut questions = q.questions.clone();
        let target = &mut questions[question];
        let merged = AnswerOption {
            id: self.merged_answer.id.clone(),
            label: self.merged_answer.label.clone(),
            question_id: target.id.clone(),
        };
        let mut answers = Vec::with_capacity(target.answers.len() + 1 - local.len());
        for (pos, answer) in target.answers.drain(..).enumerate() {
            if pos == local[0] {
                answers.push(merged.clone());
            } else if local.binary_search(&pos).is_err() {
                answers.push(answer);
            }
        }
        target.answers = answers;
        Questionnaire::new(questions)
    }
}

/// Applies `rule` to a weight matrix whose columns follow `q`. Source columns
/// are dropped and the merged column takes the place of the first source
/// column; each doctor's merged weight is the mean of their source weights.
pub fn apply_merge(
    wm: &WeightMatrix,
    rule: &MergeRule,
    q: &Questionnaire,
) -> Result<WeightMatrix, WeightError> {
    rule.resolve(q)?;
    let mut source_columns = Vec::with_capacity(rule.source_answer_ids.len());
    for id in &rule.source_answer_ids {
        let col = wm
            .column(id)
            .ok_or_else(|| WeightError::MissingAnswer(id.clone()))?;
        if !source_columns.contains(&col) {
            source_columns.push(col);
        }
    }
    source_columns.sort_unstable();
    let first = source_columns[0];

    let mut answer_ids = Vec::with_capacity(wm.answer_ids.len() + 1 - source_columns.len());
    let mut kept = Vec::new();
    for (col, id) in wm.answer_ids.iter().enumerate() {
        if col == first {
            answer_ids.push(rule.merged_answer.id.clone());
            kept.push(None);
        } else if source_columns.binary_search(&col).is_err() {
            answer_ids.push(id.clone());
            kept.push(Some(col));
        }
    }

    let mut cells = Vec::with_capacity(wm.doctors.len() * answer_ids.len());
    for row in 0..wm.doctors.len() {
        for slot in &kept {
            let value = match slot {
                Some(col) => wm.cell(row, *col),
                None => {
                    let mut sum = 0.0;
                    let mut complete = true;
                    for &col in &source_columns {
                        match wm.cell(row, col) {
                            Some(w) => sum += w,
                            None => complete = false,
                        }
                    }
                    complete.then(|| sum / source_columns.len() as f64)
                }
            };
            cells.push(value);
        }
    }
    WeightMatrix::new(wm.doctors.clone(), answer_ids, cells)
}

/// Per-doctor, per-answer weights. Cells may be missing until validated.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    doctors: Vec<String>,
    answer_ids: Vec<String>,
    cells: Vec<Option<f64>>,
}

impl WeightMatrix {
    /// Builds a matrix from row-major cells (`doctors.len()` rows).
    pub fn new(
        doctors: Vec<String>,
        answer_ids: Vec<String>,
        cells: Vec<Option<f64>>,
    ) -> Result<Self, WeightError> {
        if cells.len() != doctors.len() * answer_ids.len() {
            return Err(WeightError::Parse(format!(
                "expected {} cells, found {}",
                doctors.len() * answer_ids.len(),
                cells.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for d in &doctors {
            if !seen.insert(d.as_str()) {
                return Err(WeightError::DuplicateDoctor(d.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for a in &answer_ids {
            if !seen.insert(a.as_str()) {
                return Err(WeightError::DuplicateColumn(a.clone()));
            }
        }
        Ok(Self {
            doctors,
            answer_ids,
            cells,
        })
    }

    /// Parses a comma-separated table: a header of answer ids (the first header
    /// cell names the doctor column), then one row per doctor. Empty cells are
    /// read as missing weights.
    pub fn from_csv_str(text: &str) -> Result<Self, WeightError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| WeightError::Parse(e.to_string()))?
            .clone();
        let answer_ids: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut doctors = Vec::new();
        let mut cells = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| WeightError::Parse(e.to_string()))?;
            let mut fields = record.iter();
            let doctor = fields.next().unwrap_or_default().to_owned();
            for (field, answer) in fields.zip(&answer_ids) {
                if field.is_empty() {
                    cells.push(None);
                } else {
                    let value: f64 = field.parse().map_err(|_| {
                        WeightError::Parse(format!(
                            "doctor `{doctor}`, answer `{answer}`: `{field}` is not a number"
                        ))
                    })?;
                    cells.push(Some(value));
                }
            }
            doctors.push(doctor);
        }
        Self::new(doctors, answer_ids, cells)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, WeightError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WeightError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn doctors(&self) -> &[String] {
        &self.doctors
    }

    pub fn answer_ids(&self) -> &[String] {
        &self.answer_ids
    }

    pub fn column(&self, answer_id: &str) -> Option<usize> {
        self.answer_ids.iter().position(|a| a == answer_id)
    }

    fn cell(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.answer_ids.len() + col]
    }

    pub fn get(&self, doctor: &str, answer_id: &str) -> Option<f64> {
        let row = self.doctors.iter().position(|d| d == doctor)?;
        self.cell(row, self.column(answer_id)?)
    }

    /// Weights of one answer across doctors, in doctor order.
    pub fn answer_column(&self, answer_id: &str) -> Option<Vec<Option<f64>>> {
        let col = self.column(answer_id)?;
        Some((0..self.doctors.len()).map(|r| self.cell(r, col)).collect())
    }

    /// Same matrix with columns reordered to the questionnaire's answer order.
    pub fn aligned_to(&self, q: &Questionnaire) -> Result<Self, WeightError> {
        let cols = q
            .answers()
            .map(|a| {
                self.column(&a.id)
                    .ok_or_else(|| WeightError::MissingAnswer(a.id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cells = (0..self.doctors.len())
            .flat_map(|r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self.cell(r, c))
            .collect();
        Self::new(self.doctors.clone(), q.answer_ids(), cells)
    }
}

/// Checks that `wm` has exactly the answers of `q` and a weight in `[-1, 3]`
/// for every (doctor, answer) pair. Returns the matrix unchanged.
pub fn validate_weights(wm: WeightMatrix, q: &Questionnaire) -> Result<WeightMatrix, WeightError> {
    if wm.doctors.is_empty() {
        return Err(WeightError::NoDoctors);
    }
    for id in &wm.answer_ids {
        if q.position(id).is_none() {
            return Err(WeightError::UnknownAnswer(id.clone()));
        }
    }
    for answer in q.answers() {
        if wm.column(&answer.id).is_none() {
            return Err(WeightError::MissingAnswer(answer.id.clone()));
        }
    }
    for (row, doctor) in wm.doctors.iter().enumerate() {
        for (col, answer) in wm.answer_ids.iter().enumerate() {
            match wm.cell(row, col) {
                None => {
                    return Err(WeightError::MissingCell {
                        doctor: doctor.clone(),
                        answer: answer.clone(),
                    })
                }
                Some(value) if !(MIN_WEIGHT..=MAX_WEIGHT).contains(&value) => {
                    return Err(WeightError::OutOfRange {
                        doctor: doctor.clone(),
                        answer: answer.clone(),
                        value,
                    })
                }
                Some(_) => {}
            }
        }
    }
    Ok(wm)
}

/// Doctor-averaged weight of each answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerWeightVector {
    answer_ids: Vec<String>,
    means: Vec<f64>,
}

impl AnswerWeightVector {
    pub fn new(answer_ids: Vec<String>, means: Vec<f64>) -> Self {
        assert_eq!(answer_ids.len(), means.len());
        Self { answer_ids, means }
    }

    pub fn answer_ids(&self) -> &[String] {
        &self.answer_ids
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn get(&self, answer_id: &str) -> Option<f64> {
        let i = self.answer_ids.iter().position(|a| a == answer_id)?;
        Some(self.means[i])
    }

    /// Reorders the vector to the questionnaire's flat answer order.
    pub fn aligned_to(&self, q: &Questionnaire) -> Result<Self, SchemaError> {
        let means = q
            .answers()
            .map(|a| {
                self.get(&a.id)
                    .ok_or_else(|| SchemaError::UnknownAnswer(a.id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(q.answer_ids(), means))
    }
}

/// Arithmetic mean of each answer's weights over all doctors, unrounded.
pub fn mean_weights(wm: &WeightMatrix) -> Result<AnswerWeightVector, WeightError> {
    if wm.doctors.is_empty() {
        return Err(WeightError::NoDoctors);
    }
    let n = wm.doctors.len() as f64;
    let mut means = Vec::with_capacity(wm.answer_ids.len());
    for (col, answer) in wm.answer_ids.iter().enumerate() {
        let mut sum = 0.0;
        for (row, doctor) in wm.doctors.iter().enumerate() {
            sum += wm.cell(row, col).ok_or_else(|| WeightError::MissingCell {
                doctor: doctor.clone(),
                answer: answer.clone(),
            })?;
        }
        means.push(sum / n);
    }
    Ok(AnswerWeightVector::new(wm.answer_ids.clone(), means))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionnaireDoc {
    questions: Vec<QuestionDoc>,
    #[serde(default)]
    merge_rules: Vec<MergeRule>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionDoc {
    id: String,
    #[serde(default)]
    label: String,
    mode: QuestionMode,
    answers: Vec<AnswerDoc>,
    #[serde(default)]
    none_answer_id: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerDoc {
    id: String,
    #[serde(default)]
    label: String,
}

/// A questionnaire together with the merge rules declared next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaDocument {
    pub questionnaire: Questionnaire,
    pub merge_rules: Vec<MergeRule>,
}

impl SchemaDocument {
    /// The questionnaire after applying every merge rule in order.
    pub fn merged_questionnaire(&self) -> Result<Questionnaire, SchemaError> {
        self.merge_rules
            .iter()
            .try_fold(self.questionnaire.clone(), |q, rule| rule.apply_to_questionnaire(&q))
    }

    /// Validates `wm` against the unmerged questionnaire, then applies the merge
    /// rules to both. The returned matrix is aligned to the merged questionnaire.
    pub fn merge_weights(
        &self,
        wm: WeightMatrix,
    ) -> Result<(Questionnaire, WeightMatrix), WeightError> {
        let mut q = self.questionnaire.clone();
        let mut wm = validate_weights(wm, &q)?.aligned_to(&q)?;
        for rule in &self.merge_rules {
            wm = apply_merge(&wm, rule, &q)?;
            q = rule.apply_to_questionnaire(&q)?;
        }
        Ok((q, wm))
    }
}

/// Parses a TOML questionnaire document.
pub fn load_questionnaire(config: &str) -> Result<SchemaDocument, SchemaError> {
    let doc: QuestionnaireDoc =
        toml::from_str(config).map_err(|e| SchemaError::Parse(e.to_string()))?;
    let questions = doc
        .questions
        .into_iter()
        .map(|q| Question {
            answers: q
                .answers
                .into_iter()
                .map(|a| AnswerOption {
                    id: a.id,
                    label: a.label,
                    question_id: q.id.clone(),
                })
                .collect(),
            id: q.id,
            label: q.label,
            mode: q.mode,
            none_answer_id: q.none_answer_id,
        })
        .collect();
    let questionnaire = Questionnaire::new(questions)?;
    // rules are checked eagerly so a bad document fails at load time
    let doc = SchemaDocument {
        questionnaire,
        merge_rules: doc.merge_rules,
    };
    doc.merged_questionnaire()?;
    Ok(doc)
}

pub fn load_questionnaire_path(path: &Path) -> Result<SchemaDocument, SchemaError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SchemaError::Parse(format!("{}: {e}", path.display())))?;
    load_questionnaire(&text)
}

/// Bundled merged questionnaire (6 questions, 19 answers).
pub const DEFAULT_QUESTIONNAIRE: &str = include_str!("../data/questionnaire.toml");
/// Bundled unmerged questionnaire (q1 with seven answers) and its merge rule.
pub const UNMERGED_QUESTIONNAIRE: &str = include_str!("../data/questionnaire_unmerged.toml");
/// Bundled weights of fifteen doctors for the merged questionnaire.
pub const DEFAULT_WEIGHTS: &str = include_str!("../data/expert_weights.csv");

pub fn default_questionnaire() -> Questionnaire {
    load_questionnaire(DEFAULT_QUESTIONNAIRE)
        .expect("bundled questionnaire is valid")
        .questionnaire
}

pub fn default_weights() -> WeightMatrix {
    let wm = WeightMatrix::from_csv_str(DEFAULT_WEIGHTS).expect("bundled weights parse");
    validate_weights(wm, &default_questionnaire()).expect("bundled weights are valid")
}
