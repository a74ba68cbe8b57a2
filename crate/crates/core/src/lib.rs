//! Expert-elicited probability scoring for a diagnostic questionnaire.
//!
//! Doctors assign weights in `[-1, 3]` to every answer of a questionnaire. The
//! crate averages those weights, enumerates every admissible combination of
//! answers, sums and min-max normalizes the weights of each combination, and
//! turns the normalized sums into probability scores with three estimators:
//!
//! 1. the CDF of a Gaussian mixture fitted by expectation-maximization,
//! 2. the CDF of a Gaussian kernel density estimate,
//! 3. the posterior of the highest-mean mixture component.
//!
//! The scored case space is then explained with a Gini decision tree and with
//! formal concept lattices built per probability band.

pub mod case_space;
pub mod density;
pub mod explain;
pub mod io;
pub mod normal;
pub mod pipeline;
pub mod questionnaire;
pub mod scores;

pub use case_space::{
    canonical_index, case_at, enumerate_cases, normalize_sums, weight_sum, CaseError, CaseSet,
    CaseVector, NormalizationBounds, WeightSumTable,
};
pub use density::{
    em_fit, information_criteria, select_component_count, silverman_bandwidth, DensityError,
    EmOptions, FitSummary, GaussianComponent, GaussianMixture, KernelDensity, ModelSelection,
};
pub use explain::{
    build_lattice, categorize, enumerate_concepts, fit_decision_tree, prune_tree,
    CategoryThresholds, ConceptLattice, DecisionTree, FormalConcept, FormalContext,
    ProbabilityCategory, TreeParams,
};
pub use pipeline::{run_pipeline, score_patient, ModelBundle, PipelineConfig, PipelineError};
pub use questionnaire::{
    apply_merge, load_questionnaire, mean_weights, validate_weights, AnswerOption,
    AnswerWeightVector, MergeRule, Question, QuestionMode, Questionnaire, SchemaDocument,
    SchemaError, WeightMatrix,
};
pub use scores::{elicit_probabilities, Approach, ApproachScores, ScoreRow, ScoreTable};
