//! End-to-end pipeline: inputs, enumeration, density fits, scores, tree and
//! band lattices, and the files written for each stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_space::{
    enumerate_cases, validate_case, weight_sum, weight_sum_table, CaseError, CaseSet, CaseVector,
    NormalizationBounds, WeightSumTable,
};
use crate::density::{
    select_component_count, silverman_estimate, BandwidthEstimate, DensityError, EmOptions,
    GaussianComponent, GaussianMixture, KernelDensity, ModelSelection, StdDevConvention,
};
use crate::explain::{
    build_lattice, enumerate_concepts, enumerate_concepts_parallel, fit_decision_tree, prune_tree,
    CategoryError, CategoryThresholds, ConceptLattice, DecisionTree, FcaError, FormalContext,
    ProbabilityCategory, TreeError, TreeParams,
};
use crate::io::{
    cases_csv, density_samples_csv, lattice_to_dot, scores_csv, supports_csv, tree_to_dot,
    write_cxt, write_text, IoError, DENSITY_SAMPLE_POINTS,
};
use crate::questionnaire::{
    load_questionnaire_path, mean_weights, AnswerWeightVector, Questionnaire, SchemaError,
    WeightError, WeightMatrix,
};
use crate::scores::{
    build_band_context, elicit_probabilities, Approach, ApproachScores, ScoreBand, ScoreError,
    ScoreTable,
};

pub const CASES_FILE: &str = "cases.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const DENSITY_SAMPLES_FILE: &str = "density_samples.csv";
pub const MODEL_FILE: &str = "model.json";
pub const TREE_FULL_FILE: &str = "tree_full.dot";
pub const TREE_PRUNED_FILE: &str = "tree_pruned.dot";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("questionnaire: {0}")]
    Schema(#[from] SchemaError),
    #[error("weights: {0}")]
    Weights(#[from] WeightError),
    #[error("cases: {0}")]
    Cases(#[from] CaseError),
    #[error("density fit: {0}")]
    Density(#[from] DensityError),
    #[error("scoring: {0}")]
    Scores(#[from] ScoreError),
    #[error("categories: {0}")]
    Category(#[from] CategoryError),
    #[error("decision tree: {0}")]
    Tree(#[from] TreeError),
    #[error("concept lattice: {0}")]
    Lattice(#[from] FcaError),
    #[error("output: {0}")]
    Io(#[from] IoError),
    #[error("model bundle: {0}")]
    Bundle(String),
}

impl PipelineError {
    /// Whether the error comes from invalid user input (config, schema,
    /// weights, patient answers) rather than a failure while computing or
    /// writing.
    pub fn is_validation(&self) -> bool {
        match self {
            Self::Config(_) | Self::Schema(_) | Self::Weights(_) | Self::Bundle(_) => true,
            Self::Cases(e) => matches!(
                e,
                CaseError::WrongLength { .. }
                    | CaseError::Inadmissible { .. }
                    | CaseError::UnknownAnswer(_)
            ),
            _ => false,
        }
    }
}

fn default_m_max() -> usize {
    4
}

fn default_prune_alpha() -> f64 {
    0.005
}

fn default_band_approach() -> Approach {
    Approach::GmmCdf
}

/// Pipeline settings, read from TOML. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Questionnaire document, including any merge rules.
    pub questionnaire: PathBuf,
    /// Weight matrix CSV, columns matching the unmerged questionnaire.
    pub weights: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub em: EmOptions,
    /// Largest component count tried during model selection.
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    /// Component count of the scoring mixture; `None` uses the BIC choice.
    #[serde(default)]
    pub components: Option<usize>,
    /// Mixture used for scoring instead of the fitted one.
    #[serde(default)]
    pub fixed_mixture: Option<Vec<GaussianComponent>>,
    /// Kernel bandwidth; `None` uses Silverman's rule.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub thresholds: CategoryThresholds,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default = "default_prune_alpha")]
    pub prune_alpha: f64,
    #[serde(default = "ScoreBand::deciles")]
    pub bands: Vec<ScoreBand>,
    #[serde(default = "default_band_approach")]
    pub band_approach: Approach,
    /// Enumerate concepts with the parallel algorithm (same output).
    #[serde(default)]
    pub parallel_concepts: bool,
}

impl PipelineConfig {
    /// Config with default settings for the given inputs.
    pub fn new(questionnaire: PathBuf, weights: PathBuf, output_dir: PathBuf) -> Self {
        Self {
            questionnaire,
            weights,
            output_dir,
            em: EmOptions::default(),
            m_max: default_m_max(),
            components: None,
            fixed_mixture: None,
            bandwidth: None,
            thresholds: CategoryThresholds::default(),
            tree: TreeParams::default(),
            prune_alpha: default_prune_alpha(),
            bands: ScoreBand::deciles(),
            band_approach: default_band_approach(),
            parallel_concepts: false,
        }
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        for p in [&mut cfg.questionnaire, &mut cfg.weights, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        self.thresholds
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.m_max == 0 {
            return bad("m_max must be at least 1".into());
        }
        if self.components == Some(0) {
            return bad("components must be at least 1".into());
        }
        if self.prune_alpha.is_nan() || self.prune_alpha < 0.0 {
            return bad(format!("prune_alpha must be non-negative, got {}", self.prune_alpha));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("bandwidth must be positive, got {h}"));
            }
        }
        if let Some(fixed) = &self.fixed_mixture {
            GaussianMixture::new(fixed.clone()).map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        for band in &self.bands {
            band.validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn band_path(&self, band: &ScoreBand, suffix: &str) -> PathBuf {
        self.output_dir.join(format!("{}{suffix}", band.file_stem()))
    }
}

/// Inputs after loading, merging and averaging, with the enumerated cases.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub questionnaire: Questionnaire,
    pub weights: AnswerWeightVector,
    pub cases: CaseSet,
    pub sums: WeightSumTable,
}

pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared, PipelineError> {
    let doc = load_questionnaire_path(&cfg.questionnaire)?;
    let wm = WeightMatrix::from_csv_path(&cfg.weights)?;
    let (questionnaire, wm) = doc.merge_weights(wm)?;
    let weights = mean_weights(&wm)?.aligned_to(&questionnaire)?;
    let cases = enumerate_cases(&questionnaire)?;
    let sums = weight_sum_table(&cases, &weights)?;
    Ok(Prepared {
        questionnaire,
        weights,
        cases,
        sums,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterSource {
    Fitted,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    pub used: f64,
    pub source: ParameterSource,
    /// Silverman's rule with the sample standard deviation and linearly
    /// interpolated quartiles.
    pub silverman: BandwidthEstimate,
    /// The same rule with the population standard deviation.
    pub silverman_population: BandwidthEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub cases: usize,
    pub bounds: NormalizationBounds,
    pub selection: ModelSelection,
    pub mixture_source: ParameterSource,
    pub mixture: GaussianMixture,
    pub bandwidth: BandwidthReport,
}

#[derive(Debug, Clone)]
pub struct FittedModels {
    pub report: FitReport,
    pub mixture: GaussianMixture,
    pub kde: KernelDensity,
}

pub fn fit_models(cfg: &PipelineConfig, prep: &Prepared) -> Result<FittedModels, PipelineError> {
    let data = prep.sums.normalized();
    let selection = select_component_count(data, cfg.m_max, &cfg.em)?;
    let (mixture, mixture_source) = match &cfg.fixed_mixture {
        Some(fixed) => (GaussianMixture::new(fixed.clone())?, ParameterSource::Fixed),
        None => {
            let m = cfg.components.unwrap_or(selection.selected);
            let model = match selection.model(m) {
                Some(model) => model.clone(),
                None => crate::density::em_fit(data, m, &cfg.em)?.0,
            };
            (model, ParameterSource::Fitted)
        }
    };
    let silverman = silverman_estimate(data, StdDevConvention::Sample)?;
    let silverman_population = silverman_estimate(data, StdDevConvention::Population)?;
    let (used, source) = match cfg.bandwidth {
        Some(h) => (h, ParameterSource::Fixed),
        None => (silverman.bandwidth, ParameterSource::Fitted),
    };
    let kde = KernelDensity::new(data.to_vec(), used)?;
    Ok(FittedModels {
        report: FitReport {
            cases: data.len(),
            bounds: prep.sums.bounds(),
            selection,
            mixture_source,
            mixture: mixture.clone(),
            bandwidth: BandwidthReport {
                used,
                source,
                silverman,
                silverman_population,
            },
        },
        mixture,
        kde,
    })
}

/// Everything needed to score a single answer assignment later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub weights: AnswerWeightVector,
    pub bounds: NormalizationBounds,
    pub mixture: GaussianMixture,
    pub kde: KernelDensity,
    pub thresholds: CategoryThresholds,
}

impl ModelBundle {
    pub fn new(cfg: &PipelineConfig, prep: &Prepared, models: &FittedModels) -> Self {
        Self {
            weights: prep.weights.clone(),
            bounds: prep.sums.bounds(),
            mixture: models.mixture.clone(),
            kde: models.kde.clone(),
            thresholds: cfg.thresholds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let bundle: Self =
            serde_json::from_str(text).map_err(|e| PipelineError::Bundle(e.to_string()))?;
        NormalizationBounds::new(bundle.bounds.min, bundle.bounds.max)
            .map_err(|e| PipelineError::Bundle(e.to_string()))?;
        bundle
            .thresholds
            .validate()
            .map_err(|e| PipelineError::Bundle(e.to_string()))?;
        Ok(bundle)
    }

    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Bundle(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientScore {
    pub raw_sum: f64,
    pub normalized_sum: f64,
    /// The raw sum fell outside the normalization bounds and the normalized
    /// value was clamped to `[0, 1]`.
    pub clamped: bool,
    pub scores: ApproachScores,
    pub category: ProbabilityCategory,
}

/// Scores one answer assignment with a fitted bundle. For an enumerated case
/// the result equals that case's score table row exactly.
pub fn score_patient(
    answers: &CaseVector,
    questionnaire: &Questionnaire,
    bundle: &ModelBundle,
) -> Result<PatientScore, PipelineError> {
    validate_case(answers, questionnaire)?;
    let weights = bundle.weights.aligned_to(questionnaire)?;
    let raw_sum = weight_sum(answers, &weights)?;
    let (normalized_sum, clamped) = bundle.bounds.normalize_clamped(raw_sum);
    let scores = ApproachScores::evaluate(normalized_sum, &bundle.mixture, &bundle.kde);
    Ok(PatientScore {
        raw_sum,
        normalized_sum,
        clamped,
        scores,
        category: bundle.thresholds.categorize(scores.gmm_cdf)?,
    })
}

pub fn score_cases(
    cfg: &PipelineConfig,
    prep: &Prepared,
    models: &FittedModels,
) -> Result<ScoreTable, PipelineError> {
    Ok(elicit_probabilities(
        &prep.cases,
        &prep.questionnaire.answer_ids(),
        &prep.sums,
        &models.mixture,
        &models.kde,
        &cfg.thresholds,
    )?)
}

/// Full tree on the approach-1 categories and its pruned version.
pub fn fit_trees(
    cfg: &PipelineConfig,
    table: &ScoreTable,
) -> Result<(DecisionTree, DecisionTree), PipelineError> {
    let full = fit_decision_tree(&table.cases(), &table.answer_ids, &table.categories(), &cfg.tree)?;
    let pruned = prune_tree(&full, cfg.prune_alpha)?;
    Ok((full, pruned))
}

#[derive(Debug, Clone)]
pub struct BandLattice {
    pub band: ScoreBand,
    pub context: FormalContext,
    pub lattice: ConceptLattice,
}

pub fn band_lattices(
    cfg: &PipelineConfig,
    table: &ScoreTable,
) -> Result<Vec<BandLattice>, PipelineError> {
    cfg.bands
        .iter()
        .map(|&band| {
            let context = build_band_context(table, band, cfg.band_approach)?;
            let concepts = if cfg.parallel_concepts {
                enumerate_concepts_parallel(&context)
            } else {
                enumerate_concepts(&context)
            };
            let lattice = build_lattice(concepts)?;
            Ok(BandLattice {
                band,
                context,
                lattice,
            })
        })
        .collect()
}

pub fn write_cases(cfg: &PipelineConfig, prep: &Prepared) -> Result<(), PipelineError> {
    let text = cases_csv(&prep.cases, &prep.questionnaire.answer_ids(), &prep.sums)?;
    Ok(write_text(&cfg.output_dir.join(CASES_FILE), &text)?)
}

pub fn write_fit(
    cfg: &PipelineConfig,
    prep: &Prepared,
    models: &FittedModels,
) -> Result<(), PipelineError> {
    let dir = &cfg.output_dir;
    let report = serde_json::to_string_pretty(&models.report).expect("report serializes") + "\n";
    write_text(&dir.join(FIT_REPORT_FILE), &report)?;
    let samples = density_samples_csv(&models.mixture, &models.kde, DENSITY_SAMPLE_POINTS)?;
    write_text(&dir.join(DENSITY_SAMPLES_FILE), &samples)?;
    let bundle = ModelBundle::new(cfg, prep, models);
    write_text(&dir.join(MODEL_FILE), &bundle.to_json())?;
    Ok(())
}

pub fn write_scores(cfg: &PipelineConfig, table: &ScoreTable) -> Result<(), PipelineError> {
    Ok(write_text(&cfg.output_dir.join(SCORES_FILE), &scores_csv(table)?)?)
}

pub fn write_trees(
    cfg: &PipelineConfig,
    full: &DecisionTree,
    pruned: &DecisionTree,
) -> Result<(), PipelineError> {
    write_text(&cfg.output_dir.join(TREE_FULL_FILE), &tree_to_dot(full))?;
    write_text(&cfg.output_dir.join(TREE_PRUNED_FILE), &tree_to_dot(pruned))?;
    Ok(())
}

/// Per band: `<stem>.cxt`, `<stem>_lattice.dot` and `<stem>_supports.csv`.
pub fn write_bands(cfg: &PipelineConfig, bands: &[BandLattice]) -> Result<(), PipelineError> {
    for b in bands {
        write_text(&cfg.band_path(&b.band, ".cxt"), &write_cxt(&b.context)?)?;
        write_text(
            &cfg.band_path(&b.band, "_lattice.dot"),
            &lattice_to_dot(&b.lattice, &b.context),
        )?;
        write_text(&cfg.band_path(&b.band, "_supports.csv"), &supports_csv(&b.context)?)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub prepared: Prepared,
    pub models: FittedModels,
    pub table: ScoreTable,
    pub bundle: ModelBundle,
    pub full_tree: DecisionTree,
    pub pruned_tree: DecisionTree,
    pub bands: Vec<BandLattice>,
}

/// Runs every stage and writes every artifact under `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    write_cases(cfg, &prepared)?;
    let models = fit_models(cfg, &prepared)?;
    write_fit(cfg, &prepared, &models)?;
    let table = score_cases(cfg, &prepared, &models)?;
    write_scores(cfg, &table)?;
    let (full_tree, pruned_tree) = fit_trees(cfg, &table)?;
    write_trees(cfg, &full_tree, &pruned_tree)?;
    let bands = band_lattices(cfg, &table)?;
    write_bands(cfg, &bands)?;
    let bundle = ModelBundle::new(cfg, &prepared, &models);
    Ok(PipelineOutput {
        prepared,
        models,
        table,
        bundle,
        full_tree,
        pruned_tree,
        bands,
    })
}

/// Bundled config scoring with the self-fitted two-component mixture.
pub const DEFAULT_CONFIG: &str = include_str!("../data/pipeline.toml");
/// Bundled config scoring with the published mixture and bandwidth.
pub const PUBLISHED_CONFIG: &str = include_str!("../data/pipeline_published.toml");

/// Directory holding the bundled data files.
pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}
