use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elicit_core::explain::CATEGORIES;
use elicit_core::pipeline::{
    band_lattices, fit_models, fit_trees, prepare, run_pipeline, score_cases, score_patient,
    write_bands, write_cases, write_fit, write_scores, write_trees, FittedModels, ModelBundle,
    PipelineConfig, PipelineError, MODEL_FILE,
};
use elicit_core::questionnaire::load_questionnaire_path;
use elicit_core::scores::ScoreTable;
use elicit_core::CaseVector;

#[derive(Parser)]
#[command(name = "elicit", version, about = "Score every answer combination of an elicited questionnaire")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate cases and write their weight sums
    Enumerate(Common),
    /// Fit the mixture and kernel density; write the fit report, samples and model bundle
    Fit(Common),
    /// Score every case and write the score table
    Score(Common),
    /// Fit and prune the decision tree over approach-1 categories
    Tree(Common),
    /// Build band contexts and concept lattices
    Lattice(Common),
    /// Run every stage and write every artifact
    Report(Common),
    /// Score one answer assignment with a saved model bundle
    ScorePatient(PatientArgs),
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML)
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Component count of the scoring mixture
    #[arg(long)]
    components: Option<usize>,
    /// Largest component count tried during model selection
    #[arg(long)]
    m_max: Option<usize>,
    /// Cost-complexity pruning parameter
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct PatientArgs {
    /// Pipeline config (TOML); supplies the questionnaire and output directory
    config: PathBuf,
    /// Comma-separated ids of the answers given
    #[arg(long, value_delimiter = ',', required = true)]
    answers: Vec<String>,
    /// Model bundle; defaults to the one in the output directory
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn load_config(common: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::from_path(&common.config)?;
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    if common.components.is_some() {
        cfg.components = common.components;
    }
    if let Some(m) = common.m_max {
        cfg.m_max = m;
    }
    if let Some(a) = common.alpha {
        cfg.prune_alpha = a;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_fit(models: &FittedModels) {
    let r = &models.report;
    println!("model selection over {} normalized sums:", r.cases);
    for c in &r.selection.candidates {
        println!(
            "  M={}  lnL={:.4}  AIC={:.4}  BIC={:.4}",
            c.components, c.log_likelihood, c.aic, c.bic
        );
    }
    println!(
        "  AIC picks {}, BIC picks {}",
        r.selection.aic_choice, r.selection.bic_choice
    );
    println!("scoring mixture ({:?}):", r.mixture_source);
    for c in models.mixture.components() {
        println!("  phi={:.6}  mu={:.6}  sigma={:.6}", c.weight, c.mean, c.std_dev);
    }
    println!(
        "bandwidth {:.6} ({:?}; Silverman {:.6})",
        r.bandwidth.used, r.bandwidth.source, r.bandwidth.silverman.bandwidth
    );
}

fn print_categories(table: &ScoreTable) {
    let mut counts = [0usize; 3];
    for r in &table.rows {
        counts[r.category.index()] += 1;
    }
    let parts: Vec<String> = CATEGORIES
        .iter()
        .map(|c| format!("{c} {}", counts[c.index()]))
        .collect();
    println!("{} cases scored: {}", table.len(), parts.join(", "));
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Enumerate(common) => {
            let cfg = load_config(&common)?;
            let prep = prepare(&cfg)?;
            write_cases(&cfg, &prep)?;
            let b = prep.sums.bounds();
            println!(
                "{} cases, raw sums in [{}, {}]",
                prep.cases.len(),
                b.min,
                b.max
            );
        }
        Command::Fit(common) => {
            let cfg = load_config(&common)?;
            let prep = prepare(&cfg)?;
            let models = fit_models(&cfg, &prep)?;
            write_fit(&cfg, &prep, &models)?;
            print_fit(&models);
        }
        Command::Score(common) => {
            let cfg = load_config(&common)?;
            let prep = prepare(&cfg)?;
            let models = fit_models(&cfg, &prep)?;
            write_fit(&cfg, &prep, &models)?;
            let table = score_cases(&cfg, &prep, &models)?;
            write_scores(&cfg, &table)?;
            print_categories(&table);
        }
        Command::Tree(common) => {
            let cfg = load_config(&common)?;
            let prep = prepare(&cfg)?;
            let models = fit_models(&cfg, &prep)?;
            let table = score_cases(&cfg, &prep, &models)?;
            let (full, pruned) = fit_trees(&cfg, &table)?;
            write_trees(&cfg, &full, &pruned)?;
            let root = full.root.split.as_ref().map_or("none", |s| s.answer_id.as_str());
            println!("root split: {root}");
            println!("full tree: {} nodes, depth {}", full.node_count(), full.depth());
            println!(
                "pruned tree (alpha {}): {} nodes, depth {}",
                cfg.prune_alpha,
                pruned.node_count(),
                pruned.depth()
            );
        }
        Command::Lattice(common) => {
            let cfg = load_config(&common)?;
            let prep = prepare(&cfg)?;
            let models = fit_models(&cfg, &prep)?;
            let table = score_cases(&cfg, &prep, &models)?;
            let bands = band_lattices(&cfg, &table)?;
            write_bands(&cfg, &bands)?;
            for b in &bands {
                println!(
                    "{}: {} objects, {} concepts",
                    b.band,
                    b.context.object_count(),
                    b.lattice.len()
                );
            }
        }
        Command::Report(common) => {
            let cfg = load_config(&common)?;
            let out = run_pipeline(&cfg)?;
            print_fit(&out.models);
            print_categories(&out.table);
            println!("artifacts written to {}", cfg.output_dir.display());
        }
        Command::ScorePatient(args) => score_patient_command(&args)?,
    }
    Ok(())
}

fn score_patient_command(args: &PatientArgs) -> Result<(), PipelineError> {
    let mut cfg = PipelineConfig::from_path(&args.config)?;
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    let questionnaire = load_questionnaire_path(&cfg.questionnaire)?.merged_questionnaire()?;
    let model_path = args
        .model
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join(MODEL_FILE));
    let bundle = ModelBundle::from_path(&model_path)?;
    let case = CaseVector::from_answer_ids(&questionnaire, &args.answers)?;
    let score = score_patient(&case, &questionnaire, &bundle)?;
    if score.clamped {
        eprintln!(
            "warning: raw sum {} outside the normalization bounds; normalized value clamped",
            score.raw_sum
        );
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&score).expect("score serializes")
    );
    Ok(())
}

fn exit_code(err: &PipelineError) -> ExitCode {
    if err.is_validation() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
