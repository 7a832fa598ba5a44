use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iotids::report::{render_artifacts, write_evaluation_files};
use iotids::{
    comparison_text, evaluate, run_grid_search, run_pipeline, run_train, summarize_comparison, CliError, CliResult,
    ModelFile, Overrides, PipelineConfig, RunReport,
};
use iotids_core::data::{load_csv, LabelColumn};

#[derive(Parser)]
#[command(
    name = "iotids",
    version,
    about = "Train and compare intrusion-detection classifiers on CSV traffic data"
)]
struct Cli {
    /// Worker threads (defaults to all cores); results do not depend on it
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split, tune, train, evaluate and write the report
    Run(PipelineArgs),
    /// Cross-validated grid search on the training split only
    GridSearch(PipelineArgs),
    /// Fit models and write one model file per entry
    Train {
        #[command(flatten)]
        args: PipelineArgs,
        /// Fit on every row instead of the training split
        #[arg(long)]
        all_rows: bool,
    },
    /// Apply a saved model to a labelled CSV
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Label column; defaults to the one recorded in the model file
        #[arg(long)]
        label: Option<String>,
        /// Write evaluation.json, confusion CSV and ROC files here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the comparison table and plots from a saved report.json
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the report's directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON pipeline config; without it the five standard models run on --data
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated model names or kinds to keep
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Skip grid search and use fixed hyperparameters
    #[arg(long)]
    no_grid: bool,
    /// Label column name, or "last"
    #[arg(long)]
    label: Option<String>,
}

impl PipelineArgs {
    fn resolve(&self) -> CliResult<PipelineConfig> {
        let mut config = match (&self.config, &self.data) {
            (Some(path), _) => PipelineConfig::load(path)?,
            (None, Some(data)) => PipelineConfig::standard(data.clone()),
            (None, None) => return Err(CliError::Config("either --config or --data is required".into())),
        };
        config.apply(&Overrides {
            dataset: self.data.clone(),
            output_dir: self.out.clone(),
            seed: self.seed,
            label_column: self.label.clone(),
            models: self.models.clone(),
            no_grid: self.no_grid,
        })?;
        Ok(config)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let report = run_pipeline(&config)?;
            print!("{}", comparison_text(&summarize_comparison(&report.models)));
            eprintln!("report written to {}", config.output_dir.join("report.json").display());
        }
        Command::GridSearch(args) => {
            let config = args.resolve()?;
            for (name, result) in run_grid_search(&config)? {
                let best = &result.combinations[result.best_index];
                println!(
                    "{name}: best mean {:.4} with {}",
                    result.best_mean,
                    serde_json::Value::Object(best.params.clone())
                );
            }
        }
        Command::Train { args, all_rows } => {
            let config = args.resolve()?;
            for name in run_train(&config, all_rows)? {
                println!("{}", config.output_dir.join(format!("{name}.model.json")).display());
            }
        }
        Command::Evaluate {
            model,
            data,
            label,
            out,
        } => evaluate_file(&model, &data, label, out.as_deref())?,
        Command::Report { input, out } => {
            let text =
                std::fs::read_to_string(&input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
            let report = RunReport::from_json(&text)?;
            let dir = out.unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
            print!("{}", comparison_text(&render_artifacts(&report, &dir)?));
        }
    }
    Ok(())
}

fn evaluate_file(model: &Path, data: &Path, label: Option<String>, out: Option<&Path>) -> CliResult<()> {
    let file = ModelFile::load(model)?;
    let label = LabelColumn::parse(label.as_deref().unwrap_or(&file.label_column));
    let table = load_csv(data, &label)?;
    if table.feature_names() != file.feature_names.as_slice() {
        return Err(CliError::Data(iotids_core::Error::InvalidTable(format!(
            "columns {:?} do not match the model's {:?}",
            table.feature_names(),
            file.feature_names
        ))));
    }
    let evaluation = evaluate(&file.model, &table)?;
    let m = &evaluation.metrics;
    println!(
        "{}: accuracy {:.4}  precision {:.4}  recall {:.4}  F1 {:.4}  AUC {}",
        file.name,
        m.accuracy,
        m.precision,
        m.recall,
        m.f1,
        evaluation.auc().map_or_else(|| "n/a".into(), |a| format!("{a:.4}"))
    );
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        let json = serde_json::to_string_pretty(&evaluation).expect("evaluations serialize");
        std::fs::write(dir.join("evaluation.json"), json).map_err(|source| CliError::Output {
            path: dir.join("evaluation.json"),
            source,
        })?;
        write_evaluation_files(dir, &file.name, &evaluation)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
