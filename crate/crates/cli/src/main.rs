use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use raidradar_core::evaluation::Experiment;
use raidradar_core::Modality;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "raidradar", version, about = "Score videos for the risk of coordinated hate raids")]
struct Cli {
    /// Maximum number of worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a JSONL corpus and write a per-record violation report.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Attach raided / non_raided / unlabeled labels to each record.
    Label {
        #[arg(long)]
        corpus: PathBuf,
        /// Hate lexicon; defaults to the one named in the config.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit per-modality vocabularies and write TF-IDF matrices.
    Featurize {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write 1/0 class labels for this experiment instead of label names.
        #[arg(long, value_parser = parse_experiment)]
        experiment: Option<Experiment>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one modality classifier.
    Train {
        #[arg(long, value_parser = parse_modality)]
        modality: Modality,
        /// Sparse triplet matrix written by `featurize`.
        #[arg(long)]
        features: PathBuf,
        /// CSV of video_id,label.
        #[arg(long)]
        labels: PathBuf,
        /// Classifier spec JSON; the modality default when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an ensemble on a labeled validation corpus.
    FitEnsemble {
        /// Directory holding <modality>.featurizer.json and <modality>.model.json.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Weighted)]
        mode: Mode,
        #[arg(long, value_parser = parse_experiment, default_value = "exp2")]
        experiment: Experiment,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a corpus with trained modality models and an ensemble.
    Score {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the repeated split/train/evaluate protocol.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_parser = parse_experiment)]
        experiment: Experiment,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a metrics table and/or topic and term statistics.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Pipeline configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed and RAIDRADAR_SEED.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// report.json written by `evaluate`.
    #[arg(long)]
    evaluation: Option<PathBuf>,
    /// Labeled corpus for topic prevalence and top terms.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    top: usize,
    #[command(flatten)]
    common: Common,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Weighted,
    Average,
    Majority,
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: raidradar_core::Error| e.to_string())
}

fn parse_modality(s: &str) -> Result<Modality, String> {
    s.parse().map_err(|e: raidradar_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                let _ = e.print();
            } else {
                eprint!("{}", e.render());
            }
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
