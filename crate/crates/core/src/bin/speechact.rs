use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use speechact::commands::{self, Format, Streams, EXIT_USAGE};
use speechact::config::{Overrides, RunConfig};
use speechact::corpus::SpeechActLabel;
use speechact::featurize::SlenScope;
use speechact::synth::SynthSpec;

#[derive(Parser)]
#[command(name = "speechact", version, about = "Speech-act detection for developer Q/A conversations")]
struct Cli {
    /// Label catalog (JSON: {"labels": [...], "excluded": [...]})
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// table or machine
    #[arg(long, global = true, default_value = "table")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check transcripts for structural problems
    Validate { files: Vec<PathBuf> },
    /// Corpus counts per label and speaker
    Stats { files: Vec<PathBuf> },
    /// Generate a synthetic labeled corpus
    SynthCorpus {
        #[arg(long, default_value_t = 50)]
        turns_per_label: usize,
        #[arg(long, default_value_t = 1.0)]
        signal: f64,
        /// Comma-separated labels; six defaults when absent
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        catalog_out: Option<PathBuf>,
    },
    /// Train a model on the full corpus
    Train {
        files: Vec<PathBuf>,
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long)]
        smote_k: Option<usize>,
        #[arg(long)]
        tune: bool,
        #[arg(long)]
        slen_scope: Option<SlenScope>,
    },
    /// Classify the participant turns of transcripts
    Predict {
        files: Vec<PathBuf>,
        #[arg(long, short)]
        model: PathBuf,
        /// Never force a label onto a turn below threshold
        #[arg(long)]
        no_fallback: bool,
    },
    /// Stratified k-fold cross-validation
    Evaluate {
        files: Vec<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        smote_k: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        tune: bool,
        #[arg(long)]
        slen_scope: Option<SlenScope>,
        /// Also write the machine report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fisher-score feature ranking
    RankFeatures {
        files: Vec<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 20)]
        top_n: usize,
        /// Print ascending, lowest-scored first
        #[arg(long)]
        mirror: bool,
    },
    /// Classify turns sent as JSON lines, keeping per-conversation context
    Serve {
        #[arg(long, short)]
        model: PathBuf,
        /// host:port; stdin/stdout when absent
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        no_fallback: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(cli, &mut out, &mut err);
    let _ = out.flush();
    ExitCode::from(code)
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let mut overrides = Overrides {
        catalog: cli.catalog.clone(),
        seed: cli.seed,
        ..Overrides::default()
    };
    match &cli.command {
        Command::Train { smote_k, tune, slen_scope, .. } => {
            overrides.smote_k = *smote_k;
            overrides.tune = tune.then_some(true);
            overrides.slen_scope = *slen_scope;
        }
        Command::Evaluate { folds, smote_k, threshold, tune, slen_scope, .. } => {
            overrides.n_folds = *folds;
            overrides.smote_k = *smote_k;
            overrides.threshold = *threshold;
            overrides.tune = tune.then_some(true);
            overrides.slen_scope = *slen_scope;
        }
        Command::Predict { no_fallback, .. } | Command::Serve { no_fallback, .. } => {
            overrides.fallback = no_fallback.then_some(false);
        }
        _ => {}
    }
    let config = match RunConfig::resolve(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut io = Streams { out, err };
    let format = cli.format;
    match cli.command {
        Command::Validate { files } => commands::cmd_validate(&files, &config, format, &mut io),
        Command::Stats { files } => commands::cmd_stats(&files, &config, format, &mut io),
        Command::SynthCorpus { turns_per_label, signal, labels, output, catalog_out } => {
            let mut spec = SynthSpec {
                turns_per_label,
                signal,
                seed: config.seed,
                ..SynthSpec::default()
            };
            if !labels.is_empty() {
                match labels.iter().map(|l| SpeechActLabel::new(l)).collect::<Result<Vec<_>, _>>() {
                    Ok(l) => spec.labels = l,
                    Err(e) => {
                        let _ = writeln!(io.err, "error: {e}");
                        return EXIT_USAGE;
                    }
                }
            }
            commands::cmd_synth_corpus(&spec, output.as_deref(), catalog_out.as_deref(), &mut io)
        }
        Command::Train { files, model, .. } => commands::cmd_train(&files, &config, &model, &mut io),
        Command::Predict { files, model, .. } => commands::cmd_predict(&model, &files, &config, format, &mut io),
        Command::Evaluate { files, report, .. } => {
            commands::cmd_evaluate(&files, &config, format, report.as_deref(), &mut io)
        }
        Command::RankFeatures { files, label, top_n, mirror } => {
            commands::cmd_rank_features(&files, &config, label.as_deref(), top_n, mirror, format, &mut io)
        }
        Command::Serve { model, listen, .. } => {
            let stdin = io::stdin();
            commands::cmd_serve(&model, &config, listen.as_deref(), stdin.lock(), &mut io)
        }
    }
}
