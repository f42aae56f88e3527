use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use synproj::pipeline::{
    cmd_answer, cmd_eval, cmd_generate, cmd_project, cmd_train, format_report, AnswerOptions, EvalOptions, GenerateOptions, ProjectOptions,
    TrainOptions,
};
use synproj::projection::{Mode, TrainConfig};

#[derive(Parser)]
#[command(name = "synproj", version, about = "Generate synthetic questions, project questions to programs and run them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Instantiate templates over a corpus into a dataset file.
    Generate {
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Execute each program and keep only examples with a gold answer.
        #[arg(long)]
        answers: bool,
    },
    /// Train the skeleton classifier on a dataset file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fraction of examples, taken from the end, held out for accuracy.
        #[arg(long)]
        holdout: Option<f64>,
        /// Also write a cosine pool built from the training examples.
        #[arg(long)]
        pool_out: Option<PathBuf>,
    },
    /// Map questions to programs.
    Project {
        #[arg(long, required_if_eq("mode", "classifier"))]
        model: Option<PathBuf>,
        #[arg(long, required_if_eq("mode", "cosine"))]
        pool: Option<PathBuf>,
        #[arg(long)]
        vectors: PathBuf,
        /// One question per line, optionally followed by a tab and a paragraph id.
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "classifier")]
        mode: Mode,
        /// Template bank for argument recovery; the shipped bank by default.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Execute programs against their paragraphs.
    Answer {
        #[arg(long)]
        programs: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score predictions against gold answers.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        by_skeleton: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate { templates, corpus, out, n, seed, answers } => {
            let s = cmd_generate(&GenerateOptions { templates, corpus, out, n, seed, answers })?;
            eprintln!("wrote {} examples ({} dropped)", s.written, s.dropped);
        }
        Command::Train { data, vectors, model, epochs, lr, l2, seed, holdout, pool_out } => {
            let d = TrainConfig::default();
            let config = TrainConfig {
                epochs: epochs.unwrap_or(d.epochs),
                learning_rate: lr.unwrap_or(d.learning_rate),
                l2: l2.unwrap_or(d.l2),
                seed: seed.unwrap_or(d.seed),
                ..d
            };
            let s = cmd_train(&TrainOptions { data, vectors, model, config, holdout, pool_out })?;
            eprintln!("trained on {} examples: loss {:.4} -> {:.4}", s.train_n, s.report.initial_loss, s.report.final_loss);
            if let Some(a) = s.accuracy {
                println!("holdout\t{}\naccuracy\t{a:.4}", s.holdout_n);
            }
        }
        Command::Project { model, pool, vectors, questions, out, mode, templates } => {
            let s = cmd_project(&ProjectOptions { model, pool, vectors, questions, out, mode, templates })?;
            eprintln!("projected {} questions ({} without recovered arguments)", s.n, s.unfilled);
        }
        Command::Answer { programs, corpus, out, trace } => {
            let s = cmd_answer(&AnswerOptions { programs, corpus, out, trace })?;
            eprintln!("answered {} programs ({} execution errors)", s.n, s.errors);
        }
        Command::Eval { pred, gold, by_skeleton } => {
            let r = cmd_eval(&EvalOptions { pred, gold, by_skeleton })?;
            print!("{}", format_report(&r, by_skeleton));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
