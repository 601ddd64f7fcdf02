use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qphase::genbound::StudyConfig;
use qphase::pipeline::commands::{self, Outcome};
use qphase::pipeline::ExperimentConfig;
use qphase::repro;
use qphase::Error;

#[derive(Parser)]
#[command(name = "qphase", version, about = "Phase classification with fidelity kernels over MPS ground states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and cache ground states for the training layout and test grid.
    Solve(ConfigArgs),
    /// Train the multiclass classifier.
    Train(ConfigArgs),
    /// Predict the test grid with a saved model.
    Predict {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
    },
    /// Solve, train and predict in one run.
    PhaseDiagram(ConfigArgs),
    /// Generalization-bound scaling study.
    Genbound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Variance, bounds and shot budget per test point.
    VarianceReport(ConfigArgs),
    /// Write the training Gram matrix.
    ExportGram(ConfigArgs),
    /// Run reproduction recipes and compare against goldens.
    Repro {
        /// Recipe names; all when empty.
        names: Vec<String>,
        #[arg(long, default_value = "repro")]
        dir: PathBuf,
        #[arg(long)]
        list: bool,
        /// Write goldens instead of comparing.
        #[arg(long)]
        regenerate: bool,
    },
}

#[derive(clap::Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> qphase::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        Ok(cfg)
    }
}

fn load_study(path: &Path) -> qphase::Result<StudyConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn report(outcome: &Outcome) -> ExitCode {
    println!("{}", outcome.summary);
    for p in &outcome.outputs {
        println!("wrote {}", p.display());
    }
    if outcome.unconverged > 0 {
        eprintln!("error: {} solves did not converge (see manifest)", outcome.unconverged);
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn run(cli: Cli) -> qphase::Result<ExitCode> {
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(&a.load()?)?,
        Command::Train(a) => commands::train(&a.load()?)?,
        Command::Predict { args, model } => commands::predict(&args.load()?, &model)?,
        Command::PhaseDiagram(a) => commands::phase_diagram(&a.load()?)?,
        Command::VarianceReport(a) => commands::variance_report(&a.load()?)?,
        Command::ExportGram(a) => commands::export_gram(&a.load()?)?,
        Command::Genbound { config, out } => commands::genbound(&load_study(&config)?, &out)?.0,
        Command::Repro {
            names,
            dir,
            list,
            regenerate,
        } => {
            let book = repro::RecipeBook::load(&dir)?;
            if list {
                for r in &book.recipes {
                    println!("{:<22} criterion {:>2}  {}", r.name, r.criterion, r.command.join(" "));
                }
                return Ok(ExitCode::SUCCESS);
            }
            let reports = book.run(&names, regenerate)?;
            let mut ok = true;
            for r in &reports {
                println!("{r}");
                ok &= r.passed();
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    };
    Ok(report(&outcome))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
