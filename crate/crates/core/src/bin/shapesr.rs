use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shapesr::bench;
use shapesr::experiment::{self, ExperimentSpec};
use shapesr::moea::Algorithm;

/// Shape-constrained symbolic regression with NSGA-II / NSGA-III.
#[derive(Parser)]
#[command(name = "shapesr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the benchmark catalog.
    List {
        /// Print the full catalog as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Generate the train/test dataset of an instance as CSV.
    GenData {
        #[arg(long)]
        instance: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment batch.
    Run(RunArgs),
    /// Rebuild the summary tables from a results CSV.
    Report {
        /// A results.csv written by `run`.
        results: PathBuf,
        /// Directory for summary.csv and summary.txt; stdout only when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment spec; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance name, repeatable, or `all`.
    #[arg(long)]
    instance: Vec<String>,
    /// `nsga2`, `nsga3`, repeatable.
    #[arg(long)]
    algorithm: Vec<Algorithm>,
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed; repetition i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation budget per run.
    #[arg(long)]
    evals: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for fitness evaluation; 0 uses all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List { json } => list(json).map(|_| true),
        Command::GenData { instance, seed, out } => gen_data(&instance, seed, out).map(|_| true),
        Command::Run(args) => run(args),
        Command::Report { results, out } => report(results, out).map(|_| true),
    }
}

fn list(json: bool) -> Result<()> {
    let catalog = bench::catalog();
    let mut stdout = io::stdout().lock();
    if json {
        writeln!(stdout, "{}", bench::catalog_to_json(&catalog)?)?;
        return Ok(());
    }
    for inst in &catalog {
        writeln!(
            stdout,
            "{:<10} vars={:<2} constraints={:<2} {}",
            inst.name,
            inst.arity(),
            inst.constraints.len(),
            inst.ground_truth.to_infix(&inst.variable_names()),
        )?;
    }
    Ok(())
}

fn gen_data(name: &str, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let inst = bench::instance(name)?;
    let data = bench::generate_dataset(&inst, seed)?;
    let names = inst.variable_names();
    match out {
        Some(path) => {
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            data.write_csv(&names, file)?;
        }
        None => data.write_csv(&names, io::stdout().lock())?,
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<bool> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<ExperimentSpec>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentSpec::default(),
    };
    if !args.instance.is_empty() {
        spec.instances = args.instance;
    }
    if !args.algorithm.is_empty() {
        spec.algorithms = args.algorithm;
    }
    if let Some(r) = args.reps {
        spec.repetitions = r;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(e) = args.evals {
        spec.moea.max_evaluations = e;
    }
    if let Some(p) = args.pop {
        spec.moea.population_size = p;
    }
    if let Some(t) = args.threads {
        spec.moea.threads = t;
    }
    if args.out.is_some() {
        spec.output_dir = args.out;
    }

    let output = experiment::run_experiment(&spec)?;
    for (what, err) in &output.failures {
        eprintln!("failed: {what}: {err}");
    }
    match &output.report {
        Some(report) => print!("{}", report.text),
        None => bail!("every run failed"),
    }
    Ok(output.succeeded())
}

fn report(results: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let rows = experiment::read_results_csv(&results)?;
    let report = experiment::report(&rows)?;
    print!("{}", report.text);
    if let Some(dir) = out {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("summary.csv"), &report.csv)?;
        fs::write(dir.join("summary.txt"), &report.text)?;
    }
    Ok(())
}
