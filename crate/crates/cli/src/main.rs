use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use nldiff::bench::{
    emit_csv, emit_plot_data, run_experiment, ExperimentId, ExperimentSpec, Method, Scale,
    CONFIG_KEYS,
};

#[derive(Parser)]
#[command(
    name = "nlbench",
    version,
    about = "Nonlocal diffusion benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write CSV plus plot data.
    #[command(after_help = config_help())]
    Run(RunArgs),
    /// Run the built-in oracle checks; exits nonzero if any fails.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// exp1, exp2, exp3 or custom (may also come from the config file).
    #[arg(long)]
    experiment: Option<ExperimentId>,
    /// Flat `key = value` file; see the key list below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// desk or paper preset sizes.
    #[arg(long)]
    scale: Option<Scale>,
    /// Comma-separated subset of ptw, rr, fft, ffto.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Output directory for results.csv, plot data and reference sidecars.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run sweep points one after another (the default unless --threads is given).
    #[arg(long, conflicts_with = "threads")]
    single_thread: bool,
    /// Run sweep points concurrently on this many threads; timings are then not comparable.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for random initial data.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn config_help() -> String {
    let mut s = String::from("Config keys (`key = value`, `#` starts a comment):\n");
    for (k, d) in CONFIG_KEYS {
        s.push_str(&format!("  {k:<16} {d}\n"));
    }
    s
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => String::new(),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Some(m) = &args.methods {
        let list: Vec<&str> = m.iter().map(|m| m.as_str()).collect();
        overrides.push(("methods".into(), list.join(",")));
    }
    if let Some(out) = &args.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        overrides.push((k.trim().into(), v.trim().into()));
    }
    if let Some(t) = args.threads {
        overrides.push(("threads".into(), t.to_string()));
    }
    if args.single_thread {
        overrides.push(("single_thread".into(), "true".into()));
    }
    Ok(ExperimentSpec::resolve(
        &text,
        args.experiment,
        Scale::Paper,
        args.scale,
        &overrides,
    )?)
}

fn run(args: &RunArgs) -> Result<()> {
    let spec = build_spec(args)?;
    eprintln!(
        "{}: {} runs (grids {:?}, taus {:?}, params {:?})",
        spec.experiment,
        spec.points().len(),
        spec.grids,
        spec.taus,
        spec.kernel_params
    );
    let rows = run_experiment(&spec)?;
    let csv = spec.out.join(format!("{}.csv", spec.experiment));
    emit_csv(&rows, &csv)?;
    let plots = emit_plot_data(&rows, &spec.out.join("plots"))?;
    let failed = rows.iter().filter(|r| r.failed()).count();
    println!(
        "wrote {} ({} rows, {} failed)",
        csv.display(),
        rows.len(),
        failed
    );
    println!(
        "wrote {} plot files under {}",
        plots.len(),
        spec.out.join("plots").display()
    );
    Ok(())
}

fn verify() -> bool {
    let checks = nldiff::verify::run_all();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    failed == 0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
        Command::Verify => {
            if verify() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
