use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cvwit::harness::{self, Command, ExperimentConfig, RunReport, Timing};
use cvwit::{Error, Result};

#[derive(Parser)]
#[command(name = "cvwit", version, about = "Fidelity-witness benchmarking for continuous-variable gates")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the state witness for a Gaussian target state.
    CertifyState(Common),
    /// Estimate the average-fidelity witness of a Gaussian gate.
    BenchmarkGaussian(Common),
    /// Estimate the witness of a phase-insensitive amplifier.
    BenchmarkAmplifier(Common),
    /// Estimate the witness of a cubic-phase gate.
    BenchmarkCubic(Common),
    /// Print and save the upper-bound sample budget.
    Plan(Common),
    /// Exact witness and fidelity of the simulated device, no sampling.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `out_dir`, then `cvwit-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

impl Cmd {
    fn split(&self) -> (Command, &Common) {
        match self {
            Cmd::CertifyState(c) => (Command::CertifyState, c),
            Cmd::BenchmarkGaussian(c) => (Command::BenchmarkGaussian, c),
            Cmd::BenchmarkAmplifier(c) => (Command::BenchmarkAmplifier, c),
            Cmd::BenchmarkCubic(c) => (Command::BenchmarkCubic, c),
            Cmd::Plan(c) => (Command::Plan, c),
            Cmd::Oracle(c) => (Command::Oracle, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Grid(_)) {
                eprintln!("hint: widen the grid extent (q_min/q_max) or raise `points` in the `grid` override");
            }
            if matches!(e, Error::InsufficientSamples { .. }) {
                eprintln!("hint: raise `max_shots`, loosen epsilon/delta, or use variance_mode \"pilot\"");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: &Cmd) -> Result<()> {
    let (command, args) = cmd.split();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("cvwit-out"));
    let threads = match args.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => n,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;

    let start = Instant::now();
    if command == Command::Plan {
        let budget = harness::run_plan(&cfg)?;
        let timing = Timing {
            command: command.name().into(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            threads,
            shots: 0,
        };
        let files = harness::write_plan_outputs(&out, &budget, &timing)?;
        println!("{} ({}): N_total = {}", budget.label, command.name(), budget.n_total);
        for e in &budget.estimators {
            println!(
                "  {:<6} bound {:.6e}  eps {}  delta {}  B = {}  n = {}  N = {}",
                e.estimator, e.second_moment_bound, e.epsilon, e.delta, e.batches, e.per_batch, e.n
            );
        }
        print_files(&files);
        return Ok(());
    }

    let report = pool.install(|| harness::run(command, &cfg))?;
    let timing = Timing {
        command: command.name().into(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        threads,
        shots: report.shots.estimation + report.shots.pilot,
    };
    let files = harness::write_run_outputs(&out, &report, &timing)?;
    summarize(&report);
    print_files(&files);
    Ok(())
}

fn summarize(r: &RunReport) {
    if let Some(w) = &r.witness {
        println!("W_hat = {:.6}  (epsilon {}, delta {})", w.value, w.epsilon, w.delta);
        for e in &r.estimators {
            println!(
                "  {:<6} estimate {:.6}  B = {}  n = {}",
                e.estimator, e.result.estimate + 0.0, e.result.batches, e.result.per_batch_size
            );
        }
        println!("shots: {} (+{} pilot)", r.shots.estimation, r.shots.pilot);
    }
    if let Some(o) = &r.oracle {
        println!("oracle ({}): W = {:.9}  F = {:.9}  F - W = {:.3e}", o.method, o.witness, o.fidelity, o.gap);
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}
