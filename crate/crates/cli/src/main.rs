use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hitfield::io::run::{output_dir, run, thread_count, THREADS_ENV};
use hitfield::io::{ExperimentManifest, Task};

#[derive(Parser)]
#[command(name = "hitfield", version, about = "Run hitfield experiment manifests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample paths and save them in the binary path format.
    Sample(Common),
    /// Check the covariance identity on random pairs.
    CovAudit(Common),
    /// Estimate hitting probabilities of small balls.
    Hitprob(Common),
    /// Capacities of a target set.
    Capacity(Common),
    /// Box dimensions of level sets.
    Dimension(Common),
    /// Sup-increment moments and Hölder exponents.
    Modulus(Common),
    /// Girsanov weights between the drift and drift-free laws.
    Girsanov(Common),
    /// Run every acceptance check and print a pass/fail table.
    VerifyAll(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment manifest (TOML).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; overrides the manifest's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides the manifest's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(task: Task, args: &Common) -> hitfield::Result<bool> {
    let mut m = ExperimentManifest::load(&args.manifest)?;
    if m.task != task {
        return Err(hitfield::Error::Validation {
            file: args.manifest.clone(),
            line: 1,
            field: "task".into(),
            message: format!("manifest task `{}` does not match subcommand `{}`", m.task.name(), task.name()),
        });
    }
    if let Some(seed) = args.seed {
        m.seed = seed;
    }
    let dir = output_dir(&m, args.out.as_deref());
    let threads = thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| hitfield::Error::Domain(format!("{THREADS_ENV}: {e}")))?;
    let report = pool.install(|| run(&m, &dir))?;
    for row in &report.table {
        let mark = if row.passed { "PASS" } else { "FAIL" };
        println!("[{mark}] {:>2} {}: {}", row.id, row.name, row.detail);
    }
    for f in &report.files {
        println!("wrote {}", Path::new(&dir).join(f).display());
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match &cli.command {
        Command::Sample(a) => (Task::Sample, a),
        Command::CovAudit(a) => (Task::CovarianceAudit, a),
        Command::Hitprob(a) => (Task::Hitprob, a),
        Command::Capacity(a) => (Task::Capacity, a),
        Command::Dimension(a) => (Task::Dimension, a),
        Command::Modulus(a) => (Task::Modulus, a),
        Command::Girsanov(a) => (Task::Girsanov, a),
        Command::VerifyAll(a) => (Task::VerifyAll, a),
    };
    match execute(task, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
