use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use bench::{aggregate, depth_study, run_benchmark, write_summary, BenchError, EnvId, PlannerId, RunSpec};
use clap::Parser;

/// Run seeded planner comparisons and write per-episode CSV rows.
#[derive(Parser, Debug)]
#[command(name = "papomcpow-bench", version)]
struct Cli {
    /// TOML run spec; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sensor | wildfire | sense-and-bet
    #[arg(long)]
    env: Option<String>,
    /// Comma-separated: pa-pomcpow, pomcpow, pomcp, greedy, expert
    #[arg(long, value_delimiter = ',')]
    planner: Vec<String>,
    /// Comma-separated simulation budgets per planning call.
    #[arg(long, value_delimiter = ',')]
    budget: Vec<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Square grid side length.
    #[arg(long)]
    grid: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plan once per realization and report root-tree depth instead.
    #[arg(long)]
    depth_study: bool,
    /// Report zero timings so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

fn build_spec(cli: &Cli) -> Result<RunSpec, BenchError> {
    let mut spec = match &cli.config {
        Some(path) => RunSpec::from_toml(&std::fs::read_to_string(path)?)?,
        None => RunSpec::default(),
    };
    if let Some(env) = &cli.env {
        spec.env = env.parse::<EnvId>()?;
    }
    if !cli.planner.is_empty() {
        spec.planners = cli.planner.iter().map(|p| p.parse::<PlannerId>()).collect::<Result<_, _>>()?;
    }
    if !cli.budget.is_empty() {
        spec.budgets = cli.budget.clone();
    }
    if let Some(n) = cli.episodes {
        spec.episodes = n;
    }
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(g) = cli.grid {
        spec.width = g;
        spec.height = g;
    }
    if cli.out.is_some() {
        spec.out = cli.out.clone();
    }
    if cli.no_timing {
        spec.timing = false;
    }
    spec.validate()?;
    Ok(spec)
}

fn sibling(path: &std::path::Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn run(cli: &Cli, spec: RunSpec) -> Result<(), BenchError> {
    if cli.depth_study {
        let out = spec.out.clone().unwrap_or_else(|| PathBuf::from("depth.csv"));
        let (rows, summaries) = depth_study(&spec)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&out)?));
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        for s in &summaries {
            println!("{:<11} budget {:>5}  depth {:.3} ± {:.3}  (n = {})", s.planner, s.budget, s.mean_depth, s.se_depth, s.n);
        }
        return Ok(());
    }

    let mut spec = spec;
    let out = spec.out.get_or_insert_with(|| PathBuf::from("results.csv")).clone();
    let rows = run_benchmark(&spec)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    match aggregate(&rows) {
        Ok(summaries) => {
            write_summary(&summaries, BufWriter::new(File::create(sibling(&out, "_summary.csv"))?))?;
            for s in &summaries {
                println!(
                    "{:<11} budget {:>5}  return {:>9.3} ± {:<7.3} depth {:>5.2}  ms/call {:.4}",
                    s.planner, s.budget, s.mean_return, s.se_return, s.mean_max_depth, s.mean_ms_per_call
                );
            }
        }
        Err(e) => eprintln!("no summary: {e}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match build_spec(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, spec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
