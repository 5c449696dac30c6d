use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use riskiness::dyadic::{default_n_max, lambda_sequence};
use riskiness::sim::{simulate, submartingale_check, SimulationSpec, WealthPathStats};
use riskiness::spec::gamble_from_json;
use riskiness::sweep::{refine_boundary, regime_boundaries, sweep, to_csv, SweepSpec};
use riskiness::tree::{riskiness_process, time_consistency_check, GambleTree, RiskinessProcess};
use riskiness::{riskiness_with_tol, Gamble, RiskError};
use serde_json::json;

/// Extended Foster-Hart riskiness of gambles, trees and wealth processes.
#[derive(Parser)]
#[command(name = "riskiness", version)]
struct Cli {
    /// Absolute tolerance for phi evaluations and root residuals.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RISKINESS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a gamble file and print its summary statistics.
    Validate {
        #[arg(long)]
        gamble: PathBuf,
    },
    /// Riskiness of a gamble as JSON.
    Riskiness {
        #[arg(long)]
        gamble: PathBuf,
    },
    /// Riskiness over a parameter grid as CSV.
    Sweep {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roots of the dyadic discretizations as CSV.
    Approx {
        #[arg(long)]
        gamble: PathBuf,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conditional riskiness at every non-terminal node of a tree.
    Tree {
        #[arg(long)]
        tree: PathBuf,
        /// Second tree of the same shape for a time-consistency check.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Monte Carlo wealth paths under the acceptance rule.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of (path, t, wealth) for the recorded paths.
        #[arg(long)]
        paths_csv: Option<PathBuf>,
        /// Number of leading paths to record.
        #[arg(long)]
        record_paths: Option<usize>,
    },
}

enum Failure {
    Risk(RiskError),
    Io(anyhow::Error),
}

impl From<RiskError> for Failure {
    fn from(e: RiskError) -> Self {
        Failure::Risk(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 4,
            Failure::Risk(e) => match e {
                RiskError::BoundarySignAmbiguous { .. } => 3,
                RiskError::Numerical(_) => 5,
                RiskError::InsufficientEvents { .. } => 6,
                _ => 2,
            },
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_gamble(path: &Path) -> Result<Gamble, Failure> {
    Ok(gamble_from_json(&read(path)?)?)
}

fn load_tree(path: &Path) -> Result<GambleTree, Failure> {
    Ok(GambleTree::from_json(&read(path)?)?)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn validate(path: &Path) -> Result<(), Failure> {
    let g = load_gamble(path)?;
    let s = g.stats();
    let kind = match g {
        Gamble::Discrete(_) => "discrete",
        Gamble::Density(_) => "density",
    };
    print!(
        "{}",
        pretty(&json!({
            "kind": kind,
            "mean": s.mean,
            "second_moment": s.second_moment,
            "max_loss": s.max_loss,
            "prob_negative": s.prob_negative,
            "bounded": g.is_bounded(),
        }))
    );
    Ok(())
}

fn cmd_riskiness(path: &Path, tol: f64) -> Result<(), Failure> {
    let g = load_gamble(path)?;
    let r = riskiness_with_tol(&g, tol)?;
    print!("{}", pretty(&serde_json::to_value(r).expect("result serializes")));
    Ok(())
}

fn cmd_sweep(path: &Path, out: Option<&Path>, tol: f64) -> Result<(), Failure> {
    let spec = SweepSpec::from_json(&read(path)?)?;
    let rows = sweep(&spec, tol)?;
    emit(out, &to_csv(&rows))?;
    for (lo, hi) in regime_boundaries(&rows) {
        match refine_boundary(&spec, lo, hi, 1e-9) {
            Ok(c) => eprintln!("regime changes in [{lo}, {hi}], phi(1/L) = 0 at {c:.10}"),
            Err(e) => eprintln!("regime changes in [{lo}, {hi}] ({e})"),
        }
    }
    Ok(())
}

fn cmd_approx(path: &Path, n_max: Option<u32>, out: Option<&Path>) -> Result<(), Failure> {
    let g = match load_gamble(path)? {
        Gamble::Density(d) => d,
        Gamble::Discrete(_) => {
            return Err(RiskError::Parse("approx needs a density gamble".into()).into())
        }
    };
    let n_max = n_max.unwrap_or_else(|| default_n_max(&g));
    let report = lambda_sequence(&g, n_max)?;
    let mut csv = String::from("n,lambda,rho\n");
    for l in &report.levels {
        let _ = writeln!(csv, "{},{:.16e},{:.16e}", l.n, l.lambda, l.rho);
    }
    emit(out, &csv)?;
    if !report.skipped.is_empty() {
        eprintln!("levels without positive mean: {:?}", report.skipped);
    }
    eprintln!(
        "target lambda {:.16e}, gap {:.3e}, monotone {}",
        report.target,
        report.gap.unwrap_or(f64::NAN),
        report.monotone
    );
    Ok(())
}

fn table(p: &RiskinessProcess) -> String {
    let mut s = format!(
        "{:<6}{:<14}{:>24}  {:<16}{:>12}\n",
        "depth", "node", "rho", "regime", "max_loss"
    );
    for n in &p.nodes {
        let _ = writeln!(
            s,
            "{:<6}{:<14}{:>24.12}  {:<16}{:>12}",
            n.depth,
            n.node.to_string(),
            n.rho,
            n.regime.as_str(),
            n.max_loss
        );
    }
    s
}

fn cmd_tree(path: &Path, compare: Option<&Path>) -> Result<(), Failure> {
    let a = load_tree(path)?;
    let Some(other) = compare else {
        print!("{}", table(&riskiness_process(&a)?));
        return Ok(());
    };
    let b = load_tree(other)?;
    let report = time_consistency_check(&a, &b)?;
    println!("a: {}", path.display());
    print!("{}", table(&report.process_a));
    println!("b: {}", other.display());
    print!("{}", table(&report.process_b));
    if report.violated() {
        for v in &report.violations {
            let (first, second) = if v.order == "a-b" { ("a", "b") } else { ("b", "a") };
            println!(
                "time-consistency violated: {first} >= {second} at every node of depth {} but \
                 {first} < {second} at {} ({} < {})",
                v.depth + 1,
                v.node,
                v.rho_first,
                v.rho_second
            );
        }
    } else {
        println!("no time-consistency violation");
    }
    Ok(())
}

fn paths_csv(stats: &WealthPathStats) -> String {
    let mut s = String::from("path,t,wealth\n");
    for tr in &stats.trajectories {
        for (t, w) in tr.wealth.iter().enumerate() {
            let _ = writeln!(s, "{},{},{:.16e}", tr.path, t, w);
        }
    }
    s
}

fn cmd_simulate(
    path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    csv: Option<&Path>,
    record: Option<usize>,
) -> Result<(), Failure> {
    let mut spec = SimulationSpec::from_json(&read(path)?)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(r) = record {
        spec.record_paths = r;
    }
    let stats = simulate(&spec)?;
    let check = match submartingale_check(&stats.increments) {
        Ok(r) => serde_json::to_value(r).expect("report serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let doc = json!({
        "seed": spec.seed,
        "summary": stats.summary(),
        "submartingale": check,
    });
    emit(out, &pretty(&doc))?;
    if let Some(p) = csv {
        emit(Some(p), &paths_csv(&stats))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let tol = cli.tol;
    match &cli.command {
        Command::Validate { gamble } => validate(gamble),
        Command::Riskiness { gamble } => cmd_riskiness(gamble, tol),
        Command::Sweep { sweep, out } => cmd_sweep(sweep, out.as_deref(), tol),
        Command::Approx { gamble, n_max, out } => cmd_approx(gamble, *n_max, out.as_deref()),
        Command::Tree { tree, compare } => cmd_tree(tree, compare.as_deref()),
        Command::Simulate {
            spec,
            seed,
            out,
            paths_csv,
            record_paths,
        } => cmd_simulate(
            spec,
            *seed,
            out.as_deref(),
            paths_csv.as_deref(),
            *record_paths,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Risk(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
