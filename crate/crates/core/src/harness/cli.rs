//! Command-line entry point.
//!
//! Subcommands: `fig2`, `theorems`, `nogo`, `hamiltonian`, `designs verify`,
//! `selftest`. Each reads a config file, writes `result.csv` plus a
//! `meta.json` sidecar into the output directory, re-validates the stored
//! theory column against the formula registry, and exits 0 iff every row
//! passed (2 on usage or config errors, 1 on failed checks).

use std::path::PathBuf;
use std::time::Instant;

use crate::error::Result;
use crate::harness::config::Config;
use crate::harness::experiments::{
    run_designs_verify, run_fig2, run_hamiltonian, run_nogo, run_selftest, run_theorems,
    RunOptions,
};
use crate::harness::table::{MetaSidecar, ResultTable};

const USAGE: &str = "\
usage: qmetro <subcommand> [options]

subcommands:
  fig2          GHZ fidelity estimation: local vs standard shadow estimators
  theorems      near-optimality ratio sweeps against the theorem bounds
  nogo          mixed-state fidelity no-go sweeps (exact + Monte Carlo)
  hamiltonian   Hamiltonian-estimation checks, noiseless and noisy
  designs       designs verify --ensemble <pauli1q|clifford-enum|clifford-sample>
  selftest      fast exact-tier checks across all modules

options:
  --config PATH   experiment config file (key = value with [sections])
  --seed U64      master seed (overrides the config)
  --out DIR       output directory (default $QMETRO_OUT or results/<cmd>)
  --workers N     worker threads (default: all cores)
  --quick         reduced shot/batch counts
  --ensemble S    (designs verify) ensemble name
  --t N           (designs verify) moment order 1..3
  --n N           (designs verify) qubit count
  --shots N       (designs verify) sampled draws
";

struct Cli {
    subcommand: String,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: usize,
    quick: bool,
    extra: Vec<(String, String)>,
}

fn parse_args(args: &[String]) -> std::result::Result<Cli, String> {
    if args.is_empty() {
        return Err("missing subcommand".into());
    }
    let mut subcommand = args[0].clone();
    let mut i = 1;
    if subcommand == "designs" {
        if args.len() < 2 || args[1] != "verify" {
            return Err("expected `designs verify`".into());
        }
        subcommand = "designs".into();
        i = 2;
    }
    let known = ["fig2", "theorems", "nogo", "hamiltonian", "designs", "selftest"];
    if !known.contains(&subcommand.as_str()) {
        return Err(format!("unknown subcommand `{subcommand}`"));
    }
    let mut cli = Cli {
        subcommand,
        config: None,
        seed: None,
        out: None,
        workers: 0,
        quick: false,
        extra: Vec::new(),
    };
    while i < args.len() {
        let arg = &args[i];
        let mut take = |name: &str| -> std::result::Result<String, String> {
            i += 1;
            args.get(i)
                .cloned()
                .ok_or_else(|| format!("{name} needs a value"))
        };
        match arg.as_str() {
            "--config" => cli.config = Some(PathBuf::from(take("--config")?)),
            "--seed" => {
                cli.seed = Some(
                    take("--seed")?
                        .parse()
                        .map_err(|_| "--seed expects an unsigned integer".to_string())?,
                )
            }
            "--out" => cli.out = Some(PathBuf::from(take("--out")?)),
            "--workers" => {
                cli.workers = take("--workers")?
                    .parse()
                    .map_err(|_| "--workers expects an unsigned integer".to_string())?
            }
            "--quick" => cli.quick = true,
            "--ensemble" => {
                let v = take("--ensemble")?;
                cli.extra.push(("designs.ensemble".into(), v));
            }
            "--t" => {
                let v = take("--t")?;
                cli.extra.push(("designs.t".into(), v));
            }
            "--n" => {
                let v = take("--n")?;
                cli.extra.push(("designs.n".into(), v));
            }
            "--shots" => {
                let v = take("--shots")?;
                cli.extra.push(("designs.shots".into(), v));
            }
            other => return Err(format!("unknown option `{other}`")),
        }
        i += 1;
    }
    Ok(cli)
}

/// Runs the CLI against the provided arguments; returns the exit code.
pub fn run_with_args(args: &[String]) -> i32 {
    if args.is_empty()
        || args
            .iter()
            .any(|a| a == "--help" || a == "-h" || a == "help")
    {
        println!("{USAGE}");
        return if args.is_empty() { 2 } else { 0 };
    }
    let cli = match parse_args(args) {
        Ok(cli) => cli,
        Err(msg) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            return 2;
        }
    };
    match execute(cli) {
        Ok(all_pass) => {
            if all_pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run_with_args(&args)
}

fn execute(cli: Cli) -> Result<bool> {
    if cli.workers > 0 {
        // ignore failure when a global pool already exists (repeat calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::parse("", "(defaults)")?,
    };
    for (k, v) in &cli.extra {
        config.set(k, v);
    }
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get_u64_or("seed", 42)?,
    };
    let opts = RunOptions {
        seed,
        quick: cli.quick,
    };

    let start = Instant::now();
    let table: ResultTable = match cli.subcommand.as_str() {
        "fig2" => run_fig2(&config, opts)?,
        "theorems" => run_theorems(&config, opts)?,
        "nogo" => run_nogo(&config, opts)?,
        "hamiltonian" => run_hamiltonian(&config, opts)?,
        "designs" => run_designs_verify(&config, opts)?,
        "selftest" => run_selftest(opts)?,
        _ => unreachable!(),
    };
    let runtime = start.elapsed().as_secs_f64();

    let out_dir = cli
        .out
        .or_else(|| std::env::var("QMETRO_OUT").ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results").join(&cli.subcommand));
    std::fs::create_dir_all(&out_dir)?;
    let csv_path = out_dir.join("result.csv");
    table.write_csv(&csv_path)?;

    // reload and re-verify the stored theory column against the formulas
    let reread = ResultTable::from_csv(&std::fs::read_to_string(&csv_path)?)?;
    reread.verify_formulas()?;

    let meta = MetaSidecar {
        experiment: cli.subcommand.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config_source: config.source().to_string(),
        config_hash: format!("{:016x}", config.hash()),
        config_echo: config.echo(),
        workers: cli.workers,
        quick: cli.quick,
        subsample: if cli.subcommand == "fig2" {
            Some(
                config
                    .get_str_or("fig2.subsample", "without-replacement")
                    .to_string(),
            )
        } else {
            None
        },
        runtime_seconds: runtime,
        rows: table.rows.len(),
        failed: table.n_failed(),
        all_pass: table.all_pass(),
    };
    meta.write(&out_dir.join("meta.json"))?;

    // stdout report: every row when short, otherwise failures plus a summary
    let verbose = table.rows.len() <= 64;
    for row in &table.rows {
        if verbose || !row.pass {
            let tag = if row.pass { "PASS" } else { "FAIL" };
            if row.stderr > 0.0 {
                println!(
                    "[{tag}] {}: empirical={:.6e} theory={:.6e} (±{:.2e})",
                    row.sweep, row.empirical, row.theory, row.stderr
                );
            } else {
                println!(
                    "[{tag}] {}: empirical={:.6e} theory={:.6e}",
                    row.sweep, row.empirical, row.theory
                );
            }
        }
    }
    println!(
        "{}: {} rows, {} failed, {:.1}s -> {}",
        cli.subcommand,
        table.rows.len(),
        table.n_failed(),
        runtime,
        csv_path.display()
    );
    Ok(table.all_pass())
}

pub use run as main;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let code = run_with_args(&["frobnicate".to_string()]);
        assert_eq!(code, 2);
    }

    #[test]
    fn selftest_runs_to_green() {
        let dir = std::env::temp_dir().join("qmetro_cli_selftest");
        let code = run_with_args(&[
            "selftest".to_string(),
            "--out".to_string(),
            dir.display().to_string(),
        ]);
        assert_eq!(code, 0);
        assert!(dir.join("result.csv").exists());
        assert!(dir.join("meta.json").exists());
        std::fs::remove_dir_all(&dir).ok();
    }
}
