use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drsplit::identities::identity_suite;
use drsplit::scenario::{batch_status, load_scenario, run_all, run_scenario, verify, ExitStatus, RunOptions, ScenarioOutcome};
use drsplit::Execution;

/// Douglas-Rachford runs, oracle checks and identity sweeps.
#[derive(Parser)]
#[command(name = "drtool", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace and summary.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run every scenario in a directory.
    RunAll {
        dir: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare a scenario against its oracle block without writing files.
    Verify { scenario: PathBuf },
    /// Check the resolvent identities on random points.
    Identities {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

fn seed() -> Result<u64, String> {
    match std::env::var("DRTOOL_SEED") {
        Ok(s) => s.trim().parse().map_err(|e| format!("DRTOOL_SEED={s:?}: {e}")),
        Err(_) => Ok(0),
    }
}

fn report(outcome: &ScenarioOutcome) {
    let s = &outcome.summary;
    println!("{}: {} ({} iterations)", s.name, if s.pass { "PASS" } else { "FAIL" }, s.iterations);
    if let Some(est) = s.estimates.first() {
        println!("  v   = {:?}", est.v.as_slice());
        println!("  v_D = {:?}", est.v_d.as_slice());
        println!("  v_R = {:?}", est.v_r.as_slice());
    }
    for c in &s.checks {
        println!("  [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = match seed() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let status = match cli.command {
        Command::Run { scenario, out, max_iters, tol } => {
            let opts = RunOptions { out_dir: Some(out), max_iters, stop_tol: tol, seed };
            single(load_scenario(&scenario).and_then(|sc| run_scenario(&sc, &opts)))
        }
        Command::Verify { scenario } => {
            let opts = RunOptions { seed, ..Default::default() };
            single(load_scenario(&scenario).and_then(|sc| verify(&sc, &opts)))
        }
        Command::RunAll { dir, out } => {
            let opts = RunOptions { out_dir: Some(out), seed, ..Default::default() };
            match run_all(&dir, &opts, Execution::default()) {
                Ok(results) => {
                    for (path, r) in &results {
                        match r {
                            Ok(o) => report(o),
                            Err(e) => eprintln!("{}: error: {e}", path.display()),
                        }
                    }
                    batch_status(results.iter().map(|(_, r)| r))
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitStatus::Failure
                }
            }
        }
        Command::Identities { scenario, samples } => {
            let result = load_scenario(&scenario)
                .and_then(|sc| Ok(identity_suite(&sc.problem()?, samples, seed, Execution::default())?));
            match result {
                Ok(r) => {
                    println!(
                        "{} samples: moreau {:e}, primal step {:e}, dual step {:e}, shift {:e} -> {}",
                        r.samples,
                        r.moreau,
                        r.primal_step,
                        r.dual_step,
                        r.shift,
                        if r.pass { "PASS" } else { "FAIL" }
                    );
                    if r.pass { ExitStatus::Pass } else { ExitStatus::Mismatch }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitStatus::Failure
                }
            }
        }
    };
    ExitCode::from(status.code() as u8)
}

fn single(result: drsplit::scenario::HarnessResult<ScenarioOutcome>) -> ExitStatus {
    match &result {
        Ok(o) => report(o),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitStatus::of(&result, |o| o.status)
}
