use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dualwell::cli::{
    export_csv, save_svg, series_from_csv, solution_csv, write_atomic, SweepTable,
};
use dualwell::numerics::DEFAULT_NODES;
use dualwell::{
    duality_gap, make_radial_grid, problem_from_json, run_suite, solve_branch, solve_dae,
    BranchMap, Material, StressSample, SuiteOptions, DEFAULT_REGIME_TOL,
};

/// Critical points of the double-well energy via its canonical dual.
///
/// Perturbation probes in `verify` draw polynomial coefficients uniformly
/// from [-1, 1] with a ChaCha8 generator seeded by `--seed`.
#[derive(Parser)]
#[command(name = "dualwell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the real roots of the dual cubic as JSON.
    Roots {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long = "sigma-sq", allow_negative_numbers = true)]
        sigma_sq: f64,
    },
    /// Tabulate all roots and the branch solutions over the domain.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one branch (1, 2, 3) or a branch-map JSON file; prints the energies.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        branch: String,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every check; exits nonzero unless all pass.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plot columns of a CSV file as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long, required = true)]
        y: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> dualwell::Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn branch_map(arg: &str, lo: f64, hi: f64) -> dualwell::Result<BranchMap> {
    match arg {
        "1" | "2" | "3" => Ok(BranchMap::pure(arg.parse().expect("digit"), lo, hi)),
        path => BranchMap::from_json(&read(Path::new(path))?),
    }
}

fn run(cli: Cli) -> dualwell::Result<bool> {
    match cli.command {
        Command::Roots {
            nu,
            lambda,
            sigma_sq,
        } => {
            let material = Material::new(nu, lambda)?;
            let roots = solve_dae(StressSample::new(sigma_sq)?, &material, DEFAULT_REGIME_TOL);
            println!("{}", serde_json::to_string_pretty(&roots)?);
        }
        Command::Sweep { config, nodes, out } => {
            let problem = problem_from_json(&read(&config)?)?;
            let table = SweepTable::build(&problem, nodes)?;
            export_csv(&table, &out)?;
        }
        Command::Solve {
            config,
            branch,
            nodes,
            out,
        } => {
            let problem = problem_from_json(&read(&config)?)?;
            let (lo, hi) = problem.domain();
            let map = branch_map(&branch, lo, hi)?;
            let solution = solve_branch(&problem, &map, &make_radial_grid(lo, hi, nodes)?)?;
            write_atomic(&out, solution_csv(&solution)?.as_bytes())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&duality_gap(&solution)?)?
            );
        }
        Command::Verify {
            config,
            report,
            seed,
        } => {
            let problem = problem_from_json(&read(&config)?)?;
            let result = run_suite(
                &problem,
                &SuiteOptions {
                    seed,
                    ..Default::default()
                },
            );
            write_atomic(&report, result.to_json()?.as_bytes())?;
            for check in result.checks.iter().filter(|c| !c.pass) {
                eprintln!(
                    "FAIL {}: {} (threshold {})",
                    check.name, check.value, check.threshold
                );
            }
            return Ok(result.overall);
        }
        Command::Plot { input, x, y, out } => {
            let series = series_from_csv(&read(&input)?, &x, &y)?;
            let y_label = y.join(", ");
            save_svg(&series, &x, &y_label, &out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
