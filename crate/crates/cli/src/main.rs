//! `offload`: solve, simulate, dump policy maps and check structural
//! properties of the delay-aware offloading model.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use offload_core::io::{
    threshold_map, write_experiment_csv, write_experiment_json, write_policy_csv, write_policy_map,
    write_thresholds_csv, write_values_csv,
};
use offload_core::sim::{instance_for_run, run_experiment, Instance, Scheme, Sweep};
use offload_core::verify::{verify, Property};
use offload_core::{solve, solve_monotone, Error, LocationId, MonotoneModel, ScenarioConfig};

#[derive(Parser)]
#[command(name = "offload", version, about = "Delay-aware Wi-Fi offloading planner and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    General,
    Monotone,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML). Missing keys take their defaults.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "general")]
    solver: Solver,
    /// With the threshold solver, average rates and prices over locations
    /// instead of rejecting an instance that lacks the required structure.
    #[arg(long)]
    approximate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the instance of run 0 and write policy/value tables.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo comparison of schemes, optionally over a sweep.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scheme names, or `all`.
        #[arg(long, default_value = "all")]
        schemes: String,
        /// e.g. `deadline=2,3,4,5`, `mu_w=20,60,100`, `file_size=100,200`, `p_stay=0.2,0.6`.
        #[arg(long)]
        sweep: Option<String>,
        /// CSV path; a JSON mirror is written next to it. Stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Action-code matrix (slot × grid index) for one location.
    PolicyMap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// 1-based location index.
        #[arg(long, default_value_t = 1)]
        location: usize,
        /// CSV path. Stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check lemma/theorem properties on the instance of run 0.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated property names, or `all`.
        #[arg(long, default_value = "all")]
        properties: String,
    },
}

enum Failure {
    Validation(String),
    Property(usize),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InvalidModel(_)
            | Error::Inadmissible { .. }
            | Error::Precondition { .. }
            | Error::Config(_)
            | Error::SizeGuard(_)
            | Error::Resource { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn instance(cfg: &ScenarioConfig) -> Result<Instance, Failure> {
    let inst = instance_for_run(cfg, 0)?;
    if let Some(w) = &inst.warning {
        eprintln!("warning: {w}");
    }
    Ok(inst)
}

fn structured(inst: &Instance, approximate: bool) -> Result<MonotoneModel, Failure> {
    Ok(if approximate {
        MonotoneModel::approximate(&inst.model)?
    } else {
        MonotoneModel::from_network(&inst.model)?
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_solve(common: &Common, args: &SolverArgs, out: &Path) -> Result<(), Failure> {
    let cfg = load(common)?;
    let inst = instance(&cfg)?;
    std::fs::create_dir_all(out)?;
    let root = match args.solver {
        Solver::General => {
            let sol = solve(&inst.model, &inst.spec)?;
            write_policy_csv(&sol.policy, create(&out.join("policy.csv"))?)?;
            write_values_csv(&sol.values, create(&out.join("values.csv"))?)?;
            sol.root_value(&inst.spec)
        }
        Solver::Monotone => {
            let mm = structured(&inst, args.approximate)?;
            let (tp, values) = solve_monotone(&mm, &inst.spec)?;
            write_thresholds_csv(&tp, create(&out.join("thresholds.csv"))?)?;
            write_values_csv(&values, create(&out.join("values.csv"))?)?;
            values.get(1, inst.spec.grid_steps(), inst.spec.initial_location())
        }
    };
    println!("expected cost from the initial state: {root}");
    Ok(())
}

fn cmd_simulate(
    common: &Common,
    schemes: &str,
    sweep: Option<&str>,
    out: Option<&Path>,
    jobs: usize,
) -> Result<(), Failure> {
    let cfg = load(common)?;
    let schemes = Scheme::parse_list(schemes)?;
    let sweep: Option<Sweep> = sweep.map(str::parse).transpose()?;
    let table = run_experiment(&cfg, &schemes, sweep.as_ref(), jobs)?;
    write_experiment_csv(&table, sink(out)?)?;
    if let Some(p) = out {
        write_experiment_json(&table, create(&p.with_extension("json"))?)?;
    }
    Ok(())
}

fn cmd_policy_map(
    common: &Common,
    args: &SolverArgs,
    location: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load(common)?;
    let inst = instance(&cfg)?;
    if location == 0 || location > inst.model.num_locations() {
        return Err(Failure::Validation(format!(
            "location {location} is outside 1..={}",
            inst.model.num_locations()
        )));
    }
    let l = LocationId::new(location);
    let map = match args.solver {
        Solver::General => solve(&inst.model, &inst.spec)?.policy.location_map(l),
        Solver::Monotone => {
            let (tp, _) = solve_monotone(&structured(&inst, args.approximate)?, &inst.spec)?;
            threshold_map(&tp, l)
        }
    };
    write_policy_map(&map, sink(out)?)?;
    Ok(())
}

fn cmd_verify(common: &Common, properties: &str) -> Result<(), Failure> {
    let cfg = load(common)?;
    let props = Property::parse_list(properties)?;
    let inst = instance(&cfg)?;
    let reports = verify(&inst.model, &inst.spec, &props, cfg.seed)?;
    for r in &reports {
        println!("{r}");
    }
    match reports.iter().filter(|r| r.failed()).count() {
        0 => Ok(()),
        n => Err(Failure::Property(n)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { common, solver, out } => cmd_solve(common, solver, out),
        Command::Simulate {
            common,
            schemes,
            sweep,
            out,
            jobs,
        } => cmd_simulate(common, schemes, sweep.as_deref(), out.as_deref(), *jobs),
        Command::PolicyMap {
            common,
            solver,
            location,
            out,
        } => cmd_policy_map(common, solver, *location, out.as_deref()),
        Command::Verify { common, properties } => cmd_verify(common, properties),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Property(n)) => {
            eprintln!("{n} propert{} failed", if n == 1 { "y" } else { "ies" });
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
