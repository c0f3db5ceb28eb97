use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mcs_hybrid::harness::certify::Fault;
use mcs_hybrid::harness::experiment::{ExperimentResult, MethodAggregate};
use mcs_hybrid::harness::io::{aggregate_json, read_market_bundle, write_experiment, write_market_bundle};
use mcs_hybrid::harness::spec::parse_methods;
use mcs_hybrid::harness::{
    generate_market, ingest_trips, parse_spec, read_trips, run_experiment, run_experiment_on, run_stability_campaign,
    sweep, ScenarioSpec, SweepParameter,
};
use mcs_hybrid::stability::StabilityBounds;

const EXIT_INPUT: u8 = 2;
const EXIT_ENGINE: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(name = "mcs-hybrid", about = "Hybrid futures/spot matching for mobile crowdsensing", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a market from a scenario file and write it as a CSV bundle.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's master_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a Monte Carlo experiment and write results.csv and aggregate.json.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of hybrid,conventional_s,conventional_f,quality_p,random_m,negotiation.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use a market bundle written by `gen` instead of sampling one.
        #[arg(long)]
        market: Option<PathBuf>,
        /// Worker threads for trials (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Format of the summary printed to standard output.
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Add wall-clock columns to the result files (makes them nondeterministic).
        #[arg(long)]
        include_runtime: bool,
    },
    /// Run one experiment per grid value of a parameter.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// tau, lambda2, n_workers or n_tasks.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Certify OIA3M, OMOM and O3M on random small markets by exhaustive search.
    Stability {
        /// Scenario file supplying value ranges (sizes are ignored).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 6)]
        max_tasks: usize,
        #[arg(long, default_value_t = 10)]
        max_workers: usize,
        #[arg(long, default_value_t = 4)]
        max_eviction: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        fault: bool,
    },
    /// Build a market bundle from a trip CSV.
    Ingest {
        #[arg(long)]
        trips: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the version.
    Version,
}

struct Failure {
    code: u8,
    message: String,
}

fn input(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

fn engine(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_ENGINE, message: message.to_string() }
}

fn load_spec(path: &Path) -> Result<ScenarioSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn apply_overrides(
    spec: &mut ScenarioSpec,
    methods: Option<&str>,
    trials: Option<usize>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    if let Some(m) = methods {
        spec.methods = parse_methods(m).map_err(|e| input(format!("--methods: {e}")))?;
    }
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    spec.validate().map_err(input)
}

fn with_jobs<T>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    match jobs {
        None => Ok(f()),
        Some(0) => Err(input("--jobs must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(engine)?;
            Ok(pool.install(f))
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

const SUMMARY_HEADER: [&str; 9] = [
    "method",
    "service_quality",
    "rosq",
    "fodsq",
    "worker_utility",
    "ni",
    "dip",
    "ecip",
    "runtime_ms",
];

fn summary_row(a: &MethodAggregate) -> Vec<String> {
    let m = &a.mean;
    vec![
        a.method.name().to_string(),
        format!("{:.4}", m.service_quality),
        fmt_opt(m.rosq),
        format!("{:.4}", m.fodsq),
        format!("{:.4}", m.worker_utility),
        format!("{:.1}", m.ni),
        format!("{:.2}", m.dip),
        format!("{:.2}", m.ecip),
        format!("{:.3}", m.running_time_ms),
    ]
}

fn print_summary(out: &mut impl Write, result: &ExperimentResult, format: Format) -> io::Result<()> {
    match format {
        Format::Table => {
            let rows: Vec<Vec<String>> = result.aggregates.iter().map(summary_row).collect();
            let widths: Vec<usize> = (0..SUMMARY_HEADER.len())
                .map(|c| rows.iter().map(|r| r[c].len()).chain([SUMMARY_HEADER[c].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: Vec<&str>| -> String {
                cells
                    .iter()
                    .enumerate()
                    .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(out, "{}", line(SUMMARY_HEADER.to_vec()))?;
            for r in &rows {
                writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
            }
        }
        Format::Csv => {
            writeln!(out, "{}", SUMMARY_HEADER.join(","))?;
            for a in &result.aggregates {
                writeln!(out, "{}", summary_row(a).join(","))?;
            }
        }
        Format::Json => {
            let v = aggregate_json(result, true);
            writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("summary serializes"))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Version => {
            writeln!(out, "mcs-hybrid {}", env!("CARGO_PKG_VERSION")).map_err(engine)?;
        }
        Command::Gen { spec, out: dir, seed } => {
            let mut s = load_spec(&spec)?;
            apply_overrides(&mut s, None, None, seed)?;
            let market = generate_market(&s, s.master_seed).map_err(input)?;
            write_market_bundle(&dir, &market).map_err(engine)?;
            writeln!(out, "wrote {} tasks x {} workers to {}", s.n_tasks, s.n_workers, dir.display()).map_err(engine)?;
        }
        Command::Run { spec, out: dir, methods, trials, seed, market, jobs, format, include_runtime } => {
            let mut s = load_spec(&spec)?;
            apply_overrides(&mut s, methods.as_deref(), trials, seed)?;
            let market = market
                .map(|p| read_market_bundle(&p).map_err(input))
                .transpose()?;
            let result = with_jobs(jobs, || match market {
                Some(m) => run_experiment_on(&s, m),
                None => run_experiment(&s),
            })?
            .map_err(engine)?;
            write_experiment(&dir, &result, include_runtime).map_err(engine)?;
            print_summary(&mut out, &result, format).map_err(engine)?;
        }
        Command::Sweep { spec, out: dir, param, grid, methods, trials, seed, jobs, format } => {
            let mut s = load_spec(&spec)?;
            apply_overrides(&mut s, methods.as_deref(), trials, seed)?;
            let parameter: SweepParameter = param.parse().map_err(input)?;
            let grid: Vec<f64> = grid
                .split(',')
                .map(|g| g.trim().parse::<f64>().map_err(|e| input(format!("--grid `{g}`: {e}"))))
                .collect::<Result<_, _>>()?;
            let results = with_jobs(jobs, || sweep(&s, parameter, &grid))?.map_err(|e| match e {
                mcs_hybrid::harness::EngineError::Spec(e) => input(e),
                e => engine(e),
            })?;
            for (k, (value, result)) in results.iter().enumerate() {
                write_experiment(&dir.join(format!("point_{k:02}")), result, false).map_err(engine)?;
                writeln!(out, "{param} = {value}").map_err(engine)?;
                print_summary(&mut out, result, format).map_err(engine)?;
            }
        }
        Command::Stability { spec, instances, max_tasks, max_workers, max_eviction, seed, fault } => {
            let ranges = match spec {
                Some(p) => load_spec(&p)?,
                None => ScenarioSpec::with_size(0, 0),
            };
            let bounds = StabilityBounds { max_tasks, max_workers, max_eviction };
            if max_tasks == 0 || max_workers == 0 || max_tasks > 8 || max_workers > 10 {
                return Err(input("search bounds must be within 1..=8 tasks and 1..=10 workers"));
            }
            let fault = fault.then_some(Fault::DropSpotRecruits);
            let report = run_stability_campaign(&ranges, instances, &bounds, seed, fault).map_err(engine)?;
            let mut failures = 0;
            for inst in &report.instances {
                for w in inst.witnesses() {
                    failures += 1;
                    writeln!(out, "instance {}: witness {}", inst.instance, serde_json::to_string(w).expect("witness serializes"))
                        .map_err(engine)?;
                }
                for r in &inst.reports {
                    for v in &r.ir_violations {
                        failures += 1;
                        writeln!(out, "instance {}: {:?} individual rationality violation {:?}", inst.instance, r.mechanism, v)
                            .map_err(engine)?;
                    }
                }
                for v in &inst.settlement_violations {
                    failures += 1;
                    writeln!(out, "instance {}: settlement violation {:?}", inst.instance, v).map_err(engine)?;
                }
            }
            writeln!(out, "certified {} instances, {} problems found", report.instances.len(), failures).map_err(engine)?;
            if failures > 0 {
                return Err(Failure { code: EXIT_VIOLATION, message: format!("{failures} stability problems found") });
            }
        }
        Command::Ingest { trips, spec, out: dir, seed } => {
            let s = load_spec(&spec)?;
            let f = fs::File::open(&trips).map_err(|e| input(format!("{}: {e}", trips.display())))?;
            let records = read_trips(f).map_err(|e| input(format!("{}: {e}", trips.display())))?;
            let market = ingest_trips(&records, &s, seed.unwrap_or(s.master_seed)).map_err(input)?;
            write_market_bundle(&dir, &market).map_err(engine)?;
            writeln!(out, "wrote {} tasks x {} workers to {}", market.tasks.len(), market.workers.len(), dir.display())
                .map_err(engine)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
