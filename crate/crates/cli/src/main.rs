use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qls_core::bounds::{sensitivity_grid, ALPHA_68, DEFAULT_BETA, DEFAULT_C};
use qls_core::estimator::{DEFAULT_FLOOR, DEFAULT_ROUND_CAP};
use qls_core::harness::{run_adaptive_sweep, run_fixed_sweep, SWEEP_CI_ALPHA};
use qls_core::io;
use qls_core::sim::{simulate_double_readout, simulate_reference, simulate_rounds};
use qls_core::{
    config, selfcheck, BetaChoice, BoundsReport, Error, GenerativeConfig, ReadoutPolicy, ReferenceTable, RunManifest,
    Subspace,
};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Repetitive quantum-logic readout: simulation, estimation and bounds.
#[derive(Debug, Parser)]
#[command(name = "qls", version)]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate raw rounds or a heralded double-readout experiment.
    Simulate(SimulateArgs),
    /// Simulate reference data and build the estimator's reference table.
    Reference(ReferenceArgs),
    /// Bounds and confidence bounds on the readout error from counts.
    Bounds(BoundsArgs),
    /// Fixed-length or adaptive infidelity sweep.
    Sweep(SweepArgs),
    /// Sensitivity of the confidence bound to a fixed beta.
    Grid(GridArgs),
    /// Fast known-answer and oracle checks.
    Selfcheck,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Shipped profile name (45GHz, 90GHz, 210GHz, 490GHz) or config path.
    #[arg(long)]
    config: String,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "QLS_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Reference table CSV (with its JSON sidecar); simulated when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Reference trials per subspace when the table is simulated.
    #[arg(long, default_value_t = 10_000)]
    reference_trials: u64,
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    table: TableArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Record this many raw rounds per trial instead of running readouts.
    #[arg(long)]
    rounds: Option<usize>,
    /// Preparation for raw-round trials.
    #[arg(long, default_value = "plus", value_parser = parse_subspace)]
    prep: Subspace,
    /// Raw-round trials, or double-readout trials per preparation.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    trials_plus: Option<u64>,
    #[arg(long)]
    trials_minus: Option<u64>,
    /// `fixed:n=9`, `adaptive:t=1e4` or `adaptive:t=1e4,cap=50`.
    #[arg(long, default_value = "adaptive:t=1e4", value_parser = parse_policy)]
    policy: ReadoutPolicy,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Both,
}

impl Which {
    fn subspaces(self) -> Vec<Subspace> {
        match self {
            Which::Zero => vec![Subspace::SPlus],
            Which::One => vec![Subspace::SMinus],
            Which::Both => Subspace::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Double-readout counts, CSV or JSON.
    #[arg(long)]
    counts: PathBuf,
    /// One-sided significance of each confidence bound.
    #[arg(long, default_value_t = ALPHA_68)]
    alpha: f64,
    /// A number or `auto` for the optimal beta.
    #[arg(long, default_value = "auto", value_parser = parse_beta)]
    beta: BetaChoice,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    #[arg(long, value_enum, default_value = "both")]
    x: Which,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Fixed,
    Adaptive,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    table: TableArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, value_enum)]
    axis: Axis,
    /// Comma-separated rounds (fixed) or threshold ratios (adaptive).
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Trials per preparation.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    trials_plus: Option<u64>,
    #[arg(long)]
    trials_minus: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ROUND_CAP)]
    cap: usize,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta0: f64,
    #[arg(long, default_value_t = ALPHA_68)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    #[arg(long, value_enum, default_value = "0")]
    x: Which,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_subspace(text: &str) -> Result<Subspace, String> {
    Subspace::parse(text).ok_or_else(|| format!("unknown subspace `{text}`"))
}

fn parse_policy(text: &str) -> Result<ReadoutPolicy, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

fn parse_beta(text: &str) -> Result<BetaChoice, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Io { .. } => 3,
        Error::Numerical(_) | Error::SourceExhausted { .. } => 4,
        _ => 2,
    }
}

struct Loaded {
    config: GenerativeConfig,
    text: String,
}

fn load_config(args: &ConfigArgs) -> Result<Loaded, Error> {
    let text = match config::profile(&args.config) {
        Some(text) => text.to_string(),
        None => io::read_text(Path::new(&args.config))?,
    };
    let mut config = GenerativeConfig::from_toml_str(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(Loaded { config, text })
}

fn manifest_for(command: &str, args: &ConfigArgs, loaded: &Loaded) -> RunManifest {
    let mut m = RunManifest::new(command).with_config(&args.config, &loaded.text);
    m.seed = Some(loaded.config.seed);
    m.args = std::env::args().skip(1).collect();
    m.workers = rayon::current_num_threads();
    m
}

fn obtain_table(args: &TableArgs, config: &GenerativeConfig, manifest: &mut RunManifest) -> Result<ReferenceTable, Error> {
    match &args.table {
        Some(path) => {
            manifest.notes.push(format!("reference table loaded from {}", path.display()));
            io::load_reference_table(path)
        }
        None => {
            manifest.notes.push(format!(
                "reference table simulated: {} trials per subspace, floor {}",
                args.reference_trials, args.floor
            ));
            ReferenceTable::build(&simulate_reference(config, args.reference_trials)?, args.floor)
        }
    }
}

fn write_output(path: PathBuf, bytes: &[u8], manifest: &mut RunManifest) -> Result<(), Error> {
    io::write_atomic(&path, bytes)?;
    manifest.output_paths.push(path);
    Ok(())
}

fn finish(mut manifest: RunManifest, out: &Path, started: Instant) -> Result<(), Error> {
    manifest.finish(started.elapsed());
    let path = out.join(format!("{}.manifest.json", manifest.command));
    manifest.write(&path)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn trials_per_prep(both: Option<u64>, plus: Option<u64>, minus: Option<u64>, default: u64) -> [u64; 2] {
    let both = both.unwrap_or(default);
    [plus.unwrap_or(both), minus.unwrap_or(both)]
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let started = Instant::now();
    let loaded = load_config(&args.config)?;
    let config = &loaded.config;
    let mut manifest = manifest_for("simulate", &args.config, &loaded);
    let out = &args.out.out;

    if let Some(rounds) = args.rounds {
        let trials = args.trials.unwrap_or(1);
        let records = (0..trials)
            .map(|i| simulate_rounds(config, args.prep, rounds, i))
            .collect::<Result<Vec<_>, _>>()?;
        let mut buf = Vec::new();
        io::write_trials_jsonl(&records, &mut buf)?;
        write_output(out.join("trials.jsonl"), &buf, &mut manifest)?;
        say!("{} trials of {rounds} rounds, prep {}", records.len(), args.prep);
    } else {
        let trials = trials_per_prep(args.trials, args.trials_plus, args.trials_minus, 10_000);
        let table = obtain_table(&args.table, config, &mut manifest)?;
        manifest.notes.push(format!("policy {}", args.policy));
        let run = simulate_double_readout(config, &table, &args.policy, trials)?;
        let mut csv = Vec::new();
        io::write_counts_csv(&run.counts, &mut csv)?;
        write_output(out.join("counts.csv"), &csv, &mut manifest)?;
        write_output(out.join("counts.json"), io::counts_to_json(&run.counts).as_bytes(), &mut manifest)?;
        say!(
            "N = {}/{}, mean test rounds {:.3}, cap hits {}",
            run.counts.total(Subspace::SPlus),
            run.counts.total(Subspace::SMinus),
            run.mean_test_rounds(),
            run.total_cap_hits()
        );
        for x in Subspace::ALL {
            say!("  r^(!x,x|x) for x={x}: {:.4e}", run.counts.rates()?.disagreement(x));
        }
    }
    finish(manifest, out, started)
}

fn cmd_reference(args: &ReferenceArgs) -> Result<(), Error> {
    let started = Instant::now();
    let loaded = load_config(&args.config)?;
    let mut manifest = manifest_for("reference", &args.config, &loaded);
    let out = &args.out.out;
    let counts = simulate_reference(&loaded.config, args.trials)?;
    let table = ReferenceTable::build(&counts, args.floor)?;

    let mut buf = Vec::new();
    io::write_reference_counts_csv(&counts, &mut buf)?;
    write_output(out.join("reference_counts.csv"), &buf, &mut manifest)?;
    let table_path = out.join("reference_table.csv");
    io::save_reference_table(&table, &table_path)?;
    manifest.output_paths.push(io::sidecar_path(&table_path));
    manifest.output_paths.push(table_path);

    for s in Subspace::ALL {
        let column = table.column(s);
        say!(
            "P^(v|{s}): 00={:.5} 01={:.5} 10={:.5} 11={:.5}",
            column[0], column[1], column[2], column[3]
        );
    }
    finish(manifest, out, started)
}

fn cmd_bounds(args: &BoundsArgs) -> Result<(), Error> {
    let counts = io::load_counts(&args.counts)?;
    let reports = args
        .x
        .subspaces()
        .into_iter()
        .map(|x| {
            let beta = args.beta.resolve(&counts, args.alpha, args.c, x)?;
            BoundsReport::compute(&counts, args.alpha, beta, args.c, x)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    if let Some(path) = &args.out {
        io::write_atomic(path, json.as_bytes())?;
    }
    say!("{json}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Error> {
    let started = Instant::now();
    let loaded = load_config(&args.config)?;
    let config = &loaded.config;
    let mut manifest = manifest_for("sweep", &args.config, &loaded);
    let out = &args.out.out;
    let trials = trials_per_prep(Some(args.trials), args.trials_plus, args.trials_minus, args.trials);
    let table = obtain_table(&args.table, config, &mut manifest)?;
    manifest
        .notes
        .push(format!("error bars: two-sided Clopper-Pearson, alpha = {SWEEP_CI_ALPHA}"));

    let sweep = match args.axis {
        Axis::Fixed => {
            let mut rounds = Vec::with_capacity(args.values.len());
            for &v in &args.values {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::InvalidPolicy(format!("fixed sweep value {v} is not a positive integer")));
                }
                rounds.push(v as usize);
            }
            run_fixed_sweep(config, &table, &rounds, trials)?
        }
        Axis::Adaptive => run_adaptive_sweep(config, &table, &args.values, args.cap, trials)?,
    };
    let mut buf = Vec::new();
    io::write_sweep_csv(&sweep, &mut buf)?;
    write_output(out.join("sweep.csv"), &buf, &mut manifest)?;
    for p in &sweep.points {
        say!(
            "{:>10} S+ {:.3e}  S- {:.3e}  mean {:.3e}  rounds {:.2}",
            p.axis_value, p.infidelity_s_plus, p.infidelity_s_minus, p.infidelity_mean, p.mean_rounds
        );
    }
    finish(manifest, out, started)
}

fn cmd_grid(args: &GridArgs) -> Result<(), Error> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("grid");
    manifest.args = std::env::args().skip(1).collect();
    manifest.workers = rayon::current_num_threads();
    let out = &args.out.out;
    for x in args.x.subspaces() {
        let grid = sensitivity_grid(args.beta0, args.alpha, args.c, x)?;
        let mut buf = Vec::new();
        io::write_grid_csv(&grid, &mut buf)?;
        write_output(out.join(format!("grid_x{}.csv", x.index())), &buf, &mut manifest)?;
        say!("x={} rows={} max_loss={:.6}", x.index(), grid.rows.len(), grid.max_loss);
    }
    finish(manifest, out, started)
}

fn cmd_selfcheck() -> Result<bool, Error> {
    let results = selfcheck::run();
    for r in &results {
        say!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    Ok(results.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reference(args) => cmd_reference(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Selfcheck => match cmd_selfcheck() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(4),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
