//! `cpd`: change-point detection for piecewise-constant signals.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or input error,
//! 3 calibration failure.

use clap::{ArgGroup, Args, Parser, Subcommand};
use cpd_core::estimation::{calibrate_constant, constant_for, effective_sigma, mad, ConstantTable, Level};
use cpd_core::rng::rep_rng;
use cpd_core::sdll::sdll_select;
use cpd_core::simlab::{
    gen_extreme_extreme_teeth, gen_extreme_teeth, load_signal_spec, run_bench,
    write_signal_values, Method, NoiseSpec, SignalSpec,
};
use cpd_core::{
    detect, fit_piecewise_mean, median_run_ensemble, wbs2_solution_path, ChangePointModel, Error,
    SdllConfig, TimeSeries, Wbs2Config,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cpd",
    version,
    about = "Detect mean shifts in noisy piecewise-constant series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect change-points in a series file
    Detect(DetectArgs),
    /// Dump the full solution path for a series file
    Path(PathArgs),
    /// Calibrate threshold constants by null-model simulation
    Calibrate(CalibrateArgs),
    /// Score detectors over seeded noisy replicates of a signal
    Bench(BenchArgs),
    /// Write a signal-plus-noise realization to disk
    Simulate(SimulateArgs),
}

fn parse_level(s: &str) -> Result<Level, String> {
    match s {
        "0.9" | "0.90" => Ok(Level::P90),
        "0.95" => Ok(Level::P95),
        _ => Err("supported levels: 0.90, 0.95".into()),
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("threshold").args(["level", "constant"])))]
struct DetectArgs {
    /// Series file: one value per line, or CSV with --col
    #[arg(short, long)]
    input: PathBuf,
    /// 1-based comma-separated column holding the values
    #[arg(long)]
    col: Option<usize>,
    /// Calibration level for the detection threshold
    #[arg(long, value_parser = parse_level, default_value = "0.90")]
    level: Level,
    /// Explicit threshold constant, bypassing the calibrated table
    #[arg(long)]
    constant: Option<f64>,
    /// Fraction of the threshold gating the model-selection search
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
    /// Random intervals drawn per recursion domain
    #[arg(long, default_value_t = 100)]
    m_tilde: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run R seeded detections and report the median run plus a
    /// pooled location histogram
    #[arg(long, value_name = "R", default_value_t = 1)]
    ensemble: usize,
}

#[derive(Args)]
struct PathArgs {
    /// Series file: one value per line, or CSV with --col
    #[arg(short, long)]
    input: PathBuf,
    /// 1-based comma-separated column holding the values
    #[arg(long)]
    col: Option<usize>,
    /// Random intervals drawn per recursion domain
    #[arg(long, default_value_t = 100)]
    m_tilde: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail (exit 2) unless the path has exactly T-1 entries
    #[arg(long)]
    check_complete: bool,
    /// Fail (exit 2) unless the stat column is non-increasing
    #[arg(long)]
    check_sorted: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_parser = parse_level, default_value = "0.90")]
    level: Level,
    /// Comma-separated series lengths to calibrate at
    #[arg(long, default_value = "10,50,100,500,1000,5000,10000")]
    t_grid: String,
    /// Null-model replications per grid point
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination file; stdout when omitted
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Built-in signal name (extreme.teeth, extreme.extreme.teeth) or a
    /// signal file path
    #[arg(long, default_value = "extreme.teeth")]
    signal: String,
    /// Length of the built-in extreme.teeth signal
    #[arg(long, default_value_t = 1000)]
    t_len: usize,
    /// Noise shape: gaussian or t
    #[arg(long, default_value = "gaussian")]
    noise: String,
    /// Noise standard deviation
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Degrees of freedom for t noise
    #[arg(long, default_value_t = 5.0)]
    df: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated method names, or "all"
    #[arg(long, default_value = "all")]
    methods: String,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in signal name (extreme.teeth, extreme.extreme.teeth) or a
    /// signal file path
    #[arg(long, default_value = "extreme.teeth")]
    signal: String,
    /// Length of the built-in extreme.teeth signal
    #[arg(long, default_value_t = 1000)]
    t_len: usize,
    /// Noise shape: gaussian or t
    #[arg(long, default_value = "gaussian")]
    noise: String,
    /// Noise standard deviation; 0 writes the clean signal
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Degrees of freedom for t noise
    #[arg(long, default_value_t = 5.0)]
    df: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination file; stdout when omitted
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe closes (e.g. `cpd path ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they are not errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Calibration(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Path(a) => cmd_path(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn read_series(path: &Path, col: Option<usize>) -> Result<TimeSeries, Error> {
    if col == Some(0) {
        return Err(Error::input("--col is 1-based"));
    }
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = match col {
            None => line,
            Some(k) => line
                .split(',')
                .nth(k - 1)
                .map(str::trim)
                .ok_or(Error::Parse {
                    line: i + 1,
                    msg: format!("no column {k}"),
                })?,
        };
        let v: f64 = field.parse().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("bad value '{field}': {e}"),
        })?;
        values.push(v);
    }
    TimeSeries::new(values)
}

fn print_model(model: &ChangePointModel) {
    println!("N_hat={}", model.n_hat);
    for b in &model.locations {
        println!("changepoint\t{b}");
    }
    let mut lo = 0usize;
    for &hi in model.locations.iter().chain(std::iter::once(&model.fit.len())) {
        println!("segment\t{}\t{}\t{}", lo + 1, hi, model.fit[lo]);
        lo = hi;
    }
}

fn cmd_detect(a: DetectArgs) -> Result<(), Error> {
    let x = read_series(&a.input, a.col)?;
    let constant = match a.constant {
        Some(c) => c,
        None => constant_for(a.level, x.len().max(2)),
    };
    let sdll = SdllConfig {
        threshold_constant: constant,
        beta: a.beta,
        sigma_hat: None,
    };
    let wbs2 = Wbs2Config {
        m_tilde: a.m_tilde,
        seed: a.seed,
        ..Default::default()
    };
    if a.ensemble <= 1 {
        let model = detect(&x, &wbs2, &sdll)?;
        print_model(&model);
        return Ok(());
    }
    if x.len() < 2 {
        print_model(&fit_piecewise_mean(&x, &[])?);
        return Ok(());
    }
    let sigma = effective_sigma(mad(&x)?, x.max_abs());
    let resolved = SdllConfig {
        sigma_hat: Some(sigma),
        ..sdll
    };
    let t_len = x.len();
    let (model, pooled) =
        median_run_ensemble(&x, &wbs2, a.ensemble, |path, _| sdll_select(path, t_len, &resolved))?;
    print_model(&model);
    let mut i = 0;
    while i < pooled.len() {
        let b = pooled[i];
        let mut n = 0;
        while i < pooled.len() && pooled[i] == b {
            n += 1;
            i += 1;
        }
        println!("hist\t{b}\t{n}");
    }
    Ok(())
}

fn cmd_path(a: PathArgs) -> Result<(), Error> {
    let x = read_series(&a.input, a.col)?;
    let path = if x.len() < 2 {
        cpd_core::SolutionPath { entries: vec![] }
    } else {
        wbs2_solution_path(
            &x,
            &Wbs2Config {
                m_tilde: a.m_tilde,
                seed: a.seed,
                ..Default::default()
            },
        )?
    };
    println!("length={}", path.len());
    for (k, en) in path.entries.iter().enumerate() {
        println!("{}\t{}\t{}\t{}\t{}", k + 1, en.s, en.e, en.b, en.stat);
    }
    if a.check_complete && !path.is_complete(x.len()) {
        return Err(Error::input(format!(
            "path has {} entries, expected {}",
            path.len(),
            x.len() - 1
        )));
    }
    if a.check_sorted && !path.is_sorted_non_increasing() {
        return Err(Error::input("path stats are not non-increasing"));
    }
    Ok(())
}

fn parse_grid(s: &str) -> Result<Vec<usize>, Error> {
    let mut grid = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        grid.push(
            tok.parse::<usize>()
                .map_err(|e| Error::input(format!("bad grid entry '{tok}': {e}")))?,
        );
    }
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::input("empty calibration grid"));
    }
    Ok(grid)
}

fn init_pool(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // ignore failure: the global pool can only be sized once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), Error> {
    init_pool(a.jobs);
    let grid = parse_grid(&a.t_grid)?;
    if a.reps < 100 {
        eprintln!(
            "warning: reps={} gives imprecise constants; use >= 1000 for production tables",
            a.reps
        );
    }
    let mut anchors = Vec::with_capacity(grid.len());
    for &t in &grid {
        eprintln!("calibrating T={t} ({} reps)...", a.reps);
        let table = calibrate_constant(&[t], a.level.value(), a.reps, a.seed)?;
        anchors.push(table.anchors[0]);
        eprintln!("  T={t}: C={:.4}", anchors.last().unwrap().1);
    }
    let table = ConstantTable::new(a.level.value(), anchors)?;
    match a.output {
        Some(p) => std::fs::write(p, table.format())?,
        None => print!("{}", table.format()),
    }
    Ok(())
}

fn resolve_signal(name: &str, t_len: usize) -> Result<SignalSpec, Error> {
    match name {
        "extreme.teeth" => gen_extreme_teeth(t_len),
        "extreme.extreme.teeth" => Ok(gen_extreme_extreme_teeth()),
        other => {
            let p = Path::new(other);
            if p.exists() {
                load_signal_spec(p, other)
            } else {
                Err(Error::input(format!(
                    "unknown signal '{other}'; built-ins: extreme.teeth, \
                     extreme.extreme.teeth, or pass a signal file path"
                )))
            }
        }
    }
}

fn resolve_noise(shape: &str, sigma: f64, df: f64) -> Result<NoiseSpec, Error> {
    match shape {
        "gaussian" => Ok(NoiseSpec::Gaussian { sigma }),
        "t" => Ok(NoiseSpec::StudentT { sigma, df }),
        other => Err(Error::input(format!(
            "unknown noise '{other}'; supported: gaussian, t"
        ))),
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), Error> {
    init_pool(a.jobs);
    let signal = resolve_signal(&a.signal, a.t_len)?;
    let noise = resolve_noise(&a.noise, a.sigma, a.df)?;
    let methods: Vec<Method> = if a.methods == "all" {
        Method::all().to_vec()
    } else {
        a.methods
            .split(',')
            .map(|s| Method::parse(s.trim()))
            .collect::<Result<_, _>>()?
    };
    let out = run_bench(&signal, &noise, &methods, a.reps, a.seed)?;
    println!("method\tbias_n\tmae_n\tmse_n\tmse_f\tmean_sec\treps");
    for r in &out.reports {
        println!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.6}\t{:.6}\t{}",
            r.method.name(),
            r.bias_n,
            r.mae_n,
            r.mse_n,
            r.mse_f,
            r.mean_time_sec,
            r.reps
        );
    }
    for f in &out.failures {
        eprintln!("warning: {f}");
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Error> {
    let signal = resolve_signal(&a.signal, a.t_len)?;
    let noise = resolve_noise(&a.noise, a.sigma, a.df)?;
    let mut rng = rep_rng(a.seed, 0);
    let e = noise.gen_noise(signal.len(), &mut rng)?;
    let values: Vec<f64> = signal.values.iter().zip(&e).map(|(a, b)| a + b).collect();
    match a.output {
        Some(p) => write_signal_values(&p, &values)?,
        None => {
            for v in &values {
                println!("{v}");
            }
        }
    }
    Ok(())
}
