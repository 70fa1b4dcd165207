//! Command-line front end: bound reports, plan validation, SNR sweeps,
//! Monte-Carlo campaigns and antenna-grid scans.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::bounds::theorem_sum_dof;
use crate::channel::{sample_channel_trial, validate_and_order, AntennaConfig, PowerConfig, UserPermutation};
use crate::error::Error;
use crate::scheme::{build_plan, validate_plan};
use crate::simulator::{analytic_rates, monte_carlo, MonteCarloReport, RateReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

/// Allowed distance between measured slope and the sum-DoF value.
pub const SLOPE_TOL: f64 = 0.15;
/// Allowed shortfall of the worst Monte-Carlo trial.
pub const MIN_TRIAL_TOL: f64 = 0.2;

pub const CSV_HEADER: &str = "trial,snr_db,r12,r13,r21,r23,r31,r32,sum_rate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Bounds,
    Plan,
    Sweep,
    Montecarlo,
    Grid,
}

/// Antenna counts as given on the command line, plus their ordered form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaArg {
    pub raw: [i64; 4],
    pub config: AntennaConfig,
    pub permutation: UserPermutation,
}

fn parse_antennas(s: &str) -> Result<AntennaArg, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected M1,M2,M3,N, got '{s}'"));
    }
    let mut raw = [0i64; 4];
    for (slot, part) in raw.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| format!("'{part}' is not an integer"))?;
    }
    let (config, permutation) = validate_and_order(raw[0], raw[1], raw[2], raw[3]).map_err(|e| e.to_string())?;
    Ok(AntennaArg {
        raw,
        config,
        permutation,
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "ychannel",
    version,
    about = "Degrees-of-freedom bounds and alignment/zero-forcing simulation for the 3-user MIMO Y-channel",
    after_help = "SNR is 10*log10(P): noise has unit variance at every node and P is the per-node \
                  transmit power per channel use. Antenna counts may be given in any order; users are \
                  relabelled internally and reports use the original labels."
)]
struct Args {
    /// Antenna counts M1,M2,M3,N (users, then relay)
    #[arg(long, value_parser = parse_antennas, required_unless_present = "grid")]
    antennas: Option<AntennaArg>,
    /// Comma-separated SNR grid in dB
    #[arg(long, value_delimiter = ',', default_value = "40,50,60", allow_hyphen_values = true)]
    snr_db: Vec<f64>,
    /// Number of independent channel draws
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Seed of the channel generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use reciprocal channels (downlink = transposed uplink)
    #[arg(long)]
    reciprocal: bool,
    #[arg(long, value_enum, default_value_t = Mode::Bounds)]
    mode: Mode,
    /// Output file (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the plan (dimensions, allocation, residuals) as JSON
    #[arg(long)]
    dump_plan: bool,
    /// Grid-mode input: one M1,M2,M3,N tuple per line, '#' starts a comment
    #[arg(long, required_if_eq("mode", "grid"))]
    grid: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub antennas: Option<AntennaArg>,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub reciprocal: bool,
    pub mode: Mode,
    pub output_path: Option<PathBuf>,
    pub dump_plan: bool,
    pub grid_path: Option<PathBuf>,
}

/// Parses the full argument vector, program name first.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    let sweeping = matches!(args.mode, Mode::Sweep | Mode::Montecarlo | Mode::Grid);
    if sweeping {
        let increasing = args.snr_db.windows(2).all(|w| w[1] > w[0]);
        if args.snr_db.len() < 2 || !increasing || args.snr_db.iter().any(|x| !x.is_finite()) {
            return Err(clap::Error::raw(
                clap::error::ErrorKind::ValueValidation,
                "--snr-db must list at least two strictly increasing values for this mode\n",
            ));
        }
    }
    if args.mode != Mode::Grid && args.antennas.is_none() {
        return Err(clap::Error::raw(
            clap::error::ErrorKind::MissingRequiredArgument,
            "--antennas is required for this mode\n",
        ));
    }
    Ok(RunConfig {
        antennas: args.antennas,
        snr_db: args.snr_db,
        trials: args.trials,
        seed: args.seed,
        reciprocal: args.reciprocal,
        mode: args.mode,
        output_path: args.out,
        dump_plan: args.dump_plan,
        grid_path: args.grid,
    })
}

enum Failure {
    Io(io::Error),
    Usage(String),
    Degenerate(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DegenerateChannel(m) => Failure::Degenerate(m),
            other => Failure::Usage(other.to_string()),
        }
    }
}

/// Executes `cfg`, writing reports to `--out` (or `stdout`) and diagnostics
/// to `stderr`. Returns the process exit code.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cfg.output_path {
        Some(path) => File::create(path).map_err(Failure::Io).and_then(|f| {
            let mut w = BufWriter::new(f);
            let code = dispatch(cfg, &mut w, stderr)?;
            w.flush()?;
            Ok(code)
        }),
        None => dispatch(cfg, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "error: I/O failure: {e}");
            EXIT_IO
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Degenerate(m)) => {
            let _ = writeln!(stderr, "error: degenerate channel: {m}");
            EXIT_DEGENERATE
        }
    }
}

fn dispatch(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if cfg.mode == Mode::Grid {
        let path = cfg
            .grid_path
            .as_deref()
            .ok_or_else(|| Failure::Usage("--grid is required in grid mode".into()))?;
        return run_grid(cfg, path, out);
    }
    let ant = cfg
        .antennas
        .ok_or_else(|| Failure::Usage("--antennas is required".into()))?;
    match cfg.mode {
        Mode::Bounds => run_bounds(&ant, out),
        Mode::Plan => run_plan(cfg, &ant, out),
        Mode::Sweep => run_sweep(cfg, &ant, out, err),
        Mode::Montecarlo => run_montecarlo(cfg, &ant, out),
        Mode::Grid => unreachable!(),
    }
}

fn run_bounds(ant: &AntennaArg, out: &mut dyn Write) -> Result<i32, Failure> {
    let b = theorem_sum_dof(&ant.config);
    let c = &ant.config;
    writeln!(out, "config={} ordered={}", fmt_raw(&ant.raw), c)?;
    writeln!(out, "permutation={}", ant.permutation.describe())?;
    writeln!(out, "sum_dof={} case={}", b.theorem_sum, b.binding_case)?;
    writeln!(
        out,
        "terms 2M2+2M3={} M1+M2+M3={} 2N={}",
        2 * (c.m2() + c.m3()),
        c.m1() + c.m2() + c.m3(),
        2 * c.n()
    )?;
    for e in 0..3 {
        writeln!(
            out,
            "cutset_user{}={}",
            e + 1,
            b.cutset_per_user[ant.permutation.internal(e)]
        )?;
    }
    writeln!(out, "cutset_sum={}", b.cutset_sum)?;
    writeln!(out, "genie_sum={}", b.genie_sum)?;
    Ok(EXIT_OK)
}

fn run_plan(cfg: &RunConfig, ant: &AntennaArg, out: &mut dyn Write) -> Result<i32, Failure> {
    let ch = sample_channel_trial(&ant.config, cfg.reciprocal, cfg.seed, 0);
    let plan = build_plan(&ant.config, &ch)?;
    let report = validate_plan(&plan, &ch);
    let a = &plan.alloc;
    writeln!(out, "config={} permutation={}", ant.config, ant.permutation.describe())?;
    writeln!(
        out,
        "case={} construction={} d12={} d13={} d23={} slots={} n_bar={} m_bar={:?}",
        plan.reduced.binding_case,
        plan.reduced.construction,
        a.d12,
        a.d13,
        a.d23,
        a.slots,
        plan.reduced.n_bar,
        plan.reduced.m_bar
    )?;
    for c in &report.checks {
        writeln!(
            out,
            "check {} residual={:.3e} threshold={:.1e} {}",
            c.name,
            c.residual,
            c.threshold,
            if c.passed { "PASS" } else { "FAIL" }
        )?;
    }
    writeln!(out, "plan {}", if report.passed { "PASS" } else { "FAIL" })?;
    if cfg.dump_plan {
        let json = serde_json::to_string_pretty(&plan.dump(&report)).map_err(io::Error::other)?;
        writeln!(out, "{json}")?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn powers(snr_db: &[f64]) -> Result<Vec<PowerConfig>, Failure> {
    snr_db
        .iter()
        .map(|&db| PowerConfig::from_snr_db(db).map_err(Failure::from))
        .collect()
}

/// Rates of the six messages in the caller's user labels.
fn external_rates(r: &RateReport, perm: &UserPermutation) -> [f64; 6] {
    let labels = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
    labels.map(|(a, b)| r.rate(perm.internal(a), perm.internal(b)))
}

struct SweepTrial {
    rates: Vec<RateReport>,
    slope: f64,
    valid: bool,
}

fn run_sweep(cfg: &RunConfig, ant: &AntennaArg, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let pcs = powers(&cfg.snr_db)?;
    let theorem = theorem_sum_dof(&ant.config).theorem_sum as f64;
    let trials: Vec<Result<SweepTrial, Error>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let ch = sample_channel_trial(&ant.config, cfg.reciprocal, cfg.seed, t);
            let plan = build_plan(&ant.config, &ch)?;
            let valid = validate_plan(&plan, &ch).passed;
            let rates = pcs
                .iter()
                .map(|pc| analytic_rates(&plan, &ch, pc))
                .collect::<Result<Vec<_>, _>>()?;
            let (lo, hi) = (&rates[0], &rates[rates.len() - 1]);
            let slope = (hi.sum_rate - lo.sum_rate) / (0.5 * (hi.p / lo.p).log2());
            Ok(SweepTrial { rates, slope, valid })
        })
        .collect();

    if cfg.dump_plan {
        let ch = sample_channel_trial(&ant.config, cfg.reciprocal, cfg.seed, 0);
        let plan = build_plan(&ant.config, &ch)?;
        let json = serde_json::to_string_pretty(&plan.dump(&validate_plan(&plan, &ch))).map_err(io::Error::other)?;
        writeln!(err, "{json}")?;
    }
    if !ant.permutation.is_identity() {
        writeln!(err, "users relabelled internally: {}", ant.permutation.describe())?;
    }

    writeln!(out, "{CSV_HEADER}")?;
    let mut slopes = Vec::new();
    let mut ok = true;
    for (t, trial) in trials.into_iter().enumerate() {
        let trial = trial?;
        for (db, r) in cfg.snr_db.iter().zip(&trial.rates) {
            let cols = external_rates(r, &ant.permutation);
            write!(out, "{t},{db:.6}")?;
            for c in cols {
                write!(out, ",{c:.6}")?;
            }
            writeln!(out, ",{:.6}", r.sum_rate)?;
        }
        ok &= trial.valid && (trial.slope - theorem).abs() <= SLOPE_TOL;
        slopes.push(trial.slope);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    writeln!(out, "slope,,,,,,,,{mean:.6}")?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn montecarlo_ok(mc: &MonteCarloReport) -> bool {
    let thm = mc.theorem_sum as f64;
    mc.pass_rate == 1.0
        && (mc.mean_slope - thm).abs() <= SLOPE_TOL
        && mc.min_slope >= thm - MIN_TRIAL_TOL
        && mc.max_slope <= thm + SLOPE_TOL
}

fn run_montecarlo(cfg: &RunConfig, ant: &AntennaArg, out: &mut dyn Write) -> Result<i32, Failure> {
    let grid: Vec<f64> = powers(&cfg.snr_db)?.iter().map(|p| p.p()).collect();
    let mc = monte_carlo(&ant.config, cfg.trials, &grid, cfg.seed, cfg.reciprocal)?;
    if let Some(e) = mc.trials.iter().find_map(|t| t.error.clone()) {
        return Err(Failure::Degenerate(e));
    }
    writeln!(out, "theorem_sum,trials,mean_slope,min_slope,max_slope,pass_rate")?;
    writeln!(
        out,
        "{},{},{:.6},{:.6},{:.6},{:.6}",
        mc.theorem_sum, cfg.trials, mc.mean_slope, mc.min_slope, mc.max_slope, mc.pass_rate
    )?;
    Ok(if montecarlo_ok(&mc) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn parse_grid_file(path: &Path) -> Result<Vec<AntennaArg>, Failure> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ant = parse_antennas(line).map_err(|e| Failure::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        rows.push(ant);
    }
    Ok(rows)
}

fn run_grid(cfg: &RunConfig, path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let rows = parse_grid_file(path)?;
    let grid: Vec<f64> = powers(&cfg.snr_db)?.iter().map(|p| p.p()).collect();
    writeln!(out, "m1,m2,m3,n,theorem_sum,slope,pass")?;
    let mut all_ok = true;
    for ant in rows {
        let mc = monte_carlo(&ant.config, cfg.trials, &grid, cfg.seed, cfg.reciprocal)?;
        let ok = montecarlo_ok(&mc);
        all_ok &= ok;
        let [a, b, c, n] = ant.raw;
        writeln!(
            out,
            "{a},{b},{c},{n},{},{:.6},{}",
            mc.theorem_sum,
            mc.mean_slope,
            if ok { "pass" } else { "fail" }
        )?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn fmt_raw(raw: &[i64; 4]) -> String {
    format!("({},{},{},{})", raw[0], raw[1], raw[2], raw[3])
}
