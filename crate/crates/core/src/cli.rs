//! Batch front end behind the `rough-ldp` binary.
//!
//! Exit codes: 0 success, 1 validation failure, 2 solver or estimator
//! failure, 64 bad configuration or arguments.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::gdelta_convergence;
use crate::error::{Error, Result};
use crate::grid::{holder_norm, GridFunction};
use crate::kernels::{keps_convergence_report, KernelSpec};
use crate::lift::{chen_defect, integration_by_parts_defect, young_pair};
use crate::mc::{self, Integrand, MCConfig};
use crate::model::{ModelSpec, Preset};
use crate::rate::{self, DEFAULT_N, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;

const DEFAULT_PATHS: usize = 200_000;
const DEFAULT_STEPS: usize = 500;
const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "rough-ldp", version, about = "Short-maturity large deviations for rough volatility models")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the rate function at one point.
    Rate {
        /// Model JSON file, or a preset name.
        #[arg(long)]
        config: String,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Optional CSV of the optimal control.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limiting implied-volatility smile on a uniform x grid.
    Smile {
        #[arg(long)]
        config: String,
        #[arg(long, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value = "smile.csv")]
        out: PathBuf,
    },
    /// Monte Carlo tails, prices and implied vols at small maturities.
    Simulate {
        #[arg(long)]
        config: String,
        /// Comma-separated maturities.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        t: Vec<f64>,
        /// Comma-separated scaled log-moneyness values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_PATHS)]
        paths: usize,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "simulate.csv")]
        out: PathBuf,
    },
    /// Run one of the built-in numerical checks.
    Validate {
        suite: Suite,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Suite {
    Kernel,
    Chen,
    Gdelta,
    Uet,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::Shape(_)
        | Error::KernelDomain(_)
        | Error::KernelFamily(_)
        | Error::InvalidModel(_)
        | Error::UnknownPreset(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Reads a model from a JSON file, falling back to a preset name.
pub fn load_model(config: &str) -> Result<ModelSpec> {
    let path = Path::new(config);
    if !path.exists() {
        if let Ok(p) = config.parse::<Preset>() {
            return Ok(crate::model::preset(p));
        }
    }
    ModelSpec::from_path(path)
}

fn provenance(out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "# defaults n={DEFAULT_N} tol={DEFAULT_TOL:e} paths={DEFAULT_PATHS} steps={DEFAULT_STEPS} seed={DEFAULT_SEED}"
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(k) = cli.threads {
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
    let _ = provenance(out);
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Rate { config, z, n, tol, out: csv } => cmd_rate(&config, z, n, tol, csv.as_deref(), out, err),
        Command::Smile { config, x_min, x_max, points, n, out: csv } => {
            cmd_smile(&config, x_min, x_max, points, n, &csv, out, err)
        }
        Command::Simulate { config, t, x, paths, steps, seed, out: csv } => {
            let cfg = MCConfig { n_paths: paths, n_steps: steps, maturities: t, seed, antithetic: false };
            cmd_simulate(&config, &x, &cfg, &csv, out, err)
        }
        Command::Validate { suite, seed } => cmd_validate(suite, seed, out, err),
    }
}

fn cmd_rate(
    config: &str,
    z: f64,
    n: usize,
    tol: f64,
    csv: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let m = load_model(config)?;
    m.validate_short_time()?;
    let r = rate::solve_rate(&m, z, n, tol)?;
    writeln!(out, "J={}", r.value)?;
    writeln!(
        out,
        "z={} n={n} tol={tol:e} start={} iterations={} grad_norm={:e} gradient={:?} converged={}",
        r.z, r.start_label, r.iterations, r.grad_norm, r.gradient_mode, r.converged
    )?;
    if let Some(path) = csv {
        let mut w = create(path)?;
        writeln!(w, "t,g")?;
        let dt = 1.0 / r.control.len().max(1) as f64;
        for (i, g) in r.control.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", (i as f64 + 0.5) * dt, g)?;
        }
        w.flush()?;
    }
    if !r.converged {
        writeln!(err, "warning: solver stopped with gradient norm {:e} above {tol:e}", r.grad_norm)?;
        return Ok(EXIT_SOLVER);
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_smile(
    config: &str,
    x_min: f64,
    x_max: f64,
    points: usize,
    n: usize,
    csv: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let m = load_model(config)?;
    m.validate_short_time()?;
    if points < 2 {
        return Err(Error::InvalidInput(format!("points must be at least 2, got {points}")));
    }
    if !(x_min < x_max) {
        return Err(Error::InvalidInput(format!("empty range [{x_min}, {x_max}]")));
    }
    let grid: Vec<f64> = (0..points)
        .map(|k| x_min + (x_max - x_min) * k as f64 / (points - 1) as f64)
        .collect();
    let table = rate::smile(&m, &grid, n)?;
    let mut w = create(csv)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    for r in table.rows.iter().filter(|r| r.extrapolated) {
        writeln!(err, "warning: x={} row interpolated from its neighbours", r.x)?;
    }
    writeln!(out, "rows={} n={n} out={}", table.rows.len(), csv.display())?;
    if let Some(s) = table.atm_skew() {
        writeln!(out, "atm_skew={s}")?;
    }
    Ok(EXIT_OK)
}

/// Writes the `simulate` CSV for `m` to `w`; warnings go to `err`.
pub fn write_simulation_csv(
    m: &ModelSpec,
    xs: &[f64],
    cfg: &MCConfig,
    w: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    if let Some(x) = xs.iter().find(|&&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("x must be finite and nonzero, got {x}")));
    }
    let targets = xs.iter().map(|&x| mc::asymptotic_vol(m, x)).collect::<Result<Vec<_>>>()?;
    writeln!(w, "t,x,p_hat,ci,rate_stat,price,impvol,gap")?;
    for &t in &cfg.maturities {
        let sample = mc::simulate_terminal(m, t, cfg)?;
        if sample.excluded > 0 {
            writeln!(err, "warning: t={t}: {} paths excluded", sample.excluded)?;
        }
        for (&x, &target) in xs.iter().zip(&targets) {
            let tail = sample.tail(x)?;
            let cell = mc::smile_cell(&sample, x, target)?;
            if tail.zero_hits {
                writeln!(err, "warning: t={t} x={x}: no path reached the tail")?;
            }
            if cell.moment_caveat {
                writeln!(err, "note: t={t} x={x}: call price assumes finite exponential moments")?;
            }
            let opt = |v: Option<f64>| v.map(|v| format!("{v:.10e}")).unwrap_or_default();
            writeln!(
                w,
                "{t},{x},{:.10e},{:.10e},{},{:.10e},{},{}",
                tail.p_hat,
                tail.ci_halfwidth,
                opt(tail.rate_stat),
                cell.price,
                opt(cell.implied_vol),
                opt(cell.gap)
            )?;
        }
    }
    Ok(())
}

fn cmd_simulate(
    config: &str,
    xs: &[f64],
    cfg: &MCConfig,
    csv: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let m = load_model(config)?;
    m.validate_short_time()?;
    cfg.validate()?;
    let mut w = create(csv)?;
    write_simulation_csv(&m, xs, cfg, &mut w, err)?;
    w.flush()?;
    writeln!(
        out,
        "paths={} steps={} seed={} maturities={} x={} out={}",
        cfg.n_paths,
        cfg.n_steps,
        cfg.seed,
        cfg.maturities.len(),
        xs.len(),
        csv.display()
    )?;
    Ok(EXIT_OK)
}

/// Outcome of one validation suite: summary lines and the first failure.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub lines: Vec<String>,
    pub failure: Option<String>,
}

impl SuiteOutcome {
    fn new() -> Self {
        Self { lines: Vec::new(), failure: None }
    }

    fn check(&mut self, ok: bool, line: String) {
        if !ok && self.failure.is_none() {
            self.failure = Some(line.clone());
        }
        self.lines.push(line);
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Random piecewise-linear path with `n` cells.
pub fn random_path(rng: &mut ChaCha8Rng, n: usize) -> Result<GridFunction> {
    let inc: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) / (n as f64).sqrt()).collect();
    GridFunction::from_increments(1.0, rng.random_range(-1.0..1.0), &inc)
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteOutcome> {
    let mut o = SuiteOutcome::new();
    match suite {
        Suite::Kernel => {
            let n = 256;
            let paths = vec![
                GridFunction::from_fn(1.0, n, |t| t.powf(0.45))?,
                GridFunction::from_fn(1.0, n, |t| (2.0 * std::f64::consts::PI * t).sin())?,
                GridFunction::from_fn(1.0, n, |t| t)?,
            ];
            let ladder: Vec<f64> = (0..7).map(|k| 0.5f64.powi(k)).collect();
            let rl = KernelSpec::riemann_liouville(0.3);
            let rep = keps_convergence_report(&rl, &paths, &ladder, rl.gamma())?;
            for r in &rep.rows {
                o.check(r.distance < 1e-12, format!("riemann_liouville path={} eps={} dist={:e}", r.path, r.eps, r.distance));
            }
            let gf = KernelSpec::gamma_fractional(-0.2, -1.0);
            let rep = keps_convergence_report(&gf, &paths[..1], &ladder, gf.gamma())?;
            let mut prev = f64::INFINITY;
            for r in &rep.rows {
                o.check(r.distance < prev, format!("gamma_fractional eps={} dist={:e}", r.eps, r.distance));
                prev = r.distance;
            }
        }
        Suite::Chen => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = (0.0f64, 0.0f64);
            for _ in 0..100 {
                let l = young_pair(&random_path(&mut rng, 256)?, &random_path(&mut rng, 256)?)?;
                worst.0 = worst.0.max(chen_defect(&l));
                worst.1 = worst.1.max(integration_by_parts_defect(&l));
            }
            o.check(worst.0 < 1e-10, format!("chen_defect max={:e} over 100 pairs", worst.0));
            o.check(worst.1 < 1e-10, format!("integration_by_parts_defect max={:e}", worst.1));
        }
        Suite::Gdelta => {
            let n = 1024;
            let a = GridFunction::from_fn(1.0, n, |t| (2.0 * std::f64::consts::PI * t).sin())?;
            let x = GridFunction::from_fn(1.0, n, |t| t + (4.0 * std::f64::consts::PI * t).sin() / 4.0)?;
            let beta = 0.3;
            let rep = gdelta_convergence(&a, &x, beta, &[0.5, 0.25, 0.1, 0.05, 0.02])?;
            let tol = 0.02 * holder_norm(&x, beta)?;
            for (d, h) in &rep.rows {
                o.lines.push(format!("delta={d} holder_dist={h:e}"));
            }
            o.check(rep.monotone, format!("monotone={}", rep.monotone));
            o.check(rep.final_distance < tol, format!("final={:e} tolerance={tol:e}", rep.final_distance));
        }
        Suite::Uet => {
            let cfg = MCConfig { n_paths: 20_000, n_steps: 256, maturities: vec![], seed, antithetic: false };
            let rep = mc::uet_tail_experiment(
                0.4,
                &[0.5, 0.2, 0.1],
                &[0.5, 0.75, 1.0, 1.25, 1.5],
                &[Integrand::SignSwitch, Integrand::ClippedBrownian],
                &cfg,
            )?;
            for f in &rep.fits {
                o.check(
                    f.passes(),
                    format!(
                        "{} slope={:.4} r2={:.4} cells={} domination={:.3}",
                        f.integrand.name(),
                        f.slope,
                        f.r_squared,
                        f.cells_used,
                        f.domination_ratio
                    ),
                );
            }
        }
    }
    Ok(o)
}

fn cmd_validate(suite: Suite, seed: u64, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let o = run_suite(suite, seed)?;
    let suite = format!("{suite:?}").to_lowercase();
    for l in &o.lines {
        writeln!(out, "{l}")?;
    }
    match &o.failure {
        None => {
            writeln!(out, "PASS {suite}")?;
            Ok(EXIT_OK)
        }
        Some(row) => {
            writeln!(err, "FAIL {suite}: {row}")?;
            Ok(EXIT_VALIDATION)
        }
    }
}
