//! Command-line front end for `hp-core`.
//!
//! JSON outputs carry `"schema": "hp/1"` and a provenance block. CSV outputs
//! start with `#`-prefixed provenance lines followed by a header row.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hp_core::combinatorics::{load_or_compute, CoeffTable};
use hp_core::cost::{psi_exact, psi_series};
use hp_core::geometry::{optimal_curve, OrderedPair};
use hp_core::key_inequalities::{BatchConfig, NumeratorCost, DEFAULT_ORDER, LOG_SD};
use hp_core::numerics::RngStream;
use hp_core::parametrix::kernel;
use hp_core::pricing::{price_by_density, price_by_mc, AsianContract, DensityKind, Payoff};
use hp_core::reference_densities::{langevin_density, simulate_paths, transition_density, Kde, PathBatch};
use hp_core::scalar_kernels::Basis;
use serde_json::{json, Value};

pub const SCHEMA: &str = "hp/1";
pub const CACHE_ENV: &str = "HP_CACHE_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hp_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "hp",
    version,
    about = "Cost function, parametrix kernels and densities for GBM and its time integral"
)]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Start `(t, x1, x2)` and end `(T, y1, y2)`.
#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x2: f64,
    #[arg(long = "T", allow_hyphen_values = true)]
    pub big_t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y2: f64,
}

impl PairArgs {
    fn pair(&self) -> Result<OrderedPair, CliError> {
        Ok(OrderedPair::from_coords(self.t, self.x1, self.x2, self.big_t, self.y1, self.y2)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and series cost for one pair or a CSV file of pairs.
    Psi {
        /// CSV with header `t,x1,x2,T,y1,y2` and an optional `sigma` column.
        #[arg(long, conflicts_with_all = ["t", "x1", "x2", "big_t", "y1", "y2"])]
        points: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x2: Option<f64>,
        #[arg(long = "T", allow_hyphen_values = true)]
        big_t: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y2: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Order of the series cost.
        #[arg(long = "N", default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Series coefficients `a_n, b_n, b~_n` for `n = 2..N`.
    Coeffs {
        #[arg(long = "N", default_value_t = 38)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Samples of the optimal control curve.
    Curve {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Parametrix kernel `H = u H1` at a pair (unit volatility).
    Kernel {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Numerical verification checks; exit code 2 when a threshold fails.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Transition densities.
    Density {
        #[command(subcommand)]
        kind: DensityCommand,
    },
    /// Arithmetic Asian call at zero interest rate.
    Price(PriceArgs),
    /// Simulate terminal values `(X1_T, X2_T)`.
    Simulate {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long = "T", default_value_t = 1.0, allow_hyphen_values = true)]
        big_t: f64,
        #[arg(long, default_value_t = 1.0)]
        x1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x2: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// `bin` writes a binary batch to `--out` (required); `csv` writes `x1,x2` rows.
        #[arg(long, value_enum, default_value_t = BatchFormat::Bin)]
        format: BatchFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BatchFormat {
    Bin,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// HJB residual of the cost on a 10^3 grid.
    Hjb {
        #[arg(long, default_value_t = 1e-4)]
        fd_step: f64,
    },
    /// Weighted kernel integrals tend to `weight(1) phi(1, 0)`.
    Delta,
    /// Key-inequality ratio batch and re-evaluation at the reference maximisers.
    Keyineq {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long = "order", alias = "N", default_value_t = DEFAULT_ORDER)]
        order: usize,
        /// Standard deviation of `ln chi` and `ln eta`.
        #[arg(long, default_value_t = LOG_SD)]
        log_sd: f64,
        #[arg(long, default_value_t = 100)]
        spot_check_every: usize,
        #[arg(long, default_value_t = 1000)]
        mc_check_every: usize,
        #[arg(long, default_value_t = 20_000)]
        mc_check_n: usize,
        /// Cost in the numerator kernels: the series bound or the exact cost.
        #[arg(long, value_enum, default_value_t = CostArg::Series)]
        cost: CostArg,
    },
    /// Mass of the Yor density.
    YorNorm {
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// Two closed forms of the cost on random pairs.
    DualForm {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Optimal-curve cost against the closed form, and energy conservation.
    Curve {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Closed-form transport correction against its path integral.
    UOracle {
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
    /// Convergence of the cost series above `eta = 1`.
    Series {
        #[arg(long = "N", default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    /// Kernel density estimate of simulated paths against the Yor density.
    YorKde {
        #[arg(long, default_value_t = 1_000_000)]
        paths: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        bandwidth_scale: f64,
    },
    /// Yor density over the parametrix kernel as the elapsed time shrinks.
    Varadhan,
    /// Density prices against Monte Carlo for fixed-strike calls.
    Pricing {
        #[arg(long, value_delimiter = ',', default_values_t = [0.8, 1.0, 1.2])]
        strikes: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        paths: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostArg {
    Series,
    Exact,
}

#[derive(Debug, Subcommand)]
pub enum DensityCommand {
    /// Exact transition density `p(t, x; T, y)`.
    Yor {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Gaussian density with the linearised covariance.
    Langevin {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Kernel density estimate from a batch written by `simulate`.
    Kde {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        y1: f64,
        #[arg(long, allow_hyphen_values = true)]
        y2: f64,
        #[arg(long, default_value_t = 1.0)]
        bandwidth_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PayoffKind {
    Floating,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriceMethod {
    Yor,
    Parametrix,
    Mc,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum)]
    pub payoff: PayoffKind,
    #[arg(long)]
    pub strike: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long = "T", default_value_t = 1.0, allow_hyphen_values = true)]
    pub big_t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x2: f64,
    #[arg(long, value_enum, default_value_t = PriceMethod::Yor)]
    pub method: PriceMethod,
    /// Monte Carlo paths.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Monte Carlo time steps.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Relative tolerance of the density quadrature.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

/// What a command produced.
pub struct Output {
    pub text: String,
    /// False when a verification threshold failed.
    pub passed: bool,
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn table(order: usize) -> Result<CoeffTable, CliError> {
    Ok(load_or_compute(order, cache_dir().as_deref())?)
}

fn provenance(cli: &Cli, tolerances: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "threads": rayon::current_num_threads(),
        "tolerances": tolerances,
    })
}

fn json_doc(cli: &Cli, command: &str, tolerances: Value, body: Value) -> Result<String, CliError> {
    let mut doc = json!({"schema": SCHEMA, "command": command, "provenance": provenance(cli, tolerances)});
    if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn csv_doc(cli: &Cli, command: &str, tolerances: &Value, header: &str, rows: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema: {SCHEMA}");
    let _ = writeln!(s, "# command: {command}");
    let _ = writeln!(s, "# version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# seed: {}", cli.seed);
    let _ = writeln!(s, "# tolerances: {tolerances}");
    let _ = writeln!(s, "{header}");
    for r in rows {
        let _ = writeln!(s, "{r}");
    }
    s
}

fn ok(text: String) -> Output {
    Output { text, passed: true }
}

/// Runs the parsed command line.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Psi { points, t, x1, x2, big_t, y1, y2, sigma, order, format } => {
            let rows = match points {
                Some(path) => read_points(path, *sigma)?,
                None => match (t, x1, x2, big_t, y1, y2) {
                    (Some(t), Some(x1), Some(x2), Some(bt), Some(y1), Some(y2)) => {
                        vec![([*t, *x1, *x2, *bt, *y1, *y2], *sigma)]
                    }
                    _ => {
                        return Err(CliError::Usage("psi needs --points or all of --t --x1 --x2 --T --y1 --y2".into()))
                    }
                },
            };
            cmd_psi(cli, &rows, *order, *format)
        }
        Command::Coeffs { order, format } => cmd_coeffs(cli, *order, *format),
        Command::Curve { pair, points, format } => {
            let c = optimal_curve(&pair.pair()?, *points)?;
            let tol = json!({});
            Ok(ok(match format {
                Format::Json => json_doc(cli, "curve", tol, json!({"curve": c}))?,
                Format::Csv => {
                    let body = c.to_csv();
                    let mut lines = body.lines();
                    let header = lines.next().unwrap_or_default().to_string();
                    csv_doc(cli, "curve", &tol, &header, &lines.map(str::to_string).collect::<Vec<_>>())
                }
            }))
        }
        Command::Kernel { pair } => {
            let k = kernel(&pair.pair()?)?;
            Ok(ok(json_doc(cli, "kernel", json!({}), json!({"kernel": k}))?))
        }
        Command::Verify { check } => cmd_verify(cli, check),
        Command::Density { kind } => cmd_density(cli, kind),
        Command::Price(p) => cmd_price(cli, p),
        Command::Simulate { t0, big_t, x1, x2, sigma, n, steps, format } => {
            let b = simulate_paths(*t0, [*x1, *x2], *big_t, *sigma, *n, *steps, &RngStream::new(cli.seed, 0))?;
            match format {
                BatchFormat::Bin => {
                    let Some(out) = &cli.out else {
                        return Err(CliError::Usage("simulate --format bin needs --out".into()));
                    };
                    let f = std::io::BufWriter::new(std::fs::File::create(out)?);
                    b.write_to(f)?;
                    // the batch is the output; the summary goes to stdout
                    let doc = json_doc(
                        cli,
                        "simulate",
                        json!({}),
                        json!({"path": out, "n_paths": b.n_paths, "n_steps": b.n_steps}),
                    )?;
                    print!("{doc}");
                    Ok(ok(String::new()))
                }
                BatchFormat::Csv => {
                    let rows: Vec<String> = b.x1.iter().zip(&b.x2).map(|(a, c)| format!("{a},{c}")).collect();
                    Ok(ok(csv_doc(cli, "simulate", &json!({}), "x1,x2", &rows)))
                }
            }
        }
    }
}

type PointRow = ([f64; 6], f64);

/// Parses a points CSV; errors name the offending line.
pub fn parse_points(text: &str, default_sigma: f64) -> Result<Vec<PointRow>, CliError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let Some((_, header)) = lines.next() else {
        return Err(CliError::Usage("points file is empty".into()));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let idx = |name: &str| cols.iter().position(|c| *c == name);
    let mut pos = [0usize; 6];
    for (k, name) in ["t", "x1", "x2", "T", "y1", "y2"].iter().enumerate() {
        pos[k] = idx(name).ok_or_else(|| CliError::Usage(format!("points header lacks column `{name}`")))?;
    }
    let sigma_col = idx("sigma");
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(CliError::Usage(format!(
                "line {}: expected {} fields, got {}",
                i + 1,
                cols.len(),
                fields.len()
            )));
        }
        let num = |j: usize| {
            fields[j]
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("line {}: `{}` is not a number", i + 1, fields[j])))
        };
        let mut v = [0.0; 6];
        for k in 0..6 {
            v[k] = num(pos[k])?;
        }
        let sigma = match sigma_col {
            Some(j) => num(j)?,
            None => default_sigma,
        };
        OrderedPair::from_coords(v[0], v[1], v[2], v[3], v[4], v[5])
            .map_err(|e| CliError::Usage(format!("line {}: {e}", i + 1)))?;
        rows.push((v, sigma));
    }
    Ok(rows)
}

fn read_points(path: &Path, sigma: f64) -> Result<Vec<PointRow>, CliError> {
    parse_points(&std::fs::read_to_string(path)?, sigma)
}

fn cmd_psi(cli: &Cli, rows: &[PointRow], order: usize, format: Format) -> Result<Output, CliError> {
    let table = table(order)?;
    let mut out = Vec::new();
    for (v, sigma) in rows {
        let p = OrderedPair::from_coords(v[0], v[1], v[2], v[3], v[4], v[5])?;
        let e = psi_exact(&p, *sigma)?;
        let n = psi_series(&p, *sigma, order, Basis::Gn, &table)?;
        out.push((v, *sigma, e, n));
    }
    let tol = json!({"N": order});
    Ok(ok(match format {
        Format::Csv => {
            let lines: Vec<String> = out
                .iter()
                .map(|(v, s, e, n)| {
                    format!(
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        v[0], v[1], v[2], v[3], v[4], v[5], s, e.psi, n, e.h, e.energy
                    )
                })
                .collect();
            csv_doc(cli, "psi", &tol, "t,x1,x2,T,y1,y2,sigma,psi_exact,psi_N,h,E", &lines)
        }
        Format::Json => {
            let rows: Vec<Value> = out
                .iter()
                .map(|(v, s, e, n)| {
                    json!({"t": v[0], "x1": v[1], "x2": v[2], "T": v[3], "y1": v[4], "y2": v[5], "sigma": s,
                           "psi_exact": e.psi, "psi_N": n, "h": e.h, "E": e.energy})
                })
                .collect();
            json_doc(cli, "psi", tol, json!({"rows": rows}))?
        }
    }))
}

fn cmd_coeffs(cli: &Cli, order: usize, format: Format) -> Result<Output, CliError> {
    let start = std::time::Instant::now();
    let t = table(order)?;
    let runtime = start.elapsed().as_secs_f64();
    let tol = json!({"arithmetic": "exact rational"});
    Ok(ok(match format {
        Format::Csv => {
            let rows: Vec<String> =
                (2..=order).map(|n| format!("{n},{},{},{}", t.a(n), t.b(n), t.b_tilde(n))).collect();
            csv_doc(cli, "coeffs", &tol, "n,a,b,b_tilde", &rows)
        }
        Format::Json => {
            let rows: Vec<Value> = (2..=order)
                .map(|n| {
                    json!({"n": n, "a": t.a(n), "b": t.b(n), "b_tilde": t.b_tilde(n),
                           "a_exact": t.a[n].to_string(), "b_exact": t.b[n].to_string()})
                })
                .collect();
            json_doc(cli, "coeffs", tol, json!({"N": order, "runtime_s": runtime, "coefficients": rows}))?
        }
    }))
}

fn cmd_verify(cli: &Cli, check: &VerifyCommand) -> Result<Output, CliError> {
    let seed = cli.seed;
    let (name, tol, c) = match check {
        VerifyCommand::Hjb { fd_step } => ("hjb", json!({"fd_step": fd_step}), checks::hjb(*fd_step)?),
        VerifyCommand::Delta => ("delta", json!({"quadrature_rel": 1e-8}), checks::delta()?),
        VerifyCommand::Keyineq { n, tau, order, log_sd, spot_check_every, mc_check_every, mc_check_n, cost } => {
            if *n == 0 {
                return Err(CliError::Usage("--n must be positive".into()));
            }
            let cfg = BatchConfig {
                n: *n,
                tau: *tau,
                order: *order,
                seed,
                log_sd: *log_sd,
                spot_check_every: *spot_check_every,
                mc_check_every: *mc_check_every,
                mc_check_n: *mc_check_n,
                cost: match cost {
                    CostArg::Series => NumeratorCost::Series,
                    CostArg::Exact => NumeratorCost::Exact,
                },
            };
            let t = table(*order)?;
            ("keyineq", json!({"quadrature_rel": 1e-6}), checks::keyineq(&cfg, &t)?)
        }
        VerifyCommand::YorNorm { s } => {
            ("yor-norm", json!({"yor_rel": 1e-9, "quadrature_rel": 1e-6}), checks::yor_norm(*s)?)
        }
        VerifyCommand::DualForm { n } => ("dual-form", json!({}), checks::dual_form(*n, seed)?),
        VerifyCommand::Curve { n, points } => ("curve", json!({}), checks::curve(*n, seed, *points)?),
        VerifyCommand::UOracle { points } => {
            ("u-oracle", json!({"path_integral_rel": 1e-12}), checks::u_oracle(*points)?)
        }
        VerifyCommand::Series { order } => ("series", json!({}), checks::series(&table(*order)?)?),
        VerifyCommand::YorKde { paths, steps, bandwidth_scale } => {
            ("yor-kde", json!({"yor_rel": 1e-9}), checks::yor_kde(*paths, *steps, seed, *bandwidth_scale)?)
        }
        VerifyCommand::Varadhan => ("varadhan", json!({"yor_rel": 1e-9}), checks::varadhan()?),
        VerifyCommand::Pricing { strikes, paths, steps } => {
            ("pricing", json!({"quadrature_rel": 1e-6}), checks::pricing(strikes, *paths, *steps, seed)?)
        }
    };
    let mut body = c.body;
    body["passed"] = json!(c.passed);
    Ok(Output {
        text: json_doc(cli, &format!("verify {name}"), tol, json!({"check": name, "result": body}))?,
        passed: c.passed,
    })
}

fn cmd_density(cli: &Cli, kind: &DensityCommand) -> Result<Output, CliError> {
    let (name, body) = match kind {
        DensityCommand::Yor { pair, sigma } => {
            let p = pair.pair()?;
            ("density yor", json!({"sigma": sigma, "density": transition_density(&p.z(), &p.w(), *sigma)?}))
        }
        DensityCommand::Langevin { pair, sigma } => {
            let p = pair.pair()?;
            let d = langevin_density(p.tau(), [pair.x1, pair.x2], [pair.y1, pair.y2], *sigma)?;
            ("density langevin", json!({"sigma": sigma, "density": d}))
        }
        DensityCommand::Kde { input, y1, y2, bandwidth_scale } => {
            let b = PathBatch::read_from(std::io::BufReader::new(std::fs::File::open(input)?))?;
            let k = Kde::new(&b, *bandwidth_scale)?;
            ("density kde", json!({"n_paths": b.n_paths, "bandwidths": k.bandwidths(), "density": k.density(*y1, *y2)}))
        }
    };
    Ok(ok(json_doc(cli, name, json!({}), body)?))
}

fn cmd_price(cli: &Cli, p: &PriceArgs) -> Result<Output, CliError> {
    let payoff = match (p.payoff, p.strike) {
        (PayoffKind::Floating, None) => Payoff::FloatingCall,
        (PayoffKind::Fixed, Some(strike)) => Payoff::FixedCall { strike },
        (PayoffKind::Fixed, None) => return Err(CliError::Usage("fixed payoff needs --strike".into())),
        (PayoffKind::Floating, Some(_)) => return Err(CliError::Usage("floating payoff takes no --strike".into())),
    };
    let c = AsianContract::new(payoff, p.t0, p.big_t, [p.x1, p.x2], p.sigma)?;
    let (method, res, tol) = match p.method {
        PriceMethod::Yor => ("yor", price_by_density(&c, DensityKind::Yor, p.tol)?, json!({"quadrature_rel": p.tol})),
        PriceMethod::Parametrix => {
            ("parametrix", price_by_density(&c, DensityKind::ParametrixH, p.tol)?, json!({"quadrature_rel": p.tol}))
        }
        PriceMethod::Mc => ("mc", price_by_mc(&c, p.n, p.steps, &RngStream::new(cli.seed, 0))?, json!({})),
    };
    let mut params = serde_json::to_value(c)?;
    if p.method == PriceMethod::Mc {
        params["paths"] = json!(p.n);
        params["steps"] = json!(p.steps);
    }
    let body =
        json!({"price": res.price, "err": res.err, "converged": res.converged, "method": method, "params": params});
    Ok(ok(json_doc(cli, "price", tol, body)?))
}
