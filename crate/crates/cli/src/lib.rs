//! Command line for the longrun toolkit.
//!
//! Every subcommand accepts its switches directly or via `--config file.json`
//! (file fields fill in switches left unset; explicit switches win). Tabular
//! results go to `--out` as RFC-4180 CSV (stdout when omitted); a JSON verdict
//! summary goes to stdout (stderr when the CSV itself occupies stdout), and
//! errors are reported on stderr as `{category, message}`.
//!
//! Exit codes: 0 all verdicts pass, 1 usage or configuration error,
//! 2 at least one statistical verdict failed, 3 numerical failure
//! (truncation, convergence, boundary hits).

use clap::{Args, Parser, Subcommand};
use longrun::harness::{
    self, CoeffConfig, FcltOptions, InnovConfig, IsoRateOptions, RateTheorem, SeedSpace,
    TruncPurpose,
};
use longrun::{coeffs, isotone, linproc, Error};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fs;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "longrun",
    about = "Linear processes with dependent innovations: normalizers, coupling, limit laws, isotonic regression",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// v_n², s_n² and the regular-variation exponent over a dyadic grid
    Normalizers(NormalizersArgs),
    /// Deterministic covariance ratio against its scaling-limit form
    CovLimit(CovLimitArgs),
    /// Sample scaled partial-sum paths (optionally with the coupled
    /// martingale surrogate)
    Simulate(SimulateArgs),
    /// Marginal-law checks of the normalized partial sums plus array
    /// diagnostics
    Fclt(FcltArgs),
    /// Martingale-coupling decay along a grid of horizons
    Approx(ApproxArgs),
    /// Inequality audits: moment, dyadic maximal, coboundary, series
    /// comparison
    Ineq(IneqArgs),
    /// Draws of argmin { B_H(s) + s² } with summary quantiles
    Chernoff(ChernoffArgs),
    /// Isotonic least squares on a single-column CSV
    IsoFit(IsoFitArgs),
    /// Convergence rate and limit law of the isotonic estimator
    IsoRate(IsoRateArgs),
    /// Dependence-condition audit (innovation projections and coefficient
    /// conditions)
    AuditConditions(AuditArgs),
}

/// Merge helper: switch value wins, config-file value fills the gap.
macro_rules! merge_opt {
    ($flags:expr, $file:expr, $($field:ident),+ $(,)?) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field.take(); } )+
    };
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct CoeffArgs {
    /// fractional|power_diff|power_tail|log_damped|alternating_heyde|harmonic|dirac|finite_ma
    #[arg(long)]
    kind: Option<String>,
    /// memory parameter of the fractional kind, in (0, 1/2)
    #[arg(long)]
    d: Option<f64>,
    /// exponent of the power kinds
    #[arg(long)]
    alpha: Option<f64>,
    /// decay exponent of the alternating kind, in (1/2, 1]
    #[arg(long)]
    p: Option<f64>,
    /// log-damping exponent of the alternating kind
    #[arg(long)]
    log_exp: Option<f64>,
    /// coefficients of the finite_ma kind
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

impl CoeffArgs {
    fn merge(&mut self, mut file: CoeffArgs) {
        merge_opt!(self, file, kind, d, alpha, p, log_exp, values);
    }

    fn to_config(&self) -> Result<CoeffConfig, String> {
        let kind = self.kind.as_deref().ok_or("missing --kind")?;
        let need = |v: Option<f64>, flag: &str| v.ok_or(format!("{kind} needs --{flag}"));
        Ok(match kind {
            "fractional" => CoeffConfig::Fractional { d: need(self.d, "d")? },
            "power_diff" => CoeffConfig::PowerDiff { alpha: need(self.alpha, "alpha")? },
            "power_tail" => CoeffConfig::PowerTail { alpha: need(self.alpha, "alpha")? },
            "log_damped" => CoeffConfig::LogDamped { alpha: need(self.alpha, "alpha")? },
            "alternating_heyde" => CoeffConfig::AlternatingHeyde {
                p: need(self.p, "p")?,
                q: self.log_exp.unwrap_or(0.0),
            },
            "harmonic" => CoeffConfig::Harmonic,
            "dirac" => CoeffConfig::Dirac,
            "finite_ma" => CoeffConfig::FiniteMa {
                values: self.values.clone().ok_or("finite_ma needs --values")?,
            },
            other => return Err(format!("unknown coefficient kind `{other}`")),
        })
    }
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct InnovArgs {
    /// iid_gaussian|iid_student_t|causal_geometric|causal_finite|markov_two_state
    #[arg(long)]
    innov: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    /// degrees of freedom for iid_student_t (> 4)
    #[arg(long)]
    nu: Option<f64>,
    /// geometric filter ratio, |ratio| < 1
    #[arg(long)]
    ratio: Option<f64>,
    /// finite filter coefficients
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// stay probability of the two-state chain
    #[arg(long)]
    stay: Option<f64>,
}

impl InnovArgs {
    fn merge(&mut self, mut file: InnovArgs) {
        merge_opt!(self, file, innov, sigma, nu, ratio, theta, stay);
    }

    fn to_config(&self) -> Result<InnovConfig, String> {
        let kind = self.innov.as_deref().unwrap_or("iid_gaussian");
        Ok(match kind {
            "iid_gaussian" => InnovConfig::IidGaussian { sigma: self.sigma.unwrap_or(1.0) },
            "iid_student_t" => InnovConfig::IidStudentT {
                nu: self.nu.ok_or("iid_student_t needs --nu")?,
            },
            "causal_geometric" => InnovConfig::CausalGeometric {
                ratio: self.ratio.ok_or("causal_geometric needs --ratio")?,
                sigma: self.sigma.unwrap_or(1.0),
            },
            "causal_finite" => InnovConfig::CausalFinite {
                theta: self.theta.clone().ok_or("causal_finite needs --theta")?,
                sigma: self.sigma.unwrap_or(1.0),
            },
            "markov_two_state" => {
                InnovConfig::MarkovTwoState { stay: self.stay.unwrap_or(0.9) }
            }
            other => return Err(format!("unknown innovation kind `{other}`")),
        })
    }
}

/// Parse `lo:hi:dyadic` (powers of two from lo to hi) or a comma list.
fn parse_n_grid(s: &str) -> Result<Vec<usize>, String> {
    if let Some(rest) = s.strip_suffix(":dyadic") {
        let (lo, hi) = rest
            .split_once(':')
            .ok_or("expected lo:hi:dyadic")?;
        let lo: usize = lo.parse().map_err(|e| format!("bad n-grid: {e}"))?;
        let hi: usize = hi.parse().map_err(|e| format!("bad n-grid: {e}"))?;
        if lo < 1 || hi < lo {
            return Err("need 1 <= lo <= hi".into());
        }
        let mut grid = Vec::new();
        let mut n = lo;
        while n <= hi {
            grid.push(n);
            n *= 2;
        }
        return Ok(grid);
    }
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("bad n-grid entry: {e}")))
        .collect()
}

fn parse_t_grid(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad grid entry: {e}")))
        .collect()
}

// ------------------------------------------------------------- subcommands

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct NormalizersArgs {
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    /// `lo:hi:dyadic` or a comma list
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// tolerance on |beta_hat - beta|
    #[arg(long)]
    beta_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct CovLimitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    #[arg(long)]
    n: Option<usize>,
    /// comma list of times in (0, 1]
    #[arg(long)]
    grid: Option<String>,
    /// variation exponent for the target (defaults to the model's)
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    #[command(flatten)]
    #[serde(flatten)]
    innov_args: InnovArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// attach the coupled martingale path
    #[arg(long)]
    martingale: bool,
    /// v_n|s_n|sqrt_n
    #[arg(long)]
    normalizer: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct FcltArgs {
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    #[command(flatten)]
    #[serde(flatten)]
    innov_args: InnovArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    meta_runs: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct ApproxArgs {
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    #[command(flatten)]
    #[serde(flatten)]
    innov_args: InnovArgs,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct IneqArgs {
    /// moment|dyadic|coboundary|series
    #[arg(long)]
    check: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    #[command(flatten)]
    #[serde(flatten)]
    innov_args: InnovArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_grid: Option<String>,
    /// moment order
    #[arg(long)]
    q: Option<f64>,
    /// psi: linear|power:<q>|log_power:<alpha>
    #[arg(long)]
    psi: Option<String>,
    /// dyadic levels N (horizon 2^N)
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct ChernoffArgs {
    /// Hurst index in (0, 1)
    #[arg(long = "H", visible_alias = "hurst")]
    hurst: Option<f64>,
    /// half-width M of the search window
    #[arg(long = "M", visible_alias = "half-width")]
    half_width: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct IsoFitArgs {
    /// single-column CSV of observations
    #[arg(long)]
    input: Option<PathBuf>,
    /// evaluation points of the step estimator, in (0, 1]
    #[arg(long)]
    eval_t: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct IsoRateArgs {
    /// short_memory|unit_beta|long_memory
    #[arg(long)]
    theorem: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    #[command(flatten)]
    #[serde(flatten)]
    innov_args: InnovArgs,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    /// slope of the trend function phi(x) = slope · x
    #[arg(long)]
    phi_slope: Option<f64>,
    #[arg(long)]
    slope_band: Option<f64>,
    #[arg(long)]
    ks_meta: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
struct AuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    coeff: CoeffArgs,
    #[command(flatten)]
    #[serde(flatten)]
    innov_args: InnovArgs,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

// ------------------------------------------------------------------ plumbing

struct Outcome {
    pass: bool,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: serde_json::Value,
}

fn usage_error(msg: &str) -> (i32, serde_json::Value) {
    (1, json!({ "category": "usage", "message": msg }))
}

fn error_exit(e: &Error) -> (i32, serde_json::Value) {
    let (code, category) = match e {
        Error::InvalidParameter(_) | Error::Io(_) | Error::SizeCap { .. } => (1, "config"),
        Error::MomentOrderExceeded { .. } => (1, "config"),
        Error::TruncationFailure { .. } => (3, "truncation"),
        Error::FixedPointDiverged { .. } => (3, "convergence"),
        Error::BoundaryHit { .. } => (3, "boundary"),
        Error::Numerical(_) => (3, "numerical"),
    };
    (code, json!({ "category": category, "message": e.to_string() }))
}

fn load_config<T: DeserializeOwned>(path: &PathBuf) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("config read failed: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("config parse failed: {e}"))
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.12e}")
    }
}

fn write_outputs(out: &Option<PathBuf>, outcome: &Outcome) -> Result<(), Error> {
    let render = |w: &mut dyn std::io::Write| -> Result<(), Error> {
        let mut csv = csv::WriterBuilder::new().from_writer(w);
        csv.write_record(&outcome.header).map_err(io_err)?;
        for row in &outcome.rows {
            csv.write_record(row).map_err(io_err)?;
        }
        csv.flush()?;
        Ok(())
    };
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            render(&mut f)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("serializable"));
        }
        None => {
            let stdout = std::io::stdout();
            render(&mut stdout.lock())?;
            eprintln!("{}", serde_json::to_string_pretty(&outcome.summary).expect("serializable"));
        }
    }
    Ok(())
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Run the CLI against an argument vector and return the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", json!({ "category": "usage", "message": e.to_string() }));
            return 1;
        }
    };

    let result = match cli.command {
        Command::Normalizers(a) => cmd_normalizers(a),
        Command::CovLimit(a) => cmd_cov_limit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fclt(a) => cmd_fclt(a),
        Command::Approx(a) => cmd_approx(a),
        Command::Ineq(a) => cmd_ineq(a),
        Command::Chernoff(a) => cmd_chernoff(a),
        Command::IsoFit(a) => cmd_iso_fit(a),
        Command::IsoRate(a) => cmd_iso_rate(a),
        Command::AuditConditions(a) => cmd_audit(a),
    };

    match result {
        Ok((out, outcome)) => {
            if let Err(e) = write_outputs(&out, &outcome) {
                let (code, msg) = error_exit(&e);
                eprintln!("{msg}");
                return code;
            }
            if outcome.pass {
                0
            } else {
                2
            }
        }
        Err((code, msg)) => {
            eprintln!("{msg}");
            code
        }
    }
}

type CmdResult = Result<(Option<PathBuf>, Outcome), (i32, serde_json::Value)>;

fn fail(e: Error) -> (i32, serde_json::Value) {
    error_exit(&e)
}

fn cmd_normalizers(mut a: NormalizersArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: NormalizersArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        merge_opt!(a, file, n_grid, rel_tol, beta_tol, out);
    }
    let cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
    let model = cfg.build().map_err(fail)?;
    let grid = parse_n_grid(a.n_grid.as_deref().unwrap_or("256:65536:dyadic"))
        .map_err(|m| usage_error(&m))?;
    let n_max = *grid.iter().max().unwrap_or(&1024);
    let tr = match a.rel_tol {
        Some(rt) => coeffs::Truncation::new(rt),
        None => harness::default_truncation(&model, n_max, TruncPurpose::Normalizers),
    };
    let rep =
        harness::run_normalizers(&model, &grid, &tr, a.beta_tol.unwrap_or(0.05)).map_err(fail)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                cfg.label().to_string(),
                cfg.params_label(),
                r.n.to_string(),
                fmt(r.v2),
                fmt(r.s2),
                fmt(rep.beta_hat),
            ]
        })
        .collect();
    Ok((
        a.out,
        Outcome {
            pass: rep.pass,
            header: vec!["kind", "params", "n", "v2", "s2", "beta_hat"],
            rows,
            summary: json!({
                "beta_hat": rep.beta_hat,
                "beta_target": rep.beta_target,
                "ratios_at_largest_n": rep.ratios,
                "pass": rep.pass,
            }),
        },
    ))
}

fn cmd_cov_limit(mut a: CovLimitArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: CovLimitArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        merge_opt!(a, file, n, grid, beta, rel_tol, tol, out);
    }
    let cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
    let model = cfg.build().map_err(fail)?;
    let n = a.n.unwrap_or(1 << 14);
    let grid = match &a.grid {
        Some(g) => parse_t_grid(g).map_err(|m| usage_error(&m))?,
        None => vec![0.2, 0.4, 0.6, 0.8, 1.0],
    };
    let beta = a
        .beta
        .or_else(|| model.analytic_beta())
        .ok_or_else(|| usage_error("model has no analytic exponent; pass --beta"))?;
    let tr = match a.rel_tol {
        Some(rt) => coeffs::Truncation::new(rt),
        None => harness::default_truncation(&model, n, TruncPurpose::Normalizers),
    };
    let rep = harness::run_cov_limit(&model, n, &grid, beta, &tr, a.tol.unwrap_or(0.05))
        .map_err(fail)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| vec![fmt(r.s), fmt(r.t), fmt(r.ratio), fmt(r.target), fmt(r.abs_err)])
        .collect();
    Ok((
        a.out,
        Outcome {
            pass: rep.pass,
            header: vec!["s", "t", "ratio", "target", "abs_err"],
            rows,
            summary: json!({
                "n": n, "beta": beta, "max_abs_err": rep.max_abs_err,
                "tol": rep.tol, "pass": rep.pass,
            }),
        },
    ))
}

fn cmd_simulate(mut a: SimulateArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: SimulateArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        a.innov_args.merge(std::mem::take(&mut file.innov_args));
        merge_opt!(a, file, n, grid, reps, seed, normalizer, rel_tol, out);
        a.martingale |= file.martingale;
    }
    let coeff_cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
    let model = coeff_cfg.build().map_err(fail)?;
    let innov = a.innov_args.to_config().map_err(|m| usage_error(&m))?.build().map_err(fail)?;
    let n = a.n.unwrap_or(1 << 10);
    let grid = match &a.grid {
        Some(g) => parse_t_grid(g).map_err(|m| usage_error(&m))?,
        None => (1..=10).map(|k| k as f64 / 10.0).collect(),
    };
    let normalizer = match a.normalizer.as_deref().unwrap_or("v_n") {
        "v_n" => linproc::Normalizer::VN,
        "s_n" => linproc::Normalizer::SN,
        "sqrt_n" => linproc::Normalizer::SqrtN,
        other => return Err(usage_error(&format!("unknown normalizer `{other}`"))),
    };
    let tr = match a.rel_tol {
        Some(rt) => coeffs::Truncation::new(rt),
        None => harness::default_truncation(&model, n, TruncPurpose::Simulation),
    };
    let seeds = SeedSpace::new(a.seed.unwrap_or(0));
    let rows = harness::run_simulate(
        &model,
        &innov,
        n,
        &grid,
        normalizer,
        a.reps.unwrap_or(100),
        a.martingale,
        &seeds,
        &tr,
    )
    .map_err(fail)?;
    let csv_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.rep.to_string(),
                fmt(r.t),
                fmt(r.s_scaled),
                r.t_scaled.map(fmt).unwrap_or_default(),
            ]
        })
        .collect();
    Ok((
        a.out,
        Outcome {
            pass: true,
            header: vec!["rep", "t", "S_scaled", "T_scaled"],
            rows: csv_rows,
            summary: json!({ "n": n, "rows": rows.len(), "pass": true }),
        },
    ))
}

fn cmd_fclt(mut a: FcltArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: FcltArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        a.innov_args.merge(std::mem::take(&mut file.innov_args));
        merge_opt!(a, file, n, grid, reps, meta_runs, alpha, seed, rel_tol, out);
    }
    let coeff_cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
    let model = coeff_cfg.build().map_err(fail)?;
    let innov = a.innov_args.to_config().map_err(|m| usage_error(&m))?.build().map_err(fail)?;
    let n = a.n.unwrap_or(1 << 12);
    let grid = match &a.grid {
        Some(g) => parse_t_grid(g).map_err(|m| usage_error(&m))?,
        None => vec![0.25, 0.5, 0.75, 1.0],
    };
    let meta = a.meta_runs.unwrap_or(20);
    let opts = FcltOptions {
        reps: a.reps.unwrap_or(2000),
        meta_runs: meta,
        required: (meta * 9).div_ceil(10),
        alpha: a.alpha.unwrap_or(0.01),
    };
    let tr = match a.rel_tol {
        Some(rt) => coeffs::Truncation::new(rt),
        None => harness::default_truncation(&model, n, TruncPurpose::Simulation),
    };
    let diag: Vec<usize> = std::iter::successors(Some(n / 16), |&k| Some(k * 2))
        .take_while(|&k| k <= n)
        .filter(|&k| k >= 16)
        .collect();
    let seeds = SeedSpace::new(a.seed.unwrap_or(0));
    let rep = harness::run_fclt(&model, &innov, n, &grid, &diag, &seeds, &opts, &tr).map_err(fail)?;
    let mut rows: Vec<Vec<String>> = rep
        .per_t
        .iter()
        .map(|(t, v)| {
            vec![
                "ks_meta".into(),
                fmt(*t),
                v.passes.to_string(),
                v.runs.to_string(),
                if v.pass { "pass".into() } else { "fail".into() },
            ]
        })
        .collect();
    for (dn, max_c, incr) in &rep.diagnostics {
        rows.push(vec!["diag".into(), dn.to_string(), fmt(*max_c), fmt(*incr), String::new()]);
    }
    Ok((
        a.out,
        Outcome {
            pass: rep.pass,
            header: vec!["row", "t_or_n", "value1", "value2", "verdict"],
            rows,
            summary: serde_json::to_value(&rep).expect("serializable"),
        },
    ))
}

fn cmd_approx(mut a: ApproxArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: ApproxArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        a.innov_args.merge(std::mem::take(&mut file.innov_args));
        merge_opt!(a, file, n_grid, reps, seed, rel_tol, out);
    }
    let coeff_cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
    let model = coeff_cfg.build().map_err(fail)?;
    let innov = a.innov_args.to_config().map_err(|m| usage_error(&m))?.build().map_err(fail)?;
    let grid = parse_n_grid(a.n_grid.as_deref().unwrap_or("256:4096:dyadic"))
        .map_err(|m| usage_error(&m))?;
    let n_max = *grid.iter().max().unwrap_or(&1024);
    let tr = match a.rel_tol {
        Some(rt) => coeffs::Truncation::new(rt),
        None => harness::default_truncation(&model, n_max, TruncPurpose::Simulation),
    };
    let seeds = SeedSpace::new(a.seed.unwrap_or(0));
    let psi = longrun::Orlicz::power(2.0).map_err(fail)?;
    let rep = longrun::ineq::verify_martingale_approx(
        &model,
        &innov,
        &grid,
        &[1, 2, 4, 8, 16, 32],
        &psi,
        a.reps.unwrap_or(1000),
        &seeds,
        &tr,
    )
    .map_err(fail)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt(r.max_diff_l2),
                fmt(r.s_n),
                fmt(r.ratio),
                fmt(r.endpoint_orlicz),
            ]
        })
        .collect();
    Ok((
        a.out,
        Outcome {
            pass: rep.strictly_decreasing,
            header: vec!["n", "max_diff_l2", "s_n", "ratio", "endpoint_orlicz"],
            rows,
            summary: serde_json::to_value(&rep).expect("serializable"),
        },
    ))
}

fn parse_psi(spec: &str) -> Result<longrun::Orlicz, String> {
    if spec == "linear" {
        return longrun::Orlicz::power(1.0).map_err(|e| e.to_string());
    }
    if let Some(q) = spec.strip_prefix("power:") {
        let q: f64 = q.parse().map_err(|e| format!("bad psi: {e}"))?;
        return longrun::Orlicz::power(q).map_err(|e| e.to_string());
    }
    if let Some(alpha) = spec.strip_prefix("log_power:") {
        let alpha: f64 = alpha.parse().map_err(|e| format!("bad psi: {e}"))?;
        return longrun::Orlicz::log_power(alpha).map_err(|e| e.to_string());
    }
    Err(format!("unknown psi `{spec}` (linear | power:<q> | log_power:<alpha>)"))
}

fn cmd_ineq(mut a: IneqArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: IneqArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        a.innov_args.merge(std::mem::take(&mut file.innov_args));
        merge_opt!(a, file, check, n, n_grid, q, psi, levels, reps, seed, rel_tol, out);
    }
    let check = a.check.as_deref().unwrap_or("moment");
    let coeff_cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
    let model = coeff_cfg.build().map_err(fail)?;
    let innov = a.innov_args.to_config().map_err(|m| usage_error(&m))?.build().map_err(fail)?;
    let seeds = SeedSpace::new(a.seed.unwrap_or(0));
    let reps = a.reps.unwrap_or(10_000);
    let n = a.n.unwrap_or(1 << 10);
    let tr = match a.rel_tol {
        Some(rt) => coeffs::Truncation::new(rt),
        None => harness::default_truncation(&model, n, TruncPurpose::Simulation),
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    let pass;
    let summary;
    match check {
        "moment" => {
            let grid = match &a.n_grid {
                Some(g) => parse_n_grid(g).map_err(|m| usage_error(&m))?,
                None => vec![1, 16, 256, 1024],
            };
            let rep = longrun::ineq::verify_moment_inequality(
                &model,
                &innov,
                &grid,
                a.q.unwrap_or(2.0),
                reps,
                &seeds,
                &tr,
            )
            .map_err(fail)?;
            for r in &rep.rows {
                rows.push(vec![
                    "moment".into(),
                    r.m.to_string(),
                    fmt(r.empirical_norm),
                    fmt(r.bound),
                    fmt(r.ratio),
                    if r.pass { "pass".into() } else { "fail".into() },
                ]);
            }
            pass = rep.pass;
            summary = serde_json::to_value(&rep).expect("serializable");
        }
        "dyadic" => {
            let psi = parse_psi(a.psi.as_deref().unwrap_or("linear"))
                .map_err(|m| usage_error(&m))?;
            let rep = longrun::ineq::dyadic_max_bound(
                &model,
                &innov,
                &psi,
                a.q.unwrap_or(2.0),
                a.levels.unwrap_or(10),
                reps,
                &seeds,
                &tr,
            )
            .map_err(fail)?;
            rows.push(vec![
                "dyadic".into(),
                (1usize << rep.n_levels).to_string(),
                fmt(rep.lhs),
                fmt(rep.rhs),
                fmt(rep.lhs / rep.rhs),
                if rep.pass { "pass".into() } else { "fail".into() },
            ]);
            pass = rep.pass;
            summary = serde_json::to_value(&rep).expect("serializable");
        }
        "coboundary" => {
            let rep = longrun::ineq::coboundary_check(&model, &innov, n, &seeds, &tr)
                .map_err(fail)?;
            rows.push(vec![
                "coboundary".into(),
                rep.n.to_string(),
                fmt(rep.max_residual),
                fmt(rep.bound),
                fmt(rep.max_residual / rep.bound),
                if rep.pass { "pass".into() } else { "fail".into() },
            ]);
            pass = rep.pass;
            summary = serde_json::to_value(&rep).expect("serializable");
        }
        "series" => {
            let q = a.q.unwrap_or(2.0);
            let u: Vec<f64> = (1..=256)
                .map(|j| innov.projection_norm(j, q))
                .collect::<longrun::Result<_>>()
                .map_err(fail)?;
            let mut all_pass = true;
            let mut reports = Vec::new();
            for (name, b) in [
                ("constant", Box::new(|_: usize| 1.0) as Box<dyn Fn(usize) -> f64>),
                ("log", Box::new(|k: usize| ((k + 1) as f64).ln())),
            ] {
                let rep = longrun::ineq::series_comparison_check(&b, &u, q);
                rows.push(vec![
                    format!("series_{name}"),
                    u.len().to_string(),
                    fmt(rep.lhs),
                    fmt(rep.c_q * rep.rhs_raw),
                    fmt(rep.lhs / (rep.c_q * rep.rhs_raw).max(f64::MIN_POSITIVE)),
                    if rep.pass { "pass".into() } else { "fail".into() },
                ]);
                all_pass &= rep.pass;
                reports.push((name, rep));
            }
            pass = all_pass;
            summary = json!({
                "checks": reports.iter().map(|(n, r)| json!({
                    "weight": n, "lhs": r.lhs, "rhs": r.c_q * r.rhs_raw, "pass": r.pass
                })).collect::<Vec<_>>(),
                "pass": all_pass,
            });
        }
        other => return Err(usage_error(&format!("unknown check `{other}`"))),
    }
    Ok((
        a.out,
        Outcome { pass, header: vec!["check", "n", "lhs", "rhs", "ratio", "verdict"], rows, summary },
    ))
}

fn cmd_chernoff(mut a: ChernoffArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: ChernoffArgs = load_config(path).map_err(|m| usage_error(&m))?;
        merge_opt!(a, file, hurst, half_width, delta, reps, seed, out);
    }
    let seeds = SeedSpace::new(a.seed.unwrap_or(0));
    let rep = harness::run_chernoff(
        a.hurst.unwrap_or(0.5),
        a.half_width.unwrap_or(5.0),
        a.delta.unwrap_or(1.0 / 1024.0),
        a.reps.unwrap_or(1000),
        &seeds,
    )
    .map_err(fail)?;
    let rows = rep
        .draws
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), fmt(*v)])
        .collect();
    Ok((
        a.out,
        Outcome {
            pass: true,
            header: vec!["rep", "argmin"],
            rows,
            summary: json!({
                "hurst": rep.hurst, "half_width": rep.half_width, "delta": rep.delta,
                "quantiles": rep.quantiles, "draws": rep.draws.len(), "pass": true,
            }),
        },
    ))
}

fn cmd_iso_fit(mut a: IsoFitArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: IsoFitArgs = load_config(path).map_err(|m| usage_error(&m))?;
        merge_opt!(a, file, input, eval_t, out);
    }
    let input = a.input.as_ref().ok_or_else(|| usage_error("missing --input"))?;
    let text = fs::read_to_string(input).map_err(|e| fail(Error::Io(e)))?;
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.split(',').next().unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) => y.push(v),
            Err(_) if i == 0 => continue, // header line
            Err(e) => return Err(usage_error(&format!("bad observation `{cell}`: {e}"))),
        }
    }
    if y.is_empty() {
        return Err(usage_error("input contains no observations"));
    }
    let fit = isotone::pava(&y);
    let rows = fit.mu_hat.iter().map(|m| vec![fmt(*m)]).collect();
    let evals: Vec<(f64, f64)> = match &a.eval_t {
        Some(g) => parse_t_grid(g)
            .map_err(|m| usage_error(&m))?
            .into_iter()
            .map(|t| (t, isotone::fit_phi_hat(&fit, t)))
            .collect(),
        None => Vec::new(),
    };
    Ok((
        a.out,
        Outcome {
            pass: true,
            header: vec!["mu_hat"],
            rows,
            summary: json!({
                "n": y.len(),
                "blocks": fit.blocks.len(),
                "phi_hat": evals,
                "pass": true,
            }),
        },
    ))
}

fn cmd_iso_rate(mut a: IsoRateArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: IsoRateArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        a.innov_args.merge(std::mem::take(&mut file.innov_args));
        merge_opt!(
            a, file, theorem, n_grid, reps, t, phi_slope, slope_band, ks_meta, seed, rel_tol, out
        );
    }
    let theorem = match a.theorem.as_deref().unwrap_or("short_memory") {
        "short_memory" => RateTheorem::ShortMemory,
        "unit_beta" => RateTheorem::UnitBeta,
        "long_memory" => RateTheorem::LongMemory,
        other => return Err(usage_error(&format!("unknown theorem `{other}`"))),
    };
    let coeff_cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
    let model = coeff_cfg.build().map_err(fail)?;
    let innov = a.innov_args.to_config().map_err(|m| usage_error(&m))?.build().map_err(fail)?;
    let grid = parse_n_grid(a.n_grid.as_deref().unwrap_or("1024:65536:dyadic"))
        .map_err(|m| usage_error(&m))?;
    let seeds = SeedSpace::new(a.seed.unwrap_or(0));
    let opts = IsoRateOptions {
        reps: a.reps.unwrap_or(2000),
        t: a.t.unwrap_or(0.5),
        phi_slope: a.phi_slope.unwrap_or(2.0),
        slope_band: a.slope_band.unwrap_or(0.1),
        ks_meta: a.ks_meta.unwrap_or(20),
        ..Default::default()
    };
    let rel_tol = a.rel_tol;
    let model_for_tr = model.clone();
    let rep = harness::run_iso_rate(&model, &innov, theorem, &grid, &seeds, &opts, move |k| {
        match rel_tol {
            Some(rt) => coeffs::Truncation::new(rt),
            None => harness::default_truncation(&model_for_tr, k, TruncPurpose::Simulation),
        }
    })
    .map_err(fail)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), fmt(r.sd), fmt(r.d_n)])
        .collect();
    Ok((
        a.out,
        Outcome {
            pass: rep.pass,
            header: vec!["n", "sd", "d_n"],
            rows,
            summary: serde_json::to_value(&rep).expect("serializable"),
        },
    ))
}

fn cmd_audit(mut a: AuditArgs) -> CmdResult {
    if let Some(path) = &a.config {
        let mut file: AuditArgs = load_config(path).map_err(|m| usage_error(&m))?;
        a.coeff.merge(std::mem::take(&mut file.coeff));
        a.innov_args.merge(std::mem::take(&mut file.innov_args));
        merge_opt!(a, file, q, n_max, out);
    }
    let q = a.q.unwrap_or(2.0);
    let innov_cfg = a.innov_args.to_config().map_err(|m| usage_error(&m))?;
    let innov = innov_cfg.build().map_err(fail)?;
    let coeff_pair = match a.coeff.kind.is_some() {
        true => {
            let cfg = a.coeff.to_config().map_err(|m| usage_error(&m))?;
            Some((cfg.label().to_string(), cfg.build().map_err(fail)?))
        }
        false => None,
    };
    let rows = harness::run_audit_conditions(
        Some((innov_cfg.label(), &innov, q)),
        coeff_pair.as_ref().map(|(l, m)| (l.as_str(), m, a.n_max.unwrap_or(1 << 12))),
    )
    .map_err(fail)?;
    let any_violated = rows.iter().any(|r| r.verdict == "violated");
    let csv_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                fmt(r.q),
                r.j.to_string(),
                fmt(r.proj_norm),
                fmt(r.cum_sum),
                r.series_id.clone(),
                r.verdict.clone(),
            ]
        })
        .collect();
    Ok((
        a.out,
        Outcome {
            pass: !any_violated,
            header: vec!["model", "q", "j", "proj_norm", "cum_sum", "series_id", "verdict"],
            rows: csv_rows,
            summary: json!({ "rows": rows.len(), "pass": !any_violated }),
        },
    ))
}
