//! `jostlab`: run one experiment and write a JSON or CSV report.
//!
//! Exit status is 0 on success, 1 when the input fails validation and 2 when
//! a numerical method fails; failures also produce a report with the reason.
//!
//! Defaults:
//!
//! | option       | default |
//! |--------------|---------|
//! | `--depth`    | 2000    |
//! | `--tol`      | 1e-10 (1e-8 for `check-conditions`) |
//! | `--n-trunc`  | 200     |
//! | `--panels`   | 64 initial quadrature panels |
//!
//! `JOSTLAB_THREADS` caps the worker pool used for grid commands.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jostlab::determinants::{jost_via_det, DEFAULT_TRUNC};
use jostlab::jacobi::check_conditions;
use jostlab::lab::{
    bound_state_survey, boundary_l2_error, cross_validate_point, jost_via_factorization, jost_via_weyl,
    step_sum_rule_residual, CrossContext,
};
use jostlab::quad::QuadOptions;
use jostlab::recursions::{gc_limit, gc_sequence};
use jostlab::spectrum::{spectrum, Eigenvalue};
use jostlab::util::parse_complex;
use jostlab::weyl::{m_function, DEFAULT_DEPTH};
use jostlab::{section9_family, Complex64, DiskPoint, JacobiParams, JostError, ParamFile, Verdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const SCHEMA: &str = "jostlab/1";
const DEFAULT_TOL: f64 = 1e-10;
const CONDITIONS_TOL: f64 = 1e-8;
const DEFAULT_PANELS: usize = 64;
const MAX_N: usize = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "jostlab", version, about = "Jost functions of half-line Jacobi matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Weyl,
    #[value(alias = "det2")]
    Det,
    Gc,
    Fact,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partial sums and verdicts for the summability conditions.
    CheckConditions {
        #[arg(long)]
        params: PathBuf,
        /// Defaults to the horizon in the parameter file, else the head length.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tail_window: Option<usize>,
        #[arg(long, default_value_t = CONDITIONS_TOL)]
        tol: f64,
    },
    /// The m-function at one point.
    M {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Eigenvalues outside [-2, 2].
    Spectrum {
        #[arg(long)]
        params: PathBuf,
        /// Increasing section sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [200usize, 400])]
        trunc: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// The coupled recursion: the first `n` states and the limit of `g_n`.
    Gc {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// The Jost function by one method.
    Jost {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, value_enum, default_value_t = Method::Gc)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_TRUNC)]
        n_trunc: usize,
        #[arg(long, default_value_t = DEFAULT_PANELS)]
        panels: usize,
    },
    /// All four methods on a grid of points.
    CrossValidate {
        #[arg(long)]
        params: PathBuf,
        /// JSON array of `{"re": x, "im": y}` objects or `"a+bi"` strings.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_PANELS)]
        panels: usize,
    },
    /// L2 distance between p_n and its boundary asymptotics (CSV).
    BoundaryL2 {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_PANELS)]
        panels: usize,
    },
    /// Eigenvalue sums for the sparse block family (CSV).
    Survey9 {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        c1: f64,
        #[arg(long, default_value_t = 20)]
        m0: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        trunc: Vec<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Residual of the step-by-step sum rule.
    Sumrule {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = DEFAULT_PANELS)]
        panels: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckConditions { .. } => "check-conditions",
            Command::M { .. } => "m",
            Command::Spectrum { .. } => "spectrum",
            Command::Gc { .. } => "gc",
            Command::Jost { .. } => "jost",
            Command::CrossValidate { .. } => "cross-validate",
            Command::BoundaryL2 { .. } => "boundary-l2",
            Command::Survey9 { .. } => "survey9",
            Command::Sumrule { .. } => "sumrule",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::BoundaryL2 { .. } | Command::Survey9 { .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
struct C {
    re: f64,
    im: f64,
}

impl From<Complex64> for C {
    fn from(z: Complex64) -> Self {
        C { re: z.re, im: z.im }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridPoint {
    Parts(C),
    Text(String),
}

/// A finished report: structured data plus an optional CSV rendering.
struct Report {
    result: Value,
    csv: Option<String>,
}

impl Report {
    fn json(result: Value) -> Self {
        Report { result, csv: None }
    }
}

fn invalid(msg: impl Into<String>) -> JostError {
    JostError::InvalidInput(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), JostError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive")))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, JostError> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn load_params(path: &PathBuf) -> Result<(JacobiParams, Option<usize>), JostError> {
    let file: ParamFile = read_json(path)?;
    let horizon = file.horizon;
    Ok((file.into_params()?, horizon))
}

fn load_grid(path: &PathBuf) -> Result<Vec<Complex64>, JostError> {
    let raw: Vec<GridPoint> = read_json(path)?;
    if raw.is_empty() {
        return Err(invalid("grid nonempty"));
    }
    raw.into_iter()
        .map(|p| match p {
            GridPoint::Parts(c) => Ok(Complex64::new(c.re, c.im)),
            GridPoint::Text(s) => parse_complex(&s),
        })
        .collect()
}

fn quad(panels: usize) -> Result<QuadOptions, JostError> {
    if panels == 0 {
        return Err(invalid("panels must be positive"));
    }
    Ok(QuadOptions {
        initial_panels: panels,
        ..QuadOptions::default()
    })
}

fn verdict(v: Verdict) -> Value {
    serde_json::to_value(v).unwrap()
}

fn eigen_list(v: &[Eigenvalue]) -> Vec<Value> {
    v.iter()
        .map(|e| json!({ "energy": e.energy, "z": e.z, "converged": e.converged }))
        .collect()
}

fn run(command: &Command) -> Result<Report, JostError> {
    match command {
        Command::CheckConditions {
            params,
            horizon,
            tail_window,
            tol,
        } => {
            positive("tol", *tol)?;
            let (j, file_horizon) = load_params(params)?;
            let h = horizon.or(file_horizon).unwrap_or(j.head_len()).max(1);
            let r = check_conditions(&j, h, *tail_window, *tol)?;
            Ok(Report::json(json!({
                "horizon": r.horizon,
                "sum_sq": r.sum_sq,
                "g_sum": r.g_sum,
                "k_bound": r.k_bound,
                "gamma_leading": r.gamma_leading,
                "lambda_n": r.lambda_n,
                "log_prod": r.log_prod_partial.last(),
                "b_sum": r.b_sum_partial.last(),
                "alpha_ok": verdict(r.alpha_ok),
                "beta_ok": verdict(r.beta_ok),
                "gamma_ok": verdict(r.gamma_ok),
            })))
        }
        Command::M { params, z, depth } => {
            let z = parse_complex(z)?;
            let (j, _) = load_params(params)?;
            let m = m_function(&j, z, *depth)?;
            Ok(Report::json(json!({ "z": C::from(z), "m": C::from(m) })))
        }
        Command::Spectrum { params, trunc, tol } => {
            positive("tol", *tol)?;
            let (j, _) = load_params(params)?;
            let s = spectrum(&j, trunc, *tol)?;
            Ok(Report::json(json!({
                "trunc_sizes": s.trunc_sizes,
                "above": eigen_list(&s.above),
                "below": eigen_list(&s.below),
                "unconverged": s.unconverged(),
            })))
        }
        Command::Gc { params, z, n, tol } => {
            positive("tol", *tol)?;
            let z = parse_complex(z)?;
            let (j, _) = load_params(params)?;
            let states: Vec<Value> = gc_sequence(&j, z, *n)?
                .iter()
                .map(|s| json!({ "n": s.n, "c": C::from(s.c), "g": C::from(s.g) }))
                .collect();
            let lim = gc_limit(&j, z, *tol, MAX_N)?;
            Ok(Report::json(json!({
                "z": C::from(z),
                "states": states,
                "u": C::from(lim.value),
                "n_used": lim.n_used,
                "oscillation": lim.oscillation,
            })))
        }
        Command::Jost {
            params,
            z,
            method,
            tol,
            n_trunc,
            panels,
        } => {
            positive("tol", *tol)?;
            let z = parse_complex(z)?;
            let (j, _) = load_params(params)?;
            let name = format!("{method:?}").to_lowercase();
            let mut out = json!({ "z": C::from(z), "method": name });
            let u = match method {
                Method::Weyl | Method::Gc => {
                    let s = if *method == Method::Weyl {
                        jost_via_weyl(&j, z, *tol, MAX_N)?
                    } else {
                        gc_limit(&j, z, *tol, MAX_N)?
                    };
                    out["n_used"] = json!(s.n_used);
                    out["oscillation"] = json!(s.oscillation);
                    s.value
                }
                Method::Det => {
                    let d = jost_via_det(&j, z, *n_trunc)?;
                    out["n_trunc_used"] = json!(d.l_ren.n_trunc_used);
                    out["t_value"] = json!(C::from(d.l_ren.t_value));
                    out["tail_estimate"] = json!(d.l_ren.tail_estimate);
                    d.u
                }
                Method::Fact => jost_via_factorization(&j, z, None, &quad(*panels)?)?,
            };
            out["u"] = json!(C::from(u));
            Ok(Report::json(out))
        }
        Command::CrossValidate {
            params,
            grid,
            tol,
            panels,
        } => {
            positive("tol", *tol)?;
            let points = load_grid(grid)?;
            let (j, _) = load_params(params)?;
            for z in &points {
                DiskPoint::new(*z)?;
            }
            let mut ctx = CrossContext::new(&j);
            ctx.quad = quad(*panels)?;
            let reports: Vec<_> = points
                .par_iter()
                .map(|&z| cross_validate_point(&j, z, *tol, &ctx))
                .collect();
            Ok(Report::json(serde_json::to_value(reports).unwrap()))
        }
        Command::BoundaryL2 { params, n, panels } => {
            let (j, _) = load_params(params)?;
            let curve = boundary_l2_error(&j, n, &quad(*panels)?)?;
            let mut csv = String::from("n,error,norm_sq\n");
            for ((n, e), w) in curve.n.iter().zip(&curve.error).zip(&curve.norm_sq) {
                writeln!(csv, "{n},{e:e},{w:e}").unwrap();
            }
            Ok(Report {
                result: serde_json::to_value(&curve).unwrap(),
                csv: Some(csv),
            })
        }
        Command::Survey9 {
            alpha,
            p,
            c1,
            m0,
            q,
            trunc,
            tol,
        } => {
            positive("tol", *tol)?;
            let horizon = *trunc.iter().max().ok_or_else(|| invalid("trunc nonempty"))?;
            let j = section9_family(*alpha, *p, *c1, *m0, horizon)?;
            let r = bound_state_survey(&j, q, trunc, *tol)?;
            let mut csv = String::from("trunc,count");
            for qq in &r.q {
                write!(csv, ",sum_q{qq}").unwrap();
            }
            csv.push('\n');
            for row in &r.rows {
                write!(csv, "{},{}", row.trunc, row.count).unwrap();
                for s in &row.sums {
                    write!(csv, ",{s:e}").unwrap();
                }
                csv.push('\n');
            }
            Ok(Report {
                result: serde_json::to_value(&r).unwrap(),
                csv: Some(csv),
            })
        }
        Command::Sumrule { params, n, z, panels } => {
            let z = parse_complex(z)?;
            let (j, _) = load_params(params)?;
            let r = step_sum_rule_residual(&j, *n, z, &quad(*panels)?)?;
            Ok(Report::json(json!({
                "z": C::from(z),
                "n": n,
                "residual": C::from(r),
                "abs": r.norm(),
            })))
        }
    }
}

fn emit(path: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("JOSTLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // Fails only if a global pool already exists.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let name = cli.command.name();
    let format = cli.format.unwrap_or(cli.command.default_format());
    let (body, code) = match run(&cli.command) {
        Ok(report) => match (format, report.csv) {
            (Format::Csv, Some(csv)) => (csv, 0),
            (Format::Csv, None) => {
                eprintln!("error: {name} has no CSV form");
                return ExitCode::from(1);
            }
            (Format::Json, _) => {
                let v = json!({ "schema": SCHEMA, "command": name, "status": "ok", "result": report.result });
                (serde_json::to_string_pretty(&v).unwrap() + "\n", 0)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            let v = json!({
                "schema": SCHEMA,
                "command": name,
                "status": "error",
                "error": { "kind": e.kind(), "message": e.to_string() },
            });
            (serde_json::to_string_pretty(&v).unwrap() + "\n", if e.is_validation() { 1 } else { 2 })
        }
    };
    if let Err(e) = emit(&cli.output, &body) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
