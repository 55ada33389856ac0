//! The `memnet` command line.
//!
//! Exit codes: 0 success, 1 mismatch or failed check, 2 invalid input or
//! schema, 3 projection search exhausted. Machine-readable results go to
//! stdout as JSON (CSV for `sweep`); diagnostics go to stderr.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::bounds::{audit, AuditReport};
use crate::error::{Error, Result};
use crate::exactnum::{format_rational, parse_rational};
use crate::netir::LayeredNet;
use crate::oracle::{run_suite, Faults, Suite};
use crate::pipeline::{assemble_sqrt, eval_dataset, eval_dataset_float, regression_wrap, BuildConfig, Dataset};
use crate::synth;
use crate::variants::{assemble_bounded_bits, assemble_bounded_depth};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PROJECTION: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sqrt,
    Depth,
    Bits,
    Regression,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    Exact,
    Float64,
}

#[derive(Debug, Parser)]
#[command(name = "memnet", version, about = "Build, verify and audit exact ReLU memorization networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a memorizer from a dataset and write the network and its audit report.
    Build {
        #[arg(long, value_enum, default_value = "sqrt")]
        mode: Mode,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "L")]
        l: Option<u64>,
        #[arg(long = "B")]
        b: Option<u64>,
        #[arg(long)]
        epsilon: Option<String>,
        /// Class count; defaults to the largest label.
        #[arg(long)]
        classes: Option<u64>,
    },
    /// Check a network against a dataset.
    Verify {
        #[arg(long)]
        net: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        precision: Precision,
        /// Allowed |F(x) − y|; regression networks default to their recorded ε/2.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Print network outputs for each point of a dataset, or for one point.
    Eval {
        #[arg(long)]
        net: PathBuf,
        #[arg(long = "in", conflicts_with = "x")]
        input: Option<PathBuf>,
        /// Comma-separated coordinates of a single point.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, value_enum, default_value = "exact")]
        precision: Precision,
    },
    /// Recompute the audit report of a network on a dataset.
    Audit {
        #[arg(long)]
        net: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to the network's provenance.
        #[arg(long)]
        theorem: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run an exhaustive gadget oracle suite (or `all`).
    Oracle {
        suite: String,
        #[arg(long = "n-max", default_value_t = 10)]
        n_max: u64,
        /// Skews the single-bit formula's exponent, to show the oracle catches it.
        #[arg(long, hide = true, default_value_t = 0, allow_hyphen_values = true)]
        fault_skew: i64,
    },
    /// Build synthetic datasets over a grid of sizes and parameters and emit metrics as CSV.
    Sweep {
        #[arg(long, value_enum, default_value = "sqrt")]
        mode: Mode,
        /// Comma-separated dataset sizes.
        #[arg(long, default_value = "16,64,256")]
        n: String,
        #[arg(long = "L")]
        l: Option<String>,
        #[arg(long = "B")]
        b: Option<String>,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 16)]
        classes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ProjectionSearchExhausted(_) => EXIT_PROJECTION,
        Error::ContractViolation { .. } => EXIT_MISMATCH,
        _ => EXIT_INVALID,
    }
}

fn write_file(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s)?;
    Ok(())
}

fn load_net(path: &Path) -> Result<LayeredNet> {
    LayeredNet::from_json(&std::fs::read_to_string(path)?)
}

fn load_dataset(path: &Path, regression: bool, classes: Option<u64>) -> Result<Dataset> {
    match classes {
        Some(c) => Dataset::load(path, Some(c)),
        None => Dataset::load_inferring(path, regression),
    }
}

/// Builds one network for `mode`; `param` is `L`, `B` or ε depending on the mode.
pub fn build_network(ds: &Dataset, mode: Mode, param: Option<&str>, seed: u64) -> Result<(LayeredNet, AuditReport)> {
    let cfg = BuildConfig::with_seed(seed);
    let need = |what: &str| Error::Parameter(format!("mode needs --{what}"));
    let int = |s: &str| -> Result<u64> { s.trim().parse().map_err(|_| Error::Parse(format!("not an integer: {s:?}"))) };
    match mode {
        Mode::Sqrt => assemble_sqrt(ds, &cfg),
        Mode::Depth => assemble_bounded_depth(ds, int(param.ok_or_else(|| need("L"))?)?, &cfg),
        Mode::Bits => assemble_bounded_bits(ds, int(param.ok_or_else(|| need("B"))?)?, &cfg),
        Mode::Regression => regression_wrap(ds, &parse_rational(param.ok_or_else(|| need("epsilon"))?)?, &cfg),
    }
}

fn cmd_build(
    mode: Mode,
    input: &Path,
    out: &Path,
    report: Option<&Path>,
    seed: u64,
    param: Option<String>,
    classes: Option<u64>,
) -> Result<i32> {
    let ds = load_dataset(input, mode == Mode::Regression, classes)?;
    let (net, rep) = build_network(&ds, mode, param.as_deref(), seed)?;
    write_file(out, &net.to_json())?;
    if let Some(r) = report {
        write_file(r, &rep.to_json())?;
    }
    println!(
        "{}",
        json!({
            "command": "build",
            "theorem": rep.theorem,
            "memorized": rep.memorized,
            "pass": rep.pass,
            "metrics": rep.realized,
        })
    );
    if !rep.pass {
        eprintln!("audit failed: {:?}", rep.checks);
    }
    Ok(if rep.memorized && rep.pass { EXIT_OK } else { EXIT_MISMATCH })
}

fn tolerance(net: &LayeredNet, epsilon: Option<&str>) -> Result<BigRational> {
    let eps = match epsilon {
        Some(s) => Some(parse_rational(s)?),
        None => match net.annotations().get("epsilon") {
            Some(s) => Some(parse_rational(s)?),
            None => None,
        },
    };
    Ok(eps.map_or_else(BigRational::zero, |e| e / BigRational::from_integer(2.into())))
}

fn cmd_verify(net_path: &Path, input: &Path, precision: Precision, epsilon: Option<&str>) -> Result<i32> {
    let net = load_net(net_path)?;
    let regression = net.provenance() == "regression" || epsilon.is_some();
    let ds = Dataset::load(input, None)?;
    if !regression {
        Dataset::infer_classes(ds.labels())?;
    }
    let tol = tolerance(&net, epsilon)?;
    let (mismatches, max_error) = match precision {
        Precision::Exact => {
            let outs = eval_dataset(&net, &ds);
            let mut bad = 0usize;
            let mut worst = BigRational::zero();
            for (o, y) in outs.into_iter().zip(ds.labels()) {
                match o {
                    Ok(v) => {
                        let e = (&v[0] - y).abs();
                        if e > tol {
                            bad += 1;
                        }
                        worst = worst.max(e);
                    }
                    Err(Error::ContractViolation { .. }) => bad += 1,
                    Err(e) => return Err(e),
                }
            }
            (bad, json!(format_rational(&worst)))
        }
        Precision::Float64 => {
            let tolf = tol.to_f64().unwrap_or(0.0);
            let outs = eval_dataset_float(&net, &ds);
            let mut bad = 0usize;
            let mut worst = 0.0f64;
            for (o, y) in outs.into_iter().zip(ds.labels()) {
                let e = (o?[0] - y.to_f64().unwrap_or(f64::NAN)).abs();
                if e.is_nan() || e > tolf {
                    bad += 1;
                }
                worst = if e.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(e) };
            }
            (bad, json!(worst))
        }
    };
    println!(
        "{}",
        json!({
            "command": "verify",
            "precision": match precision { Precision::Exact => "exact", Precision::Float64 => "float64" },
            "points": ds.len(),
            "mismatches": mismatches,
            "max_error": max_error,
        })
    );
    Ok(if mismatches == 0 { EXIT_OK } else { EXIT_MISMATCH })
}

fn cmd_eval(net_path: &Path, input: Option<&Path>, x: Option<&str>, precision: Precision) -> Result<i32> {
    let net = load_net(net_path)?;
    let points: Vec<Vec<BigRational>> = match (input, x) {
        (Some(p), _) => Dataset::load(p, None)?.points().to_vec(),
        (None, Some(s)) => vec![s.split(',').map(parse_rational).collect::<Result<_>>()?],
        (None, None) => return Err(Error::Parameter("eval needs --in or --x".into())),
    };
    for (i, p) in points.iter().enumerate() {
        let out = match precision {
            Precision::Exact => json!(net.eval_rational(p)?.iter().map(format_rational).collect::<Vec<_>>()),
            Precision::Float64 => {
                let xf: Vec<f64> = p.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
                json!(net.eval_float(&xf)?)
            }
        };
        println!("{}", json!({ "index": i, "output": out }));
    }
    Ok(EXIT_OK)
}

fn cmd_audit(net_path: &Path, input: &Path, theorem: Option<&str>, report: Option<&Path>) -> Result<i32> {
    let net = load_net(net_path)?;
    let regression = theorem.unwrap_or(net.provenance()) == "regression";
    let classes = net.annotations().get("classes").and_then(|c| c.parse().ok()).filter(|_| !regression);
    let ds = load_dataset(input, regression, classes)?;
    let rep = audit(&net, &ds, theorem)?;
    let text = rep.to_json();
    match report {
        Some(p) => write_file(p, &text)?,
        None => println!("{}", serde_json::to_string(&rep).expect("report serializes")),
    }
    Ok(if rep.pass { EXIT_OK } else { EXIT_MISMATCH })
}

fn cmd_oracle(suite: &str, n_max: u64, skew: i64) -> Result<i32> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(suite)?]
    };
    let faults = Faults {
        bit_exponent_skew: skew,
    };
    let mut ok = true;
    for s in suites {
        let r = run_suite(s, n_max, faults)?;
        if let Some(w) = &r.witness {
            eprintln!("{} mismatch: {w}", r.suite);
        }
        ok &= r.pass;
        println!("{}", serde_json::to_string(&r).expect("summary serializes"));
    }
    Ok(if ok { EXIT_OK } else { EXIT_MISMATCH })
}

fn parse_list(s: &str) -> Result<Vec<String>> {
    let v: Vec<String> = s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
    if v.is_empty() {
        return Err(Error::Parameter("empty sweep range".into()));
    }
    Ok(v)
}

pub const SWEEP_HEADER: &str = "n,mode,param,width,depth,params,bits,exponent_range,memorized,pass,\
ceil_depth,ratio_depth,ceil_params,ratio_params,ceil_bits,ratio_bits,lb_sqrt_n,lb_sqrt_n_log_n,kappa";

/// One CSV row per (N, parameter) pair.
pub fn sweep_rows(mode: Mode, ns: &[usize], params: &[Option<String>], d: usize, classes: u64, seed: u64) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    for &n in ns {
        let ds = if mode == Mode::Regression {
            synth::regression(n, d, seed)?
        } else {
            synth::classification(n, d, classes, seed)?
        };
        for p in params {
            let (_, r) = build_network(&ds, mode, p.as_deref(), seed)?;
            let f = |m: &std::collections::BTreeMap<String, f64>, k: &str| m.get(k).map_or(String::new(), |v| format!("{v:.6}"));
            let mode_name = format!("{mode:?}").to_lowercase();
            rows.push(format!(
                "{n},{mode_name},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6}",
                p.clone().unwrap_or_default(),
                r.realized.width,
                r.realized.depth,
                r.realized.params,
                r.realized.bits,
                r.realized.exponent_range,
                r.memorized,
                r.pass,
                f(&r.ceilings, "depth"),
                f(&r.ratios, "depth"),
                f(&r.ceilings, "params"),
                f(&r.ratios, "params"),
                f(&r.ceilings, "bits"),
                f(&r.ratios, "bits"),
                r.lower_bounds["sqrt_n"],
                r.lower_bounds["sqrt_n_log_n"],
                r.kappa,
            ));
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    mode: Mode,
    n: &str,
    l: Option<&str>,
    b: Option<&str>,
    epsilon: Option<&str>,
    d: usize,
    classes: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<i32> {
    let ns = parse_list(n)?
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad size {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let list = match mode {
        Mode::Sqrt => None,
        Mode::Depth => Some(l.ok_or_else(|| Error::Parameter("depth sweep needs --L".into()))?),
        Mode::Bits => Some(b.ok_or_else(|| Error::Parameter("bits sweep needs --B".into()))?),
        Mode::Regression => Some(epsilon.ok_or_else(|| Error::Parameter("regression sweep needs --epsilon".into()))?),
    };
    let params: Vec<Option<String>> = match list {
        Some(s) => parse_list(s)?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let rows = sweep_rows(mode, &ns, &params, d, classes, seed)?;
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(r);
        text.push('\n');
    }
    match out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    let all_pass = rows.iter().all(|r| r.split(',').nth(9) == Some("true"));
    Ok(if all_pass { EXIT_OK } else { EXIT_MISMATCH })
}

pub fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Build {
            mode,
            input,
            out,
            report,
            seed,
            l,
            b,
            epsilon,
            classes,
        } => {
            let param = match mode {
                Mode::Sqrt => None,
                Mode::Depth => l.map(|v| v.to_string()),
                Mode::Bits => b.map(|v| v.to_string()),
                Mode::Regression => epsilon,
            };
            cmd_build(mode, &input, &out, report.as_deref(), seed, param, classes)
        }
        Command::Verify {
            net,
            input,
            precision,
            epsilon,
        } => cmd_verify(&net, &input, precision, epsilon.as_deref()),
        Command::Eval {
            net,
            input,
            x,
            precision,
        } => cmd_eval(&net, input.as_deref(), x.as_deref(), precision),
        Command::Audit {
            net,
            input,
            theorem,
            report,
        } => cmd_audit(&net, &input, theorem.as_deref(), report.as_deref()),
        Command::Oracle {
            suite,
            n_max,
            fault_skew,
        } => cmd_oracle(&suite, n_max, fault_skew),
        Command::Sweep {
            mode,
            n,
            l,
            b,
            epsilon,
            d,
            classes,
            seed,
            out,
        } => cmd_sweep(
            mode,
            &n,
            l.as_deref(),
            b.as_deref(),
            epsilon.as_deref(),
            d,
            classes,
            seed,
            out.as_deref(),
        ),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
