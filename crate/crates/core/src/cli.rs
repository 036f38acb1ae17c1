//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input, I/O or serialization
//! failures, 2 on guard violations.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circle::{
    circle_check, classify_alpha, dirichlet_closed_form, dissect, singular_integral_beta, singular_integral_conv,
    singular_series, SingularIntegral, SingularIntegralMethod, DEFAULT_CONV_CELLS,
};
use crate::counting::{hua_moment_count, root_count, root_count_with, vinogradov_count, weighted_tail_sum, CountResult, Method};
use crate::error::{Error, Result};
use crate::expsums::{eval_S, eval_f, eval_v, ComplexValue};
use crate::model::{compute_thresholds, BoxSpec};
use crate::phase::PhasePoint;
use crate::verify::{
    check_dichotomy, check_major_approx, check_minor_sup, check_unbalanced, emit_report, render_csv, run_sweep,
    DichotomySummary, LawSummary, MinorSupSummary, SweepConfig, SweepSummary, UnbalancedSummary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_GUARD: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "waring-box", version, about = "Counting and circle-method tools for Waring's problem in boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the output here instead of stdout (a file prefix for `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Re-parse the JSON output as its own type and fail if it does not
    /// reproduce itself.
    #[arg(long, global = true)]
    check_schema: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Thresholds and exponents for (k, s).
    Thresholds {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: u32,
    },
    /// Solutions of x_1^k + ... + x_s^k = N in a box.
    Count {
        #[command(flatten)]
        boxed: BoxArgs,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Hua moments, Vinogradov counts and the weighted tail sum.
    Moments {
        #[arg(long, value_enum, default_value_t = MomentKind::Hua)]
        kind: MomentKind,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: Option<u32>,
        #[arg(long = "X")]
        x: Option<u64>,
        #[arg(long)]
        m: Option<u128>,
    },
    /// f_Y(alpha), and S(q, a), v_Y(beta) when alpha = a/q + beta.
    Expsum {
        #[arg(long)]
        k: u32,
        /// Length Y of the sum.
        #[arg(long = "X")]
        x: u64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
    },
    /// Major arcs for (X, k).
    Dissect {
        #[arg(long = "X")]
        x: u64,
        #[arg(long)]
        k: u32,
    },
    /// Major or minor classification of alpha.
    Classify {
        #[arg(long = "X")]
        x: u64,
        #[arg(long)]
        k: u32,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
    },
    /// Truncated singular series.
    SingularSeries {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: u32,
        #[arg(long = "N")]
        n: u128,
        #[arg(long = "Q")]
        q: u64,
    },
    /// Singular integral of a box.
    SingularIntegral {
        #[command(flatten)]
        boxed: BoxArgs,
        #[arg(long, value_enum, default_value_t = IntegralMethod::Convolution)]
        method: IntegralMethod,
        /// Truncation point of the beta integral.
        #[arg(long)]
        cutoff: Option<f64>,
        /// Grid cells of the convolution route.
        #[arg(long, default_value_t = DEFAULT_CONV_CELLS)]
        cells: usize,
    },
    /// Full-circle identity and, optionally, the major/minor split.
    CircleCheck {
        #[command(flatten)]
        boxed: BoxArgs,
        #[arg(long)]
        arcs: bool,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Seeded main-bound sweep.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Measured constants of the arc estimates, the unbalanced bound and the
    /// dichotomy.
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum, default_value_t = CheckKind::All)]
        check: CheckKind,
        /// Boxes in the dichotomy check.
        #[arg(long, default_value_t = 10_000)]
        boxes: usize,
    },
}

#[derive(Args, Debug)]
struct BoxArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    s: Option<u32>,
    /// Comma-separated side lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    sides: Vec<u64>,
    #[arg(long = "N")]
    n: u128,
}

impl BoxArgs {
    fn build(&self) -> Result<BoxSpec> {
        if let Some(s) = self.s {
            if s as usize != self.sides.len() {
                return Err(Error::invalid(format!(
                    "--s {s} does not match {} sides",
                    self.sides.len()
                )));
            }
        }
        BoxSpec::new(self.k, self.sides.clone(), self.n)
    }
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// TOML file with the sweep configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    s: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    /// Largest N.
    #[arg(long = "N")]
    n: Option<u64>,
    /// Comma-separated X grid.
    #[arg(long = "X", value_delimiter = ',')]
    x: Option<Vec<u64>>,
}

impl ConfigArgs {
    fn build(&self, out: &Option<PathBuf>) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(p) => SweepConfig::load(p)?,
            None => SweepConfig::default(),
        };
        macro_rules! overlay {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$target = v; })*
            };
        }
        overlay!(k => k, s => s, seed => seed, samples => samples, instances => instances, n => n_max, x => x_grid);
        if out.is_some() {
            cfg.out = out.clone();
        }
        cfg.validate()?;
        cfg.apply_guards();
        Ok(cfg)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Auto,
    Bruteforce,
    Convolution,
    Mitm,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MomentKind {
    Hua,
    Vinogradov,
    WeightedTail,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum IntegralMethod {
    Beta,
    Convolution,
    ClosedForm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CheckKind {
    Major,
    Minor,
    Unbalanced,
    Dichotomy,
    All,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct CountOutput {
    k: u32,
    s: usize,
    sides: Vec<u64>,
    #[serde(rename = "N")]
    n: u128,
    #[serde(with = "crate::arith::big_count")]
    count: num_bigint::BigUint,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    work: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    methods: Option<Vec<CountResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agree: Option<bool>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct MomentOutput {
    kind: String,
    k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<u32>,
    #[serde(rename = "X", skip_serializing_if = "Option::is_none")]
    x: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u128>,
    /// Exact count, as a decimal string when it exceeds 64 bits.
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solutions: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct ExpsumOutput {
    k: u32,
    #[serde(rename = "Y")]
    y: u64,
    alpha: PhasePoint,
    f: ComplexValue,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    s: Option<ComplexValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<ComplexValue>,
    /// `q^{-1} S(q, a) v_Y(beta)`.
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    approx: Option<ComplexValue>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct SweepOutput {
    summary: SweepSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    files: Option<Vec<PathBuf>>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq, Default)]
struct VerifyOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    major: Option<LawSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    minor: Option<MinorSupSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unbalanced: Option<UnbalancedSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dichotomy: Option<DichotomySummary>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Guard { .. } => EXIT_GUARD,
        _ => EXIT_INVALID,
    }
}

fn ser_err(e: impl std::fmt::Display) -> Error {
    Error::Serialization(e.to_string())
}

/// One CSV row per object, columns in key order; nested values as JSON.
fn json_to_csv(v: &Value) -> Result<String> {
    let rows: Vec<&serde_json::Map<String, Value>> = match v {
        Value::Object(m) => vec![m],
        Value::Array(items) => items.iter().filter_map(Value::as_object).collect(),
        _ => return Err(Error::invalid("output is not a record")),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(first) = rows.first() {
        w.write_record(first.keys()).map_err(ser_err)?;
    }
    for row in rows {
        w.write_record(row.values().map(|x| match x {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        }))
        .map_err(ser_err)?;
    }
    String::from_utf8(w.into_inner().map_err(ser_err)?).map_err(ser_err)
}

/// Serialized output, re-parsed as `T` first when the schema check is on.
fn render<T: Serialize + DeserializeOwned>(value: &T, opts: &OutputArgs) -> Result<String> {
    let json = serde_json::to_string_pretty(value).map_err(ser_err)?;
    if opts.check_schema {
        let back: T = serde_json::from_str(&json).map_err(ser_err)?;
        let again = serde_json::to_string_pretty(&back).map_err(ser_err)?;
        if again != json {
            return Err(Error::Serialization("output does not round-trip through its schema".into()));
        }
    }
    match opts.format {
        Format::Json => Ok(json + "\n"),
        Format::Csv => json_to_csv(&serde_json::to_value(value).map_err(ser_err)?),
    }
}

fn count_json(n: &num_bigint::BigUint) -> Value {
    match u64::try_from(n) {
        Ok(v) => Value::from(v),
        Err(_) => Value::String(n.to_string()),
    }
}

fn dispatch(cli: &Cli) -> Result<String> {
    let opts = &cli.output;
    match &cli.command {
        Command::Thresholds { k, s } => render(&compute_thresholds(*k, *s)?, opts),
        Command::Count { boxed, method } => {
            let b = boxed.build()?;
            let base = |count, method, work, methods, agree| CountOutput {
                k: b.k(),
                s: b.s(),
                sides: b.sides().to_vec(),
                n: b.n(),
                count,
                method,
                work,
                methods,
                agree,
            };
            let out = match method {
                MethodArg::All => {
                    let results = Method::ALL
                        .iter()
                        .map(|&m| root_count_with(&b, m))
                        .collect::<Result<Vec<_>>>()?;
                    let agree = results.iter().all(|r| r.count == results[0].count);
                    base(results[0].count.clone(), None, None, Some(results), Some(agree))
                }
                single => {
                    let r = match single {
                        MethodArg::Bruteforce => root_count_with(&b, Method::BruteForce)?,
                        MethodArg::Convolution => root_count_with(&b, Method::Convolution)?,
                        MethodArg::Mitm => root_count_with(&b, Method::MeetInMiddle)?,
                        _ => root_count(&b)?,
                    };
                    base(r.count, Some(r.method), Some(r.work), None, None)
                }
            };
            render(&out, opts)
        }
        Command::Moments { kind, k, s, x, m } => {
            let need = |v: Option<u64>, name: &str| v.ok_or_else(|| Error::invalid(format!("--{name} is required")));
            let mut out = MomentOutput {
                kind: String::new(),
                k: *k,
                s: None,
                x: None,
                m: None,
                count: None,
                value: None,
                solutions: None,
            };
            match kind {
                MomentKind::Hua => {
                    let x = need(*x, "X")?;
                    let m = need(m.map(|v| v as u64), "m")?;
                    let m32 = u32::try_from(m).map_err(|_| Error::invalid("--m too large"))?;
                    out.kind = "hua".into();
                    out.x = Some(x);
                    out.m = Some(m as u128);
                    out.count = Some(count_json(&hua_moment_count(*k, x, m32)?));
                }
                MomentKind::Vinogradov => {
                    let x = need(*x, "X")?;
                    let s = need(s.map(u64::from), "s")? as u32;
                    out.kind = "vinogradov".into();
                    out.s = Some(s);
                    out.x = Some(x);
                    out.count = Some(count_json(&vinogradov_count(*k, s, x)?));
                }
                MomentKind::WeightedTail => {
                    let s = need(s.map(u64::from), "s")? as u32;
                    let m = m.ok_or_else(|| Error::invalid("--m is required"))?;
                    let w = weighted_tail_sum(*k, s, m)?;
                    out.kind = "weighted-tail".into();
                    out.s = Some(s);
                    out.m = Some(m);
                    out.value = Some(w.value);
                    out.solutions = Some(w.solutions);
                }
            }
            render(&out, opts)
        }
        Command::Expsum { k, x, alpha } => {
            let a = PhasePoint::parse(alpha)?;
            let f = eval_f(*x, &a, *k);
            let (mut s, mut v, mut approx) = (None, None, None);
            if let Some((num, q)) = a.rational {
                let num = if num % q == 0 { q } else { num % q };
                let sv = eval_S(q, num, *k)?;
                let vv = eval_v(*x as f64, a.beta, *k)?;
                approx = Some((sv.to_complex() * vv.to_complex() / q as f64).into());
                s = Some(sv);
                v = Some(vv);
            }
            render(
                &ExpsumOutput {
                    k: *k,
                    y: *x,
                    alpha: a,
                    f,
                    s,
                    v,
                    approx,
                },
                opts,
            )
        }
        Command::Dissect { x, k } => render(&dissect(*x, *k)?, opts),
        Command::Classify { x, k, alpha } => {
            let d = dissect(*x, *k)?;
            render(&classify_alpha(&PhasePoint::parse(alpha)?, &d), opts)
        }
        Command::SingularSeries { k, s, n, q } => render(&singular_series(*k, *s, *n, *q)?, opts),
        Command::SingularIntegral {
            boxed,
            method,
            cutoff,
            cells,
        } => {
            let b = boxed.build()?;
            let r = match method {
                IntegralMethod::Beta => singular_integral_beta(&b, *cutoff, 1e-10)?,
                IntegralMethod::Convolution => singular_integral_conv(&b, *cells)?,
                IntegralMethod::ClosedForm => SingularIntegral {
                    value: dirichlet_closed_form(b.k(), b.s() as u32, b.n() as f64),
                    method: SingularIntegralMethod::ClosedForm,
                    cutoff: None,
                    tail_bound: None,
                    grid_points: None,
                },
            };
            render(&r, opts)
        }
        Command::CircleCheck { boxed, arcs, tol } => render(&circle_check(&boxed.build()?, *arcs, *tol)?, opts),
        Command::Sweep { cfg } => {
            let cfg = cfg.build(&opts.out)?;
            let (records, summary) = run_sweep(&cfg)?;
            let files = match &cfg.out {
                Some(prefix) => Some(emit_report(prefix, &records, &summary)?.to_vec()),
                None => None,
            };
            if opts.format == Format::Csv && files.is_none() {
                return render_csv(&records);
            }
            render(&SweepOutput { summary, files }, &OutputArgs { out: None, ..opts.clone() })
        }
        Command::Verify { cfg, check, boxes } => {
            let cfg = cfg.build(&opts.out)?;
            let want = |c: CheckKind| *check == CheckKind::All || *check == c;
            let mut out = VerifyOutput::default();
            if want(CheckKind::Major) {
                out.major = Some(check_major_approx(&cfg)?);
            }
            if want(CheckKind::Minor) {
                out.minor = Some(check_minor_sup(&cfg)?);
            }
            if want(CheckKind::Unbalanced) {
                let t = compute_thresholds(cfg.k, cfg.s)?;
                out.unbalanced = Some(check_unbalanced(&cfg, &t, 1_000_000)?);
            }
            if want(CheckKind::Dichotomy) {
                out.dichotomy = Some(check_dichotomy(&cfg, *boxes)?);
            }
            render(&out, opts)
        }
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// writes its output to `out` or to the `--out` file.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = dispatch(&cli).and_then(|text| {
        let to_file = cli.output.out.as_ref().filter(|_| !matches!(cli.command, Command::Sweep { .. } | Command::Verify { .. }));
        match to_file {
            Some(path) => std::fs::write(path, &text).map_err(|e| Error::io(path, e)),
            None => out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("waring-box").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn json(args: &[&str]) -> Value {
        let (code, out, err) = call(args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str(&out).unwrap()
    }

    #[test]
    fn thresholds_example() {
        let v = json(&["thresholds", "--k", "2", "--s", "5"]);
        assert_eq!(v["H_k"], 4);
        assert_eq!((v["delta"]["num"].as_i64(), v["delta"]["den"].as_i64()), (Some(1), Some(2400)));
    }

    #[test]
    fn count_examples() {
        let v = json(&["count", "--k", "2", "--s", "2", "--sides", "5,5", "--N", "25", "--method", "all"]);
        assert_eq!(v["count"], 2);
        assert_eq!(v["agree"], true);
        assert_eq!(v["methods"].as_array().unwrap().len(), 3);
        let v = json(&["count", "--k", "2", "--s", "2", "--sides", "5,5", "--N", "3"]);
        assert_eq!(v["count"], 0);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["count", "--k", "2", "--sides", "5,x", "--N", "3"]).0, EXIT_INVALID);
        assert_eq!(call(&["count", "--k", "2", "--s", "3", "--sides", "5,5", "--N", "3"]).0, EXIT_INVALID);
        assert_eq!(call(&["frobnicate"]).0, EXIT_INVALID);
        assert_eq!(call(&["thresholds", "--k", "2", "--s", "5", "--colour", "red"]).0, EXIT_INVALID);
        let (code, _, err) = call(&[
            "count", "--k", "2", "--sides", "100000,100000,100000", "--N", "1000000000", "--method", "bruteforce",
        ]);
        assert_eq!(code, EXIT_GUARD, "{err}");
        assert!(err.contains("guard"));
    }

    #[test]
    fn help_lists_subcommands() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        for name in [
            "thresholds",
            "count",
            "moments",
            "expsum",
            "dissect",
            "classify",
            "singular-series",
            "singular-integral",
            "circle-check",
            "sweep",
            "verify",
        ] {
            assert!(out.contains(name), "{name} missing from help");
        }
    }

    #[test]
    fn csv_output() {
        let (code, out, _) = call(&["count", "--k", "2", "--sides", "5,5", "--N", "25", "--format", "csv"]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "k,s,sides,N,count,method,work");
        assert!(lines.next().unwrap().starts_with("2,2,\"[5,5]\",25,2,"));
    }
}
