//! The `fvn` command line.
//!
//! Every output starts with a `#` header naming the parameters that
//! reproduce it. Exit codes: 0 on success, 2 on usage errors, 1 when a run
//! fails (including a failed `verify` check).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bitstream::{parse_seed, UniformSource, DEFAULT_WORD_BITS};
use crate::error::Error;
use crate::samplers::{default_table_len, Sampler, SamplerConfig, SamplerKind};
use crate::stats::{chi_square_test, ks_test, measure_consumption, moments, sorted, TestReport};
use crate::tables::{IntervalTable, Scheme};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fvn", version, about = "Comparison-method exponential and normal variates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit samples from one sampler.
    Generate(GenerateArgs),
    /// Dump an interval table.
    Tables(TablesArgs),
    /// Run goodness-of-fit checks and print one line per check.
    Verify(VerifyArgs),
    /// Measure fresh uniforms consumed per sample.
    Consumption(ConsumptionArgs),
    /// Time every sampler (machine-dependent; never pass/fail).
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Seed, decimal or 0x-prefixed hex.
    #[arg(long, default_value = "0", value_parser = parse_seed)]
    seed: u64,
    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// exp_vn, exp_brent, exp_log, normal_forsythe, grand, box_muller, polar or wallace.
    #[arg(long)]
    sampler: SamplerKind,
    /// Number of samples.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Interval table length (defaults to min(w, 64) = 53).
    #[arg(long = "K", alias = "k")]
    table_len: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
struct TablesArgs {
    /// exp_vn, exp_brent, normal_forsythe or normal_brent.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Scheme,
    /// Number of intervals, 1..=64.
    #[arg(long = "K", alias = "k", default_value_t = default_table_len(DEFAULT_WORD_BITS))]
    table_len: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Sampler to check; all comparison samplers and wallace when omitted.
    #[arg(long)]
    sampler: Option<SamplerKind>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ConsumptionArgs {
    /// Sampler to meter; every sampler when omitted.
    #[arg(long)]
    sampler: Option<SamplerKind>,
    /// Samples per sampler, at least 100000.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[command(flatten)]
    common: Common,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::from_tag(s).ok_or_else(|| {
        let tags: Vec<_> = Scheme::ALL.iter().map(|s| s.tag()).collect();
        format!("unknown scheme {s:?}; expected one of {}", tags.join(", "))
    })
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Internal(String),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TableLength { .. } | Error::TooFewSamples { .. } | Error::Alpha(_) => Failure::Usage(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command, writing to
/// `stdout` unless `--out` is given. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let mut text = e.render().to_string();
            if code != 0 && !text.contains("Usage:") {
                text.push('\n');
                text.push_str(&usage_for(&args));
                text.push('\n');
            }
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let out_path = match &cli.command {
        Command::Generate(a) => a.common.out.clone(),
        Command::Tables(a) => a.out.clone(),
        Command::Verify(a) => a.common.out.clone(),
        Command::Consumption(a) => a.common.out.clone(),
        Command::Bench(a) => a.common.out.clone(),
    };
    let result = match out_path {
        Some(path) => {
            File::create(&path).map_err(|e| Failure::Internal(format!("{}: {e}", path.display()))).and_then(|f| {
                let mut w = BufWriter::new(f);
                dispatch(&cli.command, &mut w)?;
                w.flush()?;
                Ok(())
            })
        }
        None => {
            let mut w = BufWriter::new(stdout);
            dispatch(&cli.command, &mut w).and_then(|()| Ok(w.flush()?))
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
        Err(Failure::Checks(n)) => {
            let _ = writeln!(stderr, "{n} check(s) failed");
            EXIT_FAILURE
        }
    }
}

fn usage_for(args: &[OsString]) -> String {
    let mut root = Cli::command();
    let sub = args.iter().skip(1).filter_map(|a| a.to_str()).find(|a| !a.starts_with('-'));
    match sub.and_then(|name| root.find_subcommand_mut(name)) {
        Some(cmd) => cmd.clone().bin_name(format!("fvn {}", cmd.get_name())).render_usage().to_string(),
        None => root.render_usage().to_string(),
    }
}

fn dispatch(command: &Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Generate(a) => generate(a, out),
        Command::Tables(a) => tables(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Consumption(a) => consumption(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn config_for(kind: SamplerKind, table_len: Option<usize>) -> Result<SamplerConfig, Failure> {
    let len = table_len.unwrap_or_else(|| default_table_len(DEFAULT_WORD_BITS));
    Ok(SamplerConfig::with_table_len(kind, len)?)
}

#[derive(Serialize)]
struct Record {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval_k: Option<u32>,
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = config_for(a.sampler, a.table_len)?;
    let k = config.table_len().map_or("none".to_string(), |k| k.to_string());
    let format = match a.format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    };
    writeln!(
        out,
        "# fvn generate sampler={} seed={} K={} n={} format={} version={}",
        a.sampler, a.common.seed, k, a.n, format, VERSION
    )?;
    let mut sampler = Sampler::new(config, UniformSource::new(a.common.seed))?;
    if a.format == Format::Csv {
        writeln!(out, "value,interval_k")?;
    }
    for _ in 0..a.n {
        let s = sampler.next_sample()?;
        match a.format {
            Format::Csv => match s.interval {
                Some(k) => writeln!(out, "{},{}", s.value, k)?,
                None => writeln!(out, "{},", s.value)?,
            },
            Format::Jsonl => {
                let rec = Record { value: s.value, interval_k: s.interval };
                serde_json::to_writer(&mut *out, &rec).map_err(|e| Failure::Internal(e.to_string()))?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

fn tables(a: &TablesArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let table = IntervalTable::build(a.scheme, a.table_len)?;
    table.write_dump(out)?;
    Ok(())
}

/// Samplers covered by `verify` when none is named.
pub const VERIFIED_SAMPLERS: [SamplerKind; 5] = [
    SamplerKind::ExpVn,
    SamplerKind::ExpBrent,
    SamplerKind::NormalForsythe,
    SamplerKind::NormalGrand,
    SamplerKind::NormalWallace,
];

/// Checks run by `verify` for one sampler: KS against the target, mean and
/// variance within 5 standard errors, and interval occupancy for the dyadic
/// samplers.
pub fn verification_reports(kind: SamplerKind, n: usize, seed: u64, alpha: f64) -> crate::Result<Vec<TestReport>> {
    let mut sampler = Sampler::from_seed(kind, seed)?;
    let len = sampler.config().table_len();
    let mut values = Vec::with_capacity(n);
    let mut occupancy = vec![0u64; len.unwrap_or(0)];
    for _ in 0..n {
        let s = sampler.next_sample()?;
        values.push(s.value);
        if let Some(k) = s.interval {
            if let Some(slot) = occupancy.get_mut(k as usize - 1) {
                *slot += 1;
            }
        }
    }
    let m = moments(&values)?;
    let nf = n as f64;
    // Exp(1) and N(0,1) both have unit variance; the variance estimator's
    // sd is sqrt((mu4 - 1) / n) with mu4 = 9 (Exp) or 3 (normal).
    let (target_mean, mu4) = if kind.is_normal() { (0.0, 3.0) } else { (1.0, 9.0) };
    let mut reports = vec![
        ks_test(&sorted(values), kind.target_cdf(), alpha)?.named(format!("{kind}.ks")),
        sigma_check(format!("{kind}.mean"), (m.mean - target_mean).abs(), 5.0 / nf.sqrt(), n),
        sigma_check(format!("{kind}.variance"), (m.variance - 1.0).abs(), 5.0 * ((mu4 - 1.0) / nf).sqrt(), n),
    ];
    if matches!(kind, SamplerKind::ExpBrent | SamplerKind::NormalGrand) {
        reports.push(
            chi_square_test(&occupancy, &dyadic_probs(occupancy.len()), alpha)?.named(format!("{kind}.occupancy")),
        );
    }
    Ok(reports)
}

/// `2^-k` for `k < K`, with the clamped tail `2^-(K-1)` in the last slot.
pub fn dyadic_probs(len: usize) -> Vec<f64> {
    (1..=len).map(|k| if k < len { (-(k as f64)).exp2() } else { (-((len - 1) as f64)).exp2() }).collect()
}

fn sigma_check(name: String, deviation: f64, bound: f64, n: usize) -> TestReport {
    TestReport { test_name: name, statistic: deviation, critical_value: bound, n, passed: deviation < bound }
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    writeln!(out, "# fvn verify seed={} n={} alpha={} version={}", a.common.seed, a.n, a.alpha, VERSION)?;
    writeln!(out, "# name statistic critical result")?;
    let kinds: Vec<SamplerKind> = match a.sampler {
        Some(k) => vec![k],
        None => VERIFIED_SAMPLERS.to_vec(),
    };
    let mut failed = 0;
    for kind in kinds {
        for r in verification_reports(kind, a.n, a.common.seed, a.alpha)? {
            writeln!(out, "{r}")?;
            failed += usize::from(!r.passed);
        }
    }
    if failed > 0 {
        out.flush()?;
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

fn consumption(a: &ConsumptionArgs, out: &mut dyn Write) -> Result<(), Failure> {
    writeln!(out, "# fvn consumption seed={} n={} version={}", a.common.seed, a.n, VERSION)?;
    writeln!(out, "sampler,n,mean,ci95")?;
    let kinds: Vec<SamplerKind> = match a.sampler {
        Some(k) => vec![k],
        None => SamplerKind::ALL.to_vec(),
    };
    for kind in kinds {
        let report = measure_consumption(&config_for(kind, None)?, a.n, a.common.seed)?;
        writeln!(out, "{}", report.csv_row())?;
    }
    Ok(())
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    writeln!(out, "# fvn bench seed={} n={} version={} (timings are machine-dependent)", a.common.seed, a.n, VERSION)?;
    writeln!(out, "sampler,n,seconds,rate")?;
    for kind in SamplerKind::ALL {
        let mut sampler = Sampler::from_seed(kind, a.common.seed)?;
        let start = Instant::now();
        let mut sink = 0.0;
        for _ in 0..a.n {
            sink += sampler.next_value()?;
        }
        let secs = start.elapsed().as_secs_f64();
        std::hint::black_box(sink);
        writeln!(out, "{},{},{:.6},{:.0}", kind, a.n, secs, a.n as f64 / secs.max(1e-12))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("fvn").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn generate_is_deterministic() {
        let a = run_capture(&["generate", "--sampler", "grand", "--n", "5", "--seed", "42"]);
        let b = run_capture(&["generate", "--sampler", "grand", "--n", "5", "--seed", "42"]);
        assert_eq!(a.0, 0);
        assert_eq!(a, b);
        let lines: Vec<&str> = a.1.lines().collect();
        assert!(lines[0].starts_with("# fvn generate sampler=grand seed=42 K=53 n=5"));
        assert_eq!(lines[1], "value,interval_k");
        assert_eq!(lines.len(), 7);
    }

    #[test]
    fn generate_zero_is_header_only() {
        let (code, out, _) = run_capture(&["generate", "--sampler", "exp_vn", "--n", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 1);
    }

    #[test]
    fn hex_seed_equals_decimal() {
        let a = run_capture(&["generate", "--sampler", "exp_brent", "--n", "3", "--seed", "0x2a"]);
        let b = run_capture(&["generate", "--sampler", "exp_brent", "--n", "3", "--seed", "42"]);
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_sampler_is_usage_error() {
        let (code, out, err) = run_capture(&["generate", "--sampler", "bogus"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(err.contains("Usage"));
    }

    #[test]
    fn bad_table_length_is_usage_error() {
        let (code, _, err) = run_capture(&["tables", "--scheme", "normal_brent", "--K", "65"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("table length"));
    }

    #[test]
    fn jsonl_records() {
        let (_, out, _) = run_capture(&["generate", "--sampler", "exp_brent", "--n", "3", "--format", "jsonl"]);
        for line in out.lines().skip(1) {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["value"].as_f64().unwrap() >= 0.0);
            assert!(v["interval_k"].as_u64().unwrap() >= 1);
        }
        let (_, out, _) = run_capture(&["generate", "--sampler", "polar", "--n", "2", "--format", "jsonl"]);
        let v: serde_json::Value = serde_json::from_str(out.lines().nth(1).unwrap()).unwrap();
        assert!(v.get("interval_k").is_none());
    }

    #[test]
    fn tables_rows() {
        let (code, out, _) = run_capture(&["tables", "--scheme", "normal_brent", "--K", "32"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "#scheme=normal_brent K=32");
        assert_eq!(lines.len(), 33);
        let a1: f64 = lines[1].split(' ').nth(2).unwrap().parse().unwrap();
        assert!((a1 - 0.674_489_750_196_081_7).abs() < 1e-13);
    }

    #[test]
    fn consumption_rejects_small_n() {
        let (code, _, _) = run_capture(&["consumption", "--sampler", "exp_log", "--n", "10"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn consumption_csv() {
        let (code, out, _) = run_capture(&["consumption", "--sampler", "exp_log", "--n", "100000"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[1], "sampler,n,mean,ci95");
        assert_eq!(lines[2], "exp_log,100000,1.000000,0.000000");
    }

    #[test]
    fn bench_lists_every_sampler_once() {
        let (code, out, _) = run_capture(&["bench", "--n", "1000"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[1], "sampler,n,seconds,rate");
        let names: Vec<&str> = lines[2..].iter().map(|l| l.split(',').next().unwrap()).collect();
        let expected: Vec<&str> = SamplerKind::ALL.iter().map(|k| k.name()).collect();
        assert_eq!(names, expected);
    }

    #[test]
    fn verify_prints_one_line_per_check() {
        let (code, out, _) = run_capture(&["verify", "--sampler", "exp_brent", "--n", "20000", "--seed", "3"]);
        assert_eq!(code, 0, "{out}");
        let checks: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(|l| l.ends_with("PASS")));
    }

    #[test]
    fn dyadic_probs_sum_to_one() {
        for len in [1usize, 2, 12, 53] {
            let s: f64 = dyadic_probs(len).iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }
}
