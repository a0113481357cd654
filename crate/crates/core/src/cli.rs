//! Config-driven command line: `sample`, `simulate`, `verify`, `report`.
//!
//! A run is described by a JSON [`RunConfig`]; command-line flags override
//! the file. Every artifact records the SHA-256 of the effective config
//! (output directory excluded) and the seed. Exit status: 0 success, 1 a
//! verification check failed, 2 usage, config or runtime error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::exponent::{SemiStableExponent, Tail};
use crate::laws::{
    DiscreteGenSemiMlLaw, GammaMaxSemiStableLaw, GenSemiAlphaLaplaceLaw, GenSemiMlLaw,
    GenSemiParetoLaw, Law, MaxSemiStableLaw, TableParams,
};
use crate::processes::{self, CoinMode, Combiner, Init, SchemeSpec};
use crate::verify::{self, GridOptions, VerificationReport, SUITE_NAMES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

const DEFAULT_STEPS: usize = 50;
const DEFAULT_PATHS: usize = 100;
const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Sample,
    Simulate,
    Verify,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GenSemiAlphaLaplace,
    GenSemiMl,
    DiscreteGenSemiMl,
    GenSemiPareto,
    GammaMaxSemiStable,
    MaxSemiStable,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

/// A law given by family and exponent parameters. Exactly one of `b` (the
/// exponent's scale) and `p` (the skip probability, `b = p^{1/α}`) is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub family: Family,
    #[serde(default = "one")]
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "one_u32")]
    pub k: u32,
    #[serde(default = "one_u32")]
    pub m: u32,
}

/// Scheme settings; `b` defaults to the law's matching scheme scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub combiner: Combiner,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub coin_mode: CoinMode,
    #[serde(default)]
    pub init: Init,
    #[serde(default)]
    pub burn_in: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub law: Option<LawSpec>,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default)]
    pub n_paths: Option<usize>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub check: Option<String>,
    #[serde(default)]
    pub grid: Option<GridOptions>,
    #[serde(default)]
    pub reports: Option<Vec<PathBuf>>,
}

#[derive(Debug, Parser)]
#[command(name = "harris-ar", version, about = "Simulate and verify Harris-stable AR(1) schemes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Verification suite to run.
    #[arg(long, global = true, value_name = "NAME")]
    pub check: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub paths: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub steps: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CliCommand {
    /// Draw i.i.d. samples from the configured law.
    Sample,
    /// Simulate trajectories of the configured scheme.
    Simulate,
    /// Run verification checks and write a JSON report.
    Verify,
    /// Summarise JSON reports into one CSV table.
    Report,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::Sample => Command::Sample,
            CliCommand::Simulate => Command::Simulate,
            CliCommand::Verify => Command::Verify,
            CliCommand::Report => Command::Report,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config { message: String, line: Option<usize> },
    Run(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { message, line: Some(l) } => write!(f, "config error (line {l}): {message}"),
            CliError::Config { message, line: None } => write!(f, "config error: {message}"),
            CliError::Run(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn run_err(e: impl fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

/// Points validation failures at a line of the config file. `path` is a
/// dotted key such as `scheme.p`: each segment is searched for after the
/// line where the previous one was found.
struct Locator<'a> {
    text: Option<&'a str>,
}

impl Locator<'_> {
    fn line_of(&self, path: &str) -> Option<usize> {
        let lines: Vec<&str> = self.text?.lines().collect();
        let mut start = 0;
        for segment in path.split('.') {
            let needle = format!("\"{segment}\"");
            start += lines[start..].iter().position(|l| l.contains(&needle))?;
        }
        Some(start + 1)
    }

    fn error(&self, path: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            message: message.into(),
            line: self.line_of(path),
        }
    }
}

/// Reads `path` (if any) and applies flag overrides.
pub fn load_config(cli: &Cli) -> Result<(RunConfig, Option<String>), CliError> {
    let (mut config, text) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config {
                message: format!("cannot read {}: {e}", path.display()),
                line: None,
            })?;
            let config: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config {
                message: e.to_string(),
                line: Some(e.line()),
            })?;
            (config, Some(text))
        }
        None => (RunConfig::default(), None),
    };
    config.command = Some(cli.command.into());
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    if cli.check.is_some() {
        config.check = cli.check.clone();
    }
    if cli.paths.is_some() {
        config.n_paths = cli.paths;
    }
    if cli.steps.is_some() {
        config.n_steps = cli.steps;
    }
    if cli.samples.is_some() {
        config.n_samples = cli.samples;
    }
    Ok((config, text))
}

/// SHA-256 (hex) of the effective config without the output directory.
pub fn config_hash(config: &RunConfig) -> String {
    let mut hashed = config.clone();
    hashed.out = None;
    let bytes = serde_json::to_vec(&hashed).expect("config serialises");
    hex::encode(Sha256::digest(bytes))
}

fn build_law(spec: &LawSpec, loc: &Locator) -> Result<Law, CliError> {
    let bad = |key: &str, e: &dyn fmt::Display| {
        loc.error(&format!("law.{key}"), format!("law.{key}: {e}"))
    };
    if !(spec.alpha > 0.0 && spec.alpha.is_finite()) {
        return Err(bad("alpha", &format!("{} must be positive", spec.alpha)));
    }
    let b = match (spec.b, spec.p) {
        (Some(b), None) => b,
        (None, Some(p)) => {
            if !(p > 0.0 && p < 1.0) {
                return Err(bad("p", &format!("{p} must lie in (0, 1)")));
            }
            p.powf(1.0 / spec.alpha)
        }
        _ => return Err(loc.error("law", "law: give exactly one of \"b\" and \"p\"")),
    };
    let tail = match spec.family {
        Family::GammaMaxSemiStable | Family::MaxSemiStable => Tail::Decreasing,
        _ => Tail::Increasing,
    };
    let exp = SemiStableExponent::new(spec.lambda, spec.alpha, spec.beta, b, tail)
        .map_err(|e| bad(if spec.p.is_some() { "p" } else { "b" }, &e))?;
    let law = match spec.family {
        Family::GenSemiAlphaLaplace => GenSemiAlphaLaplaceLaw::new(exp, spec.k).map(Law::SemiAlphaLaplace),
        Family::GenSemiMl => GenSemiMlLaw::new(exp, spec.k).map(Law::SemiMittagLeffler),
        Family::DiscreteGenSemiMl => {
            DiscreteGenSemiMlLaw::new(exp, spec.k, spec.m).map(Law::DiscreteSemiMittagLeffler)
        }
        Family::GenSemiPareto => GenSemiParetoLaw::new(exp, spec.k).map(Law::SemiPareto),
        Family::GammaMaxSemiStable => GammaMaxSemiStableLaw::new(exp, spec.k).map(Law::GammaMaxSemiStable),
        Family::MaxSemiStable => MaxSemiStableLaw::new(exp).map(Law::MaxSemiStable),
    };
    law.map_err(|e| loc.error("law.family", format!("law: {e}")))
}

fn require_law(config: &RunConfig, loc: &Locator) -> Result<Law, CliError> {
    match &config.law {
        Some(spec) => build_law(spec, loc),
        None => Err(loc.error("law", "this command needs a \"law\" section")),
    }
}

fn count(value: Option<usize>, default: usize, key: &str, loc: &Locator) -> Result<usize, CliError> {
    match value.unwrap_or(default) {
        0 => Err(loc.error(key, format!("{key} must be at least 1"))),
        n => Ok(n),
    }
}

fn out_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| run_err(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Writes via a temporary file in the same directory and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| run_err(format!("cannot write {}: {e}", path.display())))
}

fn header(hash: &str, seed: u64) -> String {
    format!("# config_sha256={hash} seed={seed}\n")
}

fn format_value(x: f64, integer: bool) -> String {
    if integer {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

fn cmd_sample(config: &RunConfig, loc: &Locator, hash: &str) -> Result<i32, CliError> {
    let law = require_law(config, loc)?;
    let n = count(config.n_samples, DEFAULT_SAMPLES, "n_samples", loc)?;
    let seed = config.seed.unwrap_or(0);
    let sampler = law.sampler(&TableParams::default()).map_err(run_err)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let integer = sampler.integer_valued();
    let mut body = header(hash, seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        w.write_record(["index", "value"]).map_err(run_err)?;
        for i in 0..n {
            let x = sampler.sample(&mut rng);
            w.write_record([i.to_string(), format_value(x, integer)]).map_err(run_err)?;
        }
        w.flush().map_err(run_err)?;
    }
    write_atomic(&out_dir(config)?.join("samples.csv"), &body)?;
    Ok(EXIT_OK)
}

fn build_scheme(config: &RunConfig, law: &Law, loc: &Locator) -> Result<SchemeSpec, CliError> {
    let Some(sc) = &config.scheme else {
        return Err(loc.error("scheme", "simulate needs a \"scheme\" section"));
    };
    let innovation = law.sampler(&TableParams::default()).map_err(run_err)?;
    let b = sc.b.unwrap_or_else(|| law.scheme_b());
    let k = sc.k.unwrap_or(1);
    let scheme_err = |e: processes::ProcessError| {
        let key = match &e {
            processes::ProcessError::Parameter { name, .. } => format!("scheme.{name}"),
            _ => "scheme".to_string(),
        };
        loc.error(&key, format!("scheme: {e}"))
    };
    let mut spec = SchemeSpec::new(sc.combiner, b, k, Arc::clone(&innovation)).map_err(scheme_err)?;
    if let Some(p) = sc.p {
        spec = spec.randomized(p).map_err(scheme_err)?;
    }
    spec = spec
        .with_coin_mode(sc.coin_mode)
        .with_burn_in(sc.burn_in)
        .with_init(sc.init.clone())
        .map_err(scheme_err)?;
    Ok(spec)
}

fn cmd_simulate(config: &RunConfig, loc: &Locator, hash: &str) -> Result<i32, CliError> {
    let law = require_law(config, loc)?;
    let spec = build_scheme(config, &law, loc)?;
    let steps = count(config.n_steps, DEFAULT_STEPS, "n_steps", loc)?;
    let paths = count(config.n_paths, DEFAULT_PATHS, "n_paths", loc)?;
    let seed = config.seed.unwrap_or(0);
    let trajectories = processes::simulate(&spec, steps, paths, seed).map_err(run_err)?;
    let mut body = header(hash, seed).into_bytes();
    processes::write_trajectories_csv(&trajectories, &mut body).map_err(run_err)?;
    write_atomic(&out_dir(config)?.join("trajectory.csv"), &body)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub config_sha256: String,
    pub seed: u64,
    pub check: String,
    pub passed: bool,
    pub reports: Vec<VerificationReport>,
}

fn cmd_verify(config: &RunConfig, loc: &Locator, hash: &str) -> Result<i32, CliError> {
    let check = config.check.clone().unwrap_or_else(|| "all".to_string());
    let grid = config.grid.unwrap_or_default();
    if grid.points_per_decade == 0 || !(grid.decades > 0.0) {
        return Err(loc.error("grid", "grid needs points_per_decade >= 1 and decades > 0"));
    }
    let reports = match &config.law {
        Some(spec) => {
            let law = build_law(spec, loc)?;
            verify::law_suite(&law, &grid).map_err(run_err)?
        }
        None => {
            if !SUITE_NAMES.contains(&check.as_str()) {
                return Err(loc.error(
                    "check",
                    format!("unknown check {check:?}; expected one of {}", SUITE_NAMES.join(", ")),
                ));
            }
            verify::run_suite(&check, &grid).map_err(run_err)?
        }
    };
    let failed: Vec<&VerificationReport> = reports.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        eprintln!(
            "FAILED {}: residual {:e}, threshold {:e}",
            r.check_name, r.max_residual, r.threshold
        );
    }
    eprintln!("{} checks, {} failed", reports.len(), failed.len());
    let passed = failed.is_empty();
    let status = exit_status(&reports);
    let file = ReportFile {
        config_sha256: hash.to_string(),
        seed: config.seed.unwrap_or(0),
        check,
        passed,
        reports,
    };
    let mut body = serde_json::to_vec_pretty(&file).map_err(run_err)?;
    body.push(b'\n');
    write_atomic(&out_dir(config)?.join("report.json"), &body)?;
    Ok(status)
}

/// 0 when every report passed, 1 otherwise.
pub fn exit_status(reports: &[VerificationReport]) -> i32 {
    if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn json_number(v: &serde_json::Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:e}"),
        None => "inf".to_string(),
    }
}

fn cmd_report(config: &RunConfig, hash: &str) -> Result<i32, CliError> {
    let dir = out_dir(config)?;
    let mut inputs = match &config.reports {
        Some(list) => list.clone(),
        None => fs::read_dir(&dir)
            .map_err(run_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
    };
    inputs.sort();
    let mut body = header(hash, config.seed.unwrap_or(0)).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut body);
        w.write_record(["source", "check_name", "max_residual", "threshold", "comparison", "passed"])
            .map_err(run_err)?;
        for path in &inputs {
            let text = fs::read_to_string(path)
                .map_err(|e| run_err(format!("cannot read {}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| run_err(format!("{}: {e}", path.display())))?;
            let Some(reports) = value.get("reports").and_then(|r| r.as_array()) else {
                continue;
            };
            let source = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            for r in reports {
                let field = |k: &str| r.get(k).cloned().unwrap_or(serde_json::Value::Null);
                w.write_record([
                    source.clone(),
                    field("check_name").as_str().unwrap_or("").to_string(),
                    json_number(&field("max_residual")),
                    json_number(&field("threshold")),
                    field("comparison").as_str().unwrap_or("").to_string(),
                    field("passed").as_bool().unwrap_or(false).to_string(),
                ])
                .map_err(run_err)?;
            }
        }
        w.flush().map_err(run_err)?;
    }
    write_atomic(&dir.join("summary.csv"), &body)?;
    Ok(EXIT_OK)
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let (config, text) = load_config(cli)?;
    let loc = Locator { text: text.as_deref() };
    let hash = config_hash(&config);
    match config.command.expect("set from the subcommand") {
        Command::Sample => cmd_sample(&config, &loc, &hash),
        Command::Simulate => cmd_simulate(&config, &loc, &hash),
        Command::Verify => cmd_verify(&config, &loc, &hash),
        Command::Report => cmd_report(&config, &hash),
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            EXIT_ERROR
        }
    }
}
