//! Batch experiment runner: one JSON config in, CSV/JSON/SVG results out.
//!
//! Exit codes: 0 on success, 2 when the config or the model is rejected,
//! 3 when the computation itself fails.

pub mod config;
pub mod svg;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dependence::{CdModel, ValidationReport};
use crate::error::Error;
use crate::estimators::{
    breiman_constant, cd_diagnostic, moment_case, tail_ratio_mc, BreimanMethod, CdDiagnostic, TailRatioReport,
    DEFAULT_EPSILON,
};
use crate::mc::{parse_seed, RunConfig};
use crate::ruin::{Horizon, RiskModel, RuinResult};

pub use config::{Command, ExperimentConfig, MethodName, OutputPaths, Seed, DEFAULT_TAIL_TOL};
use svg::{Chart, Point};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

const DEFAULT_BREIMAN_MC: u64 = 1_000_000;

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Config or model rejected (exit 2).
    Rejected(String),
    /// The computation failed (exit 3).
    Runtime(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Rejected(_) => EXIT_REJECTED,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Rejected(m) => write!(f, "rejected: {m}"),
            Failure::Runtime(e) => write!(f, "runtime error: {e}"),
        }
    }
}

fn runtime(e: Error) -> Failure {
    match e {
        // preconditions on the model rather than numerical failures
        Error::NotCd | Error::Contraction(_) => Failure::Rejected(e.to_string()),
        e => Failure::Runtime(e),
    }
}

/// Rendered outputs of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub json: String,
    pub csv: Option<String>,
    pub svg: Option<String>,
    pub exit: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub blocks: usize,
    pub version: String,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        let canonical = serde_json::to_string(config).expect("config serializes");
        Self {
            command: config.command.name().to_string(),
            config: config.clone(),
            config_hash: hex::encode(Sha256::digest(canonical.as_bytes())),
            seed: config.seed.map(|s| s.0),
            blocks: config.blocks,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Reads and checks a config file for `command`, applying a `--seed` override.
pub fn load_config(path: &Path, command: &str, seed: Option<&str>) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Rejected(format!("cannot read {}: {e}", path.display())))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))?;
    if config.command.name() != command {
        return Err(Failure::Rejected(format!(
            "config describes a {} experiment, not {command}",
            config.command.name()
        )));
    }
    if let Some(s) = seed {
        config.seed = Some(Seed(parse_seed(s).map_err(|e| Failure::Rejected(e.to_string()))?));
    }
    Ok(config)
}

fn need_seed(config: &ExperimentConfig) -> Result<u64, Failure> {
    config
        .seed
        .map(|s| s.0)
        .ok_or_else(|| Failure::Rejected(format!("{} needs a seed (config or --seed)", config.command.name())))
}

fn csv_string<F>(header: &[&str], fill: F) -> String
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    fill(&mut w).expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn document(manifest: &Manifest, result: Value) -> String {
    let mut s = serde_json::to_string_pretty(&json!({ "manifest": manifest, "result": result })).expect("json");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

/// Runs a parsed config. `threads` affects scheduling only, never results.
pub fn execute(config: &ExperimentConfig, threads: Option<usize>) -> Result<Outcome, Failure> {
    if config.blocks == 0 {
        return Err(Failure::Rejected("blocks must be at least 1".into()));
    }
    let run = RunConfig { blocks: config.blocks, threads };
    let model = CdModel::from_spec(&config.model).map_err(|e| Failure::Rejected(e.to_string()))?;
    let report = model.validate();
    let manifest = Manifest::new(config);

    if let Command::Validate {} = config.command {
        let exit = if report.usable() { EXIT_OK } else { EXIT_REJECTED };
        return Ok(Outcome {
            json: document(&manifest, json!({ "usable": report.usable(), "report": report })),
            csv: Some(validation_csv(&report)),
            svg: None,
            exit,
        });
    }
    if !report.usable() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(Failure::Rejected(format!("model failed validation: {}", names.join(", "))));
    }

    let (result, csv, svg) = match &config.command {
        Command::Validate {} => unreachable!(),
        Command::Breiman { alpha, method, n } => {
            let alpha = match alpha.or(model.x_rv_index()) {
                Some(a) => a,
                None => return Err(Failure::Rejected("alpha not given and F is not regularly varying".into())),
            };
            let method = match method {
                MethodName::Quadrature => BreimanMethod::Quadrature,
                MethodName::MonteCarlo => BreimanMethod::MonteCarlo {
                    n: n.unwrap_or(DEFAULT_BREIMAN_MC),
                    seed: need_seed(config)?,
                },
            };
            let est = breiman_constant(&model, alpha, method, &run).map_err(runtime)?;
            let case = moment_case(&model, alpha, DEFAULT_EPSILON).map_err(runtime)?;
            let value = est.value.finite();
            let result = json!({
                "alpha": alpha,
                "method": method,
                "value": value,
                "divergent": value.is_none(),
                "stderr": est.stderr,
                "moment_case": case,
            });
            let csv = csv_string(&["alpha", "method", "value", "stderr"], |w| {
                let m = match method {
                    BreimanMethod::Quadrature => "quadrature",
                    BreimanMethod::MonteCarlo { .. } => "monte_carlo",
                };
                let v = value.map(num).unwrap_or_else(|| "divergent".into());
                w.write_record([num(alpha), m.into(), v, num(est.stderr)])
            });
            (result, csv, None)
        }
        Command::TailRatio { thresholds, n } => {
            let r = tail_ratio_mc(&model, thresholds, *n, need_seed(config)?, &run).map_err(runtime)?;
            (to_value(&r), tail_ratio_csv(&r), Some(tail_ratio_chart(&r, "P(XY > x) / F(x) tail")))
        }
        Command::CdCheck { x_grid, policy } => {
            let d = cd_diagnostic(&model, x_grid, policy.clone()).map_err(runtime)?;
            (to_value(&d), cd_csv(&d), Some(cd_chart(&d)))
        }
        Command::Ruin { x_grid, horizon, n_samples, tail_tol } => {
            let seed = need_seed(config)?;
            let risk = RiskModel::new(model.clone()).map_err(runtime)?;
            let r = match horizon {
                Horizon::Finite(n) => risk.psi_finite_mc(x_grid, *n, *n_samples, seed, &run),
                Horizon::Infinite(_) => {
                    risk.psi_infinite_mc(x_grid, tail_tol.unwrap_or(DEFAULT_TAIL_TOL), *n_samples, seed, &run)
                }
            }
            .map_err(runtime)?;
            (to_value(&r), ruin_csv(&r), Some(ruin_chart(&r)))
        }
        Command::TermTail { i, x_grid, n } => {
            let risk = RiskModel::new(model.clone()).map_err(runtime)?;
            let r = risk.term_tail_mc(*i, x_grid, *n, need_seed(config)?, &run).map_err(runtime)?;
            let mut v = to_value(&r);
            v["i"] = json!(i);
            let label = format!("P(X_{i} Y_1...Y_{i} > x) / F(x) tail");
            (v, tail_ratio_csv(&r), Some(tail_ratio_chart(&r, &label)))
        }
    };
    Ok(Outcome { json: document(&manifest, result), csv: Some(csv), svg: svg.map(|c| c.render()), exit: EXIT_OK })
}

fn validation_csv(r: &ValidationReport) -> String {
    csv_string(&["name", "passed", "mandatory", "detail"], |w| {
        for c in &r.checks {
            w.write_record([c.name.clone(), c.passed.to_string(), c.mandatory.to_string(), c.detail.clone()])?;
        }
        Ok(())
    })
}

pub fn tail_ratio_csv(r: &TailRatioReport) -> String {
    csv_string(&["x", "n_samples", "hits", "p_hat", "ratio", "ci_lo", "ci_hi", "predicted_constant"], |w| {
        for row in &r.rows {
            w.write_record([
                num(row.x),
                row.n_samples.to_string(),
                row.hits.to_string(),
                num(row.p_hat),
                num(row.ratio),
                num(row.ci_lo),
                num(row.ci_hi),
                opt_num(r.predicted_constant),
            ])?;
        }
        Ok(())
    })
}

fn cd_csv(d: &CdDiagnostic) -> String {
    csv_string(&["x", "sup_deviation", "argmax_y", "grid_size", "verdict"], |w| {
        for row in &d.rows {
            w.write_record([
                num(row.x),
                num(row.sup_deviation),
                num(row.argmax_y),
                row.grid_size.to_string(),
                d.verdict.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn ruin_csv(r: &RuinResult) -> String {
    let n = match r.horizon {
        Horizon::Finite(n) => n.to_string(),
        Horizon::Infinite(_) => "inf".into(),
    };
    csv_string(&["x", "n", "N", "hits", "psi_hat", "stderr", "prediction", "ratio"], |w| {
        for row in &r.rows {
            w.write_record([
                num(row.x),
                n.clone(),
                r.n_samples.to_string(),
                row.hits.to_string(),
                num(row.psi_hat),
                num(row.stderr),
                num(row.prediction),
                num(row.ratio_to_prediction),
            ])?;
        }
        Ok(())
    })
}

pub fn tail_ratio_chart(r: &TailRatioReport, y_label: &str) -> Chart {
    Chart {
        title: format!("Tail ratio, N = {}", r.n_samples),
        x_label: "x".into(),
        y_label: y_label.into(),
        points: r.rows.iter().map(|row| Point { x: row.x, y: row.ratio, lo: row.ci_lo, hi: row.ci_hi }).collect(),
        asymptote: r.predicted_constant.map(|c| (c, format!("predicted {c:.6}"))),
        annotation: None,
    }
}

pub fn cd_chart(d: &CdDiagnostic) -> Chart {
    Chart {
        title: "Uniformity of P(X > x | Y = y) / (F(x) tail s(y))".into(),
        x_label: "x".into(),
        y_label: "sup deviation".into(),
        points: d.rows.iter().map(|r| Point { x: r.x, y: r.sup_deviation, lo: r.sup_deviation, hi: r.sup_deviation }).collect(),
        asymptote: Some((0.0, "limit 0".into())),
        annotation: Some(format!("verdict: {}", d.verdict)),
    }
}

pub fn ruin_chart(r: &RuinResult) -> Chart {
    let horizon = match r.horizon {
        Horizon::Finite(n) => format!("n = {n}"),
        Horizon::Infinite(_) => format!("infinite (depth {})", r.depth),
    };
    Chart {
        title: format!("Ruin probability, {horizon}, N = {}", r.n_samples),
        x_label: "x".into(),
        y_label: "psi(x) / F(x) tail".into(),
        points: r
            .rows
            .iter()
            .map(|row| Point {
                x: row.x,
                y: row.psi_hat / row.x_tail,
                lo: row.ci_lo / row.x_tail,
                hi: row.ci_hi / row.x_tail,
            })
            .collect(),
        asymptote: Some((r.multiplier, format!("predicted {:.6}", r.multiplier))),
        annotation: None,
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// Writes the requested files. JSON goes to stdout when no `json_path` is set.
pub fn emit(outcome: &Outcome, paths: &OutputPaths) -> Result<(), Error> {
    match &paths.json_path {
        Some(p) => write_atomic(p, outcome.json.as_bytes())?,
        None => print!("{}", outcome.json),
    }
    if let (Some(p), Some(csv)) = (&paths.csv_path, &outcome.csv) {
        write_atomic(p, csv.as_bytes())?;
    }
    match (&paths.svg_path, &outcome.svg) {
        (Some(p), Some(svg)) => write_atomic(p, svg.as_bytes())?,
        (Some(_), None) => eprintln!("note: this command has no chart; svg_path ignored"),
        _ => {}
    }
    Ok(())
}

/// Full CLI flow for one subcommand; returns the process exit code.
pub fn run(command: &str, config_path: &Path, seed: Option<&str>, threads: Option<usize>) -> i32 {
    let started = Instant::now();
    let config = match load_config(config_path, command, seed) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("cdrisk {command}: {f}");
            return f.exit_code();
        }
    };
    let outcome = match execute(&config, threads) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("cdrisk {command}: {f}");
            return f.exit_code();
        }
    };
    if let Err(e) = emit(&outcome, &config.output) {
        eprintln!("cdrisk {command}: {e}");
        return EXIT_RUNTIME;
    }
    if outcome.exit == EXIT_REJECTED {
        eprintln!("cdrisk {command}: model failed validation");
    }
    eprintln!("cdrisk {command}: done in {:.3} s", started.elapsed().as_secs_f64());
    outcome.exit
}
