//! Experiment harness behind the command-line tool: run a (method, model)
//! combination, re-evaluate frontiers, compare them and export plot data.
//!
//! A run directory holds `frontier.json`, `record.csv` and, for the subset
//! models, `cuts.log`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frontier::{
    balanced_box, epsilon_constraint, matheuristic, reevaluate_frontier, DriverOptions, Frontier,
    FrontierPoint, FrontierRun, MatheuristicOptions, ModelFamily,
};
use crate::indicators::{reference_point, IndicatorReport};
use crate::instance::{generate_instance, parse_instance, GeneratorParams, Instance, RiskSpec, ScenarioSet};

/// Default total time limit of a run, in seconds.
pub const DEFAULT_TIME_LIMIT: u64 = 7200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Epsilon,
    BalancedBox,
    Matheuristic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Epsilon => "e",
            Method::BalancedBox => "bb",
            Method::Matheuristic => "mat",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e" | "eps" | "epsilon" => Ok(Method::Epsilon),
            "bb" => Ok(Method::BalancedBox),
            "mat" => Ok(Method::Matheuristic),
            other => Err(Error::Usage(format!("unknown method '{other}' (expected e, bb or mat)"))),
        }
    }
}

/// Where the instance comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Generated { nodes: usize, scenarios: usize },
}

impl InstanceSource {
    /// Reads or generates the instance; `seed` only matters for generated
    /// instances.
    pub fn load(&self, seed: u64) -> Result<(Instance, ScenarioSet)> {
        match self {
            InstanceSource::File(p) => parse_instance(&read_file(p)?),
            InstanceSource::Generated { nodes, scenarios } => {
                generate_instance(seed, *nodes, *scenarios, &GeneratorParams::default())
            }
        }
    }

    /// Short name used in records.
    pub fn name(&self, seed: u64) -> String {
        match self {
            InstanceSource::File(p) => p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into()),
            InstanceSource::Generated { nodes, scenarios } => format!("gen-{nodes}-{scenarios}-s{seed}"),
        }
    }
}

/// Risk level given either as a confidence level or as a tail size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskLevel {
    Alpha(f64),
    K(usize),
}

impl RiskLevel {
    /// Builds a level from optional flags; exactly one must be set.
    pub fn from_flags(alpha: Option<f64>, k: Option<usize>) -> Result<Self> {
        match (alpha, k) {
            (Some(a), None) => Ok(RiskLevel::Alpha(a)),
            (None, Some(k)) => Ok(RiskLevel::K(k)),
            _ => Err(Error::Usage("give exactly one of --alpha and --k".into())),
        }
    }

    /// Risk spec for `n` scenarios; an out-of-range level is a usage error.
    pub fn resolve(self, n: usize) -> Result<RiskSpec> {
        match self {
            RiskLevel::Alpha(a) => RiskSpec::from_alpha(a, n),
            RiskLevel::K(k) => RiskSpec::new(k, n),
        }
        .map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Usage(m),
            e => e,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub instance: InstanceSource,
    pub method: Method,
    pub model: ModelFamily,
    pub risk: RiskLevel,
    pub time_limit_total: Option<Duration>,
    pub time_limit_per_point: Option<Duration>,
    /// Matheuristic neighbourhood radius.
    pub kappa: usize,
    /// Generator seed when the instance is generated.
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.model, ModelFamily::Classical | ModelFamily::Subset | ModelFamily::SubsetFrozen) {
            return Err(Error::Usage(format!("model '{}' is not available to runs (use ma, mb or mb-bar)", self.model)));
        }
        if self.method == Method::BalancedBox && !self.model.is_exact() {
            return Err(Error::Usage("bb requires an exact model (ma or mb)".into()));
        }
        if let RiskLevel::Alpha(a) = self.risk {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::Usage(format!("alpha must lie in [0, 1), got {a}")));
            }
        }
        if self.kappa == 0 {
            return Err(Error::Usage("kappa must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of `record.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub instance: String,
    pub method: String,
    pub model: String,
    pub alpha: f64,
    pub k: usize,
    /// Wall-clock seconds of the solve phase only.
    pub runtime_s: f64,
    pub n_ndp: usize,
    /// `complete`, `time-limit`, or `solver-failure` when some solves failed
    /// and were skipped.
    pub status: String,
}

/// Runs the configured driver without touching the disk.
pub fn solve(config: &RunConfig, instance: &Instance, scenarios: &ScenarioSet) -> Result<(RiskSpec, FrontierRun)> {
    config.validate()?;
    let risk = config.risk.resolve(scenarios.len())?;
    let driver = DriverOptions {
        time_limit_per_point: config.time_limit_per_point,
        time_limit_total: config.time_limit_total,
        reuse_cuts: false,
    };
    let run = match config.method {
        Method::Epsilon => epsilon_constraint(config.model, instance, scenarios, risk, &driver)?,
        Method::BalancedBox => balanced_box(config.model, instance, scenarios, risk, &driver)?,
        Method::Matheuristic => {
            let mut opts = MatheuristicOptions { kappa: config.kappa, time_limit_total: config.time_limit_total, ..Default::default() };
            if config.time_limit_per_point.is_some() {
                opts.per_point_budget = config.time_limit_per_point;
            }
            matheuristic(config.model, instance, scenarios, risk, &opts)?
        }
    };
    Ok((risk, run))
}

/// Runs an experiment and writes its run directory.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentRecord> {
    config.validate()?;
    let (instance, scenarios) = config.instance.load(config.seed)?;
    let (risk, run) = solve(config, &instance, &scenarios)?;
    let record = ExperimentRecord {
        instance: config.instance.name(config.seed),
        method: config.method.to_string(),
        model: config.model.to_string(),
        alpha: risk.alpha(),
        k: risk.k(),
        runtime_s: run.stats.seconds,
        n_ndp: run.frontier.len(),
        status: status(&run).to_string(),
    };
    fs::create_dir_all(&config.out)?;
    fs::write(config.out.join("frontier.json"), run.frontier.to_json()?)?;
    let mut w = csv::Writer::from_path(config.out.join("record.csv"))?;
    w.serialize(&record)?;
    w.flush()?;
    if matches!(config.model, ModelFamily::Subset | ModelFamily::SubsetFrozen) {
        fs::write(config.out.join("cuts.log"), cut_log(&run))?;
    }
    Ok(record)
}

fn status(run: &FrontierRun) -> &'static str {
    if run.stats.hit_time_limit() {
        "time-limit"
    } else if !run.stats.failures.is_empty() {
        "solver-failure"
    } else {
        "complete"
    }
}

fn cut_log(run: &FrontierRun) -> String {
    let mut s = format!(
        "cuts {}\nseparator_calls {}\nseparator_calls_after_first_point {}\n",
        run.stats.cuts(),
        run.stats.separator_calls(),
        run.stats.separator_calls_after_first_point()
    );
    for subset in &run.stats.pool {
        let ids: Vec<String> = subset.iter().map(|s| s.to_string()).collect();
        s.push_str(&format!("cut {}\n", ids.join(" ")));
    }
    for r in &run.stats.solves {
        s.push_str(&format!(
            "solve \"{}\" status={} separator_calls={} new_cuts={} nodes={}\n",
            r.label,
            r.status.as_str(),
            r.separator_calls,
            r.new_cuts,
            r.nodes
        ));
    }
    for f in &run.stats.failures {
        s.push_str(&format!("failure {f}\n"));
    }
    s
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_frontier(path: &Path) -> Result<Frontier> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Frontier::from_json(text)
}

/// Re-evaluates a frontier file with exact second-stage values.
pub fn reevaluate(frontier: &Path, instance: &InstanceSource, seed: u64, risk: RiskLevel, out: &Path) -> Result<Frontier> {
    let f = read_frontier(frontier)?;
    let (inst, scen) = instance.load(seed)?;
    let spec = risk.resolve(scen.len())?;
    let re = reevaluate_frontier(&f, &inst, &scen, spec)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, re.to_json()?)?;
    Ok(re)
}

/// Reference set of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Non-dominated union of all compared sets.
    Union,
    File(PathBuf),
}

/// Non-dominated union of several frontiers.
pub fn union(frontiers: &[&Frontier]) -> Frontier {
    let all: Vec<FrontierPoint> = frontiers.iter().flat_map(|f| f.points().iter().cloned()).collect();
    Frontier::from_points(all)
}

/// Indicators of every labelled set against the reference, sharing one
/// reference point.
pub fn compare(sets: &[(String, Frontier)], reference: &Frontier) -> Result<Vec<(String, IndicatorReport)>> {
    if sets.is_empty() {
        return Err(Error::Usage("compare needs at least one approximation set".into()));
    }
    if reference.is_empty() {
        return Err(Error::UndefinedIndicator("empty reference set".into()));
    }
    let mut all: Vec<Vec<(f64, f64)>> = sets.iter().map(|(_, f)| f.objectives()).collect();
    all.push(reference.objectives());
    let refs: Vec<&[(f64, f64)]> = all.iter().map(|v| v.as_slice()).collect();
    let point = reference_point(&refs);
    sets.iter()
        .map(|(label, f)| Ok((label.clone(), IndicatorReport::compute_at(f, reference, point)?)))
        .collect()
}

/// Reads the files, builds the reference and writes the indicator table.
pub fn compare_files(files: &[PathBuf], reference: &Reference, out: &mut dyn std::io::Write) -> Result<()> {
    let sets: Vec<(String, Frontier)> =
        files.iter().map(|p| Ok((series_label(p), read_frontier(p)?))).collect::<Result<_>>()?;
    let reference = match reference {
        Reference::Union => union(&sets.iter().map(|(_, f)| f).collect::<Vec<_>>()),
        Reference::File(p) => read_frontier(p)?,
    };
    let rows = compare(&sets, &reference)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(IndicatorReport::CSV_HEADER)?;
    for (label, r) in &rows {
        w.write_record(r.csv_record(label))?;
    }
    w.flush()?;
    Ok(())
}

/// Label of a frontier file: the run directory name for `frontier.json`
/// files, the file stem otherwise.
pub fn series_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem == "frontier" {
        if let Some(dir) = path.parent().and_then(|d| d.file_name()) {
            return dir.to_string_lossy().into_owned();
        }
    }
    if stem.is_empty() {
        path.display().to_string()
    } else {
        stem
    }
}

/// Concatenates frontiers as `series,cost,risk` rows. Duplicate labels get
/// a numeric suffix.
pub fn emit_plot_data(files: &[PathBuf], out: &mut dyn std::io::Write) -> Result<()> {
    let frontiers: Vec<Frontier> = files.iter().map(|p| read_frontier(p)).collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "cost", "risk"])?;
    let mut used: Vec<String> = Vec::new();
    for (p, f) in files.iter().zip(&frontiers) {
        let mut label = series_label(p);
        if used.contains(&label) {
            let mut n = 2;
            while used.contains(&format!("{label}-{n}")) {
                n += 1;
            }
            label = format!("{label}-{n}");
        }
        used.push(label.clone());
        if f.is_empty() {
            warn!("{}: empty frontier", p.display());
        }
        for pt in f.points() {
            w.write_record([label.clone(), pt.cost.to_string(), pt.risk.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
