//! Experiment configuration and the trace → timeline → evaluation runner.
//!
//! The config file is flat TOML: every key sits at the top level. See the
//! README for the full key list.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;

use crate::channel::{CarrierSenseMode, FerCurve, RadioParams, RateTable};
use crate::error::{Error, Result};
use crate::evaluation::{self, EvaluationReport, FlowSpec, DEFAULT_PACKET_BYTES};
use crate::format::sig9;
use crate::metrics::{check_alpha, AirtimeParams, MetricKind};
use crate::mobility::{self, MobilityTrace, RwmParams, Vec3};
use crate::routing::{self, ForwardingTimeline, PlanConfig};
use crate::topology::NodeId;

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "I2R_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Trace(PathBuf),
    /// Random waypoint; the seed is replaced by each run's seed.
    Rwm(RwmParams),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSelection {
    /// The first `n` node ids other than the gateway, ascending.
    Count(usize),
    /// Explicit ids, routed in the listed order.
    List(Vec<NodeId>),
}

impl SourceSelection {
    pub fn len(&self) -> usize {
        match self {
            SourceSelection::Count(n) => *n,
            SourceSelection::List(ids) => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolve(&self, gateway: NodeId, node_count: usize) -> Result<Vec<NodeId>> {
        let ids: Vec<NodeId> = match self {
            SourceSelection::Count(n) => (0..node_count).filter(|&u| u != gateway).take(*n).collect(),
            SourceSelection::List(ids) => ids.clone(),
        };
        if ids.len() != self.len() {
            return Err(Error::Config {
                key: "sources".into(),
                message: format!("{} sources requested but only {} non-gateway nodes", self.len(), ids.len()),
            });
        }
        for &s in &ids {
            if s >= node_count || s == gateway {
                return Err(Error::Config {
                    key: "sources".into(),
                    message: format!("source {s} is not a non-gateway node id (n = {node_count})"),
                });
            }
        }
        Ok(ids)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub radio: RadioParams,
    pub rates: RateTable,
    pub fer: FerCurve,
    pub airtime: AirtimeParams,
    pub gateway: NodeId,
    pub sources: SourceSelection,
    /// Per flow, bit/s.
    pub offered_load_bps: f64,
    pub packet_bytes: u32,
    pub sample_period: f64,
    pub metrics: Vec<MetricKind>,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

/// `0.75 · (max_rate / n_tx) / 2`: three quarters of the per-flow share of
/// the top PHY rate, assuming two hops on average.
pub fn default_offered_load(max_rate_bps: f64, n_tx: usize) -> f64 {
    0.75 * (max_rate_bps / n_tx as f64) / 2.0
}

/// Top-level table with consumed-key tracking.
struct Fields {
    table: toml::Table,
}

impl Fields {
    fn take<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(v) => v.try_into().map(Some).map_err(|e| Error::Config {
                key: key.to_string(),
                message: e.to_string().trim().to_string(),
            }),
        }
    }

    fn has_any(&self, prefix: &str) -> bool {
        self.table.keys().any(|k| k.starts_with(prefix))
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            Some(key) => Err(Error::Config {
                key: key.clone(),
                message: "unknown key".into(),
            }),
            None => Ok(()),
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum RawSources {
    Count(usize),
    List(Vec<NodeId>),
}

impl ExperimentConfig {
    /// Parses config text. Relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            key: "<document>".into(),
            message: e.to_string().trim().to_string(),
        })?;
        let mut f = Fields { table };

        let trace: Option<PathBuf> = f.take("trace")?;
        let scenario = match trace {
            Some(path) => {
                if f.has_any("rwm_") {
                    return Err(config_err("trace", "`trace` cannot be combined with rwm_* keys"));
                }
                Scenario::Trace(base_dir.join(path))
            }
            None => {
                let mut rwm = RwmParams::default();
                if let Some([x, y, z]) = f.take::<[f64; 3]>("rwm_box")? {
                    rwm.extents = Vec3::new(x, y, z);
                }
                if let Some(v) = f.take("rwm_speed_min")? {
                    rwm.speed_min = v;
                }
                if let Some(v) = f.take("rwm_speed_max")? {
                    rwm.speed_max = v;
                }
                if let Some(v) = f.take("rwm_pause")? {
                    rwm.pause = v;
                }
                if let Some(v) = f.take("rwm_duration")? {
                    rwm.duration = v;
                }
                if let Some(v) = f.take("rwm_nodes")? {
                    rwm.node_count = v;
                }
                rwm.validate().map_err(|e| config_err("rwm_*", e.to_string()))?;
                Scenario::Rwm(rwm)
            }
        };

        let mut radio = RadioParams::default();
        macro_rules! radio_key {
            ($field:ident) => {
                if let Some(v) = f.take(stringify!($field))? {
                    radio.$field = v;
                }
            };
        }
        radio_key!(tx_power_dbm);
        radio_key!(frequency_hz);
        radio_key!(bandwidth_hz);
        radio_key!(noise_figure_db);
        radio_key!(snr_threshold_db);
        radio_key!(cs_threshold_dbm);
        radio_key!(tx_gain_db);
        radio_key!(rx_gain_db);
        if let Some(mode) = f.take::<String>("cs_mode")? {
            radio.cs_mode = match mode.as_str() {
                "power" => CarrierSenseMode::PowerThreshold,
                "usable-link" => CarrierSenseMode::UsableLink,
                other => return Err(config_err("cs_mode", format!("expected `power` or `usable-link`, got `{other}`"))),
            };
        }
        radio.validate().map_err(|e| config_err("radio", e.to_string()))?;

        let rates = match f.take::<Vec<(f64, f64)>>("rate_table")? {
            Some(entries) => RateTable::new(entries).map_err(|e| config_err("rate_table", e.to_string()))?,
            None => RateTable::default(),
        };

        let mut fer = FerCurve::for_threshold(radio.snr_threshold_db);
        if let Some(v) = f.take("fer_steepness")? {
            fer.steepness = v;
        }
        if let Some(v) = f.take("fer_midpoint_db")? {
            fer.midpoint_db = v;
        }
        let mut airtime = AirtimeParams::default();
        if let Some(v) = f.take("airtime_overhead_s")? {
            airtime.overhead_s = v;
        }
        if let Some(v) = f.take("airtime_frame_bits")? {
            airtime.frame_bits = v;
        }

        let gateway: NodeId = f.take("gateway")?.unwrap_or(0);
        let sources = match f.take::<RawSources>("sources")? {
            None => SourceSelection::Count(5),
            Some(RawSources::Count(n)) => SourceSelection::Count(n),
            Some(RawSources::List(ids)) => {
                let unique: BTreeSet<_> = ids.iter().collect();
                if unique.len() != ids.len() {
                    return Err(config_err("sources", "duplicate source id"));
                }
                SourceSelection::List(ids)
            }
        };
        if sources.is_empty() {
            return Err(config_err("sources", "at least one source is required"));
        }

        let offered_load_bps = match f.take::<f64>("offered_load_bps")? {
            Some(v) => v,
            None => default_offered_load(rates.max_rate(), sources.len()),
        };
        if !(offered_load_bps > 0.0 && offered_load_bps.is_finite()) {
            return Err(config_err("offered_load_bps", format!("must be > 0, got {offered_load_bps}")));
        }
        let packet_bytes: u32 = f.take("packet_bytes")?.unwrap_or(DEFAULT_PACKET_BYTES);
        if packet_bytes == 0 {
            return Err(config_err("packet_bytes", "must be > 0"));
        }
        let sample_period: f64 = f.take("sample_period")?.unwrap_or(1.0);
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(config_err("sample_period", format!("must be > 0, got {sample_period}")));
        }

        let metric_names: Vec<String> = f
            .take("metrics")?
            .ok_or_else(|| config_err("metrics", "at least one metric is required"))?;
        if metric_names.is_empty() {
            return Err(config_err("metrics", "at least one metric is required"));
        }
        let metrics = metric_names
            .iter()
            .map(|m| m.parse().map_err(|e: Error| config_err("metrics", e.to_string())))
            .collect::<Result<Vec<MetricKind>>>()?;
        let alphas: Vec<f64> = f.take("alphas")?.unwrap_or_else(|| vec![1.0]);
        if alphas.is_empty() {
            return Err(config_err("alphas", "at least one alpha is required"));
        }
        for &a in &alphas {
            check_alpha(a).map_err(|e| config_err("alphas", e.to_string()))?;
        }
        let seeds: Vec<u64> = f.take("seeds")?.unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(config_err("seeds", "at least one seed is required"));
        }
        let output_dir = base_dir.join(f.take::<PathBuf>("output_dir")?.unwrap_or_else(|| "results".into()));
        f.finish()?;

        Ok(Self {
            scenario,
            radio,
            rates,
            fer,
            airtime,
            gateway,
            sources,
            offered_load_bps,
            packet_bytes,
            sample_period,
            metrics,
            alphas,
            seeds,
            output_dir,
        })
    }

    /// The trace used by runs with `seed`.
    pub fn trace(&self, seed: u64) -> Result<MobilityTrace> {
        match &self.scenario {
            Scenario::Trace(path) => mobility::parse_trace(&fs::read_to_string(path)?),
            Scenario::Rwm(params) => mobility::generate_rwm(&RwmParams { seed, ..params.clone() }),
        }
    }

    pub fn plan_config(&self, metric: MetricKind, alpha: f64, node_count: usize) -> Result<PlanConfig> {
        if self.gateway >= node_count {
            return Err(config_err("gateway", format!("{} is not a node id (n = {node_count})", self.gateway)));
        }
        Ok(PlanConfig {
            gateway: self.gateway,
            sources: self.sources.resolve(self.gateway, node_count)?,
            metric,
            alpha,
            radio: self.radio.clone(),
            rates: self.rates.clone(),
            fer: self.fer,
            airtime: self.airtime,
            sample_period: self.sample_period,
        })
    }
}

/// Reads and validates a config file; `I2R_OUTPUT_DIR` replaces `output_dir`.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut config = ExperimentConfig::parse(&text, base)?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        config.output_dir = PathBuf::from(dir);
    }
    Ok(config)
}

/// Output of one (metric, α, seed) combination.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub metric: MetricKind,
    pub alpha: f64,
    pub seed: u64,
    pub timeline: ForwardingTimeline,
    pub report: EvaluationReport,
}

impl RunResult {
    pub fn dir_name(&self) -> String {
        format!("{}_a{}_s{}", self.metric, self.alpha, self.seed)
    }
}

/// Plans and evaluates one combination without touching the filesystem.
///
/// Rows cover the sampling intervals `[t_k, t_k + Δt)` that start before
/// the end of the trace.
pub fn run_one(
    config: &ExperimentConfig,
    trace: &MobilityTrace,
    metric: MetricKind,
    alpha: f64,
    seed: u64,
) -> Result<RunResult> {
    let plan_config = config.plan_config(metric, alpha, trace.node_count())?;
    let plans = routing::plan_all(trace, &plan_config)?;
    let timeline = ForwardingTimeline::from_tables(plans.iter().map(|p| p.assignment.table.clone()));
    let flows = plan_config
        .sources
        .iter()
        .map(|&s| {
            FlowSpec::new(s, config.offered_load_bps).map(|f| FlowSpec {
                packet_bytes: config.packet_bytes,
                ..f
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for plan in plans.iter().filter(|p| p.time < trace.duration()) {
        let table = timeline
            .table_at(plan.time)
            .ok_or_else(|| Error::Consistency(format!("no forwarding table at t={}", plan.time)))?;
        let paths: Vec<Option<Vec<NodeId>>> = flows.iter().map(|f| table.path_from(f.source)).collect();
        rows.push(evaluation::estimate(&plan.assignment.snapshot, &paths, &flows)?);
    }
    Ok(RunResult {
        metric,
        alpha,
        seed,
        timeline,
        report: evaluation::summarize(rows),
    })
}

/// One line of the cross-run comparison table (averaged over seeds).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: MetricKind,
    pub alpha: f64,
    pub runs: usize,
    pub mean_throughput_bps: f64,
    pub mean_delay_s: f64,
    pub mean_saturated_flows: f64,
}

pub fn compare(config: &ExperimentConfig, results: &[RunResult]) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for &metric in &config.metrics {
        for &alpha in &config.alphas {
            let runs: Vec<&RunResult> = results
                .iter()
                .filter(|r| r.metric == metric && r.alpha == alpha)
                .collect();
            let avg = |f: &dyn Fn(&RunResult) -> f64| {
                let v: Vec<f64> = runs.iter().map(|r| f(r)).filter(|x| x.is_finite()).collect();
                if v.is_empty() {
                    f64::NAN
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            };
            rows.push(ComparisonRow {
                metric,
                alpha,
                runs: runs.len(),
                mean_throughput_bps: avg(&|r| r.report.mean_throughput()),
                mean_delay_s: avg(&|r| r.report.mean_delay()),
                mean_saturated_flows: avg(&|r| r.report.mean_saturated_flows()),
            });
        }
    }
    rows
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("metric,alpha,runs,mean_throughput_bps,mean_delay_s,mean_saturated_flows\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.metric,
            r.alpha,
            r.runs,
            sig9(r.mean_throughput_bps),
            sig9(r.mean_delay_s),
            sig9(r.mean_saturated_flows)
        );
    }
    out
}

fn write_run(dir: &Path, run: &RunResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("per_sample.csv"), run.report.rows_csv())?;
    fs::write(dir.join("delay_cdf.csv"), run.report.delay_cdf_csv())?;
    fs::write(dir.join("throughput_ccdf.csv"), run.report.throughput_ccdf_csv())?;
    fs::write(dir.join("summary.csv"), run.report.summary_csv())?;
    fs::write(dir.join("timeline.txt"), run.timeline.dump())?;
    Ok(())
}

fn manifest(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tool i2r {}", env!("CARGO_PKG_VERSION"));
    let scenario = match &config.scenario {
        Scenario::Trace(p) => format!(
            "trace {}",
            p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned())
        ),
        Scenario::Rwm(p) => format!(
            "rwm box {}x{}x{} speed {}..{} pause {} duration {} nodes {}",
            p.extents.x, p.extents.y, p.extents.z, p.speed_min, p.speed_max, p.pause, p.duration, p.node_count
        ),
    };
    let _ = writeln!(out, "scenario {scenario}");
    let _ = writeln!(out, "gateway {}", config.gateway);
    let _ = writeln!(out, "sources {:?}", config.sources);
    let _ = writeln!(out, "offered_load_bps {}", sig9(config.offered_load_bps));
    let _ = writeln!(out, "sample_period {}", config.sample_period);
    for r in results {
        let _ = writeln!(out, "run {} timeline_entries {} rows {}", r.dir_name(), r.timeline.len(), r.report.rows.len());
    }
    out
}

fn staging_dir(output: &Path) -> PathBuf {
    let name = output
        .file_name()
        .map_or_else(|| "results".into(), |n| n.to_string_lossy().into_owned());
    output.with_file_name(format!(".{name}.partial"))
}

/// Runs every (metric, α, seed) combination and writes the result tree.
///
/// Everything is written to a staging directory that replaces `output_dir`
/// only after all runs succeed; on failure the staging directory is removed.
pub fn run(config: &ExperimentConfig) -> Result<Vec<ComparisonRow>> {
    let staging = staging_dir(&config.output_dir);
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    let outcome = run_into(config, &staging);
    match outcome {
        Ok(rows) => {
            if config.output_dir.exists() {
                fs::remove_dir_all(&config.output_dir)?;
            }
            fs::rename(&staging, &config.output_dir)?;
            Ok(rows)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

fn run_into(config: &ExperimentConfig, dir: &Path) -> Result<Vec<ComparisonRow>> {
    fs::create_dir_all(dir)?;
    let mut results = Vec::new();
    for &seed in &config.seeds {
        let trace = config.trace(seed)?;
        for &metric in &config.metrics {
            for &alpha in &config.alphas {
                let result = run_one(config, &trace, metric, alpha, seed)?;
                info!(
                    "{}: mean throughput {} bit/s, mean delay {} s",
                    result.dir_name(),
                    sig9(result.report.mean_throughput()),
                    sig9(result.report.mean_delay())
                );
                write_run(&dir.join(result.dir_name()), &result)?;
                results.push(result);
            }
        }
    }
    let rows = compare(config, &results);
    fs::write(dir.join("comparison.csv"), comparison_csv(&rows))?;
    fs::write(dir.join("manifest.txt"), manifest(config, &results))?;
    Ok(rows)
}
