//! Scenario files, the strategy/sweep runner, and CSV output.
//!
//! A scenario is one TOML file. Every layer of its workload runs under the
//! row-major baseline plus each configured strategy; a sweep repeats that for
//! every point of one axis. Independent simulations run in parallel, results
//! are assembled in configuration order so output is byte-identical across runs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accelerator::{run_layer, run_layer_with_sampling, LayerRunResult, RunOptions};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::mapping::{
    map_distance_based, map_post_run, map_row_major, map_static_latency, Aggregation, SamplingWindow,
    StaticLatencyParams, Strategy,
};
use crate::metrics::{improvement, unevenness_active};
use crate::topology::{NodeId, Topology, TopologyConfig};
use crate::workload::{preset, tasks_for_layer, LayerKind, LayerSpec};

pub const CHANNEL_POINTS: [usize; 5] = [3, 6, 12, 24, 48];
pub const KERNEL_POINTS: [usize; 7] = [1, 3, 5, 7, 9, 11, 13];
pub const WINDOW_POINTS: [Strategy; 4] = [
    Strategy::Sampling(1),
    Strategy::Sampling(5),
    Strategy::Sampling(10),
    Strategy::PostRun,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub sim: SimConfig,
    pub workload: WorkloadConfig,
    /// Strategies to evaluate. Row-major always runs as the baseline.
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    /// Overrides the static-latency parameters derived from the topology.
    #[serde(default)]
    pub static_latency: Option<StaticLatencyParams>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Runs are always seedless and deterministic; `false` is rejected.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

fn yes() -> bool {
    true
}

fn default_strategies() -> Vec<Strategy> {
    vec![
        Strategy::RowMajor,
        Strategy::Distance,
        Strategy::StaticLatency,
        Strategy::PostRun,
        Strategy::Sampling(10),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default)]
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    #[default]
    None,
    OutputChannels,
    KernelSize,
    Architecture,
    Window,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axis: SweepAxis,
    /// Replaces the axis' default points.
    #[serde(default)]
    pub points: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Metrics CSV; defaults to `<name>.csv` in the working directory.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    TwoMc,
    FourMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPoint {
    OutputChannels(usize),
    KernelSize(usize),
    Architecture(Architecture),
    Window(Strategy),
}

impl SweepPoint {
    pub fn label(&self) -> String {
        match self {
            SweepPoint::OutputChannels(c) => format!("channels={c}"),
            SweepPoint::KernelSize(k) => format!("kernel={k}"),
            SweepPoint::Architecture(Architecture::TwoMc) => "arch=2mc".into(),
            SweepPoint::Architecture(Architecture::FourMc) => "arch=4mc".into(),
            SweepPoint::Window(s) => format!("window={s}"),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("scenario name must not be empty".into()));
        }
        if !self.deterministic {
            return Err(Error::Config("only deterministic execution is supported".into()));
        }
        self.sim.validate()?;
        Topology::new(self.topology.clone())?;
        for layer in self.layers()? {
            layer.task_shape()?;
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if self.sweep.axis != SweepAxis::None {
            self.sweep_points()?;
        } else if self.sweep.points.is_some() {
            return Err(Error::Config("sweep points given without a sweep axis".into()));
        }
        Ok(())
    }

    pub fn layers(&self) -> Result<Vec<LayerSpec>> {
        let w = &self.workload;
        let layers = match (&w.preset, w.layers.is_empty()) {
            (Some(name), true) => {
                preset(name).ok_or_else(|| Error::Config(format!("unknown workload preset `{name}`")))?
            }
            (None, false) => w.layers.clone(),
            (Some(_), false) => {
                return Err(Error::Config("workload takes either a preset or layers, not both".into()))
            }
            (None, true) => return Err(Error::Config("workload needs a preset or a layer list".into())),
        };
        Ok(layers
            .into_iter()
            .enumerate()
            .map(|(i, mut l)| {
                if l.name.is_empty() {
                    l.name = format!("L{}", i + 1);
                }
                l
            })
            .collect())
    }

    pub fn output_path(&self) -> PathBuf {
        self.output
            .path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)))
    }

    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>> {
        let parse_usize = |s: &str| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| Error::Config(format!("bad sweep point `{s}`")))
        };
        let given = self.sweep.points.as_deref();
        let points = match self.sweep.axis {
            SweepAxis::None => return Err(Error::Config("scenario has no sweep axis".into())),
            SweepAxis::OutputChannels => match given {
                Some(ps) => ps.iter().map(|p| parse_usize(p).map(SweepPoint::OutputChannels)).collect::<Result<_>>()?,
                None => CHANNEL_POINTS.iter().map(|&c| SweepPoint::OutputChannels(c)).collect(),
            },
            SweepAxis::KernelSize => match given {
                Some(ps) => ps.iter().map(|p| parse_usize(p).map(SweepPoint::KernelSize)).collect::<Result<_>>()?,
                None => KERNEL_POINTS.iter().map(|&k| SweepPoint::KernelSize(k)).collect(),
            },
            SweepAxis::Architecture => match given {
                Some(ps) => ps
                    .iter()
                    .map(|p| match p.trim().to_ascii_lowercase().as_str() {
                        "2mc" => Ok(SweepPoint::Architecture(Architecture::TwoMc)),
                        "4mc" => Ok(SweepPoint::Architecture(Architecture::FourMc)),
                        other => Err(Error::Config(format!("bad architecture point `{other}`"))),
                    })
                    .collect::<Result<_>>()?,
                None => vec![
                    SweepPoint::Architecture(Architecture::TwoMc),
                    SweepPoint::Architecture(Architecture::FourMc),
                ],
            },
            SweepAxis::Window => match given {
                Some(ps) => ps
                    .iter()
                    .map(|p| {
                        let s = p.trim();
                        match s.parse::<u64>() {
                            Ok(w) if w >= 1 => Ok(SweepPoint::Window(Strategy::Sampling(w))),
                            _ => s.parse::<Strategy>().map(SweepPoint::Window),
                        }
                    })
                    .collect::<Result<_>>()?,
                None => WINDOW_POINTS.iter().map(|&s| SweepPoint::Window(s)).collect(),
            },
        };
        if points.is_empty() {
            return Err(Error::Config("sweep has no points".into()));
        }
        Ok(points)
    }
}

/// A scenario with everything resolved, ready to simulate.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub label: String,
    pub topology: TopologyConfig,
    pub sim: SimConfig,
    pub layers: Vec<LayerSpec>,
    /// Row-major first, no duplicates.
    pub strategies: Vec<Strategy>,
    pub aggregation: Aggregation,
    pub static_latency: Option<StaticLatencyParams>,
}

impl ResolvedScenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let mut strategies = vec![Strategy::RowMajor];
        for s in &cfg.strategies {
            if !strategies.contains(s) {
                strategies.push(*s);
            }
        }
        Ok(Self {
            label: cfg.name.clone(),
            topology: cfg.topology.clone(),
            sim: cfg.sim.clone(),
            layers: cfg.layers()?,
            strategies,
            aggregation: cfg.sampling.aggregation,
            static_latency: cfg.static_latency,
        })
    }

    pub fn at_point(&self, point: SweepPoint) -> Result<Self> {
        let mut r = self.clone();
        r.label = format!("{}/{}", self.label, point.label());
        let convs = r.layers.iter().filter(|l| l.kind == LayerKind::Conv).count();
        match point {
            SweepPoint::OutputChannels(c) => {
                if convs == 0 {
                    return Err(Error::Config("output_channels sweep needs a conv layer".into()));
                }
                for l in r.layers.iter_mut().filter(|l| l.kind == LayerKind::Conv) {
                    l.out_channels = c;
                }
            }
            SweepPoint::KernelSize(k) => {
                if convs == 0 {
                    return Err(Error::Config("kernel_size sweep needs a conv layer".into()));
                }
                for l in r.layers.iter_mut().filter(|l| l.kind == LayerKind::Conv) {
                    l.kernel = k;
                    l.padding = (k - 1) / 2;
                }
            }
            SweepPoint::Architecture(arch) => {
                let mut t = match arch {
                    Architecture::TwoMc => TopologyConfig::mesh_4x4_two_mc(),
                    Architecture::FourMc => TopologyConfig::mesh_4x4_four_mc(),
                };
                t.link_delay = self.topology.link_delay;
                t.router_delay = self.topology.router_delay;
                t.ni_delay = self.topology.ni_delay;
                r.topology = t;
            }
            SweepPoint::Window(s) => {
                r.strategies = vec![Strategy::RowMajor];
                if s != Strategy::RowMajor {
                    r.strategies.push(s);
                }
            }
        }
        Ok(r)
    }
}

/// Options that affect only side outputs.
#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// Directory receiving one flit trace per layer and strategy.
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeStat {
    pub pe: NodeId,
    pub accumulated: u64,
    pub mean_end_to_end: Option<f64>,
}

/// One layer under one strategy.
#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub layer_index: usize,
    pub layer: String,
    pub strategy: Strategy,
    pub makespan: u64,
    /// Unevenness of accumulated busy time over PEs that ran tasks.
    pub rho: Option<f64>,
    /// Unevenness of mean end-to-end travel time.
    pub rho_mean: Option<f64>,
    /// Makespan improvement over row-major on the same layer, in percent.
    pub improvement_pct: f64,
    pub pes: Vec<PeStat>,
    pub result: LayerRunResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelTotal {
    pub strategy: Strategy,
    /// Sum of layer makespans; layers run back to back on a drained network.
    pub total_cycles: u64,
    pub improvement_pct: f64,
}

#[derive(Debug, Clone)]
pub struct ModelReport {
    pub scenario: String,
    /// Ordered by layer, then by strategy in configuration order.
    pub runs: Vec<StrategyRun>,
    pub totals: Vec<ModelTotal>,
}

impl ModelReport {
    pub fn run(&self, layer_index: usize, strategy: Strategy) -> Option<&StrategyRun> {
        self.runs
            .iter()
            .find(|r| r.layer_index == layer_index && r.strategy == strategy)
    }

    pub fn total(&self, strategy: Strategy) -> Option<&ModelTotal> {
        self.totals.iter().find(|t| t.strategy == strategy)
    }
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: &ExecOptions) -> Result<ModelReport> {
    run_resolved(&ResolvedScenario::from_config(cfg)?, opts)
}

/// Runs every point of the configured axis; reports come back in point order.
pub fn run_sweep(cfg: &ScenarioConfig, opts: &ExecOptions) -> Result<Vec<ModelReport>> {
    let base = ResolvedScenario::from_config(cfg)?;
    let points = cfg.sweep_points()?;
    let resolved = points
        .into_iter()
        .map(|p| base.at_point(p))
        .collect::<Result<Vec<_>>>()?;
    resolved.par_iter().map(|r| run_resolved(r, opts)).collect()
}

pub fn run_resolved(scenario: &ResolvedScenario, opts: &ExecOptions) -> Result<ModelReport> {
    scenario.sim.validate()?;
    let topology = Topology::new(scenario.topology.clone())?;
    if let Some(dir) = &opts.trace_dir {
        fs::create_dir_all(dir)?;
    }
    let per_layer = scenario
        .layers
        .par_iter()
        .enumerate()
        .map(|(i, spec)| run_layer_strategies(scenario, &topology, i, spec, opts))
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<StrategyRun> = per_layer.into_iter().flatten().collect();

    let baseline_total: u64 = runs
        .iter()
        .filter(|r| r.strategy == Strategy::RowMajor)
        .map(|r| r.makespan)
        .sum();
    let totals = scenario
        .strategies
        .iter()
        .map(|&s| {
            let total: u64 = runs.iter().filter(|r| r.strategy == s).map(|r| r.makespan).sum();
            Ok(ModelTotal {
                strategy: s,
                total_cycles: total,
                improvement_pct: if baseline_total == 0 {
                    0.0
                } else {
                    improvement(baseline_total as f64, total as f64)?
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelReport {
        scenario: scenario.label.clone(),
        runs,
        totals,
    })
}

fn run_layer_strategies(
    scenario: &ResolvedScenario,
    topology: &Topology,
    index: usize,
    spec: &LayerSpec,
    opts: &ExecOptions,
) -> Result<Vec<StrategyRun>> {
    let layer = tasks_for_layer(spec, index)?;
    let options = |s: Strategy| -> Result<RunOptions> {
        let Some(dir) = &opts.trace_dir else {
            return Ok(RunOptions::default());
        };
        let file = dir.join(format!(
            "{}_{}_{}.trace",
            file_stem(&scenario.label),
            file_stem(&spec.name),
            file_stem(&s.to_string())
        ));
        Ok(RunOptions {
            trace: Some(Box::new(BufWriter::new(File::create(file)?))),
        })
    };
    let cfg = &scenario.sim;
    let baseline = run_layer(
        topology,
        cfg,
        &layer,
        &map_row_major(topology.pe_ids(), layer.count),
        options(Strategy::RowMajor)?,
    )?;
    let others = scenario.strategies[1..]
        .par_iter()
        .map(|&s| {
            let result = match s {
                Strategy::RowMajor => unreachable!("baseline runs first"),
                Strategy::Distance => {
                    let plan = map_distance_based(&topology.classify_distances(), layer.count)?;
                    run_layer(topology, cfg, &layer, &plan, options(s)?)?
                }
                Strategy::StaticLatency => {
                    let params = scenario
                        .static_latency
                        .unwrap_or_else(|| StaticLatencyParams::for_topology(topology));
                    let plan = map_static_latency(topology, layer.shape, cfg, &params, layer.count)?;
                    run_layer(topology, cfg, &layer, &plan, options(s)?)?
                }
                Strategy::PostRun => {
                    let plan = map_post_run(&baseline, layer.count)?;
                    run_layer(topology, cfg, &layer, &plan, options(s)?)?
                }
                Strategy::Sampling(w) => {
                    let sampler = SamplingWindow::new(w)?.with_aggregation(scenario.aggregation);
                    run_layer_with_sampling(topology, cfg, &layer, sampler, options(s)?)?
                }
            };
            Ok((s, result))
        })
        .collect::<Result<Vec<_>>>()?;

    let base_makespan = baseline.makespan;
    std::iter::once((Strategy::RowMajor, baseline))
        .chain(others)
        .map(|(s, result)| summarize(index, &spec.name, s, result, base_makespan))
        .collect()
}

fn summarize(
    layer_index: usize,
    layer: &str,
    strategy: Strategy,
    result: LayerRunResult,
    base_makespan: u64,
) -> Result<StrategyRun> {
    let means = result.mean_end_to_end();
    let pes: Vec<PeStat> = result
        .pe_ids
        .iter()
        .zip(&result.accumulated)
        .zip(&means)
        .map(|((&pe, &accumulated), &mean)| PeStat {
            pe,
            accumulated,
            mean_end_to_end: mean,
        })
        .collect();
    let acc: Vec<f64> = result.accumulated.iter().map(|&a| a as f64).collect();
    let mean_vals: Vec<f64> = means.iter().flatten().copied().collect();
    Ok(StrategyRun {
        layer_index,
        layer: layer.to_string(),
        strategy,
        makespan: result.makespan,
        rho: unevenness_active(&acc).ok().map(|r| r.rho),
        rho_mean: unevenness_active(&mean_vals).ok().map(|r| r.rho),
        improvement_pct: if base_makespan == 0 {
            0.0
        } else {
            improvement(base_makespan as f64, result.makespan as f64)?
        },
        pes,
        result,
    })
}

/// One line of the metrics CSV. Per-PE rows leave `rho` and `improvement_pct`
/// empty; each layer/strategy ends with a summary row whose `pe` is `all`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub layer: String,
    pub strategy: String,
    pub pe: String,
    pub accumulated: u64,
    pub mean_end_to_end: Option<f64>,
    pub makespan: u64,
    pub rho: Option<f64>,
    pub improvement_pct: Option<f64>,
}

pub const METRICS_HEADER: [&str; 9] = [
    "scenario",
    "layer",
    "strategy",
    "pe",
    "accumulated",
    "mean_end_to_end",
    "makespan",
    "rho",
    "improvement_pct",
];

pub const SUMMARY_PE: &str = "all";

pub fn metrics_rows(report: &ModelReport) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    for run in &report.runs {
        for pe in &run.pes {
            rows.push(MetricsRow {
                scenario: report.scenario.clone(),
                layer: run.layer.clone(),
                strategy: run.strategy.to_string(),
                pe: pe.pe.to_string(),
                accumulated: pe.accumulated,
                mean_end_to_end: pe.mean_end_to_end,
                makespan: run.makespan,
                rho: None,
                improvement_pct: None,
            });
        }
        let tasks = run.result.task_count();
        let busy: u64 = run.result.accumulated.iter().sum();
        rows.push(MetricsRow {
            scenario: report.scenario.clone(),
            layer: run.layer.clone(),
            strategy: run.strategy.to_string(),
            pe: SUMMARY_PE.into(),
            accumulated: run.result.accumulated.iter().copied().max().unwrap_or(0),
            mean_end_to_end: (tasks > 0).then(|| busy as f64 / tasks as f64),
            makespan: run.makespan,
            rho: run.rho,
            improvement_pct: Some(run.improvement_pct),
        });
    }
    rows
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the metrics CSV for any number of reports, in the given order.
pub fn emit_csv(reports: &[ModelReport], path: &Path) -> Result<()> {
    let rows: Vec<MetricsRow> = reports.iter().flat_map(metrics_rows).collect();
    write_rows(path, &METRICS_HEADER, &rows)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Config(format!("unexpected metrics header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTotalRow {
    pub scenario: String,
    pub strategy: String,
    pub total_cycles: u64,
    pub improvement_pct: f64,
}

pub const TOTALS_HEADER: [&str; 4] = ["scenario", "strategy", "total_cycles", "improvement_pct"];

pub fn emit_totals_csv(reports: &[ModelReport], path: &Path) -> Result<()> {
    let rows: Vec<ModelTotalRow> = reports
        .iter()
        .flat_map(|r| {
            r.totals.iter().map(|t| ModelTotalRow {
                scenario: r.scenario.clone(),
                strategy: t.strategy.to_string(),
                total_cycles: t.total_cycles,
                improvement_pct: t.improvement_pct,
            })
        })
        .collect();
    write_rows(path, &TOTALS_HEADER, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRow<'a> {
    pub layer: &'a str,
    pub pe: NodeId,
    pub task: u64,
    pub t_req: u64,
    pub t_mem: u64,
    pub t_resp: u64,
    pub t_compu: u64,
    pub t_travel: u64,
}

pub const RECORDS_HEADER: [&str; 8] = ["layer", "pe", "task", "t_req", "t_mem", "t_resp", "t_compu", "t_travel"];

/// Writes one records CSV per strategy of `report` into `dir`; returns the paths.
pub fn emit_records(report: &ModelReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut strategies: Vec<Strategy> = Vec::new();
    for run in &report.runs {
        if !strategies.contains(&run.strategy) {
            strategies.push(run.strategy);
        }
    }
    let mut paths = Vec::new();
    for s in strategies {
        let rows: Vec<RecordRow> = report
            .runs
            .iter()
            .filter(|r| r.strategy == s)
            .flat_map(|run| {
                run.result.records.iter().flatten().map(move |t| RecordRow {
                    layer: &run.layer,
                    pe: t.pe_id,
                    task: t.task_id,
                    t_req: t.t_req,
                    t_mem: t.t_memaccess,
                    t_resp: t.t_resp,
                    t_compu: t.t_compu,
                    t_travel: t.t_travel,
                })
            })
            .collect();
        let path = dir.join(format!(
            "{}_{}.csv",
            file_stem(&report.scenario),
            file_stem(&s.to_string())
        ));
        write_rows(&path, &RECORDS_HEADER, &rows)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Paths of the side files written next to a metrics CSV.
pub fn sibling_path(metrics: &Path, suffix: &str) -> PathBuf {
    let stem = metrics
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    metrics.with_file_name(format!("{stem}_{suffix}"))
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "small"
strategies = ["row-major", "distance", "post-run"]

[workload]
[[workload.layers]]
name = "conv"
kind = "conv"
input_h = 6
input_w = 6
in_channels = 1
out_channels = 2
kernel = 3
"#;

    #[test]
    fn parses_minimal_scenario() {
        let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        assert_eq!(cfg.topology, TopologyConfig::default());
        assert_eq!(cfg.sim, SimConfig::default());
        assert_eq!(cfg.layers().unwrap().len(), 1);
        assert_eq!(cfg.output_path(), PathBuf::from("small.csv"));
    }

    #[test]
    fn config_errors() {
        for bad in [
            "name = \"x\"\n[workload]\npreset = \"nope\"\n",
            "name = \"x\"\n[workload]\n",
            "name = \"x\"\nstrategies = [\"zigzag\"]\n[workload]\npreset = \"lenet\"\n",
            "name = \"x\"\nbogus = 1\n[workload]\npreset = \"lenet\"\n",
            "name = \"x\"\n[workload]\npreset = \"lenet\"\n[sweep]\naxis = \"kernel_size\"\npoints = [\"0\"]\n",
            "name = \"x\"\n[workload]\npreset = \"lenet\"\n[sim]\nvc_count = 0\n",
            "name = \"x\"\ndeterministic = false\n[workload]\npreset = \"lenet\"\n",
        ] {
            assert!(matches!(ScenarioConfig::from_toml(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn baseline_always_first() {
        let mut cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        cfg.strategies = vec![Strategy::PostRun, Strategy::PostRun];
        let r = ResolvedScenario::from_config(&cfg).unwrap();
        assert_eq!(r.strategies, vec![Strategy::RowMajor, Strategy::PostRun]);
    }

    #[test]
    fn default_sweep_points() {
        let mut cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        cfg.sweep.axis = SweepAxis::KernelSize;
        assert_eq!(cfg.sweep_points().unwrap().len(), 7);
        cfg.sweep.axis = SweepAxis::Window;
        assert_eq!(
            cfg.sweep_points().unwrap().last(),
            Some(&SweepPoint::Window(Strategy::PostRun))
        );
        cfg.sweep.points = Some(vec!["5".into(), "post-run".into()]);
        assert_eq!(
            cfg.sweep_points().unwrap(),
            vec![
                SweepPoint::Window(Strategy::Sampling(5)),
                SweepPoint::Window(Strategy::PostRun)
            ]
        );
    }

    #[test]
    fn kernel_point_sets_same_padding() {
        let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        let r = ResolvedScenario::from_config(&cfg)
            .unwrap()
            .at_point(SweepPoint::KernelSize(5))
            .unwrap();
        assert_eq!((r.layers[0].kernel, r.layers[0].padding), (5, 2));
        assert_eq!(r.layers[0].output_dims().unwrap(), (6, 6));
        assert_eq!(r.label, "small/kernel=5");
    }

    #[test]
    fn architecture_point_keeps_delays() {
        let mut cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        cfg.topology.router_delay = 3;
        let r = ResolvedScenario::from_config(&cfg)
            .unwrap()
            .at_point(SweepPoint::Architecture(Architecture::FourMc))
            .unwrap();
        assert_eq!(r.topology.mc_nodes, vec![5, 6, 9, 10]);
        assert_eq!(r.topology.router_delay, 3);
    }

    #[test]
    fn small_scenario_rows() {
        let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        let report = run_scenario(&cfg, &ExecOptions::default()).unwrap();
        assert_eq!(report.runs.len(), 3);
        assert_eq!(report.totals.len(), 3);
        assert_eq!(report.total(Strategy::RowMajor).unwrap().improvement_pct, 0.0);
        let rows = metrics_rows(&report);
        // 14 PE rows and one summary per strategy
        assert_eq!(rows.len(), 3 * 15);
        assert_eq!(rows[14].pe, SUMMARY_PE);
        assert_eq!(rows[0].strategy, "row-major");
    }

    #[test]
    fn file_stems_are_safe() {
        assert_eq!(file_stem("lenet/window=sampling:10"), "lenet-window-sampling-10");
        assert_eq!(
            sibling_path(Path::new("out/run.csv"), "model.csv"),
            PathBuf::from("out/run_model.csv")
        );
    }
}
