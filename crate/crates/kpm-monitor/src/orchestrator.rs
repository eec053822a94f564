//! Scenario orchestration: RIC, node simulator, and the reference
//! monitoring xApp as concurrent tasks in one process.
//!
//! Emission is paced by a turn gate: the node may emit reporting window
//! `k+1` only after the xApp has fully handled window `k` (including a
//! mid-run subscription delete), which makes lifecycle timing exact on
//! the virtual clock regardless of scheduling.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Condvar, Mutex, OnceLock};
use std::time::Duration;

use e2stack::e2ap::RicRequestId;
use e2stack::kpm::{IndicationMessage, MeasValue};
use e2stack::nodesim::{self, NodeSim, Pace, Scenario, TrafficTrace};
use e2stack::registry::SmRegistry;
use e2stack::ric::Ric;
use e2stack::xapp::{self, DecodedIndication, FunctionInfo, XappContext};

use crate::config::ScenarioConfig;
use crate::report::{direction_of, ComparisonReport, Direction, MbpsRow};
use crate::CliError;

/// Gate over emission turns: turn `sn` may proceed once `allow_through`
/// has been called with `sn` (or `open` was called). Turn 0 starts open.
pub struct TurnGate {
    allowed: Mutex<u64>,
    ready: Condvar,
}

impl TurnGate {
    pub fn new() -> Self {
        Self {
            allowed: Mutex::new(1),
            ready: Condvar::new(),
        }
    }

    /// Opens every turn up to and including `sn`.
    pub fn allow_through(&self, sn: u32) {
        let mut allowed = self.allowed.lock().unwrap();
        *allowed = (*allowed).max(sn as u64 + 1);
        self.ready.notify_all();
    }

    pub fn open(&self) {
        *self.allowed.lock().unwrap() = u64::MAX;
        self.ready.notify_all();
    }
}

impl Default for TurnGate {
    fn default() -> Self {
        Self::new()
    }
}

impl Pace for TurnGate {
    fn wait_turn(&self, _request_id: RicRequestId, sn: u32) {
        let mut allowed = self.allowed.lock().unwrap();
        while (sn as u64) >= *allowed {
            allowed = self.ready.wait(allowed).unwrap();
        }
    }
}

// ---- log capture -----------------------------------------------------

struct CaptureLogger;

static ACTIVE_SINK: Mutex<Option<Arc<Mutex<Vec<String>>>>> = Mutex::new(None);
static VERBOSE: AtomicBool = AtomicBool::new(false);
static LOGGER: CaptureLogger = CaptureLogger;
static LOGGER_INSTALLED: OnceLock<()> = OnceLock::new();

impl log::Log for CaptureLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Info
    }

    fn log(&self, record: &log::Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = format!("[{}] {}", record.level(), record.args());
        if let Some(sink) = ACTIVE_SINK.lock().unwrap().as_ref() {
            sink.lock().unwrap().push(line.clone());
        }
        if VERBOSE.load(Ordering::Relaxed) {
            eprintln!("{line}");
        }
    }

    fn flush(&self) {}
}

/// Installs the capturing logger (idempotent). With `verbose`, captured
/// lines are echoed to stderr.
pub fn init_logging(verbose: bool) {
    VERBOSE.store(verbose, Ordering::Relaxed);
    LOGGER_INSTALLED.get_or_init(|| {
        if log::set_logger(&LOGGER).is_ok() {
            log::set_max_level(log::LevelFilter::Info);
        }
    });
}

fn set_sink(sink: Arc<Mutex<Vec<String>>>) {
    *ACTIVE_SINK.lock().unwrap() = Some(sink);
}

fn take_sink() {
    *ACTIVE_SINK.lock().unwrap() = None;
}

// ---- scenario run ------------------------------------------------------

pub struct RunOptions {
    pub config: ScenarioConfig,
    /// Delete the subscription once the window ending at this virtual
    /// time has been handled (harness hook; not part of the config file).
    pub delete_at_ms: Option<u64>,
}

pub struct RunArtifacts {
    pub kpm_rows: Vec<MbpsRow>,
    pub app_rows: Vec<MbpsRow>,
    pub report: Option<ComparisonReport>,
    pub log_lines: Vec<String>,
    /// Node-emitted indication stream as `sn:header_hex:message_hex`.
    pub indication_stream: Vec<String>,
    pub indications_received: u64,
    pub indications_after_delete: u64,
    pub decode_failures: u64,
}

fn python_style_map(summary: &BTreeMap<u8, Vec<String>>) -> String {
    let entries: Vec<String> = summary
        .iter()
        .map(|(style, metrics)| {
            let items: Vec<String> = metrics.iter().map(|m| format!("'{m}'")).collect();
            format!("{}: [{}]", style, items.join(", "))
        })
        .collect();
    format!("{{{}}}", entries.join(", "))
}

/// Mbps for one UE report over a reporting period, preferring the exact
/// integer volume metric and falling back to the mean of the per-record
/// throughput values.
fn report_mbps(
    records: &[e2stack::kpm::MeasRecord],
    metrics: &[String],
    direction: Direction,
    period_ms: u32,
) -> Option<f64> {
    let (volume_name, thp_name) = match direction {
        Direction::Downlink => ("DRB.PdcpSduVolumeDL", "DRB.UEThpDl"),
        Direction::Uplink => ("DRB.PdcpSduVolumeUL", "DRB.UEThpUl"),
    };
    if let Some(idx) = metrics.iter().position(|m| m == volume_name) {
        let total: u64 = records
            .iter()
            .filter_map(|r| match r.values.get(idx) {
                Some(MeasValue::Int(v)) => Some(*v),
                _ => None,
            })
            .sum();
        return Some(total as f64 * 8.0 / period_ms as f64 / 1000.0);
    }
    if let Some(idx) = metrics.iter().position(|m| m == thp_name) {
        let kbps: Vec<f64> = records
            .iter()
            .filter_map(|r| match r.values.get(idx) {
                Some(MeasValue::Real(v)) => Some(*v),
                _ => None,
            })
            .collect();
        if !kbps.is_empty() {
            return Some(kbps.iter().sum::<f64>() / kbps.len() as f64 / 1000.0);
        }
    }
    None
}

/// App-layer throughput rows per reporting bin per UE, from the trace.
pub fn app_rows_from_trace(
    trace: &TrafficTrace,
    period_ms: u32,
    direction: Direction,
) -> Vec<MbpsRow> {
    let duration = trace.duration_ms();
    let windows = duration.div_ceil(period_ms as u64);
    let mut rows = Vec::new();
    for k in 0..windows {
        let from = k * period_ms as u64;
        let to = from + period_ms as u64;
        for ue_id in trace.ue_ids() {
            let bytes: u64 = trace
                .slice(&ue_id, from, to)
                .iter()
                .map(|r| match direction {
                    Direction::Downlink => r.dl_app_bytes,
                    Direction::Uplink => r.ul_app_bytes,
                })
                .sum();
            rows.push(MbpsRow {
                t_ms: from,
                ue_id,
                mbps: bytes as f64 * 8.0 / period_ms as f64 / 1000.0,
            });
        }
    }
    rows
}

pub fn run_scenario(opts: &RunOptions) -> Result<RunArtifacts, CliError> {
    let sink = Arc::new(Mutex::new(Vec::new()));
    set_sink(sink.clone());
    let result = run_scenario_inner(opts, &sink);
    take_sink();
    result
}

fn run_scenario_inner(
    opts: &RunOptions,
    sink: &Arc<Mutex<Vec<String>>>,
) -> Result<RunArtifacts, CliError> {
    let config = &opts.config;
    let scenario_err = |e: String| CliError::Scenario(e);

    let trace = TrafficTrace::load_csv(&config.trace).map_err(|e| scenario_err(e.to_string()))?;
    let ue_events = match &config.ue_events {
        Some(path) => nodesim::load_ue_events(path).map_err(|e| scenario_err(e.to_string()))?,
        None => Vec::new(),
    };
    let direction =
        direction_of(&config.metrics).expect("config validation guarantees a throughput metric");
    let period = config.reporting_period_ms;
    let duration = trace.duration_ms();
    let expected_windows = duration.div_ceil(period as u64);
    if let Some(delete_at) = opts.delete_at_ms {
        if delete_at == 0 || delete_at % period as u64 != 0 {
            return Err(CliError::Config(format!(
                "delete_at_ms {delete_at} must be a positive multiple of the reporting period"
            )));
        }
    }

    let registry = Arc::new(SmRegistry::with_kpm_v3());
    let ric = Ric::start(&config.ric_listen, registry.clone())
        .map_err(|e| scenario_err(format!("ric listen on {}: {e}", config.ric_listen)))?;
    let ric_addr = ric.local_addr().to_string();
    log::info!("scenario: ric on {ric_addr}, {expected_windows} reporting windows");

    let gate = Arc::new(TurnGate::new());
    let mut node_scenario = Scenario::new(config.identity(), &ric_addr, trace.clone());
    node_scenario.ue_events = ue_events;
    node_scenario.model = nodesim::OverheadModel {
        header_overhead_bytes: config.header_overhead_bytes,
    };
    let node = NodeSim::new(node_scenario).with_pace(gate.clone());
    let node_handle = node.handle();
    let node_thread = std::thread::spawn(move || node.run());

    let run_result = (|| -> Result<(Vec<MbpsRow>, u64, u64, u64), CliError> {
        let ctx = xapp::register(&ric_addr, "kpm-monitor", registry.clone())
            .map_err(|e| scenario_err(e.to_string()))?;

        let (tx, rx) = mpsc::channel::<DecodedIndication>();
        let delivered = Arc::new(AtomicU64::new(0));
        let delivered_in_cb = delivered.clone();
        ctx.on_indication(move |ind| {
            delivered_in_cb.fetch_add(1, Ordering::SeqCst);
            let _ = tx.send(ind);
        });

        let collector: Arc<Mutex<Vec<MbpsRow>>> = Arc::new(Mutex::new(Vec::new()));
        let after_delete = Arc::new(AtomicU64::new(0));

        let logic_gate = gate.clone();
        let logic_collector = collector.clone();
        let logic_after_delete = after_delete.clone();
        let metric_refs = config.metrics.clone();
        let node_name = config.identity().inventory_name();
        let delete_at = opts.delete_at_ms;
        let granularity = config.granularity_ms;

        xapp::run(&ctx, move |ctx: &XappContext| {
            wait_for_node(ctx, &node_name)?;
            let nodes = ctx.list_nodes().map_err(|e| e.to_string())?;
            log::info!("inventory: {}", serde_json_string(&nodes)?);

            let functions = ctx
                .available_functions(&node_name)
                .map_err(|e| e.to_string())?;
            let (fid, summary) = functions
                .iter()
                .find_map(|(fid, info)| match info {
                    FunctionInfo::Decoded { summary, .. } => Some((*fid, summary.clone())),
                    FunctionInfo::Opaque { .. } => None,
                })
                .ok_or_else(|| "node advertises no decodable function".to_string())?;
            log::info!("Available functions: {}", python_style_map(&summary));

            let selected_style = summary
                .iter()
                .max_by_key(|(style, names)| {
                    let coverage = metric_refs.iter().filter(|m| names.contains(m)).count();
                    (coverage, names.len(), std::cmp::Reverse(**style))
                })
                .map(|(style, _)| *style)
                .unwrap_or(0);
            let selected: BTreeMap<u8, Vec<String>> = [(selected_style, metric_refs.clone())]
                .into_iter()
                .collect();
            log::info!("Selected functions: {}", python_style_map(&selected));
            log::info!("Preparing subscription for gnb: {node_name}");

            let metric_strs: Vec<&str> = metric_refs.iter().map(String::as_str).collect();
            let request_id = ctx
                .subscribe(&node_name, fid, &metric_strs, period, granularity)
                .map_err(|e| e.to_string())?;

            let mut deleted = false;
            for k in 0..expected_windows {
                let ind = rx
                    .recv_timeout(Duration::from_secs(15))
                    .map_err(|_| format!("indication {k} never arrived"))?;
                if let (Some(header), Some(IndicationMessage::PerUe { ue_reports })) =
                    (ind.header.decoded(), ind.message.decoded())
                {
                    for report in ue_reports {
                        if let Some(mbps) =
                            report_mbps(&report.records, &metric_refs, direction, period)
                        {
                            logic_collector.lock().unwrap().push(MbpsRow {
                                t_ms: header.collection_start_time_ms,
                                ue_id: report.ue_id.clone(),
                                mbps,
                            });
                        }
                    }
                }
                if delete_at == Some((k + 1) * period as u64) {
                    ctx.delete_subscription(request_id)
                        .map_err(|e| e.to_string())?;
                    deleted = true;
                }
                logic_gate.allow_through(ind.sn + 1);
                if deleted {
                    break;
                }
            }
            if deleted {
                // anything still arriving after the delete is a defect
                logic_gate.open();
                while let Ok(_late) = rx.recv_timeout(Duration::from_millis(200)) {
                    logic_after_delete.fetch_add(1, Ordering::SeqCst);
                }
            }
            ctx.stop();
            Ok(())
        })
        .map_err(|e| scenario_err(e.to_string()))?;

        let rows = collector.lock().unwrap().clone();
        Ok((
            rows,
            delivered.load(Ordering::SeqCst),
            after_delete.load(Ordering::SeqCst),
            ctx.decode_failures(),
        ))
    })();

    gate.open();
    node_handle.stop();
    let node_report = node_thread
        .join()
        .map_err(|_| scenario_err("node task panicked".into()))?
        .map_err(|e| scenario_err(e.to_string()))?;
    ric.shutdown();

    let (kpm_rows, received, after_delete, decode_failures) = run_result?;

    let app_rows = app_rows_from_trace(&trace, period, direction);
    let report = if opts.delete_at_ms.is_none() && !kpm_rows.is_empty() {
        Some(
            ComparisonReport::compute(&app_rows, &kpm_rows)
                .map_err(|e| scenario_err(format!("comparison: {e}")))?,
        )
    } else {
        None
    };

    let log_lines = sink.lock().unwrap().clone();
    Ok(RunArtifacts {
        kpm_rows,
        app_rows,
        report,
        log_lines,
        indication_stream: node_report
            .emitted
            .iter()
            .map(|e| format!("{}:{}:{}", e.sn, e.header_hex, e.message_hex))
            .collect(),
        indications_received: received,
        indications_after_delete: after_delete,
        decode_failures,
    })
}

fn wait_for_node(ctx: &XappContext, node: &str) -> Result<(), String> {
    let deadline = std::time::Instant::now() + Duration::from_secs(5);
    loop {
        let nodes = ctx.list_nodes().map_err(|e| e.to_string())?;
        if nodes
            .iter()
            .any(|n| n.inventory_name == node && n.connection_status == "CONNECTED")
        {
            return Ok(());
        }
        if std::time::Instant::now() >= deadline {
            return Err(format!("node {node} never connected"));
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}
