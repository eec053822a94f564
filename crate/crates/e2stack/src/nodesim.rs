//! gNB/E2-node simulator.
//!
//! Registers the KPM function at a RIC, serves subscriptions, and turns a
//! ground-truth traffic trace into per-UE KPM indications through a PDCP
//! header-overhead model. Emission runs on a virtual clock: window
//! timestamps come from the trace timeline, never from wall time, so a
//! 20 s scenario completes in well under a second.
//!
//! Trace rows are attributed to the measurement bin containing their
//! start time; generated traces align rows to bin boundaries, which keeps
//! byte conservation exact.

use std::collections::BTreeMap;
use std::io;
use std::net::TcpStream;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::e2ap::{self, E2apMessage, GlobalE2NodeId, RicRequestId};
use crate::kpm::{
    self, IndicationHeader, IndicationMessage, KpmRanFunctionDefinition, MeasRecord, MeasValue,
    MeasurementName, UeReport,
};
use crate::percodec::to_hex;
use crate::transport::{split, FrameWriter};

pub const TRACE_HEADER: &str =
    "t_ms,interval_ms,ue_id,dl_app_bytes,ul_app_bytes,dl_pkts,ul_pkts,prb_dl,prb_ul,rlc_delay_dl_ms";
pub const UE_EVENTS_HEADER: &str = "t_ms,ue_id,kind";

/// Default per-packet header overhead: 40 bytes TCP/IPv4 plus 3 bytes PDCP.
pub const DEFAULT_HEADER_OVERHEAD_BYTES: u64 = 43;

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("trace: {0}")]
    Trace(String),
    #[error("ric unreachable at {addr} after {attempts} attempts")]
    RicUnreachable { addr: String, attempts: u32 },
    #[error("e2 setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Codec(#[from] crate::percodec::CodecError),
    #[error(transparent)]
    E2ap(#[from] e2ap::E2apError),
}

/// One interval of ground-truth application traffic for one UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_ms: u64,
    pub interval_ms: u64,
    pub ue_id: String,
    pub dl_app_bytes: u64,
    pub ul_app_bytes: u64,
    pub dl_pkts: u64,
    pub ul_pkts: u64,
    pub prb_dl: u64,
    pub prb_ul: u64,
    pub rlc_delay_dl_ms: f64,
}

/// Validated trace: per-UE rows sorted and non-overlapping.
#[derive(Debug, Clone, Default)]
pub struct TrafficTrace {
    rows: Vec<TraceRow>,
}

impl TrafficTrace {
    pub fn from_rows(rows: Vec<TraceRow>) -> Result<Self, NodeError> {
        let mut last_end: BTreeMap<&str, u64> = BTreeMap::new();
        for row in &rows {
            if row.interval_ms == 0 {
                return Err(NodeError::Trace(format!(
                    "zero-length interval at t_ms={} for {}",
                    row.t_ms, row.ue_id
                )));
            }
            if !row.rlc_delay_dl_ms.is_finite() || row.rlc_delay_dl_ms < 0.0 {
                return Err(NodeError::Trace(format!(
                    "bad rlc_delay_dl_ms {} at t_ms={}",
                    row.rlc_delay_dl_ms, row.t_ms
                )));
            }
            if let Some(&end) = last_end.get(row.ue_id.as_str()) {
                if row.t_ms < end {
                    return Err(NodeError::Trace(format!(
                        "overlapping or unsorted intervals for {} at t_ms={}",
                        row.ue_id, row.t_ms
                    )));
                }
            }
            last_end.insert(&row.ue_id, row.t_ms + row.interval_ms);
        }
        drop(last_end);
        Ok(Self { rows })
    }

    pub fn load_csv(path: &Path) -> Result<Self, NodeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NodeError::Trace(format!("{}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self, NodeError> {
        let header = text.lines().next().unwrap_or("").trim_end();
        if header != TRACE_HEADER {
            return Err(NodeError::Trace(format!(
                "bad trace header {header:?}, expected {TRACE_HEADER:?}"
            )));
        }
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.deserialize::<TraceRow>() {
            rows.push(record.map_err(|e| NodeError::Trace(e.to_string()))?);
        }
        Self::from_rows(rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), NodeError> {
        // header is written explicitly so an empty trace still carries it
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| NodeError::Trace(e.to_string()))?;
        writer
            .write_record(TRACE_HEADER.split(','))
            .map_err(|e| NodeError::Trace(e.to_string()))?;
        for row in &self.rows {
            writer
                .serialize(row)
                .map_err(|e| NodeError::Trace(e.to_string()))?;
        }
        writer.flush().map_err(NodeError::Io)?;
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// Trace span: the largest interval end over all rows.
    pub fn duration_ms(&self) -> u64 {
        self.rows
            .iter()
            .map(|r| r.t_ms + r.interval_ms)
            .max()
            .unwrap_or(0)
    }

    /// UE ids appearing in the trace, sorted.
    pub fn ue_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.ue_id.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        ids.sort();
        ids
    }

    /// Rows of `ue_id` whose start time falls in `[from_ms, to_ms)`.
    pub fn slice(&self, ue_id: &str, from_ms: u64, to_ms: u64) -> Vec<&TraceRow> {
        self.rows
            .iter()
            .filter(|r| r.ue_id == ue_id && r.t_ms >= from_ms && r.t_ms < to_ms)
            .collect()
    }
}

/// Per-packet header overhead added below the application layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadModel {
    pub header_overhead_bytes: u64,
}

impl Default for OverheadModel {
    fn default() -> Self {
        Self {
            header_overhead_bytes: DEFAULT_HEADER_OVERHEAD_BYTES,
        }
    }
}

/// PDCP-level byte count for an application-layer byte/packet count.
pub fn pdcp_bytes(app_bytes: u64, pkts: u64, model: &OverheadModel) -> u64 {
    app_bytes + pkts * model.header_overhead_bytes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UeEventKind {
    Attach,
    Detach,
}

/// UE attach/detach event on the trace timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeEvent {
    pub t_ms: u64,
    pub ue_id: String,
    pub kind: UeEventKind,
}

pub fn load_ue_events(path: &Path) -> Result<Vec<UeEvent>, NodeError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| NodeError::Trace(format!("{}: {e}", path.display())))?;
    parse_ue_events(&text)
}

pub fn parse_ue_events(text: &str) -> Result<Vec<UeEvent>, NodeError> {
    let header = text.lines().next().unwrap_or("").trim_end();
    if header != UE_EVENTS_HEADER {
        return Err(NodeError::Trace(format!(
            "bad ue-events header {header:?}, expected {UE_EVENTS_HEADER:?}"
        )));
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut events = Vec::new();
    for record in reader.deserialize::<UeEvent>() {
        events.push(record.map_err(|e| NodeError::Trace(e.to_string()))?);
    }
    // detach only after attach
    let mut attached: BTreeMap<&str, u64> = BTreeMap::new();
    for ev in &events {
        match ev.kind {
            UeEventKind::Attach => {
                attached.insert(&ev.ue_id, ev.t_ms);
            }
            UeEventKind::Detach => match attached.get(ev.ue_id.as_str()) {
                Some(&at) if at <= ev.t_ms => {}
                _ => {
                    return Err(NodeError::Trace(format!(
                        "detach before attach for {}",
                        ev.ue_id
                    )))
                }
            },
        }
    }
    Ok(events)
}

/// Presence window per UE derived from attach/detach events; UEs without
/// events are attached for the whole scenario.
#[derive(Debug, Clone, Default)]
pub struct UePresence {
    spans: BTreeMap<String, (u64, Option<u64>)>,
}

impl UePresence {
    pub fn from_events(trace: &TrafficTrace, events: &[UeEvent]) -> Self {
        let mut spans: BTreeMap<String, (u64, Option<u64>)> = trace
            .ue_ids()
            .into_iter()
            .map(|id| (id, (0, None)))
            .collect();
        for ev in events {
            let entry = spans.entry(ev.ue_id.clone()).or_insert((0, None));
            match ev.kind {
                UeEventKind::Attach => entry.0 = ev.t_ms,
                UeEventKind::Detach => entry.1 = Some(ev.t_ms),
            }
        }
        Self { spans }
    }

    /// UEs present during any part of window `[t, t+len)`, excluding UEs
    /// detached at or before the window start. Sorted by UE id.
    pub fn present_in_window(&self, t: u64, len: u64) -> Vec<&str> {
        self.spans
            .iter()
            .filter(|(_, &(attach, detach))| attach < t + len && detach.is_none_or(|d| d > t))
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

/// Computes one measurement record for a UE over one granularity period.
///
/// Known metrics: PDCP volumes (bytes, integer), UE throughputs (kbps,
/// real), PRB totals (integer), and the DL-byte-weighted RLC delay mean
/// (real, `NoValue` when no DL bytes flowed). Unknown names yield
/// `NoValue` and bump the returned warning count instead of aborting the
/// report.
pub fn compute_record(
    bin_rows: &[&TraceRow],
    metrics: &[MeasurementName],
    model: &OverheadModel,
    granularity_ms: u64,
) -> (MeasRecord, u64) {
    let vol_dl: u64 = bin_rows
        .iter()
        .map(|r| pdcp_bytes(r.dl_app_bytes, r.dl_pkts, model))
        .sum();
    let vol_ul: u64 = bin_rows
        .iter()
        .map(|r| pdcp_bytes(r.ul_app_bytes, r.ul_pkts, model))
        .sum();
    let mut warnings = 0;
    let g = granularity_ms as f64;
    let values = metrics
        .iter()
        .map(|m| match m.as_str() {
            "DRB.PdcpSduVolumeDL" => MeasValue::Int(vol_dl),
            "DRB.PdcpSduVolumeUL" => MeasValue::Int(vol_ul),
            "DRB.UEThpDl" => MeasValue::Real(vol_dl as f64 * 8.0 / g),
            "DRB.UEThpUl" => MeasValue::Real(vol_ul as f64 * 8.0 / g),
            "RRU.PrbTotDl" => MeasValue::Int(bin_rows.iter().map(|r| r.prb_dl).sum()),
            "RRU.PrbTotUl" => MeasValue::Int(bin_rows.iter().map(|r| r.prb_ul).sum()),
            "DRB.RlcSduDelayDl" => {
                if vol_dl == 0 {
                    MeasValue::NoValue
                } else {
                    let weighted: f64 = bin_rows
                        .iter()
                        .map(|r| {
                            pdcp_bytes(r.dl_app_bytes, r.dl_pkts, model) as f64 * r.rlc_delay_dl_ms
                        })
                        .sum();
                    MeasValue::Real(weighted / vol_dl as f64)
                }
            }
            other => {
                warnings += 1;
                log::warn!("unknown metric {other:?} requested; reporting no_value");
                MeasValue::NoValue
            }
        })
        .collect();
    (MeasRecord { values }, warnings)
}

/// Builds the indication for reporting window `[t, t+period)`: one per-UE
/// report for every UE present during any part of the window, each with
/// `period/granularity` records.
#[allow(clippy::too_many_arguments)]
pub fn build_indication(
    sender: &str,
    trace: &TrafficTrace,
    presence: &UePresence,
    t: u64,
    period_ms: u64,
    granularity_ms: u64,
    metrics: &[MeasurementName],
    model: &OverheadModel,
) -> (IndicationHeader, IndicationMessage, u64) {
    debug_assert!(period_ms.is_multiple_of(granularity_ms));
    let bins = period_ms / granularity_ms;
    let mut warnings = 0;
    let ue_reports = presence
        .present_in_window(t, period_ms)
        .into_iter()
        .map(|ue_id| {
            let records = (0..bins)
                .map(|i| {
                    let from = t + i * granularity_ms;
                    let rows = trace.slice(ue_id, from, from + granularity_ms);
                    let (record, w) = compute_record(&rows, metrics, model, granularity_ms);
                    warnings += w;
                    record
                })
                .collect();
            UeReport {
                ue_id: ue_id.to_string(),
                records,
            }
        })
        .collect();
    (
        IndicationHeader {
            collection_start_time_ms: t,
            sender: sender.to_string(),
        },
        IndicationMessage::PerUe { ue_reports },
        warnings,
    )
}

/// Pacing hook: the scenario driver may gate each emission turn (used to
/// interleave node emission with xApp-side handling deterministically).
pub trait Pace: Send + Sync {
    fn wait_turn(&self, request_id: RicRequestId, sn: u32);
}

/// One emitted indication, recorded for assertions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedIndication {
    pub request_id: RicRequestId,
    pub sn: u32,
    pub header_hex: String,
    pub message_hex: String,
}

#[derive(Debug, Default)]
pub struct NodeReport {
    pub indications_sent: u64,
    pub emitted: Vec<EmittedIndication>,
    pub controls: Vec<(String, String)>,
    pub metric_warnings: u64,
}

/// Scenario configuration for one node run.
pub struct Scenario {
    pub identity: GlobalE2NodeId,
    pub ric_addr: String,
    pub ran_function_id: u16,
    pub function_name: String,
    pub trace: TrafficTrace,
    pub ue_events: Vec<UeEvent>,
    pub model: OverheadModel,
    pub connect_attempts: u32,
    pub connect_retry_delay: Duration,
}

impl Scenario {
    pub fn new(identity: GlobalE2NodeId, ric_addr: impl Into<String>, trace: TrafficTrace) -> Self {
        Self {
            identity,
            ric_addr: ric_addr.into(),
            ran_function_id: 147,
            function_name: "ORAN-E2SM-KPM".into(),
            trace,
            ue_events: Vec::new(),
            model: OverheadModel::default(),
            connect_attempts: 40,
            connect_retry_delay: Duration::from_millis(25),
        }
    }
}

#[derive(Debug)]
struct SubState {
    request_id: RicRequestId,
    action_id: u8,
    period_ms: u64,
    granularity_ms: u64,
    metrics: Vec<MeasurementName>,
    active: bool,
    next_sn: u32,
}

#[derive(Default)]
struct NodeShared {
    subs: Mutex<Vec<SubState>>,
    wakeup: Condvar,
    closed: AtomicBool,
    controls: Mutex<Vec<(Vec<u8>, Vec<u8>)>>,
}

/// Stop/inspect handle usable while the node runs.
#[derive(Clone)]
pub struct NodeHandle {
    stop: Arc<AtomicBool>,
    shared: Arc<NodeShared>,
}

impl NodeHandle {
    pub fn stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    /// Control payloads received so far, as (header_hex, message_hex).
    pub fn controls(&self) -> Vec<(String, String)> {
        self.shared
            .controls
            .lock()
            .unwrap()
            .iter()
            .map(|(h, m)| (to_hex(h), to_hex(m)))
            .collect()
    }
}

pub struct NodeSim {
    scenario: Scenario,
    pace: Option<Arc<dyn Pace>>,
    stop: Arc<AtomicBool>,
    shared: Arc<NodeShared>,
}

impl NodeSim {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            pace: None,
            stop: Arc::new(AtomicBool::new(false)),
            shared: Arc::new(NodeShared::default()),
        }
    }

    pub fn with_pace(mut self, pace: Arc<dyn Pace>) -> Self {
        self.pace = Some(pace);
        self
    }

    pub fn handle(&self) -> NodeHandle {
        NodeHandle {
            stop: self.stop.clone(),
            shared: self.shared.clone(),
        }
    }

    fn connect(&self) -> Result<TcpStream, NodeError> {
        let addr = &self.scenario.ric_addr;
        for attempt in 0..self.scenario.connect_attempts {
            match TcpStream::connect(addr) {
                Ok(stream) => return Ok(stream),
                Err(_) if attempt + 1 < self.scenario.connect_attempts => {
                    std::thread::sleep(self.scenario.connect_retry_delay);
                }
                Err(_) => break,
            }
        }
        Err(NodeError::RicUnreachable {
            addr: addr.clone(),
            attempts: self.scenario.connect_attempts,
        })
    }

    /// Connects, performs E2 setup, serves subscriptions, and emits one
    /// indication per reporting period until the trace is exhausted; then
    /// lingers (serving control and delete messages) until the connection
    /// closes or the handle requests a stop.
    pub fn run(self) -> Result<NodeReport, NodeError> {
        let definition = KpmRanFunctionDefinition::reference(&self.scenario.function_name);
        let definition_octets = kpm::encode_ran_function_definition(&definition)?;
        let sender = self.scenario.identity.inventory_name();

        let stream = self.connect()?;
        let (mut reader, writer) = split(stream)?;

        let setup = E2apMessage::E2SetupRequest {
            node_id: self.scenario.identity,
            functions: vec![e2ap::FunctionItem {
                ran_function_id: self.scenario.ran_function_id,
                definition_octets,
                revision: 1,
            }],
        };
        writer.send(&e2ap::frame(&setup)?)?;
        reader.set_read_timeout(Some(Duration::from_secs(10)))?;
        let response = reader
            .recv()?
            .ok_or_else(|| NodeError::Setup("connection closed during setup".into()))?;
        match E2apMessage::decode_payload(response.type_code, &response.payload)? {
            E2apMessage::E2SetupResponse { accepted_ids, .. }
                if accepted_ids.contains(&self.scenario.ran_function_id) =>
            {
                log::info!("node {sender}: setup accepted");
            }
            other => {
                return Err(NodeError::Setup(format!(
                    "unexpected setup outcome: {other:?}"
                )))
            }
        }

        reader.set_read_timeout(Some(Duration::from_millis(20)))?;
        let reader_shared = self.shared.clone();
        let reader_writer = writer.clone();
        let reader_stop = self.stop.clone();
        let reader_def = definition.clone();
        let reader_fid = self.scenario.ran_function_id;
        let reader_thread = std::thread::spawn(move || {
            session_reader(
                reader,
                reader_writer,
                reader_shared,
                reader_stop,
                reader_def,
                reader_fid,
            );
        });

        let report = self.emission_loop(&sender, &writer);

        self.stop.store(true, Ordering::SeqCst);
        self.shared.wakeup.notify_all();
        let _ = reader_thread.join();
        report
    }

    fn emission_loop(&self, sender: &str, writer: &FrameWriter) -> Result<NodeReport, NodeError> {
        let trace = &self.scenario.trace;
        let presence = UePresence::from_events(trace, &self.scenario.ue_events);
        let duration = trace.duration_ms();
        let mut report = NodeReport::default();

        loop {
            if self.shared.closed.load(Ordering::SeqCst) || self.stop.load(Ordering::SeqCst) {
                break;
            }
            // earliest pending emission across subscriptions
            let candidate = {
                let subs = self.shared.subs.lock().unwrap();
                subs.iter()
                    .filter(|s| s.active)
                    .map(|s| {
                        (
                            s.next_sn as u64 * s.period_ms,
                            s.request_id,
                            s.next_sn,
                            s.action_id,
                            s.period_ms,
                            s.granularity_ms,
                            s.metrics.clone(),
                        )
                    })
                    .filter(|(t, ..)| *t < duration)
                    .min_by_key(|(t, id, ..)| (*t, *id))
            };
            let Some((t, request_id, sn, action_id, period, granularity, metrics)) = candidate
            else {
                // nothing to emit now; wait for a new subscription or
                // shutdown while the reader keeps serving the session
                let subs = self.shared.subs.lock().unwrap();
                let _ = self
                    .shared
                    .wakeup
                    .wait_timeout(subs, Duration::from_millis(50))
                    .unwrap();
                continue;
            };

            if let Some(pace) = &self.pace {
                pace.wait_turn(request_id, sn);
            }
            // the subscription may have been deleted while we waited
            let still_active = {
                let subs = self.shared.subs.lock().unwrap();
                subs.iter().any(|s| s.request_id == request_id && s.active)
            };
            if !still_active {
                continue;
            }

            let (header, message, warnings) = build_indication(
                sender,
                trace,
                &presence,
                t,
                period,
                granularity,
                &metrics,
                &self.scenario.model,
            );
            report.metric_warnings += warnings;
            let header_octets = kpm::encode_indication_header(&header)?;
            let message_octets = kpm::encode_indication_message(&message)?;
            let indication = E2apMessage::RicIndication {
                request_id,
                action_id,
                sequence_number: sn,
                header_octets: header_octets.clone(),
                message_octets: message_octets.clone(),
            };
            if writer.send(&e2ap::frame(&indication)?).is_err() {
                break; // peer went away
            }
            report.indications_sent += 1;
            report.emitted.push(EmittedIndication {
                request_id,
                sn,
                header_hex: to_hex(&header_octets),
                message_hex: to_hex(&message_octets),
            });
            let mut subs = self.shared.subs.lock().unwrap();
            if let Some(sub) = subs.iter_mut().find(|s| s.request_id == request_id) {
                sub.next_sn += 1;
            }
        }

        report.controls = self
            .shared
            .controls
            .lock()
            .unwrap()
            .iter()
            .map(|(h, m)| (to_hex(h), to_hex(m)))
            .collect();
        Ok(report)
    }
}

/// Connection reader: admits subscriptions, serves deletes and control
/// requests, and flags the connection closed on EOF.
fn session_reader(
    mut reader: crate::transport::FrameReader,
    writer: FrameWriter,
    shared: Arc<NodeShared>,
    stop: Arc<AtomicBool>,
    definition: KpmRanFunctionDefinition,
    ran_function_id: u16,
) {
    loop {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let raw = match reader.recv() {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e)
                if e.kind() == io::ErrorKind::WouldBlock || e.kind() == io::ErrorKind::TimedOut =>
            {
                continue
            }
            Err(_) => break,
        };
        let msg = match E2apMessage::decode_payload(raw.type_code, &raw.payload) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("node: undecodable frame: {e}");
                continue;
            }
        };
        match msg {
            E2apMessage::RicSubscriptionRequest {
                request_id,
                ran_function_id: fid,
                event_trigger_octets,
                actions,
            } => {
                let reply = admit_subscription(
                    &definition,
                    ran_function_id,
                    request_id,
                    fid,
                    &event_trigger_octets,
                    &actions,
                );
                match reply {
                    Admission::Admit {
                        response,
                        sub_state,
                    } => {
                        let _ = e2ap::frame(&response).map(|f| writer.send(&f));
                        let mut subs = shared.subs.lock().unwrap();
                        subs.push(sub_state);
                        shared.wakeup.notify_all();
                    }
                    Admission::Refuse(response) => {
                        let _ = e2ap::frame(&response).map(|f| writer.send(&f));
                    }
                }
            }
            E2apMessage::RicSubscriptionDeleteRequest { request_id } => {
                {
                    let mut subs = shared.subs.lock().unwrap();
                    if let Some(sub) = subs.iter_mut().find(|s| s.request_id == request_id) {
                        sub.active = false;
                    }
                }
                let response = E2apMessage::RicSubscriptionDeleteResponse { request_id };
                let _ = e2ap::frame(&response).map(|f| writer.send(&f));
                log::info!("node: subscription {request_id} deleted");
            }
            E2apMessage::RicControlRequest {
                request_id,
                header_octets,
                message_octets,
                ack_requested,
                ..
            } => {
                shared
                    .controls
                    .lock()
                    .unwrap()
                    .push((header_octets, message_octets));
                if ack_requested {
                    let response = E2apMessage::RicControlAcknowledge { request_id };
                    let _ = e2ap::frame(&response).map(|f| writer.send(&f));
                }
            }
            E2apMessage::ErrorIndication { cause } => {
                log::warn!("node: error indication from ric: {cause}");
            }
            other => {
                log::warn!("node: unexpected message type {}", other.type_code());
            }
        }
    }
    shared.closed.store(true, Ordering::SeqCst);
    shared.wakeup.notify_all();
}

enum Admission {
    Admit {
        response: E2apMessage,
        sub_state: SubState,
    },
    Refuse(E2apMessage),
}

fn admit_subscription(
    definition: &KpmRanFunctionDefinition,
    our_fid: u16,
    request_id: RicRequestId,
    fid: u16,
    event_trigger_octets: &[u8],
    actions: &[e2ap::ActionItem],
) -> Admission {
    if fid != our_fid {
        return Admission::Refuse(E2apMessage::RicSubscriptionFailure {
            request_id,
            cause: e2ap::Cause::UnsupportedFunction,
        });
    }
    let trigger = match kpm::decode_event_trigger(event_trigger_octets) {
        Ok(t) => t,
        Err(_) => {
            return Admission::Refuse(E2apMessage::RicSubscriptionFailure {
                request_id,
                cause: e2ap::Cause::Unspecified,
            })
        }
    };
    let period = trigger.reporting_period_ms as u64;

    let mut admitted = Vec::new();
    let mut not_admitted = Vec::new();
    let mut sub_state = None;
    for action in actions {
        let decoded = match kpm::decode_action_definition(&action.definition_octets) {
            Ok(a) => a,
            Err(_) => {
                not_admitted.push((action.action_id, e2ap::Cause::Unspecified));
                continue;
            }
        };
        let style = definition
            .styles
            .iter()
            .find(|s| s.style_id == decoded.style_id);
        let metrics_known =
            style.is_some_and(|s| decoded.metrics.iter().all(|m| s.metrics.contains(m)));
        if !metrics_known {
            not_admitted.push((action.action_id, e2ap::Cause::UnknownMetric));
            continue;
        }
        if !period.is_multiple_of(decoded.granularity_period_ms as u64) {
            not_admitted.push((action.action_id, e2ap::Cause::Unspecified));
            continue;
        }
        admitted.push(action.action_id);
        // the first admitted action drives emission
        if sub_state.is_none() {
            sub_state = Some(SubState {
                request_id,
                action_id: action.action_id,
                period_ms: period,
                granularity_ms: decoded.granularity_period_ms as u64,
                metrics: decoded.metrics,
                active: true,
                next_sn: 0,
            });
        }
    }

    match sub_state {
        Some(sub_state) => Admission::Admit {
            response: E2apMessage::RicSubscriptionResponse {
                request_id,
                admitted_action_ids: admitted,
                not_admitted,
            },
            sub_state,
        },
        None => Admission::Refuse(E2apMessage::RicSubscriptionResponse {
            request_id,
            admitted_action_ids: vec![],
            not_admitted,
        }),
    }
}
