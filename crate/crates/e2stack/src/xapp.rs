//! Developer-facing xApp framework.
//!
//! An [`XappContext`] owns the RIC connection, a service-model registry,
//! and the subscription table. The developer supplies the application
//! logic as a closure passed to [`run`]; discovery, subscription
//! encoding, and indication decoding happen behind the context's
//! methods. Indications arrive through a registered callback, invoked
//! strictly serially and in per-subscription order; anything the
//! registry cannot decode is delivered opaque (raw hex attached) rather
//! than dropped, and a decode-failure counter tracks how often.
//!
//! The context can be used by wrapping it in an application struct or by
//! calling it directly from the logic closure. Request/response methods
//! must be called from the logic task, never from inside the indication
//! callback (the callback runs on the dispatch task; hand work off to
//! the logic task instead).

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io;
use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::ThreadId;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::e2ap::RicRequestId;
use crate::kpm::{
    ActionDefinition, EventTriggerDefinition, IndicationHeader, IndicationMessage,
    KpmRanFunctionDefinition, MeasurementName,
};
use crate::north::{self, NorthCause, NorthMessage};
use crate::percodec::to_hex;
use crate::registry::{SmCodecKey, SmRegistry};
use crate::ric::InventoryRecord;
use crate::transport::{split, FrameReader, FrameWriter};

const REQUEST_TIMEOUT: Duration = Duration::from_secs(10);
const POLL_INTERVAL: Duration = Duration::from_millis(20);

#[derive(Debug, Error)]
pub enum XappError {
    #[error("connect to {addr}: {source}")]
    Connect { addr: String, source: io::Error },
    #[error("registration rejected by ric (duplicate xapp id?)")]
    RegistrationRejected,
    #[error("transport: {0}")]
    Transport(String),
    #[error("timed out waiting for {0}")]
    Timeout(&'static str),
    #[error("validation: {0}")]
    Validation(String),
    #[error("subscription refused: {0}")]
    Refused(NorthCause),
    #[error("ric connection closed")]
    Disconnected,
    #[error("xapp logic failed: {0}")]
    Logic(String),
}

/// Either a decoded value or the untouched hex payload.
#[derive(Debug, Clone, PartialEq)]
pub enum MaybeDecoded<T> {
    Decoded(T),
    Opaque { hex: String },
}

impl<T> MaybeDecoded<T> {
    pub fn decoded(&self) -> Option<&T> {
        match self {
            MaybeDecoded::Decoded(v) => Some(v),
            MaybeDecoded::Opaque { .. } => None,
        }
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, MaybeDecoded::Opaque { .. })
    }
}

/// An indication as delivered to the application callback.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedIndication {
    pub node: String,
    pub ran_function_id: u16,
    pub sn: u32,
    pub verdict: crate::e2ap::SnVerdict,
    pub header: MaybeDecoded<IndicationHeader>,
    pub message: MaybeDecoded<IndicationMessage>,
}

/// Discovery result for one RAN function.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionInfo {
    Decoded {
        key: SmCodecKey,
        summary: BTreeMap<u8, Vec<String>>,
        definition: KpmRanFunctionDefinition,
    },
    Opaque {
        hex: String,
    },
}

#[derive(Debug, Clone)]
struct SubInfo {
    node: String,
    ran_function_id: u16,
    action: ActionDefinition,
    period_ms: u32,
    sm_key: SmCodecKey,
}

type IndicationCallback = Box<dyn FnMut(DecodedIndication) + Send>;

struct Inner {
    xapp_id: String,
    writer: FrameWriter,
    registry: Arc<SmRegistry>,
    reader: Mutex<Option<FrameReader>>,
    response_slot: Mutex<Option<NorthMessage>>,
    response_ready: Condvar,
    request_gate: Mutex<()>,
    queued: Mutex<VecDeque<NorthMessage>>,
    subs: Mutex<HashMap<RicRequestId, SubInfo>>,
    callback: Mutex<Option<IndicationCallback>>,
    dispatch_thread: Mutex<Option<ThreadId>>,
    in_callback: AtomicBool,
    stop: AtomicBool,
    disconnected: AtomicBool,
    decode_failures: AtomicU64,
    closed_events: Mutex<Vec<(RicRequestId, NorthCause)>>,
}

/// Handle on a registered xApp; cheap to clone and share across tasks.
#[derive(Clone)]
pub struct XappContext {
    inner: Arc<Inner>,
}

fn is_response(msg: &NorthMessage) -> bool {
    matches!(
        msg,
        NorthMessage::InventoryResponse { .. }
            | NorthMessage::FunctionDefsResponse { .. }
            | NorthMessage::SubscribeResponse { .. }
            | NorthMessage::ControlResult { .. }
            | NorthMessage::SubscriptionDeleteResponse { .. }
    )
}

/// Connects to the RIC and registers `xapp_id`. The registration is
/// probed with an inventory request so a rejected (duplicate) id fails
/// here rather than on first use.
pub fn register(
    ric_addr: &str,
    xapp_id: &str,
    registry: Arc<SmRegistry>,
) -> Result<XappContext, XappError> {
    let stream = TcpStream::connect(ric_addr).map_err(|source| XappError::Connect {
        addr: ric_addr.to_string(),
        source,
    })?;
    let (reader, writer) = split(stream).map_err(|e| XappError::Transport(e.to_string()))?;
    let ctx = XappContext {
        inner: Arc::new(Inner {
            xapp_id: xapp_id.to_string(),
            writer,
            registry,
            reader: Mutex::new(Some(reader)),
            response_slot: Mutex::new(None),
            response_ready: Condvar::new(),
            request_gate: Mutex::new(()),
            queued: Mutex::new(VecDeque::new()),
            subs: Mutex::new(HashMap::new()),
            callback: Mutex::new(None),
            dispatch_thread: Mutex::new(None),
            in_callback: AtomicBool::new(false),
            stop: AtomicBool::new(false),
            disconnected: AtomicBool::new(false),
            decode_failures: AtomicU64::new(0),
            closed_events: Mutex::new(Vec::new()),
        }),
    };
    ctx.send(&NorthMessage::XAppRegister {
        xapp_id: xapp_id.to_string(),
    })?;
    // probe: a duplicate registration is answered by a closed connection
    ctx.request(NorthMessage::InventoryRequest)
        .map_err(|_| XappError::RegistrationRejected)?;
    log::info!("xapp {xapp_id:?} registered at {ric_addr}");
    Ok(ctx)
}

impl XappContext {
    pub fn xapp_id(&self) -> &str {
        &self.inner.xapp_id
    }

    pub fn stop(&self) {
        self.inner.stop.store(true, Ordering::SeqCst);
    }

    pub fn decode_failures(&self) -> u64 {
        self.inner.decode_failures.load(Ordering::SeqCst)
    }

    /// Subscriptions closed by the RIC (node disconnect or delete), as
    /// (request id, cause).
    pub fn closed_events(&self) -> Vec<(RicRequestId, NorthCause)> {
        self.inner.closed_events.lock().unwrap().clone()
    }

    fn send(&self, msg: &NorthMessage) -> Result<(), XappError> {
        let octets = north::frame(msg).map_err(|e| XappError::Transport(e.to_string()))?;
        self.inner
            .writer
            .send(&octets)
            .map_err(|e| XappError::Transport(e.to_string()))
    }

    /// Sends a request and returns the next response-family message.
    /// One request is outstanding at a time per context.
    fn request(&self, msg: NorthMessage) -> Result<NorthMessage, XappError> {
        if let Some(dispatch) = *self.inner.dispatch_thread.lock().unwrap() {
            assert_ne!(
                std::thread::current().id(),
                dispatch,
                "request ops must not be called from the indication callback; \
                 hand the work off to the logic task"
            );
        }
        let _gate = self.inner.request_gate.lock().unwrap();
        self.inner.response_slot.lock().unwrap().take();
        self.send(&msg)?;
        if self.dispatch_running() {
            let deadline = Instant::now() + REQUEST_TIMEOUT;
            let mut slot = self.inner.response_slot.lock().unwrap();
            loop {
                if let Some(response) = slot.take() {
                    return Ok(response);
                }
                if self.inner.disconnected.load(Ordering::SeqCst) {
                    return Err(XappError::Disconnected);
                }
                if Instant::now() >= deadline {
                    return Err(XappError::Timeout("response"));
                }
                let (guard, _) = self
                    .inner
                    .response_ready
                    .wait_timeout(slot, POLL_INTERVAL)
                    .unwrap();
                slot = guard;
            }
        } else {
            // dispatch not running yet: read the socket directly, queueing
            // any indications that arrive in between
            let mut reader_slot = self.inner.reader.lock().unwrap();
            let reader = reader_slot.as_mut().ok_or(XappError::Disconnected)?;
            reader
                .set_read_timeout(Some(REQUEST_TIMEOUT))
                .map_err(|e| XappError::Transport(e.to_string()))?;
            loop {
                let frame = match reader.recv() {
                    Ok(Some(f)) => f,
                    Ok(None) => {
                        self.inner.disconnected.store(true, Ordering::SeqCst);
                        return Err(XappError::Disconnected);
                    }
                    Err(e)
                        if e.kind() == io::ErrorKind::WouldBlock
                            || e.kind() == io::ErrorKind::TimedOut =>
                    {
                        return Err(XappError::Timeout("response"))
                    }
                    Err(e) => return Err(XappError::Transport(e.to_string())),
                };
                let msg = NorthMessage::decode_payload(frame.type_code, &frame.payload)
                    .map_err(|e| XappError::Transport(e.to_string()))?;
                if is_response(&msg) {
                    return Ok(msg);
                }
                self.inner.queued.lock().unwrap().push_back(msg);
            }
        }
    }

    fn dispatch_running(&self) -> bool {
        self.inner.dispatch_thread.lock().unwrap().is_some()
    }

    /// Inventory records as currently known to the RIC.
    pub fn list_nodes(&self) -> Result<Vec<InventoryRecord>, XappError> {
        match self.request(NorthMessage::InventoryRequest)? {
            NorthMessage::InventoryResponse { json } => serde_json::from_slice(&json)
                .map_err(|e| XappError::Transport(format!("bad inventory json: {e}"))),
            other => Err(XappError::Transport(format!(
                "unexpected response type {}",
                other.type_code()
            ))),
        }
    }

    /// Fetches the node's function definitions from the RIC, resolves
    /// codecs through the registry, and decodes. Functions without a
    /// usable codec come back opaque instead of failing.
    pub fn available_functions(
        &self,
        node: &str,
    ) -> Result<BTreeMap<u16, FunctionInfo>, XappError> {
        let defs = match self.request(NorthMessage::FunctionDefsRequest {
            node: node.to_string(),
        })? {
            NorthMessage::FunctionDefsResponse { defs } => defs,
            other => {
                return Err(XappError::Transport(format!(
                    "unexpected response type {}",
                    other.type_code()
                )))
            }
        };
        let mut out = BTreeMap::new();
        for def in defs {
            let opaque = FunctionInfo::Opaque {
                hex: to_hex(&def.definition_octets),
            };
            let info = if def.sm_name.is_empty() {
                opaque
            } else {
                let key = SmCodecKey::new(def.sm_name.clone(), def.version.clone());
                match self.inner.registry.resolve(&key) {
                    Some(codec) => match codec.decode_function_definition(&def.definition_octets) {
                        Ok(definition) => FunctionInfo::Decoded {
                            key,
                            summary: crate::kpm::function_definition_summary(&definition),
                            definition,
                        },
                        Err(_) => opaque,
                    },
                    None => opaque,
                }
            };
            out.insert(def.ran_function_id, info);
        }
        Ok(out)
    }

    /// Subscribes to `metrics` on `node`/`ran_function_id` with the given
    /// reporting period and measurement granularity. The report style is
    /// chosen from the node's advertised styles (best metric coverage).
    /// Preconditions are validated locally; admission is decided by the
    /// RIC and node.
    pub fn subscribe(
        &self,
        node: &str,
        ran_function_id: u16,
        metrics: &[&str],
        reporting_period_ms: u32,
        granularity_ms: u32,
    ) -> Result<RicRequestId, XappError> {
        if metrics.is_empty() {
            return Err(XappError::Validation("metric list is empty".into()));
        }
        if !(1..=65536).contains(&reporting_period_ms) {
            return Err(XappError::Validation(format!(
                "reporting period {reporting_period_ms} outside [1, 65536]"
            )));
        }
        if granularity_ms == 0 || !reporting_period_ms.is_multiple_of(granularity_ms) {
            return Err(XappError::Validation(format!(
                "granularity {granularity_ms} does not divide period {reporting_period_ms}"
            )));
        }
        let metric_names: Vec<MeasurementName> = metrics
            .iter()
            .map(|m| MeasurementName::new(*m))
            .collect::<Result<_, _>>()
            .map_err(|e| XappError::Validation(e.to_string()))?;

        let functions = self.available_functions(node)?;
        let (key, definition) = match functions.get(&ran_function_id) {
            Some(FunctionInfo::Decoded {
                key, definition, ..
            }) => (key.clone(), definition.clone()),
            Some(FunctionInfo::Opaque { .. }) => {
                return Err(XappError::Validation(format!(
                    "function {ran_function_id} has no registered codec; cannot encode action"
                )))
            }
            None => {
                return Err(XappError::Validation(format!(
                    "node {node} does not advertise function {ran_function_id}"
                )))
            }
        };
        let codec =
            self.inner.registry.resolve(&key).ok_or_else(|| {
                XappError::Validation(format!("codec {key} vanished from registry"))
            })?;

        // style with the best coverage of the requested metrics; ties go
        // to the style declaring more metrics, then the lower id
        let style_id = definition
            .styles
            .iter()
            .max_by_key(|s| {
                let coverage = metric_names
                    .iter()
                    .filter(|m| s.metrics.contains(m))
                    .count();
                (coverage, s.metrics.len(), std::cmp::Reverse(s.style_id))
            })
            .map(|s| s.style_id)
            .ok_or_else(|| XappError::Validation("function declares no styles".into()))?;

        let action = ActionDefinition {
            style_id,
            metrics: metric_names,
            granularity_period_ms: granularity_ms,
        };
        let trigger = EventTriggerDefinition {
            reporting_period_ms,
        };
        let event_trigger_octets = codec
            .encode_event_trigger(&trigger)
            .map_err(|e| XappError::Validation(e.to_string()))?;
        let action_octets = codec
            .encode_action_definition(&action)
            .map_err(|e| XappError::Validation(e.to_string()))?;
        log::info!("event trigger encoded: {}", to_hex(&event_trigger_octets));

        match self.request(NorthMessage::SubscribeRequest {
            node: node.to_string(),
            ran_function_id,
            event_trigger_octets,
            action_octets,
        })? {
            NorthMessage::SubscribeResponse {
                request_id,
                admitted: true,
                ..
            } => {
                self.inner.subs.lock().unwrap().insert(
                    request_id,
                    SubInfo {
                        node: node.to_string(),
                        ran_function_id,
                        action,
                        period_ms: reporting_period_ms,
                        sm_key: key,
                    },
                );
                log::info!("subscription {request_id} admitted on {node}");
                Ok(request_id)
            }
            NorthMessage::SubscribeResponse { cause, .. } => Err(XappError::Refused(cause)),
            other => Err(XappError::Transport(format!(
                "unexpected response type {}",
                other.type_code()
            ))),
        }
    }

    /// Deletes a subscription and waits for the RIC's confirmation.
    pub fn delete_subscription(&self, request_id: RicRequestId) -> Result<(), XappError> {
        match self.request(NorthMessage::SubscriptionDeleteRequest { request_id })? {
            NorthMessage::SubscriptionDeleteResponse { .. } => {
                self.inner.subs.lock().unwrap().remove(&request_id);
                Ok(())
            }
            other => Err(XappError::Transport(format!(
                "unexpected response type {}",
                other.type_code()
            ))),
        }
    }

    /// Relays opaque control octets through the RIC to the node. Returns
    /// whether the node acknowledged; `false` means the node was
    /// unavailable or did not ack.
    pub fn send_control(
        &self,
        node: &str,
        ran_function_id: u16,
        header_octets: &[u8],
        message_octets: &[u8],
    ) -> Result<bool, XappError> {
        match self.request(NorthMessage::ControlForward {
            node: node.to_string(),
            ran_function_id,
            header_octets: header_octets.to_vec(),
            message_octets: message_octets.to_vec(),
        })? {
            NorthMessage::ControlResult { acked } => Ok(acked),
            other => Err(XappError::Transport(format!(
                "unexpected response type {}",
                other.type_code()
            ))),
        }
    }

    /// Registers the indication callback. Must be called before [`run`].
    pub fn on_indication(&self, callback: impl FnMut(DecodedIndication) + Send + 'static) {
        *self.inner.callback.lock().unwrap() = Some(Box::new(callback));
    }

    pub fn live_subscriptions(&self) -> Vec<RicRequestId> {
        let mut ids: Vec<_> = self.inner.subs.lock().unwrap().keys().copied().collect();
        ids.sort();
        ids
    }

    fn handle_north(&self, msg: NorthMessage) {
        match msg {
            NorthMessage::IndicationForward {
                request_id,
                sn,
                verdict,
                header_octets,
                message_octets,
            } => {
                let decoded =
                    self.decode_forward(request_id, sn, verdict, &header_octets, &message_octets);
                let Some(decoded) = decoded else { return };
                let mut callback = self.inner.callback.lock().unwrap();
                if let Some(cb) = callback.as_mut() {
                    assert!(
                        !self.inner.in_callback.swap(true, Ordering::SeqCst),
                        "indication callbacks must never overlap"
                    );
                    cb(decoded);
                    self.inner.in_callback.store(false, Ordering::SeqCst);
                }
            }
            NorthMessage::SubscriptionClosed { request_id, cause } => {
                log::info!("subscription {request_id} closed: {cause}");
                self.inner.subs.lock().unwrap().remove(&request_id);
                self.inner
                    .closed_events
                    .lock()
                    .unwrap()
                    .push((request_id, cause));
            }
            msg if is_response(&msg) => {
                let mut slot = self.inner.response_slot.lock().unwrap();
                *slot = Some(msg);
                self.inner.response_ready.notify_all();
            }
            other => {
                log::warn!("unexpected north message type {}", other.type_code());
            }
        }
    }

    /// Decodes a forwarded indication against the stored subscription.
    /// Undecodable or width-mismatched payloads are delivered opaque with
    /// the raw hex attached; the decode-failure counter is bumped for
    /// genuine failures (not for intentionally unbound models).
    fn decode_forward(
        &self,
        request_id: RicRequestId,
        sn: u32,
        verdict: crate::e2ap::SnVerdict,
        header_octets: &[u8],
        message_octets: &[u8],
    ) -> Option<DecodedIndication> {
        let sub = self.inner.subs.lock().unwrap().get(&request_id).cloned();
        let Some(sub) = sub else {
            log::warn!("indication for unknown subscription {request_id}; dropped");
            return None;
        };
        let codec = self.inner.registry.resolve(&sub.sm_key);
        let (header, message) = match codec {
            None => (
                MaybeDecoded::Opaque {
                    hex: to_hex(header_octets),
                },
                MaybeDecoded::Opaque {
                    hex: to_hex(message_octets),
                },
            ),
            Some(codec) => {
                let header = match codec.decode_indication_header(header_octets) {
                    Ok(h) => MaybeDecoded::Decoded(h),
                    Err(e) => {
                        self.inner.decode_failures.fetch_add(1, Ordering::SeqCst);
                        log::warn!("indication header decode failed on {request_id}: {e}");
                        MaybeDecoded::Opaque {
                            hex: to_hex(header_octets),
                        }
                    }
                };
                let message = match codec.decode_indication_message(message_octets) {
                    Ok(m) if self.widths_match(&sub, &m) => MaybeDecoded::Decoded(m),
                    Ok(_) => {
                        self.inner.decode_failures.fetch_add(1, Ordering::SeqCst);
                        log::warn!(
                            "indication on {request_id} has records inconsistent with the \
                             subscribed action; delivering raw"
                        );
                        MaybeDecoded::Opaque {
                            hex: to_hex(message_octets),
                        }
                    }
                    Err(e) => {
                        self.inner.decode_failures.fetch_add(1, Ordering::SeqCst);
                        log::warn!("indication message decode failed on {request_id}: {e}");
                        MaybeDecoded::Opaque {
                            hex: to_hex(message_octets),
                        }
                    }
                };
                (header, message)
            }
        };
        Some(DecodedIndication {
            node: sub.node,
            ran_function_id: sub.ran_function_id,
            sn,
            verdict,
            header,
            message,
        })
    }

    /// Record shape must match the subscribed action: one value per
    /// metric, and period/granularity records per report.
    fn widths_match(&self, sub: &SubInfo, message: &IndicationMessage) -> bool {
        let expected_values = sub.action.metrics.len();
        let expected_records = (sub.period_ms / sub.action.granularity_period_ms) as usize;
        let records_ok = |records: &[crate::kpm::MeasRecord]| {
            records.len() == expected_records
                && records.iter().all(|r| r.values.len() == expected_values)
        };
        match message {
            IndicationMessage::NodeLevel { records } => records_ok(records),
            IndicationMessage::PerUe { ue_reports } => {
                ue_reports.iter().all(|r| records_ok(&r.records))
            }
        }
    }
}

/// Runs the xApp: starts the dispatch loop, invokes `logic` exactly once,
/// and keeps dispatching until [`XappContext::stop`] is called or the
/// connection closes. If `logic` fails, live subscriptions are deleted
/// best-effort before shutdown.
pub fn run(
    ctx: &XappContext,
    logic: impl FnOnce(&XappContext) -> Result<(), String>,
) -> Result<(), XappError> {
    let reader = ctx
        .inner
        .reader
        .lock()
        .unwrap()
        .take()
        .ok_or(XappError::Disconnected)?;
    let dispatch_ctx = ctx.clone();
    let dispatch = std::thread::spawn(move || dispatch_loop(dispatch_ctx, reader));
    *ctx.inner.dispatch_thread.lock().unwrap() = Some(dispatch.thread().id());

    let logic_result = logic(ctx);

    if let Err(reason) = &logic_result {
        log::warn!("xapp logic failed: {reason}; deleting subscriptions");
        for request_id in ctx.live_subscriptions() {
            let _ = ctx.delete_subscription(request_id);
        }
        ctx.stop();
    }

    while !ctx.inner.stop.load(Ordering::SeqCst) && !ctx.inner.disconnected.load(Ordering::SeqCst) {
        std::thread::sleep(Duration::from_millis(5));
    }
    ctx.inner.stop.store(true, Ordering::SeqCst);
    let _ = dispatch.join();
    *ctx.inner.dispatch_thread.lock().unwrap() = None;

    logic_result.map_err(XappError::Logic)
}

fn dispatch_loop(ctx: XappContext, mut reader: FrameReader) {
    let _ = reader.set_read_timeout(Some(POLL_INTERVAL));
    // indications that arrived while a pre-run request was in flight
    loop {
        let queued = ctx.inner.queued.lock().unwrap().pop_front();
        match queued {
            Some(msg) => ctx.handle_north(msg),
            None => break,
        }
    }
    loop {
        if ctx.inner.stop.load(Ordering::SeqCst) {
            break;
        }
        let frame = match reader.recv() {
            Ok(Some(f)) => f,
            Ok(None) => {
                ctx.inner.disconnected.store(true, Ordering::SeqCst);
                break;
            }
            Err(e)
                if e.kind() == io::ErrorKind::WouldBlock || e.kind() == io::ErrorKind::TimedOut =>
            {
                continue
            }
            Err(_) => {
                ctx.inner.disconnected.store(true, Ordering::SeqCst);
                break;
            }
        };
        match NorthMessage::decode_payload(frame.type_code, &frame.payload) {
            Ok(msg) => ctx.handle_north(msg),
            Err(e) => log::warn!("undecodable north frame: {e}"),
        }
    }
    ctx.inner.response_ready.notify_all();
}
