//! Near-RT RIC simulator.
//!
//! A single TCP listener terminates both sides: E2 nodes open a
//! connection and speak E2AP (first frame must be an E2 setup request),
//! xApps open a connection and speak the north family (first frame must
//! be an xApp registration). The RIC keeps a node inventory with
//! function definitions stored as hex, tracks subscriptions through the
//! E2AP state machine, and routes indications to exactly the owning
//! xApp, preserving per-subscription order.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::e2ap::{
    self, subscription_transition, Cause, E2apMessage, GlobalE2NodeId, RicRequestId, SnValidator,
    SnVerdict, SubAction, SubEvent, SubscriptionState,
};
use crate::north::{self, FunctionDef, NorthCause, NorthMessage};
use crate::percodec::to_hex;
use crate::registry::{SmCodecKey, SmRegistry};
use crate::transport::{split, FrameWriter, RawFrame};

/// Inventory record in the exact registration-log shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryRecord {
    #[serde(rename = "inventoryName")]
    pub inventory_name: String,
    #[serde(rename = "globalNbId")]
    pub global_nb_id: GlobalNbId,
    #[serde(rename = "connectionStatus")]
    pub connection_status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalNbId {
    #[serde(rename = "plmnId")]
    pub plmn_id: String,
    #[serde(rename = "nbId")]
    pub nb_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionStatus {
    Connected,
    Disconnected,
}

impl ConnectionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ConnectionStatus::Connected => "CONNECTED",
            ConnectionStatus::Disconnected => "DISCONNECTED",
        }
    }
}

/// One advertised RAN function as stored by the RIC: the exact setup-time
/// octets as hex, the revision, and the service-model binding when a
/// registered codec understands the definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredFunction {
    pub definition_hex: String,
    pub revision: u8,
    pub binding: Option<SmCodecKey>,
}

#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub inventory_name: String,
    pub global_id: GlobalE2NodeId,
    pub connection_status: ConnectionStatus,
    pub functions: BTreeMap<u16, StoredFunction>,
}

#[derive(Debug, Clone)]
struct SubscriptionRecord {
    xapp_id: String,
    node: String,
    request_id: RicRequestId,
    #[allow(dead_code)]
    ran_function_id: u16,
    action_id: u8,
    state: SubscriptionState,
    sn: SnValidator,
}

/// Counters exposed for tests and diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RicCounters {
    pub indications_routed: u64,
    pub sn_gaps: u64,
    pub sn_duplicates: u64,
    pub unknown_request_ids: u64,
    pub protocol_violations: u64,
}

/// Messages the core asks the shell to put on the wire.
#[derive(Debug, PartialEq)]
enum Outbound {
    ToNode(String, E2apMessage),
    ToXapp(String, NorthMessage),
}

/// Protocol state and decision logic, independent of sockets.
struct RicCore {
    registry: Arc<SmRegistry>,
    nodes: BTreeMap<String, NodeRecord>,
    subs: HashMap<RicRequestId, SubscriptionRecord>,
    ctrl_pending: HashMap<RicRequestId, String>,
    xapp_numeric: HashMap<String, u16>,
    next_requestor: u16,
    next_instance: u16,
    counters: RicCounters,
}

impl RicCore {
    fn new(registry: Arc<SmRegistry>) -> Self {
        Self {
            registry,
            nodes: BTreeMap::new(),
            subs: HashMap::new(),
            ctrl_pending: HashMap::new(),
            xapp_numeric: HashMap::new(),
            next_requestor: 1,
            next_instance: 1,
            counters: RicCounters::default(),
        }
    }

    fn handle_setup(
        &mut self,
        node_id: GlobalE2NodeId,
        functions: Vec<e2ap::FunctionItem>,
    ) -> (String, E2apMessage) {
        let name = node_id.inventory_name();
        let mut stored = BTreeMap::new();
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        for f in functions {
            if stored.contains_key(&f.ran_function_id) {
                rejected.push(f.ran_function_id);
                continue;
            }
            let binding = self.registry.probe_definition(&f.definition_octets);
            stored.insert(
                f.ran_function_id,
                StoredFunction {
                    definition_hex: to_hex(&f.definition_octets),
                    revision: f.revision,
                    binding,
                },
            );
            accepted.push(f.ran_function_id);
        }
        log::info!("e2 setup from {name}: accepted {accepted:?}, rejected {rejected:?}");
        self.nodes.insert(
            name.clone(),
            NodeRecord {
                inventory_name: name.clone(),
                global_id: node_id,
                connection_status: ConnectionStatus::Connected,
                functions: stored,
            },
        );
        (
            name,
            E2apMessage::E2SetupResponse {
                accepted_ids: accepted,
                rejected_ids: rejected,
            },
        )
    }

    fn inventory_snapshot(&self) -> Vec<InventoryRecord> {
        self.nodes
            .values()
            .map(|n| InventoryRecord {
                inventory_name: n.inventory_name.clone(),
                global_nb_id: GlobalNbId {
                    plmn_id: n.global_id.plmn_hex(),
                    nb_id: n.global_id.nb_id_bits(),
                },
                connection_status: n.connection_status.as_str().to_string(),
            })
            .collect()
    }

    fn function_defs(&self, node: &str) -> Vec<FunctionDef> {
        let Some(record) = self.nodes.get(node) else {
            return Vec::new();
        };
        record
            .functions
            .iter()
            .map(|(&id, f)| FunctionDef {
                ran_function_id: id,
                definition_octets: crate::percodec::from_hex(&f.definition_hex)
                    .expect("stored hex is always valid"),
                sm_name: f
                    .binding
                    .as_ref()
                    .map(|k| k.sm_name.clone())
                    .unwrap_or_default(),
                version: f
                    .binding
                    .as_ref()
                    .map(|k| k.version.clone())
                    .unwrap_or_default(),
            })
            .collect()
    }

    fn numeric_id(&mut self, xapp_id: &str) -> u16 {
        if let Some(&n) = self.xapp_numeric.get(xapp_id) {
            return n;
        }
        let n = self.next_requestor;
        self.next_requestor = self.next_requestor.wrapping_add(1).max(1);
        self.xapp_numeric.insert(xapp_id.to_string(), n);
        n
    }

    fn fresh_request_id(&mut self, xapp_id: &str) -> RicRequestId {
        let requestor = self.numeric_id(xapp_id);
        loop {
            let id = RicRequestId::new(requestor, self.next_instance);
            self.next_instance = self.next_instance.wrapping_add(1).max(1);
            if !self.subs.contains_key(&id) && !self.ctrl_pending.contains_key(&id) {
                return id;
            }
        }
    }

    /// Admission pre-screen plus forwarding. Refusals carry request id
    /// (0, 0) since none was allocated.
    fn handle_xapp_subscribe(
        &mut self,
        xapp_id: &str,
        node: &str,
        ran_function_id: u16,
        event_trigger_octets: Vec<u8>,
        action_octets: Vec<u8>,
    ) -> Vec<Outbound> {
        let refuse = |cause| {
            vec![Outbound::ToXapp(
                xapp_id.to_string(),
                NorthMessage::SubscribeResponse {
                    request_id: RicRequestId::new(0, 0),
                    admitted: false,
                    cause,
                },
            )]
        };
        let Some(record) = self.nodes.get(node) else {
            return refuse(NorthCause::NodeUnavailable);
        };
        if record.connection_status != ConnectionStatus::Connected {
            return refuse(NorthCause::NodeUnavailable);
        }
        let Some(function) = record.functions.get(&ran_function_id) else {
            return refuse(NorthCause::UnsupportedFunction);
        };

        // When the bound codec can decode the action, check the request
        // against the declared style before bothering the node.
        if let Some(codec) = function
            .binding
            .as_ref()
            .and_then(|key| self.registry.resolve(key))
        {
            let definition_octets = crate::percodec::from_hex(&function.definition_hex)
                .expect("stored hex is always valid");
            if let (Ok(action), Ok(def)) = (
                codec.decode_action_definition(&action_octets),
                codec.decode_function_definition(&definition_octets),
            ) {
                let style = def.styles.iter().find(|s| s.style_id == action.style_id);
                let admissible =
                    style.is_some_and(|s| action.metrics.iter().all(|m| s.metrics.contains(m)));
                if !admissible {
                    return refuse(NorthCause::UnknownMetric);
                }
            }
        }

        let request_id = self.fresh_request_id(xapp_id);
        let record = SubscriptionRecord {
            xapp_id: xapp_id.to_string(),
            node: node.to_string(),
            request_id,
            ran_function_id,
            action_id: 1,
            state: SubscriptionState::Idle,
            sn: SnValidator::new(),
        };
        let (state, actions) = subscription_transition(record.state, SubEvent::SendSubReq);
        debug_assert_eq!(
            actions,
            vec![SubAction::EmitFrame(e2ap::TYPE_SUBSCRIPTION_REQUEST)]
        );
        let mut record = record;
        record.state = state;
        let action_id = record.action_id;
        self.subs.insert(request_id, record);
        vec![Outbound::ToNode(
            node.to_string(),
            E2apMessage::RicSubscriptionRequest {
                request_id,
                ran_function_id,
                event_trigger_octets,
                actions: vec![e2ap::ActionItem {
                    action_id,
                    definition_octets: action_octets,
                }],
            },
        )]
    }

    fn on_subscription_response(
        &mut self,
        request_id: RicRequestId,
        admitted_action_ids: &[u8],
        not_admitted: &[(u8, Cause)],
    ) -> Vec<Outbound> {
        let Some(sub) = self.subs.get_mut(&request_id) else {
            self.counters.unknown_request_ids += 1;
            return Vec::new();
        };
        let admitted = !admitted_action_ids.is_empty();
        let (state, _) = subscription_transition(sub.state, SubEvent::RecvSubResp { admitted });
        sub.state = state;
        let xapp_id = sub.xapp_id.clone();
        let cause = if admitted {
            NorthCause::None
        } else {
            not_admitted
                .first()
                .map(|(_, c)| NorthCause::from_e2ap(*c))
                .unwrap_or(NorthCause::Unspecified)
        };
        if !admitted {
            self.subs.remove(&request_id);
        }
        vec![Outbound::ToXapp(
            xapp_id,
            NorthMessage::SubscribeResponse {
                request_id,
                admitted,
                cause,
            },
        )]
    }

    fn on_subscription_failure(&mut self, request_id: RicRequestId, cause: Cause) -> Vec<Outbound> {
        let Some(sub) = self.subs.get_mut(&request_id) else {
            self.counters.unknown_request_ids += 1;
            return Vec::new();
        };
        let (state, _) = subscription_transition(sub.state, SubEvent::RecvSubFail);
        sub.state = state;
        let xapp_id = sub.xapp_id.clone();
        self.subs.remove(&request_id);
        vec![Outbound::ToXapp(
            xapp_id,
            NorthMessage::SubscribeResponse {
                request_id,
                admitted: false,
                cause: NorthCause::from_e2ap(cause),
            },
        )]
    }

    fn route_indication(
        &mut self,
        node: &str,
        request_id: RicRequestId,
        sn: u32,
        header_octets: Vec<u8>,
        message_octets: Vec<u8>,
    ) -> Vec<Outbound> {
        let Some(sub) = self.subs.get_mut(&request_id) else {
            self.counters.unknown_request_ids += 1;
            log::warn!("indication for unknown request id {request_id}");
            return vec![Outbound::ToNode(
                node.to_string(),
                E2apMessage::ErrorIndication {
                    cause: Cause::Unspecified,
                },
            )];
        };
        let (state, actions) = subscription_transition(sub.state, SubEvent::RecvIndication { sn });
        sub.state = state;
        let mut out = Vec::new();
        for action in actions {
            match action {
                SubAction::Deliver { sn, .. } => {
                    let verdict = sub.sn.check(sn);
                    match verdict {
                        SnVerdict::Ok => {}
                        SnVerdict::Gap => {
                            self.counters.sn_gaps += 1;
                            log::warn!("sn gap on {request_id}: got {sn}");
                        }
                        SnVerdict::Duplicate => {
                            self.counters.sn_duplicates += 1;
                            log::warn!("sn duplicate on {request_id}: got {sn}");
                        }
                    }
                    self.counters.indications_routed += 1;
                    out.push(Outbound::ToXapp(
                        sub.xapp_id.clone(),
                        NorthMessage::IndicationForward {
                            request_id,
                            sn,
                            verdict,
                            header_octets: header_octets.clone(),
                            message_octets: message_octets.clone(),
                        },
                    ));
                }
                SubAction::ProtocolViolation => {
                    self.counters.protocol_violations += 1;
                    log::warn!("indication in state {:?} on {request_id}", sub.state);
                }
                SubAction::EmitFrame(_) => unreachable!("RecvIndication never emits frames"),
            }
        }
        out
    }

    fn handle_xapp_delete(&mut self, xapp_id: &str, request_id: RicRequestId) -> Vec<Outbound> {
        match self.subs.get_mut(&request_id) {
            Some(sub) if sub.xapp_id == xapp_id && sub.state == SubscriptionState::Active => {
                let (state, _) = subscription_transition(sub.state, SubEvent::SendDelReq);
                sub.state = state;
                vec![Outbound::ToNode(
                    sub.node.clone(),
                    E2apMessage::RicSubscriptionDeleteRequest { request_id },
                )]
            }
            // unknown or already closed: answer directly so the caller
            // never hangs on a delete
            _ => vec![Outbound::ToXapp(
                xapp_id.to_string(),
                NorthMessage::SubscriptionDeleteResponse { request_id },
            )],
        }
    }

    fn on_delete_response(&mut self, request_id: RicRequestId) -> Vec<Outbound> {
        let Some(sub) = self.subs.get_mut(&request_id) else {
            self.counters.unknown_request_ids += 1;
            return Vec::new();
        };
        let (state, _) = subscription_transition(sub.state, SubEvent::RecvDelResp);
        sub.state = state;
        let xapp_id = sub.xapp_id.clone();
        self.subs.remove(&request_id);
        vec![Outbound::ToXapp(
            xapp_id,
            NorthMessage::SubscriptionDeleteResponse { request_id },
        )]
    }

    fn handle_control_forward(
        &mut self,
        xapp_id: &str,
        node: &str,
        ran_function_id: u16,
        header_octets: Vec<u8>,
        message_octets: Vec<u8>,
    ) -> Vec<Outbound> {
        let available = self
            .nodes
            .get(node)
            .is_some_and(|n| n.connection_status == ConnectionStatus::Connected);
        if !available {
            return vec![Outbound::ToXapp(
                xapp_id.to_string(),
                NorthMessage::ControlResult { acked: false },
            )];
        }
        let request_id = self.fresh_request_id(xapp_id);
        self.ctrl_pending.insert(request_id, xapp_id.to_string());
        vec![Outbound::ToNode(
            node.to_string(),
            E2apMessage::RicControlRequest {
                request_id,
                ran_function_id,
                header_octets,
                message_octets,
                ack_requested: true,
            },
        )]
    }

    fn on_control_acknowledge(&mut self, request_id: RicRequestId) -> Vec<Outbound> {
        match self.ctrl_pending.remove(&request_id) {
            Some(xapp_id) => vec![Outbound::ToXapp(
                xapp_id,
                NorthMessage::ControlResult { acked: true },
            )],
            None => {
                self.counters.unknown_request_ids += 1;
                Vec::new()
            }
        }
    }

    fn handle_node_disconnect(&mut self, node: &str) -> Vec<Outbound> {
        let Some(record) = self.nodes.get_mut(node) else {
            return Vec::new();
        };
        record.connection_status = ConnectionStatus::Disconnected;
        log::info!("node {node} disconnected");
        let closing: Vec<RicRequestId> = self
            .subs
            .values()
            .filter(|s| s.node == node && s.state != SubscriptionState::Closed)
            .map(|s| s.request_id)
            .collect();
        let mut out = Vec::new();
        for request_id in closing {
            let sub = self.subs.get_mut(&request_id).unwrap();
            let (state, _) = subscription_transition(sub.state, SubEvent::PeerDisconnect);
            sub.state = state;
            let xapp_id = sub.xapp_id.clone();
            self.subs.remove(&request_id);
            out.push(Outbound::ToXapp(
                xapp_id,
                NorthMessage::SubscriptionClosed {
                    request_id,
                    cause: NorthCause::NodeDisconnected,
                },
            ));
        }
        out
    }

    /// Best-effort cleanup when an xApp connection goes away: delete its
    /// live subscriptions at the nodes.
    fn handle_xapp_disconnect(&mut self, xapp_id: &str) -> Vec<Outbound> {
        let owned: Vec<RicRequestId> = self
            .subs
            .values()
            .filter(|s| s.xapp_id == xapp_id && s.state == SubscriptionState::Active)
            .map(|s| s.request_id)
            .collect();
        let mut out = Vec::new();
        for request_id in owned {
            let sub = self.subs.get_mut(&request_id).unwrap();
            let (state, _) = subscription_transition(sub.state, SubEvent::SendDelReq);
            sub.state = state;
            out.push(Outbound::ToNode(
                sub.node.clone(),
                E2apMessage::RicSubscriptionDeleteRequest { request_id },
            ));
        }
        out
    }
}

struct Shared {
    core: Mutex<RicCore>,
    node_writers: Mutex<HashMap<String, FrameWriter>>,
    xapp_writers: Mutex<HashMap<String, FrameWriter>>,
}

impl Shared {
    fn dispatch(&self, outbound: Vec<Outbound>) {
        for msg in outbound {
            match msg {
                Outbound::ToNode(node, m) => {
                    let writer = self.node_writers.lock().unwrap().get(&node).cloned();
                    if let (Some(writer), Ok(octets)) = (writer, e2ap::frame(&m)) {
                        let _ = writer.send(&octets);
                    }
                }
                Outbound::ToXapp(xapp, m) => {
                    let writer = self.xapp_writers.lock().unwrap().get(&xapp).cloned();
                    if let (Some(writer), Ok(octets)) = (writer, north::frame(&m)) {
                        let _ = writer.send(&octets);
                    }
                }
            }
        }
    }
}

/// Handle on a running RIC server.
pub struct Ric {
    shared: Arc<Shared>,
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
    conn_threads: Arc<Mutex<Vec<JoinHandle<()>>>>,
    conn_writers: Arc<Mutex<Vec<FrameWriter>>>,
}

impl Ric {
    /// Binds `listen` (e.g. `127.0.0.1:0`) and starts serving.
    pub fn start(listen: &str, registry: Arc<SmRegistry>) -> io::Result<Ric> {
        let listener = TcpListener::bind(listen)?;
        let local_addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            core: Mutex::new(RicCore::new(registry)),
            node_writers: Mutex::new(HashMap::new()),
            xapp_writers: Mutex::new(HashMap::new()),
        });
        let stop = Arc::new(AtomicBool::new(false));
        let conn_threads = Arc::new(Mutex::new(Vec::new()));
        let conn_writers = Arc::new(Mutex::new(Vec::new()));

        let accept_shared = shared.clone();
        let accept_stop = stop.clone();
        let accept_threads = conn_threads.clone();
        let accept_writers = conn_writers.clone();
        let accept_thread = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if accept_stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let shared = accept_shared.clone();
                let writers = accept_writers.clone();
                let handle = std::thread::spawn(move || {
                    let _ = serve_connection(shared, stream, writers);
                });
                accept_threads.lock().unwrap().push(handle);
            }
        });

        log::info!("ric listening on {local_addr}");
        Ok(Ric {
            shared,
            local_addr,
            stop,
            accept_thread: Some(accept_thread),
            conn_threads,
            conn_writers,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn inventory_snapshot(&self) -> Vec<InventoryRecord> {
        self.shared.core.lock().unwrap().inventory_snapshot()
    }

    /// Inventory serialized as the wire JSON array.
    pub fn inventory_json(&self) -> String {
        serde_json::to_string(&self.inventory_snapshot()).expect("inventory serializes")
    }

    pub fn counters(&self) -> RicCounters {
        self.shared.core.lock().unwrap().counters
    }

    /// Stored function definitions (id, hex, revision) of a node.
    pub fn stored_functions(&self, node: &str) -> Option<Vec<(u16, String, u8)>> {
        let core = self.shared.core.lock().unwrap();
        core.nodes.get(node).map(|n| {
            n.functions
                .iter()
                .map(|(&id, f)| (id, f.definition_hex.clone(), f.revision))
                .collect()
        })
    }

    /// Live subscription states, for harness assertions.
    pub fn subscription_states(&self) -> Vec<(RicRequestId, SubscriptionState)> {
        let core = self.shared.core.lock().unwrap();
        let mut v: Vec<_> = core
            .subs
            .values()
            .map(|s| (s.request_id, s.state))
            .collect();
        v.sort_by_key(|(id, _)| *id);
        v
    }

    pub fn shutdown(mut self) {
        self.stop_inner();
    }

    fn stop_inner(&mut self) {
        if self.stop.swap(true, Ordering::SeqCst) {
            return;
        }
        // wake the accept loop, then drop every connection
        let _ = TcpStream::connect(self.local_addr);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
        for writer in self.conn_writers.lock().unwrap().drain(..) {
            writer.shutdown();
        }
        let handles: Vec<_> = self.conn_threads.lock().unwrap().drain(..).collect();
        for handle in handles {
            let _ = handle.join();
        }
    }
}

impl Drop for Ric {
    fn drop(&mut self) {
        self.stop_inner();
    }
}

fn serve_connection(
    shared: Arc<Shared>,
    stream: TcpStream,
    writers: Arc<Mutex<Vec<FrameWriter>>>,
) -> io::Result<()> {
    let (mut reader, writer) = split(stream)?;
    writers.lock().unwrap().push(writer.clone());
    let Some(first) = reader.recv()? else {
        return Ok(());
    };
    match first.type_code {
        e2ap::TYPE_SETUP_REQUEST => serve_node(shared, reader, writer, first),
        north::TYPE_XAPP_REGISTER => serve_xapp(shared, reader, writer, first),
        other => {
            log::warn!("connection opened with unexpected type code {other}");
            Ok(())
        }
    }
}

fn serve_node(
    shared: Arc<Shared>,
    mut reader: crate::transport::FrameReader,
    writer: FrameWriter,
    first: RawFrame,
) -> io::Result<()> {
    let mut node_name: Option<String> = None;
    let mut frame = Some(first);
    loop {
        let raw = match frame.take() {
            Some(f) => f,
            None => match reader.recv() {
                Ok(Some(f)) => f,
                Ok(None) | Err(_) => break,
            },
        };
        let msg = match E2apMessage::decode_payload(raw.type_code, &raw.payload) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("undecodable e2ap frame from node: {e}");
                continue;
            }
        };
        match msg {
            E2apMessage::E2SetupRequest { node_id, functions } => {
                let (name, response) = {
                    let mut core = shared.core.lock().unwrap();
                    core.handle_setup(node_id, functions)
                };
                shared
                    .node_writers
                    .lock()
                    .unwrap()
                    .insert(name.clone(), writer.clone());
                node_name = Some(name);
                if let Ok(octets) = e2ap::frame(&response) {
                    let _ = writer.send(&octets);
                }
            }
            E2apMessage::RicIndication {
                request_id,
                sequence_number,
                header_octets,
                message_octets,
                ..
            } => {
                let Some(name) = node_name.as_deref() else {
                    continue;
                };
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.route_indication(
                        name,
                        request_id,
                        sequence_number,
                        header_octets,
                        message_octets,
                    )
                };
                shared.dispatch(out);
            }
            E2apMessage::RicSubscriptionResponse {
                request_id,
                admitted_action_ids,
                not_admitted,
            } => {
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.on_subscription_response(request_id, &admitted_action_ids, &not_admitted)
                };
                shared.dispatch(out);
            }
            E2apMessage::RicSubscriptionFailure { request_id, cause } => {
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.on_subscription_failure(request_id, cause)
                };
                shared.dispatch(out);
            }
            E2apMessage::RicSubscriptionDeleteResponse { request_id } => {
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.on_delete_response(request_id)
                };
                shared.dispatch(out);
            }
            E2apMessage::RicControlAcknowledge { request_id } => {
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.on_control_acknowledge(request_id)
                };
                shared.dispatch(out);
            }
            E2apMessage::ErrorIndication { cause } => {
                log::warn!("error indication from node: {cause}");
            }
            other => {
                let mut core = shared.core.lock().unwrap();
                core.counters.protocol_violations += 1;
                log::warn!(
                    "unexpected e2ap message from node: type {}",
                    other.type_code()
                );
            }
        }
    }
    if let Some(name) = node_name {
        shared.node_writers.lock().unwrap().remove(&name);
        let out = {
            let mut core = shared.core.lock().unwrap();
            core.handle_node_disconnect(&name)
        };
        shared.dispatch(out);
    }
    Ok(())
}

fn serve_xapp(
    shared: Arc<Shared>,
    mut reader: crate::transport::FrameReader,
    writer: FrameWriter,
    first: RawFrame,
) -> io::Result<()> {
    let NorthMessage::XAppRegister { xapp_id } =
        NorthMessage::decode_payload(first.type_code, &first.payload)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?
    else {
        return Ok(());
    };
    {
        let mut xapps = shared.xapp_writers.lock().unwrap();
        if xapps.contains_key(&xapp_id) {
            log::warn!("duplicate xapp id {xapp_id:?} rejected");
            writer.shutdown();
            return Ok(());
        }
        xapps.insert(xapp_id.clone(), writer.clone());
    }
    log::info!("xapp {xapp_id:?} registered");

    while let Ok(Some(raw)) = reader.recv() {
        let msg = match NorthMessage::decode_payload(raw.type_code, &raw.payload) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("undecodable north frame from {xapp_id:?}: {e}");
                continue;
            }
        };
        match msg {
            NorthMessage::InventoryRequest => {
                let json = {
                    let core = shared.core.lock().unwrap();
                    serde_json::to_vec(&core.inventory_snapshot()).expect("inventory serializes")
                };
                if let Ok(octets) = north::frame(&NorthMessage::InventoryResponse { json }) {
                    let _ = writer.send(&octets);
                }
            }
            NorthMessage::FunctionDefsRequest { node } => {
                let defs = {
                    let core = shared.core.lock().unwrap();
                    core.function_defs(&node)
                };
                if let Ok(octets) = north::frame(&NorthMessage::FunctionDefsResponse { defs }) {
                    let _ = writer.send(&octets);
                }
            }
            NorthMessage::SubscribeRequest {
                node,
                ran_function_id,
                event_trigger_octets,
                action_octets,
            } => {
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.handle_xapp_subscribe(
                        &xapp_id,
                        &node,
                        ran_function_id,
                        event_trigger_octets,
                        action_octets,
                    )
                };
                shared.dispatch(out);
            }
            NorthMessage::ControlForward {
                node,
                ran_function_id,
                header_octets,
                message_octets,
            } => {
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.handle_control_forward(
                        &xapp_id,
                        &node,
                        ran_function_id,
                        header_octets,
                        message_octets,
                    )
                };
                shared.dispatch(out);
            }
            NorthMessage::SubscriptionDeleteRequest { request_id } => {
                let out = {
                    let mut core = shared.core.lock().unwrap();
                    core.handle_xapp_delete(&xapp_id, request_id)
                };
                shared.dispatch(out);
            }
            other => {
                log::warn!(
                    "unexpected north message from {xapp_id:?}: type {}",
                    other.type_code()
                );
            }
        }
    }

    shared.xapp_writers.lock().unwrap().remove(&xapp_id);
    let out = {
        let mut core = shared.core.lock().unwrap();
        core.handle_xapp_disconnect(&xapp_id)
    };
    shared.dispatch(out);
    Ok(())
}
