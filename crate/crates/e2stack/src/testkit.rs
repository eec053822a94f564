//! Test support: seeded random instance generators for every schema type
//! and message kind, plus a scripted E2-node double for driving the RIC
//! from tests.
//!
//! Generators are deterministic for a given RNG state and keep instance
//! sizes moderate so large randomized suites stay fast.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::e2ap::{
    self, ActionItem, Cause, E2apMessage, FunctionItem, GlobalE2NodeId, RicRequestId,
};
use crate::kpm::{
    ActionDefinition, EventTriggerDefinition, IndicationHeader, IndicationMessage,
    KpmRanFunctionDefinition, MeasRecord, MeasValue, MeasurementName, ReportStyle, UeReport,
};
use crate::transport::{split, FrameReader, FrameWriter};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn random_name(rng: &mut StdRng, min: usize, max: usize) -> String {
    let len = rng.gen_range(min..=max);
    (0..len)
        .map(|_| char::from(rng.gen_range(b' '..=b'~')))
        .collect()
}

pub fn random_measurement_name(rng: &mut StdRng) -> MeasurementName {
    MeasurementName::new(random_name(rng, 1, 24)).unwrap()
}

fn random_unique_metrics(rng: &mut StdRng, min: usize, max: usize) -> Vec<MeasurementName> {
    let n = rng.gen_range(min..=max);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let candidate = format!("{}.{}", random_name(rng, 1, 8), out.len());
        if seen.insert(candidate.clone()) {
            out.push(MeasurementName::new(candidate).unwrap());
        }
    }
    out
}

pub fn random_event_trigger(rng: &mut StdRng) -> EventTriggerDefinition {
    EventTriggerDefinition {
        reporting_period_ms: rng.gen_range(1..=65536),
    }
}

pub fn random_action_definition(rng: &mut StdRng) -> ActionDefinition {
    ActionDefinition {
        style_id: rng.gen_range(0..=4),
        metrics: random_unique_metrics(rng, 1, 6),
        granularity_period_ms: rng.gen_range(1..=65536),
    }
}

pub fn random_function_definition(rng: &mut StdRng) -> KpmRanFunctionDefinition {
    let n_styles = rng.gen_range(1..=5usize);
    let mut ids: Vec<u8> = (0..=4).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    let mut ids: Vec<u8> = ids.into_iter().take(n_styles).collect();
    ids.sort_unstable();
    KpmRanFunctionDefinition {
        function_name: random_name(rng, 1, 32),
        styles: ids
            .into_iter()
            .map(|style_id| ReportStyle {
                style_id,
                metrics: random_unique_metrics(rng, 0, 5),
            })
            .collect(),
    }
}

pub fn random_meas_value(rng: &mut StdRng) -> MeasValue {
    match rng.gen_range(0..3) {
        0 => MeasValue::Int(rng.gen()),
        1 => MeasValue::Real(f64::from_bits(loop {
            let bits: u64 = rng.gen();
            if !f64::from_bits(bits).is_nan() {
                break bits;
            }
        })),
        _ => MeasValue::NoValue,
    }
}

pub fn random_record(rng: &mut StdRng) -> MeasRecord {
    let n = rng.gen_range(0..=6);
    MeasRecord {
        values: (0..n).map(|_| random_meas_value(rng)).collect(),
    }
}

fn random_records(rng: &mut StdRng) -> Vec<MeasRecord> {
    let n = rng.gen_range(1..=6);
    (0..n).map(|_| random_record(rng)).collect()
}

pub fn random_indication_header(rng: &mut StdRng) -> IndicationHeader {
    IndicationHeader {
        collection_start_time_ms: rng.gen(),
        sender: random_name(rng, 1, 40),
    }
}

pub fn random_indication_message(rng: &mut StdRng) -> IndicationMessage {
    if rng.gen_bool(0.5) {
        IndicationMessage::NodeLevel {
            records: random_records(rng),
        }
    } else {
        let n = rng.gen_range(0..=4);
        IndicationMessage::PerUe {
            ue_reports: (0..n)
                .map(|i| UeReport {
                    ue_id: format!("ue{i}_{}", random_name(rng, 1, 4)),
                    records: random_records(rng),
                })
                .collect(),
        }
    }
}

pub fn random_request_id(rng: &mut StdRng) -> RicRequestId {
    RicRequestId::new(rng.gen(), rng.gen())
}

pub fn random_cause(rng: &mut StdRng) -> Cause {
    match rng.gen_range(0..4) {
        0 => Cause::UnsupportedFunction,
        1 => Cause::UnknownMetric,
        2 => Cause::NodeOverload,
        _ => Cause::Unspecified,
    }
}

pub fn random_plmn(rng: &mut StdRng) -> [u8; 3] {
    let d = |rng: &mut StdRng| rng.gen_range(0..=9u8);
    let mnc3 = if rng.gen_bool(0.5) { 0xF } else { d(rng) };
    [
        d(rng) << 4 | d(rng),
        mnc3 << 4 | d(rng),
        d(rng) << 4 | d(rng),
    ]
}

fn random_octets(rng: &mut StdRng, max: usize) -> Vec<u8> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| rng.gen()).collect()
}

/// A random message of the E2AP kind selected by `kind` (0..=11).
pub fn random_e2ap_message(rng: &mut StdRng, kind: u8) -> E2apMessage {
    match kind {
        0 => E2apMessage::E2SetupRequest {
            node_id: GlobalE2NodeId::new(random_plmn(rng), rng.gen()).unwrap(),
            functions: (0..rng.gen_range(0..=4))
                .map(|_| FunctionItem {
                    ran_function_id: rng.gen_range(0..=4095),
                    definition_octets: random_octets(rng, 64),
                    revision: rng.gen(),
                })
                .collect(),
        },
        1 => E2apMessage::E2SetupResponse {
            accepted_ids: (0..rng.gen_range(0..=6))
                .map(|_| rng.gen_range(0..=4095))
                .collect(),
            rejected_ids: (0..rng.gen_range(0..=6))
                .map(|_| rng.gen_range(0..=4095))
                .collect(),
        },
        2 => E2apMessage::E2SetupFailure {
            cause: random_cause(rng),
        },
        3 => E2apMessage::RicSubscriptionRequest {
            request_id: random_request_id(rng),
            ran_function_id: rng.gen_range(0..=4095),
            event_trigger_octets: random_octets(rng, 16),
            actions: (0..rng.gen_range(1..=4))
                .map(|i| ActionItem {
                    action_id: i,
                    definition_octets: random_octets(rng, 64),
                })
                .collect(),
        },
        4 => E2apMessage::RicSubscriptionResponse {
            request_id: random_request_id(rng),
            admitted_action_ids: (0..rng.gen_range(0..=4)).map(|_| rng.gen()).collect(),
            not_admitted: (0..rng.gen_range(0..=4))
                .map(|_| (rng.gen(), random_cause(rng)))
                .collect(),
        },
        5 => E2apMessage::RicSubscriptionFailure {
            request_id: random_request_id(rng),
            cause: random_cause(rng),
        },
        6 => E2apMessage::RicIndication {
            request_id: random_request_id(rng),
            action_id: rng.gen(),
            sequence_number: rng.gen(),
            header_octets: random_octets(rng, 64),
            message_octets: random_octets(rng, 256),
        },
        7 => E2apMessage::RicSubscriptionDeleteRequest {
            request_id: random_request_id(rng),
        },
        8 => E2apMessage::RicSubscriptionDeleteResponse {
            request_id: random_request_id(rng),
        },
        9 => E2apMessage::RicControlRequest {
            request_id: random_request_id(rng),
            ran_function_id: rng.gen_range(0..=4095),
            header_octets: random_octets(rng, 64),
            message_octets: random_octets(rng, 256),
            ack_requested: rng.gen(),
        },
        10 => E2apMessage::RicControlAcknowledge {
            request_id: random_request_id(rng),
        },
        _ => E2apMessage::ErrorIndication {
            cause: random_cause(rng),
        },
    }
}

/// Scripted E2-node double: a raw TCP client that performs setup and then
/// sends/receives E2AP frames under test control.
pub struct ScriptedNode {
    pub reader: FrameReader,
    pub writer: FrameWriter,
    pub node_id: GlobalE2NodeId,
}

impl ScriptedNode {
    /// Connects to the RIC and completes E2 setup advertising one
    /// function.
    pub fn setup(
        ric_addr: &str,
        node_id: GlobalE2NodeId,
        ran_function_id: u16,
        definition_octets: Vec<u8>,
    ) -> std::io::Result<Self> {
        let stream = std::net::TcpStream::connect(ric_addr)?;
        let (mut reader, writer) = split(stream)?;
        let setup = E2apMessage::E2SetupRequest {
            node_id,
            functions: vec![FunctionItem {
                ran_function_id,
                definition_octets,
                revision: 1,
            }],
        };
        writer
            .send(&e2ap::frame(&setup).expect("setup frames"))
            .expect("setup send");
        let response = reader.recv()?.expect("setup response");
        let msg = E2apMessage::decode_payload(response.type_code, &response.payload)
            .expect("setup response decodes");
        assert!(
            matches!(msg, E2apMessage::E2SetupResponse { ref accepted_ids, .. } if accepted_ids.contains(&ran_function_id)),
            "function not accepted: {msg:?}"
        );
        Ok(Self {
            reader,
            writer,
            node_id,
        })
    }

    pub fn send(&self, msg: &E2apMessage) {
        self.writer
            .send(&e2ap::frame(msg).expect("frame encodes"))
            .expect("send");
    }

    /// Blocks for the next E2AP message from the RIC.
    pub fn recv(&mut self) -> Option<E2apMessage> {
        let frame = self.reader.recv().ok()??;
        E2apMessage::decode_payload(frame.type_code, &frame.payload).ok()
    }

    /// Waits for a subscription request and admits its first action.
    pub fn admit_next_subscription(&mut self) -> RicRequestId {
        loop {
            match self.recv().expect("connection open") {
                E2apMessage::RicSubscriptionRequest {
                    request_id,
                    actions,
                    ..
                } => {
                    self.send(&E2apMessage::RicSubscriptionResponse {
                        request_id,
                        admitted_action_ids: vec![actions[0].action_id],
                        not_admitted: vec![],
                    });
                    return request_id;
                }
                _ => continue,
            }
        }
    }

    pub fn send_indication(
        &self,
        request_id: RicRequestId,
        sn: u32,
        header_octets: Vec<u8>,
        message_octets: Vec<u8>,
    ) {
        self.send(&E2apMessage::RicIndication {
            request_id,
            action_id: 1,
            sequence_number: sn,
            header_octets,
            message_octets,
        });
    }
}
