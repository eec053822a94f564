//! E2AP message set, framing, and subscription state machine.
//!
//! Transport framing over a reliable ordered byte stream:
//! `len: u32 big-endian (payload length including the type byte)` +
//! `type: 1 octet` + `payload`. Payloads are encoded with the bit-level
//! primitives, fields in declaration order. Service-model payloads are
//! opaque octet strings at this layer.

use thiserror::Error;

use crate::percodec::{BitBuffer, CodecError};

/// Type codes of the E2AP message family.
pub const TYPE_SETUP_REQUEST: u8 = 1;
pub const TYPE_SETUP_RESPONSE: u8 = 2;
pub const TYPE_SETUP_FAILURE: u8 = 3;
pub const TYPE_SUBSCRIPTION_REQUEST: u8 = 4;
pub const TYPE_SUBSCRIPTION_RESPONSE: u8 = 5;
pub const TYPE_SUBSCRIPTION_FAILURE: u8 = 6;
pub const TYPE_INDICATION: u8 = 7;
pub const TYPE_SUBSCRIPTION_DELETE_REQUEST: u8 = 8;
pub const TYPE_SUBSCRIPTION_DELETE_RESPONSE: u8 = 9;
pub const TYPE_CONTROL_REQUEST: u8 = 10;
pub const TYPE_CONTROL_ACKNOWLEDGE: u8 = 11;
pub const TYPE_ERROR_INDICATION: u8 = 12;

/// Maximum framed payload (type byte included): 2^24 octets.
pub const MAX_FRAME_PAYLOAD: usize = 1 << 24;
/// Bound for opaque octet-string fields (24-bit length field).
pub const MAX_OCTETS: usize = (1 << 24) - 1;
pub const MAX_FUNCTIONS_PER_SETUP: usize = 64;
pub const MAX_ACTIONS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum E2apError {
    #[error("unknown message type code {0}")]
    UnknownType(u8),
    #[error("frame truncated: declared {declared} octets, {available} available")]
    FrameTruncated { declared: usize, available: usize },
    #[error("frame payload of {0} octets exceeds {MAX_FRAME_PAYLOAD}")]
    Oversize(usize),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Global E2 node identity: 3GPP PLMN digit packing plus a 32-bit gNB id.
///
/// Nibble layout: `octet0 = mcc2<<4 | mcc1`, `octet1 = mnc3-or-F<<4 | mcc3`,
/// `octet2 = mnc2<<4 | mnc1`. Every nibble is a BCD digit; only the
/// MNC-digit-3 position may hold the 0xF filler (2-digit MNC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GlobalE2NodeId {
    pub plmn: [u8; 3],
    pub gnb_id: u32,
}

impl GlobalE2NodeId {
    pub fn new(plmn: [u8; 3], gnb_id: u32) -> Result<Self, E2apError> {
        let id = Self { plmn, gnb_id };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<(), E2apError> {
        let nibbles = self.nibbles();
        for (i, &n) in nibbles.iter().enumerate() {
            let is_mnc3 = i == 2;
            if n > 9 && !(is_mnc3 && n == 0xF) {
                return Err(CodecError::Invalid {
                    field: "plmn",
                    reason: format!("nibble {i} is {n:#X}, not a BCD digit"),
                }
                .into());
            }
        }
        Ok(())
    }

    /// Nibbles in order: mcc1 mcc2 mnc3 mcc3 mnc1 mnc2.
    fn nibbles(&self) -> [u8; 6] {
        [
            self.plmn[0] & 0x0F,
            self.plmn[0] >> 4,
            self.plmn[1] >> 4,
            self.plmn[1] & 0x0F,
            self.plmn[2] & 0x0F,
            self.plmn[2] >> 4,
        ]
    }

    /// MCC as three decimal digits.
    pub fn mcc(&self) -> String {
        let n = self.nibbles();
        format!("{}{}{}", n[0], n[1], n[3])
    }

    /// MNC as two or three decimal digits (filler in the digit-3 nibble
    /// means two).
    pub fn mnc(&self) -> String {
        let n = self.nibbles();
        if n[2] == 0xF {
            format!("{}{}", n[4], n[5])
        } else {
            format!("{}{}{}", n[4], n[5], n[2])
        }
    }

    /// RIC-side inventory name:
    /// `gnb_<MCC>_<MNC zero-padded to 3>_<gnb_id as 8 lowercase hex digits>`.
    pub fn inventory_name(&self) -> String {
        format!("gnb_{}_{:0>3}_{:08x}", self.mcc(), self.mnc(), self.gnb_id)
    }

    /// PLMN as six uppercase hex characters, filler included.
    pub fn plmn_hex(&self) -> String {
        crate::percodec::to_hex(&self.plmn)
    }

    /// gNB id as a 32-character bit string.
    pub fn nb_id_bits(&self) -> String {
        format!("{:032b}", self.gnb_id)
    }

    pub fn plmn_from_hex(hex: &str) -> Result<[u8; 3], E2apError> {
        let octets = crate::percodec::from_hex(hex)?;
        octets.as_slice().try_into().map_err(|_| {
            CodecError::Invalid {
                field: "plmn",
                reason: format!("expected 3 octets, got {}", octets.len()),
            }
            .into()
        })
    }
}

/// Correlation id for a subscription or control transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RicRequestId {
    pub requestor_id: u16,
    pub instance_id: u16,
}

impl RicRequestId {
    pub fn new(requestor_id: u16, instance_id: u16) -> Self {
        Self {
            requestor_id,
            instance_id,
        }
    }
}

impl std::fmt::Display for RicRequestId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.requestor_id, self.instance_id)
    }
}

/// Failure causes carried in E2AP responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    UnsupportedFunction,
    UnknownMetric,
    NodeOverload,
    Unspecified,
}

impl Cause {
    fn index(self) -> u64 {
        match self {
            Cause::UnsupportedFunction => 0,
            Cause::UnknownMetric => 1,
            Cause::NodeOverload => 2,
            Cause::Unspecified => 3,
        }
    }

    fn from_index(i: u64) -> Result<Self, CodecError> {
        match i {
            0 => Ok(Cause::UnsupportedFunction),
            1 => Ok(Cause::UnknownMetric),
            2 => Ok(Cause::NodeOverload),
            3 => Ok(Cause::Unspecified),
            _ => Err(CodecError::BadChoice {
                field: "cause",
                index: i,
                alternatives: 4,
            }),
        }
    }
}

impl std::fmt::Display for Cause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Cause::UnsupportedFunction => "unsupported-function",
            Cause::UnknownMetric => "unknown-metric",
            Cause::NodeOverload => "node-overload",
            Cause::Unspecified => "unspecified",
        };
        f.write_str(s)
    }
}

/// A RAN function advertised at E2 setup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionItem {
    pub ran_function_id: u16,
    pub definition_octets: Vec<u8>,
    pub revision: u8,
}

/// One requested action within a subscription.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionItem {
    pub action_id: u8,
    pub definition_octets: Vec<u8>,
}

/// The E2AP message set. Service-model payloads stay opaque here.
#[derive(Debug, Clone, PartialEq)]
pub enum E2apMessage {
    E2SetupRequest {
        node_id: GlobalE2NodeId,
        functions: Vec<FunctionItem>,
    },
    E2SetupResponse {
        accepted_ids: Vec<u16>,
        rejected_ids: Vec<u16>,
    },
    E2SetupFailure {
        cause: Cause,
    },
    RicSubscriptionRequest {
        request_id: RicRequestId,
        ran_function_id: u16,
        event_trigger_octets: Vec<u8>,
        actions: Vec<ActionItem>,
    },
    RicSubscriptionResponse {
        request_id: RicRequestId,
        admitted_action_ids: Vec<u8>,
        not_admitted: Vec<(u8, Cause)>,
    },
    RicSubscriptionFailure {
        request_id: RicRequestId,
        cause: Cause,
    },
    RicIndication {
        request_id: RicRequestId,
        action_id: u8,
        sequence_number: u32,
        header_octets: Vec<u8>,
        message_octets: Vec<u8>,
    },
    RicSubscriptionDeleteRequest {
        request_id: RicRequestId,
    },
    RicSubscriptionDeleteResponse {
        request_id: RicRequestId,
    },
    RicControlRequest {
        request_id: RicRequestId,
        ran_function_id: u16,
        header_octets: Vec<u8>,
        message_octets: Vec<u8>,
        ack_requested: bool,
    },
    RicControlAcknowledge {
        request_id: RicRequestId,
    },
    ErrorIndication {
        cause: Cause,
    },
}

fn append_request_id(buf: &mut BitBuffer, id: RicRequestId) -> Result<(), CodecError> {
    buf.append_constrained_uint("requestor_id", id.requestor_id as u64, 0, 0xFFFF)?;
    buf.append_constrained_uint("instance_id", id.instance_id as u64, 0, 0xFFFF)
}

fn read_request_id(buf: &mut BitBuffer) -> Result<RicRequestId, CodecError> {
    Ok(RicRequestId {
        requestor_id: buf.read_constrained_uint("requestor_id", 0, 0xFFFF)? as u16,
        instance_id: buf.read_constrained_uint("instance_id", 0, 0xFFFF)? as u16,
    })
}

fn append_function_id(buf: &mut BitBuffer, id: u16) -> Result<(), CodecError> {
    buf.append_constrained_uint("ran_function_id", id as u64, 0, 4095)
}

fn read_function_id(buf: &mut BitBuffer) -> Result<u16, CodecError> {
    Ok(buf.read_constrained_uint("ran_function_id", 0, 4095)? as u16)
}

fn append_octets(
    buf: &mut BitBuffer,
    field: &'static str,
    octets: &[u8],
) -> Result<(), CodecError> {
    buf.append_octet_string(field, octets, 0, MAX_OCTETS)
}

fn read_octets(buf: &mut BitBuffer, field: &'static str) -> Result<Vec<u8>, CodecError> {
    buf.read_octet_string(field, 0, MAX_OCTETS)
}

fn append_cause(buf: &mut BitBuffer, cause: Cause) -> Result<(), CodecError> {
    buf.append_constrained_uint("cause", cause.index(), 0, 3)
}

fn read_cause(buf: &mut BitBuffer) -> Result<Cause, CodecError> {
    Cause::from_index(buf.read_constrained_uint("cause", 0, 3)?)
}

fn append_id_list(buf: &mut BitBuffer, field: &'static str, ids: &[u16]) -> Result<(), CodecError> {
    if ids.len() > MAX_FUNCTIONS_PER_SETUP {
        return Err(CodecError::LengthOutOfBounds {
            field,
            len: ids.len(),
            min: 0,
            max: MAX_FUNCTIONS_PER_SETUP,
        });
    }
    buf.append_constrained_uint(field, ids.len() as u64, 0, MAX_FUNCTIONS_PER_SETUP as u64)?;
    for &id in ids {
        append_function_id(buf, id)?;
    }
    Ok(())
}

fn read_id_list(buf: &mut BitBuffer, field: &'static str) -> Result<Vec<u16>, CodecError> {
    let n = buf.read_constrained_uint(field, 0, MAX_FUNCTIONS_PER_SETUP as u64)?;
    (0..n).map(|_| read_function_id(buf)).collect()
}

impl E2apMessage {
    pub fn type_code(&self) -> u8 {
        match self {
            E2apMessage::E2SetupRequest { .. } => TYPE_SETUP_REQUEST,
            E2apMessage::E2SetupResponse { .. } => TYPE_SETUP_RESPONSE,
            E2apMessage::E2SetupFailure { .. } => TYPE_SETUP_FAILURE,
            E2apMessage::RicSubscriptionRequest { .. } => TYPE_SUBSCRIPTION_REQUEST,
            E2apMessage::RicSubscriptionResponse { .. } => TYPE_SUBSCRIPTION_RESPONSE,
            E2apMessage::RicSubscriptionFailure { .. } => TYPE_SUBSCRIPTION_FAILURE,
            E2apMessage::RicIndication { .. } => TYPE_INDICATION,
            E2apMessage::RicSubscriptionDeleteRequest { .. } => TYPE_SUBSCRIPTION_DELETE_REQUEST,
            E2apMessage::RicSubscriptionDeleteResponse { .. } => TYPE_SUBSCRIPTION_DELETE_RESPONSE,
            E2apMessage::RicControlRequest { .. } => TYPE_CONTROL_REQUEST,
            E2apMessage::RicControlAcknowledge { .. } => TYPE_CONTROL_ACKNOWLEDGE,
            E2apMessage::ErrorIndication { .. } => TYPE_ERROR_INDICATION,
        }
    }

    pub fn encode_payload(&self) -> Result<Vec<u8>, E2apError> {
        let mut buf = BitBuffer::new();
        match self {
            E2apMessage::E2SetupRequest { node_id, functions } => {
                node_id.validate()?;
                for &b in &node_id.plmn {
                    buf.append_bits(b as u64, 8);
                }
                buf.append_constrained_uint("gnb_id", node_id.gnb_id as u64, 0, u32::MAX as u64)?;
                if functions.len() > MAX_FUNCTIONS_PER_SETUP {
                    return Err(CodecError::LengthOutOfBounds {
                        field: "functions",
                        len: functions.len(),
                        min: 0,
                        max: MAX_FUNCTIONS_PER_SETUP,
                    }
                    .into());
                }
                buf.append_constrained_uint(
                    "functions",
                    functions.len() as u64,
                    0,
                    MAX_FUNCTIONS_PER_SETUP as u64,
                )?;
                for f in functions {
                    append_function_id(&mut buf, f.ran_function_id)?;
                    append_octets(&mut buf, "definition_octets", &f.definition_octets)?;
                    buf.append_constrained_uint("revision", f.revision as u64, 0, 255)?;
                }
            }
            E2apMessage::E2SetupResponse {
                accepted_ids,
                rejected_ids,
            } => {
                append_id_list(&mut buf, "accepted_ids", accepted_ids)?;
                append_id_list(&mut buf, "rejected_ids", rejected_ids)?;
            }
            E2apMessage::E2SetupFailure { cause } => append_cause(&mut buf, *cause)?,
            E2apMessage::RicSubscriptionRequest {
                request_id,
                ran_function_id,
                event_trigger_octets,
                actions,
            } => {
                append_request_id(&mut buf, *request_id)?;
                append_function_id(&mut buf, *ran_function_id)?;
                append_octets(&mut buf, "event_trigger_octets", event_trigger_octets)?;
                if actions.is_empty() || actions.len() > MAX_ACTIONS {
                    return Err(CodecError::LengthOutOfBounds {
                        field: "actions",
                        len: actions.len(),
                        min: 1,
                        max: MAX_ACTIONS,
                    }
                    .into());
                }
                buf.append_constrained_uint(
                    "actions",
                    actions.len() as u64,
                    1,
                    MAX_ACTIONS as u64,
                )?;
                for a in actions {
                    buf.append_constrained_uint("action_id", a.action_id as u64, 0, 255)?;
                    append_octets(&mut buf, "action_definition_octets", &a.definition_octets)?;
                }
            }
            E2apMessage::RicSubscriptionResponse {
                request_id,
                admitted_action_ids,
                not_admitted,
            } => {
                append_request_id(&mut buf, *request_id)?;
                if admitted_action_ids.len() > MAX_ACTIONS {
                    return Err(CodecError::LengthOutOfBounds {
                        field: "admitted_action_ids",
                        len: admitted_action_ids.len(),
                        min: 0,
                        max: MAX_ACTIONS,
                    }
                    .into());
                }
                buf.append_constrained_uint(
                    "admitted_action_ids",
                    admitted_action_ids.len() as u64,
                    0,
                    MAX_ACTIONS as u64,
                )?;
                for &id in admitted_action_ids {
                    buf.append_constrained_uint("action_id", id as u64, 0, 255)?;
                }
                if not_admitted.len() > MAX_ACTIONS {
                    return Err(CodecError::LengthOutOfBounds {
                        field: "not_admitted",
                        len: not_admitted.len(),
                        min: 0,
                        max: MAX_ACTIONS,
                    }
                    .into());
                }
                buf.append_constrained_uint(
                    "not_admitted",
                    not_admitted.len() as u64,
                    0,
                    MAX_ACTIONS as u64,
                )?;
                for (id, cause) in not_admitted {
                    buf.append_constrained_uint("action_id", *id as u64, 0, 255)?;
                    append_cause(&mut buf, *cause)?;
                }
            }
            E2apMessage::RicSubscriptionFailure { request_id, cause } => {
                append_request_id(&mut buf, *request_id)?;
                append_cause(&mut buf, *cause)?;
            }
            E2apMessage::RicIndication {
                request_id,
                action_id,
                sequence_number,
                header_octets,
                message_octets,
            } => {
                append_request_id(&mut buf, *request_id)?;
                buf.append_constrained_uint("action_id", *action_id as u64, 0, 255)?;
                buf.append_constrained_uint(
                    "sequence_number",
                    *sequence_number as u64,
                    0,
                    u32::MAX as u64,
                )?;
                append_octets(&mut buf, "header_octets", header_octets)?;
                append_octets(&mut buf, "message_octets", message_octets)?;
            }
            E2apMessage::RicSubscriptionDeleteRequest { request_id }
            | E2apMessage::RicSubscriptionDeleteResponse { request_id }
            | E2apMessage::RicControlAcknowledge { request_id } => {
                append_request_id(&mut buf, *request_id)?;
            }
            E2apMessage::RicControlRequest {
                request_id,
                ran_function_id,
                header_octets,
                message_octets,
                ack_requested,
            } => {
                append_request_id(&mut buf, *request_id)?;
                append_function_id(&mut buf, *ran_function_id)?;
                append_octets(&mut buf, "header_octets", header_octets)?;
                append_octets(&mut buf, "message_octets", message_octets)?;
                buf.append_bool(*ack_requested);
            }
            E2apMessage::ErrorIndication { cause } => append_cause(&mut buf, *cause)?,
        }
        Ok(buf.finalize())
    }

    pub fn decode_payload(type_code: u8, payload: &[u8]) -> Result<Self, E2apError> {
        let mut buf = BitBuffer::from_octets(payload);
        let msg = match type_code {
            TYPE_SETUP_REQUEST => {
                let mut plmn = [0u8; 3];
                for b in &mut plmn {
                    *b = buf.read_bits("plmn", 8)? as u8;
                }
                let gnb_id = buf.read_constrained_uint("gnb_id", 0, u32::MAX as u64)? as u32;
                let node_id = GlobalE2NodeId::new(plmn, gnb_id)?;
                let n =
                    buf.read_constrained_uint("functions", 0, MAX_FUNCTIONS_PER_SETUP as u64)?;
                let mut functions = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    functions.push(FunctionItem {
                        ran_function_id: read_function_id(&mut buf)?,
                        definition_octets: read_octets(&mut buf, "definition_octets")?,
                        revision: buf.read_constrained_uint("revision", 0, 255)? as u8,
                    });
                }
                E2apMessage::E2SetupRequest { node_id, functions }
            }
            TYPE_SETUP_RESPONSE => E2apMessage::E2SetupResponse {
                accepted_ids: read_id_list(&mut buf, "accepted_ids")?,
                rejected_ids: read_id_list(&mut buf, "rejected_ids")?,
            },
            TYPE_SETUP_FAILURE => E2apMessage::E2SetupFailure {
                cause: read_cause(&mut buf)?,
            },
            TYPE_SUBSCRIPTION_REQUEST => {
                let request_id = read_request_id(&mut buf)?;
                let ran_function_id = read_function_id(&mut buf)?;
                let event_trigger_octets = read_octets(&mut buf, "event_trigger_octets")?;
                let n = buf.read_constrained_uint("actions", 1, MAX_ACTIONS as u64)?;
                let mut actions = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    actions.push(ActionItem {
                        action_id: buf.read_constrained_uint("action_id", 0, 255)? as u8,
                        definition_octets: read_octets(&mut buf, "action_definition_octets")?,
                    });
                }
                E2apMessage::RicSubscriptionRequest {
                    request_id,
                    ran_function_id,
                    event_trigger_octets,
                    actions,
                }
            }
            TYPE_SUBSCRIPTION_RESPONSE => {
                let request_id = read_request_id(&mut buf)?;
                let n = buf.read_constrained_uint("admitted_action_ids", 0, MAX_ACTIONS as u64)?;
                let mut admitted_action_ids = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    admitted_action_ids.push(buf.read_constrained_uint("action_id", 0, 255)? as u8);
                }
                let n = buf.read_constrained_uint("not_admitted", 0, MAX_ACTIONS as u64)?;
                let mut not_admitted = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    let id = buf.read_constrained_uint("action_id", 0, 255)? as u8;
                    not_admitted.push((id, read_cause(&mut buf)?));
                }
                E2apMessage::RicSubscriptionResponse {
                    request_id,
                    admitted_action_ids,
                    not_admitted,
                }
            }
            TYPE_SUBSCRIPTION_FAILURE => E2apMessage::RicSubscriptionFailure {
                request_id: read_request_id(&mut buf)?,
                cause: read_cause(&mut buf)?,
            },
            TYPE_INDICATION => E2apMessage::RicIndication {
                request_id: read_request_id(&mut buf)?,
                action_id: buf.read_constrained_uint("action_id", 0, 255)? as u8,
                sequence_number: buf.read_constrained_uint("sequence_number", 0, u32::MAX as u64)?
                    as u32,
                header_octets: read_octets(&mut buf, "header_octets")?,
                message_octets: read_octets(&mut buf, "message_octets")?,
            },
            TYPE_SUBSCRIPTION_DELETE_REQUEST => E2apMessage::RicSubscriptionDeleteRequest {
                request_id: read_request_id(&mut buf)?,
            },
            TYPE_SUBSCRIPTION_DELETE_RESPONSE => E2apMessage::RicSubscriptionDeleteResponse {
                request_id: read_request_id(&mut buf)?,
            },
            TYPE_CONTROL_REQUEST => E2apMessage::RicControlRequest {
                request_id: read_request_id(&mut buf)?,
                ran_function_id: read_function_id(&mut buf)?,
                header_octets: read_octets(&mut buf, "header_octets")?,
                message_octets: read_octets(&mut buf, "message_octets")?,
                ack_requested: buf.read_bool("ack_requested")?,
            },
            TYPE_CONTROL_ACKNOWLEDGE => E2apMessage::RicControlAcknowledge {
                request_id: read_request_id(&mut buf)?,
            },
            TYPE_ERROR_INDICATION => E2apMessage::ErrorIndication {
                cause: read_cause(&mut buf)?,
            },
            other => return Err(E2apError::UnknownType(other)),
        };
        buf.finish()?;
        Ok(msg)
    }
}

/// Wraps a type byte and payload into the length-prefixed frame.
pub fn wrap_frame(type_code: u8, payload: &[u8]) -> Result<Vec<u8>, E2apError> {
    let len = payload.len() + 1;
    if len > MAX_FRAME_PAYLOAD {
        return Err(E2apError::Oversize(len));
    }
    let mut out = Vec::with_capacity(4 + len);
    out.extend_from_slice(&(len as u32).to_be_bytes());
    out.push(type_code);
    out.extend_from_slice(payload);
    Ok(out)
}

/// Splits one frame off the front of `octets`: returns the type byte, the
/// payload slice, and the total octets consumed. Trailing bytes beyond the
/// declared length are untouched.
pub fn unwrap_frame(octets: &[u8]) -> Result<(u8, &[u8], usize), E2apError> {
    if octets.len() < 4 {
        return Err(E2apError::FrameTruncated {
            declared: 4,
            available: octets.len(),
        });
    }
    let len = u32::from_be_bytes(octets[..4].try_into().unwrap()) as usize;
    if len == 0 {
        return Err(E2apError::FrameTruncated {
            declared: 1,
            available: 0,
        });
    }
    if len > MAX_FRAME_PAYLOAD {
        return Err(E2apError::Oversize(len));
    }
    if octets.len() < 4 + len {
        return Err(E2apError::FrameTruncated {
            declared: 4 + len,
            available: octets.len(),
        });
    }
    Ok((octets[4], &octets[5..4 + len], 4 + len))
}

/// Frames a message for the wire.
pub fn frame(msg: &E2apMessage) -> Result<Vec<u8>, E2apError> {
    wrap_frame(msg.type_code(), &msg.encode_payload()?)
}

/// Inverse of [`frame`]; returns the message and the octets consumed.
pub fn parse(octets: &[u8]) -> Result<(E2apMessage, usize), E2apError> {
    let (type_code, payload, consumed) = unwrap_frame(octets)?;
    Ok((E2apMessage::decode_payload(type_code, payload)?, consumed))
}

/// Per-subscription lifecycle state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubscriptionState {
    Idle,
    Pending,
    Active,
    Deleting,
    Closed,
}

/// Events driving the subscription state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubEvent {
    SendSubReq,
    /// Subscription response; `admitted` is true when the admitted action
    /// set is non-empty.
    RecvSubResp {
        admitted: bool,
    },
    RecvSubFail,
    RecvIndication {
        sn: u32,
    },
    SendDelReq,
    RecvDelResp,
    PeerDisconnect,
}

/// Actions emitted by a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubAction {
    /// Emit a frame of the given E2AP type code.
    EmitFrame(u8),
    /// Deliver the indication to the subscriber. `while_deleting` marks
    /// deliveries that race a pending delete.
    Deliver { sn: u32, while_deleting: bool },
    /// The (state, event) pair is not in the table; state is unchanged.
    ProtocolViolation,
}

/// Pure transition function for the subscription lifecycle.
///
/// Indications are deliverable in `Active` and, flagged, in `Deleting`
/// (a report can legitimately race the delete exchange). `Closed`
/// absorbs everything. Any pair outside the table yields a
/// protocol-violation action with the state unchanged.
pub fn subscription_transition(
    state: SubscriptionState,
    event: SubEvent,
) -> (SubscriptionState, Vec<SubAction>) {
    use SubscriptionState::*;
    match (state, event) {
        (_, SubEvent::PeerDisconnect) => (Closed, vec![]),
        (Idle, SubEvent::SendSubReq) => (
            Pending,
            vec![SubAction::EmitFrame(TYPE_SUBSCRIPTION_REQUEST)],
        ),
        (Pending, SubEvent::RecvSubResp { admitted: true }) => (Active, vec![]),
        (Pending, SubEvent::RecvSubResp { admitted: false }) | (Pending, SubEvent::RecvSubFail) => {
            (Closed, vec![])
        }
        (Active, SubEvent::RecvIndication { sn }) => (
            Active,
            vec![SubAction::Deliver {
                sn,
                while_deleting: false,
            }],
        ),
        (Active, SubEvent::SendDelReq) => (
            Deleting,
            vec![SubAction::EmitFrame(TYPE_SUBSCRIPTION_DELETE_REQUEST)],
        ),
        (Deleting, SubEvent::RecvIndication { sn }) => (
            Deleting,
            vec![SubAction::Deliver {
                sn,
                while_deleting: true,
            }],
        ),
        (Deleting, SubEvent::RecvDelResp) => (Closed, vec![]),
        (s, _) => (s, vec![SubAction::ProtocolViolation]),
    }
}

/// Sequence-number check outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnVerdict {
    Ok,
    Gap,
    Duplicate,
}

impl std::fmt::Display for SnVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SnVerdict::Ok => "ok",
            SnVerdict::Gap => "gap",
            SnVerdict::Duplicate => "duplicate",
        })
    }
}

/// Tracks the last accepted sequence number of a subscription. The first
/// expected sn is 0; `last` advances only on `Ok`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SnValidator {
    last: Option<u32>,
}

impl SnValidator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, sn: u32) -> SnVerdict {
        let expected = match self.last {
            None => 0,
            Some(last) => last.wrapping_add(1),
        };
        if sn == expected {
            self.last = Some(sn);
            SnVerdict::Ok
        } else if self.last.is_some_and(|last| sn <= last) {
            SnVerdict::Duplicate
        } else {
            SnVerdict::Gap
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percodec::to_hex;

    #[test]
    fn inventory_name_listing1_anchor() {
        let id = GlobalE2NodeId::new(GlobalE2NodeId::plmn_from_hex("00F110").unwrap(), 0x00000E05)
            .unwrap();
        assert_eq!(id.mcc(), "001");
        assert_eq!(id.mnc(), "01");
        assert_eq!(id.inventory_name(), "gnb_001_001_00000e05");
        assert_eq!(id.plmn_hex(), "00F110");
        assert_eq!(id.nb_id_bits(), "00000000000000000000111000000101");
    }

    #[test]
    fn three_digit_mnc_without_filler() {
        // MCC 310, MNC 410: octets are 13 04 01
        let id = GlobalE2NodeId::new([0x13, 0x00, 0x14], 1).unwrap();
        assert_eq!(id.mcc(), "310");
        assert_eq!(id.mnc(), "410");
        assert_eq!(id.inventory_name(), "gnb_310_410_00000001");
    }

    #[test]
    fn filler_outside_mnc3_rejected() {
        assert!(GlobalE2NodeId::new([0xF0, 0x01, 0x10], 1).is_err());
        assert!(GlobalE2NodeId::new([0x00, 0x1F, 0x10], 1).is_err());
        assert!(GlobalE2NodeId::new([0x00, 0xF1, 0x10], 1).is_ok());
    }

    #[test]
    fn delete_response_frame_anchor() {
        let msg = E2apMessage::RicSubscriptionDeleteResponse {
            request_id: RicRequestId::new(1, 1),
        };
        let octets = frame(&msg).unwrap();
        assert_eq!(to_hex(&octets), "000000050900010001");
        let (back, consumed) = parse(&octets).unwrap();
        assert_eq!(back, msg);
        assert_eq!(consumed, 9);
    }

    #[test]
    fn unknown_type_code_is_protocol_error() {
        let octets = wrap_frame(99, &[0x00]).unwrap();
        assert!(matches!(parse(&octets), Err(E2apError::UnknownType(99))));
    }

    #[test]
    fn truncated_frame_reports_lengths() {
        let msg = E2apMessage::ErrorIndication {
            cause: Cause::Unspecified,
        };
        let mut octets = frame(&msg).unwrap();
        octets.pop();
        assert!(matches!(
            parse(&octets),
            Err(E2apError::FrameTruncated { .. })
        ));
    }

    #[test]
    fn trailing_bytes_untouched() {
        let msg = E2apMessage::RicSubscriptionDeleteRequest {
            request_id: RicRequestId::new(2, 3),
        };
        let mut octets = frame(&msg).unwrap();
        let frame_len = octets.len();
        octets.extend_from_slice(&[0xAA, 0xBB]);
        let (back, consumed) = parse(&octets).unwrap();
        assert_eq!(back, msg);
        assert_eq!(consumed, frame_len);
        assert_eq!(&octets[consumed..], &[0xAA, 0xBB]);
    }

    #[test]
    fn oversize_payload_is_frame_error() {
        let msg = E2apMessage::RicIndication {
            request_id: RicRequestId::new(1, 1),
            action_id: 1,
            sequence_number: 0,
            header_octets: vec![0; MAX_OCTETS],
            message_octets: vec![0; MAX_OCTETS],
        };
        assert!(matches!(frame(&msg), Err(E2apError::Oversize(_))));
    }

    #[test]
    fn setup_request_round_trip() {
        let msg = E2apMessage::E2SetupRequest {
            node_id: GlobalE2NodeId::new(GlobalE2NodeId::plmn_from_hex("00F110").unwrap(), 0xE05)
                .unwrap(),
            functions: vec![FunctionItem {
                ran_function_id: 147,
                definition_octets: vec![1, 2, 3],
                revision: 1,
            }],
        };
        let octets = frame(&msg).unwrap();
        assert_eq!(parse(&octets).unwrap().0, msg);
    }

    #[test]
    fn fsm_table_rows() {
        use SubscriptionState::*;
        let (s, a) = subscription_transition(Idle, SubEvent::SendSubReq);
        assert_eq!(s, Pending);
        assert_eq!(a, vec![SubAction::EmitFrame(TYPE_SUBSCRIPTION_REQUEST)]);

        let (s, _) = subscription_transition(Pending, SubEvent::RecvSubResp { admitted: true });
        assert_eq!(s, Active);
        let (s, _) = subscription_transition(Pending, SubEvent::RecvSubResp { admitted: false });
        assert_eq!(s, Closed);
        let (s, _) = subscription_transition(Pending, SubEvent::RecvSubFail);
        assert_eq!(s, Closed);

        let (s, a) = subscription_transition(Active, SubEvent::RecvIndication { sn: 4 });
        assert_eq!(s, Active);
        assert_eq!(
            a,
            vec![SubAction::Deliver {
                sn: 4,
                while_deleting: false
            }]
        );

        let (s, a) = subscription_transition(Active, SubEvent::SendDelReq);
        assert_eq!(s, Deleting);
        assert_eq!(
            a,
            vec![SubAction::EmitFrame(TYPE_SUBSCRIPTION_DELETE_REQUEST)]
        );

        let (s, a) = subscription_transition(Deleting, SubEvent::RecvIndication { sn: 9 });
        assert_eq!(s, Deleting);
        assert_eq!(
            a,
            vec![SubAction::Deliver {
                sn: 9,
                while_deleting: true
            }]
        );

        let (s, _) = subscription_transition(Deleting, SubEvent::RecvDelResp);
        assert_eq!(s, Closed);

        for st in [Idle, Pending, Active, Deleting, Closed] {
            let (s, _) = subscription_transition(st, SubEvent::PeerDisconnect);
            assert_eq!(s, Closed);
        }

        // off-table pairs are violations with the state unchanged
        let (s, a) = subscription_transition(Closed, SubEvent::RecvIndication { sn: 0 });
        assert_eq!(s, Closed);
        assert_eq!(a, vec![SubAction::ProtocolViolation]);
        let (s, a) = subscription_transition(Idle, SubEvent::RecvDelResp);
        assert_eq!(s, Idle);
        assert_eq!(a, vec![SubAction::ProtocolViolation]);
    }

    #[test]
    fn sn_validator_rules() {
        let mut v = SnValidator::new();
        assert_eq!(v.check(0), SnVerdict::Ok);
        assert_eq!(v.check(1), SnVerdict::Ok);
        assert_eq!(v.check(2), SnVerdict::Ok);
        assert_eq!(v.check(3), SnVerdict::Ok);
        assert_eq!(v.check(4), SnVerdict::Ok);
        assert_eq!(v.check(4), SnVerdict::Duplicate);
        assert_eq!(v.check(6), SnVerdict::Gap);
        // last advanced only on ok, so 5 is still the next expected sn
        assert_eq!(v.check(5), SnVerdict::Ok);
        // a fresh subscription expects 0 first
        let mut v = SnValidator::new();
        assert_eq!(v.check(3), SnVerdict::Gap);
        assert_eq!(v.check(0), SnVerdict::Ok);
    }
}
