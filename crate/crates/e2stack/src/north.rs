//! xApp-facing message family, carried over the same length-prefixed
//! framing as E2AP with type codes 100 and up.
//!
//! Request/response pairs: 101->102 inventory, 103->104 function
//! definitions, 105->106 subscribe, 108->109 control, 110->111
//! subscription delete. 107 forwards indications, 112 notifies the owner
//! that a subscription closed (node disconnect or delete completion).
//! Payload 102 is a UTF-8 JSON array of inventory records; everything
//! else uses the bit-level primitives, fields in declaration order.

use crate::e2ap::{unwrap_frame, wrap_frame, E2apError, RicRequestId, MAX_OCTETS};
use crate::percodec::{BitBuffer, CodecError};

pub const TYPE_XAPP_REGISTER: u8 = 100;
pub const TYPE_INVENTORY_REQUEST: u8 = 101;
pub const TYPE_INVENTORY_RESPONSE: u8 = 102;
pub const TYPE_FUNCTION_DEFS_REQUEST: u8 = 103;
pub const TYPE_FUNCTION_DEFS_RESPONSE: u8 = 104;
pub const TYPE_SUBSCRIBE_REQUEST: u8 = 105;
pub const TYPE_SUBSCRIBE_RESPONSE: u8 = 106;
pub const TYPE_INDICATION_FORWARD: u8 = 107;
pub const TYPE_CONTROL_FORWARD: u8 = 108;
pub const TYPE_CONTROL_RESULT: u8 = 109;
pub const TYPE_SUBSCRIPTION_DELETE_REQUEST: u8 = 110;
pub const TYPE_SUBSCRIPTION_DELETE_RESPONSE: u8 = 111;
pub const TYPE_SUBSCRIPTION_CLOSED: u8 = 112;

pub const MAX_ID_LEN: usize = 150;
pub const MAX_VERSION_LEN: usize = 32;
pub const MAX_FUNCTION_DEFS: usize = 64;

/// Outcome causes surfaced to xApps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NorthCause {
    None,
    UnsupportedFunction,
    UnknownMetric,
    NodeOverload,
    Unspecified,
    NodeUnavailable,
    NodeDisconnected,
}

impl NorthCause {
    fn index(self) -> u64 {
        match self {
            NorthCause::None => 0,
            NorthCause::UnsupportedFunction => 1,
            NorthCause::UnknownMetric => 2,
            NorthCause::NodeOverload => 3,
            NorthCause::Unspecified => 4,
            NorthCause::NodeUnavailable => 5,
            NorthCause::NodeDisconnected => 6,
        }
    }

    fn from_index(i: u64) -> Result<Self, CodecError> {
        Ok(match i {
            0 => NorthCause::None,
            1 => NorthCause::UnsupportedFunction,
            2 => NorthCause::UnknownMetric,
            3 => NorthCause::NodeOverload,
            4 => NorthCause::Unspecified,
            5 => NorthCause::NodeUnavailable,
            6 => NorthCause::NodeDisconnected,
            _ => {
                return Err(CodecError::BadChoice {
                    field: "cause",
                    index: i,
                    alternatives: 7,
                })
            }
        })
    }

    pub fn from_e2ap(cause: crate::e2ap::Cause) -> Self {
        match cause {
            crate::e2ap::Cause::UnsupportedFunction => NorthCause::UnsupportedFunction,
            crate::e2ap::Cause::UnknownMetric => NorthCause::UnknownMetric,
            crate::e2ap::Cause::NodeOverload => NorthCause::NodeOverload,
            crate::e2ap::Cause::Unspecified => NorthCause::Unspecified,
        }
    }
}

impl std::fmt::Display for NorthCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NorthCause::None => "none",
            NorthCause::UnsupportedFunction => "unsupported-function",
            NorthCause::UnknownMetric => "unknown-metric",
            NorthCause::NodeOverload => "node-overload",
            NorthCause::Unspecified => "unspecified",
            NorthCause::NodeUnavailable => "node-unavailable",
            NorthCause::NodeDisconnected => "node-disconnected",
        })
    }
}

/// One function definition entry in a 104 response. `sm_name`/`version`
/// are empty when the RIC has no codec bound for the function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub ran_function_id: u16,
    pub definition_octets: Vec<u8>,
    pub sm_name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NorthMessage {
    XAppRegister {
        xapp_id: String,
    },
    InventoryRequest,
    InventoryResponse {
        json: Vec<u8>,
    },
    FunctionDefsRequest {
        node: String,
    },
    FunctionDefsResponse {
        defs: Vec<FunctionDef>,
    },
    SubscribeRequest {
        node: String,
        ran_function_id: u16,
        event_trigger_octets: Vec<u8>,
        action_octets: Vec<u8>,
    },
    SubscribeResponse {
        request_id: RicRequestId,
        admitted: bool,
        cause: NorthCause,
    },
    IndicationForward {
        request_id: RicRequestId,
        sn: u32,
        verdict: crate::e2ap::SnVerdict,
        header_octets: Vec<u8>,
        message_octets: Vec<u8>,
    },
    ControlForward {
        node: String,
        ran_function_id: u16,
        header_octets: Vec<u8>,
        message_octets: Vec<u8>,
    },
    ControlResult {
        acked: bool,
    },
    SubscriptionDeleteRequest {
        request_id: RicRequestId,
    },
    SubscriptionDeleteResponse {
        request_id: RicRequestId,
    },
    SubscriptionClosed {
        request_id: RicRequestId,
        cause: NorthCause,
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

fn append_verdict(buf: &mut BitBuffer, v: crate::e2ap::SnVerdict) -> Result<(), CodecError> {
    let i = match v {
        crate::e2ap::SnVerdict::Ok => 0,
        crate::e2ap::SnVerdict::Gap => 1,
        crate::e2ap::SnVerdict::Duplicate => 2,
    };
    buf.append_constrained_uint("verdict", i, 0, 2)
}

fn read_verdict(buf: &mut BitBuffer) -> Result<crate::e2ap::SnVerdict, CodecError> {
    Ok(match buf.read_constrained_uint("verdict", 0, 2)? {
        0 => crate::e2ap::SnVerdict::Ok,
        1 => crate::e2ap::SnVerdict::Gap,
        _ => crate::e2ap::SnVerdict::Duplicate,
    })
}

impl NorthMessage {
    pub fn type_code(&self) -> u8 {
        match self {
            NorthMessage::XAppRegister { .. } => TYPE_XAPP_REGISTER,
            NorthMessage::InventoryRequest => TYPE_INVENTORY_REQUEST,
            NorthMessage::InventoryResponse { .. } => TYPE_INVENTORY_RESPONSE,
            NorthMessage::FunctionDefsRequest { .. } => TYPE_FUNCTION_DEFS_REQUEST,
            NorthMessage::FunctionDefsResponse { .. } => TYPE_FUNCTION_DEFS_RESPONSE,
            NorthMessage::SubscribeRequest { .. } => TYPE_SUBSCRIBE_REQUEST,
            NorthMessage::SubscribeResponse { .. } => TYPE_SUBSCRIBE_RESPONSE,
            NorthMessage::IndicationForward { .. } => TYPE_INDICATION_FORWARD,
            NorthMessage::ControlForward { .. } => TYPE_CONTROL_FORWARD,
            NorthMessage::ControlResult { .. } => TYPE_CONTROL_RESULT,
            NorthMessage::SubscriptionDeleteRequest { .. } => TYPE_SUBSCRIPTION_DELETE_REQUEST,
            NorthMessage::SubscriptionDeleteResponse { .. } => TYPE_SUBSCRIPTION_DELETE_RESPONSE,
            NorthMessage::SubscriptionClosed { .. } => TYPE_SUBSCRIPTION_CLOSED,
        }
    }

    pub fn encode_payload(&self) -> Result<Vec<u8>, E2apError> {
        let mut buf = BitBuffer::new();
        match self {
            NorthMessage::XAppRegister { xapp_id } => {
                buf.append_chars("xapp_id", xapp_id, 1, MAX_ID_LEN)?;
            }
            NorthMessage::InventoryRequest => {}
            NorthMessage::InventoryResponse { json } => {
                buf.append_octet_string("json", json, 0, MAX_OCTETS)?;
            }
            NorthMessage::FunctionDefsRequest { node } => {
                buf.append_chars("node", node, 1, MAX_ID_LEN)?;
            }
            NorthMessage::FunctionDefsResponse { defs } => {
                if defs.len() > MAX_FUNCTION_DEFS {
                    return Err(CodecError::LengthOutOfBounds {
                        field: "defs",
                        len: defs.len(),
                        min: 0,
                        max: MAX_FUNCTION_DEFS,
                    }
                    .into());
                }
                buf.append_constrained_uint(
                    "defs",
                    defs.len() as u64,
                    0,
                    MAX_FUNCTION_DEFS as u64,
                )?;
                for d in defs {
                    buf.append_constrained_uint(
                        "ran_function_id",
                        d.ran_function_id as u64,
                        0,
                        4095,
                    )?;
                    buf.append_octet_string(
                        "definition_octets",
                        &d.definition_octets,
                        0,
                        MAX_OCTETS,
                    )?;
                    buf.append_chars("sm_name", &d.sm_name, 0, MAX_ID_LEN)?;
                    buf.append_chars("version", &d.version, 0, MAX_VERSION_LEN)?;
                }
            }
            NorthMessage::SubscribeRequest {
                node,
                ran_function_id,
                event_trigger_octets,
                action_octets,
            } => {
                buf.append_chars("node", node, 1, MAX_ID_LEN)?;
                buf.append_constrained_uint("ran_function_id", *ran_function_id as u64, 0, 4095)?;
                buf.append_octet_string(
                    "event_trigger_octets",
                    event_trigger_octets,
                    0,
                    MAX_OCTETS,
                )?;
                buf.append_octet_string("action_octets", action_octets, 0, MAX_OCTETS)?;
            }
            NorthMessage::SubscribeResponse {
                request_id,
                admitted,
                cause,
            } => {
                append_request_id(&mut buf, *request_id)?;
                buf.append_bool(*admitted);
                buf.append_constrained_uint("cause", cause.index(), 0, 6)?;
            }
            NorthMessage::IndicationForward {
                request_id,
                sn,
                verdict,
                header_octets,
                message_octets,
            } => {
                append_request_id(&mut buf, *request_id)?;
                buf.append_constrained_uint("sn", *sn as u64, 0, u32::MAX as u64)?;
                append_verdict(&mut buf, *verdict)?;
                buf.append_octet_string("header_octets", header_octets, 0, MAX_OCTETS)?;
                buf.append_octet_string("message_octets", message_octets, 0, MAX_OCTETS)?;
            }
            NorthMessage::ControlForward {
                node,
                ran_function_id,
                header_octets,
                message_octets,
            } => {
                buf.append_chars("node", node, 1, MAX_ID_LEN)?;
                buf.append_constrained_uint("ran_function_id", *ran_function_id as u64, 0, 4095)?;
                buf.append_octet_string("header_octets", header_octets, 0, MAX_OCTETS)?;
                buf.append_octet_string("message_octets", message_octets, 0, MAX_OCTETS)?;
            }
            NorthMessage::ControlResult { acked } => {
                buf.append_bool(*acked);
            }
            NorthMessage::SubscriptionDeleteRequest { request_id }
            | NorthMessage::SubscriptionDeleteResponse { request_id } => {
                append_request_id(&mut buf, *request_id)?;
            }
            NorthMessage::SubscriptionClosed { request_id, cause } => {
                append_request_id(&mut buf, *request_id)?;
                buf.append_constrained_uint("cause", cause.index(), 0, 6)?;
            }
        }
        Ok(buf.finalize())
    }

    pub fn decode_payload(type_code: u8, payload: &[u8]) -> Result<Self, E2apError> {
        let mut buf = BitBuffer::from_octets(payload);
        let msg = match type_code {
            TYPE_XAPP_REGISTER => NorthMessage::XAppRegister {
                xapp_id: buf.read_chars("xapp_id", 1, MAX_ID_LEN)?,
            },
            TYPE_INVENTORY_REQUEST => NorthMessage::InventoryRequest,
            TYPE_INVENTORY_RESPONSE => NorthMessage::InventoryResponse {
                json: buf.read_octet_string("json", 0, MAX_OCTETS)?,
            },
            TYPE_FUNCTION_DEFS_REQUEST => NorthMessage::FunctionDefsRequest {
                node: buf.read_chars("node", 1, MAX_ID_LEN)?,
            },
            TYPE_FUNCTION_DEFS_RESPONSE => {
                let n = buf.read_constrained_uint("defs", 0, MAX_FUNCTION_DEFS as u64)?;
                let mut defs = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    defs.push(FunctionDef {
                        ran_function_id: buf.read_constrained_uint("ran_function_id", 0, 4095)?
                            as u16,
                        definition_octets: buf.read_octet_string(
                            "definition_octets",
                            0,
                            MAX_OCTETS,
                        )?,
                        sm_name: buf.read_chars("sm_name", 0, MAX_ID_LEN)?,
                        version: buf.read_chars("version", 0, MAX_VERSION_LEN)?,
                    });
                }
                NorthMessage::FunctionDefsResponse { defs }
            }
            TYPE_SUBSCRIBE_REQUEST => NorthMessage::SubscribeRequest {
                node: buf.read_chars("node", 1, MAX_ID_LEN)?,
                ran_function_id: buf.read_constrained_uint("ran_function_id", 0, 4095)? as u16,
                event_trigger_octets: buf.read_octet_string(
                    "event_trigger_octets",
                    0,
                    MAX_OCTETS,
                )?,
                action_octets: buf.read_octet_string("action_octets", 0, MAX_OCTETS)?,
            },
            TYPE_SUBSCRIBE_RESPONSE => NorthMessage::SubscribeResponse {
                request_id: read_request_id(&mut buf)?,
                admitted: buf.read_bool("admitted")?,
                cause: NorthCause::from_index(buf.read_constrained_uint("cause", 0, 6)?)?,
            },
            TYPE_INDICATION_FORWARD => NorthMessage::IndicationForward {
                request_id: read_request_id(&mut buf)?,
                sn: buf.read_constrained_uint("sn", 0, u32::MAX as u64)? as u32,
                verdict: read_verdict(&mut buf)?,
                header_octets: buf.read_octet_string("header_octets", 0, MAX_OCTETS)?,
                message_octets: buf.read_octet_string("message_octets", 0, MAX_OCTETS)?,
            },
            TYPE_CONTROL_FORWARD => NorthMessage::ControlForward {
                node: buf.read_chars("node", 1, MAX_ID_LEN)?,
                ran_function_id: buf.read_constrained_uint("ran_function_id", 0, 4095)? as u16,
                header_octets: buf.read_octet_string("header_octets", 0, MAX_OCTETS)?,
                message_octets: buf.read_octet_string("message_octets", 0, MAX_OCTETS)?,
            },
            TYPE_CONTROL_RESULT => NorthMessage::ControlResult {
                acked: buf.read_bool("acked")?,
            },
            TYPE_SUBSCRIPTION_DELETE_REQUEST => NorthMessage::SubscriptionDeleteRequest {
                request_id: read_request_id(&mut buf)?,
            },
            TYPE_SUBSCRIPTION_DELETE_RESPONSE => NorthMessage::SubscriptionDeleteResponse {
                request_id: read_request_id(&mut buf)?,
            },
            TYPE_SUBSCRIPTION_CLOSED => NorthMessage::SubscriptionClosed {
                request_id: read_request_id(&mut buf)?,
                cause: NorthCause::from_index(buf.read_constrained_uint("cause", 0, 6)?)?,
            },
            other => return Err(E2apError::UnknownType(other)),
        };
        buf.finish()?;
        Ok(msg)
    }
}

pub fn frame(msg: &NorthMessage) -> Result<Vec<u8>, E2apError> {
    wrap_frame(msg.type_code(), &msg.encode_payload()?)
}

pub fn parse(octets: &[u8]) -> Result<(NorthMessage, usize), E2apError> {
    let (type_code, payload, consumed) = unwrap_frame(octets)?;
    Ok((NorthMessage::decode_payload(type_code, payload)?, consumed))
}
