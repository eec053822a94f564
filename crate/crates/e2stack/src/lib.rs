//! Desk-scale, self-contained O-RAN E2 stack.
//!
//! The crate is layered bottom-up:
//!
//! - [`percodec`] — deterministic bit-level encoding primitives (constrained
//!   integers, fixed-width fields, 8-bit character strings) on which every
//!   wire format here is built.
//! - [`kpm`] — the KPM service-model schemas and their codecs: event
//!   triggers, action definitions, RAN function definitions, indication
//!   header/message.
//! - [`registry`] — pluggable service-model codec registry resolving
//!   `(sm_name, version)` and RAN function ids to codecs, with an opaque
//!   fallback for unknown models.
//! - [`e2ap`] — the E2AP message set, length-prefixed framing, and the
//!   subscription state machine.
//! - [`north`] — the xApp-facing message family carried over the same
//!   framing (type codes 100+).
//! - [`ric`] — Near-RT RIC simulator: E2 termination server, node
//!   inventory, subscription manager, and indication routing.
//! - [`nodesim`] — gNB/E2-node simulator turning traffic traces into KPM
//!   indications through a PDCP overhead model, on a virtual clock.
//! - [`xapp`] — the developer-facing xApp SDK: discovery, subscription,
//!   decoded-indication callbacks, opaque control send.

pub mod e2ap;
pub mod kpm;
pub mod nodesim;
pub mod north;
pub mod percodec;
pub mod registry;
pub mod ric;
pub mod testkit;
pub mod transport;
pub mod xapp;

pub use percodec::{from_hex, to_hex, BitBuffer, CodecError};
