//! Pluggable service-model codec registry.
//!
//! Codecs are registered under a `(sm_name, version)` key and looked up
//! either directly or through per-node function bindings
//! (`ran_function_id` -> key). Unbound or unregistered functions resolve
//! to an opaque fallback whose decode path hands back the raw octets
//! untouched, so unknown service models degrade gracefully instead of
//! failing.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::kpm::{
    self, ActionDefinition, EventTriggerDefinition, IndicationHeader, IndicationMessage,
    KpmRanFunctionDefinition,
};
use crate::percodec::CodecError;

pub const MAX_RAN_FUNCTION_ID: u16 = 4095;

/// Identity of a service-model codec: model name plus version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SmCodecKey {
    pub sm_name: String,
    pub version: String,
}

impl SmCodecKey {
    pub fn new(sm_name: impl Into<String>, version: impl Into<String>) -> Self {
        Self {
            sm_name: sm_name.into(),
            version: version.into(),
        }
    }

    /// The KPM v3.00 key the reference deployment registers.
    pub fn kpm_v3() -> Self {
        Self::new("KPM", "3.00")
    }
}

impl std::fmt::Display for SmCodecKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.sm_name, self.version)
    }
}

/// Capability set every service-model codec provides. All operations are
/// total over valid octets or raise a [`CodecError`].
pub trait SmCodec: Send + Sync {
    fn decode_function_definition(
        &self,
        octets: &[u8],
    ) -> Result<KpmRanFunctionDefinition, CodecError>;
    fn summary(&self, octets: &[u8]) -> Result<BTreeMap<u8, Vec<String>>, CodecError> {
        Ok(kpm::function_definition_summary(
            &self.decode_function_definition(octets)?,
        ))
    }
    fn encode_event_trigger(&self, t: &EventTriggerDefinition) -> Result<Vec<u8>, CodecError>;
    fn decode_event_trigger(&self, octets: &[u8]) -> Result<EventTriggerDefinition, CodecError>;
    fn encode_action_definition(&self, a: &ActionDefinition) -> Result<Vec<u8>, CodecError>;
    fn decode_action_definition(&self, octets: &[u8]) -> Result<ActionDefinition, CodecError>;
    fn decode_indication_header(&self, octets: &[u8]) -> Result<IndicationHeader, CodecError>;
    fn decode_indication_message(&self, octets: &[u8]) -> Result<IndicationMessage, CodecError>;
}

/// The KPM v3.00 codec backed by the [`kpm`] module.
#[derive(Debug, Default)]
pub struct KpmCodec;

impl SmCodec for KpmCodec {
    fn decode_function_definition(
        &self,
        octets: &[u8],
    ) -> Result<KpmRanFunctionDefinition, CodecError> {
        kpm::decode_ran_function_definition(octets)
    }

    fn encode_event_trigger(&self, t: &EventTriggerDefinition) -> Result<Vec<u8>, CodecError> {
        kpm::encode_event_trigger(t)
    }

    fn decode_event_trigger(&self, octets: &[u8]) -> Result<EventTriggerDefinition, CodecError> {
        kpm::decode_event_trigger(octets)
    }

    fn encode_action_definition(&self, a: &ActionDefinition) -> Result<Vec<u8>, CodecError> {
        kpm::encode_action_definition(a)
    }

    fn decode_action_definition(&self, octets: &[u8]) -> Result<ActionDefinition, CodecError> {
        kpm::decode_action_definition(octets)
    }

    fn decode_indication_header(&self, octets: &[u8]) -> Result<IndicationHeader, CodecError> {
        kpm::decode_indication_header(octets)
    }

    fn decode_indication_message(&self, octets: &[u8]) -> Result<IndicationMessage, CodecError> {
        kpm::decode_indication_message(octets)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("codec already registered for {0}")]
    DuplicateKey(SmCodecKey),
}

/// Raw octets handed through unchanged by the opaque fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Undecoded {
    pub octets: Vec<u8>,
}

/// Byte-preserving stand-in used where no codec is bound or registered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpaqueFallback;

impl OpaqueFallback {
    pub fn decode(&self, octets: &[u8]) -> Undecoded {
        Undecoded {
            octets: octets.to_vec(),
        }
    }
}

/// Outcome of resolving a RAN function id against the registry.
pub enum FunctionResolution {
    Bound {
        key: SmCodecKey,
        codec: Arc<dyn SmCodec>,
    },
    Opaque(OpaqueFallback),
}

impl FunctionResolution {
    pub fn codec(&self) -> Option<&Arc<dyn SmCodec>> {
        match self {
            FunctionResolution::Bound { codec, .. } => Some(codec),
            FunctionResolution::Opaque(_) => None,
        }
    }
}

/// Bindings of RAN function ids to service-model keys, per node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FunctionBindings {
    map: BTreeMap<u16, SmCodecKey>,
}

impl FunctionBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, ran_function_id: u16, key: SmCodecKey) {
        self.map.insert(ran_function_id, key);
    }

    pub fn get(&self, ran_function_id: u16) -> Option<&SmCodecKey> {
        self.map.get(&ran_function_id)
    }
}

/// Read-mostly codec registry; registration happens at startup, resolution
/// is a pure function of the registry contents and the bindings.
#[derive(Default)]
pub struct SmRegistry {
    codecs: BTreeMap<SmCodecKey, Arc<dyn SmCodec>>,
}

impl SmRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry preloaded with the KPM v3.00 codec.
    pub fn with_kpm_v3() -> Self {
        let mut r = Self::new();
        r.register(SmCodecKey::kpm_v3(), Arc::new(KpmCodec))
            .unwrap();
        r
    }

    pub fn register(
        &mut self,
        key: SmCodecKey,
        codec: Arc<dyn SmCodec>,
    ) -> Result<(), RegistryError> {
        if self.codecs.contains_key(&key) {
            return Err(RegistryError::DuplicateKey(key));
        }
        self.codecs.insert(key, codec);
        Ok(())
    }

    pub fn remove(&mut self, key: &SmCodecKey) -> bool {
        self.codecs.remove(key).is_some()
    }

    pub fn resolve(&self, key: &SmCodecKey) -> Option<Arc<dyn SmCodec>> {
        self.codecs.get(key).cloned()
    }

    /// Registered keys in deterministic order.
    pub fn keys(&self) -> impl Iterator<Item = &SmCodecKey> {
        self.codecs.keys()
    }

    /// Resolves a function id through the bindings; anything unbound or
    /// unregistered falls back to the opaque passthrough.
    pub fn resolve_for_function(
        &self,
        bindings: &FunctionBindings,
        ran_function_id: u16,
    ) -> FunctionResolution {
        match bindings
            .get(ran_function_id)
            .and_then(|key| self.resolve(key).map(|codec| (key.clone(), codec)))
        {
            Some((key, codec)) => FunctionResolution::Bound { key, codec },
            None => FunctionResolution::Opaque(OpaqueFallback),
        }
    }

    /// Probes every registered codec (in key order) until one decodes the
    /// definition; used at E2 setup to bind advertised functions to the
    /// service model that understands them.
    pub fn probe_definition(&self, octets: &[u8]) -> Option<SmCodecKey> {
        self.codecs
            .iter()
            .find(|(_, codec)| codec.decode_function_definition(octets).is_ok())
            .map(|(key, _)| key.clone())
    }
}
