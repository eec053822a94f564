//! Scenario configuration: flat `key=value` text.
//!
//! Recognized keys: `ric_listen`, `node_plmn`, `node_gnb_id`, `trace`,
//! `ue_events`, `reporting_period_ms`, `granularity_ms`, `metrics`
//! (comma-separated), `header_overhead_bytes`, `out_dir`, `seed`.
//! Blank lines and `#` comments are ignored; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use e2stack::e2ap::GlobalE2NodeId;
use e2stack::kpm::SUPPORTED_METRICS;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub ric_listen: String,
    pub node_plmn: [u8; 3],
    pub node_gnb_id: u32,
    pub trace: PathBuf,
    pub ue_events: Option<PathBuf>,
    pub reporting_period_ms: u32,
    pub granularity_ms: u32,
    pub metrics: Vec<String>,
    pub header_overhead_bytes: u64,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn identity(&self) -> GlobalE2NodeId {
        GlobalE2NodeId {
            plmn: self.node_plmn,
            gnb_id: self.node_gnb_id,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }

        const KNOWN: [&str; 11] = [
            "ric_listen",
            "node_plmn",
            "node_gnb_id",
            "trace",
            "ue_events",
            "reporting_period_ms",
            "granularity_ms",
            "metrics",
            "header_overhead_bytes",
            "out_dir",
            "seed",
        ];
        for key in values.keys() {
            if !KNOWN.contains(&key.as_str()) {
                return Err(CliError::Config(format!("unknown config key {key:?}")));
            }
        }

        let get = |key: &str| values.get(key).map(String::as_str);
        let parse_u64 = |key: &str, default: u64| -> Result<u64, CliError> {
            match get(key) {
                None => Ok(default),
                Some(s) => s
                    .parse()
                    .map_err(|_| CliError::Config(format!("{key}: not an integer: {s:?}"))),
            }
        };

        let trace = PathBuf::from(
            get("trace").ok_or_else(|| CliError::Config("missing key trace".into()))?,
        );
        if !trace.is_file() {
            return Err(CliError::Config(format!(
                "trace file not found: {}",
                trace.display()
            )));
        }
        let out_dir = PathBuf::from(
            get("out_dir").ok_or_else(|| CliError::Config("missing key out_dir".into()))?,
        );
        let ue_events = match get("ue_events") {
            None | Some("") => None,
            Some(p) => {
                let p = PathBuf::from(p);
                if !p.is_file() {
                    return Err(CliError::Config(format!(
                        "ue_events file not found: {}",
                        p.display()
                    )));
                }
                Some(p)
            }
        };

        let node_plmn = GlobalE2NodeId::plmn_from_hex(get("node_plmn").unwrap_or("00F110"))
            .map_err(|e| CliError::Config(format!("node_plmn: {e}")))?;
        let gnb_id_text = get("node_gnb_id").unwrap_or("0x00000E05");
        let node_gnb_id = if let Some(hex) = gnb_id_text
            .strip_prefix("0x")
            .or_else(|| gnb_id_text.strip_prefix("0X"))
        {
            u32::from_str_radix(hex, 16)
                .map_err(|_| CliError::Config(format!("node_gnb_id: bad hex {gnb_id_text:?}")))?
        } else {
            gnb_id_text.parse().map_err(|_| {
                CliError::Config(format!("node_gnb_id: not a number {gnb_id_text:?}"))
            })?
        };
        GlobalE2NodeId::new(node_plmn, node_gnb_id)
            .map_err(|e| CliError::Config(format!("node identity: {e}")))?;

        let reporting_period_ms = parse_u64("reporting_period_ms", 1000)? as u32;
        if !(1..=65536).contains(&reporting_period_ms) {
            return Err(CliError::Config(format!(
                "reporting_period_ms {reporting_period_ms} outside [1, 65536]"
            )));
        }
        let granularity_ms = parse_u64("granularity_ms", reporting_period_ms as u64)? as u32;
        if granularity_ms == 0 || !reporting_period_ms.is_multiple_of(granularity_ms) {
            return Err(CliError::Config(format!(
                "granularity_ms {granularity_ms} does not divide reporting_period_ms {reporting_period_ms}"
            )));
        }

        let metrics: Vec<String> = match get("metrics") {
            None | Some("") => SUPPORTED_METRICS.iter().map(|m| m.to_string()).collect(),
            Some(s) => s.split(',').map(|m| m.trim().to_string()).collect(),
        };
        if crate::report::direction_of(&metrics).is_none() {
            return Err(CliError::Config(
                "metrics must include a DL or UL throughput or PDCP volume metric".into(),
            ));
        }

        Ok(Self {
            ric_listen: get("ric_listen").unwrap_or("127.0.0.1:0").to_string(),
            node_plmn,
            node_gnb_id,
            trace,
            ue_events,
            reporting_period_ms,
            granularity_ms,
            metrics,
            header_overhead_bytes: parse_u64("header_overhead_bytes", 43)?,
            out_dir,
            seed: parse_u64("seed", 0)?,
        })
    }
}
