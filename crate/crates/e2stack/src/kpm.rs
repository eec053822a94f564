//! KPM service-model schemas and codec.
//!
//! Wire layout (bit-exact): every type encodes its fields in declaration
//! order; lists encode a constrained element count followed by the
//! elements; choices encode the alternative index as a constrained uint
//! over `[0, alternatives-1]` followed by the chosen body. All bounds are
//! closed (no extension markers), so every length field is constrained.
//!
//! The reference node advertises report styles 0..4 where style 3 carries
//! the seven supported measurement names; the other styles exist but are
//! empty. Volumes and PRB counts are integers, throughputs and delays are
//! binary64 reals.

use std::collections::BTreeMap;

use crate::percodec::{from_hex, BitBuffer, CodecError};

pub const MAX_NAME_LEN: usize = 150;
pub const MAX_METRICS_PER_STYLE: usize = 64;
pub const MAX_STYLES: usize = 5;
pub const MAX_RECORDS_PER_REPORT: usize = 1024;
pub const MAX_UE_REPORTS: usize = 64;
pub const MAX_UE_ID_LEN: usize = 32;
pub const MIN_PERIOD_MS: u32 = 1;
pub const MAX_PERIOD_MS: u32 = 65536;

/// The seven measurement names served by the reference node, in the
/// order the node advertises them.
pub const SUPPORTED_METRICS: [&str; 7] = [
    "DRB.PdcpSduVolumeDL",
    "DRB.PdcpSduVolumeUL",
    "DRB.RlcSduDelayDl",
    "DRB.UEThpDl",
    "DRB.UEThpUl",
    "RRU.PrbTotDl",
    "RRU.PrbTotUl",
];

/// A measurement name: 1..=150 eight-bit characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementName(String);

impl MeasurementName {
    pub fn new(name: impl Into<String>) -> Result<Self, CodecError> {
        let name = name.into();
        let len = name.chars().count();
        if len == 0 || len > MAX_NAME_LEN {
            return Err(CodecError::LengthOutOfBounds {
                field: "measurement_name",
                len,
                min: 1,
                max: MAX_NAME_LEN,
            });
        }
        if let Some(ch) = name.chars().find(|&c| c as u32 > 0xFF) {
            return Err(CodecError::CharTooWide {
                field: "measurement_name",
                ch,
            });
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for MeasurementName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// One report style advertised by a RAN function: a style id 0..=4 and
/// the measurement names it can serve (unique within the style).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportStyle {
    pub style_id: u8,
    pub metrics: Vec<MeasurementName>,
}

/// RAN function definition for the KPM service model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KpmRanFunctionDefinition {
    pub function_name: String,
    pub styles: Vec<ReportStyle>,
}

impl KpmRanFunctionDefinition {
    /// The definition the reference node registers: styles 0..4, with the
    /// seven supported metrics under style 3 and the rest empty.
    pub fn reference(function_name: &str) -> Self {
        let metrics = SUPPORTED_METRICS
            .iter()
            .map(|m| MeasurementName::new(*m).unwrap())
            .collect();
        Self {
            function_name: function_name.to_string(),
            styles: vec![
                ReportStyle {
                    style_id: 0,
                    metrics: vec![],
                },
                ReportStyle {
                    style_id: 1,
                    metrics: vec![],
                },
                ReportStyle {
                    style_id: 2,
                    metrics: vec![],
                },
                ReportStyle {
                    style_id: 3,
                    metrics,
                },
                ReportStyle {
                    style_id: 4,
                    metrics: vec![],
                },
            ],
        }
    }
}

/// Subscription event trigger: the reporting period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventTriggerDefinition {
    pub reporting_period_ms: u32,
}

/// Subscription action: style, metric subset, and measurement granularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDefinition {
    pub style_id: u8,
    pub metrics: Vec<MeasurementName>,
    pub granularity_period_ms: u32,
}

/// One measured value; the alternative mirrors the metric kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasValue {
    Int(u64),
    Real(f64),
    NoValue,
}

/// Values for one granularity period, positionally aligned with the
/// governing action's metric list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasRecord {
    pub values: Vec<MeasValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicationHeader {
    pub collection_start_time_ms: u64,
    pub sender: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeReport {
    pub ue_id: String,
    pub records: Vec<MeasRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IndicationMessage {
    NodeLevel { records: Vec<MeasRecord> },
    PerUe { ue_reports: Vec<UeReport> },
}

fn append_name(buf: &mut BitBuffer, field: &'static str, name: &str) -> Result<(), CodecError> {
    buf.append_chars(field, name, 1, MAX_NAME_LEN)
}

fn read_name(buf: &mut BitBuffer, field: &'static str) -> Result<String, CodecError> {
    buf.read_chars(field, 1, MAX_NAME_LEN)
}

pub fn encode_event_trigger(t: &EventTriggerDefinition) -> Result<Vec<u8>, CodecError> {
    let mut buf = BitBuffer::new();
    buf.append_constrained_uint(
        "reporting_period_ms",
        t.reporting_period_ms as u64,
        MIN_PERIOD_MS as u64,
        MAX_PERIOD_MS as u64,
    )?;
    Ok(buf.finalize())
}

pub fn decode_event_trigger(octets: &[u8]) -> Result<EventTriggerDefinition, CodecError> {
    let mut buf = BitBuffer::from_octets(octets);
    let period = buf.read_constrained_uint(
        "reporting_period_ms",
        MIN_PERIOD_MS as u64,
        MAX_PERIOD_MS as u64,
    )?;
    buf.finish()?;
    Ok(EventTriggerDefinition {
        reporting_period_ms: period as u32,
    })
}

fn check_unique_metrics(
    field: &'static str,
    metrics: &[MeasurementName],
) -> Result<(), CodecError> {
    let mut seen = std::collections::BTreeSet::new();
    for m in metrics {
        if !seen.insert(m.as_str()) {
            return Err(CodecError::Invalid {
                field,
                reason: format!("duplicate metric name {:?}", m.as_str()),
            });
        }
    }
    Ok(())
}

fn append_action(buf: &mut BitBuffer, a: &ActionDefinition) -> Result<(), CodecError> {
    buf.append_constrained_uint("style_id", a.style_id as u64, 0, 4)?;
    if a.metrics.is_empty() || a.metrics.len() > MAX_METRICS_PER_STYLE {
        return Err(CodecError::LengthOutOfBounds {
            field: "action_metrics",
            len: a.metrics.len(),
            min: 1,
            max: MAX_METRICS_PER_STYLE,
        });
    }
    check_unique_metrics("action_metrics", &a.metrics)?;
    buf.append_constrained_uint(
        "action_metrics",
        a.metrics.len() as u64,
        1,
        MAX_METRICS_PER_STYLE as u64,
    )?;
    for m in &a.metrics {
        append_name(buf, "measurement_name", m.as_str())?;
    }
    buf.append_constrained_uint(
        "granularity_period_ms",
        a.granularity_period_ms as u64,
        MIN_PERIOD_MS as u64,
        MAX_PERIOD_MS as u64,
    )
}

fn read_action(buf: &mut BitBuffer) -> Result<ActionDefinition, CodecError> {
    let style_id = buf.read_constrained_uint("style_id", 0, 4)? as u8;
    let n = buf.read_constrained_uint("action_metrics", 1, MAX_METRICS_PER_STYLE as u64)?;
    let mut metrics = Vec::with_capacity(n as usize);
    for _ in 0..n {
        metrics.push(MeasurementName::new(read_name(buf, "measurement_name")?)?);
    }
    check_unique_metrics("action_metrics", &metrics)?;
    let granularity = buf.read_constrained_uint(
        "granularity_period_ms",
        MIN_PERIOD_MS as u64,
        MAX_PERIOD_MS as u64,
    )?;
    Ok(ActionDefinition {
        style_id,
        metrics,
        granularity_period_ms: granularity as u32,
    })
}

pub fn encode_action_definition(a: &ActionDefinition) -> Result<Vec<u8>, CodecError> {
    let mut buf = BitBuffer::new();
    append_action(&mut buf, a)?;
    Ok(buf.finalize())
}

pub fn decode_action_definition(octets: &[u8]) -> Result<ActionDefinition, CodecError> {
    let mut buf = BitBuffer::from_octets(octets);
    let action = read_action(&mut buf)?;
    buf.finish()?;
    Ok(action)
}

fn append_style(buf: &mut BitBuffer, s: &ReportStyle) -> Result<(), CodecError> {
    buf.append_constrained_uint("style_id", s.style_id as u64, 0, 4)?;
    if s.metrics.len() > MAX_METRICS_PER_STYLE {
        return Err(CodecError::LengthOutOfBounds {
            field: "style_metrics",
            len: s.metrics.len(),
            min: 0,
            max: MAX_METRICS_PER_STYLE,
        });
    }
    check_unique_metrics("style_metrics", &s.metrics)?;
    buf.append_constrained_uint(
        "style_metrics",
        s.metrics.len() as u64,
        0,
        MAX_METRICS_PER_STYLE as u64,
    )?;
    for m in &s.metrics {
        append_name(buf, "measurement_name", m.as_str())?;
    }
    Ok(())
}

fn read_style(buf: &mut BitBuffer) -> Result<ReportStyle, CodecError> {
    let style_id = buf.read_constrained_uint("style_id", 0, 4)? as u8;
    let n = buf.read_constrained_uint("style_metrics", 0, MAX_METRICS_PER_STYLE as u64)?;
    let mut metrics = Vec::with_capacity(n as usize);
    for _ in 0..n {
        metrics.push(MeasurementName::new(read_name(buf, "measurement_name")?)?);
    }
    check_unique_metrics("style_metrics", &metrics)?;
    Ok(ReportStyle { style_id, metrics })
}

fn check_styles_increasing(styles: &[ReportStyle]) -> Result<(), CodecError> {
    for pair in styles.windows(2) {
        if pair[1].style_id <= pair[0].style_id {
            return Err(CodecError::Invalid {
                field: "styles",
                reason: format!(
                    "style ids not strictly increasing: {} then {}",
                    pair[0].style_id, pair[1].style_id
                ),
            });
        }
    }
    Ok(())
}

pub fn encode_ran_function_definition(d: &KpmRanFunctionDefinition) -> Result<Vec<u8>, CodecError> {
    let mut buf = BitBuffer::new();
    append_name(&mut buf, "function_name", &d.function_name)?;
    if d.styles.is_empty() || d.styles.len() > MAX_STYLES {
        return Err(CodecError::LengthOutOfBounds {
            field: "styles",
            len: d.styles.len(),
            min: 1,
            max: MAX_STYLES,
        });
    }
    check_styles_increasing(&d.styles)?;
    buf.append_constrained_uint("styles", d.styles.len() as u64, 1, MAX_STYLES as u64)?;
    for s in &d.styles {
        append_style(&mut buf, s)?;
    }
    Ok(buf.finalize())
}

pub fn decode_ran_function_definition(
    octets: &[u8],
) -> Result<KpmRanFunctionDefinition, CodecError> {
    let mut buf = BitBuffer::from_octets(octets);
    let function_name = read_name(&mut buf, "function_name")?;
    let n = buf.read_constrained_uint("styles", 1, MAX_STYLES as u64)?;
    let mut styles = Vec::with_capacity(n as usize);
    for _ in 0..n {
        styles.push(read_style(&mut buf)?);
    }
    check_styles_increasing(&styles)?;
    buf.finish()?;
    Ok(KpmRanFunctionDefinition {
        function_name,
        styles,
    })
}

/// Order-preserving map of style id to metric names, one entry per style.
pub fn function_definition_summary(d: &KpmRanFunctionDefinition) -> BTreeMap<u8, Vec<String>> {
    d.styles
        .iter()
        .map(|s| {
            (
                s.style_id,
                s.metrics.iter().map(|m| m.as_str().to_string()).collect(),
            )
        })
        .collect()
}

fn append_value(buf: &mut BitBuffer, v: &MeasValue) -> Result<(), CodecError> {
    match v {
        MeasValue::Int(x) => {
            buf.append_constrained_uint("meas_value", 0, 0, 2)?;
            buf.append_fixed_uint64(*x);
        }
        MeasValue::Real(x) => {
            buf.append_constrained_uint("meas_value", 1, 0, 2)?;
            buf.append_real(*x);
        }
        MeasValue::NoValue => {
            buf.append_constrained_uint("meas_value", 2, 0, 2)?;
        }
    }
    Ok(())
}

fn read_value(buf: &mut BitBuffer) -> Result<MeasValue, CodecError> {
    match buf.read_constrained_uint("meas_value", 0, 2)? {
        0 => Ok(MeasValue::Int(buf.read_fixed_uint64("int_value")?)),
        1 => Ok(MeasValue::Real(buf.read_real("real_value")?)),
        2 => Ok(MeasValue::NoValue),
        i => Err(CodecError::BadChoice {
            field: "meas_value",
            index: i,
            alternatives: 3,
        }),
    }
}

fn append_record(buf: &mut BitBuffer, r: &MeasRecord) -> Result<(), CodecError> {
    if r.values.len() > MAX_METRICS_PER_STYLE {
        return Err(CodecError::LengthOutOfBounds {
            field: "record_values",
            len: r.values.len(),
            min: 0,
            max: MAX_METRICS_PER_STYLE,
        });
    }
    buf.append_constrained_uint(
        "record_values",
        r.values.len() as u64,
        0,
        MAX_METRICS_PER_STYLE as u64,
    )?;
    for v in &r.values {
        append_value(buf, v)?;
    }
    Ok(())
}

fn read_record(buf: &mut BitBuffer) -> Result<MeasRecord, CodecError> {
    let n = buf.read_constrained_uint("record_values", 0, MAX_METRICS_PER_STYLE as u64)?;
    let mut values = Vec::with_capacity(n as usize);
    for _ in 0..n {
        values.push(read_value(buf)?);
    }
    Ok(MeasRecord { values })
}

fn append_records(buf: &mut BitBuffer, records: &[MeasRecord]) -> Result<(), CodecError> {
    if records.is_empty() || records.len() > MAX_RECORDS_PER_REPORT {
        return Err(CodecError::LengthOutOfBounds {
            field: "records",
            len: records.len(),
            min: 1,
            max: MAX_RECORDS_PER_REPORT,
        });
    }
    buf.append_constrained_uint(
        "records",
        records.len() as u64,
        1,
        MAX_RECORDS_PER_REPORT as u64,
    )?;
    for r in records {
        append_record(buf, r)?;
    }
    Ok(())
}

fn read_records(buf: &mut BitBuffer) -> Result<Vec<MeasRecord>, CodecError> {
    let n = buf.read_constrained_uint("records", 1, MAX_RECORDS_PER_REPORT as u64)?;
    let mut records = Vec::with_capacity(n as usize);
    for _ in 0..n {
        records.push(read_record(buf)?);
    }
    Ok(records)
}

pub fn encode_indication_header(h: &IndicationHeader) -> Result<Vec<u8>, CodecError> {
    let mut buf = BitBuffer::new();
    buf.append_fixed_uint64(h.collection_start_time_ms);
    buf.append_chars("sender", &h.sender, 1, MAX_NAME_LEN)?;
    Ok(buf.finalize())
}

pub fn decode_indication_header(octets: &[u8]) -> Result<IndicationHeader, CodecError> {
    let mut buf = BitBuffer::from_octets(octets);
    let t = buf.read_fixed_uint64("collection_start_time_ms")?;
    let sender = buf.read_chars("sender", 1, MAX_NAME_LEN)?;
    buf.finish()?;
    Ok(IndicationHeader {
        collection_start_time_ms: t,
        sender,
    })
}

pub fn encode_indication_message(m: &IndicationMessage) -> Result<Vec<u8>, CodecError> {
    let mut buf = BitBuffer::new();
    match m {
        IndicationMessage::NodeLevel { records } => {
            buf.append_constrained_uint("indication_message", 0, 0, 1)?;
            append_records(&mut buf, records)?;
        }
        IndicationMessage::PerUe { ue_reports } => {
            buf.append_constrained_uint("indication_message", 1, 0, 1)?;
            if ue_reports.len() > MAX_UE_REPORTS {
                return Err(CodecError::LengthOutOfBounds {
                    field: "ue_reports",
                    len: ue_reports.len(),
                    min: 0,
                    max: MAX_UE_REPORTS,
                });
            }
            let mut seen = std::collections::BTreeSet::new();
            for r in ue_reports {
                if !seen.insert(r.ue_id.as_str()) {
                    return Err(CodecError::Invalid {
                        field: "ue_reports",
                        reason: format!("duplicate ue_id {:?}", r.ue_id),
                    });
                }
            }
            buf.append_constrained_uint(
                "ue_reports",
                ue_reports.len() as u64,
                0,
                MAX_UE_REPORTS as u64,
            )?;
            for r in ue_reports {
                buf.append_chars("ue_id", &r.ue_id, 1, MAX_UE_ID_LEN)?;
                append_records(&mut buf, &r.records)?;
            }
        }
    }
    Ok(buf.finalize())
}

pub fn decode_indication_message(octets: &[u8]) -> Result<IndicationMessage, CodecError> {
    let mut buf = BitBuffer::from_octets(octets);
    let msg = match buf.read_constrained_uint("indication_message", 0, 1)? {
        0 => IndicationMessage::NodeLevel {
            records: read_records(&mut buf)?,
        },
        1 => {
            let n = buf.read_constrained_uint("ue_reports", 0, MAX_UE_REPORTS as u64)?;
            let mut ue_reports = Vec::with_capacity(n as usize);
            let mut seen = std::collections::BTreeSet::new();
            for _ in 0..n {
                let ue_id = buf.read_chars("ue_id", 1, MAX_UE_ID_LEN)?;
                if !seen.insert(ue_id.clone()) {
                    return Err(CodecError::Invalid {
                        field: "ue_reports",
                        reason: format!("duplicate ue_id {ue_id:?}"),
                    });
                }
                let records = read_records(&mut buf)?;
                ue_reports.push(UeReport { ue_id, records });
            }
            IndicationMessage::PerUe { ue_reports }
        }
        i => {
            return Err(CodecError::BadChoice {
                field: "indication_message",
                index: i,
                alternatives: 2,
            })
        }
    };
    buf.finish()?;
    Ok(msg)
}

/// Decodes an indication header given as hex text, as stored in logs and
/// relayed northbound.
pub fn decode_indication_header_hex(hex: &str) -> Result<IndicationHeader, CodecError> {
    decode_indication_header(&from_hex(hex)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percodec::to_hex;

    fn name(s: &str) -> MeasurementName {
        MeasurementName::new(s).unwrap()
    }

    #[test]
    fn event_trigger_listing2_bytes() {
        let octets = encode_event_trigger(&EventTriggerDefinition {
            reporting_period_ms: 1000,
        })
        .unwrap();
        assert_eq!(to_hex(&octets), "03E7");
        assert_eq!(
            decode_event_trigger(&octets).unwrap().reporting_period_ms,
            1000
        );
    }

    #[test]
    fn event_trigger_lower_bound_and_width() {
        let octets = encode_event_trigger(&EventTriggerDefinition {
            reporting_period_ms: 1,
        })
        .unwrap();
        assert_eq!(octets, vec![0x00, 0x00]);
        for period in [1u32, 2, 999, 1000, 4096, 65535, 65536] {
            let t = EventTriggerDefinition {
                reporting_period_ms: period,
            };
            let octets = encode_event_trigger(&t).unwrap();
            assert_eq!(octets.len(), 2, "every legal period encodes to 2 octets");
            assert_eq!(decode_event_trigger(&octets).unwrap(), t);
        }
    }

    #[test]
    fn event_trigger_out_of_range() {
        assert!(encode_event_trigger(&EventTriggerDefinition {
            reporting_period_ms: 0
        })
        .is_err());
        assert!(encode_event_trigger(&EventTriggerDefinition {
            reporting_period_ms: 65537
        })
        .is_err());
    }

    #[test]
    fn action_round_trip() {
        let a = ActionDefinition {
            style_id: 3,
            metrics: vec![name("DRB.UEThpDl")],
            granularity_period_ms: 1000,
        };
        let octets = encode_action_definition(&a).unwrap();
        assert_eq!(decode_action_definition(&octets).unwrap(), a);
    }

    #[test]
    fn action_empty_metrics_rejected() {
        let a = ActionDefinition {
            style_id: 0,
            metrics: vec![],
            granularity_period_ms: 1000,
        };
        assert!(matches!(
            encode_action_definition(&a),
            Err(CodecError::LengthOutOfBounds {
                field: "action_metrics",
                ..
            })
        ));
    }

    #[test]
    fn action_at_bounds_encodes() {
        // 64 metrics of maximum length; length fields sit at their bounds
        let metrics: Vec<MeasurementName> = (0..64)
            .map(|i| name(&format!("{:A>147}{i:03}", "")))
            .collect();
        let a = ActionDefinition {
            style_id: 0,
            metrics,
            granularity_period_ms: 65536,
        };
        let octets = encode_action_definition(&a).unwrap();
        assert_eq!(decode_action_definition(&octets).unwrap(), a);
    }

    #[test]
    fn action_duplicate_metric_rejected() {
        let a = ActionDefinition {
            style_id: 3,
            metrics: vec![name("DRB.UEThpDl"), name("DRB.UEThpDl")],
            granularity_period_ms: 1000,
        };
        assert!(encode_action_definition(&a).is_err());
    }

    #[test]
    fn ran_function_definition_listing2_summary() {
        let d = KpmRanFunctionDefinition::reference("ORAN-E2SM-KPM");
        let octets = encode_ran_function_definition(&d).unwrap();
        let back = decode_ran_function_definition(&octets).unwrap();
        assert_eq!(back, d);

        let summary = function_definition_summary(&back);
        assert_eq!(summary.len(), 5);
        assert_eq!(summary[&0], Vec::<String>::new());
        assert_eq!(summary[&1], Vec::<String>::new());
        assert_eq!(summary[&2], Vec::<String>::new());
        assert_eq!(summary[&3], SUPPORTED_METRICS.to_vec());
        assert_eq!(summary[&4], Vec::<String>::new());
    }

    #[test]
    fn single_empty_style_round_trip() {
        let d = KpmRanFunctionDefinition {
            function_name: "f".into(),
            styles: vec![ReportStyle {
                style_id: 2,
                metrics: vec![],
            }],
        };
        let octets = encode_ran_function_definition(&d).unwrap();
        let back = decode_ran_function_definition(&octets).unwrap();
        assert_eq!(back, d);
        assert_eq!(function_definition_summary(&back)[&2], Vec::<String>::new());
    }

    #[test]
    fn style_ids_must_strictly_increase() {
        let d = KpmRanFunctionDefinition {
            function_name: "f".into(),
            styles: vec![
                ReportStyle {
                    style_id: 3,
                    metrics: vec![],
                },
                ReportStyle {
                    style_id: 3,
                    metrics: vec![],
                },
            ],
        };
        assert!(encode_ran_function_definition(&d).is_err());
    }

    #[test]
    fn header_round_trip_listing1_sender() {
        let h = IndicationHeader {
            collection_start_time_ms: 0,
            sender: "gnb_001_001_00000e05".into(),
        };
        let octets = encode_indication_header(&h).unwrap();
        assert_eq!(decode_indication_header(&octets).unwrap(), h);
    }

    #[test]
    fn per_ue_message_with_zero_ues_round_trips() {
        let m = IndicationMessage::PerUe { ue_reports: vec![] };
        let octets = encode_indication_message(&m).unwrap();
        assert_eq!(decode_indication_message(&octets).unwrap(), m);
    }

    #[test]
    fn node_level_message_round_trips() {
        let m = IndicationMessage::NodeLevel {
            records: vec![MeasRecord {
                values: vec![MeasValue::Int(42), MeasValue::Real(2.5), MeasValue::NoValue],
            }],
        };
        let octets = encode_indication_message(&m).unwrap();
        assert_eq!(decode_indication_message(&octets).unwrap(), m);
    }

    #[test]
    fn node_level_requires_at_least_one_record() {
        let m = IndicationMessage::NodeLevel { records: vec![] };
        assert!(encode_indication_message(&m).is_err());
    }

    #[test]
    fn duplicate_ue_id_rejected() {
        let report = UeReport {
            ue_id: "ue0".into(),
            records: vec![MeasRecord {
                values: vec![MeasValue::Int(1)],
            }],
        };
        let m = IndicationMessage::PerUe {
            ue_reports: vec![report.clone(), report],
        };
        assert!(encode_indication_message(&m).is_err());
    }

    #[test]
    fn truncated_message_reports_truncation() {
        let m = IndicationMessage::PerUe {
            ue_reports: vec![UeReport {
                ue_id: "ue0".into(),
                records: vec![MeasRecord {
                    values: vec![MeasValue::Int(7)],
                }],
            }],
        };
        let mut octets = encode_indication_message(&m).unwrap();
        octets.truncate(octets.len() - 2);
        assert!(matches!(
            decode_indication_message(&octets),
            Err(CodecError::Truncated { .. })
        ));
    }

    #[test]
    fn summary_invariant_under_round_trip() {
        let d = KpmRanFunctionDefinition::reference("fn");
        let octets = encode_ran_function_definition(&d).unwrap();
        let back = decode_ran_function_definition(&octets).unwrap();
        assert_eq!(
            function_definition_summary(&back),
            function_definition_summary(&d)
        );
    }

    #[test]
    fn byte_inverse_on_valid_encodings() {
        let d = KpmRanFunctionDefinition::reference("fn");
        let octets = encode_ran_function_definition(&d).unwrap();
        let re = encode_ran_function_definition(&decode_ran_function_definition(&octets).unwrap())
            .unwrap();
        assert_eq!(re, octets);
    }
}
