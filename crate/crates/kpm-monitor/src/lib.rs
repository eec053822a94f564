//! Command implementations behind the `kpm-monitor` binary: run full
//! scenarios, decode message hex, generate traces, and compare
//! app-layer against KPM-reported throughput.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod orchestrator;
pub mod profiles;
pub mod report;

pub use config::ScenarioConfig;
pub use orchestrator::{run_scenario, RunArtifacts, RunOptions, TurnGate};
pub use profiles::{gen_trace, Profile, FIG5_DL_APP_MBPS, FIG6_UL_APP_MBPS};
pub use report::{ComparisonReport, MbpsRow};

/// Command errors, mapped onto process exit codes: configuration
/// problems exit 2, everything else exits 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("decode: {0}")]
    Decode(String),
    #[error("compare: {0}")]
    Compare(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs the scenario described by the config file and writes `kpm.csv`,
/// `app.csv`, `report.txt`, and `run.log` into the output directory.
pub fn cmd_run(config_path: &Path) -> Result<RunArtifacts, CliError> {
    let config = ScenarioConfig::load(config_path)?;
    let out_dir = config.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Config(format!("out_dir {}: {e}", out_dir.display())))?;

    let artifacts = run_scenario(&RunOptions {
        config,
        delete_at_ms: None,
    })?;

    write_file(
        &out_dir.join("kpm.csv"),
        &report::render_rows(&artifacts.kpm_rows),
    )?;
    write_file(
        &out_dir.join("app.csv"),
        &report::render_rows(&artifacts.app_rows),
    )?;
    if let Some(cmp) = &artifacts.report {
        write_file(&out_dir.join("report.txt"), &cmp.render())?;
    }
    let mut log_text: String = artifacts
        .log_lines
        .iter()
        .map(|l| format!("{l}\n"))
        .collect();
    log_text.push_str(&format!(
        "indications: {}\n",
        artifacts.indications_received
    ));
    write_file(&out_dir.join("run.log"), &log_text)?;

    println!(
        "scenario complete: {} indications, artifacts in {}",
        artifacts.indications_received,
        out_dir.display()
    );
    if let Some(cmp) = &artifacts.report {
        println!(
            "mean_rel_offset: {:+.6} ({} bins)",
            cmp.mean_rel_offset,
            cmp.bins.len()
        );
    }
    Ok(artifacts)
}

/// Payload kinds `decode` understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeKind {
    EventTrigger,
    Action,
    RanFDef,
    IndHeader,
    IndMessage,
    E2apFrame,
}

impl std::str::FromStr for DecodeKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "event-trigger" => Ok(DecodeKind::EventTrigger),
            "action" => Ok(DecodeKind::Action),
            "ranfdef" => Ok(DecodeKind::RanFDef),
            "ind-header" => Ok(DecodeKind::IndHeader),
            "ind-message" => Ok(DecodeKind::IndMessage),
            "e2ap-frame" => Ok(DecodeKind::E2apFrame),
            other => Err(CliError::Config(format!(
                "unknown --type {other:?} (expected event-trigger, action, ranfdef, \
                 ind-header, ind-message, or e2ap-frame)"
            ))),
        }
    }
}

fn fmt_value(v: &e2stack::kpm::MeasValue) -> String {
    match v {
        e2stack::kpm::MeasValue::Int(x) => x.to_string(),
        e2stack::kpm::MeasValue::Real(x) => format!("{x}"),
        e2stack::kpm::MeasValue::NoValue => "no_value".to_string(),
    }
}

/// Decodes `hex` as `kind` and returns the printable field listing.
/// With `verify`, the decoded value is re-encoded and must reproduce the
/// input bytes exactly.
pub fn cmd_decode(kind: DecodeKind, hex: &str, verify: bool) -> Result<String, CliError> {
    use e2stack::kpm;
    let octets = e2stack::from_hex(hex).map_err(|e| CliError::Decode(e.to_string()))?;
    let bad = |e: &dyn std::fmt::Display| CliError::Decode(e.to_string());

    let (text, reencoded): (String, Vec<u8>) = match kind {
        DecodeKind::EventTrigger => {
            let t = kpm::decode_event_trigger(&octets).map_err(|e| bad(&e))?;
            (
                format!("reporting_period_ms: {}", t.reporting_period_ms),
                kpm::encode_event_trigger(&t).map_err(|e| bad(&e))?,
            )
        }
        DecodeKind::Action => {
            let a = kpm::decode_action_definition(&octets).map_err(|e| bad(&e))?;
            let metrics: Vec<&str> = a.metrics.iter().map(|m| m.as_str()).collect();
            (
                format!(
                    "style_id: {}\nmetrics: [{}]\ngranularity_period_ms: {}",
                    a.style_id,
                    metrics.join(", "),
                    a.granularity_period_ms
                ),
                kpm::encode_action_definition(&a).map_err(|e| bad(&e))?,
            )
        }
        DecodeKind::RanFDef => {
            let d = kpm::decode_ran_function_definition(&octets).map_err(|e| bad(&e))?;
            let mut text = format!("function_name: {}", d.function_name);
            for (style, metrics) in kpm::function_definition_summary(&d) {
                let names: Vec<String> = metrics.iter().map(|m| format!("'{m}'")).collect();
                text.push_str(&format!("\nstyle {style}: [{}]", names.join(", ")));
            }
            (
                text,
                kpm::encode_ran_function_definition(&d).map_err(|e| bad(&e))?,
            )
        }
        DecodeKind::IndHeader => {
            let h = kpm::decode_indication_header(&octets).map_err(|e| bad(&e))?;
            (
                format!(
                    "collection_start_time_ms: {}\nsender: {}",
                    h.collection_start_time_ms, h.sender
                ),
                kpm::encode_indication_header(&h).map_err(|e| bad(&e))?,
            )
        }
        DecodeKind::IndMessage => {
            let m = kpm::decode_indication_message(&octets).map_err(|e| bad(&e))?;
            let text = match &m {
                kpm::IndicationMessage::NodeLevel { records } => {
                    let mut text = format!("node-level report, {} records", records.len());
                    for (i, r) in records.iter().enumerate() {
                        let values: Vec<String> = r.values.iter().map(fmt_value).collect();
                        text.push_str(&format!("\nrecord {i}: [{}]", values.join(", ")));
                    }
                    text
                }
                kpm::IndicationMessage::PerUe { ue_reports } => {
                    let mut text = format!("per-UE report, {} UEs", ue_reports.len());
                    for report in ue_reports {
                        text.push_str(&format!("\nue {}:", report.ue_id));
                        for (i, r) in report.records.iter().enumerate() {
                            let values: Vec<String> = r.values.iter().map(fmt_value).collect();
                            text.push_str(&format!("\n  record {i}: [{}]", values.join(", ")));
                        }
                    }
                    text
                }
            };
            (
                text,
                kpm::encode_indication_message(&m).map_err(|e| bad(&e))?,
            )
        }
        DecodeKind::E2apFrame => {
            let (msg, consumed) = e2stack::e2ap::parse(&octets).map_err(|e| bad(&e))?;
            if consumed != octets.len() {
                return Err(CliError::Decode(format!(
                    "{} trailing octets after the frame",
                    octets.len() - consumed
                )));
            }
            (
                format!("{msg:#?}"),
                e2stack::e2ap::frame(&msg).map_err(|e| bad(&e))?,
            )
        }
    };

    if verify {
        if reencoded != octets {
            return Err(CliError::Decode(format!(
                "re-encode mismatch: got {}, expected {}",
                e2stack::to_hex(&reencoded),
                e2stack::to_hex(&octets)
            )));
        }
        return Ok(format!("{text}\nverified: re-encoded bytes identical"));
    }
    Ok(text)
}

/// Compares two `t_ms,ue_id,mbps` CSVs and returns the report.
pub fn cmd_compare(app_csv: &Path, kpm_csv: &Path) -> Result<ComparisonReport, CliError> {
    let app = report::load_rows(app_csv)?;
    let kpm = report::load_rows(kpm_csv)?;
    ComparisonReport::compute(&app, &kpm)
}

/// Generates a trace CSV with the given profile.
pub fn cmd_gen_trace(
    profile: Profile,
    duration_s: u64,
    rate_mbps: f64,
    payload_bytes: u64,
    out: &Path,
) -> Result<(), CliError> {
    let trace = gen_trace(profile, duration_s, rate_mbps, payload_bytes)?;
    trace
        .write_csv(out)
        .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    println!(
        "trace written: {} rows to {}",
        trace.rows().len(),
        out.display()
    );
    Ok(())
}

/// Scratch directory helper for tests and examples.
pub fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kpm-monitor-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}
