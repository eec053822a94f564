//! Trace synthesis profiles.
//!
//! Per-bin byte counts are rounded up to whole packets
//! (`bytes = ceil(target/payload) * payload`), so the PDCP overhead law
//! `measured/app - 1 == h/payload` holds exactly on every generated bin
//! while the app-layer rate stays within one packet of the nominal
//! profile value.

use e2stack::nodesim::{TraceRow, TrafficTrace};

use crate::CliError;

/// Per-second app-layer rates (Mbps) of the bundled `fig5-dl` profile, a
/// downlink reference series from an over-the-air run.
pub const FIG5_DL_APP_MBPS: [f64; 20] = [
    277.0, 241.0, 325.0, 493.0, 482.0, 514.0, 524.0, 514.0, 440.0, 535.0, 535.0, 566.0, 556.0,
    556.0, 377.0, 409.0, 524.0, 482.0, 524.0, 451.0,
];

/// Per-second app-layer rates (Mbps) of the bundled `fig6-ul` profile, an
/// uplink reference series capped around 10 Mbps.
pub const FIG6_UL_APP_MBPS: [f64; 19] = [
    9.5, 10.8, 10.7, 9.34, 10.3, 10.0, 9.54, 10.8, 9.74, 9.63, 10.3, 9.58, 10.1, 9.29, 10.7, 10.0,
    10.1, 10.5, 9.85,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Const,
    Fig5Dl,
    Fig6Ul,
}

impl std::str::FromStr for Profile {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "const" => Ok(Profile::Const),
            "fig5-dl" => Ok(Profile::Fig5Dl),
            "fig6-ul" => Ok(Profile::Fig6Ul),
            other => Err(CliError::Config(format!(
                "unknown profile {other:?} (expected const, fig5-dl, or fig6-ul)"
            ))),
        }
    }
}

/// Whole packets covering `target_bytes`.
fn quantize(target_bytes: f64, payload_bytes: u64) -> (u64, u64) {
    let pkts = (target_bytes / payload_bytes as f64).ceil() as u64;
    (pkts * payload_bytes, pkts)
}

fn bin_row(t_ms: u64, mbps: f64, payload_bytes: u64, uplink: bool) -> TraceRow {
    let target_bytes = mbps * 1e6 / 8.0;
    let (bytes, pkts) = quantize(target_bytes, payload_bytes);
    let prb = bytes.div_ceil(3000);
    let (dl_app_bytes, dl_pkts, prb_dl) = if uplink {
        (0, 0, 0)
    } else {
        (bytes, pkts, prb)
    };
    let (ul_app_bytes, ul_pkts, prb_ul) = if uplink {
        (bytes, pkts, prb)
    } else {
        (0, 0, 0)
    };
    TraceRow {
        t_ms,
        interval_ms: 1000,
        ue_id: "ue0".into(),
        dl_app_bytes,
        ul_app_bytes,
        dl_pkts,
        ul_pkts,
        prb_dl,
        prb_ul,
        rlc_delay_dl_ms: 8.0,
    }
}

/// Synthesizes a trace of `duration_s` one-second bins. `rate_mbps`
/// drives the `const` profile; the `fig5-dl` and `fig6-ul` profiles take
/// their per-bin rates from the bundled series (cycled past their
/// length) and ignore `rate_mbps`.
pub fn gen_trace(
    profile: Profile,
    duration_s: u64,
    rate_mbps: f64,
    payload_bytes: u64,
) -> Result<TrafficTrace, CliError> {
    if payload_bytes == 0 {
        return Err(CliError::Config("payload_bytes must be positive".into()));
    }
    if profile == Profile::Const && rate_mbps <= 0.0 {
        return Err(CliError::Config("rate_mbps must be positive".into()));
    }
    let rows = (0..duration_s)
        .map(|i| match profile {
            Profile::Const => bin_row(i * 1000, rate_mbps, payload_bytes, false),
            Profile::Fig5Dl => bin_row(
                i * 1000,
                FIG5_DL_APP_MBPS[i as usize % FIG5_DL_APP_MBPS.len()],
                payload_bytes,
                false,
            ),
            Profile::Fig6Ul => bin_row(
                i * 1000,
                FIG6_UL_APP_MBPS[i as usize % FIG6_UL_APP_MBPS.len()],
                payload_bytes,
                true,
            ),
        })
        .collect();
    TrafficTrace::from_rows(rows).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use e2stack::nodesim::{pdcp_bytes, OverheadModel};

    #[test]
    fn overhead_law_exact_on_every_bin() {
        let model = OverheadModel {
            header_overhead_bytes: 43,
        };
        for (profile, payload) in [
            (Profile::Fig5Dl, 1400),
            (Profile::Const, 380),
            (Profile::Fig6Ul, 380),
        ] {
            let trace = gen_trace(profile, 20, 10.0, payload).unwrap();
            for row in trace.rows() {
                let (bytes, pkts) = if row.dl_app_bytes > 0 {
                    (row.dl_app_bytes, row.dl_pkts)
                } else {
                    (row.ul_app_bytes, row.ul_pkts)
                };
                assert_eq!(
                    pkts,
                    bytes.div_ceil(payload),
                    "packets = ceil(bytes/payload)"
                );
                let rel = pdcp_bytes(bytes, pkts, &model) as f64 / bytes as f64 - 1.0;
                assert!((rel - 43.0 / payload as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fig5_profile_tracks_the_series() {
        let trace = gen_trace(Profile::Fig5Dl, 20, 0.0, 1400).unwrap();
        assert_eq!(trace.rows().len(), 20);
        for (row, &mbps) in trace.rows().iter().zip(&FIG5_DL_APP_MBPS) {
            let app_mbps = row.dl_app_bytes as f64 * 8.0 / 1e6;
            // within one packet of the nominal value
            assert!((app_mbps - mbps).abs() <= 1400.0 * 8.0 / 1e6);
            assert!(app_mbps >= mbps);
        }
    }

    #[test]
    fn zero_duration_gives_empty_trace() {
        let trace = gen_trace(Profile::Const, 0, 10.0, 380).unwrap();
        assert!(trace.rows().is_empty());
        assert_eq!(trace.duration_ms(), 0);
    }

    #[test]
    fn invalid_profile_name_rejected() {
        assert!("fig7-dl".parse::<Profile>().is_err());
        assert_eq!("fig5-dl".parse::<Profile>().unwrap(), Profile::Fig5Dl);
    }
}
