//! Throughput CSV rows and the app-vs-KPM comparison report.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

/// One `t_ms,ue_id,mbps` row.
#[derive(Debug, Clone, PartialEq)]
pub struct MbpsRow {
    pub t_ms: u64,
    pub ue_id: String,
    pub mbps: f64,
}

pub const MBPS_HEADER: &str = "t_ms,ue_id,mbps";

/// Traffic direction a metric set reports on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Downlink,
    Uplink,
}

/// Direction implied by the metric list: DL wins when both sides are
/// present; `None` when no throughput or volume metric exists.
pub fn direction_of(metrics: &[String]) -> Option<Direction> {
    let has = |name: &str| metrics.iter().any(|m| m == name);
    if has("DRB.UEThpDl") || has("DRB.PdcpSduVolumeDL") {
        Some(Direction::Downlink)
    } else if has("DRB.UEThpUl") || has("DRB.PdcpSduVolumeUL") {
        Some(Direction::Uplink)
    } else {
        None
    }
}

pub fn render_rows(rows: &[MbpsRow]) -> String {
    let mut out = String::from(MBPS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{},{},{:.6}\n", row.t_ms, row.ue_id, row.mbps));
    }
    out
}

pub fn parse_rows(text: &str) -> Result<Vec<MbpsRow>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim_end();
    if header != MBPS_HEADER {
        return Err(CliError::Compare(format!(
            "bad header {header:?}, expected {MBPS_HEADER:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(CliError::Compare(format!(
                "line {}: bad row {line:?}",
                i + 2
            )));
        }
        rows.push(MbpsRow {
            t_ms: parts[0]
                .parse()
                .map_err(|_| CliError::Compare(format!("line {}: bad t_ms", i + 2)))?,
            ue_id: parts[1].to_string(),
            mbps: parts[2]
                .parse()
                .map_err(|_| CliError::Compare(format!("line {}: bad mbps", i + 2)))?,
        });
    }
    Ok(rows)
}

pub fn load_rows(path: &Path) -> Result<Vec<MbpsRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Compare(format!("{}: {e}", path.display())))?;
    parse_rows(&text)
}

/// One comparison bin; `rel_offset = kpm/app - 1`, absent when app == 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonBin {
    pub t_ms: u64,
    pub app_mbps: f64,
    pub kpm_mbps: f64,
    pub rel_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub bins: Vec<ComparisonBin>,
    pub mean_rel_offset: f64,
    pub max_abs_offset: f64,
}

impl ComparisonReport {
    /// Compares two row sets, first aggregating Mbps across UEs per bin.
    /// The bin timestamps of both sides must coincide exactly.
    pub fn compute(app: &[MbpsRow], kpm: &[MbpsRow]) -> Result<Self, CliError> {
        let sum_by_bin = |rows: &[MbpsRow]| {
            let mut bins: BTreeMap<u64, f64> = BTreeMap::new();
            for row in rows {
                *bins.entry(row.t_ms).or_default() += row.mbps;
            }
            bins
        };
        let app_bins = sum_by_bin(app);
        let kpm_bins = sum_by_bin(kpm);
        if app_bins.keys().ne(kpm_bins.keys()) {
            return Err(CliError::Compare(format!(
                "misaligned bins: app has {} bins, kpm has {}; timestamps must coincide",
                app_bins.len(),
                kpm_bins.len()
            )));
        }
        if app_bins.is_empty() {
            return Err(CliError::Compare("no bins to compare".into()));
        }
        let bins: Vec<ComparisonBin> = app_bins
            .into_iter()
            .map(|(t_ms, app_mbps)| {
                let kpm_mbps = kpm_bins[&t_ms];
                let rel_offset = (app_mbps > 0.0).then(|| kpm_mbps / app_mbps - 1.0);
                ComparisonBin {
                    t_ms,
                    app_mbps,
                    kpm_mbps,
                    rel_offset,
                }
            })
            .collect();
        let offsets: Vec<f64> = bins.iter().filter_map(|b| b.rel_offset).collect();
        if offsets.is_empty() {
            return Err(CliError::Compare("every bin has zero app traffic".into()));
        }
        let mean_rel_offset = offsets.iter().sum::<f64>() / offsets.len() as f64;
        let max_abs_offset = offsets.iter().fold(0.0f64, |acc, o| acc.max(o.abs()));
        Ok(Self {
            bins,
            mean_rel_offset,
            max_abs_offset,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::from("t_ms,app_mbps,kpm_mbps,rel_offset\n");
        for bin in &self.bins {
            let offset = bin
                .rel_offset
                .map(|o| format!("{o:.6}"))
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                bin.t_ms, bin.app_mbps, bin.kpm_mbps, offset
            ));
        }
        out.push_str(&format!("mean_rel_offset: {:.6}\n", self.mean_rel_offset));
        out.push_str(&format!("max_abs_offset: {:.6}\n", self.max_abs_offset));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[(u64, f64)]) -> Vec<MbpsRow> {
        values
            .iter()
            .map(|&(t_ms, mbps)| MbpsRow {
                t_ms,
                ue_id: "ue0".into(),
                mbps,
            })
            .collect()
    }

    #[test]
    fn identical_series_has_zero_offsets() {
        let a = rows(&[(0, 10.0), (1000, 20.0)]);
        let report = ComparisonReport::compute(&a, &a).unwrap();
        assert_eq!(report.mean_rel_offset, 0.0);
        assert_eq!(report.max_abs_offset, 0.0);
        assert!(report.bins.iter().all(|b| b.rel_offset == Some(0.0)));
    }

    #[test]
    fn mean_is_arithmetic_mean_of_bin_offsets() {
        let app = rows(&[(0, 100.0), (1000, 100.0)]);
        let kpm = rows(&[(0, 110.0), (1000, 90.0)]);
        let report = ComparisonReport::compute(&app, &kpm).unwrap();
        let offsets: Vec<f64> = report.bins.iter().map(|b| b.rel_offset.unwrap()).collect();
        let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
        assert!((report.mean_rel_offset - mean).abs() < 1e-9);
        assert!((report.max_abs_offset - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_app_bins_excluded_from_mean() {
        let app = rows(&[(0, 0.0), (1000, 100.0)]);
        let kpm = rows(&[(0, 5.0), (1000, 103.0)]);
        let report = ComparisonReport::compute(&app, &kpm).unwrap();
        assert_eq!(report.bins[0].rel_offset, None);
        assert!((report.mean_rel_offset - 0.03).abs() < 1e-12);
    }

    #[test]
    fn misaligned_bins_rejected() {
        let app = rows(&[(0, 1.0), (1000, 1.0)]);
        let kpm = rows(&[(0, 1.0), (2000, 1.0)]);
        assert!(matches!(
            ComparisonReport::compute(&app, &kpm),
            Err(CliError::Compare(_))
        ));
    }

    #[test]
    fn multiple_ues_aggregate_per_bin() {
        let mut app = rows(&[(0, 60.0)]);
        app.push(MbpsRow {
            t_ms: 0,
            ue_id: "ue1".into(),
            mbps: 40.0,
        });
        let kpm = rows(&[(0, 103.0)]);
        let report = ComparisonReport::compute(&app, &kpm).unwrap();
        assert!((report.bins[0].app_mbps - 100.0).abs() < 1e-12);
        assert!((report.mean_rel_offset - 0.03).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_six_decimals() {
        let rows = rows(&[(0, 1.23456789), (1000, 2.0)]);
        let text = render_rows(&rows);
        assert!(text.starts_with("t_ms,ue_id,mbps\n0,ue0,1.234568\n"));
        let back = parse_rows(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back[0].mbps - 1.234568).abs() < 1e-9);
        assert!(parse_rows("nope\n1,2,3\n").is_err());
    }

    #[test]
    fn direction_detection() {
        let metrics = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(
            direction_of(&metrics(&["DRB.UEThpDl"])),
            Some(Direction::Downlink)
        );
        assert_eq!(
            direction_of(&metrics(&["DRB.PdcpSduVolumeUL"])),
            Some(Direction::Uplink)
        );
        assert_eq!(direction_of(&metrics(&["RRU.PrbTotDl"])), None);
    }
}
