use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{best_osr_per_scan, osr, rcs, spl, sr, EpisodeResult, MetricsError, SplitLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub sr: f64,
    pub spl: f64,
    pub osr: f64,
    pub episodes: usize,
}

impl SplitMetrics {
    pub fn from_results(results: &[EpisodeResult]) -> Result<Self, MetricsError> {
        Ok(Self {
            sr: sr(results)?,
            spl: spl(results)?,
            osr: osr(results)?,
            episodes: results.len(),
        })
    }
}

/// RCS per metric; `None` where seen and unseen are both zero or a split is
/// missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RcsRow {
    pub sr: Option<f64>,
    pub osr: Option<f64>,
    pub spl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOsr {
    pub scan_id: String,
    pub osr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub seen: Option<SplitMetrics>,
    pub unseen: Option<SplitMetrics>,
    pub rcs: RcsRow,
    pub best_osr_per_scan: BTreeMap<String, f64>,
    pub best_osr: Option<BestOsr>,
}

impl MetricsReport {
    /// Groups results by split label. At least one split must be present.
    pub fn from_results(label: &str, results: &[EpisodeResult]) -> Result<Self, MetricsError> {
        if results.is_empty() {
            return Err(MetricsError::Empty);
        }
        let group = |wanted: SplitLabel| -> Result<Option<SplitMetrics>, MetricsError> {
            let subset: Vec<EpisodeResult> = results
                .iter()
                .filter(|r| r.split_label == wanted)
                .cloned()
                .collect();
            if subset.is_empty() {
                Ok(None)
            } else {
                SplitMetrics::from_results(&subset).map(Some)
            }
        };
        let seen = group(SplitLabel::Seen)?;
        let unseen = group(SplitLabel::Unseen)?;
        let per_scan = best_osr_per_scan(results);
        let best_osr = per_scan
            .iter()
            .fold(None::<BestOsr>, |best, (scan, &value)| match best {
                Some(b) if b.osr >= value => Some(b),
                _ => Some(BestOsr {
                    scan_id: scan.clone(),
                    osr: value,
                }),
            });
        Ok(Self {
            label: label.to_string(),
            rcs: rcs_row(seen.as_ref(), unseen.as_ref()),
            seen,
            unseen,
            best_osr_per_scan: per_scan,
            best_osr,
        })
    }
}

fn rcs_row(seen: Option<&SplitMetrics>, unseen: Option<&SplitMetrics>) -> RcsRow {
    match (seen, unseen) {
        (Some(s), Some(u)) => RcsRow {
            sr: rcs(s.sr, u.sr).ok(),
            osr: rcs(s.osr, u.osr).ok(),
            spl: rcs(s.spl, u.spl).ok(),
        },
        _ => RcsRow::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
    TextTable,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text-table" | "text" => Ok(Self::TextTable),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

pub fn render_report(report: &MetricsReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::TextTable => render_table(report),
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn render_csv(report: &MetricsReport) -> String {
    let mut out = String::from("row,episodes,sr,osr,spl\n");
    for (name, split) in [("seen", &report.seen), ("unseen", &report.unseen)] {
        if let Some(m) = split {
            let _ = writeln!(out, "{name},{},{},{},{}", m.episodes, m.sr, m.osr, m.spl);
        }
    }
    let r = &report.rcs;
    let _ = writeln!(out, "rcs,,{},{},{}", opt(r.sr), opt(r.osr), opt(r.spl));
    out
}

fn cell(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(|| "-".to_string(), |v| format!("{v:.decimals$}"))
}

fn render_table(report: &MetricsReport) -> String {
    let seen = report.seen.as_ref();
    let unseen = report.unseen.as_ref();
    let columns = [
        ("SR Seen", cell(seen.map(|m| m.sr), 2)),
        ("SR Unseen", cell(unseen.map(|m| m.sr), 2)),
        ("RCS", cell(report.rcs.sr, 2)),
        ("OSR Seen", cell(seen.map(|m| m.osr), 2)),
        ("OSR Unseen", cell(unseen.map(|m| m.osr), 2)),
        ("RCS", cell(report.rcs.osr, 2)),
        ("SPL Seen", cell(seen.map(|m| m.spl * 100.0), 2)),
        ("SPL Unseen", cell(unseen.map(|m| m.spl * 100.0), 2)),
        ("RCS", cell(report.rcs.spl, 2)),
    ];
    let label_width = report.label.len().max("Approach".len());
    let mut header = format!("{:<label_width$}", "Approach");
    let mut row = format!("{:<label_width$}", report.label);
    for (title, value) in &columns {
        let width = title.len().max(value.len());
        let _ = write!(header, " | {title:>width$}");
        let _ = write!(row, " | {value:>width$}");
    }
    let mut out = format!("{header}\n{}\n{row}\n", "-".repeat(header.len()));
    let episodes = |m: Option<&SplitMetrics>| m.map_or(0, |m| m.episodes);
    let _ = writeln!(
        out,
        "episodes: seen {}, unseen {}",
        episodes(seen),
        episodes(unseen)
    );
    if let Some(best) = &report.best_osr {
        let _ = writeln!(out, "best OSR: {:.2} ({})", best.osr, best.scan_id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::result;

    fn batch() -> Vec<EpisodeResult> {
        let mut rs = vec![
            result("s0", true, true, 10.0, 10.0),
            result("s1", false, true, 12.0, 8.0),
            result("u0", true, true, 20.0, 10.0),
            result("u1", false, false, 5.0, 4.0),
            result("u2", false, true, 6.0, 6.0),
            result("u3", false, false, 6.0, 6.0),
        ];
        for r in &mut rs[..2] {
            r.split_label = SplitLabel::Seen;
            r.scan_id = "house-a".into();
        }
        rs
    }

    #[test]
    fn groups_by_split() {
        let report = MetricsReport::from_results("clip-nav", &batch()).unwrap();
        let seen = report.seen.as_ref().unwrap();
        let unseen = report.unseen.as_ref().unwrap();
        assert_eq!(
            (seen.sr, seen.osr, seen.spl, seen.episodes),
            (50.0, 100.0, 0.5, 2)
        );
        assert_eq!(
            (unseen.sr, unseen.osr, unseen.spl, unseen.episodes),
            (25.0, 50.0, 0.125, 4)
        );
        assert_eq!(report.rcs.sr, Some(50.0));
        assert_eq!(report.rcs.osr, Some(50.0));
        assert_eq!(report.rcs.spl, Some(75.0));
        assert_eq!(
            report.best_osr,
            Some(BestOsr {
                scan_id: "house-a".into(),
                osr: 100.0
            })
        );
    }

    #[test]
    fn identical_splits_give_zero_rcs() {
        let mut rs = batch();
        let mirrored: Vec<_> = rs
            .iter()
            .map(|r| EpisodeResult {
                episode_id: format!("{}-seen", r.episode_id),
                split_label: SplitLabel::Seen,
                ..r.clone()
            })
            .collect();
        rs.iter_mut()
            .for_each(|r| r.split_label = SplitLabel::Unseen);
        rs.extend(mirrored);
        let report = MetricsReport::from_results("x", &rs).unwrap();
        assert_eq!(report.rcs.sr, Some(0.0));
        assert_eq!(report.rcs.osr, Some(0.0));
        assert_eq!(report.rcs.spl, Some(0.0));
    }

    #[test]
    fn zero_metrics_leave_rcs_undefined() {
        let mut rs = vec![
            result("a", false, false, 1.0, 1.0),
            result("b", false, false, 1.0, 1.0),
        ];
        rs[0].split_label = SplitLabel::Seen;
        let report = MetricsReport::from_results("x", &rs).unwrap();
        assert_eq!(report.rcs, RcsRow::default());
        assert!(render_report(&report, ReportFormat::TextTable).contains(" - "));
    }

    #[test]
    fn json_round_trip() {
        let report = MetricsReport::from_results("seq-clip-nav", &batch()).unwrap();
        let text = render_report(&report, ReportFormat::Json);
        let back: MetricsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn csv_has_split_and_rcs_rows() {
        let report = MetricsReport::from_results("x", &batch()).unwrap();
        let csv = render_report(&report, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1 + 2 + 1);
        assert_eq!(csv.lines().nth(3).unwrap(), "rcs,,50,50,75");
    }

    #[test]
    fn text_table_golden() {
        let report = MetricsReport::from_results("clip-nav", &batch()).unwrap();
        let expected = "\
Approach | SR Seen | SR Unseen |   RCS | OSR Seen | OSR Unseen |   RCS | SPL Seen | SPL Unseen |   RCS
------------------------------------------------------------------------------------------------------
clip-nav |   50.00 |     25.00 | 50.00 |   100.00 |      50.00 | 50.00 |    50.00 |      12.50 | 75.00
episodes: seen 2, unseen 4
best OSR: 100.00 (house-a)
";
        assert_eq!(render_report(&report, ReportFormat::TextTable), expected);
    }

    #[test]
    fn format_names_parse() {
        assert_eq!("json".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert_eq!(
            "text-table".parse::<ReportFormat>().unwrap(),
            ReportFormat::TextTable
        );
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
