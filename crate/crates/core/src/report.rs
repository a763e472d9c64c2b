//! CSV output of sweep and simulation reports.

use std::io::Write;

use crate::sim::{ReportRow, ThroughputReport};

pub const CSV_COLUMNS: [&str; 10] = [
    "alpha",
    "scheme",
    "primary_rate_mean",
    "primary_rate_ci95",
    "secondary_sum_rate_mean",
    "secondary_sum_rate_ci95",
    "e_h1_mean_j_per_hz",
    "e_h2_mean_j_per_hz",
    "p_p_mean_w_per_hz",
    "pt_alone_rate_mean",
];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report has no rows")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Shortest round-trip scientific notation; independent of locale.
fn num(x: f64) -> String {
    format!("{x:e}")
}

fn record(row: &ReportRow) -> [String; 10] {
    [
        num(row.alpha),
        row.kind.label().to_string(),
        num(row.primary_rate.mean),
        num(row.primary_rate.ci95),
        num(row.secondary_sum_rate.mean),
        num(row.secondary_sum_rate.ci95),
        num(row.e_h1_mean),
        num(row.e_h2_mean),
        num(row.p_p_mean),
        num(row.pt_alone_rate_mean),
    ]
}

/// Writes a header line and one line per row, in report order, `\n`-terminated.
pub fn emit_csv<W: Write>(report: &ThroughputReport, sink: W) -> Result<(), ReportError> {
    if report.rows.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    writer.write_record(CSV_COLUMNS)?;
    for row in &report.rows {
        writer.write_record(record(row))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::SchemeId;
    use crate::sim::{Estimate, RowKind};

    fn row(alpha: f64, kind: RowKind) -> ReportRow {
        ReportRow {
            alpha,
            kind,
            primary_rate: Estimate {
                mean: 2.5,
                ci95: 0.01,
            },
            secondary_sum_rate: Estimate {
                mean: 0.125,
                ci95: 0.0,
            },
            e_h1_mean: 4e-11,
            e_h2_mean: 1.5e-11,
            p_p_mean: 1e-7,
            pt_alone_rate_mean: 2.2,
        }
    }

    fn render(report: &ThroughputReport) -> String {
        let mut buf = Vec::new();
        emit_csv(report, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_cell_has_two_lines() {
        let report = ThroughputReport {
            rows: vec![row(0.5, RowKind::Scheme(SchemeId::Third))],
        };
        let text = render(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(
            lines[1],
            "5e-1,third,2.5e0,1e-2,1.25e-1,0e0,4e-11,1.5e-11,1e-7,2.2e0"
        );
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn output_is_reproducible() {
        let report = ThroughputReport {
            rows: vec![
                row(0.05, RowKind::Scheme(SchemeId::First)),
                row(0.05, RowKind::PtAlone),
            ],
        };
        assert_eq!(render(&report), render(&report));
    }

    #[test]
    fn empty_report_rejected() {
        let mut buf = Vec::new();
        assert!(matches!(
            emit_csv(&ThroughputReport::default(), &mut buf),
            Err(ReportError::Empty)
        ));
    }

    #[test]
    fn values_round_trip() {
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn write_failure_is_reported() {
        struct Broken;
        impl Write for Broken {
            fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("disk full"))
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let report = ThroughputReport {
            rows: vec![row(0.5, RowKind::PtAlone)],
        };
        assert!(emit_csv(&report, Broken).is_err());
    }
}
