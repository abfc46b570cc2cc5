// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON-lines records and summary CSV tables.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::studies::{CriticalValueRow, CvStatistic, ExperimentResult, RuntimeRow};

/// One JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// `test,rejections,accurate,replicates,rejection_rate,mean_seconds`.
pub fn write_summary_csv<W: Write>(w: W, results: &[ExperimentResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in results {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CvCsvRow {
    statistic: String,
    n0: usize,
    n1: usize,
    analytic_base: f64,
    analytic_skew: f64,
    permutation: f64,
    n_perm: usize,
}

pub fn statistic_label(s: CvStatistic) -> String {
    match s {
        CvStatistic::Zd => "Z_D".into(),
        CvStatistic::Zw(r) => format!("Z_W{r}"),
    }
}

pub fn write_critical_value_csv<W: Write>(w: W, rows: &[CriticalValueRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(CvCsvRow {
            statistic: statistic_label(r.statistic),
            n0: r.n0,
            n1: r.n1,
            analytic_base: r.analytic_base,
            analytic_skew: r.analytic_skew,
            permutation: r.permutation,
            n_perm: r.n_perm,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_runtime_csv<W: Write>(w: W, rows: &[RuntimeRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::studies::TestKind;

    #[test]
    fn summary_csv_layout() {
        let rows = [ExperimentResult {
            test: TestKind::Fgkcp2Simes,
            replicates: 100,
            rejections: 97,
            accurate: 96,
            rejection_rate: 0.97,
            mean_seconds: 0.5,
        }];
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "test,replicates,rejections,accurate,rejection_rate,mean_seconds\nfgkcp2_simes,100,97,96,0.97,0.5\n"
        );
    }

    #[test]
    fn jsonl_has_one_line_per_record() {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[1, 2, 3]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1\n2\n3\n");
    }

    #[test]
    fn cv_labels() {
        assert_eq!(statistic_label(CvStatistic::Zw(1.2)), "Z_W1.2");
        assert_eq!(statistic_label(CvStatistic::Zd), "Z_D");
    }
}
