//! Timing summaries: per-window CSV, per-configuration means, and a
//! plain-text table.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::harness::TimingRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub time_windows: usize,
    pub input_len: usize,
    pub windows: usize,
    pub mean_encryption_s: f64,
    pub mean_eval_s: f64,
    pub mean_rtt_s: f64,
}

pub fn summarize(time_windows: usize, input_len: usize, records: &[TimingRecord]) -> BenchRow {
    let n = records.len().max(1) as f64;
    let mean = |f: fn(&TimingRecord) -> u64| -> f64 {
        records.iter().map(|r| f(r) as f64).sum::<f64>() / n / 1e6
    };
    BenchRow {
        time_windows,
        input_len,
        windows: records.len(),
        mean_encryption_s: mean(|r| r.encryption_us),
        mean_eval_s: mean(|r| r.eval_us),
        mean_rtt_s: mean(|r| r.rtt_us),
    }
}

/// Per-window timing CSV.
pub fn write_timing_csv(mut out: impl Write, records: &[TimingRecord]) -> Result<()> {
    writeln!(
        out,
        "window_id,encryption_us,transport_us,eval_us,control_return_us,rtt_us"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.window_id, r.encryption_us, r.transport_us, r.eval_us, r.control_return_us, r.rtt_us
        )?;
    }
    Ok(())
}

/// Summary CSV with one row per configuration, mirroring the round-trip
/// table layout: encryption, model evaluation, and round-trip columns.
pub fn write_bench_csv(mut out: impl Write, rows: &[BenchRow]) -> Result<()> {
    writeln!(
        out,
        "time_windows,input_shape,encryption_time_s,model_evaluation_time_s,round_trip_time_s"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},({},1),{:.6},{:.6},{:.6}",
            row.time_windows, row.input_len, row.mean_encryption_s, row.mean_eval_s, row.mean_rtt_s
        )?;
    }
    Ok(())
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut s = String::new();
    s.push_str(
        "time windows | input shape | encryption time | model evaluation time | round trip time\n",
    );
    s.push_str(
        "-------------+-------------+-----------------+-----------------------+----------------\n",
    );
    for row in rows {
        s.push_str(&format!(
            "{:>12} | {:>11} | {:>14.4}s | {:>20.4}s | {:>14.4}s\n",
            row.time_windows,
            format!("({},1)", row.input_len),
            row.mean_encryption_s,
            row.mean_eval_s,
            row.mean_rtt_s
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64, enc: u64, eval: u64, rtt: u64) -> TimingRecord {
        TimingRecord {
            window_id: id,
            encryption_us: enc,
            transport_us: 10,
            eval_us: eval,
            control_return_us: 20,
            rtt_us: rtt,
        }
    }

    #[test]
    fn summaries_average_in_seconds() {
        let rows = [
            record(0, 1_000_000, 2_000_000, 4_000_000),
            record(1, 3_000_000, 4_000_000, 8_000_000),
        ];
        let row = summarize(10, 50, &rows);
        assert_eq!(row.mean_encryption_s, 2.0);
        assert_eq!(row.mean_eval_s, 3.0);
        assert_eq!(row.mean_rtt_s, 6.0);
        assert_eq!(row.windows, 2);
    }

    #[test]
    fn csv_shapes_are_stable() {
        let mut buf = Vec::new();
        write_timing_csv(&mut buf, &[record(0, 1, 2, 3)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("window_id,encryption_us"));
        assert!(text.contains("0,1,10,2,20,3"));

        let mut buf = Vec::new();
        write_bench_csv(&mut buf, &[summarize(5, 25, &[record(0, 1, 2, 3)])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("time_windows,input_shape,encryption_time_s"));
        assert!(text.contains("5,(25,1)"));
    }
}
