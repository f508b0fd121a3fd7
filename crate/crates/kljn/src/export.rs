//! File renderings: CSV tables and JSON lines.
//!
//! Headers and field names are part of the interface. Floats go through
//! Rust's shortest round-trip formatter, so a re-run with the same seed
//! reproduces every output byte for byte.

use crate::circuit::WireRealization;
use crate::exchange::BepResult;
use crate::noise::{GaussianSeries, PsdReport};
use std::io::{self, Write};

/// `t_s,value` rows of one series.
pub fn write_series_csv<W: Write>(w: &mut W, series: &GaussianSeries) -> io::Result<()> {
    writeln!(w, "t_s,value")?;
    for (i, v) in series.samples.iter().enumerate() {
        writeln!(w, "{},{}", i as f64 * series.sample_period_s, v)?;
    }
    Ok(())
}

/// `freq_hz,power` rows of the averaged one-sided periodogram.
pub fn write_psd_csv<W: Write>(w: &mut W, report: &PsdReport) -> io::Result<()> {
    writeln!(w, "freq_hz,power")?;
    for (f, p) in report.freq_hz.iter().zip(&report.power) {
        writeln!(w, "{f},{p}")?;
    }
    Ok(())
}

/// `t_s,u_w_v,i_w_a` rows of one wire realization.
pub fn write_wire_csv<W: Write>(w: &mut W, wire: &WireRealization) -> io::Result<()> {
    writeln!(w, "t_s,u_w_v,i_w_a")?;
    for (i, (u, c)) in wire.u_w.iter().zip(&wire.i_w).enumerate() {
        writeln!(w, "{},{},{}", i as f64 * wire.sample_period_s, u, c)?;
    }
    Ok(())
}

/// Labeled columns over a shared time axis, for multi-trace realizations.
pub fn write_traces_csv<W: Write>(
    w: &mut W,
    sample_period_s: f64,
    traces: &[(&str, &[f64])],
) -> io::Result<()> {
    assert!(!traces.is_empty(), "no traces");
    let len = traces[0].1.len();
    assert!(
        traces.iter().all(|(_, t)| t.len() == len),
        "trace lengths differ"
    );
    write!(w, "t_s")?;
    for (label, _) in traces {
        write!(w, ",{label}")?;
    }
    writeln!(w)?;
    for i in 0..len {
        write!(w, "{}", i as f64 * sample_period_s)?;
        for (_, t) in traces {
            write!(w, ",{}", t[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// One JSON object per line, one line per bit exchange period.
pub fn write_bep_jsonl<W: Write>(w: &mut W, results: &[BepResult]) -> io::Result<()> {
    for r in results {
        serde_json::to_writer(&mut *w, r).map_err(io::Error::other)?;
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::{run_bep, BepConfig};

    #[test]
    fn series_csv_shape() {
        let series = GaussianSeries {
            samples: vec![1.5, -0.25],
            sample_period_s: 1e-3,
            bandwidth_hz: 500.0,
        };
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &series).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t_s,value\n0,1.5\n0.001,-0.25\n"
        );
    }

    #[test]
    fn wire_csv_shape() {
        let wire = WireRealization {
            u_w: vec![2.0],
            i_w: vec![-0.5],
            sample_period_s: 1e-3,
        };
        let mut buf = Vec::new();
        write_wire_csv(&mut buf, &wire).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_s,u_w_v,i_w_a\n0,2,-0.5\n");
    }

    #[test]
    fn traces_csv_shape() {
        let a = [1.0, 2.0];
        let b = [3.0, 4.0];
        let mut buf = Vec::new();
        write_traces_csv(&mut buf, 0.5, &[("u_a_v", &a), ("u_b_v", &b)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t_s,u_a_v,u_b_v\n0,1,3\n0.5,2,4\n"
        );
    }

    #[test]
    fn jsonl_is_one_object_per_line() {
        let config = BepConfig::default();
        let results: Vec<_> = (0..3).map(|i| run_bep(&config, i).unwrap()).collect();
        let mut buf = Vec::new();
        write_bep_jsonl(&mut buf, &results).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), 3);
        for line in lines {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("measured_ms").is_some());
        }
    }
}
