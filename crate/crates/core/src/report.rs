//! CSV and JSON emitters. Every CSV has a header row and a fixed column
//! order:
//!
//! | file | columns |
//! |------|---------|
//! | iterations | `iter,lb,ub,gap_pct,master_ms,sub_ms,cuts_total` |
//! | trajectory | `stage,service_level` |
//! | histogram | `stage,bin_lo,bin_hi,count` |
//! | weight deltas | `asset,upstream,stage_pair,delta` |
//! | enumeration table | `x,q` (x as a 0/1 string) |
//! | master node log | `node,depth,bound,incumbent` |
//!
//! Infinite values (an open gap) are written as `inf` in CSV and `null` in
//! JSON.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::benders::{BendersReport, Status};
use crate::follower::{Histogram, WeightDelta};
use crate::master::NodeLogEntry;
use crate::Result;

/// Final summary of a decomposition run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: Status,
    pub objective: f64,
    pub disabled_assets: Vec<usize>,
    pub iterations: usize,
    /// `None` when the gap is infinite.
    pub gap_pct: Option<f64>,
}

impl Summary {
    pub fn from_report(report: &BendersReport) -> Self {
        Summary {
            status: report.status,
            objective: report.objective,
            disabled_assets: report.disabled_assets(),
            iterations: report.iterations.len(),
            gap_pct: report.gap_pct.is_finite().then_some(report.gap_pct),
        }
    }
}

pub fn write_summary<W: Write>(mut out: W, report: &BendersReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &Summary::from_report(report))?;
    writeln!(out)?;
    Ok(())
}

pub fn write_iterations<W: Write>(out: W, report: &BendersReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "lb", "ub", "gap_pct", "master_ms", "sub_ms", "cuts_total"])?;
    for r in &report.iterations {
        w.write_record([
            r.iter.to_string(),
            r.lb.to_string(),
            r.ub.to_string(),
            r.gap_pct.to_string(),
            format!("{:.3}", r.master_ms),
            format!("{:.3}", r.sub_ms),
            r.cuts_total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Stages are numbered from 1.
pub fn write_trajectory<W: Write>(out: W, levels: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stage", "service_level"])?;
    for (i, v) in levels.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(out: W, hist: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stage", "bin_lo", "bin_hi", "count"])?;
    for (i, counts) in hist.counts.iter().enumerate() {
        for (b, c) in counts.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                hist.edges[b].to_string(),
                hist.edges[b + 1].to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `stage_pair` is written as `"{i-1}-{i}"`.
pub fn write_weight_deltas<W: Write>(out: W, deltas: &[WeightDelta]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["asset", "upstream", "stage_pair", "delta"])?;
    for d in deltas {
        w.write_record([
            d.asset.to_string(),
            d.upstream.to_string(),
            format!("{}-{}", d.stage - 1, d.stage),
            d.delta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_enumeration_table<W: Write>(out: W, table: &[(Vec<bool>, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "q"])?;
    for (x, q) in table {
        let bits: String = x.iter().map(|&b| if b { '1' } else { '0' }).collect();
        w.write_record([bits, q.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_node_log<W: Write>(out: W, log: &[NodeLogEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "depth", "bound", "incumbent"])?;
    for e in log {
        w.write_record([
            e.node.to_string(),
            e.depth.to_string(),
            e.bound.to_string(),
            e.incumbent.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_and_table_layout() {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &[1.0, 0.5]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "stage,service_level\n1,1\n2,0.5\n");
        let mut buf = Vec::new();
        write_enumeration_table(&mut buf, &[(vec![true, false], 3.5)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,q\n10,3.5\n");
    }

    #[test]
    fn histogram_rows() {
        let hist = Histogram {
            edges: vec![0.0, 0.5, 1.0],
            counts: vec![vec![1, 2]],
        };
        let mut buf = Vec::new();
        write_histogram(&mut buf, &hist).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "stage,bin_lo,bin_hi,count\n1,0,0.5,1\n1,0.5,1,2\n"
        );
    }

    #[test]
    fn deltas_name_stage_pairs() {
        let mut buf = Vec::new();
        let d = WeightDelta { asset: 3, upstream: 1, stage: 2, delta: -0.05 };
        write_weight_deltas(&mut buf, &[d]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "asset,upstream,stage_pair,delta\n3,1,1-2,-0.05\n"
        );
    }
}
