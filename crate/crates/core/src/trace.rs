//! Per-iteration traces with a fixed CSV schema.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Column order of every emitted trace.
pub const TRACE_HEADER: &str =
    "run,t,grad_evals,prox_evals,objective,feasibility,dist_x,dist_lambda,gap_bound,weighted_gap";

/// One recorded iteration. Distance and gap columns are empty without a known saddle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run: usize,
    pub t: usize,
    pub grad_evals: usize,
    pub prox_evals: usize,
    /// Objective with `g(x)` projected onto `dom h`.
    pub objective: f64,
    pub feasibility: f64,
    pub dist_x: Option<f64>,
    pub dist_lambda: Option<f64>,
    pub gap_bound: Option<f64>,
    pub weighted_gap: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Appends `other` tagged as run `run`, offsetting its counters by the current totals.
    pub fn append_run(&mut self, other: &Trace, run: usize, grad_offset: usize, prox_offset: usize) {
        for row in &other.rows {
            let mut r = row.clone();
            r.run = run;
            r.grad_evals += grad_offset;
            r.prox_evals += prox_offset;
            self.rows.push(r);
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(TRACE_HEADER.split(','))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>()?;
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_fixed() {
        let mut t = Trace::default();
        t.push(TraceRow {
            run: 0,
            t: 1,
            grad_evals: 2,
            prox_evals: 1,
            objective: 0.5,
            feasibility: 0.0,
            dist_x: None,
            dist_lambda: None,
            gap_bound: None,
            weighted_gap: None,
        });
        let s = t.to_csv_string().unwrap();
        assert_eq!(s.lines().next().unwrap(), TRACE_HEADER);
        assert_eq!(s.lines().nth(1).unwrap(), "0,1,2,1,0.5,0.0,,,,");
        assert_eq!(Trace::default().to_csv_string().unwrap().trim_end(), TRACE_HEADER);
    }
}
