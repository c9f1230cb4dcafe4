use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::format_db;

/// One completed outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub residual: f64,
    /// Wall time since the start of the run.
    pub seconds: f64,
    pub phase: usize,
    pub ssim: Option<f64>,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

pub const CSV_HEADER: &str = "iter,residual,seconds,phase,ssim,psnr";

impl ConvergenceTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    /// Number of times the active prior phase changed.
    pub fn phase_transitions(&self) -> usize {
        self.records
            .windows(2)
            .filter(|w| w[0].phase != w[1].phase)
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let ssim = r.ssim.map(|v| format!("{v:.6}")).unwrap_or_default();
            let psnr = r.psnr.map(format_db).unwrap_or_default();
            out.push_str(&format!(
                "{},{:.12e},{:.6},{},{},{}\n",
                r.iter, r.residual, r.seconds, r.phase, ssim, psnr
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    /// Parses the CSV written by [`ConvergenceTrace::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => {
                return Err(Error::Format(format!(
                    "trace header {other:?}, expected {CSV_HEADER:?}"
                )))
            }
        }
        let mut trace = Self::default();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(Error::Format(format!("trace line {}: {} columns", n + 2, cols.len())));
            }
            let bad = |what: &str| Error::Format(format!("trace line {}: bad {what}", n + 2));
            let opt = |s: &str| -> Result<Option<f64>> {
                match s.trim() {
                    "" => Ok(None),
                    "inf" => Ok(Some(f64::INFINITY)),
                    v => v.parse().map(Some).map_err(|_| bad("metric")),
                }
            };
            trace.push(TraceRecord {
                iter: cols[0].trim().parse().map_err(|_| bad("iter"))?,
                residual: cols[1].trim().parse().map_err(|_| bad("residual"))?,
                seconds: cols[2].trim().parse().map_err(|_| bad("seconds"))?,
                phase: cols[3].trim().parse().map_err(|_| bad("phase"))?,
                ssim: opt(cols[4])?,
                psnr: opt(cols[5])?,
            });
        }
        Ok(trace)
    }
}
