//! Run reports, trace serialization, and log-log scaling fits.
//!
//! CSV output is UTF-8 with a header row; the first line names the schema
//! version. Floats are printed with 17 significant digits so traces are
//! byte-identical across runs with the same seed.

use serde::{Deserialize, Serialize};

use crate::oracle::CounterSnapshot;

pub const TRACE_SCHEMA: &str = "guiltycut.trace.v1";
pub const REPORT_SCHEMA: &str = "guiltycut.report.v1";
pub const SCALING_SCHEMA: &str = "guiltycut.scaling.v1";

/// 17 significant digits, enough to round-trip an f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One outer iteration of a solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    /// Iterate at the start of the step.
    pub z: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub decrease: f64,
    pub k: u32,
    pub branch: String,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SecondOrderStationary,
    FirstOrderStationary,
}

/// Full record of one solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub problem: String,
    pub mode: String,
    pub epsilon: f64,
    pub l1: f64,
    pub l3: f64,
    pub radius: f64,
    pub alpha: f64,
    pub tau: f64,
    pub seed: u64,
    pub status: Termination,
    /// Total outer iterations (trust-region or gradient steps).
    pub outer_iterations: usize,
    /// Possibly thinned iteration trace; `record_stride > 1` means rows were
    /// kept every that many iterations (the terminal row is always kept).
    pub record_stride: usize,
    pub records: Vec<IterationRecord>,
    pub k_values: Vec<u32>,
    pub k_bar: f64,
    pub final_point: Vec<f64>,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_lambda_min: Option<f64>,
    /// Acceptance threshold the driver guarantees: `lambda_min >= -alpha`.
    pub alpha_threshold: f64,
    /// The stricter eigenvalue threshold `-L3^(1/3) eps^(2/3)`, reported
    /// alongside whether the final point satisfies it.
    pub eq8_threshold: f64,
    pub eq8_holds: Option<bool>,
    pub delta_observed: f64,
    /// `20 * delta_observed * L3^(1/3) * eps^(-4/3) + 1` for guarded modes.
    pub iter_bound: Option<f64>,
    pub within_iter_bound: Option<bool>,
    pub min_nonterminal_decrease: Option<f64>,
    pub counters: CounterSnapshot,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Deterministic per-iteration trace (wall time excluded on purpose).
    pub fn trace_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema: {TRACE_SCHEMA}\n"));
        out.push_str("t,f,grad_norm,decrease,k,branch,n1,n2,n3\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.t,
                fmt_f64(r.f),
                fmt_f64(r.grad_norm),
                fmt_f64(r.decrease),
                r.k,
                r.branch,
                r.n1,
                r.n2,
                r.n3
            ));
        }
        out
    }
}

/// Ordinary least squares on `(log(1/eps), log(count))` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(eps, outer iterations)` for each completed cell.
    pub points: Vec<(f64, f64)>,
}

pub fn fit_loglog(points: &[(f64, f64)]) -> Option<ScalingFit> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|(e, _)| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, c)| c.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(ScalingFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}

/// Iteration records with deterministic thinning: once the buffer exceeds
/// twice the cap, every other row is dropped and the stride doubles.
pub struct RecordBuffer {
    records: Vec<IterationRecord>,
    stride: usize,
    cap: usize,
}

impl RecordBuffer {
    pub fn new(cap: usize) -> Self {
        RecordBuffer {
            records: Vec::new(),
            stride: 1,
            cap: cap.max(16),
        }
    }

    /// Whether iteration `t` lands on the current stride. Callers use this
    /// to skip building a record at all for dropped iterations.
    pub fn wants(&self, t: usize) -> bool {
        t % self.stride == 0
    }

    pub fn push(&mut self, rec: IterationRecord) {
        if rec.t % self.stride == 0 {
            self.records.push(rec);
            if self.records.len() >= 2 * self.cap {
                self.records = self
                    .records
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % 2 == 0)
                    .map(|(_, r)| r.clone())
                    .collect();
                self.stride *= 2;
            }
        }
    }

    /// Force-append the terminal row even when it falls off-stride.
    pub fn push_terminal(&mut self, rec: IterationRecord) {
        if self.records.last().map(|r| r.t) != Some(rec.t) {
            self.records.push(rec);
        }
    }

    pub fn into_parts(self) -> (Vec<IterationRecord>, usize) {
        (self.records, self.stride)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_power_law() {
        // counts = k * eps^(-4/3) must come back with slope 4/3.
        let eps: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
        let points: Vec<(f64, f64)> = eps
            .iter()
            .map(|&e| (e, 7.3 * e.powf(-4.0 / 3.0)))
            .collect();
        let fit = fit_loglog(&points).unwrap();
        assert!((fit.slope - 4.0 / 3.0).abs() < 1e-6, "slope {}", fit.slope);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn record_buffer_thins_deterministically() {
        let mut buf = RecordBuffer::new(16);
        for t in 0..200 {
            buf.push(IterationRecord {
                t,
                z: vec![0.0],
                f: 0.0,
                grad_norm: 0.0,
                decrease: 0.0,
                k: 0,
                branch: "x".into(),
                n1: 0,
                n2: 0,
                n3: 0,
            });
        }
        let (records, stride) = buf.into_parts();
        assert!(records.len() < 64);
        assert!(stride > 1);
        for w in records.windows(2) {
            assert!(w[0].t < w[1].t);
        }
    }
}
