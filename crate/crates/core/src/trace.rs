//! Per-iteration run records shared by both solvers, with CSV export.

use std::fmt;
use std::io::Write;

use crate::stepsize::{target_label, StepSource, Target};

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIter,
    /// The run stopped early; the message says why and where.
    Error(String),
}

impl RunStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, RunStatus::Converged)
    }

    pub fn as_str(&self) -> &str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIter => "max_iter",
            RunStatus::Error(_) => "error",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Error(msg) => write!(f, "error: {msg}"),
            other => f.write_str(other.as_str()),
        }
    }
}

/// State at iterate `x_k` and the stepsize chosen there.
///
/// The last record of a run describes the final iterate, where no step is
/// taken, so its step fields are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// Stepsize `beta_k` used from `x_k` (before any backtracking).
    pub beta: Option<f64>,
    /// Target used to compute `beta_k`; `None` for the initial step, ABB picks
    /// and replacements.
    pub tau: Option<Target>,
    pub source: Option<StepSource>,
    pub g_norm: f64,
    pub f_value: f64,
    /// `s_{k-1}' y_{k-1}`, the curvature that produced `beta_k`.
    pub curvature: Option<f64>,
    /// Accepted steplength after the line search (nonlinear runs only).
    pub nu: Option<f64>,
    pub backtracks: usize,
    pub replaced: bool,
}

impl IterRecord {
    pub fn alpha(&self) -> Option<f64> {
        self.beta.map(|b| 1.0 / b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub status: RunStatus,
    /// Number of steps taken.
    pub iterations: usize,
    pub n_f: u64,
    pub n_g: u64,
    pub g0_norm: f64,
    pub final_g_norm: f64,
    pub final_f: f64,
    /// Gradient at every iterate, kept only in debug mode.
    pub gradients: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub(crate) fn empty() -> Self {
        Self {
            records: Vec::new(),
            status: RunStatus::MaxIter,
            iterations: 0,
            n_f: 0,
            n_g: 0,
            g0_norm: f64::NAN,
            final_g_norm: f64::NAN,
            final_f: f64::NAN,
            gradients: None,
            warnings: Vec::new(),
        }
    }

    /// Inverse stepsizes `alpha_k` of every recorded step.
    pub fn alphas(&self) -> Vec<f64> {
        self.records.iter().filter_map(IterRecord::alpha).collect()
    }

    /// Writes one CSV row per record. `nonlinear` adds the line-search
    /// columns `nu,backtracks,replaced`.
    pub fn write_csv<W: Write>(&self, writer: W, nonlinear: bool) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["k", "beta", "alpha", "tau", "gnorm", "fval", "source"];
        if nonlinear {
            header.extend(["nu", "backtracks", "replaced"]);
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.k.to_string(),
                opt_num(r.beta),
                opt_num(r.alpha()),
                if r.beta.is_some() { target_label(r.tau) } else { "na".into() },
                fmt_num(r.g_norm),
                fmt_num(r.f_value),
                r.source.map_or("na", StepSource::as_str).to_string(),
            ];
            if nonlinear {
                row.push(opt_num(r.nu));
                row.push(r.backtracks.to_string());
                row.push(u8::from(r.replaced).to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Round-trip exact, locale-free number formatting used by every CSV output.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        if x == f64::INFINITY {
            "inf".into()
        } else if x == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            format!("{x}")
        }
    } else {
        format!("{x:e}")
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "na".into(), fmt_num)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, 0.625, 1e-30, 1e30, -3.5e-7, 123456.789, 2.0 / 3.0] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(1e30), "1e30");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let mut t = RunTrace::empty();
        t.records.push(IterRecord {
            k: 0,
            beta: Some(1.0),
            tau: None,
            source: Some(StepSource::Initial),
            g_norm: 2.0,
            f_value: -1.0,
            curvature: None,
            nu: Some(0.5),
            backtracks: 1,
            replaced: false,
        });
        t.records.push(IterRecord {
            k: 1,
            beta: Some(0.5),
            tau: Some(Target::MinusInfinity),
            source: Some(StepSource::Tbb),
            g_norm: 1.0,
            f_value: -2.0,
            curvature: Some(1.0),
            nu: None,
            backtracks: 0,
            replaced: false,
        });
        let mut out = Vec::new();
        t.write_csv(&mut out, false).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "k,beta,alpha,tau,gnorm,fval,source\n0,1,1,na,2,-1,initial\n1,0.5,2,-inf,1,-2,tbb\n");
        let mut out = Vec::new();
        t.write_csv(&mut out, true).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("k,beta,alpha,tau,gnorm,fval,source,nu,backtracks,replaced\n0,1,1,na,2,-1,initial,0.5,1,0\n"));
    }
}
