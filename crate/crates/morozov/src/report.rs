//! JSON and CSV documents written by the command-line tool.
//!
//! Field names are a stable contract for downstream scripts.

use std::fs;
use std::path::Path;

use morozov_core::dual::{Regime, RegimeDiagnosis, SelectionResult, TracePoint};
use morozov_core::{DualEvaluation, Lagrangian, SweepPoint};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TraceRow {
    pub lambda: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Dprime")]
    pub d_prime: f64,
}

impl From<&TracePoint> for TraceRow {
    fn from(t: &TracePoint) -> Self {
        TraceRow {
            lambda: t.lambda,
            d: t.d_value,
            d_prime: t.d_prime,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SelectionReport {
    pub lambda_star: f64,
    pub alpha: f64,
    /// `||A f_star - g||`
    pub discrepancy: f64,
    /// Effective tolerance `c * tau_input` the selection targeted.
    pub tau: f64,
    pub tau_input: f64,
    pub safety_factor: f64,
    pub regime: Option<String>,
    pub method: String,
    pub iterations: Vec<TraceRow>,
    pub converged: bool,
    pub uniqueness_certified: bool,
    /// File name of the reconstruction, relative to the report.
    pub f_star_file: String,
}

impl SelectionReport {
    pub fn new(res: &SelectionResult, tau_input: f64, safety_factor: f64, f_star_file: String) -> Self {
        SelectionReport {
            lambda_star: res.lambda_star,
            alpha: res.alpha,
            discrepancy: res.discrepancy,
            tau: res.tau,
            tau_input,
            safety_factor,
            regime: res.regime.map(|r| r.as_str().to_string()),
            method: res.method.as_str().to_string(),
            iterations: res.iterations.iter().map(TraceRow::from).collect(),
            converged: res.converged,
            uniqueness_certified: res.uniqueness_certified,
            f_star_file,
        }
    }

    /// Rebuilds the library result from the report and its reconstruction.
    pub fn to_result(&self, f_star: Vec<f64>) -> Option<SelectionResult> {
        let method = match self.method.as_str() {
            "bisection" => morozov_core::Method::Bisection,
            "secant" => morozov_core::Method::Secant,
            "gradient_ascent" => morozov_core::Method::GradientAscent,
            _ => return None,
        };
        Some(SelectionResult {
            lambda_star: self.lambda_star,
            alpha: self.alpha,
            f_star,
            discrepancy: self.discrepancy,
            tau: self.tau,
            regime: self.regime.as_deref().and_then(Regime::parse),
            iterations: self
                .iterations
                .iter()
                .map(|t| TracePoint {
                    lambda: t.lambda,
                    d_value: t.d,
                    d_prime: t.d_prime,
                })
                .collect(),
            method,
            converged: self.converged,
            uniqueness_certified: self.uniqueness_certified,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiagnosisReport {
    pub dist_to_range: f64,
    pub data_norm: f64,
    pub tau: f64,
    pub safety_factor: f64,
    pub tau_eff: f64,
    pub regime: String,
    pub failed_inequality: Option<String>,
}

impl DiagnosisReport {
    /// `d` must be the diagnosis at `tau_eff = safety_factor * tau`.
    pub fn new(d: &RegimeDiagnosis, tau: f64, safety_factor: f64) -> Self {
        DiagnosisReport {
            dist_to_range: d.dist_to_range,
            data_norm: d.data_norm,
            tau,
            safety_factor,
            tau_eff: d.tau,
            regime: d.regime.as_str().to_string(),
            failed_inequality: d.failed_inequality().map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Dprime")]
    pub d_prime: f64,
    pub discrepancy_sq: f64,
    pub j_value: f64,
}

impl SweepRow {
    pub fn from_evaluation(e: &DualEvaluation, lag: &Lagrangian) -> Self {
        SweepRow {
            lambda: e.lambda,
            d: e.d_value,
            d_prime: e.d_prime,
            discrepancy_sq: e.discrepancy_sq(lag),
            j_value: e.j_value(),
        }
    }

    /// Failed grid points keep their λ with NaN values.
    pub fn from_point(p: &SweepPoint, lag: &Lagrangian) -> Self {
        match &p.result {
            Ok(e) => Self::from_evaluation(e, lag),
            Err(_) => SweepRow {
                lambda: p.lambda,
                d: f64::NAN,
                d_prime: f64::NAN,
                discrepancy_sq: f64::NAN,
                j_value: f64::NAN,
            },
        }
    }
}

pub const SWEEP_HEADER: [&str; 5] = ["lambda", "D", "Dprime", "discrepancy_sq", "j_value"];

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.lambda, r.d, r.d_prime, r.discrepancy_sq, r.j_value].map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
    r.deserialize()
        .map(|row| {
            row.map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}
