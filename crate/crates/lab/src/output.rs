//! Flat-file outputs: CSV tables with a header row and `\n` line endings,
//! floats written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::LabError;

/// `%.17g`: positional notation for exponents in `[-5, 17)`, scientific
/// otherwise, trailing zeros dropped. Round-trips every finite `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRow {
    pub sample_index: usize,
    pub n: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub experiment: String,
    pub n: usize,
    pub metric_name: String,
    pub value: f64,
    pub ci_halfwidth: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaRow {
    pub sample_index: usize,
    pub n: usize,
    pub sigma_min: f64,
}

pub const EIGEN_HEADER: &str = "sample_index,n,re,im";
pub const METRIC_HEADER: &str = "experiment,n,metric_name,value,ci_halfwidth";
pub const SIGMA_HEADER: &str = "sample_index,n,sigma_min";

fn write_file(path: &Path, contents: &str) -> Result<(), LabError> {
    fs::write(path, contents).map_err(|source| LabError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_eigenvalues(path: &Path, rows: &[EigenRow]) -> Result<(), LabError> {
    let mut out = String::with_capacity(48 * rows.len() + 32);
    out.push_str(EIGEN_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.sample_index,
            r.n,
            format_float(r.re),
            format_float(r.im)
        );
    }
    write_file(path, &out)
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<(), LabError> {
    let mut out = String::from(METRIC_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.experiment,
            r.n,
            r.metric_name,
            format_float(r.value),
            format_float(r.ci_halfwidth)
        );
    }
    write_file(path, &out)
}

pub fn write_sigma(path: &Path, rows: &[SigmaRow]) -> Result<(), LabError> {
    let mut out = String::from(SIGMA_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.sample_index, r.n, format_float(r.sigma_min));
    }
    write_file(path, &out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, &text)
}
