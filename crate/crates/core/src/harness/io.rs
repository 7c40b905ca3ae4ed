//! CSV and JSON emitters with matching readers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! file re-parses to the exact in-memory value.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::waveform::SampledWaveform;

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// Parses the `# key = value` header lines of a CSV file.
fn header_value(text: &str, key: &str) -> Option<String> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim().to_string())
}

fn with_comments(comments: &[String], body: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + 64 * comments.len());
    for c in comments {
        out.extend_from_slice(b"# ");
        out.extend_from_slice(c.as_bytes());
        out.push(b'\n');
    }
    out.extend(body);
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct WaveRow {
    t: f64,
    re: f64,
    im: f64,
}

/// `t,re,im` with the exact grid in the header.
pub fn waveform_csv(w: &SampledWaveform<f64>, comments: &[String]) -> Result<Vec<u8>, HarnessError> {
    let mut all = vec![format!("t_start = {}", w.t_start()), format!("dt = {}", w.dt())];
    all.extend_from_slice(comments);
    let mut wr = csv::Writer::from_writer(Vec::new());
    for (t, s) in w.times().zip(w.samples()) {
        wr.serialize(WaveRow { t, re: s.re, im: s.im })
            .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let body = wr.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(with_comments(&all, body))
}

pub fn write_waveform(path: &Path, w: &SampledWaveform<f64>, comments: &[String]) -> Result<(), HarnessError> {
    fs::write(path, waveform_csv(w, comments)?).map_err(|e| io_err(path, e))
}

pub fn read_waveform(path: &Path) -> Result<SampledWaveform<f64>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_waveform(&text).map_err(|e| io_err(path, e))
}

pub fn parse_waveform(text: &str) -> Result<SampledWaveform<f64>, HarnessError> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<WaveRow> = rd
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    if rows.is_empty() {
        return Err(HarnessError::Io("waveform file has no samples".into()));
    }
    let parse = |key: &str| -> Result<Option<f64>, HarnessError> {
        header_value(text, key)
            .map(|v| v.parse().map_err(|_| HarnessError::Io(format!("bad `{key}` header"))))
            .transpose()
    };
    let t_start = parse("t_start")?.unwrap_or(rows[0].t);
    let dt = match parse("dt")? {
        Some(dt) => dt,
        None if rows.len() > 1 => (rows[rows.len() - 1].t - rows[0].t) / (rows.len() - 1) as f64,
        None => return Err(HarnessError::Io("single-sample waveform needs a `dt` header".into())),
    };
    let samples = rows.iter().map(|r| Complex::new(r.re, r.im)).collect();
    Ok(SampledWaveform::new(t_start, dt, samples)?)
}

/// One Monte Carlo sweep cell. Lengths are in units of `V_tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    #[serde(rename = "l_over_Vtau")]
    pub l_over_vtau: f64,
    #[serde(rename = "mean_lhat_over_Vtau")]
    pub mean_lhat_over_vtau: f64,
    pub var_lhat: f64,
    pub crb: f64,
    pub bias: f64,
    pub clamp_rate: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
}

pub fn mc_csv(rows: &[McRow], comments: &[String]) -> Result<Vec<u8>, HarnessError> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wr.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let body = wr.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(with_comments(comments, body))
}

pub fn read_mc_csv(path: &Path) -> Result<Vec<McRow>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    rd.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| io_err(path, e))
}

/// Two-column numeric CSV such as a figure-of-merit curve.
pub fn pairs_csv<X: Serialize>(header: (&str, &str), rows: &[(X, f64)]) -> Result<Vec<u8>, HarnessError> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record([header.0, header.1])
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    for r in rows {
        wr.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    wr.into_inner().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn read_pairs<X: DeserializeOwned>(path: &Path) -> Result<Vec<(X, f64)>, HarnessError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    rd.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| io_err(path, e))
}

pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}
