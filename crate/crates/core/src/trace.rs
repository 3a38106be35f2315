//! Sampled (x, y) series with axis metadata — the universal I/O and fit
//! currency — plus the plain-text CSV contract used by the command line
//! tools.
//!
//! CSV layout: `# key=value` provenance comments first, then one `x,y` or
//! `x,y,sigma` row per sample. Floats are written with the shortest
//! representation that parses back to the same value, so write -> read ->
//! write is a fixpoint.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace is empty")]
    Empty,
    #[error("x and y lengths differ ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
}

/// A sampled series. `Spectrum` is the same thing with x interpreted as a
/// frequency axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    pub x_label: String,
    pub x_unit: String,
    pub y_label: String,
    pub y_unit: String,
    /// Provenance: resolved parameters, solver notes and the like.
    pub meta: BTreeMap<String, String>,
}

pub type Spectrum = Trace;

impl Trace {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            x,
            y,
            ..Self::default()
        }
    }

    pub fn with_axes(mut self, x_label: &str, x_unit: &str, y_label: &str, y_unit: &str) -> Self {
        self.x_label = x_label.to_string();
        self.x_unit = x_unit.to_string();
        self.y_label = y_label.to_string();
        self.y_unit = y_unit.to_string();
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.x.is_empty() {
            return Err(TraceError::Empty);
        }
        if self.x.len() != self.y.len() {
            return Err(TraceError::LengthMismatch {
                x: self.x.len(),
                y: self.y.len(),
            });
        }
        Ok(())
    }

    /// Grid spacing if the x axis is uniform to within `tol` (relative).
    pub fn uniform_step(&self, tol: f64) -> Option<f64> {
        if self.x.len() < 2 {
            return None;
        }
        let step = self.x[1] - self.x[0];
        if step == 0.0 {
            return None;
        }
        for w in self.x.windows(2) {
            if ((w[1] - w[0]) - step).abs() > tol * step.abs() {
                return None;
            }
        }
        Some(step)
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    /// Serialize to the CSV contract.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: &str| {
            let _ = writeln!(out, "# {k}={v}");
        };
        if !self.x_label.is_empty() {
            put("x_label", &self.x_label);
        }
        if !self.x_unit.is_empty() {
            put("x_unit", &self.x_unit);
        }
        if !self.y_label.is_empty() {
            put("y_label", &self.y_label);
        }
        if !self.y_unit.is_empty() {
            put("y_unit", &self.y_unit);
        }
        for (k, v) in &self.meta {
            put(k, v);
        }
        for i in 0..self.x.len() {
            match &self.sigma {
                Some(s) => {
                    let _ = writeln!(out, "{},{},{}", self.x[i], self.y[i], s[i]);
                }
                None => {
                    let _ = writeln!(out, "{},{}", self.x[i], self.y[i]);
                }
            }
        }
        out
    }

    /// Parse the CSV contract. Unknown `# key=value` pairs land in `meta`.
    pub fn from_csv(text: &str) -> Result<Self, TraceError> {
        let mut trace = Trace::default();
        let mut sigma: Vec<f64> = Vec::new();
        let mut saw_sigma = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(eq) = comment.find('=') {
                    let key = comment[..eq].trim();
                    let value = comment[eq + 1..].trim();
                    match key {
                        "x_label" => trace.x_label = value.to_string(),
                        "x_unit" => trace.x_unit = value.to_string(),
                        "y_label" => trace.y_label = value.to_string(),
                        "y_unit" => trace.y_unit = value.to_string(),
                        _ => {
                            trace.meta.insert(key.to_string(), value.to_string());
                        }
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 && fields.len() != 3 {
                return Err(TraceError::Parse {
                    line: line_no,
                    message: format!(
                        "expected 2 or 3 comma-separated values, got {}",
                        fields.len()
                    ),
                });
            }
            let parse = |s: &str| -> Result<f64, TraceError> {
                s.parse::<f64>().map_err(|_| TraceError::Parse {
                    line: line_no,
                    message: format!("invalid number `{s}`"),
                })
            };
            trace.x.push(parse(fields[0])?);
            trace.y.push(parse(fields[1])?);
            if fields.len() == 3 {
                sigma.push(parse(fields[2])?);
                saw_sigma = true;
            } else if saw_sigma {
                return Err(TraceError::Parse {
                    line: line_no,
                    message: "row is missing the sigma column".into(),
                });
            }
        }
        if saw_sigma {
            if sigma.len() != trace.x.len() {
                return Err(TraceError::Parse {
                    line: 0,
                    message: "sigma column present on only some rows".into(),
                });
            }
            trace.sigma = Some(sigma);
        }
        trace.validate()?;
        Ok(trace)
    }
}

/// Evenly spaced grid with `points` samples including both endpoints.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    assert!(points >= 1);
    if points == 1 {
        return vec![start];
    }
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + step * i as f64).collect()
}
