//! Column-oriented trace tables and their CSV form.
//!
//! Floats are written with 17 significant digits so a parse gives back the
//! exact bits.

use fods_core::{ReferenceSignal, Vector};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Signals of one run, all indexed by step `k = 0..=K`.
#[derive(Debug, Clone, Default)]
pub struct TraceSignals<'a> {
    pub states: &'a [Vector],
    pub estimates: Option<&'a [Vector]>,
    /// `u[0..K]`; the final row gets NaN.
    pub inputs: Option<&'a [Vector]>,
    pub outputs: Option<&'a [Vector]>,
    pub reference: Option<&'a ReferenceSignal>,
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 && (prefix == "u" || prefix == "y") {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn width(v: &[Vector]) -> usize {
    v.first().map_or(0, |x| x.len())
}

impl TraceTable {
    pub fn from_signals(s: &TraceSignals<'_>, sample_rate: f64) -> Self {
        let mut header = vec!["k".to_string(), "t".to_string()];
        header.extend(names("x", width(s.states)));
        if let Some(e) = s.estimates {
            header.extend(names("xhat", width(e)));
        }
        if let Some(u) = s.inputs {
            header.extend(names("u", width(u)));
        }
        if let Some(y) = s.outputs {
            header.extend(names("y", width(y)));
        }
        if let Some(r) = s.reference {
            header.extend(names("ref", width(&r.samples)));
        }
        let mut rows = Vec::with_capacity(s.states.len());
        for (k, x) in s.states.iter().enumerate() {
            let mut row = vec![k as f64, k as f64 / sample_rate];
            row.extend(x.iter());
            if let Some(e) = s.estimates {
                row.extend(e[k].iter());
            }
            if let Some(u) = s.inputs {
                match u.get(k) {
                    Some(v) => row.extend(v.iter()),
                    None => row.extend(std::iter::repeat_n(f64::NAN, width(u))),
                }
            }
            if let Some(y) = s.outputs {
                row.extend(y[k].iter());
            }
            if let Some(r) = s.reference {
                row.extend(r.samples[k].iter());
            }
            rows.push(row);
        }
        TraceTable { header, rows }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Vectors from the columns `prefix1..prefixN` (or the bare `prefix`).
    pub fn vectors(&self, prefix: &str) -> Vec<Vector> {
        let idx: Vec<usize> = self
            .header
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                h.as_str() == prefix
                    || h.strip_prefix(prefix).is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            })
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Vec::new();
        }
        self.rows.iter().map(|r| Vector::from_iterator(idx.len(), idx.iter().map(|&i| r[i]))).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, v)| if i == 0 { format!("{}", *v as u64) } else { format!("{v:.16e}") })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .filter(|h| !h.trim().is_empty())
            .ok_or_else(|| CliError::Io("trace has no header".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| CliError::Io(format!("trace line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(CliError::Io(format!(
                    "trace line {}: {} cells, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(TraceTable { header, rows })
    }
}
