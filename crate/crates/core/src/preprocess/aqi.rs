use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_TABLE: &str = include_str!("../../data/cpcb_breakpoints.toml");

/// One linear piece `[c_lo, c_hi) → [i_lo, i_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Segment {
    pub c_lo: f64,
    pub c_hi: f64,
    pub i_lo: f64,
    pub i_hi: f64,
}

impl From<[f64; 4]> for Segment {
    fn from([c_lo, c_hi, i_lo, i_hi]: [f64; 4]) -> Self {
        Segment { c_lo, c_hi, i_lo, i_hi }
    }
}

impl From<Segment> for [f64; 4] {
    fn from(s: Segment) -> Self {
        [s.c_lo, s.c_hi, s.i_lo, s.i_hi]
    }
}

impl Segment {
    fn interpolate(&self, c: f64) -> f64 {
        self.i_lo + (self.i_hi - self.i_lo) / (self.c_hi - self.c_lo) * (c - self.c_lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutantBreakpoints {
    pub name: String,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointTable {
    #[serde(rename = "pollutant")]
    pub pollutants: Vec<PollutantBreakpoints>,
}

/// Sub-index of one pollutant. `clamped` is set when the concentration lay
/// outside the table and was pinned to its nearest end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubIndex {
    pub value: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AqiValue {
    pub aqi: f64,
    /// Pollutant whose sub-index is the maximum.
    pub dominant: String,
    /// Number of sub-indices that had to be clamped.
    pub clamped: usize,
}

impl BreakpointTable {
    /// Shipped CPCB table.
    pub fn cpcb() -> Self {
        Self::from_toml(DEFAULT_TABLE).expect("bundled breakpoint table is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: BreakpointTable =
            toml::from_str(text).map_err(|e| Error::Config(format!("breakpoint table: {e}")))?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.pollutants {
            let bad = |msg: String| Err(Error::Config(format!("breakpoints for {}: {msg}", p.name)));
            if p.segments.is_empty() {
                return bad("no segments".into());
            }
            for (k, s) in p.segments.iter().enumerate() {
                if !(s.c_lo < s.c_hi) || !(s.i_lo <= s.i_hi) {
                    return bad(format!("segment {k} is not increasing"));
                }
                if s.i_lo < 0.0 || s.i_hi > 500.0 {
                    return bad(format!("segment {k} index range leaves [0, 500]"));
                }
                if let Some(next) = p.segments.get(k + 1) {
                    if next.c_lo != s.c_hi || next.i_lo != s.i_hi {
                        return bad(format!("segments {k} and {} are not contiguous", k + 1));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, pollutant: &str) -> Option<&PollutantBreakpoints> {
        self.pollutants.iter().find(|p| p.name == pollutant)
    }

    /// Piecewise-linear sub-index. Half-open segments: a boundary
    /// concentration maps to the `index_lo` of the upper segment.
    pub fn sub_index(&self, pollutant: &str, concentration: f64) -> Option<SubIndex> {
        let p = self.get(pollutant)?;
        let first = p.segments[0];
        let last = *p.segments.last().expect("validated non-empty");
        if concentration < first.c_lo {
            return Some(SubIndex {
                value: first.i_lo,
                clamped: true,
            });
        }
        if concentration > last.c_hi {
            return Some(SubIndex {
                value: last.i_hi,
                clamped: true,
            });
        }
        let seg = p
            .segments
            .iter()
            .find(|s| concentration >= s.c_lo && concentration < s.c_hi)
            .unwrap_or(&last);
        Some(SubIndex {
            value: seg.interpolate(concentration),
            clamped: false,
        })
    }
}

/// Maximum of a set of sub-indices.
pub fn max_sub_index(sub_indices: &[f64]) -> Option<f64> {
    sub_indices
        .iter()
        .copied()
        .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}

/// AQI as the maximum sub-index over the pollutants present in `table`.
/// Pollutants without breakpoints are ignored.
pub fn compute_aqi(values: &[(&str, f64)], table: &BreakpointTable) -> Result<AqiValue> {
    let mut best: Option<(f64, &str)> = None;
    let mut clamped = 0;
    for &(name, c) in values {
        if !c.is_finite() {
            continue;
        }
        if let Some(sub) = table.sub_index(name, c) {
            clamped += sub.clamped as usize;
            if best.is_none_or(|(b, _)| sub.value > b) {
                best = Some((sub.value, name));
            }
        }
    }
    let (aqi, dominant) =
        best.ok_or_else(|| Error::Preprocess("no pollutant with AQI breakpoints is present".into()))?;
    Ok(AqiValue {
        aqi,
        dominant: dominant.to_string(),
        clamped,
    })
}
