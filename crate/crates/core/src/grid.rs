//! Inclusive parameter ranges written as `start:end:count`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `count` equally spaced values from `start` to `end`, both included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl ParamRange {
    pub fn new(start: f64, end: f64, count: usize) -> Result<Self> {
        let r = Self { start, end, count };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::EmptyRange(format!("{self} has no points")));
        }
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::EmptyRange(format!("{self} has non-finite bounds")));
        }
        if self.count > 1 && self.start == self.end {
            return Err(Error::EmptyRange(format!("{self} repeats a single value")));
        }
        Ok(())
    }

    /// Grid values; the last one is exactly `end`.
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => {
                let step = (self.end - self.start) / (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            self.end
                        } else {
                            self.start + step * i as f64
                        }
                    })
                    .collect()
            }
        }
    }

    /// Spacing between neighbouring grid values.
    pub fn step(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.end - self.start) / (self.count - 1) as f64
        }
    }
}

impl fmt::Display for ParamRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.count)
    }
}

impl FromStr for ParamRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::DomainError(format!("expected start:end:count, got '{s}'"));
        match parts.as_slice() {
            [single] => {
                let v: f64 = single.trim().parse().map_err(|_| bad())?;
                Self::new(v, v, 1)
            }
            [a, b, n] => Self::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
                n.trim().parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }
}

/// `count` logarithmically spaced values from `lo` to `hi` (both > 0, both included).
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) {
        return Err(Error::NonPositive(lo));
    }
    if !(hi > 0.0) {
        return Err(Error::NonPositive(hi));
    }
    let exps = ParamRange::new(lo.ln(), hi.ln(), count)?.values();
    let mut out: Vec<f64> = exps.into_iter().map(f64::exp).collect();
    out[0] = lo;
    if count > 1 {
        out[count - 1] = hi;
    }
    Ok(out)
}
