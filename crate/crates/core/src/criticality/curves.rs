//! Explicit γ(z1) curves of the symmetric 3- and 4-interface families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{make_pattern, AxisymPattern};

/// Limit of the 3-interface curve as z1 → 0⁺.
pub const GAMMA3_LIMIT: f64 = 0.25;

/// Limit of the 4-interface curve as z1 → 1/2⁺, `1/(2√3 log(4/3))`.
pub fn gamma4_limit() -> f64 {
    1.0 / (2.0 * 3f64.sqrt() * (4.0f64 / 3.0).ln())
}

const DENOMINATOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "4")]
    Four,
}

impl Branch {
    pub fn interfaces(self) -> usize {
        match self {
            Branch::Three => 3,
            Branch::Four => 4,
        }
    }

    /// Open interval of admissible z1 values.
    pub fn domain(self) -> (f64, f64) {
        match self {
            Branch::Three => (0.0, 1.0),
            Branch::Four => (0.5, 1.0),
        }
    }

    pub fn gamma(self, z1: f64) -> Result<f64> {
        match self {
            Branch::Three => gamma_of_z1_3(z1),
            Branch::Four => gamma_of_z1_4(z1),
        }
    }

    pub fn limit(self) -> f64 {
        match self {
            Branch::Three => GAMMA3_LIMIT,
            Branch::Four => gamma4_limit(),
        }
    }

    pub fn asymptote(self) -> f64 {
        match self {
            Branch::Three => asymptote_3(),
            Branch::Four => asymptote_4(),
        }
    }

    /// The symmetric pattern parametrized by z1.
    pub fn pattern(self, z1: f64) -> Result<AxisymPattern> {
        match self {
            Branch::Three => make_pattern(&[-z1, 0.0, z1], None),
            Branch::Four => make_pattern(&[-z1, 0.5 - z1, z1 - 0.5, z1], None),
        }
    }

    /// Solves `γ(z1) = gamma` for z1 between the limit point and the asymptote.
    pub fn z1_for_gamma(self, gamma: f64) -> Result<f64> {
        if !(gamma > self.limit()) {
            return Err(Error::DomainError(format!(
                "branch {self} has no point at gamma = {gamma} (needs gamma > {})",
                self.limit()
            )));
        }
        let (lo0, _) = self.domain();
        let mut lo = lo0 + 1e-9;
        let mut hi = self.asymptote() - 1e-9;
        let f = |z: f64| self.gamma(z).map(|g| g - gamma);
        if f(lo)? > 0.0 || f(hi)? < 0.0 {
            return Err(Error::DomainError(format!(
                "gamma = {gamma} is not bracketed on branch {self}"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.interfaces())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "3" => Ok(Branch::Three),
            "4" => Ok(Branch::Four),
            other => Err(Error::DomainError(format!("branch must be 3 or 4, got '{other}'"))),
        }
    }
}

fn denominator_3(z: f64) -> f64 {
    z * z.ln_1p() - (z - 1.0) * (-z).ln_1p()
}

fn denominator_4(z: f64) -> f64 {
    -z * ((1.0 + z) / (0.5 + z)).ln() - (z - 1.0) * ((1.5 - z) / (1.0 - z)).ln()
}

fn numerator_4(z: f64) -> f64 {
    let w = z - 0.5;
    z / (1.0 - z * z).sqrt() + w / (1.0 - w * w).sqrt()
}

/// γ at which `{-z1, 0, z1}` is critical.
pub fn gamma_of_z1_3(z1: f64) -> Result<f64> {
    if !(z1 > 0.0 && z1 < 1.0) {
        return Err(Error::OutOfRange {
            value: z1,
            domain: "(0, 1)",
        });
    }
    let den = denominator_3(z1);
    if den.abs() < DENOMINATOR_TOL {
        return Err(Error::Asymptote {
            z1,
            denominator: den,
        });
    }
    Ok(-(z1 / (1.0 - z1 * z1).sqrt()) / (4.0 * den))
}

/// γ at which `{-z1, 1/2 - z1, z1 - 1/2, z1}` is critical.
pub fn gamma_of_z1_4(z1: f64) -> Result<f64> {
    if !(z1 > 0.5 && z1 < 1.0) {
        return Err(Error::OutOfRange {
            value: z1,
            domain: "(1/2, 1)",
        });
    }
    let den = denominator_4(z1);
    if den.abs() < DENOMINATOR_TOL {
        return Err(Error::Asymptote {
            z1,
            denominator: den,
        });
    }
    Ok(numerator_4(z1) / (4.0 * den))
}

fn bisect_sign_change(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Root of the 3-interface denominator in (1/2, 0.9).
pub fn asymptote_3() -> f64 {
    bisect_sign_change(denominator_3, 0.5, 0.9, 1e-15)
}

/// Root of the 4-interface denominator in (3/4, 0.95).
pub fn asymptote_4() -> f64 {
    bisect_sign_change(denominator_4, 0.75, 0.95, 1e-15)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaCurvePoint {
    pub z1: f64,
    pub gamma: f64,
    pub branch: Branch,
}

/// Evaluates a branch on the given z1 values. Points on an asymptote or with
/// non-positive γ are left out.
pub fn gamma_curve(branch: Branch, z1: &[f64]) -> Result<Vec<GammaCurvePoint>> {
    let mut out = Vec::with_capacity(z1.len());
    for &z in z1 {
        match branch.gamma(z) {
            Ok(gamma) if gamma > 0.0 && gamma.is_finite() => out.push(GammaCurvePoint {
                z1: z,
                gamma,
                branch,
            }),
            Ok(_) | Err(Error::Asymptote { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
