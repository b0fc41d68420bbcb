//! Axisymmetric ±1 patterns on the unit sphere.
//!
//! A pattern is described in the height coordinate `z = cos φ` by its interface
//! heights `-1 < z_1 < ... < z_n < 1`. The phase is `-1` on `[-1, z_1)` and
//! alternates across every interface, so `u = (-1)^(k+1)` on `[z_k, z_{k+1})`
//! with the sentinels `z_0 = -1`, `z_{n+1} = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking a caller-supplied mass against the interfaces.
pub const MASS_MATCH_TOL: f64 = 1e-12;

/// An axisymmetric pattern in canonical orientation (phase -1 at the south pole).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatternRecord", into = "PatternRecord")]
pub struct AxisymPattern {
    z: Vec<f64>,
    m: f64,
}

/// Wire form of a pattern: `{"z": [...], "m": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternRecord {
    pub z: Vec<f64>,
    pub m: f64,
}

impl TryFrom<PatternRecord> for AxisymPattern {
    type Error = Error;

    fn try_from(rec: PatternRecord) -> Result<Self> {
        make_pattern(&rec.z, Some(rec.m))
    }
}

impl From<AxisymPattern> for PatternRecord {
    fn from(p: AxisymPattern) -> Self {
        PatternRecord { z: p.z, m: p.m }
    }
}

/// Phase of the region `[z_k, z_{k+1})`, `k = 0..=n`.
#[inline]
pub fn phase(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        -1.0
    } else {
        1.0
    }
}

/// Alternating-sum mass of an interface list (no validation, so it also
/// applies to degenerate boundary configurations).
pub fn mass_of(zs: &[f64]) -> f64 {
    let n = zs.len();
    let node = |k: usize| -> f64 {
        if k == 0 {
            -1.0
        } else if k == n + 1 {
            1.0
        } else {
            zs[k - 1]
        }
    };
    0.5 * (1..=n + 1)
        .map(|k| phase(k - 1) * (node(k) - node(k - 1)))
        .sum::<f64>()
}

/// Builds a validated pattern, optionally checking the mass.
pub fn make_pattern(zs: &[f64], expect_mass: Option<f64>) -> Result<AxisymPattern> {
    for &z in zs {
        if !(z > -1.0 && z < 1.0) {
            return Err(Error::OutOfRange {
                value: z,
                domain: "(-1, 1)",
            });
        }
    }
    for (i, w) in zs.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::NonIncreasing {
                index: i,
                left: w[0],
                right: w[1],
            });
        }
    }
    let computed = mass_of(zs);
    let m = match expect_mass {
        None => computed,
        Some(expected) => {
            let diff = (expected - computed).abs();
            if !(diff <= MASS_MATCH_TOL) {
                return Err(Error::MassMismatch { computed, expected });
            }
            // Keep the caller's value when it is already consistent so that
            // serialization round-trips bit for bit.
            if diff <= 1e-14 {
                expected
            } else {
                computed
            }
        }
    };
    Ok(AxisymPattern { z: zs.to_vec(), m })
}

impl AxisymPattern {
    pub fn new(zs: &[f64]) -> Result<Self> {
        make_pattern(zs, None)
    }

    /// Internal constructor for moves that preserve mass exactly.
    pub(crate) fn from_parts_unchecked(z: Vec<f64>, m: f64) -> Self {
        Self { z, m }
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Stored mass `m`.
    pub fn mass(&self) -> f64 {
        self.m
    }

    /// Mass recomputed from the interfaces.
    pub fn computed_mass(&self) -> f64 {
        mass_of(&self.z)
    }

    /// Node `z_k` for `k = 0..=n+1`, including the polar sentinels.
    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        let n = self.z.len();
        if k == 0 {
            -1.0
        } else if k == n + 1 {
            1.0
        } else {
            self.z[k - 1]
        }
    }

    /// Slope of ξ on `[z_k, z_{k+1}]`, i.e. `a_{k+1} = (-1)^(k+1) - m`.
    #[inline]
    pub fn slope(&self, k: usize) -> f64 {
        phase(k) - self.m
    }

    /// Signed geodesic curvature of the interface circle `z_k`, `k = 1..=n`.
    pub fn kappa_g(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        let z = self.z[k - 1];
        Ok(phase(k) * z / (1.0 - z * z).sqrt())
    }

    /// Radius `sqrt(1 - z_k^2)` of interface circle `k`.
    pub fn radius(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        let z = self.z[k - 1];
        Ok((1.0 - z * z).sqrt())
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.z.len() {
            Err(Error::IndexOutOfRange {
                index: k,
                max: self.z.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn xi_profile(&self) -> XiProfile {
        XiProfile::of(self)
    }

    /// Evaluates ξ(z) by linear interpolation between the nodes.
    pub fn xi_eval(&self, z: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&z) {
            return Err(Error::OutOfRange {
                value: z,
                domain: "[-1, 1]",
            });
        }
        let xi = self.xi_profile();
        let n = self.z.len();
        let k = (0..=n).rev().find(|&k| self.node(k) <= z).unwrap_or(0);
        if k == n + 1 {
            return Ok(0.0);
        }
        Ok(xi.nodes[k] + xi.slopes[k] * (z - self.node(k)))
    }

    /// The pattern `u(-z)`, brought back to canonical orientation.
    pub fn reflect(&self) -> AxisymPattern {
        let z: Vec<f64> = self.z.iter().rev().map(|&z| -z).collect();
        // u(-z) starts with phase (-1)^(n+1); for odd n the canonical
        // representative is -u(-z), whose mass is -m.
        let m = if self.z.len().is_multiple_of(2) { self.m } else { -self.m };
        AxisymPattern { z, m }
    }

    /// The complementary pattern `-u`.
    pub fn negate(&self) -> SignedPattern {
        if self.z.len() % 2 == 1 {
            // -u has phase +1 at the south pole and -1 at the north pole, so
            // its reflection -u(-z) is canonical and has the same energy.
            SignedPattern {
                pattern: self.reflect_interfaces_with_mass(-self.m),
                orientation: Orientation::SouthNegative,
            }
        } else {
            SignedPattern {
                pattern: self.clone(),
                orientation: Orientation::SouthPositive,
            }
        }
    }

    fn reflect_interfaces_with_mass(&self, m: f64) -> AxisymPattern {
        AxisymPattern {
            z: self.z.iter().rev().map(|&z| -z).collect(),
            m,
        }
    }

    /// True when the interface set is symmetric under `z -> -z`.
    pub fn is_equatorially_symmetric(&self, tol: f64) -> bool {
        let n = self.z.len();
        (0..n).all(|i| (self.z[i] + self.z[n - 1 - i]).abs() <= tol)
    }

    /// Smallest gap between consecutive interfaces (infinite for n < 2).
    pub fn min_gap(&self) -> f64 {
        self.z
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Which phase sits at the south pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    SouthNegative,
    SouthPositive,
}

/// A pattern together with an orientation flag; `SouthPositive` stands for the
/// complement of the stored canonical pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPattern {
    pub pattern: AxisymPattern,
    pub orientation: Orientation,
}

impl SignedPattern {
    pub fn mass(&self) -> f64 {
        match self.orientation {
            Orientation::SouthNegative => self.pattern.mass(),
            Orientation::SouthPositive => -self.pattern.mass(),
        }
    }

    /// Phase on `[z_k, z_{k+1})`.
    pub fn phase(&self, k: usize) -> f64 {
        match self.orientation {
            Orientation::SouthNegative => phase(k),
            Orientation::SouthPositive => -phase(k),
        }
    }
}

/// Node values of the piecewise-linear ξ profile.
#[derive(Debug, Clone, PartialEq)]
pub struct XiProfile {
    /// ξ_k = ξ(z_k), k = 0..=n+1. Both ends are exactly zero.
    pub nodes: Vec<f64>,
    /// slopes[k] = a_{k+1} on [z_k, z_{k+1}], k = 0..=n.
    pub slopes: Vec<f64>,
}

impl XiProfile {
    pub fn of(p: &AxisymPattern) -> Self {
        let n = p.len();
        let slopes: Vec<f64> = (0..=n).map(|k| p.slope(k)).collect();
        let mut nodes = Vec::with_capacity(n + 2);
        nodes.push(0.0);
        // ξ_k = Σ_{i≤k} (-1)^i (z_i - z_{i-1}) - m (z_k + 1)
        let mut alternating = 0.0;
        for k in 1..=n {
            alternating += phase(k - 1) * (p.node(k) - p.node(k - 1));
            nodes.push(alternating - p.mass() * (p.node(k) + 1.0));
        }
        nodes.push(0.0);
        Self { nodes, slopes }
    }
}

/// Radius of the sphere that is equivalent to the unit-sphere problem at γ = R³.
pub fn radius_to_gamma(radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::NonPositive(radius));
    }
    Ok(radius.powi(3))
}
