//! The axisymmetric potential `v` with `v'(z) = ξ(z)/(1-z²)`, evaluated at the
//! interfaces, and its normal derivative there.

use serde::{Deserialize, Serialize};

use crate::energy::{log_lower, log_upper};
use crate::error::{Error, Result};
use crate::pattern::{phase, AxisymPattern};
use crate::quadrature::Integrator;

/// Where `v = 0` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// `v(-1) = 0`. Differs from `v(0) = 0` by a pattern-dependent constant,
    /// which cancels in every difference and shifts all multipliers equally.
    SouthPole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialAtInterfaces {
    /// `v(z_k)`, k = 1..=n (stored 0-based).
    pub values: Vec<f64>,
    /// `d_k = v(z_{k+1}) - v(z_k)`, k = 1..=n-1 (stored 0-based).
    pub diffs: Vec<f64>,
    pub anchor: Anchor,
}

/// `∫_{z_k}^{z_{k+1}} ξ/(1-z²) dz = v(z_{k+1}) - v(z_k)` for segment k = 0..=n.
///
/// The coefficient of the divergent logarithm on a pole segment is ξ(±1) = 0,
/// so that term is omitted.
pub fn v_diff(p: &AxisymPattern, k: usize) -> Result<f64> {
    let n = p.len();
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    let xi = p.xi_profile().nodes;
    Ok(segment_v_diff(p, &xi, k))
}

pub(crate) fn segment_v_diff(p: &AxisymPattern, xi: &[f64], k: usize) -> f64 {
    let n = p.len();
    let (c, d) = (p.node(k), p.node(k + 1));
    let a = p.slope(k);
    let mut total = 0.0;
    if k != n {
        total += 0.5 * (xi[k] + a * (1.0 - c)) * log_upper(c, d);
    }
    if k != 0 {
        total += 0.5 * (xi[k] - a * (1.0 + c)) * log_lower(c, d);
    }
    total
}

/// Interior differences `v(z_{k+1}) - v(z_k)` for k = 1..=n-1 (0-based output).
pub fn interior_v_diffs(p: &AxisymPattern) -> Vec<f64> {
    let xi = p.xi_profile().nodes;
    (1..p.len()).map(|k| segment_v_diff(p, &xi, k)).collect()
}

pub fn v_at_interfaces(p: &AxisymPattern) -> PotentialAtInterfaces {
    let n = p.len();
    let xi = p.xi_profile().nodes;
    let mut values = Vec::with_capacity(n);
    let mut diffs = Vec::with_capacity(n.saturating_sub(1));
    if n > 0 {
        values.push(segment_v_diff(p, &xi, 0));
    }
    for k in 1..n {
        let d = segment_v_diff(p, &xi, k);
        diffs.push(d);
        values.push(values[k - 1] + d);
    }
    PotentialAtInterfaces {
        values,
        diffs,
        anchor: Anchor::SouthPole,
    }
}

/// `∇v·ν` on interface k (1-based): `u(z_k⁺) ξ(z_k)/√(1-z_k²)`.
///
/// The sign follows the phase just above the interface. For an equatorially
/// symmetric zero-mass pattern this gives `(z_n - 1)/√(1-z_n²)` on the last
/// interface.
pub fn grad_v_normal(p: &AxisymPattern, k: usize) -> Result<f64> {
    p.check_index(k)?;
    let xi = p.xi_profile().nodes;
    let z = p.node(k);
    Ok(phase(k) * xi[k] / (1.0 - z * z).sqrt())
}

/// Quadrature of `ξ/(1-z²)` over segment k, in pole-relative variables.
pub fn v_diff_quadrature(p: &AxisymPattern, k: usize, q: &Integrator) -> Result<f64> {
    let n = p.len();
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    let xi = p.xi_profile().nodes;
    let (c, d) = (p.node(k), p.node(k + 1));
    let a = p.slope(k);
    let xk = xi[k];
    let mut total = 0.0;
    if c < 0.0 {
        let hi = d.min(0.0);
        total += if k == 0 {
            q.integrate(|s| a / (2.0 - s), 0.0, 1.0 + hi)?
        } else {
            let sc = 1.0 + c;
            q.integrate(|s| (xk + a * (s - sc)) / (s * (2.0 - s)), sc, 1.0 + hi)?
        };
    }
    if d > 0.0 {
        let lo = c.max(0.0);
        // dz = -ds; integrate over s from 1 - d to 1 - lo.
        total += if k == n {
            q.integrate(|s| -a / (2.0 - s), 0.0, 1.0 - lo)?
        } else {
            let sc = 1.0 - c;
            q.integrate(|s| (xk + a * (sc - s)) / (s * (2.0 - s)), 1.0 - d, 1.0 - lo)?
        };
    }
    Ok(total)
}
