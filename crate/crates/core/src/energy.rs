//! Closed-form and quadrature evaluation of the energy
//! `E_γ = 2π Σ √(1-z_k²) + 2πγ ∫ ξ²/(1-z²) dz`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ParamRange;
use crate::pattern::AxisymPattern;
use crate::quadrature::{Integrator, QuadratureSpec};
use crate::registry::{Named, Registry};

/// Energy split into its two terms. All fields include their 2π factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub gamma: f64,
    pub perimeter: f64,
    pub nonlocal: f64,
    pub total: f64,
    /// Nonlocal contribution of each segment `[z_k, z_{k+1}]`, k = 0..=n.
    pub per_segment: Vec<f64>,
}

impl EnergyBreakdown {
    pub fn total_over_pi(&self) -> f64 {
        self.total / PI
    }

    pub fn perimeter_over_pi(&self) -> f64 {
        self.perimeter / PI
    }

    pub fn nonlocal_over_pi(&self) -> f64 {
        self.nonlocal / PI
    }
}

pub fn perimeter(p: &AxisymPattern) -> f64 {
    2.0 * PI * p.interfaces().iter().map(|z| (1.0 - z * z).sqrt()).sum::<f64>()
}

/// `log((1 - c)/(1 - d))` for `c < d < 1`, accurate for short segments.
#[inline]
pub(crate) fn log_upper(c: f64, d: f64) -> f64 {
    ((d - c) / (1.0 - d)).ln_1p()
}

/// `log((1 + d)/(1 + c))` for `-1 < c < d`, accurate for short segments.
#[inline]
pub(crate) fn log_lower(c: f64, d: f64) -> f64 {
    ((d - c) / (1.0 + c)).ln_1p()
}

/// Closed form of `∫_{z_k}^{z_{k+1}} ξ²/(1-z²) dz`, k = 0..=n.
///
/// Writing `ξ = P - a(1-z) = Q + a(1+z)` splits the integrand into two
/// logarithmic parts. On the pole segments `Q` (k = 0) or `P` (k = n) vanishes
/// identically because ξ(±1) = 0, so that term is dropped instead of evaluated.
pub fn segment_integral(p: &AxisymPattern, xi: &[f64], k: usize) -> f64 {
    let n = p.len();
    line_integral(p.node(k), p.node(k + 1), xi[k], p.slope(k), k == 0, k == n)
}

/// `∫_c^d ξ²/(1-z²) dz` for the line `ξ(z) = ξ_c + a(z - c)`.
///
/// `south`/`north` mark a segment that ends at the corresponding pole, where ξ
/// vanishes and the singular term is dropped.
pub(crate) fn line_integral(c: f64, d: f64, xi_c: f64, a: f64, south: bool, north: bool) -> f64 {
    let mut total = -a * a * (d - c);
    if !north {
        let big_p = xi_c + a * (1.0 - c);
        total += 0.5 * big_p * big_p * log_upper(c, d);
    }
    if !south {
        let big_q = xi_c - a * (1.0 + c);
        total += 0.5 * big_q * big_q * log_lower(c, d);
    }
    total
}

/// `∫_{-1}^{1} ξ²/(1-z²) dz` in closed form.
pub fn nonlocal_integral_closed(p: &AxisymPattern) -> f64 {
    let xi = p.xi_profile().nodes;
    (0..=p.len()).map(|k| segment_integral(p, &xi, k)).sum()
}

/// Nonlocal energy `2πγ ∫ ξ²/(1-z²)` in closed form.
pub fn nonlocal_closed(p: &AxisymPattern, gamma: f64) -> f64 {
    2.0 * PI * gamma * nonlocal_integral_closed(p)
}

/// Integrates `ξ²/(1-z²)` over one segment numerically.
///
/// The integrand is evaluated in the distance to the nearer pole, `s = 1 ± z`,
/// so that `1 ∓ z = s` is exact. On the two pole segments ξ is proportional to
/// `s` and one factor is cancelled by hand.
pub fn segment_integral_quadrature(
    p: &AxisymPattern,
    xi: &[f64],
    k: usize,
    q: &Integrator,
) -> Result<f64> {
    let n = p.len();
    let (c, d) = (p.node(k), p.node(k + 1));
    let a = p.slope(k);
    let xk = xi[k];
    let mut total = 0.0;
    // Lower half (z ≤ 0), variable s = 1 + z.
    if c < 0.0 {
        let hi = d.min(0.0);
        let part = if k == 0 {
            // ξ = a s
            q.integrate(|s| a * a * s / (2.0 - s), 0.0, 1.0 + hi)?
        } else {
            let sc = 1.0 + c;
            q.integrate(
                |s| {
                    let xi = xk + a * (s - sc);
                    xi * xi / (s * (2.0 - s))
                },
                sc,
                1.0 + hi,
            )?
        };
        total += part;
    }
    // Upper half (z ≥ 0), variable s = 1 - z.
    if d > 0.0 {
        let lo = c.max(0.0);
        let part = if k == n {
            // ξ = -a s
            q.integrate(|s| a * a * s / (2.0 - s), 0.0, 1.0 - lo)?
        } else {
            let sc = 1.0 - c;
            q.integrate(
                |s| {
                    let xi = xk + a * (sc - s);
                    xi * xi / (s * (2.0 - s))
                },
                1.0 - d,
                1.0 - lo,
            )?
        };
        total += part;
    }
    Ok(total)
}

/// `∫_{-1}^{1} ξ²/(1-z²) dz` by adaptive quadrature.
pub fn nonlocal_integral_quadrature(p: &AxisymPattern, spec: QuadratureSpec) -> Result<f64> {
    let q = Integrator::new(spec)?;
    let xi = p.xi_profile().nodes;
    (0..=p.len())
        .map(|k| segment_integral_quadrature(p, &xi, k, &q))
        .sum()
}

/// Nonlocal energy `2πγ ∫ ξ²/(1-z²)` by adaptive quadrature.
pub fn nonlocal_quadrature(p: &AxisymPattern, gamma: f64, spec: QuadratureSpec) -> Result<f64> {
    Ok(2.0 * PI * gamma * nonlocal_integral_quadrature(p, spec)?)
}

pub fn total_energy(p: &AxisymPattern, gamma: f64) -> EnergyBreakdown {
    let xi = p.xi_profile().nodes;
    let per_segment: Vec<f64> = (0..=p.len())
        .map(|k| 2.0 * PI * gamma * segment_integral(p, &xi, k))
        .collect();
    let perimeter = perimeter(p);
    let nonlocal: f64 = per_segment.iter().sum();
    EnergyBreakdown {
        gamma,
        perimeter,
        nonlocal,
        total: perimeter + nonlocal,
        per_segment,
    }
}

/// `E_γ/π` from the closed form.
pub fn energy_over_pi(p: &AxisymPattern, gamma: f64) -> f64 {
    total_energy(p, gamma).total_over_pi()
}

/// A way of evaluating `∫ ξ²/(1-z²) dz`.
pub trait NonlocalEvaluator: Named + Send + Sync {
    fn integral(&self, p: &AxisymPattern) -> Result<f64>;

    fn energy(&self, p: &AxisymPattern, gamma: f64) -> Result<f64> {
        Ok(perimeter(p) + 2.0 * PI * gamma * self.integral(p)?)
    }
}

pub struct ClosedForm;

impl Named for ClosedForm {
    fn name(&self) -> &'static str {
        "closed-form"
    }
    fn description(&self) -> &'static str {
        "exact segment-wise logarithmic formula"
    }
}

impl NonlocalEvaluator for ClosedForm {
    fn integral(&self, p: &AxisymPattern) -> Result<f64> {
        Ok(nonlocal_integral_closed(p))
    }
}

pub struct Quadrature(pub QuadratureSpec);

impl Named for Quadrature {
    fn name(&self) -> &'static str {
        "quadrature"
    }
    fn description(&self) -> &'static str {
        "adaptive Gauss-Legendre panels per segment"
    }
}

impl NonlocalEvaluator for Quadrature {
    fn integral(&self, p: &AxisymPattern) -> Result<f64> {
        nonlocal_integral_quadrature(p, self.0)
    }
}

/// Registered nonlocal evaluators; "closed-form" is the default.
pub fn nonlocal_evaluators() -> Registry<dyn NonlocalEvaluator> {
    let closed: Arc<dyn NonlocalEvaluator> = Arc::new(ClosedForm);
    let quad: Arc<dyn NonlocalEvaluator> = Arc::new(Quadrature(QuadratureSpec::default()));
    Registry::new("nonlocal evaluator").with(closed).with(quad)
}

/// `c² log(x)` with the convention that it is zero whenever `c = 0`.
fn weighted_log(c2: f64, x: f64) -> f64 {
    if c2 == 0.0 {
        0.0
    } else {
        c2 * x.ln()
    }
}

/// `E_γ/π` of the zero-mass two-interface pattern `{z1, z1 + 1}`, `z1 ∈ [-1, 0]`.
///
/// Both endpoints are the single-cap limits; the vanishing perimeter and
/// `0·log 0` terms are resolved there.
pub fn two_interface_energy_over_pi(z1: f64, gamma: f64) -> Result<f64> {
    if !(-1.0..=0.0).contains(&z1) {
        return Err(Error::OutOfRange {
            value: z1,
            domain: "[-1, 0]",
        });
    }
    let z2 = z1 + 1.0;
    let perim = 2.0 * ((1.0 - z1 * z1).sqrt() + (1.0 - z2 * z2).max(0.0).sqrt());
    let nonlocal = -4.0
        + 4.0 * (2.0 / (1.0 - z1)).ln()
        + 4.0 * weighted_log(z1 * z1, (1.0 - z1) / (1.0 - z2))
        + 4.0 * weighted_log((1.0 + z1) * (1.0 + z1), (1.0 + z2) / (1.0 + z1))
        + 4.0 * (2.0 / (1.0 + z2)).ln();
    Ok(perim + gamma * nonlocal)
}

/// Tabulated `E_γ/π` of the two-interface family over a (z1, γ) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub z1: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Row-major: `values[i * gamma.len() + j]` is at `(z1[i], gamma[j])`.
    pub values: Vec<f64>,
}

impl SweepGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.gamma.len() + j]
    }

    /// Rows `(z1, gamma, energy_over_pi)` in z1-outer, γ-inner order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.z1.iter().enumerate().flat_map(move |(i, &z)| {
            self.gamma
                .iter()
                .enumerate()
                .map(move |(j, &g)| (z, g, self.value(i, j)))
        })
    }

    /// Index of the smallest energy on the slice at `gamma[j]`.
    pub fn argmin_z1(&self, j: usize) -> usize {
        (0..self.z1.len())
            .min_by(|&a, &b| self.value(a, j).total_cmp(&self.value(b, j)))
            .unwrap_or(0)
    }
}

pub fn two_interface_grid(z1: &ParamRange, gamma: &ParamRange) -> Result<SweepGrid> {
    z1.validate()?;
    gamma.validate()?;
    let zs = z1.values();
    let gs = gamma.values();
    if zs.iter().any(|z| !(-1.0..=0.0).contains(z)) {
        return Err(Error::OutOfRange {
            value: if z1.start < -1.0 || z1.start > 0.0 { z1.start } else { z1.end },
            domain: "[-1, 0]",
        });
    }
    let rows: Vec<Vec<f64>> = zs
        .par_iter()
        .map(|&z| {
            gs.iter()
                .map(|&g| two_interface_energy_over_pi(z, g))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        z1: zs,
        gamma: gs,
        values: rows.into_iter().flatten().collect(),
    })
}
