//! Uniformly spaced patterns, the polar-cap bound and interface-gap diagnostics.

use serde::{Deserialize, Serialize};

use super::{max_abs, Convention, System};
use crate::error::{Error, Result};
use crate::grid::log_spaced;
use crate::pattern::{make_pattern, AxisymPattern};
use crate::potential::v_at_interfaces;

/// Zero-mass pattern with equal-height regions.
///
/// `2n - 1` interfaces sit at `-1 + i/n`; `2n` interfaces at `-1 + (2i-1)/(2n)`.
pub fn uniform_pattern(count: usize) -> Result<AxisymPattern> {
    if count == 0 {
        return Err(Error::DomainError("a uniform pattern needs at least one interface".into()));
    }
    let z: Vec<f64> = if count % 2 == 1 {
        let n = count.div_ceil(2);
        (1..=count).map(|i| -1.0 + i as f64 / n as f64).collect()
    } else {
        let n = count / 2;
        (1..=count)
            .map(|i| -1.0 + (2 * i - 1) as f64 / (2 * n) as f64)
            .collect()
    };
    make_pattern(&z, None)
}

/// Two consecutive pairs whose implied γ values disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    /// `(κ_{k+1} - κ_k)/(v_{k+1} - v_k)` for the first two pairs.
    pub ratios: [f64; 2],
    /// γ that each pair alone would require; non-positive means no γ > 0 works.
    pub implied_gamma: [f64; 2],
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformReport {
    pub count: usize,
    pub z: Vec<f64>,
    pub critical_for_all_gamma: bool,
    pub critical_gamma: Option<f64>,
    pub residual_at_critical_gamma: Option<f64>,
    pub obstruction: Option<Obstruction>,
    /// Smallest `‖R‖_∞` over a log-spaced γ sweep from 1e-3 to `gamma_max`.
    pub min_residual_over_sweep: f64,
}

const SWEEP_POINTS: usize = 400;

pub fn uniform_criticality_check(
    count: usize,
    gamma_max: f64,
    convention: std::sync::Arc<dyn Convention>,
) -> Result<UniformReport> {
    let p = uniform_pattern(count)?;
    let s = convention.potential_sign();
    let sweep = log_spaced(1e-3, gamma_max, SWEEP_POINTS)?;
    let min_residual = sweep
        .iter()
        .map(|&g| {
            let sys = System {
                gamma: g,
                m_target: 0.0,
                convention: convention.clone(),
            };
            max_abs(&sys.residuals(&p))
        })
        .fold(f64::INFINITY, f64::min);

    let mut report = UniformReport {
        count,
        z: p.interfaces().to_vec(),
        critical_for_all_gamma: count <= 2,
        critical_gamma: None,
        residual_at_critical_gamma: None,
        obstruction: None,
        min_residual_over_sweep: min_residual,
    };
    if count <= 2 {
        return Ok(report);
    }

    let v = v_at_interfaces(&p);
    let kappa: Vec<f64> = (1..=count).map(|k| p.kappa_g(k)).collect::<Result<_>>()?;
    let ratio = |k: usize| (kappa[k + 1] - kappa[k]) / v.diffs[k];
    let ratios = [ratio(0), ratio(1)];
    let implied = ratios.map(|r| -r / (4.0 * s));

    if count <= 4 {
        // A single scalar condition: the symmetric pairs carry the same ratio.
        let g = implied[0];
        if g > 0.0 {
            let sys = System {
                gamma: g,
                m_target: 0.0,
                convention,
            };
            report.critical_gamma = Some(g);
            report.residual_at_critical_gamma = Some(max_abs(&sys.residuals(&p)));
        }
    } else {
        report.obstruction = Some(Obstruction {
            ratios,
            implied_gamma: implied,
            gap: (implied[0] - implied[1]).abs(),
        });
    }
    Ok(report)
}

/// Lower bound `a/√(1+a²)`, `a = -6γ/e - 1/√3`, on the first interface of a
/// critical point with at least two interfaces.
///
/// Evaluated as `-1/√(1 + 3/(1+s)²)` with `s = 6√3 γ/e`, which is the same
/// quantity and gives exactly -1/2 at γ = 0.
pub fn polar_cap_bound(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::OutOfRange {
            value: gamma,
            domain: "[0, inf)",
        });
    }
    let s = 6.0 * 3f64.sqrt() * gamma / std::f64::consts::E;
    Ok(-1.0 / (1.0 + 3.0 / ((1.0 + s) * (1.0 + s))).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gamma: f64,
    /// `z_{k+1} - z_k`.
    pub gaps: Vec<f64>,
    /// `gap · γ / max(|z_k|, |z_{k+1}|)`.
    pub gap_ratios: Vec<f64>,
    /// `atanh z_{k+1} - atanh z_k`.
    pub stretched_gaps: Vec<f64>,
    pub stretched_mean: f64,
    /// Population variance of the stretched gaps.
    pub stretched_variance: f64,
}

pub fn gap_diagnostics(p: &AxisymPattern, gamma: f64) -> GapReport {
    let z = p.interfaces();
    let gaps: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
    let gap_ratios = z
        .windows(2)
        .map(|w| (w[1] - w[0]) * gamma / w[0].abs().max(w[1].abs()))
        .collect();
    let stretched: Vec<f64> = z.windows(2).map(|w| w[1].atanh() - w[0].atanh()).collect();
    let count = stretched.len().max(1) as f64;
    let mean = stretched.iter().sum::<f64>() / count;
    let variance = stretched.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / count;
    GapReport {
        gamma,
        gaps,
        gap_ratios,
        stretched_gaps: stretched,
        stretched_mean: mean,
        stretched_variance: variance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criticality::{Printed, Variational};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn uniform_placements() {
        assert_eq!(uniform_pattern(3).unwrap().interfaces(), &[-0.5, 0.0, 0.5]);
        assert_eq!(uniform_pattern(4).unwrap().interfaces(), &[-0.75, -0.25, 0.25, 0.75]);
        let six = uniform_pattern(6).unwrap();
        let expected = [-5.0 / 6.0, -0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5, 5.0 / 6.0];
        for (a, b) in six.interfaces().iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        for count in 1..=12 {
            assert!(uniform_pattern(count).unwrap().mass().abs() < 1e-15);
        }
        assert!(uniform_pattern(0).is_err());
    }

    #[test]
    fn uniform_three_and_four_have_explicit_gamma() {
        let r3 = uniform_criticality_check(3, 1e4, Arc::new(Printed)).unwrap();
        let g3 = -1.0 / (2.0 * 3f64.sqrt() * 0.75f64.ln());
        assert_relative_eq!(r3.critical_gamma.unwrap(), g3, max_relative = 1e-13);
        assert!(r3.residual_at_critical_gamma.unwrap() <= 1e-11);

        let r4 = uniform_criticality_check(4, 1e4, Arc::new(Printed)).unwrap();
        let g4 = (3.0 / 7f64.sqrt() + 1.0 / 15f64.sqrt()) / (3.0 * (5.0f64 / 7.0).ln() + 3f64.ln());
        assert_relative_eq!(r4.critical_gamma.unwrap(), g4, max_relative = 1e-12);
        assert!(r4.residual_at_critical_gamma.unwrap() <= 1e-11);

        assert!(uniform_criticality_check(2, 1e4, Arc::new(Printed)).unwrap().critical_for_all_gamma);
    }

    #[test]
    fn five_and_six_are_obstructed() {
        for conv in [Arc::new(Printed) as Arc<dyn Convention>, Arc::new(Variational)] {
            for count in [5, 6, 7, 8] {
                let r = uniform_criticality_check(count, 1e4, conv.clone()).unwrap();
                let o = r.obstruction.unwrap();
                assert!(o.gap > 0.0);
                assert!(r.min_residual_over_sweep >= 1e-3, "{count}: {}", r.min_residual_over_sweep);
            }
        }
        // (z2, z3) for five interfaces: κ and v differences share a sign
        let o = uniform_criticality_check(5, 1e4, Arc::new(Printed)).unwrap().obstruction.unwrap();
        assert!(o.ratios[1] > 0.0 && o.implied_gamma[1] < 0.0);
    }

    #[test]
    fn polar_bound_values() {
        assert_eq!(polar_cap_bound(0.0).unwrap(), -0.5);
        for g in [1e-3, 0.5, 1.0, 7.0, 100.0] {
            let a = -6.0 * g / std::f64::consts::E - 1.0 / 3f64.sqrt();
            assert_relative_eq!(polar_cap_bound(g).unwrap(), a / (1.0 + a * a).sqrt(), epsilon = 1e-15);
        }
        assert_relative_eq!(polar_cap_bound(1.0).unwrap(), -0.941_15, epsilon = 1e-5);
        assert!(polar_cap_bound(-1.0).is_err());
    }

    #[test]
    fn gap_report_fields() {
        let dc = make_pattern(&[-0.5, 0.5], None).unwrap();
        let r = gap_diagnostics(&dc, 3.0);
        assert_eq!(r.gaps, vec![1.0]);
        assert_relative_eq!(r.stretched_gaps[0], 2.0 * 0.5f64.atanh(), epsilon = 1e-15);
        assert_eq!(r.stretched_variance, 0.0);
        assert_relative_eq!(r.gap_ratios[0], 6.0, epsilon = 1e-15);
        let u4 = gap_diagnostics(&uniform_pattern(4).unwrap(), 1.0);
        assert!(u4.stretched_variance > 0.0);
    }
}
