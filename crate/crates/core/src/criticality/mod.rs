//! Euler-Lagrange system for axisymmetric critical points, its Newton solver,
//! explicit γ(z1) curves and the uniform-distribution checks.
//!
//! The system is `κ_g(z_k) + s·4γ v(z_k) = λ` for all k, written in
//! consecutive-difference form, together with the mass constraint. The sign `s`
//! is supplied by a [`Convention`].

mod curves;
mod guess;
mod solver;
mod uniform;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{make_pattern, mass_of, AxisymPattern};
use crate::potential::{interior_v_diffs, v_at_interfaces};
use crate::registry::{Named, Registry};

pub use curves::{
    asymptote_3, asymptote_4, gamma4_limit, gamma_curve, gamma_of_z1_3, gamma_of_z1_4, Branch,
    GammaCurvePoint, GAMMA3_LIMIT,
};
pub use guess::{initial_guesses, DoubleCapOrCurve, InitialGuess, UniformAtanh, UniformZ};
pub use solver::{
    continue_gamma, solve_critical, CatalogRecord, ContinuationOptions, CriticalPoint,
    SolveOptions, SolverTrace,
};
pub use uniform::{
    gap_diagnostics, polar_cap_bound, uniform_criticality_check, uniform_pattern, GapReport,
    Obstruction, UniformReport,
};

/// Sign in front of the nonlocal term of the criticality condition.
pub trait Convention: Named + Send + Sync {
    fn potential_sign(&self) -> f64;
}

/// `κ_g + 4γ v = λ`, with `v' = ξ/(1-z²)`: the system exactly as displayed in
/// the source, including the explicit 3- and 4-interface γ curves.
pub struct Printed;

impl Named for Printed {
    fn name(&self) -> &'static str {
        "printed"
    }
    fn description(&self) -> &'static str {
        "kappa_g + 4 gamma v = lambda with v' = xi/(1-z^2), as displayed"
    }
}

impl Convention for Printed {
    fn potential_sign(&self) -> f64 {
        1.0
    }
}

/// `κ_g - 4γ v = λ`: the stationarity condition of the closed-form energy
/// under interface motion, i.e. the condition satisfied by energy minimizers.
pub struct Variational;

impl Named for Variational {
    fn name(&self) -> &'static str {
        "variational"
    }
    fn description(&self) -> &'static str {
        "stationarity of the energy: kappa_g - 4 gamma v = lambda"
    }
}

impl Convention for Variational {
    fn potential_sign(&self) -> f64 {
        -1.0
    }
}

/// Registered conventions; "printed" is the default.
pub fn conventions() -> Registry<dyn Convention> {
    let printed: Arc<dyn Convention> = Arc::new(Printed);
    let variational: Arc<dyn Convention> = Arc::new(Variational);
    Registry::new("convention").with(printed).with(variational)
}

/// Parameters of the residual system.
#[derive(Clone)]
pub struct System {
    pub gamma: f64,
    pub m_target: f64,
    pub convention: Arc<dyn Convention>,
}

impl std::fmt::Debug for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("System")
            .field("gamma", &self.gamma)
            .field("m_target", &self.m_target)
            .field("convention", &self.convention.name())
            .finish()
    }
}

impl System {
    /// Printed convention, zero target mass.
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            m_target: 0.0,
            convention: Arc::new(Printed),
        }
    }

    pub fn with_convention(mut self, convention: Arc<dyn Convention>) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_mass(mut self, m_target: f64) -> Self {
        self.m_target = m_target;
        self
    }

    /// `R_k = (κ_{k+1} - κ_k) + s·4γ (v_{k+1} - v_k)` for k = 1..n-1, then
    /// `R_n = m - m_target`.
    pub fn residuals(&self, p: &AxisymPattern) -> Vec<f64> {
        let n = p.len();
        let s = self.convention.potential_sign();
        let kappa: Vec<f64> = (1..=n).map(|k| p.kappa_g(k).unwrap_or(f64::NAN)).collect();
        let dv = interior_v_diffs(p);
        let mut r: Vec<f64> = (0..n.saturating_sub(1))
            .map(|k| (kappa[k + 1] - kappa[k]) + s * 4.0 * self.gamma * dv[k])
            .collect();
        r.push(mass_of(p.interfaces()) - self.m_target);
        r
    }

    /// Residuals at raw interface positions; `None` if they do not form a pattern.
    pub fn residuals_at(&self, z: &[f64]) -> Option<Vec<f64>> {
        make_pattern(z, None).ok().map(|p| self.residuals(&p))
    }

    /// Per-interface multipliers `λ_k = κ_g(z_k) + s·4γ v(z_k)` (south-pole anchor).
    pub fn lambda_values(&self, p: &AxisymPattern) -> Vec<f64> {
        let s = self.convention.potential_sign();
        let v = v_at_interfaces(p);
        (1..=p.len())
            .map(|k| p.kappa_g(k).unwrap_or(f64::NAN) + s * 4.0 * self.gamma * v.values[k - 1])
            .collect()
    }
}

/// Residuals in the default setting (printed convention, m_target = 0).
pub fn residuals(p: &AxisymPattern, gamma: f64) -> Vec<f64> {
    System::new(gamma).residuals(p)
}

pub fn lambda_values(p: &AxisymPattern, gamma: f64) -> Vec<f64> {
    System::new(gamma).lambda_values(p)
}

/// `max λ_k - min λ_k`.
pub fn lambda_spread(lambdas: &[f64]) -> f64 {
    let max = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    if lambdas.is_empty() {
        0.0
    } else {
        max - min
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessKind {
    UniformZ,
    UniformAtanh,
    ExplicitCurve,
    Given,
    Continuation,
}

pub(crate) fn ensure_positive(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::NonPositive(gamma));
    }
    Ok(())
}
