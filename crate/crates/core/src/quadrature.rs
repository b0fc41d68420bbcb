//! Adaptive Gauss-Legendre quadrature.
//!
//! This is the independent integration oracle used to cross-check the
//! closed-form energy, potential and Fourier kernel formulas. It knows nothing
//! about those formulas: callers hand it an integrand and an interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `order`-point rule by Newton iteration on P_order.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be at least 1");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Applies the rule on [a, b].
    pub fn apply<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute floor below which differences are treated as converged.
    pub abs_tol: f64,
    pub max_depth: usize,
    pub order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_depth: 50,
            order: 10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::NonPositive(self.rel_tol));
        }
        if self.max_depth < 1 {
            return Err(Error::DomainError("max_depth must be at least 1".into()));
        }
        if self.order < 1 {
            return Err(Error::DomainError("order must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adaptive bisection integrator with a fixed-order Gauss-Legendre rule per panel.
#[derive(Debug, Clone)]
pub struct Integrator {
    rule: GaussLegendre,
    spec: QuadratureSpec,
}

impl Integrator {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            rule: GaussLegendre::new(spec.order),
            spec,
        })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Integrates `f` over [a, b]. Panels are bisected until the whole-panel
    /// estimate and the sum of its halves agree to within the panel's share
    /// of the tolerance.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let total_width = hi - lo;
        let coarse = self.rule.apply(&mut f, lo, hi);
        let mut scale = coarse.abs();
        let mut result = 0.0;
        // (a, b, estimate, depth)
        let mut stack = vec![(lo, hi, coarse, 0usize)];
        while let Some((pa, pb, whole, depth)) = stack.pop() {
            let mid = 0.5 * (pa + pb);
            let left = self.rule.apply(&mut f, pa, mid);
            let right = self.rule.apply(&mut f, mid, pb);
            let refined = left + right;
            if !refined.is_finite() {
                return Err(Error::DomainError(format!(
                    "non-finite integrand on [{pa}, {pb}]"
                )));
            }
            scale = scale.max(refined.abs());
            let share = (pb - pa) / total_width;
            let tol = (self.spec.rel_tol * scale).max(self.spec.abs_tol) * share;
            let diff = (whole - refined).abs();
            // Panels at round-off level, in value or in width, cannot improve further.
            let unresolvable = diff <= 64.0 * f64::EPSILON * (left.abs() + right.abs())
                || (pb - pa) <= 16.0 * f64::EPSILON * pa.abs().max(pb.abs());
            if diff <= tol || unresolvable {
                result += refined;
            } else if depth + 1 >= self.spec.max_depth {
                return Err(Error::ToleranceNotMet {
                    a: pa,
                    b: pb,
                    tolerance: self.spec.rel_tol,
                    depth: self.spec.max_depth,
                });
            } else {
                stack.push((pa, mid, left, depth + 1));
                stack.push((mid, pb, right, depth + 1));
            }
        }
        Ok(sign * result)
    }

    /// Integrates over [a, b] where `f` may have an integrable (e.g. logarithmic)
    /// singularity at `a`. Uses the grading x = a + (b - a) t^4, which turns
    /// `log(x - a)` into a C^2 integrand in t.
    pub fn integrate_graded<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        const POWER: i32 = 4;
        let width = b - a;
        self.integrate(
            |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                let x = a + width * t.powi(POWER);
                f(x) * width * f64::from(POWER) * t.powi(POWER - 1)
            },
            0.0,
            1.0,
        )
    }

    /// Tensor-product adaptive integration over [a, b] x [c, d] (nested 1D).
    pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
        &self,
        mut f: F,
        (a, b): (f64, f64),
        (c, d): (f64, f64),
    ) -> Result<f64> {
        let mut inner_error: Option<Error> = None;
        let outer = self.integrate(
            |x| match self.integrate(|y| f(x, y), c, d) {
                Ok(v) => v,
                Err(e) => {
                    inner_error.get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
        )?;
        match inner_error {
            Some(e) => Err(e),
            None => Ok(outer),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(5);
        // degree 9 is exact for a 5-point rule
        let v = rule.apply(&mut |x: f64| x.powi(8) + 3.0 * x.powi(3), -1.0, 1.0);
        assert_relative_eq!(v, 2.0 / 9.0, epsilon = 1e-15);
        let weights: f64 = GaussLegendre::new(12).weights.iter().sum();
        assert_relative_eq!(weights, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_handles_near_singular_integrand() {
        let q = Integrator::new(QuadratureSpec::default()).unwrap();
        // ∫_0^1 dx/(x+1e-6) = log((1+1e-6)/1e-6)
        let v = q.integrate(|x| 1.0 / (x + 1e-6), 0.0, 1.0).unwrap();
        assert_relative_eq!(v, (1.0f64 + 1e-6).ln() - 1e-6f64.ln(), max_relative = 1e-10);
    }

    #[test]
    fn graded_rule_handles_log_singularity() {
        let q = Integrator::new(QuadratureSpec::default()).unwrap();
        let v = q.integrate_graded(|x: f64| x.ln(), 0.0, 1.0).unwrap();
        assert_relative_eq!(v, -1.0, max_relative = 1e-10);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let q = Integrator::new(QuadratureSpec::default()).unwrap();
        let v = q.integrate(|x: f64| x.exp(), 1.0, 0.0).unwrap();
        assert_relative_eq!(v, 1.0 - 1f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn depth_limit_is_reported() {
        let spec = QuadratureSpec {
            max_depth: 2,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let q = Integrator::new(spec).unwrap();
        let err = q.integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 3.0).unwrap_err();
        assert!(matches!(err, Error::ToleranceNotMet { .. }));
    }

    #[test]
    fn two_dimensional_product() {
        let q = Integrator::new(QuadratureSpec::default()).unwrap();
        let v = q
            .integrate_2d(|x, y| x * y.cos(), (0.0, 2.0), (0.0, PI / 2.0))
            .unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
    }
}
