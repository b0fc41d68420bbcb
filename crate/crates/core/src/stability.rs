//! Second variation of the energy about an axisymmetric critical point,
//! assembled on a Fourier basis per boundary circle.
//!
//! For `f` on `∂A`,
//! `J(f) = ∫ |∇f|² - (1+κ²) f² + 8γ ∬ G(x,y) f(x) f(y) + 4γ ∫ (∇v·ν) f²`
//! with `G = -(1/2π) log|x-y|`. On circle i the basis is `1, cos kθ, sin kθ`
//! (k ≤ K). The log kernel between two latitude circles depends on `θ - α`
//! only, so modes of different k or parity never couple.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::{max_abs, System};
use crate::error::{Error, Result};
use crate::pattern::AxisymPattern;
use crate::potential::grad_v_normal;
use crate::quadrature::Integrator;

/// `∫₀^{2π} log(a - b cos u) cos(ku) du` for `a ≥ b ≥ 0`, `a > 0`.
///
/// `-(2π/k) q^k` with `q = b/(a + √(a²-b²))` for k ≥ 1, and
/// `2π log((a + √(a²-b²))/2)` for k = 0.
pub fn fourier_log_integral(a: f64, b: f64, k: u32) -> Result<f64> {
    if !(a > 0.0 && b >= 0.0 && b <= a) {
        return Err(Error::DomainError(format!(
            "log kernel needs a >= b >= 0 and a > 0, got a = {a}, b = {b}"
        )));
    }
    let root = ((a - b) * (a + b)).sqrt();
    if k == 0 {
        return Ok(2.0 * PI * (0.5 * (a + root)).ln());
    }
    let q = b / (a + root);
    Ok(-(2.0 * PI / f64::from(k)) * q.powi(k as i32))
}

/// Adaptive-quadrature value of the same integral. The integrand is even about
/// `u = π`, and for `a = b` it has a log singularity at `u = 0` that is handled
/// by grading.
pub fn fourier_log_integral_quadrature(a: f64, b: f64, k: u32, q: &Integrator) -> Result<f64> {
    if !(a > 0.0 && b >= 0.0 && b <= a) {
        return Err(Error::DomainError(format!(
            "log kernel needs a >= b >= 0 and a > 0, got a = {a}, b = {b}"
        )));
    }
    let kf = f64::from(k);
    // a - b cos u = (a - b) + 2b sin²(u/2), written to keep the u → 0 end exact
    let f = |u: f64| {
        let s = (0.5 * u).sin();
        ((a - b) + 2.0 * b * s * s).ln() * (kf * u).cos()
    };
    let half = if a == b {
        q.integrate_graded(f, 0.0, 0.5 * PI)? + q.integrate(f, 0.5 * PI, PI)?
    } else {
        q.integrate(f, 0.0, PI)?
    };
    Ok(2.0 * half)
}

/// `∬₀^{2π} log(5 - 3cos(θ-α)) cos(kθ) cos(kα) dθ dα`, equal to the sin-sin
/// integral; `-2π²/(k 3^k)` for k ≥ 1.
pub fn doublecap_kernel_integral(k: u32) -> f64 {
    let factor = if k == 0 { 2.0 * PI } else { PI };
    factor * fourier_log_integral(5.0, 3.0, k).expect("5 >= 3 > 0")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Constant,
    Cos,
    Sin,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Constant => "constant",
            Parity::Cos => "cos",
            Parity::Sin => "sin",
        })
    }
}

/// 2D quadrature of the double-cap kernel integral with cos·cos or sin·sin weights.
pub fn doublecap_kernel_quadrature(k: u32, parity: Parity, q: &Integrator) -> Result<f64> {
    let kf = f64::from(k);
    let w = |x: f64| match parity {
        Parity::Sin => (kf * x).sin(),
        _ => (kf * x).cos(),
    };
    q.integrate_2d(
        |t, s| (5.0 - 3.0 * (t - s).cos()).ln() * w(t) * w(s),
        (0.0, 2.0 * PI),
        (0.0, 2.0 * PI),
    )
}

fn check_unit_height(z_n: f64) -> Result<()> {
    if !(z_n > 0.0 && z_n < 1.0) {
        return Err(Error::DomainError(format!("z_n must lie in (0, 1), got {z_n}")));
    }
    Ok(())
}

/// `J(f_k)/π` for `f_k = sin kθ` on the last circle of an equatorially
/// symmetric zero-mass critical point:
/// `(k²-1)/√(1-z_n²) + 4γ((1-z_n²)/k + z_n - 1)`.
#[allow(non_snake_case)]
pub fn single_mode_J(z_n: f64, gamma: f64, k: u32) -> Result<f64> {
    check_unit_height(z_n)?;
    if k == 0 {
        return Err(Error::DomainError("single-mode perturbations need k >= 1".into()));
    }
    let kf = f64::from(k);
    let r2 = 1.0 - z_n * z_n;
    Ok((kf * kf - 1.0) / r2.sqrt() + 4.0 * gamma * (r2 / kf + (z_n - 1.0)))
}

/// Upper bound on `J(f)/π` for `f = 1` on the first circle and `-1` on the
/// last one: `-4/r + 32γ r² (log 2 - log r) + 16γ (z_n - 1)`, `r = √(1-z_n²)`.
pub fn axisym_pm_bound(z_n: f64, gamma: f64) -> Result<f64> {
    check_unit_height(z_n)?;
    let r2 = 1.0 - z_n * z_n;
    let r = r2.sqrt();
    Ok(-4.0 / r + 32.0 * gamma * r2 * (std::f64::consts::LN_2 - r.ln()) + 16.0 * gamma * (z_n - 1.0))
}

/// One basis function: `circle` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub circle: usize,
    pub k: u32,
    pub parity: Parity,
}

/// The second variation as a dense symmetric matrix over the Fourier basis.
///
/// Basis order: constants on every circle, then for k = 1..=K the cos modes on
/// every circle followed by the sin modes.
#[derive(Debug, Clone)]
pub struct JMatrix {
    pub pattern: AxisymPattern,
    pub gamma: f64,
    pub k_max: u32,
    pub basis: Vec<Mode>,
    pub matrix: DMatrix<f64>,
    /// `∫_{∂A} φ²` for each basis function.
    pub norms: Vec<f64>,
    /// `∫_{∂A} φ`; the admissible coefficient vectors are orthogonal to it.
    pub constraint: Vec<f64>,
    pub convention: String,
}

impl JMatrix {
    pub fn index(&self, mode: Mode) -> Option<usize> {
        let n = self.pattern.len();
        if mode.circle == 0 || mode.circle > n || mode.k > self.k_max {
            return None;
        }
        let i = mode.circle - 1;
        match (mode.k, mode.parity) {
            (0, Parity::Constant) => Some(i),
            (k, Parity::Cos) if k >= 1 => Some(n + (k as usize - 1) * 2 * n + i),
            (k, Parity::Sin) if k >= 1 => Some(n + (k as usize - 1) * 2 * n + n + i),
            _ => None,
        }
    }

    pub fn entry(&self, a: Mode, b: Mode) -> Option<f64> {
        Some(self.matrix[(self.index(a)?, self.index(b)?)])
    }

    /// `J(f)` for the coefficient vector `c`.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        let v = DVector::from_column_slice(c);
        (v.transpose() * &self.matrix * &v)[(0, 0)]
    }

    /// Largest `|J_ij - J_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.matrix;
        (m - m.transpose()).amax()
    }

    /// Largest entry coupling different `(k, parity)` blocks.
    pub fn off_block_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                if a.k != b.k || a.parity != b.parity {
                    worst = worst.max(self.matrix[(i, j)].abs());
                }
            }
        }
        worst
    }
}

/// Residual above which a pattern is not treated as critical.
pub const CRITICAL_TOL: f64 = 1e-8;

/// Assembles `J` about `p`, which must satisfy the criticality residuals of
/// `system` to [`CRITICAL_TOL`] (the mass row is not part of the check).
#[allow(non_snake_case)]
pub fn assemble_J(p: &AxisymPattern, system: &System, k_max: u32) -> Result<JMatrix> {
    let r = system.residuals(p);
    let residual = max_abs(&r[..r.len() - 1]);
    if !(residual <= CRITICAL_TOL) {
        return Err(Error::NotCritical {
            residual,
            tolerance: CRITICAL_TOL,
        });
    }
    assemble_unchecked(p, system, k_max)
}

fn assemble_unchecked(p: &AxisymPattern, system: &System, k_max: u32) -> Result<JMatrix> {
    let n = p.len();
    if n == 0 {
        return Err(Error::DomainError("a pattern without interfaces has no boundary".into()));
    }
    let gamma = system.gamma;
    let z = p.interfaces();
    let r: Vec<f64> = z.iter().map(|z| (1.0 - z * z).sqrt()).collect();
    let g: Vec<f64> = (1..=n).map(|k| grad_v_normal(p, k)).collect::<Result<_>>()?;

    let mut basis = Vec::with_capacity(n * (2 * k_max as usize + 1));
    basis.extend((1..=n).map(|c| Mode {
        circle: c,
        k: 0,
        parity: Parity::Constant,
    }));
    for k in 1..=k_max {
        for parity in [Parity::Cos, Parity::Sin] {
            basis.extend((1..=n).map(|c| Mode { circle: c, k, parity }));
        }
    }
    let size = basis.len();
    let mut matrix = DMatrix::<f64>::zeros(size, size);
    let mut norms = vec![0.0; size];
    let mut constraint = vec![0.0; size];

    // Fourier coefficients of the kernel for each circle pair and k.
    let mut kernel = vec![0.0; n * n * (k_max as usize + 1)];
    for i in 0..n {
        for j in 0..n {
            let a = r[i] * r[i] + r[j] * r[j] + (z[i] - z[j]) * (z[i] - z[j]);
            let b = 2.0 * r[i] * r[j];
            // a ≥ b holds exactly in theory; clamp round-off on the diagonal
            let b = b.min(a);
            for k in 0..=k_max {
                kernel[(k as usize * n + i) * n + j] = fourier_log_integral(a, b, k)?;
            }
        }
    }

    let nonlocal_scale = 8.0 * gamma * (-1.0 / (2.0 * PI));
    for block_start in (0..size).step_by(n) {
        let k = basis[block_start].k;
        let angular = if k == 0 { 2.0 * PI } else { PI };
        for i in 0..n {
            let ii = block_start + i;
            let kf = f64::from(k);
            let local = if k == 0 { -2.0 * PI / r[i] } else { PI * (kf * kf - 1.0) / r[i] };
            let gradient = 4.0 * gamma * g[i] * angular * r[i];
            matrix[(ii, ii)] += local + gradient;
            norms[ii] = angular * r[i];
            if k == 0 {
                constraint[ii] = 2.0 * PI * r[i];
            }
            for j in 0..n {
                let jj = block_start + j;
                let f = kernel[(k as usize * n + i) * n + j];
                // log|x-y| = (1/2) log(a - b cos(θ-α))
                matrix[(ii, jj)] += nonlocal_scale * r[i] * r[j] * 0.5 * angular * f;
            }
        }
    }
    Ok(JMatrix {
        pattern: p.clone(),
        gamma,
        k_max,
        basis,
        matrix,
        norms,
        constraint,
        convention: system.convention.name().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedUnstable,
    NoCertificate,
}

/// Closed-form instability certificates, in units of `J/π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// `single_mode_J(z_n, γ, k)` for k = 1..=K; empty unless the pattern is
    /// equatorially symmetric with zero mass and `z_n ∈ (0, 1)`.
    pub single_mode: Vec<f64>,
    /// `axisym_pm_bound(z_n, γ)` under the same conditions.
    pub axisym_pm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub gamma: f64,
    #[serde(rename = "K")]
    pub k_max: u32,
    /// Smallest eigenvalue of `J` on zero-mean functions, relative to the L² norm on `∂A`.
    pub min_eig: f64,
    pub mode: Mode,
    pub certificates: Certificates,
    pub verdict: Verdict,
    pub convention: String,
    /// `‖D y - λ y‖` for the reported eigenpair of the normalized block.
    pub eigen_residual: f64,
    /// Drop in the minimum eigenvalue from cutoff K/2 to K.
    pub k_refinement: f64,
    pub blocks: Vec<BlockMinimum>,
}

/// Threshold below which an eigenvalue certifies instability.
pub const UNSTABLE_EIG: f64 = -1e-9;

/// Symmetric tolerance used to decide whether the single-mode certificates apply.
const SYMMETRY_TOL: f64 = 1e-10;

pub fn certificates(p: &AxisymPattern, gamma: f64, k_max: u32) -> Certificates {
    let n = p.len();
    let z_n = p.interfaces().last().copied().unwrap_or(0.0);
    let applies = n >= 2 && p.is_equatorially_symmetric(SYMMETRY_TOL) && p.mass().abs() <= 1e-12 && z_n > 0.0 && z_n < 1.0;
    if !applies {
        return Certificates {
            single_mode: Vec::new(),
            axisym_pm: None,
        };
    }
    Certificates {
        single_mode: (1..=k_max).filter_map(|k| single_mode_J(z_n, gamma, k).ok()).collect(),
        axisym_pm: axisym_pm_bound(z_n, gamma).ok(),
    }
}

/// Orthonormal basis of the complement of `w` (a Householder reflection
/// sending `w/|w|` to the first axis; its remaining columns).
fn complement_basis(w: &DVector<f64>) -> DMatrix<f64> {
    let m = w.len();
    let norm = w.norm();
    let mut v = w / norm;
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vn = v.norm_squared();
    let h = DMatrix::<f64>::identity(m, m) - (&v * v.transpose()) * (2.0 / vn);
    h.columns(1, m - 1).into_owned()
}

struct BlockMin {
    value: f64,
    vector: DVector<f64>,
    residual: f64,
}

fn block_min(d: &DMatrix<f64>) -> BlockMin {
    let eig = SymmetricEigen::new(d.clone());
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty block");
    let vector = eig.eigenvectors.column(idx).into_owned();
    let residual = (d * &vector - &vector * value).norm();
    BlockMin {
        value,
        vector,
        residual,
    }
}

/// Smallest eigenvalue of one `(k, parity)` block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMinimum {
    pub k: u32,
    pub parity: Parity,
    pub min_eig: f64,
    /// Circle carrying the largest coefficient of the eigenvector (1-based).
    pub circle: usize,
    pub eigen_residual: f64,
}

fn reduce_block(j: &JMatrix, start: usize) -> Option<BlockMinimum> {
    let n = j.pattern.len();
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / j.norms[start + i].sqrt()).collect();
    let d = DMatrix::from_fn(n, n, |a, b| j.matrix[(start + a, start + b)] * scale[a] * scale[b]);
    let first = j.basis[start];
    let (m, y) = if first.k == 0 {
        if n == 1 {
            return None;
        }
        // constraint in normalized coordinates y = c·√norm
        let w = DVector::from_fn(n, |i, _| j.constraint[start + i] * scale[i]);
        let q = complement_basis(&w);
        let m = block_min(&(q.transpose() * &d * &q));
        let y = &q * &m.vector;
        (m, y)
    } else {
        let m = block_min(&d);
        let y = m.vector.clone();
        (m, y)
    };
    let c: Vec<f64> = y.iter().zip(&scale).map(|(y, s)| y * s).collect();
    Some(BlockMinimum {
        k: first.k,
        parity: first.parity,
        min_eig: m.value,
        circle: argmax_abs(&c) + 1,
        eigen_residual: m.residual,
    })
}

/// Smallest eigenvalue of `J` restricted to zero-mean perturbations.
///
/// Each `(k, parity)` block is normalized by the L² norms of its basis
/// functions and decomposed densely; the constant block is first restricted to
/// the hyperplane `Σ c_i 2π r_i = 0`. Blocks never couple, so this is the
/// spectrum of the full matrix.
pub fn min_eig_constrained(j: &JMatrix) -> StabilityReport {
    let n = j.pattern.len();
    let starts: Vec<usize> = (0..j.basis.len()).step_by(n).collect();
    let blocks: Vec<BlockMinimum> = starts.par_iter().filter_map(|&s| reduce_block(j, s)).collect();
    let lowest = |k_max: u32| {
        blocks
            .iter()
            .filter(|b| b.k <= k_max)
            .min_by(|a, b| a.min_eig.total_cmp(&b.min_eig))
    };
    let (min_eig, mode, eigen_residual) = match lowest(j.k_max) {
        Some(b) => (
            b.min_eig,
            Mode {
                circle: b.circle,
                k: b.k,
                parity: b.parity,
            },
            b.eigen_residual,
        ),
        None => (
            f64::INFINITY,
            Mode {
                circle: 1,
                k: 0,
                parity: Parity::Constant,
            },
            0.0,
        ),
    };
    let k_refinement = lowest(j.k_max / 2).map_or(0.0, |b| b.min_eig - min_eig);
    let certificates = certificates(&j.pattern, j.gamma, j.k_max);
    let certified = min_eig < UNSTABLE_EIG
        || certificates.single_mode.iter().any(|&v| v < 0.0)
        || certificates.axisym_pm.is_some_and(|v| v < 0.0);
    StabilityReport {
        gamma: j.gamma,
        k_max: j.k_max,
        min_eig,
        mode,
        certificates,
        verdict: if certified {
            Verdict::CertifiedUnstable
        } else {
            Verdict::NoCertificate
        },
        convention: j.convention.clone(),
        eigen_residual,
        k_refinement,
        blocks,
    }
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Assembles and reduces in one call.
pub fn stability_report(p: &AxisymPattern, system: &System, k_max: u32) -> Result<StabilityReport> {
    Ok(min_eig_constrained(&assemble_J(p, system, k_max)?))
}

/// γ at which a pattern that is critical on the whole bracket changes from
/// certified-unstable (at `lo`) to no negative eigenvalue (at `hi`), or the
/// reverse, located by bisection to relative width `rel_tol`.
pub fn stability_threshold(
    p: &AxisymPattern,
    base: &System,
    k_max: u32,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let unstable = |g: f64| -> Result<bool> {
        let sys = System {
            gamma: g,
            ..base.clone()
        };
        Ok(stability_report(p, &sys, k_max)?.min_eig < UNSTABLE_EIG)
    };
    let at_lo = unstable(lo)?;
    if at_lo == unstable(hi)? {
        return Err(Error::DomainError(format!(
            "no stability change between gamma = {lo} and {hi}"
        )));
    }
    while hi - lo > rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if unstable(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criticality::{solve_critical, uniform_pattern, GuessKind, SolveOptions, Variational};
    use crate::pattern::make_pattern;
    use crate::quadrature::QuadratureSpec;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn integrator() -> Integrator {
        Integrator::new(QuadratureSpec {
            rel_tol: 1e-12,
            ..QuadratureSpec::default()
        })
        .unwrap()
    }

    fn variational(g: f64) -> System {
        System::new(g).with_convention(Arc::new(Variational))
    }

    #[test]
    fn log_integral_examples() {
        assert_relative_eq!(fourier_log_integral(5.0, 3.0, 1).unwrap(), -2.0 * PI / 3.0, epsilon = 1e-14);
        assert_eq!(fourier_log_integral(2.0, 0.0, 3).unwrap(), 0.0);
        assert_relative_eq!(fourier_log_integral(2.0, 0.0, 0).unwrap(), 2.0 * PI * 2f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(fourier_log_integral(0.5, 0.5, 2).unwrap(), -PI, epsilon = 1e-14);
        assert!(fourier_log_integral(1.0, 2.0, 1).is_err());
        assert!(fourier_log_integral(0.0, 0.0, 1).is_err());
    }

    #[test]
    fn log_integral_matches_quadrature() {
        let q = integrator();
        let mut rng = StdRng::seed_from_u64(17);
        for i in 0..200 {
            let a: f64 = rng.random_range(0.05..4.0);
            let b = if i % 5 == 0 { a } else { a * rng.random_range(0.0..0.99) };
            let k = rng.random_range(0..=8);
            let exact = fourier_log_integral(a, b, k).unwrap();
            let num = fourier_log_integral_quadrature(a, b, k, &q).unwrap();
            assert!((exact - num).abs() <= 1e-8, "a={a} b={b} k={k}: {exact} vs {num}");
        }
    }

    #[test]
    fn doublecap_kernel_values() {
        assert_relative_eq!(doublecap_kernel_integral(1), -2.0 * PI * PI / 3.0, epsilon = 1e-13);
        assert_relative_eq!(doublecap_kernel_integral(2), -PI * PI / 9.0, epsilon = 1e-13);
        assert_relative_eq!(doublecap_kernel_integral(1), -6.579_736, epsilon = 1e-6);
        for k in 1..=8u32 {
            let closed = -2.0 * PI * PI / (f64::from(k) * 3f64.powi(k as i32));
            assert_relative_eq!(doublecap_kernel_integral(k), closed, max_relative = 1e-13);
        }
    }

    #[test]
    fn doublecap_kernel_matches_2d_quadrature() {
        let q = Integrator::new(QuadratureSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-12,
            ..QuadratureSpec::default()
        })
        .unwrap();
        for k in 1..=6u32 {
            let cos = doublecap_kernel_quadrature(k, Parity::Cos, &q).unwrap();
            let sin = doublecap_kernel_quadrature(k, Parity::Sin, &q).unwrap();
            assert!((cos - doublecap_kernel_integral(k)).abs() <= 1e-7, "{k}: {cos}");
            assert!((cos - sin).abs() <= 1e-10, "{k}: {cos} vs {sin}");
        }
    }

    #[test]
    fn single_mode_formula() {
        assert_relative_eq!(single_mode_J(0.9, 10.0, 2).unwrap(), 3.0 / 0.19f64.sqrt() - 0.2, epsilon = 1e-12);
        for (z, g) in [(0.3, 1.0), (0.8, 25.0)] {
            assert_relative_eq!(single_mode_J(z, g, 1).unwrap(), 4.0 * g * z * (1.0 - z), epsilon = 1e-12);
        }
        assert!(single_mode_J(1.0, 1.0, 1).is_err());
        assert!(single_mode_J(0.5, 1.0, 0).is_err());
    }

    #[test]
    fn pm_bound_behaviour() {
        assert!(axisym_pm_bound(0.6, 1.0).unwrap().is_finite());
        let near = axisym_pm_bound(1.0 - 1e-10, 5.0).unwrap();
        assert!(near < -1e4);
        assert!(axisym_pm_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn great_circle_local_part_vanishes_at_k1() {
        let p = make_pattern(&[0.0], None).unwrap();
        let j = assemble_J(&p, &System::new(0.0), 4).unwrap();
        let m = Mode {
            circle: 1,
            k: 1,
            parity: Parity::Sin,
        };
        assert_eq!(j.entry(m, m).unwrap(), 0.0);
    }

    #[test]
    fn rotations_are_zero_modes() {
        // Tilting the sphere moves every circle by a k = 1 mode, so the k = 1
        // block is singular at critical points of the stationarity convention.
        for (zs, g) in [(vec![0.3], 4.0), (vec![-0.5, 0.5], 2.0)] {
            let p = make_pattern(&zs, None).unwrap();
            let j = assemble_J(&p, &variational(g), 3).unwrap();
            let n = p.len();
            let start = j.index(Mode { circle: 1, k: 1, parity: Parity::Cos }).unwrap();
            let block = j.matrix.view((start, start), (n, n)).into_owned();
            let min = SymmetricEigen::new(block).eigenvalues.min();
            assert!(min.abs() < 1e-10, "{zs:?}: {min}");
        }
        let g = 40.0;
        let sys = variational(g);
        let solved = solve_critical(&sys, &uniform_pattern(4).unwrap(), GuessKind::UniformZ, &SolveOptions::default()).unwrap();
        let j = assemble_J(&solved.pattern, &sys, 3).unwrap();
        let start = j.index(Mode { circle: 1, k: 1, parity: Parity::Sin }).unwrap();
        let block = j.matrix.view((start, start), (4, 4)).into_owned();
        let eig = SymmetricEigen::new(block).eigenvalues;
        assert!(eig.iter().any(|l| l.abs() < 1e-7), "{eig}");
    }

    #[test]
    fn matrix_is_symmetric_and_block_diagonal() {
        for g in [2.0, 30.0] {
            for n in [3, 4, 5] {
                let sys = variational(g);
                let Ok(cp) = solve_critical(&sys, &uniform_pattern(n).unwrap(), GuessKind::UniformZ, &SolveOptions::default()) else {
                    continue;
                };
                let j = assemble_J(&cp.pattern, &sys, 6).unwrap();
                assert!(j.asymmetry() <= 1e-12);
                assert_eq!(j.off_block_max(), 0.0);
                for k in 1..=6 {
                    for c in 1..=n {
                        let cm = Mode { circle: c, k, parity: Parity::Cos };
                        let sm = Mode { circle: c, k, parity: Parity::Sin };
                        assert_eq!(j.entry(cm, cm), j.entry(sm, sm));
                    }
                }
            }
        }
    }

    #[test]
    fn last_circle_sin_mode_matches_formula() {
        for conv in crate::criticality::conventions().iter() {
            for (n, g) in [(3, 5.0), (4, 50.0), (5, 100.0)] {
                let sys = System::new(g).with_convention(conv.clone());
                let cp = solve_critical(&sys, &uniform_pattern(n).unwrap(), GuessKind::UniformZ, &SolveOptions::default()).unwrap();
                let z_n = *cp.pattern.interfaces().last().unwrap();
                let j = assemble_J(&cp.pattern, &sys, 6).unwrap();
                for k in 1..=6 {
                    let m = Mode { circle: n, k, parity: Parity::Sin };
                    let assembled = j.entry(m, m).unwrap() / PI;
                    let formula = single_mode_J(z_n, g, k).unwrap();
                    assert_relative_eq!(assembled, formula, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn pm_bound_dominates_exact_value() {
        for (n, g) in [(3, 5.0), (4, 50.0), (2, 3.0)] {
            let sys = variational(g);
            let cp = solve_critical(&sys, &uniform_pattern(n).unwrap(), GuessKind::UniformZ, &SolveOptions::default()).unwrap();
            let j = assemble_J(&cp.pattern, &sys, 2).unwrap();
            let mut c = vec![0.0; j.basis.len()];
            c[0] = 1.0;
            c[n - 1] = -1.0;
            let exact = j.quadratic_form(&c) / PI;
            let z_n = *cp.pattern.interfaces().last().unwrap();
            assert!(exact <= axisym_pm_bound(z_n, g).unwrap() + 1e-8);
        }
    }

    #[test]
    fn non_critical_input_is_rejected() {
        let p = make_pattern(&[-0.3, 0.1, 0.6], None).unwrap();
        assert!(matches!(assemble_J(&p, &System::new(1.0), 4), Err(Error::NotCritical { .. })));
    }

    #[test]
    fn single_cap_without_nonlocal_term_is_stable() {
        for z in [-0.4, 0.0, 0.7] {
            let p = make_pattern(&[z], None).unwrap();
            let r = stability_report(&p, &System::new(0.0), 16).unwrap();
            assert!(r.min_eig >= -1e-12, "{z}: {}", r.min_eig);
            assert_eq!(r.verdict, Verdict::NoCertificate);
        }
    }

    #[test]
    fn doublecap_cross_entries_follow_kernel() {
        let p = make_pattern(&[-0.5, 0.5], None).unwrap();
        let g = 3.0;
        let j = assemble_J(&p, &System::new(g), 6).unwrap();
        for k in 1..=6u32 {
            for parity in [Parity::Cos, Parity::Sin] {
                let e = j.entry(Mode { circle: 1, k, parity }, Mode { circle: 2, k, parity }).unwrap();
                // a = 5/2, b = 3/2 and log|x-y| = (1/2) log(5 - 3cos u) + (1/2) log(1/2)
                let expected = 8.0 * g * (-1.0 / (2.0 * PI)) * 0.75 * 0.5 * doublecap_kernel_integral(k);
                assert_relative_eq!(e, expected, max_relative = 1e-12);
            }
        }
        let e0 = j.entry(Mode { circle: 1, k: 0, parity: Parity::Constant }, Mode { circle: 2, k: 0, parity: Parity::Constant }).unwrap();
        let kernel0 = doublecap_kernel_integral(0) + (2.0 * PI).powi(2) * 0.5f64.ln();
        assert_relative_eq!(e0, 8.0 * g * (-1.0 / (2.0 * PI)) * 0.75 * 0.5 * kernel0, max_relative = 1e-12);
    }

    #[test]
    fn doublecap_thresholds() {
        let p = make_pattern(&[-0.5, 0.5], None).unwrap();
        let r = stability_report(&p, &System::new(0.05), 16).unwrap();
        assert!(r.min_eig < UNSTABLE_EIG);
        assert_eq!(r.mode.k, 0);
        assert_eq!(r.verdict, Verdict::CertifiedUnstable);

        let sys = variational(1.0);
        let lower = stability_threshold(&p, &sys, 16, 0.5, 1.0, 1e-10).unwrap();
        assert!((lower - 0.891_085).abs() < 1e-5, "{lower}");
        assert!(stability_report(&p, &sys, 16).unwrap().min_eig >= UNSTABLE_EIG);
        // the k = 2 modes take over at large γ
        let upper = stability_threshold(&p, &sys, 16, 2.0, 10.0, 1e-12).unwrap();
        assert_relative_eq!(upper, 3.0 * 3f64.sqrt(), max_relative = 1e-9);
        let r = stability_report(&p, &variational(6.0), 16).unwrap();
        assert_eq!((r.mode.k, r.verdict), (2, Verdict::CertifiedUnstable));
    }

    #[test]
    fn k_refinement_converges() {
        let sys = variational(30.0);
        let cp = solve_critical(&sys, &uniform_pattern(4).unwrap(), GuessKind::UniformZ, &SolveOptions::default()).unwrap();
        let a = stability_report(&cp.pattern, &sys, 16).unwrap();
        let b = stability_report(&cp.pattern, &sys, 32).unwrap();
        assert!((a.min_eig - b.min_eig).abs() <= 1e-8);
        assert!(b.k_refinement.abs() <= 1e-8);
        assert_eq!(b.blocks.len(), 1 + 2 * 32);
        assert!(b.eigen_residual <= 1e-10);
    }

    #[test]
    fn report_json_shape() {
        let p = make_pattern(&[-0.5, 0.5], None).unwrap();
        let r = stability_report(&p, &System::new(1.0), 4).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["gamma", "K", "min_eig", "mode", "certificates"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["mode"].get("circle").is_some() && v["mode"].get("parity").is_some());
        assert!(v["certificates"]["single_mode"].is_array());
    }
}
