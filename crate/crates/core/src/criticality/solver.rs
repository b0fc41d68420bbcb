//! Damped Newton iteration on the residual system and γ-continuation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ensure_positive, lambda_spread, max_abs, GuessKind, System};
use crate::error::{Error, Result};
use crate::pattern::{make_pattern, AxisymPattern};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Converged when `‖R‖_∞` is at most this.
    pub tolerance: f64,
    /// Finite-difference step is `fd_step · max(1, |z_j|)`.
    pub fd_step: f64,
    pub max_halvings: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-11,
            fd_step: 1e-6,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub iterations: usize,
    pub damping_events: usize,
    pub initial_guess: GuessKind,
    pub initial_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub pattern: AxisymPattern,
    pub gamma: f64,
    /// Mean of the per-interface multipliers (south-pole anchor of v).
    pub lambda: f64,
    pub lambda_spread: f64,
    pub residual_norm: f64,
    pub convention: String,
    pub m_target: f64,
    pub trace: SolverTrace,
}

impl CriticalPoint {
    pub fn catalog_record(&self) -> CatalogRecord {
        let gap = self.pattern.min_gap();
        CatalogRecord {
            n: self.pattern.len(),
            gamma: self.gamma,
            z: self.pattern.interfaces().to_vec(),
            lambda: self.lambda,
            residual: self.residual_norm,
            min_gap: gap.is_finite().then_some(gap),
        }
    }
}

/// One line of the critical-point catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub n: usize,
    pub gamma: f64,
    pub z: Vec<f64>,
    pub lambda: f64,
    pub residual: f64,
    /// `null` for a single interface.
    pub min_gap: Option<f64>,
}

fn jacobian(sys: &System, z: &[f64], r0: &[f64], fd_step: f64) -> DMatrix<f64> {
    let n = z.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut work = z.to_vec();
    for j in 0..n {
        let lower = if j == 0 { -1.0 } else { z[j - 1] };
        let upper = if j + 1 == n { 1.0 } else { z[j + 1] };
        // Keep both probes inside the neighbouring interfaces.
        let room = (z[j] - lower).min(upper - z[j]);
        let h = (fd_step * z[j].abs().max(1.0)).min(0.25 * room);
        work[j] = z[j] + h;
        let plus = sys.residuals_at(&work);
        work[j] = z[j] - h;
        let minus = sys.residuals_at(&work);
        work[j] = z[j];
        let column: Vec<f64> = match (plus, minus) {
            (Some(p), Some(m)) => p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            (Some(p), None) => p.iter().zip(r0).map(|(a, b)| (a - b) / h).collect(),
            (None, Some(m)) => r0.iter().zip(&m).map(|(a, b)| (a - b) / h).collect(),
            (None, None) => vec![f64::NAN; n],
        };
        for i in 0..n {
            jac[(i, j)] = column[i];
        }
    }
    jac
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Finds a root of the residual system starting from `init`.
pub fn solve_critical(
    sys: &System,
    init: &AxisymPattern,
    guess: GuessKind,
    opts: &SolveOptions,
) -> Result<CriticalPoint> {
    ensure_positive(sys.gamma)?;
    let n = init.len();
    if n == 0 {
        return Err(Error::DomainError("a critical point needs at least one interface".into()));
    }
    let mut z = init.interfaces().to_vec();
    let mut r = sys.residuals(init);
    let mut damping_events = 0;
    for iteration in 0..=opts.max_iterations {
        let norm = max_abs(&r);
        if norm <= opts.tolerance {
            let pattern = make_pattern(&z, None)?;
            let lambdas = sys.lambda_values(&pattern);
            return Ok(CriticalPoint {
                lambda: lambdas.iter().sum::<f64>() / lambdas.len() as f64,
                lambda_spread: lambda_spread(&lambdas),
                residual_norm: norm,
                gamma: sys.gamma,
                convention: sys.convention.name().to_string(),
                m_target: sys.m_target,
                trace: SolverTrace {
                    iterations: iteration,
                    damping_events,
                    initial_guess: guess,
                    initial_z: init.interfaces().to_vec(),
                },
                pattern,
            });
        }
        if iteration == opts.max_iterations {
            break;
        }
        let jac = jacobian(sys, &z, &r, opts.fd_step);
        let rhs = DVector::from_iterator(n, r.iter().map(|x| -x));
        let step = match jac.lu().solve(&rhs) {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => {
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    residual: norm,
                })
            }
        };
        let current = sum_sq(&r);
        let mut scale = 1.0;
        let mut accepted = None;
        let mut saw_valid = false;
        for halving in 0..=opts.max_halvings {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + scale * b).collect();
            if let Some(rt) = sys.residuals_at(&trial) {
                saw_valid = true;
                if sum_sq(&rt) < current {
                    if halving > 0 {
                        damping_events += 1;
                    }
                    accepted = Some((trial, rt));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((trial, rt)) => {
                z = trial;
                r = rt;
            }
            None if !saw_valid => return Err(Error::LeftDomain { residual: norm }),
            None => {
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    residual: norm,
                })
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: max_abs(&r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub solve: SolveOptions,
    /// How many times a failed γ increment may be halved before giving up.
    pub max_step_halvings: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            max_step_halvings: 2,
        }
    }
}

/// Traces a branch from `seed` (a solution at `seed.gamma`) to `gamma_end` in
/// `steps` equal increments. Each corrector starts from a secant prediction
/// built from the last two points, or from the last point alone. A failed
/// increment is halved; the intermediate points this creates are kept in the
/// returned branch, which starts with the seed.
pub fn continue_gamma(
    sys: &System,
    seed: &CriticalPoint,
    gamma_end: f64,
    steps: usize,
    opts: &ContinuationOptions,
) -> Result<Vec<CriticalPoint>> {
    ensure_positive(gamma_end)?;
    if steps == 0 {
        return Err(Error::EmptyRange("continuation needs at least one step".into()));
    }
    let gamma_start = seed.gamma;
    let targets: Vec<f64> = (1..=steps)
        .map(|i| {
            if i == steps {
                gamma_end
            } else {
                gamma_start + (gamma_end - gamma_start) * i as f64 / steps as f64
            }
        })
        .collect();
    let mut branch = vec![seed.clone()];
    for &target in &targets {
        let mut halvings = 0;
        let mut increment = target - branch[branch.len() - 1].gamma;
        loop {
            let from = branch[branch.len() - 1].gamma;
            let g = if (target - from).abs() <= increment.abs() {
                target
            } else {
                from + increment
            };
            match corrector(sys, &branch, g, &opts.solve) {
                Ok(cp) => {
                    branch.push(cp);
                    if g == target {
                        break;
                    }
                }
                Err(_) => {
                    halvings += 1;
                    if halvings > opts.max_step_halvings {
                        return Err(Error::BranchLost { gamma: g });
                    }
                    increment *= 0.5;
                }
            }
        }
    }
    Ok(branch)
}

fn corrector(
    sys: &System,
    branch: &[CriticalPoint],
    gamma: f64,
    opts: &SolveOptions,
) -> Result<CriticalPoint> {
    let last = &branch[branch.len() - 1];
    let mut guess = last.pattern.clone();
    if branch.len() >= 2 {
        let prev = &branch[branch.len() - 2];
        let t = (gamma - last.gamma) / (last.gamma - prev.gamma);
        let predicted: Vec<f64> = last
            .pattern
            .interfaces()
            .iter()
            .zip(prev.pattern.interfaces())
            .map(|(a, b)| a + t * (a - b))
            .collect();
        if let Ok(p) = make_pattern(&predicted, None) {
            guess = p;
        }
    }
    let local = System {
        gamma,
        ..sys.clone()
    };
    let mut cp = solve_critical(&local, &guess, GuessKind::Continuation, opts)?;
    cp.trace.initial_z = last.pattern.interfaces().to_vec();
    Ok(cp)
}
