use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use anyhow::{bail, Result};
use clap::ValueEnum;
use serde::Serialize;

use oksphere::criticality::{
    continue_gamma, conventions, gamma_curve, initial_guesses, max_abs, polar_cap_bound, solve_critical,
    uniform_criticality_check, ContinuationOptions, Convention, CriticalPoint, GuessKind, SolveOptions, System,
};
use oksphere::energy::{nonlocal_evaluators, perimeter, total_energy, two_interface_grid};
use oksphere::minimizer::{
    boundary_escape, escape_threshold, frame_escape, local_minimize, move_residuals, BoundaryPoint, EscapeCase,
    FrameEscape, MinimizeOptions, SweepOrder, TraceRow,
};
use oksphere::stability::{stability_report, StabilityReport};
use oksphere::{make_pattern, verify, AxisymPattern, Error};

use crate::args::*;
use crate::output::{num, Output};

/// Raised when the verification suite has failing criteria.
#[derive(Debug)]
pub struct VerifyFailed(pub Vec<usize>);

impl fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verification failed for criteria {:?}", self.0)
    }
}

impl std::error::Error for VerifyFailed {}

/// The kebab-case flag value, which is also the registry name.
fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn convention(c: ConventionArg) -> Result<Arc<dyn Convention>> {
    Ok(conventions().get(&value_name(&c))?)
}

fn system(gamma: f64, s: &SystemArgs) -> Result<(System, SolveOptions)> {
    if s.tol.is_nan() || s.tol <= 0.0 {
        bail!("--tol must be positive");
    }
    let sys = System::new(gamma)
        .with_convention(convention(s.convention)?)
        .with_mass(s.m_target);
    let opts = SolveOptions {
        tolerance: s.tol,
        max_iterations: s.max_iter,
        ..SolveOptions::default()
    };
    Ok((sys, opts))
}

fn start(n: usize, gamma: f64, guess: GuessArg, z: Option<&[f64]>) -> Result<(AxisymPattern, GuessKind)> {
    if let Some(z) = z {
        return Ok((make_pattern(z, None)?, GuessKind::Given));
    }
    let g = initial_guesses().get(&value_name(&guess))?;
    Ok((g.guess(n, gamma)?, g.kind()))
}

pub fn run(command: &Command, out: &Output, seed: u64) -> Result<()> {
    match command {
        Command::Energy(a) => energy(a, out),
        Command::Sweep2(a) => sweep2(a, out),
        Command::Xi(a) => xi(a, out),
        Command::Critical { action } => match action {
            CriticalCommand::Solve(a) => solve(a, out),
            CriticalCommand::Continue(a) => continuation(a, out),
            CriticalCommand::CheckUniform(a) => check_uniform(a, out),
        },
        Command::GammaCurve(a) => curve(a, out),
        Command::Minimize(a) => minimize(a, out, seed),
        Command::Escape(a) => escape(a, out),
        Command::Stability(a) => stability(a, out),
        Command::Bounds(a) => bounds(a, out),
        Command::Verify(a) => run_verify(a, out),
    }
}

#[derive(Serialize)]
struct EnergyReport {
    pattern: AxisymPattern,
    gamma: f64,
    evaluator: &'static str,
    perimeter: f64,
    nonlocal: f64,
    total: f64,
    perimeter_over_pi: f64,
    nonlocal_over_pi: f64,
    total_over_pi: f64,
    /// Closed-form nonlocal contribution of each segment.
    per_segment: Vec<f64>,
}

fn energy(a: &EnergyArgs, out: &Output) -> Result<()> {
    let p = make_pattern(&a.z, a.m)?;
    let evaluator = nonlocal_evaluators().get(&value_name(&a.evaluator))?;
    let breakdown = total_energy(&p, a.gamma);
    let perim = perimeter(&p);
    let nonlocal = 2.0 * PI * a.gamma * evaluator.integral(&p)?;
    let total = perim + nonlocal;
    let report = EnergyReport {
        pattern: p,
        gamma: a.gamma,
        evaluator: evaluator.name(),
        perimeter: perim,
        nonlocal,
        total,
        perimeter_over_pi: perim / PI,
        nonlocal_over_pi: nonlocal / PI,
        total_over_pi: total / PI,
        per_segment: breakdown.per_segment,
    };
    out.json("energy.json", &report)
}

fn sweep2(a: &Sweep2Args, out: &Output) -> Result<()> {
    let grid = two_interface_grid(&a.z1, &a.gamma)?;
    let rows = grid.rows().map(|(z, g, e)| vec![num(z), num(g), num(e)]);
    out.csv("sweep2.csv", &["z1", "gamma", "energy_over_pi"], rows)
}

fn xi(a: &XiArgs, out: &Output) -> Result<()> {
    if a.points < 2 {
        bail!("--points must be at least 2");
    }
    let p = make_pattern(&a.z, None)?;
    let rows = (0..a.points)
        .map(|i| {
            let z = if i + 1 == a.points {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / (a.points - 1) as f64
            };
            Ok(vec![num(z), num(p.xi_eval(z)?)])
        })
        .collect::<Result<Vec<_>>>()?;
    out.csv("xi.csv", &["z", "xi"], rows)
}

fn solve(a: &SolveArgs, out: &Output) -> Result<()> {
    let (sys, opts) = system(a.gamma, &a.system)?;
    let (init, kind) = start(a.n, a.gamma, a.guess, a.z.as_deref())?;
    let cp = solve_critical(&sys, &init, kind, &opts)?;
    out.json("critical.json", &cp)
}

fn continuation(a: &ContinueArgs, out: &Output) -> Result<()> {
    let (sys, opts) = system(a.gamma_start, &a.system)?;
    let (init, kind) = start(a.n, a.gamma_start, a.guess, a.z.as_deref())?;
    let seed = solve_critical(&sys, &init, kind, &opts)?;
    let copts = ContinuationOptions {
        solve: opts,
        max_step_halvings: a.max_step_halvings,
    };
    let branch = continue_gamma(&sys, &seed, a.gamma_end, a.steps, &copts)?;
    let records: Vec<_> = branch.iter().map(CriticalPoint::catalog_record).collect();
    out.jsonl("catalog.jsonl", &records)
}

fn check_uniform(a: &CheckUniformArgs, out: &Output) -> Result<()> {
    let report = uniform_criticality_check(a.count, a.gamma_max, convention(a.convention)?)?;
    out.json("uniform.json", &report)
}

fn curve(a: &GammaCurveArgs, out: &Output) -> Result<()> {
    let points = gamma_curve(a.branch, &a.z1.values())?;
    let rows = points
        .iter()
        .map(|p| vec![num(p.z1), num(p.gamma), p.branch.to_string()]);
    out.csv("gamma_curve.csv", &["z1", "gamma", "branch"], rows)
}

#[derive(Serialize)]
struct MinimizeReport {
    start: AxisymPattern,
    pattern: AxisymPattern,
    gamma: f64,
    cycles: usize,
    energy_over_pi: f64,
    monotone: bool,
    /// Largest first-order energy change per unit strip shift at the result.
    stationarity_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<TraceRow>>,
}

fn minimize(a: &MinimizeArgs, out: &Output, seed: u64) -> Result<()> {
    let p0 = make_pattern(&a.z, None)?;
    let opts = MinimizeOptions {
        x_tol: a.x_tol,
        max_cycles: a.max_cycles,
        threshold: a.threshold,
        symmetric: a.symmetric,
        order: match a.order {
            OrderArg::Ascending => SweepOrder::Ascending,
            OrderArg::Shuffled => SweepOrder::Shuffled { seed },
        },
        ..MinimizeOptions::default()
    };
    let run = local_minimize(&p0, a.gamma, &opts)?;
    let trace_path = a.trace.clone().or_else(|| out.out_dir.as_ref().map(|d| d.join("minimize_trace.csv")));
    let pattern_path = out.target("minimize.json");
    let report = MinimizeReport {
        start: p0,
        pattern: run.pattern.clone(),
        gamma: a.gamma,
        cycles: run.cycles(),
        energy_over_pi: run.trace.last().map_or(f64::NAN, |r| r.energy_over_pi),
        monotone: run.is_monotone(),
        stationarity_residual: max_abs(&move_residuals(&run.pattern, a.gamma)),
        trace: trace_path.is_none().then(|| run.trace.clone()),
    };
    if let Some(path) = &trace_path {
        let rows = run
            .trace
            .iter()
            .map(|r| vec![r.cycle.to_string(), num(r.energy_over_pi), num(r.max_move)]);
        out.csv_to(Some(path), &["cycle", "energy_over_pi", "max_move"], rows)?;
    }
    out.json_to(pattern_path.as_deref(), &report)
}

#[derive(Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum EscapeReport {
    Frame {
        alpha: f64,
        beta: f64,
        gamma: f64,
        escaped: bool,
        escape: Option<FrameEscape>,
        threshold: Option<f64>,
    },
    Boundary {
        gamma: f64,
        escaped: bool,
        case: Option<EscapeCase>,
        pattern: Option<AxisymPattern>,
        shift: Option<f64>,
        energy_before: Option<f64>,
        energy_after: Option<f64>,
    },
}

fn escape(a: &EscapeArgs, out: &Output) -> Result<()> {
    let opts = MinimizeOptions::default();
    let report = if let Some(z) = &a.z {
        let b = BoundaryPoint::from_interfaces(z, None)?;
        match boundary_escape(&b, a.gamma, &opts) {
            Ok(e) => EscapeReport::Boundary {
                gamma: a.gamma,
                escaped: true,
                case: Some(e.case),
                pattern: Some(e.pattern),
                shift: Some(e.shift),
                energy_before: Some(e.energy_before),
                energy_after: Some(e.energy_after),
            },
            Err(Error::NoEscape { .. }) => EscapeReport::Boundary {
                gamma: a.gamma,
                escaped: false,
                case: None,
                pattern: None,
                shift: None,
                energy_before: None,
                energy_after: None,
            },
            Err(e) => return Err(e.into()),
        }
    } else {
        let escape = match frame_escape(a.alpha, a.beta, a.gamma, &opts) {
            Ok(e) => Some(e),
            Err(Error::NoEscape { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let threshold = if a.threshold {
            Some(escape_threshold(a.alpha, a.beta, 1e-3, 1e-6, &opts)?)
        } else {
            None
        };
        EscapeReport::Frame {
            alpha: a.alpha,
            beta: a.beta,
            gamma: a.gamma,
            escaped: escape.is_some(),
            escape,
            threshold,
        }
    };
    out.json("escape.json", &report)
}

#[derive(Serialize)]
struct StabilityOutput {
    pattern: AxisymPattern,
    #[serde(flatten)]
    report: StabilityReport,
}

fn stability(a: &StabilityArgs, out: &Output) -> Result<()> {
    let sys = System::new(a.gamma).with_convention(convention(a.convention)?);
    let opts = SolveOptions::default();
    let pattern = match (&a.z, a.n) {
        (Some(_), Some(_)) => bail!("give either --z or --n, not both"),
        (None, None) => bail!("one of --z or --n is required"),
        (Some(z), None) => {
            let p = make_pattern(z, None)?;
            if a.polish {
                solve_critical(&sys.clone().with_mass(p.mass()), &p, GuessKind::Given, &opts)?.pattern
            } else {
                p
            }
        }
        (None, Some(n)) => {
            let (init, kind) = start(n, a.gamma, GuessArg::UniformZ, None)?;
            solve_critical(&sys, &init, kind, &opts)?.pattern
        }
    };
    let report = stability_report(&pattern, &sys, a.k_max)?;
    out.json("stability.json", &StabilityOutput { pattern, report })
}

fn bounds(a: &BoundsArgs, out: &Output) -> Result<()> {
    let rows = a
        .gamma
        .values()
        .into_iter()
        .map(|g| {
            let coef = -6.0 * g / E - 1.0 / 3f64.sqrt();
            Ok(vec![num(g), num(coef), num(polar_cap_bound(g)?)])
        })
        .collect::<Result<Vec<_>>>()?;
    out.csv("bounds.csv", &["gamma", "a", "z1_lower_bound"], rows)
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    checks: Vec<verify::Check>,
}

fn run_verify(a: &VerifyArgs, out: &Output) -> Result<()> {
    let ids: Vec<usize> = a.only.clone().unwrap_or_else(|| (1..=verify::CRITERIA).collect());
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > verify::CRITERIA) {
        bail!("criteria are numbered 1..={}, got {bad}", verify::CRITERIA);
    }
    let checks: Vec<verify::Check> = if a.only.is_none() {
        verify::run_all()
    } else {
        ids.iter().map(|&i| verify::run(i)).collect()
    };
    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<usize> = checks.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    if let Some(path) = out.target("verify.json") {
        out.json_to(
            Some(&path),
            &VerifyReport {
                passed: failed.is_empty(),
                checks,
            },
        )?;
    }
    if !failed.is_empty() {
        return Err(VerifyFailed(failed).into());
    }
    Ok(())
}
