//! The self-verification suite: one structured check per acceptance criterion.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::{
    asymptote_3, asymptote_4, continue_gamma, gamma4_limit, gamma_of_z1_3, gamma_of_z1_4, initial_guesses, max_abs,
    polar_cap_bound, solve_critical, uniform_criticality_check, CatalogRecord, ContinuationOptions, Convention,
    CriticalPoint, GuessKind, Printed, SolveOptions, System, Variational,
};
use crate::energy::{nonlocal_integral_closed, nonlocal_integral_quadrature, two_interface_grid};
use crate::error::Result;
use crate::grid::{log_spaced, ParamRange};
use crate::minimizer::{apply_elementary_move, frame_escape, local_minimize, MinimizeOptions, MoveFrame};
use crate::pattern::{make_pattern, AxisymPattern};
use crate::quadrature::{Integrator, QuadratureSpec};
use crate::stability::{assemble_J, doublecap_kernel_integral, doublecap_kernel_quadrature, single_mode_J, Mode, Parity};

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Set when the check departs from the literal wording of the criterion.
    pub note: Option<String>,
}

impl Check {
    fn new(id: usize, name: &str, pass: bool, detail: String) -> Self {
        Self {
            id,
            name: name.to_string(),
            pass,
            detail,
            note: None,
        }
    }

    fn failed(id: usize, name: &str, err: impl std::fmt::Display) -> Self {
        Self::new(id, name, false, format!("error: {err}"))
    }

    /// `PASS 3 four-interface curve: ...`
    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{tag} {:>2} {}: {}", self.id, self.name, self.detail);
        if let Some(note) = &self.note {
            s.push_str(&format!(" [note: {note}]"));
        }
        s
    }
}

pub const CRITERIA: usize = 11;

const NAMES: [&str; CRITERIA] = [
    "nonlocal energy closed form vs quadrature",
    "three-interface curve limit and asymptote",
    "four-interface curve limit and asymptote",
    "uniform pattern criticality",
    "double cap critical for all gamma",
    "solver agrees with the three-interface curve",
    "polar-cap lower bound",
    "double-cap kernel identity",
    "single-mode second variation",
    "minimizer properties and boundary escape",
    "two-interface energy landscape",
];

pub fn name(id: usize) -> &'static str {
    NAMES[id - 1]
}

/// Runs criterion `id` (1-based).
pub fn run(id: usize) -> Check {
    let name = NAMES[id - 1];
    let outcome = match id {
        1 => nonlocal_oracle(),
        2 => three_interface_curve(),
        3 => four_interface_curve(),
        4 => uniform_criticality(),
        5 => double_cap_criticality(),
        6 => solver_curve_consistency(),
        7 => polar_bound(),
        8 => kernel_identity(),
        9 => single_mode(),
        10 => minimizer_properties(),
        11 => energy_landscape(),
        _ => unreachable!("criteria are numbered 1..={CRITERIA}"),
    };
    match outcome {
        Ok(mut c) => {
            c.id = id;
            c.name = name.to_string();
            c
        }
        Err(e) => Check::failed(id, name, e),
    }
}

/// Runs every criterion, in order.
pub fn run_all() -> Vec<Check> {
    (1..=CRITERIA).into_par_iter().map(run).collect()
}

fn check(pass: bool, detail: String) -> Check {
    Check::new(0, "", pass, detail)
}

fn nonlocal_oracle() -> Result<Check> {
    let mut rng = StdRng::seed_from_u64(1);
    let spec = QuadratureSpec {
        rel_tol: 1e-12,
        ..QuadratureSpec::default()
    };
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(1..=8);
        let mut z: Vec<f64> = (0..n).map(|_| rng.random_range(-0.999..0.999)).collect();
        z.sort_by(f64::total_cmp);
        let Ok(p) = make_pattern(&z, None) else { continue };
        if !(p.mass().abs() < 0.9) {
            continue;
        }
        let closed = nonlocal_integral_closed(&p);
        let quad = nonlocal_integral_quadrature(&p, spec)?;
        worst = worst.max((closed - quad).abs() / closed.abs().max(f64::MIN_POSITIVE));
        done += 1;
    }
    Ok(check(worst <= 1e-8, format!("max relative error {worst:.2e} over 100 patterns (tol 1e-8)")))
}

fn three_interface_curve() -> Result<Check> {
    let z = 1e-5;
    let g = gamma_of_z1_3(z)?;
    let g2 = gamma_of_z1_3(2.0 * z)?;
    // γ₃(z) = 1/4 + 3z/8 + O(z²): one Richardson step removes the linear term
    let limit = 2.0 * g - g2;
    let slope = (g - 0.25) / z;
    let root = asymptote_3();
    let pass = (limit - 0.25).abs() <= 1e-6 && (slope - 0.375).abs() <= 1e-4 && (root - 0.69).abs() <= 0.01;
    let mut c = check(
        pass,
        format!(
            "limit estimate {limit:.12} (|diff| {:.1e}, tol 1e-6); gamma(1e-5) - 1/4 = {:.3e} = {slope:.6} z; root {root:.6}",
            (limit - 0.25).abs(),
            g - 0.25
        ),
    );
    c.note = Some(
        "gamma(1e-5) itself sits 3.75e-6 above 1/4 because the curve has slope 3/8 at 0, so the limit is \
         checked by Richardson extrapolation from z1 = 1e-5 and 2e-5"
            .into(),
    );
    Ok(c)
}

fn four_interface_curve() -> Result<Check> {
    let eps = 1e-10;
    let exact = gamma4_limit();
    let g = gamma_of_z1_4(0.5 + eps)?;
    let root = asymptote_4();
    let pass = (g - exact).abs() <= 1e-8 && (exact - 1.00345).abs() <= 5e-6 && (root - 0.78554).abs() <= 1e-4;
    Ok(check(
        pass,
        format!(
            "gamma(1/2 + 1e-10) = {g:.12}, 1/(2 sqrt3 log(4/3)) = {exact:.12} (|diff| {:.1e}); asymptote {root:.6}",
            (g - exact).abs()
        ),
    ))
}

fn uniform_criticality() -> Result<Check> {
    let r3 = uniform_criticality_check(3, 1e4, Arc::new(Printed))?;
    let expected = -1.0 / (2.0 * 3f64.sqrt() * 0.75f64.ln());
    let g3 = r3.critical_gamma.unwrap_or(f64::NAN);
    let res3 = r3.residual_at_critical_gamma.unwrap_or(f64::INFINITY);
    let mut pass = (g3 - expected).abs() <= 1e-12 * expected && res3 <= 1e-11;
    let mut detail = format!("uniform 3: gamma* = {g3:.12}, residual {res3:.1e}");
    for conv in [Arc::new(Printed) as Arc<dyn Convention>, Arc::new(Variational)] {
        for count in [5, 6] {
            let r = uniform_criticality_check(count, 1e4, conv.clone())?;
            pass &= r.min_residual_over_sweep >= 1e-3;
            detail.push_str(&format!(
                "; uniform {count} ({}) min residual {:.3e}",
                conv.name(),
                r.min_residual_over_sweep
            ));
        }
    }
    Ok(check(pass, detail))
}

fn double_cap_criticality() -> Result<Check> {
    let p = make_pattern(&[-0.5, 0.5], None)?;
    let mut worst: f64 = 0.0;
    for conv in [Arc::new(Printed) as Arc<dyn Convention>, Arc::new(Variational)] {
        for g in log_spaced(1e-3, 1e4, 50)? {
            let sys = System::new(g).with_convention(conv.clone());
            worst = worst.max(max_abs(&sys.residuals(&p)));
        }
    }
    Ok(check(
        worst <= 1e-12,
        format!("max residual {worst:.1e} at 50 gamma values in [1e-3, 1e4], both conventions"),
    ))
}

fn solver_curve_consistency() -> Result<Check> {
    let sys = System::new(2.0);
    let init = initial_guesses().get("uniform-z")?.guess(3, 2.0)?;
    let cp = solve_critical(&sys, &init, GuessKind::UniformZ, &SolveOptions::default())?;
    let z1 = cp.pattern.interfaces()[2];
    let g = gamma_of_z1_3(z1)?;
    Ok(check(
        (g - 2.0).abs() <= 1e-8,
        format!("solved z = {:?}, gamma_of_z1_3({z1:.12}) = {g:.12}", cp.pattern.interfaces()),
    ))
}

/// Critical points found from uniform starts for 2..=8 interfaces over a γ
/// grid, plus continuation of the 3- and 4-interface branches, under both
/// conventions. Points with interfaces closer than 1e-4 are dropped.
pub fn reference_catalog() -> Vec<CatalogRecord> {
    let gammas = log_spaced(0.3, 300.0, 10).expect("fixed range");
    let convs: Vec<Arc<dyn Convention>> = vec![Arc::new(Printed), Arc::new(Variational)];
    let guesses = initial_guesses();
    let mut jobs = Vec::new();
    for conv in &convs {
        for n in 2..=8 {
            for &g in &gammas {
                for name in ["uniform-z", "uniform-atanh"] {
                    jobs.push((conv.clone(), n, g, name));
                }
            }
        }
    }
    let mut points: Vec<CriticalPoint> = jobs
        .par_iter()
        .filter_map(|(conv, n, g, name)| {
            let sys = System::new(*g).with_convention(conv.clone());
            let guess = guesses.get(name).ok()?;
            let init = guess.guess(*n, *g).ok()?;
            solve_critical(&sys, &init, guess.kind(), &SolveOptions::default()).ok()
        })
        .collect();
    for conv in &convs {
        for n in [3, 4] {
            let sys = System::new(2.0).with_convention(conv.clone());
            let Ok(init) = initial_guesses().default_strategy().guess(n, 2.0) else { continue };
            let Ok(seed) = solve_critical(&sys, &init, GuessKind::UniformZ, &SolveOptions::default()) else {
                continue;
            };
            if let Ok(branch) = continue_gamma(&sys, &seed, 200.0, 40, &ContinuationOptions::default()) {
                points.extend(branch);
            }
        }
    }
    points
        .iter()
        .map(CriticalPoint::catalog_record)
        .filter(|r| r.min_gap.is_none_or(|g| g >= 1e-4))
        .collect()
}

fn polar_bound() -> Result<Check> {
    let catalog = reference_catalog();
    let multi: Vec<&CatalogRecord> = catalog.iter().filter(|r| r.n >= 2).collect();
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for r in &multi {
        let bound = polar_cap_bound(r.gamma)?;
        let margin = r.z[0] - bound;
        tightest = tightest.min(margin);
        if margin < 0.0 {
            violations += 1;
        }
    }
    let at_zero = polar_cap_bound(0.0)?;
    let pass = !multi.is_empty() && violations == 0 && at_zero == -0.5;
    Ok(check(
        pass,
        format!(
            "{} catalogued points with n >= 2, {violations} violations, smallest margin {tightest:.3e}; bound at gamma = 0 is {at_zero}",
            multi.len()
        ),
    ))
}

fn kernel_identity() -> Result<Check> {
    let q = Integrator::new(QuadratureSpec {
        rel_tol: 1e-11,
        abs_tol: 1e-12,
        ..QuadratureSpec::default()
    })?;
    let mut worst_closed: f64 = 0.0;
    let mut worst_parity: f64 = 0.0;
    for k in 1..=6u32 {
        let cos = doublecap_kernel_quadrature(k, Parity::Cos, &q)?;
        let sin = doublecap_kernel_quadrature(k, Parity::Sin, &q)?;
        let closed = -2.0 * PI * PI / (f64::from(k) * 3f64.powi(k as i32));
        worst_closed = worst_closed
            .max((cos - closed).abs())
            .max((doublecap_kernel_integral(k) - closed).abs());
        worst_parity = worst_parity.max((cos - sin).abs());
    }
    Ok(check(
        worst_closed <= 1e-7 && worst_parity <= 1e-10,
        format!("k = 1..6: max |quadrature - closed form| {worst_closed:.1e}, max |cos-cos - sin-sin| {worst_parity:.1e}"),
    ))
}

fn single_mode() -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for (n, g) in [(3, 5.0), (4, 50.0), (5, 100.0)] {
        let sys = System::new(g).with_convention(Arc::new(Variational));
        let init = initial_guesses().default_strategy().guess(n, g)?;
        let cp = solve_critical(&sys, &init, GuessKind::UniformZ, &SolveOptions::default())?;
        let z_n = *cp.pattern.interfaces().last().expect("n >= 3");
        let j = assemble_J(&cp.pattern, &sys, 6)?;
        for k in 1..=6 {
            let m = Mode {
                circle: n,
                k,
                parity: Parity::Sin,
            };
            let assembled = j.entry(m, m).expect("mode in basis") / PI;
            let formula = single_mode_J(z_n, g, k)?;
            worst = worst.max((assembled - formula).abs() / formula.abs().max(f64::MIN_POSITIVE));
        }
        cases.push(format!("n={n} gamma={g}"));
    }
    Ok(check(
        worst <= 1e-6,
        format!("k = 1..6 on {}: max relative difference {worst:.1e}", cases.join(", ")),
    ))
}

fn random_pattern(rng: &mut StdRng, n: usize) -> AxisymPattern {
    loop {
        let mut z: Vec<f64> = (0..n).map(|_| rng.random_range(-0.95..0.95)).collect();
        z.sort_by(f64::total_cmp);
        if let Ok(p) = make_pattern(&z, None) {
            if p.min_gap() > 1e-2 {
                return p;
            }
        }
    }
}

fn minimizer_properties() -> Result<Check> {
    let opts = MinimizeOptions::default();
    let mut rng = StdRng::seed_from_u64(10);

    let mut mass_ok = true;
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let p = random_pattern(&mut rng, n);
        let k = rng.random_range(0..=n - 2);
        let f = MoveFrame::of(&p, k)?;
        let t = rng.random_range(0.9 * f.t_min..0.9 * f.t_max);
        let q = apply_elementary_move(&p, k, t)?;
        mass_ok &= q.mass().to_bits() == p.mass().to_bits() && (q.computed_mass() - p.mass()).abs() < 1e-13;
    }

    let starts: Vec<(AxisymPattern, f64)> = (0..24)
        .map(|i| {
            let n = 2 + i % 5;
            let g = [1.0, 10.0, 100.0][i % 3];
            (random_pattern(&mut rng, n), g)
        })
        .collect();
    let runs: Vec<_> = starts.par_iter().map(|(p, g)| local_minimize(p, *g, &opts)).collect();
    let mut monotone = 0;
    for run in &runs {
        if run.as_ref().is_ok_and(|r| r.is_monotone()) {
            monotone += 1;
        }
    }

    let dc = local_minimize(&make_pattern(&[-0.4, 0.6], None)?, 5.0, &opts)?;
    let z = dc.pattern.interfaces();
    let dc_residual = max_abs(&System::new(5.0).with_convention(Arc::new(Variational)).residuals(&dc.pattern));
    let dc_ok = dc_residual <= 1e-6 && (z[0] + 0.5).abs() <= 1e-6 && (z[1] - 0.5).abs() <= 1e-6;

    let escape = frame_escape(0.6, 1.0, 1e4, &opts)?;
    let escape_ok = escape.e_min < escape.limit && escape.x > 0.6 && escape.x < 1.0;
    let no_escape = matches!(frame_escape(0.6, 1.0, 0.1, &opts), Err(crate::Error::NoEscape { .. }));

    let pass = mass_ok && monotone == runs.len() && dc.is_monotone() && dc_ok && escape_ok && no_escape;
    Ok(check(
        pass,
        format!(
            "mass bit-exact over 500 moves: {mass_ok}; monotone traces {monotone}/{} random runs; {{-0.4, 0.6}} at gamma 5 -> [{:.9}, {:.9}] residual {dc_residual:.1e}; \
             escape at gamma 1e4: x = {:.5}, e_min = {:.3} < L = {:.3}; gamma 0.1 no escape: {no_escape}",
            runs.len(),
            z[0],
            z[1],
            escape.x,
            escape.e_min,
            escape.limit
        ),
    ))
}

fn energy_landscape() -> Result<Check> {
    let z1 = ParamRange::new(-1.0, 0.0, 201)?;
    let gamma = ParamRange::new(0.1, 10.0, 2)?;
    let grid = two_interface_grid(&z1, &gamma)?;
    let h = z1.step();
    let low = grid.z1[grid.argmin_z1(0)];
    let high = grid.z1[grid.argmin_z1(1)];
    let pass = (low == -1.0 || low == 0.0) && (high + 0.5).abs() <= h;
    Ok(check(
        pass,
        format!("grid step {h}: slice minimum at z1 = {low} for gamma 0.1, z1 = {high} for gamma 10"),
    ))
}
