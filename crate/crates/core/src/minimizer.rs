//! Elementary moves, the per-strip energy profile `e(x; α, β, γ)`, cyclic
//! local minimization over moves and boundary-escape moves.
//!
//! An elementary move shifts the two interfaces `z_{k+1}, z_{k+2}` (1-based)
//! by the same `t`. Mass is unchanged and ξ only changes on `[z_k, z_{k+3}]`,
//! so every energy difference here is evaluated from those three segments.

use std::f64::consts::{LN_2, PI};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::energy::{line_integral, total_energy};
use crate::error::{Error, Result};
use crate::pattern::{make_pattern, phase, AxisymPattern};
use crate::potential::interior_v_diffs;

/// `f(x) = (1-x) log(1-x) + (1+x) log(1+x)` with `0·log 0 = 0`.
pub fn profile_f(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            value: x,
            domain: "[-1, 1]",
        });
    }
    Ok(xlogx(1.0 - x) + xlogx(1.0 + x))
}

fn xlogx(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s * s.ln()
    }
}

/// `f(±1) = 2 log 2`.
pub const PROFILE_F_AT_POLE: f64 = 2.0 * LN_2;

/// Perimeter and nonlocal parts of `e(x; α, β)`, without the constant `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentEnergy {
    pub perimeter: f64,
    pub nonlocal: f64,
}

impl SegmentEnergy {
    pub fn total(&self, gamma: f64) -> f64 {
        self.perimeter + gamma * self.nonlocal
    }
}

/// Parts of the strip profile on the closed range `α ≤ x ≤ β`.
///
/// `e_p(x) = √(1-((α+x)/2)²) + √(1-((x+β)/2)²)` and
/// `e_nl(x) = (α-x) f((α+x)/2) + (x-β) f((x+β)/2)`.
pub fn segment_energy_parts(x: f64, alpha: f64, beta: f64) -> Result<SegmentEnergy> {
    if !(-1.0 <= alpha && alpha <= x && x <= beta && beta <= 1.0) || alpha == beta {
        return Err(Error::DomainError(format!(
            "strip profile needs -1 <= alpha <= x <= beta <= 1 with alpha < beta, got ({alpha}, {x}, {beta})"
        )));
    }
    let z1 = 0.5 * (alpha + x);
    let z2 = 0.5 * (x + beta);
    let perimeter = (1.0 - z1 * z1).sqrt() + (1.0 - z2 * z2).sqrt();
    let nonlocal = (alpha - x) * profile_f(z1)? + (x - beta) * profile_f(z2)?;
    Ok(SegmentEnergy {
        perimeter,
        nonlocal,
    })
}

/// `e(x; α, β, γ) = e_p(x) + γ e_nl(x)` for `α < x < β ≤ 1`, up to a constant
/// that depends only on α and β.
pub fn segment_energy(x: f64, alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    if !(alpha < x && x < beta) {
        return Err(Error::DomainError(format!(
            "x = {x} must lie strictly inside ({alpha}, {beta})"
        )));
    }
    Ok(segment_energy_parts(x, alpha, beta)?.total(gamma))
}

/// Roots of the three ξ lines around the strip moved by pair `k`.
///
/// The roots are those of the linear pieces of ξ on `[z_k, z_{k+1}]`,
/// `[z_{k+1}, z_{k+2}]` and `[z_{k+2}, z_{k+3}]`, extended beyond their segment
/// when ξ does not vanish inside it. At zero mass the moved interfaces are the
/// midpoints `(α+x)/2` and `(x+β)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveFrame {
    pub k: usize,
    pub alpha: f64,
    pub x: f64,
    pub beta: f64,
    /// Admissible shifts `t`, open interval.
    pub t_min: f64,
    pub t_max: f64,
}

impl MoveFrame {
    pub fn of(p: &AxisymPattern, k: usize) -> Result<Self> {
        let n = p.len();
        if n < 2 || k > n - 2 {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: n.saturating_sub(2),
            });
        }
        let xi = p.xi_profile().nodes;
        let root = |j: usize| p.node(j) - xi[j] / p.slope(j);
        let alpha = if k == 0 { -1.0 } else { root(k) };
        let beta = if k + 2 == n { 1.0 } else { root(k + 2) };
        Ok(Self {
            k,
            alpha,
            x: root(k + 1),
            beta,
            t_min: p.node(k) - p.node(k + 1),
            t_max: p.node(k + 3) - p.node(k + 2),
        })
    }

    /// The 1-based indices of the two interfaces that move.
    pub fn source_indices(&self) -> (usize, usize) {
        (self.k + 1, self.k + 2)
    }
}

/// Shifts interfaces `k+1` and `k+2` (1-based) by `t`. Mass is carried over
/// unchanged: the move is mass-neutral in exact arithmetic.
pub fn apply_elementary_move(p: &AxisymPattern, k: usize, t: f64) -> Result<AxisymPattern> {
    apply_moves(p, &[(k, t)])
}

/// Applies several pair shifts at once; the final ordering is checked.
fn apply_moves(p: &AxisymPattern, moves: &[(usize, f64)]) -> Result<AxisymPattern> {
    let n = p.len();
    let mut z = p.interfaces().to_vec();
    for &(k, t) in moves {
        if n < 2 || k > n - 2 {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: n.saturating_sub(2),
            });
        }
        if t == 0.0 {
            continue;
        }
        z[k] += t;
        z[k + 1] += t;
    }
    check_ordering(&z)?;
    Ok(AxisymPattern::from_parts_unchecked(z, p.mass()))
}

fn check_ordering(z: &[f64]) -> Result<()> {
    let mut prev = -1.0;
    for (i, &zi) in z.iter().enumerate() {
        if !(zi > prev) {
            return Err(Error::OrderingViolated(format!(
                "interface {} at {zi} is not above {prev}",
                i + 1
            )));
        }
        prev = zi;
    }
    if !(prev < 1.0) {
        return Err(Error::OrderingViolated(format!("interface {} at {prev} reaches the pole", z.len())));
    }
    Ok(())
}

/// Open interval of `t` for which shifting interfaces by `d_i t` keeps them
/// strictly ordered inside (-1, 1).
fn shift_range(z: &[f64], d: &[f64]) -> (f64, f64) {
    let n = z.len();
    let node = |i: usize| if i == 0 { -1.0 } else if i == n + 1 { 1.0 } else { z[i - 1] };
    let dir = |i: usize| if i == 0 || i == n + 1 { 0.0 } else { d[i - 1] };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..=n {
        let gap = node(i + 1) - node(i);
        let delta = dir(i + 1) - dir(i);
        if delta > 0.0 {
            lo = lo.max(-gap / delta);
        } else if delta < 0.0 {
            hi = hi.min(gap / -delta);
        }
    }
    (lo, hi)
}

/// `√(1-(z+t)²) - √(1-z²)` without cancellation.
fn chord_change(z: f64, t: f64) -> f64 {
    let w = z + t;
    -t * (z + w) / ((1.0 - w * w).sqrt() + (1.0 - z * z).sqrt())
}

/// `E(p') - E(p)` for shifting pair `k` by `t`, from the three affected segments.
fn pair_energy_change(p: &AxisymPattern, xi: &[f64], k: usize, t: f64, gamma: f64) -> f64 {
    let n = p.len();
    let nodes = [p.node(k), p.node(k + 1), p.node(k + 2), p.node(k + 3)];
    let moved = [nodes[0], nodes[1] + t, nodes[2] + t, nodes[3]];
    let strip = |ns: &[f64; 4]| {
        let mut xi_c = xi[k];
        let mut sum = 0.0;
        for j in 0..3 {
            let seg = k + j;
            let a = p.slope(seg);
            sum += line_integral(ns[j], ns[j + 1], xi_c, a, seg == 0, seg == n);
            xi_c += a * (ns[j + 1] - ns[j]);
        }
        sum
    };
    let perimeter = chord_change(nodes[1], t) + chord_change(nodes[2], t);
    2.0 * PI * (perimeter + gamma * (strip(&moved) - strip(&nodes)))
}

/// A move of one or two pairs (the second is the mirror image in symmetric mode).
#[derive(Debug, Clone, Copy, PartialEq)]
enum MoveShape {
    Single(usize),
    Mirrored { lower: usize, upper: usize },
}

impl MoveShape {
    fn shifts(self, t: f64) -> Vec<(usize, f64)> {
        match self {
            MoveShape::Single(k) => vec![(k, t)],
            MoveShape::Mirrored { lower, upper } => vec![(lower, t), (upper, -t)],
        }
    }

    fn direction(self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for (k, s) in self.shifts(1.0) {
            d[k] = s;
            d[k + 1] = s;
        }
        d
    }

    fn energy_change(self, p: &AxisymPattern, t: f64, gamma: f64) -> f64 {
        match self {
            MoveShape::Single(k) => pair_energy_change(p, &p.xi_profile().nodes, k, t, gamma),
            MoveShape::Mirrored { lower, upper } => {
                let first = pair_energy_change(p, &p.xi_profile().nodes, lower, t, gamma);
                let mid = AxisymPattern::from_parts_unchecked(
                    {
                        let mut z = p.interfaces().to_vec();
                        z[lower] += t;
                        z[lower + 1] += t;
                        z
                    },
                    p.mass(),
                );
                first + pair_energy_change(&mid, &mid.xi_profile().nodes, upper, -t, gamma)
            }
        }
    }
}

/// Result of a bracketed scalar search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `[a, b]` down to width `x_tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, x_tol: f64) -> ScalarMinimum {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evaluations = 2;
    while b - a > x_tol && evaluations < 400 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
        if c >= d {
            break;
        }
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    ScalarMinimum {
        x,
        value,
        evaluations,
    }
}

/// Evaluates `f` on a uniform grid over `[lo, hi]` (plus `extra` points), then
/// refines the best grid cell by golden section. Never returns a value above
/// the best grid value.
pub fn bracketed_minimum(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: usize,
    x_tol: f64,
    extra: &[f64],
) -> ScalarMinimum {
    let grid = grid.max(2);
    let mut pts: Vec<f64> = (0..=grid)
        .map(|i| if i == grid { hi } else { lo + (hi - lo) * i as f64 / grid as f64 })
        .collect();
    pts.extend(extra.iter().copied().filter(|x| (lo..=hi).contains(x)));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for i in 1..pts.len() {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    let a = pts[best.saturating_sub(1)];
    let b = pts[(best + 1).min(pts.len() - 1)];
    let refined = golden_section(&f, a, b, x_tol);
    let evaluations = pts.len() + refined.evaluations;
    if refined.value < vals[best] {
        ScalarMinimum {
            evaluations,
            ..refined
        }
    } else {
        ScalarMinimum {
            x: pts[best],
            value: vals[best],
            evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepOrder {
    Ascending,
    /// A fresh permutation of the frames every cycle, from a seeded generator.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Width at which the scalar search stops.
    pub x_tol: f64,
    pub max_cycles: usize,
    /// A cycle that lowers `E/π` by less than this ends the run.
    pub threshold: f64,
    /// Move mirrored pairs together, keeping an equatorially symmetric pattern symmetric.
    pub symmetric: bool,
    /// Grid cells used to bracket each scalar search.
    pub grid: usize,
    pub order: SweepOrder,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            x_tol: 1e-12,
            max_cycles: 200,
            threshold: 1e-13,
            symmetric: false,
            grid: 64,
            order: SweepOrder::Ascending,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("x_tol", self.x_tol), ("threshold", self.threshold)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::DomainError(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_cycles == 0 || self.grid < 2 {
            return Err(Error::DomainError("max_cycles must be >= 1 and grid >= 2".into()));
        }
        Ok(())
    }
}

/// Outcome of one scalar minimization along a move.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleStep {
    pub pattern: AxisymPattern,
    pub shift: f64,
    /// `E(p') - E(p)`, including the 2π factors; zero when the input is kept.
    pub energy_change: f64,
}

/// Room kept between a moved interface and its neighbour or a pole.
fn edge_margin(lo: f64, hi: f64) -> f64 {
    1e-9 * (hi - lo)
}

fn minimize_shape(p: &AxisymPattern, shape: MoveShape, gamma: f64, opts: &MinimizeOptions) -> Result<TripleStep> {
    let (lo, hi) = shift_range(p.interfaces(), &shape.direction(p.len()));
    let margin = edge_margin(lo, hi);
    let (lo, hi) = (lo + margin, hi - margin);
    let keep = TripleStep {
        pattern: p.clone(),
        shift: 0.0,
        energy_change: 0.0,
    };
    if !(lo < hi) {
        return Ok(keep);
    }
    let best = bracketed_minimum(|t| shape.energy_change(p, t, gamma), lo, hi, opts.grid, opts.x_tol, &[0.0]);
    if best.x == 0.0 || !(best.value < 0.0) {
        return Ok(keep);
    }
    // Near a collapsing strip the rounded shift can still touch a neighbour.
    let pattern = match apply_moves(p, &shape.shifts(best.x)) {
        Ok(q) => q,
        Err(Error::OrderingViolated(_)) => return Ok(keep),
        Err(e) => return Err(e),
    };
    Ok(TripleStep {
        pattern,
        shift: best.x,
        energy_change: best.value,
    })
}

/// Minimizes the energy over shifts of pair `k`. The pattern is returned
/// unchanged when no shift lowers the energy.
pub fn minimize_triple(p: &AxisymPattern, k: usize, gamma: f64, opts: &MinimizeOptions) -> Result<TripleStep> {
    MoveFrame::of(p, k)?;
    minimize_shape(p, MoveShape::Single(k), gamma, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub cycle: usize,
    pub energy_over_pi: f64,
    /// Largest |t| applied during the cycle.
    pub max_move: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeRun {
    pub pattern: AxisymPattern,
    pub gamma: f64,
    /// Row 0 is the starting pattern.
    pub trace: Vec<TraceRow>,
}

impl MinimizeRun {
    pub fn cycles(&self) -> usize {
        self.trace.len() - 1
    }

    pub fn is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].energy_over_pi <= w[0].energy_over_pi)
    }
}

fn sweep_shapes(n: usize, symmetric: bool) -> Vec<MoveShape> {
    if n < 2 {
        return Vec::new();
    }
    if symmetric {
        (0..=n - 2)
            .filter(|&j| j + 1 < n - 2 - j)
            .map(|j| MoveShape::Mirrored {
                lower: j,
                upper: n - 2 - j,
            })
            .collect()
    } else {
        (0..=n - 2).map(MoveShape::Single).collect()
    }
}

/// Cyclic descent over elementary moves until a full cycle lowers `E/π` by
/// less than `opts.threshold`.
pub fn local_minimize(p0: &AxisymPattern, gamma: f64, opts: &MinimizeOptions) -> Result<MinimizeRun> {
    opts.validate()?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::OutOfRange {
            value: gamma,
            domain: "[0, inf)",
        });
    }
    if opts.symmetric && !p0.is_equatorially_symmetric(0.0) {
        return Err(Error::DomainError(
            "symmetric mode needs an exactly equatorially symmetric start".into(),
        ));
    }
    let mut shapes = sweep_shapes(p0.len(), opts.symmetric);
    let mut rng = match opts.order {
        SweepOrder::Shuffled { seed } => Some(StdRng::seed_from_u64(seed)),
        SweepOrder::Ascending => None,
    };
    let mut p = p0.clone();
    let mut energy = total_energy(&p, gamma).total_over_pi();
    let mut trace = vec![TraceRow {
        cycle: 0,
        energy_over_pi: energy,
        max_move: 0.0,
    }];
    for cycle in 1..=opts.max_cycles {
        if let Some(rng) = rng.as_mut() {
            shapes.shuffle(rng);
        }
        let mut max_move: f64 = 0.0;
        for &shape in &shapes {
            let step = minimize_shape(&p, shape, gamma, opts)?;
            max_move = max_move.max(step.shift.abs());
            p = step.pattern;
        }
        let next = total_energy(&p, gamma).total_over_pi();
        // Guard the trace against a last-ulp rise from re-summing the total.
        let next = next.min(energy);
        trace.push(TraceRow {
            cycle,
            energy_over_pi: next,
            max_move,
        });
        let decrease = energy - next;
        energy = next;
        if decrease < opts.threshold {
            return Ok(MinimizeRun { pattern: p, gamma, trace });
        }
    }
    Err(Error::CycleLimit {
        cycles: opts.max_cycles,
    })
}

/// `dE/dt / 2π` for each pair move at `t = 0`. These vanish exactly at the
/// critical points of the variational convention.
pub fn move_residuals(p: &AxisymPattern, gamma: f64) -> Vec<f64> {
    let n = p.len();
    if n < 2 {
        return Vec::new();
    }
    let dv = interior_v_diffs(p);
    (0..=n - 2)
        .map(|k| {
            let kappa = |i: usize| p.kappa_g(i).unwrap_or(f64::NAN);
            phase(k + 1) * ((kappa(k + 2) - kappa(k + 1)) - 4.0 * gamma * dv[k])
        })
        .collect()
}

/// Minimum of a strip profile compared with its value at the `x → β` end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameEscape {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Interior minimizer of `e(·; α, β, γ)`.
    pub x: f64,
    pub e_min: f64,
    /// `L = lim_{x→β} e(x; α, β, γ)`.
    pub limit: f64,
    /// Interfaces `(α+x)/2`, `(x+β)/2` after the move.
    pub interfaces: (f64, f64),
}

fn escape_margin(scale: f64) -> f64 {
    1e-12 * scale.abs().max(1.0)
}

/// Looks for an interior minimum of `e(x; α, β, γ)` strictly below the limit
/// value at `x → β`. With `β = 1` this is the pole case: a strip pressed into
/// the pole is pulled back out when γ is large enough.
pub fn frame_escape(alpha: f64, beta: f64, gamma: f64, opts: &MinimizeOptions) -> Result<FrameEscape> {
    let limit = segment_energy_parts(beta, alpha, beta)?.total(gamma);
    let width = beta - alpha;
    let margin = edge_margin(0.0, width);
    let f = |x: f64| segment_energy(x, alpha, beta, gamma).unwrap_or(f64::INFINITY);
    let best = bracketed_minimum(f, alpha + margin, beta - margin, opts.grid.max(256), opts.x_tol, &[]);
    let interior = best.x < beta - 2.0 * margin && best.x > alpha + 2.0 * margin;
    if interior && best.value < limit - escape_margin(limit) {
        Ok(FrameEscape {
            alpha,
            beta,
            gamma,
            x: best.x,
            e_min: best.value,
            limit,
            interfaces: (0.5 * (alpha + best.x), 0.5 * (best.x + beta)),
        })
    } else {
        Err(Error::NoEscape { gamma })
    }
}

/// Smallest γ (to relative `rel_tol`) at which [`frame_escape`] succeeds,
/// found by bisection between `gamma_lo` (failing) and a doubled upper end.
pub fn escape_threshold(alpha: f64, beta: f64, gamma_lo: f64, rel_tol: f64, opts: &MinimizeOptions) -> Result<f64> {
    let works = |g: f64| match frame_escape(alpha, beta, g, opts) {
        Ok(_) => Ok(true),
        Err(Error::NoEscape { .. }) => Ok(false),
        Err(e) => Err(e),
    };
    if works(gamma_lo)? {
        return Err(Error::DomainError(format!(
            "escape already succeeds at the lower end gamma = {gamma_lo}"
        )));
    }
    let mut lo = gamma_lo;
    let mut hi = gamma_lo.max(1e-3) * 2.0;
    while !works(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoEscape { gamma: hi });
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if works(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A configuration on the boundary of the admissible set.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryPoint {
    /// `interior` plus one more interface sitting exactly on the north pole.
    Pole { interior: AxisymPattern },
    /// `interior` plus two coincident interfaces at `at`.
    Merged { interior: AxisymPattern, at: f64 },
}

impl BoundaryPoint {
    /// Reads a non-decreasing interface list with either `z_n = 1` or exactly
    /// one coincident pair. `m` is the mass of the configuration.
    pub fn from_interfaces(z: &[f64], m: Option<f64>) -> Result<Self> {
        let n = z.len();
        if n < 2 {
            return Err(Error::DomainError("a boundary configuration needs at least two interfaces".into()));
        }
        if z[n - 1] == 1.0 {
            let interior = make_pattern(&z[..n - 1], m)?;
            return Ok(BoundaryPoint::Pole { interior });
        }
        let merged: Vec<usize> = (0..n - 1).filter(|&i| z[i] == z[i + 1]).collect();
        match merged.as_slice() {
            [i] => {
                let mut rest = z.to_vec();
                rest.drain(*i..*i + 2);
                let interior = make_pattern(&rest, m)?;
                Ok(BoundaryPoint::Merged { interior, at: z[*i] })
            }
            _ => Err(Error::DomainError(
                "expected an interface on the north pole or exactly one coincident pair".into(),
            )),
        }
    }

    /// Interfaces including the degenerate ones.
    pub fn interfaces(&self) -> Vec<f64> {
        match self {
            BoundaryPoint::Pole { interior } => {
                let mut z = interior.interfaces().to_vec();
                z.push(1.0);
                z
            }
            BoundaryPoint::Merged { interior, at } => {
                let mut z = interior.interfaces().to_vec();
                let i = z.partition_point(|&w| w < *at);
                z.splice(i..i, [*at, *at]);
                z
            }
        }
    }

    pub fn interior(&self) -> &AxisymPattern {
        match self {
            BoundaryPoint::Pole { interior } | BoundaryPoint::Merged { interior, .. } => interior,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeCase {
    Pole,
    MergedDown,
    MergedUp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeOutcome {
    pub case: EscapeCase,
    pub pattern: AxisymPattern,
    /// Size of the shift `t > 0`.
    pub shift: f64,
    pub energy_before: f64,
    pub energy_after: f64,
}

/// Interface positions after a shift of `t`.
type Shift = Box<dyn Fn(f64) -> Vec<f64>>;

/// Moves a boundary configuration into the interior by the elementary move of
/// the existence argument, with the shift chosen by scalar minimization.
///
/// Pole case: the pair (last interior interface, pole) moves down by `t`.
/// Merged case: the pair (interface below the merge point, lower copy) moves
/// down by `t`; when nothing lies below, the pair (upper copy, next interface)
/// moves up instead.
pub fn boundary_escape(b: &BoundaryPoint, gamma: f64, opts: &MinimizeOptions) -> Result<EscapeOutcome> {
    let interior = b.interior();
    let m = interior.mass();
    let z = interior.interfaces();
    let n = z.len();
    let (case, t_max, build): (EscapeCase, f64, Shift) = match b {
        BoundaryPoint::Pole { .. } => {
            if n == 0 {
                return Err(Error::DomainError("pole case needs an interface below the pole".into()));
            }
            let below = if n >= 2 { z[n - 2] } else { -1.0 };
            let zz = z.to_vec();
            (
                EscapeCase::Pole,
                z[n - 1] - below,
                Box::new(move |t| {
                    let mut out = zz.clone();
                    out[n - 1] -= t;
                    out.push(1.0 - t);
                    out
                }),
            )
        }
        BoundaryPoint::Merged { at, .. } => {
            let at = *at;
            let i = z.partition_point(|&w| w < at);
            if i < n && z[i] == at {
                return Err(Error::DomainError("merge point coincides with another interface".into()));
            }
            let zz = z.to_vec();
            if i >= 1 {
                let below = if i >= 2 { z[i - 2] } else { -1.0 };
                (
                    EscapeCase::MergedDown,
                    z[i - 1] - below,
                    Box::new(move |t| {
                        let mut out = zz.clone();
                        out[i - 1] -= t;
                        out.splice(i..i, [at - t, at]);
                        out
                    }),
                )
            } else if i < n {
                let above = if i + 1 < n { z[i + 1] } else { 1.0 };
                (
                    EscapeCase::MergedUp,
                    above - z[i],
                    Box::new(move |t| {
                        let mut out = zz.clone();
                        out[i] += t;
                        out.splice(i..i, [at, at + t]);
                        out
                    }),
                )
            } else {
                return Err(Error::DomainError("merged pair has no neighbouring interface to move".into()));
            }
        }
    };
    let energy_before = total_energy(interior, gamma).total;
    let eval = |t: f64| {
        let zs = build(t);
        match check_ordering(&zs) {
            Ok(()) => total_energy(&AxisymPattern::from_parts_unchecked(zs, m), gamma).total - energy_before,
            Err(_) => f64::INFINITY,
        }
    };
    let margin = edge_margin(0.0, t_max);
    let best = bracketed_minimum(eval, margin, t_max - margin, opts.grid.max(256), opts.x_tol, &[]);
    let interior_min = best.x > 2.0 * margin && best.x < t_max - 2.0 * margin;
    if !(interior_min && best.value < -escape_margin(energy_before)) {
        return Err(Error::NoEscape { gamma });
    }
    let pattern = AxisymPattern::from_parts_unchecked(build(best.x), m);
    Ok(EscapeOutcome {
        case,
        energy_after: energy_before + best.value,
        pattern,
        shift: best.x,
        energy_before,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criticality::{max_abs, solve_critical, GuessKind, SolveOptions, System, Variational};
    use approx::assert_relative_eq;
    use rand::Rng;
    use std::sync::Arc;

    fn random_pattern(rng: &mut StdRng, n: usize) -> AxisymPattern {
        loop {
            let mut z: Vec<f64> = (0..n).map(|_| rng.random_range(-0.98..0.98)).collect();
            z.sort_by(f64::total_cmp);
            if let Ok(p) = make_pattern(&z, None) {
                if p.min_gap() > 1e-3 {
                    return p;
                }
            }
        }
    }

    #[test]
    fn profile_values() {
        assert_eq!(profile_f(0.0).unwrap(), 0.0);
        assert_relative_eq!(profile_f(1.0).unwrap(), PROFILE_F_AT_POLE, epsilon = 1e-15);
        assert_relative_eq!(profile_f(-1.0).unwrap(), 1.386_294, epsilon = 1e-6);
        assert!(profile_f(1.5).is_err());
        let h = 1e-4;
        for x in [-0.9, 0.0, 0.9] {
            let fd = (profile_f(x + h).unwrap() - 2.0 * profile_f(x).unwrap() + profile_f(x - h).unwrap()) / (h * h);
            assert_relative_eq!(fd, 2.0 / (1.0 - x * x), max_relative = 1e-6);
        }
    }

    #[test]
    fn strip_profile_ends_agree() {
        for (a, b) in [(0.1, 0.2), (-0.7, 0.4), (0.6, 1.0), (-1.0, -0.2)] {
            let at_a = segment_energy_parts(a, a, b).unwrap().nonlocal;
            let at_b = segment_energy_parts(b, a, b).unwrap().nonlocal;
            assert_relative_eq!(at_a, at_b, epsilon = 1e-14);
        }
        assert!(segment_energy(0.1, 0.1, 0.2, 1.0).is_err());
        assert!(segment_energy(0.5, 0.1, 1.2, 1.0).is_err());
    }

    #[test]
    fn strip_nonlocal_matches_quadrature_differences() {
        use crate::quadrature::{Integrator, QuadratureSpec};
        // ∫_α^β ξ² /(1-z²) for the three-line ξ, differences in x.
        let q = Integrator::new(QuadratureSpec::default()).unwrap();
        let (a, b) = (-0.3, 0.55);
        let direct = |x: f64| {
            let (z1, z2) = (0.5 * (a + x), 0.5 * (x + b));
            let xi = |z: f64| if z < z1 { z - a } else if z < z2 { x - z } else { z - b };
            let f = |z: f64| xi(z).powi(2) / (1.0 - z * z);
            q.integrate(&f, a, z1).unwrap() + q.integrate(&f, z1, z2).unwrap() + q.integrate(&f, z2, b).unwrap()
        };
        let e = |x: f64| segment_energy_parts(x, a, b).unwrap().nonlocal;
        for (x1, x2) in [(-0.2, 0.3), (0.0, 0.5), (-0.25, -0.1)] {
            assert_relative_eq!(e(x1) - e(x2), direct(x1) - direct(x2), epsilon = 1e-10);
        }
    }

    #[test]
    fn nonlocal_slope_sign_structure() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let a: f64 = rng.random_range(-0.95..0.9);
            let b: f64 = rng.random_range(a + 0.02..1.0);
            let h = 1e-7 * (b - a);
            let d = |x: f64| {
                let e = |y: f64| segment_energy_parts(y, a, b).unwrap().nonlocal;
                (e(x + h) - e(x - h)) / (2.0 * h)
            };
            assert!(d(a + 0.01 * (b - a)) < 0.0);
            assert!(d(b - 0.01 * (b - a)) > 0.0);
        }
    }

    #[test]
    fn fig_panel_has_interior_minimum() {
        let (a, b, g) = (0.1, 0.2, 350.0);
        let best = bracketed_minimum(|x| segment_energy(x, a, b, g).unwrap(), a + 1e-9, b - 1e-9, 256, 1e-12, &[]);
        assert!(best.x > a + 1e-3 && best.x < b - 1e-3, "{}", best.x);
    }

    #[test]
    fn frame_roots_are_fixed_and_midpoints_at_zero_mass() {
        let p = make_pattern(&[-0.8, -0.3, 0.1, 0.6], None).unwrap();
        assert!(p.mass().abs() < 1e-15);
        for k in 0..=2 {
            let f = MoveFrame::of(&p, k).unwrap();
            let z = p.interfaces();
            assert_relative_eq!(0.5 * (f.alpha + f.x), z[k], epsilon = 1e-14);
            assert_relative_eq!(0.5 * (f.x + f.beta), z[k + 1], epsilon = 1e-14);
            let moved = apply_elementary_move(&p, k, 0.01).unwrap();
            let g = MoveFrame::of(&moved, k).unwrap();
            assert_relative_eq!(g.alpha, f.alpha, epsilon = 1e-14);
            assert_relative_eq!(g.beta, f.beta, epsilon = 1e-14);
            assert_relative_eq!(g.x, f.x + 0.02, epsilon = 1e-14);
        }
        assert!(MoveFrame::of(&p, 3).is_err());
    }

    #[test]
    fn moves_conserve_mass_bit_for_bit() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.random_range(2..=8);
            let p = random_pattern(&mut rng, n);
            let k = rng.random_range(0..=n - 2);
            let f = MoveFrame::of(&p, k).unwrap();
            let t = rng.random_range(0.9 * f.t_min..0.9 * f.t_max);
            let q = apply_elementary_move(&p, k, t).unwrap();
            assert_eq!(q.mass().to_bits(), p.mass().to_bits());
            assert!((q.computed_mass() - p.mass()).abs() < 1e-14);
        }
        let p = make_pattern(&[-0.2, 0.1, 0.4], None).unwrap();
        assert_eq!(apply_elementary_move(&p, 0, 0.0).unwrap(), p);
        assert!(matches!(apply_elementary_move(&p, 1, 0.7), Err(Error::OrderingViolated(_))));
        assert!(matches!(apply_elementary_move(&p, 0, 0.3), Err(Error::OrderingViolated(_))));
    }

    #[test]
    fn local_change_matches_total_energy() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..300 {
            let n = rng.random_range(2..=8);
            let p = random_pattern(&mut rng, n);
            let g = rng.random_range(0.0..50.0);
            let k = rng.random_range(0..=n - 2);
            let f = MoveFrame::of(&p, k).unwrap();
            let t = rng.random_range(0.9 * f.t_min..0.9 * f.t_max);
            let q = apply_elementary_move(&p, k, t).unwrap();
            let direct = total_energy(&q, g).total - total_energy(&p, g).total;
            let local = pair_energy_change(&p, &p.xi_profile().nodes, k, t, g);
            assert!((direct - local).abs() <= 1e-10 * (1.0 + g), "{direct} {local}");
        }
    }

    #[test]
    fn strip_profile_predicts_energy_differences_at_zero_mass() {
        let mut rng = StdRng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 100 {
            let n = rng.random_range(2..=8);
            let mut z: Vec<f64> = (0..n).map(|_| rng.random_range(-0.98..0.98)).collect();
            z.sort_by(f64::total_cmp);
            // mass is affine in z_n with slope (-1)^(n+1)
            let m = crate::pattern::mass_of(&z);
            z[n - 1] -= m / phase(n - 1);
            let Ok(p) = make_pattern(&z, None) else { continue };
            if p.min_gap() < 1e-3 || p.mass().abs() > 1e-15 {
                continue;
            }
            let g = rng.random_range(0.1..100.0);
            let k = rng.random_range(0..=n - 2);
            let f = MoveFrame::of(&p, k).unwrap();
            if !(f.alpha < f.x && f.x < f.beta) {
                continue;
            }
            let t = rng.random_range(0.8 * f.t_min..0.8 * f.t_max);
            let x2 = f.x + 2.0 * t;
            if !(f.alpha < x2 && x2 < f.beta) {
                continue;
            }
            let q = apply_elementary_move(&p, k, t).unwrap();
            let direct = total_energy(&q, g).total - total_energy(&p, g).total;
            let strip = 2.0 * PI * (segment_energy(x2, f.alpha, f.beta, g).unwrap() - segment_energy(f.x, f.alpha, f.beta, g).unwrap());
            assert!((direct - strip).abs() <= 1e-10 * (1.0 + g), "{direct} {strip} {p:?} k={k} t={t} g={g} {f:?}");
            checked += 1;
        }
    }

    #[test]
    fn move_residuals_are_energy_slopes() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.random_range(2..=7);
            let p = random_pattern(&mut rng, n);
            let g = rng.random_range(0.0..20.0);
            let r = move_residuals(&p, g);
            let xi = p.xi_profile().nodes;
            for k in 0..=n - 2 {
                let h = 1e-6 * p.min_gap().min(1.0);
                let fd = (pair_energy_change(&p, &xi, k, h, g) - pair_energy_change(&p, &xi, k, -h, g)) / (2.0 * h);
                assert!((fd / (2.0 * PI) - r[k]).abs() <= 1e-5 * (1.0 + r[k].abs()), "{fd} {}", r[k]);
            }
        }
    }

    #[test]
    fn triple_never_raises_energy() {
        let mut rng = StdRng::seed_from_u64(13);
        let opts = MinimizeOptions::default();
        for _ in 0..1000 {
            let n = rng.random_range(2..=6);
            let p = random_pattern(&mut rng, n);
            let g = 10f64.powf(rng.random_range(-2.0..3.0));
            let k = rng.random_range(0..=n - 2);
            let step = minimize_triple(&p, k, g, &opts).unwrap();
            assert!(step.energy_change <= 0.0);
            let e0 = total_energy(&p, g).total;
            let e1 = total_energy(&step.pattern, g).total;
            assert!(e1 <= e0 + 1e-12 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn symmetric_frame_finds_interior_critical_point() {
        // pattern {-0.6, -0.2, 0.2, 0.6} shifted pair 1 (the middle pair) sits
        // in a frame with α = -β.
        let p = make_pattern(&[-0.75, -0.2, 0.3, 0.75], None).unwrap();
        let f = MoveFrame::of(&p, 1).unwrap();
        assert_relative_eq!(f.alpha, -f.beta, epsilon = 1e-14);
        let g = 200.0;
        let opts = MinimizeOptions::default();
        let step = minimize_triple(&p, 1, g, &opts).unwrap();
        assert!(step.energy_change < 0.0);
        // the profile is even in x for α = -β, so its minimum is at x = 0
        let z = step.pattern.interfaces();
        assert!((z[1] + z[2]).abs() < 1e-6, "{z:?}");
        let again = minimize_triple(&step.pattern, 1, g, &opts).unwrap();
        assert!(again.shift.abs() < 1e-7 && again.energy_change > -1e-12);
    }

    #[test]
    fn two_interface_start_reaches_double_cap() {
        let p = make_pattern(&[-0.4, 0.6], None).unwrap();
        let run = local_minimize(&p, 5.0, &MinimizeOptions::default()).unwrap();
        assert!(run.is_monotone());
        let z = run.pattern.interfaces();
        assert!((z[0] + 0.5).abs() < 1e-6 && (z[1] - 0.5).abs() < 1e-6, "{z:?}");
        let sys = System::new(5.0).with_convention(Arc::new(Variational));
        assert!(max_abs(&sys.residuals(&run.pattern)) <= 1e-6);
    }

    #[test]
    fn minimizer_lands_on_variational_critical_point() {
        let g = 50.0;
        let p = crate::criticality::uniform_pattern(4).unwrap();
        let opts = MinimizeOptions {
            symmetric: true,
            ..Default::default()
        };
        let run = local_minimize(&p, g, &opts).unwrap();
        assert!(run.is_monotone());
        assert!(run.pattern.is_equatorially_symmetric(0.0));
        let sys = System::new(g).with_convention(Arc::new(Variational));
        let r = max_abs(&sys.residuals(&run.pattern));
        assert!(r <= 1e-6, "{r} {:?}", run.pattern);
        let solved = solve_critical(&sys, &run.pattern, GuessKind::Given, &SolveOptions::default()).unwrap();
        for (a, b) in solved.pattern.interfaces().iter().zip(run.pattern.interfaces()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn large_gamma_runs_stay_interior() {
        for count in [4, 6, 8] {
            let p = crate::criticality::uniform_pattern(count).unwrap();
            let run = local_minimize(&p, 200.0, &MinimizeOptions::default()).unwrap();
            assert!(run.is_monotone());
            let z = run.pattern.interfaces();
            assert_eq!(z.len(), count);
            assert!(run.pattern.min_gap() > 1e-3, "{z:?}");
            assert!(z[0] > -1.0 + 1e-3 && z[count - 1] < 1.0 - 1e-3);
        }
    }

    #[test]
    fn shuffled_order_is_reproducible() {
        let p = make_pattern(&[-0.8, -0.3, 0.1, 0.7], None).unwrap();
        let opts = MinimizeOptions {
            order: SweepOrder::Shuffled { seed: 42 },
            ..Default::default()
        };
        let a = local_minimize(&p, 30.0, &opts).unwrap();
        let b = local_minimize(&p, 30.0, &opts).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.pattern, b.pattern);
    }

    #[test]
    fn pole_frame_escape() {
        let opts = MinimizeOptions::default();
        let esc = frame_escape(0.6, 1.0, 1e4, &opts).unwrap();
        assert!(esc.e_min < esc.limit);
        assert!(esc.x > 0.6 && esc.x < 1.0);
        assert!(matches!(frame_escape(0.6, 1.0, 0.1, &opts), Err(Error::NoEscape { .. })));
        let g = escape_threshold(0.6, 1.0, 0.1, 1e-6, &opts).unwrap();
        assert!(g > 0.1 && g < 1e4);
        assert!(frame_escape(0.6, 1.0, g * 1.01, &opts).is_ok());
        assert!(frame_escape(0.6, 1.0, g * 0.99, &opts).is_err());
    }

    #[test]
    fn boundary_configurations_escape_at_large_gamma() {
        let opts = MinimizeOptions::default();
        let b = BoundaryPoint::from_interfaces(&[-0.5, 0.3, 1.0], None).unwrap();
        assert!(matches!(b, BoundaryPoint::Pole { .. }));
        let out = boundary_escape(&b, 1e3, &opts).unwrap();
        assert_eq!(out.case, EscapeCase::Pole);
        assert_eq!(out.pattern.len(), 3);
        assert!(out.energy_after < out.energy_before);
        assert_eq!(out.pattern.mass(), b.interior().mass());
        assert!((out.pattern.computed_mass() - out.pattern.mass()).abs() < 1e-14);
        assert!(matches!(boundary_escape(&b, 0.01, &opts), Err(Error::NoEscape { .. })));

        let b = BoundaryPoint::from_interfaces(&[-0.6, -0.1, 0.2, 0.2], None).unwrap();
        assert_eq!(b.interfaces(), vec![-0.6, -0.1, 0.2, 0.2]);
        let out = boundary_escape(&b, 1e3, &opts).unwrap();
        assert_eq!(out.case, EscapeCase::MergedDown);
        assert_eq!(out.pattern.len(), b.interior().len() + 2);
        assert!(out.pattern.min_gap() > 0.0);
        assert!(out.energy_after < out.energy_before);

        let b = BoundaryPoint::from_interfaces(&[-0.4, -0.4, 0.5], None).unwrap();
        let out = boundary_escape(&b, 1e3, &opts).unwrap();
        assert_eq!(out.case, EscapeCase::MergedUp);
        assert!(BoundaryPoint::from_interfaces(&[-0.4, 0.5], None).is_err());
    }
}
