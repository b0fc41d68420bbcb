//! Starting patterns for the Newton solver.

use std::sync::Arc;

use super::uniform::uniform_pattern;
use super::{Branch, GuessKind};
use crate::error::{Error, Result};
use crate::pattern::{make_pattern, AxisymPattern};
use crate::registry::{Named, Registry};

pub trait InitialGuess: Named + Send + Sync {
    fn kind(&self) -> GuessKind;
    fn guess(&self, n: usize, gamma: f64) -> Result<AxisymPattern>;
}

/// Equal spacing in z with zero mass.
pub struct UniformZ;

impl Named for UniformZ {
    fn name(&self) -> &'static str {
        "uniform-z"
    }
    fn description(&self) -> &'static str {
        "equal spacing in z with zero mass"
    }
}

impl InitialGuess for UniformZ {
    fn kind(&self) -> GuessKind {
        GuessKind::UniformZ
    }
    fn guess(&self, n: usize, _gamma: f64) -> Result<AxisymPattern> {
        uniform_pattern(n)
    }
}

/// Equal spacing in `atanh z` between the outermost uniform-z interfaces.
pub struct UniformAtanh;

impl Named for UniformAtanh {
    fn name(&self) -> &'static str {
        "uniform-atanh"
    }
    fn description(&self) -> &'static str {
        "equal spacing in atanh(z), same outer interfaces as uniform-z"
    }
}

impl InitialGuess for UniformAtanh {
    fn kind(&self) -> GuessKind {
        GuessKind::UniformAtanh
    }
    fn guess(&self, n: usize, _gamma: f64) -> Result<AxisymPattern> {
        let base = uniform_pattern(n)?;
        if n == 1 {
            return Ok(base);
        }
        let lo = base.interfaces()[0].atanh();
        let hi = base.interfaces()[n - 1].atanh();
        let z: Vec<f64> = (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).tanh())
            .collect();
        make_pattern(&z, None)
    }
}

/// Exact points of the explicit families: the double cap for two interfaces
/// and the inverted γ(z1) curves for three and four.
pub struct DoubleCapOrCurve;

impl Named for DoubleCapOrCurve {
    fn name(&self) -> &'static str {
        "explicit-curve"
    }
    fn description(&self) -> &'static str {
        "double cap (n = 2) or the inverted 3/4-interface gamma curves"
    }
}

impl InitialGuess for DoubleCapOrCurve {
    fn kind(&self) -> GuessKind {
        GuessKind::ExplicitCurve
    }
    fn guess(&self, n: usize, gamma: f64) -> Result<AxisymPattern> {
        match n {
            1 => make_pattern(&[0.0], None),
            2 => make_pattern(&[-0.5, 0.5], None),
            3 => Branch::Three.pattern(Branch::Three.z1_for_gamma(gamma)?),
            4 => Branch::Four.pattern(Branch::Four.z1_for_gamma(gamma)?),
            _ => Err(Error::DomainError(format!(
                "no explicit family with {n} interfaces"
            ))),
        }
    }
}

/// Registered initial guesses; "uniform-z" is the default.
pub fn initial_guesses() -> Registry<dyn InitialGuess> {
    let uz: Arc<dyn InitialGuess> = Arc::new(UniformZ);
    let ua: Arc<dyn InitialGuess> = Arc::new(UniformAtanh);
    let ec: Arc<dyn InitialGuess> = Arc::new(DoubleCapOrCurve);
    Registry::new("initial guess").with(uz).with(ua).with(ec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guesses_are_valid_patterns() {
        let reg = initial_guesses();
        assert_eq!(reg.default_strategy().name(), "uniform-z");
        for n in 1..=8 {
            for name in ["uniform-z", "uniform-atanh"] {
                let p = reg.get(name).unwrap().guess(n, 10.0).unwrap();
                assert_eq!(p.len(), n);
                assert!(p.is_equatorially_symmetric(1e-15));
            }
        }
        let ec = reg.get("explicit-curve").unwrap();
        assert_eq!(ec.guess(3, 2.0).unwrap().len(), 3);
        assert_eq!(ec.guess(4, 20.0).unwrap().len(), 4);
        assert!(ec.guess(4, 0.5).is_err());
        assert!(ec.guess(5, 20.0).is_err());
    }
}
