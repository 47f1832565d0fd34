//! Multiplicative systems `x' = f1(u) x`, `u' = phi(u)` with the fiber
//! `u = 0` attracting and `f1(0) = 1` (or `-1`).

use serde_json::json;

use super::{names, triangular_orbit, FamilyError, Orbit, Reduction, System};
use crate::expr::{DomainError, DomainErrorKind, ScalarFn};
use crate::fecld::{Decay, Envelope, EnvelopeSpec};
use crate::jacobsthal::jacobsthal_decay;
use crate::maps::{IterateOptions, TriangularMap};

fn contraction(lambda: f64) -> Result<ScalarFn, FamilyError> {
    if !(lambda.abs() < 1.0) {
        return Err(FamilyError::Degenerate(format!("need |lambda| < 1, got {lambda}")));
    }
    Ok(ScalarFn::linear(lambda))
}

/// `x' = (1 + a u) x`, `u' = lambda u`.
#[derive(Debug, Clone, Copy)]
pub struct LinearProduct {
    pub a: f64,
    pub lambda: f64,
}

impl LinearProduct {
    pub fn new(a: f64, lambda: f64) -> Result<Self, FamilyError> {
        contraction(lambda)?;
        Ok(LinearProduct { a, lambda })
    }

    pub fn map(&self) -> TriangularMap {
        let a = self.a;
        let f1 = ScalarFn::builtin(format!("1 + {a}*u"), move |u| 1.0 + a * u).with_derivative(ScalarFn::constant(a));
        TriangularMap::multiplicative(f1, ScalarFn::linear(self.lambda))
    }

    /// `x_n / x_0 = prod_{k<n} (1 + a lambda^k u0)`.
    pub fn partial_product(&self, u0: f64, n: usize) -> f64 {
        let mut p = 1.0;
        let mut u = u0;
        for _ in 0..n {
            p *= 1.0 + self.a * u;
            u *= self.lambda;
        }
        p
    }
}

impl System for LinearProduct {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "u0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        triangular_orbit(&self.map(), init, opts)
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        super::expect_len(&self.initial_names(), init)?;
        Ok(Reduction::single(self.map(), [init[0], init[1]], Some(0.0)))
    }
}

/// `x' = (1 - 1/ln|u|) x`, `u' = lambda u`, with the factor 1 at `u = 0`.
#[derive(Debug, Clone, Copy)]
pub struct LogProduct {
    pub lambda: f64,
}

impl LogProduct {
    pub fn new(lambda: f64) -> Result<Self, FamilyError> {
        contraction(lambda)?;
        Ok(LogProduct { lambda })
    }

    pub fn factor() -> ScalarFn {
        ScalarFn::builtin_checked("1 - 1/ln|u|", |u| {
            if u == 0.0 {
                return Ok(1.0);
            }
            let l = u.abs().ln();
            if l == 0.0 {
                return Err(DomainError::new(DomainErrorKind::DivisionByZero, "1/ln|u|", u));
            }
            Ok(1.0 - 1.0 / l)
        })
    }

    pub fn map(&self) -> TriangularMap {
        TriangularMap::multiplicative(Self::factor(), ScalarFn::linear(self.lambda))
    }
}

impl System for LogProduct {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "u0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        triangular_orbit(&self.map(), init, opts)
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        super::expect_len(&self.initial_names(), init)?;
        Ok(Reduction::single(self.map(), [init[0], init[1]], Some(0.0)))
    }
}

/// `x' = (a + b |u|^alpha) x` with `a = 1` or `-1`, `u' = lambda u`.
#[derive(Debug, Clone, Copy)]
pub struct PowerProduct {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl PowerProduct {
    pub fn new(a: f64, b: f64, alpha: f64, lambda: f64) -> Result<Self, FamilyError> {
        if a != 1.0 && a != -1.0 {
            return Err(FamilyError::Degenerate(format!("a must be 1 or -1, got {a}")));
        }
        if !(alpha > 0.0) {
            return Err(FamilyError::Degenerate("alpha must be positive".into()));
        }
        contraction(lambda)?;
        Ok(PowerProduct { a, b, alpha, lambda })
    }

    pub fn map(&self) -> TriangularMap {
        let PowerProduct { a, b, alpha, .. } = *self;
        let f1 = ScalarFn::builtin(format!("{a} + {b}*|u|^{alpha}"), move |u| a + b * u.abs().powf(alpha));
        TriangularMap::multiplicative(f1, ScalarFn::linear(self.lambda))
    }

    /// `V(nu) = |b| nu^alpha`, `W = 0` along `p_n = |lambda|^n |u0|`.
    pub fn envelope(&self, u0: f64, epsilon: f64) -> EnvelopeSpec {
        EnvelopeSpec::new(
            Envelope::power(self.b.abs(), self.alpha),
            Envelope::zero(),
            epsilon,
            Decay::Geometric { c: u0.abs(), ratio: self.lambda.abs() },
        )
    }

    /// `S_V = |b| |u0|^alpha / (1 - |lambda|^alpha)`.
    pub fn s_v(&self, u0: f64) -> f64 {
        self.b.abs() * u0.abs().powf(self.alpha) / (1.0 - self.lambda.abs().powf(self.alpha))
    }
}

impl System for PowerProduct {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "u0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        triangular_orbit(&self.map(), init, opts)
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        super::expect_len(&self.initial_names(), init)?;
        Ok(Reduction::single(self.map(), [init[0], init[1]], Some(0.0)))
    }

    fn analysis(&self, init: &[f64]) -> serde_json::Value {
        json!({ "S_V": init.get(1).map(|&u0| self.s_v(u0)) })
    }
}

/// `x' = (1 + b |u|^alpha) x`, `u' = |u| - a |u|^k`. The fiber `u = 0`
/// attracts but is not hyperbolic; `x` converges iff `alpha > k - 1`.
#[derive(Debug, Clone, Copy)]
pub struct NonhyperbolicProduct {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub k: f64,
}

impl NonhyperbolicProduct {
    pub fn new(a: f64, b: f64, alpha: f64, k: f64) -> Result<Self, FamilyError> {
        if !(a > 0.0) || b == 0.0 || !(k > 1.0) || !(alpha > 0.0) {
            return Err(FamilyError::Degenerate("need a > 0, b != 0, k > 1 and alpha > 0".into()));
        }
        Ok(NonhyperbolicProduct { a, b, alpha, k })
    }

    pub fn fiber_map(&self) -> ScalarFn {
        let (a, k) = (self.a, self.k);
        ScalarFn::builtin(format!("|u| - {a}*|u|^{k}"), move |u| u.abs() - a * u.abs().powf(k))
    }

    pub fn map(&self) -> TriangularMap {
        let (b, alpha) = (self.b, self.alpha);
        let f1 = ScalarFn::builtin(format!("1 + {b}*|u|^{alpha}"), move |u| 1.0 + b * u.abs().powf(alpha));
        TriangularMap::multiplicative(f1, self.fiber_map())
    }

    pub fn converges(&self) -> bool {
        self.alpha > self.k - 1.0
    }

    /// `V(nu) = |b| nu^alpha`, `W = 0`, `eps = 1` along the power-law decay
    /// `n^-(1/(k-1) - delta)`.
    pub fn envelope(&self, delta: f64) -> Result<EnvelopeSpec, FamilyError> {
        let decay = jacobsthal_decay(self.k, self.a, delta).map_err(|e| FamilyError::Degenerate(e.to_string()))?;
        Ok(EnvelopeSpec::new(Envelope::power(self.b.abs(), self.alpha), Envelope::zero(), 1.0, decay))
    }
}

impl System for NonhyperbolicProduct {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "u0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        triangular_orbit(&self.map(), init, opts)
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        super::expect_len(&self.initial_names(), init)?;
        Ok(Reduction::single(self.map(), [init[0], init[1]], Some(0.0)))
    }

    fn analysis(&self, _init: &[f64]) -> serde_json::Value {
        json!({ "x_converges": self.converges() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify_regime, Regime};
    use crate::fecld::{check_certificate, Verdict};
    use crate::maps::iterate;

    #[test]
    fn linear_product_regime_and_partial_product() {
        let m = LinearProduct::new(1.0, 0.5).unwrap();
        assert_eq!(classify_regime(&m.map(), 0.0).unwrap(), Regime::FixedPointFiber);
        let t = iterate(&m.map(), [1.0, 0.5], IterateOptions { budget: 30, ..Default::default() });
        assert_eq!(t.states[30][0], m.partial_product(0.5, 30));
    }

    #[test]
    fn log_product_grows() {
        let m = LogProduct::new(0.5).unwrap();
        assert_eq!(LogProduct::factor().eval(0.0).unwrap(), 1.0);
        assert!(LogProduct::factor().eval(1.0).is_err());
        let t = iterate(&m.map(), [1.0, 0.5], IterateOptions { budget: 200, record: false, ..Default::default() });
        assert!(t.last()[0] > 10.0);
    }

    #[test]
    fn power_product_certificate_sum() {
        let m = PowerProduct::new(1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(m.s_v(0.5), 1.0);
        let cert = check_certificate(&m.map(), 0.0, &m.envelope(0.5, 0.5), 256).unwrap();
        assert_ne!(cert.verdict, Verdict::Refuted);
        assert!((cert.s_v - 1.0).abs() < 1e-12);
        assert_eq!(cert.s_w, 0.0);
        let alt = PowerProduct::new(-1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(classify_regime(&alt.map(), 0.0).unwrap(), Regime::TwoPeriodicFiber);
    }

    #[test]
    fn nonhyperbolic_threshold() {
        for (alpha, refuted) in [(0.5, true), (1.0, true), (1.5, false), (2.0, false), (3.0, false)] {
            let m = NonhyperbolicProduct::new(1.0, 1.0, alpha, 2.0).unwrap();
            let cert = check_certificate(&m.map(), 0.0, &m.envelope(0.01).unwrap(), 256).unwrap();
            assert_eq!(cert.verdict == Verdict::Refuted, refuted, "alpha = {alpha}");
            assert_eq!(m.converges(), !refuted);
        }
    }
}
