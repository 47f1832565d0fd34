//! Slow convergence to a parabolic fixed point at 0.
//!
//! For `f(x) = x - a x^k + ...` with `k > 1` and `a > 0`, iterates from small
//! positive `u0` decay like `((k-1) a n)^(-1/(k-1))`. [`verify_jacobsthal`]
//! checks this numerically; [`jacobsthal_decay`] turns the rate into a
//! power-law decay sequence for envelope certificates.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{DomainError, ScalarFn};
use crate::fecld::Decay;

/// Number of sample points for the `0 < f(x) < x` check on `(0, u0]`.
const SAMPLES: usize = 1024;
/// Where the slope `f(x)/x` is required to be close to 1.
const SLOPE_POINT: f64 = 1e-4;
const SLOPE_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum JacobsthalError {
    #[error("precondition violated at x = {witness}: {reason}")]
    PreconditionViolated { witness: f64, reason: String },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub k: f64,
    pub a: f64,
    pub u0: f64,
    pub probes: Vec<u64>,
    /// `n^(1/(k-1)) u_n` at each probe.
    pub values: Vec<f64>,
    /// The value at the largest probe.
    pub limit_estimate: f64,
    /// `((k-1) a)^(-1/(k-1))`.
    pub predicted: f64,
    pub relative_error: f64,
}

impl AsymptoticReport {
    pub fn within(&self, tol: f64) -> bool {
        (self.limit_estimate - self.predicted).abs() < tol
    }
}

pub fn predicted_constant(k: f64, a: f64) -> f64 {
    ((k - 1.0) * a).powf(-1.0 / (k - 1.0))
}

fn violated(witness: f64, reason: impl Into<String>) -> JacobsthalError {
    JacobsthalError::PreconditionViolated { witness, reason: reason.into() }
}

fn check_shape(f: &ScalarFn, u0: f64) -> Result<(), JacobsthalError> {
    for i in 1..=SAMPLES {
        let x = u0 * i as f64 / SAMPLES as f64;
        let y = f.eval(x)?;
        if !(y > 0.0) {
            return Err(violated(x, format!("f(x) = {y} <= 0")));
        }
        if !(y < x) {
            return Err(violated(x, format!("f(x) = {y} >= x")));
        }
    }
    let x = SLOPE_POINT.min(u0 / 2.0);
    let slope = f.eval(x)? / x;
    if !((1.0 - slope).abs() < SLOPE_TOL) {
        return Err(violated(x, format!("f(x)/x = {slope}, the decay is not parabolic")));
    }
    Ok(())
}

/// Iterates `f` from `u0` up to the largest probe and records the rescaled
/// values `n^(1/(k-1)) u_n`. Fails if `f` does not look like
/// `x - a x^k + ...` on `(0, u0]` or the iterates stop decreasing.
pub fn verify_jacobsthal(
    f: &ScalarFn,
    k: f64,
    a: f64,
    u0: f64,
    probes: &[u64],
) -> Result<AsymptoticReport, JacobsthalError> {
    if !(k > 1.0) || !(a > 0.0) {
        return Err(JacobsthalError::Params(format!("need k > 1 and a > 0, got k = {k}, a = {a}")));
    }
    if !(u0 > 0.0) {
        return Err(violated(u0, "u0 must be positive"));
    }
    if probes.is_empty() || probes[0] == 0 || probes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(JacobsthalError::Params("probes must be positive and strictly increasing".into()));
    }
    check_shape(f, u0)?;

    let exponent = 1.0 / (k - 1.0);
    let mut values = Vec::with_capacity(probes.len());
    let mut next = probes.iter().peekable();
    let mut u = u0;
    let last = *probes.last().unwrap();
    for n in 1..=last {
        let v = f.eval(u)?;
        if !(v > 0.0 && v < u) {
            return Err(violated(u, format!("u_{n} = {v} does not decrease")));
        }
        u = v;
        if next.peek() == Some(&&n) {
            next.next();
            values.push((n as f64).powf(exponent) * u);
        }
    }
    let limit_estimate = *values.last().unwrap();
    let predicted = predicted_constant(k, a);
    Ok(AsymptoticReport {
        k,
        a,
        u0,
        probes: probes.to_vec(),
        values,
        limit_estimate,
        predicted,
        relative_error: (limit_estimate - predicted).abs() / predicted,
    })
}

/// `p_n = n^-(1/(k-1) - delta)` with `p_0 = 1`.
pub fn jacobsthal_decay(k: f64, a: f64, delta: f64) -> Result<Decay, JacobsthalError> {
    if !(k > 1.0) || !(a > 0.0) || !(delta > 0.0) {
        return Err(JacobsthalError::Params(format!("need k > 1, a > 0, delta > 0, got k = {k}, a = {a}, delta = {delta}")));
    }
    let r = 1.0 / (k - 1.0) - delta;
    if !(r > 0.0) {
        return Err(JacobsthalError::Params(format!("decay exponent 1/(k-1) - delta = {r} must be positive")));
    }
    Ok(Decay::PowerLaw { c: 1.0, r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_rate() {
        let f = ScalarFn::parse("u - u^2").unwrap();
        let rep = verify_jacobsthal(&f, 2.0, 1.0, 0.5, &[100, 1000, 10_000]).unwrap();
        // Independent loop: u_n ~ 1/(n + ln n + C) sits just below 1/n.
        let mut u = 0.5f64;
        for _ in 0..10_000 {
            u -= u * u;
        }
        assert_eq!(rep.limit_estimate, 10_000.0 * u);
        assert!((0.99..=1.0).contains(&rep.limit_estimate));
        assert_eq!(rep.predicted, 1.0);
        assert!(rep.values.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cubic_rate() {
        let f = ScalarFn::parse("u - 2*u^3").unwrap();
        let rep = verify_jacobsthal(&f, 3.0, 2.0, 0.3, &[100, 10_000, 1_000_000]).unwrap();
        assert_eq!(rep.predicted, 0.5);
        assert!(rep.relative_error < 0.02, "{rep:?}");
    }

    #[test]
    fn geometric_decay_rejected() {
        let f = ScalarFn::parse("u/2").unwrap();
        let err = verify_jacobsthal(&f, 2.0, 1.0, 0.5, &[100]).unwrap_err();
        assert!(matches!(err, JacobsthalError::PreconditionViolated { witness, .. } if witness == 1e-4));
        let grows = ScalarFn::parse("u + u^2").unwrap();
        assert!(matches!(
            verify_jacobsthal(&grows, 2.0, 1.0, 0.5, &[100]),
            Err(JacobsthalError::PreconditionViolated { .. })
        ));
        assert!(verify_jacobsthal(&ScalarFn::parse("u - u^2").unwrap(), 2.0, 1.0, 0.5, &[10, 10]).is_err());
    }

    #[test]
    fn decay_exponents() {
        assert!(matches!(jacobsthal_decay(2.0, 1.0, 0.01).unwrap(), Decay::PowerLaw { c, r } if c == 1.0 && (r - 0.99).abs() < 1e-15));
        assert!(matches!(jacobsthal_decay(3.0, 1.0, 0.1).unwrap(), Decay::PowerLaw { r, .. } if (r - 0.4).abs() < 1e-15));
        assert!(jacobsthal_decay(2.0, 1.0, 1.0).is_err());
        assert!(jacobsthal_decay(1.0, 1.0, 0.1).is_err());
    }
}
