//! Fixed points, 2-cycles, preimages and local contractivity of 1-D maps.
//!
//! Roots are located by scanning signs on a uniform grid and refining each
//! sign change by bisection, so non-differentiable maps are fine. A root
//! where the function touches zero without changing sign between grid
//! points is missed.

use serde::Serialize;

use crate::expr::{DomainError, EvalResult, ScalarFn};

pub const TOL_ROOT: f64 = 1e-12;
pub const TOL_SEP: f64 = 1e-9;
pub const TOL_H: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointClass {
    HyperbolicAttractor,
    HyperbolicRepellor,
    NonHyperbolic,
}

impl FixedPointClass {
    pub fn from_multiplier(m: f64) -> Self {
        if m.abs() < 1.0 - TOL_H {
            FixedPointClass::HyperbolicAttractor
        } else if m.abs() > 1.0 + TOL_H {
            FixedPointClass::HyperbolicRepellor
        } else {
            FixedPointClass::NonHyperbolic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contractivity {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointInfo {
    pub location: f64,
    pub multiplier: f64,
    pub class: FixedPointClass,
    pub contractive: Contractivity,
}

/// Zeros of `g` on `[lo, hi]`, each with `|g| < tol`. Grid points where `g`
/// is undefined split the search into independent pieces.
pub fn find_roots(
    g: impl Fn(f64) -> EvalResult,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: f64,
) -> Vec<f64> {
    assert!(lo < hi && grid >= 2, "need lo < hi and grid >= 2");
    let pts: Vec<f64> =
        (0..=grid).map(|i| if i == grid { hi } else { lo + (hi - lo) * i as f64 / grid as f64 }).collect();
    let vals: Vec<Option<f64>> = pts.iter().map(|&u| g(u).ok().filter(|v| !v.is_nan())).collect();
    let mut roots = Vec::new();
    for i in 0..=grid {
        if vals[i] == Some(0.0) {
            roots.push(pts[i]);
        }
    }
    for i in 0..grid {
        let (Some(ga), Some(gb)) = (vals[i], vals[i + 1]) else { continue };
        if ga == 0.0 || gb == 0.0 || (ga < 0.0) == (gb < 0.0) {
            continue;
        }
        if let Some(r) = bisect(&g, pts[i], pts[i + 1], ga, tol) {
            roots.push(r);
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    dedup_close(&mut roots, TOL_SEP);
    roots
}

/// Bisects to floating-point exhaustion, then keeps the endpoint with the
/// smaller residual if it certifies. Sign changes across poles fail the
/// residual test and are dropped.
fn bisect(g: &impl Fn(f64) -> EvalResult, mut a: f64, mut b: f64, mut ga: f64, tol: f64) -> Option<f64> {
    let mut gb = g(b).ok()?;
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m).ok()?;
        if gm == 0.0 {
            return Some(m);
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
    }
    let (r, gr) = if ga.abs() <= gb.abs() { (a, ga) } else { (b, gb) };
    (gr.abs() < tol).then_some(r)
}

fn dedup_close(sorted: &mut Vec<f64>, sep: f64) {
    sorted.dedup_by(|b, a| (*b - *a).abs() < sep);
}

/// Solutions of `phi(u) = target` on `[lo, hi]`.
pub fn preimages(phi: &ScalarFn, target: f64, lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    find_roots(|u| Ok(phi.eval(u)? - target), lo, hi, grid, TOL_ROOT)
}

/// Fixed points of `phi` on `[lo, hi]` with multiplier, hyperbolicity class
/// and local contractivity verdict.
pub fn find_fixed_points(phi: &ScalarFn, lo: f64, hi: f64, grid: usize) -> Vec<FixedPointInfo> {
    find_roots(|u| Ok(phi.eval(u)? - u), lo, hi, grid, TOL_ROOT)
        .into_iter()
        .filter_map(|u| {
            let m = phi.derivative_at(u).ok()?;
            Some(FixedPointInfo {
                location: u,
                multiplier: m,
                class: FixedPointClass::from_multiplier(m),
                contractive: local_contractivity(phi, u),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TwoCycles {
    /// Pairs `(q-, q+)` with `q- < q+`, `phi(q-) = q+`.
    Isolated { pairs: Vec<(f64, f64)> },
    /// More than half of the grid points satisfy `phi(phi(u)) = u`.
    Continuum { fraction: f64 },
}

impl TwoCycles {
    pub fn pairs(&self) -> &[(f64, f64)] {
        match self {
            TwoCycles::Isolated { pairs } => pairs,
            TwoCycles::Continuum { .. } => &[],
        }
    }
}

/// Points of minimal period 2 on `[lo, hi]`.
pub fn find_two_cycles(phi: &ScalarFn, lo: f64, hi: f64, grid: usize) -> TwoCycles {
    let phi2 = |u: f64| -> EvalResult { phi.eval(phi.eval(u)?) };
    let mut periodic = 0usize;
    for i in 0..=grid {
        let u = lo + (hi - lo) * i as f64 / grid as f64;
        if let Ok(v) = phi2(u) {
            if (v - u).abs() <= 1e-9 * u.abs().max(1.0) {
                periodic += 1;
            }
        }
    }
    let fraction = periodic as f64 / (grid + 1) as f64;
    if fraction > 0.5 {
        return TwoCycles::Continuum { fraction };
    }
    let roots = find_roots(|u| Ok(phi2(u)? - u), lo, hi, grid, TOL_ROOT);
    let mut pairs = Vec::new();
    for &q in &roots {
        let Ok(p) = phi.eval(q) else { continue };
        if (p - q).abs() < 1e-7 * q.abs().max(1.0) || p <= q {
            continue;
        }
        // partner must itself be a located root
        let Some(&partner) = roots.iter().min_by(|a, b| (*a - p).abs().total_cmp(&(*b - p).abs())) else {
            continue;
        };
        let Ok(back) = phi.eval(partner) else { continue };
        if (p - partner).abs() < TOL_ROOT && (back - q).abs() < TOL_ROOT {
            pairs.push((q, partner));
        }
    }
    TwoCycles::Isolated { pairs }
}

/// Multiplier of a 2-cycle, `phi'(q-) phi'(q+)`.
pub fn two_cycle_multiplier(phi: &ScalarFn, (a, b): (f64, f64)) -> Result<f64, DomainError> {
    Ok(phi.derivative_at(a)? * phi.derivative_at(b)?)
}

/// Samples `(u* - radius, u* + radius)` minus `u*`: `no` on any sample with
/// `|phi(u) - u*| >= |u - u*|`; `yes` when all pass and either
/// `|phi'(u*)| < 1 - tol_h` or `phi` is increasing across the samples;
/// `inconclusive` otherwise.
pub fn is_locally_contractive(
    phi: &ScalarFn,
    u_star: f64,
    radius: f64,
    samples: usize,
) -> Result<Contractivity, DomainError> {
    assert!(radius > 0.0 && samples >= 16, "need radius > 0 and samples >= 16");
    let per_side = samples / 2;
    let linear = per_side / 2;
    let log = per_side - linear;
    let mut offsets = Vec::with_capacity(per_side);
    for i in 1..=linear {
        offsets.push(radius * i as f64 / (linear + 1) as f64);
    }
    for i in 1..=log {
        offsets.push(radius * 10f64.powf(-6.0 * i as f64 / log as f64));
    }
    let mut pts = Vec::with_capacity(2 * offsets.len() + 1);
    for &nu in &offsets {
        for u in [u_star - nu, u_star + nu] {
            let d = (u - u_star).abs();
            if d == 0.0 {
                continue;
            }
            let v = phi.eval(u)?;
            if !((v - u_star).abs() < d) {
                return Ok(Contractivity::No);
            }
            pts.push((u, v));
        }
    }
    if phi.derivative_at(u_star)?.abs() < 1.0 - TOL_H {
        return Ok(Contractivity::Yes);
    }
    pts.push((u_star, phi.eval(u_star)?));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let increasing = pts.windows(2).all(|w| w[1].1 >= w[0].1);
    Ok(if increasing { Contractivity::Yes } else { Contractivity::Inconclusive })
}

/// Local contractivity over a shrinking family of windows: `yes` if some
/// window passes, `no` if every window fails, `inconclusive` otherwise.
pub fn local_contractivity(phi: &ScalarFn, u_star: f64) -> Contractivity {
    let mut radius = 0.1 * u_star.abs().max(1.0);
    let mut all_no = true;
    for _ in 0..16 {
        match is_locally_contractive(phi, u_star, radius, 256) {
            Ok(Contractivity::Yes) => return Contractivity::Yes,
            Ok(Contractivity::No) => {}
            _ => all_no = false,
        }
        radius *= 0.5;
    }
    if all_no {
        Contractivity::No
    } else {
        Contractivity::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic() -> ScalarFn {
        ScalarFn::parse("u*(4-u)*(1+u)/6").unwrap()
    }

    #[test]
    fn cubic_fixed_points() {
        let fps = find_fixed_points(&cubic(), -3.0, 5.0, DEFAULT_GRID);
        let locs: Vec<f64> = fps.iter().map(|f| f.location).collect();
        assert_eq!(locs.len(), 3);
        for (f, (want, m)) in fps.iter().zip([(0.0, 2.0 / 3.0), (1.0, 7.0 / 6.0), (2.0, 2.0 / 3.0)]) {
            assert!((f.location - want).abs() < 1e-12);
            assert!((f.multiplier - m).abs() < 1e-6);
        }
        assert_eq!(fps[0].class, FixedPointClass::HyperbolicAttractor);
        assert_eq!(fps[1].class, FixedPointClass::HyperbolicRepellor);
        assert_eq!(fps[0].contractive, Contractivity::Yes);
        assert_eq!(fps[1].contractive, Contractivity::No);
    }

    #[test]
    fn mobius_fixed_points_across_pole() {
        let phi = ScalarFn::parse("u/(2+u)").unwrap();
        let right = find_fixed_points(&phi, -0.5, 2.0, DEFAULT_GRID);
        assert_eq!(right.len(), 1);
        assert_eq!(right[0].location, 0.0);
        assert!((right[0].multiplier - 0.5).abs() < 1e-9);
        let left = find_fixed_points(&phi, -2.0, -0.5, DEFAULT_GRID);
        assert_eq!(left.len(), 1);
        assert!((left[0].location + 1.0).abs() < 1e-12);
        assert!((left[0].multiplier - 2.0).abs() < 1e-6);
        // the pole at -2 changes sign but is not a root
        assert_eq!(find_fixed_points(&phi, -3.0, -0.5, 1001).len(), 1);
    }

    #[test]
    fn no_fixed_point() {
        assert!(find_fixed_points(&ScalarFn::parse("u+1").unwrap(), -10.0, 10.0, 4096).is_empty());
    }

    #[test]
    fn cubic_two_cycle() {
        let c = find_two_cycles(&cubic(), -4.0, 6.0, DEFAULT_GRID);
        let pairs = c.pairs();
        assert_eq!(pairs.len(), 1);
        let (a, b) = pairs[0];
        assert!((a - (1.0 - 13f64.sqrt())).abs() < 1e-9);
        assert!((b - (1.0 + 13f64.sqrt())).abs() < 1e-9);
        let phi = cubic();
        assert!((phi.eval(b).unwrap() - a).abs() < TOL_ROOT);
        assert!(two_cycle_multiplier(&phi, pairs[0]).unwrap() > 1.0);
    }

    #[test]
    fn mobius_involution_is_a_continuum() {
        let c = find_two_cycles(&ScalarFn::parse("u/(-1+u)").unwrap(), -5.0, 5.0, DEFAULT_GRID);
        assert!(matches!(c, TwoCycles::Continuum { fraction } if fraction > 0.99));
        assert_eq!(find_two_cycles(&ScalarFn::parse("u/2").unwrap(), -5.0, 5.0, 1024).pairs().len(), 0);
    }

    #[test]
    fn preimages_of_repelling_point() {
        let pre = preimages(&cubic(), 1.0, -3.0, 5.0, DEFAULT_GRID);
        assert_eq!(pre.len(), 3);
        assert!((pre[0] - (1.0 - 7f64.sqrt())).abs() < 1e-9);
        assert!((pre[2] - (1.0 + 7f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn contractivity_examples() {
        let flip = ScalarFn::parse("-u-u^2").unwrap();
        assert_eq!(is_locally_contractive(&flip, 0.0, 0.2, 64).unwrap(), Contractivity::No);
        assert_eq!(local_contractivity(&flip, 0.0), Contractivity::No);
        let half = ScalarFn::parse("u/2").unwrap();
        assert_eq!(is_locally_contractive(&half, 0.0, 1.0, 64).unwrap(), Contractivity::Yes);
        assert_eq!(is_locally_contractive(&cubic(), 0.0, 0.3, 64).unwrap(), Contractivity::Yes);
        // orientation preserving but not hyperbolic
        let slow = ScalarFn::parse("u-u^3").unwrap();
        assert_eq!(is_locally_contractive(&slow, 0.0, 0.1, 64).unwrap(), Contractivity::Yes);
        // orientation reversing, not hyperbolic, yet contracting
        let rev = ScalarFn::parse("-u+u^3").unwrap();
        assert_eq!(is_locally_contractive(&rev, 0.0, 0.1, 64).unwrap(), Contractivity::Inconclusive);
    }

    #[test]
    fn dense_oracle_agrees_on_cubic_window() {
        let phi = cubic();
        let ok = (1..100_000).all(|i| {
            let nu = 0.3 * i as f64 / 100_000.0;
            [nu, -nu].iter().all(|&u| phi.eval(u).unwrap().abs() < u.abs())
        });
        assert!(ok);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn hyperbolic_attractor_is_never_non_contractive(
            s in -0.5f64..1.5, m in -0.95f64..0.95, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0
        ) {
            let phi = ScalarFn::builtin("cubic", move |u| {
                let d = u - s;
                s + m * d + c2 * d * d + c3 * d * d * d
            });
            let fps = find_fixed_points(&phi, s - 0.1, s + 0.1, 512);
            for f in fps {
                prop_assert!((phi.eval(f.location).unwrap() - f.location).abs() < TOL_ROOT);
                if f.class == FixedPointClass::HyperbolicAttractor {
                    prop_assert_ne!(f.contractive, Contractivity::No);
                }
            }
        }
    }
}
