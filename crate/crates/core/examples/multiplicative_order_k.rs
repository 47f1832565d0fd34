//! x(n+k) = x(n) g(x(n) ... x(n+k-1)) through the product coordinate.

use trimap::classify::LimitOptions;
use trimap::families::{classify_family, MultiplicativeRecurrence, ThirdOrderMobius};
use trimap::ScalarFn;

fn main() {
    for g in ["1/(1+u)", "u-1", "2/(1+u^2)"] {
        let rec = MultiplicativeRecurrence::new(3, ScalarFn::parse(g).unwrap()).unwrap();
        println!("k=3, g(u) = {g}: zero-product fibers {:?}", rec.zero_fiber_outcome());
    }

    let rec = MultiplicativeRecurrence::new(2, ScalarFn::parse("2/(1+u)").unwrap()).unwrap();
    let r = classify_family("multiplicative", &rec, &[0.5, 3.0], None, &LimitOptions::default()).unwrap();
    println!("k=2, g = 2/(1+u): u* = {}, stride {}, combined {:?}", r.u_star, r.stride, r.combined);

    let third = ThirdOrderMobius::new(0.5, 1.0);
    let r = classify_family("third-order-mobius", &third, &[1.0, 2.0, 0.5], None, &LimitOptions::default()).unwrap();
    for (i, s) in r.subsystems.iter().enumerate() {
        println!("third order, residue {i} mod {}: {:?} limit {:?}", r.stride, s.regime, s.limit);
    }
}
