//! Which limit regime governs an orbit near the attracting fiber `u* = 0`.

use trimap::classify::{classify_regime, estimate_limit, LimitOptions};
use trimap::TriangularMap;

fn main() {
    let cases = [
        ("contracting fiber", "1", "0.5", "u/2"),
        ("fixed-point fiber", "0", "1+u", "u/2"),
        ("2-periodic fiber", "1", "-1+u", "u/3"),
        ("expanding fiber", "0", "2", "u/2"),
    ];
    for (name, f0, f1, phi) in cases {
        let map = TriangularMap::parse(f0, f1, phi).unwrap();
        let regime = classify_regime(&map, 0.0).unwrap();
        let report = estimate_limit(&map, [1.0, 0.5], 0.0, None, &LimitOptions::default()).unwrap();
        println!("{name:<18} {regime:?}");
        println!("{:>18} limit {:?} even {:?} odd {:?} after {} steps", "", report.limit, report.limit_even, report.limit_odd, report.iterations);
    }
}
