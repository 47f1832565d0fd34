//! x(n+2) = x(n) / (a + b x(n) x(n+1)) across the parameter cases.

use trimap::classify::LimitOptions;
use trimap::families::{classify_family, BajoLiz, System};
use trimap::IterateOptions;

fn main() {
    for a in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        let bl = BajoLiz::new(a, 1.0).unwrap();
        // x0 x1 = 0.21 stays away from the poles for every a here.
        let (x0, x1) = (0.3, 0.7);
        let orbit = bl.orbit(&[x0, x1], IterateOptions { budget: 40, escape_radius: 1e6, record: true }).unwrap();
        let tail: Vec<String> = orbit.rows.iter().rev().take(4).rev().map(|r| format!("{:.4}", r[0])).collect();
        println!("a = {a:>4}: {:?} {:?}", bl.mobius().case(), bl.predict(x0, x1));
        println!("          last terms {} ({:?})", tail.join(" "), orbit.reason);
    }

    // a = -1 has a closed form.
    let bl = BajoLiz::new(-1.0, 1.0).unwrap();
    let evens: Vec<f64> = (0..4).map(|m| bl.closed_form_minus_one(1.0, 3.0, 2 * m).unwrap()).collect();
    println!("closed form a=-1, x0=1, x1=3: even terms {evens:?}");

    let report = classify_family("bajo-liz", &BajoLiz::new(0.5, 1.0).unwrap(), &[1.0, 2.0], None, &LimitOptions::default()).unwrap();
    let limits: Vec<_> = report.subsystems.iter().map(|s| s.limit).collect();
    println!("a = 0.5: limits of even/odd subsequences {limits:?}, product {:?}", report.combined);
}
