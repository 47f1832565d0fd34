//! Orbits on the invariant curve `u x = 1` of `x' = x/2 + u x^2`, `u' = u/2`
//! double at each step.

use trimap::families::PowerPerturbation;
use trimap::{iterate, IterateOptions};

fn main() {
    let m = PowerPerturbation::new(0.5, 0.5, 1.0, 1, 2).unwrap();
    println!("curve level {}, growth {}", m.curve_level().unwrap(), m.growth().unwrap());
    let s0 = m.point_on_curve(0.25).unwrap();
    let t = iterate(&m.map(), s0, IterateOptions { budget: 30, escape_radius: 1e6, record: true });
    for (n, s) in t.states.iter().enumerate().step_by(5) {
        println!("n={n:>2} x={:<14.6e} u={:<14.6e} curve={:.12}", s[0], s[1], m.curve_value(*s));
    }
    println!("{:?} after {} steps", t.reason, t.steps);
}
