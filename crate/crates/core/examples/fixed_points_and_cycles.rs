//! Fixed points, 2-cycles and preimages of a 1-D map.

use trimap::fixed::{find_fixed_points, find_two_cycles, preimages, two_cycle_multiplier, DEFAULT_GRID};
use trimap::ScalarFn;

fn main() {
    // Fixed points at 0, 1 and 2.
    let phi = ScalarFn::parse("u^3 - 3*u^2 + 3*u").expect("valid expression");
    for f in find_fixed_points(&phi, -1.0, 3.0, DEFAULT_GRID) {
        println!("fixed {:>8.5}  multiplier {:>7.3}  {:?}  {:?}", f.location, f.multiplier, f.class, f.contractive);
    }
    println!("preimages of 1: {:?}", preimages(&phi, 1.0, -1.0, 3.0, DEFAULT_GRID));

    let logistic = ScalarFn::parse("3.2*u*(1-u)").unwrap();
    for &pair in find_two_cycles(&logistic, 0.0, 1.0, DEFAULT_GRID).pairs() {
        let m = two_cycle_multiplier(&logistic, pair).unwrap();
        println!("2-cycle ({:.6}, {:.6}) multiplier {m:.4}", pair.0, pair.1);
    }
}
