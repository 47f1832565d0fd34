//! n^(1/(k-1)) u_n for u' = u - a u^k.

use trimap::jacobsthal::{jacobsthal_decay, verify_jacobsthal};
use trimap::ScalarFn;

fn main() {
    for (f, k, a, u0) in [("u - u^2", 2.0, 1.0, 0.5), ("u - 2*u^3", 3.0, 2.0, 0.3), ("u/(1+u)", 2.0, 1.0, 1.0)] {
        let rep = verify_jacobsthal(&ScalarFn::parse(f).unwrap(), k, a, u0, &[100, 10_000, 1_000_000]).unwrap();
        println!("{f:<10} {:?} -> predicted {:.6}", rep.values, rep.predicted);
    }
    println!("decay for certificates: {:?}", jacobsthal_decay(2.0, 1.0, 0.01).unwrap());
    // Geometric decay is rejected.
    println!("{}", verify_jacobsthal(&ScalarFn::parse("u/2").unwrap(), 2.0, 1.0, 0.5, &[100]).unwrap_err());
}
