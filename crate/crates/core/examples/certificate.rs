//! Check an envelope certificate by hand and with the hyperbolic default,
//! then turn it into a rigorous tail bound.

use trimap::fecld::{cauchy_tail_bound, check_certificate, hyperbolic_envelope, Decay, Envelope, EnvelopeSpec};
use trimap::TriangularMap;

fn main() {
    let map = TriangularMap::parse("0", "1+u", "u/2").unwrap();

    // |f1(u) - 1| <= |u|, f0 = 0, and |u_n| <= 0.5^(n+1).
    let spec = EnvelopeSpec::new(Envelope::linear(1.0), Envelope::zero(), 0.5, Decay::Geometric { c: 0.5, ratio: 0.5 });
    let cert = check_certificate(&map, 0.0, &spec, 256).unwrap();
    println!("{}", serde_json::to_string_pretty(&cert).unwrap());

    let auto = hyperbolic_envelope(&map, 0.0, 0.5).and_then(|s| check_certificate(&map, 0.0, &s, 256)).unwrap();
    println!("hyperbolic default: {:?}, S_V = {}", auto.verdict, auto.s_v);
    for n in [10, 20, 40] {
        // Orbit bound R = 3 covers the whole product, which stays below 2.4.
        println!("tail bound after {n} steps: {:.3e}", cauchy_tail_bound(&auto, 3.0, n).unwrap());
    }
}
