use trimap::classify::{auto_certificate, estimate_limit, LimitOptions};
use trimap::families::{LinearProduct, LogProduct};

fn main() {
    // prod (1 + a lambda^k u0)
    let p = LinearProduct::new(1.0, 0.5).unwrap();
    let map = p.map();
    let cert = auto_certificate(&map, 0.0);
    let opts = LimitOptions { tol: 1e-12, ..Default::default() };
    let r = estimate_limit(&map, [1.0, 0.5], 0.0, cert.as_ref(), &opts).unwrap();
    println!("linear product: limit {:?} +- {:?} rigorous={}", r.limit, r.error_bound, r.rigorous);
    println!("partial product n=60: {}", p.partial_product(0.5, 60));

    // Factor 1 - 1/ln|u| with u_n = lambda^n u0: the factors approach 1 too
    // slowly and ln|x_n| keeps growing.
    let lp = LogProduct::new(0.5).unwrap();
    let mut s = [1.0f64, 0.5];
    let t = trimap::iterate(&lp.map(), s, trimap::IterateOptions { budget: 1000, escape_radius: f64::INFINITY, record: false });
    s = t.last();
    println!("log product: ln|x_1000| = {:.4}", s[0].abs().ln());
}
