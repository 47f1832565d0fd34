use trimap::classify::LimitOptions;
use trimap::families::{classify_family, AdditiveOrderK, AdditiveRecurrence, AdditiveShift};
use trimap::ScalarFn;

fn main() {
    let opts = LimitOptions::default();
    // x(n+2) = -b x(n+1) + g(x(n+1) + b x(n))
    for b in [0.5, 1.0, -1.0] {
        let rec = AdditiveRecurrence::new(b, ScalarFn::parse("u/2").unwrap());
        let r = classify_family("additive", &rec, &[0.3, 0.2], Some(0.0), &opts);
        match r {
            Ok(r) => println!("b = {b:>4}: {:?} -> {:?}", rec.predict(0.0), r.subsystems.iter().map(|s| s.limit).collect::<Vec<_>>()),
            Err(e) => println!("b = {b:>4}: {e}"),
        }
    }

    let shift = AdditiveShift::new(1.0, ScalarFn::parse("-u/2").unwrap());
    let r = classify_family("additive-shift", &shift, &[1.0, 2.0], None, &opts).unwrap();
    let s = &r.subsystems[0];
    println!("shift: u* = {}, {:?}, even/odd limits {:?} {:?}", r.u_star, s.regime, s.limit_even, s.limit_odd);

    let k3 = AdditiveOrderK::new(3, ScalarFn::parse("-u/4").unwrap()).unwrap();
    let r = classify_family("additive-order-k", &k3, &[1.0, 0.5, 0.25], None, &opts).unwrap();
    println!("order 3: sum of limits {:?} (u* = {})", r.combined, r.u_star);
}
