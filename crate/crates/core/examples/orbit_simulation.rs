//! Iterate `x' = (1 + u) x`, `u' = u/2` and print the orbit as CSV.

use trimap::{iterate, IterateOptions, TriangularMap};

fn main() {
    let map = TriangularMap::parse("0", "1+u", "u/2").expect("valid expressions");
    let trace = iterate(&map, [1.0, 0.5], IterateOptions { budget: 40, escape_radius: 1e6, record: true });
    trace.write_csv(std::io::stdout().lock(), "u").expect("stdout");
    let [x, _] = trace.last();
    eprintln!("x_40 = {x:.10} ({:?})", trace.reason);
}
