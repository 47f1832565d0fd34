//! Interval decomposition of the line for a cubic with two attractors.

use trimap::basin::decompose_1d;
use trimap::families::QuasiHomogeneousCubic;

fn main() {
    // w' = w (4 - w)(1 + w)/6
    let phi = QuasiHomogeneousCubic::cubic();
    let d = decompose_1d(&phi, (-17.0, 17.0), 4).unwrap();
    println!("attractors {:?}", d.attractors);
    println!("repellers {:?}", d.repellers);
    println!("bounding 2-cycle {:?}", d.bounding_cycle);
    println!("interlacing {}", d.interlacing().join(" "));
    for iv in d.intervals.iter().take(8) {
        println!("[{:>10.6}, {:>10.6}] {:?} gen {:?}", iv.lo, iv.hi, iv.label, iv.generation);
    }
    println!("... {} intervals", d.intervals.len());
}
