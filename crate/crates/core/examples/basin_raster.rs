//! Basin of the origin for the planar cubic map, written as basin.pgm plus a
//! JSON sidecar in the current directory.

use std::fs::File;
use std::io::BufWriter;

use trimap::basin::{rasterize_2d, RasterOptions, Rect};
use trimap::families::QuasiHomogeneousCubic;

fn main() -> std::io::Result<()> {
    let d = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.8);
    let map = QuasiHomogeneousCubic::new(d).unwrap().map();
    let grid = rasterize_2d(&map, Rect::square(4.0), 200, 200, &[[0.0, 0.0]], &RasterOptions::default()).unwrap();
    grid.write_pgm(BufWriter::new(File::create("basin.pgm")?))?;
    let side = grid.sidecar();
    serde_json::to_writer_pretty(File::create("basin.json")?, &side)?;
    println!("d = {d}: {}", side["counts"]);
    println!("symmetric under (x, y) -> (-x, -y): {}", grid.is_point_symmetric());
    Ok(())
}
