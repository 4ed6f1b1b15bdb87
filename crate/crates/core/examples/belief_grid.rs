//! Fixed-resolution lattices, sized grids, and nearest-point lookup.

use cpomdp::grid::{build_grid_set, fixed_resolution_grid, grid_set_size};

fn main() {
    println!("lattice sizes for 11 states:");
    for rho in 1..=5 {
        println!("  resolution {rho}: {} points", grid_set_size(11, rho).unwrap());
    }

    let lattice = fixed_resolution_grid(3, 2).unwrap();
    println!("\n3-state lattice at resolution 2:");
    for p in &lattice.points {
        println!("  {p:?}");
    }

    let grid = build_grid_set(4, 30).unwrap();
    println!("\n30-point grid over 4 states, fingerprint {}", grid.fingerprint_hex());
    let b = [0.1, 0.2, 0.3, 0.4];
    let k = grid.nearest(&b);
    println!("nearest point to {b:?}: #{k} {:?}", grid.points[k]);

    let mut csv = Vec::new();
    grid.write_csv(&mut csv).unwrap();
    println!("CSV starts with:\n{}", String::from_utf8_lossy(&csv).lines().take(3).collect::<Vec<_>>().join("\n"));
}
