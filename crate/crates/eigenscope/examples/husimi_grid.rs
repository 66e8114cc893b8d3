//! Render the Husimi density of a cat-map eigenstate as coarse ASCII
//! art. Generic eigenstates of a chaotic map look close to uniform;
//! compare with the scar quasimode example for contrast.

use eigenscope::catmap::{husimi, quantize_cat, ClassicalCatMap};
use eigenscope::hilbert::eig_unitary;
use eigenscope::Result;

fn main() -> Result<()> {
    let map = ClassicalCatMap::standard();
    let n = 64;
    let state = 0;

    let u = quantize_cat(&map, n)?;
    let dec = eig_unitary(&u)?;
    let grid = husimi(&dec.eigenstate(state), 32)?;

    let g = grid.grid_size();
    let max = grid.values().iter().cloned().fold(0.0f64, f64::max);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];

    println!("Husimi density of eigenstate {state} at N = {n} ({g}x{g} grid):");
    println!();
    for row in (0..g).rev() {
        let mut line = String::with_capacity(g);
        for col in 0..g {
            let v = grid.value(col, row) / max;
            let shade = ((v * (shades.len() - 1) as f64).round() as usize).min(shades.len() - 1);
            line.push(shades[shade]);
        }
        println!("  {line}");
    }
    println!();
    println!("total mass {:.6}, peak cell {:.3e}", grid.total(), max);
    println!("mass within 0.1 of the fixed point: {:.4}", grid.mass_fraction_in_disc((0.0, 0.0), 0.1));
    Ok(())
}
