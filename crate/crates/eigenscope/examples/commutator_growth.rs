//! Quantum-classical correspondence has a shelf life. Transported
//! position and momentum shifts commute to high accuracy for a while,
//! then the commutator blows up near the Ehrenfest horizon. The scan
//! compares the measured norm with the exact transport prediction.

use eigenscope::refine::egorov_commutator_scan;
use eigenscope::Result;

fn main() -> Result<()> {
    let n = 64;
    let scan = egorov_commutator_scan(n, (1, 0), (0, 1), 8, 0.0)?;

    println!("N = {n}: commutation window {} steps, horizon {} steps", scan.egorov_time, scan.ehrenfest_steps);
    println!();
    println!("t   ||[V(t), W]||   prediction");
    for row in &scan.rows {
        let marker = if row.t == scan.egorov_time { "  <- window edge" } else { "" };
        println!("{}   {:.8}     {:.8}{marker}", row.t, row.norm, row.prediction);
    }
    println!();
    println!("the measured norm matches the lattice transport prediction at every");
    println!("step; the window edge is where the predicted growth reaches order one.");
    Ok(())
}
