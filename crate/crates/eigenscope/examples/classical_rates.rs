//! Classical sanity anchors for the quantum entropy machinery: the
//! uniform measure on the torus has itinerary entropy rate near the
//! expansion exponent, a periodic-orbit Dirac measure has essentially
//! none, and both respect the Ruelle comparison between entropy growth
//! and the coarse Jacobian.

use eigenscope::catmap::{coarse_jacobian_table, ClassicalCatMap, StripPartitionSpec};
use eigenscope::refine::{
    classical_cylinder_stats, entropy_rate, ClassicalMeasureSpec, EntropySource,
};
use eigenscope::Result;

fn main() -> Result<()> {
    let map = ClassicalCatMap::standard();
    let strips = 8;
    let n_o = 8;
    let spec = StripPartitionSpec::new(strips, 0.05)?;
    let jac = coarse_jacobian_table(&map, &spec, 10.0 * map.lambda(), 256)?;

    let lebesgue = ClassicalMeasureSpec::Lebesgue { resolution: 1024 };
    let dirac = ClassicalMeasureSpec::PeriodicOrbit {
        point: (0.0, 0.0),
        max_period: 64,
    };

    eprintln!("walking {n_o} steps of itineraries ...");
    let leb = entropy_rate(&EntropySource::Classical { map: &map, spec: &lebesgue }, n_o, &jac)?;
    let dir = entropy_rate(&EntropySource::Classical { map: &map, spec: &dirac }, n_o, &jac)?;

    println!("expansion exponent lambda = {:.6}", map.lambda());
    println!();
    println!("uniform measure:   rate {:.6}, per-step growth {:.6}, Jacobian term {:.6}, ruelle {}",
        leb.rate, leb.increment, leb.jacobian_term, leb.ruelle_ok);
    println!("fixed-point atom:  rate {:.6}, per-step growth {:.6}, Jacobian term {:.6}, ruelle {}",
        dir.rate, dir.increment, dir.jacobian_term, dir.ruelle_ok);

    let stats = classical_cylinder_stats(&map, strips, n_o, &lebesgue)?;
    println!();
    println!("uniform-measure entropy by depth:");
    for (t, h) in stats.entropies().iter().enumerate() {
        println!("  h_{t} = {:.6}", h);
    }
    Ok(())
}
