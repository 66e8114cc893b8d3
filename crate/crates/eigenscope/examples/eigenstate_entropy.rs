//! Word entropies of every eigenstate of the quantized cat map, measured
//! in the refined strip partition at the Ehrenfest horizon. For a chaotic
//! map the rates concentrate well above half the expansion exponent; low
//! outliers are the interesting states.

use eigenscope::catmap::{build_strip_partition, quantize_cat, ClassicalCatMap, StripPartitionSpec};
use eigenscope::hilbert::eig_unitary;
use eigenscope::refine::{cylinder_measure, ehrenfest_time};
use eigenscope::Result;

fn main() -> Result<()> {
    let map = ClassicalCatMap::standard();
    let n = 64;
    let strips = 3;
    let depth = ehrenfest_time(n, 0.2, map.lambda())?;

    eprintln!("N = {n}, {strips} strips, refining {depth} steps ...");
    let u = quantize_cat(&map, n)?;
    let spec = StripPartitionSpec::new(strips, 1.0 / (4.0 * strips as f64))?;
    let partition = build_strip_partition(n, &spec)?;
    let dec = eig_unitary(&u)?;

    let mut rates = Vec::with_capacity(n);
    for i in 0..n {
        let table = cylinder_measure(&dec.eigenstate(i), depth, &u, &partition)?;
        rates.push(table.entropy() / depth as f64);
    }
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let lambda = map.lambda();
    println!("entropy rate over {} eigenstates at depth {depth}:", n);
    println!("  min     {:.6}", rates[0]);
    println!("  median  {:.6}", rates[n / 2]);
    println!("  max     {:.6}", rates[n - 1]);
    println!("  lambda/2 = {:.6}, 0.8 lambda = {:.6}", lambda / 2.0, 0.8 * lambda);

    // Coarse histogram of the rate distribution.
    let lo = rates[0];
    let hi = rates[n - 1] + 1e-12;
    let bins = 12;
    let mut counts = vec![0usize; bins];
    for &r in &rates {
        let b = (((r - lo) / (hi - lo)) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    println!();
    for (b, &c) in counts.iter().enumerate() {
        let left = lo + (hi - lo) * b as f64 / bins as f64;
        println!("  {:>6.3}  {}", left, "#".repeat(c));
    }
    Ok(())
}
