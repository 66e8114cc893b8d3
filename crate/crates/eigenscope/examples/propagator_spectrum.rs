//! Quantize the standard hyperbolic torus automorphism and inspect its
//! spectrum: unit-circle eigenvalues, degeneracy clusters, and the exact
//! transport of lattice translations that makes the quantization honest.

use eigenscope::catmap::{egorov_translation_defect, quantize_cat, ClassicalCatMap};
use eigenscope::hilbert::eig_unitary;
use eigenscope::Result;

fn main() -> Result<()> {
    let map = ClassicalCatMap::standard();
    let n = 64;
    eprintln!("quantizing at N = {n} ...");
    let u = quantize_cat(&map, n)?;
    let dec = eig_unitary(&u)?;

    println!("dimension          {n}");
    println!("expansion rate     {:.10} per step", map.lambda());
    println!("unitarity defect   {:.3e}", dec.unitarity_defect);
    println!("eigen residual     {:.3e}", dec.max_residual);
    println!("gram defect        {:.3e}", dec.gram_defect);
    println!("phase clusters     {} (of {} eigenvalues)", dec.cluster_count, n);

    let (dq, mu_q) = egorov_translation_defect(&u, &map, (1, 0))?;
    let (dp, mu_p) = egorov_translation_defect(&u, &map, (0, 1))?;
    println!();
    println!("translation transport, one step of the map:");
    println!("  q-shift defect   {:.3e}   phase {:+.6}{:+.6}i", dq, mu_q.re, mu_q.im);
    println!("  p-shift defect   {:.3e}   phase {:+.6}{:+.6}i", dp, mu_p.re, mu_p.im);

    let gaps: Vec<f64> = dec
        .phases
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().cloned().fold(0.0f64, f64::max);
    println!();
    println!("phase gaps         min {:.3e}, max {:.3e}", min_gap, max_gap);
    Ok(())
}
