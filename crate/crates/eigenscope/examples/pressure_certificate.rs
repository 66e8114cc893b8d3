//! Build the refined pressure certificate once, then certify every
//! eigenstate against it: the two weighted pressures must stay above
//! -2 log(c) with the measured constant c. The gap between -2 log c
//! and the ideal line 2 log hbar tells how much the finite-size
//! constant costs.

use eigenscope::catmap::{
    build_strip_partition, coarse_jacobian_table, quantize_cat, ClassicalCatMap,
    StripPartitionSpec,
};
use eigenscope::eup::entropy_of_masses;
use eigenscope::hilbert::eig_unitary;
use eigenscope::refine::{EhrenfestConfig, RefinedCertificate};
use eigenscope::Result;

fn main() -> Result<()> {
    let map = ClassicalCatMap::standard();
    let n = 64;
    let strips = 3;

    let u = quantize_cat(&map, n)?;
    let spec = StripPartitionSpec::new(strips, 1.0 / (4.0 * strips as f64))?;
    let partition = build_strip_partition(n, &spec)?;
    let jac = coarse_jacobian_table(&map, &spec, 10.0 * map.lambda(), 256)?;
    let ehc = EhrenfestConfig::new(n, 0.2, map.lambda())?;

    eprintln!("building the refined certificate (depth {}) ...", ehc.n_e());
    let cert = RefinedCertificate::build(&u, &partition, &jac, &ehc)?;
    println!(
        "certificate: {} refined blocks at depth {}, c = {:.6}",
        cert.partition().len(),
        cert.steps(),
        cert.c()
    );

    let dec = eig_unitary(&u)?;
    let mut worst_margin = f64::INFINITY;
    let mut worst_idx = 0;
    let mut rhs_ideal = 0.0;
    for i in 0..n {
        let psi = dec.eigenstate(i);
        let (ec, ideal) = cert.certify(&psi)?;
        rhs_ideal = ideal;
        if ec.margin < worst_margin {
            worst_margin = ec.margin;
            worst_idx = i;
        }
    }

    let psi = dec.eigenstate(worst_idx);
    let (ec, _) = cert.certify(&psi)?;
    let h = entropy_of_masses(&cert.partition().block_masses(&psi)?);
    println!();
    println!("tightest eigenstate (index {worst_idx}):");
    println!("  refined entropy    {:.6}", h);
    println!("  pressure (alpha)   {:+.6}", ec.p_alpha);
    println!("  pressure (beta)    {:+.6}", ec.p_beta);
    println!("  lhs                {:+.6}", ec.lhs);
    println!("  rhs = -2 log c     {:+.6}", ec.rhs);
    println!("  margin             {:+.6}", ec.margin);
    println!();
    println!("ideal line 2 log hbar = {:+.6}", rhs_ideal);
    println!("constant offset       {:+.6}", -2.0 * cert.c().ln() - rhs_ideal);
    assert!(worst_margin >= -1e-9);
    Ok(())
}
