//! Stress the weighted uncertainty bound on random instances: Haar
//! unitaries, random orthogonal splits, random weights, and states pushed
//! slightly outside the observable's cone. The certified margin must
//! never go measurably negative.

use eigenscope::eup::{eup_bound_certificate, QuantumPartition, WeightFamily};
use eigenscope::hilbert::{random_state, random_unitary, OperatorHandle, StateVector};
use eigenscope::rng::{rng_for, Task};
use eigenscope::{Result, C64};
use rand::Rng;

fn main() -> Result<()> {
    let seed = 42;
    let count = 60;
    let mut worst = f64::INFINITY;

    for index in 0..count {
        let mut rng = rng_for(seed, Task::SweepInstance { index });
        let dim = rng.gen_range(2..=32);
        let blocks = rng.gen_range(1..=4usize.min(dim));

        // Contiguous diagonal split into `blocks` orthogonal projectors.
        let mut sizes = vec![1usize; blocks];
        for _ in blocks..dim {
            sizes[rng.gen_range(0..blocks)] += 1;
        }
        let mut diags = vec![vec![C64::new(0.0, 0.0); dim]; blocks];
        let mut at = 0;
        for (k, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                diags[k][at] = C64::new(1.0, 0.0);
                at += 1;
            }
        }
        let partition =
            QuantumPartition::new(diags.into_iter().map(OperatorHandle::diagonal).collect())?;

        let u = OperatorHandle::dense(random_unitary(dim, seed, index));
        let alpha = WeightFamily::new((0..blocks).map(|_| rng.gen_range(0.5..2.0)).collect())?;
        let beta = WeightFamily::new((0..blocks).map(|_| rng.gen_range(0.5..2.0)).collect())?;

        // Random diagonal projector observable, with the state mostly but
        // not entirely inside its range.
        let keep: Vec<bool> = (0..dim).map(|_| rng.gen_bool(0.7)).collect();
        let keep = if keep.iter().any(|&k| k) { keep } else { vec![true; dim] };
        let o = OperatorHandle::diagonal(
            keep.iter()
                .map(|&k| C64::new(if k { 1.0 } else { 0.0 }, 0.0))
                .collect(),
        );
        let base = random_state(dim, seed, index);
        let psi = StateVector::normalized(o.apply(base.amps())?)
            .unwrap_or_else(|_| base.clone());

        let mut eps = 0.0f64;
        for block in partition.blocks() {
            let b = block.apply_adjoint(psi.amps())?;
            let ob = o.apply(&b)?;
            let dev: f64 = b
                .iter()
                .zip(&ob)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            eps = eps.max(dev);
        }

        let cert = eup_bound_certificate(&u, &partition, &alpha, &beta, &o, eps + 1e-12, &psi)?;
        worst = worst.min(cert.margin);
        if index % 10 == 0 {
            eprintln!(
                "instance {index:2}: dim {dim:2}, {blocks} blocks, margin {:+.4e}",
                cert.margin
            );
        }
    }

    println!("{count} random instances, worst margin {worst:+.4e}");
    assert!(worst >= -1e-9, "the bound must hold on every instance");
    Ok(())
}
