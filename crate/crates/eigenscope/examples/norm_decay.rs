//! Exponential decay of refined block norms. The largest product norm
//! over word pairs at depth n must fall like C e^{-n lambda / 2} with the
//! Jacobian-weighted shape, which is what makes the refined constant c
//! beat naive counting.

use eigenscope::catmap::{
    build_strip_partition, coarse_jacobian_table, quantize_cat, ClassicalCatMap,
    StripPartitionSpec,
};
use eigenscope::refine::norm_decay_scan;
use eigenscope::Result;

fn main() -> Result<()> {
    let map = ClassicalCatMap::standard();
    let n = 64;
    let strips = 3;
    let depth = 3;

    let u = quantize_cat(&map, n)?;
    let spec = StripPartitionSpec::new(strips, 1.0 / (4.0 * strips as f64))?;
    let partition = build_strip_partition(n, &spec)?;
    let jac = coarse_jacobian_table(&map, &spec, 10.0 * map.lambda(), 256)?;

    eprintln!("scanning pair norms to depth {depth} at N = {n} ...");
    let scan = norm_decay_scan(&u, &partition, &jac, depth)?;

    println!("n   max pair norm   dominating bound   words (in | out)");
    for row in &scan.rows {
        println!(
            "{}   {:.8}      {:.8}         {:?} | {:?}",
            row.n, row.max_norm, row.bound, row.word_in, row.word_out
        );
    }
    println!();
    println!("fitted constant C = {:.4}", scan.c_fit);

    let slope = {
        let pts: Vec<(f64, f64)> = scan.rows.iter().map(|r| (r.n as f64, r.max_norm.ln())).collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    println!("log-norm slope   {slope:+.4} per step (want clearly negative)");
    println!("-lambda/2        {:+.4}", -map.lambda() / 2.0);
    Ok(())
}
