//! Batch experiment driver. Composes propagators, partitions, refined
//! word families, and certificates into named, reproducible experiments,
//! and emits machine-readable reports plus plot-ready CSV series.
//!
//! Every run writes `<experiment>.report.json` (a manifest echoing the
//! full resolved config and code version, then the results) and one or
//! more `<experiment>.<series>.csv` files under `out_dir`. Outputs are
//! byte-identical for a fixed config and seed, independent of the worker
//! pool size; on failure, partially written outputs are removed.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;

use crate::catmap::{
    build_strip_partition, coarse_jacobian_table, egorov_translation_defect, husimi,
    quantize_cat, ClassicalCatMap, JacobianTable, StripPartitionSpec,
};
use crate::error::{Error, Result};
use crate::eup::{
    entropy_of_masses, eup_bound_certificate, shannon_entropy, QuantumPartition, WeightFamily,
};
use crate::hilbert::{
    eig_unitary, fourier_matrix, random_state, random_unitary, OperatorHandle, StateVector,
};
use crate::linalg::C64;
use crate::refine::{
    cylinder_measure, egorov_commutator_scan, ehrenfest_time, entropy_rate, norm_decay_scan,
    scar_quasimode, shift_invariance_defect, subadditivity_check, tune_scar_phase,
    classical_cylinder_stats, ClassicalMeasureSpec, EhrenfestConfig, EntropySource,
    RefinedCertificate,
};
use crate::rng::{rng_for, Task};

/// Experiment names accepted by `run`, in canonical order.
pub const EXPERIMENTS: &[&str] = &[
    "eup-random-sweep",
    "mu-dft",
    "spectrum",
    "entropy-histogram",
    "pressure-certificate",
    "subadditivity",
    "shift-invariance",
    "norm-decay",
    "egorov-scan",
    "scar",
    "classical-entropy",
    "husimi",
];

/// Environment variable overriding the worker pool size.
pub const THREADS_ENV: &str = "EIGENSCOPE_THREADS";

/// Sampling resolution for coarse Jacobian tables.
const JAC_RESOLUTION: usize = 256;

/// Phase grid used when the quasimode phase is tuned rather than given.
const SCAR_PHASE_GRID: usize = 2048;

/// Histogram bins emitted by `plot` for entropy-rate reports.
const RATE_BINS: usize = 24;

/// Upper edge of the rate histogram; rates above land in the last bin.
const RATE_BIN_TOP: f64 = 1.5;

pub const USAGE: &str = "usage:
  eigenscope run <config-file> [key=value ...]
  eigenscope plot <report.json> [more reports ...]

The config file is line-oriented `key=value`; blank lines and lines
starting with `#` are skipped. Command-line overrides win over the file,
later ones over earlier ones.

config keys:
  experiment   one of: eup-random-sweep, mu-dft, spectrum,
               entropy-histogram, pressure-certificate, subadditivity,
               shift-invariance, norm-decay, egorov-scan, scar,
               classical-entropy, husimi
  N, K         Hilbert dimension and strip count
  n            refinement depth (0 = Ehrenfest horizon); for husimi, the
               eigenstate index
  n_o, m       window split lengths
  T            time horizon (0 = twice the Ehrenfest horizon)
  G            grid resolution (0 = experiment default)
  delta_prime  horizon shrink factor in [0, 1)
  gamma        commutation-window shrink factor in [0, 1)
  eta          strip profile smoothing width (0 = 1/(4K))
  Lambda       penalty exponent for unrealizable steps (0 = 10 lambda)
  theta        quasimode phase (negative = tune over the phase grid)
  seed         64-bit seed for all randomized draws
  count        instance or state count for sweeps
  out_dir      output directory

env: EIGENSCOPE_THREADS sets the worker pool size (default: logical cores).
exit codes: 0 success, 1 usage error, 2 violated invariant.";

/// Fully resolved run parameters. Field names match the config keys;
/// integer fields with a 0 default resolve per experiment at run time.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n_dim: usize,
    #[serde(rename = "K")]
    pub strips: usize,
    pub n: usize,
    pub n_o: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_steps: usize,
    #[serde(rename = "G")]
    pub grid: usize,
    pub delta_prime: f64,
    pub gamma: f64,
    pub eta: f64,
    #[serde(rename = "Lambda")]
    pub lambda_penalty: f64,
    pub theta: f64,
    pub seed: u64,
    pub count: usize,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            n_dim: 64,
            strips: 3,
            n: 0,
            n_o: 1,
            m: 1,
            t_steps: 0,
            grid: 0,
            delta_prime: 0.0,
            gamma: 0.0,
            eta: 0.0,
            lambda_penalty: 0.0,
            theta: -1.0,
            seed: 0,
            count: 200,
            out_dir: "out".into(),
        }
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse `{value}` as an integer")))
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse `{value}` as a number")))
}

impl ExperimentConfig {
    /// Parses a line-oriented `key=value` file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` command-line override.
    pub fn apply_override(&mut self, arg: &str) -> Result<()> {
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{arg}` is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = value.to_string(),
            "N" => self.n_dim = parse_int(key, value)?,
            "K" => self.strips = parse_int(key, value)?,
            "n" => self.n = parse_int(key, value)?,
            "n_o" => self.n_o = parse_int(key, value)?,
            "m" => self.m = parse_int(key, value)?,
            "T" => self.t_steps = parse_int(key, value)?,
            "G" => self.grid = parse_int(key, value)?,
            "delta_prime" => self.delta_prime = parse_real(key, value)?,
            "gamma" => self.gamma = parse_real(key, value)?,
            "eta" => self.eta = parse_real(key, value)?,
            "Lambda" => self.lambda_penalty = parse_real(key, value)?,
            "theta" => self.theta = parse_real(key, value)?,
            "seed" => self.seed = parse_int(key, value)?,
            "count" => self.count = parse_int(key, value)?,
            "out_dir" => self.out_dir = value.to_string(),
            other => {
                return Err(Error::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::Config(format!(
                "unknown experiment `{}`; expected one of: {}",
                self.experiment,
                EXPERIMENTS.join(", ")
            )));
        }
        Ok(())
    }

    /// Strip smoothing width; 0 resolves to half the admissible maximum.
    fn eta_resolved(&self) -> f64 {
        if self.eta > 0.0 {
            self.eta
        } else {
            1.0 / (4.0 * self.strips as f64)
        }
    }

    fn lambda_penalty_resolved(&self, lambda: f64) -> f64 {
        if self.lambda_penalty > 0.0 {
            self.lambda_penalty
        } else {
            10.0 * lambda
        }
    }

    /// Refinement depth; 0 resolves to the Ehrenfest horizon at
    /// `delta_prime`.
    fn depth_resolved(&self, lambda: f64) -> Result<usize> {
        if self.n > 0 {
            Ok(self.n)
        } else {
            ehrenfest_time(self.n_dim, self.delta_prime, lambda)
        }
    }

    /// Time horizon; 0 resolves to twice the Ehrenfest horizon.
    fn horizon_resolved(&self, lambda: f64) -> Result<usize> {
        if self.t_steps > 0 {
            Ok(self.t_steps)
        } else {
            Ok(2 * ehrenfest_time(self.n_dim, self.delta_prime, lambda)?)
        }
    }

    fn grid_resolved(&self, default: usize) -> usize {
        if self.grid > 0 {
            self.grid
        } else {
            default
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    config: &'a ExperimentConfig,
    version: &'static str,
}

/// Tracks files written by one run so a failed run leaves nothing behind.
struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSet {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn discard(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}

fn write_report<R: Serialize>(
    out: &mut OutputSet,
    cfg: &ExperimentConfig,
    results: &R,
) -> Result<()> {
    #[derive(Serialize)]
    struct Report<'a, R: Serialize> {
        manifest: Manifest<'a>,
        #[serde(flatten)]
        results: &'a R,
    }
    let report = Report {
        manifest: Manifest {
            config: cfg,
            version: env!("CARGO_PKG_VERSION"),
        },
        results,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    out.write(&format!("{}.report.json", cfg.experiment), &text)
}

/// Runs one experiment, returning the paths written. On any failure the
/// partial outputs are removed before the error propagates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mut out = OutputSet::new(Path::new(&cfg.out_dir))?;
    let result = dispatch(cfg, &mut out);
    match result {
        Ok(()) => Ok(out.written),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

/// Runs with an explicit worker pool size; `None` uses the global pool.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<PathBuf>> {
    match threads {
        None => run_experiment(cfg),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(|| run_experiment(cfg)),
    }
}

/// Pool size requested through the environment, if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{THREADS_ENV}: {e}"))),
        Ok(s) => {
            let t: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}: `{s}` is not a pool size")))?;
            if t == 0 {
                return Err(Error::Config(format!("{THREADS_ENV}: pool size must be >= 1")));
            }
            Ok(Some(t))
        }
    }
}

/// Maps an error to the process exit code: 1 for usage and input problems,
/// 2 for violated numerical invariants and internal failures.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::BadParameter { .. }
        | Error::Io { .. }
        | Error::BadMagic { .. }
        | Error::BadVersion { .. }
        | Error::BadPayload { .. }
        | Error::WordTable { .. }
        | Error::BudgetExceeded { .. }
        | Error::TooLarge { .. }
        | Error::BadQuantization { .. } => 1,
        _ => 2,
    }
}

/// Entry point shared by the binary: `run <config> [key=value ...]` or
/// `plot <report ...>`.
pub fn main_entry(args: &[String]) -> Result<Vec<PathBuf>> {
    match args.first().map(String::as_str) {
        Some("run") => {
            let file = args
                .get(1)
                .ok_or_else(|| Error::Config("run needs a config file".into()))?;
            let mut cfg = ExperimentConfig::from_file(Path::new(file))?;
            for over in &args[2..] {
                cfg.apply_override(over)?;
            }
            run_with_threads(&cfg, threads_from_env()?)
        }
        Some("plot") => {
            let paths: Vec<PathBuf> = args[1..].iter().map(PathBuf::from).collect();
            emit_plot_data(&paths)
        }
        Some(other) => Err(Error::Config(format!("unknown command `{other}`"))),
        None => Err(Error::Config("missing command".into())),
    }
}

fn dispatch(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    match cfg.experiment.as_str() {
        "eup-random-sweep" => run_eup_random_sweep(cfg, out),
        "mu-dft" => run_mu_dft(cfg, out),
        "spectrum" => run_spectrum(cfg, out),
        "entropy-histogram" => run_entropy_histogram(cfg, out),
        "pressure-certificate" => run_pressure_certificate(cfg, out),
        "subadditivity" => run_subadditivity(cfg, out),
        "shift-invariance" => run_shift_invariance(cfg, out),
        "norm-decay" => run_norm_decay(cfg, out),
        "egorov-scan" => run_egorov_scan(cfg, out),
        "scar" => run_scar(cfg, out),
        "classical-entropy" => run_classical_entropy(cfg, out),
        "husimi" => run_husimi(cfg, out),
        other => Err(Error::Config(format!("unknown experiment `{other}`"))),
    }
}

/// Standard-map propagator, strip partition, and Jacobian table at the
/// configured size.
fn cat_setup(
    cfg: &ExperimentConfig,
) -> Result<(ClassicalCatMap, OperatorHandle, QuantumPartition, JacobianTable)> {
    let map = ClassicalCatMap::standard();
    let u = quantize_cat(&map, cfg.n_dim)?;
    let spec = StripPartitionSpec::new(cfg.strips, cfg.eta_resolved())?;
    let partition = build_strip_partition(cfg.n_dim, &spec)?;
    let jac = coarse_jacobian_table(
        &map,
        &spec,
        cfg.lambda_penalty_resolved(map.lambda()),
        JAC_RESOLUTION,
    )?;
    Ok((map, u, partition, jac))
}

fn basis_state(dim: usize, index: usize) -> StateVector {
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[index] = C64::new(1.0, 0.0);
    StateVector::new(amps)
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Runs a closure over indices in parallel, collecting results in index
/// order so reductions downstream are deterministic.
fn par_map<T: Send, F: Fn(usize) -> Result<T> + Sync + Send>(count: usize, f: F) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

// ---------------------------------------------------------------------
// eup-random-sweep

struct SweepInstance {
    dim: usize,
    blocks: usize,
    u: OperatorHandle,
    partition: QuantumPartition,
    alpha: WeightFamily,
    beta: WeightFamily,
    o: OperatorHandle,
    eps: f64,
    psi: StateVector,
}

/// Index offset for the second state draw a sweep instance may need.
const SWEEP_TAIL_OFFSET: u64 = 1 << 23;

/// Deterministically rebuildable random instance: a Haar unitary, a random
/// orthogonal projector partition, random weights, and in two of three
/// modes a diagonal projector observable with a state near its cone.
fn sweep_instance(seed: u64, index: u64, n_max: usize, k_max: usize) -> Result<SweepInstance> {
    let mut rng = rng_for(seed, Task::SweepInstance { index });
    let dim = rng.gen_range(2..=n_max.max(2));
    let blocks = rng.gen_range(1..=k_max.clamp(1, dim));

    let mut sizes = vec![1usize; blocks];
    for _ in blocks..dim {
        sizes[rng.gen_range(0..blocks)] += 1;
    }
    let mut diags: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); dim]; blocks];
    let mut at = 0;
    for (k, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            diags[k][at] = C64::new(1.0, 0.0);
            at += 1;
        }
    }
    let partition = QuantumPartition::new(diags.into_iter().map(OperatorHandle::diagonal).collect())?;

    let u = OperatorHandle::dense(random_unitary(dim, seed, index));
    let alpha = WeightFamily::new((0..blocks).map(|_| rng.gen_range(0.5..2.0)).collect())?;
    let beta = WeightFamily::new((0..blocks).map(|_| rng.gen_range(0.5..2.0)).collect())?;

    let mode: u8 = rng.gen_range(0..3);
    let base = random_state(dim, seed, index);
    let (o, eps, psi) = if mode == 0 {
        (OperatorHandle::Identity(dim), 0.0, base)
    } else {
        let mut keep = vec![false; dim];
        let mut any = false;
        for flag in keep.iter_mut() {
            *flag = rng.gen_bool(0.7);
            any |= *flag;
        }
        if !any {
            keep[0] = true;
        }
        let o = OperatorHandle::diagonal(
            keep.iter()
                .map(|&k| C64::new(if k { 1.0 } else { 0.0 }, 0.0))
                .collect(),
        );
        let projected = o.apply(base.amps())?;
        let in_cone = match StateVector::normalized(projected) {
            Ok(s) => s,
            Err(_) => basis_state(dim, keep.iter().position(|&k| k).unwrap_or(0)),
        };
        if mode == 1 {
            (o, 0.0, in_cone)
        } else {
            // Push the state slightly out of the cone and certify with the
            // per-block deviation actually measured.
            let tail = random_state(dim, seed, index + SWEEP_TAIL_OFFSET);
            let amps: Vec<C64> = in_cone
                .amps()
                .iter()
                .zip(tail.amps())
                .map(|(a, b)| a + C64::new(0.05, 0.0) * b)
                .collect();
            let psi = StateVector::normalized(amps)?;
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
            (o, eps + 1e-12, psi)
        }
    };

    Ok(SweepInstance {
        dim,
        blocks,
        u,
        partition,
        alpha,
        beta,
        o,
        eps,
        psi,
    })
}

#[derive(Serialize)]
struct SweepResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    h_n: f64,
    p_alpha: f64,
    p_beta: f64,
    c: f64,
    margin: f64,
    count: usize,
    margin_min: f64,
}

fn run_eup_random_sweep(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let rows = par_map(cfg.count, |i| {
        let inst = sweep_instance(cfg.seed, i as u64, cfg.n_dim, cfg.strips)?;
        let cert = eup_bound_certificate(
            &inst.u,
            &inst.partition,
            &inst.alpha,
            &inst.beta,
            &inst.o,
            inst.eps,
            &inst.psi,
        )?;
        Ok((inst.dim, inst.blocks, inst.eps, cert))
    })?;

    let mut csv = String::from("index,N,K,eps,margin\n");
    for (i, (dim, blocks, eps, cert)) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{dim},{blocks},{:.16e},{:.16e}\n",
            eps, cert.margin
        ));
    }
    out.write("eup-random-sweep.margins.csv", &csv)?;

    let (worst_idx, worst) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .3.margin.partial_cmp(&b.1 .3.margin).unwrap())
        .expect("sweep needs count >= 1");
    let margin_min = worst.3.margin;

    let inst = sweep_instance(cfg.seed, worst_idx as u64, cfg.n_dim, cfg.strips)?;
    let h_n = shannon_entropy(&inst.psi, &inst.partition)?;

    write_report(
        out,
        cfg,
        &SweepResults {
            n_dim: worst.0,
            strips: worst.1,
            n: 1,
            h_n,
            p_alpha: worst.3.p_alpha,
            p_beta: worst.3.p_beta,
            c: worst.3.c_o,
            margin: margin_min,
            count: cfg.count,
            margin_min,
        },
    )?;

    if margin_min < -1e-9 {
        return Err(Error::Invariant(format!(
            "random-sweep certificate margin >= -1e-9: instance {worst_idx} has margin {margin_min:.3e}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// mu-dft

#[derive(Serialize)]
struct MuDftResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    h_n: f64,
    p_alpha: f64,
    p_beta: f64,
    c: f64,
    margin: f64,
    bound: f64,
    states: usize,
}

/// Position states under the Fourier propagator attain the entropic
/// uncertainty bound exactly: h(psi) + h(F psi) = log N = -2 log N^{-1/2}.
fn run_mu_dft(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let dim = cfg.n_dim;
    if dim < 2 {
        return Err(Error::Config("mu-dft needs N >= 2".into()));
    }
    let f = OperatorHandle::dense(fourier_matrix(dim));
    let partition = QuantumPartition::basis_projectors(dim);
    let ones = WeightFamily::ones(dim);
    let id = OperatorHandle::Identity(dim);

    let certs = par_map(dim, |j| {
        eup_bound_certificate(&f, &partition, &ones, &ones, &id, 0.0, &basis_state(dim, j))
    })?;

    let mut csv = String::from("index,h_in,h_out,lhs,rhs,margin\n");
    for (j, cert) in certs.iter().enumerate() {
        csv.push_str(&format!(
            "{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            cert.p_alpha, cert.p_beta, cert.lhs, cert.rhs, cert.margin
        ));
    }
    out.write("mu-dft.states.csv", &csv)?;

    let worst = certs
        .iter()
        .max_by(|a, b| a.margin.abs().partial_cmp(&b.margin.abs()).unwrap())
        .expect("at least one basis state");

    write_report(
        out,
        cfg,
        &MuDftResults {
            n_dim: dim,
            strips: dim,
            n: 1,
            h_n: worst.p_beta,
            p_alpha: worst.p_alpha,
            p_beta: worst.p_beta,
            c: worst.c_o,
            margin: worst.margin,
            bound: worst.rhs,
            states: dim,
        },
    )?;

    if worst.margin.abs() > 1e-9 {
        return Err(Error::Invariant(format!(
            "Fourier equality case margin 0 within 1e-9: measured {:.3e}",
            worst.margin
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// spectrum

#[derive(Serialize)]
struct SpectrumResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    unitarity_defect: f64,
    max_residual: f64,
    gram_defect: f64,
    clusters: usize,
    transport_defect_q: f64,
    transport_defect_p: f64,
}

fn run_spectrum(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let map = ClassicalCatMap::standard();
    let u = quantize_cat(&map, cfg.n_dim)?;
    let dec = eig_unitary(&u)?;
    let (dq, _) = egorov_translation_defect(&u, &map, (1, 0))?;
    let (dp, _) = egorov_translation_defect(&u, &map, (0, 1))?;

    let mut csv = String::from("index,phase\n");
    for (i, phase) in dec.phases.iter().enumerate() {
        csv.push_str(&format!("{i},{:.16e}\n", phase));
    }
    out.write("spectrum.phases.csv", &csv)?;

    write_report(
        out,
        cfg,
        &SpectrumResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: 0,
            unitarity_defect: dec.unitarity_defect,
            max_residual: dec.max_residual,
            gram_defect: dec.gram_defect,
            clusters: dec.cluster_count,
            transport_defect_q: dq,
            transport_defect_p: dp,
        },
    )?;

    if dec.unitarity_defect > 1e-10 {
        return Err(Error::Invariant(format!(
            "propagator unitarity ||U U* - I|| <= 1e-10: measured {:.3e}",
            dec.unitarity_defect
        )));
    }
    if dq.max(dp) > 1e-8 {
        return Err(Error::Invariant(format!(
            "translation transport defect <= 1e-8: measured {:.3e}",
            dq.max(dp)
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// entropy-histogram

#[derive(Serialize)]
struct EntropyHistogramResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    rate_min: f64,
    rate_median: f64,
    rate_max: f64,
}

/// Entropy rate h_n / n of every eigenstate at the refinement horizon.
fn run_entropy_histogram(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let (map, u, partition, _) = cat_setup(cfg)?;
    let depth = cfg.depth_resolved(map.lambda())?;
    let dec = eig_unitary(&u)?;

    let rates = par_map(cfg.n_dim, |i| {
        let table = cylinder_measure(&dec.eigenstate(i), depth, &u, &partition)?;
        Ok((table.entropy(), table.entropy() / depth as f64))
    })?;

    let mut csv = String::from("index,entropy,rate\n");
    for (i, (h, rate)) in rates.iter().enumerate() {
        csv.push_str(&format!("{i},{:.16e},{:.16e}\n", h, rate));
    }
    out.write("entropy-histogram.rates.csv", &csv)?;

    let mut sorted: Vec<f64> = rates.iter().map(|r| r.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    write_report(
        out,
        cfg,
        &EntropyHistogramResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: depth,
            rate_min: sorted[0],
            rate_median: median_of_sorted(&sorted),
            rate_max: *sorted.last().unwrap(),
        },
    )
}

// ---------------------------------------------------------------------
// pressure-certificate

#[derive(Serialize)]
struct PressureCertificateResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    h_n: f64,
    p_alpha: f64,
    p_beta: f64,
    c: f64,
    margin: f64,
    margin_min: f64,
    rhs_ideal: f64,
    offset: f64,
}

/// Builds the refined certificate once and certifies every eigenstate.
/// The reported offset is -2 log c - 2 log hbar, the gap between the
/// measured constant and the ideal-form line.
fn run_pressure_certificate(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let (map, u, partition, jac) = cat_setup(cfg)?;
    let ehc = EhrenfestConfig::new(cfg.n_dim, cfg.delta_prime, map.lambda())?;
    let cert = RefinedCertificate::build(&u, &partition, &jac, &ehc)?;
    let dec = eig_unitary(&u)?;

    let rows = par_map(cfg.n_dim, |i| {
        let psi = dec.eigenstate(i);
        let (ec, rhs_ideal) = cert.certify(&psi)?;
        let masses = cert.partition().block_masses(&psi)?;
        Ok((entropy_of_masses(&masses), ec, rhs_ideal))
    })?;

    let mut csv = String::from("index,h_n,p_alpha,p_beta,margin\n");
    for (i, (h, ec, _)) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            h, ec.p_alpha, ec.p_beta, ec.margin
        ));
    }
    out.write("pressure-certificate.margins.csv", &csv)?;

    let (h_min, worst, rhs_ideal) = rows
        .iter()
        .min_by(|a, b| a.1.margin.partial_cmp(&b.1.margin).unwrap())
        .expect("at least one eigenstate");
    let margin_min = worst.margin;
    let offset = -2.0 * cert.c().ln() - rhs_ideal;

    write_report(
        out,
        cfg,
        &PressureCertificateResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: cert.steps(),
            h_n: *h_min,
            p_alpha: worst.p_alpha,
            p_beta: worst.p_beta,
            c: cert.c(),
            margin: margin_min,
            margin_min,
            rhs_ideal: *rhs_ideal,
            offset,
        },
    )?;

    if margin_min < -1e-9 {
        return Err(Error::Invariant(format!(
            "pressure-bound margin >= -1e-9 for every eigenstate: minimum {margin_min:.3e}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// subadditivity

#[derive(Serialize)]
struct SubadditivityResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    states: usize,
    defect_max: f64,
    bound: f64,
}

/// Splits the refinement window every admissible way for the first
/// `count` eigenstates and checks the three-step subadditivity bound.
fn run_subadditivity(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let (map, u, partition, jac) = cat_setup(cfg)?;
    let ehc = EhrenfestConfig::new(cfg.n_dim, cfg.delta_prime, map.lambda())?;
    let n_e = ehc.n_e();
    let dec = eig_unitary(&u)?;
    let states = cfg.count.min(cfg.n_dim);

    let mut splits = Vec::new();
    for n_o in 1..n_e {
        for m in 1..=(n_e - n_o) {
            splits.push((n_o, m));
        }
    }
    if splits.is_empty() {
        return Err(Error::Config(format!(
            "no admissible (n_o, m) splits at horizon n_E = {n_e}"
        )));
    }

    let per_state = par_map(states, |s| {
        let psi = dec.eigenstate(s);
        splits
            .iter()
            .map(|&(n_o, m)| subadditivity_check(&psi, &u, &partition, &jac, n_o, m, &ehc))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut csv = String::from("state,n_o,m,p_joint,p_head,p_tail,defect,bound\n");
    for (s, reports) in per_state.iter().enumerate() {
        for r in reports {
            csv.push_str(&format!(
                "{s},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.n_o, r.m, r.p_joint, r.p_head, r.p_tail, r.defect, r.bound
            ));
        }
    }
    out.write("subadditivity.defects.csv", &csv)?;

    let all: Vec<_> = per_state.iter().flatten().collect();
    let worst = all
        .iter()
        .max_by(|a, b| a.defect.partial_cmp(&b.defect).unwrap())
        .expect("at least one split");

    write_report(
        out,
        cfg,
        &SubadditivityResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: n_e,
            states,
            defect_max: worst.defect,
            bound: worst.bound,
        },
    )?;

    if worst.defect > worst.bound + 0.1 {
        return Err(Error::Invariant(format!(
            "window-split pressure defect <= 3 lambda + 0.1: measured {:.6} at (n_o, m) = ({}, {})",
            worst.defect, worst.n_o, worst.m
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// shift-invariance

#[derive(Serialize)]
struct ShiftInvarianceResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    n_o: usize,
    egorov_time: usize,
    defect_mean: f64,
    defect_max: f64,
}

/// Compares shifted against unshifted word tables for the first `count`
/// eigenstates inside the commutation window.
fn run_shift_invariance(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let (map, u, partition, _) = cat_setup(cfg)?;
    let n = if cfg.n > 0 { cfg.n } else { 1 };
    let states = cfg.count.min(cfg.n_dim);
    let dec = eig_unitary(&u)?;

    let reports = par_map(states, |s| {
        shift_invariance_defect(
            &dec.eigenstate(s),
            &u,
            &partition,
            n,
            cfg.n_o,
            map.lambda(),
            cfg.gamma,
        )
    })?;

    let mut csv = String::from("index,defect\n");
    for (i, r) in reports.iter().enumerate() {
        csv.push_str(&format!("{i},{:.16e}\n", r.defect));
    }
    out.write("shift-invariance.defects.csv", &csv)?;

    let defect_max = reports.iter().map(|r| r.defect).fold(0.0f64, f64::max);
    let defect_mean = reports.iter().map(|r| r.defect).sum::<f64>() / reports.len() as f64;

    write_report(
        out,
        cfg,
        &ShiftInvarianceResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n,
            n_o: cfg.n_o,
            egorov_time: reports[0].egorov_time,
            defect_mean,
            defect_max,
        },
    )
}

// ---------------------------------------------------------------------
// norm-decay

#[derive(Serialize)]
struct NormDecayResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    c_fit: f64,
    slope: f64,
    max_norm_first: f64,
    max_norm_last: f64,
}

fn run_norm_decay(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let (map, u, partition, jac) = cat_setup(cfg)?;
    let depth = cfg.depth_resolved(map.lambda())?;
    let scan = norm_decay_scan(&u, &partition, &jac, depth)?;

    out.write("norm-decay.decay.csv", &scan.to_csv())?;

    let points: Vec<(f64, f64)> = scan
        .rows
        .iter()
        .map(|r| (r.n as f64, r.max_norm.ln()))
        .collect();

    write_report(
        out,
        cfg,
        &NormDecayResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: depth,
            c_fit: scan.c_fit,
            slope: fit_slope(&points),
            max_norm_first: scan.rows.first().expect("depth >= 0").max_norm,
            max_norm_last: scan.rows.last().expect("depth >= 0").max_norm,
        },
    )
}

// ---------------------------------------------------------------------
// egorov-scan

#[derive(Serialize)]
struct EgorovResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    egorov_time: usize,
    ehrenfest_steps: usize,
    window_max: f64,
    final_norm: f64,
}

/// Commutator growth of two transported translations, against the exact
/// transport prediction.
fn run_egorov_scan(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let lambda = ClassicalCatMap::standard().lambda();
    let t_max = cfg.horizon_resolved(lambda)?;
    let scan = egorov_commutator_scan(cfg.n_dim, (1, 0), (0, 1), t_max, cfg.gamma)?;

    out.write("egorov-scan.commutator.csv", &scan.to_csv())?;

    let window_max = scan
        .rows
        .iter()
        .filter(|r| r.t <= scan.egorov_time)
        .map(|r| r.norm)
        .fold(0.0f64, f64::max);

    write_report(
        out,
        cfg,
        &EgorovResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: t_max,
            egorov_time: scan.egorov_time,
            ehrenfest_steps: scan.ehrenfest_steps,
            window_max,
            final_norm: scan.rows.last().expect("t_max >= 0").norm,
        },
    )
}

// ---------------------------------------------------------------------
// scar

#[derive(Serialize)]
struct ScarResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    #[serde(rename = "T")]
    window: usize,
    theta: f64,
    defect: f64,
    raw_norm: f64,
    disc_mass: f64,
    rate: f64,
    increment: f64,
    jacobian_term: f64,
    ruelle_ok: bool,
}

/// Time-averaged quasimode at the origin fixed point: Husimi mass in the
/// radius-0.1 disc and entropy rate in the strip partition.
fn run_scar(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let (map, u, partition, jac) = cat_setup(cfg)?;
    let center = (0.0, 0.0);
    let window = cfg.horizon_resolved(map.lambda())?;
    let grid = cfg.grid_resolved(64);
    let theta = if cfg.theta >= 0.0 {
        cfg.theta
    } else {
        tune_scar_phase(&u, &map, window, center, SCAR_PHASE_GRID)?.0
    };
    let scar = scar_quasimode(&u, &map, window, theta, center)?;

    let hus = husimi(&scar.state, grid)?;
    let disc_mass = hus.mass_fraction_in_disc(center, 0.1);
    out.write("scar.husimi.csv", &hus.to_csv())?;

    let depth = cfg.depth_resolved(map.lambda())?;
    let rate = entropy_rate(
        &EntropySource::Quantum {
            psi: &scar.state,
            u: &u,
            partition: &partition,
        },
        depth,
        &jac,
    )?;

    write_report(
        out,
        cfg,
        &ScarResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: depth,
            window,
            theta,
            defect: scar.defect,
            raw_norm: scar.raw_norm,
            disc_mass,
            rate: rate.rate,
            increment: rate.increment,
            jacobian_term: rate.jacobian_term,
            ruelle_ok: rate.ruelle_ok,
        },
    )
}

// ---------------------------------------------------------------------
// classical-entropy

#[derive(Serialize)]
struct ClassicalEntropyResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    lebesgue_rate: f64,
    lebesgue_increment: f64,
    dirac_rate: f64,
    dirac_increment: f64,
    jacobian_term: f64,
    ruelle_ok: bool,
}

/// Classical itinerary entropy rates for the uniform measure and the
/// fixed-point Dirac measure, with their Ruelle comparisons.
fn run_classical_entropy(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let map = ClassicalCatMap::standard();
    let spec = StripPartitionSpec::new(cfg.strips, cfg.eta_resolved())?;
    let jac = coarse_jacobian_table(
        &map,
        &spec,
        cfg.lambda_penalty_resolved(map.lambda()),
        JAC_RESOLUTION,
    )?;
    let n_o = cfg.n_o;
    let lebesgue = ClassicalMeasureSpec::Lebesgue {
        resolution: cfg.grid_resolved(2048),
    };
    let dirac = ClassicalMeasureSpec::PeriodicOrbit {
        point: (0.0, 0.0),
        max_period: 64,
    };

    let leb = entropy_rate(&EntropySource::Classical { map: &map, spec: &lebesgue }, n_o, &jac)?;
    let dir = entropy_rate(&EntropySource::Classical { map: &map, spec: &dirac }, n_o, &jac)?;

    let mut csv = String::from("measure,n_o,entropy,rate,increment,jacobian_term,ruelle_ok\n");
    for (name, r) in [("lebesgue", &leb), ("dirac", &dir)] {
        csv.push_str(&format!(
            "{name},{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            r.n_o, r.entropy, r.rate, r.increment, r.jacobian_term, r.ruelle_ok
        ));
    }
    out.write("classical-entropy.rates.csv", &csv)?;

    let stats = classical_cylinder_stats(&map, cfg.strips, n_o, &lebesgue)?;
    let mut depth_csv = String::from("t,entropy\n");
    for (t, h) in stats.entropies().iter().enumerate() {
        depth_csv.push_str(&format!("{t},{:.16e}\n", h));
    }
    out.write("classical-entropy.entropies.csv", &depth_csv)?;

    write_report(
        out,
        cfg,
        &ClassicalEntropyResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: n_o,
            lebesgue_rate: leb.rate,
            lebesgue_increment: leb.increment,
            dirac_rate: dir.rate,
            dirac_increment: dir.increment,
            jacobian_term: leb.jacobian_term,
            ruelle_ok: leb.ruelle_ok && dir.ruelle_ok,
        },
    )?;

    if !(leb.ruelle_ok && dir.ruelle_ok) {
        return Err(Error::Invariant(format!(
            "Ruelle comparison for invariant measures: lebesgue increment {:.6} vs {:.6}, dirac increment {:.6} vs {:.6}",
            leb.increment, leb.jacobian_term, dir.increment, dir.jacobian_term
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// husimi

#[derive(Serialize)]
struct HusimiResults {
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(rename = "K")]
    strips: usize,
    n: usize,
    total: f64,
    disc_mass: f64,
}

/// Husimi density of one eigenstate (index `n`) on a G x G grid.
fn run_husimi(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    if cfg.n >= cfg.n_dim {
        return Err(Error::Config(format!(
            "husimi eigenstate index n = {} out of range for N = {}",
            cfg.n, cfg.n_dim
        )));
    }
    let map = ClassicalCatMap::standard();
    let u = quantize_cat(&map, cfg.n_dim)?;
    let dec = eig_unitary(&u)?;
    let hus = husimi(&dec.eigenstate(cfg.n), cfg.grid_resolved(64))?;

    out.write("husimi.husimi.csv", &hus.to_csv())?;

    write_report(
        out,
        cfg,
        &HusimiResults {
            n_dim: cfg.n_dim,
            strips: cfg.strips,
            n: cfg.n,
            total: hus.total(),
            disc_mass: hus.mass_fraction_in_disc((0.0, 0.0), 0.1),
        },
    )
}

// ---------------------------------------------------------------------
// plot

/// Reads report files and emits one plot-ready CSV per recognized figure:
/// entropy-rate histogram (bin,count), norm decay on a log scale
/// (n,lognorm,logbound), commutator trace (t,norm), and Husimi grids
/// copied through as-is. Reports without a figure mapping are skipped.
pub fn emit_plot_data(reports: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::Config("plot needs at least one report file".into()));
    }
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for path in reports {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: not a report: {e}", path.display())))?;
            let experiment = value
                .get("manifest")
                .and_then(|m| m.get("experiment"))
                .and_then(|v| v.as_str())
                .ok_or_else(|| {
                    Error::Config(format!("{}: missing manifest.experiment", path.display()))
                })?
                .to_string();
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();

            match experiment.as_str() {
                "entropy-histogram" => {
                    let rates = read_csv_column(&dir.join("entropy-histogram.rates.csv"), 2)?;
                    let mut counts = vec![0usize; RATE_BINS];
                    let width = RATE_BIN_TOP / RATE_BINS as f64;
                    for r in rates {
                        let bin = ((r / width).floor() as isize).clamp(0, RATE_BINS as isize - 1);
                        counts[bin as usize] += 1;
                    }
                    let mut csv = String::from("bin,count\n");
                    for (b, c) in counts.iter().enumerate() {
                        csv.push_str(&format!("{:.16e},{c}\n", (b as f64 + 0.5) * width));
                    }
                    written.push(write_plot(&dir, "entropy-histogram.histogram.csv", &csv)?);
                }
                "norm-decay" => {
                    let src = dir.join("norm-decay.decay.csv");
                    let values = read_csv_column(&src, 1)?;
                    let bounds = read_csv_column(&src, 2)?;
                    let mut csv = String::from("n,lognorm,logbound\n");
                    for (n, (v, b)) in values.iter().zip(&bounds).enumerate() {
                        csv.push_str(&format!("{n},{:.16e},{:.16e}\n", v.ln(), b.ln()));
                    }
                    written.push(write_plot(&dir, "norm-decay.lognorm.csv", &csv)?);
                }
                "egorov-scan" => {
                    let src = dir.join("egorov-scan.commutator.csv");
                    let norms = read_csv_column(&src, 1)?;
                    let mut csv = String::from("t,norm\n");
                    for (t, v) in norms.iter().enumerate() {
                        csv.push_str(&format!("{t},{:.16e}\n", v));
                    }
                    written.push(write_plot(&dir, "egorov-scan.trace.csv", &csv)?);
                }
                "scar" | "husimi" => {
                    let src = dir.join(format!("{experiment}.husimi.csv"));
                    let grid = fs::read_to_string(&src).map_err(|e| Error::io(&src, e))?;
                    written.push(write_plot(&dir, &format!("{experiment}.grid.csv"), &grid)?);
                }
                _ => {}
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for path in &written {
                let _ = fs::remove_file(path);
            }
            Err(e)
        }
    }
}

fn write_plot(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads one numeric column from a headered CSV series file.
fn read_csv_column(path: &Path, column: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let field = line.split(',').nth(column).ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: missing column {column}",
                path.display(),
                lineno + 1
            ))
        })?;
        values.push(field.parse().map_err(|_| {
            Error::Config(format!(
                "{}:{}: cannot parse `{field}` as a number",
                path.display(),
                lineno + 1
            ))
        })?);
    }
    Ok(values)
}
