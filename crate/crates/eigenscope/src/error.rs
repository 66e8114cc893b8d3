//! Crate-wide error type. Every failure carries enough context to act on:
//! dimension mismatches name the offending stages, file errors name the
//! path, numerical failures report the defect actually measured.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error(
        "chain stage {left_stage} (dim {left_dim}) cannot feed stage {right_stage} (dim {right_dim})"
    )]
    ChainMismatch {
        left_stage: usize,
        left_dim: usize,
        right_stage: usize,
        right_dim: usize,
    },

    #[error("operator is not unitary: defect {defect:.3e} exceeds tolerance {tol:.1e}")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("matrix of dimension {dim} exceeds the dense eigensolver cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("LAPACK routine {routine} failed with info={info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("eigendecomposition rejected: {check} = {value:.3e} exceeds {tol:.1e}")]
    SpectralDefect {
        check: &'static str,
        value: f64,
        tol: f64,
    },

    #[error("partition is empty")]
    EmptyPartition,

    #[error("partition defect {defect:.3e} exceeds tolerance {tol:.1e}")]
    PartitionDefect { defect: f64, tol: f64 },

    #[error(
        "cone precondition fails at block {block}: deviation {value:.3e} exceeds eps {eps:.3e}"
    )]
    ConeViolation { block: usize, value: f64, eps: f64 },

    #[error("state has norm {norm:.3e}, too far from 1 to normalize safely")]
    BadNorm { norm: f64 },

    #[error("invalid parameter {name}: {reason}")]
    BadParameter { name: &'static str, reason: String },

    #[error("quantization needs gcd(b, N) = 1 and even a*b, c*d: map [[{a},{b}],[{c},{d}]] at N={n} violates this")]
    BadQuantization {
        a: i64,
        b: i64,
        c: i64,
        d: i64,
        n: usize,
    },

    #[error("refinement depth {depth} with {blocks} blocks needs {pairs} block pairs, over the budget of {budget}")]
    BudgetExceeded {
        depth: usize,
        blocks: usize,
        pairs: u128,
        budget: u128,
    },

    #[error("word table needs {words} entries, over the cap of {cap}")]
    WordTable { words: u128, cap: u64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic {got:?}, expected \"EGSC\"")]
    BadMagic { path: String, got: [u8; 4] },

    #[error("{path}: unsupported format version {got}, expected {expected}")]
    BadVersion {
        path: String,
        got: u32,
        expected: u32,
    },

    #[error("{path}: payload holds {got} floats, header implies {expected}")]
    BadPayload {
        path: String,
        expected: usize,
        got: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
