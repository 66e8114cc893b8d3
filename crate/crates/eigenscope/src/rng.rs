//! Deterministic randomness. Every random draw in the crate flows through
//! a counter-based ChaCha stream keyed by (seed, task id), so results are
//! reproducible for a given seed regardless of thread count or the order
//! tasks happen to run in.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable task identifiers; the id picks an independent stream.
#[derive(Clone, Copy, Debug)]
pub enum Task {
    /// Start vector for norm power iteration.
    PowerIteration,
    /// Haar-random state draws (each draw indexed separately by `index`).
    RandomState { index: u64 },
    /// Haar-random unitary draws.
    RandomUnitary { index: u64 },
    /// Instance geometry (dimensions, splits, weights) for randomized
    /// sweeps; one stream per instance.
    SweepInstance { index: u64 },
}

impl Task {
    fn stream(self) -> u64 {
        match self {
            Task::PowerIteration => 1,
            Task::RandomState { index } => 0x1000 + index,
            Task::RandomUnitary { index } => 0x2000_0000 + index,
            Task::SweepInstance { index } => 0x4000_0000_0000 + index,
        }
    }
}

/// RNG for a given global seed and task. Independent tasks get independent
/// streams of the same keyed generator.
pub fn rng_for(seed: u64, task: Task) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task.stream());
    rng
}
