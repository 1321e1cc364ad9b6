//! Shaded lightcones: per-error-channel bias bounds for noisy circuits, and the
//! antinoise allocation they enable for probabilistic error cancellation.
//!
//! Layers and channels share one time axis. A circuit with `L` gate layers has
//! `L + 1` boundaries; boundary `b` sits after `b` layers, so `layers[b]` runs
//! from boundary `b` to boundary `b + 1`. Every noise channel lives on a
//! boundary.

pub mod allocation;
pub mod circuit;
pub mod error;
pub mod evolution;
pub mod io;
pub mod lightcone;
pub mod norms;
pub mod oracle;
pub mod pauli;
pub mod random;
pub mod shading;
pub mod speed_limit;

pub use allocation::{allocate, cost_for_bias_target, probability_from_rate, AllocationResult};
pub use circuit::{build_tfim_1d, Gate, GateKind, LayeredCircuit, NoiseChannel, NoiseModel, Observable};
pub use error::{Error, Result};
pub use pauli::{Clifford, Direction, Pauli, PauliString, PauliSum, PauliTerm};
pub use shading::{shade, ShadeConfig, ShadedLightcone};

/// Runs `f` on a dedicated pool of `threads` workers (or inline without the
/// `parallel` feature). Results never depend on the worker count.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Order-preserving map, parallel when the feature is enabled.
pub(crate) fn par_map<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
