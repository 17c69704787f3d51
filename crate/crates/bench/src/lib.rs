//! Shared inputs for the benchmarks.

use dose_core::dataset::{generate_pair, synth_library, SynthCounts};
use dose_core::{MixturePair, SeedTree};

/// One generated pair from a small synthetic library.
pub fn sample_pair(seed: u64) -> MixturePair {
    let lib = synth_library(seed, SynthCounts { oneshots_per_class: 2, loops_per_instrument: 1 });
    generate_pair(SeedTree::new(seed), &lib).expect("synthetic library is complete")
}
