//! Seeded shot sampling by inverse CDF.
//!
//! Uniform draws come from a ChaCha8 stream keyed by the seed, are sorted, and
//! then resolved against the cumulative distribution in a single pass over the
//! probabilities. The histogram depends only on `(probabilities, shots, seed)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fullspace::{FullState, Real};

/// Outcome index to count; absent keys were never drawn.
pub type Histogram = BTreeMap<u64, u64>;

/// Draws `shots` i.i.d. outcomes from the (possibly slightly unnormalized)
/// distribution produced by `probs`. The closure is called twice, once for
/// the total and once for the sweep.
pub fn sample_from<I, F>(probs: F, shots: u64, seed: u64) -> Histogram
where
    F: Fn() -> I,
    I: Iterator<Item = f64>,
{
    let mut hist = Histogram::new();
    if shots == 0 {
        return hist;
    }
    let total: f64 = probs().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: Vec<f64> = (0..shots).map(|_| rng.random::<f64>() * total).collect();
    draws.sort_by(f64::total_cmp);

    let mut next = 0usize;
    let mut cumulative = 0.0;
    let mut last_nonzero = None;
    for (index, p) in probs().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_nonzero = Some(index as u64);
        cumulative += p;
        let start = next;
        while next < draws.len() && draws[next] < cumulative {
            next += 1;
        }
        if next > start {
            hist.insert(index as u64, (next - start) as u64);
        }
        if next == draws.len() {
            break;
        }
    }
    // Rounding in the running sum can leave a sliver above the last bin.
    if next < draws.len() {
        if let Some(last) = last_nonzero {
            *hist.entry(last).or_insert(0) += (draws.len() - next) as u64;
        }
    }
    hist
}

/// Samples computational-basis outcomes of a full-space state.
pub fn sample_counts<T: Real>(state: &FullState<T>, shots: u64, seed: u64) -> Histogram {
    sample_from(|| state.probabilities(), shots, seed)
}
