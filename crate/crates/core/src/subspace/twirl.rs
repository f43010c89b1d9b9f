//! Blockwise permutation twirl over a fixed CE layer stack.
//!
//! For `|psi> = U |s_0>` and a target tuple `t`, each block relabeling `P`
//! gives `|<t| P^dagger |psi>|^2 = |psi(P t)|^2`. Averaging over all
//! `(n!)^n` relabelings visits every tuple equally often.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_ce, validate_tuple, BlockPermutation, SubspaceState};
use crate::error::{capacity, Result};
use crate::fullspace::AngleSchedule;
use crate::instance::{permutations, ProblemInstance};

/// Largest `n` for which all `(n!)^n` relabelings are enumerated.
pub const EXACT_TWIRL_N: usize = 4;

/// Monte-Carlo sample count above [`EXACT_TWIRL_N`].
pub const TWIRL_SAMPLES: usize = 100_000;

/// Largest `n` accepted at all (sampled mode).
const MAX_TWIRL_N: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwirlAverage {
    pub mean: f64,
    pub samples: usize,
    pub exact: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relabeling {
    pub permutation: BlockPermutation,
    pub probability: f64,
    pub exact: bool,
}

fn target_probability(state: &SubspaceState, p: &BlockPermutation, target: &[usize]) -> f64 {
    state.amplitude(&p.apply_tuple(target)).norm_sqr()
}

/// The `k`-th relabeling in mixed-radix order over the permutation list.
fn nth_relabeling(perms: &[Vec<usize>], n: usize, mut k: usize) -> BlockPermutation {
    let mut blocks = vec![Vec::new(); n];
    for slot in blocks.iter_mut().rev() {
        *slot = perms[k % perms.len()].clone();
        k /= perms.len();
    }
    BlockPermutation { perms: blocks }
}

fn random_relabeling(n: usize, rng: &mut ChaCha8Rng) -> BlockPermutation {
    let perms = (0..n)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    BlockPermutation { perms }
}

fn check(instance: &ProblemInstance, target: &[usize]) -> Result<()> {
    if instance.n > MAX_TWIRL_N {
        return Err(capacity("twirl block size", MAX_TWIRL_N, instance.n));
    }
    validate_tuple(instance.n, target)
}

/// Average target-overlap probability over blockwise relabelings: exact
/// enumeration for `n <= EXACT_TWIRL_N`, seeded sampling above.
pub fn twirl_average(
    instance: &ProblemInstance,
    schedule: &AngleSchedule,
    target: &[usize],
    normalized: bool,
    seed: u64,
) -> Result<TwirlAverage> {
    check(instance, target)?;
    let n = instance.n;
    let state = run_ce(instance, schedule, normalized)?;
    if n <= EXACT_TWIRL_N {
        let perms = permutations(n);
        let total = perms.len().pow(n as u32);
        // Chunk sums are combined in index order so the mean is reproducible.
        let chunk = perms.len().pow(n.saturating_sub(1) as u32).max(1);
        let sum: f64 = (0..total.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                (c * chunk..((c + 1) * chunk).min(total))
                    .map(|k| target_probability(&state, &nth_relabeling(&perms, n, k), target))
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(TwirlAverage {
            mean: sum / total as f64,
            samples: total,
            exact: true,
            seed: None,
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sum: f64 = (0..TWIRL_SAMPLES)
            .map(|_| target_probability(&state, &random_relabeling(n, &mut rng), target))
            .sum();
        Ok(TwirlAverage {
            mean: sum / TWIRL_SAMPLES as f64,
            samples: TWIRL_SAMPLES,
            exact: false,
            seed: Some(seed),
        })
    }
}

/// A relabeling maximizing the target probability; the first maximizer in
/// enumeration order when exact, best of the seeded samples otherwise.
pub fn best_block_relabeling(
    instance: &ProblemInstance,
    schedule: &AngleSchedule,
    target: &[usize],
    normalized: bool,
    seed: u64,
) -> Result<Relabeling> {
    check(instance, target)?;
    let n = instance.n;
    let state = run_ce(instance, schedule, normalized)?;
    let (permutation, probability, exact) = if n <= EXACT_TWIRL_N {
        let perms = permutations(n);
        let total = perms.len().pow(n as u32);
        let (k, prob) = (0..total)
            .into_par_iter()
            .map(|k| (k, target_probability(&state, &nth_relabeling(&perms, n, k), target)))
            .reduce(|| (usize::MAX, f64::NEG_INFINITY), |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            });
        (nth_relabeling(&perms, n, k), prob, true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = (BlockPermutation::identity(n), target_probability(&state, &BlockPermutation::identity(n), target));
        for _ in 0..TWIRL_SAMPLES {
            let p = random_relabeling(n, &mut rng);
            let prob = target_probability(&state, &p, target);
            if prob > best.1 {
                best = (p, prob);
            }
        }
        (best.0, best.1, false)
    };
    Ok(Relabeling {
        permutation,
        probability,
        exact,
    })
}
