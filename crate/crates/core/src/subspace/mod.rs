//! CE-QAOA inside the `n^n`-dimensional block-one-hot manifold.
//!
//! Blocks are tour positions. A basis state is a symbol tuple
//! `(j_0, .., j_{n-1})` naming the city held by each block; its linear index
//! is the base-`n` number with `j_0` as the most significant digit, and it
//! embeds into the full space as the bitstring with bit `b*n + j_b` set.
//! Row one-hotness is structural, so feasibility reduces to all symbols
//! being distinct.

mod mixer;
mod twirl;

pub use mixer::{sector_matrix, BlockMixer};
pub use twirl::{best_block_relabeling, twirl_average, Relabeling, TwirlAverage, EXACT_TWIRL_N, TWIRL_SAMPLES};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{capacity, Error, Result};
use crate::fullspace::{det_sum, run_generic_with, CostTable, FullState};
use crate::instance::{build_cost, Bitstring, DiagonalCost, ProblemInstance};
use crate::fullspace::AngleSchedule;

/// `n^n` must stay below ~1.7e7 amplitudes.
pub const MAX_SUBSPACE_N: usize = 8;

/// Embedding into the full space is limited to 16 qubits.
pub const MAX_EMBED_N: usize = 4;

/// Dense subspace Gram matrices are built for `n^n <= 27`.
pub const MAX_GRAM_N: usize = 3;

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    if n > MAX_SUBSPACE_N {
        return Err(capacity("subspace block size", MAX_SUBSPACE_N, n));
    }
    Ok(())
}

/// `n^n`.
pub fn subspace_dim(n: usize) -> usize {
    n.pow(n as u32)
}

/// Symbol tuple of a linear subspace index.
pub fn tuple_of(n: usize, mut index: usize) -> Vec<usize> {
    let mut t = vec![0; n];
    for slot in t.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    t
}

/// Linear subspace index of a symbol tuple.
pub fn index_of(n: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &j| acc * n + j)
}

/// True when no symbol repeats.
pub fn is_injective(tuple: &[usize]) -> bool {
    let mut seen = 0u64;
    tuple.iter().all(|&j| {
        let fresh = seen & (1 << j) == 0;
        seen |= 1 << j;
        fresh
    })
}

fn injective_index(n: usize, index: usize) -> bool {
    let mut seen = 0u64;
    let mut rest = index;
    for _ in 0..n {
        let j = rest % n;
        rest /= n;
        if seen & (1 << j) != 0 {
            return false;
        }
        seen |= 1 << j;
    }
    true
}

/// Amplitudes over symbol tuples `[n]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceState {
    n: usize,
    amps: Vec<Complex64>,
}

/// Product of per-block W states: every amplitude is `n^{-n/2}`.
pub fn init_w_product(n: usize) -> Result<SubspaceState> {
    check_n(n)?;
    let dim = subspace_dim(n);
    let a = 1.0 / (dim as f64).sqrt();
    Ok(SubspaceState {
        n,
        amps: vec![Complex64::new(a, 0.0); dim],
    })
}

/// Per-tuple cost values for a given instance size.
#[derive(Debug, Clone)]
pub struct SubspaceCost {
    n: usize,
    values: Vec<u64>,
}

impl SubspaceCost {
    pub fn new(cost: &DiagonalCost) -> Result<Self> {
        let n = cost.n();
        check_n(n)?;
        let values = (0..subspace_dim(n))
            .into_par_iter()
            .map(|i| cost.eval_symbols(&tuple_of(n, i)))
            .collect();
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

impl SubspaceState {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_n(n)?;
        if amps.len() != subspace_dim(n) {
            return Err(Error::Dimension(format!(
                "{} amplitudes for n={n}, expected {}",
                amps.len(),
                subspace_dim(n)
            )));
        }
        Ok(Self { n, amps })
    }

    /// The basis state at one symbol tuple.
    pub fn basis(n: usize, tuple: &[usize]) -> Result<Self> {
        check_n(n)?;
        validate_tuple(n, tuple)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); subspace_dim(n)];
        amps[index_of(n, tuple)] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    #[inline]
    pub fn amplitude(&self, tuple: &[usize]) -> Complex64 {
        self.amps[index_of(self.n, tuple)]
    }

    pub fn norm_sqr(&self) -> f64 {
        det_sum(&self.amps, |a| a.norm_sqr())
    }

    /// Multiplies the amplitude at tuple `t` by `e^{-i gamma C(bits(t))}`.
    pub fn apply_subspace_cost_phase(&mut self, cost: &SubspaceCost, gamma: f64) -> Result<()> {
        if cost.n != self.n {
            return Err(Error::Dimension(format!(
                "cost for n={} applied to a subspace state with n={}",
                cost.n, self.n
            )));
        }
        if gamma == 0.0 {
            return Ok(());
        }
        self.amps
            .par_iter_mut()
            .zip(cost.values.par_iter())
            .for_each(|(a, &c)| *a *= Complex64::from_polar(1.0, -gamma * c as f64));
        Ok(())
    }

    /// Applies `exp(-i beta H_XY^{(b)})` on every block.
    pub fn apply_block_xy_mixer(&mut self, mixer: &BlockMixer, beta: f64) -> Result<()> {
        if mixer.n != self.n {
            return Err(Error::Dimension(format!(
                "mixer for n={} applied to a subspace state with n={}",
                mixer.n, self.n
            )));
        }
        if beta == 0.0 {
            return Ok(());
        }
        let n = self.n;
        let phases = mixer.phases(beta);
        // Block b has stride n^{n-1-b}; a fiber is n amplitudes at that stride.
        for b in 0..n {
            let stride = n.pow((n - 1 - b) as u32);
            let span = stride * n;
            self.amps.par_chunks_mut(span).for_each(|chunk| {
                let mut fiber = vec![Complex64::new(0.0, 0.0); n];
                for offset in 0..stride {
                    for (k, slot) in fiber.iter_mut().enumerate() {
                        *slot = chunk[offset + k * stride];
                    }
                    mixer.apply_fiber(&mut fiber, phases);
                    for (k, v) in fiber.iter().enumerate() {
                        chunk[offset + k * stride] = *v;
                    }
                }
            });
        }
        Ok(())
    }

    /// Total probability on tuples with pairwise distinct symbols.
    pub fn subspace_feasible_mass(&self) -> f64 {
        let n = self.n;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| injective_index(n, *i))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Moves the amplitude at `(j_1..j_n)` to `(P_1(j_1)..P_n(j_n))`.
    pub fn apply_block_permutation(&self, p: &BlockPermutation) -> Result<SubspaceState> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!(
                "block permutation for n={} applied to n={}",
                p.n(),
                self.n
            )));
        }
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            out[p.map_index(n, i)] = *a;
        }
        Ok(SubspaceState { n, amps: out })
    }

    /// Probabilities in index order, for sampling.
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a.norm_sqr())
    }
}

pub(crate) fn validate_tuple(n: usize, tuple: &[usize]) -> Result<()> {
    if tuple.len() != n || tuple.iter().any(|&j| j >= n) {
        return Err(Error::InvalidArgument(format!(
            "symbol tuple {tuple:?} is not in [{n}]^{n}"
        )));
    }
    Ok(())
}

/// One permutation of `[n]` per block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BlockPermutation {
    perms: Vec<Vec<usize>>,
}

impl BlockPermutation {
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        let m = perms.len();
        for (b, p) in perms.iter().enumerate() {
            let mut seen = vec![false; p.len()];
            if p.len() != m || p.iter().any(|&j| j >= p.len() || std::mem::replace(&mut seen[j], true)) {
                return Err(Error::InvalidArgument(format!(
                    "block {b}: {p:?} is not a permutation of [{m}]"
                )));
            }
        }
        Ok(Self { perms })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perms: vec![(0..n).collect(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn inverse(&self) -> Self {
        let perms = self
            .perms
            .iter()
            .map(|p| {
                let mut inv = vec![0; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j] = i;
                }
                inv
            })
            .collect();
        Self { perms }
    }

    pub fn apply_tuple(&self, tuple: &[usize]) -> Vec<usize> {
        tuple.iter().zip(&self.perms).map(|(&j, p)| p[j]).collect()
    }

    #[inline]
    pub(crate) fn map_index(&self, n: usize, index: usize) -> usize {
        let mut rest = index;
        let mut out = 0;
        let mut place = 1;
        for b in (0..n).rev() {
            let j = rest % n;
            rest /= n;
            out += self.perms[b][j] * place;
            place *= n;
        }
        out
    }
}

/// Runs the CE layer stack from the W-product state with prebuilt operators.
pub fn run_ce_with(cost: &SubspaceCost, mixer: &BlockMixer, schedule: &AngleSchedule) -> Result<SubspaceState> {
    let mut state = init_w_product(cost.n())?;
    for (gamma, beta) in schedule.layers() {
        state.apply_subspace_cost_phase(cost, gamma)?;
        state.apply_block_xy_mixer(mixer, beta)?;
    }
    Ok(state)
}

/// CE-QAOA on the instance's penalized cost.
pub fn run_ce(instance: &ProblemInstance, schedule: &AngleSchedule, normalized: bool) -> Result<SubspaceState> {
    check_n(instance.n)?;
    let cost = SubspaceCost::new(&build_cost(instance))?;
    let mixer = BlockMixer::new(instance.n, normalized)?;
    run_ce_with(&cost, &mixer, schedule)
}

/// Copies subspace amplitudes to their bitstring positions; everything else is zero.
pub fn embed_to_full(state: &SubspaceState) -> Result<FullState> {
    let n = state.n;
    if n > MAX_EMBED_N {
        return Err(capacity("embedding block size", MAX_EMBED_N, n));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (n * n)];
    for (i, a) in state.amps.iter().enumerate() {
        amps[Bitstring::from_symbols(&tuple_of(n, i)).0 as usize] = *a;
    }
    FullState::from_amplitudes(amps)
}

/// `P_OH` restricted to subspace coordinates (not renormalized).
pub fn project_to_subspace(full: &FullState, n: usize) -> Result<SubspaceState> {
    if full.n_qubits() != n * n {
        return Err(Error::Dimension(format!(
            "{}-qubit state is not an n={n} encoding",
            full.n_qubits()
        )));
    }
    check_n(n)?;
    let amps = (0..subspace_dim(n))
        .map(|i| full.amplitude(Bitstring::from_symbols(&tuple_of(n, i))))
        .collect();
    Ok(SubspaceState { n, amps })
}

/// `<psi_CE(b,g)| P_OH |psi_gen(b,g)>` at one layer, CE side with the
/// unnormalized block mixer.
pub fn overlap_generic_ce(instance: &ProblemInstance, gamma: f64, beta: f64) -> Result<Complex64> {
    let n = instance.n;
    if n > MAX_EMBED_N {
        return Err(capacity("overlap block size", MAX_EMBED_N, n));
    }
    let cost = build_cost(instance);
    let schedule = AngleSchedule::single(gamma, beta);
    let generic = run_generic_with::<f64>(&CostTable::new(&cost)?, &schedule)?;
    let ce = run_ce_with(&SubspaceCost::new(&cost)?, &BlockMixer::new(n, false)?, &schedule)?;
    let projected = project_to_subspace(&generic, n)?;
    Ok(ce
        .amps
        .iter()
        .zip(&projected.amps)
        .map(|(c, g)| c.conj() * g)
        .sum())
}

/// Dense block-XY Hamiltonian on the `n^n` subspace.
pub fn block_xy_hamiltonian(n: usize, normalized: bool) -> Result<DMatrix<f64>> {
    if n > MAX_GRAM_N {
        return Err(capacity("dense subspace operator block size", MAX_GRAM_N, n));
    }
    let sector = sector_matrix(n, normalized);
    let dim = subspace_dim(n);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for col in 0..dim {
        let t = tuple_of(n, col);
        for b in 0..n {
            for j in 0..n {
                let w = sector[(j, t[b])];
                if w != 0.0 {
                    let mut s = t.clone();
                    s[b] = j;
                    h[(index_of(n, &s), col)] += w;
                }
            }
        }
    }
    Ok(h)
}

/// Diagonal projector onto injective tuples.
pub fn feasible_projector(n: usize) -> Result<DMatrix<f64>> {
    if n > MAX_GRAM_N {
        return Err(capacity("dense subspace operator block size", MAX_GRAM_N, n));
    }
    let dim = subspace_dim(n);
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        if i == j && injective_index(n, i) {
            1.0
        } else {
            0.0
        }
    }))
}

/// `2 P H (I - P) H P`.
pub fn double_commutator_gram_with(h: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = h.nrows();
    let complement = DMatrix::<f64>::identity(dim, dim) - p;
    (p * h * complement * h * p) * 2.0
}

/// Minimum eigenvalue of `2 P_Pi H_XY (I - P_Pi) H_XY P_Pi` on the subspace.
pub fn double_commutator_gram(n: usize) -> Result<f64> {
    let h = block_xy_hamiltonian(n, false)?;
    let p = feasible_projector(n)?;
    Ok(crate::linalg::min_eigenvalue(&double_commutator_gram_with(&h, &p)))
}
