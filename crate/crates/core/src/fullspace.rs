//! Dense statevector simulation of generic QAOA on `N = n*n` qubits.
//!
//! Basis index `x` is the bitstring itself; qubit `q` is bit `q` of `x`.
//! Amplitudes are stored as `Complex<T>` with `T` either `f64` or `f32`;
//! all reductions accumulate in `f64`.

use std::fmt::Debug;

use num_complex::{Complex, Complex64};
use num_traits::{Float, FloatConst};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, Error, Result};
use crate::instance::{build_cost, enumerate_feasible, Bitstring, DiagonalCost, ProblemInstance};

/// Qubit ceiling for dense full-space states (n = 5).
pub const MAX_QUBITS: usize = 25;

/// Phase lookup is used when the largest cost is below this many levels.
const PHASE_TABLE_LIMIT: u32 = 1 << 22;

/// Below this many independent butterfly chunks, parallelize inside each chunk.
const MIN_PAR_CHUNKS: usize = 64;

/// Amplitude storage precision.
pub trait Real: Float + FloatConst + Send + Sync + Debug + 'static {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

#[inline]
fn cast<T: Real>(z: Complex64) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

/// Order-independent parallel sum: fixed chunking, chunk totals added in order.
pub(crate) fn det_sum<A: Sync>(items: &[A], f: impl Fn(&A) -> f64 + Sync) -> f64 {
    const CHUNK: usize = 1 << 12;
    items
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

#[inline]
pub(crate) fn prob<T: Real>(z: &Complex<T>) -> f64 {
    let (re, im) = (z.re.to_f64(), z.im.to_f64());
    re * re + im * im
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(Precision::F64),
            "f32" => Ok(Precision::F32),
            other => Err(Error::InvalidArgument(format!("unknown precision {other:?}"))),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        })
    }
}

/// Per-layer angles `(gamma_l, beta_l)`, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl AngleSchedule {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidArgument("schedule depth must be at least 1".into()));
        }
        if gammas.len() != betas.len() {
            return Err(Error::Dimension(format!(
                "{} gammas vs {} betas",
                gammas.len(),
                betas.len()
            )));
        }
        Ok(Self { gammas, betas })
    }

    pub fn single(gamma: f64, beta: f64) -> Self {
        Self {
            gammas: vec![gamma],
            betas: vec![beta],
        }
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas.iter().copied().zip(self.betas.iter().copied())
    }
}

/// Full-space cost values, precomputed once per instance.
#[derive(Debug, Clone)]
pub struct CostTable {
    n: usize,
    values: Vec<u32>,
    max: u32,
}

impl CostTable {
    pub fn new(cost: &DiagonalCost) -> Result<Self> {
        let values = cost.full_table()?;
        let max = values.par_iter().copied().max().unwrap_or(0);
        Ok(Self {
            n: cost.n(),
            values,
            max,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_qubits(&self) -> usize {
        self.n * self.n
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// `e^{-i gamma c}` for `c = 0..=max`, when small enough to tabulate.
    pub(crate) fn phases<T: Real>(&self, gamma: f64) -> Option<Vec<Complex<T>>> {
        (self.max < PHASE_TABLE_LIMIT).then(|| {
            (0..=self.max)
                .map(|c| cast(Complex64::from_polar(1.0, -gamma * c as f64)))
                .collect()
        })
    }
}

/// Dense amplitude vector over `{0,1}^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState<T: Real = f64> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_QUBITS {
        return Err(capacity("full-space qubits", MAX_QUBITS, n_qubits));
    }
    Ok(())
}

/// `|+>^N`: every amplitude equals `2^{-N/2}`.
pub fn init_plus<T: Real>(n_qubits: usize) -> Result<FullState<T>> {
    check_qubits(n_qubits)?;
    let a = T::from_f64(2f64.powi(-(n_qubits as i32)).sqrt());
    Ok(FullState {
        n_qubits,
        amps: vec![Complex::new(a, T::zero()); 1 << n_qubits],
    })
}

impl<T: Real> FullState<T> {
    pub fn basis(n_qubits: usize, index: u64) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n_qubits];
        let slot = amps
            .get_mut(index as usize)
            .ok_or_else(|| Error::InvalidArgument(format!("basis index {index} out of range")))?;
        *slot = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!("amplitude count {len} is not a power of two")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, amps })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    #[inline]
    pub fn amplitude(&self, x: Bitstring) -> Complex64 {
        let a = self.amps[x.0 as usize];
        Complex64::new(a.re.to_f64(), a.im.to_f64())
    }

    pub fn norm_sqr(&self) -> f64 {
        det_sum(&self.amps, prob)
    }

    /// Multiplies `amps[y]` by `e^{-i gamma C(y)}`.
    pub fn apply_cost_phase(&mut self, cost: &CostTable, gamma: f64) -> Result<()> {
        if cost.n_qubits() != self.n_qubits {
            return Err(Error::Dimension(format!(
                "cost over {} qubits applied to a {}-qubit state",
                cost.n_qubits(),
                self.n_qubits
            )));
        }
        if gamma == 0.0 {
            return Ok(());
        }
        match cost.phases::<T>(gamma) {
            Some(phases) => self
                .amps
                .par_iter_mut()
                .zip(cost.values.par_iter())
                .for_each(|(a, &c)| *a = *a * phases[c as usize]),
            None => self
                .amps
                .par_iter_mut()
                .zip(cost.values.par_iter())
                .for_each(|(a, &c)| *a = *a * cast::<T>(Complex64::from_polar(1.0, -gamma * c as f64))),
        }
        Ok(())
    }

    /// `e^{-i beta sum_j X_j}` as `N` in-place single-qubit butterfly passes.
    pub fn apply_x_mixer(&mut self, beta: f64) {
        if beta == 0.0 {
            return;
        }
        let c = Complex::new(T::from_f64(beta.cos()), T::zero());
        let s = Complex::new(T::zero(), T::from_f64(-beta.sin()));
        let len = self.amps.len();
        for q in 0..self.n_qubits {
            let half = 1usize << q;
            let butterfly = |(a0, a1): (&mut Complex<T>, &mut Complex<T>)| {
                let (x0, x1) = (*a0, *a1);
                *a0 = c * x0 + s * x1;
                *a1 = s * x0 + c * x1;
            };
            if len / (2 * half) >= MIN_PAR_CHUNKS {
                self.amps.par_chunks_mut(2 * half).for_each(|chunk| {
                    let (lo, hi) = chunk.split_at_mut(half);
                    lo.iter_mut().zip(hi.iter_mut()).for_each(butterfly);
                });
            } else {
                for chunk in self.amps.chunks_mut(2 * half) {
                    let (lo, hi) = chunk.split_at_mut(half);
                    lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(butterfly);
                }
            }
        }
    }

    pub fn fourth_moment(&self) -> f64 {
        det_sum(&self.amps, |a| prob(a).powi(2))
    }

    /// Total probability on the `n!` permutation matrices.
    pub fn feasible_mass(&self, n: usize) -> Result<f64> {
        if n * n != self.n_qubits {
            return Err(Error::Dimension(format!(
                "state has {} qubits, not {n}^2",
                self.n_qubits
            )));
        }
        Ok(enumerate_feasible(n)?
            .iter()
            .map(|x| prob(&self.amps[x.0 as usize]))
            .sum())
    }

    /// Probability of each basis state, in index order.
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(prob)
    }
}

/// Closed-form mixer kernel `(cos b)^{N-d} (-i sin b)^d`, `d` the Hamming distance.
pub fn mixer_kernel(x: Bitstring, y: Bitstring, beta: f64, n_qubits: usize) -> Complex64 {
    let d = (x.0 ^ y.0).count_ones() as i32;
    let cos = Complex64::new(beta.cos(), 0.0);
    let sin = Complex64::new(0.0, -beta.sin());
    cos.powi(n_qubits as i32 - d) * sin.powi(d)
}

/// Runs a depth-p schedule from `|+>^N` against a precomputed cost table.
pub fn run_generic_with<T: Real>(cost: &CostTable, schedule: &AngleSchedule) -> Result<FullState<T>> {
    let mut state = init_plus::<T>(cost.n_qubits())?;
    for (gamma, beta) in schedule.layers() {
        state.apply_cost_phase(cost, gamma)?;
        state.apply_x_mixer(beta);
    }
    Ok(state)
}

/// Generic QAOA on the instance's penalized cost.
pub fn run_generic(instance: &ProblemInstance, schedule: &AngleSchedule) -> Result<FullState> {
    check_qubits(instance.n_qubits())?;
    let table = CostTable::new(&build_cost(instance))?;
    run_generic_with(&table, schedule)
}
