//! Boolean-cube harmonic analysis.
//!
//! The forward Walsh transform is normalized as
//! `f^(S) = 2^{-N} sum_x f(x) chi_S(x)` with `chi_S(x) = (-1)^{popcount(S & x)}`,
//! so the inverse is the plain butterfly and Parseval reads
//! `sum_x |f(x)|^2 = 2^N sum_S |f^(S)|^2`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{capacity, Error, Result};
use crate::fullspace::{FullState, Real};
use crate::instance::{enumerate_feasible, Bitstring};

/// Dense spectra are stored up to this many bits.
pub const MAX_WALSH_BITS: usize = 20;

/// Sphere spectra are filled radially up to this cube dimension.
pub const MAX_SPHERE_BITS: usize = 16;

/// The permutation indicator is transformed explicitly up to `n = 4`.
pub const MAX_PERMUTATION_N: usize = 4;

/// Unnormalized in-place fast Walsh-Hadamard butterfly.
pub fn fwht_in_place(data: &mut [Complex64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for chunk in data.chunks_mut(2 * half) {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half <<= 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalshSpectrum {
    n_bits: usize,
    coeffs: Vec<Complex64>,
}

impl WalshSpectrum {
    pub fn from_coefficients(coeffs: Vec<Complex64>) -> Result<Self> {
        let n_bits = check_len(coeffs.len())?;
        Ok(Self { n_bits, coeffs })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coefficient(&self, mask: u64) -> Complex64 {
        self.coeffs[mask as usize]
    }

    /// `f(x) = sum_S f^(S) chi_S(x)`.
    pub fn inverse(&self) -> Vec<Complex64> {
        let mut values = self.coeffs.clone();
        fwht_in_place(&mut values);
        values
    }

    /// `sum_S |f^(S)|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

fn check_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Dimension(format!("table length {len} is not a power of two")));
    }
    let n_bits = len.trailing_zeros() as usize;
    if n_bits > MAX_WALSH_BITS {
        return Err(capacity("Walsh transform bits", MAX_WALSH_BITS, n_bits));
    }
    Ok(n_bits)
}

/// Forward transform with the `2^{-N}` factor applied once after the butterfly.
pub fn walsh_transform(values: &[Complex64]) -> Result<WalshSpectrum> {
    let n_bits = check_len(values.len())?;
    let mut coeffs = values.to_vec();
    fwht_in_place(&mut coeffs);
    let scale = 1.0 / values.len() as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(WalshSpectrum { n_bits, coeffs })
}

pub fn walsh_transform_real(values: &[f64]) -> Result<WalshSpectrum> {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    walsh_transform(&complex)
}

/// `chi_S(x)`.
#[inline]
pub fn character(mask: u64, x: u64) -> f64 {
    if (mask & x).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Binomial coefficient as a big integer; zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `K_w^{(n)}(r) = sum_j (-1)^j C(r, j) C(n - r, w - j)`, exact.
pub fn krawtchouk(n: usize, w: usize, r: usize) -> Result<BigInt> {
    if w > n || r > n {
        return Err(Error::InvalidArgument(format!(
            "Krawtchouk indices w={w}, r={r} outside 0..={n}"
        )));
    }
    let (n, w, r) = (n as i64, w as i64, r as i64);
    Ok((0..=w).fold(BigInt::zero(), |acc, j| {
        let term = binomial(r, j) * binomial(n - r, w - j);
        if j % 2 == 0 {
            acc + term
        } else {
            acc - term
        }
    }))
}

/// `(n+1) x (n+1)` table of `K_w^{(n)}(r)`, row `w`, column `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrawtchoukTable {
    n: usize,
    values: Vec<BigInt>,
}

impl KrawtchoukTable {
    pub fn new(n: usize) -> Self {
        let values = (0..=n)
            .flat_map(|w| (0..=n).map(move |r| (w, r)))
            .map(|(w, r)| krawtchouk(n, w, r).expect("indices in range"))
            .collect();
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, w: usize, r: usize) -> &BigInt {
        &self.values[w * (self.n + 1) + r]
    }

    pub fn set(&mut self, w: usize, r: usize, value: BigInt) {
        self.values[w * (self.n + 1) + r] = value;
    }

    pub fn get_f64(&self, w: usize, r: usize) -> f64 {
        self.get(w, r).to_f64().unwrap_or(f64::NAN)
    }

    /// `sum_r C(n,r) K_w(r) K_w'(r) = 2^n C(n,w) delta_{w,w'}` for every pair.
    pub fn is_orthogonal(&self) -> bool {
        let n = self.n as i64;
        let two_n = BigInt::one() << self.n;
        (0..=self.n).all(|w| {
            (0..=self.n).all(|w2| {
                let lhs = (0..=self.n).fold(BigInt::zero(), |acc, r| {
                    acc + binomial(n, r as i64) * self.get(w, r) * self.get(w2, r)
                });
                let rhs = if w == w2 {
                    &two_n * binomial(n, w as i64)
                } else {
                    BigInt::zero()
                };
                lhs == rhs
            })
        })
    }
}

pub fn krawtchouk_orthogonality_check(n: usize) -> bool {
    KrawtchoukTable::new(n).is_orthogonal()
}

/// Indicator of the Hamming sphere `{x : |x| = w}` on `n` bits.
pub fn sphere_indicator(n: usize, w: usize) -> Vec<f64> {
    (0..1u64 << n)
        .map(|x| if x.count_ones() as usize == w { 1.0 } else { 0.0 })
        .collect()
}

/// `g_w^(S) = 2^{-n} K_w^{(n)}(|S|)`, filled radially.
pub fn sphere_spectrum(n: usize, w: usize) -> Result<WalshSpectrum> {
    if n > MAX_SPHERE_BITS {
        return Err(capacity("sphere spectrum bits", MAX_SPHERE_BITS, n));
    }
    if w > n {
        return Err(Error::InvalidArgument(format!("sphere weight {w} exceeds {n}")));
    }
    let scale = 1.0 / (1u64 << n) as f64;
    let radial: Vec<f64> = (0..=n)
        .map(|r| krawtchouk(n, w, r).map(|k| k.to_f64().unwrap_or(f64::NAN) * scale))
        .collect::<Result<_>>()?;
    let coeffs = (0..1u64 << n)
        .map(|s| Complex64::new(radial[s.count_ones() as usize], 0.0))
        .collect();
    Ok(WalshSpectrum { n_bits: n, coeffs })
}

/// `sum_{|S| <= d} |f^(S)|^2`.
pub fn low_degree_mass(spectrum: &WalshSpectrum, d: usize) -> f64 {
    spectrum
        .coeffs
        .iter()
        .enumerate()
        .filter(|(s, _)| s.count_ones() as usize <= d)
        .map(|(_, c)| c.norm_sqr())
        .sum()
}

/// Spectra of the permutation indicator and its row/column one-hot factors,
/// `1_Pi = R * C` pointwise.
#[derive(Debug, Clone)]
pub struct PermutationSpectrum {
    pub n: usize,
    pub indicator: WalshSpectrum,
    pub rows: WalshSpectrum,
    pub cols: WalshSpectrum,
}

fn line_one_hot(n: usize, x: u64, by_rows: bool) -> bool {
    (0..n).all(|a| {
        (0..n)
            .filter(|&b| {
                let (i, j) = if by_rows { (a, b) } else { (b, a) };
                (x >> (i * n + j)) & 1 == 1
            })
            .count()
            == 1
    })
}

/// Row one-hot indicator `R(x)`.
pub fn row_indicator(n: usize) -> Vec<f64> {
    (0..1u64 << (n * n))
        .map(|x| if line_one_hot(n, x, true) { 1.0 } else { 0.0 })
        .collect()
}

/// Column one-hot indicator `C(x)`.
pub fn column_indicator(n: usize) -> Vec<f64> {
    (0..1u64 << (n * n))
        .map(|x| if line_one_hot(n, x, false) { 1.0 } else { 0.0 })
        .collect()
}

/// Indicator of the `n!` permutation matrices.
pub fn permutation_indicator(n: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; 1 << (n * n)];
    for x in enumerate_feasible(n)? {
        v[x.0 as usize] = 1.0;
    }
    Ok(v)
}

pub fn permutation_spectrum(n: usize) -> Result<PermutationSpectrum> {
    if n > MAX_PERMUTATION_N {
        return Err(capacity("permutation spectrum size", MAX_PERMUTATION_N, n));
    }
    Ok(PermutationSpectrum {
        n,
        indicator: walsh_transform_real(&permutation_indicator(n)?)?,
        rows: walsh_transform_real(&row_indicator(n))?,
        cols: walsh_transform_real(&column_indicator(n))?,
    })
}

/// `2^{-n^2} prod_i (n - 2|S_i|)`, `S_i` the row-`i` slice of the mask.
pub fn row_factor_formula(n: usize, mask: u64) -> f64 {
    let row = (1u64 << n) - 1;
    let prod: f64 = (0..n)
        .map(|i| n as f64 - 2.0 * ((mask >> (i * n)) & row).count_ones() as f64)
        .product();
    prod / 2f64.powi((n * n) as i32)
}

/// `(a * b)(S) = sum_T a(T) b(S xor T)`, evaluated directly.
pub fn xor_convolution(a: &WalshSpectrum, b: &WalshSpectrum) -> Result<WalshSpectrum> {
    if a.n_bits != b.n_bits {
        return Err(Error::Dimension(format!("{} vs {} bits", a.n_bits, b.n_bits)));
    }
    let len = a.coeffs.len();
    let coeffs = (0..len)
        .map(|s| (0..len).map(|t| a.coeffs[t] * b.coeffs[s ^ t]).sum())
        .collect();
    Ok(WalshSpectrum { n_bits: a.n_bits, coeffs })
}

/// Eigenvalue of the X-mixer kernel on characters of degree `s`:
/// `e^{-i beta (N - 2s)}`.
pub fn mixer_walsh_multiplier(n_bits: usize, s: usize, beta: f64) -> Complex64 {
    Complex64::from_polar(1.0, -beta * (n_bits as f64 - 2.0 * s as f64))
}

/// `P_Pi = sum_x 1_Pi(x) p(x) = 2^N sum_S 1_Pi^(S) p^(S)` for `p = |a|^2`.
pub fn feasible_mass_via_plancherel<T: Real>(state: &FullState<T>, n: usize) -> Result<f64> {
    if n > MAX_PERMUTATION_N {
        return Err(capacity("Plancherel feasible mass size", MAX_PERMUTATION_N, n));
    }
    if state.n_qubits() != n * n {
        return Err(Error::Dimension(format!(
            "{}-qubit state is not an n={n} encoding",
            state.n_qubits()
        )));
    }
    let probs: Vec<f64> = state.probabilities().collect();
    let p_hat = walsh_transform_real(&probs)?;
    let pi_hat = walsh_transform_real(&permutation_indicator(n)?)?;
    let pairing: f64 = pi_hat
        .coeffs
        .iter()
        .zip(&p_hat.coeffs)
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    Ok(pairing * probs.len() as f64)
}

/// Evaluates the indicator of `Pi` at a bitstring via its spectrum.
pub fn synthesize(spectrum: &WalshSpectrum, x: Bitstring) -> Complex64 {
    spectrum
        .coeffs
        .iter()
        .enumerate()
        .map(|(s, c)| c * character(s as u64, x.0))
        .sum()
}
