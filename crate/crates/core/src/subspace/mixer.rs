//! Block-local XY mixer restricted to the one-excitation sector.
//!
//! Per block, `sum_{a<b} (X_a X_b + Y_a Y_b)` maps the one-excitation states
//! `|e_1>..|e_n>` among themselves. The sector matrix is assembled from the
//! Pauli actions and diagonalized numerically; its spectrum has two distinct
//! values, one on the uniform vector and one on its complement, so the block
//! exponential is `e^{-i b l_u} P_unif + e^{-i b l_perp} (I - P_unif)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy)]
enum Pauli {
    X,
    Y,
}

/// Applies a single-qubit Pauli at `qubit` to basis state `bits`.
fn apply_pauli(p: Pauli, qubit: usize, bits: u64) -> (Complex64, u64) {
    let set = (bits >> qubit) & 1 == 1;
    let flipped = bits ^ (1 << qubit);
    match p {
        Pauli::X => (Complex64::new(1.0, 0.0), flipped),
        // Y|0> = i|1>, Y|1> = -i|0>
        Pauli::Y => (Complex64::new(0.0, if set { -1.0 } else { 1.0 }), flipped),
    }
}

fn apply_pair(p: Pauli, a: usize, b: usize, bits: u64) -> (Complex64, u64) {
    let (c1, s1) = apply_pauli(p, b, bits);
    let (c2, s2) = apply_pauli(p, a, s1);
    (c1 * c2, s2)
}

/// The `n x n` matrix of the block XY Hamiltonian on `span{|e_j>}`, with the
/// `1/(n-1)` factor when `normalized`.
pub fn sector_matrix(n: usize, normalized: bool) -> DMatrix<f64> {
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for d in 0..n {
        let input = 1u64 << d;
        for a in 0..n {
            for b in (a + 1)..n {
                for p in [Pauli::X, Pauli::Y] {
                    let (coef, out) = apply_pair(p, a, b, input);
                    if out.count_ones() == 1 {
                        let c = out.trailing_zeros() as usize;
                        m[(c, d)] += coef;
                    }
                }
            }
        }
    }
    let scale = if normalized && n > 1 {
        1.0 / (n - 1) as f64
    } else {
        1.0
    };
    debug_assert!(m.iter().all(|z| z.im.abs() < 1e-15));
    m.map(|z| z.re * scale)
}

/// Cached two-eigenspace decomposition of the per-block sector Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMixer {
    pub n: usize,
    pub normalized: bool,
    /// Eigenvalue on the uniform vector.
    pub lambda_uniform: f64,
    /// Eigenvalue on the orthogonal complement of the uniform vector.
    pub lambda_perp: f64,
}

impl BlockMixer {
    pub fn new(n: usize, normalized: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        let h = sector_matrix(n, normalized);
        if n == 1 {
            return Ok(Self {
                n,
                normalized,
                lambda_uniform: h[(0, 0)],
                lambda_perp: h[(0, 0)],
            });
        }
        let eig = h.clone().symmetric_eigen();
        let uniform = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
        // The eigenvector with the largest uniform overlap carries l_u.
        let (u_idx, _) = eig
            .eigenvectors
            .column_iter()
            .map(|v| v.dot(&uniform).abs())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, o)| if o > best.1 { (i, o) } else { best });
        let lambda_uniform = eig.eigenvalues[u_idx];
        let others: Vec<f64> = (0..n)
            .filter(|&i| i != u_idx)
            .map(|i| eig.eigenvalues[i])
            .collect();
        let lambda_perp = others.iter().sum::<f64>() / others.len() as f64;
        let tol = 1e-10 * (1.0 + lambda_uniform.abs());
        if others.iter().any(|&l| (l - lambda_perp).abs() > tol) {
            return Err(Error::Precondition(format!(
                "sector matrix for n={n} does not have a two-level spectrum: {others:?}"
            )));
        }
        // The uniform vector must be an exact eigenvector.
        let hu = &h * &uniform;
        if (hu - &uniform * lambda_uniform).amax() > tol {
            return Err(Error::Precondition("uniform vector is not a sector eigenvector".into()));
        }
        Ok(Self {
            n,
            normalized,
            lambda_uniform,
            lambda_perp,
        })
    }

    /// `(e^{-i b l_u}, e^{-i b l_perp})`.
    pub fn phases(&self, beta: f64) -> (Complex64, Complex64) {
        (
            Complex64::from_polar(1.0, -beta * self.lambda_uniform),
            Complex64::from_polar(1.0, -beta * self.lambda_perp),
        )
    }

    /// The closed-form `n x n` block unitary.
    pub fn block_unitary(&self, beta: f64) -> DMatrix<Complex64> {
        let (pu, pp) = self.phases(beta);
        let n = self.n;
        let avg = (pu - pp) / n as f64;
        DMatrix::from_fn(n, n, |i, j| if i == j { pp + avg } else { avg })
    }

    /// Applies the block unitary to one fiber of `n` amplitudes in place.
    #[inline]
    pub(crate) fn apply_fiber(&self, fiber: &mut [Complex64], phases: (Complex64, Complex64)) {
        let (pu, pp) = phases;
        let mean = fiber.iter().sum::<Complex64>() / self.n as f64;
        let shift = (pu - pp) * mean;
        for a in fiber.iter_mut() {
            *a = pp * *a + shift;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_hermitian_evolution, max_abs_diff};

    #[test]
    fn sector_matrix_is_hopping_two() {
        let m = sector_matrix(4, false);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[(i, j)], if i == j { 0.0 } else { 2.0 });
            }
        }
    }

    #[test]
    fn eigenvalues() {
        for n in 2..=7 {
            let u = BlockMixer::new(n, false).unwrap();
            assert!((u.lambda_uniform - 2.0 * (n as f64 - 1.0)).abs() < 1e-10);
            assert!((u.lambda_perp + 2.0).abs() < 1e-10);
            let m = BlockMixer::new(n, true).unwrap();
            assert!((m.lambda_uniform - 2.0).abs() < 1e-10);
            assert!((m.lambda_perp + 2.0 / (n as f64 - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_expm() {
        for n in 2..=6 {
            for normalized in [false, true] {
                let mixer = BlockMixer::new(n, normalized).unwrap();
                let h = sector_matrix(n, normalized);
                for &beta in &[0.1, 0.7, 2.0] {
                    let diff = max_abs_diff(&mixer.block_unitary(beta), &expm_hermitian_evolution(&h, beta));
                    assert!(diff <= 1e-9, "n={n} beta={beta} diff={diff}");
                }
            }
        }
    }

    #[test]
    fn fiber_application_matches_matrix() {
        let mixer = BlockMixer::new(5, true).unwrap();
        let u = mixer.block_unitary(0.83);
        let v: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.2)).collect();
        let mut fiber = v.clone();
        mixer.apply_fiber(&mut fiber, mixer.phases(0.83));
        let expect = &u * nalgebra::DVector::from_vec(v);
        for (a, b) in fiber.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
