//! Small dense linear-algebra helpers.
//!
//! `expm` is the scaling-and-squaring reference used to check closed-form
//! mixer unitaries; it never shares code with the eigen-decomposition path.

use nalgebra::DMatrix;
use num_complex::Complex64;

const TAYLOR_TERMS: usize = 24;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by scaling `A` to 1-norm below 1/2, a truncated Taylor series,
/// and repeated squaring.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert!(a.is_square(), "expm requires a square matrix");
    let dim = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.map(|z| z / f64::powi(2.0, squarings as i32));

    let mut result = DMatrix::<Complex64>::identity(dim, dim);
    let mut term = DMatrix::<Complex64>::identity(dim, dim);
    for k in 1..=TAYLOR_TERMS {
        term = (&term * &scaled).map(|z| z / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(-i t H)` for a real symmetric `H`, via [`expm`].
pub fn expm_hermitian_evolution(h: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
    expm(&h.map(|x| Complex64::new(0.0, -t * x)))
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-2.0, 0.5),
        ]));
        let e = expm(&a);
        assert!((e[(0, 0)] - Complex64::new(1.0, 0.0).exp()).norm() < 1e-13);
        assert!((e[(1, 1)] - Complex64::new(-2.0, 0.5).exp()).norm() < 1e-13);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn pauli_x_rotation() {
        // exp(-i b X) = cos b I - i sin b X
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        for &b in &[0.1, 1.3, 7.9] {
            let u = expm_hermitian_evolution(&x, b);
            assert!((u[(0, 0)] - Complex64::new(b.cos(), 0.0)).norm() < 1e-12);
            assert!((u[(0, 1)] - Complex64::new(0.0, -b.sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn min_eigenvalue_known() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-12);
    }
}
