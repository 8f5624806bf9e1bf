//! Dense complex linear algebra.
//!
//! All solvers are in-tree: Hermitian eigenvalues by tridiagonal QL,
//! general eigenvalues by Hessenberg QR, and singular values read off the
//! spectrum of the 2-block Hermitization `[[0, M], [M*, 0]]`.

mod hermitian;
mod lu;
mod matrix;
mod schur;

use num_complex::Complex64;
use thiserror::Error;

pub use hermitian::{hermitian_eigen, hermitian_eigen_vectors, HERMITIAN_TOLERANCE};
pub use lu::{determinant, inverse, Lu};
pub use matrix::ComplexMatrix;
pub use schur::{complex_eigen, Spectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: defect {defect:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { defect: f64, tolerance: f64 },
    #[error("eigenvalue iteration did not converge at index {index} after {iterations} sweeps")]
    NoConvergence { index: usize, iterations: usize },
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("rows have different lengths")]
    RaggedRows,
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is singular (zero pivot at column {pivot})")]
    Singular { pivot: usize },
}

/// Singular values, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&s| s > threshold).count()
    }
}

/// `[[0, M], [M*, 0]]`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    let (r, c) = m.shape();
    ComplexMatrix::from_fn(r + c, r + c, |i, j| match (i < r, j < r) {
        (true, false) => m[(i, j - r)],
        (false, true) => m[(j, i - r)].conj(),
        _ => Complex64::new(0.0, 0.0),
    })
}

/// Singular values as the `min(rows, cols)` largest eigenvalues of the
/// Hermitization, clamped at zero.
pub fn singular_values(m: &ComplexMatrix) -> Result<SingularSpectrum, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let k = m.rows().min(m.cols());
    if k == 0 {
        return Ok(SingularSpectrum { values: Vec::new() });
    }
    let eig = hermitian_eigen(&hermitize(m))?;
    let values = eig.iter().rev().take(k).map(|&s| s.max(0.0)).collect();
    Ok(SingularSpectrum { values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub hs: f64,
    pub spectral: f64,
}

pub fn norms(m: &ComplexMatrix) -> Result<Norms, LinalgError> {
    let hs = m.hs_norm();
    if hs == 0.0 {
        return Ok(Norms { hs, spectral: 0.0 });
    }
    let spectral = singular_values(m)?.largest();
    Ok(Norms { hs, spectral })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::ComplexMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    pub fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let a = random_matrix(n, n, seed);
        let h = a.add(&a.adjoint()).unwrap();
        // exact symmetry
        ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(h[(i, i)].re, 0.0)
            } else if i < j {
                h[(i, j)]
            } else {
                h[(j, i)].conj()
            }
        })
    }

    pub fn sort_complex(v: &mut [Complex64]) {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::{random_matrix, sort_complex};
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Characteristic polynomial coefficients (monic, highest degree first)
    /// by Faddeev–LeVerrier.
    fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
        let n = m.rows();
        let mut coeffs = vec![c(1.0, 0.0)];
        let mut mk = ComplexMatrix::zeros(n, n);
        for k in 1..=n {
            let shifted = mk.add(&ComplexMatrix::identity(n).scale(coeffs[k - 1])).unwrap();
            mk = m.matmul(&shifted).unwrap();
            coeffs.push(-mk.trace() / k as f64);
        }
        coeffs
    }

    /// Durand–Kerner iteration on a monic polynomial.
    fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = coeffs.len() - 1;
        let eval = |z: Complex64| coeffs.iter().fold(c(0.0, 0.0), |acc, &a| acc * z + a);
        let mut roots: Vec<Complex64> = (0..n).map(|k| c(0.4, 0.9).powu(k as u32)).collect();
        for _ in 0..2000 {
            let prev = roots.clone();
            for i in 0..n {
                let denom: Complex64 = (0..n).filter(|&j| j != i).map(|j| roots[i] - roots[j]).product();
                roots[i] = roots[i] - eval(roots[i]) / denom;
            }
            if roots.iter().zip(&prev).all(|(a, b)| (a - b).norm() < 1e-15) {
                break;
            }
        }
        roots
    }

    #[test]
    fn complex_eigen_matches_characteristic_polynomial_roots() {
        for n in 1..=4usize {
            for seed in 0..10u64 {
                let m = random_matrix(n, n, 1000 + 10 * n as u64 + seed);
                let mut got = complex_eigen(&m).unwrap().values;
                let mut want = poly_roots(&char_poly(&m));
                sort_complex(&mut got);
                sort_complex(&mut want);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-8, "n={n} seed={seed}: {got:?} vs {want:?}");
                }
            }
        }
    }

    #[test]
    fn singular_values_examples() {
        let s = singular_values(&ComplexMatrix::identity(3)).unwrap();
        for v in &s.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let d = ComplexMatrix::from_diagonal(&[c(3.0, 0.0), c(0.0, -4.0)]);
        let s = singular_values(&d).unwrap();
        assert!((s.values[0] - 4.0).abs() < 1e-14 && (s.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_sum_of_squares_is_hs_norm() {
        for seed in 0..5 {
            let m = random_matrix(4, 4, seed);
            let s = singular_values(&m).unwrap();
            let sum: f64 = s.values.iter().map(|x| x * x).sum();
            // oracle: direct entry sum
            let direct: f64 = m.as_slice().iter().map(|z| z.re * z.re + z.im * z.im).sum();
            assert!((sum - direct).abs() < 1e-10 * direct.max(1.0));
        }
        let rect = random_matrix(3, 5, 9);
        let s = singular_values(&rect).unwrap();
        assert_eq!(s.values.len(), 3);
    }

    #[test]
    fn adjoint_has_same_singular_values() {
        let m = random_matrix(6, 6, 77);
        let a = singular_values(&m).unwrap();
        let b = singular_values(&m.adjoint()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn hermitization_eigenvalues_pair_up() {
        let m = random_matrix(5, 5, 12);
        let norm = norms(&m).unwrap().spectral;
        let eig = hermitian_eigen(&hermitize(&m)).unwrap();
        let n = eig.len();
        for i in 0..n / 2 {
            assert!((eig[i] + eig[n - 1 - i]).abs() <= 1e-10 * norm);
        }
    }

    #[test]
    fn norms_examples() {
        let z = norms(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!((z.hs, z.spectral), (0.0, 0.0));

        let u = [c(0.6, 0.0), c(0.0, 0.8)];
        let v = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let r1 = ComplexMatrix::from_fn(2, 3, |i, j| u[i] * v[j]);
        let nr = norms(&r1).unwrap();
        assert!((nr.hs - 1.0).abs() < 1e-14 && (nr.spectral - 1.0).abs() < 1e-12);

        let m = random_matrix(5, 5, 5);
        let nm = norms(&m).unwrap();
        assert!(nm.spectral <= nm.hs + 1e-12);
        assert!(nm.hs <= 5f64.sqrt() * nm.spectral + 1e-12);
    }
}
