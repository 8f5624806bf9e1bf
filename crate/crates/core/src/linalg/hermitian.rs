//! Hermitian eigenvalues: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit QL with Wilkinson shifts.

use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};

/// Relative Hermiticity tolerance on the input, scaled by its HS norm.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 40;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = check_hermitian(h)?;
    let mut work = h.as_slice().to_vec();
    let (mut diag, off, _) = tridiagonalize(&mut work, n, false);
    let mut sub: Vec<f64> = off.iter().map(|z| z.norm()).collect();
    sub.push(0.0);
    tridiagonal_ql(&mut diag, &mut sub, None)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

/// Eigenvalues (ascending) with orthonormal eigenvectors stored as columns.
pub fn hermitian_eigen_vectors(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), LinalgError> {
    let n = check_hermitian(h)?;
    let mut work = h.as_slice().to_vec();
    let (mut diag, off, q) = tridiagonalize(&mut work, n, true);
    let mut q = q.expect("requested accumulation");

    // Unit phases that turn the complex subdiagonal into |off|.
    let mut phase = Complex64::new(1.0, 0.0);
    for j in 0..n {
        if j > 0 {
            let e = off[j - 1];
            if e.norm() > 0.0 {
                phase *= e / e.norm();
            }
        }
        for r in 0..n {
            q[(r, j)] *= phase;
        }
    }

    let mut sub: Vec<f64> = off.iter().map(|z| z.norm()).collect();
    sub.push(0.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tridiagonal_ql(&mut diag, &mut sub, Some(&mut z))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| {
        let col = order[c];
        (0..n).map(|k| q[(r, k)] * z[k * n + col]).sum()
    });
    Ok((values, vectors))
}

fn check_hermitian(h: &ComplexMatrix) -> Result<usize, LinalgError> {
    let n = h.require_square()?;
    if !h.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let defect = h.hermitian_defect();
    let tolerance = HERMITIAN_TOLERANCE * h.hs_norm();
    if defect > tolerance {
        return Err(LinalgError::NotHermitian { defect, tolerance });
    }
    Ok(n)
}

/// Reduces the Hermitian matrix held row-major in `a` to tridiagonal form.
/// Returns the real diagonal, the complex subdiagonal and optionally the
/// accumulated unitary `Q` with `A = Q T Q*`.
fn tridiagonalize(a: &mut [Complex64], n: usize, want_q: bool) -> (Vec<f64>, Vec<Complex64>, Option<ComplexMatrix>) {
    let zero = Complex64::new(0.0, 0.0);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut q = want_q.then(|| ComplexMatrix::identity(n));
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let base = k + 1;
        for i in 0..m {
            v[i] = a[(base + i) * n + k];
        }
        let tail: f64 = v[1..m].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            off.push(v[0]);
            continue;
        }
        let xnorm = (v[0].norm_sqr() + tail).sqrt();
        let x0 = v[0];
        let unit = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -unit * xnorm;
        v[0] -= alpha;
        let vnorm2: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;

        // p = tau * B v over the trailing block.
        for i in 0..m {
            let row = &a[(base + i) * n + base..(base + i) * n + n];
            let s: Complex64 = row.iter().zip(&v[..m]).map(|(&b, &vj)| b * vj).sum();
            p[i] = s * tau;
        }
        let vp: Complex64 = v[..m].iter().zip(&p[..m]).map(|(vi, &pi)| vi.conj() * pi).sum();
        let kfac = vp * (0.5 * tau);
        for i in 0..m {
            p[i] -= kfac * v[i];
        }
        for i in 0..m {
            let vi = v[i];
            let wi = p[i];
            let row = &mut a[(base + i) * n + base..(base + i) * n + n];
            for ((bij, &vj), &wj) in row.iter_mut().zip(&v[..m]).zip(&p[..m]) {
                *bij -= vi * wj.conj() + wi * vj.conj();
            }
        }
        a[base * n + k] = alpha;
        a[k * n + base] = alpha.conj();
        for i in 1..m {
            a[(base + i) * n + k] = zero;
            a[k * n + base + i] = zero;
        }
        off.push(alpha);

        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let s: Complex64 = (0..m).map(|j| q[(r, base + j)] * v[j]).sum();
                let s = s * tau;
                for j in 0..m {
                    q[(r, base + j)] -= s * v[j].conj();
                }
            }
        }
    }
    let diag = (0..n).map(|i| a[i * n + i].re).collect();
    (diag, off, q)
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` couples rows
/// `i` and `i + 1`; `e[n - 1]` is scratch. Optional `z` (row-major n x n)
/// accumulates the rotations on its columns.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(LinalgError::NoConvergence { index: l, iterations });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut early_exit = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early_exit = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zf = z[k * n + i + 1];
                        let zi = z[k * n + i];
                        z[k * n + i + 1] = s * zi + c * zf;
                        z[k * n + i] = c * zi - s * zf;
                    }
                }
            }
            if early_exit {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
