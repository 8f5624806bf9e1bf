//! General complex eigenvalues: Householder reduction to upper Hessenberg
//! form, then shifted QR sweeps with Wilkinson shifts on the active window.

use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};

const DEFLATION_TOLERANCE: f64 = 1e-14;
const MAX_SWEEPS_PER_EIGENVALUE: usize = 40;

/// Eigenvalues of a square complex matrix plus a bound on neglected mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    /// Sum of subdiagonal magnitudes zeroed during deflation plus the
    /// roundoff floor `n * eps * ||M||_HS`.
    pub residual_bound: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn complex_eigen(m: &ComplexMatrix) -> Result<Spectrum, LinalgError> {
    let n = m.require_square()?;
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let norm = m.hs_norm();
    let mut h = m.clone();
    hessenberg_reduce(&mut h);
    let mut neglected = 0.0;
    let values = hessenberg_qr(&mut h, norm, &mut neglected)?;
    Ok(Spectrum {
        values,
        residual_bound: neglected + n as f64 * f64::EPSILON * norm,
    })
}

/// In-place unitary similarity to upper Hessenberg form.
pub(crate) fn hessenberg_reduce(h: &mut ComplexMatrix) {
    let n = h.rows();
    let zero = Complex64::new(0.0, 0.0);
    let mut v = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let base = k + 1;
        for i in 0..m {
            v[i] = h[(base + i, k)];
        }
        let tail: f64 = v[1..m].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (v[0].norm_sqr() + tail).sqrt();
        let unit = if v[0].norm() > 0.0 {
            v[0] / v[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -unit * xnorm;
        v[0] -= alpha;
        let tau = 2.0 / v[..m].iter().map(|z| z.norm_sqr()).sum::<f64>();

        // Left: rows base.., columns k.. ; H <- (I - tau v v*) H
        for j in k..n {
            let s: Complex64 = (0..m).map(|i| v[i].conj() * h[(base + i, j)]).sum::<Complex64>() * tau;
            for i in 0..m {
                let vi = v[i];
                h[(base + i, j)] -= vi * s;
            }
        }
        // Right: all rows, columns base.. ; H <- H (I - tau v v*)
        for r in 0..n {
            let row = &mut h.as_mut_slice()[r * n + base..r * n + n];
            let s: Complex64 = row.iter().zip(&v[..m]).map(|(&a, &b)| a * b).sum::<Complex64>() * tau;
            for (a, &b) in row.iter_mut().zip(&v[..m]) {
                *a -= s * b.conj();
            }
        }
        h[(base, k)] = alpha;
        for i in 1..m {
            h[(base + i, k)] = zero;
        }
    }
}

fn eig22(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let s = a.norm() + b.norm() + c.norm() + d.norm();
    if s == 0.0 {
        let zero = Complex64::new(0.0, 0.0);
        return (zero, zero);
    }
    let (a, b, c, d) = (a / s, b / s, c / s, d / s);
    let half_tr = (a + d) * 0.5;
    let disc = ((a - half_tr) * (a - half_tr) + b * c).sqrt();
    ((half_tr + disc) * s, (half_tr - disc) * s)
}

fn hessenberg_qr(h: &mut ComplexMatrix, norm: f64, neglected: &mut f64) -> Result<Vec<Complex64>, LinalgError> {
    let n = h.rows();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(values);
    }
    let mut hi = n - 1;
    let mut iterations = 0usize;
    let mut rotations: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    loop {
        // Locate the start of the unreduced block ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if scale == 0.0 {
                scale = norm;
            }
            if sub <= DEFLATION_TOLERANCE * scale {
                *neglected += sub;
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            values[hi] = h[(hi, hi)];
            iterations = 0;
            if hi == 0 {
                break;
            }
            hi -= 1;
            continue;
        }
        if lo + 1 == hi {
            let (l1, l2) = eig22(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            values[lo] = l1;
            values[hi] = l2;
            iterations = 0;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            continue;
        }

        iterations += 1;
        if iterations > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(LinalgError::NoConvergence { index: hi, iterations });
        }

        let shift = if iterations % 10 == 0 {
            // exceptional shift
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            let (l1, l2) = eig22(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
            let d = h[(hi, hi)];
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        qr_sweep(h, lo, hi, shift, &mut rotations);
    }
    Ok(values)
}

/// One explicitly shifted QR step `H - sI = QR, H <- RQ + sI` restricted to
/// the window `lo..=hi`, using Givens rotations.
fn qr_sweep(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64, rotations: &mut Vec<(f64, Complex64)>) {
    rotations.clear();
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = a.norm().hypot(b.norm());
        let (c, s) = if r == 0.0 {
            (1.0, Complex64::new(0.0, 0.0))
        } else if a.norm() == 0.0 {
            (0.0, Complex64::new(1.0, 0.0))
        } else {
            let c = a.norm() / r;
            (c, (b / a).conj() * c)
        };
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        let last = (k + 1).min(hi);
        for i in lo..=last {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + s.conj() * y;
            h[(i, k + 1)] = -s * x + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}
