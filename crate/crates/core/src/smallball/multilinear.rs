use num_complex::Complex64;
use num_rational::Ratio;

use super::ball::max_ball_mass;
use super::{
    check_beta, outcome_count, CoefficientArray, FiniteLaw, Result, SmallBallError, SmallBallMethod, SmallBallResult,
    ENUMERATION_CAP,
};

/// `b_{i_2..} = sum_i a_{i i_2..} x_i` on a row-major slice.
fn contract(entries: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let stride = entries.len() / x.len().max(1);
    let mut out = vec![Complex64::new(0.0, 0.0); stride];
    for (i, &xi) in x.iter().enumerate() {
        for (o, &a) in out.iter_mut().zip(&entries[i * stride..(i + 1) * stride]) {
            *o += a * xi;
        }
    }
    out
}

/// All `support^n` vectors with their probabilities, in lexicographic order.
fn assignments(law: &FiniteLaw, n: usize) -> Vec<(Vec<Complex64>, f64)> {
    let k = law.len();
    let total = k.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        let x = digits.iter().map(|&d| law.support()[d]).collect();
        let p = digits.iter().map(|&d| law.probs()[d]).product();
        out.push((x, p));
        for pos in (0..n).rev() {
            digits[pos] += 1;
            if digits[pos] < k {
                break;
            }
            digits[pos] = 0;
        }
    }
    out
}

/// `sup_c P(|sum a_{i_1..i_D} x_{1 i_1}..x_{D i_D} + L(x_1..x_{D-1}) - c| <= beta)`
/// with independent vectors `x_k` of iid draws from `law` and a fixed
/// lower-degree form `L` (zero when absent).
pub fn multilinear_smallball(
    a: &CoefficientArray,
    law: &FiniteLaw,
    beta: f64,
    shift: Option<&CoefficientArray>,
) -> Result<SmallBallResult> {
    check_beta(beta)?;
    let (degree, n) = (a.degree(), a.n());
    if let Some(l) = shift {
        let expected = degree.saturating_sub(1);
        if l.degree() != expected || (expected > 0 && l.n() != n) {
            return Err(SmallBallError::ShiftDegree {
                expected,
                actual: l.degree(),
            });
        }
    }
    let total = outcome_count(law, n * degree).ok_or_else(|| SmallBallError::Cap {
        what: "multilinear enumeration",
        size: (law.len() as u128)
            .checked_pow((n * degree) as u32)
            .unwrap_or(u128::MAX),
        cap: ENUMERATION_CAP,
    })?;
    let table = assignments(law, n);
    let shift_entries: Vec<Complex64> = match shift {
        Some(l) => l.entries().to_vec(),
        None => vec![Complex64::new(0.0, 0.0); n.pow(degree.saturating_sub(1) as u32)],
    };
    let mut values: Vec<(Complex64, f64)> = Vec::with_capacity(total as usize);
    walk(a.entries().to_vec(), shift_entries, degree, 1.0, &table, &mut values);

    let method = SmallBallMethod::ExactEnumeration;
    if law.is_uniform() {
        let best = max_ball_mass(values.into_iter().map(|(v, _)| (v, 1u128)).collect(), beta);
        Ok(SmallBallResult {
            rho: best.mass as f64 / total as f64,
            rho_exact: Some(Ratio::new(best.mass, total)),
            center: best.center,
            method,
        })
    } else {
        let best = max_ball_mass(values, beta);
        Ok(SmallBallResult {
            rho: best.mass.min(1.0),
            rho_exact: None,
            center: best.center,
            method,
        })
    }
}

/// Depth-first over `x_1, x_2, ...`, contracting one index per level. The
/// shift has one index fewer and stops contracting one level earlier.
fn walk(
    tensor: Vec<Complex64>,
    shift: Vec<Complex64>,
    remaining: usize,
    weight: f64,
    table: &[(Vec<Complex64>, f64)],
    out: &mut Vec<(Complex64, f64)>,
) {
    if remaining == 0 {
        out.push((tensor[0] + shift[0], weight));
        return;
    }
    for (x, p) in table {
        let next_tensor = contract(&tensor, x);
        let next_shift = if remaining > 1 {
            contract(&shift, x)
        } else {
            shift.clone()
        };
        walk(next_tensor, next_shift, remaining - 1, weight * p, table, out);
    }
}
