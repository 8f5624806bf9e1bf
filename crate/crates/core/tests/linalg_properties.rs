use proptest::prelude::*;
use rmlab_core::linalg::{complex_eigen, hermitian_eigen, hermitize, singular_values};
use rmlab_core::{Complex64, ComplexMatrix};

fn matrix(max_n: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
            ComplexMatrix::from_row_major(n, n, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap()
        })
    })
}

fn hermitian(max_n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(max_n).prop_map(|a| {
        let n = a.rows();
        ComplexMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => Complex64::new(2.0 * a[(i, i)].re, 0.0),
            std::cmp::Ordering::Less => a[(i, j)] + a[(j, i)].conj(),
            std::cmp::Ordering::Greater => (a[(j, i)] + a[(i, j)].conj()).conj(),
        })
    })
}

/// Coefficients of `det(lambda I - M)` by Faddeev-LeVerrier, highest first.
fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
    let n = m.rows();
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut k_mat = ComplexMatrix::identity(n);
    for k in 1..=n {
        let am = m.matmul(&k_mat).unwrap();
        let c = -am.trace() / k as f64;
        coeffs.push(c);
        k_mat = am.add(&ComplexMatrix::identity(n).scale(c)).unwrap();
    }
    coeffs
}

fn horner(p: &[Complex64], x: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Durand-Kerner iteration followed by Newton polishing.
fn poly_roots(p: &[Complex64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let prev = z.clone();
        for i in 0..n {
            let denom: Complex64 = (0..n).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
            let step = horner(p, z[i]) / denom;
            z[i] -= step;
        }
        if z.iter().zip(&prev).all(|(a, b)| (a - b).norm() < 1e-15) {
            break;
        }
    }
    let dp: Vec<Complex64> = p[..n].iter().enumerate().map(|(i, &c)| c * (n - i) as f64).collect();
    for r in &mut z {
        for _ in 0..5 {
            let d = horner(&dp, *r);
            if d.norm() > 0.0 {
                *r -= horner(p, *r) / d;
            }
        }
    }
    z
}

/// Largest distance under greedy nearest matching of two multisets.
fn match_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_eigenvalues_sorted_and_sum_to_trace(h in hermitian(12)) {
        let ev = hermitian_eigen(&h).unwrap();
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = ev.iter().sum();
        prop_assert!((sum - h.trace().re).abs() <= 1e-10 * (1.0 + h.hs_norm()) * h.rows() as f64);
    }

    #[test]
    fn adjoint_has_the_same_singular_values(m in matrix(10)) {
        let a = singular_values(&m).unwrap().values;
        let b = singular_values(&m.adjoint()).unwrap().values;
        let scale = 1.0 + m.hs_norm();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn hermitization_spectrum_pairs(m in matrix(10)) {
        let ev = hermitian_eigen(&hermitize(&m)).unwrap();
        let len = ev.len();
        let scale = 1.0 + m.hs_norm();
        for i in 0..len / 2 {
            prop_assert!((ev[i] + ev[len - 1 - i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial_roots(m in matrix(4)) {
        let ev = complex_eigen(&m).unwrap().values;
        let roots = poly_roots(&char_poly(&m));
        prop_assert!(match_distance(&ev, &roots) <= 1e-8, "{ev:?} vs {roots:?}");
    }
}
