use proptest::prelude::*;
use rand::SeedableRng;
use rmlab_core::ensembles::{sample_c0_matrix, AtomKind, BlockEnsembleSpec};
use rmlab_core::limitlaw::solve_cubic_m;
use rmlab_core::linalg::complex_eigen;
use rmlab_core::spectral::{
    empirical_stieltjes, esd, kolmogorov_distance, levy_distance, radial_cdf, symmetrized_singular_measure, Cdf,
    StepCdf,
};
use rmlab_core::truncation::{truncate_atom, truncate_matrix, TruncationParams};
use rmlab_core::Complex64;

fn kind() -> impl Strategy<Value = AtomKind> {
    prop_oneof![
        Just(AtomKind::BernoulliReal),
        Just(AtomKind::GaussianReal),
        Just(AtomKind::GaussianComplex)
    ]
}

/// Atoms with `E[xi^2] = 0`, as the quaternionic mode requires.
fn rotation_invariant_kind() -> impl Strategy<Value = AtomKind> {
    let i = Complex64::new(0.0, 1.0);
    prop_oneof![
        Just(AtomKind::GaussianComplex),
        Just(AtomKind::Discrete {
            support: vec![i.powu(0), i, i.powu(2), i.powu(3)],
            probs: vec![0.25; 4],
        }),
    ]
}

fn spec() -> impl Strategy<Value = BlockEnsembleSpec> {
    prop_oneof![
        (kind(), 2..4usize).prop_map(|(k, d)| BlockEnsembleSpec::independent(d, k).unwrap()),
        rotation_invariant_kind().prop_map(|k| BlockEnsembleSpec::quaternionic(k).unwrap()),
        kind().prop_map(|k| BlockEnsembleSpec::correlated_demo(k).unwrap()),
    ]
}

fn step_cdf() -> impl Strategy<Value = StepCdf> {
    prop::collection::vec(-3.0..3.0f64, 1..25).prop_map(|s| StepCdf::from_samples(&s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_is_deterministic(spec in spec(), n in 1..12usize, seed in any::<u64>()) {
        let a = sample_c0_matrix(&spec, n, seed).unwrap();
        let b = sample_c0_matrix(&spec, n, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn quaternionic_spectrum_is_conjugation_closed(k in rotation_invariant_kind(), n in 1..25usize, seed in any::<u64>()) {
        let spec = BlockEnsembleSpec::quaternionic(k).unwrap();
        let x = sample_c0_matrix(&spec, n, seed).unwrap();
        let ev = complex_eigen(&x).unwrap().values;
        let conj: Vec<Complex64> = ev.iter().map(|z| z.conj()).collect();
        let mut used = vec![false; ev.len()];
        for z in &conj {
            let (k, dist) = ev
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, y)| (k, (z - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[k] = true;
            prop_assert!(dist <= 1e-8 * x.hs_norm());
        }
    }

    #[test]
    fn truncation_is_identity_on_bounded_atoms(d in 2..4usize, n in 1..10usize, delta in 0.01..0.5f64, seed in any::<u64>()) {
        let spec = BlockEnsembleSpec::independent(d, AtomKind::BernoulliReal).unwrap();
        let x = sample_c0_matrix(&spec, n, seed).unwrap();
        let p = TruncationParams::for_spec(&spec, delta, n);
        prop_assert_eq!(truncate_matrix(&x, &spec, &p).unwrap(), x);
    }

    #[test]
    fn hat_draws_stay_below_four_thresholds(k in kind(), d in 2..4usize, n in 2..2000usize, delta in 0.05..0.5f64, seed in any::<u64>()) {
        let spec = BlockEnsembleSpec::independent(d, k).unwrap();
        let p = TruncationParams::for_spec(&spec, delta, n);
        let atom = truncate_atom(&spec.atoms()[0], &p).unwrap();
        if atom.n0_proviso() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..2000 {
                prop_assert!(atom.sample(&mut rng).norm() <= 4.0 * (n as f64).powf(delta));
            }
        }
    }

    #[test]
    fn nu_is_symmetric(spec in spec(), n in 1..10usize, seed in any::<u64>(), zr in -2.0..2.0f64, zi in -2.0..2.0f64) {
        let x = sample_c0_matrix(&spec, n, seed).unwrap();
        let mu = symmetrized_singular_measure(&x, Complex64::new(zr, zi), (n as f64).sqrt()).unwrap();
        let mut pos: Vec<f64> = mu.positions().collect();
        pos.sort_by(f64::total_cmp);
        for i in 0..pos.len() {
            prop_assert_eq!(pos[i], -pos[pos.len() - 1 - i]);
        }
    }

    #[test]
    fn radial_cdf_is_monotone(spec in spec(), n in 1..12usize, seed in any::<u64>()) {
        let x = sample_c0_matrix(&spec, n, seed).unwrap();
        let f = radial_cdf(&esd(&x, (n as f64).sqrt()).unwrap());
        let mut prev = 0.0;
        for k in 0..=400 {
            let v = f.value(k as f64 * 0.01);
            prop_assert!(v >= prev && v <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn stieltjes_bounds(spec in spec(), n in 1..10usize, seed in any::<u64>(),
                        zr in -2.0..2.0f64, zi in -2.0..2.0f64, u in -4.0..4.0f64, v in 1e-3..3.0f64) {
        let x = sample_c0_matrix(&spec, n, seed).unwrap();
        let w = Complex64::new(u, v);
        let m = empirical_stieltjes(&x, Complex64::new(zr, zi), w, (n as f64).sqrt()).unwrap().m_hat;
        prop_assert!(m.norm() <= 1.0 / v * (1.0 + 1e-12));
        prop_assert!(m.im > 0.0);
    }

    #[test]
    fn cubic_root_is_certified(zr in -3.0..3.0f64, zi in -3.0..3.0f64, u in -5.0..5.0f64, v in 1e-3..5.0f64) {
        let w = Complex64::new(u, v);
        let sol = solve_cubic_m(Complex64::new(zr, zi), w).unwrap();
        prop_assert!(sol.residual <= 1e-12 * (1.0 + w.norm()).powi(3));
        prop_assert!(sol.m.im > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distances_are_symmetric_and_satisfy_the_triangle_inequality(f in step_cdf(), g in step_cdf(), h in step_cdf()) {
        for dist in [levy_distance as fn(&dyn Cdf, &dyn Cdf) -> f64, kolmogorov_distance] {
            let (fg, gf) = (dist(&f, &g), dist(&g, &f));
            prop_assert!((fg - gf).abs() <= 1e-12);
            prop_assert!(dist(&f, &f) <= 1e-12);
            prop_assert!(fg <= dist(&f, &h) + dist(&h, &g) + 1e-12);
        }
    }
}
