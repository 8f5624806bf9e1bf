//! Truncate-center-rescale operators on atoms and block matrices.
//!
//! For threshold `c = n^delta`:
//!   tilde(xi) = xi 1{|xi| <= c} - E[xi 1{|xi| <= c}]
//!   hat(xi)   = tilde(xi) / sqrt(d Var(tilde(xi)))
//! Moments of the truncated law are computed exactly (finite support) or
//! in closed form (Gaussians); nothing here is estimated by sampling except
//! the optional Monte Carlo cross-moment check.

use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf::erf;
use thiserror::Error;

use crate::ensembles::{AtomDistribution, AtomKind, BlockEnsembleSpec, DependenceMode, EnsembleError};
use crate::linalg::ComplexMatrix;
use crate::rng::{tag, StreamFactory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TruncationError {
    #[error("invalid truncation parameters: {0}")]
    Params(String),
    #[error("degenerate truncation: threshold {threshold} leaves variance {variance}")]
    Degenerate { threshold: f64, variance: f64 },
    #[error("matrix shape {actual:?} does not match a d = {d} block ensemble")]
    Shape { d: usize, actual: (usize, usize) },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    pub delta: f64,
    pub eta: f64,
    /// `max_{s,t} E|xi_st|^(2 + eta)`.
    pub m2eta: f64,
    pub n: usize,
}

impl TruncationParams {
    /// Parameters whose moment constant is read off the ensemble.
    pub fn for_spec(spec: &BlockEnsembleSpec, delta: f64, n: usize) -> Self {
        Self {
            delta,
            eta: spec.moment_eta(),
            m2eta: spec.m2eta(),
            n,
        }
    }

    pub fn threshold(&self) -> f64 {
        (self.n as f64).powf(self.delta)
    }

    /// `0 < delta < 1/100`, the range the cubic-relation estimate assumes.
    pub fn suits_cubic_relation(&self) -> bool {
        self.delta > 0.0 && self.delta < 0.01
    }

    pub fn validate(&self, d: usize) -> Result<(), TruncationError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(TruncationError::Params(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(TruncationError::Params(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.n == 0 {
            return Err(TruncationError::Params("n must be at least 1".into()));
        }
        let floor = (1.0 / d as f64).powf((2.0 + self.eta) / 2.0);
        if !self.m2eta.is_finite() || self.m2eta < floor * (1.0 - 1e-12) {
            return Err(TruncationError::Params(format!(
                "m_(2+eta) = {} is below the moment floor {floor}",
                self.m2eta
            )));
        }
        Ok(())
    }

    pub fn variance_bound(&self) -> f64 {
        2.0 * self.m2eta / (self.n as f64).powf(self.delta * self.eta)
    }

    pub fn correlation_bound(&self) -> f64 {
        10.0 * self.m2eta.sqrt() / (self.n as f64).powf(self.delta * self.eta / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedAtom {
    pub source: AtomDistribution,
    pub threshold: f64,
    /// `E[xi 1{|xi| <= c}]`.
    pub center: Complex64,
    /// `Var(tilde(xi))`.
    pub variance_tilde: f64,
    /// `1 / sqrt(d Var(tilde(xi)))`.
    pub scale_hat: f64,
    /// `E[tilde(xi)^2]` without conjugation.
    pseudo_variance_tilde: Complex64,
}

impl TruncatedAtom {
    /// Maps a raw draw to its hat value.
    #[inline]
    pub fn apply(&self, x: Complex64) -> Complex64 {
        let kept = if x.norm() <= self.threshold {
            x
        } else {
            Complex64::new(0.0, 0.0)
        };
        (kept - self.center) * self.scale_hat
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.apply(self.source.sample(rng))
    }

    /// Almost-sure bound `(c + |center|) / sqrt(d Var(tilde))` on `|hat(xi)|`.
    pub fn hat_bound(&self) -> f64 {
        (self.threshold + self.center.norm()) * self.scale_hat
    }

    /// `Var(tilde(xi)) > 1/(2d)`: the large-n proviso under which the hat
    /// atom is bounded by `4 n^delta`.
    pub fn n0_proviso(&self) -> bool {
        self.variance_tilde > 0.5 / self.source.d() as f64
    }

    pub fn variance_gap(&self) -> f64 {
        (self.source.variance() - self.variance_tilde).abs()
    }

    /// `E[hat(xi)^2]` without conjugation.
    pub fn pseudo_variance_hat(&self) -> Complex64 {
        self.pseudo_variance_tilde * (self.scale_hat * self.scale_hat)
    }
}

/// Exact truncated moments of an atom at threshold `n^delta`.
pub fn truncate_atom(atom: &AtomDistribution, p: &TruncationParams) -> Result<TruncatedAtom, TruncationError> {
    p.validate(atom.d())?;
    let c = p.threshold();
    let var = atom.variance();
    let (center, kept_second, kept_pseudo) = match atom.kind() {
        AtomKind::BernoulliReal | AtomKind::Discrete { .. } => {
            let support = atom.finite_support().expect("finite atom");
            if support.iter().all(|(x, _)| x.norm() <= c) {
                return Ok(untouched(atom, c));
            }
            let mut center = Complex64::new(0.0, 0.0);
            let mut second = 0.0;
            let mut pseudo = Complex64::new(0.0, 0.0);
            for (x, q) in support {
                if x.norm() <= c {
                    center += x * q;
                    second += q * x.norm_sqr();
                    pseudo += x * x * q;
                }
            }
            (center, second, pseudo)
        }
        AtomKind::GaussianReal => {
            let a = c / var.sqrt();
            let phi = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let second = var * (erf(a / std::f64::consts::SQRT_2) - 2.0 * a * phi);
            (Complex64::new(0.0, 0.0), second, Complex64::new(second, 0.0))
        }
        AtomKind::GaussianComplex => {
            let dc2 = c * c / var;
            let second = var * (1.0 - (-dc2).exp() * (1.0 + dc2));
            (Complex64::new(0.0, 0.0), second, Complex64::new(0.0, 0.0))
        }
    };
    let variance_tilde = kept_second - center.norm_sqr();
    if !(variance_tilde > 0.0) {
        return Err(TruncationError::Degenerate {
            threshold: c,
            variance: variance_tilde,
        });
    }
    Ok(TruncatedAtom {
        source: atom.clone(),
        threshold: c,
        center,
        variance_tilde,
        scale_hat: 1.0 / (atom.d() as f64 * variance_tilde).sqrt(),
        pseudo_variance_tilde: kept_pseudo - center * center,
    })
}

/// Nothing is cut: the hat map is the identity.
fn untouched(atom: &AtomDistribution, threshold: f64) -> TruncatedAtom {
    TruncatedAtom {
        source: atom.clone(),
        threshold,
        center: Complex64::new(0.0, 0.0),
        variance_tilde: atom.variance(),
        scale_hat: 1.0,
        pseudo_variance_tilde: atom.pseudo_variance(),
    }
}

/// Index pairs `(p, q)`, `p < q`, of grid cells that the ensemble declares
/// uncorrelated. In the correlated demo the three cells sharing one variable
/// are excluded.
pub fn uncorrelated_pairs(spec: &BlockEnsembleSpec) -> Vec<(usize, usize)> {
    let cells = spec.d() * spec.d();
    let shared = |p: usize| spec.mode() == DependenceMode::CorrelatedDemo && p < 3;
    let mut out = Vec::new();
    for p in 0..cells {
        for q in p + 1..cells {
            if !(shared(p) && shared(q)) {
                out.push((p, q));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub threshold: f64,
    /// `max_{s,t} |1/d - Var(tilde(xi_st))|`.
    pub var_gap: f64,
    pub var_bound: f64,
    pub var_pass: bool,
    /// Exact `max |E[hat(xi_p) conj(hat(xi_q))]|` over uncorrelated pairs.
    pub corr_gap: f64,
    /// Monte Carlo estimate of the same maximum, when requested.
    pub corr_gap_empirical: Option<f64>,
    pub corr_bound: f64,
    pub corr_pass: bool,
    pub n0_proviso: bool,
    pub max_hat_bound: f64,
}

/// Exact cross moment `E[hat(xi_p) conj(hat(xi_q))]` for the built-in
/// dependence modes.
fn exact_cross_moment(spec: &BlockEnsembleSpec, atoms: &[TruncatedAtom], p: usize, q: usize) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    match spec.mode() {
        DependenceMode::Independent | DependenceMode::CorrelatedDemo => zero,
        DependenceMode::Quaternionic => match (p, q) {
            // (a, conj a) and (b, -conj b) pairs
            (0, 3) => atoms[0].pseudo_variance_hat(),
            (1, 2) => -atoms[1].pseudo_variance_hat(),
            _ => zero,
        },
    }
}

pub fn truncation_bound_report(
    spec: &BlockEnsembleSpec,
    p: &TruncationParams,
    monte_carlo: Option<(usize, u64)>,
) -> Result<TruncationReport, TruncationError> {
    spec.validate()?;
    let atoms: Vec<TruncatedAtom> = spec
        .atoms()
        .iter()
        .map(|a| truncate_atom(a, p))
        .collect::<Result<_, _>>()?;
    let var_gap = atoms.iter().map(TruncatedAtom::variance_gap).fold(0.0, f64::max);
    let pairs = uncorrelated_pairs(spec);
    let corr_gap = pairs
        .iter()
        .map(|&(a, b)| exact_cross_moment(spec, &atoms, a, b).norm())
        .fold(0.0, f64::max);
    let corr_gap_empirical =
        monte_carlo.map(|(trials, seed)| empirical_cross_moment(spec, &atoms, &pairs, trials, seed));
    let var_bound = p.variance_bound();
    let corr_bound = p.correlation_bound();
    let observed = corr_gap.max(corr_gap_empirical.unwrap_or(0.0));
    Ok(TruncationReport {
        threshold: p.threshold(),
        var_gap,
        var_bound,
        var_pass: var_gap <= var_bound,
        corr_gap,
        corr_gap_empirical,
        corr_bound,
        corr_pass: observed <= corr_bound,
        n0_proviso: atoms.iter().all(TruncatedAtom::n0_proviso),
        max_hat_bound: atoms.iter().map(TruncatedAtom::hat_bound).fold(0.0, f64::max),
    })
}

fn empirical_cross_moment(
    spec: &BlockEnsembleSpec,
    atoms: &[TruncatedAtom],
    pairs: &[(usize, usize)],
    trials: usize,
    seed: u64,
) -> f64 {
    let factory = StreamFactory::new(seed);
    let mut sums = vec![Complex64::new(0.0, 0.0); pairs.len()];
    let chunk = 4096;
    let trials = trials.max(1);
    let mut done = 0;
    let mut index = 0u64;
    let mut hat = vec![Complex64::new(0.0, 0.0); atoms.len()];
    while done < trials {
        let mut rng = factory.stream(&[tag::ATOM_DRAWS, index]);
        let count = chunk.min(trials - done);
        for _ in 0..count {
            let tuple = spec.sample_tuple(&mut rng);
            for (h, (x, atom)) in hat.iter_mut().zip(tuple.iter().zip(atoms)) {
                *h = atom.apply(*x);
            }
            for (s, &(a, b)) in sums.iter_mut().zip(pairs) {
                *s += hat[a] * hat[b].conj();
            }
        }
        done += count;
        index += 1;
    }
    sums.iter().map(|s| s.norm() / trials as f64).fold(0.0, f64::max)
}

/// Applies the per-block hat map entrywise to a sample of `spec`.
pub fn truncate_matrix(
    x: &ComplexMatrix,
    spec: &BlockEnsembleSpec,
    p: &TruncationParams,
) -> Result<ComplexMatrix, TruncationError> {
    let d = spec.d();
    if !x.is_square() || x.rows() % d != 0 || x.rows() == 0 {
        return Err(TruncationError::Shape { d, actual: x.shape() });
    }
    let n = x.rows() / d;
    let atoms: Vec<TruncatedAtom> = spec
        .atoms()
        .iter()
        .map(|a| truncate_atom(a, p))
        .collect::<Result<_, _>>()?;
    Ok(ComplexMatrix::from_fn(d * n, d * n, |r, c| {
        let (s, t) = (r / n, c / n);
        atoms[s * d + t].apply(x[(r, c)])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_c0_matrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(delta: f64, eta: f64, m2eta: f64, n: usize) -> TruncationParams {
        TruncationParams { delta, eta, m2eta, n }
    }

    fn heavy_atom() -> AtomDistribution {
        let s = 1.0 / 2f64.sqrt();
        AtomDistribution::discrete(
            vec![c(s, 0.0), c(-s, 0.0), c(10.0 * s, 0.0), c(-10.0 * s, 0.0)],
            vec![0.45, 0.45, 0.05, 0.05],
            2,
        )
        .unwrap()
    }

    #[test]
    fn bounded_atoms_are_untouched() {
        let atom = AtomDistribution::bernoulli(2);
        let p = params(0.1, 1.0, atom.abs_moment(3.0), 100);
        let t = truncate_atom(&atom, &p).unwrap();
        assert_eq!(t.center, c(0.0, 0.0));
        assert!((t.variance_tilde - 0.5).abs() < 1e-15);
        assert!((t.scale_hat - 1.0).abs() < 1e-15);
        assert_eq!(t.variance_gap(), 0.0);
    }

    #[test]
    fn heavy_atom_truncated_moments_by_enumeration() {
        let atom = heavy_atom();
        let support = atom.finite_support().unwrap();
        let big = support.iter().map(|(x, _)| x.norm()).fold(0.0, f64::max);
        let small = support.iter().map(|(x, _)| x.norm()).fold(f64::INFINITY, f64::min);
        // threshold strictly between the two radii: only the inner pair survives
        let threshold = 0.5 * (small + big);
        let n = 10_000usize;
        let delta = threshold.ln() / (n as f64).ln();
        let p = params(delta, 1.0, atom.abs_moment(3.0), n);
        let t = truncate_atom(&atom, &p).unwrap();
        let expected: f64 = support
            .iter()
            .filter(|(x, _)| x.norm() <= threshold)
            .map(|(x, q)| q * x.norm_sqr())
            .sum();
        assert!((t.variance_tilde - expected).abs() < 1e-15);
        assert!((expected - 0.9 * small * small).abs() < 1e-15);
        assert!(!t.n0_proviso());
    }

    #[test]
    fn gaussian_limit_recovers_full_variance() {
        for atom in [
            AtomDistribution::gaussian_real(2),
            AtomDistribution::gaussian_complex(2),
        ] {
            let p = params(1.0, 1.0, atom.abs_moment(3.0), 1_000_000);
            let t = truncate_atom(&atom, &p).unwrap();
            assert!((t.variance_tilde - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_truncated_variance_matches_quadrature() {
        // Independent Simpson oracle for E[X^2 1{|X| <= c}] with X ~ N(0, 1/2).
        let atom = AtomDistribution::gaussian_real(2);
        let p = params(0.1, 1.0, atom.abs_moment(3.0), 50);
        let c_ = p.threshold();
        let sigma2: f64 = 0.5;
        let f = |x: f64| x * x * (-x * x / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt();
        let m = 20_000;
        let h = 2.0 * c_ / m as f64;
        let mut acc = f(-c_) + f(c_);
        for k in 1..m {
            acc += f(-c_ + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let simpson = acc * h / 3.0;
        let t = truncate_atom(&atom, &p).unwrap();
        assert!((t.variance_tilde - simpson).abs() < 1e-10);
    }

    #[test]
    fn degenerate_and_invalid_parameters() {
        // only the atom at zero survives
        let atom =
            AtomDistribution::discrete(vec![c(0.0, 0.0), c(3.0, 0.0), c(-3.0, 0.0)], vec![0.9, 0.05, 0.05], 1).unwrap();
        let p = params(1e-9, 1.0, atom.abs_moment(3.0), 2);
        assert!(matches!(
            truncate_atom(&atom, &p),
            Err(TruncationError::Degenerate { .. })
        ));
        let p = params(-0.1, 1.0, 1.0, 10);
        assert!(matches!(truncate_atom(&atom, &p), Err(TruncationError::Params(_))));
        let p = params(0.1, 1.0, 1e-6, 10);
        assert!(matches!(truncate_atom(&atom, &p), Err(TruncationError::Params(_))));
    }

    #[test]
    fn hat_atoms_have_exact_normalization_in_law() {
        let factory = StreamFactory::new(17);
        let atoms = [
            AtomDistribution::gaussian_real(2),
            AtomDistribution::gaussian_complex(2),
            heavy_atom(),
        ];
        for (k, atom) in atoms.iter().enumerate() {
            let p = params(0.1, 1.0, atom.abs_moment(3.0), 200);
            let t = truncate_atom(atom, &p).unwrap();
            let mut rng = factory.stream(&[k as u64]);
            let draws = 1_000_000;
            let mut mean = c(0.0, 0.0);
            let mut second = 0.0;
            let mut max_abs = 0.0f64;
            for _ in 0..draws {
                let h = t.sample(&mut rng);
                mean += h;
                second += h.norm_sqr();
                max_abs = max_abs.max(h.norm());
            }
            mean /= draws as f64;
            let var = second / draws as f64 - mean.norm_sqr();
            assert!(mean.norm() <= 0.004 * 0.5f64.sqrt(), "{k}: mean {mean}");
            assert!((var - 0.5).abs() <= 0.01 * 0.5, "{k}: var {var}");
            assert!(max_abs <= 4.0 * t.threshold, "{k}");
            assert!(max_abs <= t.hat_bound() + 1e-12);
        }
    }

    #[test]
    fn bernoulli_report_has_zero_gap() {
        let spec = BlockEnsembleSpec::independent(2, AtomKind::BernoulliReal).unwrap();
        let p = TruncationParams::for_spec(&spec, 0.1, 1000);
        let rep = truncation_bound_report(&spec, &p, None).unwrap();
        assert_eq!(rep.var_gap, 0.0);
        assert!(rep.var_pass && rep.corr_pass && rep.n0_proviso);
    }

    #[test]
    fn uncorrelated_pairs_skip_shared_variable() {
        let demo = BlockEnsembleSpec::correlated_demo(AtomKind::GaussianReal).unwrap();
        let pairs = uncorrelated_pairs(&demo);
        assert_eq!(pairs, vec![(0, 3), (1, 3), (2, 3)]);
        let quat = BlockEnsembleSpec::quaternionic(AtomKind::GaussianComplex).unwrap();
        assert_eq!(uncorrelated_pairs(&quat).len(), 6);
    }

    #[test]
    fn truncate_matrix_semantics() {
        let spec = BlockEnsembleSpec::independent(2, AtomKind::BernoulliReal).unwrap();
        let x = sample_c0_matrix(&spec, 8, 1).unwrap();
        let p = TruncationParams::for_spec(&spec, 0.1, 8);
        assert_eq!(truncate_matrix(&x, &spec, &p).unwrap(), x);

        let spec = BlockEnsembleSpec::independent(
            2,
            AtomKind::Discrete {
                support: vec![c(1.0, 0.0), c(-3.0, 0.0)],
                probs: vec![0.75, 0.25],
            },
        )
        .unwrap();
        let n = 16;
        // threshold 1.1 cuts the atom at -3/sqrt(6)
        let p = TruncationParams::for_spec(&spec, 1.1f64.ln() / (n as f64).ln(), n);
        let t = truncate_atom(&spec.atoms()[0], &p).unwrap();
        assert!(t.center.norm() > 0.0);
        let mut x = sample_c0_matrix(&spec, n, 2).unwrap();
        x[(3, 5)] = c(2.0 * p.threshold(), 0.0);
        let y = truncate_matrix(&x, &spec, &p).unwrap();
        assert!((y[(3, 5)] - (-t.center * t.scale_hat)).norm() < 1e-15);
        for (a, b) in x.as_slice().iter().zip(y.as_slice()).take(3) {
            assert!((t.apply(*a) - b).norm() < 1e-15);
        }
        assert!(truncate_matrix(&ComplexMatrix::zeros(3, 3), &spec, &p).is_err());
    }
}
