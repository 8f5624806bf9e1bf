//! Samplers for block random matrices whose d x d entry tuples are iid
//! across positions, with mean-zero variance-1/d atoms that may be
//! dependent but are pairwise uncorrelated inside a block.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::linalg::ComplexMatrix;
use crate::rng::{tag, StreamFactory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("block parameter d must be at least 2, got {0}")]
    BlockSize(usize),
    #[error("atom grid must have d*d = {expected} entries, got {actual}")]
    GridSize { expected: usize, actual: usize },
    #[error("{mode} mode requires d = 2, got {d}")]
    ModeRequiresTwo { mode: &'static str, d: usize },
    #[error("quaternionic mode needs E[xi^2] = 0 for its atoms, got {0}")]
    PseudoVariance(Complex64),
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("moment exponent eta must be positive and finite, got {0}")]
    Eta(f64),
    #[error("size must be at least 1")]
    EmptySize,
    #[error("blocks must be square and of equal size: {0:?} vs {1:?}")]
    SizeMismatch((usize, usize), (usize, usize)),
    #[error("infeasible perturbation: {0}")]
    InfeasiblePerturbation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtomKind {
    /// Uniform on `{-1, +1}`, scaled.
    BernoulliReal,
    GaussianReal,
    /// `(g1 + i g2)` with `g1, g2` iid standard normal, scaled.
    GaussianComplex,
    /// Finite support with probabilities; rescaled to variance `1/d`.
    Discrete {
        support: Vec<Complex64>,
        probs: Vec<f64>,
    },
}

/// A mean-zero atom variable with variance exactly `1/d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDistribution {
    kind: AtomKind,
    d: usize,
    scale: f64,
}

impl AtomDistribution {
    pub fn new(kind: AtomKind, d: usize) -> Result<Self, EnsembleError> {
        if d == 0 {
            return Err(EnsembleError::BlockSize(d));
        }
        let df = d as f64;
        let scale = match &kind {
            AtomKind::BernoulliReal | AtomKind::GaussianReal => 1.0 / df.sqrt(),
            AtomKind::GaussianComplex => 1.0 / (2.0 * df).sqrt(),
            AtomKind::Discrete { support, probs } => {
                if support.is_empty() || support.len() != probs.len() {
                    return Err(EnsembleError::InvalidAtom(
                        "support and probabilities must be nonempty and equally long".into(),
                    ));
                }
                if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
                    return Err(EnsembleError::InvalidAtom("probabilities must be positive".into()));
                }
                if support.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(EnsembleError::InvalidAtom("support points must be finite".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(EnsembleError::InvalidAtom(format!("probabilities sum to {total}")));
                }
                let mean: Complex64 = support.iter().zip(probs).map(|(&x, &p)| x * p).sum();
                let radius = support.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if mean.norm() > 1e-12 * radius.max(1.0) {
                    return Err(EnsembleError::InvalidAtom(format!("mean {mean} is not zero")));
                }
                let second: f64 = support.iter().zip(probs).map(|(x, &p)| p * x.norm_sqr()).sum();
                if second <= 0.0 {
                    return Err(EnsembleError::InvalidAtom("degenerate atom at zero".into()));
                }
                1.0 / (df * second).sqrt()
            }
        };
        Ok(Self { kind, d, scale })
    }

    pub fn bernoulli(d: usize) -> Self {
        Self::new(AtomKind::BernoulliReal, d).expect("valid built-in atom")
    }

    pub fn gaussian_real(d: usize) -> Self {
        Self::new(AtomKind::GaussianReal, d).expect("valid built-in atom")
    }

    pub fn gaussian_complex(d: usize) -> Self {
        Self::new(AtomKind::GaussianComplex, d).expect("valid built-in atom")
    }

    pub fn discrete(support: Vec<Complex64>, probs: Vec<f64>, d: usize) -> Result<Self, EnsembleError> {
        Self::new(AtomKind::Discrete { support, probs }, d)
    }

    pub fn kind(&self) -> &AtomKind {
        &self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.d as f64
    }

    /// `E[xi^2]` (no conjugate).
    pub fn pseudo_variance(&self) -> Complex64 {
        match &self.kind {
            AtomKind::BernoulliReal | AtomKind::GaussianReal => Complex64::new(self.variance(), 0.0),
            AtomKind::GaussianComplex => Complex64::new(0.0, 0.0),
            AtomKind::Discrete { support, probs } => {
                support.iter().zip(probs).map(|(&x, &p)| x * x * p).sum::<Complex64>() * (self.scale * self.scale)
            }
        }
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            AtomKind::BernoulliReal | AtomKind::GaussianReal => true,
            AtomKind::GaussianComplex => false,
            AtomKind::Discrete { support, .. } => support.iter().all(|z| z.im == 0.0),
        }
    }

    /// `E|xi|^p`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        let var = self.variance();
        match &self.kind {
            AtomKind::BernoulliReal => var.powf(p / 2.0),
            AtomKind::GaussianReal => {
                var.powf(p / 2.0) * 2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
            }
            AtomKind::GaussianComplex => var.powf(p / 2.0) * gamma(1.0 + p / 2.0),
            AtomKind::Discrete { support, probs } => support
                .iter()
                .zip(probs)
                .map(|(x, &q)| q * (x.norm() * self.scale).powf(p))
                .sum(),
        }
    }

    /// Scaled support points with probabilities, for finite atoms.
    pub fn finite_support(&self) -> Option<Vec<(Complex64, f64)>> {
        match &self.kind {
            AtomKind::BernoulliReal => {
                let s = Complex64::new(self.scale, 0.0);
                Some(vec![(-s, 0.5), (s, 0.5)])
            }
            AtomKind::Discrete { support, probs } => {
                Some(support.iter().zip(probs).map(|(&x, &p)| (x * self.scale, p)).collect())
            }
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match &self.kind {
            AtomKind::BernoulliReal => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(sign * self.scale, 0.0)
            }
            AtomKind::GaussianReal => {
                let g: f64 = rng.sample(StandardNormal);
                Complex64::new(g * self.scale, 0.0)
            }
            AtomKind::GaussianComplex => {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                Complex64::new(g1, g2) * self.scale
            }
            AtomKind::Discrete { support, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (&x, &p) in support.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return x * self.scale;
                    }
                }
                support[support.len() - 1] * self.scale
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependenceMode {
    Independent,
    /// `d = 2` blocks `[[a, b], [-conj(b), conj(a)]]` with `a, b` iid.
    Quaternionic,
    /// `d = 2` blocks `[[a, a], [a, b]]`; violates cross-uncorrelation.
    CorrelatedDemo,
}

impl DependenceMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::Quaternionic => "quaternionic",
            Self::CorrelatedDemo => "correlated-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockEnsembleSpec {
    d: usize,
    /// Row-major `d x d` grid; `atoms[s * d + t]` is the law of `xi_st`.
    atoms: Vec<AtomDistribution>,
    mode: DependenceMode,
    moment_eta: f64,
}

impl BlockEnsembleSpec {
    pub fn new(
        d: usize,
        atoms: Vec<AtomDistribution>,
        mode: DependenceMode,
        moment_eta: f64,
    ) -> Result<Self, EnsembleError> {
        let spec = Self {
            d,
            atoms,
            mode,
            moment_eta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn independent(d: usize, kind: AtomKind) -> Result<Self, EnsembleError> {
        if d < 2 {
            return Err(EnsembleError::BlockSize(d));
        }
        let atom = AtomDistribution::new(kind, d)?;
        Self::new(d, vec![atom; d * d], DependenceMode::Independent, 1.0)
    }

    pub fn quaternionic(kind: AtomKind) -> Result<Self, EnsembleError> {
        let atom = AtomDistribution::new(kind, 2)?;
        Self::new(2, vec![atom; 4], DependenceMode::Quaternionic, 1.0)
    }

    pub fn correlated_demo(kind: AtomKind) -> Result<Self, EnsembleError> {
        let atom = AtomDistribution::new(kind, 2)?;
        Self::new(2, vec![atom; 4], DependenceMode::CorrelatedDemo, 1.0)
    }

    pub fn with_moment_eta(mut self, eta: f64) -> Result<Self, EnsembleError> {
        self.moment_eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.d < 2 {
            return Err(EnsembleError::BlockSize(self.d));
        }
        if self.atoms.len() != self.d * self.d {
            return Err(EnsembleError::GridSize {
                expected: self.d * self.d,
                actual: self.atoms.len(),
            });
        }
        if let Some(bad) = self.atoms.iter().find(|a| a.d != self.d) {
            return Err(EnsembleError::InvalidAtom(format!(
                "atom normalized for d = {} in a d = {} grid",
                bad.d, self.d
            )));
        }
        if !(self.moment_eta > 0.0 && self.moment_eta.is_finite()) {
            return Err(EnsembleError::Eta(self.moment_eta));
        }
        match self.mode {
            DependenceMode::Independent => {}
            DependenceMode::Quaternionic => {
                if self.d != 2 {
                    return Err(EnsembleError::ModeRequiresTwo {
                        mode: "quaternionic",
                        d: self.d,
                    });
                }
                if self.atoms[0] != self.atoms[3] || self.atoms[1] != self.atoms[2] {
                    return Err(EnsembleError::InvalidAtom(
                        "quaternionic grid must read [a, b; b, a]".into(),
                    ));
                }
                for atom in [&self.atoms[0], &self.atoms[1]] {
                    let pv = atom.pseudo_variance();
                    if pv.norm() > 1e-12 {
                        return Err(EnsembleError::PseudoVariance(pv));
                    }
                }
            }
            DependenceMode::CorrelatedDemo => {
                if self.d != 2 {
                    return Err(EnsembleError::ModeRequiresTwo {
                        mode: "correlated-demo",
                        d: self.d,
                    });
                }
                if self.atoms[0] != self.atoms[1] || self.atoms[0] != self.atoms[2] {
                    return Err(EnsembleError::InvalidAtom(
                        "correlated-demo grid must read [a, a; a, b]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> DependenceMode {
        self.mode
    }

    pub fn moment_eta(&self) -> f64 {
        self.moment_eta
    }

    pub fn atoms(&self) -> &[AtomDistribution] {
        &self.atoms
    }

    pub fn atom(&self, s: usize, t: usize) -> &AtomDistribution {
        &self.atoms[s * self.d + t]
    }

    /// False only for the correlated demo, which breaks cross-uncorrelation.
    pub fn satisfies_c0(&self) -> bool {
        self.mode != DependenceMode::CorrelatedDemo
    }

    /// `max_{s,t} E|xi_st|^(2 + eta)`.
    pub fn m2eta(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.abs_moment(2.0 + self.moment_eta))
            .fold(0.0, f64::max)
    }

    /// One `d x d` entry tuple, row-major.
    pub fn sample_tuple<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        match self.mode {
            DependenceMode::Independent => self.atoms.iter().map(|a| a.sample(rng)).collect(),
            DependenceMode::Quaternionic => {
                let a = self.atoms[0].sample(rng);
                let b = self.atoms[1].sample(rng);
                vec![a, b, -b.conj(), a.conj()]
            }
            DependenceMode::CorrelatedDemo => {
                let a = self.atoms[0].sample(rng);
                let b = self.atoms[3].sample(rng);
                vec![a, a, a, b]
            }
        }
    }
}

/// Samples the `dn x dn` matrix whose `(s, t)` block holds `x_{st;ij}` at
/// `(i, j)`. Each position draws its tuple from its own keyed stream.
pub fn sample_c0_matrix(spec: &BlockEnsembleSpec, n: usize, seed: u64) -> Result<ComplexMatrix, EnsembleError> {
    spec.validate()?;
    if n == 0 {
        return Err(EnsembleError::EmptySize);
    }
    let d = spec.d;
    let factory = StreamFactory::new(seed);
    let mut x = ComplexMatrix::zeros(d * n, d * n);
    for i in 0..n {
        for j in 0..n {
            let mut rng = factory.stream(&[tag::BLOCK_ENTRY, i as u64, j as u64]);
            let tuple = spec.sample_tuple(&mut rng);
            for s in 0..d {
                for t in 0..d {
                    x[(s * n + i, t * n + j)] = tuple[s * d + t];
                }
            }
        }
    }
    Ok(x)
}

fn same_square(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(), EnsembleError> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(EnsembleError::SizeMismatch(a.shape(), b.shape()));
    }
    Ok(())
}

/// `[[A, B], [-conj(B), conj(A)]]`: the complex adjoint of `A + B j`.
pub fn quaternion_embed(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, EnsembleError> {
    same_square(a, b)?;
    let minus_b_bar = b.conj().scale_real(-1.0);
    Ok(ComplexMatrix::from_blocks(a, b, &minus_b_bar, &a.conj()).expect("shapes checked"))
}

/// `[[A, A], [A, B]]`.
pub fn build_correlated_demo(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, EnsembleError> {
    same_square(a, b)?;
    Ok(ComplexMatrix::from_blocks(a, a, a, b).expect("shapes checked"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub trials: usize,
    /// `table[p][q]` estimates `E[xi_p conj(xi_q)]` with cells indexed
    /// row-major (`p = s * d + t`).
    pub table: Vec<Vec<Complex64>>,
    pub max_cross: f64,
    pub argmax: ((usize, usize), (usize, usize)),
    pub threshold: f64,
    pub passes: bool,
}

const COVARIANCE_CHUNK: usize = 4096;

/// Empirical cross-moments of the entry tuple. `passes` iff every
/// off-diagonal moment is at most `4 / sqrt(trials) / d`.
pub fn covariance_check(spec: &BlockEnsembleSpec, trials: usize, seed: u64) -> Result<CovarianceReport, EnsembleError> {
    spec.validate()?;
    let trials = trials.max(1);
    let d = spec.d;
    let cells = d * d;
    let mut sums = vec![vec![Complex64::new(0.0, 0.0); cells]; cells];
    let factory = StreamFactory::new(seed);
    let mut done = 0usize;
    let mut chunk = 0u64;
    while done < trials {
        let mut rng = factory.stream(&[tag::COVARIANCE, chunk]);
        let count = COVARIANCE_CHUNK.min(trials - done);
        for _ in 0..count {
            let tuple = spec.sample_tuple(&mut rng);
            for p in 0..cells {
                for q in 0..cells {
                    sums[p][q] += tuple[p] * tuple[q].conj();
                }
            }
        }
        done += count;
        chunk += 1;
    }
    let table: Vec<Vec<Complex64>> = sums
        .into_iter()
        .map(|row| row.into_iter().map(|z| z / trials as f64).collect())
        .collect();
    let mut max_cross = 0.0;
    let mut argmax = ((0, 0), (0, 0));
    for p in 0..cells {
        for q in 0..cells {
            if p != q && table[p][q].norm() > max_cross {
                max_cross = table[p][q].norm();
                argmax = ((p / d, p % d), (q / d, q % d));
            }
        }
    }
    let threshold = 4.0 / (trials as f64).sqrt() / d as f64;
    Ok(CovarianceReport {
        trials,
        table,
        max_cross,
        argmax,
        threshold,
        passes: max_cross <= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// `eps` in `(0, 1]`; rank is at most `ceil(n^(1 - eps))`.
    pub rank_exponent: f64,
    /// Entries are bounded by `n^alpha`.
    pub entry_bound_exponent: f64,
    /// `||N||_HS^2 <= hs_budget * n^2`.
    pub hs_budget: f64,
}

impl PerturbationSpec {
    pub fn rank_cap(&self, n: usize) -> usize {
        let raw = (n as f64).powf(1.0 - self.rank_exponent);
        let rounded = raw.round();
        if (raw - rounded).abs() < 1e-9 {
            rounded as usize
        } else {
            raw.ceil() as usize
        }
    }
}

/// Deterministic sum of `ceil(n^(1 - eps))` canonical outer products
/// `c e_r e_c^T` at seeded distinct rows and columns, with
/// `c = min(n^alpha, sqrt(C n^2 / k))`.
pub fn low_rank_perturbation(
    p: &PerturbationSpec,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<ComplexMatrix, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::EmptySize);
    }
    if !(p.rank_exponent > 0.0 && p.rank_exponent <= 1.0) {
        return Err(EnsembleError::InfeasiblePerturbation(format!(
            "rank exponent {} outside (0, 1]",
            p.rank_exponent
        )));
    }
    if !(p.entry_bound_exponent >= 0.0 && p.entry_bound_exponent.is_finite()) {
        return Err(EnsembleError::InfeasiblePerturbation(format!(
            "entry exponent {} must be >= 0",
            p.entry_bound_exponent
        )));
    }
    if !(p.hs_budget >= 0.0 && p.hs_budget.is_finite()) {
        return Err(EnsembleError::InfeasiblePerturbation(format!(
            "HS budget {} must be >= 0",
            p.hs_budget
        )));
    }
    let dim = d * n;
    let k = p.rank_cap(n).max(1);
    if k > dim {
        return Err(EnsembleError::InfeasiblePerturbation(format!(
            "rank {k} exceeds dimension {dim}"
        )));
    }
    let nf = n as f64;
    let value = nf
        .powf(p.entry_bound_exponent)
        .min((p.hs_budget * nf * nf / k as f64).sqrt());
    let mut out = ComplexMatrix::zeros(dim, dim);
    if value == 0.0 {
        return Ok(out);
    }
    let mut rng = StreamFactory::new(seed).stream(&[tag::PERTURBATION, n as u64, d as u64]);
    let mut rows: Vec<usize> = (0..dim).collect();
    let mut cols: Vec<usize> = (0..dim).collect();
    rows.shuffle(&mut rng);
    cols.shuffle(&mut rng);
    for l in 0..k {
        out[(rows[l], cols[l])] = Complex64::new(value, 0.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_eigen, singular_values};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = BlockEnsembleSpec::independent(3, AtomKind::GaussianReal).unwrap();
        let a = sample_c0_matrix(&spec, 5, 11).unwrap();
        let b = sample_c0_matrix(&spec, 5, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_c0_matrix(&spec, 5, 12).unwrap());
    }

    #[test]
    fn bernoulli_entry_mean_is_small() {
        let spec = BlockEnsembleSpec::independent(2, AtomKind::BernoulliReal).unwrap();
        let x = sample_c0_matrix(&spec, 1000, 3).unwrap();
        let mean: Complex64 = x.as_slice().iter().sum::<Complex64>() / x.as_slice().len() as f64;
        assert!(mean.norm() <= 0.005, "{mean}");
        assert!(x.as_slice().iter().all(|z| (z.norm() - 0.5f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn quaternionic_blocks_have_the_adjoint_structure() {
        let spec = BlockEnsembleSpec::quaternionic(AtomKind::GaussianComplex).unwrap();
        let n = 6;
        let x = sample_c0_matrix(&spec, n, 5).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(x[(i, n + j)], -x[(n + i, j)].conj());
                assert_eq!(x[(n + i, n + j)], x[(i, j)].conj());
            }
        }
        let a = x.block(0, 0, n, n);
        let b = x.block(0, n, n, n);
        assert_eq!(quaternion_embed(&a, &b).unwrap(), x);
    }

    #[test]
    fn mode_constraints_are_enforced() {
        assert!(matches!(
            BlockEnsembleSpec::quaternionic(AtomKind::BernoulliReal),
            Err(EnsembleError::PseudoVariance(_))
        ));
        let atom = AtomDistribution::gaussian_complex(3);
        assert!(matches!(
            BlockEnsembleSpec::new(3, vec![atom; 9], DependenceMode::Quaternionic, 1.0),
            Err(EnsembleError::ModeRequiresTwo { .. })
        ));
        assert!(matches!(
            BlockEnsembleSpec::independent(1, AtomKind::GaussianReal),
            Err(EnsembleError::BlockSize(1))
        ));
        assert!(matches!(
            AtomDistribution::discrete(vec![c(1.0, 0.0), c(2.0, 0.0)], vec![0.5, 0.5], 2),
            Err(EnsembleError::InvalidAtom(_))
        ));
        let spec = BlockEnsembleSpec::independent(2, AtomKind::GaussianReal).unwrap();
        assert!(spec.clone().with_moment_eta(0.0).is_err());
        assert!(sample_c0_matrix(&spec, 0, 1).is_err());
    }

    #[test]
    fn discrete_atoms_are_rescaled_to_variance_one_over_d() {
        let s = 1.0 / 2f64.sqrt();
        let atom = AtomDistribution::discrete(
            vec![c(s, 0.0), c(-s, 0.0), c(10.0 * s, 0.0), c(-10.0 * s, 0.0)],
            vec![0.45, 0.45, 0.05, 0.05],
            2,
        )
        .unwrap();
        let support = atom.finite_support().unwrap();
        let var: f64 = support.iter().map(|(x, p)| p * x.norm_sqr()).sum();
        assert!((var - 0.5).abs() < 1e-15);
        assert!((atom.abs_moment(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_moments() {
        let g = AtomDistribution::gaussian_real(2);
        assert!((g.abs_moment(2.0) - 0.5).abs() < 1e-14);
        assert!((g.abs_moment(4.0) - 3.0 * 0.25).abs() < 1e-13);
        let cg = AtomDistribution::gaussian_complex(2);
        assert!((cg.abs_moment(2.0) - 0.5).abs() < 1e-14);
        assert!((cg.abs_moment(4.0) - 2.0 * 0.25).abs() < 1e-13);
        assert_eq!(cg.pseudo_variance(), c(0.0, 0.0));
    }

    #[test]
    fn empirical_variance_matches_normalization() {
        let factory = StreamFactory::new(99);
        for atom in [
            AtomDistribution::bernoulli(2),
            AtomDistribution::gaussian_real(3),
            AtomDistribution::gaussian_complex(2),
        ] {
            let mut rng = factory.stream(&[tag::ATOM_DRAWS, atom.d() as u64]);
            let draws = 1_000_000;
            let var: f64 = (0..draws).map(|_| atom.sample(&mut rng).norm_sqr()).sum::<f64>() / draws as f64;
            assert!((var * atom.d() as f64 - 1.0).abs() < 0.01, "{atom:?}: {var}");
        }
    }

    #[test]
    fn embed_examples() {
        let i = ComplexMatrix::from_rows(&[vec![c(0.0, 1.0)]]).unwrap();
        let z = ComplexMatrix::zeros(1, 1);
        let e = quaternion_embed(&i, &z).unwrap();
        assert_eq!(e, ComplexMatrix::from_diagonal(&[c(0.0, 1.0), c(0.0, -1.0)]));

        // the quaternion j embeds as a rotation with eigenvalues +-i
        let one = ComplexMatrix::identity(1);
        let j = quaternion_embed(&z, &one).unwrap();
        assert_eq!(
            j,
            ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap()
        );
        let mut ev = complex_eigen(&j).unwrap().values;
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14 && (ev[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(quaternion_embed(&one, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn correlated_demo_examples() {
        let one = ComplexMatrix::identity(1);
        let z = ComplexMatrix::zeros(1, 1);
        let x = build_correlated_demo(&one, &z).unwrap();
        assert_eq!(
            x,
            ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap()
        );

        let a =
            ComplexMatrix::from_real_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 1.0], vec![1.0, 3.0, 1.0]]).unwrap();
        let ra = singular_values(&a).unwrap().rank(1e-10);
        let kron = build_correlated_demo(&a, &a).unwrap();
        assert_eq!(singular_values(&kron).unwrap().rank(1e-10), ra);
    }

    #[test]
    fn covariance_flags() {
        let quat = BlockEnsembleSpec::quaternionic(AtomKind::GaussianComplex).unwrap();
        let rep = covariance_check(&quat, 1_000_000, 1).unwrap();
        assert!(rep.max_cross <= 0.005 && rep.passes, "{rep:?}");

        let bern = BlockEnsembleSpec::independent(2, AtomKind::BernoulliReal).unwrap();
        let rep = covariance_check(&bern, 1_000_000, 2).unwrap();
        assert!(rep.max_cross <= 0.005 && rep.passes);

        let demo = BlockEnsembleSpec::correlated_demo(AtomKind::GaussianReal).unwrap();
        let rep = covariance_check(&demo, 100_000, 3).unwrap();
        assert!(!rep.passes);
        assert!((rep.table[0][1].re - 0.5).abs() < 0.01);
    }

    #[test]
    fn perturbation_examples() {
        let full = PerturbationSpec {
            rank_exponent: 1.0,
            entry_bound_exponent: 1.0,
            hs_budget: 1.0,
        };
        let n1 = low_rank_perturbation(&full, 2, 30, 4).unwrap();
        assert_eq!(singular_values(&n1).unwrap().rank(1e-10), 1);
        assert!(n1.max_abs() <= 30.0);

        let zero = PerturbationSpec { hs_budget: 0.0, ..full };
        assert_eq!(low_rank_perturbation(&zero, 2, 10, 4).unwrap().max_abs(), 0.0);

        let half = PerturbationSpec {
            rank_exponent: 0.5,
            entry_bound_exponent: 0.5,
            hs_budget: 2.0,
        };
        let n = 100;
        let m = low_rank_perturbation(&half, 2, n, 8).unwrap();
        assert!(singular_values(&m).unwrap().rank(1e-10) <= 10);
        assert!(m.max_abs() <= (n as f64).sqrt() + 1e-12);
        assert!(m.hs_norm().powi(2) <= 2.0 * (n * n) as f64 + 1e-9);

        let bad = PerturbationSpec {
            rank_exponent: 0.0,
            ..full
        };
        assert!(low_rank_perturbation(&bad, 2, 10, 0).is_err());
    }
}
