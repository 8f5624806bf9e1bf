//! Littlewood–Offord computations: exact small-ball probabilities of
//! linear and multilinear forms in discrete random variables, generalized
//! arithmetic progressions, integer relations, and a Monte Carlo
//! decoupling check.

mod ball;
mod decoupling;
mod gap;
mod linear;
mod multilinear;
mod relation;

use num_complex::Complex64;
use num_rational::Ratio;
use thiserror::Error;

use crate::ensembles::AtomDistribution;

pub use ball::{max_ball_mass, merge_values, BallOptimum, VALUE_TOLERANCE};
pub use decoupling::{decoupling_check, ordered_partition, DecouplingReport};
pub use gap::{pigeonhole_bound, Gap, GapElement, PigeonholeReport};
pub use linear::{linear_smallball, LinearMethod};
pub use multilinear::multilinear_smallball;
pub use relation::gap_integer_relation;

/// Cap on enumerated outcomes and array sizes.
pub const ENUMERATION_CAP: u128 = 10_000_000;
/// Cap on enumerated GAP volume.
pub const GAP_VOLUME_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmallBallError {
    #[error("{what} needs {size} outcomes, above the cap {cap}")]
    Cap { what: &'static str, size: u128, cap: u128 },
    #[error("atom must have finite support")]
    NotFinite,
    #[error("invalid law: {0}")]
    Law(String),
    #[error("beta must be nonnegative and finite, got {0}")]
    Beta(f64),
    #[error("coefficient array needs {expected} entries, got {actual}")]
    ArrayShape { expected: u128, actual: usize },
    #[error("lower-degree form has degree {actual}, expected {expected}")]
    ShiftDegree { expected: usize, actual: usize },
    #[error("invalid GAP: {0}")]
    Gap(String),
    #[error("GAP must be symmetric")]
    NotSymmetric,
    #[error("coefficient {index} is not an element of the GAP")]
    NotInGap { index: usize },
    #[error("integer relation needs r + 1 vectors in Z^r: {0}")]
    RelationShape(String),
    #[error("all coordinates are zero")]
    ZeroInput,
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("partition class {0} is empty")]
    EmptyClass(usize),
    #[error("Monte Carlo needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Ensemble(#[from] crate::ensembles::EnsembleError),
}

pub type Result<T> = std::result::Result<T, SmallBallError>;

/// A finite law on the complex plane, unnormalized (support taken as given).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    support: Vec<Complex64>,
    probs: Vec<f64>,
}

impl FiniteLaw {
    pub fn new(support: Vec<Complex64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(SmallBallError::Law(
                "support and probabilities must be nonempty and of equal length".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(SmallBallError::Law(format!(
                "probabilities must be positive and sum to 1, got {total}"
            )));
        }
        if support.iter().any(|z| !z.is_finite()) {
            return Err(SmallBallError::Law("support must be finite".into()));
        }
        Ok(Self { support, probs })
    }

    /// Uniform on the given points.
    pub fn uniform(support: Vec<Complex64>) -> Result<Self> {
        let p = 1.0 / support.len().max(1) as f64;
        let probs = vec![p; support.len()];
        Self::new(support, probs)
    }

    /// Uniform on `{-1, +1}`.
    pub fn bernoulli() -> Self {
        Self::uniform(vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]).expect("valid law")
    }

    pub fn support(&self) -> &[Complex64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Equal weights: probabilities are exact ratios of outcome counts.
    pub fn is_uniform(&self) -> bool {
        self.probs.windows(2).all(|w| w[0] == w[1])
    }

    pub(crate) fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        if self.is_uniform() {
            return self.support[rng.random_range(0..self.support.len())];
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (z, p) in self.support.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *z;
            }
        }
        self.support[self.support.len() - 1]
    }
}

impl TryFrom<&AtomDistribution> for FiniteLaw {
    type Error = SmallBallError;

    fn try_from(atom: &AtomDistribution) -> Result<Self> {
        let atoms = atom.finite_support().ok_or(SmallBallError::NotFinite)?;
        let (support, probs) = atoms.into_iter().unzip();
        Self::new(support, probs)
    }
}

/// How a small-ball probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmallBallMethod {
    ExactEnumeration,
    LatticeDp,
    MonteCarlo { trials: usize, ci_halfwidth: f64 },
}

impl SmallBallMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ExactEnumeration => "exact-enumeration",
            Self::LatticeDp => "dp-lattice",
            Self::MonteCarlo { .. } => "monte-carlo",
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::MonteCarlo { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallResult {
    pub rho: f64,
    /// `count / |support|^(#variables)` when the law is uniform and the
    /// method exact.
    pub rho_exact: Option<Ratio<u128>>,
    pub center: Complex64,
    pub method: SmallBallMethod,
}

/// An `n^D` array of complex coefficients, indexed row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientArray {
    degree: usize,
    n: usize,
    entries: Vec<Complex64>,
}

impl CoefficientArray {
    pub fn new(degree: usize, n: usize, entries: Vec<Complex64>) -> Result<Self> {
        let expected = (n as u128).checked_pow(degree as u32).unwrap_or(u128::MAX);
        if expected > ENUMERATION_CAP {
            return Err(SmallBallError::Cap {
                what: "coefficient array",
                size: expected,
                cap: ENUMERATION_CAP,
            });
        }
        if entries.len() as u128 != expected {
            return Err(SmallBallError::ArrayShape {
                expected,
                actual: entries.len(),
            });
        }
        Ok(Self { degree, n, entries })
    }

    pub fn zeros(degree: usize, n: usize) -> Result<Self> {
        let len = (n as u128)
            .checked_pow(degree as u32)
            .unwrap_or(u128::MAX)
            .min(ENUMERATION_CAP + 1) as usize;
        Self::new(degree, n, vec![Complex64::new(0.0, 0.0); len])
    }

    /// `a_{i_1..i_D} = prod_k v_k[i_k]`.
    pub fn rank_one(factors: &[Vec<Complex64>]) -> Result<Self> {
        let n = factors.first().map_or(0, Vec::len);
        if factors.iter().any(|f| f.len() != n) {
            return Err(SmallBallError::ArrayShape {
                expected: n as u128,
                actual: factors.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
            });
        }
        let mut entries = vec![Complex64::new(1.0, 0.0)];
        for f in factors {
            entries = entries.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
        }
        Self::new(factors.len(), n, entries)
    }

    pub fn from_fn(degree: usize, n: usize, mut f: impl FnMut(&[usize]) -> Complex64) -> Result<Self> {
        let total = (n as u128).checked_pow(degree as u32).unwrap_or(u128::MAX);
        if total > ENUMERATION_CAP {
            return Err(SmallBallError::Cap {
                what: "coefficient array",
                size: total,
                cap: ENUMERATION_CAP,
            });
        }
        let mut idx = vec![0usize; degree];
        let mut entries = Vec::with_capacity(total as usize);
        for _ in 0..total {
            entries.push(f(&idx));
            for k in (0..degree).rev() {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(degree, n, entries)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(SmallBallError::Beta(beta))
    }
}

/// `|support|^k` if it fits under the enumeration cap.
fn outcome_count(law: &FiniteLaw, variables: usize) -> Option<u128> {
    let mut total: u128 = 1;
    for _ in 0..variables {
        total = total.checked_mul(law.len() as u128)?;
        if total > ENUMERATION_CAP {
            return None;
        }
    }
    Some(total)
}
