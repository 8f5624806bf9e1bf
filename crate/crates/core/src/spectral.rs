//! Empirical spectral measures, CDF distances, the Hermitization and the
//! empirical Stieltjes transform of the symmetrized singular spectrum.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{complex_eigen, hermitize, inverse, singular_values, ComplexMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("weights must be positive and sum to 1, got sum {0}")]
    Weights(f64),
    #[error("measure has no atoms")]
    Empty,
    #[error("normalization must be positive and finite, got {0}")]
    Normalization(f64),
    #[error("spectral parameter must lie in the upper half-plane, got {0}")]
    LowerHalfPlane(Complex64),
    #[error("shifted matrix is numerically singular (sigma_min = {0:e})")]
    NearSingular(f64),
    #[error("finite-difference step must be positive and finite, got {0}")]
    Step(f64),
    #[error("CDF values must be nondecreasing in [0, 1] and end at 1")]
    NotACdf,
}

pub type Result<T> = std::result::Result<T, SpectralError>;

const WEIGHT_TOLERANCE: f64 = 1e-12;
const SINGULAR_FLOOR: f64 = 1e-13;
const DIRECT_INVERSION_MAX_DIM: usize = 64;
const ANALYTIC_GRID_POINTS: usize = 1_000_000;

/// Weighted atoms with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<T> {
    atoms: Vec<(T, f64)>,
}

impl<T: Copy> EmpiricalMeasure<T> {
    pub fn new(atoms: Vec<(T, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(SpectralError::Empty);
        }
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.iter().any(|a| !(a.1 > 0.0)) || (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(SpectralError::Weights(sum));
        }
        Ok(Self { atoms })
    }

    pub fn uniform(points: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(SpectralError::Empty);
        }
        let w = 1.0 / points.len() as f64;
        Ok(Self {
            atoms: points.into_iter().map(|p| (p, w)).collect(),
        })
    }

    pub fn atoms(&self) -> &[(T, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = T> + '_ {
        self.atoms.iter().map(|a| a.0)
    }
}

impl EmpiricalMeasure<f64> {
    pub fn cdf(&self) -> StepCdf {
        StepCdf::from_weighted(self.atoms.iter().copied())
    }
}

/// Distribution function interface used by the distances.
pub trait Cdf {
    fn value(&self, x: f64) -> f64;

    /// The step representation, if this CDF is a pure step function.
    fn as_step(&self) -> Option<&StepCdf> {
        None
    }

    /// Interval outside which the CDF is 0 (left) or 1 (right).
    fn bracket(&self) -> (f64, f64);
}

/// Right-continuous step CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    points: Vec<f64>,
    values: Vec<f64>,
}

impl StepCdf {
    /// From ascending jump points and the CDF value at each.
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(SpectralError::Empty);
        }
        let ordered = points.windows(2).all(|w| w[0] < w[1]) && values.windows(2).all(|w| w[0] <= w[1]);
        let in_range = values[0] >= 0.0 && (values[values.len() - 1] - 1.0).abs() <= WEIGHT_TOLERANCE;
        if !ordered || !in_range || points.iter().any(|p| !p.is_finite()) {
            return Err(SpectralError::NotACdf);
        }
        let mut values = values;
        *values.last_mut().unwrap() = 1.0;
        Ok(Self { points, values })
    }

    /// Empirical CDF of equally weighted samples.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(SpectralError::Empty);
        }
        let w = 1.0 / samples.len() as f64;
        Ok(Self::from_weighted(samples.iter().map(|&x| (x, w))))
    }

    fn from_weighted(atoms: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut atoms: Vec<(f64, f64)> = atoms.collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (x, w) in atoms {
            acc += w;
            if points.last() == Some(&x) {
                *values.last_mut().unwrap() = acc;
            } else {
                points.push(x);
                values.push(acc);
            }
        }
        if let Some(last) = values.last_mut() {
            *last = 1.0;
        }
        Self { points, values }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `F(x-)`.
    pub fn left_limit(&self, x: f64) -> f64 {
        self.at_count(self.points.partition_point(|&p| p < x))
    }

    /// Value after the first `k` jumps.
    #[inline]
    fn at_count(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }
}

impl Cdf for StepCdf {
    fn value(&self, x: f64) -> f64 {
        self.at_count(self.points.partition_point(|&p| p <= x))
    }

    fn as_step(&self) -> Option<&StepCdf> {
        Some(self)
    }

    fn bracket(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }
}

/// A continuous CDF given by a closure on a bracket `[lo, hi]`.
pub struct AnalyticCdf {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
}

impl AnalyticCdf {
    pub fn new(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Box::new(f), lo, hi }
    }

    /// `r -> min(r, 1)^2`, the radial law of the uniform unit disk.
    pub fn unit_disk_radial() -> Self {
        Self::new(0.0, 1.0, |r| r * r)
    }
}

impl std::fmt::Debug for AnalyticCdf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AnalyticCdf[{}, {}]", self.lo, self.hi)
    }
}

impl Cdf for AnalyticCdf {
    fn value(&self, x: f64) -> f64 {
        if x < self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            (self.f)(x).clamp(0.0, 1.0)
        }
    }

    fn bracket(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

fn check_normalization(normalization: f64) -> Result<()> {
    if normalization > 0.0 && normalization.is_finite() {
        Ok(())
    } else {
        Err(SpectralError::Normalization(normalization))
    }
}

/// Eigenvalues of `M / normalization` with uniform weights.
pub fn esd(m: &ComplexMatrix, normalization: f64) -> Result<EmpiricalMeasure<Complex64>> {
    check_normalization(normalization)?;
    let spec = complex_eigen(&m.scale_real(1.0 / normalization))?;
    EmpiricalMeasure::uniform(spec.values)
}

/// CDF of the moduli of a complex measure.
pub fn radial_cdf(m: &EmpiricalMeasure<Complex64>) -> StepCdf {
    StepCdf::from_weighted(m.atoms().iter().map(|&(z, w)| (z.norm(), w)))
}

fn shifted(m: &ComplexMatrix, z: Complex64, normalization: f64) -> Result<ComplexMatrix> {
    check_normalization(normalization)?;
    m.require_square()?;
    Ok(m.scale_real(1.0 / normalization).shifted(z))
}

/// `(1/2n) sum (delta_{sigma_i} + delta_{-sigma_i})` for `M/normalization - zI`.
pub fn symmetrized_singular_measure(
    m: &ComplexMatrix,
    z: Complex64,
    normalization: f64,
) -> Result<EmpiricalMeasure<f64>> {
    let sv = singular_values(&shifted(m, z, normalization)?)?;
    let w = 0.5 / sv.values.len().max(1) as f64;
    let atoms = sv.values.iter().flat_map(|&s| [(s, w), (-s, w)]).collect();
    EmpiricalMeasure::new(atoms)
}

/// `[[0, M/norm - zI], [M*/norm - conj(z) I, 0]]`.
pub fn hermitization(m: &ComplexMatrix, z: Complex64, normalization: f64) -> Result<ComplexMatrix> {
    Ok(hermitize(&shifted(m, z, normalization)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSummary {
    pub z: Complex64,
    pub w: Complex64,
    pub m_hat: Complex64,
    /// Trace of the upper-left block of `(H - w)^{-1}`; only for small dimensions.
    pub block_trace_upper_left: Option<Complex64>,
    pub block_trace_lower_right: Option<Complex64>,
}

/// `(1/2N) sum_i [1/(sigma_i - w) + 1/(-sigma_i - w)]`.
pub fn stieltjes_from_singular_values(sigma: &[f64], w: Complex64) -> Complex64 {
    let total: Complex64 = sigma
        .iter()
        .map(|&s| 1.0 / (Complex64::new(s, 0.0) - w) + 1.0 / (Complex64::new(-s, 0.0) - w))
        .sum();
    total / (2 * sigma.len()) as f64
}

pub fn empirical_stieltjes(
    m: &ComplexMatrix,
    z: Complex64,
    w: Complex64,
    normalization: f64,
) -> Result<ResolventSummary> {
    if !(w.im > 0.0) {
        return Err(SpectralError::LowerHalfPlane(w));
    }
    let b = shifted(m, z, normalization)?;
    let sv = singular_values(&b)?;
    let m_hat = stieltjes_from_singular_values(&sv.values, w);
    let n = b.rows();
    let (upper, lower) = if 2 * n <= DIRECT_INVERSION_MAX_DIM {
        let r = inverse(&hermitize(&b).shifted(w))?;
        let upper: Complex64 = (0..n).map(|i| r[(i, i)]).sum();
        let lower: Complex64 = (n..2 * n).map(|i| r[(i, i)]).sum();
        (Some(upper), Some(lower))
    } else {
        (None, None)
    };
    Ok(ResolventSummary {
        z,
        w,
        m_hat,
        block_trace_upper_left: upper,
        block_trace_lower_right: lower,
    })
}

/// `(1/N) sum log sigma_i^2` over the singular values of `M/norm - zI`.
pub fn log_potential(m: &ComplexMatrix, z: Complex64, normalization: f64) -> Result<f64> {
    let sv = singular_values(&shifted(m, z, normalization)?)?;
    let smallest = sv.smallest();
    if smallest < SINGULAR_FLOOR {
        return Err(SpectralError::NearSingular(smallest));
    }
    Ok(sv.values.iter().map(|s| (s * s).ln()).sum::<f64>() / sv.values.len() as f64)
}

/// Central difference in `s` of the log-potential at `z = s + it`.
pub fn g_emp(m: &ComplexMatrix, s: f64, t: f64, h: f64, normalization: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SpectralError::Step(h));
    }
    let plus = log_potential(m, Complex64::new(s + h, t), normalization)?;
    let minus = log_potential(m, Complex64::new(s - h, t), normalization)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Smallest feasible epsilon in `[0, 1]` for a monotone predicate, to
/// floating-point resolution.
fn bisect_feasible(feasible: impl Fn(f64) -> bool) -> f64 {
    if feasible(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Levy condition for two step CDFs, checked at every breakpoint of
/// `F(x -+ e) - G(x)`. Offsets are compared as differences so jump
/// coincidences are decided exactly.
fn step_step_feasible(f: &StepCdf, g: &StepCdf, e: f64) -> bool {
    let (a, b) = (f.points(), g.points());
    // F(x - e) - e <= G(x)
    for (k, &ak) in a.iter().enumerate() {
        let g_at = g.at_count(b.partition_point(|&bj| bj - ak <= e));
        if f.values[k] - e > g_at {
            return false;
        }
    }
    for (j, &bj) in b.iter().enumerate() {
        let f_at = f.at_count(a.partition_point(|&ak| bj - ak >= e));
        if f_at - e > g.values[j] {
            return false;
        }
    }
    // G(x) <= F(x + e) + e
    for (j, &bj) in b.iter().enumerate() {
        let f_at = f.at_count(a.partition_point(|&ak| ak - bj <= e));
        if g.values[j] > f_at + e {
            return false;
        }
    }
    for (k, &ak) in a.iter().enumerate() {
        let g_at = g.at_count(b.partition_point(|&bj| ak - bj >= e));
        if g_at > f.values[k] + e {
            return false;
        }
    }
    true
}

/// Levy condition between a step CDF `f` and a continuous CDF `g`. On each
/// interval where `f` is constant the extremes of `g` sit at the ends.
fn step_continuous_feasible(f: &StepCdf, g: &dyn Cdf, e: f64) -> bool {
    let a = f.points();
    for (k, &ak) in a.iter().enumerate() {
        if f.values[k] - e > g.value(ak + e) {
            return false;
        }
        if g.value(ak - e) > f.at_count(k) + e {
            return false;
        }
    }
    true
}

fn analytic_grid(f: &dyn Cdf, g: &dyn Cdf) -> (Vec<f64>, f64) {
    let (fl, fh) = f.bracket();
    let (gl, gh) = g.bracket();
    let lo = fl.min(gl) - 1.0;
    let hi = fh.max(gh) + 1.0;
    let step = (hi - lo) / (ANALYTIC_GRID_POINTS - 1) as f64;
    ((0..ANALYTIC_GRID_POINTS).map(|i| lo + i as f64 * step).collect(), step)
}

/// Levy distance `inf{e : F(x-e) - e <= G(x) <= F(x+e) + e for all x}`.
///
/// Step/step and step/continuous pairs are decided exactly at breakpoints
/// and bisected to machine resolution. Two continuous CDFs are compared on
/// a uniform grid of 10^6 points and the grid spacing is added to the
/// reported value.
pub fn levy_distance(f: &dyn Cdf, g: &dyn Cdf) -> f64 {
    match (f.as_step(), g.as_step()) {
        (Some(a), Some(b)) => bisect_feasible(|e| step_step_feasible(a, b, e)),
        (Some(a), None) => bisect_feasible(|e| step_continuous_feasible(a, g, e)),
        (None, Some(b)) => bisect_feasible(|e| step_continuous_feasible(b, f, e)),
        (None, None) => {
            let (grid, step) = analytic_grid(f, g);
            let fv: Vec<f64> = grid.iter().map(|&x| f.value(x)).collect();
            let gv: Vec<f64> = grid.iter().map(|&x| g.value(x)).collect();
            let eps = bisect_feasible(|e| {
                grid.iter()
                    .zip(&gv)
                    .all(|(&x, &gx)| f.value(x - e) - e <= gx && gx <= f.value(x + e) + e)
                    && grid
                        .iter()
                        .zip(&fv)
                        .all(|(&x, &fx)| g.value(x - e) - e <= fx && fx <= g.value(x + e) + e)
            });
            (eps + step).min(1.0)
        }
    }
}

/// `sup_x |F(x) - G(x)|`.
pub fn kolmogorov_distance(f: &dyn Cdf, g: &dyn Cdf) -> f64 {
    match (f.as_step(), g.as_step()) {
        (Some(a), Some(b)) => a
            .points()
            .iter()
            .chain(b.points())
            .map(|&x| (a.value(x) - b.value(x)).abs())
            .fold(0.0, f64::max),
        (Some(a), None) => step_continuous_sup(a, g),
        (None, Some(b)) => step_continuous_sup(b, f),
        (None, None) => {
            let (grid, _) = analytic_grid(f, g);
            grid.iter()
                .map(|&x| (f.value(x) - g.value(x)).abs())
                .fold(0.0, f64::max)
        }
    }
}

fn step_continuous_sup(f: &StepCdf, g: &dyn Cdf) -> f64 {
    f.points()
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let gx = g.value(x);
            (f.values[k] - gx).abs().max((f.at_count(k) - gx).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::random_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn point_mass(x: f64) -> StepCdf {
        StepCdf::from_samples(&[x]).unwrap()
    }

    fn random_step(rng: &mut ChaCha8Rng) -> StepCdf {
        let k = rng.random_range(1..8);
        let xs: Vec<f64> = (0..k).map(|_| (rng.random_range(-20..20) as f64) * 0.05).collect();
        StepCdf::from_samples(&xs).unwrap()
    }

    #[test]
    fn esd_examples() {
        let m = esd(&ComplexMatrix::identity(3), 1.0).unwrap();
        assert!(m.positions().all(|z| (z - c(1.0, 0.0)).norm() < 1e-14));
        let r = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let mut im: Vec<f64> = esd(&r, 1.0).unwrap().positions().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + 1.0).abs() < 1e-14 && (im[1] - 1.0).abs() < 1e-14);
        let mut shift = ComplexMatrix::zeros(4, 4);
        for i in 0..3 {
            shift[(i, i + 1)] = c(1.0, 0.0);
        }
        assert!(esd(&shift, 1.0).unwrap().positions().all(|z| z.norm() == 0.0));
        assert!(esd(&shift, 0.0).is_err());
    }

    #[test]
    fn radial_cdf_examples() {
        let zero = EmpiricalMeasure::uniform(vec![c(0.0, 0.0)]).unwrap();
        let f = radial_cdf(&zero);
        assert_eq!((f.left_limit(0.0), f.value(0.0)), (0.0, 1.0));
        let four = EmpiricalMeasure::uniform(vec![c(0.5, 0.0), c(0.0, -0.5), c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let f = radial_cdf(&four);
        assert_eq!(f.value(0.5), 0.5);
        assert_eq!(f.value(0.99), 0.5);
        assert_eq!(f.value(1.0), 1.0);
    }

    #[test]
    fn uniform_disk_samples_match_radial_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pts = Vec::new();
        while pts.len() < 100_000 {
            let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if z.norm() <= 1.0 {
                pts.push(z);
            }
        }
        let f = radial_cdf(&EmpiricalMeasure::uniform(pts).unwrap());
        assert!(kolmogorov_distance(&f, &AnalyticCdf::unit_disk_radial()) <= 0.01);
    }

    #[test]
    fn symmetrized_singular_measure_examples() {
        let nu = symmetrized_singular_measure(&ComplexMatrix::identity(2), c(0.0, 0.0), 1.0).unwrap();
        assert!(nu
            .atoms()
            .iter()
            .all(|&(x, w)| (x.abs() - 1.0).abs() < 1e-14 && (w - 0.25).abs() < 1e-15));
        let nu = symmetrized_singular_measure(&ComplexMatrix::zeros(3, 3), c(2.0, 0.0), 1.0).unwrap();
        assert!(nu.positions().all(|x| (x.abs() - 2.0).abs() < 1e-14));
        let m = random_matrix(5, 5, 2);
        let nu = symmetrized_singular_measure(&m, c(0.3, -0.1), 2.0).unwrap();
        let f = nu.cdf();
        for &x in f.points() {
            // F(x) + F(-x-) = 1 for a symmetric measure
            assert!((f.value(x) + f.left_limit(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitization_spectrum_is_symmetrized_singular_spectrum() {
        let h0 = hermitization(&ComplexMatrix::zeros(2, 2), c(0.0, 0.0), 1.0).unwrap();
        assert_eq!(h0, ComplexMatrix::zeros(4, 4));
        let m = random_matrix(3, 3, 11);
        let z = c(0.2, 0.4);
        let h = hermitization(&m, z, 3f64.sqrt()).unwrap();
        assert_eq!(h.hermitian_defect(), 0.0);
        let eig = crate::linalg::hermitian_eigen(&h).unwrap();
        let mut want: Vec<f64> = symmetrized_singular_measure(&m, z, 3f64.sqrt())
            .unwrap()
            .positions()
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn stieltjes_examples() {
        let w = c(0.3, 0.7);
        let s = empirical_stieltjes(&ComplexMatrix::zeros(3, 3), c(0.0, 0.0), w, 1.0).unwrap();
        assert!((s.m_hat + 1.0 / w).norm() < 1e-14);
        let s = empirical_stieltjes(&ComplexMatrix::identity(1), c(0.0, 0.0), c(0.0, 1.0), 1.0).unwrap();
        // (1/2)[(1+i)/2 + (-1+i)/2] = i/2
        assert!((s.m_hat - c(0.0, 0.5)).norm() < 1e-15);
        assert!(empirical_stieltjes(&ComplexMatrix::identity(1), c(0.0, 0.0), c(1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn block_traces_agree_and_average_to_m_hat() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for case in 0..50u64 {
            let n = rng.random_range(1..=32);
            let m = random_matrix(n, n, 500 + case);
            let z = c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let w = c(rng.random_range(-2.0..2.0), rng.random_range(0.05..2.0));
            let s = empirical_stieltjes(&m, z, w, (n as f64).sqrt()).unwrap();
            let (r1, r4) = (s.block_trace_upper_left.unwrap(), s.block_trace_lower_right.unwrap());
            assert!((r1 - r4).norm() <= 1e-9, "case {case}");
            assert!(((r1 + r4) / (2 * n) as f64 - s.m_hat).norm() <= 1e-9);
            assert!(s.m_hat.im > 0.0 && s.m_hat.norm() <= 1.0 / w.im);
        }
        let big = empirical_stieltjes(&random_matrix(40, 40, 1), c(0.0, 0.0), c(0.0, 1.0), 1.0).unwrap();
        assert!(big.block_trace_upper_left.is_none());
    }

    #[test]
    fn resolvent_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [4usize, 16, 32] {
            let h = crate::linalg::test_support::random_hermitian(n, n as u64);
            let w1 = c(rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0));
            let w2 = c(rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0));
            let r1 = inverse(&h.shifted(w1)).unwrap();
            let r2 = inverse(&h.shifted(w2)).unwrap();
            let lhs = r1.sub(&r2).unwrap();
            let rhs = r1.matmul(&r2).unwrap().scale(w1 - w2);
            assert!(lhs.sub(&rhs).unwrap().hs_norm() <= 1e-8);
        }
    }

    #[test]
    fn log_potential_and_g_for_zero_matrix() {
        let zero = ComplexMatrix::zeros(4, 4);
        assert!((log_potential(&zero, c(2.0, 0.0), 1.0).unwrap() - 4f64.ln()).abs() < 1e-14);
        assert!(matches!(
            log_potential(&zero, c(0.0, 0.0), 1.0),
            Err(SpectralError::NearSingular(_))
        ));
        for (s, t) in [(0.7, 0.2), (-1.3, 0.5), (0.1, -0.9)] {
            let h = 1e-3;
            let g = g_emp(&zero, s, t, h, 1.0).unwrap();
            let exact = 2.0 * s / (s * s + t * t);
            assert!((g - exact).abs() < 1e-5, "({s},{t}) {g} vs {exact}");
        }
        assert!(g_emp(&zero, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let d0 = point_mass(0.0);
        assert_eq!(levy_distance(&d0, &d0), 0.0);
        assert!((levy_distance(&d0, &point_mass(0.5)) - 0.5).abs() <= 2e-6);
        assert_eq!(kolmogorov_distance(&d0, &d0), 0.0);
        assert_eq!(kolmogorov_distance(&d0, &point_mass(1.0)), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let uniform = AnalyticCdf::new(0.0, 1.0, |x| x);
        let emp = StepCdf::from_samples(&xs).unwrap();
        assert!(kolmogorov_distance(&emp, &uniform) <= 0.03);
        assert!(levy_distance(&emp, &uniform) <= kolmogorov_distance(&emp, &uniform));
    }

    #[test]
    fn levy_against_continuous_by_definition() {
        // Point mass at 0 vs uniform[0,1]: the binding constraint is
        // 1 - e <= G(e) = e, so L = 1/2.
        let uniform = AnalyticCdf::new(0.0, 1.0, |x| x);
        let l = levy_distance(&point_mass(0.0), &uniform);
        assert!((l - 0.5).abs() < 1e-12);
        assert!((levy_distance(&uniform, &point_mass(0.0)) - l).abs() < 1e-15);
    }

    #[test]
    fn metric_axioms_on_random_step_cdfs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let (f, g, h) = (random_step(&mut rng), random_step(&mut rng), random_step(&mut rng));
            for dist in [levy_distance as fn(&dyn Cdf, &dyn Cdf) -> f64, kolmogorov_distance] {
                let (fg, gf) = (dist(&f, &g), dist(&g, &f));
                assert!((fg - gf).abs() <= 1e-12);
                assert!(fg <= dist(&f, &h) + dist(&h, &g) + 1e-12);
            }
            assert!(levy_distance(&f, &g) <= kolmogorov_distance(&f, &g) + 1e-12);
        }
    }

    #[test]
    fn measure_and_cdf_validation() {
        assert!(EmpiricalMeasure::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(EmpiricalMeasure::new(vec![(0.0, 1.5), (1.0, -0.5)]).is_err());
        assert!(EmpiricalMeasure::<f64>::uniform(vec![]).is_err());
        assert!(StepCdf::new(vec![0.0, 1.0], vec![0.6, 0.5]).is_err());
        let f = StepCdf::new(vec![0.0, 1.0], vec![0.25, 1.0]).unwrap();
        assert_eq!(
            (f.value(-1.0), f.value(0.5), f.left_limit(1.0), f.value(1.0)),
            (0.0, 0.25, 0.25, 1.0)
        );
    }
}
