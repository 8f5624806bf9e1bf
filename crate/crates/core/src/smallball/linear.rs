use num_complex::Complex64;
use num_rational::Ratio;
use std::collections::HashMap;

use super::ball::max_ball_mass;
use super::{
    check_beta, outcome_count, FiniteLaw, Result, SmallBallError, SmallBallMethod, SmallBallResult, ENUMERATION_CAP,
};
use crate::rng::{tag, StreamFactory};

/// Evaluation strategy for [`linear_smallball`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearMethod {
    /// Enumeration under the cap, then the lattice DP when every term is a
    /// Gaussian integer, then Monte Carlo.
    Auto {
        trials: usize,
        seed: u64,
    },
    Exact,
    Lattice,
    MonteCarlo {
        trials: usize,
        seed: u64,
    },
}

impl Default for LinearMethod {
    fn default() -> Self {
        Self::Auto {
            trials: 1_000_000,
            seed: 0,
        }
    }
}

/// `sup_c P(|sum_i a_i x_i - c| <= beta)` with `x_i` iid from `law`.
pub fn linear_smallball(a: &[Complex64], law: &FiniteLaw, beta: f64, method: LinearMethod) -> Result<SmallBallResult> {
    check_beta(beta)?;
    let fits = outcome_count(law, a.len()).is_some();
    match method {
        LinearMethod::Exact => {
            if !fits {
                return Err(cap_error(law, a.len()));
            }
            Ok(exact(a, law, beta))
        }
        LinearMethod::Lattice => lattice(a, law, beta).ok_or(SmallBallError::Law(
            "lattice DP needs Gaussian-integer terms a_i x".into(),
        ))?,
        LinearMethod::MonteCarlo { trials, seed } => monte_carlo(a, law, beta, trials, seed),
        LinearMethod::Auto { trials, seed } => {
            if fits {
                Ok(exact(a, law, beta))
            } else if let Some(result) = lattice(a, law, beta) {
                result
            } else {
                monte_carlo(a, law, beta, trials, seed)
            }
        }
    }
}

fn cap_error(law: &FiniteLaw, variables: usize) -> SmallBallError {
    let size = (law.len() as u128).checked_pow(variables as u32).unwrap_or(u128::MAX);
    SmallBallError::Cap {
        what: "linear enumeration",
        size,
        cap: ENUMERATION_CAP,
    }
}

#[inline]
fn bits(z: Complex64) -> (u64, u64) {
    // +0.0 folds -0.0 into +0.0
    ((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits())
}

/// Outcome counts of `sum a_i x_i`, merging only bit-identical partial
/// sums; with terms added in a fixed order this is the exact outcome table.
fn enumerate_counts(a: &[Complex64], support: &[Complex64]) -> Vec<(Complex64, u128)> {
    let mut dist: Vec<(Complex64, u128)> = vec![(Complex64::new(0.0, 0.0), 1)];
    for &ai in a {
        let mut index: HashMap<(u64, u64), usize> = HashMap::with_capacity(dist.len() * support.len());
        let mut next: Vec<(Complex64, u128)> = Vec::with_capacity(dist.len() * support.len());
        for &(v, w) in &dist {
            for &x in support {
                let s = v + ai * x;
                match index.get(&bits(s)) {
                    Some(&k) => next[k].1 += w,
                    None => {
                        index.insert(bits(s), next.len());
                        next.push((s, w));
                    }
                }
            }
        }
        dist = next;
    }
    dist
}

fn finish_counts(points: Vec<(Complex64, u128)>, total: u128, beta: f64, method: SmallBallMethod) -> SmallBallResult {
    let best = max_ball_mass(points, beta);
    SmallBallResult {
        rho: best.mass as f64 / total as f64,
        rho_exact: Some(Ratio::new(best.mass, total)),
        center: best.center,
        method,
    }
}

fn finish_probs(points: Vec<(Complex64, f64)>, beta: f64, method: SmallBallMethod) -> SmallBallResult {
    let best = max_ball_mass(points, beta);
    SmallBallResult {
        rho: best.mass.min(1.0),
        rho_exact: None,
        center: best.center,
        method,
    }
}

fn exact(a: &[Complex64], law: &FiniteLaw, beta: f64) -> SmallBallResult {
    let method = SmallBallMethod::ExactEnumeration;
    if law.is_uniform() {
        let total = (law.len() as u128).pow(a.len() as u32);
        let points = enumerate_counts(a, law.support());
        finish_counts(points, total, beta, method)
    } else {
        let points = enumerate_probs(a, law);
        finish_probs(points, beta, method)
    }
}

fn enumerate_probs(a: &[Complex64], law: &FiniteLaw) -> Vec<(Complex64, f64)> {
    let mut dist: Vec<(Complex64, f64)> = vec![(Complex64::new(0.0, 0.0), 1.0)];
    for &ai in a {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut next: Vec<(Complex64, f64)> = Vec::with_capacity(dist.len() * law.len());
        for &(v, w) in &dist {
            for (&x, &p) in law.support().iter().zip(law.probs()) {
                let s = v + ai * x;
                match index.get(&bits(s)) {
                    Some(&k) => next[k].1 += w * p,
                    None => {
                        index.insert(bits(s), next.len());
                        next.push((s, w * p));
                    }
                }
            }
        }
        dist = next;
    }
    dist
}

/// Gaussian-integer value of `z`, if it is one and comfortably in range.
fn gaussian_integer(z: Complex64) -> Option<(i64, i64)> {
    let limit = 2f64.powi(52);
    let ok = |x: f64| x.fract() == 0.0 && x.abs() < limit;
    (ok(z.re) && ok(z.im)).then(|| (z.re as i64, z.im as i64))
}

fn to_points<W>(m: HashMap<(i64, i64), W>) -> Vec<(Complex64, W)> {
    m.into_iter()
        .map(|((re, im), w)| (Complex64::new(re as f64, im as f64), w))
        .collect()
}

/// Exact distribution over integer sums, or `None` if some term is off
/// the Gaussian-integer lattice.
fn lattice(a: &[Complex64], law: &FiniteLaw, beta: f64) -> Option<Result<SmallBallResult>> {
    let mut steps: Vec<Vec<(i64, i64)>> = Vec::with_capacity(a.len());
    for &ai in a {
        steps.push(
            law.support()
                .iter()
                .map(|&x| gaussian_integer(ai * x))
                .collect::<Option<_>>()?,
        );
    }
    let method = SmallBallMethod::LatticeDp;
    if law.is_uniform() {
        let mut dist: HashMap<(i64, i64), u128> = HashMap::from([((0, 0), 1u128)]);
        for step in &steps {
            let mut next: HashMap<(i64, i64), u128> = HashMap::with_capacity(dist.len() * 2);
            for (&(re, im), &w) in &dist {
                for &(dr, di) in step {
                    let key = match (re.checked_add(dr), im.checked_add(di)) {
                        (Some(r), Some(i)) => (r, i),
                        _ => return Some(Err(SmallBallError::Overflow)),
                    };
                    *next.entry(key).or_insert(0) += w;
                }
            }
            dist = next;
        }
        let total = match (law.len() as u128).checked_pow(a.len() as u32) {
            Some(t) => t,
            None => return Some(Err(SmallBallError::Overflow)),
        };
        Some(Ok(finish_counts(to_points(dist), total, beta, method)))
    } else {
        let mut dist: HashMap<(i64, i64), f64> = HashMap::from([((0, 0), 1.0)]);
        for step in &steps {
            let mut next: HashMap<(i64, i64), f64> = HashMap::with_capacity(dist.len() * 2);
            for (&(re, im), &w) in &dist {
                for (&(dr, di), &p) in step.iter().zip(law.probs()) {
                    *next.entry((re + dr, im + di)).or_insert(0.0) += w * p;
                }
            }
            dist = next;
        }
        Some(Ok(finish_probs(to_points(dist), beta, method)))
    }
}

fn monte_carlo(a: &[Complex64], law: &FiniteLaw, beta: f64, trials: usize, seed: u64) -> Result<SmallBallResult> {
    if trials == 0 {
        return Err(SmallBallError::NoTrials);
    }
    let factory = StreamFactory::new(seed);
    let chunk = 4096;
    let mut points: Vec<(Complex64, u128)> = Vec::with_capacity(trials);
    let mut index = 0u64;
    while points.len() < trials {
        let mut rng = factory.stream(&[tag::MONTE_CARLO, index]);
        for _ in 0..chunk.min(trials - points.len()) {
            let s: Complex64 = a.iter().map(|&ai| ai * law.sample(&mut rng)).sum();
            points.push((s, 1));
        }
        index += 1;
    }
    let best = max_ball_mass(points, beta);
    let rho = best.mass as f64 / trials as f64;
    Ok(SmallBallResult {
        rho,
        rho_exact: None,
        center: best.center,
        method: SmallBallMethod::MonteCarlo {
            trials,
            ci_halfwidth: 1.96 * (rho * (1.0 - rho) / trials as f64).sqrt(),
        },
    })
}
