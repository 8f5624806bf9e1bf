use num_complex::Complex64;

use super::ball::{merge_values, VALUE_TOLERANCE};
use super::linear::{linear_smallball, LinearMethod};
use super::{FiniteLaw, Result, SmallBallError, SmallBallResult, GAP_VOLUME_CAP};

/// `{g_0 + sum k_i g_i : K_i <= k_i <= K'_i}` in `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    offset: Vec<Complex64>,
    generators: Vec<Vec<Complex64>>,
    bounds: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapElement {
    pub coefficients: Vec<i64>,
    pub value: Vec<Complex64>,
}

impl Gap {
    pub fn new(offset: Vec<Complex64>, generators: Vec<Vec<Complex64>>, bounds: Vec<(i64, i64)>) -> Result<Self> {
        if generators.len() != bounds.len() {
            return Err(SmallBallError::Gap(format!(
                "{} generators but {} bound pairs",
                generators.len(),
                bounds.len()
            )));
        }
        if generators.iter().any(|g| g.len() != offset.len()) {
            return Err(SmallBallError::Gap(
                "generators must have the dimension of the offset".into(),
            ));
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| lo > hi) {
            return Err(SmallBallError::Gap(format!("empty range [{lo}, {hi}]")));
        }
        Ok(Self {
            offset,
            generators,
            bounds,
        })
    }

    /// `{sum k_i g_i : |k_i| <= K_i}`.
    pub fn symmetric(dim: usize, generators: Vec<Vec<Complex64>>, radii: &[i64]) -> Result<Self> {
        if radii.iter().any(|&k| k < 0) {
            return Err(SmallBallError::Gap("radii must be nonnegative".into()));
        }
        let bounds = radii.iter().map(|&k| (-k, k)).collect();
        Self::new(vec![Complex64::new(0.0, 0.0); dim], generators, bounds)
    }

    /// Rank-one symmetric progression `{k g : |k| <= radius}` in `C`.
    pub fn arithmetic(g: Complex64, radius: i64) -> Result<Self> {
        Self::symmetric(1, vec![vec![g]], &[radius])
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn offset(&self) -> &[Complex64] {
        &self.offset
    }

    pub fn generators(&self) -> &[Vec<Complex64>] {
        &self.generators
    }

    pub fn bounds(&self) -> &[(i64, i64)] {
        &self.bounds
    }

    pub fn is_symmetric(&self) -> bool {
        self.offset.iter().all(|z| *z == Complex64::new(0.0, 0.0)) && self.bounds.iter().all(|&(lo, hi)| lo == -hi)
    }

    /// `prod (K'_i - K_i + 1)`, saturating.
    pub fn volume(&self) -> u128 {
        self.bounds
            .iter()
            .try_fold(1u128, |acc, &(lo, hi)| {
                acc.checked_mul((hi as i128 - lo as i128 + 1) as u128)
            })
            .unwrap_or(u128::MAX)
    }

    fn check_cap(&self) -> Result<()> {
        let size = self.volume();
        if size > GAP_VOLUME_CAP {
            return Err(SmallBallError::Cap {
                what: "GAP enumeration",
                size,
                cap: GAP_VOLUME_CAP,
            });
        }
        Ok(())
    }

    fn value_of(&self, k: &[i64]) -> Vec<Complex64> {
        let mut v = self.offset.clone();
        for (g, &ki) in self.generators.iter().zip(k) {
            for (vj, gj) in v.iter_mut().zip(g) {
                *vj += gj * ki as f64;
            }
        }
        v
    }

    /// All elements with their coefficient tuples, in lexicographic order
    /// of the tuples.
    pub fn elements(&self) -> Result<Vec<GapElement>> {
        self.check_cap()?;
        let mut k: Vec<i64> = self.bounds.iter().map(|b| b.0).collect();
        let mut out = Vec::with_capacity(self.volume() as usize);
        loop {
            out.push(GapElement {
                value: self.value_of(&k),
                coefficients: k.clone(),
            });
            let mut pos = k.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                if k[pos] < self.bounds[pos].1 {
                    k[pos] += 1;
                    break;
                }
                k[pos] = self.bounds[pos].0;
            }
        }
    }

    /// Number of distinct element values.
    pub fn distinct_count(&self) -> Result<usize> {
        let elements = self.elements()?;
        if self.dim() == 1 {
            let points: Vec<(Complex64, u8)> = elements.iter().map(|e| (e.value[0], 0)).collect();
            let scale = points.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
            return Ok(merge_values(points, VALUE_TOLERANCE * (1.0 + scale) / 4.0).len());
        }
        let mut keys: Vec<Vec<(i64, i64)>> = elements
            .iter()
            .map(|e| {
                e.value
                    .iter()
                    .map(|z| {
                        (
                            (z.re / VALUE_TOLERANCE).round() as i64,
                            (z.im / VALUE_TOLERANCE).round() as i64,
                        )
                    })
                    .collect()
            })
            .collect();
        keys.sort();
        keys.dedup();
        Ok(keys.len())
    }

    /// `|Q| = Vol(Q)`, checked by enumeration.
    pub fn is_proper(&self) -> Result<bool> {
        Ok(self.distinct_count()? as u128 == self.volume())
    }

    /// The element closest to `x`, if within `delta`. Ties go to the
    /// lexicographically smallest coefficient tuple.
    pub fn membership(&self, x: &[Complex64], delta: f64) -> Result<Option<GapElement>> {
        if x.len() != self.dim() {
            return Err(SmallBallError::Gap(format!(
                "point has dimension {}, GAP has {}",
                x.len(),
                self.dim()
            )));
        }
        let mut best: Option<(f64, GapElement)> = None;
        for e in self.elements()? {
            let dist = e
                .value
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, e));
            }
        }
        Ok(best.and_then(|(d, e)| (d <= delta).then_some(e)))
    }

    /// `nQ`: bounds scaled by `n`.
    pub fn dilate(&self, n: i64) -> Result<Gap> {
        if !self.is_symmetric() {
            return Err(SmallBallError::NotSymmetric);
        }
        let bounds = self
            .bounds
            .iter()
            .map(|&(lo, hi)| Some((lo.checked_mul(n)?, hi.checked_mul(n)?)))
            .collect::<Option<Vec<_>>>()
            .ok_or(SmallBallError::Overflow)?;
        Gap::new(self.offset.clone(), self.generators.clone(), bounds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PigeonholeReport {
    /// `1 / |m Q|` with `m = n * max|x|`: the value set holding every sum.
    pub bound: f64,
    /// `1 / Vol(m Q)`.
    pub volume_bound: f64,
    pub dilation: i64,
    pub rho: SmallBallResult,
    pub verified: bool,
}

/// Pigeonhole lower bound for coefficients in a symmetric rank-`r` GAP in
/// `C`: every sum `sum a_i x_i` with integer `|x_i| <= M` lies in `nM Q`, so
/// some value carries probability at least `1/|nM Q|`.
pub fn pigeonhole_bound(q: &Gap, a: &[Complex64], law: &FiniteLaw) -> Result<PigeonholeReport> {
    if q.dim() != 1 {
        return Err(SmallBallError::Gap("pigeonhole bound needs a GAP in C".into()));
    }
    if !q.is_symmetric() {
        return Err(SmallBallError::NotSymmetric);
    }
    let mut reach = 0i64;
    for x in law.support() {
        if x.im != 0.0 || x.re.fract() != 0.0 || x.re.abs() > 1e6 {
            return Err(SmallBallError::Law("pigeonhole bound needs integer support".into()));
        }
        reach = reach.max(x.re.abs() as i64);
    }
    let scale = q.elements()?.iter().map(|e| e.value[0].norm()).fold(0.0, f64::max);
    for (index, &ai) in a.iter().enumerate() {
        if q.membership(&[ai], VALUE_TOLERANCE * (1.0 + scale))?.is_none() {
            return Err(SmallBallError::NotInGap { index });
        }
    }
    let dilation = (a.len() as i64).checked_mul(reach).ok_or(SmallBallError::Overflow)?;
    let dilated = q.dilate(dilation)?;
    let bound = 1.0 / dilated.distinct_count()? as f64;
    let rho = linear_smallball(a, law, 0.0, LinearMethod::default())?;
    Ok(PigeonholeReport {
        bound,
        volume_bound: 1.0 / dilated.volume() as f64,
        dilation,
        verified: rho.rho >= bound,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn elements_and_flags() {
        let q = Gap::arithmetic(c(1.0), 2).unwrap();
        let values: Vec<f64> = q.elements().unwrap().iter().map(|e| e.value[0].re).collect();
        assert_eq!(values, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(q.is_symmetric() && q.is_proper().unwrap());
        assert_eq!(q.volume(), 5);

        // 1 and 2 generate overlapping sums: improper
        let q2 = Gap::symmetric(1, vec![vec![c(1.0)], vec![c(2.0)]], &[1, 1]).unwrap();
        assert_eq!(q2.volume(), 9);
        assert!(!q2.is_proper().unwrap());

        let shifted = Gap::new(vec![c(1.0)], vec![vec![c(1.0)]], vec![(-1, 1)]).unwrap();
        assert!(!shifted.is_symmetric());
        assert!(matches!(shifted.dilate(2), Err(SmallBallError::NotSymmetric)));
        assert!(Gap::new(vec![c(0.0)], vec![vec![c(1.0)]], vec![(2, 1)]).is_err());
    }

    #[test]
    fn membership_examples() {
        let q = Gap::arithmetic(c(1.0), 2).unwrap();
        let hit = q.membership(&[c(1.4)], 0.5).unwrap().unwrap();
        assert_eq!(hit.coefficients, vec![1]);
        assert!(q.membership(&[c(2.6)], 0.5).unwrap().is_none());
        // equidistant from 0 and 1: lexicographically smaller tuple wins
        let tie = q.membership(&[c(0.5)], 0.5).unwrap().unwrap();
        assert_eq!(tie.coefficients, vec![0]);
    }

    #[test]
    fn dilation() {
        let q = Gap::arithmetic(c(1.0), 1).unwrap();
        let q3 = q.dilate(3).unwrap();
        assert_eq!(q3.bounds(), &[(-3, 3)]);
        assert_eq!(q3.generators(), q.generators());
        let two = Gap::symmetric(2, vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]], &[1, 2]).unwrap();
        assert_eq!(two.dilate(3).unwrap().volume(), 7 * 13);
        let big = q3.elements().unwrap();
        for e in q.elements().unwrap() {
            assert!(big.iter().any(|b| b.value == e.value));
        }
    }

    #[test]
    fn pigeonhole_examples() {
        let g = c(0.75);
        let q = Gap::arithmetic(g, 1).unwrap();
        let law = FiniteLaw::bernoulli();
        let rep = pigeonhole_bound(&q, &[g; 4], &law).unwrap();
        assert_eq!(rep.rho.rho_exact, Some(Ratio::new(6, 16)));
        assert_eq!(rep.bound, 1.0 / 9.0);
        assert!(rep.verified);

        let rep = pigeonhole_bound(&q, &[g], &law).unwrap();
        assert_eq!(rep.rho.rho, 0.5);
        assert_eq!(rep.bound, 1.0 / 3.0);

        let trivial = Gap::symmetric(1, vec![], &[]).unwrap();
        let rep = pigeonhole_bound(&trivial, &[c(0.0); 3], &law).unwrap();
        assert_eq!((rep.bound, rep.rho.rho), (1.0, 1.0));

        assert!(matches!(
            pigeonhole_bound(&q, &[c(0.5)], &law),
            Err(SmallBallError::NotInGap { index: 0 })
        ));
    }
}
