//! Largest mass a closed ball of radius beta can capture from a finite
//! weighted point set in the plane.
//!
//! A finite set of candidate centers suffices. On the line, an optimal
//! interval can be slid right until its left end hits a point, so windows
//! `[x_i, x_i + 2 beta]` are enough. In the plane, an optimal disc can be
//! translated until one point lies on its boundary and then rotated about
//! that point until a second one does (or nothing else is covered), so it
//! is enough to sweep, for every point `p`, the circle of centers at
//! distance beta from `p`.

use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::Zero;

/// Weight type for ball sweeps: exact counts or probabilities.
pub trait Mass: Copy + Zero + PartialOrd + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> {}

impl<T: Copy + Zero + PartialOrd + std::ops::Add<Output = T> + std::ops::Sub<Output = T>> Mass for T {}

/// Relative slack used when merging values and testing ball membership.
pub const VALUE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallOptimum<W> {
    pub mass: W,
    pub center: Complex64,
}

/// Absolute slack for a value set.
pub fn tolerance_for(points: &[(Complex64, impl Copy)]) -> f64 {
    let scale = points.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
    VALUE_TOLERANCE * (1.0 + scale)
}

/// Merges values that agree to within the quantization step `q`.
pub fn merge_values<W: Mass>(points: Vec<(Complex64, W)>, q: f64) -> Vec<(Complex64, W)> {
    let mut index: HashMap<(i64, i64), usize> = HashMap::with_capacity(points.len());
    let mut out: Vec<(Complex64, W)> = Vec::new();
    for (z, w) in points {
        let key = ((z.re / q).round() as i64, (z.im / q).round() as i64);
        match index.get(&key) {
            Some(&k) => out[k].1 = out[k].1 + w,
            None => {
                index.insert(key, out.len());
                out.push((z, w));
            }
        }
    }
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// `sup_c sum { w : |z - c| <= beta }`, with values merged and membership
/// relaxed by the tolerance of the value set.
pub fn max_ball_mass<W: Mass>(points: Vec<(Complex64, W)>, beta: f64) -> BallOptimum<W> {
    if points.is_empty() {
        return BallOptimum {
            mass: W::zero(),
            center: Complex64::new(0.0, 0.0),
        };
    }
    let tol = tolerance_for(&points);
    let merged = merge_values(points, tol / 4.0);
    let radius = beta + tol;
    if merged.iter().all(|p| p.0.im.abs() <= tol) {
        line_sweep(&merged, radius)
    } else if beta <= tol {
        heaviest(&merged)
    } else {
        circle_sweep(&merged, radius)
    }
}

fn heaviest<W: Mass>(points: &[(Complex64, W)]) -> BallOptimum<W> {
    let mut best = BallOptimum {
        mass: points[0].1,
        center: points[0].0,
    };
    for &(z, w) in &points[1..] {
        if w > best.mass {
            best = BallOptimum { mass: w, center: z };
        }
    }
    best
}

/// Sliding window over sorted real values.
fn line_sweep<W: Mass>(points: &[(Complex64, W)], radius: f64) -> BallOptimum<W> {
    let xs: Vec<f64> = points.iter().map(|p| p.0.re).collect();
    let mut best = BallOptimum {
        mass: W::zero(),
        center: Complex64::new(xs[0], 0.0),
    };
    let mut hi = 0;
    let mut window = W::zero();
    for lo in 0..xs.len() {
        while hi < xs.len() && xs[hi] - xs[lo] <= 2.0 * radius {
            window = window + points[hi].1;
            hi += 1;
        }
        if window > best.mass {
            best = BallOptimum {
                mass: window,
                center: Complex64::new(0.5 * (xs[lo] + xs[hi - 1]), 0.0),
            };
        }
        window = window - points[lo].1;
    }
    best
}

/// Angular sweep of centers on the circle of radius `radius` about each point.
fn circle_sweep<W: Mass>(points: &[(Complex64, W)], radius: f64) -> BallOptimum<W> {
    use std::f64::consts::PI;
    let mut best = heaviest(points);
    // Bucket points on a grid of cell 2*radius so only neighbors are paired.
    let cell = 2.0 * radius;
    let key = |z: Complex64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p.0)).or_default().push(i);
    }
    let mut events: Vec<(f64, bool, W)> = Vec::new();
    for (i, &(p, wp)) in points.iter().enumerate() {
        events.clear();
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(kx + dx, ky + dy)) else {
                    continue;
                };
                for &j in bucket {
                    if j == i {
                        continue;
                    }
                    let (q, wq) = points[j];
                    let dist = (q - p).norm();
                    if dist > 2.0 * radius {
                        continue;
                    }
                    let phi = (q - p).arg();
                    let half = (dist / (2.0 * radius)).min(1.0).acos();
                    let (mut start, end) = (phi - half, phi + half);
                    if start < -PI {
                        start += 2.0 * PI;
                    }
                    // Arcs are unrolled over two turns so one linear pass
                    // sees every wrap-around overlap.
                    for shift in [0.0, 2.0 * PI] {
                        let s = start + shift;
                        let e = s + (end - (phi - half));
                        events.push((s, true, wq));
                        events.push((e, false, wq));
                    }
                }
            }
        }
        if events.is_empty() {
            continue;
        }
        // opens before closes at equal angles: closed arcs
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut current = wp;
        for &(angle, open, w) in events.iter() {
            if open {
                current = current + w;
                if current > best.mass {
                    best = BallOptimum {
                        mass: current,
                        center: p + Complex64::from_polar(radius, angle),
                    };
                }
            } else {
                current = current - w;
            }
        }
    }
    best
}
