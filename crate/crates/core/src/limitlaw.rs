//! Limiting objects for the Hermitized circular law: the Stieltjes branch
//! `m(z, w)` of
//!
//!   m^3 + 2w m^2 + (w^2 - |z|^2 + 1) m + w = 0,
//!
//! the density `rho_z` and CDF of `nu_z` by Stieltjes inversion, `g(s, t)`
//! and the radial CDF of the uniform disk.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("spectral parameter must lie in the upper half-plane, got {0}")]
    LowerHalfPlane(Complex64),
    #[error("branch ambiguity near w = {w}: roots {roots:?} cannot be separated at step {step:e}")]
    BranchAmbiguity {
        w: Complex64,
        roots: [Complex64; 3],
        step: f64,
    },
    #[error("cubic residual {residual:e} exceeds certificate {bound:e} at w = {w}")]
    Residual { w: Complex64, residual: f64, bound: f64 },
    #[error("quadrature did not converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, LimitError>;

/// Height of the starting point `iT`, where `m ~ -1/w` singles out the branch.
pub const CONTINUATION_START: f64 = 1e4;
/// Offset above the real axis used for Stieltjes inversion.
pub const INVERSION_OFFSET: f64 = 1e-6;
/// Densities below this are reported as zero.
pub const DENSITY_FLOOR: f64 = 1e-9;

const RESIDUAL_CERTIFICATE: f64 = 1e-12;
const MIN_STEP: f64 = 1e-12;
const TAIL_TOLERANCE: f64 = 1e-8;
const QUAD_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicSolution {
    pub z: Complex64,
    pub w: Complex64,
    pub m: Complex64,
    pub residual: f64,
    pub branch_path_points: usize,
}

/// Coefficients `(a, b, c)` of the monic cubic `m^3 + a m^2 + b m + c`.
#[inline]
fn coefficients(z2: f64, w: Complex64) -> (Complex64, Complex64, Complex64) {
    (2.0 * w, w * w + (1.0 - z2), w)
}

#[inline]
fn eval(coef: (Complex64, Complex64, Complex64), m: Complex64) -> (Complex64, Complex64) {
    let (a, b, c) = coef;
    let f = ((m + a) * m + b) * m + c;
    let df = (3.0 * m + 2.0 * a) * m + b;
    (f, df)
}

/// Residual of the cubic at `m`.
pub fn cubic_residual(z: Complex64, w: Complex64, m: Complex64) -> f64 {
    eval(coefficients(z.norm_sqr(), w), m).0.norm()
}

/// Left side of the fixed-point form `m + (m + w)/((m + w)^2 - |z|^2)`.
pub fn fixed_point_defect(z: Complex64, w: Complex64, m: Complex64) -> Complex64 {
    let s = m + w;
    m + s / (s * s - z.norm_sqr())
}

fn newton(coef: (Complex64, Complex64, Complex64), mut m: Complex64, iterations: usize) -> Option<Complex64> {
    for _ in 0..iterations {
        let (f, df) = eval(coef, m);
        if df.norm() == 0.0 || !df.is_finite() {
            return None;
        }
        let delta = f / df;
        m -= delta;
        if !m.is_finite() {
            return None;
        }
        if delta.norm() <= 4.0 * f64::EPSILON * (1.0 + m.norm()) {
            return Some(m);
        }
    }
    let (f, _) = eval(coef, m);
    (f.norm() <= RESIDUAL_CERTIFICATE * (1.0 + m.norm()).powi(3)).then_some(m)
}

/// All three roots, given one of them: the other two come from the
/// deflated quadratic and are polished on the full cubic.
fn all_roots(coef: (Complex64, Complex64, Complex64), r: Complex64) -> [Complex64; 3] {
    let (a, b, _) = coef;
    let p = a + r;
    let q = b + r * p;
    let disc = (p * p - 4.0 * q).sqrt();
    // stable quadratic formula
    let big = if (p.conj() * disc).re >= 0.0 {
        -(p + disc) * 0.5
    } else {
        -(p - disc) * 0.5
    };
    let other = if big.norm() > 0.0 {
        q / big
    } else {
        Complex64::new(0.0, 0.0)
    };
    let polish = |x: Complex64| newton(coef, x, 3).unwrap_or(x);
    [r, polish(big), polish(other)]
}

/// One leg of the continuation path, `w(s)` for `s` in `[0, 1]`.
fn track_leg(
    z2: f64,
    w_of: &dyn Fn(f64) -> Complex64,
    mut m: Complex64,
    initial_step: f64,
    points: &mut usize,
) -> Result<Complex64> {
    let mut s = 0.0;
    let mut h = initial_step;
    let mut w = w_of(0.0);
    while s < 1.0 {
        let s_next = (s + h).min(1.0);
        let w_next = w_of(s_next);
        let coef = coefficients(z2, w_next);
        // Euler predictor, dm/dw = -(dF/dw)/(dF/dm)
        let (_, df) = eval(coefficients(z2, w), m);
        let dfdw = 2.0 * m * m + 2.0 * w * m + 1.0;
        let predicted = if df.norm() > 0.0 {
            m - dfdw / df * (w_next - w)
        } else {
            m
        };
        let accepted = newton(coef, predicted, 40).and_then(|root| {
            let roots = all_roots(coef, root);
            let mut dist: Vec<(f64, Complex64)> = roots.iter().map(|&r| ((r - predicted).norm(), r)).collect();
            dist.sort_by(|x, y| x.0.total_cmp(&y.0));
            let separated = dist[0].0 <= 0.25 * dist[1].0;
            let continuous = (dist[0].1 - m).norm() <= 0.25 * (dist[1].1 - m).norm();
            (separated && continuous).then_some(dist[0].1)
        });
        match accepted {
            Some(root) => {
                m = root;
                w = w_next;
                s = s_next;
                *points += 1;
                h = (h * 1.5).min(0.25);
            }
            None => {
                h *= 0.5;
                if h < MIN_STEP {
                    return Err(LimitError::BranchAmbiguity {
                        w: w_next,
                        roots: all_roots(coef, predicted),
                        step: h,
                    });
                }
            }
        }
    }
    Ok(m)
}

/// The root of the cubic with `Im m > 0` that continues the `-1/w`
/// asymptote from `w = iT`: first horizontally to `u + iT`, then along the
/// vertical line with geometrically varying height.
pub fn solve_cubic_m(z: Complex64, w: Complex64) -> Result<CubicSolution> {
    if !(w.im > 0.0) || !w.is_finite() {
        return Err(LimitError::LowerHalfPlane(w));
    }
    let z2 = z.norm_sqr();
    let t = CONTINUATION_START.max(w.im);
    let start = Complex64::new(0.0, t);
    let mut points = 1;
    let m0 = newton(coefficients(z2, start), -1.0 / start, 40).ok_or(LimitError::BranchAmbiguity {
        w: start,
        roots: [-1.0 / start; 3],
        step: 0.0,
    })?;
    let u = w.re;
    let m1 = track_leg(z2, &|s| Complex64::new(u * s, t), m0, 0.25, &mut points)?;
    let (log_t, log_v) = (t.ln(), w.im.ln());
    let m = if log_t == log_v {
        m1
    } else {
        track_leg(
            z2,
            &|s| Complex64::new(u, (log_t + (log_v - log_t) * s).exp()),
            m1,
            0.02,
            &mut points,
        )?
    };
    let residual = cubic_residual(z, w, m);
    let bound = RESIDUAL_CERTIFICATE * (1.0 + w.norm()).powi(3);
    if residual > bound {
        return Err(LimitError::Residual { w, residual, bound });
    }
    if !(m.im > 0.0) {
        return Err(LimitError::BranchAmbiguity {
            w,
            roots: all_roots(coefficients(z2, w), m),
            step: 0.0,
        });
    }
    Ok(CubicSolution {
        z,
        w,
        m,
        residual,
        branch_path_points: points,
    })
}

/// `Im m(z, x + i v0) / pi`, floored to zero below `DENSITY_FLOOR`.
pub fn density_rho(z: Complex64, x: f64) -> Result<f64> {
    let m = solve_cubic_m(z, Complex64::new(x, INVERSION_OFFSET))?.m;
    let rho = m.im / std::f64::consts::PI;
    Ok(if rho < DENSITY_FLOOR { 0.0 } else { rho })
}

/// Sampled density of `nu_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitDensity {
    pub z: Complex64,
    pub samples: Vec<(f64, f64)>,
    /// `beta / 2`; the density is integrated over `[-beta/2, beta/2]`.
    pub half_width: f64,
}

pub fn limit_density(z: Complex64, xs: &[f64]) -> Result<LimitDensity> {
    let samples = xs
        .iter()
        .map(|&x| density_rho(z, x).map(|r| (x, r)))
        .collect::<Result<_>>()?;
    Ok(LimitDensity {
        z,
        samples,
        half_width: support_half_width(z)?,
    })
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

/// Adaptive Gauss-Kronrod with a global absolute tolerance.
fn integrate(f: &mut dyn FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mut pending = vec![(lo, hi, 0usize)];
    let mut total = 0.0;
    let width = hi - lo;
    while let Some((a, b, depth)) = pending.pop() {
        let (value, err) = gk15(f, a, b)?;
        if err <= tol * (b - a) / width || b - a <= 1e-13 * width.max(1.0) {
            total += value;
        } else if depth >= 60 {
            return Err(LimitError::Quadrature { lo: a, hi: b });
        } else {
            let mid = 0.5 * (a + b);
            pending.push((mid, b, depth + 1));
            pending.push((a, mid, depth + 1));
        }
    }
    Ok(total)
}

fn mass(z: Complex64, lo: f64, hi: f64) -> Result<f64> {
    integrate(&mut |x| density_rho(z, x), lo, hi, QUAD_TOLERANCE)
}

/// `beta / 2`, doubled from 4 until the added tail mass is below 1e-8.
pub fn support_half_width(z: Complex64) -> Result<f64> {
    let mut half = 4.0f64.max(2.0 * (1.0 + z.norm()));
    loop {
        let tail = mass(z, -2.0 * half, -half)? + mass(z, half, 2.0 * half)?;
        if tail < TAIL_TOLERANCE || half > 1e6 {
            return Ok(half);
        }
        half *= 2.0;
    }
}

/// CDF of `nu_z` with the support bracket and half-mass cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuCdf {
    pub z: Complex64,
    /// `beta / 2`.
    pub half_width: f64,
    /// Mass on `[-beta/2, 0]`.
    half_mass: f64,
}

impl NuCdf {
    pub fn new(z: Complex64) -> Result<Self> {
        let half_width = support_half_width(z)?;
        Ok(Self {
            z,
            half_width,
            half_mass: mass(z, -half_width, 0.0)?,
        })
    }

    /// Mass captured on `[-beta/2, beta/2]`.
    pub fn total_mass(&self) -> f64 {
        2.0 * self.half_mass
    }

    /// `int_{-beta/2}^{x} rho_z`, normalized by the captured mass. The
    /// density is even, so the shorter side of `x` is integrated.
    pub fn value(&self, x: f64) -> Result<f64> {
        let half = self.half_width;
        if x <= -half {
            return Ok(0.0);
        }
        let x = x.min(half);
        let value = if x <= 0.0 {
            mass(self.z, -half, x)?
        } else {
            self.total_mass() - mass(self.z, x, half)?
        };
        Ok((value / self.total_mass()).clamp(0.0, 1.0))
    }
}

/// `F_z(x)`; see [`NuCdf`] for repeated evaluation.
pub fn nu_z_cdf(z: Complex64, x: f64) -> Result<f64> {
    NuCdf::new(z)?.value(x)
}

/// `2s/(s^2 + t^2)` outside the unit disk, `2s` inside.
pub fn g_limit(s: f64, t: f64) -> f64 {
    let r2 = s * s + t * t;
    if r2 > 1.0 {
        2.0 * s / r2
    } else {
        2.0 * s
    }
}

/// `min(r, 1)^2`.
pub fn circular_radial_cdf(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    r * r
}

/// Closed-form semicircle CDF on `[-2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    let x = x.clamp(-2.0, 2.0);
    0.5 + (x * (4.0 - x * x).sqrt() / 4.0 + (x / 2.0).asin()) / std::f64::consts::PI
}
