//! Experiment drivers. Trials are keyed by `(n, sample_index)` and fan out
//! over the rayon pool; results are collected in index order.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use rmlab_core::ensembles::{low_rank_perturbation, sample_c0_matrix, BlockEnsembleSpec, PerturbationSpec};
use rmlab_core::limitlaw::{density_rho, fixed_point_defect, solve_cubic_m, support_half_width};
use rmlab_core::linalg::{complex_eigen, singular_values};
use rmlab_core::rng::derive_seed;
use rmlab_core::spectral::{
    kolmogorov_distance, levy_distance, stieltjes_from_singular_values, symmetrized_singular_measure, AnalyticCdf,
    StepCdf,
};
use rmlab_core::truncation::{truncate_matrix, TruncationParams};
use rmlab_core::{Complex64, ComplexMatrix};
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, PerturbationKind};
use crate::output::{write_eigenvalues, write_json, write_metrics, write_sigma, EigenRow, MetricRow, SigmaRow};
use crate::LabError;

/// Radius of the disc used for the near-origin eigenvalue fraction.
pub const NEAR_ORIGIN_RADIUS: f64 = 0.3;
/// Grid points used to tabulate the CDF of `nu_z`.
pub const NU_TABLE_POINTS: usize = 4001;

const PERTURBATION_TAG: u64 = 0x5045_5254;

/// Seed of trial `index` at size `n`.
pub fn trial_seed(seed: u64, n: usize, index: usize) -> u64 {
    derive_seed(seed, &[n as u64, index as u64])
}

fn mean_ci(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, 1.96 * (var / k).sqrt())
}

/// Eigenvalues of `X / sqrt(n)` for each trial.
pub fn normalized_spectra(
    spec: &BlockEnsembleSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>, LabError> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let x = sample_c0_matrix(spec, n, trial_seed(seed, n, s))?;
            let mut ev = complex_eigen(&x)?.values;
            ev.iter_mut().for_each(|z| *z *= scale);
            Ok(ev)
        })
        .collect()
}

/// `sup_r |F(r) - min(r, 1)^2|` for the pooled moduli.
pub fn radial_gap(spectra: &[Vec<Complex64>]) -> Result<f64, LabError> {
    let moduli: Vec<f64> = spectra.iter().flatten().map(|z| z.norm()).collect();
    let f = StepCdf::from_samples(&moduli)?;
    Ok(kolmogorov_distance(&f, &AnalyticCdf::unit_disk_radial()))
}

pub fn near_origin_fraction(spectra: &[Vec<Complex64>], radius: f64) -> f64 {
    let total: usize = spectra.iter().map(Vec::len).sum();
    let inside = spectra.iter().flatten().filter(|z| z.norm() <= radius).count();
    inside as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsvReport {
    pub n: usize,
    pub a_exponent: f64,
    /// `n^(-A)`.
    pub threshold: f64,
    pub sigma_min: Vec<f64>,
    /// Trials with `sigma_min <= threshold`.
    pub count: usize,
}

/// The deterministic rank-one perturbation with a single entry of size `n`.
pub fn rank_one_perturbation(d: usize, n: usize, seed: u64) -> Result<ComplexMatrix, LabError> {
    let p = PerturbationSpec {
        rank_exponent: 1.0,
        entry_bound_exponent: 1.0,
        hs_budget: 1.0,
    };
    Ok(low_rank_perturbation(
        &p,
        d,
        n,
        derive_seed(seed, &[PERTURBATION_TAG, n as u64]),
    )?)
}

/// `sigma_min(X_n + N_n)` over `trials` samples, unnormalized.
pub fn lsv_experiment(
    spec: &BlockEnsembleSpec,
    n: usize,
    a_exponent: f64,
    trials: usize,
    seed: u64,
    perturbation: PerturbationKind,
) -> Result<LsvReport, LabError> {
    let shift = match perturbation {
        PerturbationKind::None => None,
        PerturbationKind::RankOne => Some(rank_one_perturbation(spec.d(), n, seed)?),
    };
    let sigma_min: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|s| {
            let mut x = sample_c0_matrix(spec, n, trial_seed(seed, n, s))?;
            if let Some(nm) = &shift {
                x = x.add(nm)?;
            }
            Ok(singular_values(&x)?.smallest())
        })
        .collect::<Result<_, LabError>>()?;
    let threshold = (n as f64).powf(-a_exponent);
    Ok(LsvReport {
        n,
        a_exponent,
        threshold,
        count: sigma_min.iter().filter(|&&s| s <= threshold).count(),
        sigma_min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StieltjesRow {
    pub n: usize,
    pub z: [f64; 2],
    pub w: [f64; 2],
    /// `m(z, w)` from the cubic.
    pub limit: [f64; 2],
    pub mean_abs_deviation: f64,
    pub ci_halfwidth: f64,
    /// Mean of `|m_hat + (m_hat + w)/((m_hat + w)^2 - |z|^2)|`.
    pub mean_cubic_defect: f64,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// `|m_hat_n(z, w) - m(z, w)|` averaged over `samples` trials for each size.
pub fn stieltjes_compare(
    spec: &BlockEnsembleSpec,
    sizes: &[usize],
    z: Complex64,
    w: Complex64,
    samples: usize,
    seed: u64,
) -> Result<Vec<StieltjesRow>, LabError> {
    Ok(stieltjes_grid(spec, sizes, &[z], &[w], samples, seed)?.remove(0))
}

/// One row list per `(z, w)` pair, `z`-major; singular values are shared
/// across the `w` grid.
fn stieltjes_grid(
    spec: &BlockEnsembleSpec,
    sizes: &[usize],
    zs: &[Complex64],
    ws: &[Complex64],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<StieltjesRow>>, LabError> {
    let mut limits = Vec::with_capacity(zs.len() * ws.len());
    for &z in zs {
        for &w in ws {
            limits.push(solve_cubic_m(z, w)?.m);
        }
    }
    let mut out = vec![Vec::with_capacity(sizes.len()); limits.len()];
    for &n in sizes {
        let scale = 1.0 / (n as f64).sqrt();
        // per trial: m_hat for every (z, w)
        let m_hats: Vec<Vec<Complex64>> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let x = sample_c0_matrix(spec, n, trial_seed(seed, n, s))?.scale_real(scale);
                let mut row = Vec::with_capacity(limits.len());
                for &z in zs {
                    let sv = singular_values(&x.shifted(z))?.values;
                    for &w in ws {
                        row.push(stieltjes_from_singular_values(&sv, w));
                    }
                }
                Ok(row)
            })
            .collect::<Result<_, LabError>>()?;
        for (k, &m) in limits.iter().enumerate() {
            let (z, w) = (zs[k / ws.len()], ws[k % ws.len()]);
            let devs: Vec<f64> = m_hats.iter().map(|r| (r[k] - m).norm()).collect();
            let defects: Vec<f64> = m_hats.iter().map(|r| fixed_point_defect(z, w, r[k]).norm()).collect();
            let (mean, ci) = mean_ci(&devs);
            out[k].push(StieltjesRow {
                n,
                z: pair(z),
                w: pair(w),
                limit: pair(m),
                mean_abs_deviation: mean,
                ci_halfwidth: ci,
                mean_cubic_defect: mean_ci(&defects).0,
            });
        }
    }
    Ok(out)
}

/// CDF of `nu_z` from the density on a uniform grid over its support
/// bracket, integrated by the trapezoid rule and interpolated linearly.
pub fn tabulated_nu_cdf(z: Complex64) -> Result<AnalyticCdf, LabError> {
    let half = support_half_width(z)?;
    let h = 2.0 * half / (NU_TABLE_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..NU_TABLE_POINTS).map(|i| -half + i as f64 * h).collect();
    let rho: Vec<f64> = xs.par_iter().map(|&x| density_rho(z, x)).collect::<Result<_, _>>()?;
    let mut cdf = vec![0.0; NU_TABLE_POINTS];
    for i in 1..NU_TABLE_POINTS {
        cdf[i] = cdf[i - 1] + 0.5 * h * (rho[i - 1] + rho[i]);
    }
    let total = cdf[NU_TABLE_POINTS - 1];
    cdf.iter_mut().for_each(|c| *c /= total);
    Ok(AnalyticCdf::new(-half, half, move |x| {
        let t = ((x + half) / h).clamp(0.0, (NU_TABLE_POINTS - 1) as f64);
        let i = (t.floor() as usize).min(NU_TABLE_POINTS - 2);
        let frac = t - i as f64;
        cdf[i] * (1.0 - frac) + cdf[i + 1] * frac
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyRow {
    pub n: usize,
    pub z: [f64; 2],
    /// Mean Lévy distance from the symmetrized singular law of
    /// `X/sqrt(n) - z` to `nu_z`.
    pub mean_levy: f64,
    pub ci_halfwidth: f64,
    /// Mean Lévy distance between the laws for `X` and its truncation.
    pub truncation_levy: Option<(f64, f64)>,
}

/// Lévy distances to the limit law, and to the truncated ensemble when a
/// truncation exponent is given, for every `z` and size.
pub fn rate_levy(
    spec: &BlockEnsembleSpec,
    sizes: &[usize],
    zs: &[Complex64],
    samples: usize,
    seed: u64,
    delta: Option<f64>,
) -> Result<Vec<Vec<LevyRow>>, LabError> {
    let mut out = Vec::with_capacity(zs.len());
    for &z in zs {
        let reference = tabulated_nu_cdf(z)?;
        let mut rows = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let norm = (n as f64).sqrt();
            let pairs: Vec<(f64, Option<f64>)> = (0..samples)
                .into_par_iter()
                .map(|s| {
                    let x = sample_c0_matrix(spec, n, trial_seed(seed, n, s))?;
                    let f = symmetrized_singular_measure(&x, z, norm)?.cdf();
                    let to_limit = levy_distance(&f, &reference);
                    let to_truncated = match delta {
                        Some(delta) => {
                            let p = TruncationParams::for_spec(spec, delta, n);
                            let xh = truncate_matrix(&x, spec, &p)?;
                            let g = symmetrized_singular_measure(&xh, z, norm)?.cdf();
                            Some(levy_distance(&f, &g))
                        }
                        None => None,
                    };
                    Ok((to_limit, to_truncated))
                })
                .collect::<Result<_, LabError>>()?;
            let (mean, ci) = mean_ci(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let truncation_levy = delta.map(|_| mean_ci(&pairs.iter().map(|p| p.1.unwrap()).collect::<Vec<_>>()));
            rows.push(LevyRow {
                n,
                z: pair(z),
                mean_levy: mean,
                ci_halfwidth: ci,
                truncation_levy,
            });
        }
        out.push(rows);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub library_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub metrics: Vec<MetricRow>,
    pub assertions: Vec<AssertionOutcome>,
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

struct Collected {
    metrics: Vec<MetricRow>,
    assertions: Vec<AssertionOutcome>,
    files: Vec<PathBuf>,
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Runs the configured experiment, writes its files into the output
/// directory and returns the report that `summary.json` records.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, LabError> {
    config.validate()?;
    let started = Instant::now();
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| LabError::Io {
        path: dir.clone(),
        source,
    })?;
    let spec = config.ensemble.build()?;
    let name = config.experiment.name();
    let row = |n: usize, metric: String, value: f64, ci: f64| MetricRow {
        experiment: name.to_string(),
        n,
        metric_name: metric,
        value,
        ci_halfwidth: ci,
        seed: config.seed,
    };
    let mut c = Collected {
        metrics: Vec::new(),
        assertions: Vec::new(),
        files: Vec::new(),
    };
    match config.experiment {
        ExperimentKind::CircularLaw => {
            let mut eigen_rows = Vec::new();
            for &n in &config.sizes {
                let spectra = normalized_spectra(&spec, n, config.samples, config.seed)?;
                for (s, ev) in spectra.iter().enumerate() {
                    eigen_rows.extend(ev.iter().map(|z| EigenRow {
                        sample_index: s,
                        n,
                        re: z.re,
                        im: z.im,
                    }));
                }
                let total = spectra.iter().map(Vec::len).sum::<usize>() as f64;
                let gap = radial_gap(&spectra)?;
                let near = near_origin_fraction(&spectra, NEAR_ORIGIN_RADIUS);
                let max_modulus = spectra.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
                c.metrics
                    .push(row(n, "radial_kolmogorov".into(), gap, 1.36 / total.sqrt()));
                c.metrics.push(row(
                    n,
                    "near_origin_fraction".into(),
                    near,
                    1.96 * (near * (1.0 - near) / total).sqrt(),
                ));
                c.metrics.push(row(n, "max_modulus".into(), max_modulus, 0.0));
                if let Some(max) = config.assertions.radial_gap_max {
                    c.assertions.push(AssertionOutcome {
                        name: format!("radial_gap_max[n={n}]"),
                        passed: gap <= max,
                        detail: format!("radial Kolmogorov gap {gap:.6} vs limit {max}"),
                    });
                }
            }
            let path = dir.join("eigenvalues.csv");
            write_eigenvalues(&path, &eigen_rows)?;
            c.files.push(path);
        }
        ExperimentKind::Lsv => {
            let lsv = config.lsv.expect("validated");
            let mut sigma_rows = Vec::new();
            for &n in &config.sizes {
                let rep = lsv_experiment(&spec, n, lsv.a_exponent, config.samples, config.seed, lsv.perturbation)?;
                sigma_rows.extend(rep.sigma_min.iter().enumerate().map(|(s, &v)| SigmaRow {
                    sample_index: s,
                    n,
                    sigma_min: v,
                }));
                let smallest = rep.sigma_min.iter().copied().fold(f64::INFINITY, f64::min);
                c.metrics.push(row(n, "tail_count".into(), rep.count as f64, 0.0));
                c.metrics.push(row(n, "tail_threshold".into(), rep.threshold, 0.0));
                c.metrics.push(row(n, "min_sigma_min".into(), smallest, 0.0));
                let (mean, ci) = mean_ci(&rep.sigma_min);
                c.metrics.push(row(n, "mean_sigma_min".into(), mean, ci));
                if let Some(max) = config.assertions.lsv_max_count {
                    c.assertions.push(AssertionOutcome {
                        name: format!("lsv_max_count[n={n}]"),
                        passed: rep.count <= max,
                        detail: format!(
                            "{} of {} trials at or below n^-{}",
                            rep.count, config.samples, lsv.a_exponent
                        ),
                    });
                }
            }
            let path = dir.join("sigma_min.csv");
            write_sigma(&path, &sigma_rows)?;
            c.files.push(path);
        }
        ExperimentKind::StieltjesCompare => {
            let zs = config.grid.z_points();
            let ws = config.grid.w_points();
            let table = stieltjes_grid(&spec, &config.sizes, &zs, &ws, config.samples, config.seed)?;
            for (k, rows) in table.iter().enumerate() {
                for r in rows {
                    c.metrics.push(row(
                        r.n,
                        format!("abs_deviation[{k}]"),
                        r.mean_abs_deviation,
                        r.ci_halfwidth,
                    ));
                    c.metrics
                        .push(row(r.n, format!("cubic_defect[{k}]"), r.mean_cubic_defect, 0.0));
                }
                let devs: Vec<f64> = rows.iter().map(|r| r.mean_abs_deviation).collect();
                let label = format!("z={:?}, w={:?}", rows[0].z, rows[0].w);
                if config.assertions.deviation_decreasing == Some(true) {
                    c.assertions.push(AssertionOutcome {
                        name: format!("deviation_decreasing[{k}]"),
                        passed: strictly_decreasing(&devs),
                        detail: format!("{label}: {devs:?}"),
                    });
                }
                if let Some(max) = config.assertions.deviation_final_max {
                    let last = *devs.last().expect("sizes nonempty");
                    c.assertions.push(AssertionOutcome {
                        name: format!("deviation_final_max[{k}]"),
                        passed: last <= max,
                        detail: format!("{label}: {last:.6} vs limit {max}"),
                    });
                }
            }
            let path = dir.join("stieltjes.json");
            write_json(&path, &table)?;
            c.files.push(path);
        }
        ExperimentKind::RateLevy => {
            let zs = config.grid.z_points();
            let delta = config.truncation.map(|t| t.delta);
            let table = rate_levy(&spec, &config.sizes, &zs, config.samples, config.seed, delta)?;
            for (k, rows) in table.iter().enumerate() {
                for r in rows {
                    c.metrics
                        .push(row(r.n, format!("levy_nu[{k}]"), r.mean_levy, r.ci_halfwidth));
                    if let Some((m, ci)) = r.truncation_levy {
                        c.metrics.push(row(r.n, format!("levy_truncation[{k}]"), m, ci));
                    }
                }
                if config.assertions.levy_decreasing == Some(true) {
                    let values: Vec<f64> = rows.iter().map(|r| r.mean_levy).collect();
                    c.assertions.push(AssertionOutcome {
                        name: format!("levy_decreasing[{k}]"),
                        passed: strictly_decreasing(&values),
                        detail: format!("z={:?}: {values:?}", rows[0].z),
                    });
                }
            }
            let path = dir.join("levy.json");
            write_json(&path, &table)?;
            c.files.push(path);
        }
    }
    c.metrics.sort_by_key(|m| m.n);
    let metrics_path = dir.join("metrics.csv");
    write_metrics(&metrics_path, &c.metrics)?;
    c.files.push(metrics_path);
    let summary_path = dir.join("summary.json");
    c.files.push(summary_path.clone());
    let report = RunReport {
        experiment: config.experiment,
        library_version: rmlab_core::VERSION.to_string(),
        seed: config.seed,
        config: config.clone(),
        passed: c.assertions.iter().all(|a| a.passed),
        metrics: c.metrics,
        assertions: c.assertions,
        files: c.files,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&summary_path, &report)?;
    Ok(report)
}
