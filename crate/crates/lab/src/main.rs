use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rmlab::config::{
    AssertionConfig, AtomName, EnsembleConfig, GridConfig, LsvConfig, ModeConfig, PerturbationKind, TruncationConfig,
};
use rmlab::output::write_json;
use rmlab::{run_experiment, ExperimentConfig, ExperimentKind, LabError};
use rmlab_core::ensembles::{covariance_check, sample_c0_matrix};
use rmlab_core::limitlaw::{density_rho, solve_cubic_m};
use rmlab_core::smallball::{
    decoupling_check, gap_integer_relation, linear_smallball, multilinear_smallball, CoefficientArray, FiniteLaw, Gap,
    LinearMethod, SmallBallResult,
};
use rmlab_core::truncation::{truncation_bound_report, TruncationParams};
use rmlab_core::Complex64;
use serde_json::{json, Value};

// Aliases keep clap from treating these lists as repeated arguments.
type Points = Vec<Complex64>;
type Factors = Vec<Vec<Complex64>>;
type IntegerRows = Vec<Vec<i64>>;

const WORKERS_ENV: &str = "RMLAB_WORKERS";

#[derive(Parser)]
#[command(name = "rmlab", version, about = "Block random matrix experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags below override its seed and output directory.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args, Clone)]
struct EnsembleArgs {
    #[arg(long, value_enum, default_value = "independent")]
    mode: ModeConfig,
    #[arg(long, value_enum, default_value = "gaussian-complex")]
    atom: AtomName,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Atom support for `--atom discrete`, comma separated complex numbers.
    #[arg(long, value_parser = parse_complex_list)]
    support: Option<Points>,
    /// Probabilities matching `--support`.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

impl EnsembleArgs {
    fn config(&self) -> EnsembleConfig {
        let mut e = EnsembleConfig::new(self.mode, self.d, self.atom);
        e.support = self.support.as_ref().map(|s| s.iter().map(|z| [z.re, z.im]).collect());
        e.probs = self.probs.clone();
        e.eta = self.eta;
        e
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Draw block matrices and write their entries with a covariance check.
    EnsembleSample {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        covariance_trials: usize,
    },
    /// Eigenvalues of X/sqrt(n) against the uniform law on the disk.
    RadialTest {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        max_gap: Option<f64>,
    },
    /// Least singular value tail counts.
    Lsv {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10.0)]
        a_exponent: f64,
        #[arg(long, value_enum, default_value = "rank-one")]
        perturbation: PerturbationKind,
        #[arg(long)]
        max_count: Option<usize>,
    },
    /// Empirical against limiting Stieltjes transform across sizes.
    StieltjesCompare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0.5", value_parser = parse_complex)]
        z: Vec<Complex64>,
        #[arg(long, default_value = "0.5+1i", value_parser = parse_complex)]
        w: Vec<Complex64>,
        #[arg(long)]
        expect_decreasing: bool,
        #[arg(long)]
        final_max: Option<f64>,
    },
    /// Solve the cubic relation for m(z, w).
    CubicEval {
        #[arg(long, value_parser = parse_complex)]
        z: Complex64,
        #[arg(long, value_parser = parse_complex)]
        w: Complex64,
        /// Points where the limiting density is also evaluated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Concentration of a linear or rank-one multilinear form.
    Smallball {
        /// Linear coefficients, comma separated complex numbers.
        #[arg(long, value_parser = parse_complex_list, conflicts_with = "factors")]
        coeffs: Option<Points>,
        /// Rank-one factors of a multilinear form, `;` between factors.
        #[arg(long, value_parser = parse_factor_list)]
        factors: Option<Factors>,
        /// Uniform law support; defaults to {-1, 1}.
        #[arg(long, value_parser = parse_complex_list)]
        law: Option<Points>,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Properties of a generalized arithmetic progression, or an integer relation.
    Gap {
        /// Generators, `;` between generators, coordinates comma separated.
        #[arg(long, value_parser = parse_factor_list)]
        generators: Option<Factors>,
        /// Symmetric radii, one per generator.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<i64>,
        /// Point to test for membership.
        #[arg(long, value_parser = parse_complex_list)]
        member: Option<Points>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Integer coordinate rows, `;` between rows.
        #[arg(long, value_parser = parse_integer_rows, conflicts_with = "generators")]
        relation: Option<IntegerRows>,
    },
    /// Variance and correlation gaps of truncated atoms.
    TruncationCheck {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Monte Carlo draws for the empirical correlation; 0 skips it.
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: usize,
    },
    /// Levy distance of the symmetrized singular law to nu_z across sizes.
    RateLevy {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "0.5", value_parser = parse_complex)]
        z: Vec<Complex64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        expect_decreasing: bool,
    },
    /// Monte Carlo comparison of a determinant form with its decoupling.
    DecouplingCheck {
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Auto,
    Exact,
    Lattice,
    MonteCarlo,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    Complex64::from_str(s.trim()).map_err(|e| format!("{s:?}: {e}"))
}

fn parse_complex_list(s: &str) -> Result<Points, String> {
    s.split(',').map(parse_complex).collect()
}

fn parse_factor_list(s: &str) -> Result<Factors, String> {
    s.split(';').map(parse_complex_list).collect()
}

fn parse_integer_rows(s: &str) -> Result<IntegerRows, String> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|e| format!("{x:?}: {e}")))
                .collect()
        })
        .collect()
}

fn c_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

enum Outcome {
    Passed,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        match v.parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => {
                eprintln!("error: {WORKERS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match dispatch(&cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn default_out(name: &str) -> PathBuf {
    Path::new("rmlab-out").join(name)
}

fn experiment_config(
    common: &Common,
    kind: ExperimentKind,
    run: &RunArgs,
    fill: impl FnOnce(&mut ExperimentConfig),
) -> Result<ExperimentConfig, LabError> {
    let mut config = match &common.config {
        Some(path) => {
            let config = ExperimentConfig::load(path)?;
            if config.experiment != kind {
                return Err(LabError::Usage(format!(
                    "{} describes a {} experiment, not {}",
                    path.display(),
                    config.experiment.name(),
                    kind.name()
                )));
            }
            config
        }
        None => {
            let mut config = ExperimentConfig::new(
                kind,
                run.ensemble.config(),
                run.sizes.clone(),
                run.samples,
                0,
                default_out(kind.name()),
            );
            fill(&mut config);
            config
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn run_configured(common: &Common, config: ExperimentConfig) -> Result<Outcome, LabError> {
    let report = run_experiment(&config)?;
    if !common.quiet {
        for m in &report.metrics {
            println!(
                "{:>6} {:<24} {:.6e} ± {:.2e}",
                m.n, m.metric_name, m.value, m.ci_halfwidth
            );
        }
        for a in &report.assertions {
            println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
        }
        println!(
            "wrote {} ({:.2} s)",
            config.output_dir.display(),
            report.wall_clock_seconds
        );
    }
    Ok(if report.passed {
        Outcome::Passed
    } else {
        Outcome::Failed
    })
}

fn emit(common: &Common, name: &str, value: &Value, passed: bool) -> Result<Outcome, LabError> {
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|source| LabError::Io {
            path: dir.clone(),
            source,
        })?;
        write_json(&dir.join(format!("{name}.json")), value)?;
    }
    if !common.quiet {
        println!("{}", serde_json::to_string_pretty(value).expect("json value"));
    }
    Ok(if passed { Outcome::Passed } else { Outcome::Failed })
}

fn smallball_json(r: &SmallBallResult) -> Value {
    json!({
        "rho": r.rho,
        "rho_exact": r.rho_exact.map(|q| format!("{}/{}", q.numer(), q.denom())),
        "center": c_json(r.center),
        "method": r.method.name(),
    })
}

fn dispatch(cli: &Cli) -> Result<Outcome, LabError> {
    let common = &cli.common;
    let seed = common.seed.unwrap_or(0);
    match &cli.command {
        Command::EnsembleSample {
            ensemble,
            n,
            samples,
            covariance_trials,
        } => {
            let spec = ensemble.config().build()?;
            let dir = common.out.clone().unwrap_or_else(|| default_out("ensemble-sample"));
            std::fs::create_dir_all(&dir).map_err(|source| LabError::Io {
                path: dir.clone(),
                source,
            })?;
            let mut csv = String::from("sample_index,row,col,re,im\n");
            for s in 0..*samples {
                let x = sample_c0_matrix(&spec, *n, rmlab::experiment::trial_seed(seed, *n, s))?;
                for i in 0..x.rows() {
                    for j in 0..x.cols() {
                        let z = x[(i, j)];
                        csv.push_str(&format!(
                            "{s},{i},{j},{},{}\n",
                            rmlab::output::format_float(z.re),
                            rmlab::output::format_float(z.im)
                        ));
                    }
                }
            }
            let path = dir.join("matrices.csv");
            std::fs::write(&path, csv).map_err(|source| LabError::Io { path, source })?;
            let cov = covariance_check(&spec, *covariance_trials, seed)?;
            let value = json!({
                "n": n,
                "samples": samples,
                "dimension": n * spec.d(),
                "satisfies_c0": spec.satisfies_c0(),
                "covariance": {
                    "trials": cov.trials,
                    "max_cross": cov.max_cross,
                    "argmax": [[cov.argmax.0 .0, cov.argmax.0 .1], [cov.argmax.1 .0, cov.argmax.1 .1]],
                    "threshold": cov.threshold,
                    "passes": cov.passes,
                },
            });
            let out = Common {
                config: None,
                seed: common.seed,
                out: Some(dir),
                quiet: common.quiet,
            };
            emit(&out, "ensemble-sample", &value, true)
        }
        Command::RadialTest { run, max_gap } => {
            let config = experiment_config(common, ExperimentKind::CircularLaw, run, |c| {
                c.assertions.radial_gap_max = *max_gap;
            })?;
            run_configured(common, config)
        }
        Command::Lsv {
            run,
            a_exponent,
            perturbation,
            max_count,
        } => {
            let config = experiment_config(common, ExperimentKind::Lsv, run, |c| {
                c.lsv = Some(LsvConfig {
                    a_exponent: *a_exponent,
                    perturbation: *perturbation,
                });
                c.assertions.lsv_max_count = *max_count;
            })?;
            run_configured(common, config)
        }
        Command::StieltjesCompare {
            run,
            z,
            w,
            expect_decreasing,
            final_max,
        } => {
            let config = experiment_config(common, ExperimentKind::StieltjesCompare, run, |c| {
                c.grid = GridConfig {
                    z: z.iter().map(|p| [p.re, p.im]).collect(),
                    w: w.iter().map(|p| [p.re, p.im]).collect(),
                };
                c.assertions = AssertionConfig {
                    deviation_decreasing: expect_decreasing.then_some(true),
                    deviation_final_max: *final_max,
                    ..AssertionConfig::default()
                };
            })?;
            run_configured(common, config)
        }
        Command::RateLevy {
            run,
            z,
            delta,
            expect_decreasing,
        } => {
            let config = experiment_config(common, ExperimentKind::RateLevy, run, |c| {
                c.grid.z = z.iter().map(|p| [p.re, p.im]).collect();
                c.truncation = delta.map(|delta| TruncationConfig { delta });
                c.assertions.levy_decreasing = expect_decreasing.then_some(true);
            })?;
            run_configured(common, config)
        }
        Command::CubicEval { z, w, x } => {
            let sol = solve_cubic_m(*z, *w)?;
            let density = x
                .iter()
                .map(|&x| Ok(json!([x, density_rho(*z, x)?])))
                .collect::<Result<Vec<_>, LabError>>()?;
            let value = json!({
                "z": c_json(sol.z),
                "w": c_json(sol.w),
                "m": c_json(sol.m),
                "residual": sol.residual,
                "path_points": sol.branch_path_points,
                "density": density,
            });
            emit(common, "cubic-eval", &value, true)
        }
        Command::Smallball {
            coeffs,
            factors,
            law,
            beta,
            method,
            trials,
        } => {
            let law = match law {
                Some(s) => FiniteLaw::uniform(s.clone())?,
                None => FiniteLaw::bernoulli(),
            };
            let result = match (coeffs, factors) {
                (Some(a), _) => {
                    let method = match method {
                        MethodArg::Auto => LinearMethod::Auto { trials: *trials, seed },
                        MethodArg::Exact => LinearMethod::Exact,
                        MethodArg::Lattice => LinearMethod::Lattice,
                        MethodArg::MonteCarlo => LinearMethod::MonteCarlo { trials: *trials, seed },
                    };
                    linear_smallball(a, &law, *beta, method)?
                }
                (None, Some(f)) => multilinear_smallball(&CoefficientArray::rank_one(f)?, &law, *beta, None)?,
                (None, None) => return Err(LabError::Usage("smallball needs --coeffs or --factors".into())),
            };
            emit(common, "smallball", &smallball_json(&result), true)
        }
        Command::Gap {
            generators,
            radii,
            member,
            tol,
            relation,
        } => {
            if let Some(rows) = relation {
                let alpha = gap_integer_relation(rows)?;
                return emit(common, "gap", &json!({ "relation": alpha }), true);
            }
            let Some(generators) = generators else {
                return Err(LabError::Usage("gap needs --generators or --relation".into()));
            };
            let dim = generators.first().map_or(0, Vec::len);
            let q = Gap::symmetric(dim, generators.clone(), radii)?;
            let membership = match member {
                Some(x) => Some(q.membership(x, *tol)?.map(|e| format!("{e:?}"))),
                None => None,
            };
            let value = json!({
                "rank": q.rank(),
                "dim": q.dim(),
                "volume": q.volume().to_string(),
                "distinct": q.distinct_count()?,
                "proper": q.is_proper()?,
                "symmetric": q.is_symmetric(),
                "membership": membership,
            });
            emit(common, "gap", &value, true)
        }
        Command::TruncationCheck {
            ensemble,
            n,
            delta,
            mc_samples,
        } => {
            let spec = ensemble.config().build()?;
            let p = TruncationParams::for_spec(&spec, *delta, *n);
            let mc = (*mc_samples > 0).then_some((*mc_samples, seed));
            let r = truncation_bound_report(&spec, &p, mc)?;
            let value = json!({
                "n": n,
                "delta": delta,
                "threshold": r.threshold,
                "var_gap": r.var_gap,
                "var_bound": r.var_bound,
                "var_pass": r.var_pass,
                "corr_gap": r.corr_gap,
                "corr_gap_empirical": r.corr_gap_empirical,
                "corr_bound": r.corr_bound,
                "corr_pass": r.corr_pass,
                "n0_proviso": r.n0_proviso,
                "max_hat_bound": r.max_hat_bound,
            });
            emit(common, "truncation-check", &value, r.var_pass && r.corr_pass)
        }
        Command::DecouplingCheck {
            ensemble,
            n,
            beta,
            trials,
        } => {
            let spec = ensemble.config().build()?;
            let r = decoupling_check(&spec, *n, *beta, *trials, seed, None)?;
            let value = json!({
                "d": r.d,
                "n": r.n,
                "trials": r.trials,
                "beta": r.beta,
                "partition": r.partition,
                "rho_hat": r.rho_hat,
                "rho_ci": r.rho_ci,
                "rho_decoupled_hat": r.rho_decoupled_hat,
                "rho_decoupled_ci": r.rho_decoupled_ci,
                "rho_power": r.rho_power,
                "ratio": r.ratio,
            });
            emit(common, "decoupling-check", &value, true)
        }
    }
}
