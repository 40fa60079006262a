//! Command-line surface: limit formulas, finite-N formulas, samplers,
//! quadrature oracles and the verification suites.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numerical-domain error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use beta_moments::ensembles::{
    sample_array, sample_da, sample_laguerre_tridiag, sample_mcmc, EnsembleSpec, McmcConfig,
};
use beta_moments::limits::{
    cjbe_finite_f0, f0_limit, f_limit, forrester_joint_moment, jacobi_inverse_moment,
    laguerre_finite_moment, moments_connection, x_moment_limit, x_second_moment_closed,
    y_moment_limit, JointMomentParams, NormalizationMode,
};
use beta_moments::mc::{
    estimate_g_laguerre, estimate_trace_moment, exchangeability_test, martingale_check,
};
use beta_moments::oracle::{
    cauchy_moment_1d, consistency_marginal, da_normalization, hp_row_moment, inv_laguerre_moment,
    MarginalKind,
};
use beta_moments::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "beta-moments", version, about = "Joint moments of beta-ensemble characteristic polynomials: formulas, oracles, samplers")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the output to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: machine parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form limiting quantities
    #[command(subcommand)]
    Limits(LimitsCmd),
    /// Finite-N formulas
    #[command(subcommand)]
    Finite(FiniteCmd),
    /// Random samplers
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Deterministic quadrature ground truth
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Verification suites (exit 1 on failure)
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand)]
enum LimitsCmd {
    /// Limiting rescaled trace moment E[X_beta(tau)^(2h)]
    XMoment {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        h: usize,
    },
    /// Closed form beta / ((2 tau - 1)(4 tau + beta)) of the h = 1 case
    SecondMoment {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        tau: f64,
    },
    /// Limiting constant f0: lim F_N(s, 0) / N^(2s(s + delta + conj delta)/beta)
    F0 {
        #[arg(long)]
        beta: f64,
        /// Re(delta)
        #[arg(long, default_value_t = 0.0)]
        re: f64,
        /// Im(delta)
        #[arg(long, default_value_t = 0.0)]
        im: f64,
        #[arg(long)]
        s: f64,
    },
    /// Limiting joint moment at delta = 0 (integer s, real h away from half-integers)
    Forrester {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        h: f64,
    },
    /// Full limiting joint moment F_{beta,delta}(s,h), integer h, real delta
    F {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        h: f64,
    },
    /// Limiting rescaled Laguerre log-derivative moment
    YMoment {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        r: usize,
        /// Use the uncalibrated normalization as printed
        #[arg(long)]
        as_printed: bool,
    },
}

#[derive(Subcommand)]
enum FiniteCmd {
    /// Finite-N circular Jacobi normalization F_N(s, 0) via Morris integrals
    CjbeF0 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        /// Re(delta)
        #[arg(long, default_value_t = 0.0)]
        re: f64,
        /// Im(delta)
        #[arg(long, default_value_t = 0.0)]
        im: f64,
        #[arg(long)]
        s: f64,
    },
    /// Finite-N inverse-Laguerre sum moment (terminating partition sum)
    Laguerre {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        /// Use the uncalibrated normalization as printed
        #[arg(long)]
        as_printed: bool,
    },
    /// Finite-N Jacobi inverse moment (terminating partition sum)
    Jacobi {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
    },
}

#[derive(Subcommand)]
enum SampleCmd {
    /// Hua-Pickrell draws by random-walk Metropolis
    Hp {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        /// Re(tau)
        #[arg(long, default_value_t = 0.0)]
        re: f64,
        /// Im(tau)
        #[arg(long, default_value_t = 0.0)]
        im: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Circular Jacobi draws (angles in (0, 2 pi)) of the s-tilted law
    Cjbe {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        /// Re(delta)
        #[arg(long, default_value_t = 0.0)]
        re: f64,
        /// Im(delta)
        #[arg(long, default_value_t = 0.0)]
        im: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Exact Laguerre draws from the tridiagonal model
    Laguerre {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Consistent interlacing arrays (Hua-Pickrell or inverse-Laguerre)
    Array {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        depth: usize,
        /// tau (Hua-Pickrell) or nu (inverse-Laguerre)
        #[arg(long)]
        param: f64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Exact draws from the Dixon-Anderson corner kernel below y
    Da {
        #[arg(long)]
        beta: f64,
        /// Strictly decreasing source configuration, comma separated
        #[arg(long, value_delimiter = ',')]
        y: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Hp,
    InverseLaguerre,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// One-dimensional Cauchy-type moment, quadrature vs closed form
    Cauchy {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tau: f64,
    },
    /// k-particle Hua-Pickrell sum moment by iterated quadrature
    HpMoment {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        power: u32,
    },
    /// Inverse-Laguerre sum moment by quadrature (N in {1,2})
    InvlagMoment {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        r: u32,
    },
    /// Total mass of the Dixon-Anderson kernel below y (expected 1)
    DaNorm {
        #[arg(long)]
        beta: f64,
        #[arg(long, value_delimiter = ',')]
        y: Vec<f64>,
    },
    /// Sup deviation of the 2 -> 1 corner marginal from the N = 1 density
    Consistency {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        beta: f64,
        /// tau (Hua-Pickrell) or nu (inverse-Laguerre)
        #[arg(long)]
        param: f64,
        #[arg(long)]
        grid_min: f64,
        #[arg(long)]
        grid_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Every suite below
    All {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Include the expensive gated checks
        #[arg(long)]
        slow: bool,
    },
    /// Deterministic formula identities and oracle cross-checks
    Identities,
    /// Finite-N quantities approaching their limits (quadrature + Monte Carlo)
    Convergence {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Exchangeability and martingale structure of interlacing arrays
    Exchangeability {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Normalization calibration of the finite-N Laguerre formula
    LaguerreCalibration,
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

/// 17 significant digits.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

struct Report {
    spec: Value,
    result: Value,
    diagnostics: Value,
    csv: CsvTable,
}

fn scalar_report(spec: Value, name: &str, value: f64) -> Report {
    Report {
        spec,
        result: json!({ name: value }),
        diagnostics: json!({}),
        csv: CsvTable {
            header: vec![name.to_string()],
            rows: vec![vec![fmt17(value)]],
        },
    }
}

fn make_spec(command: &str, seed: Option<u64>, params: Value) -> Value {
    let mut spec = json!({
        "version": VERSION,
        "command": command,
        "params": params,
    });
    if let Some(s) = seed {
        spec["seed"] = json!(s);
    }
    spec
}

fn write_report(cli_format: Format, output: &Option<PathBuf>, report: &Report) -> std::io::Result<()> {
    let mut buf = String::new();
    match cli_format {
        Format::Json => {
            let doc = json!({
                "spec": report.spec,
                "result": report.result,
                "diagnostics": report.diagnostics,
            });
            buf.push_str(&serde_json::to_string_pretty(&doc).expect("json"));
            buf.push('\n');
        }
        Format::Csv => {
            buf.push_str(&format!(
                "# beta-moments {} {}\n",
                VERSION,
                serde_json::to_string(&report.spec).expect("json")
            ));
            buf.push_str(&report.csv.header.join(","));
            buf.push('\n');
            for row in &report.csv.rows {
                buf.push_str(&row.join(","));
                buf.push('\n');
            }
        }
    }
    match output {
        Some(path) => std::fs::write(path, buf),
        None => std::io::stdout().write_all(buf.as_bytes()),
    }
}

fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        _ => 3,
    }
}

// ---------------------------------------------------------------------------
// Leaf handlers
// ---------------------------------------------------------------------------

fn run_limits(cmd: LimitsCmd) -> beta_moments::Result<Report> {
    Ok(match cmd {
        LimitsCmd::XMoment { beta, tau, h } => scalar_report(
            make_spec("limits x-moment", None, json!({"beta": beta, "tau": tau, "h": h})),
            "x_moment",
            x_moment_limit(beta, tau, h)?,
        ),
        LimitsCmd::SecondMoment { beta, tau } => scalar_report(
            make_spec("limits second-moment", None, json!({"beta": beta, "tau": tau})),
            "second_moment",
            x_second_moment_closed(beta, tau)?,
        ),
        LimitsCmd::F0 { beta, re, im, s } => scalar_report(
            make_spec("limits f0", None, json!({"beta": beta, "re": re, "im": im, "s": s})),
            "f0",
            f0_limit(beta, Complex64::new(re, im), s)?,
        ),
        LimitsCmd::Forrester { beta, s, h } => scalar_report(
            make_spec("limits forrester", None, json!({"beta": beta, "s": s, "h": h})),
            "joint_moment",
            forrester_joint_moment(beta, s, h)?,
        ),
        LimitsCmd::F { beta, delta, s, h } => {
            let params = JointMomentParams::new(beta, delta.into(), s, h)?;
            scalar_report(
                make_spec(
                    "limits f",
                    None,
                    json!({"beta": beta, "delta": delta, "s": s, "h": h}),
                ),
                "joint_moment",
                f_limit(&params)?,
            )
        }
        LimitsCmd::YMoment {
            beta,
            nu,
            r,
            as_printed,
        } => {
            let mode = if as_printed {
                NormalizationMode::AsPrinted
            } else {
                NormalizationMode::OracleCalibrated
            };
            scalar_report(
                make_spec(
                    "limits y-moment",
                    None,
                    json!({"beta": beta, "nu": nu, "r": r, "as_printed": as_printed}),
                ),
                "y_moment",
                y_moment_limit(beta, nu, r, mode)?,
            )
        }
    })
}

fn run_finite(cmd: FiniteCmd) -> beta_moments::Result<Report> {
    Ok(match cmd {
        FiniteCmd::CjbeF0 { n, beta, re, im, s } => scalar_report(
            make_spec(
                "finite cjbe-f0",
                None,
                json!({"n": n, "beta": beta, "re": re, "im": im, "s": s}),
            ),
            "f_n_s_0",
            cjbe_finite_f0(n, beta, Complex64::new(re, im), s)?,
        ),
        FiniteCmd::Laguerre {
            beta,
            nu,
            n,
            r,
            as_printed,
        } => {
            let mode = if as_printed {
                NormalizationMode::AsPrinted
            } else {
                NormalizationMode::OracleCalibrated
            };
            scalar_report(
                make_spec(
                    "finite laguerre",
                    None,
                    json!({"beta": beta, "nu": nu, "n": n, "r": r, "as_printed": as_printed}),
                ),
                "moment",
                laguerre_finite_moment(beta, nu, n, r, mode)?,
            )
        }
        FiniteCmd::Jacobi { beta, nu, mu, n, r } => scalar_report(
            make_spec(
                "finite jacobi",
                None,
                json!({"beta": beta, "nu": nu, "mu": mu, "n": n, "r": r}),
            ),
            "inverse_moment",
            jacobi_inverse_moment(beta, nu, mu, n, r)?,
        ),
    })
}

fn samples_report(spec: Value, samples: Vec<Vec<f64>>, diagnostics: Value) -> Report {
    let width = samples.first().map_or(0, Vec::len);
    let csv = CsvTable {
        header: (1..=width).map(|i| format!("x{i}")).collect(),
        rows: samples
            .iter()
            .map(|s| s.iter().map(|&v| fmt17(v)).collect())
            .collect(),
    };
    Report {
        spec,
        result: json!({ "samples": samples }),
        diagnostics,
        csv,
    }
}

fn mcmc_config_for(count: usize, seed: u64) -> McmcConfig {
    let chains = 4;
    McmcConfig {
        n_chains: chains,
        samples_per_chain: count.div_ceil(chains),
        seed,
        ..Default::default()
    }
}

fn run_sample(cmd: SampleCmd) -> beta_moments::Result<Report> {
    use rand::SeedableRng;
    Ok(match cmd {
        SampleCmd::Hp {
            beta,
            n,
            re,
            im,
            count,
            seed,
        } => {
            let spec = EnsembleSpec::HuaPickrell {
                beta,
                n,
                tau: Complex64::new(re, im),
            };
            let mut batch = sample_mcmc(&spec, &mcmc_config_for(count, seed))?;
            batch.samples.truncate(count);
            samples_report(
                make_spec(
                    "sample hp",
                    Some(seed),
                    json!({"beta": beta, "n": n, "re": re, "im": im, "count": count}),
                ),
                batch.samples,
                serde_json::to_value(batch.diagnostics).expect("json"),
            )
        }
        SampleCmd::Cjbe {
            beta,
            n,
            re,
            im,
            s,
            count,
            seed,
        } => {
            let spec = EnsembleSpec::CircularJacobi {
                beta,
                n,
                delta: Complex64::new(re, im),
                s,
            };
            let mut batch = sample_mcmc(&spec, &mcmc_config_for(count, seed))?;
            batch.samples.truncate(count);
            samples_report(
                make_spec(
                    "sample cjbe",
                    Some(seed),
                    json!({"beta": beta, "n": n, "re": re, "im": im, "s": s, "count": count}),
                ),
                batch.samples,
                serde_json::to_value(batch.diagnostics).expect("json"),
            )
        }
        SampleCmd::Laguerre {
            beta,
            n,
            nu,
            count,
            seed,
        } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<Vec<f64>> = (0..count)
                .map(|_| sample_laguerre_tridiag(n, beta, nu, &mut rng))
                .collect::<beta_moments::Result<_>>()?;
            samples_report(
                make_spec(
                    "sample laguerre",
                    Some(seed),
                    json!({"beta": beta, "n": n, "nu": nu, "count": count}),
                ),
                samples,
                json!({"sampler": "tridiagonal"}),
            )
        }
        SampleCmd::Array {
            kind,
            beta,
            depth,
            param,
            count,
            seed,
        } => {
            let spec = match kind {
                KindArg::Hp => EnsembleSpec::HuaPickrell {
                    beta,
                    n: depth,
                    tau: param.into(),
                },
                KindArg::InverseLaguerre => EnsembleSpec::InverseLaguerre {
                    beta,
                    n: depth,
                    nu: param,
                },
            };
            let arrays = generate_arrays(&spec, count, seed)?;
            let flat: Vec<Vec<f64>> = arrays
                .iter()
                .map(|a| a.rows().iter().flatten().copied().collect())
                .collect();
            let spec_json = make_spec(
                "sample array",
                Some(seed),
                json!({"kind": format!("{kind:?}"), "beta": beta, "depth": depth,
                       "param": param, "count": count}),
            );
            let csv = CsvTable {
                header: (1..=flat.first().map_or(0, Vec::len))
                    .map(|i| format!("v{i}"))
                    .collect(),
                rows: flat
                    .iter()
                    .map(|r| r.iter().map(|&v| fmt17(v)).collect())
                    .collect(),
            };
            Report {
                spec: spec_json,
                result: json!({ "arrays": arrays }),
                diagnostics: json!({"flattening": "row-major, rows 1..depth"}),
                csv,
            }
        }
        SampleCmd::Da {
            beta,
            y,
            count,
            seed,
        } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<Vec<f64>> = (0..count)
                .map(|_| sample_da(beta, &y, &mut rng))
                .collect::<beta_moments::Result<_>>()?;
            samples_report(
                make_spec(
                    "sample da",
                    Some(seed),
                    json!({"beta": beta, "y": y, "count": count}),
                ),
                samples,
                json!({"sampler": "dirichlet-roots"}),
            )
        }
    })
}

/// Interlacing arrays from a consistent ensemble: exact tridiagonal top rows
/// for inverse-Laguerre, Metropolis top rows for Hua-Pickrell, then repeated
/// Dixon-Anderson corner steps.
fn generate_arrays(
    spec: &EnsembleSpec,
    count: usize,
    seed: u64,
) -> beta_moments::Result<Vec<beta_moments::ensembles::InterlacingArray>> {
    use beta_moments::ensembles::sample_inverse_laguerre;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let top_rows: Vec<Vec<f64>> = match *spec {
        EnsembleSpec::InverseLaguerre { beta, n, nu } => (0..count)
            .map(|_| sample_inverse_laguerre(n, beta, nu, &mut rng))
            .collect::<beta_moments::Result<_>>()?,
        EnsembleSpec::HuaPickrell { .. } => {
            let mut batch = sample_mcmc(spec, &mcmc_config_for(count, seed))?;
            batch.samples.truncate(count);
            batch.samples
        }
        _ => {
            return Err(Error::InvalidArgument(
                "arrays are generated for the consistent kinds only".into(),
            ))
        }
    };
    top_rows
        .into_iter()
        .map(|top| sample_array(spec, top, &mut rng))
        .collect()
}

fn run_oracle(cmd: OracleCmd) -> beta_moments::Result<Report> {
    Ok(match cmd {
        OracleCmd::Cauchy { m, beta, n, tau } => {
            let r = cauchy_moment_1d(m, beta, n, tau)?;
            Report {
                spec: make_spec(
                    "oracle cauchy",
                    None,
                    json!({"m": m, "beta": beta, "n": n, "tau": tau}),
                ),
                result: json!({
                    "quadrature": r.quadrature,
                    "closed_form": r.closed_form,
                }),
                diagnostics: json!({
                    "difference": (r.quadrature.value - r.closed_form).abs(),
                }),
                csv: CsvTable {
                    header: vec![
                        "value".into(),
                        "error_bound".into(),
                        "evaluations".into(),
                        "closed_form".into(),
                    ],
                    rows: vec![vec![
                        fmt17(r.quadrature.value),
                        fmt17(r.quadrature.error_bound),
                        r.quadrature.evaluations.to_string(),
                        fmt17(r.closed_form),
                    ]],
                },
            }
        }
        OracleCmd::HpMoment {
            k,
            beta,
            tau,
            power,
        } => quad_result_report(
            make_spec(
                "oracle hp-moment",
                None,
                json!({"k": k, "beta": beta, "tau": tau, "power": power}),
            ),
            hp_row_moment(k, beta, tau, power)?,
        ),
        OracleCmd::InvlagMoment { n, beta, nu, r } => quad_result_report(
            make_spec(
                "oracle invlag-moment",
                None,
                json!({"n": n, "beta": beta, "nu": nu, "r": r}),
            ),
            inv_laguerre_moment(n, beta, nu, r)?,
        ),
        OracleCmd::DaNorm { beta, y } => quad_result_report(
            make_spec("oracle da-norm", None, json!({"beta": beta, "y": y})),
            da_normalization(beta, &y)?,
        ),
        OracleCmd::Consistency {
            kind,
            beta,
            param,
            grid_min,
            grid_max,
            points,
        } => {
            if points < 2 || grid_min >= grid_max {
                return Err(Error::InvalidArgument(
                    "need points >= 2 and grid_min < grid_max".into(),
                ));
            }
            let grid: Vec<f64> = (0..points)
                .map(|i| grid_min + (grid_max - grid_min) * i as f64 / (points - 1) as f64)
                .collect();
            let mk = match kind {
                KindArg::Hp => MarginalKind::HuaPickrell,
                KindArg::InverseLaguerre => MarginalKind::InverseLaguerre,
            };
            let dev = consistency_marginal(mk, beta, param, &grid)?;
            scalar_report(
                make_spec(
                    "oracle consistency",
                    None,
                    json!({"kind": format!("{kind:?}"), "beta": beta, "param": param,
                           "grid_min": grid_min, "grid_max": grid_max, "points": points}),
                ),
                "max_deviation",
                dev,
            )
        }
    })
}

fn quad_result_report(spec: Value, r: beta_moments::oracle::QuadResult) -> Report {
    Report {
        spec,
        result: serde_json::to_value(r).expect("json"),
        diagnostics: json!({}),
        csv: CsvTable {
            header: vec!["value".into(), "error_bound".into(), "evaluations".into()],
            rows: vec![vec![
                fmt17(r.value),
                fmt17(r.error_bound),
                r.evaluations.to_string(),
            ]],
        },
    }
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn check(checks: &mut Vec<Check>, name: &str, passed: bool, detail: String) {
    checks.push(Check {
        name: name.to_string(),
        passed,
        detail,
    });
}

fn verify_identities(checks: &mut Vec<Check>) -> beta_moments::Result<()> {
    // Second-moment closed form.
    let mut worst = 0.0f64;
    for &beta in &[0.5, 1.0, 2.0, 4.0] {
        for &tau in &[1.0, 1.5, 2.0, 3.0] {
            let a = x_moment_limit(beta, tau, 1)?;
            let b = x_second_moment_closed(beta, tau)?;
            worst = worst.max((a - b).abs());
        }
    }
    check(checks, "second-moment-identity", worst < 1e-12, format!("max |diff| = {worst:.2e}"));

    // Joint-moment factorization at delta = 0.
    let mut worst = 0.0f64;
    for &beta in &[1.0, 2.0, 4.0] {
        for s in 1..=3usize {
            for h in 0..=s {
                let lhs = forrester_joint_moment(beta, s, h as f64)?;
                let rhs = f0_limit(beta, Complex64::new(0.0, 0.0), s as f64)?
                    * 0.25f64.powi(h as i32)
                    * x_moment_limit(beta, s as f64, h)?;
                worst = worst.max(((lhs - rhs) / rhs).abs());
            }
        }
    }
    check(checks, "joint-moment-factorization", worst < 1e-8, format!("max rel diff = {worst:.2e}"));

    // Cauchy oracle dual evaluation.
    let mut worst = 0.0f64;
    for &beta in &[1.0, 2.0] {
        for m in 0..=2usize {
            for &tau in &[1.5, 2.5] {
                let r = cauchy_moment_1d(m, beta, 2, tau)?;
                worst = worst.max((r.quadrature.value - r.closed_form).abs());
            }
        }
    }
    check(checks, "cauchy-dual-evaluation", worst < 1e-10, format!("max |diff| = {worst:.2e}"));

    // Jacobi inverse moment closed form at beta = 2, N = 1, r = 1.
    let mut worst = 0.0f64;
    for &nu in &[1.5, 2.0, 3.0] {
        for &mu in &[0.0, 0.5, 1.0] {
            let v = jacobi_inverse_moment(2.0, nu, mu, 1, 1)?;
            worst = worst.max((v - (nu + mu + 1.0) / nu).abs());
        }
    }
    check(checks, "jacobi-inverse-moment", worst < 1e-10, format!("max |diff| = {worst:.2e}"));

    // Kernel total mass.
    let mut worst = 0.0f64;
    for &beta in &[1.0, 2.0, 4.0] {
        for y in [vec![1.0, 0.0], vec![2.0, 1.0, 0.0]] {
            let r = da_normalization(beta, &y)?;
            worst = worst.max((r.value - 1.0).abs());
        }
    }
    check(checks, "da-kernel-normalization", worst < 1e-6, format!("max |mass - 1| = {worst:.2e}"));

    // Limiting constants with known values.
    let f1 = f0_limit(2.0, Complex64::new(0.0, 0.0), 1.0)?;
    let f2 = f0_limit(2.0, Complex64::new(0.0, 0.0), 2.0)?;
    let ok = (f1 - 1.0).abs() < 1e-9 && (f2 - 1.0 / 12.0).abs() < 1e-9;
    check(checks, "f0-known-values", ok, format!("f0(2,0,1) = {f1}, f0(2,0,2) = {f2}"));
    Ok(())
}

fn verify_convergence(checks: &mut Vec<Check>, seed: u64) -> beta_moments::Result<()> {
    // Finite-N normalization approaches the limiting constant (Richardson in
    // 1/N from N in {100, 200, 400}).
    let mut worst = 0.0f64;
    for &(beta, delta, s) in &[(2.0, 0.0, 1.0), (2.0, 0.0, 2.0), (1.0, 0.5, 1.0), (4.0, 0.0, 1.0)] {
        let d = Complex64::new(delta, 0.0);
        let slope = 2.0 * s * (s + 2.0 * delta) / beta;
        let g = |n: usize| -> beta_moments::Result<f64> {
            Ok(cjbe_finite_f0(n, beta, d, s)?.ln() - slope * (n as f64).ln())
        };
        let extrapolated = 2.0 * g(400)? - g(200)?;
        let limit = f0_limit(beta, d, s)?.ln();
        worst = worst.max((extrapolated - limit).abs());
    }
    check(checks, "f0-finite-n-extrapolation", worst < 1e-2, format!("max |log diff| = {worst:.2e}"));

    // Property-based: the distance from the MC trace-moment estimate to the
    // limit formula shrinks monotonically in N (within 3-stderr bands; the
    // limit itself is not claimed reproduced at finite N).
    let limit = x_moment_limit(2.0, 2.0, 1)?;
    let config = McmcConfig {
        n_chains: 4,
        samples_per_chain: 12_500,
        seed,
        ..Default::default()
    };
    let mut bands = Vec::new();
    for &n in &[5usize, 10, 20] {
        let spec = EnsembleSpec::HuaPickrell {
            beta: 2.0,
            n,
            tau: Complex64::new(2.0, 0.0),
        };
        let e = estimate_trace_moment(&spec, 1.0, &config)?;
        bands.push((n, (e.value - limit).abs(), e.stderr));
    }
    let monotone = bands
        .windows(2)
        .all(|w| w[1].1 < w[0].1 + 3.0 * (w[0].2 + w[1].2));
    check(
        checks,
        "trace-moment-convergence",
        monotone,
        format!("limit {limit}, per-N (N, |error|, stderr) bands: {bands:?}"),
    );

    // Laguerre G-moment consistent with the calibrated limit; the G
    // observable is sum 1/x of the Laguerre points, half the inverse-Laguerre
    // row sum, hence the 2^r.
    let y_lim = y_moment_limit(2.0, 3.0, 1, NormalizationMode::OracleCalibrated)? / 2.0;
    let e = estimate_g_laguerre(20, 2.0, 3.0, 1.0, &config)?;
    let ok = (e.value - y_lim).abs() < 3.0 * e.stderr.max(1e-3) + 0.5 / 20.0_f64;
    check(
        checks,
        "g-laguerre-consistency",
        ok,
        format!("N=20 estimate {} +- {}, scaled limit {y_lim}", e.value, e.stderr),
    );
    Ok(())
}

fn verify_exchangeability(checks: &mut Vec<Check>, seed: u64) -> beta_moments::Result<()> {
    use rand::SeedableRng;
    let specs = [
        EnsembleSpec::HuaPickrell {
            beta: 2.0,
            n: 12,
            tau: Complex64::new(1.0, 0.0),
        },
        EnsembleSpec::InverseLaguerre {
            beta: 4.0,
            n: 12,
            nu: 2.0,
        },
    ];
    for spec in specs {
        let arrays = generate_arrays(&spec, 5000, seed)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let report = exchangeability_test(&arrays, 3, &mut rng)?;
        let name = format!("exchangeability-{}", kind_tag(&spec));
        let min_p = report
            .tests
            .iter()
            .skip(1)
            .map(|t| t.p_value)
            .fold(1.0, f64::min);
        check(checks, &name, report.passes(0.01), format!("min p-value = {min_p:.4}"));

        let mart = martingale_check(&arrays, &[1, 2, 4, 8, 12])?;
        let name = format!("martingale-{}", kind_tag(&spec));
        check(
            checks,
            &name,
            mart.constant_mean && mart.increments_decreasing,
            format!(
                "means {:?}, ms increments {:?}",
                mart.rows.iter().map(|r| r.mean).collect::<Vec<_>>(),
                mart.mean_square_increments
            ),
        );
    }
    Ok(())
}

fn kind_tag(spec: &EnsembleSpec) -> &'static str {
    match spec {
        EnsembleSpec::HuaPickrell { .. } => "hua-pickrell",
        EnsembleSpec::InverseLaguerre { .. } => "inverse-laguerre",
        EnsembleSpec::Laguerre { .. } => "laguerre",
        EnsembleSpec::CircularJacobi { .. } => "circular-jacobi",
    }
}

fn verify_laguerre_calibration(checks: &mut Vec<Check>) -> beta_moments::Result<()> {
    // The as-printed finite-N formula disagrees with direct quadrature of the
    // inverse-Laguerre density: the prefactor is off by beta^{2r}, and from
    // N = 2, r = 2 onward the hook products belong to the conjugate diagram.
    // The calibrated evaluation corrects both; the single global constant
    // relating the oracle to the calibrated values, fit across all 16 cells,
    // must be 1 to within quadrature accuracy.
    let mut log_ratios = Vec::new();
    for n in 1..=2usize {
        for r in 1..=2u32 {
            let mut worst = 0.0f64;
            let mut printed_ratios = Vec::new();
            for &beta in &[1.0, 2.0, 3.0, 4.0] {
                let nu = 4.0;
                let oracle = inv_laguerre_moment(n, beta, nu, r)?;
                let printed =
                    laguerre_finite_moment(beta, nu, n, r as usize, NormalizationMode::AsPrinted)?;
                let cal = laguerre_finite_moment(
                    beta,
                    nu,
                    n,
                    r as usize,
                    NormalizationMode::OracleCalibrated,
                )?;
                log_ratios.push((oracle.value / cal).ln());
                printed_ratios.push(oracle.value / printed);
                worst = worst.max(((oracle.value - cal) / cal).abs());
            }
            // Reconciliation report: the oracle/printed ratio is beta^{2r} at
            // N = 1 and at N = 2, r = 1, but not at N = 2, r = 2; no single
            // constant (nor single power of beta) rescues the literal formula.
            check(
                checks,
                &format!("laguerre-reconciliation-n{n}-r{r}"),
                worst < 1e-7,
                format!(
                    "oracle vs calibrated max rel diff {worst:.2e}; \
                     oracle/printed by beta in {{1,2,3,4}}: {printed_ratios:?}"
                ),
            );
        }
    }
    let mean_log = log_ratios.iter().sum::<f64>() / log_ratios.len() as f64;
    let residual = log_ratios
        .iter()
        .map(|lr| (lr - mean_log).abs())
        .fold(0.0, f64::max);
    check(
        checks,
        "laguerre-calibration-constant",
        residual < 1e-6,
        format!(
            "global constant {:.9}, max log-residual {residual:.2e} over {} cells",
            mean_log.exp(),
            log_ratios.len()
        ),
    );
    Ok(())
}

/// Gated h = 2 moments-connection check at beta = 2, tau = 3: rows k <= 3 by
/// quadrature, k = 4 by Monte Carlo. (Σx)^4 has infinite variance under
/// tau = 3, so the draws come from the heavier-tailed tau' = 1 law
/// reweighted by w = prod (1+x^2)^{tau'-tau}, which makes w (Σx)^4
/// square-integrable. The tolerance is absolute; the alternating
/// combination amplifies the k = 4 error 24-fold, which rules out a
/// relative reading for any Monte Carlo input.
fn verify_connection_h2(checks: &mut Vec<Check>, seed: u64) -> beta_moments::Result<()> {
    let (beta, tau) = (2.0, 3.0);
    let mut inputs = Vec::new();
    for k in 1..=3usize {
        inputs.push(hp_row_moment(k, beta, tau, 4)?.value);
    }
    let proposal = EnsembleSpec::HuaPickrell {
        beta,
        n: 4,
        tau: Complex64::new(1.0, 0.0),
    };
    let config = McmcConfig {
        n_chains: 8,
        samples_per_chain: 500_000,
        seed,
        ..Default::default()
    };
    let batch = sample_mcmc(&proposal, &config)?;
    let terms: Vec<(f64, f64)> = batch
        .samples
        .iter()
        .map(|x| {
            let w = x
                .iter()
                .map(|&xi| (1.0 + xi * xi).powf(1.0 - tau))
                .product::<f64>();
            (w, w * x.iter().sum::<f64>().powi(4))
        })
        .collect();
    let sw: f64 = terms.iter().map(|t| t.0).sum();
    let swg: f64 = terms.iter().map(|t| t.1).sum();
    let e4 = swg / sw;
    let m = terms.len() as f64;
    let var = terms.iter().map(|&(w, wg)| (wg - e4 * w).powi(2)).sum::<f64>() / (m - 1.0);
    let stderr = (var / m).sqrt() / (sw / m);
    inputs.push(e4);
    let v = moments_connection(beta, tau, 2, &inputs)?;
    let lim = x_moment_limit(beta, tau, 2)?;
    let diff = (v - lim).abs();
    check(
        checks,
        "moments-connection-h2",
        diff < 1e-3,
        format!("connection {v} vs limit {lim}, |diff| {diff:.2e} (E_4 = {e4} +- {stderr})"),
    );
    Ok(())
}

fn run_verify(cmd: VerifyCmd) -> beta_moments::Result<(Report, bool)> {
    let mut checks = Vec::new();
    let (name, seed) = match cmd {
        VerifyCmd::All { seed, slow } => {
            verify_identities(&mut checks)?;
            verify_laguerre_calibration(&mut checks)?;
            verify_convergence(&mut checks, seed)?;
            verify_exchangeability(&mut checks, seed)?;
            if slow {
                verify_connection_h2(&mut checks, seed)?;
            }
            ("verify all", Some(seed))
        }
        VerifyCmd::Identities => {
            verify_identities(&mut checks)?;
            ("verify identities", None)
        }
        VerifyCmd::Convergence { seed } => {
            verify_convergence(&mut checks, seed)?;
            ("verify convergence", Some(seed))
        }
        VerifyCmd::Exchangeability { seed } => {
            verify_exchangeability(&mut checks, seed)?;
            ("verify exchangeability", Some(seed))
        }
        VerifyCmd::LaguerreCalibration => {
            verify_laguerre_calibration(&mut checks)?;
            ("verify laguerre-calibration", None)
        }
    };

    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let all_passed = checks.iter().all(|c| c.passed);
    let report = Report {
        spec: make_spec(name, seed, json!({})),
        result: json!({
            "checks": checks.iter().map(|c| json!({
                "name": c.name, "passed": c.passed, "detail": c.detail,
            })).collect::<Vec<_>>(),
            "passed": all_passed,
        }),
        diagnostics: json!({"n_checks": checks.len()}),
        csv: CsvTable {
            header: vec!["name".into(), "passed".into(), "detail".into()],
            rows: checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.passed.to_string(),
                        format!("\"{}\"", c.detail.replace('"', "'")),
                    ]
                })
                .collect(),
        },
    };
    Ok((report, all_passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }

    let outcome: beta_moments::Result<(Report, bool)> = match cli.command {
        Command::Limits(cmd) => run_limits(cmd).map(|r| (r, true)),
        Command::Finite(cmd) => run_finite(cmd).map(|r| (r, true)),
        Command::Sample(cmd) => run_sample(cmd).map(|r| (r, true)),
        Command::Oracle(cmd) => run_oracle(cmd).map(|r| (r, true)),
        Command::Verify(cmd) => run_verify(cmd),
    };

    match outcome {
        Ok((report, passed)) => {
            if let Err(e) = write_report(cli.format, &cli.output, &report) {
                eprintln!("error: failed to write output: {e}");
                return ExitCode::from(2);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}
