//! Monte Carlo estimators with standard errors: rescaled trace moments of
//! the Hua-Pickrell ensemble, joint moments of the circular Jacobi
//! characteristic polynomial, logarithmic-derivative moments of the Laguerre
//! ensemble, and distributional checks on interlacing arrays.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{
    sample_laguerre_tridiag, sample_mcmc, EnsembleSpec, InterlacingArray, McmcConfig,
};
use crate::{Error, Result};

/// A sample-mean estimate with its standard error and provenance.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    /// Sample standard deviation over sqrt(n) of the post-burn-in, thinned
    /// draws (for the importance-weighted estimator: delta-method error).
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub spec: EnsembleSpec,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// N^{-2h} E[|x_1 + ... + x_N|^{2h}] under a Hua-Pickrell ensemble,
/// 0 <= h < Re(tau) + 1/2. Non-integer h is fine; the power is taken in log
/// space.
pub fn estimate_trace_moment(
    spec: &EnsembleSpec,
    h: f64,
    config: &McmcConfig,
) -> Result<MomentEstimate> {
    let tau = match *spec {
        EnsembleSpec::HuaPickrell { tau, .. } => tau,
        _ => {
            return Err(Error::InvalidArgument(
                "estimate_trace_moment is defined for the Hua-Pickrell kind".into(),
            ))
        }
    };
    if !(0.0..tau.re + 0.5).contains(&h) {
        return Err(Error::Domain(format!(
            "trace moment window is 0 <= h < Re(tau) + 1/2, got h = {h}"
        )));
    }
    if h == 0.0 {
        return Ok(MomentEstimate {
            value: 1.0,
            stderr: 0.0,
            n_samples: 0,
            seed: config.seed,
            spec: *spec,
        });
    }
    let n = spec.n() as f64;
    let batch = sample_mcmc(spec, config)?;
    let values: Vec<f64> = batch
        .samples
        .iter()
        .map(|x| {
            let s: f64 = x.iter().sum();
            (2.0 * h * (s.abs().ln() - n.ln())).exp()
        })
        .collect();
    let (value, stderr) = mean_and_stderr(&values);
    Ok(MomentEstimate {
        value,
        stderr,
        n_samples: values.len(),
        seed: config.seed,
        spec: *spec,
    })
}

/// E[(x_1 + ... + x_N)^power] (signed, unrescaled) under any real-coordinate
/// ensemble kind; used for odd-moment nullity checks and as the large-k input
/// of the moment-connection identity.
pub fn estimate_sum_power_moment(
    spec: &EnsembleSpec,
    power: u32,
    config: &McmcConfig,
) -> Result<MomentEstimate> {
    if matches!(spec, EnsembleSpec::CircularJacobi { .. }) {
        return Err(Error::InvalidArgument(
            "estimate_sum_power_moment expects a real-coordinate kind".into(),
        ));
    }
    let batch = sample_mcmc(spec, config)?;
    let values: Vec<f64> = batch
        .samples
        .iter()
        .map(|x| x.iter().sum::<f64>().powi(power as i32))
        .collect();
    let (value, stderr) = mean_and_stderr(&values);
    Ok(MomentEstimate {
        value,
        stderr,
        n_samples: values.len(),
        seed: config.seed,
        spec: *spec,
    })
}

/// log |Psi(0)| = sum log(2 sin(theta_j / 2)) for angles in (0, 2 pi).
pub fn log_psi_abs(thetas: &[f64]) -> f64 {
    thetas.iter().map(|&t| (2.0 * (0.5 * t).sin()).ln()).sum()
}

/// Psi'(0) / Psi(0) = -(1/2) sum cot(theta_j / 2).
pub fn psi_log_derivative(thetas: &[f64]) -> f64 {
    -0.5 * thetas.iter().map(|&t| 1.0 / (0.5 * t).tan()).sum::<f64>()
}

/// A circular Jacobi joint-moment ratio estimate plus weight diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CjbeEstimate {
    pub estimate: MomentEstimate,
    /// Effective sample size of the importance weights (equals n_samples
    /// when the direct tilted chain was used).
    pub ess: f64,
    /// True when the weights degenerated (ESS < 10%) and the estimator fell
    /// back to sampling the tilted law directly.
    pub used_direct_tilt: bool,
}

/// Estimates the ratio F_{N,beta,delta}(s,h) / F_{N,beta,delta}(s,0) by
/// importance reweighting of a chain targeting the untilted circular Jacobi
/// law with weights |Psi(0)|^{2s}; the full joint moment is obtained by
/// multiplying `limits::cjbe_finite_f0`. If the weights degenerate the
/// estimator reruns against the s-tilted law directly.
pub fn estimate_joint_moment_cjbe(
    n: usize,
    beta: f64,
    delta: f64,
    s: f64,
    h: f64,
    config: &McmcConfig,
) -> Result<CjbeEstimate> {
    if !(h > -0.5 && h < delta + s + 0.5) {
        return Err(Error::Domain(format!(
            "joint moment window is -1/2 < h < delta + s + 1/2, got h = {h}"
        )));
    }
    let base = EnsembleSpec::CircularJacobi {
        beta,
        n,
        delta: delta.into(),
        s: 0.0,
    };
    base.validate()?;

    let g_of = |thetas: &[f64]| -> f64 {
        if h == 0.0 {
            1.0
        } else {
            (2.0 * h * psi_log_derivative(thetas).abs().ln()).exp()
        }
    };

    let batch = sample_mcmc(&base, config)?;
    let log_w: Vec<f64> = batch
        .samples
        .iter()
        .map(|t| 2.0 * s * log_psi_abs(t))
        .collect();
    let max_lw = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|&lw| (lw - max_lw).exp()).collect();
    let sum_w: f64 = w.iter().sum();
    let sum_w2: f64 = w.iter().map(|&x| x * x).sum();
    let ess = sum_w * sum_w / sum_w2;
    let n_samples = batch.samples.len();

    if ess >= 0.1 * n_samples as f64 {
        let g: Vec<f64> = batch.samples.iter().map(|t| g_of(t)).collect();
        let value = w.iter().zip(&g).map(|(&wi, &gi)| wi * gi).sum::<f64>() / sum_w;
        // Delta-method standard error of the self-normalized ratio.
        let stderr = w
            .iter()
            .zip(&g)
            .map(|(&wi, &gi)| (wi * (gi - value)).powi(2))
            .sum::<f64>()
            .sqrt()
            / sum_w;
        return Ok(CjbeEstimate {
            estimate: MomentEstimate {
                value,
                stderr,
                n_samples,
                seed: config.seed,
                spec: base,
            },
            ess,
            used_direct_tilt: false,
        });
    }

    let tilted = EnsembleSpec::CircularJacobi {
        beta,
        n,
        delta: delta.into(),
        s,
    };
    let batch = sample_mcmc(&tilted, config)?;
    let g: Vec<f64> = batch.samples.iter().map(|t| g_of(t)).collect();
    let (value, stderr) = mean_and_stderr(&g);
    Ok(CjbeEstimate {
        estimate: MomentEstimate {
            value,
            stderr,
            n_samples: g.len(),
            seed: config.seed,
            spec: tilted,
        },
        ess: g.len() as f64,
        used_direct_tilt: true,
    })
}

/// N^{-r} E[(1/x_1 + ... + 1/x_N)^r] under the Laguerre ensemble with weight
/// x^nu e^{-x}, from exact tridiagonal-model draws. 0 <= r < nu + 1; r may be
/// non-integer.
pub fn estimate_g_laguerre(
    n: usize,
    beta: f64,
    nu: f64,
    r: f64,
    config: &McmcConfig,
) -> Result<MomentEstimate> {
    let spec = EnsembleSpec::Laguerre { beta, n, nu };
    spec.validate()?;
    if !(0.0..nu + 1.0).contains(&r) {
        return Err(Error::Domain(format!(
            "G-moment window is 0 <= r < nu + 1, got r = {r}"
        )));
    }
    if r == 0.0 {
        return Ok(MomentEstimate {
            value: 1.0,
            stderr: 0.0,
            n_samples: 0,
            seed: config.seed,
            spec,
        });
    }
    let nf = n as f64;
    // Chain-parallel exact sampling on fixed RNG streams: deterministic for a
    // given (seed, config) regardless of scheduling.
    let per_chain: Vec<Vec<f64>> = (0..config.n_chains)
        .into_par_iter()
        .map(|chain| -> Result<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(chain as u64 + 1);
            (0..config.samples_per_chain)
                .map(|_| {
                    let x = sample_laguerre_tridiag(n, beta, nu, &mut rng)?;
                    let inv_sum: f64 = x.iter().map(|&v| 1.0 / v).sum();
                    Ok((r * (inv_sum.ln() - nf.ln())).exp())
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_chain.into_iter().flatten().collect();
    let (value, stderr) = mean_and_stderr(&values);
    Ok(MomentEstimate {
        value,
        stderr,
        n_samples: values.len(),
        seed: config.seed,
        spec,
    })
}

// ---------------------------------------------------------------------------
// Interlacing-array checks
// ---------------------------------------------------------------------------

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let xa = sa[i];
        let xb = sb[j];
        if xa <= xb {
            i += 1;
        }
        if xb <= xa {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na as f64 * nb as f64) / (na + nb) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    (d, kolmogorov_q(lambda))
}

/// Kolmogorov tail function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One permutation test of the exchangeability report.
#[derive(Debug, Clone, Serialize)]
pub struct PermutationTest {
    /// Permutation of {1..k}, 1-based.
    pub permutation: Vec<usize>,
    /// Max over positions of the per-coordinate two-sample KS statistic.
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExchangeabilityReport {
    pub k: usize,
    pub n_arrays: usize,
    pub tests: Vec<PermutationTest>,
}

impl ExchangeabilityReport {
    /// True when no permutation rejects at level alpha.
    pub fn passes(&self, alpha: f64) -> bool {
        self.tests.iter().all(|t| t.p_value > alpha)
    }
}

/// Compares the empirical law of (d_{sigma(1)}, ..., d_{sigma(k)}) with that
/// of (d_1, ..., d_k), where d_i are the diagonal entries of each array, for
/// the identity, all transpositions and a few random permutations.
pub fn exchangeability_test<R: Rng + ?Sized>(
    arrays: &[InterlacingArray],
    k: usize,
    rng: &mut R,
) -> Result<ExchangeabilityReport> {
    if k < 2 {
        return Err(Error::InvalidArgument("need k >= 2".into()));
    }
    if arrays.len() < 100 {
        return Err(Error::InvalidArgument(
            "insufficient sample size for the KS test (need >= 100 arrays)".into(),
        ));
    }
    if arrays.iter().any(|a| a.depth() < k) {
        return Err(Error::InvalidArgument(format!(
            "all arrays must have depth >= {k}"
        )));
    }
    // columns[i] = sample of d_{i+1} across arrays.
    let diag: Vec<Vec<f64>> = arrays.iter().map(|a| a.diagonal_entries()).collect();
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|i| diag.iter().map(|d| d[i]).collect())
        .collect();

    let mut perms: Vec<Vec<usize>> = vec![(0..k).collect()];
    for i in 0..k {
        for j in i + 1..k {
            let mut p: Vec<usize> = (0..k).collect();
            p.swap(i, j);
            perms.push(p);
        }
    }
    for _ in 0..3usize.saturating_sub(if k > 2 { 0 } else { 3 }) {
        let mut p: Vec<usize> = (0..k).collect();
        // Fisher-Yates with the caller's RNG.
        for i in (1..k).rev() {
            let j = rng.random_range(0..=i);
            p.swap(i, j);
        }
        if !perms.contains(&p) {
            perms.push(p);
        }
    }

    let tests = perms
        .into_iter()
        .map(|p| {
            let mut statistic = 0.0f64;
            let mut p_value = 1.0f64;
            for (pos, &src) in p.iter().enumerate() {
                if src == pos {
                    continue;
                }
                let (d, q) = ks_two_sample(&columns[src], &columns[pos]);
                if d > statistic {
                    statistic = d;
                    p_value = q;
                }
            }
            PermutationTest {
                permutation: p.iter().map(|&i| i + 1).collect(),
                statistic,
                p_value,
            }
        })
        .collect();
    Ok(ExchangeabilityReport {
        k,
        n_arrays: arrays.len(),
        tests,
    })
}

/// Per-depth statistics of the row averages T_N of a batch of arrays.
#[derive(Debug, Clone, Serialize)]
pub struct MartingaleRow {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub rows: Vec<MartingaleRow>,
    /// Mean-square per-path differences E[(T_b - T_a)^2] for consecutive
    /// entries (a, b) of the requested depth list.
    pub mean_square_increments: Vec<(usize, usize, f64)>,
    /// E[T_N] agrees across depths within 3 combined standard errors.
    pub constant_mean: bool,
    /// The mean-square increments are non-increasing along the depth list.
    pub increments_decreasing: bool,
}

/// Checks the reverse-martingale structure of the row averages: E[T_N] is
/// constant in N and per-path fluctuations settle as the depth grows.
pub fn martingale_check(arrays: &[InterlacingArray], n_list: &[usize]) -> Result<MartingaleReport> {
    if arrays.is_empty() || n_list.is_empty() {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    let max_n = *n_list.iter().max().unwrap();
    if n_list.iter().any(|&n| n == 0) || arrays.iter().any(|a| a.depth() < max_n) {
        return Err(Error::InvalidArgument(format!(
            "all arrays must have depth >= {max_n} and depths must be >= 1"
        )));
    }
    let t_at = |n: usize| -> Vec<f64> { arrays.iter().map(|a| a.row_sum(n) / n as f64).collect() };

    let rows: Vec<MartingaleRow> = n_list
        .iter()
        .map(|&n| {
            let t = t_at(n);
            let (mean, stderr) = mean_and_stderr(&t);
            let variance = stderr * stderr * t.len() as f64;
            MartingaleRow {
                n,
                mean,
                variance,
                stderr,
            }
        })
        .collect();

    let constant_mean = rows.iter().all(|r| {
        let r0 = &rows[0];
        (r.mean - r0.mean).abs() <= 3.0 * (r.stderr.powi(2) + r0.stderr.powi(2)).sqrt()
    });

    let mut mean_square_increments = Vec::new();
    for w in n_list.windows(2) {
        let (ta, tb) = (t_at(w[0]), t_at(w[1]));
        let ms = ta
            .iter()
            .zip(&tb)
            .map(|(&a, &b)| (b - a).powi(2))
            .sum::<f64>()
            / ta.len() as f64;
        mean_square_increments.push((w[0], w[1], ms));
    }
    let increments_decreasing = mean_square_increments
        .windows(2)
        .all(|w| w[1].2 <= w[0].2);

    Ok(MartingaleReport {
        rows,
        mean_square_increments,
        constant_mean,
        increments_decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_array, sample_inverse_laguerre};
    use num_complex::Complex64;

    fn hp(n: usize, tau: f64) -> EnsembleSpec {
        EnsembleSpec::HuaPickrell {
            beta: 2.0,
            n,
            tau: Complex64::new(tau, 0.0),
        }
    }

    #[test]
    fn trace_moment_h_zero_is_trivial() {
        let e = estimate_trace_moment(&hp(3, 1.0), 0.0, &McmcConfig::default()).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn trace_moment_window_enforced() {
        assert!(matches!(
            estimate_trace_moment(&hp(2, 1.0), 1.6, &McmcConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn trace_moment_single_particle_second_moment() {
        // N=1, tau=2: E[x^2] = Gamma(3/2)^2 / (Gamma(1/2) Gamma(5/2)) = 1/3
        // from the Cauchy-type integral. (tau = 1 would have an infinite
        // fourth moment, making the sample mean converge too slowly to test.)
        let config = McmcConfig {
            samples_per_chain: 10000,
            ..Default::default()
        };
        let e = estimate_trace_moment(&hp(1, 2.0), 1.0, &config).unwrap();
        assert!(
            (e.value - 1.0 / 3.0).abs() < 4.0 * e.stderr.max(0.002),
            "value {} stderr {}",
            e.value,
            e.stderr
        );
    }

    #[test]
    fn odd_sum_moment_vanishes() {
        let e =
            estimate_sum_power_moment(&hp(2, 2.0), 1, &McmcConfig::default()).unwrap();
        assert!(e.value.abs() < 4.0 * e.stderr, "value {} stderr {}", e.value, e.stderr);
    }

    #[test]
    fn psi_helpers_trivial_values() {
        let pi = std::f64::consts::PI;
        assert!((log_psi_abs(&[pi]).exp() - 2.0).abs() < 1e-14);
        assert!(psi_log_derivative(&[pi, pi]).abs() < 1e-14);
    }

    #[test]
    fn cjbe_single_particle_ratio() {
        // N=1, delta=0, s=1, h=1: the ratio is E[cos^2]/E[4 sin^2] = 1/4
        // over the uniform angle.
        let config = McmcConfig {
            samples_per_chain: 4000,
            ..Default::default()
        };
        let e = estimate_joint_moment_cjbe(1, 2.0, 0.0, 1.0, 1.0, &config).unwrap();
        assert!(
            (e.estimate.value - 0.25).abs() < 4.0 * e.estimate.stderr.max(0.005),
            "value {} stderr {} ess {}",
            e.estimate.value,
            e.estimate.stderr,
            e.ess
        );
        assert!(e.ess > 0.0);
    }

    #[test]
    fn cjbe_determinism() {
        let config = McmcConfig::default();
        let a = estimate_joint_moment_cjbe(3, 2.0, 0.5, 1.0, 1.0, &config).unwrap();
        let b = estimate_joint_moment_cjbe(3, 2.0, 0.5, 1.0, 1.0, &config).unwrap();
        assert_eq!(a.estimate.value.to_bits(), b.estimate.value.to_bits());
    }

    #[test]
    fn g_laguerre_trivial_and_single_particle() {
        let e = estimate_g_laguerre(4, 2.0, 3.0, 0.0, &McmcConfig::default()).unwrap();
        assert_eq!(e.value, 1.0);

        let config = McmcConfig {
            samples_per_chain: 20000,
            ..Default::default()
        };
        // E[1/x] = 1/nu under the Gamma(nu+1) law.
        let e = estimate_g_laguerre(1, 2.0, 2.0, 1.0, &config).unwrap();
        assert!(
            (e.value - 0.5).abs() < 4.0 * e.stderr,
            "value {} stderr {}",
            e.value,
            e.stderr
        );
    }

    #[test]
    fn g_laguerre_determinism() {
        let config = McmcConfig::default();
        let a = estimate_g_laguerre(3, 2.0, 3.0, 1.0, &config).unwrap();
        let b = estimate_g_laguerre(3, 2.0, 3.0, 1.0, &config).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let (d, p) = ks_two_sample(&a, &a);
        assert_eq!(d, 0.0);
        assert!(p > 0.999);
    }

    #[test]
    fn ks_separated_samples_reject() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = (0..500).map(|i| 10.0 + i as f64 / 500.0).collect();
        let (d, p) = ks_two_sample(&a, &b);
        assert!((d - 1.0).abs() < 1e-12);
        assert!(p < 1e-6);
    }

    fn il_arrays(count: usize, depth: usize, seed: u64) -> Vec<InterlacingArray> {
        let spec = EnsembleSpec::InverseLaguerre {
            beta: 4.0,
            n: depth,
            nu: 2.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let top = sample_inverse_laguerre(depth, 4.0, 2.0, &mut rng).unwrap();
                sample_array(&spec, top, &mut rng).unwrap()
            })
            .collect()
    }

    #[test]
    fn exchangeability_inverse_laguerre() {
        let arrays = il_arrays(2000, 3, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report = exchangeability_test(&arrays, 3, &mut rng).unwrap();
        let identity = &report.tests[0];
        assert_eq!(identity.statistic, 0.0);
        assert!(report.passes(0.01), "{:?}", report.tests);
    }

    #[test]
    fn exchangeability_needs_enough_arrays() {
        let arrays = il_arrays(10, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(exchangeability_test(&arrays, 2, &mut rng).is_err());
    }

    #[test]
    fn martingale_inverse_laguerre_mean_one() {
        // E[T_N] = E[T_1] = 2/nu = 1 for every depth.
        let arrays = il_arrays(2000, 8, 3);
        let report = martingale_check(&arrays, &[1, 2, 4, 8]).unwrap();
        assert!(report.constant_mean, "{:?}", report.rows);
        let r1 = &report.rows[0];
        assert!(
            (r1.mean - 1.0).abs() < 3.0 * r1.stderr,
            "mean {} stderr {}",
            r1.mean,
            r1.stderr
        );
        assert!(report.increments_decreasing, "{:?}", report.mean_square_increments);
    }
}
