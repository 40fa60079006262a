//! Ensembles and samplers: log-densities and normalization constants of the
//! Hua-Pickrell, circular Jacobi, Laguerre and inverse-Laguerre ensembles,
//! the Dixon-Anderson corner kernel, and generation of consistent
//! interlacing arrays.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma as GammaDist, Normal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::specfun::ln_gamma;
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One of the four ensembles of the pipeline. Coordinates live in the Weyl
/// chamber (weakly decreasing vectors), except for the circular ensemble
/// whose angles live in increasing order in (0, 2 pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EnsembleSpec {
    /// Weight prod (1 + i x)^{-tau - beta(N-1)/2 - 1} (1 - i x)^{-conj tau - beta(N-1)/2 - 1}
    /// together with |Vandermonde|^beta.
    HuaPickrell { beta: f64, n: usize, tau: Complex64 },
    /// Circular Jacobi weight with spectral parameter delta, tilted by
    /// |Psi(0)|^{2s}; the tilt is absorbed into the weight, which makes the
    /// stored law the circular Jacobi ensemble with parameter delta + s.
    CircularJacobi {
        beta: f64,
        n: usize,
        delta: Complex64,
        s: f64,
    },
    /// Weight prod x^nu e^{-x} with |Vandermonde|^beta on the positive chamber.
    Laguerre { beta: f64, n: usize, nu: f64 },
    /// Image of the Laguerre ensemble under x -> 2/x:
    /// weight prod x^{-nu-(N-1)beta-2} e^{-2/x}.
    InverseLaguerre { beta: f64, n: usize, nu: f64 },
}

impl EnsembleSpec {
    pub fn beta(&self) -> f64 {
        match *self {
            EnsembleSpec::HuaPickrell { beta, .. }
            | EnsembleSpec::CircularJacobi { beta, .. }
            | EnsembleSpec::Laguerre { beta, .. }
            | EnsembleSpec::InverseLaguerre { beta, .. } => beta,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            EnsembleSpec::HuaPickrell { n, .. }
            | EnsembleSpec::CircularJacobi { n, .. }
            | EnsembleSpec::Laguerre { n, .. }
            | EnsembleSpec::InverseLaguerre { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta() > 0.0) || !self.beta().is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be a positive real, got {}",
                self.beta()
            )));
        }
        if self.n() == 0 {
            return Err(Error::InvalidArgument("N must be >= 1".into()));
        }
        match *self {
            EnsembleSpec::HuaPickrell { tau, .. } => {
                if tau.re <= -0.5 {
                    return Err(Error::InvalidArgument(format!(
                        "Hua-Pickrell requires Re(tau) > -1/2, got {}",
                        tau.re
                    )));
                }
            }
            EnsembleSpec::CircularJacobi { delta, s, .. } => {
                if delta.re <= -0.5 {
                    return Err(Error::InvalidArgument(format!(
                        "circular Jacobi requires Re(delta) > -1/2, got {}",
                        delta.re
                    )));
                }
                if delta.re + s <= -0.5 {
                    return Err(Error::InvalidArgument(
                        "tilted weight requires Re(delta) + s > -1/2".into(),
                    ));
                }
            }
            EnsembleSpec::Laguerre { nu, .. } | EnsembleSpec::InverseLaguerre { nu, .. } => {
                if nu <= -1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "Laguerre-type ensembles require nu > -1, got {nu}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The exponent window in which the joint moments F_{N,beta,delta}(s,h)
    /// exist: -1/2 < h < Re(delta) + s + 1/2. Only meaningful for the
    /// circular Jacobi kind.
    pub fn joint_moment_window(&self, h: f64) -> bool {
        match *self {
            EnsembleSpec::CircularJacobi { delta, s, .. } => {
                h > -0.5 && h < delta.re + s + 0.5
            }
            _ => false,
        }
    }

    fn is_circular(&self) -> bool {
        matches!(self, EnsembleSpec::CircularJacobi { .. })
    }

    fn positive_support(&self) -> bool {
        matches!(
            self,
            EnsembleSpec::Laguerre { .. } | EnsembleSpec::InverseLaguerre { .. }
        )
    }
}

fn check_point(spec: &EnsembleSpec, point: &[f64]) -> Result<()> {
    if point.len() != spec.n() {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, ensemble has N = {}",
            point.len(),
            spec.n()
        )));
    }
    if spec.is_circular() {
        if point.iter().any(|&t| !(0.0..=TWO_PI).contains(&t)) {
            return Err(Error::InvalidArgument(
                "angles must lie in [0, 2 pi]".into(),
            ));
        }
        if point.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "angles must be weakly increasing".into(),
            ));
        }
    } else {
        if point.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "point must be weakly decreasing (Weyl chamber)".into(),
            ));
        }
        if spec.positive_support() && point.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidArgument(
                "point must be strictly positive".into(),
            ));
        }
    }
    Ok(())
}

/// Unnormalized log-density of `spec` at `point` (the ordered representative;
/// the constant N! between the chamber and the symmetrized version is part of
/// the normalization, not of this function). Returns -infinity where the
/// density vanishes inside the support closure.
pub fn log_density(spec: &EnsembleSpec, point: &[f64]) -> Result<f64> {
    spec.validate()?;
    check_point(spec, point)?;
    Ok(log_density_unchecked(spec, point))
}

pub(crate) fn log_density_unchecked(spec: &EnsembleSpec, point: &[f64]) -> f64 {
    let beta = spec.beta();
    let mut ld = 0.0;
    for (i, &xi) in point.iter().enumerate() {
        ld += single_site_log_weight(spec, xi);
        for &xj in &point[i + 1..] {
            ld += beta * pair_log_repulsion(spec, xi, xj);
        }
    }
    ld
}

fn single_site_log_weight(spec: &EnsembleSpec, x: f64) -> f64 {
    match *spec {
        EnsembleSpec::HuaPickrell { beta, n, tau } => {
            // |(1+ix)^{-tau-c}(1-ix)^{-conj tau-c}| with c = beta(N-1)/2 + 1:
            // (1+x^2)^{-Re tau - c} e^{2 Im tau arctan x}.
            let c = 0.5 * beta * (n as f64 - 1.0) + 1.0;
            -(tau.re + c) * x.mul_add(x, 1.0).ln() + 2.0 * tau.im * x.atan()
        }
        EnsembleSpec::CircularJacobi { delta, s, .. } => {
            // (1-e^{-i theta})^d (1-e^{i theta})^{conj d} with d = delta + s:
            // (2 sin(theta/2))^{2 Re d} e^{Im d (theta - pi)} on (0, 2 pi).
            let d = delta + s;
            if x <= 0.0 || x >= TWO_PI {
                return f64::NEG_INFINITY;
            }
            2.0 * d.re * (2.0 * (0.5 * x).sin()).ln() + d.im * (x - std::f64::consts::PI)
        }
        EnsembleSpec::Laguerre { nu, .. } => {
            if x <= 0.0 {
                return f64::NEG_INFINITY;
            }
            nu * x.ln() - x
        }
        EnsembleSpec::InverseLaguerre { beta, n, nu } => {
            if x <= 0.0 {
                return f64::NEG_INFINITY;
            }
            -(nu + (n as f64 - 1.0) * beta + 2.0) * x.ln() - 2.0 / x
        }
    }
}

fn pair_log_repulsion(spec: &EnsembleSpec, xi: f64, xj: f64) -> f64 {
    if spec.is_circular() {
        // |e^{i a} - e^{i b}| = 2 |sin((a-b)/2)|
        (2.0 * (0.5 * (xi - xj)).sin().abs()).ln()
    } else {
        (xi - xj).abs().ln()
    }
}

/// log of the Hua-Pickrell normalization constant C_{N,beta}^{(tau)} for
/// real tau:
/// 2^{-beta N(N-1)/2 - 2 N tau} pi^N prod_{j=0}^{N-1}
///   Gamma((beta/2) j + 2 tau + 1) Gamma((beta/2)(j+1) + 1)
///   / (Gamma((beta/2) j + tau + 1)^2 Gamma(beta/2 + 1)).
///
/// It normalizes the symmetrized density: the chamber-restricted measure
/// carries an extra N!.
pub fn hp_log_norm_const(n: usize, beta: f64, tau: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    if tau <= -0.5 {
        return Err(Error::Domain(format!(
            "hp_log_norm_const requires tau > -1/2, got {tau}"
        )));
    }
    let half = 0.5 * beta;
    let mut ld = -(half * (n * (n - 1)) as f64 + 2.0 * n as f64 * tau) * 2f64.ln()
        + n as f64 * std::f64::consts::PI.ln();
    for j in 0..n {
        let hj = half * j as f64;
        ld += ln_gamma(hj + 2.0 * tau + 1.0)?;
        ld += ln_gamma(half * (j + 1) as f64 + 1.0)?;
        ld -= 2.0 * ln_gamma(hj + tau + 1.0)?;
        ld -= ln_gamma(half + 1.0)?;
    }
    Ok(ld)
}

/// log of the Laguerre normalization l_{N,beta}^{(nu)} =
/// prod_{j=0}^{N-1} Gamma(nu+1+(beta/2)j) Gamma(1+(beta/2)(j+1)) / Gamma(1+beta/2).
pub fn laguerre_log_norm_const(n: usize, beta: f64, nu: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let half = 0.5 * beta;
    let mut ld = 0.0;
    for j in 0..n {
        ld += ln_gamma(nu + 1.0 + half * j as f64)?;
        ld += ln_gamma(1.0 + half * (j + 1) as f64)?;
        ld -= ln_gamma(1.0 + half)?;
    }
    Ok(ld)
}

/// log of the constant Z such that exp(log_density - log Z) integrates to 1
/// over the ensemble's chamber. Available for Hua-Pickrell with real tau and
/// the two Laguerre kinds.
pub fn log_chamber_normalization(spec: &EnsembleSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.n();
    let ln_nfact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let log_z = match *spec {
        EnsembleSpec::HuaPickrell { beta, tau, .. } => {
            if tau.im != 0.0 {
                return Err(Error::InvalidArgument(
                    "closed-form normalization is only available for real tau".into(),
                ));
            }
            hp_log_norm_const(n, beta, tau.re)?
        }
        EnsembleSpec::Laguerre { beta, nu, .. } => laguerre_log_norm_const(n, beta, nu)?,
        EnsembleSpec::InverseLaguerre { beta, nu, .. } => {
            // Transport of the Laguerre constant under x -> 2/x.
            laguerre_log_norm_const(n, beta, nu)?
                - (n as f64 * nu + 0.5 * beta * (n * (n - 1)) as f64 + n as f64) * 2f64.ln()
        }
        EnsembleSpec::CircularJacobi { .. } => {
            return Err(Error::InvalidArgument(
                "no closed-form chamber normalization is exposed for the circular kind".into(),
            ));
        }
    };
    Ok(log_z - ln_nfact)
}

/// Normalized log-density on the Weyl chamber (includes the N! and the
/// closed-form constant). Available for Hua-Pickrell with real tau and the
/// two Laguerre kinds.
pub fn normalized_log_density(spec: &EnsembleSpec, point: &[f64]) -> Result<f64> {
    let raw = log_density(spec, point)?;
    Ok(raw - log_chamber_normalization(spec)?)
}

// ---------------------------------------------------------------------------
// Dixon-Anderson kernel
// ---------------------------------------------------------------------------

fn check_da_y(y: &[f64]) -> Result<()> {
    if y.len() < 2 {
        return Err(Error::InvalidArgument(
            "Dixon-Anderson kernel needs at least 2 source points".into(),
        ));
    }
    if y.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument(
            "source configuration must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// log-density of the Dixon-Anderson Markov kernel from an (N+1)-point
/// strictly decreasing configuration `y` to the N-point configuration `x`:
/// Gamma(beta(N+1)/2)/Gamma(beta/2)^{N+1}
///   prod_{i<j} (y_i - y_j)^{1-beta} prod_{i<j} (x_i - x_j)
///   prod_{i,j} |x_i - y_j|^{beta/2 - 1}
/// on the interlacing polytope {x interlaces y}; -infinity outside.
pub fn da_kernel_log_density(beta: f64, y: &[f64], x: &[f64]) -> Result<f64> {
    check_da_y(y)?;
    let n = y.len() - 1;
    if x.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {} target points, got {}",
            n,
            x.len()
        )));
    }
    // Interlacing: y_1 >= x_1 >= y_2 >= ... >= y_N >= x_N >= y_{N+1}.
    for i in 0..n {
        if !(y[i] >= x[i] && x[i] >= y[i + 1]) {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let half_m1 = 0.5 * beta - 1.0;
    // Boundary contact: the |x - y| factor vanishes (beta > 2), is constant
    // (beta = 2), or blows up (beta < 2); the density value at contact is the
    // continuous limit, which is -infinity only for beta > 2.
    let mut ld = ln_gamma(0.5 * beta * (n + 1) as f64)? - (n as f64 + 1.0) * ln_gamma(0.5 * beta)?;
    for i in 0..=n {
        for j in i + 1..=n {
            ld += (1.0 - beta) * (y[i] - y[j]).ln();
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            ld += (x[i] - x[j]).ln();
        }
    }
    for &xi in x {
        for &yj in y {
            if xi == yj {
                return Ok(if half_m1 > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                });
            }
            ld += half_m1 * (xi - yj).abs().ln();
        }
    }
    Ok(ld)
}

/// Draws one configuration from the Dixon-Anderson kernel at `y`, exactly.
///
/// Uses the random-polynomial characterization of the kernel: with Dirichlet
/// weights (w_1, ..., w_{N+1}) ~ Dir(beta/2, ..., beta/2), the output points
/// are the roots of sum_j w_j / (t - y_j), one in each gap (y_{j+1}, y_j).
/// The rational function is strictly decreasing from +infinity to -infinity
/// on each gap, so each root is found by bisection. For N = 1 this reduces
/// to y_2 + (y_1 - y_2) Beta(beta/2, beta/2), and for beta = 2 the roots are
/// distributed as the ordered uniform sample of the polytope.
pub fn sample_da<R: Rng + ?Sized>(beta: f64, y: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_da_y(y)?;
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("beta must be > 0".into()));
    }
    let m = y.len();
    if m == 2 {
        let b = BetaDist::new(0.5 * beta, 0.5 * beta)
            .map_err(|e| Error::InvalidArgument(format!("beta distribution: {e}")))?;
        let t: f64 = b.sample(rng);
        return Ok(vec![y[1] + (y[0] - y[1]) * t]);
    }
    let gamma = GammaDist::new(0.5 * beta, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("gamma distribution: {e}")))?;
    let mut w: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    let f = |t: f64| -> f64 { w.iter().zip(y).map(|(&wj, &yj)| wj / (t - yj)).sum() };
    let mut x = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        // Unique zero of f in (y_{i+1}, y_i); f decreases from +inf to -inf.
        let (mut lo, mut hi) = (y[i + 1], y[i]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x.push(0.5 * (lo + hi));
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Random-walk Metropolis sampling
// ---------------------------------------------------------------------------

/// Chain settings for [`sample_mcmc`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McmcConfig {
    pub n_chains: usize,
    /// Retained draws per chain (after burn-in and thinning).
    pub samples_per_chain: usize,
    /// Discarded adaptation sweeps per chain.
    pub burn_in: usize,
    /// Sweeps between retained draws.
    pub thin: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_chains: 4,
            samples_per_chain: 2000,
            burn_in: 2000,
            thin: 5,
            seed: 1,
        }
    }
}

/// Sampler diagnostics: overall acceptance rate, split-chain potential scale
/// reduction of the coordinate sum, and the adapted proposal scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McmcDiagnostics {
    pub acceptance_rate: f64,
    pub r_hat: f64,
    pub proposal_scale: f64,
    /// False when the diagnostics exceeded their thresholds
    /// (acceptance outside [0.15, 0.6] or R-hat > 1.05).
    pub converged: bool,
}

/// A batch of draws plus diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct McmcBatch {
    pub samples: Vec<Vec<f64>>,
    pub diagnostics: McmcDiagnostics,
}

/// Samples `spec` by per-coordinate Gaussian random-walk Metropolis.
///
/// Coordinates are treated as unordered (the density is symmetric) and each
/// retained draw is sorted into the chamber convention on output. The
/// proposal scale is adapted during burn-in towards 30-45% acceptance and
/// frozen afterwards. Chains run on independent, fixed RNG streams, so the
/// output is reproducible given (seed, config) regardless of thread
/// scheduling.
pub fn sample_mcmc(spec: &EnsembleSpec, config: &McmcConfig) -> Result<McmcBatch> {
    spec.validate()?;
    if config.n_chains == 0 || config.samples_per_chain == 0 {
        return Err(Error::InvalidArgument(
            "need at least one chain and one sample".into(),
        ));
    }
    let chains: Vec<ChainResult> = (0..config.n_chains)
        .into_par_iter()
        .map(|chain| run_chain(spec, config, chain as u64))
        .collect();

    let mut samples = Vec::with_capacity(config.n_chains * config.samples_per_chain);
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut scale_sum = 0.0;
    for c in &chains {
        samples.extend(c.samples.iter().cloned());
        accepted += c.accepted;
        proposed += c.proposed;
        scale_sum += c.scale;
    }
    let acceptance_rate = accepted as f64 / proposed.max(1) as f64;
    let r_hat = split_r_hat(&chains.iter().map(|c| c.sum_trace.clone()).collect::<Vec<_>>());
    let diagnostics = McmcDiagnostics {
        acceptance_rate,
        r_hat,
        proposal_scale: scale_sum / config.n_chains as f64,
        converged: (0.15..=0.6).contains(&acceptance_rate) && r_hat < 1.05,
    };
    Ok(McmcBatch {
        samples,
        diagnostics,
    })
}

struct ChainResult {
    samples: Vec<Vec<f64>>,
    sum_trace: Vec<f64>,
    accepted: usize,
    proposed: usize,
    scale: f64,
}

fn initial_point(spec: &EnsembleSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = spec.n();
    match *spec {
        EnsembleSpec::HuaPickrell { .. } => (0..n).map(|_| rng.random::<f64>() - 0.5).collect(),
        EnsembleSpec::CircularJacobi { .. } => {
            let u = Uniform::new(1e-3, TWO_PI - 1e-3).unwrap();
            (0..n).map(|_| u.sample(rng)).collect()
        }
        EnsembleSpec::Laguerre { beta, nu, .. } | EnsembleSpec::InverseLaguerre { beta, nu, .. } => {
            // Rough bulk scale of either positive ensemble.
            let scale = (nu + 1.0 + beta * n as f64).max(1.0);
            (0..n).map(|_| scale * (0.5 + rng.random::<f64>())).collect()
        }
    }
}

fn run_chain(spec: &EnsembleSpec, config: &McmcConfig, chain: u64) -> ChainResult {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain + 1);
    let n = spec.n();
    let beta = spec.beta();
    let normal = Normal::new(0.0, 1.0).unwrap();

    let mut x = initial_point(spec, &mut rng);
    let mut site_logw: Vec<f64> = x.iter().map(|&xi| single_site_log_weight(spec, xi)).collect();
    let mut scale: f64 = 1.0;
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut window_accepted = 0usize;
    let mut window_proposed = 0usize;

    let mut samples = Vec::with_capacity(config.samples_per_chain);
    let mut sum_trace = Vec::with_capacity(config.samples_per_chain);

    let total_sweeps = config.burn_in + config.samples_per_chain * config.thin.max(1);
    for sweep in 0..total_sweeps {
        let in_burn_in = sweep < config.burn_in;
        for i in 0..n {
            let step: f64 = normal.sample(&mut rng);
            let mut xp = x[i] + scale * step;
            if spec.is_circular() {
                xp = xp.rem_euclid(TWO_PI);
            }
            let new_site = single_site_log_weight(spec, xp);
            let mut delta = new_site - site_logw[i];
            if delta > f64::NEG_INFINITY {
                for (j, &xj) in x.iter().enumerate() {
                    if j != i {
                        delta += beta
                            * (pair_log_repulsion(spec, xp, xj)
                                - pair_log_repulsion(spec, x[i], xj));
                    }
                }
            }
            proposed += 1;
            window_proposed += 1;
            if delta >= 0.0 || rng.random::<f64>() < delta.exp() {
                x[i] = xp;
                site_logw[i] = new_site;
                accepted += 1;
                window_accepted += 1;
            }
        }
        if in_burn_in && window_proposed >= 50 * n {
            let rate = window_accepted as f64 / window_proposed as f64;
            if rate < 0.30 {
                scale *= 0.8;
            } else if rate > 0.45 {
                scale *= 1.25;
            }
            window_accepted = 0;
            window_proposed = 0;
        }
        if !in_burn_in && (sweep - config.burn_in + 1) % config.thin.max(1) == 0 {
            let mut draw = x.clone();
            if spec.is_circular() {
                draw.sort_by(|a, b| a.partial_cmp(b).unwrap());
            } else {
                draw.sort_by(|a, b| b.partial_cmp(a).unwrap());
            }
            sum_trace.push(draw.iter().sum());
            samples.push(draw);
            if samples.len() == config.samples_per_chain {
                break;
            }
        }
    }
    ChainResult {
        samples,
        sum_trace,
        accepted,
        proposed,
        scale,
    }
}

/// Split-chain potential scale reduction factor of a scalar trace.
fn split_r_hat(traces: &[Vec<f64>]) -> f64 {
    let mut halves: Vec<&[f64]> = Vec::new();
    for t in traces {
        let m = t.len() / 2;
        if m >= 2 {
            halves.push(&t[..m]);
            halves.push(&t[m..2 * m]);
        }
    }
    if halves.len() < 2 {
        return f64::NAN;
    }
    let m = halves.len() as f64;
    let len = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / h.len() as f64).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = len / (m - 1.0) * means.iter().map(|&mu| (mu - grand).powi(2)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, &mu)| h.iter().map(|&v| (v - mu).powi(2)).sum::<f64>() / (h.len() as f64 - 1.0))
        .sum::<f64>()
        / m;
    if w <= 0.0 {
        return f64::NAN;
    }
    (((len - 1.0) / len * w + b / len) / w).sqrt()
}

// ---------------------------------------------------------------------------
// Tridiagonal Laguerre sampler
// ---------------------------------------------------------------------------

/// Draws an ordered eigenvalue vector from the Laguerre ensemble with weight
/// x^nu e^{-x} using the bidiagonal chi model.
///
/// With a = nu + 1 + (beta/2)(N-1), the lower-bidiagonal matrix B with
/// diagonal chi_{2a - beta(i-1)} and subdiagonal chi_{beta(N-i)} has
/// eigenvalues of B B^T distributed with weight
/// lambda^{a - (beta/2)(N-1) - 1} e^{-lambda/2} = lambda^nu e^{-lambda/2};
/// the deterministic rescale x = lambda/2 maps e^{-lambda/2} to the e^{-x}
/// convention (the Vandermonde and power factors only change by a constant).
pub fn sample_laguerre_tridiag<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    nu: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    if !(beta > 0.0) || nu <= -1.0 {
        return Err(Error::InvalidArgument(format!(
            "need beta > 0 and nu > -1, got beta = {beta}, nu = {nu}"
        )));
    }
    let a = nu + 1.0 + 0.5 * beta * (n as f64 - 1.0);
    let chi = |k: f64, rng: &mut R| -> f64 {
        // chi_k = sqrt(chi-square with k degrees of freedom) = sqrt(Gamma(k/2, 2)).
        GammaDist::new(0.5 * k, 2.0).unwrap().sample(rng).sqrt()
    };
    let diag: Vec<f64> = (0..n).map(|i| chi(2.0 * a - beta * i as f64, rng)).collect();
    let sub: Vec<f64> = (0..n - 1).map(|i| chi(beta * (n - 1 - i) as f64, rng)).collect();

    // T = B B^T is symmetric tridiagonal:
    // T[0][0] = d_0^2, T[i][i] = d_i^2 + s_{i-1}^2, T[i][i-1] = s_{i-1} d_{i-1}.
    let mut t = nalgebra::DMatrix::<f64>::zeros(n, n);
    t[(0, 0)] = diag[0] * diag[0];
    for i in 1..n {
        t[(i, i)] = diag[i] * diag[i] + sub[i - 1] * sub[i - 1];
        let off = sub[i - 1] * diag[i - 1];
        t[(i, i - 1)] = off;
        t[(i - 1, i)] = off;
    }
    let mut eig: Vec<f64> = t
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| 0.5 * l.max(0.0))
        .collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eig)
}

/// Draws an ordered inverse-Laguerre configuration: the image x -> 2/x of a
/// tridiagonal Laguerre draw, re-sorted into the chamber.
pub fn sample_inverse_laguerre<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    nu: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let lag = sample_laguerre_tridiag(n, beta, nu, rng)?;
    let mut inv: Vec<f64> = lag.iter().map(|&x| 2.0 / x).collect();
    inv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(inv)
}

// ---------------------------------------------------------------------------
// Interlacing arrays
// ---------------------------------------------------------------------------

/// A finite interlacing array: rows x^(1), ..., x^(N), row k of length k,
/// each weakly decreasing, with adjacent rows interlacing.
#[derive(Debug, Clone, Serialize)]
pub struct InterlacingArray {
    rows: Vec<Vec<f64>>,
}

impl InterlacingArray {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::InvalidArgument(format!(
                    "row {} must have {} entries, got {}",
                    k + 1,
                    k + 1,
                    row.len()
                )));
            }
            if row.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "row {} is not weakly decreasing",
                    k + 1
                )));
            }
        }
        for k in 0..rows.len().saturating_sub(1) {
            let (x, y) = (&rows[k], &rows[k + 1]);
            for i in 0..x.len() {
                if !(y[i] >= x[i] && x[i] >= y[i + 1]) {
                    return Err(Error::InvalidArgument(format!(
                        "rows {} and {} do not interlace",
                        k + 1,
                        k + 2
                    )));
                }
            }
        }
        Ok(InterlacingArray { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn row_sum(&self, k: usize) -> f64 {
        self.rows[k - 1].iter().sum()
    }

    /// Diagonal entries: d_1 = x^(1)_1, d_{k+1} = sum x^(k+1) - sum x^(k).
    pub fn diagonal_entries(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.rows.len());
        let mut prev = 0.0;
        for row in &self.rows {
            let s: f64 = row.iter().sum();
            d.push(s - prev);
            prev = s;
        }
        d
    }

    /// Row averages T_k = (sum of row k) / k.
    pub fn row_averages(&self) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, row)| row.iter().sum::<f64>() / (k + 1) as f64)
            .collect()
    }
}

/// Generates one interlacing array of the requested depth from a consistent
/// ensemble: the top row is drawn from the ensemble at size `depth` and
/// lower rows by repeated Dixon-Anderson corner steps. Supported kinds:
/// Hua-Pickrell (top row by random-walk Metropolis) and inverse-Laguerre
/// (top row by the exact tridiagonal model).
pub fn sample_array<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    top_row: Vec<f64>,
    rng: &mut R,
) -> Result<InterlacingArray> {
    let depth = spec.n();
    if top_row.len() != depth {
        return Err(Error::InvalidArgument(format!(
            "top row must have {} entries, got {}",
            depth,
            top_row.len()
        )));
    }
    match spec {
        EnsembleSpec::HuaPickrell { .. } | EnsembleSpec::InverseLaguerre { .. } => {}
        _ => {
            return Err(Error::InvalidArgument(
                "interlacing arrays are generated for the consistent kinds \
                 (Hua-Pickrell, inverse-Laguerre) only"
                    .into(),
            ))
        }
    }
    let beta = spec.beta();
    let mut rows = vec![top_row];
    while rows.last().unwrap().len() > 1 {
        let y = rows.last().unwrap().clone();
        let x = sample_da(beta, &y, rng)?;
        rows.push(x);
    }
    rows.reverse();
    InterlacingArray::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{adaptive_gk, QuadratureSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hp_density_even_for_real_tau() {
        let spec = EnsembleSpec::HuaPickrell {
            beta: 2.5,
            n: 3,
            tau: c(1.0, 0.0),
        };
        let x = [1.4, 0.2, -0.7];
        let neg: Vec<f64> = x.iter().rev().map(|&v| -v).collect();
        let a = log_density(&spec, &x).unwrap();
        let b = log_density(&spec, &neg).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn hp_complex_tau_density_is_finite_real() {
        let spec = EnsembleSpec::HuaPickrell {
            beta: 1.0,
            n: 2,
            tau: c(0.5, 0.8),
        };
        let v = log_density(&spec, &[0.9, -0.3]).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn hp_norm_const_known_values() {
        for &beta in &[1.0, 2.0, 4.0] {
            let c0 = hp_log_norm_const(1, beta, 0.0).unwrap().exp();
            assert!((c0 - std::f64::consts::PI).abs() < 1e-12, "{c0}");
            let c1 = hp_log_norm_const(1, beta, 1.0).unwrap().exp();
            assert!((c1 - std::f64::consts::PI / 2.0).abs() < 1e-12, "{c1}");
        }
    }

    #[test]
    fn hp_n1_normalized_density_is_cauchy() {
        let spec = EnsembleSpec::HuaPickrell {
            beta: 3.0,
            n: 1,
            tau: c(0.0, 0.0),
        };
        for &x in &[0.0, 0.7, -2.0] {
            let ld = normalized_log_density(&spec, &[x]).unwrap();
            let expected = (1.0 / (std::f64::consts::PI * (1.0 + x * x))).ln();
            assert!((ld - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn laguerre_n1_normalized_density_is_gamma() {
        let nu = 1.7;
        let spec = EnsembleSpec::Laguerre {
            beta: 2.0,
            n: 1,
            nu,
        };
        let x = 2.3;
        let ld = normalized_log_density(&spec, &[x]).unwrap();
        let expected = nu * x.ln() - x - ln_gamma(nu + 1.0).unwrap();
        assert!((ld - expected).abs() < 1e-12);
    }

    #[test]
    fn inverse_laguerre_normalization_integrates_to_one() {
        // N = 1 check by quadrature on a transformed interval.
        let nu = 2.0;
        let spec = EnsembleSpec::InverseLaguerre {
            beta: 4.0,
            n: 1,
            nu,
        };
        let q = crate::quad::exp_sinh(
            |x: f64| normalized_log_density(&spec, &[x]).unwrap().exp(),
            &QuadratureSpec::with_tols(1e-10, 1e-9),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn cjbe_density_matches_morris_weight() {
        // N = 1, real delta, s = 0: normalized over (0, 2pi) it is the weight
        // (2 sin(theta/2))^{2 delta} / (2 pi M_1).
        let delta = 0.6;
        let spec = EnsembleSpec::CircularJacobi {
            beta: 2.0,
            n: 1,
            delta: c(delta, 0.0),
            s: 0.0,
        };
        let q = adaptive_gk(
            |t: f64| log_density(&spec, &[t]).unwrap().exp(),
            1e-12,
            TWO_PI - 1e-12,
            &QuadratureSpec::with_tols(1e-10, 1e-9),
        )
        .unwrap();
        let morris = crate::specfun::log_morris(1, c(delta, 0.0), c(delta, 0.0), 1.0)
            .unwrap()
            .re
            .exp();
        assert!(
            (q.value - TWO_PI * morris).abs() < 1e-7 * q.value,
            "{} vs {}",
            q.value,
            TWO_PI * morris
        );
    }

    #[test]
    fn da_kernel_beta2_n1_is_uniform() {
        let y = [2.0, -1.0];
        for &x in &[-0.5, 0.0, 1.5] {
            let ld = da_kernel_log_density(2.0, &y, &[x]).unwrap();
            assert!((ld - (1.0 / 3.0f64).ln()).abs() < 1e-12);
        }
        assert_eq!(
            da_kernel_log_density(2.0, &y, &[5.0]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn da_kernel_degenerate_y_rejected() {
        assert!(da_kernel_log_density(2.0, &[1.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn da_sample_interlaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y = [3.0, 1.0, 0.5, -2.0];
        for _ in 0..200 {
            let x = sample_da(1.3, &y, &mut rng).unwrap();
            assert_eq!(x.len(), 3);
            for i in 0..3 {
                assert!(y[i] >= x[i] && x[i] >= y[i + 1], "{x:?}");
            }
        }
    }

    #[test]
    fn da_sample_beta4_n1_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = [1.0, 0.0];
        let m = 20_000;
        let mean: f64 = (0..m)
            .map(|_| sample_da(4.0, &y, &mut rng).unwrap()[0])
            .sum::<f64>()
            / m as f64;
        // Beta(2,2) has mean 1/2 and variance 1/20.
        let stderr = (0.05f64 / m as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * stderr, "mean = {mean}");
    }

    #[test]
    fn da_exact_sampler_matches_kernel_density_n2() {
        // Histogram test: empirical mean of x_1 + x_2 under the kernel versus
        // quadrature of the kernel density (beta = 3, a nontrivial case).
        let beta = 3.0;
        let y = [1.5, 0.3, -1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = 40_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let x = sample_da(beta, &y, &mut rng).unwrap();
            let t = x[0] + x[1];
            s1 += t;
            s2 += t * t;
        }
        let mean = s1 / m as f64;
        let var = s2 / m as f64 - mean * mean;
        // Oracle: 2-d quadrature of the kernel.
        let spec = QuadratureSpec::with_tols(1e-9, 1e-8);
        let integral = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
            adaptive_gk(
                |x1: f64| {
                    adaptive_gk(
                        |x2: f64| {
                            let ld = da_kernel_log_density(beta, &y, &[x1, x2]).unwrap();
                            f(x1, x2) * ld.exp()
                        },
                        y[2] + 1e-10,
                        y[1] - 1e-10,
                        &spec,
                    )
                    .map(|q| q.value)
                    .unwrap_or(0.0)
                },
                y[1] + 1e-10,
                y[0] - 1e-10,
                &spec,
            )
            .unwrap()
            .value
        };
        let z = integral(&|_, _| 1.0);
        let mu = integral(&|a, b| a + b) / z;
        assert!((z - 1.0).abs() < 1e-4, "kernel mass {z}");
        let stderr = (var / m as f64).sqrt();
        assert!((mean - mu).abs() < 4.0 * stderr, "{mean} vs {mu}");
    }

    #[test]
    fn mcmc_hp_n1_second_moment() {
        // E[x^2] = 1 at N = 1, tau = 1: density prop to (1+x^2)^{-2},
        // E[x^2] = (pi/2)/(pi/2)... direct: int x^2 (1+x^2)^{-2} = pi/2,
        // int (1+x^2)^{-2} = pi/2.
        let spec = EnsembleSpec::HuaPickrell {
            beta: 2.0,
            n: 1,
            tau: c(1.0, 0.0),
        };
        let config = McmcConfig {
            n_chains: 4,
            samples_per_chain: 4000,
            burn_in: 1000,
            thin: 3,
            seed: 42,
        };
        let batch = sample_mcmc(&spec, &config).unwrap();
        assert!(batch.diagnostics.converged, "{:?}", batch.diagnostics);
        let m2: f64 = batch.samples.iter().map(|x| x[0] * x[0]).sum::<f64>()
            / batch.samples.len() as f64;
        // Heavy-ish tails (4th moment infinite at tau=1); generous band.
        assert!((m2 - 1.0).abs() < 0.15, "E[x^2] = {m2}");
    }

    #[test]
    fn mcmc_reproducible() {
        let spec = EnsembleSpec::HuaPickrell {
            beta: 1.0,
            n: 3,
            tau: c(2.0, 0.0),
        };
        let config = McmcConfig {
            n_chains: 2,
            samples_per_chain: 50,
            burn_in: 200,
            thin: 2,
            seed: 9,
        };
        let a = sample_mcmc(&spec, &config).unwrap();
        let b = sample_mcmc(&spec, &config).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn mcmc_hp_sum_is_centred() {
        let spec = EnsembleSpec::HuaPickrell {
            beta: 2.0,
            n: 4,
            tau: c(2.0, 0.0),
        };
        let config = McmcConfig {
            n_chains: 4,
            samples_per_chain: 3000,
            burn_in: 1500,
            thin: 2,
            seed: 3,
        };
        let batch = sample_mcmc(&spec, &config).unwrap();
        let sums: Vec<f64> = batch.samples.iter().map(|x| x.iter().sum()).collect();
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        let var = sums.iter().map(|&s| (s - mean).powi(2)).sum::<f64>() / sums.len() as f64;
        // Correlated draws: inflate the naive standard error.
        let stderr = (var / sums.len() as f64).sqrt() * 5.0;
        assert!(mean.abs() < 3.0 * stderr, "mean = {mean}, stderr = {stderr}");
    }

    #[test]
    fn laguerre_tridiag_n1_is_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nu = 2.5;
        let m = 40_000;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for _ in 0..m {
            let x = sample_laguerre_tridiag(1, 3.0, nu, &mut rng).unwrap()[0];
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / m as f64;
        let m2 = s2 / m as f64;
        // Gamma(nu+1, 1): mean nu+1, second moment (nu+1)(nu+2).
        let se_mean = ((nu + 1.0) / m as f64).sqrt();
        assert!((mean - (nu + 1.0)).abs() < 4.0 * se_mean, "{mean}");
        assert!((m2 - (nu + 1.0) * (nu + 2.0)).abs() < 0.2, "{m2}");
    }

    #[test]
    fn laguerre_tridiag_eigenvalues_nonnegative_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let x = sample_laguerre_tridiag(6, 1.5, 0.5, &mut rng).unwrap();
            assert!(x.windows(2).all(|w| w[0] >= w[1]));
            assert!(x.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn array_rows_interlace_and_diagonals_telescope() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let spec = EnsembleSpec::InverseLaguerre {
            beta: 2.0,
            n: 6,
            nu: 2.0,
        };
        let top = sample_inverse_laguerre(6, 2.0, 2.0, &mut rng).unwrap();
        let arr = sample_array(&spec, top, &mut rng).unwrap();
        assert_eq!(arr.depth(), 6);
        let d = arr.diagonal_entries();
        let partial: f64 = d[..4].iter().sum();
        assert!((partial - arr.row_sum(4)).abs() < 1e-10);
        let t = arr.row_averages();
        assert!((t[5] - arr.row_sum(6) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn support_violations_are_errors() {
        let spec = EnsembleSpec::Laguerre {
            beta: 2.0,
            n: 2,
            nu: 1.0,
        };
        assert!(log_density(&spec, &[1.0, 2.0]).is_err()); // not decreasing
        assert!(log_density(&spec, &[1.0, -1.0]).is_err()); // negative
        assert!(log_density(&spec, &[1.0]).is_err()); // wrong length
    }
}
