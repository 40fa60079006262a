//! Brute-force quadrature ground truth for small particle numbers.
//!
//! Everything here is deterministic numerical integration of the explicit
//! densities from `ensembles`; it never consumes Monte Carlo output and is
//! the root of the trust chain for the formula layer.

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::ensembles::{log_chamber_normalization, normalized_log_density, EnsembleSpec};
use crate::quad::{adaptive_gk, exp_sinh, tanh_sinh, QuadEstimate, QuadratureSpec};
use crate::specfun::ln_gamma;
use crate::{Error, Result};

/// Value of one quadrature with the scheme's a-posteriori error estimate.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

impl From<QuadEstimate<f64>> for QuadResult {
    fn from(e: QuadEstimate<f64>) -> Self {
        QuadResult {
            value: e.value,
            error_bound: e.error_bound,
            evaluations: e.evaluations,
        }
    }
}

/// A quadrature value paired with its closed-form counterpart.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CauchyMoment {
    pub quadrature: QuadResult,
    pub closed_form: f64,
}

/// int x^{2m} (1+x^2)^{-(beta(N-1)/2 + 1 + tau)} dx over the real line,
/// returned both by quadrature and by the Gamma-function evaluation
/// Gamma(m+1/2) Gamma(c+tau-m+1/2) / Gamma(c+1+tau), c = beta(N-1)/2.
pub fn cauchy_moment_1d(m: usize, beta: f64, n: usize, tau: f64) -> Result<CauchyMoment> {
    if beta <= 0.0 || n == 0 {
        return Err(Error::InvalidArgument(
            "cauchy_moment_1d needs beta > 0 and N >= 1".into(),
        ));
    }
    let c = 0.5 * beta * (n - 1) as f64;
    let mf = m as f64;
    if c + tau - mf + 0.5 <= 0.0 {
        return Err(Error::Domain(format!(
            "divergent integral: beta(N-1)/2 + tau - m + 1/2 = {} <= 0",
            c + tau - mf + 0.5
        )));
    }
    let closed_form =
        (ln_gamma(mf + 0.5)? + ln_gamma(c + tau - mf + 0.5)? - ln_gamma(c + 1.0 + tau)?).exp();

    // x = tan u compactifies the line; the integrand becomes
    // sin^{2m}(u) cos^{2(c+1+tau)-2-2m}(u), where the cosine exponent may lie
    // in (-1, 0). Evaluate cos through the endpoint distance to keep the
    // singular factor accurate.
    let cos_exp = 2.0 * (c + 1.0 + tau) - 2.0 - 2.0 * mf;
    let spec = QuadratureSpec::with_tols(1e-13, 1e-12);
    let est = tanh_sinh(
        |u: f64, dl: f64, dr: f64| {
            let cosu = dl.min(dr).sin();
            let sinu = u.sin();
            let v = sinu.abs().powi(2 * m as i32) * cosu.powf(cos_exp);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &spec,
    )?;
    Ok(CauchyMoment {
        quadrature: est.into(),
        closed_form,
    })
}

// ---------------------------------------------------------------------------
// Hua-Pickrell sum moments by iterated quadrature
// ---------------------------------------------------------------------------

/// Integrand of the k-particle HP moment after x_i = tan u_i, evaluated in
/// log space so extreme angles do not poison the product.
fn hp_integrand(us: &[f64], beta: f64, cos_exp: f64, power: u32) -> f64 {
    let k = us.len();
    let mut log_w = 0.0;
    let mut sum_x = 0.0;
    for &u in us {
        let c = u.cos();
        log_w += cos_exp * c.ln();
        sum_x += u.tan();
    }
    for i in 0..k {
        // ln|tan a - tan b| = ln|sin(a-b)| - ln cos a - ln cos b.
        for j in i + 1..k {
            log_w += beta
                * ((us[i] - us[j]).sin().abs().ln() - us[i].cos().ln() - us[j].cos().ln());
        }
    }
    let v = if power == 0 {
        log_w.exp()
    } else {
        let sign = if sum_x < 0.0 && power % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        sign * (log_w + f64::from(power) * sum_x.abs().ln()).exp()
    };
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Iterated adaptive integration of the (unnormalized) HP moment integrand
/// over (-pi/2, pi/2)^k. Inner levels split the interval at the already-fixed
/// angles, where |x_i - x_j|^beta has a kink for non-even beta.
fn hp_level(
    fixed: &[f64],
    k: usize,
    beta: f64,
    cos_exp: f64,
    power: u32,
    inner: &QuadratureSpec,
    evals: &Cell<usize>,
    failed: &Cell<bool>,
) -> f64 {
    if fixed.len() == k {
        evals.set(evals.get() + 1);
        return hp_integrand(fixed, beta, cos_exp, power);
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(fixed.len() + 2);
    cuts.push(-FRAC_PI_2);
    cuts.extend_from_slice(fixed);
    cuts.push(FRAC_PI_2);
    cuts.sort_by(f64::total_cmp);

    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] - w[0] < 1e-14 {
            continue;
        }
        let r = adaptive_gk(
            |u: f64| {
                let mut next = fixed.to_vec();
                next.push(u);
                hp_level(&next, k, beta, cos_exp, power, inner, evals, failed)
            },
            w[0],
            w[1],
            inner,
        );
        match r {
            Ok(est) => total += est.value,
            Err(_) => failed.set(true),
        }
    }
    total
}

fn hp_cube(
    k: usize,
    beta: f64,
    cos_exp: f64,
    power: u32,
    outer: &QuadratureSpec,
    inner: &QuadratureSpec,
) -> Result<QuadEstimate<f64>> {
    let evals = Cell::new(0usize);
    let failed = Cell::new(false);
    let est = adaptive_gk(
        |u: f64| hp_level(&[u], k, beta, cos_exp, power, inner, &evals, &failed),
        -FRAC_PI_2,
        FRAC_PI_2,
        outer,
    )?;
    if failed.get() {
        return Err(Error::QuadratureNonConvergence {
            achieved: f64::NAN,
            requested: inner.abs_tol,
        });
    }
    Ok(QuadEstimate {
        value: est.value,
        error_bound: est.error_bound,
        evaluations: evals.get(),
    })
}

/// E[(x_1 + ... + x_k)^power] under the k-particle Hua-Pickrell law with real
/// parameter tau, by iterated adaptive quadrature (self-normalized, so the
/// closed-form constant is not consumed). k = 3 is supported but expensive;
/// it is meant for spot checks only.
pub fn hp_row_moment(k: usize, beta: f64, tau: f64, power: u32) -> Result<QuadResult> {
    if !(1..=3).contains(&k) || beta <= 0.0 {
        return Err(Error::InvalidArgument(
            "hp_row_moment needs k in {1,2,3} and beta > 0".into(),
        ));
    }
    if f64::from(power) >= 1.0 + 2.0 * tau {
        return Err(Error::Domain(format!(
            "E[(sum x)^{power}] diverges: need power < 1 + 2 tau = {}",
            1.0 + 2.0 * tau
        )));
    }
    // Single-site weight (1+x^2)^{-p}, p = tau + beta(k-1)/2 + 1; with the
    // Jacobian, each coordinate contributes cos^{2p-2}.
    let p = tau + 0.5 * beta * (k - 1) as f64 + 1.0;
    let cos_exp = 2.0 * p - 2.0;
    let (outer, inner) = if k == 3 {
        (
            QuadratureSpec::with_tols(1e-9, 1e-6),
            QuadratureSpec::with_tols(1e-11, 1e-8),
        )
    } else {
        (
            QuadratureSpec::with_tols(1e-12, 1e-10),
            QuadratureSpec::with_tols(1e-14, 1e-12),
        )
    };
    let num = hp_cube(k, beta, cos_exp, power, &outer, &inner)?;
    let den = hp_cube(k, beta, cos_exp, 0, &outer, &inner)?;
    let value = num.value / den.value;
    let error_bound = (num.error_bound + value.abs() * den.error_bound) / den.value.abs();
    Ok(QuadResult {
        value,
        error_bound,
        evaluations: num.evaluations + den.evaluations,
    })
}

// ---------------------------------------------------------------------------
// Inverse-Laguerre sum moments
// ---------------------------------------------------------------------------

/// log of the transformed integrand in u = 2/x coordinates, where the
/// inverse-Laguerre law becomes the Laguerre weight u^nu e^{-u} and the
/// observable (sum x)^r becomes (2/u_1 + ... )^r.
fn inv_lag_log_term(u1: f64, u2: f64, diff: f64, beta: f64, nu: f64, r: u32) -> f64 {
    let rf = f64::from(r);
    (nu - rf) * (u1.ln() + u2.ln()) + rf * ((u1 + u2).ln() + std::f64::consts::LN_2)
        + beta * diff.ln()
        - u1
        - u2
}

/// E[(x_1 + ... + x_N)^r] under the N-particle inverse-Laguerre law,
/// N in {1, 2}, by self-normalized quadrature in the u = 2/x chart.
pub fn inv_laguerre_moment(n: usize, beta: f64, nu: f64, r: u32) -> Result<QuadResult> {
    if !(1..=2).contains(&n) || beta <= 0.0 {
        return Err(Error::InvalidArgument(
            "inv_laguerre_moment needs N in {1,2} and beta > 0".into(),
        ));
    }
    if nu <= f64::from(r) - 1.0 {
        return Err(Error::Domain(format!(
            "E[(sum x)^{r}] diverges: need nu > r - 1, got nu = {nu}"
        )));
    }
    let spec = QuadratureSpec::with_tols(1e-13, 1e-12);
    if n == 1 {
        let one_d = |rr: u32| {
            let e = f64::from(rr);
            exp_sinh(
                move |u: f64| {
                    let v = ((nu - e) * u.ln() + e * std::f64::consts::LN_2 - u).exp();
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                },
                &spec,
            )
        };
        let num = one_d(r)?;
        let den = one_d(0)?;
        let value = num.value / den.value;
        let error_bound = (num.error_bound + value.abs() * den.error_bound) / den.value;
        return Ok(QuadResult {
            value,
            error_bound,
            evaluations: num.evaluations + den.evaluations,
        });
    }

    // N = 2: outer u1 over (0, inf); inner u2 split at u1, with the kink of
    // |u1 - u2|^beta and the u2 -> 0 endpoint handled by the DE schemes.
    let inner_spec = QuadratureSpec::with_tols(1e-14, 1e-12);
    let outer_spec = QuadratureSpec::with_tols(1e-12, 1e-10);
    let two_d = |rr: u32| -> Result<QuadEstimate<f64>> {
        let evals = Cell::new(0usize);
        let failed = Cell::new(false);
        let est = exp_sinh(
            |u1: f64| {
                let lower = tanh_sinh(
                    |_u2: f64, dl: f64, dr: f64| {
                        evals.set(evals.get() + 1);
                        let v = inv_lag_log_term(u1, dl, dr, beta, nu, rr).exp();
                        if v.is_finite() {
                            v
                        } else {
                            0.0
                        }
                    },
                    0.0,
                    u1,
                    &inner_spec,
                );
                let upper = exp_sinh(
                    |t: f64| {
                        evals.set(evals.get() + 1);
                        let v = inv_lag_log_term(u1, u1 + t, t, beta, nu, rr).exp();
                        if v.is_finite() {
                            v
                        } else {
                            0.0
                        }
                    },
                    &inner_spec,
                );
                match (lower, upper) {
                    (Ok(a), Ok(b)) => a.value + b.value,
                    _ => {
                        failed.set(true);
                        0.0
                    }
                }
            },
            &outer_spec,
        )?;
        if failed.get() {
            return Err(Error::QuadratureNonConvergence {
                achieved: f64::NAN,
                requested: inner_spec.abs_tol,
            });
        }
        Ok(QuadEstimate {
            value: est.value,
            error_bound: est.error_bound,
            evaluations: evals.get(),
        })
    };
    let num = two_d(r)?;
    let den = two_d(0)?;
    let value = num.value / den.value;
    let error_bound = (num.error_bound + value.abs() * den.error_bound) / den.value;
    Ok(QuadResult {
        value,
        error_bound,
        evaluations: num.evaluations + den.evaluations,
    })
}

// ---------------------------------------------------------------------------
// Dixon-Anderson kernel normalization
// ---------------------------------------------------------------------------

/// int Lambda(y, dx) over the interlacing polytope below the strictly
/// decreasing configuration y (length N+1, N in {1,2}); the exact value is 1.
/// The endpoint factors |x_i - y_j|^{beta/2 - 1} are evaluated through the
/// tanh-sinh endpoint distances so beta < 2 costs no accuracy.
pub fn da_normalization(beta: f64, y: &[f64]) -> Result<QuadResult> {
    if beta <= 0.0 {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    if !(2..=3).contains(&y.len()) {
        return Err(Error::InvalidArgument(
            "da_normalization supports source configurations of length 2 or 3".into(),
        ));
    }
    if y.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument(
            "source configuration must be strictly decreasing".into(),
        ));
    }
    let np1 = y.len();
    let q = 0.5 * beta - 1.0;
    let mut log_pref = ln_gamma(0.5 * beta * np1 as f64)? - np1 as f64 * ln_gamma(0.5 * beta)?;
    for i in 0..np1 {
        for j in i + 1..np1 {
            log_pref += (1.0 - beta) * (y[i] - y[j]).ln();
        }
    }

    let spec = QuadratureSpec::with_tols(1e-13, 1e-12);
    if np1 == 2 {
        let est = tanh_sinh(
            |_x, dl: f64, dr: f64| {
                let v = (log_pref + q * (dl.ln() + dr.ln())).exp();
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            y[1],
            y[0],
            &spec,
        )?;
        return Ok(est.into());
    }

    // N = 2: x1 in (y1, y0), x2 in (y2, y1). All six |x_i - y_j| factors are
    // positive combinations of the two endpoint-distance pairs.
    let d01 = y[0] - y[1];
    let d12 = y[1] - y[2];
    let inner_spec = QuadratureSpec::with_tols(1e-14, 1e-13);
    let evals = Cell::new(0usize);
    let failed = Cell::new(false);
    let est = tanh_sinh(
        |_x1, dl1: f64, dr1: f64| {
            let inner = tanh_sinh(
                |_x2, dl2: f64, dr2: f64| {
                    evals.set(evals.get() + 1);
                    let log_sing = q
                        * (dr1.ln()
                            + dl1.ln()
                            + (dl1 + d12).ln()
                            + (dr2 + d01).ln()
                            + dr2.ln()
                            + dl2.ln());
                    let v = (dl1 + dr2) * (log_pref + log_sing).exp();
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                },
                y[2],
                y[1],
                &inner_spec,
            );
            match inner {
                Ok(r) => r.value,
                Err(_) => {
                    failed.set(true);
                    0.0
                }
            }
        },
        y[1],
        y[0],
        &spec,
    )?;
    if failed.get() {
        return Err(Error::QuadratureNonConvergence {
            achieved: f64::NAN,
            requested: inner_spec.abs_tol,
        });
    }
    Ok(QuadResult {
        value: est.value,
        error_bound: est.error_bound,
        evaluations: evals.get(),
    })
}

// ---------------------------------------------------------------------------
// Consistency of the family under the Dixon-Anderson kernel (N = 2 -> 1)
// ---------------------------------------------------------------------------

/// Which two-parameter family to push through the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MarginalKind {
    HuaPickrell,
    InverseLaguerre,
}

/// sup over the grid of |int mu_2(dy) Lambda_{2,1}(y, x) - mu_1 density(x)|.
///
/// The inner double integral factorizes: with w the N = 2 single-site weight
/// and q = beta/2 - 1, writing y_1 - y_2 = (y_1 - x) + (x - y_2) gives
///   marginal(x) = K (A_1 B_0 + A_0 B_1),
///   A_k = int_{y > x} w(y)(y-x)^{q+k} dy,  B_k = int_{y < x} w(y)(x-y)^{q+k} dy,
/// so only one-dimensional quadratures are needed at each grid point.
pub fn consistency_marginal(
    kind: MarginalKind,
    beta: f64,
    param: f64,
    grid: &[f64],
) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let (spec2, spec1) = match kind {
        MarginalKind::HuaPickrell => (
            EnsembleSpec::HuaPickrell {
                beta,
                n: 2,
                tau: param.into(),
            },
            EnsembleSpec::HuaPickrell {
                beta,
                n: 1,
                tau: param.into(),
            },
        ),
        MarginalKind::InverseLaguerre => (
            EnsembleSpec::InverseLaguerre {
                beta,
                n: 2,
                nu: param,
            },
            EnsembleSpec::InverseLaguerre {
                beta,
                n: 1,
                nu: param,
            },
        ),
    };
    if kind == MarginalKind::InverseLaguerre && grid.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidArgument(
            "inverse-Laguerre grid points must be positive".into(),
        ));
    }

    let log_k = -log_chamber_normalization(&spec2)? + ln_gamma(beta)? - 2.0 * ln_gamma(0.5 * beta)?;
    let q = 0.5 * beta - 1.0;
    // N = 2 single-site log weight.
    let log_w2 = move |y: f64| -> f64 {
        match kind {
            MarginalKind::HuaPickrell => -(param + 0.5 * beta + 1.0) * y.mul_add(y, 1.0).ln(),
            MarginalKind::InverseLaguerre => -(param + beta + 2.0) * y.ln() - 2.0 / y,
        }
    };

    let int_spec = QuadratureSpec::with_tols(1e-14, 1e-11);
    let deviation_at = |x: f64| -> Result<f64> {
        // A_k: y = x + t above the point; always a half-line.
        let a_int = |k: u32| -> Result<f64> {
            Ok(exp_sinh(
                |t: f64| {
                    let v = (log_w2(x + t) + (q + f64::from(k)) * t.ln()).exp();
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                },
                &int_spec,
            )?
            .value)
        };
        // B_k: y = x - t below the point; half-line for HP, (0, x) for the
        // positive-support kind.
        let b_int = |k: u32| -> Result<f64> {
            match kind {
                MarginalKind::HuaPickrell => Ok(exp_sinh(
                    |t: f64| {
                        let v = (log_w2(x - t) + (q + f64::from(k)) * t.ln()).exp();
                        if v.is_finite() {
                            v
                        } else {
                            0.0
                        }
                    },
                    &int_spec,
                )?
                .value),
                MarginalKind::InverseLaguerre => Ok(tanh_sinh(
                    |_t, dl: f64, dr: f64| {
                        // y = x - t = dr; t = dl.
                        let v = (log_w2(dr) + (q + f64::from(k)) * dl.ln()).exp();
                        if v.is_finite() {
                            v
                        } else {
                            0.0
                        }
                    },
                    0.0,
                    x,
                    &int_spec,
                )?
                .value),
            }
        };
        let marginal = log_k.exp() * (a_int(1)? * b_int(0)? + a_int(0)? * b_int(1)?);
        let target = normalized_log_density(&spec1, &[x])?.exp();
        Ok((marginal - target).abs())
    };

    let deviations: Vec<f64> = grid
        .par_iter()
        .map(|&x| deviation_at(x))
        .collect::<Result<Vec<f64>>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cauchy_arctan_integral() {
        let r = cauchy_moment_1d(0, 2.0, 1, 0.0).unwrap();
        assert!((r.quadrature.value - PI).abs() < 1e-12, "got {}", r.quadrature.value);
        assert!((r.closed_form - PI).abs() < 1e-13);
    }

    #[test]
    fn cauchy_second_moment_tau_one() {
        // m=1, N=1, tau=1: integral pi/2, so E[x^2] = 1 after normalizing by
        // the N=1 constant pi/2.
        let r = cauchy_moment_1d(1, 2.0, 1, 1.0).unwrap();
        assert!((r.quadrature.value - PI / 2.0).abs() < 1e-12);
        let c = cauchy_moment_1d(0, 2.0, 1, 1.0).unwrap();
        assert!((r.quadrature.value / c.quadrature.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn cauchy_dual_evaluation_grid() {
        for &beta in &[1.0, 2.0, 3.5] {
            for n in [1usize, 2] {
                for m in 0..=3usize {
                    for &tau in &[1.5, 2.0, 3.0] {
                        let c = 0.5 * beta * (n - 1) as f64;
                        if c + tau - m as f64 + 0.5 <= 0.0 {
                            continue;
                        }
                        let r = cauchy_moment_1d(m, beta, n, tau).unwrap();
                        let diff = (r.quadrature.value - r.closed_form).abs();
                        assert!(
                            diff < 1e-10,
                            "m={m} beta={beta} n={n} tau={tau}: diff {diff}"
                        );
                        assert!(diff <= r.quadrature.error_bound.max(1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn cauchy_divergent_is_domain_error() {
        assert!(matches!(
            cauchy_moment_1d(2, 2.0, 1, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hp_row_moment_single_particle() {
        let r = hp_row_moment(1, 2.0, 1.0, 2).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn hp_row_moment_odd_power_vanishes() {
        let r1 = hp_row_moment(1, 1.0, 2.0, 1).unwrap();
        assert!(r1.value.abs() < r1.error_bound.max(1e-10), "got {}", r1.value);
        let r2 = hp_row_moment(2, 2.0, 2.0, 3).unwrap();
        assert!(r2.value.abs() < r2.error_bound.max(1e-8), "got {}", r2.value);
    }

    #[test]
    fn hp_row_moment_two_particles_forced_value() {
        // The exact moment identity at h=1 forces (v - 2)/2 = 1/3 here.
        let r = hp_row_moment(2, 2.0, 1.0, 2).unwrap();
        assert!(
            (r.value - 8.0 / 3.0).abs() < r.error_bound.max(1e-8),
            "got {} err {}",
            r.value,
            r.error_bound
        );
    }

    #[test]
    fn hp_row_moment_divergent_is_domain_error() {
        assert!(matches!(
            hp_row_moment(1, 2.0, 0.5, 2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inv_laguerre_single_particle_closed_forms() {
        let r0 = inv_laguerre_moment(1, 2.0, 2.5, 0).unwrap();
        assert!((r0.value - 1.0).abs() < 1e-11);
        let r1 = inv_laguerre_moment(1, 2.0, 2.5, 1).unwrap();
        assert!((r1.value - 2.0 / 2.5).abs() < 1e-10, "got {}", r1.value);
        let r2 = inv_laguerre_moment(1, 3.0, 3.0, 2).unwrap();
        assert!((r2.value - 4.0 / 6.0).abs() < 1e-10, "got {}", r2.value);
    }

    #[test]
    fn inv_laguerre_monotone_in_nu() {
        let grid = [1.5, 2.0, 3.0, 5.0];
        let vals: Vec<f64> = grid
            .iter()
            .map(|&nu| inv_laguerre_moment(1, 2.0, nu, 1).unwrap().value)
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0], "not decreasing: {vals:?}");
        }
    }

    #[test]
    fn inv_laguerre_two_particles_matches_formula() {
        // Cross-check against the terminating partition-sum formula.
        for &(beta, nu, r) in &[
            (2.0, 3.0, 1u32),
            (2.0, 4.0, 2),
            (1.0, 3.5, 1),
            (4.0, 3.0, 1),
            (1.0, 4.0, 2),
            (4.0, 3.5, 2),
        ] {
            let q = inv_laguerre_moment(2, beta, nu, r).unwrap();
            let f = crate::limits::laguerre_finite_moment(
                beta,
                nu,
                2,
                r as usize,
                crate::limits::NormalizationMode::OracleCalibrated,
            )
            .unwrap();
            assert!(
                (q.value - f).abs() < 1e-8 * f.abs().max(1.0),
                "beta={beta} nu={nu} r={r}: quad {} formula {f}",
                q.value
            );
        }
    }

    #[test]
    fn inv_laguerre_divergent_is_domain_error() {
        assert!(matches!(
            inv_laguerre_moment(1, 2.0, 0.5, 2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn da_normalization_unit_interval() {
        let r = da_normalization(2.0, &[1.0, 0.0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11, "got {}", r.value);
        let r = da_normalization(1.0, &[1.0, 0.0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "got {}", r.value);
    }

    #[test]
    fn da_normalization_two_rows() {
        let r = da_normalization(4.0, &[2.0, 1.0, 0.0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "got {}", r.value);
        let r = da_normalization(1.0, &[1.5, 0.5, -1.0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "got {}", r.value);
    }

    #[test]
    fn da_normalization_rejects_bad_input() {
        assert!(da_normalization(2.0, &[0.0, 1.0]).is_err());
        assert!(da_normalization(2.0, &[1.0]).is_err());
    }

    #[test]
    fn consistency_hp_beta_two() {
        let grid: Vec<f64> = (0..21).map(|i| -3.0 + 0.3 * i as f64).collect();
        let dev = consistency_marginal(MarginalKind::HuaPickrell, 2.0, 1.0, &grid).unwrap();
        assert!(dev < 1e-6, "deviation {dev}");
    }

    #[test]
    fn consistency_hp_singular_kernel() {
        let grid: Vec<f64> = (0..21).map(|i| -3.0 + 0.3 * i as f64).collect();
        let dev = consistency_marginal(MarginalKind::HuaPickrell, 1.0, 2.0, &grid).unwrap();
        assert!(dev < 1e-5, "deviation {dev}");
    }

    #[test]
    fn consistency_inverse_laguerre() {
        let grid: Vec<f64> = (1..=21).map(|i| 6.0 * i as f64 / 21.0).collect();
        let dev = consistency_marginal(MarginalKind::InverseLaguerre, 2.0, 2.0, &grid).unwrap();
        assert!(dev < 1e-6, "deviation {dev}");
    }
}
