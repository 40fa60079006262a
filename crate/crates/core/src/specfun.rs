//! Special functions behind the limit constants: complex log-Gamma, log
//! Barnes G, the Upsilon function, and the Morris-integral normalization of
//! circular Jacobi-type weights.

use num_complex::Complex64;

use crate::quad::{adaptive_gk, QuadratureSpec};
use crate::{Error, Result};

/// log Glaisher-Kinkelin constant, ln A = 1/12 - zeta'(-1).
const LN_GLAISHER: f64 = 0.248_754_477_033_784_26;

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_near_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.5 && (z.re - z.re.round()).abs() < 1e-13
}

/// Principal branch of log Gamma(z).
///
/// Accurate to at least 12 significant digits for Re(z) in [-50, 200],
/// |Im(z)| <= 50. Arguments with Re(z) < 8 are shifted up with the exact
/// recursion log Gamma(z) = log Gamma(z+1) - Log z, which holds for the
/// principal branches on the plane cut along the negative real axis.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if is_near_nonpositive_integer(z) {
        return Err(Error::Pole(format!("log_gamma at {z}")));
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 8.0 {
        shift += w.ln();
        w += 1.0;
    }
    Ok(log_gamma_lanczos(w) - shift)
}

fn log_gamma_lanczos(z: Complex64) -> Complex64 {
    // Valid for Re(z) >= 1; callers shift into Re >= 8.
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (zm1 + k as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (zm1 + 0.5) * t.ln() - t + series.ln()
}

/// log Gamma for real x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Pole(format!("ln_gamma at {x}")));
    }
    Ok(log_gamma(Complex64::new(x, 0.0))?.re)
}

/// Principal branch of log of the Barnes G-function.
///
/// Uses the recursion log G(z+1) = log Gamma(z) + log G(z) to shift into
/// Re(z) >= 20 and then the asymptotic expansion.
pub fn log_barnes_g(z: Complex64) -> Result<Complex64> {
    if is_near_nonpositive_integer(z) {
        return Err(Error::Pole(format!("log_barnes_g at {z}")));
    }
    // log G(z) = log G(z+n) - sum_{k=0}^{n-1} log Gamma(z+k).
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 21.0 {
        shift += log_gamma(w)?;
        w += 1.0;
    }
    Ok(log_barnes_g_asymptotic(w) - shift)
}

fn log_barnes_g_asymptotic(z: Complex64) -> Complex64 {
    // log G(z) = log G(w+1) with w = z - 1, Re(w) >= 20:
    // log G(w+1) = w^2/4 + w log Gamma(w+1) - (w(w+1)/2 + 1/12) Log w
    //              - ln A + sum_k B_{2k+2} / (2k(2k+1)(2k+2) w^{2k}).
    let w = z - 1.0;
    let lg = log_gamma_lanczos(z); // log Gamma(w + 1), Re(z) >= 21
    let w2 = w * w;
    let mut series = Complex64::new(0.0, 0.0);
    // B4..B12 terms; the k = 5 term is ~1e-19 at |w| = 20.
    let coeffs = [
        -1.0 / 720.0,      // B4 / (2*3*4)
        1.0 / 5040.0,      // B6 / (4*5*6)
        -1.0 / 10080.0,    // B8 / (6*7*8)
        1.0 / 9504.0,      // B10 / (8*9*10)
        -691.0 / 3_603_600.0, // B12 / (10*11*12)
    ];
    let inv_w2 = 1.0 / w2;
    let mut p = inv_w2;
    for &c in &coeffs {
        series += c * p;
        p *= inv_w2;
    }
    w2 * 0.25 + w * lg - (w * (w + 1.0) * 0.5 + 1.0 / 12.0) * w.ln() - LN_GLAISHER + series
}

/// Smooth factor of the Upsilon integrand:
/// w(x) = 1/(2x) - 1/x^2 + 1/(x(e^x - 1)), extended by w(0) = 1/12.
fn upsilon_weight(x: f64) -> f64 {
    if x < 0.25 {
        // w(x) = sum_{k>=1} B_{2k} x^{2k-2} / (2k)!
        let x2 = x * x;
        1.0 / 12.0
            + x2 * (-1.0 / 720.0
                + x2 * (1.0 / 30240.0
                    + x2 * (-1.0 / 1_209_600.0 + x2 * (1.0 / 47_900_160.0))))
    } else {
        0.5 / x - 1.0 / (x * x) + 1.0 / (x * x.exp_m1())
    }
}

/// expm1 for complex argument, stable for small |w|.
fn cexpm1(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        w * (1.0 + w * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0))))
    } else {
        w.exp() - 1.0
    }
}

/// The Upsilon function: combines Barnes G, Gamma, quadratic terms and an
/// exponential-kernel integral. The integral converges for Re(z) > -beta/2,
/// which is also where 1 + 2z/beta stays off the poles' half-line; outside
/// that region a domain error is returned.
pub fn upsilon(beta: f64, z: Complex64) -> Result<Complex64> {
    assert!(beta > 0.0, "upsilon requires beta > 0");
    let decay = 0.5 * beta + z.re.min(0.0);
    if decay <= 0.0 {
        return Err(Error::Domain(format!(
            "upsilon integral diverges: Re(z) = {} <= -beta/2 = {}",
            z.re,
            -0.5 * beta
        )));
    }
    let arg = 1.0 + 2.0 * z / beta;
    let g_term = 0.5 * beta * log_barnes_g(arg)?;
    let gamma_term = (z - 0.5) * log_gamma(arg)?;
    let integral = upsilon_integral(beta, z, &QuadratureSpec::with_tols(1e-13, 1e-12))?;
    Ok(g_term - gamma_term + integral + z * z / beta + z / 2.0)
}

/// The integral part of Upsilon, by adaptive Gauss-Kronrod split at x = 1.
/// The integrand tends to -z/(6 beta) as x -> 0+.
pub(crate) fn upsilon_integral(
    beta: f64,
    z: Complex64,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let integrand = |x: f64| -> Complex64 {
        let num = cexpm1(-z * x);
        let den = (0.5 * beta * x).exp_m1();
        upsilon_weight(x) * num / den
    };
    let decay = 0.5 * beta + z.re.min(0.0);
    let tail_cut = (2.0_f64).max(42.0 / decay);
    let head = adaptive_gk(integrand, 0.0, 1.0, spec)?;
    let tail = adaptive_gk(integrand, 1.0, tail_cut, spec)?;
    Ok(head.value + tail.value)
}

/// log of the Morris integral normalization
/// M_N(a, b, lambda) = prod_{j=0}^{N-1}
///   Gamma(lj+a+b+1) Gamma(l(j+1)+1) / (Gamma(lj+a+1) Gamma(lj+b+1) Gamma(l+1)).
pub fn log_morris(n: usize, a: Complex64, b: Complex64, lambda: f64) -> Result<Complex64> {
    assert!(n >= 1, "log_morris requires N >= 1");
    assert!(lambda > 0.0, "log_morris requires lambda > 0");
    if (a + b).re <= -1.0 {
        return Err(Error::Domain(format!(
            "log_morris requires Re(a+b) > -1, got {}",
            (a + b).re
        )));
    }
    let lg_lambda = log_gamma(Complex64::new(lambda + 1.0, 0.0))?;
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let lj = lambda * j as f64;
        total += log_gamma(a + b + (lj + 1.0))?;
        total += log_gamma(Complex64::new(lambda * (j + 1) as f64 + 1.0, 0.0))?;
        total -= log_gamma(a + (lj + 1.0))?;
        total -= log_gamma(b + (lj + 1.0))?;
        total -= lg_lambda;
    }
    Ok(total)
}
