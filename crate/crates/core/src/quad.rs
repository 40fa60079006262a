//! Numerical integration: adaptive Gauss-Kronrod for smooth integrands,
//! tanh-sinh for finite intervals with endpoint singularities, exp-sinh for
//! half-infinite ranges.

use num_complex::Complex64;
use std::cell::Cell;

use crate::{Error, Result};

/// Tolerances and subdivision budget for the adaptive schemes.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tols(abs_tol: f64, rel_tol: f64) -> Self {
        assert!(abs_tol > 0.0 && rel_tol > 0.0);
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

/// Result of one integration, with the scheme's a-posteriori error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate<O> {
    pub value: O,
    pub error_bound: f64,
    pub evaluations: usize,
}

/// Output scalar of an integrand: real or complex.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK values).
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

const WG10: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// One GK21 panel: returns (kronrod value, error estimate).
fn gk21_panel<O: QuadValue, F: Fn(f64) -> O>(f: &F, a: f64, b: f64) -> (O, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(c);
    let mut kronrod = f_center.scale(WGK21[10]);
    let mut gauss = O::zero();
    let mut resabs = f_center.norm() * WGK21[10];

    for i in 0..10 {
        let dx = half * XGK21[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        let fsum = f1.add(f2);
        kronrod = kronrod.add(fsum.scale(WGK21[i]));
        resabs += WGK21[i] * (f1.norm() + f2.norm());
        if i % 2 == 1 {
            gauss = gauss.add(fsum.scale(WG10[i / 2]));
        }
    }

    let value = kronrod.scale(half);
    let raw_err = kronrod.sub(gauss).norm() * half.abs();

    // QUADPACK-style rescaling of the raw |K - G| difference.
    let resabs = resabs * half.abs();
    let mut err = raw_err;
    if resabs > 0.0 && err > 0.0 {
        let scale = (200.0 * err / resabs).powf(1.5);
        if scale < 1.0 {
            err = resabs * scale;
        }
    }
    let min_err = 50.0 * f64::EPSILON * resabs;
    if min_err > err {
        err = min_err;
    }
    (value, err)
}

struct Segment<O> {
    a: f64,
    b: f64,
    value: O,
    error: f64,
}

/// Adaptive Gauss-Kronrod integration of `f` over the finite interval `[a, b]`.
pub fn adaptive_gk<O: QuadValue, F: Fn(f64) -> O>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadEstimate<O>> {
    let evals = Cell::new(0usize);
    let g = |x: f64| {
        evals.set(evals.get() + 1);
        f(x)
    };

    let (v0, e0) = gk21_panel(&g, a, b);
    let mut segments = vec![Segment {
        a,
        b,
        value: v0,
        error: e0,
    }];

    loop {
        let total_value = segments
            .iter()
            .fold(O::zero(), |acc, s| acc.add(s.value));
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        let tol = spec.abs_tol.max(spec.rel_tol * total_value.norm());
        if total_error <= tol {
            return Ok(QuadEstimate {
                value: total_value,
                error_bound: total_error,
                evaluations: evals.get(),
            });
        }
        if segments.len() >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                achieved: total_error,
                requested: tol,
            });
        }

        // Split the segment with the largest error estimate.
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if !(seg.a < mid && mid < seg.b) {
            // Interval too small to split further; keep its estimate.
            let mut v = seg.value;
            let mut e = seg.error;
            for s in &segments {
                v = v.add(s.value);
                e += s.error;
            }
            return Ok(QuadEstimate {
                value: v,
                error_bound: e,
                evaluations: evals.get(),
            });
        }
        let (vl, el) = gk21_panel(&g, seg.a, mid);
        let (vr, er) = gk21_panel(&g, mid, seg.b);
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: vl,
            error: el,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: vr,
            error: er,
        });
    }
}

// Largest |t| used by the double-exponential rules. Beyond this the inner
// exponent overflows f64.
const DE_T_MAX: f64 = 6.0;
const DE_MAX_LEVEL: u32 = 12;

/// Tanh-sinh (double-exponential) integration over `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)`; the endpoint distances are
/// computed directly from the transformation so integrable endpoint
/// singularities like `(x-a)^(p-1)` can be evaluated without cancellation.
pub fn tanh_sinh<O: QuadValue, F: Fn(f64, f64, f64) -> O>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadEstimate<O>> {
    assert!(a < b, "tanh_sinh requires a < b");
    let evals = Cell::new(0usize);
    let half = 0.5 * (b - a);
    // Node at parameter t: x = center + half * tanh(u), u = (pi/2) sinh t.
    // Distances to the endpoints: half * (1 -+ tanh u) = half * 2 / (e^{+-2u} + 1).
    let eval_node = |t: f64| -> O {
        evals.set(evals.get() + 1);
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let d_right = 2.0 * half / ((2.0 * u).exp() + 1.0); // b - x
        let d_left = 2.0 * half / ((-2.0 * u).exp() + 1.0); // x - a
        let x = if u >= 0.0 { b - d_right } else { a + d_left };
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (u.cosh() * u.cosh());
        f(x, d_left, d_right).scale(w * half)
    };

    let mut h = 1.0;
    let mut sum = eval_node(0.0);
    {
        let mut k = 1;
        while (k as f64) * h <= DE_T_MAX {
            let t = k as f64 * h;
            sum = sum.add(eval_node(t)).add(eval_node(-t));
            k += 1;
        }
    }
    let mut value = sum.scale(h);
    let mut prev;

    for _level in 1..=DE_MAX_LEVEL {
        prev = value;
        h *= 0.5;
        // New nodes are the odd multiples of the refined step.
        let mut add = O::zero();
        let mut k = 1;
        while (k as f64) * h <= DE_T_MAX {
            let t = k as f64 * h;
            add = add.add(eval_node(t)).add(eval_node(-t));
            k += 2;
        }
        value = prev.scale(0.5).add(add.scale(h));

        let diff = value.sub(prev).norm();
        let tol = spec.abs_tol.max(spec.rel_tol * value.norm());
        if diff <= tol {
            return Ok(QuadEstimate {
                value,
                error_bound: diff.max(f64::EPSILON * value.norm()),
                evaluations: evals.get(),
            });
        }
    }

    Err(Error::QuadratureNonConvergence {
        achieved: f64::NAN,
        requested: spec.abs_tol,
    })
}

/// Exp-sinh (double-exponential) integration of `f` over `(0, infinity)`.
///
/// Handles an integrable algebraic singularity at 0 and exponential or
/// sufficiently fast algebraic decay at infinity.
pub fn exp_sinh<O: QuadValue, F: Fn(f64) -> O>(
    f: F,
    spec: &QuadratureSpec,
) -> Result<QuadEstimate<O>> {
    let evals = Cell::new(0usize);
    // x = exp((pi/2) sinh t), dx = (pi/2) cosh t * x dt.
    let eval_node = |t: f64| -> O {
        evals.set(evals.get() + 1);
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        if u > 700.0 || u < -700.0 {
            return O::zero();
        }
        let x = u.exp();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() * x;
        let v = f(x);
        if v.norm().is_finite() {
            v.scale(w)
        } else {
            O::zero()
        }
    };

    let mut h = 1.0;
    let mut sum = eval_node(0.0);
    {
        let mut k = 1;
        while (k as f64) * h <= DE_T_MAX {
            let t = k as f64 * h;
            sum = sum.add(eval_node(t)).add(eval_node(-t));
            k += 1;
        }
    }
    let mut value = sum.scale(h);
    let mut prev;

    for _level in 1..=DE_MAX_LEVEL {
        prev = value;
        h *= 0.5;
        let mut add = O::zero();
        let mut k = 1;
        while (k as f64) * h <= DE_T_MAX {
            let t = k as f64 * h;
            add = add.add(eval_node(t)).add(eval_node(-t));
            k += 2;
        }
        value = prev.scale(0.5).add(add.scale(h));

        let diff = value.sub(prev).norm();
        let tol = spec.abs_tol.max(spec.rel_tol * value.norm());
        if diff <= tol {
            return Ok(QuadEstimate {
                value,
                error_bound: diff.max(f64::EPSILON * value.norm()),
                evaluations: evals.get(),
            });
        }
    }

    Err(Error::QuadratureNonConvergence {
        achieved: f64::NAN,
        requested: spec.abs_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk_exponential() {
        let spec = QuadratureSpec::default();
        let r = adaptive_gk(|x: f64| x.exp(), 0.0, 1.0, &spec).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn gk_oscillatory() {
        let spec = QuadratureSpec::default();
        let r = adaptive_gk(|x: f64| (50.0 * x).sin(), 0.0, PI, &spec).unwrap();
        let exact = (1.0 - (50.0 * PI).cos()) / 50.0;
        assert!((r.value - exact).abs() < 1e-12, "got {} want {}", r.value, exact);
    }

    #[test]
    fn gk_complex() {
        let spec = QuadratureSpec::default();
        let r = adaptive_gk(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            1.0,
            &spec,
        )
        .unwrap();
        let exact = Complex64::new(1f64.sin(), 1.0 - 1f64.cos());
        assert!((r.value - exact).norm() < 1e-13);
    }

    #[test]
    fn tanh_sinh_inverse_sqrt_singularity() {
        // int_0^1 x^(-1/2) (1-x)^(-1/2) dx = pi.
        let spec = QuadratureSpec::with_tols(1e-13, 1e-13);
        let r = tanh_sinh(
            |_x, da, db| 1.0 / (da.sqrt() * db.sqrt()),
            0.0,
            1.0,
            &spec,
        )
        .unwrap();
        assert!((r.value - PI).abs() < 1e-12, "got {}", r.value);
    }

    #[test]
    fn tanh_sinh_beta_integral() {
        // int_0^1 x^(a-1)(1-x)^(b-1) dx = B(a,b), a = b = 1/2 + small asymmetric case.
        let spec = QuadratureSpec::with_tols(1e-13, 1e-12);
        let a = 0.5;
        let b = 1.5;
        let r = tanh_sinh(
            |_x, da, db| da.powf(a - 1.0) * db.powf(b - 1.0),
            0.0,
            1.0,
            &spec,
        )
        .unwrap();
        // B(1/2, 3/2) = pi/2.
        assert!((r.value - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn exp_sinh_gamma_integral() {
        // int_0^inf x^(3/2) e^(-x) dx = Gamma(5/2) = 3 sqrt(pi)/4.
        let spec = QuadratureSpec::with_tols(1e-13, 1e-12);
        let r = exp_sinh(|x: f64| x.powf(1.5) * (-x).exp(), &spec).unwrap();
        let exact = 0.75 * PI.sqrt();
        assert!((r.value - exact).abs() < 1e-12, "got {}", r.value);
    }

    #[test]
    fn exp_sinh_power_law_tail() {
        // int_0^inf x / (1+x^2)^2 dx = 1/2.
        let spec = QuadratureSpec::with_tols(1e-12, 1e-11);
        let r = exp_sinh(|x: f64| x / (1.0 + x * x).powi(2), &spec).unwrap();
        assert!((r.value - 0.5).abs() < 1e-11, "got {}", r.value);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let spec = QuadratureSpec {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_subdivisions: 4,
        };
        let r = adaptive_gk(|x: f64| (1.0 / (1e-5 + x * x)).sin(), -1.0, 1.0, &spec);
        assert!(matches!(
            r,
            Err(Error::QuadratureNonConvergence { .. })
        ));
    }
}
