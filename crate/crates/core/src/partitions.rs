//! Integer partitions (Young diagrams), their box statistics and Pochhammer
//! symbols. These are the combinatorial substrate of every explicit moment
//! formula in [`crate::limits`].

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use std::fmt;

use crate::{Error, Result};

/// A Young diagram: a weakly decreasing sequence of positive integers.
/// The empty partition is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    parts: Vec<usize>,
}

/// Arm, leg, co-arm and co-leg lengths of one box of a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxStats {
    /// Number of boxes to the right of the box, in the same row.
    pub arm: usize,
    /// Number of boxes below the box, in the same column.
    pub leg: usize,
    /// Number of boxes to the left of the box.
    pub coarm: usize,
    /// Number of boxes above the box.
    pub coleg: usize,
}

impl Partition {
    /// Builds a partition from its parts, which must be strictly positive and
    /// weakly decreasing.
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.iter().any(|&p| p == 0) {
            return Err(Error::InvalidArgument("partition parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "partition parts must be weakly decreasing".into(),
            ));
        }
        Ok(Partition { parts })
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// |kappa|, the total number of boxes.
    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Number of (positive) parts.
    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The i-th part (0-based), with parts beyond the last equal to zero.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    /// Length of column `j` (0-based): number of rows with at least `j+1` boxes.
    pub fn column_len(&self, j: usize) -> usize {
        self.parts.iter().take_while(|&&p| p > j).count()
    }

    /// True if (row `i`, column `j`) (both 0-based) is a box of the diagram.
    pub fn contains_box(&self, i: usize, j: usize) -> bool {
        i < self.parts.len() && j < self.parts[i]
    }

    /// Box statistics of the box at (row `i`, column `j`), 0-based.
    ///
    /// Panics if the box lies outside the diagram; that is a contract
    /// violation on the caller's side.
    pub fn box_stats(&self, i: usize, j: usize) -> BoxStats {
        assert!(
            self.contains_box(i, j),
            "box ({i},{j}) outside partition {self}"
        );
        BoxStats {
            arm: self.parts[i] - j - 1,
            leg: self.column_len(j) - i - 1,
            coarm: j,
            coleg: i,
        }
    }

    /// Iterates over all boxes as `(row, column, stats)`, row-major, 0-based.
    pub fn boxes(&self) -> impl Iterator<Item = (usize, usize, BoxStats)> + '_ {
        self.parts
            .iter()
            .enumerate()
            .flat_map(move |(i, &len)| (0..len).map(move |j| (i, j, self.box_stats(i, j))))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Enumerates every partition with weight at most `max_weight` and at most
/// `max_parts` parts (`None` = unbounded), each exactly once.
///
/// The order is deterministic: weight-major, and within a fixed weight
/// reverse-lexicographic, i.e. `(), (1), (2), (1,1), (3), (2,1), (1,1,1), ...`
pub fn enumerate_partitions(max_weight: usize, max_parts: Option<usize>) -> Vec<Partition> {
    let mut out = Vec::new();
    for w in 0..=max_weight {
        partitions_of_weight_into(w, max_parts, &mut out);
    }
    out
}

/// Every partition of exactly `weight` with at most `max_parts` parts, in
/// reverse-lexicographic order.
pub fn partitions_of_weight(weight: usize, max_parts: Option<usize>) -> Vec<Partition> {
    let mut out = Vec::new();
    partitions_of_weight_into(weight, max_parts, &mut out);
    out
}

fn partitions_of_weight_into(weight: usize, max_parts: Option<usize>, out: &mut Vec<Partition>) {
    let mut current = Vec::new();
    rec(weight, weight, max_parts.unwrap_or(usize::MAX), &mut current, out);

    fn rec(
        remaining: usize,
        max_part: usize,
        parts_left: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Partition>,
    ) {
        if remaining == 0 {
            out.push(Partition {
                parts: current.clone(),
            });
            return;
        }
        if parts_left == 0 {
            return;
        }
        for p in (1..=remaining.min(max_part)).rev() {
            current.push(p);
            rec(remaining - p, p, parts_left - 1, current, out);
            current.pop();
        }
    }
}

/// The Pochhammer symbol `(x)_k = x (x+1) ... (x+k-1)`.
pub fn pochhammer(x: Complex64, k: usize) -> Complex64 {
    (0..k).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (x + j as f64))
}

/// Real Pochhammer symbol.
pub fn pochhammer_real(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (x + j as f64))
}

/// `log (x)_k` for real `x > 0`, useful when the linear product would
/// overflow.
pub fn ln_pochhammer(x: f64, k: usize) -> f64 {
    assert!(x > 0.0, "ln_pochhammer requires x > 0");
    (0..k).map(|j| (x + j as f64).ln()).sum()
}

/// Generalised Pochhammer symbol associated to a partition:
/// `[x]_kappa^(alpha) = prod_j (x - (j-1)/alpha)_{kappa_j}`, with `j` running
/// 1-based over the parts.
pub fn gen_pochhammer(x: Complex64, kappa: &Partition, alpha: f64) -> Complex64 {
    assert!(alpha > 0.0, "gen_pochhammer requires alpha > 0");
    let inv = 1.0 / alpha;
    kappa
        .parts()
        .iter()
        .enumerate()
        .fold(Complex64::new(1.0, 0.0), |acc, (j0, &kj)| {
            acc * pochhammer(x - inv * j0 as f64, kj)
        })
}

/// Exact-rational Pochhammer symbol.
pub fn pochhammer_rational(x: &BigRational, k: usize) -> BigRational {
    let mut acc = BigRational::one();
    for j in 0..k {
        acc *= x + BigRational::from_integer(BigInt::from(j));
    }
    acc
}

/// Exact-rational generalised Pochhammer symbol, with `inv_alpha = 1/alpha`.
pub fn gen_pochhammer_rational(
    x: &BigRational,
    kappa: &Partition,
    inv_alpha: &BigRational,
) -> BigRational {
    let mut acc = BigRational::one();
    for (j0, &kj) in kappa.parts().iter().enumerate() {
        let shifted = x - inv_alpha * BigRational::from_integer(BigInt::from(j0));
        acc *= pochhammer_rational(&shifted, kj);
    }
    acc
}

/// Convenience: `true` if the product `(x)_k` contains an exact zero factor.
pub fn pochhammer_is_zero(x: f64, k: usize) -> bool {
    x <= 0.0 && x.fract() == 0.0 && (-x) < k as f64
}
