//! Geometric coefficients of the trust function and finite geometric sums.
//!
//! The three coefficients are tied together by their infinite sums:
//!
//! - `a/(1-a) + a = 1`: all tiers together saturate at one,
//! - `b/(1-b) = a - b`: together with the wireless tier, the second tier
//!   saturates at one first-tier term,
//! - `c/(1-c) = b`: the wireless tier saturates at one second-tier term.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::TrustCounts;
use crate::error::{Error, Result};

const BISECTION_BUDGET: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    FixedPoint { tolerance: f64 },
}

/// Coefficients `a > b > c` of the mutual-KLJN, non-mutual-KLJN and
/// wireless-only tiers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub provenance: Provenance,
}

/// Residuals of the saturation system, each zero for exact coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `a/(1-a) + a - 1`
    pub a: f64,
    /// `b/(1-b) - (a - b)`
    pub b: f64,
    /// `c/(1-c) - b`
    pub c: f64,
}

impl Residuals {
    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }
}

impl TrustCoefficients {
    /// Exact roots: `a = (3 - sqrt 5)/2`, `b` the smaller root of
    /// `b^2 - (a+2)b + a = 0`, `c = b/(1+b)`.
    pub fn closed_form() -> Self {
        let a = (3.0 - 5f64.sqrt()) / 2.0;
        let b = (a + 2.0 - (a * a + 4.0).sqrt()) / 2.0;
        let c = b / (1.0 + b);
        TrustCoefficients {
            a,
            b,
            c,
            provenance: Provenance::ClosedForm,
        }
    }

    /// Solves the saturation system numerically by bisection, `a` first,
    /// then `b` given `a`, then `c` given `b`. Each root is bracketed in
    /// `(0, 1)` where the defining function is strictly increasing.
    pub fn fixed_point(tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1e-3) {
            return Err(Error::Domain(format!(
                "fixed-point tolerance must lie in (0, 1e-3), got {tol}"
            )));
        }
        // Bracket tighter than `tol` so the error carried from a into b
        // and from b into c stays inside the requested tolerance.
        let target = tol / 8.0;
        let a = bisect("coefficient a", target, |x| series(x) + x - 1.0)?;
        let b = bisect("coefficient b", target, |x| series(x) - (a - x))?;
        let c = bisect("coefficient c", target, |x| series(x) - b)?;
        Ok(TrustCoefficients {
            a,
            b,
            c,
            provenance: Provenance::FixedPoint { tolerance: tol },
        })
    }

    pub fn residuals(&self) -> Residuals {
        Residuals {
            a: series(self.a) + self.a - 1.0,
            b: series(self.b) - (self.a - self.b),
            c: series(self.c) - self.b,
        }
    }

    pub fn is_ordered(&self) -> bool {
        0.0 < self.c && self.c < self.b && self.b < self.a && self.a < 1.0
    }

    /// Largest component-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &TrustCoefficients) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
    }

    /// How far the tiered sums stay below their ceilings for the given
    /// counts. See [`TierGaps`].
    pub fn tier_gaps(&self, k: u64, w: u64, z: u64) -> TierGaps {
        let (ta, tb, tc) = (ln_tail(self.a, k), ln_tail(self.b, w), ln_tail(self.c, z));
        TierGaps {
            ln_wireless_below_b: tc,
            ln_lower_below_a: ln_add(tb, tc),
            ln_total_below_one: ln_add(ta, ln_add(tb, tc)),
            ln_b: self.b.ln(),
            ln_a: self.a.ln(),
        }
    }
}

impl TrustCoefficients {
    /// Orders two tiered sums without rounding them first.
    ///
    /// Adjacent counts differ by terms such as `c^22`, far below the spacing
    /// of `f64` values near the sums themselves, so comparing computed sums
    /// reports ties that are not there. The difference is instead expanded
    /// into one signed block `r^(m+1) (1 - r^(n-m)) / (1 - r)` per coordinate,
    /// each evaluated as a logarithm, and the positive and negative parts
    /// compared.
    pub fn compare_tiered(&self, x: TrustCounts, y: TrustCounts) -> Ordering {
        let mut pos = f64::NEG_INFINITY;
        let mut neg = f64::NEG_INFINITY;
        for (r, n1, n2) in [(self.a, x.k, y.k), (self.b, x.w, y.w), (self.c, x.z, y.z)] {
            match n1.cmp(&n2) {
                Ordering::Equal => {}
                Ordering::Greater => pos = ln_add(pos, ln_block(r, n2, n1)),
                Ordering::Less => neg = ln_add(neg, ln_block(r, n1, n2)),
            }
        }
        pos.partial_cmp(&neg).unwrap_or(Ordering::Equal)
    }
}

impl Default for TrustCoefficients {
    fn default() -> Self {
        TrustCoefficients::closed_form()
    }
}

/// Natural logs of the three ceiling gaps at counts `(K, W, Z)`:
///
/// - `b - S_Z(c)`
/// - `a - S_W(b) - S_Z(c)`
/// - `1 - S_K(a) - S_W(b) - S_Z(c)`
///
/// With the saturation identities each gap is a sum of geometric tails
/// `r^(n+1)/(1-r)`, which is positive for every finite count but underflows
/// `f64` long before counts reach the millions. Working with logarithms
/// keeps the gaps representable; a finite log means a strictly positive gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierGaps {
    pub ln_wireless_below_b: f64,
    pub ln_lower_below_a: f64,
    pub ln_total_below_one: f64,
    ln_b: f64,
    ln_a: f64,
}

impl TierGaps {
    pub fn all_positive(&self) -> bool {
        [
            self.ln_wireless_below_b,
            self.ln_lower_below_a,
            self.ln_total_below_one,
        ]
        .iter()
        .all(|g| g.is_finite())
    }

    /// Gaps relative to their bounds (`b`, `a` and `1`), as natural logs.
    pub fn ln_relative(&self) -> [f64; 3] {
        [
            self.ln_wireless_below_b - self.ln_b,
            self.ln_lower_below_a - self.ln_a,
            self.ln_total_below_one,
        ]
    }
}

/// `sum_{m=1..n} r^m` for `0 < r < 1`.
pub fn geometric_partial_sum(r: f64, n: u64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!(
            "geometric ratio must lie in (0, 1), got {r}"
        )));
    }
    Ok(partial_sum(r, n))
}

/// Closed form `r (1 - r^n) / (1 - r)`, using `expm1` so small `r^n`
/// does not lose precision. Caller guarantees `0 < r < 1`.
#[inline]
pub(crate) fn partial_sum(r: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let one_minus_rn = -((n as f64) * r.ln()).exp_m1();
    r * one_minus_rn / (1.0 - r)
}

/// `x/(1-x)`, the infinite geometric sum starting at the first power.
fn series(x: f64) -> f64 {
    x / (1.0 - x)
}

/// `ln( sum_{m>n} r^m ) = (n+1) ln r - ln(1-r)`.
fn ln_tail(r: f64, n: u64) -> f64 {
    (n as f64 + 1.0) * r.ln() - (-r).ln_1p()
}

/// `ln( sum_{m=lo+1..hi} r^m )` for `lo < hi`.
fn ln_block(r: f64, lo: u64, hi: u64) -> f64 {
    let span = (hi - lo) as f64;
    (lo as f64 + 1.0) * r.ln() + (-(span * r.ln()).exp_m1()).ln() - (-r).ln_1p()
}

fn ln_add(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn bisect(what: &'static str, width: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECTION_BUDGET {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width || mid <= lo || mid >= hi {
            return if hi - lo <= width.max(4.0 * f64::EPSILON) {
                Ok(mid)
            } else {
                Err(Error::NonConvergence {
                    what,
                    iterations: BISECTION_BUDGET,
                })
            };
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        what,
        iterations: BISECTION_BUDGET,
    })
}
