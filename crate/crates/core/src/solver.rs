//! Scalar bracketing root finders.
//!
//! Everything here assumes a continuous function with a sign change on the
//! supplied bracket. Callers in this crate only hand over residuals that are
//! monotone on the bracket, so the root found is the unique one.

use crate::error::{Error, Result};

/// Default iteration cap for bisection-type loops. 200 halvings exhaust f64.
pub const MAX_ITER: usize = 200;

/// Bisection on `[lo, hi]` until the bracket is narrower than
/// `xtol * (1 + |x|)`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::BracketFailure {
            what: "bisection residual",
            probe: hi,
        });
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol * (1.0 + mid.abs()) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton's method kept inside a shrinking bracket; falls back to a
/// bisection step whenever the Newton iterate leaves the bracket or the
/// derivative is unusable.
pub fn safeguarded_newton<F, D>(
    mut f: F,
    mut df: D,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::BracketFailure {
            what: "newton residual",
            probe: hi,
        });
    }
    let lo_sign = flo.signum();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= xtol * (1.0 + x.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d.is_finite() && d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= xtol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Doubles `hi` starting from `start` until `f(hi)` has the opposite sign
/// of `f(lo)`. Returns the expanded upper end.
pub fn expand_upper<F>(mut f: F, lo: f64, start: f64, max_doublings: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let sign_lo = f(lo).signum();
    let mut hi = start.max(lo + f64::EPSILON);
    for _ in 0..max_doublings {
        let fh = f(hi);
        if fh.is_nan() {
            break;
        }
        if fh == 0.0 || fh.signum() != sign_lo {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(Error::BracketFailure {
        what: "upper bracket expansion",
        probe: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn newton_matches_bisection_on_cubic() {
        let f = |x: f64| x * x * x - x - 2.0;
        let df = |x: f64| 3.0 * x * x - 1.0;
        let a = safeguarded_newton(f, df, 1.0, 2.0, 1e-15).unwrap();
        let b = bisect(f, 1.0, 2.0, 1e-15).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        // derivative vanishes at the midpoint start
        let r = safeguarded_newton(|x| x.powi(3) - 0.001, |x| 3.0 * x * x, -1.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn expand_upper_doubles() {
        let hi = expand_upper(|x| 1.0 - x, 0.0, 0.25, 10).unwrap();
        assert_eq!(hi, 1.0);
        assert!(expand_upper(|_| 1.0, 0.0, 1.0, 5).is_err());
    }
}
