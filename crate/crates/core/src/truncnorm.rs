//! Truncated normal distribution with tail-safe moments.
//!
//! The location parameter may sit far outside the truncation interval (the
//! posterior mode of a learner whose data point below the support), so the
//! normalizer and the mean are evaluated relative to the nearer tail with the
//! scaled complementary error function instead of `Φ(b) - Φ(a)`.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `exp(x²)·erfc(x)` for `x ≥ 0`.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0 || x.is_nan());
    if x.is_infinite() {
        return 0.0;
    }
    if x < 6.0 {
        return (x * x).exp() * erfc(x);
    }
    // Continued fraction x + (1/2)/(x + 1/(x + (3/2)/(x + ...))), evaluated
    // from the tail; 60 levels are far past convergence for x ≥ 6.
    let mut f = x;
    for k in (1..=60).rev() {
        f = x + 0.5 * k as f64 / f;
    }
    1.0 / (PI.sqrt() * f)
}

/// Upper standard-normal tail `Q(x) = P(Z > x)`.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `N(location, scale²)` restricted to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub location: f64,
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Standardized bounds plus the normalizer `Z` and the two boundary density
/// values, all multiplied by a common factor `exp(shift)` so that nothing
/// underflows.
struct Scaled {
    a: f64,
    b: f64,
    z: f64,
    phi_a: f64,
    phi_b: f64,
    /// `ln Z = ln z - shift`
    shift: f64,
}

impl TruncatedNormal {
    pub fn new(location: f64, scale: f64, lower: f64, upper: f64) -> Self {
        assert!(scale > 0.0, "truncated normal needs a positive scale");
        assert!(lower < upper, "truncated normal needs lower < upper");
        Self {
            location,
            scale,
            lower,
            upper,
        }
    }

    fn standardized(&self) -> (f64, f64) {
        (
            (self.lower - self.location) / self.scale,
            (self.upper - self.location) / self.scale,
        )
    }

    /// Works in the orientation where the mass sits at or above zero
    /// standardized units of `a`; callers mirror otherwise.
    fn scaled_right_tail(a: f64, b: f64) -> Scaled {
        // factor exp(a²/2) applied throughout
        let gap = if b.is_infinite() {
            f64::INFINITY
        } else {
            0.5 * (b - a) * (b + a)
        };
        let decay = (-gap).exp();
        let za = 0.5 * erfcx(a / SQRT_2);
        let zb = if b.is_infinite() {
            0.0
        } else {
            0.5 * erfcx(b / SQRT_2) * decay
        };
        let inv = 1.0 / (2.0 * PI).sqrt();
        Scaled {
            a,
            b,
            z: za - zb,
            phi_a: inv,
            phi_b: inv * decay,
            shift: 0.5 * a * a,
        }
    }

    fn scaled(&self) -> (Scaled, bool) {
        let (a, b) = self.standardized();
        if a >= 0.0 {
            (Self::scaled_right_tail(a, b), false)
        } else if b <= 0.0 {
            (Self::scaled_right_tail(-b, -a), true)
        } else {
            let z = 1.0 - upper_tail(-a) - upper_tail(b);
            let phi = |x: f64| {
                if x.is_infinite() {
                    0.0
                } else {
                    (-0.5 * x * x - LN_SQRT_2PI).exp()
                }
            };
            (
                Scaled {
                    a,
                    b,
                    z,
                    phi_a: phi(a),
                    phi_b: phi(b),
                    shift: 0.0,
                },
                false,
            )
        }
    }

    /// Natural log of the probability mass `Φ(b) - Φ(a)` of the parent normal.
    pub fn ln_mass(&self) -> f64 {
        let (s, _) = self.scaled();
        s.z.ln() - s.shift
    }

    pub fn mean(&self) -> f64 {
        let (s, mirrored) = self.scaled();
        let shift = self.scale * (s.phi_a - s.phi_b) / s.z;
        let m = if mirrored {
            self.location - shift
        } else {
            self.location + shift
        };
        m.clamp(self.lower, self.upper)
    }

    /// Variance by the textbook formula. Loses relative accuracy when the
    /// location is many scales outside the interval.
    pub fn variance(&self) -> f64 {
        let (s, _) = self.scaled();
        let ta = if s.a.is_infinite() { 0.0 } else { s.a * s.phi_a };
        let tb = if s.b.is_infinite() { 0.0 } else { s.b * s.phi_b };
        let lam = (s.phi_a - s.phi_b) / s.z;
        let v = self.scale * self.scale * (1.0 + (ta - tb) / s.z - lam * lam);
        v.max(0.0)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return f64::NEG_INFINITY;
        }
        let (a, b) = self.standardized();
        let z = (x - self.location) / self.scale;
        let (s, _) = self.scaled();
        // -(z² - a'²)/2 with a' the bound used for the scaling shift
        let quad = if a >= 0.0 {
            0.5 * (z - a) * (z + a)
        } else if b <= 0.0 {
            0.5 * (z - b) * (z + b)
        } else {
            0.5 * z * z
        };
        -quad - LN_SQRT_2PI - self.scale.ln() - s.z.ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use proptest::prelude::*;

    #[test]
    fn erfcx_continuity_at_switch() {
        let below = erfcx(6.0 - 1e-12);
        let above = erfcx(6.0);
        assert!((below - above).abs() / above < 1e-12, "{below} {above}");
        // leading asymptotic behaviour 1/(x√π)
        let x = 1e4;
        assert!((erfcx(x) * x * PI.sqrt() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn untruncated_limit() {
        let tn = TruncatedNormal::new(1.0, 0.5, -50.0, 50.0);
        assert!((tn.mean() - 1.0).abs() < 1e-14);
        assert!((tn.variance() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn half_normal_mean() {
        let tn = TruncatedNormal::new(0.0, 1.0, 0.0, f64::INFINITY);
        assert!((tn.mean() - (2.0 / PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn far_tail_mean_is_finite_and_inside() {
        // location 21000 scales below the interval
        let tn = TruncatedNormal::new(-2.0556, 1e-4, 0.09, 9.0);
        let m = tn.mean();
        assert!(m > 0.09 && m < 0.09 + 1e-6, "mean {m}");
        // exponential-limit approximation: lower + scale²/(lower - location)
        let approx = 0.09 + 1e-8 / (0.09 + 2.0556);
        assert!((m - approx).abs() < 1e-12);
        let tn_up = TruncatedNormal::new(30.0, 1e-3, 0.09, 9.0);
        assert!(tn_up.mean() < 9.0 && tn_up.mean() > 9.0 - 1e-6);
    }

    #[test]
    fn density_integrates_to_one() {
        let gl = GaussLegendre::new(32);
        for &(loc, sc) in &[(0.5, 0.3), (-3.0, 0.5), (12.0, 1.0), (4.0, 0.01)] {
            let tn = TruncatedNormal::new(loc, sc, 0.09, 9.0);
            let mass = gl.integrate_composite(0.09, 9.0, 4000, |x| tn.pdf(x));
            assert!((mass - 1.0).abs() < 1e-10, "loc {loc} mass {mass}");
            let mean = gl.integrate_composite(0.09, 9.0, 4000, |x| x * tn.pdf(x));
            assert!((mean - tn.mean()).abs() < 1e-10, "loc {loc}: {mean} vs {}", tn.mean());
        }
    }

    proptest! {
        #[test]
        fn mean_bounds(loc in -20.0f64..30.0, log_sc in -6.0f64..1.5) {
            let sc = 10f64.powf(log_sc);
            let (lo, hi) = (0.09, 9.0);
            let tn = TruncatedNormal::new(loc, sc, lo, hi);
            let m = tn.mean();
            prop_assert!(m >= lo && m <= hi);
            // distance to the projected location is at most one scale
            let proj = loc.clamp(lo, hi);
            prop_assert!((m - proj).abs() <= sc * (1.0 + 1e-9), "m={} proj={} sc={}", m, proj, sc);
        }

        #[test]
        fn mean_monotone_in_location(loc in -10.0f64..20.0, d in 1e-3f64..1.0, sc in 0.01f64..3.0) {
            let a = TruncatedNormal::new(loc, sc, 0.09, 9.0).mean();
            let b = TruncatedNormal::new(loc + d, sc, 0.09, 9.0).mean();
            prop_assert!(b >= a - 1e-12);
        }
    }
}
