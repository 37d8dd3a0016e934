//! Separable representation `R(h, β) = g1(β)·g2(h) + g3(h)` and the change
//! of variable `β̆ = g1(β)` under which the posterior is Gaussian.

use std::fmt;
use std::sync::Arc;

use crate::best_response::BestResponseEngine;
use crate::error::{Error, Result};
use crate::primitives::{ModelPrimitives, Support};
use crate::solver;

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const CERT_GRID: usize = 32;
const CERT_TOL: f64 = 1e-10;

#[derive(Clone)]
enum Kind {
    Lq { c: f64 },
    Separable { h_ref: f64, g1_lo: f64, g1_hi: f64 },
    Custom { g1: Fn1, g1_inv: Fn1, g2: Fn1, g3: Fn1 },
}

#[derive(Clone)]
pub struct TransformedModel {
    kind: Kind,
    engine: BestResponseEngine,
    support: Support,
    max_error: f64,
}

impl fmt::Debug for TransformedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            Kind::Lq { .. } => "lq",
            Kind::Separable { .. } => "separable",
            Kind::Custom { .. } => "custom",
        };
        f.debug_struct("TransformedModel")
            .field("kind", &kind)
            .field("support", &self.support)
            .field("max_error", &self.max_error)
            .finish()
    }
}

/// Closed form for linear-quadratic models (`g1 = β²`, `g2 = h/c`, `g3 = 0`);
/// otherwise a numerical factorization certified on a grid.
pub fn transform(model: &ModelPrimitives) -> Result<TransformedModel> {
    let engine = BestResponseEngine::new(model);
    let kind = match model.lq() {
        Some(p) => Kind::Lq { c: p.c },
        None => {
            let h_ref = model.h_cap();
            let sup = model.support();
            Kind::Separable {
                h_ref,
                g1_lo: engine.effective_effort(h_ref, sup.lower)?,
                g1_hi: engine.effective_effort(h_ref, sup.upper)?,
            }
        }
    };
    finish(kind, engine)
}

/// User-supplied factorization, accepted only if it reproduces `R` on the
/// certification grid.
pub fn transform_custom<G1, G1I, G2, G3>(
    model: &ModelPrimitives,
    g1: G1,
    g1_inv: G1I,
    g2: G2,
    g3: G3,
) -> Result<TransformedModel>
where
    G1: Fn(f64) -> f64 + Send + Sync + 'static,
    G1I: Fn(f64) -> f64 + Send + Sync + 'static,
    G2: Fn(f64) -> f64 + Send + Sync + 'static,
    G3: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let kind = Kind::Custom {
        g1: Arc::new(g1),
        g1_inv: Arc::new(g1_inv),
        g2: Arc::new(g2),
        g3: Arc::new(g3),
    };
    finish(kind, BestResponseEngine::new(model))
}

fn finish(kind: Kind, engine: BestResponseEngine) -> Result<TransformedModel> {
    let sup = engine.model().support();
    let mut tm = TransformedModel {
        kind,
        engine,
        support: sup,
        max_error: 0.0,
    };
    tm.support = Support::new(tm.g1(sup.lower), tm.g1(sup.upper));
    if !(tm.support.lower < tm.support.upper) {
        return Err(Error::TransformRejected { max_error: f64::NAN });
    }
    let cap = tm.engine.model().h_cap();
    let mut worst: f64 = 0.0;
    for i in 1..=CERT_GRID {
        let h = cap * i as f64 / CERT_GRID as f64;
        for j in 0..CERT_GRID {
            let b = sup.lower + sup.width() * j as f64 / (CERT_GRID - 1) as f64;
            let r = tm.engine.effective_effort(h, b)?;
            let err = (tm.g1(b) * tm.g2(h) + tm.g3(h) - r).abs() / r.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    let g2_positive = (1..=CERT_GRID).all(|i| tm.g2(cap * i as f64 / CERT_GRID as f64) > 0.0);
    if !(worst < CERT_TOL) || !g2_positive {
        return Err(Error::TransformRejected { max_error: worst });
    }
    tm.max_error = worst;
    Ok(tm)
}

impl TransformedModel {
    pub fn engine(&self) -> &BestResponseEngine {
        &self.engine
    }

    pub fn model(&self) -> &ModelPrimitives {
        self.engine.model()
    }

    /// Transformed support `[g1(β̲), g1(β̄)]`.
    pub fn support(&self) -> Support {
        self.support
    }

    /// Largest relative reconstruction error seen during certification.
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, Kind::Lq { .. })
    }

    pub fn g1(&self, beta: f64) -> f64 {
        match &self.kind {
            Kind::Lq { .. } => beta * beta,
            Kind::Separable { h_ref, .. } => self.engine.effective_effort(*h_ref, beta).unwrap_or(f64::NAN),
            Kind::Custom { g1, .. } => g1(beta),
        }
    }

    pub fn g1_inv(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Lq { .. } => x.max(0.0).sqrt(),
            Kind::Separable { h_ref, .. } => {
                let h = *h_ref;
                let f = |b: f64| self.engine.effective_effort(h, b).unwrap_or(f64::NAN) - x;
                let hi = match solver::expand_upper(f, 0.0, self.model().support().upper, 60) {
                    Ok(hi) => hi,
                    Err(_) => return f64::NAN,
                };
                solver::bisect(f, 0.0, hi, 1e-15).unwrap_or(f64::NAN)
            }
            Kind::Custom { g1_inv, .. } => g1_inv(x),
        }
    }

    pub fn g2(&self, h: f64) -> f64 {
        match &self.kind {
            Kind::Lq { c } => h / c,
            Kind::Separable { g1_lo, g1_hi, .. } => {
                let sup = self.model().support();
                let hi = self.engine.effective_effort(h, sup.upper).unwrap_or(f64::NAN);
                let lo = self.engine.effective_effort(h, sup.lower).unwrap_or(f64::NAN);
                (hi - lo) / (g1_hi - g1_lo)
            }
            Kind::Custom { g2, .. } => g2(h),
        }
    }

    pub fn g3(&self, h: f64) -> f64 {
        match &self.kind {
            Kind::Lq { .. } => 0.0,
            Kind::Separable { g1_lo, .. } => {
                let lo = self.engine.effective_effort(h, self.model().support().lower).unwrap_or(f64::NAN);
                lo - g1_lo * self.g2(h)
            }
            Kind::Custom { g3, .. } => g3(h),
        }
    }

    /// Per-period Fisher information `I(h) = g2(h)²·h` about `β̆`.
    pub fn fisher_information(&self, h: f64) -> f64 {
        let g = self.g2(h);
        g * g * h
    }

    /// Transformed KL root `g1(β*) - Δ/g2(h)`; defined for every `h > 0`
    /// and free to leave the support.
    pub fn psi(&self, h: f64, delta: f64, beta_star: f64) -> f64 {
        self.g1(beta_star) - delta / self.g2(h)
    }

    /// Assessment at the degenerate belief `g1⁻¹(m̃)`, `m̃` the projection
    /// of `m` onto the transformed support.
    pub fn assessment_at(&self, m: f64) -> Result<f64> {
        self.engine.assessment(self.g1_inv(self.support.clamp(m)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{build_lq, CallablePrimitives, LqParams, PowerCostPrimitives, Scenario};

    fn lq(c: f64) -> ModelPrimitives {
        let p = LqParams::new(c, 1.0, 1.0, 1.0, 0.0).unwrap();
        build_lq(p, Scenario::new(0.0, 2.0, 0.5, 0.3, 3.0)).unwrap()
    }

    #[test]
    fn lq_closed_forms() {
        let t = transform(&lq(1.0)).unwrap();
        assert_eq!(t.g1(2.0), 4.0);
        assert_eq!(t.g2(0.5), 0.5);
        assert_eq!(t.g3(0.7), 0.0);
        assert_eq!(t.fisher_information(0.5), 0.125);
        let t2 = transform(&lq(2.0)).unwrap();
        assert_eq!(t2.g2(0.5), 0.25);
        assert_eq!(t2.fisher_information(1.0), 0.25);
        assert!(t.fisher_information(1e-9) < 1e-26);
        assert!((t.support().lower - 0.09).abs() < 1e-15);
    }

    #[test]
    fn linear_effective_effort_factorizes_exactly() {
        // r(a, β) = a with c(a) = a²/(2β)... simpler: effort fixed so R = βh
        let f = CallablePrimitives::new(
            |a, b| b * a,
            |a| 0.5 * a * a,
            |h| 0.5 * h * h,
            |a, b| b * a - 0.25 * a * a,
            |_, _| 0.0,
        );
        let m = ModelPrimitives::general(Arc::new(f), Scenario::new(0.0, 2.0, 0.1, 0.5, 3.0)).unwrap();
        let t = transform_custom(&m, |b| b * b, |x| x.sqrt(), |h| h, |_| 0.0).unwrap();
        assert!(t.max_error() < 1e-10);
        let bad = transform_custom(&m, |b| b, |x| x, |h| h, |_| 0.0);
        assert!(matches!(bad, Err(Error::TransformRejected { .. })));
    }

    #[test]
    fn numeric_factorization_of_power_cost() {
        let pc = PowerCostPrimitives::new(1.0, 4.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let m = ModelPrimitives::general(Arc::new(pc), Scenario::new(0.0, 2.0, 0.1, 0.5, 3.0)).unwrap();
        let t = transform(&m).unwrap();
        // R = h^{1/3} β^{4/3}
        let b = 1.7;
        assert!((t.g1_inv(t.g1(b)) - b).abs() < 1e-12);
        let h = 0.4;
        let r = t.g1(b) * t.g2(h) + t.g3(h);
        assert!((r - h.cbrt() * b.powf(4.0 / 3.0)).abs() < 1e-10);
    }
}
