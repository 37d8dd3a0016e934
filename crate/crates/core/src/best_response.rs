//! Optimal effort `a(h, β)`, effective effort `R(h, β)` and the evaluator's
//! optimal assessment `h(β)`.
//!
//! Linear-quadratic models use closed forms unless `force_numeric` is set;
//! everything else solves first-order conditions by bracketing.

use crate::error::{Error, Result};
use crate::primitives::{LqParams, ModelPrimitives, PrimitiveFunctions};
use crate::solver;

/// Smallest assessment probed when bracketing the evaluator's first-order
/// condition from below.
const H_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BestResponseEngine {
    model: ModelPrimitives,
    /// Relative bracket width at which root finding stops.
    pub root_tol: f64,
    /// Solve first-order conditions numerically even for linear-quadratic
    /// models.
    pub force_numeric: bool,
}

impl BestResponseEngine {
    pub fn new(model: &ModelPrimitives) -> Self {
        Self {
            model: model.clone(),
            root_tol: 1e-10,
            force_numeric: false,
        }
    }

    pub fn numeric(model: &ModelPrimitives) -> Self {
        Self {
            force_numeric: true,
            ..Self::new(model)
        }
    }

    pub fn model(&self) -> &ModelPrimitives {
        &self.model
    }

    fn funcs(&self) -> &dyn PrimitiveFunctions {
        self.model.funcs()
    }

    fn closed(&self) -> Option<&LqParams> {
        if self.force_numeric {
            None
        } else {
            self.model.lq()
        }
    }

    /// Maximizer of `h·r(a, β) - c(a)` over `a ≥ 0`.
    pub fn effort(&self, h: f64, beta: f64) -> Result<f64> {
        check_unit("h", h)?;
        if beta < 0.0 {
            return Err(Error::invalid("beta", format!("productivity must be ≥ 0, got {beta}")));
        }
        if h == 0.0 || beta == 0.0 {
            return Ok(0.0);
        }
        if let Some(p) = self.closed() {
            return Ok(h * beta / p.c);
        }
        let f = self.funcs();
        let foc = |a: f64| h * f.r_a(a, beta) - f.c_prime(a);
        if foc(0.0) <= 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.model.effort_cap();
        if foc(hi) > 0.0 {
            hi = solver::expand_upper(foc, 0.0, hi, 60)?;
        }
        solver::safeguarded_newton(
            foc,
            |a| h * f.r_aa(a, beta) - f.c_second(a),
            0.0,
            hi,
            self.root_tol * 1e-3,
        )
    }

    /// `R(h, β) = r(a(h, β), β)`.
    pub fn effective_effort(&self, h: f64, beta: f64) -> Result<f64> {
        if let Some(p) = self.closed() {
            check_unit("h", h)?;
            return Ok(h * beta * beta / p.c);
        }
        let a = self.effort(h, beta)?;
        Ok(self.funcs().r(a, beta))
    }

    /// `(∂a/∂h, ∂a/∂β)` from the implicit function theorem.
    pub fn effort_sensitivities(&self, h: f64, beta: f64) -> Result<(f64, f64)> {
        let a = self.effort(h, beta)?;
        let f = self.funcs();
        let denom = f.c_second(a) - h * f.r_aa(a, beta);
        if !(denom > 0.0) {
            return Err(Error::ConcavityViolation {
                effort: a,
                denominator: denom,
            });
        }
        Ok((f.r_a(a, beta) / denom, h * f.r_ab(a, beta) / denom))
    }

    /// `(∂R/∂h, ∂R/∂β)`. The productivity partial includes the direct term
    /// `r_β` besides the effort channel `r_a·∂a/∂β`.
    pub fn effective_effort_partials(&self, h: f64, beta: f64) -> Result<(f64, f64)> {
        if let Some(p) = self.closed() {
            return Ok((beta * beta / p.c, 2.0 * h * beta / p.c));
        }
        let a = self.effort(h, beta)?;
        let (da_dh, da_db) = self.effort_sensitivities(h, beta)?;
        let f = self.funcs();
        let ra = f.r_a(a, beta);
        Ok((ra * da_dh, ra * da_db + f.r_b(a, beta)))
    }

    /// Evaluator's payoff `V_E(h, β) = v_E(a(h, β), β)`.
    pub fn evaluator_value(&self, h: f64, beta: f64) -> Result<f64> {
        let a = self.effort(h, beta)?;
        Ok(self.funcs().v_e(a, beta))
    }

    /// Optimal assessment `h(β)`.
    pub fn assessment(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::invalid("beta", format!("assessment needs β > 0, got {beta}")));
        }
        self.assessment_weighted(&[beta], &[1.0])
    }

    /// Optimal common assessment for a population with weights `alphas`.
    pub fn assessment_multigroup(&self, betas: &[f64], alphas: &[f64]) -> Result<f64> {
        if betas.is_empty() || betas.len() != alphas.len() {
            return Err(Error::invalid("alpha", "need one weight per group"));
        }
        if alphas.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::invalid("alpha", "weights must be positive"));
        }
        let total: f64 = alphas.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("alpha", format!("weights must sum to 1, got {total}")));
        }
        if betas.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::invalid("beta", "all productivities must be > 0"));
        }
        self.assessment_weighted(betas, alphas)
    }

    /// Maximizer of `Σ w_j V_E(h, β_j) - κ(h)` for arbitrary nonnegative
    /// weights. Posterior expectations use this with quadrature weights.
    pub fn assessment_weighted(&self, betas: &[f64], weights: &[f64]) -> Result<f64> {
        if let Some(p) = self.closed() {
            let s: f64 = betas.iter().zip(weights).map(|(b, w)| w * b * b).sum();
            return Ok(p.assessment_of_square(s));
        }
        let f = self.funcs();
        let foc = |h: f64| -> Result<f64> {
            let mut total = -f.kappa_prime(h);
            for (&b, &w) in betas.iter().zip(weights) {
                if w == 0.0 || b == 0.0 {
                    continue;
                }
                let a = self.effort(h, b)?;
                let (da_dh, _) = self.effort_sensitivities(h, b)?;
                total += w * f.v_e_a(a, b) * da_dh;
            }
            Ok(total)
        };
        self.solve_assessment_foc(foc, betas.first().copied().unwrap_or(0.0))
    }

    /// `argmax_h v_E(a(h, y), x) - κ(h)`: the assessment of an evaluator who
    /// values outcomes at productivity `x` but predicts effort with `y`.
    pub fn assessment_with_beliefs(&self, x: f64, y: f64) -> Result<f64> {
        if let Some(p) = self.closed() {
            return Ok(p.lambda1() * x * y / (p.lambda2() * y * y + p.kappa * p.c));
        }
        let f = self.funcs();
        let foc = |h: f64| -> Result<f64> {
            let a = self.effort(h, y)?;
            let (da_dh, _) = self.effort_sensitivities(h, y)?;
            Ok(f.v_e_a(a, x) * da_dh - f.kappa_prime(h))
        };
        self.solve_assessment_foc(foc, x)
    }

    fn solve_assessment_foc<G>(&self, foc: G, beta_hint: f64) -> Result<f64>
    where
        G: Fn(f64) -> Result<f64>,
    {
        let cap = self.model.h_cap();
        let lo = H_FLOOR * cap;
        let g_lo = foc(lo)?;
        let g_hi = foc(cap)?;
        if !(g_lo > 0.0) {
            return Err(Error::NotInterior {
                beta: beta_hint,
                detail: format!("marginal value does not exceed marginal cost near h = 0 ({g_lo:e})"),
            });
        }
        if !(g_hi < 0.0) {
            return Err(Error::NotInterior {
                beta: beta_hint,
                detail: format!("marginal value still exceeds marginal cost at h = {cap} ({g_hi:e})"),
            });
        }
        // Single-peakedness: the first-order condition must change sign once.
        let probes = 8;
        let mut changes = 0;
        let mut prev = g_lo;
        for k in 1..=probes {
            let g = foc(lo + (cap - lo) * k as f64 / probes as f64)?;
            if g.signum() != prev.signum() {
                changes += 1;
            }
            prev = g;
        }
        if changes != 1 {
            return Err(Error::Precondition(format!(
                "evaluator objective is not single-peaked at β = {beta_hint}"
            )));
        }
        let mut failure = None;
        let root = solver::bisect(
            |h| match foc(h) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            cap,
            self.root_tol * 1e-3,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        root
    }

    /// `dh/dβ` of the single-group assessment.
    pub fn assessment_slope(&self, beta: f64) -> Result<f64> {
        if let Some(p) = self.closed() {
            let kc = p.kappa * p.c;
            let d = p.lambda2() * beta * beta + kc;
            return Ok(2.0 * p.lambda1() * kc * beta / (d * d));
        }
        let d = 1e-6 * beta;
        Ok((self.assessment(beta + d)? - self.assessment(beta - d)?) / (2.0 * d))
    }

    /// Gradient of `h(β⃗)` with respect to each group's belief.
    pub fn assessment_gradient(&self, betas: &[f64], alphas: &[f64]) -> Result<Vec<f64>> {
        if let Some(p) = self.closed() {
            let s: f64 = betas.iter().zip(alphas).map(|(b, w)| w * b * b).sum();
            let kc = p.kappa * p.c;
            let d = p.lambda2() * s + kc;
            let ds = p.lambda1() * kc / (d * d);
            return Ok(betas.iter().zip(alphas).map(|(b, w)| ds * 2.0 * w * b).collect());
        }
        let mut grad = Vec::with_capacity(betas.len());
        let mut probe = betas.to_vec();
        for j in 0..betas.len() {
            let d = 1e-6 * betas[j];
            probe[j] = betas[j] + d;
            let up = self.assessment_weighted(&probe, alphas)?;
            probe[j] = betas[j] - d;
            let dn = self.assessment_weighted(&probe, alphas)?;
            probe[j] = betas[j];
            grad.push((up - dn) / (2.0 * d));
        }
        Ok(grad)
    }
}

fn check_unit(name: &'static str, h: f64) -> Result<()> {
    if (0.0..=1.0).contains(&h) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("assessment must lie in [0, 1], got {h}")))
    }
}
