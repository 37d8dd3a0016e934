//! Model primitives: effort effect `r`, effort cost `c`, assessment cost `κ`,
//! evaluator value `v_E` and market value `v_M`, plus the truth and the
//! dogmatic misbelief about mean ability.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver;

const FD_STEP: f64 = 1e-5;
const FD_STEP_SECOND: f64 = 1e-4;

fn step(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Central difference of `f` at `x`.
pub(crate) fn central<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let d = step(x, FD_STEP);
    (f(x + d) - f(x - d)) / (2.0 * d)
}

fn central_second<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let d = step(x, FD_STEP_SECOND);
    (f(x + d) - 2.0 * f(x) + f(x - d)) / (d * d)
}

/// The five primitive functions and their partial derivatives.
///
/// Only the levels are required; the derivative methods default to central
/// differences with a relative step of `1e-5` (first order) and `1e-4`
/// (second order). Implementations with closed forms should override them.
/// Callables must be defined on a neighborhood of `a ≥ 0, β ≥ 0`, since the
/// difference stencils straddle zero.
pub trait PrimitiveFunctions: Send + Sync + fmt::Debug {
    fn r(&self, a: f64, beta: f64) -> f64;
    fn c(&self, a: f64) -> f64;
    fn kappa(&self, h: f64) -> f64;
    fn v_e(&self, a: f64, beta: f64) -> f64;
    fn v_m(&self, a: f64, beta: f64) -> f64;

    fn r_a(&self, a: f64, beta: f64) -> f64 {
        central(|x| self.r(x, beta), a)
    }
    fn r_b(&self, a: f64, beta: f64) -> f64 {
        central(|x| self.r(a, x), beta)
    }
    fn r_aa(&self, a: f64, beta: f64) -> f64 {
        central_second(|x| self.r(x, beta), a)
    }
    fn r_ab(&self, a: f64, beta: f64) -> f64 {
        central(|x| self.r_a(a, x), beta)
    }
    fn c_prime(&self, a: f64) -> f64 {
        central(|x| self.c(x), a)
    }
    fn c_second(&self, a: f64) -> f64 {
        central_second(|x| self.c(x), a)
    }
    fn kappa_prime(&self, h: f64) -> f64 {
        central(|x| self.kappa(x), h)
    }
    fn kappa_second(&self, h: f64) -> f64 {
        central_second(|x| self.kappa(x), h)
    }
    fn v_e_a(&self, a: f64, beta: f64) -> f64 {
        central(|x| self.v_e(x, beta), a)
    }
}

/// Parameters of the linear-quadratic specialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqParams {
    #[serde(rename = "effort_cost_scale")]
    pub c: f64,
    #[serde(rename = "assessment_cost_scale")]
    pub kappa: f64,
    #[serde(rename = "evaluator_effort_weight")]
    pub lambda_e: f64,
    #[serde(rename = "agent_weight")]
    pub lambda_a: f64,
    #[serde(rename = "market_passthrough")]
    pub delta: f64,
}

impl LqParams {
    pub fn new(c: f64, kappa: f64, lambda_e: f64, lambda_a: f64, delta: f64) -> Result<Self> {
        let p = Self {
            c,
            kappa,
            lambda_e,
            lambda_a,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Instance with the given `λ1, λ2` directly (`λ_E = λ1 - δλ_A` with `δ = 0`).
    pub fn from_lambdas(c: f64, kappa: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(c, kappa, lambda1, lambda2, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.c, self.kappa, self.lambda_e, self.lambda_a, self.delta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("lq", "all parameters must be finite"));
        }
        if self.c <= 0.0 {
            return Err(Error::invalid("effort_cost_scale", "c must be > 0"));
        }
        if self.kappa <= 0.0 {
            return Err(Error::invalid("assessment_cost_scale", "κ must be > 0"));
        }
        if self.lambda_e <= 0.0 {
            return Err(Error::invalid("evaluator_effort_weight", "λ_E must be > 0"));
        }
        if self.lambda_a < 0.0 {
            return Err(Error::invalid("agent_weight", "λ_A must be ≥ 0"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid("market_passthrough", "δ must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda_e + self.delta * self.lambda_a
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda_a
    }

    /// Closed-form optimal assessment `λ1 s / (λ2 s + κc)` where `s` is the
    /// (possibly averaged) squared productivity.
    pub fn assessment_of_square(&self, s: f64) -> f64 {
        let l1 = self.lambda1();
        l1 * s / (self.lambda2() * s + self.kappa * self.c)
    }

    /// Largest admissible assessment: `min{1, λ1/λ2}`.
    pub fn h_cap(&self) -> f64 {
        if self.lambda2() > 0.0 {
            (self.lambda1() / self.lambda2()).min(1.0)
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqPrimitives {
    pub params: LqParams,
}

impl PrimitiveFunctions for LqPrimitives {
    fn r(&self, a: f64, beta: f64) -> f64 {
        beta * a
    }
    fn c(&self, a: f64) -> f64 {
        0.5 * self.params.c * a * a
    }
    fn kappa(&self, h: f64) -> f64 {
        0.5 * self.params.kappa * h * h
    }
    fn v_e(&self, a: f64, beta: f64) -> f64 {
        self.params.lambda1() * self.r(a, beta) - self.params.lambda2() * self.c(a)
    }
    fn v_m(&self, a: f64, beta: f64) -> f64 {
        self.params.delta * self.r(a, beta)
    }
    fn r_a(&self, _a: f64, beta: f64) -> f64 {
        beta
    }
    fn r_b(&self, a: f64, _beta: f64) -> f64 {
        a
    }
    fn r_aa(&self, _a: f64, _beta: f64) -> f64 {
        0.0
    }
    fn r_ab(&self, _a: f64, _beta: f64) -> f64 {
        1.0
    }
    fn c_prime(&self, a: f64) -> f64 {
        self.params.c * a
    }
    fn c_second(&self, _a: f64) -> f64 {
        self.params.c
    }
    fn kappa_prime(&self, h: f64) -> f64 {
        self.params.kappa * h
    }
    fn kappa_second(&self, _h: f64) -> f64 {
        self.params.kappa
    }
    fn v_e_a(&self, a: f64, beta: f64) -> f64 {
        self.params.lambda1() * beta - self.params.lambda2() * self.params.c * a
    }
}

/// `r = βa`, `c(a) = scale·a^γ/γ`, quadratic `κ`, and the linear-quadratic
/// evaluator and market values built from `λ1, λ2, δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCostPrimitives {
    pub scale: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub delta: f64,
}

impl PowerCostPrimitives {
    pub fn new(scale: f64, gamma: f64, kappa: f64, lambda1: f64, lambda2: f64, delta: f64) -> Result<Self> {
        if scale <= 0.0 || gamma <= 1.0 || kappa <= 0.0 || lambda1 <= 0.0 || lambda2 < 0.0 {
            return Err(Error::invalid(
                "power_cost",
                "need scale > 0, γ > 1, κ > 0, λ1 > 0, λ2 ≥ 0",
            ));
        }
        Ok(Self {
            scale,
            gamma,
            kappa,
            lambda1,
            lambda2,
            delta,
        })
    }
}

impl PrimitiveFunctions for PowerCostPrimitives {
    fn r(&self, a: f64, beta: f64) -> f64 {
        beta * a
    }
    fn c(&self, a: f64) -> f64 {
        self.scale * a.abs().powf(self.gamma) / self.gamma
    }
    fn kappa(&self, h: f64) -> f64 {
        0.5 * self.kappa * h * h
    }
    fn v_e(&self, a: f64, beta: f64) -> f64 {
        self.lambda1 * self.r(a, beta) - self.lambda2 * self.c(a)
    }
    fn v_m(&self, a: f64, beta: f64) -> f64 {
        self.delta * self.r(a, beta)
    }
    fn r_a(&self, _a: f64, beta: f64) -> f64 {
        beta
    }
    fn r_b(&self, a: f64, _beta: f64) -> f64 {
        a
    }
    fn r_aa(&self, _a: f64, _beta: f64) -> f64 {
        0.0
    }
    fn r_ab(&self, _a: f64, _beta: f64) -> f64 {
        1.0
    }
    fn c_prime(&self, a: f64) -> f64 {
        self.scale * a.signum() * a.abs().powf(self.gamma - 1.0)
    }
    fn c_second(&self, a: f64) -> f64 {
        self.scale * (self.gamma - 1.0) * a.abs().powf(self.gamma - 2.0)
    }
    fn kappa_prime(&self, h: f64) -> f64 {
        self.kappa * h
    }
    fn kappa_second(&self, _h: f64) -> f64 {
        self.kappa
    }
    fn v_e_a(&self, a: f64, beta: f64) -> f64 {
        self.lambda1 * beta - self.lambda2 * self.c_prime(a)
    }
}

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied smooth callables; every derivative is taken numerically.
#[derive(Clone)]
pub struct CallablePrimitives {
    r: Fn2,
    c: Fn1,
    kappa: Fn1,
    v_e: Fn2,
    v_m: Fn2,
}

impl CallablePrimitives {
    pub fn new<R, C, K, E, M>(r: R, c: C, kappa: K, v_e: E, v_m: M) -> Self
    where
        R: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        C: Fn(f64) -> f64 + Send + Sync + 'static,
        K: Fn(f64) -> f64 + Send + Sync + 'static,
        E: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        M: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            r: Arc::new(r),
            c: Arc::new(c),
            kappa: Arc::new(kappa),
            v_e: Arc::new(v_e),
            v_m: Arc::new(v_m),
        }
    }
}

impl fmt::Debug for CallablePrimitives {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CallablePrimitives { .. }")
    }
}

impl PrimitiveFunctions for CallablePrimitives {
    fn r(&self, a: f64, beta: f64) -> f64 {
        (self.r)(a, beta)
    }
    fn c(&self, a: f64) -> f64 {
        (self.c)(a)
    }
    fn kappa(&self, h: f64) -> f64 {
        (self.kappa)(h)
    }
    fn v_e(&self, a: f64, beta: f64) -> f64 {
        (self.v_e)(a, beta)
    }
    fn v_m(&self, a: f64, beta: f64) -> f64 {
        (self.v_m)(a, beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Truth, misbelief and belief support of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mu_star: f64,
    pub beta_star: f64,
    pub mu_hat: f64,
    pub support: Support,
}

impl Scenario {
    pub fn new(mu_star: f64, beta_star: f64, mu_hat: f64, lower: f64, upper: f64) -> Self {
        Self {
            mu_star,
            beta_star,
            mu_hat,
            support: Support::new(lower, upper),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Support { lower, upper } = self.support;
        if !self.mu_star.is_finite() || !self.mu_hat.is_finite() {
            return Err(Error::invalid("mu_hat", "μ* and μ̂ must be finite"));
        }
        if !(lower > 0.0) {
            return Err(Error::invalid(
                "lower",
                format!("support lower bound must be > 0 (got {lower}); β = 0 leaves ability and productivity unidentified"),
            ));
        }
        if !(upper.is_finite() && lower < upper) {
            return Err(Error::invalid("upper", "support upper bound must be finite and above the lower bound"));
        }
        if !(self.beta_star > lower && self.beta_star < upper) {
            return Err(Error::invalid(
                "beta_star",
                format!("β* = {} must lie strictly inside ({lower}, {upper})", self.beta_star),
            ));
        }
        Ok(())
    }
}

/// Primitive functions together with one scenario. Cheap to clone.
#[derive(Clone)]
pub struct ModelPrimitives {
    funcs: Arc<dyn PrimitiveFunctions>,
    lq: Option<LqParams>,
    scenario: Scenario,
    effort_cap: f64,
}

impl fmt::Debug for ModelPrimitives {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelPrimitives")
            .field("funcs", &self.funcs)
            .field("lq", &self.lq)
            .field("scenario", &self.scenario)
            .field("effort_cap", &self.effort_cap)
            .finish()
    }
}

/// Builds the linear-quadratic model.
pub fn build_lq(params: LqParams, scenario: Scenario) -> Result<ModelPrimitives> {
    params.validate()?;
    scenario.validate()?;
    // The outcome noise variance 1/h - 1 must stay nonnegative on the support.
    let h_top = params.assessment_of_square(scenario.support.upper.powi(2));
    if h_top >= 1.0 {
        return Err(Error::invalid(
            "lq",
            format!(
                "optimal assessment at the upper support bound is {h_top:.6} ≥ 1; \
                 raise κ or c, or lower λ1 relative to λ2"
            ),
        ));
    }
    let effort_cap = 2.0 * scenario.support.upper / params.c;
    Ok(ModelPrimitives {
        funcs: Arc::new(LqPrimitives { params }),
        lq: Some(params),
        scenario,
        effort_cap,
    })
}

impl ModelPrimitives {
    /// General primitives. The effort bracket `[0, a_max]` is found by
    /// doubling until `r_a(a, β̄) - c'(a) < 0`.
    pub fn general(funcs: Arc<dyn PrimitiveFunctions>, scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let upper = scenario.support.upper;
        let f = |a: f64| funcs.r_a(a, upper) - funcs.c_prime(a);
        let effort_cap = solver::expand_upper(f, 0.0, 1.0, 80)
            .map_err(|_| Error::invalid("c", "marginal cost never overtakes marginal return"))?;
        Ok(Self {
            funcs,
            lq: None,
            scenario,
            effort_cap,
        })
    }

    pub fn funcs(&self) -> &dyn PrimitiveFunctions {
        self.funcs.as_ref()
    }

    pub fn lq(&self) -> Option<&LqParams> {
        self.lq.as_ref()
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn mu_star(&self) -> f64 {
        self.scenario.mu_star
    }

    pub fn beta_star(&self) -> f64 {
        self.scenario.beta_star
    }

    pub fn mu_hat(&self) -> f64 {
        self.scenario.mu_hat
    }

    /// `Δμ = μ̂ - μ*`; negative when society underestimates ability.
    pub fn delta_mu(&self) -> f64 {
        self.scenario.mu_hat - self.scenario.mu_star
    }

    pub fn support(&self) -> Support {
        self.scenario.support
    }

    pub fn effort_cap(&self) -> f64 {
        self.effort_cap
    }

    /// Upper end of the admissible assessment range.
    pub fn h_cap(&self) -> f64 {
        self.lq.map_or(1.0, |p| p.h_cap())
    }

    /// Same model with misspecification `Δμ = delta`.
    pub fn with_delta(&self, delta: f64) -> Self {
        let mut m = self.clone();
        m.scenario.mu_hat = m.scenario.mu_star + delta;
        m
    }

    pub fn with_beta_star(&self, beta_star: f64) -> Result<Self> {
        let mut scenario = self.scenario;
        scenario.beta_star = beta_star;
        self.with_scenario(scenario)
    }

    pub fn with_scenario(&self, scenario: Scenario) -> Result<Self> {
        match self.lq {
            Some(p) => build_lq(p, scenario),
            None => {
                scenario.validate()?;
                let mut m = self.clone();
                m.scenario = scenario;
                Ok(m)
            }
        }
    }

    /// Rebuilds a linear-quadratic model with new parameters.
    pub fn with_lq(&self, params: LqParams) -> Result<Self> {
        build_lq(params, self.scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Scenario {
        Scenario::new(0.0, 2.0, -0.5, 0.5, 3.0)
    }

    #[test]
    fn lambdas_from_weights() {
        let p = LqParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.lambda1(), 1.0);
        assert_eq!(p.lambda2(), 1.0);
        let p = LqParams::new(1.0, 1.0, 0.5, 2.0, 0.25).unwrap();
        assert_eq!(p.lambda1(), 1.0);
        let m = build_lq(LqParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap(), base()).unwrap();
        assert_eq!(m.delta_mu(), -0.5);
        assert_eq!(m.with_delta(0.0).delta_mu(), 0.0);
    }

    #[test]
    fn rejects_bad_support() {
        let p = LqParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let err = build_lq(p, Scenario::new(0.0, 2.0, 0.1, 0.0, 3.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "lower", .. }));
        let err = build_lq(p, Scenario::new(0.0, 3.5, 0.1, 0.5, 3.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "beta_star", .. }));
        assert!(LqParams::new(1.0, 1.0, 1.0, 1.0, 1.5).is_err());
        assert!(LqParams::new(0.0, 1.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn rejects_assessment_reaching_one() {
        let p = LqParams::new(1.0, 0.01, 1.0, 0.0, 0.0).unwrap();
        assert!(build_lq(p, base()).is_err());
    }

    #[test]
    fn lq_boundary_values_vanish() {
        let f = LqPrimitives {
            params: LqParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap(),
        };
        for x in [0.0, 0.3, 1.0, 7.0] {
            assert_eq!(f.r(0.0, x), 0.0);
            assert_eq!(f.r(x, 0.0), 0.0);
        }
    }

    #[test]
    fn finite_difference_defaults_match_closed_forms() {
        let lq = LqPrimitives {
            params: LqParams::new(1.3, 0.7, 1.1, 0.4, 0.5).unwrap(),
        };
        let p = lq.params;
        let cb = CallablePrimitives::new(
            |a, b| b * a,
            move |a| 0.5 * p.c * a * a,
            move |h| 0.5 * p.kappa * h * h,
            move |a, b| p.lambda1() * b * a - p.lambda2() * 0.5 * p.c * a * a,
            move |a, b| p.delta * b * a,
        );
        for &(a, b) in &[(0.3, 1.2), (2.0, 0.5), (0.0, 2.5)] {
            assert!((cb.r_a(a, b) - lq.r_a(a, b)).abs() < 1e-8);
            assert!((cb.r_b(a, b) - lq.r_b(a, b)).abs() < 1e-8);
            assert!((cb.r_ab(a, b) - lq.r_ab(a, b)).abs() < 1e-6);
            assert!((cb.c_prime(a) - lq.c_prime(a)).abs() < 1e-8);
            assert!((cb.c_second(a) - lq.c_second(a)).abs() < 1e-5);
            assert!((cb.v_e_a(a, b) - lq.v_e_a(a, b)).abs() < 1e-8);
        }
    }

    #[test]
    fn power_cost_derivatives() {
        let pc = PowerCostPrimitives::new(1.0, 4.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        for a in [0.2, 1.0, 1.7] {
            let fd = central(|x| pc.c(x), a);
            assert!((pc.c_prime(a) - fd).abs() < 1e-8);
            let fd2 = central(|x| pc.c_prime(x), a);
            assert!((pc.c_second(a) - fd2).abs() < 1e-7);
        }
    }

    #[test]
    fn general_model_finds_effort_cap() {
        let pc = PowerCostPrimitives::new(1.0, 4.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let m = ModelPrimitives::general(Arc::new(pc), base()).unwrap();
        // β̄ = 3 so a³ = 3 at the crossing; the cap sits past it
        assert!(m.effort_cap() >= 3f64.cbrt());
        assert!(m.lq().is_none());
    }
}
