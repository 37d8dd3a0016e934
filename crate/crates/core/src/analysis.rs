//! Comparative statics of stable equilibria, cross-group disparities, and the
//! comparison with first-order misspecification.

use serde::{Deserialize, Serialize};

use crate::best_response::BestResponseEngine;
use crate::equilibrium::{
    find_equilibria_with, scan_fixed_points, EquilibriumOptions, EquilibriumPoint, EquilibriumSet,
};
use crate::error::{Error, Result};
use crate::primitives::{LqParams, ModelPrimitives};
use crate::solver;

/// `A ≤ B` in the weak set order, for finite sets:
/// `min A ≤ min B` and `max A ≤ max B`.
pub fn weak_set_order_leq(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("weak_set_order_leq"));
    }
    let min = |s: &[f64]| s.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(min(a) <= min(b) && max(a) <= max(b))
}

/// Parameters that raise assessment pointwise when increased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lever {
    LambdaE,
    MarketPassthrough,
    NegCost,
    NegKappa,
}

impl Lever {
    pub const ALL: [Lever; 4] = [Lever::LambdaE, Lever::MarketPassthrough, Lever::NegCost, Lever::NegKappa];

    /// Moves the lever up by `step` times its magnitude (down if negative).
    /// The passthrough is shifted by at least `step·0.01` so that it moves off
    /// zero, and kept inside `[0, 1]`.
    pub fn apply(self, p: &LqParams, step: f64) -> LqParams {
        let mut q = *p;
        match self {
            Lever::LambdaE => q.lambda_e *= 1.0 + step,
            Lever::MarketPassthrough => q.delta = (q.delta + step * q.delta.max(0.01)).clamp(0.0, 1.0),
            Lever::NegCost => q.c *= 1.0 - step,
            Lever::NegKappa => q.kappa *= 1.0 - step,
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// Scales `Δμ` by `1 + step`.
    DeltaMu { step: f64 },
    /// Moves `ζ` by `step` in relative terms.
    Zeta { lever: Lever, step: f64 },
}

impl Perturbation {
    /// Whether distortions are predicted to grow after the change.
    pub fn expects_increase(&self) -> bool {
        match *self {
            Perturbation::DeltaMu { step } => step > 0.0,
            Perturbation::Zeta { step, .. } => step < 0.0,
        }
    }

    pub fn apply(&self, model: &ModelPrimitives) -> Result<ModelPrimitives> {
        match *self {
            Perturbation::DeltaMu { step } => Ok(model.with_delta(model.delta_mu() * (1.0 + step))),
            Perturbation::Zeta { lever, step } => {
                let p = model
                    .lq()
                    .ok_or_else(|| Error::Precondition("ζ perturbations need linear-quadratic parameters".into()))?;
                model.with_lq(lever.apply(p, step))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparativeStaticsResult {
    pub perturbation: Perturbation,
    /// `|β̂ - β*|` over stable equilibria before the change.
    pub baseline: Vec<f64>,
    pub perturbed: Vec<f64>,
    pub expected_increase: bool,
    /// `baseline ≤ perturbed` in the weak set order.
    pub weak_set_order_increase: bool,
    /// `perturbed ≤ baseline` in the weak set order.
    pub weak_set_order_decrease: bool,
}

impl ComparativeStaticsResult {
    /// The sets moved in the predicted direction.
    pub fn consistent(&self) -> bool {
        if self.expected_increase {
            self.weak_set_order_increase
        } else {
            self.weak_set_order_decrease
        }
    }
}

/// Stable-equilibrium distortion sets before and after a perturbation.
pub fn comparative_statics(model: &ModelPrimitives, perturbation: Perturbation) -> Result<ComparativeStaticsResult> {
    comparative_statics_with(model, perturbation, &EquilibriumOptions::default())
}

pub fn comparative_statics_with(
    model: &ModelPrimitives,
    perturbation: Perturbation,
    opts: &EquilibriumOptions,
) -> Result<ComparativeStaticsResult> {
    let moved = perturbation.apply(model)?;
    let before = BestResponseEngine::new(model);
    let after = BestResponseEngine::new(&moved);
    if let Perturbation::Zeta { step, .. } = perturbation {
        let sup = model.support();
        for k in 0..64 {
            let b = sup.lower + sup.width() * k as f64 / 63.0;
            let (h0, h1) = (before.assessment(b)?, after.assessment(b)?);
            let rises = if step >= 0.0 { h1 >= h0 } else { h1 <= h0 };
            if !rises {
                return Err(Error::Precondition(format!(
                    "assessment does not move with ζ at β = {b} ({h0} → {h1})"
                )));
            }
        }
    }
    let bs = model.beta_star();
    let baseline = find_equilibria_with(&before, opts)?.stable_distortions(bs);
    let perturbed = find_equilibria_with(&after, opts)?.stable_distortions(bs);
    Ok(ComparativeStaticsResult {
        perturbation,
        expected_increase: perturbation.expects_increase(),
        weak_set_order_increase: weak_set_order_leq(&baseline, &perturbed)?,
        weak_set_order_decrease: weak_set_order_leq(&perturbed, &baseline)?,
        baseline,
        perturbed,
    })
}

/// Named scalar inputs that sweeps can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    DeltaMu,
    LambdaE,
    AgentWeight,
    MarketPassthrough,
    EffortCost,
    AssessmentCost,
}

pub fn with_parameter(model: &ModelPrimitives, param: Parameter, value: f64) -> Result<ModelPrimitives> {
    if param == Parameter::DeltaMu {
        return Ok(model.with_delta(value));
    }
    let mut p = *model
        .lq()
        .ok_or_else(|| Error::Precondition("parameter sweeps need linear-quadratic parameters".into()))?;
    match param {
        Parameter::LambdaE => p.lambda_e = value,
        Parameter::AgentWeight => p.lambda_a = value,
        Parameter::MarketPassthrough => p.delta = value,
        Parameter::EffortCost => p.c = value,
        Parameter::AssessmentCost => p.kappa = value,
        Parameter::DeltaMu => unreachable!(),
    }
    model.with_lq(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub stable_count: usize,
    pub min_distortion: f64,
    pub max_distortion: f64,
}

/// Stable distortion range at each parameter value.
pub fn distortion_sweep(model: &ModelPrimitives, param: Parameter, values: &[f64]) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&v| {
            let m = with_parameter(model, param, v)?;
            let set = find_equilibria_with(&BestResponseEngine::new(&m), &EquilibriumOptions::default())?;
            let d = set.stable_distortions(m.beta_star());
            Ok(SweepRow {
                value: v,
                stable_count: d.len(),
                min_distortion: d.iter().copied().fold(f64::INFINITY, f64::min),
                max_distortion: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

/// Which self-confirming equilibrium to report when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceSelector {
    LeastDistorted,
    MostDistorted,
    /// Position in the descending equilibrium list.
    Index(usize),
}

impl SceSelector {
    pub fn select<'a>(&self, set: &'a EquilibriumSet, beta_star: f64) -> Result<&'a EquilibriumPoint> {
        let dist = |p: &EquilibriumPoint| (p.beta_hat - beta_star).abs();
        let pick = match *self {
            SceSelector::LeastDistorted => set.least_distorted_sce(beta_star),
            SceSelector::MostDistorted => set
                .points
                .iter()
                .filter(|p| p.is_sce)
                .max_by(|a, b| dist(a).total_cmp(&dist(b))),
            SceSelector::Index(k) => {
                let p = set.points.get(k).ok_or_else(|| {
                    Error::SelectorNotSce(format!("index {k} out of range ({} equilibria)", set.len()))
                })?;
                if !p.is_sce {
                    return Err(Error::SelectorNotSce(format!(
                        "equilibrium {k} at β̂ = {} has KL {:e}",
                        p.beta_hat, p.kl
                    )));
                }
                Some(p)
            }
        };
        pick.ok_or(Error::NoSce("disparity group"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub delta: f64,
    pub mu_hat: f64,
    pub beta_hat: f64,
    pub h_hat: f64,
    /// `a(h(β̂), β*)`
    pub true_effort: f64,
    /// `a(h(β̂), β̂)`
    pub perceived_effort: f64,
    /// `v_M(perceived effort, β̂)`
    pub market_value: f64,
    /// `μ̂ + v_M(perceived effort, β̂)`
    pub market_reward: f64,
    /// Market reward minus the cost of the true effort.
    pub welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub m: GroupOutcome,
    pub w: GroupOutcome,
    pub reward_gap: f64,
    /// `μ̂_m - μ̂_w`
    pub reward_gap_ability: f64,
    /// `v_M` bracket of the reward gap.
    pub reward_gap_market: f64,
    pub welfare_gap: f64,
    /// `β̂_w > β* > β̂_m`
    pub beliefs_ordered: bool,
    /// `h(β̂_w) > h(β̂_m)`
    pub assessments_ordered: bool,
    /// `a(h_w, β̂_w) > a(h_w, β*)`
    pub w_perceived_above_true: bool,
    /// `a(h_w, β*) > a(h_m, β*)`
    pub w_true_above_m_true: bool,
    /// `a(h_m, β*) > a(h_m, β̂_m)`
    pub m_true_above_perceived: bool,
    /// `v_M(â_m, β̂_m) - v_M(â_w, β̂_w) ≤ 0`
    pub market_bracket_nonpositive: bool,
    pub m_out_earns_w: bool,
    pub welfare_favors_m: bool,
}

impl DisparityReport {
    /// The six orderings that hold in every SCE pair.
    pub fn orderings(&self) -> [bool; 6] {
        [
            self.beliefs_ordered,
            self.assessments_ordered,
            self.w_perceived_above_true,
            self.w_true_above_m_true,
            self.m_true_above_perceived,
            self.market_bracket_nonpositive,
        ]
    }
}

fn group_outcome(model: &ModelPrimitives, selector: SceSelector) -> Result<GroupOutcome> {
    let engine = BestResponseEngine::new(model);
    let set = find_equilibria_with(&engine, &EquilibriumOptions::default())?;
    let bs = model.beta_star();
    let eq = selector.select(&set, bs)?;
    let f = model.funcs();
    let h = eq.h_hat;
    let true_effort = engine.effort(h, bs)?;
    let perceived_effort = engine.effort(h, eq.beta_hat)?;
    let market_value = f.v_m(perceived_effort, eq.beta_hat);
    let market_reward = model.mu_hat() + market_value;
    Ok(GroupOutcome {
        delta: model.delta_mu(),
        mu_hat: model.mu_hat(),
        beta_hat: eq.beta_hat,
        h_hat: h,
        true_effort,
        perceived_effort,
        market_value,
        market_reward,
        welfare: market_reward - f.c(true_effort),
    })
}

/// Disparities between a group `m` society overrates (`Δ_m > 0`) and a group
/// `w` it underrates (`Δ_w < 0`), otherwise identical to `template`.
pub fn disparity_report(
    template: &ModelPrimitives,
    delta_m: f64,
    delta_w: f64,
    selector: SceSelector,
) -> Result<DisparityReport> {
    if !(delta_m > 0.0 && delta_w < 0.0) {
        return Err(Error::invalid("delta_m", "need Δ_m > 0 > Δ_w"));
    }
    let m = group_outcome(&template.with_delta(delta_m), selector)?;
    let w = group_outcome(&template.with_delta(delta_w), selector)?;
    let bs = template.beta_star();
    let reward_gap_ability = m.mu_hat - w.mu_hat;
    let reward_gap_market = m.market_value - w.market_value;
    let reward_gap = m.market_reward - w.market_reward;
    let welfare_gap = m.welfare - w.welfare;
    Ok(DisparityReport {
        beliefs_ordered: w.beta_hat > bs && bs > m.beta_hat,
        assessments_ordered: w.h_hat > m.h_hat,
        w_perceived_above_true: w.perceived_effort > w.true_effort,
        w_true_above_m_true: w.true_effort > m.true_effort,
        m_true_above_perceived: m.true_effort > m.perceived_effort,
        market_bracket_nonpositive: reward_gap_market <= 0.0,
        m_out_earns_w: reward_gap > 0.0,
        welfare_favors_m: welfare_gap > 0.0,
        reward_gap,
        reward_gap_ability,
        reward_gap_market,
        welfare_gap,
        m,
        w,
    })
}

/// How the first-order variant picks its assessment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FomAssessment {
    /// `h(x, β*)`: outcomes valued at belief `x`, effort predicted at the
    /// truth.
    TruthEffort,
    /// The model's own `h(x)`, isolating the effort-inference channel.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomComparison {
    pub delta_mu: f64,
    pub beta_ours: f64,
    pub beta_fom: f64,
    pub gap_ours: f64,
    pub gap_fom: f64,
    pub ours_smaller: bool,
    pub warnings: Vec<String>,
}

/// Belief minimizing the KL divergence when society perceives effective
/// effort as `r(a(h, β*), β)`.
fn fom_minimizer(engine: &BestResponseEngine, h: f64) -> Result<f64> {
    let model = engine.model();
    let (bs, delta, sup) = (model.beta_star(), model.delta_mu(), model.support());
    let a_star = engine.effort(h, bs)?;
    if let (Some(p), false) = (model.lq(), engine.force_numeric) {
        return Ok(sup.clamp(bs - delta * p.c / (h * bs)));
    }
    let f = model.funcs();
    let target = f.r(a_star, bs) - delta;
    let rho = |b: f64| f.r(a_star, b) - target;
    if rho(sup.lower) >= 0.0 {
        return Ok(sup.lower);
    }
    if rho(sup.upper) <= 0.0 {
        return Ok(sup.upper);
    }
    solver::bisect(rho, sup.lower, sup.upper, 1e-15)
}

/// Least-distorted self-confirming equilibrium of the model and of its
/// first-order-misspecification variant.
pub fn first_order_comparison(model: &ModelPrimitives, mode: FomAssessment) -> Result<FomComparison> {
    let engine = BestResponseEngine::new(model);
    let bs = model.beta_star();
    let delta = model.delta_mu();
    let mut warnings = Vec::new();
    if delta.abs() > 0.1 * bs {
        warnings.push(format!("|Δμ| = {} exceeds 0.1·β*; the local comparison may not apply", delta.abs()));
    }
    if delta == 0.0 {
        return Ok(FomComparison {
            delta_mu: 0.0,
            beta_ours: bs,
            beta_fom: bs,
            gap_ours: 0.0,
            gap_fom: 0.0,
            ours_smaller: false,
            warnings,
        });
    }
    let opts = EquilibriumOptions::default();
    let ours = find_equilibria_with(&engine, &opts)?;
    let beta_ours = ours
        .least_distorted_sce(bs)
        .ok_or(Error::NoSce("baseline model"))?
        .beta_hat;

    let cap = model.h_cap();
    let fom_h = |x: f64| -> Result<f64> {
        let h = match mode {
            FomAssessment::TruthEffort => engine.assessment_with_beliefs(x, bs)?,
            FomAssessment::Frozen => engine.assessment(x)?,
        };
        // h(x, β*) can leave the unit interval far from the truth.
        Ok(h.min(cap))
    };
    let fom_kl = |x: f64| -> Result<f64> {
        let h = fom_h(x)?;
        let a_star = engine.effort(h, bs)?;
        let f = model.funcs();
        let gap = delta + f.r(a_star, x) - f.r(a_star, bs);
        Ok(0.5 * h * gap * gap)
    };
    let scan = scan_fixed_points(|x| fom_minimizer(&engine, fom_h(x)?), model.support(), &opts)?;
    warnings.extend(scan.warnings);
    let mut best: Option<f64> = None;
    for fp in &scan.points {
        if fom_kl(fp.beta)? <= opts.kl_zero_tol
            && best.is_none_or(|b| (fp.beta - bs).abs() < (b - bs).abs())
        {
            best = Some(fp.beta);
        }
    }
    let beta_fom = best.ok_or(Error::NoSce("first-order variant"))?;
    let gap_ours = (beta_ours - bs).abs();
    let gap_fom = (beta_fom - bs).abs();
    Ok(FomComparison {
        delta_mu: delta,
        beta_ours,
        beta_fom,
        gap_ours,
        gap_fom,
        ours_smaller: gap_ours < gap_fom,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDecomposition {
    /// `r(a(h, β), β) - r(a(h, β*), β)`: misperceived effort choice.
    pub term_i: f64,
    /// `r(a(h, β*), β) - r(a(h, β*), β*)`: misperceived productivity.
    pub term_ii: f64,
    /// `R(h, β) - R(h, β*)`
    pub total: f64,
}

pub fn gap_decomposition(engine: &BestResponseEngine, h: f64, beta: f64) -> Result<GapDecomposition> {
    let bs = engine.model().beta_star();
    let f = engine.model().funcs();
    let a = engine.effort(h, beta)?;
    let a_star = engine.effort(h, bs)?;
    let r_own = f.r(a, beta);
    let r_cross = f.r(a_star, beta);
    let r_true = f.r(a_star, bs);
    Ok(GapDecomposition {
        term_i: r_own - r_cross,
        term_ii: r_cross - r_true,
        total: r_own - r_true,
    })
}
