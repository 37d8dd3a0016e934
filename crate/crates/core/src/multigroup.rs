//! Several groups with different misspecifications assessed at one common
//! intensity.
//!
//! Color-blind assessment pools the groups into one agent with the average
//! misspecification. Color-sighted assessment keeps per-group beliefs; the
//! joint belief map then has the rank-one Jacobian `g·∇hᵀ`, which drives
//! both the contraction argument and the comparative statics.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::Lever;
use crate::best_response::BestResponseEngine;
use crate::equilibrium::{find_equilibria, kl_divergence_with, kl_minimizer_with, EquilibriumSet};
use crate::error::{Error, Result};
use crate::learning::{
    simulate_groups, transform, GroupSpec, Learner, NoiseMode, Prior, SimConfig, Trajectory,
};
use crate::primitives::{ModelPrimitives, Support};

/// Groups sharing primitives and support. The model's own `μ̂` and `β*` are
/// ignored; each group carries its own.
#[derive(Debug, Clone)]
pub struct GroupPopulation {
    model: ModelPrimitives,
    groups: Vec<GroupSpec>,
    delta_bar: f64,
}

impl GroupPopulation {
    pub fn new(model: &ModelPrimitives, groups: Vec<GroupSpec>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("groups", "at least one group required"));
        }
        let sup = model.support();
        let mut total = 0.0;
        for g in &groups {
            if !(g.alpha > 0.0) {
                return Err(Error::invalid("alpha", format!("weights must be positive, got {}", g.alpha)));
            }
            if !(g.beta_star > sup.lower && g.beta_star < sup.upper) {
                return Err(Error::invalid(
                    "beta_star",
                    format!("{} not inside ({}, {})", g.beta_star, sup.lower, sup.upper),
                ));
            }
            if !g.delta.is_finite() {
                return Err(Error::invalid("delta", "must be finite"));
            }
            total += g.alpha;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("alpha", format!("weights sum to {total}, not 1")));
        }
        let delta_bar = groups.iter().map(|g| g.alpha * g.delta).sum();
        Ok(Self {
            model: model.clone(),
            groups,
            delta_bar,
        })
    }

    pub fn model(&self) -> &ModelPrimitives {
        &self.model
    }

    pub fn groups(&self) -> &[GroupSpec] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// `Δ̄ = Σ αⱼΔⱼ`.
    pub fn delta_bar(&self) -> f64 {
        self.delta_bar
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.alpha).collect()
    }

    pub fn beta_stars(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.beta_star).collect()
    }

    /// True when both over- and under-estimated groups are present.
    pub fn has_both_signs(&self) -> bool {
        self.groups.iter().any(|g| g.delta > 0.0) && self.groups.iter().any(|g| g.delta < 0.0)
    }

    /// Per-group interval of the domain `D`: `[β̲, βⱼ*]` when `Δⱼ > 0`,
    /// `[βⱼ*, β̄]` when `Δⱼ < 0`, and `{βⱼ*}` when `Δⱼ = 0`.
    pub fn domain(&self) -> Vec<Support> {
        let sup = self.model.support();
        self.groups
            .iter()
            .map(|g| {
                if g.delta > 0.0 {
                    Support::new(sup.lower, g.beta_star)
                } else if g.delta < 0.0 {
                    Support::new(g.beta_star, sup.upper)
                } else {
                    Support::new(g.beta_star, g.beta_star)
                }
            })
            .collect()
    }

    pub fn in_domain(&self, betas: &[f64]) -> bool {
        self.domain()
            .iter()
            .zip(betas)
            .all(|(d, &b)| b >= d.lower - 1e-12 && b <= d.upper + 1e-12)
    }

    fn engine(&self) -> BestResponseEngine {
        BestResponseEngine::new(&self.model)
    }
}

/// Equilibria when the evaluator cannot tell groups apart: the single-agent
/// problem with misspecification `Δ̄`.
pub fn color_blind_equilibria(pop: &GroupPopulation) -> Result<EquilibriumSet> {
    let beta_star = pop.groups[0].beta_star;
    if pop.groups.iter().any(|g| g.beta_star != beta_star) {
        return Err(Error::Precondition(
            "color-blind pooling needs a common true productivity".into(),
        ));
    }
    let model = pop.model.with_beta_star(beta_star)?.with_delta(pop.delta_bar);
    find_equilibria(&BestResponseEngine::new(&model))
}

/// Jacobian factors of `ψ⃗` at a belief vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianFactors {
    pub h: f64,
    pub psi: Vec<f64>,
    /// `gⱼ = ∂ψⱼ/∂h`; zero for groups pinned at a support bound.
    pub g: Vec<f64>,
    pub grad_h: Vec<f64>,
}

/// `ψ⃗(β⃗)`: each group's KL minimizer under the shared assessment `h(β⃗)`.
pub fn belief_map(pop: &GroupPopulation, betas: &[f64]) -> Result<(f64, Vec<f64>)> {
    let engine = pop.engine();
    let h = engine.assessment_multigroup(betas, &pop.alphas())?;
    let psi = pop
        .groups
        .iter()
        .map(|g| kl_minimizer_with(&engine, g.delta, g.beta_star, h))
        .collect::<Result<Vec<_>>>()?;
    Ok((h, psi))
}

pub fn jacobian_factors(pop: &GroupPopulation, betas: &[f64]) -> Result<JacobianFactors> {
    let engine = pop.engine();
    let sup = pop.model.support();
    let (h, psi) = belief_map(pop, betas)?;
    let g = pop
        .groups
        .iter()
        .zip(&psi)
        .map(|(grp, &p)| {
            if grp.delta == 0.0 || p <= sup.lower || p >= sup.upper {
                return Ok(0.0);
            }
            let (rh_star, _) = engine.effective_effort_partials(h, grp.beta_star)?;
            let (rh, rb) = engine.effective_effort_partials(h, p)?;
            Ok((rh_star - rh) / rb)
        })
        .collect::<Result<Vec<_>>>()?;
    let grad_h = engine.assessment_gradient(betas, &pop.alphas())?;
    Ok(JacobianFactors { h, psi, g, grad_h })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Points of `D` used to bound the contraction modulus: all vertices (up to
/// 2¹⁰ of them) plus `extra` seeded uniform samples.
fn domain_probes(pop: &GroupPopulation, extra: usize) -> Vec<Vec<f64>> {
    let dom = pop.domain();
    let j = dom.len();
    let mut out = Vec::new();
    if j <= 10 {
        for mask in 0..(1usize << j) {
            out.push(
                dom.iter()
                    .enumerate()
                    .map(|(i, d)| if mask >> i & 1 == 1 { d.upper } else { d.lower })
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..extra {
        out.push(dom.iter().map(|d| d.lower + d.width() * rng.random::<f64>()).collect());
    }
    out
}

/// Estimate of `sup_D ‖g‖₂ · sup_D ‖∇h‖₂`.
pub fn contraction_modulus(pop: &GroupPopulation) -> Result<f64> {
    let mut g_sup: f64 = 0.0;
    let mut h_sup: f64 = 0.0;
    for b in domain_probes(pop, 256) {
        let jf = jacobian_factors(pop, &b)?;
        g_sup = g_sup.max(norm(&jf.g));
        h_sup = h_sup.max(norm(&jf.grad_h));
    }
    Ok(g_sup * h_sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    RankOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    /// `(re, im)` pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    /// The one eigenvalue not equal to `-1`: `-1 + ∇hᵀg`.
    pub shifted: f64,
    /// `‖g‖₂‖∇h‖₂`.
    pub bound: f64,
    pub bauer_fike_holds: bool,
    pub all_negative_real: bool,
    pub method: EigenMethod,
}

/// Eigenvalues of `-I + g∇hᵀ`, checked against `|μ + 1| ≤ ‖g‖₂‖∇h‖₂`.
pub fn eigen_check(g: &[f64], grad_h: &[f64]) -> EigenReport {
    let j = g.len();
    let shifted = -1.0 + dot(grad_h, g);
    let bound = norm(g) * norm(grad_h);
    let (eigenvalues, method) = if j <= 32 {
        let m = -DMatrix::<f64>::identity(j, j) + DVector::from_column_slice(g) * DVector::from_column_slice(grad_h).transpose();
        let ev = m.complex_eigenvalues();
        (ev.iter().map(|z| (z.re, z.im)).collect(), EigenMethod::Dense)
    } else {
        let mut ev = vec![(-1.0, 0.0); j.saturating_sub(1)];
        ev.push((shifted, 0.0));
        (ev, EigenMethod::RankOne)
    };
    let slack = 1e-12 * (1.0 + bound);
    let bauer_fike_holds = eigenvalues
        .iter()
        .all(|&(re, im)| (re + 1.0).hypot(im) <= bound + slack);
    let all_negative_real = eigenvalues.iter().all(|&(re, _)| re < 0.0);
    EigenReport {
        eigenvalues,
        shifted,
        bound,
        bauer_fike_holds,
        all_negative_real,
        method,
    }
}

/// `(-I + uvᵀ)⁻¹ = -I - uvᵀ/(1 - vᵀu)`.
pub fn sherman_morrison_inverse(u: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    if u.len() != v.len() {
        return Err(Error::invalid("v", "u and v must have the same length"));
    }
    let denom = 1.0 - dot(v, u);
    if denom.abs() < 1e-14 {
        return Err(Error::Singular(format!("1 - vᵀu = {denom:e}")));
    }
    let n = u.len();
    let outer = DVector::from_column_slice(u) * DVector::from_column_slice(v).transpose();
    Ok(-DMatrix::<f64>::identity(n, n) - outer / denom)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight on the new iterate. `None` uses 1 when the contraction check
    /// passes and 0.5 otherwise.
    pub damping: Option<f64>,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultigroupEquilibrium {
    pub beta_hat: Vec<f64>,
    pub h_hat: f64,
    pub is_sce: Vec<bool>,
    pub g: Vec<f64>,
    pub grad_h: Vec<f64>,
    pub eigen: EigenReport,
    pub iterations: usize,
    /// `‖ψ⃗(β̂⃗) - β̂⃗‖∞`.
    pub residual: f64,
    pub modulus: f64,
    pub damping: f64,
    /// Every iterate stayed in `D`.
    pub confined: bool,
    pub warnings: Vec<String>,
}

impl MultigroupEquilibrium {
    /// `1 - ∇hᵀg`.
    pub fn feedback_denominator(&self) -> f64 {
        1.0 - dot(&self.grad_h, &self.g)
    }
}

pub fn color_sighted_equilibrium(pop: &GroupPopulation) -> Result<MultigroupEquilibrium> {
    color_sighted_equilibrium_with(pop, &ContractionOptions::default())
}

/// Fixed point of `ψ⃗` by plain iteration from `β⃗*`.
pub fn color_sighted_equilibrium_with(pop: &GroupPopulation, opts: &ContractionOptions) -> Result<MultigroupEquilibrium> {
    let mut warnings = Vec::new();
    for (j, g) in pop.groups.iter().enumerate() {
        if g.delta.abs() > 0.1 * g.beta_star {
            warnings.push(format!(
                "group {j}: |Δ| = {} exceeds 0.1·β*; uniqueness is not guaranteed",
                g.delta.abs()
            ));
        }
    }
    let modulus = contraction_modulus(pop)?;
    let damping = match opts.damping {
        Some(d) if d > 0.0 && d <= 1.0 => d,
        Some(d) => return Err(Error::invalid("damping", format!("must lie in (0, 1], got {d}"))),
        None if modulus < 1.0 => 1.0,
        None => {
            warnings.push(format!("contraction check failed (modulus {modulus:.4}); damping iteration by 0.5"));
            0.5
        }
    };

    let mut beta = pop.beta_stars();
    let mut confined = true;
    let mut iterations = 0;
    loop {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                what: "color-sighted fixed point",
                iterations,
            });
        }
        iterations += 1;
        let (_, psi) = belief_map(pop, &beta)?;
        let next: Vec<f64> = beta.iter().zip(&psi).map(|(b, p)| b + damping * (p - b)).collect();
        let step = beta.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        confined &= pop.in_domain(&beta);
        if step < opts.tol {
            break;
        }
    }

    let jf = jacobian_factors(pop, &beta)?;
    let residual = jf.psi.iter().zip(&beta).map(|(p, b)| (p - b).abs()).fold(0.0, f64::max);
    let engine = pop.engine();
    let is_sce = pop
        .groups
        .iter()
        .zip(&beta)
        .map(|(g, &b)| Ok(kl_divergence_with(&engine, g.delta, g.beta_star, jf.h, b)? <= 1e-12))
        .collect::<Result<Vec<_>>>()?;
    let eigen = eigen_check(&jf.g, &jf.grad_h);
    if !eigen.bauer_fike_holds {
        warnings.push("an eigenvalue violates the Bauer-Fike bound".into());
    }
    Ok(MultigroupEquilibrium {
        beta_hat: beta,
        h_hat: jf.h,
        is_sce,
        g: jf.g,
        grad_h: jf.grad_h,
        eigen,
        iterations,
        residual,
        modulus,
        damping,
        confined,
        warnings,
    })
}

/// Parameter whose effect on the color-sighted equilibrium is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SensitivityParameter {
    /// Misspecification of one group.
    Delta(usize),
    /// A payoff lever, oriented so that it raises the evaluator's assessment.
    Zeta(Lever),
}

/// Relative lever step of the difference quotient used for `∂ψ⃗/∂ζ`.
const ZETA_STEP: f64 = 1e-5;

/// `∂β̂⃗/∂ρ = -(-I + g∇hᵀ)⁻¹ ∂ψ⃗/∂ρ`, with the inverse from Sherman–Morrison.
///
/// For `ρ = Δⱼ` the direct effect is `-1/R_β(ĥ, β̂ⱼ)` on group `j` alone. For
/// a lever `ζ` it is `∂ψ⃗/∂ζ` at fixed beliefs, found by central differences;
/// this is `(∂h/∂ζ)·g` plus, for the effort cost, its effect on `R` at fixed
/// `h`.
pub fn sensitivity(pop: &GroupPopulation, eq: &MultigroupEquilibrium, parameter: SensitivityParameter) -> Result<Vec<f64>> {
    let j = pop.len();
    let direct = match parameter {
        SensitivityParameter::Delta(k) => {
            if k >= j {
                return Err(Error::invalid("group", format!("index {k} out of range for {j} groups")));
            }
            let sup = pop.model.support();
            let mut d = vec![0.0; j];
            let b = eq.beta_hat[k];
            if b > sup.lower && b < sup.upper {
                let (_, rb) = pop.engine().effective_effort_partials(eq.h_hat, b)?;
                d[k] = -1.0 / rb;
            }
            d
        }
        SensitivityParameter::Zeta(lever) => {
            let Some(p) = pop.model.lq() else {
                return Err(Error::Precondition("lever sensitivities need linear-quadratic primitives".into()));
            };
            let shifted = |step: f64| -> Result<(f64, Vec<f64>)> {
                let q = lever.apply(p, step);
                let model = pop.model.with_lq(q)?;
                let other = GroupPopulation::new(&model, pop.groups.clone())?;
                Ok((lever_value(lever, &q), belief_map(&other, &eq.beta_hat)?.1))
            };
            let (z_up, up) = shifted(ZETA_STEP)?;
            let (z_dn, dn) = shifted(-ZETA_STEP)?;
            up.iter().zip(&dn).map(|(a, b)| (a - b) / (z_up - z_dn)).collect()
        }
    };
    let inv = sherman_morrison_inverse(&eq.g, &eq.grad_h)?;
    let out = -(inv * DVector::from_vec(direct));
    Ok(out.iter().copied().collect())
}

/// `ζ` itself: the parameter, negated for costs.
fn lever_value(lever: Lever, p: &crate::LqParams) -> f64 {
    match lever {
        Lever::LambdaE => p.lambda_e,
        Lever::MarketPassthrough => p.delta,
        Lever::NegCost => -p.c,
        Lever::NegKappa => -p.kappa,
    }
}

/// Universal assessment floor `h̲̲`: the assessment an evaluator would pick
/// if only the under-estimated groups, held at their true productivity and
/// original weights, counted. `None` without such groups.
pub fn assessment_floor(pop: &GroupPopulation) -> Result<Option<f64>> {
    let (betas, weights): (Vec<f64>, Vec<f64>) = pop
        .groups
        .iter()
        .filter(|g| g.delta < 0.0)
        .map(|g| (g.beta_star, g.alpha))
        .unzip();
    if betas.is_empty() {
        return Ok(None);
    }
    Ok(Some(pop.engine().assessment_weighted(&betas, &weights)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultigroupRun {
    pub trajectory: Trajectory,
    /// `max_j |m̃ⱼ - g1(β̂ⱼ)|` at the horizon, when the color-sighted
    /// equilibrium is available.
    pub terminal_distance: Option<f64>,
}

/// Joint learning with a common assessment per period.
pub fn simulate_multigroup(
    pop: &GroupPopulation,
    priors: &[Prior],
    cfg: &SimConfig,
    target: Option<&MultigroupEquilibrium>,
) -> Result<MultigroupRun> {
    let learner = Learner::new(transform(&pop.model)?);
    let trajectory = simulate_groups(&learner, &pop.groups, priors, cfg)?;
    let terminal_distance = target.map(|eq| terminal_distance(&learner, &trajectory, eq));
    Ok(MultigroupRun {
        trajectory,
        terminal_distance,
    })
}

fn terminal_distance(learner: &Learner, t: &Trajectory, eq: &MultigroupEquilibrium) -> f64 {
    let tm = learner.transformed();
    let sup = tm.support();
    t.groups
        .iter()
        .zip(&eq.beta_hat)
        .map(|(g, &b)| (sup.clamp(g.terminal.m) - tm.g1(b)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultigroupMcReport {
    pub seed: u64,
    pub runs: usize,
    pub horizon: u64,
    pub radius: f64,
    pub beta_hat: Vec<f64>,
    pub within_radius: usize,
    pub distances: Vec<f64>,
}

/// Independent joint-learning runs scored by terminal distance to the
/// color-sighted equilibrium.
pub fn multigroup_convergence(
    pop: &GroupPopulation,
    priors: &[Prior],
    runs: usize,
    horizon: u64,
    seed: u64,
    radius: f64,
) -> Result<MultigroupMcReport> {
    use rayon::prelude::*;
    if runs == 0 {
        return Err(Error::invalid("runs", "must be at least 1"));
    }
    let eq = color_sighted_equilibrium(pop)?;
    let learner = Learner::new(transform(&pop.model)?);
    let mut cfg = SimConfig::new(horizon, seed);
    cfg.stride = 0;
    cfg.noise = NoiseMode::Gaussian;
    let distances = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut cfg = cfg.clone();
            cfg.run = run;
            let t = simulate_groups(&learner, &pop.groups, priors, &cfg)?;
            Ok(terminal_distance(&learner, &t, &eq))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MultigroupMcReport {
        seed,
        runs,
        horizon,
        radius,
        beta_hat: eq.beta_hat.clone(),
        within_radius: distances.iter().filter(|&&d| d <= radius).count(),
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{build_lq, LqParams, Scenario};

    fn model() -> ModelPrimitives {
        let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
        build_lq(p, Scenario::new(0.0, 2.0, 0.0, 0.5, 3.0)).unwrap()
    }

    fn pop(deltas: &[f64]) -> GroupPopulation {
        let a = 1.0 / deltas.len() as f64;
        let groups = deltas
            .iter()
            .map(|&d| GroupSpec {
                alpha: a,
                delta: d,
                beta_star: 2.0,
            })
            .collect();
        GroupPopulation::new(&model(), groups).unwrap()
    }

    #[test]
    fn delta_bar_and_pooling() {
        let p = pop(&[0.2, -0.1]);
        assert!((p.delta_bar() - 0.05).abs() < 1e-15);
        let s = color_blind_equilibria(&pop(&[0.3, -0.3])).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.points[0].beta_hat, 2.0);
    }

    #[test]
    fn zero_misspecification_is_immediate() {
        let eq = color_sighted_equilibrium(&pop(&[0.0, 0.0])).unwrap();
        assert_eq!(eq.beta_hat, vec![2.0, 2.0]);
        assert_eq!(eq.iterations, 1);
        assert!(eq.g.iter().all(|&g| g == 0.0));
        assert!(eq.eigen.eigenvalues.iter().all(|&(re, im)| (re + 1.0).abs() < 1e-15 && im == 0.0));
    }

    #[test]
    fn small_split_population() {
        let p = pop(&[0.05, -0.05]);
        let eq = color_sighted_equilibrium(&p).unwrap();
        assert!(eq.beta_hat[0] < 2.0 && eq.beta_hat[1] > 2.0);
        assert!(eq.residual < 1e-10);
        assert!(eq.confined);
        assert!(eq.modulus < 1.0);
        assert!(eq.h_hat > assessment_floor(&p).unwrap().unwrap());
        assert!(eq.eigen.all_negative_real && eq.eigen.bauer_fike_holds);
    }

    #[test]
    fn sherman_morrison_examples() {
        let inv = sherman_morrison_inverse(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(inv, -DMatrix::<f64>::identity(2, 2));
        let (u, v) = ([0.1, 0.0], [0.0, 0.2]);
        let inv = sherman_morrison_inverse(&u, &v).unwrap();
        let a = -DMatrix::<f64>::identity(2, 2) + DVector::from_column_slice(&u) * DVector::from_column_slice(&v).transpose();
        let prod = a * inv;
        assert!((prod - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-14);
        assert!(matches!(sherman_morrison_inverse(&[1.0], &[1.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn rank_one_spectral_norm() {
        let u = [0.3, -1.2, 0.5];
        let v = [2.0, 0.1, -0.7];
        let m = DVector::from_column_slice(&u) * DVector::from_column_slice(&v).transpose();
        assert!((spectral_norm(&m) - norm(&u) * norm(&v)).abs() < 1e-12);
    }

    #[test]
    fn large_population_uses_rank_one_spectrum() {
        let g = vec![0.01; 40];
        let gh = vec![0.02; 40];
        let r = eigen_check(&g, &gh);
        assert_eq!(r.method, EigenMethod::RankOne);
        assert!((r.shifted - (-1.0 + 40.0 * 0.0002)).abs() < 1e-15);
        assert!(r.bauer_fike_holds);
    }
}
