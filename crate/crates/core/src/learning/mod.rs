//! Misspecified Bayesian learning about effort productivity.
//!
//! All learning happens in transformed coordinates `β̆ = g1(β)`, where the
//! likelihood of an outcome is Gaussian in `β̆` and a uniform or
//! truncated-normal prior stays truncated-normal after every update.

mod monte_carlo;
mod ode;
mod posterior;
mod simulate;
mod transform;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::truncnorm::TruncatedNormal;

pub use monte_carlo::{monte_carlo_convergence, CheckpointCounts, McConfig, McReport, SteadyStateSummary};
pub use ode::{LimitingOde, PhaseField, PhasePoint, SteadyState, SteadyStateKind};
pub use posterior::{batch_mode, posterior_exact_density, ExactPosterior};
pub use simulate::{simulate, simulate_groups, xi_update, GroupSpec, GroupTrajectory, Sample, SimConfig, Trajectory};
pub use transform::{transform, transform_custom, TransformedModel};

/// Prior over transformed productivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Uniform,
    /// `N(mean, sd²)` truncated to the transformed support.
    TruncatedNormal { mean: f64, sd: f64 },
}

impl Prior {
    fn initial_state(&self, support_mid: f64) -> Result<LearningState> {
        match *self {
            Prior::Uniform => Ok(LearningState {
                n: 0,
                m: support_mid,
                xi: 0.0,
                precision: 0.0,
            }),
            Prior::TruncatedNormal { mean, sd } => {
                if !(sd > 0.0 && sd.is_finite()) || !mean.is_finite() {
                    return Err(Error::invalid("prior", format!("needs finite mean and sd > 0, got ({mean}, {sd})")));
                }
                Ok(LearningState {
                    n: 0,
                    m: mean,
                    xi: 0.0,
                    precision: 1.0 / (sd * sd),
                })
            }
        }
    }
}

/// Outcome noise used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Gaussian,
    /// Outcomes equal their mean.
    Zero,
    /// Standard normal draws clipped to `±scale·√ln(n + 2)`.
    Clipped { scale: f64 },
}

impl NoiseMode {
    pub(crate) fn shape(&self, z: f64, n: u64) -> f64 {
        match *self {
            NoiseMode::Gaussian => z,
            NoiseMode::Zero => 0.0,
            NoiseMode::Clipped { scale } => {
                let bound = scale * ((n as f64 + 2.0).ln()).sqrt();
                z.clamp(-bound, bound)
            }
        }
    }
}

/// Posterior summary after `n` outcomes: `N(m, 1/precision)` truncated to
/// the transformed support, with `precision = n·ξ` plus any prior precision.
/// Zero precision is the flat posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningState {
    pub n: u64,
    pub m: f64,
    pub xi: f64,
    pub precision: f64,
}

impl LearningState {
    pub fn variance(&self) -> f64 {
        1.0 / self.precision
    }

    pub fn is_flat(&self) -> bool {
        self.precision == 0.0
    }
}

const BASE_NODES: usize = 64;
const MAX_NODES: usize = 4096;
const RICHARDSON_TOL: f64 = 1e-8;
/// Half-width of the quadrature window in posterior standard deviations.
const WINDOW_SDS: f64 = 12.0;

fn gauss_legendre(order: usize) -> &'static GaussLegendre {
    static RULES: [OnceLock<GaussLegendre>; 7] = [const { OnceLock::new() }; 7];
    let slot = (order / BASE_NODES).trailing_zeros() as usize;
    RULES[slot].get_or_init(|| GaussLegendre::new(order))
}

/// Transformed model plus the evaluator's posterior-expectation rule.
#[derive(Debug, Clone)]
pub struct Learner {
    tm: TransformedModel,
    /// Use Gauss–Legendre quadrature even where a closed form exists.
    pub quadrature: bool,
}

impl Learner {
    pub fn new(tm: TransformedModel) -> Self {
        Self { tm, quadrature: false }
    }

    pub fn from_model(model: &crate::ModelPrimitives) -> Result<Self> {
        Ok(Self::new(transform(model)?))
    }

    pub fn transformed(&self) -> &TransformedModel {
        &self.tm
    }

    /// Single-group evaluator step.
    pub fn evaluator_step(&self, state: &LearningState) -> Result<f64> {
        self.evaluator_step_groups(std::slice::from_ref(state), &[1.0])
    }

    /// Shared assessment maximizing `Σ αⱼ E[V_E(h, g1⁻¹(β̆ⱼ))] - κ(h)` under
    /// independent truncated-normal posteriors.
    pub fn evaluator_step_groups(&self, states: &[LearningState], alphas: &[f64]) -> Result<f64> {
        let sup = self.tm.support();
        if let (Some(p), true, false) = (self.tm.model().lq(), self.tm.is_closed_form(), self.quadrature) {
            let e: f64 = states
                .iter()
                .zip(alphas)
                .map(|(s, a)| a * posterior(s, sup).map_or(0.5 * (sup.lower + sup.upper), |t| t.mean()))
                .sum();
            return Ok(p.assessment_of_square(e));
        }
        let mut order = BASE_NODES;
        let mut prev = self.quadrature_step(states, alphas, order)?;
        while order < MAX_NODES {
            order *= 2;
            let next = self.quadrature_step(states, alphas, order)?;
            if (next - prev).abs() <= RICHARDSON_TOL {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::Quadrature(format!(
            "posterior expectation unresolved at {MAX_NODES} nodes"
        )))
    }

    fn quadrature_step(&self, states: &[LearningState], alphas: &[f64], order: usize) -> Result<f64> {
        let rule = gauss_legendre(order);
        let sup = self.tm.support();
        let mut betas = Vec::with_capacity(order * states.len());
        let mut weights = Vec::with_capacity(order * states.len());
        for (s, &alpha) in states.iter().zip(alphas) {
            let tn = posterior(s, sup);
            let (lo, hi) = match tn {
                Some(t) => window(&t),
                None => (sup.lower, sup.upper),
            };
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let start = weights.len();
            // Kernel relative to its peak on the window, so far-off modes do not underflow.
            let log_kernel = |x: f64| {
                tn.map_or(0.0, |t| {
                    let peak = t.location.clamp(lo, hi);
                    ((peak - t.location).powi(2) - (x - t.location).powi(2)) / (2.0 * t.scale * t.scale)
                })
            };
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                let node = mid + half * x;
                let dens = log_kernel(node).exp();
                betas.push(self.tm.g1_inv(node));
                weights.push(w * dens);
            }
            let total: f64 = weights[start..].iter().sum();
            if !(total > 0.0) {
                return Err(Error::Quadrature("posterior weights vanished on window".into()));
            }
            for w in &mut weights[start..] {
                *w *= alpha / total;
            }
        }
        self.tm.engine().assessment_weighted(&betas, &weights)
    }
}

fn posterior(s: &LearningState, sup: crate::Support) -> Option<TruncatedNormal> {
    if s.is_flat() {
        None
    } else {
        Some(TruncatedNormal::new(s.m, s.variance().sqrt(), sup.lower, sup.upper))
    }
}

/// Interval carrying all but a negligible share of the truncated mass.
fn window(t: &TruncatedNormal) -> (f64, f64) {
    let sd = t.scale;
    let var = sd * sd;
    if t.location < t.lower {
        let decay = var / (t.lower - t.location);
        (t.lower, t.upper.min(t.lower + (40.0 * decay).min(WINDOW_SDS * sd)))
    } else if t.location > t.upper {
        let decay = var / (t.location - t.upper);
        (t.lower.max(t.upper - (40.0 * decay).min(WINDOW_SDS * sd)), t.upper)
    } else {
        (
            t.lower.max(t.location - WINDOW_SDS * sd),
            t.upper.min(t.location + WINDOW_SDS * sd),
        )
    }
}
