//! The stochastic learning recursion, for one or several groups sharing a
//! single assessment per period.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::DrawStream;

use super::{Learner, LearningState, NoiseMode, Prior};

/// `ξₙ = ξₙ₋₁ + (Iₙ - ξₙ₋₁)/n`.
pub fn xi_update(xi_prev: f64, info: f64, n: u64) -> f64 {
    xi_prev + (info - xi_prev) / n as f64
}

/// One group's weight, misspecification `μ̂ⱼ - μ*` and true productivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub alpha: f64,
    pub delta: f64,
    pub beta_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: u64,
    pub seed: u64,
    pub run: u64,
    pub noise: NoiseMode,
    /// Record every `stride`-th period (plus the first and last); 0 records
    /// nothing.
    pub stride: u64,
    /// Periods at which full states are kept.
    pub checkpoints: Vec<u64>,
}

impl SimConfig {
    pub fn new(horizon: u64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            run: 0,
            noise: NoiseMode::Gaussian,
            stride: 1000,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub n: u64,
    pub m: f64,
    pub xi: f64,
    pub h: f64,
    #[serde(rename = "X")]
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTrajectory {
    pub samples: Vec<Sample>,
    pub terminal: LearningState,
    /// States at the requested checkpoints, in the order requested.
    pub checkpoints: Vec<(u64, LearningState)>,
    /// Range of `ξₙ` over `n ≥ 1`.
    pub xi_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub run: u64,
    pub horizon: u64,
    pub groups: Vec<GroupTrajectory>,
    /// Range of the shared assessment over all periods.
    pub h_range: (f64, f64),
}

impl Trajectory {
    /// Samples of the first group.
    pub fn samples(&self) -> &[Sample] {
        &self.groups[0].samples
    }

    pub fn terminal(&self) -> &LearningState {
        &self.groups[0].terminal
    }
}

/// Single-agent recursion: the multi-group core with one group of weight 1.
pub fn simulate(learner: &Learner, prior: Prior, cfg: &SimConfig) -> Result<Trajectory> {
    let model = learner.transformed().model();
    let group = GroupSpec {
        alpha: 1.0,
        delta: model.delta_mu(),
        beta_star: model.beta_star(),
    };
    simulate_groups(learner, &[group], &[prior], cfg)
}

/// Each period: the evaluator picks `h` against the current posteriors,
/// every group draws `X ~ N(μ* + R(h, βⱼ*), 1/h)`, and each posterior is
/// updated in closed form.
pub fn simulate_groups(
    learner: &Learner,
    groups: &[GroupSpec],
    priors: &[Prior],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    validate(learner, groups, priors, cfg)?;
    let tm = learner.transformed();
    let engine = tm.engine();
    let mu_star = tm.model().mu_star();
    let sup = tm.support();
    let alphas: Vec<f64> = groups.iter().map(|g| g.alpha).collect();

    let mut states = priors
        .iter()
        .map(|p| p.initial_state(0.5 * (sup.lower + sup.upper)))
        .collect::<Result<Vec<_>>>()?;
    let prior_precision: Vec<f64> = states.iter().map(|s| s.precision).collect();
    let mut out: Vec<GroupTrajectory> = groups
        .iter()
        .map(|_| GroupTrajectory {
            samples: Vec::new(),
            terminal: states[0],
            checkpoints: Vec::new(),
            xi_range: (f64::INFINITY, f64::NEG_INFINITY),
        })
        .collect();
    let mut h_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut stream = DrawStream::new(cfg.seed, cfg.run, groups.len());

    for n in 1..=cfg.horizon {
        let h = learner.evaluator_step_groups(&states, &alphas)?;
        h_range = (h_range.0.min(h), h_range.1.max(h));
        let info = tm.fisher_information(h);
        let (g2, g3) = (tm.g2(h), tm.g3(h));
        let sd = h.sqrt().recip();
        let record = cfg.stride > 0 && (n == 1 || n % cfg.stride == 0 || n == cfg.horizon);
        for (j, g) in groups.iter().enumerate() {
            let z = stream.standard_normal(n, j);
            let x = mu_star + engine.effective_effort(h, g.beta_star)? + sd * cfg.noise.shape(z, n);
            let y = (x - mu_star - g.delta - g3) / g2;
            let s = states[j];
            let precision = s.precision + info;
            let m = if s.is_flat() { y } else { s.m + info * (y - s.m) / precision };
            let xi = xi_update(s.xi, info, n);
            states[j] = LearningState {
                n,
                m,
                xi,
                precision: prior_precision[j] + n as f64 * xi,
            };
            let gt = &mut out[j];
            gt.xi_range = (gt.xi_range.0.min(xi), gt.xi_range.1.max(xi));
            if record {
                gt.samples.push(Sample { n, m, xi, h, x });
            }
            if cfg.checkpoints.contains(&n) {
                gt.checkpoints.push((n, states[j]));
            }
        }
    }
    for (gt, s) in out.iter_mut().zip(&states) {
        gt.terminal = *s;
    }
    Ok(Trajectory {
        seed: cfg.seed,
        run: cfg.run,
        horizon: cfg.horizon,
        groups: out,
        h_range,
    })
}

fn validate(learner: &Learner, groups: &[GroupSpec], priors: &[Prior], cfg: &SimConfig) -> Result<()> {
    if cfg.horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    if groups.is_empty() {
        return Err(Error::invalid("groups", "at least one group required"));
    }
    if groups.len() != priors.len() {
        return Err(Error::invalid("priors", "one prior per group required"));
    }
    let sup = learner.transformed().model().support();
    let mut total = 0.0;
    for g in groups {
        if !(g.alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("weights must be positive, got {}", g.alpha)));
        }
        if !sup.contains(g.beta_star) {
            return Err(Error::invalid("beta_star", format!("{} outside the support", g.beta_star)));
        }
        if !g.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        total += g.alpha;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("alpha", format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::batch_mode;
    use crate::primitives::{build_lq, LqParams, Scenario};

    fn learner(delta: f64) -> Learner {
        let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
        Learner::from_model(&build_lq(p, Scenario::new(0.0, 2.0, delta, 0.3, 3.0)).unwrap()).unwrap()
    }

    #[test]
    fn xi_recursion_example() {
        assert!((xi_update(2.0, 3.0, 10) - 2.1).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_at_truth_is_stationary() {
        let l = learner(0.0);
        let mut cfg = SimConfig::new(500, 1);
        cfg.noise = NoiseMode::Zero;
        cfg.stride = 1;
        let t = simulate(&l, Prior::Uniform, &cfg).unwrap();
        for s in t.samples() {
            assert!((s.m - 4.0).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn incremental_matches_batch() {
        let l = learner(0.5);
        let mut cfg = SimConfig::new(400, 9);
        cfg.stride = 1;
        let t = simulate(&l, Prior::Uniform, &cfg).unwrap();
        let mut hist = Vec::new();
        for s in t.samples() {
            hist.push((s.h, s.x));
            let (m, p) = batch_mode(l.transformed(), &hist, 0.5).unwrap();
            assert!((m - s.m).abs() < 1e-10 * m.abs().max(1.0), "n={} {m} {}", s.n, s.m);
            assert!((p - s.n as f64 * s.xi).abs() < 1e-10 * p);
        }
    }

    #[test]
    fn rejects_zero_horizon() {
        let l = learner(0.5);
        assert!(simulate(&l, Prior::Uniform, &SimConfig::new(0, 1)).is_err());
    }

    #[test]
    fn ranges_respect_bounds() {
        let l = learner(0.5);
        let t = simulate(&l, Prior::Uniform, &SimConfig::new(2000, 3)).unwrap();
        let e = l.transformed().engine();
        let (hl, hh) = (e.assessment(0.3).unwrap(), e.assessment(3.0).unwrap());
        assert!(t.h_range.0 >= hl && t.h_range.1 <= hh);
        let tm = l.transformed();
        let xr = t.groups[0].xi_range;
        assert!(xr.0 >= tm.fisher_information(hl) * (1.0 - 1e-12));
        assert!(xr.1 <= tm.fisher_information(hh) * (1.0 + 1e-12));
    }
}
