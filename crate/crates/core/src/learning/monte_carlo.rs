//! Where independent learning paths end up.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{simulate, Learner, LimitingOde, NoiseMode, Prior, SimConfig, SteadyState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub runs: usize,
    pub horizon: u64,
    pub seed: u64,
    pub prior: Prior,
    pub noise: NoiseMode,
    /// Classification radius in transformed units.
    pub radius: f64,
    /// Extra periods at which runs are classified; the horizon is always
    /// included.
    pub checkpoints: Vec<u64>,
}

impl McConfig {
    pub fn new(runs: usize, horizon: u64, seed: u64) -> Self {
        Self {
            runs,
            horizon,
            seed,
            prior: Prior::Uniform,
            noise: NoiseMode::Gaussian,
            radius: 0.05,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSummary {
    #[serde(flatten)]
    pub state: SteadyState,
    /// `m̂` projected onto the transformed support; runs are classified
    /// against this.
    pub m_projected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointCounts {
    pub n: u64,
    /// Runs classified to each steady state, in the order of
    /// `McReport::steady_states`.
    pub counts: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub unclassified: usize,
    pub saddle_hits: usize,
    pub sink_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub seed: u64,
    pub runs: usize,
    pub horizon: u64,
    pub radius: f64,
    pub prior: Prior,
    pub steady_states: Vec<SteadyStateSummary>,
    pub checkpoints: Vec<CheckpointCounts>,
    /// Posterior mode of every run at the horizon, by run index.
    pub terminal_m: Vec<f64>,
}

impl McReport {
    /// Classification at the horizon.
    pub fn terminal(&self) -> &CheckpointCounts {
        self.checkpoints.last().expect("horizon checkpoint always present")
    }
}

/// Index of the steady state whose projected mode lies nearest to the
/// projected `m`, if within `radius`.
pub(crate) fn classify(m_projected: f64, states: &[SteadyStateSummary], radius: f64) -> Option<usize> {
    states
        .iter()
        .enumerate()
        .map(|(i, s)| (i, (s.m_projected - m_projected).abs()))
        .filter(|&(_, d)| d <= radius)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Runs `cfg.runs` independent paths in parallel (run `k` uses stream `k`
/// of `cfg.seed`) and tabulates their classification at each checkpoint.
pub fn monte_carlo_convergence(learner: &Learner, cfg: &McConfig) -> Result<McReport> {
    if cfg.runs == 0 {
        return Err(Error::invalid("runs", "must be at least 1"));
    }
    if !(cfg.radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    let sup = learner.transformed().support();
    let states: Vec<SteadyStateSummary> = LimitingOde::new(learner)
        .steady_states()?
        .into_iter()
        .map(|s| SteadyStateSummary {
            state: s,
            m_projected: sup.clamp(s.m_hat),
        })
        .collect();

    let mut checkpoints: Vec<u64> = cfg
        .checkpoints
        .iter()
        .copied()
        .filter(|&n| n >= 1 && n < cfg.horizon)
        .collect();
    checkpoints.push(cfg.horizon);
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let mut sim = SimConfig::new(cfg.horizon, cfg.seed);
    sim.noise = cfg.noise;
    sim.stride = 0;
    sim.checkpoints = checkpoints.clone();

    let modes: Vec<Vec<f64>> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut sim = sim.clone();
            sim.run = run;
            let t = simulate(learner, cfg.prior, &sim)?;
            Ok(t.groups[0].checkpoints.iter().map(|(_, s)| s.m).collect())
        })
        .collect::<Result<_>>()?;

    let table = checkpoints
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut counts = vec![0usize; states.len()];
            let mut unclassified = 0;
            for run in &modes {
                match classify(sup.clamp(run[k]), &states, cfg.radius) {
                    Some(i) => counts[i] += 1,
                    None => unclassified += 1,
                }
            }
            let saddle_hits = counts.iter().zip(&states).filter(|(_, s)| !s.state.is_sink()).map(|(c, _)| c).sum();
            let sinks: usize = counts.iter().zip(&states).filter(|(_, s)| s.state.is_sink()).map(|(c, _)| c).sum();
            CheckpointCounts {
                n,
                frequencies: counts.iter().map(|&c| c as f64 / cfg.runs as f64).collect(),
                counts,
                unclassified,
                saddle_hits,
                sink_share: sinks as f64 / cfg.runs as f64,
            }
        })
        .collect();

    Ok(McReport {
        seed: cfg.seed,
        runs: cfg.runs,
        horizon: cfg.horizon,
        radius: cfg.radius,
        prior: cfg.prior,
        steady_states: states,
        checkpoints: table,
        terminal_m: modes.iter().map(|r| *r.last().expect("horizon recorded")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{build_lq, LqParams, Scenario};

    #[test]
    fn unique_sink_collects_every_run() {
        let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
        let m = build_lq(p, Scenario::new(0.0, 2.0, -0.5, 0.3, 3.0)).unwrap();
        let l = Learner::from_model(&m).unwrap();
        let mut cfg = McConfig::new(16, 20_000, 5);
        cfg.checkpoints = vec![1000];
        let r = monte_carlo_convergence(&l, &cfg).unwrap();
        assert_eq!(r.steady_states.len(), 1);
        assert_eq!(r.terminal().counts, vec![16]);
        assert_eq!(r.checkpoints.len(), 2);
    }
}
