//! Mean-field ODE for the state `θ = (m, ξ)` and its steady states.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{find_equilibria, EquilibriumSet, Location};
use crate::error::Result;

use super::Learner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteadyStateKind {
    Sink,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub m_hat: f64,
    pub xi_hat: f64,
    /// Belief `g1⁻¹(m̃)` at the projected mode.
    pub beta_hat: f64,
    pub kind: SteadyStateKind,
    /// `(ψ'(m̂) - 1, -1)`.
    pub eigenvalues: [f64; 2],
    pub corner: bool,
}

impl SteadyState {
    pub fn is_sink(&self) -> bool {
        self.kind == SteadyStateKind::Sink
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub m: f64,
    pub xi: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseField {
    pub n_m: usize,
    pub n_xi: usize,
    /// Row-major in `m`, then `ξ`.
    pub points: Vec<PhasePoint>,
    /// `ξ = (I∘h)(m̃)` at each `m` of the grid.
    pub nullcline: Vec<(f64, f64)>,
    pub steady_states: Vec<SteadyState>,
}

#[derive(Debug, Clone)]
pub struct LimitingOde {
    learner: Learner,
    delta: f64,
    beta_star: f64,
}

impl LimitingOde {
    pub fn new(learner: &Learner) -> Self {
        let model = learner.transformed().model();
        Self {
            learner: learner.clone(),
            delta: model.delta_mu(),
            beta_star: model.beta_star(),
        }
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    fn project(&self, m: f64) -> f64 {
        self.learner.transformed().support().clamp(m)
    }

    /// Assessment at the projected degenerate belief.
    pub fn assessment(&self, m: f64) -> Result<f64> {
        self.learner.transformed().assessment_at(m)
    }

    /// `(I∘h)(m̃)`.
    pub fn information(&self, m: f64) -> Result<f64> {
        Ok(self.learner.transformed().fisher_information(self.assessment(m)?))
    }

    /// `ψ(m̃)`, the unconstrained transformed KL root at the projected belief.
    pub fn psi(&self, m: f64) -> Result<f64> {
        let h = self.assessment(m)?;
        Ok(self.learner.transformed().psi(h, self.delta, self.beta_star))
    }

    pub fn field(&self, m: f64, xi: f64) -> Result<[f64; 2]> {
        let info = self.information(m)?;
        Ok([info * (self.psi(m)? - m) / xi, info - xi])
    }

    /// Steady states, one per equilibrium of the underlying game.
    pub fn steady_states(&self) -> Result<Vec<SteadyState>> {
        let set = find_equilibria(self.learner.transformed().engine())?;
        self.steady_states_of(&set)
    }

    pub fn steady_states_of(&self, set: &EquilibriumSet) -> Result<Vec<SteadyState>> {
        let tm = self.learner.transformed();
        set.points
            .iter()
            .map(|p| {
                let (m_hat, slope, corner) = match p.location {
                    Location::Interior => {
                        let m = tm.g1(p.beta_hat);
                        (m, self.psi_slope(m)?, false)
                    }
                    // Past the boundary the projection freezes ψ, so its slope is zero.
                    Location::LowerCorner => (self.psi(tm.support().lower)?, 0.0, true),
                    Location::UpperCorner => (self.psi(tm.support().upper)?, 0.0, true),
                };
                let eig = slope - 1.0;
                Ok(SteadyState {
                    m_hat,
                    xi_hat: self.information(m_hat)?,
                    beta_hat: tm.g1_inv(self.project(m_hat)),
                    kind: if eig < 0.0 {
                        SteadyStateKind::Sink
                    } else {
                        SteadyStateKind::Saddle
                    },
                    eigenvalues: [eig, -1.0],
                    corner,
                })
            })
            .collect()
    }

    fn psi_slope(&self, m: f64) -> Result<f64> {
        let sup = self.learner.transformed().support();
        let step = 1e-5 * m.abs().max(1.0);
        let lo = (m - step).max(sup.lower);
        let hi = (m + step).min(sup.upper);
        Ok((self.psi(hi)? - self.psi(lo)?) / (hi - lo))
    }

    /// `F` on an `n_m × n_ξ` grid spanning the given rectangle.
    pub fn phase_field(&self, m_range: (f64, f64), xi_range: (f64, f64), n_m: usize, n_xi: usize) -> Result<PhaseField> {
        let n_m = n_m.max(2);
        let n_xi = n_xi.max(2);
        let lin = |(a, b): (f64, f64), n: usize, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
        let mut points = Vec::with_capacity(n_m * n_xi);
        let mut nullcline = Vec::with_capacity(n_m);
        for i in 0..n_m {
            let m = lin(m_range, n_m, i);
            nullcline.push((m, self.information(m)?));
            for k in 0..n_xi {
                let xi = lin(xi_range, n_xi, k);
                let [f1, f2] = self.field(m, xi)?;
                points.push(PhasePoint { m, xi, f1, f2 });
            }
        }
        Ok(PhaseField {
            n_m,
            n_xi,
            points,
            nullcline,
            steady_states: self.steady_states()?,
        })
    }

    /// Rectangle covering the transformed support, every steady state, and
    /// the attainable range of `ξ`, with a 10% margin.
    pub fn default_window(&self) -> Result<((f64, f64), (f64, f64))> {
        let tm = self.learner.transformed();
        let sup = tm.support();
        let (mut lo, mut hi) = (sup.lower, sup.upper);
        for s in self.steady_states()? {
            lo = lo.min(s.m_hat);
            hi = hi.max(s.m_hat);
        }
        let pad = 0.1 * (hi - lo);
        let i_lo = self.information(sup.lower)?;
        let i_hi = self.information(sup.upper)?;
        let xpad = 0.1 * (i_hi - i_lo);
        Ok(((lo - pad, hi + pad), ((i_lo - xpad).max(0.5 * i_lo), i_hi + xpad)))
    }

    /// Explicit Euler from `(m0, ξ0)` to time `t_end`, with step
    /// `min(dt_max, 0.1/‖F‖)`. Returns `(t, m, ξ)` after every step.
    pub fn integrate(&self, m0: f64, xi0: f64, t_end: f64, dt_max: f64) -> Result<Vec<(f64, f64, f64)>> {
        let mut path = vec![(0.0, m0, xi0)];
        let (mut t, mut m, mut xi) = (0.0, m0, xi0);
        while t < t_end {
            let f = self.field(m, xi)?;
            let norm = f[0].hypot(f[1]);
            let mut dt = dt_max.min(t_end - t);
            if norm > 0.0 {
                dt = dt.min(0.1 / norm);
            }
            m += dt * f[0];
            xi += dt * f[1];
            t += dt;
            path.push((t, m, xi));
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{build_lq, LqParams, Scenario};

    fn ode(delta: f64) -> LimitingOde {
        let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
        let m = build_lq(p, Scenario::new(0.0, 2.0, delta, 0.3, 3.0)).unwrap();
        LimitingOde::new(&Learner::from_model(&m).unwrap())
    }

    #[test]
    fn three_steady_states() {
        let o = ode(0.5);
        let ss = o.steady_states().unwrap();
        assert_eq!(ss.len(), 3);
        let hi = (3.5 + 10.25f64.sqrt()) / 2.0;
        let mid = (3.5 - 10.25f64.sqrt()) / 2.0;
        assert!((ss[0].m_hat - hi).abs() < 1e-9);
        assert!((ss[1].m_hat - mid).abs() < 1e-9);
        let kinds: Vec<_> = ss.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, [SteadyStateKind::Sink, SteadyStateKind::Saddle, SteadyStateKind::Sink]);
        assert!(ss[2].corner && ss[2].m_hat < 0.09);
        // corner: ψ(0.09) = 4 - 0.5·(0.09 + 1)/0.09
        assert!((ss[2].m_hat - (4.0 - 0.5 * 1.09 / 0.09)).abs() < 1e-12);
        for s in &ss {
            let f = o.field(s.m_hat, s.xi_hat).unwrap();
            assert!(f[0].hypot(f[1]) < 1e-8, "{s:?} {f:?}");
        }
    }

    #[test]
    fn xi_relaxes_to_nullcline() {
        let o = ode(-0.5);
        let m = 3.0;
        let target = o.information(m).unwrap();
        let path = o.integrate(m, 5.0 * target, 40.0, 0.05).unwrap();
        let &(_, mt, xt) = path.last().unwrap();
        assert!((xt - o.information(mt).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn saddle_separates_phase_plane() {
        let o = ode(0.5);
        let saddle = (3.5 - 10.25f64.sqrt()) / 2.0;
        for xi in [0.01, 0.1, 0.5] {
            assert!(o.field(saddle - 1e-3, xi).unwrap()[0] < 0.0);
            assert!(o.field(saddle + 1e-3, xi).unwrap()[0] > 0.0);
        }
    }
}
