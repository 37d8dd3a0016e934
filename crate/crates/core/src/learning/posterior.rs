//! Bayes posterior under a uniform prior, normalized by brute-force
//! quadrature. Serves as the oracle for the closed-form recursion.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

use super::TransformedModel;

const NODES: usize = 32;
const MAX_PANELS: usize = 1 << 16;
const REL_TOL: f64 = 1e-13;

/// Log-likelihood of `history` at transformed productivity `x`, summed term
/// by term.
fn log_kernel(tm: &TransformedModel, history: &[(f64, f64)], mu_hat: f64, x: f64) -> f64 {
    history
        .iter()
        .map(|&(h, obs)| {
            let resid = obs - mu_hat - tm.g2(h) * x - tm.g3(h);
            -0.5 * h * resid * resid
        })
        .sum()
}

/// Mode and precision of the Gaussian kernel, from the batch formulas
/// `m = Σ hᵢg2ᵢ(Xᵢ - μ̂ - g3ᵢ) / Σ Iᵢ` and `precision = Σ Iᵢ`. `None` for an
/// empty history.
pub fn batch_mode(tm: &TransformedModel, history: &[(f64, f64)], mu_hat: f64) -> Option<(f64, f64)> {
    if history.is_empty() {
        return None;
    }
    let (num, den) = history.iter().fold((0.0, 0.0), |(num, den), &(h, obs)| {
        let g2 = tm.g2(h);
        (num + h * g2 * (obs - mu_hat - tm.g3(h)), den + tm.fisher_information(h))
    });
    Some((num / den, den))
}

/// Bayes posterior after `history = [(hᵢ, Xᵢ)]` from the uniform prior on
/// the transformed support, with its normalizer found by adaptive composite
/// Gauss–Legendre quadrature.
#[derive(Debug, Clone)]
pub struct ExactPosterior<'a> {
    tm: &'a TransformedModel,
    history: &'a [(f64, f64)],
    mu_hat: f64,
    /// Log-kernel at the support point nearest the mode; subtracted before
    /// exponentiating.
    reference: f64,
    z: f64,
}

impl<'a> ExactPosterior<'a> {
    pub fn new(tm: &'a TransformedModel, history: &'a [(f64, f64)], mu_hat: f64) -> Result<Self> {
        let sup = tm.support();
        if let Some(&(h, _)) = history.iter().find(|(h, _)| !(*h > 0.0 && *h < 1.0)) {
            return Err(Error::invalid("history", format!("assessment {h} outside (0, 1)")));
        }
        let Some((mode, _)) = batch_mode(tm, history, mu_hat) else {
            return Ok(Self {
                tm,
                history,
                mu_hat,
                reference: 0.0,
                z: sup.width(),
            });
        };
        let reference = log_kernel(tm, history, mu_hat, sup.clamp(mode));
        let kernel = |x: f64| (log_kernel(tm, history, mu_hat, x) - reference).exp();
        let rule = GaussLegendre::new(NODES);
        let mut panels = 8;
        let mut z = rule.integrate_composite(sup.lower, sup.upper, panels, kernel);
        loop {
            panels *= 2;
            let next = rule.integrate_composite(sup.lower, sup.upper, panels, kernel);
            let converged = (next - z).abs() <= REL_TOL * next;
            z = next;
            if converged {
                break;
            }
            if panels >= MAX_PANELS {
                return Err(Error::Quadrature("posterior normalizer did not settle".into()));
            }
        }
        Ok(Self {
            tm,
            history,
            mu_hat,
            reference,
            z,
        })
    }

    pub fn density(&self, point: f64) -> f64 {
        if !self.tm.support().contains(point) {
            return 0.0;
        }
        (log_kernel(self.tm, self.history, self.mu_hat, point) - self.reference).exp() / self.z
    }
}

/// Posterior density at a single `point`; see [`ExactPosterior`].
pub fn posterior_exact_density(
    tm: &TransformedModel,
    history: &[(f64, f64)],
    mu_hat: f64,
    point: f64,
) -> Result<f64> {
    Ok(ExactPosterior::new(tm, history, mu_hat)?.density(point))
}
