//! The belief map `ψ̃ = β̃ ∘ h`, its fixed points (Berk–Nash equilibria), and
//! their stability and self-confirming status.

use serde::{Deserialize, Serialize};

use crate::best_response::BestResponseEngine;
use crate::error::Result;
use crate::primitives::Support;
use crate::solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Interior,
    LowerCorner,
    UpperCorner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    /// Points in the sign scan of `ψ̃(β) - β`.
    pub grid: usize,
    /// Relative bracket width for bisection.
    pub xtol: f64,
    /// KL divergence at or below which an equilibrium counts as
    /// self-confirming.
    pub kl_zero_tol: f64,
    /// Roots closer than this are merged.
    pub dedup_tol: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            grid: 4096,
            xtol: 1e-15,
            kl_zero_tol: 1e-12,
            dedup_tol: 1e-9,
        }
    }
}

/// A Berk–Nash equilibrium of the single-agent model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub beta_hat: f64,
    pub h_hat: f64,
    pub stability: Stability,
    pub is_sce: bool,
    pub kl: f64,
    pub residual: f64,
    pub location: Location,
    /// `ψ̃'(β̂)`; absent at corners where the map is clamped.
    pub slope: Option<f64>,
}

impl EquilibriumPoint {
    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }
}

/// All equilibria of one scenario, in descending order of belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub points: Vec<EquilibriumPoint>,
    pub delta_mu: f64,
    pub warnings: Vec<String>,
}

impl EquilibriumSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn stable(&self) -> impl Iterator<Item = &EquilibriumPoint> {
        self.points.iter().filter(|p| p.is_stable())
    }

    /// `|β̂ - β*|` over stable equilibria.
    pub fn stable_distortions(&self, beta_star: f64) -> Vec<f64> {
        self.stable().map(|p| (p.beta_hat - beta_star).abs()).collect()
    }

    pub fn least_distorted_sce(&self, beta_star: f64) -> Option<&EquilibriumPoint> {
        self.points
            .iter()
            .filter(|p| p.is_sce)
            .min_by(|a, b| {
                (a.beta_hat - beta_star)
                    .abs()
                    .total_cmp(&(b.beta_hat - beta_star).abs())
            })
    }

    /// Structural properties every equilibrium set must have given the sign
    /// of the misspecification. Returns a description of each violation.
    pub fn invariant_violations(&self, beta_star: f64) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.delta_mu;
        if d < 0.0 {
            if self.points.len() != 1 {
                out.push(format!("expected a unique equilibrium, found {}", self.points.len()));
            }
            for p in &self.points {
                if !p.is_stable() {
                    out.push(format!("equilibrium at {} is not stable", p.beta_hat));
                }
                if p.beta_hat <= beta_star {
                    out.push(format!("belief {} is not above the truth {beta_star}", p.beta_hat));
                }
            }
        } else if d > 0.0 {
            if self.points.len() % 2 != 1 {
                out.push(format!("expected an odd number of equilibria, found {}", self.points.len()));
            }
            for (k, p) in self.points.iter().enumerate() {
                let want = if k % 2 == 0 { Stability::Stable } else { Stability::Unstable };
                if p.stability != want {
                    out.push(format!("stability does not alternate at {}", p.beta_hat));
                }
                if p.beta_hat >= beta_star {
                    out.push(format!("belief {} is not below the truth {beta_star}", p.beta_hat));
                }
            }
        }
        for p in &self.points {
            if p.location == Location::Interior && !p.is_sce {
                out.push(format!("interior equilibrium at {} is not self-confirming", p.beta_hat));
            }
        }
        out
    }
}

/// `(h/2)·(Δ + R(h, β) - R(h, β*))²`, the KL divergence between the
/// perceived and true outcome distributions (variances `1/h`).
pub fn kl_divergence(engine: &BestResponseEngine, h: f64, beta: f64) -> Result<f64> {
    let m = engine.model();
    kl_divergence_with(engine, m.delta_mu(), m.beta_star(), h, beta)
}

pub fn kl_divergence_with(
    engine: &BestResponseEngine,
    delta: f64,
    beta_star: f64,
    h: f64,
    beta: f64,
) -> Result<f64> {
    let gap = delta + engine.effective_effort(h, beta)? - engine.effective_effort(h, beta_star)?;
    Ok(0.5 * h * gap * gap)
}

/// Root `ψ ≥ 0` of `Δ + R(h, ψ) - R(h, β*) = 0`, ignoring the support.
/// `None` when the misspecification is too large for any productivity to
/// absorb it.
pub fn unconstrained_fit(
    engine: &BestResponseEngine,
    delta: f64,
    beta_star: f64,
    h: f64,
) -> Result<Option<f64>> {
    if delta == 0.0 {
        return Ok(Some(beta_star));
    }
    if let (Some(p), false) = (engine.model().lq(), engine.force_numeric) {
        let s = beta_star * beta_star - delta * p.c / h;
        return Ok(if s >= 0.0 { Some(s.sqrt()) } else { None });
    }
    let target = engine.effective_effort(h, beta_star)?;
    let mut failure = None;
    let mut rho = |b: f64| match engine.effective_effort(h, b) {
        Ok(r) => delta + r - target,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let at_zero = rho(0.0);
    if at_zero > 0.0 {
        return Ok(None);
    }
    if at_zero == 0.0 {
        return Ok(Some(0.0));
    }
    let hi = solver::expand_upper(&mut rho, 0.0, 2.0 * beta_star, 60)?;
    let root = solver::bisect(&mut rho, 0.0, hi, 1e-15)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(Some(root)),
    }
}

/// KL-minimizing belief on the support at assessment `h`.
pub fn kl_minimizer(engine: &BestResponseEngine, h: f64) -> Result<f64> {
    let m = engine.model();
    kl_minimizer_with(engine, m.delta_mu(), m.beta_star(), h)
}

/// KL-minimizing belief for misspecification `delta` and truth `beta_star`,
/// projected onto the model's support.
pub fn kl_minimizer_with(engine: &BestResponseEngine, delta: f64, beta_star: f64, h: f64) -> Result<f64> {
    let sup = engine.model().support();
    if delta == 0.0 {
        return Ok(sup.clamp(beta_star));
    }
    if let (Some(p), false) = (engine.model().lq(), engine.force_numeric) {
        let s = beta_star * beta_star - delta * p.c / h;
        let lo2 = sup.lower * sup.lower;
        return Ok(s.max(lo2).sqrt().min(sup.upper));
    }
    let target = engine.effective_effort(h, beta_star)?;
    let rho_lo = delta + engine.effective_effort(h, sup.lower)? - target;
    if rho_lo >= 0.0 {
        return Ok(sup.lower);
    }
    let rho_hi = delta + engine.effective_effort(h, sup.upper)? - target;
    if rho_hi <= 0.0 {
        return Ok(sup.upper);
    }
    let mut failure = None;
    let root = solver::bisect(
        |b| match engine.effective_effort(h, b) {
            Ok(r) => delta + r - target,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        sup.lower,
        sup.upper,
        1e-15,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

/// `ψ̃(β) = β̃(h(β))`.
pub fn psi_tilde(engine: &BestResponseEngine, beta: f64) -> Result<f64> {
    let h = engine.assessment(beta)?;
    kl_minimizer(engine, h)
}

/// Belief of a market with misspecification `delta_m` that observes the
/// evaluator's equilibrium assessment `h_e`.
pub fn market_belief(engine: &BestResponseEngine, h_e: f64, delta_m: f64) -> Result<f64> {
    kl_minimizer_with(engine, delta_m, engine.model().beta_star(), h_e)
}

/// `(β, ψ̃(β))` on `n` evenly spaced support points.
pub fn psi_curve(engine: &BestResponseEngine, n: usize) -> Result<Vec<(f64, f64)>> {
    let sup = engine.model().support();
    grid(sup, n.max(2))
        .into_iter()
        .map(|b| Ok((b, psi_tilde(engine, b)?)))
        .collect()
}

fn grid(sup: Support, n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n)
        .map(|i| sup.lower + sup.width() * i as f64 / (n - 1) as f64)
        .collect();
    xs[n - 1] = sup.upper;
    xs
}

/// A fixed point of a scalar self-map of the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub beta: f64,
    pub stability: Stability,
    pub location: Location,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixedPointScan {
    /// Descending order.
    pub points: Vec<FixedPoint>,
    pub warnings: Vec<String>,
}

/// All fixed points of `map` on the support: sign scan of `map(β) - β`,
/// bisection on each bracket, and stability from the crossing direction.
/// A corner counts as a fixed point when the map is clamped onto it.
pub fn scan_fixed_points<F>(map: F, sup: Support, opts: &EquilibriumOptions) -> Result<FixedPointScan>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = opts.grid.max(3);
    let xs = grid(sup, n);
    let g = |b: f64| -> Result<f64> { Ok(map(b)? - b) };
    let gs: Vec<f64> = xs.iter().map(|&b| g(b)).collect::<Result<_>>()?;
    let step = sup.width() / (n - 1) as f64;
    let eps = 1e-7 * sup.width();
    let mut roots: Vec<FixedPoint> = Vec::new();
    let mut warnings = Vec::new();

    let slope_at = |b: f64| -> Result<f64> {
        let d = 1e-6 * (1.0 + b.abs());
        let lo = (b - d).max(sup.lower);
        let hi = (b + d).min(sup.upper);
        Ok((map(hi)? - map(lo)?) / (hi - lo))
    };

    if gs[0] == 0.0 {
        let probe = g(sup.lower + eps)?;
        let probe = if probe == 0.0 { gs[1] } else { probe };
        roots.push(FixedPoint {
            beta: sup.lower,
            stability: if probe <= 0.0 { Stability::Stable } else { Stability::Unstable },
            location: Location::LowerCorner,
            slope: None,
        });
    }
    for i in 0..n - 1 {
        let (a, b) = (gs[i], gs[i + 1]);
        if i > 0 && a == 0.0 {
            let (left, right) = (gs[i - 1], b);
            let slope = slope_at(xs[i])?;
            let stability = if left > 0.0 && right < 0.0 {
                Stability::Stable
            } else if left < 0.0 && right > 0.0 {
                Stability::Unstable
            } else {
                warnings.push(format!("fixed point at {} touches the diagonal without crossing", xs[i]));
                if slope < 1.0 { Stability::Stable } else { Stability::Unstable }
            };
            roots.push(FixedPoint {
                beta: xs[i],
                stability,
                location: Location::Interior,
                slope: Some(slope),
            });
            continue;
        }
        if a * b < 0.0 {
            let mut failure = None;
            let root = solver::bisect(
                |x| match g(x) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                xs[i],
                xs[i + 1],
                opts.xtol,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            roots.push(FixedPoint {
                beta: root,
                stability: if a > 0.0 { Stability::Stable } else { Stability::Unstable },
                location: Location::Interior,
                slope: Some(slope_at(root)?),
            });
        }
    }
    if gs[n - 1] == 0.0 {
        let probe = g(sup.upper - eps)?;
        let probe = if probe == 0.0 { gs[n - 2] } else { probe };
        roots.push(FixedPoint {
            beta: sup.upper,
            stability: if probe >= 0.0 { Stability::Stable } else { Stability::Unstable },
            location: Location::UpperCorner,
            slope: None,
        });
    }

    roots.sort_by(|a, b| b.beta.total_cmp(&a.beta));
    roots.dedup_by(|later, earlier| (earlier.beta - later.beta).abs() <= opts.dedup_tol);
    for p in &roots {
        if let Some(s) = p.slope {
            if (s - 1.0).abs() < 1e-3 {
                warnings.push(format!(
                    "near-tangent crossing at {} (slope {s}); stability label is unreliable",
                    p.beta
                ));
            }
        }
    }
    for w in roots.windows(2) {
        if (w[0].beta - w[1].beta).abs() < 2.0 * step {
            warnings.push(format!(
                "fixed points {} and {} are closer than two grid steps; increase the grid",
                w[1].beta, w[0].beta
            ));
        }
    }
    Ok(FixedPointScan { points: roots, warnings })
}

pub fn find_equilibria(engine: &BestResponseEngine) -> Result<EquilibriumSet> {
    find_equilibria_with(engine, &EquilibriumOptions::default())
}

pub fn find_equilibria_with(engine: &BestResponseEngine, opts: &EquilibriumOptions) -> Result<EquilibriumSet> {
    let model = engine.model();
    let delta = model.delta_mu();
    let beta_star = model.beta_star();
    if delta == 0.0 {
        let h = engine.assessment(beta_star)?;
        return Ok(EquilibriumSet {
            points: vec![EquilibriumPoint {
                beta_hat: beta_star,
                h_hat: h,
                stability: Stability::Stable,
                is_sce: true,
                kl: 0.0,
                residual: 0.0,
                location: Location::Interior,
                slope: Some(0.0),
            }],
            delta_mu: 0.0,
            warnings: Vec::new(),
        });
    }
    let scan = scan_fixed_points(|b| psi_tilde(engine, b), model.support(), opts)?;
    let points = scan
        .points
        .iter()
        .map(|fp| {
            let h = engine.assessment(fp.beta)?;
            let kl = kl_divergence(engine, h, fp.beta)?;
            let residual = (psi_tilde(engine, fp.beta)? - fp.beta).abs();
            Ok(EquilibriumPoint {
                beta_hat: fp.beta,
                h_hat: h,
                stability: fp.stability,
                is_sce: kl <= opts.kl_zero_tol,
                kl,
                residual,
                location: fp.location,
                slope: fp.slope,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumSet {
        points,
        delta_mu: delta,
        warnings: scan.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{build_lq, LqParams, ModelPrimitives, Scenario};

    fn unit(delta: f64, lo: f64) -> ModelPrimitives {
        let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
        build_lq(p, Scenario::new(0.0, 2.0, delta, lo, 3.0)).unwrap()
    }

    #[test]
    fn kl_examples() {
        let e = BestResponseEngine::new(&unit(0.0, 0.5));
        assert_eq!(kl_divergence(&e, 0.5, 2.0).unwrap(), 0.0);
        assert!((kl_divergence(&e, 0.5, 1.0).unwrap() - 0.5625).abs() < 1e-15);
        let e = BestResponseEngine::new(&unit(0.1, 0.5));
        assert!((kl_divergence(&e, 0.5, 2.0).unwrap() - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn minimizer_examples() {
        let e = BestResponseEngine::new(&unit(-0.5, 0.5));
        let b = kl_minimizer(&e, 0.8).unwrap();
        assert!((b - 4.625f64.sqrt()).abs() < 1e-14);
        let e = BestResponseEngine::new(&unit(10.0, 0.5));
        assert_eq!(kl_minimizer(&e, 0.5).unwrap(), 0.5);
        let e = BestResponseEngine::new(&unit(0.0, 0.5));
        assert_eq!(kl_minimizer(&e, 0.3).unwrap(), 2.0);
    }

    #[test]
    fn numeric_minimizer_matches_closed_form() {
        for d in [-0.5, 0.5, 10.0] {
            let m = unit(d, 0.5);
            let c = BestResponseEngine::new(&m);
            let n = BestResponseEngine::numeric(&m);
            for h in [0.2, 0.5, 0.8] {
                let a = kl_minimizer(&c, h).unwrap();
                let b = kl_minimizer(&n, h).unwrap();
                assert!((a - b).abs() < 1e-9, "Δ={d} h={h}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn psi_examples() {
        let e = BestResponseEngine::new(&unit(-0.5, 0.5));
        assert!((psi_tilde(&e, 2.0).unwrap() - 4.625f64.sqrt()).abs() < 1e-14);
        let e = BestResponseEngine::new(&unit(0.5, 0.3));
        assert_eq!(psi_tilde(&e, 0.3).unwrap(), 0.3);
    }

    #[test]
    fn market_belief_examples() {
        let e = BestResponseEngine::new(&unit(-0.5, 0.5));
        assert!((market_belief(&e, 0.8, -0.5).unwrap() - 4.625f64.sqrt()).abs() < 1e-14);
        assert_eq!(market_belief(&e, 0.8, 0.0).unwrap(), 2.0);
        let h = 0.8;
        assert_eq!(market_belief(&e, h, -0.5).unwrap(), kl_minimizer(&e, h).unwrap());
    }

    #[test]
    fn zero_misspecification_is_trivial() {
        let e = BestResponseEngine::new(&unit(0.0, 0.5));
        let set = find_equilibria(&e).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.points[0].beta_hat, 2.0);
        assert!(set.points[0].is_sce && set.points[0].is_stable());
    }

    #[test]
    fn upper_corner_is_found() {
        // support too narrow to absorb a large negative misspecification
        let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
        let m = build_lq(p, Scenario::new(0.0, 2.0, -3.0, 0.5, 2.2)).unwrap();
        let set = find_equilibria(&BestResponseEngine::new(&m)).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.points[0].location, Location::UpperCorner);
        assert!(set.points[0].is_stable() && !set.points[0].is_sce);
    }
}
