//! Grid verification of the regularity conditions the equilibrium and
//! learning results rely on. Passing certifies the grid only.

use serde::{Deserialize, Serialize};

use crate::best_response::BestResponseEngine;
use crate::primitives::ModelPrimitives;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_h: usize,
    pub n_beta: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_h: 64, n_beta: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// First offending grid point, as `(first coordinate, second coordinate)`
    /// in the check's own variables.
    pub first_violation: Option<(f64, f64)>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub grid: GridSpec,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Recorder {
    name: &'static str,
    violation: Option<(f64, f64)>,
    detail: Option<String>,
}

impl Recorder {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            violation: None,
            detail: None,
        }
    }

    fn require(&mut self, ok: bool, at: (f64, f64)) {
        if !ok && self.violation.is_none() {
            self.violation = Some(at);
        }
    }

    fn error(&mut self, at: (f64, f64), e: impl ToString) {
        if self.violation.is_none() {
            self.violation = Some(at);
            self.detail = Some(e.to_string());
        }
    }

    fn finish(self) -> AssumptionCheck {
        AssumptionCheck {
            name: self.name.to_string(),
            passed: self.violation.is_none(),
            first_violation: self.violation,
            detail: self.detail,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(3);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Checks, on an `n_h × n_β` grid over `[0, 1] × [β̲, β̄]`:
/// `r` and `a` vanish on the axes, `a` and `R` strictly increase in each
/// argument, `R` has strictly increasing differences, `h(β)` is strictly
/// increasing with values in `(0, 1)`, and `c`, `κ` are strictly increasing
/// and strictly convex.
pub fn check_assumptions(model: &ModelPrimitives, grid: GridSpec) -> AssumptionReport {
    let engine = BestResponseEngine::new(model);
    let f = model.funcs();
    let sup = model.support();
    let hs = linspace(0.0, 1.0, grid.n_h);
    let bs = linspace(sup.lower, sup.upper, grid.n_beta);
    let as_ = linspace(0.0, model.effort_cap(), grid.n_h);

    let mut vanish_r = Recorder::new("effort_effect_vanishes");
    for &a in &as_ {
        for &b in &bs {
            vanish_r.require(f.r(0.0, b) == 0.0, (0.0, b));
            vanish_r.require(f.r(a, 0.0) == 0.0, (a, 0.0));
        }
    }

    // Effort table a[i][j] = a(h_i, β_j).
    let mut vanish_a = Recorder::new("effort_vanishes_on_axes");
    let mut effort = vec![vec![f64::NAN; bs.len()]; hs.len()];
    let mut effective = vec![vec![f64::NAN; bs.len()]; hs.len()];
    let mut table_ok = true;
    for (i, &h) in hs.iter().enumerate() {
        match engine.effort(h, 0.0) {
            Ok(a) => vanish_a.require(a == 0.0, (h, 0.0)),
            Err(e) => vanish_a.error((h, 0.0), e),
        }
        for (j, &b) in bs.iter().enumerate() {
            match engine.effort(h, b) {
                Ok(a) => {
                    effort[i][j] = a;
                    effective[i][j] = f.r(a, b);
                }
                Err(e) => {
                    vanish_a.error((h, b), e);
                    table_ok = false;
                }
            }
            if i == 0 {
                vanish_a.require(effort[0][j] == 0.0, (0.0, b));
            }
        }
    }

    let mut a_h = Recorder::new("effort_increasing_in_h");
    let mut a_b = Recorder::new("effort_increasing_in_beta");
    let mut r_h = Recorder::new("effective_effort_increasing_in_h");
    let mut r_b = Recorder::new("effective_effort_increasing_in_beta");
    let mut r_id = Recorder::new("effective_effort_increasing_differences");
    for i in 0..hs.len() {
        for j in 0..bs.len() {
            let at = (hs[i], bs[j]);
            if i + 1 < hs.len() {
                a_h.require(effort[i + 1][j] > effort[i][j], at);
                r_h.require(effective[i + 1][j] > effective[i][j], at);
            }
            if j + 1 < bs.len() && i > 0 {
                a_b.require(effort[i][j + 1] > effort[i][j], at);
                r_b.require(effective[i][j + 1] > effective[i][j], at);
            }
            if i + 1 < hs.len() && j + 1 < bs.len() {
                let up = effective[i + 1][j + 1] - effective[i][j + 1];
                let down = effective[i + 1][j] - effective[i][j];
                r_id.require(up > down, at);
            }
        }
    }
    if !table_ok {
        for rec in [&mut a_h, &mut a_b, &mut r_h, &mut r_b, &mut r_id] {
            rec.error((f64::NAN, f64::NAN), "effort table incomplete");
        }
    }

    let mut h_inc = Recorder::new("assessment_increasing");
    let mut h_int = Recorder::new("assessment_interior");
    let mut prev: Option<f64> = None;
    for &b in &bs {
        match engine.assessment(b) {
            Ok(h) => {
                h_int.require(h > 0.0 && h < 1.0, (b, h));
                if let Some(p) = prev {
                    h_inc.require(h > p, (b, h));
                }
                prev = Some(h);
            }
            Err(e) => {
                h_int.error((b, f64::NAN), &e);
                h_inc.error((b, f64::NAN), e);
                prev = None;
            }
        }
    }

    let mut c_inc = Recorder::new("effort_cost_increasing");
    let mut c_cvx = Recorder::new("effort_cost_convex");
    for w in as_.windows(3) {
        c_inc.require(f.c(w[1]) > f.c(w[0]), (w[0], w[1]));
        c_cvx.require(f.c(w[2]) - 2.0 * f.c(w[1]) + f.c(w[0]) > 0.0, (w[1], 0.0));
    }
    let mut k_inc = Recorder::new("assessment_cost_increasing");
    let mut k_cvx = Recorder::new("assessment_cost_convex");
    for w in hs.windows(3) {
        k_inc.require(f.kappa(w[1]) > f.kappa(w[0]), (w[0], w[1]));
        k_cvx.require(f.kappa(w[2]) - 2.0 * f.kappa(w[1]) + f.kappa(w[0]) > 0.0, (w[1], 0.0));
    }

    AssumptionReport {
        grid,
        checks: [
            vanish_r, vanish_a, a_h, a_b, r_h, r_b, r_id, h_inc, h_int, c_inc, c_cvx, k_inc, k_cvx,
        ]
        .into_iter()
        .map(Recorder::finish)
        .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{build_lq, CallablePrimitives, LqParams, PowerCostPrimitives, Scenario};
    use std::sync::Arc;

    fn scenario() -> Scenario {
        Scenario::new(0.0, 2.0, 0.5, 0.3, 3.0)
    }

    #[test]
    fn lq_passes_at_several_resolutions() {
        let m = build_lq(LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap(), scenario()).unwrap();
        for n in [8, 33, 64] {
            let rep = check_assumptions(&m, GridSpec { n_h: n, n_beta: n });
            assert!(rep.all_passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn constant_assessment_cost_fails_convexity() {
        let f = CallablePrimitives::new(|a, b| b * a, |a| 0.5 * a * a, |_| 0.3, |a, b| b * a - 0.5 * a * a, |_, _| 0.0);
        let m = ModelPrimitives::general(Arc::new(f), scenario()).unwrap();
        let rep = check_assumptions(&m, GridSpec::default());
        let cvx = rep.get("assessment_cost_convex").unwrap();
        assert!(!cvx.passed);
        assert_eq!(cvx.first_violation, Some((1.0 / 63.0, 0.0)));
        assert!(!rep.all_passed());
    }

    #[test]
    fn quartic_cost_keeps_increasing_differences() {
        let pc = PowerCostPrimitives::new(1.0, 4.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let m = ModelPrimitives::general(Arc::new(pc), scenario()).unwrap();
        let rep = check_assumptions(&m, GridSpec { n_h: 24, n_beta: 24 });
        assert!(rep.get("effective_effort_increasing_differences").unwrap().passed);
        assert!(rep.all_passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }
}
