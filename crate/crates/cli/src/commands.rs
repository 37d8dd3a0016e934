//! One function per subcommand. Each writes its files through an
//! [`OutputSet`] and returns summary lines for stdout.

use mislearn_core::analysis::{
    comparative_statics, disparity_report, first_order_comparison, DisparityReport, FomComparison, Lever, Perturbation,
};
use mislearn_core::assumptions::{check_assumptions, GridSpec};
use mislearn_core::equilibrium::{find_equilibria, psi_curve, EquilibriumSet, Location};
use mislearn_core::learning::{
    monte_carlo_convergence, simulate, Learner, LimitingOde, McConfig, SimConfig, SteadyState, SteadyStateKind,
};
use mislearn_core::multigroup::{
    assessment_floor, color_blind_equilibria, color_sighted_equilibrium, multigroup_convergence, sensitivity,
    simulate_multigroup, MultigroupEquilibrium, SensitivityParameter,
};
use mislearn_core::{BestResponseEngine, Error as CoreError};
use serde::Serialize;

use crate::config::Loaded;
use crate::error::Result;
use crate::export::{fmt_num, Cell, OutputSet, Table};
use crate::{CommandKind, Flags};

#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub seeds: Vec<u64>,
    pub violations: Vec<String>,
}

pub fn execute(kind: CommandKind, cfg: &Loaded, flags: &Flags, out: &mut OutputSet) -> Result<Outcome> {
    match kind {
        CommandKind::Solve => solve(cfg, flags, out),
        CommandKind::Phase => phase(cfg, flags, out),
        CommandKind::Learn => learn(cfg, flags, out),
        CommandKind::Multigroup => multigroup(cfg, flags, out),
        CommandKind::Compare => compare(cfg, out),
        CommandKind::Disparity => disparity(cfg, out),
        CommandKind::Check => check(cfg, flags, out),
    }
}

fn invalid(name: &'static str, reason: &str) -> CoreError {
    CoreError::InvalidParameter {
        name,
        reason: reason.to_string(),
    }
}

fn check(cfg: &Loaded, flags: &Flags, out: &mut OutputSet) -> Result<Outcome> {
    let g = flags.grid.unwrap_or(64).max(2);
    let report = check_assumptions(&cfg.model()?, GridSpec { n_h: g, n_beta: g });
    out.json("assumptions", "assumption_report", &report)?;
    Ok(Outcome {
        summary: report
            .checks
            .iter()
            .map(|c| format!("{:<40} {}", c.name, if c.passed { "pass" } else { "FAIL" }))
            .collect(),
        seeds: Vec::new(),
        violations: report.failures().map(|c| format!("assumption `{}` fails on the grid", c.name)).collect(),
    })
}

fn describe(set: &EquilibriumSet) -> Vec<String> {
    set.points
        .iter()
        .map(|p| {
            let stability = if p.is_stable() { "stable" } else { "unstable" };
            let location = match p.location {
                Location::Interior => "interior",
                Location::LowerCorner => "lower corner",
                Location::UpperCorner => "upper corner",
            };
            let sce = if p.is_sce { ", self-confirming" } else { "" };
            format!("β̂ = {} ({stability}, {location}{sce})", fmt_num(p.beta_hat))
        })
        .collect()
}

#[derive(Serialize)]
struct SolveReport<'a> {
    beta_star: f64,
    delta_mu: f64,
    equilibria: &'a EquilibriumSet,
    invariant_violations: &'a [String],
}

fn solve(cfg: &Loaded, flags: &Flags, out: &mut OutputSet) -> Result<Outcome> {
    let model = cfg.model()?;
    let engine = BestResponseEngine::new(&model);
    let set = find_equilibria(&engine)?;
    let violations = set.invariant_violations(model.beta_star());
    out.json(
        "equilibria",
        "equilibria",
        &SolveReport {
            beta_star: model.beta_star(),
            delta_mu: model.delta_mu(),
            equilibria: &set,
            invariant_violations: &violations,
        },
    )?;
    let mut curve = Table::new("psi_curve", &["beta", "psi"]);
    for (b, p) in psi_curve(&engine, flags.grid.unwrap_or(201))? {
        curve.push(vec![b.into(), p.into()]);
    }
    out.table("psi_curve", &curve)?;
    Ok(Outcome {
        summary: describe(&set),
        seeds: Vec::new(),
        violations,
    })
}

fn phase(cfg: &Loaded, flags: &Flags, out: &mut OutputSet) -> Result<Outcome> {
    let pc = cfg.config.phase;
    let learner = Learner::from_model(&cfg.model()?)?;
    let ode = LimitingOde::new(&learner);
    let (m_def, xi_def) = ode.default_window()?;
    let m_range = pc.m_range.map_or(m_def, |[a, b]| (a, b));
    let xi_range = pc.xi_range.map_or(xi_def, |[a, b]| (a, b));
    if !(xi_range.0 > 0.0) {
        return Err(invalid("xi_range", "ξ must stay positive").into());
    }
    let (n_m, n_xi) = flags.grid.map_or((pc.n_m, pc.n_xi), |g| (g, g));
    let field = ode.phase_field(m_range, xi_range, n_m, n_xi)?;

    let columns = ["m", "xi", "F1", "F2"];
    let mut grid = Table::new("phase_field", &columns);
    for p in &field.points {
        grid.push(vec![p.m.into(), p.xi.into(), p.f1.into(), p.f2.into()]);
    }
    out.table("phase_field", &grid)?;
    let mut null = Table::new("nullcline", &columns);
    for &(m, xi) in &field.nullcline {
        let [f1, f2] = ode.field(m, xi)?;
        null.push(vec![m.into(), xi.into(), f1.into(), f2.into()]);
    }
    out.table("nullcline", &null)?;
    out.json("steady_states", "steady_states", &field.steady_states)?;
    let mut summary = vec![format!("{}×{} grid, {} nullcline samples", field.n_m, field.n_xi, field.nullcline.len())];
    summary.extend(field.steady_states.iter().map(describe_state));
    Ok(Outcome {
        summary,
        ..Outcome::default()
    })
}

fn describe_state(s: &SteadyState) -> String {
    format!(
        "{} at m̂ = {}, ξ̂ = {} (β̂ = {}{})",
        if s.kind == SteadyStateKind::Sink { "sink" } else { "saddle" },
        fmt_num(s.m_hat),
        fmt_num(s.xi_hat),
        fmt_num(s.beta_hat),
        if s.corner { ", corner" } else { "" }
    )
}

struct LearnPlan {
    runs: usize,
    horizon: u64,
    seed: u64,
}

fn learn_plan(cfg: &Loaded, flags: &Flags) -> Result<LearnPlan> {
    let lc = &cfg.config.learning;
    let plan = LearnPlan {
        runs: flags.runs.unwrap_or(lc.runs),
        horizon: flags.horizon.unwrap_or(lc.horizon),
        seed: flags.seed.unwrap_or(lc.seed),
    };
    if plan.horizon == 0 {
        return Err(invalid("horizon", "horizon must be ≥ 1").into());
    }
    if plan.runs == 0 {
        return Err(invalid("runs", "runs must be ≥ 1").into());
    }
    Ok(plan)
}

fn trajectory_table(rows: impl Iterator<Item = (Option<usize>, mislearn_core::learning::Sample)>, grouped: bool) -> Table {
    let mut t = if grouped {
        Table::new("multigroup_trajectory", &["n", "group", "m", "xi", "h", "X"])
    } else {
        Table::new("trajectory", &["n", "m", "xi", "h", "X"])
    };
    for (g, s) in rows {
        let mut row: Vec<Cell> = vec![s.n.into()];
        if let Some(g) = g {
            row.push(g.into());
        }
        row.extend([s.m.into(), s.xi.into(), s.h.into(), s.x.into()]);
        t.push(row);
    }
    t
}

fn learn(cfg: &Loaded, flags: &Flags, out: &mut OutputSet) -> Result<Outcome> {
    let lc = &cfg.config.learning;
    let plan = learn_plan(cfg, flags)?;
    let learner = Learner::from_model(&cfg.model()?)?;

    for run in 0..lc.trajectories.min(plan.runs) as u64 {
        let sim = SimConfig {
            horizon: plan.horizon,
            seed: plan.seed,
            run,
            noise: lc.noise,
            stride: lc.stride,
            checkpoints: Vec::new(),
        };
        let t = simulate(&learner, lc.prior, &sim)?;
        let table = trajectory_table(t.samples().iter().map(|s| (None, *s)), false);
        out.table(&format!("trajectory_run{run}"), &table)?;
    }

    let mc = McConfig {
        runs: plan.runs,
        horizon: plan.horizon,
        seed: plan.seed,
        prior: lc.prior,
        noise: lc.noise,
        radius: lc.radius,
        checkpoints: lc.checkpoints.iter().copied().filter(|&n| n < plan.horizon).collect(),
    };
    let report = monte_carlo_convergence(&learner, &mc)?;
    out.json("convergence", "convergence_report", &report)?;

    let mut counts = Table::new("convergence_counts", &["n", "steady_state", "kind", "m_hat", "count", "frequency"]);
    for c in &report.checkpoints {
        for (i, s) in report.steady_states.iter().enumerate() {
            let kind = if s.state.is_sink() { "sink" } else { "saddle" };
            counts.push(vec![
                c.n.into(),
                i.into(),
                kind.into(),
                s.state.m_hat.into(),
                c.counts[i].into(),
                c.frequencies[i].into(),
            ]);
        }
    }
    out.table("convergence_counts", &counts)?;

    let fin = report.terminal();
    let mut summary = vec![format!(
        "{} runs × {} periods (seed {}): {:.1}% at a sink, {} at a saddle, {} unclassified",
        plan.runs,
        plan.horizon,
        plan.seed,
        100.0 * fin.sink_share,
        fin.saddle_hits,
        fin.unclassified
    )];
    for (s, f) in report.steady_states.iter().zip(&fin.frequencies) {
        summary.push(format!("  {}: {:.1}%", describe_state(&s.state), 100.0 * f));
    }
    Ok(Outcome {
        summary,
        seeds: vec![plan.seed],
        violations: Vec::new(),
    })
}

#[derive(Serialize)]
struct MultigroupReport<'a> {
    delta_bar: f64,
    assessment_floor: Option<f64>,
    color_sighted: &'a MultigroupEquilibrium,
    /// `None` when groups differ in true productivity.
    color_blind: Option<EquilibriumSet>,
}

fn multigroup(cfg: &Loaded, flags: &Flags, out: &mut OutputSet) -> Result<Outcome> {
    let lc = &cfg.config.learning;
    let plan = learn_plan(cfg, flags)?;
    let pop = cfg.population()?;
    let priors = cfg.group_priors();
    let eq = color_sighted_equilibrium(&pop)?;
    let same_truth = pop.beta_stars().windows(2).all(|w| w[0] == w[1]);
    let blind = if same_truth { Some(color_blind_equilibria(&pop)?) } else { None };
    out.json(
        "multigroup",
        "multigroup_equilibrium",
        &MultigroupReport {
            delta_bar: pop.delta_bar(),
            assessment_floor: assessment_floor(&pop)?,
            color_sighted: &eq,
            color_blind: blind.clone(),
        },
    )?;

    let mut sens = Table::new("sensitivities", &["parameter", "group", "value"]);
    let mut params: Vec<(String, SensitivityParameter)> =
        (0..pop.len()).map(|j| (format!("delta_{j}"), SensitivityParameter::Delta(j))).collect();
    params.extend(Lever::ALL.map(|l| (lever_name(l).to_string(), SensitivityParameter::Zeta(l))));
    for (name, p) in params {
        for (j, v) in sensitivity(&pop, &eq, p)?.into_iter().enumerate() {
            sens.push(vec![name.as_str().into(), j.into(), v.into()]);
        }
    }
    out.table("sensitivities", &sens)?;

    let sim = SimConfig {
        horizon: plan.horizon,
        seed: plan.seed,
        run: 0,
        noise: lc.noise,
        stride: lc.stride,
        checkpoints: Vec::new(),
    };
    let run = simulate_multigroup(&pop, &priors, &sim, Some(&eq))?;
    let n_samples = run.trajectory.groups[0].samples.len();
    let rows = (0..n_samples).flat_map(|k| run.trajectory.groups.iter().enumerate().map(move |(j, g)| (Some(j), g.samples[k])));
    out.table("multigroup_trajectory", &trajectory_table(rows, true))?;

    let mc = multigroup_convergence(&pop, &priors, plan.runs, plan.horizon, plan.seed, lc.radius)?;
    out.json("multigroup_convergence", "multigroup_convergence", &mc)?;

    let betas: Vec<String> = eq.beta_hat.iter().map(|b| fmt_num(*b)).collect();
    let mut summary = vec![
        format!(
            "color-sighted β̂ = ({}) after {} iterations, residual {:.1e}",
            betas.join(", "),
            eq.iterations,
            eq.residual
        ),
        format!(
            "{} of {} runs within {} at the horizon",
            mc.within_radius, mc.runs, mc.radius
        ),
    ];
    if let Some(b) = &blind {
        summary.push(format!("color-blind (Δ̄ = {}):", fmt_num(pop.delta_bar())));
        summary.extend(describe(b).into_iter().map(|s| format!("  {s}")));
    }
    let mut violations = Vec::new();
    if !eq.confined {
        violations.push("contraction iterates left the domain".to_string());
    }
    if !eq.eigen.bauer_fike_holds {
        violations.push("Bauer–Fike bound violated".to_string());
    }
    Ok(Outcome {
        summary,
        seeds: vec![plan.seed],
        violations,
    })
}

fn lever_name(l: Lever) -> &'static str {
    match l {
        Lever::LambdaE => "lambda_e",
        Lever::MarketPassthrough => "market_passthrough",
        Lever::NegCost => "neg_cost",
        Lever::NegKappa => "neg_kappa",
    }
}

fn default_perturbations() -> Vec<Perturbation> {
    [0.01, -0.01]
        .into_iter()
        .flat_map(|step| {
            std::iter::once(Perturbation::DeltaMu { step })
                .chain(Lever::ALL.map(|lever| Perturbation::Zeta { lever, step }))
        })
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct FirstOrderReport<'a> {
    comparison: Option<&'a FomComparison>,
    error: Option<String>,
}

fn compare(cfg: &Loaded, out: &mut OutputSet) -> Result<Outcome> {
    let cc = &cfg.config.compare;
    let model = cfg.model()?;
    let perts = if cc.perturbations.is_empty() {
        default_perturbations()
    } else {
        cc.perturbations.clone()
    };
    let mut table = Table::new(
        "comparative_statics",
        &["parameter", "step", "expected_increase", "weak_set_order", "baseline", "perturbed"],
    );
    let mut violations = Vec::new();
    for p in &perts {
        let r = comparative_statics(&model, *p)?;
        let (name, step) = match *p {
            Perturbation::DeltaMu { step } => ("delta_mu", step),
            Perturbation::Zeta { lever, step } => (lever_name(lever), step),
        };
        if !r.consistent() {
            violations.push(format!("{name} step {step}: distortion sets moved against the predicted direction"));
        }
        table.push(vec![
            name.into(),
            step.into(),
            r.expected_increase.into(),
            r.consistent().into(),
            join(&r.baseline).into(),
            join(&r.perturbed).into(),
        ]);
    }
    out.table("comparative_statics", &table)?;

    // the benchmark needs a self-confirming equilibrium; report rather than abort
    let fom = first_order_comparison(&model, cc.first_order);
    let (comparison, error) = match &fom {
        Ok(c) => (Some(c), None),
        Err(e) if e.is_numerical() => return Err(e.clone().into()),
        Err(e) => (None, Some(e.to_string())),
    };
    out.json("first_order", "first_order_comparison", &FirstOrderReport { comparison, error: error.clone() })?;

    let mut summary = vec![format!(
        "{}/{} perturbations move in the predicted direction",
        perts.len() - violations.len(),
        perts.len()
    )];
    summary.push(match (comparison, error) {
        (Some(c), _) => format!(
            "distortion {} vs {} under first-order misspecification",
            fmt_num(c.gap_ours),
            fmt_num(c.gap_fom)
        ),
        (None, Some(e)) => format!("first-order benchmark unavailable: {e}"),
        (None, None) => unreachable!(),
    });
    Ok(Outcome {
        summary,
        seeds: Vec::new(),
        violations,
    })
}

#[derive(Serialize)]
struct DisparityOutput<'a> {
    report: &'a DisparityReport,
    orderings_hold: bool,
}

fn disparity(cfg: &Loaded, out: &mut OutputSet) -> Result<Outcome> {
    let dc = cfg.config.disparity.ok_or_else(|| crate::error::CliError::Config {
        path: cfg.path.clone(),
        line: None,
        message: "missing [disparity] section".into(),
    })?;
    let report = disparity_report(&cfg.model()?, dc.delta_m, dc.delta_w, dc.selector)?;
    let ok = report.orderings().iter().all(|&b| b);
    out.json("disparity", "disparity_report", &DisparityOutput { report: &report, orderings_hold: ok })?;
    let mut violations = Vec::new();
    if !ok {
        violations.push(format!("disparity orderings fail: {:?}", report.orderings()));
    }
    Ok(Outcome {
        summary: vec![
            format!(
                "β̂_m = {}, β̂_w = {}, reward gap {}",
                fmt_num(report.m.beta_hat),
                fmt_num(report.w.beta_hat),
                fmt_num(report.reward_gap)
            ),
            format!("m out-earns w: {}", report.m_out_earns_w),
        ],
        seeds: Vec::new(),
        violations,
    })
}
