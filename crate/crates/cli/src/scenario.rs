//! Scenario execution. Every scenario returns its artifacts in memory so the
//! caller can write them in a fixed order.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use inflab_core::analytic::{self, ExponentFit};
use inflab_core::capacity::{self, AronssonDual, DualField, Quadrilateral};
use inflab_core::estimates::{
    self, EstimateReport, IdentityCheck, InequalityKind, PairingForm, SubdomainPair, TestFunction,
};
use inflab_core::grid::{fmt17, GridSpec, Region, ScalarField};
use inflab_core::solver::{self, BoundaryData, RegularizationParams, SolverConfig};
use rayon::prelude::*;

use crate::config::{BuiltinQuad, LoadedConfig, ScenarioKind};

/// Files to write, relative to the output directory, plus all reports.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub reports: Vec<EstimateReport>,
}

pub fn run(cfg: &LoadedConfig) -> Result<Artifacts> {
    match cfg.config.kind {
        ScenarioKind::Solve => solve(cfg),
        ScenarioKind::Verify => verify(cfg),
        ScenarioKind::Sweep => sweep(cfg),
        ScenarioKind::Sharpness => sharpness(cfg),
        ScenarioKind::Capacity => capacity_scenario(cfg),
        ScenarioKind::Dual => dual(cfg),
    }
}

fn boundary(cfg: &LoadedConfig) -> Result<BoundaryData> {
    if let Some(f) = cfg.boundary {
        return Ok(BoundaryData::reference(f));
    }
    let path = cfg.config.boundary_csv.as_ref().context("no boundary data configured")?;
    let full = cfg.resolve(path);
    let text = std::fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))?;
    Ok(BoundaryData::from_csv(path.display().to_string(), &text)?)
}

fn grid_for(cfg: &LoadedConfig, h: f64) -> Result<GridSpec> {
    Ok(GridSpec::with_spacing(cfg.config.domain_min, cfg.config.domain_max, h)?)
}

fn domain_center(cfg: &LoadedConfig) -> [f64; 2] {
    let c = &cfg.config;
    [0.5 * (c.domain_min[0] + c.domain_max[0]), 0.5 * (c.domain_min[1] + c.domain_max[1])]
}

fn short_side(cfg: &LoadedConfig) -> f64 {
    let c = &cfg.config;
    (c.domain_max[0] - c.domain_min[0]).min(c.domain_max[1] - c.domain_min[1])
}

fn pair_for(cfg: &LoadedConfig, grid: &GridSpec) -> Result<SubdomainPair> {
    let c = domain_center(cfg);
    let l = short_side(cfg);
    let v = cfg.config.v_region.unwrap_or(Region::square(c, 0.2 * l));
    let w = cfg.config.w_region.unwrap_or(Region::square(c, 0.4 * l));
    Ok(SubdomainPair::new(v, w, grid)?)
}

fn flatness_setup(cfg: &LoadedConfig) -> ([f64; 2], Vec<f64>) {
    let center = cfg.config.flatness_center.unwrap_or(domain_center(cfg));
    let c = &cfg.config;
    let dist = (center[0] - c.domain_min[0])
        .min(center[1] - c.domain_min[1])
        .min(c.domain_max[0] - center[0])
        .min(c.domain_max[1] - center[1]);
    let radii = c.flatness_radii.clone().unwrap_or_else(|| vec![dist / 5.0]);
    (center, radii)
}

struct Solved {
    hi: usize,
    ei: usize,
    h: f64,
    epsilon: f64,
    u: ScalarField,
    stats: solver::SolveStats,
}

fn solve_all(cfg: &LoadedConfig, g: &BoundaryData, scfg: &SolverConfig) -> Result<Vec<Solved>> {
    let c = &cfg.config;
    let jobs: Vec<(usize, f64, usize, f64)> = c
        .h_list
        .iter()
        .enumerate()
        .flat_map(|(hi, &h)| c.epsilon_list.iter().enumerate().map(move |(ei, &e)| (hi, h, ei, e)))
        .collect();
    jobs.par_iter()
        .map(|&(hi, h, ei, epsilon)| {
            let grid = grid_for(cfg, h)?;
            let params = RegularizationParams::new(epsilon)?;
            let (u, stats) = solver::solve_dirichlet_with_stats(&grid, g, &params, scfg)
                .with_context(|| format!("solving with h = {h}, epsilon = {epsilon}"))?;
            Ok(Solved { hi, ei, h, epsilon, u, stats })
        })
        .collect()
}

fn field_csv(u: &ScalarField) -> Result<String> {
    let mut buf = Vec::new();
    u.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn field_name(s: &Solved) -> String {
    format!("fields/u_h{}_eps{}.csv", s.hi, s.ei)
}

fn solve_reports(s: &Solved, g: &BoundaryData, scfg: &SolverConfig) -> Result<Vec<EstimateReport>> {
    let mut r = EstimateReport::new("solve", s.stats.final_residual, scfg.residual_tolerance, s.h, "final residual against tolerance");
    r.pass = s.stats.final_residual <= scfg.residual_tolerance;
    r.epsilon = Some(s.epsilon);
    let mut m = estimates::max_principle_report(&s.u, g, 1e-9)?;
    m.epsilon = Some(s.epsilon);
    Ok(vec![r, m])
}

fn solve(cfg: &LoadedConfig) -> Result<Artifacts> {
    let g = boundary(cfg)?;
    let scfg = cfg.solver_config();
    let mut out = Artifacts::default();
    for s in solve_all(cfg, &g, &scfg)? {
        if cfg.config.dump_fields {
            out.files.push((field_name(&s), field_csv(&s.u)?));
        }
        out.reports.extend(solve_reports(&s, &g, &scfg)?);
    }
    Ok(out)
}

/// Reports shared by `verify` and `sweep`.
fn estimate_reports(cfg: &LoadedConfig, s: &Solved) -> Result<Vec<EstimateReport>> {
    let c = &cfg.config;
    let grid = *s.u.grid();
    let h = s.h;
    let params = RegularizationParams::new(s.epsilon)?.with_field_scale(estimates::default_delta(&s.u) / RegularizationParams::DELTA_FACTOR)?;
    let pair = pair_for(cfg, &grid)?;
    let mut out = Vec::new();
    let mut push = |mut r: EstimateReport| {
        r.epsilon = Some(s.epsilon);
        out.push(r);
    };

    let alg = estimates::pointwise_identity_check(&s.u, Some(s.epsilon), IdentityCheck::Alg2x2)?;
    let mut r = EstimateReport::new("identity_alg2x2", alg.max_abs_residual, 1e-12, h, "relative residual");
    r.pass = alg.max_abs_residual <= 1e-12;
    push(r);

    let key = estimates::pointwise_identity_check(&s.u, Some(s.epsilon), IdentityCheck::KeyII)?;
    push(EstimateReport::new("identity_key_ii", key.mean_abs_residual, key.scale.max(f64::MIN_POSITIVE), h, "mean residual"));

    let nn = estimates::pointwise_identity_check(&s.u, Some(s.epsilon), IdentityCheck::NonnegDet)?;
    let slack = 0.5 * h * nn.scale + 1e-12;
    let mut r = EstimateReport::new("nonneg_det", (-nn.min_value).max(0.0), slack, h, "negative part of min -det against 0.5 h scale");
    r.pass = nn.min_value >= -slack;
    push(r);

    let phi = TestFunction::new(domain_center(cfg), 0.4 * short_side(cfg), 3)?;
    let det = estimates::functional_pairing(&s.u, s.epsilon, &phi, PairingForm::Det)?;
    for form in [PairingForm::Pointwise, PairingForm::Divergence, PairingForm::Weak] {
        let v = estimates::functional_pairing(&s.u, s.epsilon, &phi, form)?;
        let name = match form {
            PairingForm::Pointwise => "pairing_pointwise_vs_det",
            PairingForm::Divergence => "pairing_divergence_vs_det",
            _ => "pairing_weak_vs_det",
        };
        push(EstimateReport::new(name, (v - det).abs(), det.abs().max(1.0), h, "absolute gap over max(|det form|, 1)"));
    }

    push(estimates::lipschitz_report(&s.u, &pair)?);
    push(estimates::inequality_report(InequalityKind::Apriori, &s.u, &params, &pair)?);
    for &alpha in &c.alpha_list {
        push(estimates::inequality_report(InequalityKind::Caccioppoli { alpha }, &s.u, &params, &pair)?);
        push(estimates::inequality_report(InequalityKind::W12Limit { alpha }, &s.u, &params, &pair)?);
        for &kappa in &c.kappa_list {
            let pk = params.with_kappa(kappa)?;
            push(estimates::inequality_report(InequalityKind::SobolevU { alpha }, &s.u, &pk, &pair)?);
        }
    }
    for &p in &c.p_list {
        push(estimates::inequality_report(InequalityKind::LpGradient { p }, &s.u, &params, &pair)?);
    }
    let (center, radii) = flatness_setup(cfg);
    for &radius in &radii {
        let kind = InequalityKind::Flatness { center, radius, plane: None };
        let (r, detail) = estimates::inequality_report_detailed(kind, &s.u, &params, &pair)?;
        let lambda = detail.map(|d| d.lambda).unwrap_or(f64::NAN);
        let mut fl = EstimateReport::new("flatness_over_lambda", r.lhs, lambda, h, "flatness LHS against sup|u-P|/r");
        fl.alpha = Some(radius);
        push(r);
        push(fl);
    }
    Ok(out)
}

fn verify(cfg: &LoadedConfig) -> Result<Artifacts> {
    let g = boundary(cfg)?;
    let scfg = cfg.solver_config();
    let mut out = Artifacts::default();
    let solved = solve_all(cfg, &g, &scfg)?;
    let reports: Vec<Vec<EstimateReport>> = solved
        .par_iter()
        .map(|s| {
            let mut r = solve_reports(s, &g, &scfg)?;
            r.extend(estimate_reports(cfg, s)?);
            Ok(r)
        })
        .collect::<Result<_>>()?;
    for (s, r) in solved.iter().zip(reports) {
        if cfg.config.dump_fields {
            out.files.push((field_name(s), field_csv(&s.u)?));
        }
        out.reports.extend(r);
    }
    Ok(out)
}

fn stability_key(r: &EstimateReport) -> String {
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    format!("{}|{}|{}", r.name, opt(r.alpha), opt(r.kappa))
}

fn sweep(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let g = boundary(cfg)?;
    let scfg = cfg.solver_config();
    let mut out = Artifacts::default();
    let solved = solve_all(cfg, &g, &scfg)?;
    let per_run: Vec<Vec<EstimateReport>> = solved.par_iter().map(|s| estimate_reports(cfg, s)).collect::<Result<_>>()?;

    let ratio_kinds = ["caccioppoli", "sobolev_u", "lp_gradient", "w12_limit", "lipschitz"];
    let mut keys: Vec<String> = Vec::new();
    let mut groups: Vec<(EstimateReport, Vec<f64>)> = Vec::new();
    for r in per_run.iter().flatten() {
        if !ratio_kinds.contains(&r.name.as_str()) {
            continue;
        }
        let k = stability_key(r);
        match keys.iter().position(|x| *x == k) {
            Some(i) => groups[i].1.push(r.ratio),
            None => {
                keys.push(k);
                groups.push((r.clone(), vec![r.ratio]));
            }
        }
    }
    let h_min = c.h_list.iter().copied().fold(f64::INFINITY, f64::min);
    for r in per_run.iter().flatten() {
        out.reports.push(r.clone());
    }
    for (proto, ratios) in groups {
        let v = estimates::ratio_variation(&ratios);
        let mut r = EstimateReport::new(format!("ratio_variation_{}", proto.name), v, 2.0, h_min, "max/min ratio across the sweep");
        r.pass = v <= 2.0;
        r.alpha = proto.alpha;
        r.kappa = proto.kappa;
        out.reports.push(r);
    }

    // one-sided flatness bound per run: max over radii against the largest radius
    let (_, radii) = flatness_setup(cfg);
    if radii.len() > 1 {
        for (s, reps) in solved.iter().zip(&per_run) {
            let ratios: Vec<(f64, f64)> =
                reps.iter().filter(|r| r.name == "flatness_over_lambda").map(|r| (r.alpha.unwrap_or(0.0), r.ratio)).collect();
            let (_, base) = ratios.iter().copied().fold((f64::NEG_INFINITY, f64::NAN), |a, b| if b.0 > a.0 { b } else { a });
            let top = ratios.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
            let v = if base > 0.0 { top / base } else if top <= estimates::ZERO_RATIO { 1.0 } else { f64::INFINITY };
            let mut r = EstimateReport::new("flatness_over_lambda_growth", v, 2.0, s.h, "max ratio over radii against the largest radius");
            r.pass = v <= 2.0;
            r.epsilon = Some(s.epsilon);
            out.reports.push(r);
        }
    }

    if let Some(f) = cfg.boundary.filter(|f| f.is_infinity_harmonic()) {
        let table = estimates::convergence_study(
            c.domain_min,
            c.domain_max,
            &BoundaryData::reference(f),
            &c.epsilon_list,
            &c.h_list,
            &c.p_list,
            &scfg,
        )?;
        let mut csv = String::from("epsilon,h,sup_error");
        for p in &c.p_list {
            write!(csv, ",grad_error_p{}", fmt17(*p))?;
        }
        csv.push('\n');
        for row in &table.rows {
            write!(csv, "{},{},{}", fmt17(row.epsilon), fmt17(row.h), fmt17(row.sup_error))?;
            for (_, e) in &row.gradient_errors {
                write!(csv, ",{}", fmt17(*e))?;
            }
            csv.push('\n');
        }
        out.files.push(("convergence.csv".into(), csv));
        let finest: Vec<f64> = table.rows.iter().filter(|r| r.h == h_min).map(|r| r.sup_error).collect();
        let first = finest.first().copied().unwrap_or(0.0);
        let last = finest.last().copied().unwrap_or(0.0);
        let mut r = EstimateReport::new("convergence", last, first, h_min, "sup error at the smallest against the largest epsilon");
        r.pass = table.pass;
        out.reports.push(r);
    }
    Ok(out)
}

fn sharpness(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let mut fits: Vec<ExponentFit> = c
        .alpha_list
        .par_iter()
        .map(|&alpha| Ok(analytic::critical_exponent_estimate(alpha, c.exponent_mode, c.exponent_levels)?))
        .collect::<Result<_>>()?;
    if c.include_log_speed {
        fits.push(analytic::log_speed_exponent_estimate(c.exponent_levels)?);
    }
    let mut out = Artifacts::default();
    let mut csv = String::from("quantity,mode,fitted_critical_p,stderr,target_p,levels\n");
    for f in &fits {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            f.quantity,
            f.mode,
            fmt17(f.fitted_critical_p),
            fmt17(f.stderr),
            fmt17(f.target_p),
            f.levels
        )?;
        let both_inf = f.fitted_critical_p.is_infinite() && f.target_p.is_infinite();
        let mut r = EstimateReport::new(format!("sharpness {}", f.quantity), f.fitted_critical_p, f.target_p, 0.0, "fitted against predicted exponent");
        if both_inf {
            r.ratio = 1.0;
        }
        r.pass = both_inf || (f.fitted_critical_p - f.target_p).abs() <= 0.1;
        if let analytic::GradientQuantity::Power { alpha } = f.quantity {
            r.alpha = Some(alpha);
        }
        out.reports.push(r);
    }
    out.files.push(("exponents.csv".into(), csv));
    Ok(out)
}

fn quad_for(cfg: &LoadedConfig, h: f64) -> Result<Quadrilateral> {
    let c = &cfg.config;
    Ok(match (&c.geometry, c.quad) {
        (Some(path), _) => {
            let full = cfg.resolve(path);
            let text = std::fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))?;
            Quadrilateral::from_json(&text, h)?.with_spacing(h)?
        }
        (None, Some(BuiltinQuad::LShape)) => Quadrilateral::l_shape(h)?,
        _ => Quadrilateral::rectangle(c.rect_min, c.rect_max, h)?,
    })
}

fn capacity_scenario(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let scfg = cfg.solver_config();
    let jobs: Vec<(f64, f64)> = c.h_list.iter().flat_map(|&h| c.p_list.iter().map(move |&p| (h, p))).collect();
    let results: Vec<capacity::DualityReport> = jobs
        .par_iter()
        .map(|&(h, p)| {
            let q = quad_for(cfg, h)?;
            capacity::duality_product(&q, p, &scfg).with_context(|| format!("capacity with h = {h}, p = {p}"))
        })
        .collect::<Result<_>>()?;
    let mut out = Artifacts::default();
    let mut csv = String::from("h,p,q,cap_p,cap_q,product\n");
    for d in &results {
        writeln!(csv, "{},{},{},{},{},{}", fmt17(d.h), fmt17(d.p), fmt17(d.q), fmt17(d.cap_p), fmt17(d.cap_q), fmt17(d.product))?;
        let mut r = EstimateReport::new("duality", d.product, 1.0, d.h, "Cap_p^(1/p) Cap_q^(1/q) against 1");
        r.pass = (d.product - 1.0).abs() <= c.duality_tolerance;
        r.alpha = Some(d.p);
        out.reports.push(r);
    }
    out.files.push(("capacity.csv".into(), csv));
    Ok(out)
}

/// Test functions of the singular-measure check when none are configured.
pub fn default_test_functions() -> Vec<TestFunction> {
    vec![
        TestFunction { center: [1.0, 0.0], radius: 0.5, order: 3 },
        TestFunction { center: [1.0, 1.0], radius: 0.5, order: 3 },
        TestFunction { center: [0.0, 0.0], radius: 0.5, order: 3 },
    ]
}

fn dual(cfg: &LoadedConfig) -> Result<Artifacts> {
    let c = &cfg.config;
    let region = c.dual_region.unwrap_or(Region::Interior { margin: 0.0 });
    let mut out = Artifacts::default();
    let grid0 = grid_for(cfg, c.h_list[0])?;
    if c.domain_min[0] <= 0.0 && c.domain_max[0] >= 0.0 || c.domain_min[1] <= 0.0 && c.domain_max[1] >= 0.0 {
        bail!("the dual scenario domain must avoid the coordinate axes");
    }
    let analytic_res = capacity::dual_equation_residual(DualField::Analytic(&AronssonDual, &grid0), &region)?;
    let sup = analytic_res.max_abs();
    let mut r = EstimateReport::new("dual_analytic", sup, 1e-10, grid0.h(), "sup residual against 1e-10");
    r.pass = sup <= 1e-10;
    out.reports.push(r);

    let mut errs = Vec::new();
    for &h in &c.h_list {
        let grid = grid_for(cfg, h)?;
        let v = inflab_core::Smooth2::sample(&AronssonDual, &grid);
        let res = capacity::dual_equation_residual(DualField::Discrete(&v), &region)?;
        let e = res.max_abs();
        out.reports.push(EstimateReport::new("dual_discrete", e, 1.0, h, "sup residual"));
        errs.push((h, e));
    }
    for w in errs.windows(2) {
        let order = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        let mut r = EstimateReport::new("dual_discrete_order", order, 1.0, w[1].0, "observed order against 1");
        r.pass = order >= 1.0;
        out.reports.push(r);
    }

    let phis = c.test_functions.clone().unwrap_or_else(default_test_functions);
    let checks: Vec<capacity::SingularMeasureResult> = phis.par_iter().map(capacity::singular_measure_check).collect();
    let mut csv = String::from("center_x,center_y,radius,order,f_value,line_value\n");
    for (phi, s) in phis.iter().zip(&checks) {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt17(phi.center[0]),
            fmt17(phi.center[1]),
            fmt17(phi.radius),
            phi.order,
            fmt17(s.f_value),
            fmt17(s.line_value)
        )?;
        let mut r = EstimateReport::new("singular_measure", -s.f_value, -s.line_value, s.h, "pairing against -2 x axis line integrals");
        if s.line_value == 0.0 {
            r.ratio = 0.0;
            r.pass = s.f_value.abs() <= 1e-4;
        } else {
            r.pass = s.relative_gap() <= 0.02;
        }
        out.reports.push(r);
    }
    out.files.push(("singular_measure.csv".into(), csv));
    Ok(out)
}
