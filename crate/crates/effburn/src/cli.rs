//! Experiment orchestration and file emission for the `effburn` binary.
//!
//! Every command validates its configuration before computing and computes
//! before writing, so a config error never leaves partial files. Batch
//! commands capture per-row solver errors and keep going; single-quantity
//! commands are fail-fast. All emitted rows carry their tolerance or
//! error-estimate columns.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::burnvel::{
    alpha_level_curve, burning_velocity, line_integral_check, match_flat_arcs,
    resonant_directions, BurningVelocityResult, ResonantDirection,
};
use crate::cell::{
    hbar_discounted, hbar_flatness_window, hbar_level_curve, hbar_time_marching,
    shear_oracle_flow, FlatnessWindow, HbarResult, Method, SolverConfig,
};
use crate::config::RunConfig;
use crate::curve::{default_kappa_tol, detect_flat_pieces, FlatArc, LevelCurve};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::front::{front_consistency, front_trace, AlphaModel, FrontSnapshot};
use crate::perturb::{self, diophantine_quality, expansion_residual};
use crate::svg::{render_svg, SvgCurve, SvgSegment, SvgStyle};
use crate::vec2::Vec2;

#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub failed_rows: usize,
}

impl RunSummary {
    fn add(&mut self, path: PathBuf) {
        self.files.push(path);
    }
}

fn ensure_dirs(out: &Path, want_svg: bool) -> Result<()> {
    fs::create_dir_all(out)?;
    if want_svg {
        fs::create_dir_all(out.join("plots"))?;
    }
    Ok(())
}

fn write_text(summary: &mut RunSummary, path: PathBuf, content: &str) -> Result<()> {
    fs::write(&path, content)?;
    summary.add(path);
    Ok(())
}

fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Header record carried by every results.json.
#[derive(Debug, Serialize)]
struct Meta {
    command: String,
    flow_label: String,
    amplitude: f64,
    solver: SolverConfig,
    seed: Option<u64>,
}

fn meta(command: &str, flow: &FlowField, cfg: &RunConfig) -> Meta {
    Meta {
        command: command.to_string(),
        flow_label: flow.label().to_string(),
        amplitude: flow.amplitude(),
        solver: cfg.solver.clone(),
        seed: cfg.seed,
    }
}

// ---------------------------------------------------------------- hbar batch

#[derive(Debug, Serialize)]
struct HbarRow {
    p: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    time_marching: Option<HbarResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discounted: Option<HbarResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<HbarResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Batch Hbar over p_list. With cross_check both PDE methods are tabulated;
/// on a shear flow the closed-form oracle column is added as well.
pub fn cmd_hbar(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    let use_both = cfg.solver.cross_check;
    let use_oracle = flow.is_shear() && !flow.is_zero();

    let rows: Vec<HbarRow> = crate::parallel::try_map_indexed(cfg.experiment.p_list.len(), |i| {
        let p = Vec2::from(cfg.experiment.p_list[i]);
        let mut row = HbarRow {
            p: p.into(),
            time_marching: None,
            discounted: None,
            oracle: None,
            error: None,
        };
        let record = |r: std::result::Result<HbarResult, Error>,
                      slot: &mut Option<HbarResult>,
                      error: &mut Option<String>| {
            match r {
                Ok(v) => *slot = Some(v),
                Err(e) => *error = Some(e.to_string()),
            }
        };
        let mut err = None;
        if use_both || cfg.solver.method == Method::TimeMarching {
            record(
                hbar_time_marching(p, &flow, &cfg.solver),
                &mut row.time_marching,
                &mut err,
            );
        }
        if use_both || cfg.solver.method == Method::Discounted {
            record(
                hbar_discounted(p, &flow, &cfg.solver),
                &mut row.discounted,
                &mut err,
            );
        }
        if use_oracle {
            record(
                shear_oracle_flow(p, &flow, cfg.experiment.quad_n),
                &mut row.oracle,
                &mut err,
            );
        }
        row.error = err;
        Ok(row)
    })?;

    let mut summary = RunSummary::default();
    summary.failed_rows = rows.iter().filter(|r| r.error.is_some()).count();
    ensure_dirs(out, false)?;

    if cfg.wants("csv") {
        let mut csv = String::from("p_x,p_y");
        if use_both || cfg.solver.method == Method::TimeMarching {
            csv.push_str(",hbar_time_marching,err_time_marching,residual_time_marching,iters_time_marching");
        }
        if use_both || cfg.solver.method == Method::Discounted {
            csv.push_str(",hbar_discounted,err_discounted,residual_discounted,iters_discounted");
        }
        if use_oracle {
            csv.push_str(",hbar_oracle,err_oracle");
        }
        csv.push_str(",error\n");
        for r in &rows {
            let _ = write!(csv, "{},{}", r.p[0], r.p[1]);
            if use_both || cfg.solver.method == Method::TimeMarching {
                push_hbar_cols(&mut csv, &r.time_marching, true);
            }
            if use_both || cfg.solver.method == Method::Discounted {
                push_hbar_cols(&mut csv, &r.discounted, true);
            }
            if use_oracle {
                push_hbar_cols(&mut csv, &r.oracle, false);
            }
            let _ = writeln!(csv, ",{}", r.error.clone().unwrap_or_default());
        }
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("json") {
        #[derive(Serialize)]
        struct Doc {
            meta: Meta,
            rows: Vec<HbarRow>,
        }
        let doc = Doc {
            meta: meta("hbar", &flow, cfg),
            rows,
        };
        write_text(&mut summary, out.join("results.json"), &json_string(&doc)?)?;
    }
    Ok(summary)
}

fn push_hbar_cols(csv: &mut String, r: &Option<HbarResult>, with_iters: bool) {
    match r {
        Some(v) if with_iters => {
            let _ = write!(
                csv,
                ",{},{},{},{}",
                v.value, v.error_estimate, v.residual, v.iterations
            );
        }
        Some(v) => {
            let _ = write!(csv, ",{},{}", v.value, v.error_estimate);
        }
        None if with_iters => csv.push_str(",,,,"),
        None => csv.push_str(",,"),
    }
}

// --------------------------------------------------------------- alpha batch

#[derive(Debug, Serialize)]
struct AlphaRow {
    p: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<BurningVelocityResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn cmd_alpha(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    let rows: Vec<AlphaRow> = crate::parallel::try_map_indexed(cfg.experiment.p_list.len(), |i| {
        let p = Vec2::from(cfg.experiment.p_list[i]);
        Ok(match burning_velocity(p, &flow, &cfg.solver) {
            Ok(r) => AlphaRow {
                p: p.into(),
                result: Some(r),
                error: None,
            },
            Err(e) => AlphaRow {
                p: p.into(),
                result: None,
                error: Some(e.to_string()),
            },
        })
    })?;

    let mut summary = RunSummary::default();
    summary.failed_rows = rows.iter().filter(|r| r.error.is_some()).count();
    ensure_dirs(out, false)?;
    if cfg.wants("csv") {
        let mut csv =
            String::from("p_x,p_y,alpha,alpha_err,lambda_p,hbar_at_min,optimality_gap,error\n");
        for r in &rows {
            match &r.result {
                Some(v) => {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},",
                        r.p[0], r.p[1], v.alpha, v.alpha_err, v.lambda_p, v.hbar_at_min,
                        v.optimality_gap
                    );
                }
                None => {
                    let _ = writeln!(
                        csv,
                        "{},{},,,,,,{}",
                        r.p[0],
                        r.p[1],
                        r.error.clone().unwrap_or_default()
                    );
                }
            }
        }
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("json") {
        #[derive(Serialize)]
        struct Doc {
            meta: Meta,
            rows: Vec<AlphaRow>,
        }
        write_text(
            &mut summary,
            out.join("results.json"),
            &json_string(&Doc {
                meta: meta("alpha", &flow, cfg),
                rows,
            })?,
        )?;
    }
    Ok(summary)
}

// --------------------------------------------------------------- level curve

fn curve_csv(curve: &LevelCurve) -> String {
    let mut csv = String::from("theta,x,y,value,value_err\n");
    for s in &curve.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            s.theta, s.point.x, s.point.y, s.value_used, s.value_err
        );
    }
    csv
}

fn derived_kappa_tol(cfg: &RunConfig, curve: &LevelCurve) -> f64 {
    cfg.experiment.kappa_tol.unwrap_or_else(|| {
        let rel = curve
            .samples
            .iter()
            .map(|s| s.value_err / s.value_used.abs().max(1e-12))
            .fold(0.0f64, f64::max)
            .max(cfg.solver.rel_tol);
        default_kappa_tol(rel, curve.mean_chord())
    })
}

fn curve_svg(curve: &LevelCurve, predictions: &[ResonantDirection], label: &str) -> String {
    let mut curves = vec![SvgCurve::new(curve.points().collect(), label.to_string()).closed()];
    // highlight detected flat arcs
    for (i, arc) in curve.flat_arcs.iter().enumerate() {
        let m = curve.samples.len();
        let mut pts = Vec::new();
        let mut k = arc.start_index;
        loop {
            pts.push(curve.samples[k].point);
            if k == arc.end_index {
                break;
            }
            k = (k + 1) % m;
            if pts.len() > m {
                break;
            }
        }
        curves.push(
            SvgCurve::new(pts, format!("flat arc {i}"))
                .stroke("#c0392b"),
        );
    }
    let r = curve
        .samples
        .iter()
        .map(|s| s.point.norm())
        .fold(0.0f64, f64::max);
    let segments: Vec<SvgSegment> = predictions
        .iter()
        .map(|p| SvgSegment {
            from: -p.normal * (1.1 * r),
            to: p.normal * (1.1 * r),
            style: SvgStyle {
                stroke: "#7f8c8d".to_string(),
                width: 0.004,
                dashed: true,
            },
            label: format!("predicted normal k=({},{})", p.k_hat[0], p.k_hat[1]),
        })
        .collect();
    render_svg(&curves, &segments)
}

#[derive(Serialize)]
struct CurveDoc {
    meta: Meta,
    curve: LevelCurve,
    kappa_tol: f64,
    predictions: Vec<ResonantDirection>,
    convexity_defect: f64,
    nonroundness: f64,
}

fn nonroundness(curve: &LevelCurve) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in &curve.samples {
        let r = s.point.norm();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    hi / lo - 1.0
}

fn emit_curve(
    cfg: &RunConfig,
    flow: &FlowField,
    curve: LevelCurve,
    command: &str,
    out: &Path,
) -> Result<RunSummary> {
    let kappa = derived_kappa_tol(cfg, &curve);
    let mut curve = detect_flat_pieces(&curve, kappa);
    let predictions = resonant_directions(flow);
    curve.flat_arcs = match_flat_arcs(&curve.flat_arcs, &predictions, 0.1);

    let mut summary = RunSummary::default();
    ensure_dirs(out, cfg.wants("svg"))?;
    if cfg.wants("csv") {
        write_text(&mut summary, out.join("results.csv"), &curve_csv(&curve))?;
    }
    if cfg.wants("svg") {
        let svg = curve_svg(&curve, &predictions, &format!("{command} level curve"));
        write_text(&mut summary, out.join("plots").join("level_curve.svg"), &svg)?;
    }
    if cfg.wants("json") {
        let doc = CurveDoc {
            meta: meta(command, flow, cfg),
            kappa_tol: kappa,
            predictions,
            convexity_defect: curve.convexity_defect(),
            nonroundness: nonroundness(&curve),
            curve,
        };
        write_text(&mut summary, out.join("results.json"), &json_string(&doc)?)?;
    }
    Ok(summary)
}

pub fn cmd_level_curve(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    let curve = match cfg.experiment.level_kind.as_str() {
        "hbar" => hbar_level_curve(
            cfg.experiment.level,
            &flow,
            &cfg.solver,
            cfg.experiment.n_angles,
        )?,
        _ => alpha_level_curve(&flow, &cfg.solver, cfg.experiment.n_angles)?,
    };
    emit_curve(cfg, &flow, curve, "level-curve", out)
}

pub fn cmd_flat_pieces(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    let curve = alpha_level_curve(&flow, &cfg.solver, cfg.experiment.n_angles)?;
    emit_curve(cfg, &flow, curve, "flat-pieces", out)
}

// ------------------------------------------------------------------- perturb

#[derive(Serialize)]
struct PerturbRow {
    p: [f64; 2],
    a2: f64,
    truncated: bool,
    excluded_modes: Vec<[i32; 2]>,
    min_divisor: f64,
    diophantine_gamma1: f64,
    diophantine_gamma2: f64,
}

pub fn cmd_perturb(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    let mut a2_rows = Vec::new();
    for &pa in &cfg.experiment.p_list {
        let p = Vec2::from(pa);
        let r = perturb::a2(p, &flow, cfg.experiment.divisor_floor)?;
        let q = diophantine_quality(p, 50)?;
        a2_rows.push(PerturbRow {
            p: p.into(),
            a2: r.a2,
            truncated: r.truncated,
            excluded_modes: r.excluded_modes,
            min_divisor: r.min_divisor,
            diophantine_gamma1: q.gamma1,
            diophantine_gamma2: q.gamma2,
        });
    }
    let p0 = Vec2::from(cfg.experiment.p_list[0]);
    let table = expansion_residual(p0, &flow, &cfg.experiment.eps_list, &cfg.solver)?;

    let mut summary = RunSummary::default();
    ensure_dirs(out, false)?;
    if cfg.wants("csv") {
        let mut csv =
            String::from("eps,hbar,hbar_err,alpha,alpha_err,ratio_H,ratio_alpha,a2_target\n");
        for r in &table.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                r.eps, r.hbar, r.hbar_err, r.alpha, r.alpha_err, r.ratio_h, r.ratio_alpha,
                table.a2_target
            );
        }
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("json") {
        #[derive(Serialize)]
        struct Doc {
            meta: Meta,
            a2_rows: Vec<PerturbRow>,
            expansion: crate::perturb::ExpansionTable,
        }
        write_text(
            &mut summary,
            out.join("results.json"),
            &json_string(&Doc {
                meta: meta("perturb", &flow, cfg),
                a2_rows,
                expansion: table,
            })?,
        )?;
    }
    Ok(summary)
}

// --------------------------------------------------------------------- front

#[derive(Serialize)]
struct FrontDoc {
    meta: Meta,
    model_kind: String,
    reports: Vec<FrontReport>,
}

#[derive(Serialize)]
struct FrontReport {
    t: f64,
    n_points: usize,
    max_abs_value: f64,
    convexity_defect: f64,
    min_turning_angle: f64,
    corner_warning: bool,
}

pub fn cmd_front(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    let model = match cfg.experiment.front_model.as_str() {
        "euclidean" => AlphaModel::euclidean(cfg.experiment.front_scale),
        "ell1" => AlphaModel::ell1(cfg.experiment.front_scale),
        _ => {
            let curve = alpha_level_curve(&flow, &cfg.solver, cfg.experiment.n_angles)?;
            let kappa = derived_kappa_tol(cfg, &curve);
            let curve = detect_flat_pieces(&curve, kappa);
            AlphaModel::from_level_curve(&curve)?
        }
    };
    let mut snapshots: Vec<FrontSnapshot> = Vec::new();
    let mut reports = Vec::new();
    for &t in &cfg.experiment.t_list {
        let snap = front_trace(&model, t, cfg.experiment.n_angles)?;
        let rep = front_consistency(&model, t, &snap);
        reports.push(FrontReport {
            t,
            n_points: snap.points.len(),
            max_abs_value: rep.max_abs_value,
            convexity_defect: rep.convexity_defect,
            min_turning_angle: rep.min_turning_angle,
            corner_warning: snap.corner_warning,
        });
        snapshots.push(snap);
    }

    let mut summary = RunSummary::default();
    ensure_dirs(out, cfg.wants("svg"))?;
    if cfg.wants("csv") {
        let mut csv = String::from("t,x,y,provenance\n");
        for snap in &snapshots {
            for fp in &snap.points {
                let tag = match fp.provenance {
                    crate::front::Provenance::Regular => "regular",
                    crate::front::Provenance::CornerFan => "corner_fan",
                    crate::front::Provenance::FlatTranslate => "flat_translate",
                };
                let _ = writeln!(csv, "{},{},{},{}", snap.t, fp.point.x, fp.point.y, tag);
            }
        }
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("svg") {
        let mut curves = vec![SvgCurve::new(
            front_trace(&model, 0.0, cfg.experiment.n_angles)?
                .positions(),
            "initial front",
        )
        .closed()
        .dashed()];
        for snap in &snapshots {
            curves.push(
                SvgCurve::new(snap.positions(), format!("front t={}", snap.t)).closed(),
            );
        }
        write_text(
            &mut summary,
            out.join("plots").join("front.svg"),
            &render_svg(&curves, &[]),
        )?;
    }
    if cfg.wants("json") {
        write_text(
            &mut summary,
            out.join("results.json"),
            &json_string(&FrontDoc {
                meta: meta("front", &flow, cfg),
                model_kind: cfg.experiment.front_model.clone(),
                reports,
            })?,
        )?;
    }
    Ok(summary)
}

// -------------------------------------------------------- weak-flow sweep

#[derive(Serialize)]
struct WeakFlowEpsReport {
    eps: f64,
    nonroundness: f64,
    convexity_defect: f64,
    flat_arcs: Vec<FlatArc>,
    detected_normals_matching_prediction: usize,
}

#[derive(Serialize)]
struct WeakFlowDoc {
    meta: Meta,
    predictions: Vec<ResonantDirection>,
    per_eps: Vec<WeakFlowEpsReport>,
    expansion: crate::perturb::ExpansionTable,
}

pub fn cmd_experiment_weak_flow(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let base = cfg.flow.build()?;
    let predictions = resonant_directions(&base);

    let mut per_eps = Vec::new();
    let mut csv = String::from("eps,theta,x,y,alpha,alpha_err\n");
    let mut svgs = Vec::new();
    for &eps in &cfg.experiment.eps_list {
        let flow = base.clone().with_amplitude(eps);
        let curve = alpha_level_curve(&flow, &cfg.solver, cfg.experiment.n_angles)?;
        let kappa = derived_kappa_tol(cfg, &curve);
        let mut curve = detect_flat_pieces(&curve, kappa);
        curve.flat_arcs = match_flat_arcs(&curve.flat_arcs, &predictions, 0.1);
        for s in &curve.samples {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                eps, s.theta, s.point.x, s.point.y, s.value_used, s.value_err
            );
        }
        per_eps.push(WeakFlowEpsReport {
            eps,
            nonroundness: nonroundness(&curve),
            convexity_defect: curve.convexity_defect(),
            detected_normals_matching_prediction: curve
                .flat_arcs
                .iter()
                .filter(|a| a.matched_resonance.is_some())
                .count(),
            flat_arcs: curve.flat_arcs.clone(),
        });
        svgs.push((eps, curve_svg(&curve, &predictions, &format!("alpha=1, eps={eps}"))));
    }

    // expansion table at the first configured p (weak-flow amplitudes)
    let p0 = Vec2::from(cfg.experiment.p_list[0]);
    let expansion = expansion_residual(p0, &base, &cfg.experiment.eps_list, &cfg.solver)?;

    let mut summary = RunSummary::default();
    ensure_dirs(out, cfg.wants("svg"))?;
    if cfg.wants("csv") {
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("svg") {
        for (i, (_, svg)) in svgs.iter().enumerate() {
            write_text(
                &mut summary,
                out.join("plots").join(format!("weak_flow_{i}.svg")),
                svg,
            )?;
        }
    }
    if cfg.wants("json") {
        write_text(
            &mut summary,
            out.join("results.json"),
            &json_string(&WeakFlowDoc {
                meta: meta("experiment weak-flow", &base, cfg),
                predictions,
                per_eps,
                expansion,
            })?,
        )?;
    }
    Ok(summary)
}

// ------------------------------------------------------- strong-flow sweep

#[derive(Serialize)]
struct StrongFlowARow {
    amplitude: f64,
    max_lambda_over_a: f64,
    anisotropy_ratio: f64,
    flat_arcs: Vec<FlatArc>,
    nonroundness: f64,
}

#[derive(Serialize)]
struct StrongFlowDoc {
    meta: Meta,
    per_a: Vec<StrongFlowARow>,
}

/// Discount parameters and tolerances must track the amplitude: Hbar_A is
/// O(A^2), so absolute knobs are scaled by max(1, A) / max(1, A^2).
pub fn scaled_solver(cfg: &SolverConfig, a: f64) -> SolverConfig {
    let s = a.abs().max(1.0);
    SolverConfig {
        tol: cfg.tol * s * s,
        discount_eps_list: cfg.discount_eps_list.iter().map(|e| e * s).collect(),
        t_max: cfg.t_max / s,
        ..cfg.clone()
    }
}

pub fn cmd_experiment_strong_flow(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let base = cfg.flow.build()?;
    let quarter: Vec<f64> = (0..4)
        .map(|i| i as f64 * std::f64::consts::FRAC_PI_8)
        .collect();

    let mut per_a = Vec::new();
    let mut csv = String::from("A,p_x,p_y,alpha,alpha_err,lambda,lambda_over_A,xin_yu,l1_norm\n");
    let mut svgs = Vec::new();
    for &a in &cfg.experiment.a_list {
        let flow = base.clone().with_amplitude(a);
        let solver = scaled_solver(&cfg.solver, a);
        let bvs: Vec<BurningVelocityResult> =
            crate::parallel::try_map_indexed(quarter.len(), |i| {
                burning_velocity(Vec2::unit(quarter[i]), &flow, &solver)
            })?;
        for bv in &bvs {
            let l1 = bv.p.x.abs() + bv.p.y.abs();
            let xy = if a > 1.0 { a.ln() * bv.alpha / a } else { bv.alpha };
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                a,
                bv.p.x,
                bv.p.y,
                bv.alpha,
                bv.alpha_err,
                bv.lambda_p,
                bv.lambda_p / a,
                xy,
                l1
            );
        }
        let max_lambda_over_a = bvs
            .iter()
            .map(|b| b.lambda_p / a)
            .fold(0.0f64, f64::max);
        let anisotropy = bvs[2].alpha / bvs[0].alpha; // e_{pi/4} over e_0

        let curve = alpha_level_curve(&flow, &solver, cfg.experiment.n_angles)?;
        let kappa = derived_kappa_tol(cfg, &curve);
        let curve = detect_flat_pieces(&curve, kappa);
        per_a.push(StrongFlowARow {
            amplitude: a,
            max_lambda_over_a,
            anisotropy_ratio: anisotropy,
            flat_arcs: curve.flat_arcs.clone(),
            nonroundness: nonroundness(&curve),
        });
        svgs.push(curve_svg(&curve, &[], &format!("alpha=1, A={a}")));
    }

    let mut summary = RunSummary::default();
    ensure_dirs(out, cfg.wants("svg"))?;
    if cfg.wants("csv") {
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("svg") {
        for (i, svg) in svgs.iter().enumerate() {
            write_text(
                &mut summary,
                out.join("plots").join(format!("strong_flow_{i}.svg")),
                svg,
            )?;
        }
    }
    if cfg.wants("json") {
        write_text(
            &mut summary,
            out.join("results.json"),
            &json_string(&StrongFlowDoc {
                meta: meta("experiment strong-flow", &base, cfg),
                per_a,
            })?,
        )?;
    }
    Ok(summary)
}

// ----------------------------------------------- shear / cellular experiments

#[derive(Serialize)]
struct ShearRow {
    p: [f64; 2],
    oracle: f64,
    time_marching: f64,
    discounted: f64,
    rel_err_time_marching: f64,
    rel_err_discounted: f64,
}

/// Three-method comparison on the configured shear flow.
pub fn cmd_experiment_shear(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    if flow.shear_profile().is_none() {
        return Err(Error::InvalidConfig(
            "experiment shear requires a shear flow block".into(),
        ));
    }
    let rows: Vec<ShearRow> = crate::parallel::try_map_indexed(cfg.experiment.p_list.len(), |i| {
        let p = Vec2::from(cfg.experiment.p_list[i]);
        let oracle = shear_oracle_flow(p, &flow, cfg.experiment.quad_n)?;
        let tm = hbar_time_marching(p, &flow, &cfg.solver)?;
        let disc = hbar_discounted(p, &flow, &cfg.solver)?;
        let denom = oracle.value.abs().max(1e-12);
        Ok(ShearRow {
            p: p.into(),
            oracle: oracle.value,
            time_marching: tm.value,
            discounted: disc.value,
            rel_err_time_marching: (tm.value - oracle.value).abs() / denom,
            rel_err_discounted: (disc.value - oracle.value).abs() / denom,
        })
    })?;

    let mut summary = RunSummary::default();
    ensure_dirs(out, false)?;
    if cfg.wants("csv") {
        let mut csv = String::from(
            "p_x,p_y,hbar_oracle,hbar_time_marching,hbar_discounted,rel_err_time_marching,rel_err_discounted\n",
        );
        for r in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                r.p[0],
                r.p[1],
                r.oracle,
                r.time_marching,
                r.discounted,
                r.rel_err_time_marching,
                r.rel_err_discounted
            );
        }
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("json") {
        #[derive(Serialize)]
        struct Doc {
            meta: Meta,
            rows: Vec<ShearRow>,
        }
        write_text(
            &mut summary,
            out.join("results.json"),
            &json_string(&Doc {
                meta: meta("experiment shear", &flow, cfg),
                rows,
            })?,
        )?;
    }
    Ok(summary)
}

#[derive(Serialize)]
struct CellularDoc {
    meta: Meta,
    window: FlatnessWindow,
}

/// Flatness window of Hbar_A(1, .) around p2 = 0 on the configured flow.
pub fn cmd_experiment_cellular(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let flow = cfg.flow.build()?;
    let window = hbar_flatness_window(&flow, &cfg.solver, 1.0, 0.6, 12)?;

    let mut summary = RunSummary::default();
    ensure_dirs(out, false)?;
    if cfg.wants("csv") {
        let mut csv = String::from("p2,hbar,hbar_err,in_window\n");
        for row in &window.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                row.p2,
                row.value,
                row.error_estimate,
                row.p2.abs() <= window.half_width + 1e-12
            );
        }
        write_text(&mut summary, out.join("results.csv"), &csv)?;
    }
    if cfg.wants("json") {
        write_text(
            &mut summary,
            out.join("results.json"),
            &json_string(&CellularDoc {
                meta: meta("experiment cellular", &flow, cfg),
                window,
            })?,
        )?;
    }
    Ok(summary)
}

/// Rigidity sanity sweep used by the property suite and exposed for ad-hoc
/// inspection: quadrature vs Fourier line integrals on a direction sample.
pub fn rigidity_sweep(flow: &FlowField, directions: &[[i64; 2]], x0s: &[Vec2]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &d in directions {
        for &x0 in x0s {
            let check = line_integral_check(flow, d, x0)?;
            worst = worst.max(check.mismatch());
        }
    }
    Ok(worst)
}
