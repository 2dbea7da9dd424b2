//! Effective burning velocity `alpha(p) = inf_{lambda > 0} (1 + Hbar(lambda p)) / lambda`,
//! its unit level curve, and the resonance scan predicting flat-piece normals.
//!
//! The objective `h(lambda)` has a unique minimizer, so the search is a
//! bracket (doubling/halving from the zero-flow-exact seed `1/|p|`) followed
//! by golden section. Level curves exploit degree-1 homogeneity: the point of
//! `{alpha = 1}` in direction theta is `e_theta / alpha(e_theta)`, one alpha
//! evaluation per angle.

use serde::{Deserialize, Serialize};

use crate::cell::{HbarResult, HbarSolver, SolverConfig};
use crate::curve::{CurveMeta, CurveSample, FlatArc, LevelCurve};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::search::{bracket_minimum, golden_section};
use crate::vec2::Vec2;

/// Relative finite-difference step for the optimality-gap diagnostic.
const FD_STEP_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BurningVelocityResult {
    pub p: Vec2,
    pub alpha: f64,
    /// The unique minimizer of (1 + Hbar(lambda p)) / lambda.
    pub lambda_p: f64,
    /// Final golden-section bracket around lambda_p.
    pub bracket: (f64, f64),
    /// Finite-difference defect of the first-order optimality condition
    /// `lambda d/dlambda Hbar(lambda p) = 1 + Hbar(lambda_p p)`.
    pub optimality_gap: f64,
    pub hbar_at_min: f64,
    /// Step used for the optimality finite difference.
    pub fd_step: f64,
    /// `lambda_p |d^2/dlambda^2 Hbar(lambda p)|`, the scale the gap bound is
    /// measured against.
    pub curvature_scale: f64,
    /// Propagated error estimate on alpha (solver error plus search slack).
    pub alpha_err: f64,
}

/// Minimizes `(1 + hbar(lambda p)) / lambda` with a caller-supplied Hbar
/// backend; this is what lets the oracle and the PDE solvers drive the same
/// search.
pub fn burning_velocity_with(
    mut hbar: impl FnMut(Vec2) -> Result<HbarResult>,
    p: Vec2,
    rel_tol: f64,
    momentum_cap: f64,
) -> Result<BurningVelocityResult> {
    if p.norm() == 0.0 {
        return Err(Error::InvalidArgument(
            "burning velocity is undefined at p = 0".into(),
        ));
    }
    let mut last_err = 0.0f64;
    let mut objective = |lambda: f64| -> Result<f64> {
        let r = hbar(p * lambda)?;
        last_err = r.error_estimate;
        Ok((1.0 + r.value) / lambda)
    };
    let seed = 1.0 / p.norm();
    // stay clear of the solver's momentum cap while leaving room to bracket
    let cap = 0.8 * momentum_cap / p.norm();
    let bracket = bracket_minimum(&mut objective, seed, cap, 40)?;
    let (lambda_p, h_min, final_bracket) = golden_section(&mut objective, bracket, rel_tol)?;
    let err_at_min = last_err;
    let hbar_at_min = h_min * lambda_p - 1.0;

    let fd_step = FD_STEP_FRACTION * lambda_p;
    let hi = hbar(p * (lambda_p + fd_step))?;
    let lo = hbar(p * (lambda_p - fd_step))?;
    let slope = (hi.value - lo.value) / (2.0 * fd_step);
    let second = (hi.value - 2.0 * hbar_at_min + lo.value) / (fd_step * fd_step);
    let optimality_gap = lambda_p * slope - (1.0 + hbar_at_min);
    let curvature_scale = lambda_p * second.abs();

    let width = final_bracket.1 - final_bracket.0;
    let search_slack = 0.5 * (second.abs() / lambda_p) * (0.5 * width) * (0.5 * width);
    Ok(BurningVelocityResult {
        p,
        alpha: (1.0 + hbar_at_min) / lambda_p,
        lambda_p,
        bracket: final_bracket,
        optimality_gap,
        hbar_at_min,
        fd_step,
        curvature_scale,
        alpha_err: err_at_min / lambda_p + search_slack,
    })
}

/// Burning velocity backed by the configured PDE solver.
pub fn burning_velocity(
    p: Vec2,
    flow: &FlowField,
    cfg: &SolverConfig,
) -> Result<BurningVelocityResult> {
    cfg.validate()?;
    let mut solver = HbarSolver::new(flow, cfg);
    burning_velocity_with(
        |q| solver.eval(q),
        p,
        cfg.rel_tol,
        cfg.momentum_cap(flow),
    )
}

/// Traces `{alpha = 1}` on a uniform angle grid; flat arcs are left empty
/// (fill them with [`crate::curve::detect_flat_pieces`]).
pub fn alpha_level_curve(
    flow: &FlowField,
    cfg: &SolverConfig,
    n_angles: usize,
) -> Result<LevelCurve> {
    cfg.validate()?;
    let meta = CurveMeta {
        kind: "alpha".to_string(),
        level: 1.0,
        flow_label: flow.label().to_string(),
        amplitude: flow.amplitude(),
        tol: cfg.tol,
        rel_tol: cfg.rel_tol,
        kappa_tol: None,
    };
    alpha_level_curve_with(
        || {
            let mut solver = HbarSolver::new(flow, cfg);
            move |q| solver.eval(q)
        },
        n_angles,
        cfg.rel_tol,
        cfg.momentum_cap(flow),
        meta,
    )
}

/// Level-curve tracer over an arbitrary Hbar backend; `make_eval` builds one
/// evaluator per angle so parallel chains stay independent.
pub fn alpha_level_curve_with<F, G>(
    make_eval: G,
    n_angles: usize,
    rel_tol: f64,
    momentum_cap: f64,
    meta: CurveMeta,
) -> Result<LevelCurve>
where
    F: FnMut(Vec2) -> Result<HbarResult>,
    G: Fn() -> F + Sync,
{
    if n_angles < 64 {
        return Err(Error::InvalidArgument(format!(
            "level-curve tracing needs at least 64 angles, got {n_angles}"
        )));
    }
    let samples = crate::parallel::try_map_indexed(n_angles, |j| {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n_angles as f64;
        let dir = Vec2::unit(theta);
        let eval = make_eval();
        let bv = burning_velocity_with(eval, dir, rel_tol, momentum_cap)?;
        Ok(CurveSample {
            theta,
            point: dir / bv.alpha,
            value_used: bv.alpha,
            value_err: bv.alpha_err,
        })
    })?;
    Ok(LevelCurve {
        samples,
        flat_arcs: Vec::new(),
        meta,
    })
}

/// A predicted flat-piece normal in the weak-flow regime: the direction
/// perpendicular to a primitive lattice direction carrying flow modes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonantDirection {
    /// Unit normal q = k_perp / |k| (family meaning +/- q).
    pub normal: Vec2,
    /// Primitive wave-vector of the mode family, canonicalized so the first
    /// nonzero component is positive.
    pub k_hat: [i32; 2],
    /// Largest |v_{m k_hat}| over the family; since k.v_k = 0, the mode is
    /// parallel to the normal and this is the line-integral obstruction size.
    pub strength: f64,
}

fn gcd(a: i32, b: i32) -> i32 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn canonical_primitive(k: [i32; 2]) -> [i32; 2] {
    let g = gcd(k[0], k[1]);
    let mut k = [k[0] / g, k[1] / g];
    if k[0] < 0 || (k[0] == 0 && k[1] < 0) {
        k = [-k[0], -k[1]];
    }
    k
}

/// Scans the flow's modes for primitive lattice directions with nonzero
/// coefficients; each yields a predicted flat-piece normal for weak flows.
/// The zero flow yields an empty list.
pub fn resonant_directions(flow: &FlowField) -> Vec<ResonantDirection> {
    use std::collections::BTreeMap;
    let mut families: BTreeMap<[i32; 2], f64> = BTreeMap::new();
    for (&k, &v) in flow.modes() {
        let k_hat = canonical_primitive(k);
        let strength = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let entry = families.entry(k_hat).or_insert(0.0);
        *entry = entry.max(strength);
    }
    let mut out: Vec<ResonantDirection> = families
        .into_iter()
        .filter(|&(_, s)| s > 0.0)
        .map(|(k_hat, strength)| {
            let k_vec = Vec2::new(k_hat[0] as f64, k_hat[1] as f64);
            let mut normal = k_vec.perp().normalized();
            if normal.x < 0.0 || (normal.x == 0.0 && normal.y < 0.0) {
                normal = -normal;
            }
            ResonantDirection {
                normal,
                k_hat,
                strength,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.strength
            .partial_cmp(&a.strength)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.k_hat.cmp(&b.k_hat))
    });
    out
}

/// Cross-references detected flat arcs against the resonance scan, marking
/// each arc whose normal matches a predicted family within `angle_tol`
/// radians. Mismatches stay unmarked; they are reported, not errors.
pub fn match_flat_arcs(
    arcs: &[FlatArc],
    predictions: &[ResonantDirection],
    angle_tol: f64,
) -> Vec<FlatArc> {
    arcs.iter()
        .map(|arc| {
            let mut arc = arc.clone();
            arc.matched_resonance = predictions
                .iter()
                .find(|r| {
                    let cosang = arc.normal.dot(r.normal).abs().min(1.0);
                    cosang.acos() <= angle_tol
                })
                .map(|r| r.k_hat);
            arc
        })
        .collect()
}

/// Quadrature and Fourier-side values of the rigidity line integral
/// `int_0^T D(q.V)(x0 + q t) dt` over one period of a rational direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineIntegralCheck {
    pub quadrature: Vec2,
    pub fourier: Vec2,
}

impl LineIntegralCheck {
    pub fn mismatch(&self) -> f64 {
        (self.quadrature - self.fourier).norm()
    }
}

/// Rigidity check along the rational unit direction `(a, b) / |(a, b)|` with
/// period `T = |(a, b)|`, so `T q` is a lattice vector. Only modes orthogonal
/// to (a, b) survive the period average on the Fourier side.
pub fn line_integral_check(
    flow: &FlowField,
    q_int: [i64; 2],
    x0: Vec2,
) -> Result<LineIntegralCheck> {
    if q_int == [0, 0] {
        return Err(Error::InvalidArgument(
            "direction integers must not both vanish".into(),
        ));
    }
    let g = gcd(q_int[0] as i32, q_int[1] as i32);
    if g != 1 {
        return Err(Error::InvalidArgument(format!(
            "direction ({}, {}) is not primitive (gcd {})",
            q_int[0], q_int[1], g
        )));
    }
    let qv = Vec2::new(q_int[0] as f64, q_int[1] as f64);
    let t_period = qv.norm();
    let q = qv / t_period;

    // highest frequency along the line is max |k.(a,b)| / T
    let max_freq = flow
        .modes()
        .map(|(k, _)| (k[0] as i64 * q_int[0] + k[1] as i64 * q_int[1]).unsigned_abs())
        .max()
        .unwrap_or(0);
    let n_samples = 64 * (max_freq as usize + 1);
    let mut quad = Vec2::ZERO;
    for i in 0..n_samples {
        let t = t_period * i as f64 / n_samples as f64;
        let x = x0 + q * t;
        let jac = flow.velocity_gradient(x);
        // D(q.V) has components sum_i q_i dV_i/dx_j
        quad = quad
            + Vec2::new(
                q.x * jac[0][0] + q.y * jac[1][0],
                q.x * jac[0][1] + q.y * jac[1][1],
            ) * (t_period / n_samples as f64);
    }

    let mut fourier = Vec2::ZERO;
    let tau = 2.0 * std::f64::consts::PI;
    for (&k, &v) in flow.modes() {
        if k[0] as i64 * q_int[0] + k[1] as i64 * q_int[1] != 0 {
            continue;
        }
        let qdv = q.x * v[0] + q.y * v[1];
        let phase = tau * (k[0] as f64 * x0.x + k[1] as f64 * x0.y);
        let factor = num_complex::Complex64::new(0.0, tau)
            * qdv
            * num_complex::Complex64::new(phase.cos(), phase.sin())
            * t_period;
        fourier = fourier + Vec2::new((factor * k[0] as f64).re, (factor * k[1] as f64).re);
    }
    fourier = fourier * flow.amplitude();

    Ok(LineIntegralCheck {
        quadrature: quad,
        fourier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flow_burning_velocity_analytic() {
        let flow = FlowField::zero();
        let cfg = SolverConfig {
            n: 32,
            rel_tol: 1e-6,
            ..SolverConfig::default()
        };
        let r = burning_velocity(Vec2::new(3.0, 4.0), &flow, &cfg).unwrap();
        assert!((r.alpha - 10.0).abs() < 1e-4, "alpha {}", r.alpha);
        assert!((r.lambda_p - 0.2).abs() < 1e-4, "lambda {}", r.lambda_p);
        assert_eq!(r.alpha, (1.0 + r.hbar_at_min) / r.lambda_p);
    }

    #[test]
    fn zero_momentum_rejected() {
        let flow = FlowField::zero();
        let cfg = SolverConfig::default();
        assert!(burning_velocity(Vec2::ZERO, &flow, &cfg).is_err());
    }

    #[test]
    fn shear_oracle_backend_alpha_on_vertical_ray() {
        // p = (0, 1): Hbar(lambda p) = lambda^2, alpha = 2, lambda_p = 1
        let flow = FlowField::shear_sin();
        let r = burning_velocity_with(
            |q| crate::cell::shear_oracle_flow(q, &flow, 2048),
            Vec2::new(0.0, 1.0),
            1e-6,
            10.0,
        )
        .unwrap();
        assert!((r.alpha - 2.0).abs() < 1e-5, "alpha {}", r.alpha);
        assert!((r.lambda_p - 1.0).abs() < 1e-4);
    }

    #[test]
    fn homogeneity_via_oracle_backend() {
        let flow = FlowField::shear_sin();
        let p = Vec2::new(0.6, 0.8);
        let eval = |q: Vec2| crate::cell::shear_oracle_flow(q, &flow, 1024);
        let r1 = burning_velocity_with(eval, p, 1e-7, 10.0).unwrap();
        let r2 = burning_velocity_with(eval, p * 2.0, 1e-7, 10.0).unwrap();
        assert!((r2.alpha - 2.0 * r1.alpha).abs() < 1e-5 * r1.alpha);
        assert!((r2.lambda_p - 0.5 * r1.lambda_p).abs() < 1e-4 * r1.lambda_p);
    }

    #[test]
    fn resonance_scan_shear_and_cellular() {
        let shear = resonant_directions(&FlowField::shear_sin());
        assert_eq!(shear.len(), 1);
        assert_eq!(shear[0].k_hat, [0, 1]);
        assert!((shear[0].normal - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((shear[0].strength - 0.5).abs() < 1e-15);

        let cell = resonant_directions(&FlowField::cellular());
        assert_eq!(cell.len(), 2);
        let mut normals: Vec<[i32; 2]> = cell.iter().map(|r| r.k_hat).collect();
        normals.sort();
        assert_eq!(normals, vec![[1, -1], [1, 1]]);
        for r in &cell {
            // normals are the diagonals
            assert!((r.normal.x.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }

        assert!(resonant_directions(&FlowField::zero()).is_empty());
    }

    #[test]
    fn line_integral_shear_hand_values() {
        let flow = FlowField::shear_sin();
        // x2 = 0.25: integrand is (0, 2 pi cos(pi/2)) = 0
        let r = line_integral_check(&flow, [1, 0], Vec2::new(0.0, 0.25)).unwrap();
        assert!(r.quadrature.norm() < 1e-10, "{:?}", r.quadrature);
        assert!(r.mismatch() < 1e-10);
        // x2 = 0: integrand is (0, 2 pi)
        let r0 = line_integral_check(&flow, [1, 0], Vec2::new(0.0, 0.0)).unwrap();
        assert!((r0.quadrature - Vec2::new(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-10);
        assert!(r0.mismatch() < 1e-10);
    }

    #[test]
    fn line_integral_zero_flow_and_cellular_resonance() {
        let r = line_integral_check(&FlowField::zero(), [2, 1], Vec2::new(0.1, 0.9)).unwrap();
        assert!(r.quadrature.norm() < 1e-12 && r.fourier.norm() == 0.0);

        // cellular flow resonates along (1, 1) via the k = (1, -1) modes
        let flow = FlowField::cellular();
        let r = line_integral_check(&flow, [1, 1], Vec2::new(0.1, 0.0)).unwrap();
        assert!(r.fourier.norm() > 1.0, "expected obstruction, {:?}", r.fourier);
        assert!(r.mismatch() < 1e-8, "mismatch {}", r.mismatch());
    }

    #[test]
    fn non_primitive_direction_rejected() {
        let flow = FlowField::shear_sin();
        assert!(line_integral_check(&flow, [2, 2], Vec2::ZERO).is_err());
        assert!(line_integral_check(&flow, [0, 0], Vec2::ZERO).is_err());
    }
}
