//! Closed-form effective Hamiltonian for shear flows V = (v(x2), 0).
//!
//! Hbar(p) = p1^2 + h(p) where h sits on the plateau h = M(p1) = max_y p1 v(y)
//! whenever |p2| <= W(p1) = int_0^1 sqrt(M(p1) - p1 v(y)) dy, and otherwise
//! solves the strictly increasing equation |p2| = int_0^1 sqrt(h - p1 v) dy.
//! The plateau integrand has square-root zeros at the maximizers of p1 v, so
//! the quadrature refines the mesh locally there.

use super::{HbarResult, MethodTag};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::search::bisect_increasing;
use crate::vec2::Vec2;

/// Subdivision factor inside the refinement window around each maximizer.
const REFINE_FACTOR: usize = 16;
/// Refinement window half-width in base cells.
const REFINE_CELLS: f64 = 2.0;
/// Absolute bisection tolerance on h.
const BISECT_TOL: f64 = 1e-12;

/// Oracle on 1-d periodic samples of the effective profile `A v` at
/// y_i = i / len. Off-sample values are linearly interpolated.
pub fn shear_oracle(p: Vec2, v_samples: &[f64], quad_n: usize) -> Result<HbarResult> {
    if v_samples.len() < 8 {
        return Err(Error::InvalidArgument(
            "need at least 8 profile samples".into(),
        ));
    }
    let m = v_samples.len();
    let interp = move |y: f64| {
        let t = (y - y.floor()) * m as f64;
        let i = (t as usize) % m;
        let frac = t - t.floor();
        v_samples[i] * (1.0 - frac) + v_samples[(i + 1) % m] * frac
    };
    shear_oracle_fn(p, interp, quad_n)
}

/// Oracle for a flow known to be a shear; rejects anything else.
pub fn shear_oracle_flow(p: Vec2, flow: &FlowField, quad_n: usize) -> Result<HbarResult> {
    let profile = flow.shear_profile().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "flow '{}' is not a shear flow; the oracle applies to V = (v(x2), 0) only",
            flow.label()
        ))
    })?;
    shear_oracle_fn(p, profile, quad_n)
}

/// Oracle on an arbitrary 1-periodic profile closure `y -> A v(y)`.
pub fn shear_oracle_fn(p: Vec2, v: impl Fn(f64) -> f64, quad_n: usize) -> Result<HbarResult> {
    if quad_n < 256 {
        return Err(Error::InvalidArgument(format!(
            "quadrature resolution must be at least 256, got {quad_n}"
        )));
    }
    let g = |y: f64| p.x * v(y);
    let (max_val, maximizers) = profile_max(&g, quad_n);

    let h_for = |quad: usize| -> (f64, f64, usize) {
        let width = |h: f64| sqrt_integral(&g, h, &maximizers, quad);
        let plateau_width = width(max_val);
        if p.y.abs() <= plateau_width {
            (max_val, 0.0, 0)
        } else {
            // |p2| = W(h) is strictly increasing for h > M; expand then bisect
            let target = p.y.abs();
            let mut hi = max_val + target * target + 1.0;
            let mut expansions = 0;
            while width(hi) < target {
                hi = max_val + (hi - max_val) * 2.0;
                expansions += 1;
                if expansions > 200 {
                    break;
                }
            }
            let tol = BISECT_TOL * (1.0 + hi.abs());
            let h = bisect_increasing(|x| width(x) - target, max_val, hi, tol);
            (h, (width(h) - target).abs(), 1)
        }
    };

    let (h, residual, _) = h_for(quad_n);
    let (h_coarse, _, _) = h_for(quad_n / 2);
    let value = p.x * p.x + h;
    Ok(HbarResult {
        p,
        value,
        method: MethodTag::ShearOracle,
        residual,
        error_estimate: (h - h_coarse).abs() + BISECT_TOL * (1.0 + value.abs()),
        iterations: 0,
    })
}

/// Plateau half-width W(p1) = int_0^1 sqrt(M(p1) - p1 v) dy for a shear
/// profile, exposed for the analytic flat-piece checks.
pub fn shear_plateau_width(p1: f64, v: impl Fn(f64) -> f64, quad_n: usize) -> f64 {
    let g = |y: f64| p1 * v(y);
    let (max_val, maximizers) = profile_max(&g, quad_n);
    sqrt_integral(&g, max_val, &maximizers, quad_n)
}

/// Max of g over the period plus the locations attaining it, each refined by
/// a local golden-section pass so the plateau level is tight.
fn profile_max(g: &impl Fn(f64) -> f64, quad_n: usize) -> (f64, Vec<f64>) {
    let mut best = f64::NEG_INFINITY;
    for i in 0..quad_n {
        best = best.max(g(i as f64 / quad_n as f64));
    }
    let cell = 1.0 / quad_n as f64;
    let near_tol = 1e-9 * (1.0 + best.abs());
    let mut maximizers = Vec::new();
    let mut refined_max = best;
    let mut i = 0;
    while i < quad_n {
        let y = i as f64 / quad_n as f64;
        if g(y) >= best - near_tol {
            let (ym, gm) = golden_max(g, y - cell, y + cell);
            refined_max = refined_max.max(gm);
            maximizers.push(ym.rem_euclid(1.0));
            // skip the rest of this contiguous near-max run
            while i + 1 < quad_n && g((i + 1) as f64 / quad_n as f64) >= best - near_tol {
                i += 1;
            }
        }
        i += 1;
    }
    (refined_max, maximizers)
}

fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - R * (b - a);
    let mut x2 = a + R * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..80 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - R * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + R * (b - a);
            f2 = g(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Composite midpoint rule for int_0^1 sqrt(max(h - g, 0)) dy with
/// REFINE_FACTOR-fold subdivision of base cells near the maximizers of g.
fn sqrt_integral(g: &impl Fn(f64) -> f64, h: f64, maximizers: &[f64], quad_n: usize) -> f64 {
    let cell = 1.0 / quad_n as f64;
    let window = REFINE_CELLS * cell;
    let near_max = |y: f64| {
        maximizers.iter().any(|&ym| {
            let d = (y - ym).rem_euclid(1.0);
            d <= window || d >= 1.0 - window
        })
    };
    let integrand = |y: f64| (h - g(y)).max(0.0).sqrt();
    let mut total = 0.0;
    for i in 0..quad_n {
        let left = i as f64 * cell;
        let center = left + 0.5 * cell;
        if near_max(center) {
            let sub = cell / REFINE_FACTOR as f64;
            for s in 0..REFINE_FACTOR {
                total += integrand(left + (s as f64 + 0.5) * sub) * sub;
            }
        } else {
            total += integrand(center) * cell;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn sin_profile(y: f64) -> f64 {
        (TAU * y).sin()
    }

    /// int_0^1 sqrt(1 - sin(2 pi y)) dy = 2 sqrt(2) / pi.
    const SIN_PLATEAU: f64 = 0.900_316_316_157_106_2;

    #[test]
    fn plateau_width_matches_closed_form() {
        let w = shear_plateau_width(1.0, sin_profile, 4096);
        assert!(
            (w - SIN_PLATEAU).abs() < 2e-5,
            "W = {w}, closed form {SIN_PLATEAU}"
        );
    }

    #[test]
    fn sin_shear_at_p10_is_two() {
        let r = shear_oracle_fn(Vec2::new(1.0, 0.0), sin_profile, 4096).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "value {}", r.value);
    }

    #[test]
    fn plateau_holds_up_to_width() {
        for p2 in [0.2, 0.5, 0.85] {
            let r = shear_oracle_fn(Vec2::new(1.0, p2), sin_profile, 4096).unwrap();
            assert!((r.value - 2.0).abs() < 1e-6, "value {} at p2 = {p2}", r.value);
        }
    }

    #[test]
    fn off_plateau_solves_implicit_equation() {
        // p = (0, 1): M = 0, W = 0, |p2| = sqrt(h) gives h = 1
        let r = shear_oracle_fn(Vec2::new(0.0, 1.0), sin_profile, 2048).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "value {}", r.value);
    }

    #[test]
    fn zero_profile_reduces_to_p_squared() {
        let r = shear_oracle_fn(Vec2::new(0.7, -1.3), |_| 0.0, 1024).unwrap();
        assert!((r.value - (0.49 + 1.69)).abs() < 1e-10);
    }

    #[test]
    fn sample_based_oracle_close_to_exact() {
        let samples: Vec<f64> = (0..8192).map(|i| sin_profile(i as f64 / 8192.0)).collect();
        let exact = shear_oracle_fn(Vec2::new(1.0, 1.2), sin_profile, 2048).unwrap();
        let approx = shear_oracle(Vec2::new(1.0, 1.2), &samples, 2048).unwrap();
        assert!((exact.value - approx.value).abs() < 1e-5);
    }

    #[test]
    fn non_shear_flow_rejected() {
        let flow = FlowField::cellular();
        assert!(shear_oracle_flow(Vec2::new(1.0, 0.0), &flow, 1024).is_err());
    }

    #[test]
    fn coarse_quadrature_rejected() {
        assert!(shear_oracle_fn(Vec2::new(1.0, 0.0), sin_profile, 128).is_err());
    }
}
