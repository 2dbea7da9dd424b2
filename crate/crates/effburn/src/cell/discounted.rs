//! Discounted approximation of the cell problem.
//!
//! For each discount parameter eps the monotone Lax-Friedrichs discretization
//! of `eps v + H(p + Dv, x) = 0` is driven to its fixed point by damped value
//! iteration in Gauss-Seidel ordering (four alternating sweep directions per
//! set). The dissipation enters the cell update linearly in v_ij, so each
//! visit solves its cell equation exactly. A mean-shift step after every
//! sweep set removes the constant mode, which the discount term alone would
//! relax only at rate eps.
//!
//! `-eps v^eps -> Hbar(p)` with an O(eps) bias; the reported value is the
//! Richardson extrapolation over the last two discount parameters and the
//! error estimate is the spread between the last two extrapolants.

use super::scheme::{mean, LfGrid, SIGMA_FLOOR};
use super::{HbarResult, MethodTag, SolverConfig};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::vec2::Vec2;

/// Fraction of the reporting tolerance the inner fixed-point iteration must
/// reach, so the iteration error never dominates the discount bias.
const INNER_TOL_FRACTION: f64 = 0.05;

pub fn solve(
    p: Vec2,
    flow: &FlowField,
    cfg: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<(HbarResult, Vec<f64>)> {
    let n = cfg.n;
    let grid = LfGrid::new(flow, n);
    let mut total_sweeps = 0usize;
    let mut v = match warm {
        Some(w) if w.len() == n * n => w.to_vec(),
        _ => cascade_init(p, flow, cfg, &mut total_sweeps)?,
    };
    let mut estimates = Vec::with_capacity(cfg.discount_eps_list.len());
    let mut prev_eps: Option<f64> = None;
    let mut last_sig = (SIGMA_FLOOR, SIGMA_FLOOR);

    for &eps in &cfg.discount_eps_list {
        if let Some(pe) = prev_eps {
            // v^eps ~ -Hbar/eps: rescale the previous corrector
            let scale = pe / eps;
            for x in &mut v {
                *x *= scale;
            }
        }
        prev_eps = Some(eps);
        let sweeps = fixed_point(&grid, p, eps, cfg, &mut v)?;
        total_sweeps += sweeps.0;
        last_sig = sweeps.1;
        estimates.push(-eps * mean(&v));
    }

    let (value, error_estimate) = extrapolate(&cfg.discount_eps_list, &estimates);
    let residual = grid.residual(p, &v, last_sig.0, last_sig.1, value);
    Ok((
        HbarResult {
            p,
            value,
            method: MethodTag::Discounted,
            residual,
            error_estimate,
            iterations: total_sweeps,
        },
        v,
    ))
}

/// Cold starts walk the corrector up from coarse grids: the smooth content
/// converges for a fraction of the fine-grid cost and the fine sweeps only
/// polish high frequencies. The fixed point at the target resolution is
/// unchanged; this is pure initialization.
fn cascade_init(
    p: Vec2,
    flow: &FlowField,
    cfg: &SolverConfig,
    total_sweeps: &mut usize,
) -> Result<Vec<f64>> {
    let mut sizes = Vec::new();
    let mut m = cfg.n;
    while m > 32 && m % 2 == 0 {
        m /= 2;
        sizes.push(m);
    }
    sizes.reverse();
    let eps0 = cfg.discount_eps_list[0];
    let mut guess: Option<Vec<f64>> = None;
    for &s in &sizes {
        let sub_cfg = SolverConfig {
            n: s,
            tol: cfg.tol * 4.0,
            ..cfg.clone()
        };
        let grid_s = LfGrid::new(flow, s);
        let mut vs = match guess {
            Some(coarse) => prolongate(&coarse, s / 2),
            None => vec![0.0; s * s],
        };
        let (sweeps, _) = fixed_point(&grid_s, p, eps0, &sub_cfg, &mut vs)?;
        *total_sweeps += sweeps;
        guess = Some(vs);
    }
    Ok(match guess {
        Some(coarse) => prolongate(&coarse, cfg.n / 2),
        None => vec![0.0; cfg.n * cfg.n],
    })
}

/// Periodic bilinear prolongation from an m x m grid to 2m x 2m.
fn prolongate(coarse: &[f64], m: usize) -> Vec<f64> {
    let n = 2 * m;
    let mut fine = vec![0.0; n * n];
    for i in 0..m {
        let ip = (i + 1) % m;
        for j in 0..m {
            let jp = (j + 1) % m;
            let c00 = coarse[i * m + j];
            let c10 = coarse[ip * m + j];
            let c01 = coarse[i * m + jp];
            let c11 = coarse[ip * m + jp];
            fine[(2 * i) * n + 2 * j] = c00;
            fine[(2 * i + 1) * n + 2 * j] = 0.5 * (c00 + c10);
            fine[(2 * i) * n + 2 * j + 1] = 0.5 * (c00 + c01);
            fine[(2 * i + 1) * n + 2 * j + 1] = 0.25 * (c00 + c10 + c01 + c11);
        }
    }
    fine
}

/// Richardson extrapolation of `-eps v^eps` assuming a leading O(eps) bias.
/// With a single discount parameter the raw estimate is returned and the
/// parameter itself serves as the (crude) error scale.
fn extrapolate(eps_list: &[f64], estimates: &[f64]) -> (f64, f64) {
    let m = estimates.len();
    if m == 1 {
        return (estimates[0], eps_list[0]);
    }
    let extrap = |j: usize| {
        let (e0, e1) = (eps_list[j - 1], eps_list[j]);
        (e0 * estimates[j] - e1 * estimates[j - 1]) / (e0 - e1)
    };
    let last = extrap(m - 1);
    let err = if m >= 3 {
        (last - extrap(m - 2)).abs()
    } else {
        (last - estimates[m - 1]).abs()
    };
    (last, err)
}

/// Damped Gauss-Seidel value iteration for one discount parameter. Returns
/// the sweep-set count and the final dissipation pair.
///
/// In-place sweeps pair freshly updated cells with stale neighbors, which
/// can fake gradients far beyond anything the solution supports; with a
/// quadratic Hamiltonian that feedback has no cell-level fixed point and
/// diverges. All gradient arguments are therefore clamped to the a priori
/// bound from [`LfGrid::gradient_bound`], which converged correctors never
/// reach.
fn fixed_point(
    grid: &LfGrid,
    p: Vec2,
    eps: f64,
    cfg: &SolverConfig,
    v: &mut [f64],
) -> Result<(usize, (f64, f64))> {
    let n = grid.n;
    let inv2h = 0.5 / grid.h;
    let omega = cfg.damping;
    // tolerance on the value -eps mean(v) contributed by unconverged iteration
    let inner_tol = cfg.tol * INNER_TOL_FRACTION;
    let q_clamp = grid.gradient_bound(p);
    let mut snapshot = v.to_vec();
    let (mut sigx, mut sigy) = grid.sigma(p, v, q_clamp);
    // block-averaged history of the value estimate; single-sweep deltas
    // underestimate slowly mixing transport modes
    const BLOCK: usize = 10;
    let mut g_hist: Vec<f64> = Vec::new();
    let mut prev_delta = f64::INFINITY;
    let mut fast_streak = 0usize;

    for sweep_set in 1..=cfg.max_sweeps {
        snapshot.copy_from_slice(v);
        let denom = eps + (sigx + sigy) / grid.h;
        // the dissipation estimate for the next set is tracked inside the
        // passes (the central differences are already in hand); at the fixed
        // point this equals the settled-state estimate
        let mut seen_sx = 0.0f64;
        let mut seen_sy = 0.0f64;
        for pass in 0..4 {
            let (xrev, yrev) = (pass & 1 == 1, pass & 2 == 2);
            for ii in 0..n {
                let i = if xrev { n - 1 - ii } else { ii };
                let (ie, iw) = (grid.up[i], grid.dn[i]);
                for jj in 0..n {
                    let j = if yrev { n - 1 - jj } else { jj };
                    let (jn, js) = (grid.up[j], grid.dn[j]);
                    let idx = i * n + j;
                    let e = v[ie * n + j];
                    let w = v[iw * n + j];
                    let no = v[i * n + jn];
                    let so = v[i * n + js];
                    let qx = (p.x + (e - w) * inv2h).clamp(-q_clamp, q_clamp);
                    let qy = (p.y + (no - so) * inv2h).clamp(-q_clamp, q_clamp);
                    let vx = grid.velx[idx];
                    let vy = grid.vely[idx];
                    seen_sx = seen_sx.max((2.0 * qx + vx).abs());
                    seen_sy = seen_sy.max((2.0 * qy + vy).abs());
                    let ham = qx * qx + qy * qy + vx * qx + vy * qy;
                    let target = (sigx * (e + w) * inv2h + sigy * (no + so) * inv2h - ham) / denom;
                    v[idx] += omega * (target - v[idx]);
                }
            }
        }
        // remove the constant mode exactly: shifting v by s leaves the
        // numerical Hamiltonian unchanged and moves the mean residual by eps*s
        let mut res_sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                res_sum +=
                    eps * v[i * n + j] + grid.numerical_hamiltonian(p, v, i, j, sigx, sigy, q_clamp);
            }
        }
        let shift = -res_sum / (eps * (n * n) as f64);
        for x in v.iter_mut() {
            *x += shift;
        }

        let mut delta = 0.0f64;
        for (a, b) in v.iter().zip(&snapshot) {
            let d = (a - b).abs();
            if !d.is_finite() {
                delta = f64::INFINITY;
                break;
            }
            delta = delta.max(d);
        }
        if !delta.is_finite() {
            return Err(Error::NonConvergence {
                message: format!("discounted value iteration (eps = {eps}) diverged"),
                best_estimate: f64::NAN,
                defect: delta,
            });
        }

        // dissipation tracks the current discrete gradient, like the
        // time-marching scheme; a dead zone here would park sigma above the
        // state-determined value and shift the fixed point
        let nx = (crate::cell::scheme::SIGMA_SAFETY * seen_sx).max(crate::cell::scheme::SIGMA_FLOOR);
        let ny = (crate::cell::scheme::SIGMA_SAFETY * seen_sy).max(crate::cell::scheme::SIGMA_FLOOR);
        let sigma_moved = (nx - sigx).abs() > 1e-3 * sigx || (ny - sigy).abs() > 1e-3 * sigy;
        sigx = nx;
        sigy = ny;

        g_hist.push(-eps * mean(v));
        let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !sigma_moved {
            if delta <= 1e-14 * scale {
                return Ok((sweep_set, (sigx, sigy)));
            }
            // fast path on the value drift itself: single-set dips are noisy,
            // so demand three consecutive sets of clear contraction; slow
            // modes with rho near 1 wait for the block estimator below
            let m = g_hist.len();
            if m >= 4 {
                let dg = (g_hist[m - 1] - g_hist[m - 2]).abs();
                let dg_prev = (g_hist[m - 2] - g_hist[m - 3]).abs();
                let ok = if dg == 0.0 {
                    true
                } else if dg_prev > 0.0 {
                    let rho = dg / dg_prev;
                    rho <= 0.95 && dg * rho / (1.0 - rho) + dg < 0.5 * inner_tol
                } else {
                    false
                };
                if ok {
                    fast_streak += 1;
                    if fast_streak >= 3 {
                        return Ok((sweep_set, (sigx, sigy)));
                    }
                } else {
                    fast_streak = 0;
                }
            }
            if g_hist.len() > 2 * BLOCK {
                let m = g_hist.len();
                let dg = (g_hist[m - 1] - g_hist[m - 1 - BLOCK]).abs();
                let dg_prev = (g_hist[m - 1 - BLOCK] - g_hist[m - 1 - 2 * BLOCK]).abs();
                if dg == 0.0 {
                    return Ok((sweep_set, (sigx, sigy)));
                }
                if dg_prev > 0.0 {
                    let rho = (dg / dg_prev).clamp(0.0, 0.999);
                    let err = dg * rho / (1.0 - rho) + dg;
                    if err < inner_tol {
                        return Ok((sweep_set, (sigx, sigy)));
                    }
                }
            }
        }
        prev_delta = delta.max(1e-300);
    }
    Err(Error::NonConvergence {
        message: format!(
            "discounted value iteration (eps = {eps}) exceeded {} sweep sets",
            cfg.max_sweeps
        ),
        best_estimate: -eps * mean(v),
        defect: prev_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flow_fixed_point_is_exact() {
        let flow = FlowField::zero();
        let cfg = SolverConfig {
            n: 32,
            ..SolverConfig::default()
        };
        let (r, v) = solve(Vec2::new(2.0, 0.0), &flow, &cfg, None).unwrap();
        assert!((r.value - 4.0).abs() <= cfg.tol, "value {}", r.value);
        // v^eps = -|p|^2 / eps for the last eps in the list
        let eps = *cfg.discount_eps_list.last().unwrap();
        let expected = -4.0 / eps;
        for x in v {
            assert!(
                (x - expected).abs() < cfg.tol / eps,
                "corrector {x} vs {expected}"
            );
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let flow = FlowField::cellular();
        let cfg = SolverConfig {
            n: 32,
            tol: 1e-5,
            ..SolverConfig::default()
        };
        let p = Vec2::new(1.0, 0.3);
        let (cold, corr) = solve(p, &flow, &cfg, None).unwrap();
        let (warm, _) = solve(p, &flow, &cfg, Some(&corr)).unwrap();
        let budget = cold.error_estimate + warm.error_estimate + cfg.tol;
        assert!(
            (cold.value - warm.value).abs() <= budget,
            "cold {} warm {} budget {}",
            cold.value,
            warm.value,
            budget
        );
    }
}
