//! Large-time marching for the cell problem.
//!
//! Solves `w_t + H(p + Dw, x) = 0` from w = 0 with the monotone
//! Lax-Friedrichs scheme. The Cesaro slope `(w(t) - w(t - D)) / D` over a
//! 50-step window converges to -Hbar even when w itself keeps oscillating;
//! the run stops once the slope's spatial oscillation drops below the
//! configured tolerance.

use super::scheme::{mean, LfGrid};
use super::{HbarResult, MethodTag, SolverConfig};
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::vec2::Vec2;

const WINDOW_STEPS: usize = 50;

pub fn solve(p: Vec2, flow: &FlowField, cfg: &SolverConfig) -> Result<HbarResult> {
    let n = cfg.n;
    let grid = LfGrid::new(flow, n);
    let mut w = vec![0.0f64; n * n];
    let mut scratch = vec![0.0f64; n * n];
    let mut w_prev = w.clone();
    let mut t = 0.0f64;
    let mut t_prev = 0.0f64;
    let mut steps = 0usize;
    let mut sigx;
    let mut sigy;

    loop {
        let (sx, sy) = grid.sigma(p, &w, f64::INFINITY);
        sigx = sx;
        sigy = sy;
        let dt = cfg.dt_safety * grid.h / (sigx + sigy);
        for i in 0..n {
            for j in 0..n {
                scratch[i * n + j] = w[i * n + j]
                    - dt * grid.numerical_hamiltonian(p, &w, i, j, sigx, sigy, f64::INFINITY);
            }
        }
        std::mem::swap(&mut w, &mut scratch);
        t += dt;
        steps += 1;

        if steps % WINDOW_STEPS == 0 {
            let span = t - t_prev;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for (a, b) in w.iter().zip(&w_prev) {
                let s = (a - b) / span;
                lo = lo.min(s);
                hi = hi.max(s);
                sum += s;
            }
            let oscillation = hi - lo;
            let estimate = -sum / (n * n) as f64;
            if oscillation < cfg.tol {
                let residual = grid.residual(p, &w, sigx, sigy, estimate);
                return Ok(HbarResult {
                    p,
                    value: estimate,
                    method: MethodTag::TimeMarching,
                    residual,
                    error_estimate: oscillation,
                    iterations: steps,
                });
            }
            if t >= cfg.t_max {
                return Err(Error::NonConvergence {
                    message: format!(
                        "time marching hit t_max = {} before slope oscillation < {}",
                        cfg.t_max, cfg.tol
                    ),
                    best_estimate: estimate,
                    defect: oscillation,
                });
            }
            // keep w O(1): the slope is shift-invariant as long as the whole
            // window lives in one frame
            let shift = mean(&w);
            for v in &mut w {
                *v -= shift;
            }
            w_prev.copy_from_slice(&w);
            t_prev = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonconvergence_carries_best_estimate() {
        let flow = FlowField::cellular();
        let cfg = SolverConfig {
            n: 32,
            t_max: 0.05,
            tol: 1e-12,
            ..SolverConfig::default()
        };
        match solve(Vec2::new(1.0, 0.0), &flow, &cfg) {
            Err(Error::NonConvergence {
                best_estimate,
                defect,
                ..
            }) => {
                assert!(best_estimate.is_finite());
                assert!(defect > 0.0);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }
}
