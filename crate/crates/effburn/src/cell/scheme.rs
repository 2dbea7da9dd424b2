//! Shared Lax-Friedrichs machinery for the two cell-problem solvers.

use crate::flow::FlowField;
use crate::vec2::Vec2;

/// Safety factor on the adaptive per-axis dissipation.
pub const SIGMA_SAFETY: f64 = 1.2;

/// Floor keeping time steps finite in degenerate cases (zero flow at p = 0).
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Precomputed grid data for one solve: effective velocity samples and
/// wrapped neighbor indices.
pub struct LfGrid {
    pub n: usize,
    pub h: f64,
    pub velx: Vec<f64>,
    pub vely: Vec<f64>,
    /// i+1 and i-1 modulo n.
    pub up: Vec<usize>,
    pub dn: Vec<usize>,
}

impl LfGrid {
    pub fn new(flow: &FlowField, n: usize) -> Self {
        let h = 1.0 / n as f64;
        let mut velx = vec![0.0; n * n];
        let mut vely = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = flow.velocity(Vec2::new(i as f64 * h, j as f64 * h));
                velx[i * n + j] = v.x;
                vely[i * n + j] = v.y;
            }
        }
        let up = (0..n).map(|i| (i + 1) % n).collect();
        let dn = (0..n).map(|i| (i + n - 1) % n).collect();
        LfGrid {
            n,
            h,
            velx,
            vely,
            up,
            dn,
        }
    }

    /// A priori bound on |p + Dv| for solutions of the cell problem at this
    /// momentum: |q|^2 <= Hbar + vmax |q| with Hbar <= |p|^2 + vmax |p|.
    /// Iterations clamp their gradient arguments to 1.5x this (plus slack),
    /// which leaves converged solutions untouched but keeps the quadratic
    /// Hamiltonian Lipschitz over mid-sweep transients.
    pub fn gradient_bound(&self, p: Vec2) -> f64 {
        let vmax = self
            .velx
            .iter()
            .zip(&self.vely)
            .map(|(x, y)| x.hypot(*y))
            .fold(0.0f64, f64::max);
        let h_ub = p.norm_sq() + vmax * p.norm();
        let b = 0.5 * (vmax + (vmax * vmax + 4.0 * h_ub).sqrt());
        1.5 * b + 1.0
    }

    /// Per-axis dissipation bound from the current iterate:
    /// max over the grid of |2 (p_i + D_i w) + A V_i|, with the safety
    /// factor. Gradient arguments are clamped to `q_clamp`.
    pub fn sigma(&self, p: Vec2, w: &[f64], q_clamp: f64) -> (f64, f64) {
        let n = self.n;
        let inv2h = 0.5 / self.h;
        let mut sx = 0.0f64;
        let mut sy = 0.0f64;
        for i in 0..n {
            let (ie, iw) = (self.up[i], self.dn[i]);
            for j in 0..n {
                let (jn, js) = (self.up[j], self.dn[j]);
                let idx = i * n + j;
                let qx = (p.x + (w[ie * n + j] - w[iw * n + j]) * inv2h).clamp(-q_clamp, q_clamp);
                let qy = (p.y + (w[i * n + jn] - w[i * n + js]) * inv2h).clamp(-q_clamp, q_clamp);
                sx = sx.max((2.0 * qx + self.velx[idx]).abs());
                sy = sy.max((2.0 * qy + self.vely[idx]).abs());
            }
        }
        (
            (SIGMA_SAFETY * sx).max(SIGMA_FLOOR),
            (SIGMA_SAFETY * sy).max(SIGMA_FLOOR),
        )
    }

    /// Lax-Friedrichs numerical Hamiltonian at one cell:
    /// H(p + Dw_central, x) minus the per-axis dissipation terms, with the
    /// gradient arguments clamped to `q_clamp`.
    #[inline]
    pub fn numerical_hamiltonian(
        &self,
        p: Vec2,
        w: &[f64],
        i: usize,
        j: usize,
        sigx: f64,
        sigy: f64,
        q_clamp: f64,
    ) -> f64 {
        let n = self.n;
        let inv2h = 0.5 / self.h;
        let idx = i * n + j;
        let e = w[self.up[i] * n + j];
        let ww = w[self.dn[i] * n + j];
        let no = w[i * n + self.up[j]];
        let so = w[i * n + self.dn[j]];
        let w0 = w[idx];
        let qx = (p.x + (e - ww) * inv2h).clamp(-q_clamp, q_clamp);
        let qy = (p.y + (no - so) * inv2h).clamp(-q_clamp, q_clamp);
        let ham = qx * qx + qy * qy + self.velx[idx] * qx + self.vely[idx] * qy;
        ham - sigx * (e + ww - 2.0 * w0) * inv2h - sigy * (no + so - 2.0 * w0) * inv2h
    }

    /// Max over the grid of |numerical Hamiltonian - value|; the residual
    /// reported with every solve, consistent with the scheme's own upwinding
    /// and deliberately unclamped so it cannot hide defects.
    pub fn residual(&self, p: Vec2, w: &[f64], sigx: f64, sigy: f64, value: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let ham = self.numerical_hamiltonian(p, w, i, j, sigx, sigy, f64::INFINITY);
                worst = worst.max((ham - value).abs());
            }
        }
        worst
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
