//! Real trigonometric polynomials on the 2-torus.
//!
//! Finite sums `f(x) = sum_k c_k e^{2 pi i k.x}` with conjugate-symmetric
//! coefficients, closed under products and derivatives. The weak-flow
//! correctors and their residual algebra are exact in this representation;
//! only the final sup-norm is read off a sampling grid.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::flow::FlowField;
use crate::vec2::Vec2;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, Default)]
pub struct TrigPoly {
    coeffs: BTreeMap<[i32; 2], Complex64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = TrigPoly::zero();
        if c != 0.0 {
            p.coeffs.insert([0, 0], Complex64::new(c, 0.0));
        }
        p
    }

    pub fn from_coeffs(coeffs: BTreeMap<[i32; 2], Complex64>) -> Self {
        let mut p = TrigPoly { coeffs };
        p.prune();
        p
    }

    /// Component `axis` of the unit-amplitude velocity field.
    pub fn from_flow_component(flow: &FlowField, axis: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        for (&k, &v) in flow.modes() {
            coeffs.insert(k, v[axis]);
        }
        TrigPoly::from_coeffs(coeffs)
    }

    pub fn coeff(&self, k: [i32; 2]) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &BTreeMap<[i32; 2], Complex64> {
        &self.coeffs
    }

    pub fn insert(&mut self, k: [i32; 2], c: Complex64) {
        if c.norm() > 0.0 {
            self.coeffs.insert(k, c);
        }
    }

    /// Mean over the torus (the zero coefficient).
    pub fn mean(&self) -> f64 {
        self.coeff([0, 0]).re
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        let mut s = 0.0;
        for (&k, &c) in &self.coeffs {
            let phase = TAU * (k[0] as f64 * x.x + k[1] as f64 * x.y);
            s += (c * Complex64::new(phase.cos(), phase.sin())).re;
        }
        s
    }

    /// Partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> TrigPoly {
        let mut coeffs = BTreeMap::new();
        for (&k, &c) in &self.coeffs {
            let factor = Complex64::new(0.0, TAU * k[axis] as f64);
            let d = c * factor;
            if d.norm() > 0.0 {
                coeffs.insert(k, d);
            }
        }
        TrigPoly { coeffs }
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut coeffs = self.coeffs.clone();
        for (&k, &c) in &other.coeffs {
            *coeffs.entry(k).or_default() += c;
        }
        TrigPoly::from_coeffs(coeffs)
    }

    pub fn scale(&self, s: f64) -> TrigPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&k, &c)| (k, c * s))
            .collect();
        TrigPoly::from_coeffs(coeffs)
    }

    /// Pointwise product (coefficient convolution); exact.
    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        let mut coeffs: BTreeMap<[i32; 2], Complex64> = BTreeMap::new();
        for (&k1, &c1) in &self.coeffs {
            for (&k2, &c2) in &other.coeffs {
                *coeffs.entry([k1[0] + k2[0], k1[1] + k2[1]]).or_default() += c1 * c2;
            }
        }
        TrigPoly::from_coeffs(coeffs)
    }

    /// Largest |k| component over stored modes.
    pub fn bandwidth(&self) -> i32 {
        self.coeffs
            .keys()
            .map(|k| k[0].abs().max(k[1].abs()))
            .max()
            .unwrap_or(0)
    }

    /// Sup norm read off an n x n sampling grid (n well above twice the
    /// bandwidth makes this essentially exact for smooth content).
    pub fn max_abs_on_grid(&self, n: usize) -> f64 {
        let mut worst = 0.0f64;
        let h = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(self.eval(Vec2::new(i as f64 * h, j as f64 * h)).abs());
            }
        }
        worst
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.norm() > 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sines() -> TrigPoly {
        // sin(2 pi x) = -i/2 e^{i 2 pi x} + i/2 e^{-i 2 pi x}
        let mut c = BTreeMap::new();
        c.insert([1, 0], Complex64::new(0.0, -0.5));
        c.insert([-1, 0], Complex64::new(0.0, 0.5));
        TrigPoly::from_coeffs(c)
    }

    #[test]
    fn eval_matches_sine() {
        let p = sines();
        for i in 0..16 {
            let x = i as f64 / 16.0;
            assert!((p.eval(Vec2::new(x, 0.3)) - (TAU * x).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_is_cosine() {
        let d = sines().derivative(0);
        let x = Vec2::new(0.21, 0.0);
        assert!((d.eval(x) - TAU * (TAU * 0.21).cos()).abs() < 1e-12);
    }

    #[test]
    fn product_gives_half_angle_identity() {
        // sin^2 = 1/2 - cos(4 pi x)/2
        let sq = sines().mul(&sines());
        assert!((sq.mean() - 0.5).abs() < 1e-15);
        let x = Vec2::new(0.13, 0.7);
        assert!((sq.eval(x) - (TAU * 0.13).sin().powi(2)).abs() < 1e-14);
        assert_eq!(sq.bandwidth(), 2);
    }

    #[test]
    fn flow_component_matches_velocity() {
        let f = FlowField::cellular().with_amplitude(3.0);
        let vx = TrigPoly::from_flow_component(&f, 0);
        let x = Vec2::new(0.37, 0.11);
        // components are unit-amplitude
        assert!((3.0 * vx.eval(x) - f.velocity(x).x).abs() < 1e-12);
    }
}
