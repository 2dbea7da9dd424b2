//! Periodic, mean-zero, divergence-free velocity fields on the 2-torus.
//!
//! Fields are stored spectrally as a finite list of Fourier modes, so mean
//! zero and incompressibility are structural rather than numerical: the
//! builders reject any mode list that violates them instead of projecting.
//! The flow strength multiplier `A` is carried as a separate scalar; the
//! effective field is `A * V(x)` and sweeps over `A` never rebuild the mode
//! list.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vec2::Vec2;

const TAU: f64 = 2.0 * PI;

/// Tolerance for the structural checks (incompressibility, conjugate
/// symmetry, stream consistency). Violations beyond this are rejected.
const STRUCTURE_TOL: f64 = 1e-12;

/// A smooth, Z^2-periodic, mean-zero, incompressible velocity field given by
/// finitely many Fourier modes, together with a strength multiplier.
#[derive(Debug, Clone)]
pub struct FlowField {
    /// Fourier coefficients of the unit-strength field: k -> v_k with
    /// k.v_k = 0 and v_{-k} = conj(v_k). The zero wave-vector is never stored.
    modes: BTreeMap<[i32; 2], [Complex64; 2]>,
    /// Flow strength multiplier; the effective field is `amplitude * V`.
    amplitude: f64,
    /// Fourier coefficients of a stream function K with V = (-K_y, K_x),
    /// when the field was built from one.
    stream_coeffs: Option<BTreeMap<[i32; 2], Complex64>>,
    label: String,
}

impl FlowField {
    /// The zero field (fluid at rest).
    pub fn zero() -> Self {
        FlowField {
            modes: BTreeMap::new(),
            amplitude: 1.0,
            stream_coeffs: None,
            label: "zero".to_string(),
        }
    }

    /// Builds a velocity field from an explicit mode list. Rejects mode lists
    /// that store a zero wave-vector, violate `k.v_k = 0`, or break conjugate
    /// symmetry (so the field would not be real-valued).
    pub fn from_modes(
        modes: BTreeMap<[i32; 2], [Complex64; 2]>,
        amplitude: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        for (&k, &v) in &modes {
            if k == [0, 0] {
                return Err(Error::InvalidFlow(
                    "mean-zero violated: coefficient stored at k = (0, 0)".into(),
                ));
            }
            let kdv = k[0] as f64 * v[0] + k[1] as f64 * v[1];
            if kdv.norm() > STRUCTURE_TOL {
                return Err(Error::InvalidFlow(format!(
                    "incompressibility violated at k = ({}, {}): |k.v_k| = {:.3e}",
                    k[0],
                    k[1],
                    kdv.norm()
                )));
            }
            let neg = [-k[0], -k[1]];
            match modes.get(&neg) {
                Some(&w) => {
                    let d0 = (w[0] - v[0].conj()).norm();
                    let d1 = (w[1] - v[1].conj()).norm();
                    if d0.max(d1) > STRUCTURE_TOL {
                        return Err(Error::InvalidFlow(format!(
                            "conjugate symmetry violated between k = ({}, {}) and -k",
                            k[0], k[1]
                        )));
                    }
                }
                None => {
                    return Err(Error::InvalidFlow(format!(
                        "conjugate symmetry violated: mode at k = ({}, {}) has no partner at -k",
                        k[0], k[1]
                    )));
                }
            }
        }
        Ok(FlowField {
            modes,
            amplitude,
            stream_coeffs: None,
            label: label.into(),
        })
    }

    /// Builds a field from stream-function coefficients, V = (-K_y, K_x).
    /// Incompressibility holds by construction.
    pub fn from_stream_coeffs(
        stream: BTreeMap<[i32; 2], Complex64>,
        amplitude: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut modes = BTreeMap::new();
        for (&k, &c) in &stream {
            if k == [0, 0] {
                // A constant in K does not affect V; disallow storing it so the
                // representation stays canonical.
                return Err(Error::InvalidFlow(
                    "stream coefficient stored at k = (0, 0)".into(),
                ));
            }
            let neg = [-k[0], -k[1]];
            let ok = stream
                .get(&neg)
                .map(|w| (w - c.conj()).norm() <= STRUCTURE_TOL)
                .unwrap_or(false);
            if !ok {
                return Err(Error::InvalidFlow(format!(
                    "stream coefficients not conjugate-symmetric at k = ({}, {})",
                    k[0], k[1]
                )));
            }
            // v_k = 2 pi i (-k2, k1) K_k
            let factor = Complex64::new(0.0, TAU) * c;
            modes.insert(k, [-(k[1] as f64) * factor, (k[0] as f64) * factor]);
        }
        let mut field = FlowField::from_modes(modes, amplitude, label)?;
        field.stream_coeffs = Some(stream);
        Ok(field)
    }

    /// Shear flow V(x) = (v(x2), 0) from 1-d Fourier coefficients of v,
    /// v(y) = sum_m c_m e^{2 pi i m y}. Rejects a nonzero mean coefficient
    /// and an empty map (the zero field is only available via [`FlowField::zero`]).
    pub fn shear(coeffs: &BTreeMap<i32, Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidFlow(
                "empty shear coefficient map; use FlowField::zero for the field at rest".into(),
            ));
        }
        if coeffs.contains_key(&0) {
            return Err(Error::InvalidFlow(
                "shear profile has a nonzero mean coefficient".into(),
            ));
        }
        let mut modes = BTreeMap::new();
        for (&m, &c) in coeffs {
            modes.insert([0, m], [c, Complex64::new(0.0, 0.0)]);
        }
        FlowField::from_modes(modes, 1.0, "shear")
    }

    /// The benchmark shear flow v(y) = sin(2 pi y).
    pub fn shear_sin() -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(1, Complex64::new(0.0, -0.5));
        coeffs.insert(-1, Complex64::new(0.0, 0.5));
        let mut f = FlowField::shear(&coeffs).expect("sine coefficients are valid");
        f.label = "shear:sin".to_string();
        f
    }

    /// Cellular flow with stream function K = sin(2 pi x1) sin(2 pi x2).
    pub fn cellular() -> Self {
        // sin a sin b = (cos(a-b) - cos(a+b)) / 2
        let mut stream = BTreeMap::new();
        stream.insert([1, -1], Complex64::new(0.25, 0.0));
        stream.insert([-1, 1], Complex64::new(0.25, 0.0));
        stream.insert([1, 1], Complex64::new(-0.25, 0.0));
        stream.insert([-1, -1], Complex64::new(-0.25, 0.0));
        let mut f =
            FlowField::from_stream_coeffs(stream, 1.0, "cellular").expect("cellular stream valid");
        f.label = "cellular".to_string();
        f
    }

    /// Cat's eye flow, K = sin(2 pi x1) sin(2 pi x2) + delta cos(2 pi x1) cos(2 pi x2),
    /// for delta in (0, 1).
    pub fn cats_eye(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cat's eye delta must lie in (0, 1), got {delta}"
            )));
        }
        // cos a cos b = (cos(a-b) + cos(a+b)) / 2
        let mut stream = BTreeMap::new();
        stream.insert([1, -1], Complex64::new(0.25 + 0.25 * delta, 0.0));
        stream.insert([-1, 1], Complex64::new(0.25 + 0.25 * delta, 0.0));
        stream.insert([1, 1], Complex64::new(-0.25 + 0.25 * delta, 0.0));
        stream.insert([-1, -1], Complex64::new(-0.25 + 0.25 * delta, 0.0));
        let mut f = FlowField::from_stream_coeffs(stream, 1.0, "cats_eye")?;
        f.label = format!("cats_eye:delta={delta}");
        Ok(f)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty() || self.amplitude == 0.0
    }

    /// Unit-strength Fourier coefficients, in deterministic order.
    pub fn modes(&self) -> impl Iterator<Item = (&[i32; 2], &[Complex64; 2])> {
        self.modes.iter()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn stream_coeffs(&self) -> Option<&BTreeMap<[i32; 2], Complex64>> {
        self.stream_coeffs.as_ref()
    }

    /// Effective velocity `amplitude * V(x)` by direct Fourier summation.
    pub fn velocity(&self, x: Vec2) -> Vec2 {
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (&k, &v) in &self.modes {
            let phase = TAU * (k[0] as f64 * x.x + k[1] as f64 * x.y);
            let e = Complex64::new(phase.cos(), phase.sin());
            vx += (v[0] * e).re;
            vy += (v[1] * e).re;
        }
        Vec2::new(vx, vy) * self.amplitude
    }

    /// Jacobian of the effective velocity: entry `[i][j]` is d(A V_i)/d(x_j).
    pub fn velocity_gradient(&self, x: Vec2) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for (&k, &v) in &self.modes {
            let phase = TAU * (k[0] as f64 * x.x + k[1] as f64 * x.y);
            let e = Complex64::new(phase.cos(), phase.sin());
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += (v[i] * Complex64::new(0.0, TAU * k[j] as f64) * e).re;
                }
            }
        }
        for row in &mut g {
            row[0] *= self.amplitude;
            row[1] *= self.amplitude;
        }
        g
    }

    /// Value of `amplitude * K(x)` when the field carries a stream function.
    pub fn stream(&self, x: Vec2) -> Option<f64> {
        let stream = self.stream_coeffs.as_ref()?;
        let mut s = 0.0;
        for (&k, &c) in stream {
            let phase = TAU * (k[0] as f64 * x.x + k[1] as f64 * x.y);
            s += (c * Complex64::new(phase.cos(), phase.sin())).re;
        }
        Some(s * self.amplitude)
    }

    /// Upper bound on `sup_x |amplitude * V(x)|` from the coefficient sums.
    pub fn max_speed_bound(&self) -> f64 {
        let mut sx = 0.0;
        let mut sy = 0.0;
        for v in self.modes.values() {
            sx += v[0].norm();
            sy += v[1].norm();
        }
        self.amplitude.abs() * sx.hypot(sy)
    }

    /// True when every mode sits at k = (0, m) (a unidirectional profile).
    pub fn is_shear(&self) -> bool {
        self.modes.keys().all(|k| k[0] == 0)
    }

    /// For shear flows, the effective 1-d profile `y -> amplitude * v(y)`
    /// with V(x) = (v(x2), 0). Returns None otherwise.
    pub fn shear_profile(&self) -> Option<impl Fn(f64) -> f64 + '_> {
        if !self.is_shear() {
            return None;
        }
        let amplitude = self.amplitude;
        Some(move |y: f64| {
            let mut s = 0.0;
            for (&k, &v) in &self.modes {
                let phase = TAU * k[1] as f64 * y;
                s += (v[0] * Complex64::new(phase.cos(), phase.sin())).re;
            }
            s * amplitude
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_points(n: usize) -> impl Iterator<Item = Vec2> {
        (0..n).flat_map(move |i| {
            (0..n).map(move |j| Vec2::new(i as f64 / n as f64, j as f64 / n as f64))
        })
    }

    #[test]
    fn shear_sin_has_two_modes() {
        let f = FlowField::shear_sin();
        assert_eq!(f.n_modes(), 2);
        assert!(f.modes.contains_key(&[0, 1]));
        assert!(f.modes.contains_key(&[0, -1]));
    }

    #[test]
    fn shear_cos_modes() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(1, Complex64::new(0.5, 0.0));
        coeffs.insert(-1, Complex64::new(0.5, 0.0));
        let f = FlowField::shear(&coeffs).unwrap();
        assert_eq!(f.n_modes(), 2);
        let v = f.modes[&[0, 1]];
        assert!((v[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(v[1].norm() < 1e-15);
        // v = cos(2 pi y) evaluates to 1 at y = 0
        let val = f.velocity(Vec2::new(0.3, 0.0));
        assert!((val.x - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_shear_map_rejected() {
        let coeffs = BTreeMap::new();
        assert!(FlowField::shear(&coeffs).is_err());
    }

    #[test]
    fn nonzero_mean_rejected() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, Complex64::new(1.0, 0.0));
        coeffs.insert(1, Complex64::new(0.0, -0.5));
        coeffs.insert(-1, Complex64::new(0.0, 0.5));
        assert!(FlowField::shear(&coeffs).is_err());
    }

    #[test]
    fn compressible_mode_rejected() {
        let mut modes = BTreeMap::new();
        // v_k parallel to k violates k.v_k = 0
        modes.insert([1, 0], [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
        modes.insert([-1, 0], [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(FlowField::from_modes(modes, 1.0, "bad").is_err());
    }

    #[test]
    fn missing_conjugate_partner_rejected() {
        let mut modes = BTreeMap::new();
        modes.insert([0, 1], [Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.0)]);
        assert!(FlowField::from_modes(modes, 1.0, "bad").is_err());
    }

    #[test]
    fn shear_sin_velocity_values() {
        let f = FlowField::shear_sin();
        let v = f.velocity(Vec2::new(0.0, 0.25));
        assert!((v.x - 1.0).abs() < 1e-14);
        assert!(v.y.abs() < 1e-14);

        let f3 = FlowField::shear_sin().with_amplitude(3.0);
        let v3 = f3.velocity(Vec2::new(0.7, 0.25));
        assert!((v3.x - 3.0).abs() < 1e-13);
        assert!(v3.y.abs() < 1e-13);
    }

    #[test]
    fn zero_field_everywhere_zero() {
        let f = FlowField::zero();
        for x in grid_points(9) {
            assert_eq!(f.velocity(x), Vec2::ZERO);
        }
        assert_eq!(f.velocity_gradient(Vec2::new(0.3, 0.9)), [[0.0; 2]; 2]);
    }

    #[test]
    fn cellular_has_four_modes_and_matches_stream_derivatives() {
        let f = FlowField::cellular();
        assert_eq!(f.n_modes(), 4);
        // hand differentiation: V(0.25, 0.25) = (-K_y, K_x) = (0, 0)
        let v = f.velocity(Vec2::new(0.25, 0.25));
        assert!(v.norm() < 1e-14);
        // spot check against analytic V = (-2pi sin cos, 2pi cos sin)
        let x = Vec2::new(0.13, 0.41);
        let analytic = Vec2::new(
            -TAU * (TAU * x.x).sin() * (TAU * x.y).cos(),
            TAU * (TAU * x.x).cos() * (TAU * x.y).sin(),
        );
        assert!((f.velocity(x) - analytic).norm() < 1e-12);
    }

    #[test]
    fn divergence_free_on_grid() {
        for f in [
            FlowField::cellular(),
            FlowField::cats_eye(0.3).unwrap(),
            FlowField::shear_sin(),
        ] {
            for x in grid_points(64) {
                let g = f.velocity_gradient(x);
                assert!(
                    (g[0][0] + g[1][1]).abs() <= 1e-12,
                    "divergence {} at ({}, {})",
                    g[0][0] + g[1][1],
                    x.x,
                    x.y
                );
            }
        }
    }

    #[test]
    fn cats_eye_limits() {
        assert!(FlowField::cats_eye(0.0).is_err());
        assert!(FlowField::cats_eye(1.0).is_err());
        // stream value at origin equals delta
        let f = FlowField::cats_eye(0.5).unwrap();
        assert!((f.stream(Vec2::ZERO).unwrap() - 0.5).abs() < 1e-14);
        // delta -> 0 limit agrees with the cellular modes
        let tiny = FlowField::cats_eye(1e-14).unwrap();
        let cell = FlowField::cellular();
        for (k, v) in cell.modes() {
            let w = tiny.modes[k];
            assert!((w[0] - v[0]).norm() < 1e-12 && (w[1] - v[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn mean_zero_on_grid() {
        for f in [
            FlowField::shear_sin(),
            FlowField::cellular(),
            FlowField::cats_eye(0.4).unwrap(),
        ] {
            let n = 64;
            let mut sum = Vec2::ZERO;
            for x in grid_points(n) {
                sum = sum + f.velocity(x);
            }
            let mean = sum / (n * n) as f64;
            assert!(mean.x.abs() <= 1e-10 && mean.y.abs() <= 1e-10);
        }
    }

    #[test]
    fn amplitude_linearity_exact() {
        let f1 = FlowField::cellular().with_amplitude(1.3);
        let f2 = FlowField::cellular().with_amplitude(2.6);
        for x in grid_points(17) {
            let a = f1.velocity(x) * 2.0;
            let b = f2.velocity(x);
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
        }
    }

    #[test]
    fn periodicity_exact_on_lattice_shifts() {
        let f = FlowField::cats_eye(0.25).unwrap();
        let x = Vec2::new(0.37, 0.81);
        let shifted = f.velocity(Vec2::new(x.x + 1.0, x.y));
        let base = f.velocity(x);
        assert!((shifted - base).norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences_at_second_order() {
        let f = FlowField::cats_eye(0.3).unwrap().with_amplitude(1.7);
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut worst: f64 = 0.0;
            for x in grid_points(16) {
                let g = f.velocity_gradient(x);
                let dx = (f.velocity(Vec2::new(x.x + h, x.y)) - f.velocity(Vec2::new(x.x - h, x.y)))
                    / (2.0 * h);
                let dy = (f.velocity(Vec2::new(x.x, x.y + h)) - f.velocity(Vec2::new(x.x, x.y - h)))
                    / (2.0 * h);
                worst = worst
                    .max((dx.x - g[0][0]).abs())
                    .max((dx.y - g[1][0]).abs())
                    .max((dy.x - g[0][1]).abs())
                    .max((dy.y - g[1][1]).abs());
            }
            worst
        };
        let e1 = err(64);
        let e2 = err(128);
        let ratio = e1 / e2;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "finite-difference order check failed: ratio {ratio}"
        );
    }

    #[test]
    fn shear_gradient_value() {
        // dV1/dx2 = 2 pi cos(2 pi x2) = 2 pi at x2 = 0
        let f = FlowField::shear_sin();
        let g = f.velocity_gradient(Vec2::new(0.1, 0.0));
        assert!((g[0][1] - TAU).abs() < 1e-12);
    }

    #[test]
    fn shear_profile_extraction() {
        let f = FlowField::shear_sin().with_amplitude(2.0);
        let v = f.shear_profile().unwrap();
        assert!((v(0.25) - 2.0).abs() < 1e-13);
        assert!(FlowField::cellular().shear_profile().is_none());
    }
}
