//! Effective flame fronts through the Hopf-Lax formula.
//!
//! For a convex, coercive, degree-1 homogeneous alpha the level-set solution
//! with initial front S^1 is `u(x, t) = max{-t alpha(p) + x.p : |p| <= 1} - 1`
//! and its zero level set is `Gamma_t = {p + t q : p in S^1, q in dalpha(p)}`.
//! Smooth directions translate points outward along `Dalpha`; corners of
//! alpha open into fans spanning the subdifferential segment; flat arcs of
//! `{alpha = 1}` translate rigidly.

use serde::{Deserialize, Serialize};

use crate::curve::LevelCurve;
use crate::error::{Error, Result};
use crate::vec2::Vec2;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One-sided derivative jump must exceed this multiple of the smooth-arc
/// difference scale before a sampled angle counts as a corner. In 2-d alpha
/// is C^1 away from the origin, so a detected corner indicates solver noise;
/// it is handled (as a fan) and flagged rather than trusted silently.
const CORNER_JUMP_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaModelKind {
    Euclidean,
    Ell1,
    Sampled,
}

/// Data backing a sampled alpha model: values on a uniform angle grid plus
/// the flat windows and (noise-flagged) corners detected on its level curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledAlpha {
    /// alpha(e_theta) at theta_j = 2 pi j / len, all positive.
    pub alphas: Vec<f64>,
    /// Index ranges (inclusive, possibly wrapping) lying on detected flat
    /// arcs of {alpha = 1}.
    pub flat_windows: Vec<(usize, usize)>,
    /// Sample indices where the one-sided derivative jump exceeds the noise
    /// scale.
    pub corner_indices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaModel {
    pub kind: AlphaModelKind,
    pub scale: f64,
    pub samples: Option<SampledAlpha>,
}

impl AlphaModel {
    /// alpha(p) = scale |p|.
    pub fn euclidean(scale: f64) -> Self {
        AlphaModel {
            kind: AlphaModelKind::Euclidean,
            scale,
            samples: None,
        }
    }

    /// alpha(p) = scale (|p1| + |p2|), the strong-flow limit shape.
    pub fn ell1(scale: f64) -> Self {
        AlphaModel {
            kind: AlphaModelKind::Ell1,
            scale,
            samples: None,
        }
    }

    /// Builds a sampled model from a traced `{alpha = 1}` curve, carrying its
    /// flat arcs over as rigid-translation windows.
    pub fn from_level_curve(curve: &LevelCurve) -> Result<Self> {
        let m = curve.samples.len();
        if m < 8 {
            return Err(Error::InvalidArgument(
                "need at least 8 samples for a sampled alpha model".into(),
            ));
        }
        let dtheta = TWO_PI / m as f64;
        for (j, s) in curve.samples.iter().enumerate() {
            let expected = j as f64 * dtheta;
            if (s.theta - expected).abs() > 1e-9 {
                return Err(Error::InvalidArgument(
                    "sampled alpha models need a uniform angle grid over [0, 2 pi)".into(),
                ));
            }
            if !(s.value_used > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "alpha must be positive; got {} at theta = {}",
                    s.value_used, s.theta
                )));
            }
        }
        let alphas: Vec<f64> = curve.samples.iter().map(|s| s.value_used).collect();
        let flat_windows = curve
            .flat_arcs
            .iter()
            .map(|arc| (arc.start_index, arc.end_index))
            .collect();
        let corner_indices = detect_corners(&alphas, dtheta);
        Ok(AlphaModel {
            kind: AlphaModelKind::Sampled,
            scale: 1.0,
            samples: Some(SampledAlpha {
                alphas,
                flat_windows,
                corner_indices,
            }),
        })
    }

    /// True when corner detection fired on a sampled model.
    pub fn has_corner_warning(&self) -> bool {
        self.samples
            .as_ref()
            .map(|s| !s.corner_indices.is_empty())
            .unwrap_or(false)
    }

    /// alpha on the unit circle, linearly interpolated for sampled models.
    pub fn alpha_on_circle(&self, theta: f64) -> f64 {
        match self.kind {
            AlphaModelKind::Euclidean => self.scale,
            AlphaModelKind::Ell1 => self.scale * (theta.cos().abs() + theta.sin().abs()),
            AlphaModelKind::Sampled => {
                let s = self.samples.as_ref().expect("sampled model has samples");
                let m = s.alphas.len();
                let t = (theta.rem_euclid(TWO_PI)) / TWO_PI * m as f64;
                let j = (t as usize) % m;
                let frac = t - t.floor();
                s.alphas[j] * (1.0 - frac) + s.alphas[(j + 1) % m] * frac
            }
        }
    }
}

fn detect_corners(alphas: &[f64], dtheta: f64) -> Vec<usize> {
    let m = alphas.len();
    let jump: Vec<f64> = (0..m)
        .map(|j| {
            let d_plus = (alphas[(j + 1) % m] - alphas[j]) / dtheta;
            let d_minus = (alphas[j] - alphas[(j + m - 1) % m]) / dtheta;
            (d_plus - d_minus).abs()
        })
        .collect();
    let mut sorted = jump.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[m / 2];
    let scale = median.max(1e-12);
    (0..m)
        .filter(|&j| jump[j] > CORNER_JUMP_FACTOR * scale && jump[j] > 1e-6)
        .collect()
}

/// Hopf-Lax value `u(x, t) = max{-t alpha(p) + x.p : |p| <= 1} - 1`.
/// Exact for the analytic kinds; on sampled models the angle grid winner is
/// refined once by golden section over the interpolated objective and kept
/// only if the refinement improves it.
pub fn hopf_lax_value(x: Vec2, t: f64, m: &AlphaModel) -> f64 {
    debug_assert!(t >= 0.0);
    let best = match m.kind {
        AlphaModelKind::Euclidean => x.norm() - t * m.scale,
        AlphaModelKind::Ell1 => {
            // per closed quadrant the objective is a cos + b sin with
            // a = s1 x1 - t scale, b = s2 x2 - t scale over angles in [0, pi/2]
            let mut best = f64::NEG_INFINITY;
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    let a = s1 * x.x - t * m.scale;
                    let b = s2 * x.y - t * m.scale;
                    let q = if a <= 0.0 && b <= 0.0 {
                        a.max(b)
                    } else {
                        (a.max(0.0).powi(2) + b.max(0.0).powi(2)).sqrt()
                    };
                    best = best.max(q);
                }
            }
            best
        }
        AlphaModelKind::Sampled => {
            let s = m.samples.as_ref().expect("sampled model has samples");
            let n = s.alphas.len();
            let objective = |theta: f64| x.dot(Vec2::unit(theta)) - t * m.alpha_on_circle(theta);
            let mut best_j = 0;
            let mut best = f64::NEG_INFINITY;
            for j in 0..n {
                let v = objective(TWO_PI * j as f64 / n as f64);
                if v > best {
                    best = v;
                    best_j = j;
                }
            }
            // one golden refinement around the winning grid angle
            let dtheta = TWO_PI / n as f64;
            let center = TWO_PI * best_j as f64 / n as f64;
            let refined = golden_max_scalar(objective, center - dtheta, center + dtheta);
            best.max(refined)
        }
    };
    best.max(0.0) - 1.0
}

fn golden_max_scalar(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - R * (b - a);
    let mut x2 = a + R * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..60 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - R * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + R * (b - a);
            f2 = f(x2);
        }
    }
    f1.max(f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Image of a smooth point of alpha.
    Regular,
    /// Sampled from the subdifferential segment at a corner of alpha.
    CornerFan,
    /// Lies on the rigid translate of a flat arc of {alpha = 1}.
    FlatTranslate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontPoint {
    pub theta: f64,
    pub point: Vec2,
    pub provenance: Provenance,
}

/// The effective front at one time: a closed convex polygon with per-point
/// provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontSnapshot {
    pub t: f64,
    pub points: Vec<FrontPoint>,
    /// Set when corner detection fired on a sampled model (solver noise).
    pub corner_warning: bool,
}

impl FrontSnapshot {
    pub fn positions(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| p.point).collect()
    }
}

/// Traces `Gamma_t = {p + t Dalpha(p) : p in S^1}`, fanning corners across
/// their subdifferential segments. Analytic kinds use exact gradients; the
/// sampled kind differentiates its table centrally and traces on its own
/// grid.
pub fn front_trace(m: &AlphaModel, t: f64, n_angles: usize) -> Result<FrontSnapshot> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "front time must be nonnegative, got {t}"
        )));
    }
    if n_angles < 16 {
        return Err(Error::InvalidArgument(
            "front tracing needs at least 16 angles".into(),
        ));
    }
    match m.kind {
        AlphaModelKind::Euclidean => {
            let r = 1.0 + t * m.scale;
            let points = (0..n_angles)
                .map(|j| {
                    let theta = TWO_PI * j as f64 / n_angles as f64;
                    FrontPoint {
                        theta,
                        point: Vec2::unit(theta) * r,
                        provenance: Provenance::Regular,
                    }
                })
                .collect();
            Ok(FrontSnapshot {
                t,
                points,
                corner_warning: false,
            })
        }
        AlphaModelKind::Ell1 => Ok(trace_ell1(m.scale, t, n_angles)),
        AlphaModelKind::Sampled => trace_sampled(m, t),
    }
}

fn trace_ell1(scale: f64, t: f64, n_angles: usize) -> FrontSnapshot {
    // smooth-arc spacing sets the fan sampling density (arc length of the
    // translated quarter circle is unchanged)
    let spacing = TWO_PI / n_angles as f64;
    let fan_len = 2.0 * t * scale;
    let fan_samples = if t > 0.0 {
        ((fan_len / spacing).ceil() as usize).max(2)
    } else {
        1
    };
    let corner_eps = 1e-12;
    let mut points = Vec::new();
    for j in 0..n_angles {
        let theta = TWO_PI * j as f64 / n_angles as f64;
        let p = Vec2::unit(theta);
        // emit the fan when the angle step crosses or lands on a corner
        for (corner_theta, corner_p) in [
            (0.0, Vec2::new(1.0, 0.0)),
            (std::f64::consts::FRAC_PI_2, Vec2::new(0.0, 1.0)),
            (std::f64::consts::PI, Vec2::new(-1.0, 0.0)),
            (1.5 * std::f64::consts::PI, Vec2::new(0.0, -1.0)),
        ] {
            let prev = theta - spacing;
            if corner_theta > prev + corner_eps && corner_theta <= theta + corner_eps {
                // subdifferential at the corner: segment between the
                // gradients of the two adjacent quadrants
                let g_prev = quadrant_gradient(corner_theta - 1e-9, scale);
                let g_next = quadrant_gradient(corner_theta + 1e-9, scale);
                if fan_samples == 1 {
                    points.push(FrontPoint {
                        theta: corner_theta,
                        point: corner_p,
                        provenance: Provenance::CornerFan,
                    });
                } else {
                    for s in 0..fan_samples {
                        let tau = s as f64 / (fan_samples - 1) as f64;
                        let q = g_prev * (1.0 - tau) + g_next * tau;
                        points.push(FrontPoint {
                            theta: corner_theta,
                            point: corner_p + q * t,
                            provenance: Provenance::CornerFan,
                        });
                    }
                }
            }
        }
        if p.x.abs() < corner_eps || p.y.abs() < corner_eps {
            continue; // the fan covers the corner itself
        }
        points.push(FrontPoint {
            theta,
            point: p + quadrant_gradient(theta, scale) * t,
            provenance: Provenance::Regular,
        });
    }
    FrontSnapshot {
        t,
        points,
        corner_warning: false,
    }
}

fn quadrant_gradient(theta: f64, scale: f64) -> Vec2 {
    let e = Vec2::unit(theta);
    Vec2::new(scale * e.x.signum(), scale * e.y.signum())
}

fn trace_sampled(m: &AlphaModel, t: f64) -> Result<FrontSnapshot> {
    let s = m
        .samples
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("sampled model missing its table".into()))?;
    let n = s.alphas.len();
    let dtheta = TWO_PI / n as f64;
    let in_flat = |j: usize| {
        s.flat_windows.iter().any(|&(a, b)| {
            if a <= b {
                (a..=b).contains(&j)
            } else {
                j >= a || j <= b
            }
        })
    };
    let mut points = Vec::with_capacity(n);
    for j in 0..n {
        let theta = j as f64 * dtheta;
        let e = Vec2::unit(theta);
        let alpha = s.alphas[j];
        if s.corner_indices.contains(&j) {
            // noise-flagged corner: fan between the one-sided gradients
            let d_plus = (s.alphas[(j + 1) % n] - alpha) / dtheta;
            let d_minus = (alpha - s.alphas[(j + n - 1) % n]) / dtheta;
            let g_minus = e * alpha + e.perp() * d_minus;
            let g_plus = e * alpha + e.perp() * d_plus;
            let fan_len = (g_plus - g_minus).norm() * t;
            let spacing = dtheta * (1.0 + t * alpha);
            let fan_samples = ((fan_len / spacing).ceil() as usize).clamp(2, 64);
            for k in 0..fan_samples {
                let tau = k as f64 / (fan_samples - 1) as f64;
                let q = g_minus * (1.0 - tau) + g_plus * tau;
                points.push(FrontPoint {
                    theta,
                    point: e + q * t,
                    provenance: Provenance::CornerFan,
                });
            }
            continue;
        }
        // Dalpha(e_theta) = alpha e_theta + alpha'(theta) e_theta_perp
        let d_alpha = (s.alphas[(j + 1) % n] - s.alphas[(j + n - 1) % n]) / (2.0 * dtheta);
        let grad = e * alpha + e.perp() * d_alpha;
        points.push(FrontPoint {
            theta,
            point: e + grad * t,
            provenance: if in_flat(j) {
                Provenance::FlatTranslate
            } else {
                Provenance::Regular
            },
        });
    }
    Ok(FrontSnapshot {
        t,
        points,
        corner_warning: !s.corner_indices.is_empty(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Max over traced points of |hopf_lax_value|; zero for exact fronts.
    pub max_abs_value: f64,
    /// Worst normalized concavity of the traced polygon.
    pub convexity_defect: f64,
    /// Minimum turning angle over vertices; strictly positive turning
    /// witnesses strict convexity (smooth alpha duality direction).
    pub min_turning_angle: f64,
}

/// Cross-checks a traced snapshot against the Hopf-Lax solution it should be
/// the zero level set of.
pub fn front_consistency(m: &AlphaModel, t: f64, snapshot: &FrontSnapshot) -> ConsistencyReport {
    let mut max_abs = 0.0f64;
    for fp in &snapshot.points {
        max_abs = max_abs.max(hopf_lax_value(fp.point, t, m).abs());
    }
    let pts = snapshot.positions();
    let mut defect = 0.0f64;
    let mut min_turn = f64::INFINITY;
    let m_len = pts.len();
    for i in 0..m_len {
        let a = pts[i];
        let b = pts[(i + 1) % m_len];
        let c = pts[(i + 2) % m_len];
        let u = b - a;
        let v = c - b;
        if u.norm() == 0.0 || v.norm() == 0.0 {
            continue;
        }
        let turn = u.cross(v).atan2(u.dot(v));
        defect = defect.max(-turn);
        min_turn = min_turn.min(turn);
    }
    ConsistencyReport {
        max_abs_value: max_abs,
        convexity_defect: defect,
        min_turning_angle: if min_turn.is_finite() { min_turn } else { 0.0 },
    }
}

/// True when q lies inside (or on) the convex polygon, which must be in
/// counterclockwise order.
pub fn convex_contains(poly: &[Vec2], q: Vec2, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        (b - a).cross(q - a) >= -tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_lax_euclidean_values() {
        let m = AlphaModel::euclidean(1.0);
        assert!((hopf_lax_value(Vec2::new(3.0, 0.0), 1.0, &m) - 1.0).abs() < 1e-15);
        assert!((hopf_lax_value(Vec2::ZERO, 1.0, &m) + 1.0).abs() < 1e-15);
        assert!((hopf_lax_value(Vec2::ZERO, 7.0, &AlphaModel::ell1(2.0)) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hopf_lax_ell1_flat_segment_point() {
        // x = (2, 0.5) sits on the flat piece of Gamma_1 from the singular
        // point (1, 0)
        let m = AlphaModel::ell1(1.0);
        assert!(hopf_lax_value(Vec2::new(2.0, 0.5), 1.0, &m).abs() < 1e-15);
    }

    #[test]
    fn euclidean_front_is_circle_radius_two() {
        let m = AlphaModel::euclidean(1.0);
        let snap = front_trace(&m, 1.0, 256).unwrap();
        for fp in &snap.points {
            assert!((fp.point.norm() - 2.0).abs() < 1e-12);
        }
        let report = front_consistency(&m, 1.0, &snap);
        assert!(report.max_abs_value <= 1e-9);
        assert!(report.min_turning_angle > 0.0);
    }

    #[test]
    fn zero_time_front_is_unit_circle() {
        for m in [
            AlphaModel::euclidean(1.0),
            AlphaModel::ell1(1.0),
        ] {
            let snap = front_trace(&m, 0.0, 64).unwrap();
            for fp in &snap.points {
                assert!((fp.point.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn ell1_front_matches_figure_geometry() {
        let m = AlphaModel::ell1(1.0);
        let snap = front_trace(&m, 1.0, 256).unwrap();
        // fan at the corner (1, 0) spans the vertical segment x = 2,
        // y in [-1, 1]
        let fan: Vec<&FrontPoint> = snap
            .points
            .iter()
            .filter(|fp| fp.provenance == Provenance::CornerFan && fp.point.x > 1.5)
            .collect();
        assert!(!fan.is_empty());
        let ys: Vec<f64> = fan.iter().map(|fp| fp.point.y).collect();
        let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((y_min + 1.0).abs() < 1e-12 && (y_max - 1.0).abs() < 1e-12);
        for fp in &fan {
            assert!((fp.point.x - 2.0).abs() < 1e-12);
        }
        // every traced point lies on the zero level set
        let report = front_consistency(&m, 1.0, &snap);
        assert!(report.max_abs_value <= 1e-9, "max |u| = {}", report.max_abs_value);
        // smooth quadrant arcs are translated by (+-1, +-1)
        let q1: Vec<&FrontPoint> = snap
            .points
            .iter()
            .filter(|fp| {
                fp.provenance == Provenance::Regular
                    && fp.theta > 0.1
                    && fp.theta < std::f64::consts::FRAC_PI_2 - 0.1
            })
            .collect();
        for fp in q1 {
            let back = fp.point - Vec2::new(1.0, 1.0);
            assert!((back.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_radii_add_for_euclidean() {
        let m = AlphaModel::euclidean(0.7);
        let s1 = front_trace(&m, 1.0, 64).unwrap();
        let s2 = front_trace(&m, 2.5, 64).unwrap();
        for (a, b) in s1.points.iter().zip(&s2.points) {
            assert!((b.point.norm() - a.point.norm() - 1.5 * 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn fronts_grow_monotonically() {
        let m = AlphaModel::ell1(1.0);
        let inner = front_trace(&m, 0.5, 128).unwrap();
        let outer = front_trace(&m, 1.5, 128).unwrap();
        let poly = outer.positions();
        for fp in &inner.points {
            assert!(convex_contains(&poly, fp.point, 1e-9));
        }
    }

    #[test]
    fn negative_time_rejected() {
        assert!(front_trace(&AlphaModel::euclidean(1.0), -0.1, 64).is_err());
    }
}
