//! Angle-parametrized convex level curves and flat-piece detection.

use serde::{Deserialize, Serialize};

use crate::vec2::Vec2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveSample {
    pub theta: f64,
    pub point: Vec2,
    /// Value of the traced function at (or defining) this point.
    pub value_used: f64,
    /// Error estimate attached to the value.
    pub value_err: f64,
}

/// A maximal run of consecutive samples with sub-threshold turning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatArc {
    pub start_index: usize,
    pub end_index: usize,
    /// Outward unit normal of the fitted chord line.
    pub normal: Vec2,
    /// Max deviation of the arc's points from the fitted line.
    pub chord_deviation: f64,
    /// Primitive wave-vector of a matching resonance prediction, when the
    /// detector was cross-referenced against one.
    pub matched_resonance: Option<[i32; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveMeta {
    /// Which function the curve belongs to ("alpha" or "hbar").
    pub kind: String,
    pub level: f64,
    pub flow_label: String,
    pub amplitude: f64,
    pub tol: f64,
    pub rel_tol: f64,
    pub kappa_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCurve {
    /// Samples ordered by strictly increasing theta covering [0, 2 pi).
    pub samples: Vec<CurveSample>,
    pub flat_arcs: Vec<FlatArc>,
    pub meta: CurveMeta,
}

impl LevelCurve {
    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.samples.iter().map(|s| s.point)
    }

    /// Worst normalized negative cross product of successive edges; zero for
    /// a convex polygon traversed counterclockwise.
    pub fn convexity_defect(&self) -> f64 {
        let pts: Vec<Vec2> = self.points().collect();
        let m = pts.len();
        if m < 3 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..m {
            let a = pts[i];
            let b = pts[(i + 1) % m];
            let c = pts[(i + 2) % m];
            let u = b - a;
            let v = c - b;
            let denom = u.norm() * v.norm();
            if denom > 0.0 {
                worst = worst.max(-(u.cross(v)) / denom);
            }
        }
        worst
    }

    /// Signed turning angle per unit chord at each vertex (discrete
    /// curvature); resolution-independent, unlike raw cross products.
    pub fn discrete_curvature(&self) -> Vec<f64> {
        let pts: Vec<Vec2> = self.points().collect();
        let m = pts.len();
        let mut kappa = vec![0.0; m];
        for i in 0..m {
            let a = pts[(i + m - 1) % m];
            let b = pts[i];
            let c = pts[(i + 1) % m];
            let u = b - a;
            let v = c - b;
            let chord = 0.5 * (u.norm() + v.norm());
            if chord > 0.0 {
                kappa[i] = u.cross(v).atan2(u.dot(v)) / chord;
            }
        }
        kappa
    }

    pub fn mean_chord(&self) -> f64 {
        let pts: Vec<Vec2> = self.points().collect();
        let m = pts.len();
        if m < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..m {
            total += (pts[(i + 1) % m] - pts[i]).norm();
        }
        total / m as f64
    }
}

/// Default curvature threshold coupling flatness claims to solver accuracy:
/// 4 x (relative value error) / (chord length). Below this, turning is
/// indistinguishable from noise.
pub fn default_kappa_tol(value_rel_err: f64, chord: f64) -> f64 {
    4.0 * value_rel_err / chord.max(1e-12)
}

/// Marks maximal runs of at least 3 consecutive samples whose turning per
/// unit chord stays below `kappa_tol`. Each run is reported with its best-fit
/// outward normal and the max deviation of its points from the fitted line.
/// An empty result is a valid outcome.
pub fn detect_flat_pieces(curve: &LevelCurve, kappa_tol: f64) -> LevelCurve {
    let mut out = curve.clone();
    out.meta.kappa_tol = Some(kappa_tol);
    out.flat_arcs = flat_runs(curve, kappa_tol)
        .into_iter()
        .map(|(start, end)| fit_arc(curve, start, end))
        .collect();
    out
}

/// Index ranges (inclusive, possibly wrapping) of flat vertex runs extended
/// by one boundary sample on each side.
fn flat_runs(curve: &LevelCurve, kappa_tol: f64) -> Vec<(usize, usize)> {
    let kappa = curve.discrete_curvature();
    let m = kappa.len();
    if m < 3 {
        return Vec::new();
    }
    let flat: Vec<bool> = kappa.iter().map(|k| k.abs() < kappa_tol).collect();
    if flat.iter().all(|&f| f) {
        // degenerate: the whole curve reads as flat (possible only for noise
        // thresholds above the curve's own turning); report nothing
        return Vec::new();
    }
    let mut runs = Vec::new();
    let mut i = 0;
    while i < m {
        if flat[i] && !flat[(i + m - 1) % m] {
            let mut j = i;
            let mut len = 1;
            while flat[(j + 1) % m] && len < m {
                j = (j + 1) % m;
                len += 1;
            }
            // extend by the boundary samples so the arc spans >= 3 samples
            runs.push(((i + m - 1) % m, (j + 1) % m));
            if j < i {
                break; // wrapped past the origin; all runs found
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    runs
}

fn fit_arc(curve: &LevelCurve, start: usize, end: usize) -> FlatArc {
    let m = curve.samples.len();
    let mut idx = Vec::new();
    let mut k = start;
    loop {
        idx.push(k);
        if k == end {
            break;
        }
        k = (k + 1) % m;
        if idx.len() > m {
            break;
        }
    }
    let pts: Vec<Vec2> = idx.iter().map(|&i| curve.samples[i].point).collect();
    let centroid = pts.iter().fold(Vec2::ZERO, |a, &b| a + b) / pts.len() as f64;
    // principal direction of the point cloud; the normal is its perpendicular
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &q in &pts {
        let d = q - centroid;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let half_trace = 0.5 * (sxx + syy);
    let det = sxx * syy - sxy * sxy;
    let lam = half_trace + (half_trace * half_trace - det).max(0.0).sqrt();
    let dir = if sxy.abs() > 1e-300 {
        Vec2::new(lam - syy, sxy).normalized()
    } else if sxx >= syy {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    };
    let mut normal = dir.perp();
    if normal.dot(centroid) < 0.0 {
        normal = -normal; // outward
    }
    let deviation = pts
        .iter()
        .map(|&q| ((q - centroid).dot(normal)).abs())
        .fold(0.0f64, f64::max);
    FlatArc {
        start_index: start,
        end_index: end,
        normal,
        chord_deviation: deviation,
        matched_resonance: None,
    }
}
