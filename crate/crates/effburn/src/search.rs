//! Scalar bracketing, golden-section minimization and bisection.

use crate::error::{Error, Result};

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9; // 1/phi
const INV_GOLDEN_SQ: f64 = 0.381_966_011_250_105_1; // 1/phi^2

/// A bracket (a, m, b) with a < m < b and f(m) <= min(f(a), f(b)).
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub a: f64,
    pub m: f64,
    pub b: f64,
    pub fm: f64,
}

/// Expands around `seed > 0` by doubling/halving until the function rises on
/// both ends. `cap` bounds the largest admissible abscissa. Made for unimodal
/// positive-axis objectives.
pub fn bracket_minimum(
    mut f: impl FnMut(f64) -> Result<f64>,
    seed: f64,
    cap: f64,
    max_doublings: usize,
) -> Result<Bracket> {
    let mut a = seed * 0.5;
    let mut m = seed;
    let mut b = (seed * 2.0).min(cap);
    let mut fa = f(a)?;
    let mut fm = f(m)?;
    let mut fb = f(b)?;
    for _ in 0..max_doublings {
        if fm <= fa && fm <= fb {
            return Ok(Bracket { a, m, b, fm });
        }
        if fa < fm {
            // descend to the left
            b = m;
            fb = fm;
            m = a;
            fm = fa;
            a *= 0.5;
            fa = f(a)?;
        } else {
            // descend to the right
            if b >= cap {
                return Err(Error::BracketFailure(format!(
                    "objective still decreasing at the cap {cap}"
                )));
            }
            a = m;
            fa = fm;
            m = b;
            fm = fb;
            b = (b * 2.0).min(cap);
            fb = f(b)?;
        }
    }
    Err(Error::BracketFailure(format!(
        "no bracket after {max_doublings} doublings from seed {seed}"
    )))
}

/// Golden-section search inside a bracket; stops when the bracket width drops
/// below `rel_tol` times the current midpoint. Returns `(x_min, f_min, bracket)`.
pub fn golden_section(
    mut f: impl FnMut(f64) -> Result<f64>,
    bracket: Bracket,
    rel_tol: f64,
) -> Result<(f64, f64, (f64, f64))> {
    let mut a = bracket.a;
    let mut b = bracket.b;
    let mut x1 = a + INV_GOLDEN_SQ * (b - a);
    let mut x2 = a + INV_GOLDEN * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > rel_tol * 0.5 * (a + b) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + INV_GOLDEN_SQ * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_GOLDEN * (b - a);
            f2 = f(x2)?;
        }
    }
    let (x, fx) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Ok((x, fx, (a, b)))
}

/// Bisection for a root of an increasing function on [lo, hi]. Assumes
/// g(lo) <= 0 <= g(hi); halves until the interval width is below `tol`.
pub fn bisect_increasing(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum_found() {
        let f = |x: f64| Ok((x - 3.0) * (x - 3.0) + 1.0);
        let br = bracket_minimum(f, 0.5, 1e6, 60).unwrap();
        assert!(br.a < 3.0 && 3.0 < br.b);
        let (x, fx, _) = golden_section(f, br, 1e-10).unwrap();
        assert!((x - 3.0).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn burning_velocity_shape_objective() {
        // (1 + 25 lambda^2) / lambda has its minimum at lambda = 1/5, value 10
        let f = |l: f64| Ok((1.0 + 25.0 * l * l) / l);
        let br = bracket_minimum(f, 0.2, 1e6, 60).unwrap();
        let (x, fx, _) = golden_section(f, br, 1e-9).unwrap();
        assert!((x - 0.2).abs() < 1e-5);
        assert!((fx - 10.0).abs() < 1e-9);
    }

    #[test]
    fn cap_reported_when_decreasing() {
        let f = |x: f64| Ok(-x);
        assert!(matches!(
            bracket_minimum(f, 1.0, 8.0, 60),
            Err(Error::BracketFailure(_))
        ));
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect_increasing(|x| x * x - 2.0, 0.0, 2.0, 1e-13);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }
}
