//! One-dimensional minimization helpers.

/// `(3 - sqrt(5)) / 2`, the golden-section interior fraction.
const INV_PHI_SQ: f64 = 0.381_966_011_250_105_1;

/// Result of a bracketed minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `x_tol` or after `max_iter`
/// shrink steps. The best point evaluated is returned, so the result is never
/// worse than either interior probe.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = a + INV_PHI_SQ * (b - a);
    let mut x2 = b - INV_PHI_SQ * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evaluations = 2;
    let mut best = if f2 < f1 { (x2, f2) } else { (x1, f1) };

    for _ in 0..max_iter {
        if b - a <= x_tol {
            break;
        }
        // Ties move the bracket left so ties resolve toward smaller x.
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + INV_PHI_SQ * (b - a);
            f1 = f(x1);
            evaluations += 1;
            if f1 < best.1 || (f1 == best.1 && x1 < best.0) {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - INV_PHI_SQ * (b - a);
            f2 = f(x2);
            evaluations += 1;
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }

    Minimum {
        x: best.0,
        value: best.1,
        evaluations,
    }
}

/// `count` log-uniformly spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 2);
    let (l, h) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                (l + (h - l) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let m = golden_section(|x| (x - 0.3).powi(2), -2.0, 5.0, 1e-10, 200);
        assert!((m.x - 0.3).abs() < 1e-8);
        assert!(m.value < 1e-15);
    }

    #[test]
    fn boundary_minimum() {
        let m = golden_section(|x| x, 1.0, 2.0, 1e-9, 200);
        assert!((m.x - 1.0).abs() < 1e-8);
    }

    #[test]
    fn log_space_endpoints() {
        let pts = log_space(1e-6, 0.05, 200);
        assert_eq!(pts.len(), 200);
        assert!((pts[0] - 1e-6).abs() < 1e-20);
        assert_eq!(pts[199], 0.05);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }
}
