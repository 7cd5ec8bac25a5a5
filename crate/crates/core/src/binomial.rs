//! Exact (Clopper-Pearson) one-sided binomial confidence bounds.
//!
//! Both bounds invert the exact binomial tail by bisection. Tail
//! probabilities come from the regularized incomplete beta function:
//! `P(Bin(n,p) <= k) = I_{1-p}(n-k, k+1)` and `P(Bin(n,p) >= k) = I_p(k, n-k+1)`.

use statrs::function::beta::beta_reg;

/// Maximum bisection steps.
pub const MAX_ITERATIONS: usize = 200;

/// Bisection stops once the bracket is narrower than this fraction of its
/// upper end (or [`ABS_TOLERANCE`], whichever is larger).
pub const REL_TOLERANCE: f64 = 1e-13;
pub const ABS_TOLERANCE: f64 = 1e-300;

/// `P(Bin(n, p) <= k)`.
pub fn cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    beta_reg((n - k) as f64, (k + 1) as f64, 1.0 - p)
}

/// `P(Bin(n, p) >= k)`.
pub fn sf_inclusive(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 || p >= 1.0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    beta_reg(k as f64, (n - k + 1) as f64, p)
}

fn bracket_done(lo: f64, hi: f64) -> bool {
    hi - lo <= (REL_TOLERANCE * hi).max(ABS_TOLERANCE)
}

/// Smallest `p` with `P(Bin(n,p) <= k) <= significance`.
///
/// Returns the conservative (upper) end of the final bisection bracket.
pub fn binomial_exact_upper(k: u64, n: u64, significance: f64) -> f64 {
    debug_assert!(k <= n && significance > 0.0 && significance < 1.0);
    if k >= n {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..MAX_ITERATIONS {
        if bracket_done(lo, hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if cdf(k, n, mid) <= significance {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest `p` with `P(Bin(n,p) >= k) <= significance`.
///
/// Returns the conservative (lower) end of the final bisection bracket.
pub fn binomial_exact_lower(k: u64, n: u64, significance: f64) -> f64 {
    debug_assert!(k <= n && significance > 0.0 && significance < 1.0);
    if k == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..MAX_ITERATIONS {
        if bracket_done(lo, hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sf_inclusive(k, n, mid) <= significance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Two-sided interval with `alpha / 2` in each tail.
pub fn two_sided(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    (
        binomial_exact_lower(k, n, alpha / 2.0),
        binomial_exact_upper(k, n, alpha / 2.0),
    )
}
