//! Rigorous bounds and confidence bounds on the readout error `F(x)`.
//!
//! Under the assumption that every "correct" model probability is at least
//! `c > 1/2`, the observable disagreement rate `r(!x,x|x)` brackets `F(x)`:
//!
//! ```text
//! r(!x,x|x) - l(r,c,x) <= F(x) <= r(!x,x|x) + u(r,c,x)
//! ```
//!
//! Both bias terms depend on three cells only: the disagreement rate
//! `r(!x,x|x)`, the preparation-error rate `r(!x,!x|x)` and the opposite
//! preparation's disagreement rate `r(x,!x|!x)`. Confidence bounds combine
//! Clopper-Pearson bounds on those cells with the union bound: the
//! disagreement cell gets significance `alpha - 3 beta`, each bias cell gets
//! `beta`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial::{binomial_exact_lower, binomial_exact_upper};
use crate::error::{Error, Result};
use crate::model::{serde_index, ConditionalRates, DoubleReadoutCounts, Subspace};
use crate::optimize::{golden_section, log_space};

pub const DEFAULT_C: f64 = 0.95;
pub const DEFAULT_BETA: f64 = 0.001;
/// One-sided significance of the 68% bounds.
pub const ALPHA_68: f64 = 0.317 / 2.0;
/// One-sided significance of the 95% bounds.
pub const ALPHA_95: f64 = 0.045 / 2.0;

/// The three rate cells the bias terms depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCells {
    /// `r(!x,x|x)`
    pub disagreement: f64,
    /// `r(!x,!x|x)`
    pub prep_error: f64,
    /// `r(x,!x|!x)`
    pub cross: f64,
}

impl BiasCells {
    pub fn from_rates(r: &ConditionalRates, x: Subspace) -> Self {
        BiasCells {
            disagreement: r.get(!x, x, x),
            prep_error: r.get(!x, !x, x),
            cross: r.get(x, !x, !x),
        }
    }

    /// Upper bias `u`; nondecreasing in every cell.
    pub fn upper_bias(&self, c: f64) -> f64 {
        let (m, p, x) = (self.disagreement, self.prep_error, self.cross);
        let c6 = c.powi(6);
        m * (m + p + x) / c6 + p * m * m * (m + x) / (c6 * c6)
    }

    /// Lower bias `l`; nondecreasing in every cell.
    pub fn lower_bias(&self, c: f64) -> f64 {
        let (m, p, x) = (self.disagreement, self.prep_error, self.cross);
        let c3 = c.powi(3);
        let c6 = c3 * c3;
        p / c3 * (x / c3 + m * m / c6 + m * x / c6) + m * m / c6 * (m / c3 + x / c3)
    }
}

/// Count cells and binomial trial totals matching [`BiasCells`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CellCounts {
    disagreement: u64,
    prep_error: u64,
    cross: u64,
    /// `N_x`
    n_same: u64,
    /// `N_!x`
    n_other: u64,
}

impl CellCounts {
    fn new(counts: &DoubleReadoutCounts, x: Subspace) -> Result<Self> {
        let n_same = counts.total(x);
        let n_other = counts.total(!x);
        if n_same == 0 {
            return Err(Error::ZeroTotal(x));
        }
        if n_other == 0 {
            return Err(Error::ZeroTotal(!x));
        }
        Ok(CellCounts {
            disagreement: counts.get(!x, x, x),
            prep_error: counts.get(!x, !x, x),
            cross: counts.get(x, !x, !x),
            n_same,
            n_other,
        })
    }

    /// Clopper-Pearson upper bounds on all three cells at `significance`.
    fn upper_cells(&self, significance: f64) -> BiasCells {
        BiasCells {
            disagreement: binomial_exact_upper(self.disagreement, self.n_same, significance),
            prep_error: binomial_exact_upper(self.prep_error, self.n_same, significance),
            cross: binomial_exact_upper(self.cross, self.n_other, significance),
        }
    }

    fn upper(&self, alpha: f64, beta: f64, c: f64) -> f64 {
        binomial_exact_upper(self.disagreement, self.n_same, alpha - 3.0 * beta)
            + self.upper_cells(beta).upper_bias(c)
    }

    fn lower(&self, alpha: f64, beta: f64, c: f64) -> f64 {
        let main = binomial_exact_lower(self.disagreement, self.n_same, alpha - 3.0 * beta);
        (main - self.upper_cells(beta).lower_bias(c)).max(0.0)
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.5 && c <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidC(c))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidSignificance(alpha))
    }
}

fn check_beta(alpha: f64, beta: f64) -> Result<()> {
    check_alpha(alpha)?;
    if beta > 0.0 && 3.0 * beta < alpha {
        Ok(())
    } else {
        Err(Error::InvalidBeta { alpha, beta })
    }
}

/// `u(r, c, x)`.
pub fn u_bias(r: &ConditionalRates, c: f64, x: Subspace) -> Result<f64> {
    check_c(c)?;
    Ok(BiasCells::from_rates(r, x).upper_bias(c))
}

/// `l(r, c, x)`.
pub fn l_bias(r: &ConditionalRates, c: f64, x: Subspace) -> Result<f64> {
    check_c(c)?;
    Ok(BiasCells::from_rates(r, x).lower_bias(c))
}

/// Point bounds `(f, g)` evaluated on the given rates; `f` is clamped at 0.
pub fn rate_bounds(r: &ConditionalRates, c: f64, x: Subspace) -> Result<(f64, f64)> {
    check_c(c)?;
    let cells = BiasCells::from_rates(r, x);
    let f = (cells.disagreement - cells.lower_bias(c)).max(0.0);
    let g = cells.disagreement + cells.upper_bias(c);
    Ok((f, g))
}

/// Point bounds `(f(r^), g(r^))` from observed counts.
pub fn point_bounds(counts: &DoubleReadoutCounts, c: f64, x: Subspace) -> Result<(f64, f64)> {
    rate_bounds(&counts.rates()?, c, x)
}

/// Level `1 - alpha` upper confidence bound on `F(x)`.
pub fn confidence_upper(counts: &DoubleReadoutCounts, alpha: f64, beta: f64, c: f64, x: Subspace) -> Result<f64> {
    check_beta(alpha, beta)?;
    check_c(c)?;
    Ok(CellCounts::new(counts, x)?.upper(alpha, beta, c))
}

/// Level `1 - alpha` lower confidence bound on `F(x)`, clamped at 0.
///
/// `l` enters with a minus sign, so its cells take their upper bounds.
pub fn confidence_lower(counts: &DoubleReadoutCounts, alpha: f64, beta: f64, c: f64, x: Subspace) -> Result<f64> {
    check_beta(alpha, beta)?;
    check_c(c)?;
    Ok(CellCounts::new(counts, x)?.lower(alpha, beta, c))
}

/// Number of log-uniform points in the coarse `beta` scan.
pub const BETA_GRID_POINTS: usize = 200;
pub const BETA_GRID_FLOOR: f64 = 1e-6;

/// Outcome of the `beta` optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSearch {
    pub beta: f64,
    pub bound: f64,
}

/// The `beta` grid scanned by [`beta_star`] for a given `alpha`.
pub fn beta_grid(alpha: f64) -> Vec<f64> {
    let hi = alpha / 3.0 * (1.0 - 1e-9);
    let lo = BETA_GRID_FLOOR.min(hi * 1e-3);
    log_space(lo, hi, BETA_GRID_POINTS)
}

/// The `beta` giving the tightest upper confidence bound, together with the
/// bound it achieves.
///
/// A log-uniform scan locates the best grid point, then golden-section search
/// (in `ln beta`) refines within the neighbouring grid cells. Ties go to the
/// smaller `beta`.
pub fn beta_search(counts: &DoubleReadoutCounts, alpha: f64, c: f64, x: Subspace) -> Result<BetaSearch> {
    check_alpha(alpha)?;
    check_c(c)?;
    let cells = CellCounts::new(counts, x)?;
    let objective = |beta: f64| cells.upper(alpha, beta, c);

    let grid = beta_grid(alpha);
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    let values: Vec<f64> = grid.iter().map(|&b| objective(b)).collect();
    for (i, &v) in values.iter().enumerate() {
        if v < best_value {
            best = i;
            best_value = v;
        }
    }
    if !best_value.is_finite() {
        return Err(Error::Numerical("beta objective is not finite".into()));
    }

    let lo = grid[best.saturating_sub(1)].ln();
    let hi = grid[(best + 1).min(grid.len() - 1)].ln();
    let refined = golden_section(|lb| objective(lb.exp()), lo, hi, 1e-6, 100);

    if refined.value < best_value {
        Ok(BetaSearch {
            beta: refined.x.exp(),
            bound: refined.value,
        })
    } else {
        Ok(BetaSearch {
            beta: grid[best],
            bound: best_value,
        })
    }
}

/// `beta*(n, alpha, c, x)`.
pub fn beta_star(counts: &DoubleReadoutCounts, alpha: f64, c: f64, x: Subspace) -> Result<f64> {
    beta_search(counts, alpha, c, x).map(|s| s.beta)
}

/// A fixed `beta`, or the per-dataset optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaChoice {
    Fixed(f64),
    Optimal,
}

impl BetaChoice {
    pub fn resolve(self, counts: &DoubleReadoutCounts, alpha: f64, c: f64, x: Subspace) -> Result<f64> {
        match self {
            BetaChoice::Fixed(beta) => Ok(beta),
            BetaChoice::Optimal => beta_star(counts, alpha, c, x),
        }
    }
}

impl std::str::FromStr for BetaChoice {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        if text.eq_ignore_ascii_case("auto") {
            return Ok(BetaChoice::Optimal);
        }
        text.parse()
            .map(BetaChoice::Fixed)
            .map_err(|_| Error::parse("beta", format!("expected a number or `auto`, got `{text}`")))
    }
}

impl std::fmt::Display for BetaChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BetaChoice::Fixed(beta) => write!(f, "{beta}"),
            BetaChoice::Optimal => f.write_str("auto"),
        }
    }
}

/// A complete set of bounds for one subspace and significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    #[serde(with = "serde_index")]
    pub x: Subspace,
    pub c: f64,
    /// One-sided significance of each confidence bound.
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "f")]
    pub f_point: f64,
    #[serde(rename = "g")]
    pub g_point: f64,
    #[serde(rename = "lower")]
    pub lower_cb: f64,
    #[serde(rename = "upper")]
    pub upper_cb: f64,
    #[serde(rename = "r_hat")]
    pub r_hat_cell: f64,
    pub n_totals: [u64; 2],
}

impl BoundsReport {
    pub fn compute(counts: &DoubleReadoutCounts, alpha: f64, beta: f64, c: f64, x: Subspace) -> Result<Self> {
        let (f_point, g_point) = point_bounds(counts, c, x)?;
        let r_hat_cell = counts.rates()?.disagreement(x);
        Ok(BoundsReport {
            x,
            c,
            alpha,
            beta,
            f_point,
            g_point,
            lower_cb: confidence_lower(counts, alpha, beta, c, x)?,
            upper_cb: confidence_upper(counts, alpha, beta, c, x)?,
            r_hat_cell,
            n_totals: [counts.total(Subspace::SPlus), counts.total(Subspace::SMinus)],
        })
    }

    /// Checks `lower <= f <= r^ <= g <= upper` and `0 < 3 beta < alpha`.
    pub fn invariants_hold(&self) -> bool {
        self.lower_cb <= self.f_point
            && self.f_point <= self.r_hat_cell
            && self.r_hat_cell <= self.g_point
            && self.g_point <= self.upper_cb
            && self.beta > 0.0
            && 3.0 * self.beta < self.alpha
    }
}

/// Layout of the artificial-count sensitivity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n_totals: [u64; 2],
    /// Range of `r^(1,1|0)`, mirrored into `r^(0,0|1)`.
    pub prep_error_range: (f64, f64),
    /// Range of `r^(1,0|0)`, mirrored into `r^(0,1|0)`.
    pub disagreement_plus_range: (f64, f64),
    /// Range of `r^(0,1|1)`, mirrored into `r^(1,0|1)`.
    pub disagreement_minus_range: (f64, f64),
    pub points_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_totals: [25_000, 100_000],
            prep_error_range: (3e-3, 3e-2),
            disagreement_plus_range: (3e-5, 3e-4),
            disagreement_minus_range: (3e-6, 3e-5),
            points_per_axis: 10,
        }
    }
}

fn linspace((lo, hi): (f64, f64), count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Counts with the requested rates, rounded so that the totals stay fixed.
pub fn artificial_counts(n_totals: [u64; 2], prep_error: f64, disagreement_plus: f64, disagreement_minus: f64) -> DoubleReadoutCounts {
    use Subspace::{SMinus as M, SPlus as P};
    let [n0, n1] = n_totals;
    let round = |rate: f64, n: u64| (rate * n as f64).round() as u64;
    let mut counts = DoubleReadoutCounts::new();

    let prep0 = round(prep_error, n0);
    let dis0 = round(disagreement_plus, n0);
    counts.set(M, M, P, prep0);
    counts.set(M, P, P, dis0);
    counts.set(P, M, P, dis0);
    counts.set(P, P, P, n0 - prep0 - 2 * dis0);

    let prep1 = round(prep_error, n1);
    let dis1 = round(disagreement_minus, n1);
    counts.set(P, P, M, prep1);
    counts.set(P, M, M, dis1);
    counts.set(M, P, M, dis1);
    counts.set(M, M, M, n1 - prep1 - 2 * dis1);
    counts
}

/// One point of the sensitivity grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub r_hat_11_0: f64,
    pub r_hat_10_0: f64,
    pub r_hat_01_1: f64,
    pub beta_star: f64,
    pub bound_at_beta0: f64,
    pub bound_at_beta_star: f64,
    /// Relative widening from using `beta0` instead of `beta*`.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub max_loss: f64,
    pub rows: Vec<GridRow>,
}

/// Relative loss `(bound(beta0) - bound(beta*)) / r^(!x,x|x)`.
///
/// A zero denominator yields 0 when the numerator is also 0 and `+inf`
/// otherwise.
pub fn percent_loss(counts: &DoubleReadoutCounts, beta0: f64, alpha: f64, c: f64, x: Subspace) -> Result<(GridRow, f64)> {
    let rates = counts.rates()?;
    let at_beta0 = confidence_upper(counts, alpha, beta0, c, x)?;
    let search = beta_search(counts, alpha, c, x)?;
    let numerator = at_beta0 - search.bound;
    let denominator = rates.disagreement(x);
    let d = if denominator > 0.0 {
        numerator / denominator
    } else if numerator == 0.0 {
        0.0
    } else {
        log::warn!("zero disagreement rate with nonzero bound difference; loss is infinite");
        f64::INFINITY
    };
    use Subspace::{SMinus as M, SPlus as P};
    let row = GridRow {
        r_hat_11_0: rates.get(M, M, P),
        r_hat_10_0: rates.get(M, P, P),
        r_hat_01_1: rates.get(P, M, M),
        beta_star: search.beta,
        bound_at_beta0: at_beta0,
        bound_at_beta_star: search.bound,
        d,
    };
    Ok((row, d))
}

/// Evaluates the percent loss of a fixed `beta0` over the artificial-count
/// grid and returns its maximum with the full table.
pub fn sensitivity_grid_with(spec: &GridSpec, beta0: f64, alpha: f64, c: f64, x: Subspace) -> Result<GridReport> {
    check_beta(alpha, beta0)?;
    check_c(c)?;
    let k = spec.points_per_axis;
    let preps = linspace(spec.prep_error_range, k);
    let plus = linspace(spec.disagreement_plus_range, k);
    let minus = linspace(spec.disagreement_minus_range, k);
    let mut points = Vec::with_capacity(k * k * k);
    for &q in &preps {
        for &a in &plus {
            for &b in &minus {
                points.push((q, a, b));
            }
        }
    }

    let rows = points
        .par_iter()
        .map(|&(q, a, b)| {
            let counts = artificial_counts(spec.n_totals, q, a, b);
            percent_loss(&counts, beta0, alpha, c, x).map(|(row, _)| row)
        })
        .collect::<Result<Vec<_>>>()?;
    // Sequential max keeps the reduction order fixed.
    let max_loss = rows.iter().map(|r| r.d).fold(f64::NEG_INFINITY, f64::max);
    Ok(GridReport { max_loss, rows })
}

/// [`sensitivity_grid_with`] on the default 10 x 10 x 10 grid with
/// `N_0 = 25000`, `N_1 = 100000`.
pub fn sensitivity_grid(beta0: f64, alpha: f64, c: f64, x: Subspace) -> Result<GridReport> {
    sensitivity_grid_with(&GridSpec::default(), beta0, alpha, c, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoarseModel;
    use Subspace::{SMinus, SPlus};

    fn training_rates() -> ConditionalRates {
        DoubleReadoutCounts::training().rates().unwrap()
    }

    #[test]
    fn zero_rates_have_zero_bias() {
        let r = ConditionalRates::zero();
        for x in Subspace::ALL {
            assert_eq!(u_bias(&r, 0.95, x).unwrap(), 0.0);
            assert_eq!(l_bias(&r, 0.95, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn upper_bias_single_expression() {
        let mut r = ConditionalRates::zero();
        r.set(SMinus, SPlus, SPlus, 8e-5);
        r.set(SMinus, SMinus, SPlus, 1e-2);
        r.set(SPlus, SMinus, SMinus, 1e-4);
        let c: f64 = 0.95;
        let expected = 8e-5 * (8e-5 + 1e-2 + 1e-4) / c.powi(6) + 1e-2 * 8e-5_f64.powi(2) * (8e-5 + 1e-4) / c.powi(12);
        let got = u_bias(&r, c, SPlus).unwrap();
        assert!((got - expected).abs() <= 1e-15 * expected);
        assert!((got - 1.1e-6).abs() < 0.05e-6);
    }

    #[test]
    fn lower_bias_on_training_rates() {
        let r = training_rates();
        let c: f64 = 0.95;
        let (m, p, x) = (8e-5, 1e-2, 1e-4);
        let c3 = c.powi(3);
        let expected = p / c3 * (x / c3 + m * m / c3.powi(2) + m * x / c3.powi(2))
            + m * m / c3.powi(2) * (m / c3 + x / c3);
        let got = l_bias(&r, c, SPlus).unwrap();
        assert!((got - expected).abs() <= 1e-15 * expected);
    }

    #[test]
    fn invalid_c() {
        let r = training_rates();
        assert!(matches!(u_bias(&r, 0.5, SPlus), Err(Error::InvalidC(_))));
        assert!(matches!(l_bias(&r, 0.3, SMinus), Err(Error::InvalidC(_))));
    }

    #[test]
    fn error_free_counts_give_zero_point_bounds() {
        let mut n = DoubleReadoutCounts::new();
        n.set(SPlus, SPlus, SPlus, 1000);
        n.set(SMinus, SMinus, SMinus, 1000);
        for x in Subspace::ALL {
            assert_eq!(point_bounds(&n, 0.95, x).unwrap(), (0.0, 0.0));
            let upper = confidence_upper(&n, ALPHA_68, DEFAULT_BETA, 0.95, x).unwrap();
            assert!(upper > 0.0);
            let closed = 1.0 - (ALPHA_68 - 3.0 * DEFAULT_BETA).powf(1.0 / 1000.0);
            assert!(upper >= closed);
            assert_eq!(confidence_lower(&n, ALPHA_68, DEFAULT_BETA, 0.95, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn training_point_bounds_nearly_coincide() {
        let (f, g) = point_bounds(&DoubleReadoutCounts::training(), 0.95, SPlus).unwrap();
        assert!(f <= 8e-5 && 8e-5 <= g);
        assert!(g - f < 1e-5);
    }

    #[test]
    fn invalid_beta() {
        let n = DoubleReadoutCounts::training();
        assert!(matches!(
            confidence_upper(&n, 0.03, 0.01, 0.95, SPlus),
            Err(Error::InvalidBeta { .. })
        ));
        assert!(confidence_lower(&n, 0.1, 0.0, 0.95, SPlus).is_err());
    }

    #[test]
    fn training_confidence_bounds() {
        let n = DoubleReadoutCounts::training();
        let upper = confidence_upper(&n, ALPHA_68, DEFAULT_BETA, 0.95, SPlus).unwrap();
        let lower = confidence_lower(&n, ALPHA_68, DEFAULT_BETA, 0.95, SPlus).unwrap();
        assert!(upper > 8e-5 && upper.is_finite());
        assert!(lower > 0.0 && lower < 8e-5);
    }

    #[test]
    fn confidence_upper_nonincreasing_in_alpha() {
        let n = DoubleReadoutCounts::training();
        let mut prev = f64::INFINITY;
        for alpha in [0.01, 0.0225, 0.05, 0.1, 0.1585, 0.3] {
            let u = confidence_upper(&n, alpha, 0.001, 0.95, SPlus).unwrap();
            assert!(u <= prev);
            prev = u;
        }
    }

    #[test]
    fn zero_disagreement_cell_lower_bound_is_zero() {
        let mut n = DoubleReadoutCounts::training();
        n.set(SMinus, SPlus, SPlus, 0);
        n.set(SPlus, SPlus, SPlus, 24_748);
        assert_eq!(confidence_lower(&n, ALPHA_68, 0.001, 0.95, SPlus).unwrap(), 0.0);
    }

    #[test]
    fn swap_symmetry() {
        let n = DoubleReadoutCounts::training();
        let swapped = n.relabeled();
        for x in Subspace::ALL {
            assert_eq!(point_bounds(&n, 0.95, x).unwrap(), point_bounds(&swapped, 0.95, !x).unwrap());
            assert_eq!(
                confidence_upper(&n, ALPHA_68, 0.001, 0.95, x).unwrap(),
                confidence_upper(&swapped, ALPHA_68, 0.001, 0.95, !x).unwrap()
            );
        }
    }

    #[test]
    fn artificial_counts_reproduce_training_counts() {
        let n = artificial_counts([25_000, 100_000], 1e-2, 8e-5, 1e-4);
        assert_eq!(n, DoubleReadoutCounts::training());
    }

    #[test]
    fn rate_bounds_sandwich_a_simple_model() {
        let m = CoarseModel::new([0.01, 0.02], [0.001, 0.003], [[5e-4, 0.2], [0.3, 1e-4]]).unwrap();
        let r = m.exact_rates();
        for x in Subspace::ALL {
            let (f, g) = rate_bounds(&r, 0.95, x).unwrap();
            let truth = m.true_f(x);
            assert!(f <= truth && truth <= g, "x={x}: {f} {truth} {g}");
        }
    }

    #[test]
    fn beta_search_beats_its_grid() {
        let n = DoubleReadoutCounts::training();
        let search = beta_search(&n, ALPHA_68, 0.95, SPlus).unwrap();
        for b in beta_grid(ALPHA_68) {
            assert!(search.bound <= confidence_upper(&n, ALPHA_68, b, 0.95, SPlus).unwrap());
        }
    }

    #[test]
    fn zero_denominator_loss() {
        let mut n = DoubleReadoutCounts::new();
        n.set(SPlus, SPlus, SPlus, 25_000);
        n.set(SMinus, SMinus, SMinus, 100_000);
        let (_, d) = percent_loss(&n, 0.001, ALPHA_68, 0.95, SPlus).unwrap();
        assert!(d.is_infinite() && d > 0.0);
    }
}
