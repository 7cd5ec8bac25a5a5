//! A quick battery of known-answer and oracle checks, runnable from the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binomial::{binomial_exact_lower, binomial_exact_upper};
use crate::bounds::{artificial_counts, beta_star, point_bounds, rate_bounds, ALPHA_68};
use crate::estimator::{adaptive_readout, map_estimate, posterior, ReferenceTable, StopReason};
use crate::model::{CoarseModel, DoubleReadoutCounts, RoundOutcome, Subspace};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Binomial tail `P(X <= k)` by direct summation.
fn cdf_by_sum(k: u64, n: u64, p: f64) -> f64 {
    let mut term = (1.0 - p).powi(n as i32);
    let mut sum = term;
    for i in 0..k {
        term *= (n - i) as f64 / (i + 1) as f64 * p / (1.0 - p);
        sum += term;
    }
    sum
}

fn random_table(rng: &mut ChaCha8Rng) -> ReferenceTable {
    let column = |rng: &mut ChaCha8Rng| {
        let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.01..1.0));
        let total: f64 = raw.iter().sum();
        raw.map(|p| p / total)
    };
    let p_hat = [column(rng), column(rng)];
    ReferenceTable::from_probabilities(p_hat, 1e-5, [1, 1]).expect("valid table")
}

pub fn random_c_model(rng: &mut ChaCha8Rng, c: f64) -> CoarseModel {
    let small: [f64; 6] = std::array::from_fn(|_| rng.random_range(0.0..1.0 - c));
    // A(.|o,s) with o != s is unconstrained by the assumption.
    let free: [f64; 2] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
    let prep = [small[0], small[1]];
    let readout = [small[2], small[3]];
    let transition = [[small[4], free[0]], [free[1], small[5]]];
    CoarseModel::new(prep, readout, transition).expect("valid model")
}

pub fn run() -> Vec<CheckResult> {
    let mut results = Vec::new();

    let beta = beta_star(&DoubleReadoutCounts::training(), ALPHA_68, 0.95, Subspace::SPlus);
    results.push(match beta {
        Ok(b) => check("beta* on the training counts", (5e-4..=2e-3).contains(&b), format!("beta* = {b:.4e}")),
        Err(e) => check("beta* on the training counts", false, e.to_string()),
    });

    let mut worst: f64 = 0.0;
    for n in 1..=20u64 {
        for k in 0..=n {
            for sig in [0.01, 0.1585] {
                let up = binomial_exact_upper(k, n, sig);
                if k < n {
                    worst = worst.max((cdf_by_sum(k, n, up) - sig).abs());
                }
                let lo = binomial_exact_lower(k, n, sig);
                if k > 0 {
                    worst = worst.max((1.0 - cdf_by_sum(k - 1, n, lo) - sig).abs());
                }
            }
        }
    }
    results.push(check("Clopper-Pearson tails", worst < 1e-10, format!("max tail error {worst:.2e}")));

    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut disagreements = 0;
    for _ in 0..10 {
        let table = random_table(&mut rng);
        for len in 0..=2u32 {
            for code in 0..4usize.pow(len) {
                let seq: Vec<RoundOutcome> = (0..len).map(|j| RoundOutcome::ALL[code / 4usize.pow(j) % 4]).collect();
                let like = |s| seq.iter().map(|&v| table.p_hat(v, s)).product::<f64>();
                let (plus, minus) = (like(Subspace::SPlus), like(Subspace::SMinus));
                let (pm, pp) = posterior(&seq, &table);
                let expected = if minus > plus { Subspace::SMinus } else { Subspace::SPlus };
                if (pm - minus / (plus + minus)).abs() > 1e-12 || (pp - plus / (plus + minus)).abs() > 1e-12 {
                    disagreements += 1;
                }
                if map_estimate(&seq, &table) != expected && (minus - plus).abs() > 1e-15 * plus {
                    disagreements += 1;
                }
            }
        }
    }
    results.push(check("posterior vs enumeration", disagreements == 0, format!("{disagreements} disagreements")));

    let table = ReferenceTable::from_probabilities([[0.00005, 0.33, 0.33, 0.33995], [0.5, 0.2, 0.2, 0.1]], 1e-5, [1, 1])
        .expect("valid table");
    let edge = adaptive_readout(std::iter::repeat(RoundOutcome::DARK_DARK), &table, 1e4, 50);
    results.push(match edge {
        Ok(r) => check(
            "ratio equal to t does not stop",
            r.rounds_used == 2 && r.stopped_by == StopReason::ThresholdHigh,
            format!("stopped after {} rounds", r.rounds_used),
        ),
        Err(e) => check("ratio equal to t does not stop", false, e.to_string()),
    });

    let counts = artificial_counts([1_000_000, 1_000_000], 1e-2, 1.16e-4, 1e-5);
    let near = point_bounds(&counts, 0.9, Subspace::SPlus);
    results.push(match near {
        Ok((f, g)) => check("point bounds coincide at small error", g - f < 1e-5, format!("g - f = {:.2e}", g - f)),
        Err(e) => check("point bounds coincide at small error", false, e.to_string()),
    });

    let mut violations = 0;
    for _ in 0..1000 {
        let m = random_c_model(&mut rng, 0.95);
        for x in Subspace::ALL {
            let (f, g) = rate_bounds(&m.exact_rates(), 0.95, x).expect("valid c");
            let truth = m.true_f(x);
            if !(f <= truth && truth <= g) {
                violations += 1;
            }
        }
    }
    results.push(check("sandwich on random models", violations == 0, format!("{violations} violations")));

    results
}
