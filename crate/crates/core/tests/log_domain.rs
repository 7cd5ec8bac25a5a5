//! Long sequences against exact big-integer arithmetic on the table entries.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qls_core::estimator::posterior;
use qls_core::{ReferenceTable, RoundOutcome, Subspace};

/// `(mantissa, exponent)` with `x == mantissa * 2^exponent` exactly.
fn decompose(x: f64) -> (u64, i64) {
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1 << 52) - 1);
    if exponent == 0 {
        (fraction, -1074)
    } else {
        (fraction | 1 << 52, exponent - 1075)
    }
}

/// Exact product of the likelihoods as `mantissa * 2^exponent`.
fn exact_likelihood(seq: &[RoundOutcome], table: &ReferenceTable, s: Subspace) -> (BigUint, i64) {
    let mut mantissa = BigUint::from(1u32);
    let mut exponent = 0;
    for &v in seq {
        let (m, e) = decompose(table.p_hat(v, s));
        mantissa *= m;
        exponent += e;
    }
    (mantissa, exponent)
}

fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(63);
    let top: u64 = (x >> shift).try_into().unwrap();
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact `ln u`, and `P(S-)` rounded once at the end.
fn exact_posterior(seq: &[RoundOutcome], table: &ReferenceTable) -> (f64, f64) {
    let (a, ea) = exact_likelihood(seq, table, Subspace::SMinus);
    let (b, eb) = exact_likelihood(seq, table, Subspace::SPlus);
    let log_ratio = ln_big(&a) - ln_big(&b) + (ea - eb) as f64 * std::f64::consts::LN_2;
    // Bring both products to a common exponent, then P(S-) = A / (A + B).
    let common = ea.min(eb);
    let a = a << (ea - common) as usize;
    let b = b << (eb - common) as usize;
    let sum = &a + &b;
    const SCALE: usize = 120;
    let scaled: BigUint = (a << SCALE) / sum;
    let p_minus = ln_big(&scaled).exp() / 2f64.powi(SCALE as i32);
    let p_minus = if scaled.bits() == 0 { 0.0 } else { p_minus };
    (log_ratio, p_minus)
}

#[test]
fn thousand_round_sequences_match_exact_arithmetic() {
    let tables = [
        ReferenceTable::from_probabilities([[1e-5, 1e-5, 0.2, 0.79998], [0.99997, 1e-5, 1e-5, 1e-5]], 1e-5, [1, 1]).unwrap(),
        ReferenceTable::from_probabilities([[0.06, 0.23, 0.02, 0.69], [0.93, 0.04, 0.02, 0.01]], 1e-5, [1, 1]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for i in 0..10 {
        let table = &tables[i % 2];
        // Mostly one outcome so the evidence is extreme, with some mixing.
        let seq: Vec<RoundOutcome> = (0..1000)
            .map(|_| {
                if rng.random::<f64>() < 0.9 {
                    RoundOutcome::ALL[i % 4]
                } else {
                    RoundOutcome::ALL[rng.random_range(0..4)]
                }
            })
            .collect();
        let (exact_log, exact_minus) = exact_posterior(&seq, table);
        let log_ratio = table.sequence_log_ratio(&seq);
        assert!(log_ratio.is_finite());
        assert!((log_ratio - exact_log).abs() <= 1e-9 * exact_log.abs().max(1.0), "{log_ratio} vs {exact_log}");
        let (minus, plus) = posterior(&seq, table);
        assert!(minus.is_finite() && plus.is_finite());
        assert!((minus + plus - 1.0).abs() <= 1e-12);
        assert!((minus - exact_minus).abs() <= 1e-12 + 1e-9 * exact_minus, "{minus} vs {exact_minus}");
    }
}
