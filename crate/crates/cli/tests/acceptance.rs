//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs with `cargo test -p qls-cli --test acceptance`.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qls_core::binomial::{binomial_exact_lower, binomial_exact_upper};
use qls_core::bounds::{
    artificial_counts, beta_star, confidence_lower, confidence_upper, point_bounds, rate_bounds, sensitivity_grid,
    ALPHA_68, ALPHA_95, DEFAULT_BETA,
};
use qls_core::estimator::{adaptive_readout, map_estimate, posterior, StopReason, DEFAULT_FLOOR, DEFAULT_ROUND_CAP};
use qls_core::harness::{run_adaptive_sweep, run_fixed_sweep};
use qls_core::selfcheck::random_c_model;
use qls_core::sim::{sample_counts, simulate_reference};
use qls_core::{CoarseModel, DoubleReadoutCounts, GenerativeConfig, ReferenceTable, RoundOutcome, Subspace};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed(limit: Duration, outcome: Outcome, elapsed: Duration) -> Outcome {
    let within = elapsed <= limit;
    let detail = format!("{}; {:.1?} (limit {:?})", outcome.detail, elapsed, limit);
    Outcome {
        passed: outcome.passed && within,
        detail,
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let counts = DoubleReadoutCounts::training();
    let b0 = beta_star(&counts, ALPHA_68, 0.95, Subspace::SPlus).unwrap();
    let b1 = beta_star(&counts, ALPHA_68, 0.95, Subspace::SMinus).unwrap();
    let ok = (5e-4..=2e-3).contains(&b0);
    timed(
        Duration::from_secs(60),
        outcome(ok, format!("beta*(x=0) = {b0:.4e} in [5e-4, 2e-3] (x=1: {b1:.4e})")),
        start.elapsed(),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [ALPHA_68, ALPHA_95] {
        let grid = sensitivity_grid(DEFAULT_BETA, alpha, 0.95, Subspace::SPlus).unwrap();
        let worst = grid.rows.iter().max_by(|a, b| a.d.total_cmp(&b.d)).unwrap();
        ok &= grid.rows.len() == 1000 && grid.max_loss < 0.10 && grid.rows.iter().all(|r| r.d >= 0.0);
        parts.push(format!(
            "alpha={alpha}: max loss {:.2}% at r11_0={:.1e}, r10_0={:.1e}, r01_1={:.1e}",
            100.0 * grid.max_loss,
            worst.r_hat_11_0,
            worst.r_hat_10_0,
            worst.r_hat_01_1
        ));
    }
    timed(Duration::from_secs(600), outcome(ok, parts.join("; ")), start.elapsed())
}

fn criterion_3() -> Outcome {
    // 29 / 250000 = 1.16e-4 exactly.
    let counts = artificial_counts([250_000, 100_000], 1e-2, 1.16e-4, 1e-5);
    let r_hat = counts.rates().unwrap().disagreement(Subspace::SPlus);
    let mut ok = (r_hat - 1.16e-4).abs() < 1e-12;
    let mut parts = vec![format!("r^ = {r_hat:.3e}")];
    for c in [0.9, 0.95, 0.99] {
        let (f, g) = point_bounds(&counts, c, Subspace::SPlus).unwrap();
        ok &= (g - f).abs() < 1e-5 && (f - r_hat).abs() < 1e-5;
        parts.push(format!("c={c}: g-f={:.2e}, r^-f={:.2e}", g - f, r_hat - f));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let models = 20_000;
    for _ in 0..models {
        let m = random_c_model(&mut rng, 0.95);
        assert!(m.satisfies_c(0.95));
        let r = m.exact_rates();
        for x in Subspace::ALL {
            let (f, g) = rate_bounds(&r, 0.95, x).unwrap();
            let truth = m.true_f(x);
            if !(f <= truth && truth <= g) {
                violations += 1;
            }
        }
    }
    timed(
        Duration::from_secs(60),
        outcome(violations == 0, format!("{violations} violations over {models} models x 2 subspaces")),
        start.elapsed(),
    )
}

/// `P(X <= k)` for `X ~ Bin(n, p)` by explicit summation of the pmf.
fn lower_tail(k: u64, n: u64, p: f64) -> f64 {
    (0..=k)
        .map(|i| {
            let ln_choose: f64 = (0..i).map(|j| ((n - j) as f64 / (j + 1) as f64).ln()).sum();
            (ln_choose + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp()
        })
        .sum()
}

/// Root of a decreasing function on [0, 1] by plain bisection.
fn bisect(mut f: impl FnMut(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_5() -> Outcome {
    let levels: Vec<f64> = (0..20).map(|i| 10f64.powf(-4.0 + 3.7 * i as f64 / 19.0)).collect();
    let mut worst: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for n in 1..=50u64 {
        for k in 0..=n {
            for &sig in &levels {
                let upper = binomial_exact_upper(k, n, sig);
                let lower = binomial_exact_lower(k, n, sig);
                let oracle_upper = if k == n { 1.0 } else { bisect(|p| lower_tail(k, n, p) - sig) };
                let oracle_lower = if k == 0 { 0.0 } else { bisect(|p| sig - (1.0 - lower_tail(k - 1, n, p))) };
                worst = worst.max((upper - oracle_upper).abs()).max((lower - oracle_lower).abs());
                if k == 0 {
                    worst_closed = worst_closed.max((upper - (1.0 - sig.powf(1.0 / n as f64))).abs());
                }
                if k == n {
                    worst_closed = worst_closed.max((lower - sig.powf(1.0 / n as f64)).abs());
                }
            }
        }
    }
    outcome(
        worst <= 1e-10 && worst_closed <= 1e-12,
        format!("max deviation from enumeration {worst:.2e}, from closed forms {worst_closed:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let model = CoarseModel::new([0.01, 0.01], [2e-3, 5e-4], [[1e-3, 0.3], [0.2, 2e-4]]).unwrap();
    assert!(model.satisfies_c(0.95));
    let rates = model.exact_rates();
    let draws = 10_000u64;
    let target = 1.0 - 2.0 * ALPHA_68;
    let slack = 3.0 * (target * (1.0 - target) / draws as f64).sqrt();
    let mut ok = true;
    let mut parts = Vec::new();
    for x in Subspace::ALL {
        let truth = model.true_f(x);
        let covered = (0..draws)
            .filter(|&i| {
                let counts = sample_counts(&rates, [25_000, 100_000], 6, i);
                let lo = confidence_lower(&counts, ALPHA_68, DEFAULT_BETA, 0.95, x).unwrap();
                let hi = confidence_upper(&counts, ALPHA_68, DEFAULT_BETA, 0.95, x).unwrap();
                lo <= truth && truth <= hi
            })
            .count();
        let fraction = covered as f64 / draws as f64;
        ok &= fraction >= target - slack;
        parts.push(format!("x={}: coverage {:.4} (F = {truth:.3e})", x.index(), fraction));
    }
    parts.push(format!("required >= {:.4}", target - slack));
    timed(Duration::from_secs(300), outcome(ok, parts.join("; ")), start.elapsed())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagreements = 0;
    let mut sequences = 0;
    for _ in 0..50 {
        let mut column = || {
            let w: [f64; 4] = std::array::from_fn(|_| rng.random_range(1e-3..1.0));
            let total: f64 = w.iter().sum();
            w.map(|p| p / total)
        };
        let p_hat = [column(), column()];
        let table = ReferenceTable::from_probabilities(p_hat, 1e-5, [10_000, 10_000]).unwrap();
        for m in 0..=3u32 {
            for code in 0..4usize.pow(m) {
                let seq: Vec<RoundOutcome> = (0..m).map(|j| RoundOutcome::ALL[code / 4usize.pow(j) % 4]).collect();
                let like = |s: Subspace| seq.iter().map(|&v| p_hat[s.index()][v.index()]).product::<f64>();
                let (plus, minus) = (like(Subspace::SPlus), like(Subspace::SMinus));
                let expected = (minus / (plus + minus), plus / (plus + minus));
                let argmax = if minus > plus { Subspace::SMinus } else { Subspace::SPlus };
                let got = posterior(&seq, &table);
                if (got.0 - expected.0).abs() > 1e-12 || (got.1 - expected.1).abs() > 1e-12 || map_estimate(&seq, &table) != argmax {
                    disagreements += 1;
                }
                sequences += 1;
            }
        }
    }
    outcome(disagreements == 0, format!("{disagreements} disagreements over {sequences} sequences"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let config = GenerativeConfig::resolve("45GHz").unwrap();
    let table = ReferenceTable::build(&simulate_reference(&config, 10_000).unwrap(), DEFAULT_FLOOR).unwrap();
    let trials = [100_000, 100_000];
    let n_values: Vec<usize> = (1..=20).collect();
    let fixed = run_fixed_sweep(&config, &table, &n_values, trials).unwrap();
    let best = *fixed.best().unwrap();
    let last = fixed.points.last().unwrap();
    let n_best = best.axis_value as usize;
    let interior = (5..=15).contains(&n_best) && fixed.points[0].infidelity_mean > best.infidelity_mean && last.infidelity_mean > best.infidelity_mean;
    let level = (1e-3..=1e-2).contains(&best.infidelity_mean);
    let adaptive = run_adaptive_sweep(&config, &table, &[1e4], DEFAULT_ROUND_CAP, trials).unwrap().points[0];
    let better = adaptive.infidelity_mean < best.infidelity_mean && adaptive.mean_rounds < 9.0;
    timed(
        Duration::from_secs(900),
        outcome(
            interior && level && better,
            format!(
                "(a) minimum {:.2e} at n={n_best} (n=1: {:.2e}, n=20: {:.2e}); (b) t=1e4: {:.2e} after {:.2} rounds",
                best.infidelity_mean,
                fixed.points[0].infidelity_mean,
                last.infidelity_mean,
                adaptive.infidelity_mean,
                adaptive.mean_rounds
            ),
        ),
        start.elapsed(),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 4, 16] {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_qls"))
            .args(["--workers", &workers.to_string(), "simulate", "--config", "45GHz", "--seed", "99"])
            .args(["--trials-plus", "25000", "--trials-minus", "100000", "--policy", "adaptive:t=1e4"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("simulate failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push((std::fs::read(out.join("counts.csv")).unwrap(), std::fs::read(out.join("counts.json")).unwrap()));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("counts files identical at 1, 4 and 16 workers: {same}"))
}

fn criterion_10() -> Outcome {
    // Ratio exactly t on the first (0,0) round: must not stop there.
    let equal = ReferenceTable::from_probabilities([[0.00005, 0.33, 0.33, 0.33995], [0.5, 0.2, 0.2, 0.1]], 1e-5, [1, 1]).unwrap();
    let a = adaptive_readout(std::iter::repeat(RoundOutcome::DARK_DARK), &equal, 1e4, 50).unwrap();
    // Ratio 100 per round: u = 1e4 after two rounds is not above t.
    let hundred = ReferenceTable::from_probabilities([[0.0097, 0.33, 0.33, 0.3303], [0.97, 0.01, 0.01, 0.01]], 1e-5, [1, 1]).unwrap();
    let b = adaptive_readout(std::iter::repeat(RoundOutcome::DARK_DARK), &hundred, 1e4, 50).unwrap();
    let ok = a.rounds_used == 2
        && b.rounds_used == 3
        && [a, b].iter().all(|r| r.stopped_by == StopReason::ThresholdHigh && r.estimate == Subspace::SMinus);
    outcome(
        ok,
        format!("ratio t per round: {} rounds; ratio 100 per round: {} rounds", a.rounds_used, b.rounds_used),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("beta* test vector", criterion_1),
        ("sensitivity grid max loss below 10%", criterion_2),
        ("point bounds coincide at small error", criterion_3),
        ("sandwich on random models", criterion_4),
        ("Clopper-Pearson exactness", criterion_5),
        ("conservative coverage", criterion_6),
        ("posterior and MAP vs enumeration", criterion_7),
        ("45GHz sweep structure", criterion_8),
        ("simulate determinism across workers", criterion_9),
        ("adaptive stopping is strict", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        failures += !result.passed as usize;
        println!(
            "{} criterion {:>2} ({name}): {}",
            if result.passed { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
