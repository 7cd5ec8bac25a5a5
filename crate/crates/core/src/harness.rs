//! End-to-end workflows: fixed-length and adaptive sweeps, the double-readout
//! bounds pipeline, and validation-window trial gating.

use std::collections::VecDeque;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial::two_sided;
use crate::bounds::{BetaChoice, BoundsReport, ALPHA_68, ALPHA_95};
use crate::error::{Error, Result};
use crate::estimator::{map_estimate, ReadoutPolicy, ReferenceTable};
use crate::model::{serde_index, DoubleReadoutCounts, Subspace};
use crate::sim::{simulate_double_readout, trial_rng, DoubleReadoutRun, GenerativeConfig, RoundProcess, StreamDomain};

/// Two-sided significance of the sweep error bars (68% coverage).
pub const SWEEP_CI_ALPHA: f64 = 0.317;
pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_PASS_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    FixedRounds,
    ThresholdRatio,
}

/// One sweep point. Infidelities are leading-order disagreement rates
/// `r^(!x,x|x)` with Clopper-Pearson 68% intervals per subspace; the mean
/// interval averages the per-subspace endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub infidelity_s_plus: f64,
    pub infidelity_s_minus: f64,
    pub infidelity_mean: f64,
    /// Mean rounds per test readout.
    pub mean_rounds: f64,
    pub ci_68_low: f64,
    pub ci_68_high: f64,
    pub ci_68_s_plus: (f64, f64),
    pub ci_68_s_minus: (f64, f64),
    pub cap_hits: u64,
}

impl SweepPoint {
    fn from_counts(axis_value: f64, counts: &DoubleReadoutCounts, mean_rounds: f64, cap_hits: u64) -> Result<Self> {
        let rates = counts.rates()?;
        let interval = |x: Subspace| two_sided(counts.get(!x, x, x), counts.total(x), SWEEP_CI_ALPHA);
        let (plus, minus) = (rates.disagreement(Subspace::SPlus), rates.disagreement(Subspace::SMinus));
        let (ci_plus, ci_minus) = (interval(Subspace::SPlus), interval(Subspace::SMinus));
        Ok(SweepPoint {
            axis_value,
            infidelity_s_plus: plus,
            infidelity_s_minus: minus,
            infidelity_mean: (plus + minus) / 2.0,
            mean_rounds,
            ci_68_low: (ci_plus.0 + ci_minus.0) / 2.0,
            ci_68_high: (ci_plus.1 + ci_minus.1) / 2.0,
            ci_68_s_plus: ci_plus,
            ci_68_s_minus: ci_minus,
            cap_hits,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep_axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// The point with the lowest mean infidelity (earliest on ties).
    pub fn best(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .reduce(|best, p| if p.infidelity_mean < best.infidelity_mean { p } else { best })
    }
}

fn check_trials(trials: [u64; 2]) -> Result<()> {
    if trials.contains(&0) {
        return Err(Error::InvalidConfig("sweeps need at least one trial per preparation".into()));
    }
    Ok(())
}

/// Fixed-length sweep over one shared dataset of `2 max(n)` rounds per
/// trial: for each `n`, rounds `1..=n` herald and rounds `n+1..=2n` test.
///
/// Trials use the double-readout streams, so the counts for each `n` are
/// identical to [`simulate_double_readout`] with `Fixed { rounds: n }`.
pub fn run_fixed_sweep(
    config: &GenerativeConfig,
    table: &ReferenceTable,
    n_values: &[usize],
    trials: [u64; 2],
) -> Result<SweepResult> {
    config.validate()?;
    check_trials(trials)?;
    let mut n_values = n_values.to_vec();
    n_values.sort_unstable();
    n_values.dedup();
    if n_values.first().is_some_and(|&n| n == 0) {
        return Err(Error::InvalidPolicy("fixed sweep values must be at least 1".into()));
    }
    let Some(&max_n) = n_values.last() else {
        return Ok(SweepResult {
            sweep_axis: SweepAxis::FixedRounds,
            points: Vec::new(),
        });
    };

    let empty = || vec![DoubleReadoutCounts::new(); n_values.len()];
    let counts = Subspace::ALL
        .par_iter()
        .flat_map(|&p| (0..trials[p.index()]).into_par_iter().map(move |i| (p, i)))
        .fold(empty, |mut acc, (p, i)| {
            let rng = trial_rng(config.seed, StreamDomain::DoubleReadout, p.index(), i);
            let rounds: Vec<_> = RoundProcess::prepared(config, rng, p).take(2 * max_n).collect();
            for (slot, &n) in acc.iter_mut().zip(&n_values) {
                let first = map_estimate(&rounds[..n], table);
                let second = map_estimate(&rounds[n..2 * n], table);
                slot.record(second, first, p);
            }
            acc
        })
        .reduce(empty, |a, b| a.iter().zip(&b).map(|(x, y)| x.merge(y)).collect());

    let points = n_values
        .iter()
        .zip(&counts)
        .map(|(&n, c)| SweepPoint::from_counts(n as f64, c, n as f64, 0))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        sweep_axis: SweepAxis::FixedRounds,
        points,
    })
}

/// Adaptive sweep: one double-readout experiment per threshold ratio, all on
/// the same trial streams.
pub fn run_adaptive_sweep(
    config: &GenerativeConfig,
    table: &ReferenceTable,
    thresholds: &[f64],
    cap: usize,
    trials: [u64; 2],
) -> Result<SweepResult> {
    check_trials(trials)?;
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let points = thresholds
        .iter()
        .map(|&threshold| {
            let run = simulate_double_readout(config, table, &ReadoutPolicy::Adaptive { threshold, cap }, trials)?;
            SweepPoint::from_counts(threshold, &run.counts, run.mean_test_rounds(), run.total_cap_hits())
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        sweep_axis: SweepAxis::ThresholdRatio,
        points,
    })
}

/// Bounds for every `(x, alpha)` pair of one simulated double-readout run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsPipeline {
    pub run: DoubleReadoutRun,
    pub reports: Vec<BoundsReport>,
}

/// Bound reports for `counts`, ordered by `x` then by `alpha`.
pub fn bounds_reports(counts: &DoubleReadoutCounts, alphas: &[f64], beta: BetaChoice, c: f64) -> Result<Vec<BoundsReport>> {
    let mut reports = Vec::with_capacity(2 * alphas.len());
    for x in Subspace::ALL {
        for &alpha in alphas {
            let b = beta.resolve(counts, alpha, c, x)?;
            reports.push(BoundsReport::compute(counts, alpha, b, c, x)?);
        }
    }
    Ok(reports)
}

pub fn run_bounds_pipeline(
    config: &GenerativeConfig,
    table: &ReferenceTable,
    policy: &ReadoutPolicy,
    trials: [u64; 2],
    alphas: &[f64],
    beta: BetaChoice,
    c: f64,
) -> Result<BoundsPipeline> {
    let run = simulate_double_readout(config, table, policy, trials)?;
    let reports = bounds_reports(&run.counts, alphas, beta, c)?;
    Ok(BoundsPipeline { run, reports })
}

/// One row of the per-subspace summary table: point bounds plus 68% and
/// 95% confidence bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfidelityRow {
    #[serde(with = "serde_index")]
    pub x: Subspace,
    pub mean_rounds: f64,
    pub r_hat: f64,
    pub f: f64,
    pub g: f64,
    pub lower_68: f64,
    pub upper_68: f64,
    pub lower_95: f64,
    pub upper_95: f64,
}

/// The summary table for a run, with the conventional 68% and 95% levels.
pub fn infidelity_table(run: &DoubleReadoutRun, beta: BetaChoice, c: f64) -> Result<Vec<InfidelityRow>> {
    let counts = &run.counts;
    Subspace::ALL
        .iter()
        .map(|&x| {
            let at = |alpha| -> Result<BoundsReport> {
                BoundsReport::compute(counts, alpha, beta.resolve(counts, alpha, c, x)?, c, x)
            };
            let (r68, r95) = (at(ALPHA_68)?, at(ALPHA_95)?);
            let p = x.index();
            Ok(InfidelityRow {
                x,
                mean_rounds: run.second_rounds[p] as f64 / counts.total(x) as f64,
                r_hat: r68.r_hat_cell,
                f: r68.f_point,
                g: r68.g_point,
                lower_68: r68.lower_cb,
                upper_68: r68.upper_cb,
                lower_95: r95.lower_cb,
                upper_95: r95.upper_cb,
            })
        })
        .collect()
}

/// A single-round validation check attached to a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationCheck {
    pub subspace: Subspace,
    pub passed: bool,
}

/// Trials `start..end` (stream positions) thrown away together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscardedWindow {
    pub start: usize,
    pub end: usize,
    #[serde(with = "serde_index")]
    pub trigger: Subspace,
    pub pass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatedTrials<T> {
    pub kept: Vec<T>,
    pub discarded: Vec<DiscardedWindow>,
}

impl<T> GatedTrials<T> {
    pub fn discarded_trials(&self) -> usize {
        self.discarded.iter().map(|w| w.end - w.start).sum()
    }
}

/// Sliding-window trial gating.
///
/// Each subspace keeps the pass/fail results of its last `window` checks;
/// its pass fraction is judged once that history is full. The most recent `window`
/// trials are held back. Whenever a subspace's pass fraction
/// drops below `threshold_fraction`, every held-back trial, including
/// the current one, is discarded. Check history is not reset by a
/// discard, so a persistent fault keeps discarding trial by trial until
/// enough checks pass again.
pub fn apply_validation_window<T, I, F>(trials: I, check: F, window: usize, threshold_fraction: f64) -> Result<GatedTrials<T>>
where
    I: IntoIterator<Item = T>,
    F: Fn(&T) -> ValidationCheck,
{
    if window == 0 {
        return Err(Error::InvalidConfig("validation window must hold at least one check".into()));
    }
    if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "validation threshold {threshold_fraction} must lie in (0, 1]"
        )));
    }
    let mut history: [VecDeque<bool>; 2] = [VecDeque::with_capacity(window), VecDeque::with_capacity(window)];
    let mut passes = [0usize; 2];
    let mut pending: VecDeque<(usize, T)> = VecDeque::with_capacity(window);
    let mut gated = GatedTrials {
        kept: Vec::new(),
        discarded: Vec::new(),
    };

    for (position, trial) in trials.into_iter().enumerate() {
        let ValidationCheck { subspace, passed } = check(&trial);
        let s = subspace.index();
        if history[s].len() == window {
            passes[s] -= history[s].pop_front().unwrap() as usize;
        }
        history[s].push_back(passed);
        passes[s] += passed as usize;
        pending.push_back((position, trial));
        if pending.len() > window {
            gated.kept.push(pending.pop_front().unwrap().1);
        }

        let failing = Subspace::ALL.into_iter().find_map(|sub| {
            let h = &history[sub.index()];
            let fraction = passes[sub.index()] as f64 / h.len() as f64;
            (h.len() == window && fraction < threshold_fraction).then_some((sub, fraction))
        });
        if let Some((trigger, pass_fraction)) = failing {
            gated.discarded.push(DiscardedWindow {
                start: pending.front().unwrap().0,
                end: position + 1,
                trigger,
                pass_fraction,
            });
            pending.clear();
        }
    }
    gated.kept.extend(pending.into_iter().map(|(_, t)| t));
    Ok(gated)
}

/// A temporary fault: trials in `trials` draw their validation round from
/// `faulty` instead of the nominal config.
#[derive(Debug, Clone)]
pub struct FaultInjection {
    pub trials: Range<u64>,
    pub faulty: GenerativeConfig,
}

/// Single-round validation checks: trial `i` checks subspace `i mod 2`,
/// prepared exactly, and passes when the one-round MAP estimate matches.
pub fn simulate_validation_checks(
    config: &GenerativeConfig,
    table: &ReferenceTable,
    n_trials: u64,
    fault: Option<&FaultInjection>,
) -> Result<Vec<ValidationCheck>> {
    config.validate()?;
    if let Some(f) = fault {
        f.faulty.validate()?;
    }
    Ok((0..n_trials)
        .into_par_iter()
        .map(|i| {
            let subspace = Subspace::ALL[(i % 2) as usize];
            let source = match fault {
                Some(f) if f.trials.contains(&i) => &f.faulty,
                _ => config,
            };
            let rng = trial_rng(config.seed, StreamDomain::Validation, subspace.index(), i);
            let v = RoundProcess::new(source, rng, subspace).next_round().outcome;
            ValidationCheck {
                subspace,
                passed: map_estimate(&[v], table) == subspace,
            }
        })
        .collect())
}
