//! Bayesian maximum-a-posteriori subspace estimation from QLS round outcomes.
//!
//! The likelihood of a sequence is the product of per-round reference
//! probabilities `P^(v|s)` and the prior is uniform, so everything reduces to
//! the accumulated log likelihood ratio `ln u = sum_j ln P^(v_j|S-) - ln P^(v_j|S+)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RoundOutcome, Subspace};

/// Default probability floor applied to unseen reference outcomes.
pub const DEFAULT_FLOOR: f64 = 1e-5;
/// Default limit on rounds for adaptive readout.
pub const DEFAULT_ROUND_CAP: usize = 50;
/// Likelihood ratios within this relative distance of the threshold count as
/// equal to it (and therefore do not stop the readout).
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// Reference outcome tallies `f(v|s)`, indexed `[s][v]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReferenceCounts {
    pub counts: [[u64; 4]; 2],
}

impl ReferenceCounts {
    pub fn get(&self, v: RoundOutcome, s: Subspace) -> u64 {
        self.counts[s.index()][v.index()]
    }

    pub fn record(&mut self, v: RoundOutcome, s: Subspace) {
        self.counts[s.index()][v.index()] += 1;
    }

    pub fn set(&mut self, v: RoundOutcome, s: Subspace, count: u64) {
        self.counts[s.index()][v.index()] = count;
    }

    pub fn total(&self, s: Subspace) -> u64 {
        self.counts[s.index()].iter().sum()
    }

    pub fn merge(mut self, other: &ReferenceCounts) -> Self {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
        self
    }
}

/// Estimated per-round outcome distributions `P^(v|s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    p_hat: [[f64; 4]; 2],
    /// `ln P^(v|S-) - ln P^(v|S+)` per outcome.
    log_ratio: [f64; 4],
    smoothing_floor: f64,
    source_totals: [u64; 2],
}

fn floored_column(counts: &[u64; 4], floor: f64) -> [f64; 4] {
    let total: u64 = counts.iter().sum();
    let raw: [f64; 4] = counts.map(|c| c as f64 / total as f64);
    let mut floored = raw.map(|p| p < floor);
    loop {
        let free_mass = 1.0 - floor * floored.iter().filter(|&&f| f).count() as f64;
        let raw_mass: f64 = raw.iter().zip(&floored).filter(|(_, &f)| !f).map(|(p, _)| p).sum();
        let scale = free_mass / raw_mass;
        let column: [f64; 4] = std::array::from_fn(|v| if floored[v] { floor } else { raw[v] * scale });
        let newly: Vec<usize> = (0..4).filter(|&v| !floored[v] && column[v] < floor).collect();
        if newly.is_empty() {
            return column;
        }
        for v in newly {
            floored[v] = true;
        }
    }
}

impl ReferenceTable {
    /// `P^(v|s) = f(v|s) / N_s`, with entries below `floor` raised to `floor`
    /// and the remaining entries rescaled so each column sums to one.
    pub fn build(counts: &ReferenceCounts, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 0.25) {
            return Err(Error::InvalidFloor(floor));
        }
        for s in Subspace::ALL {
            if counts.total(s) == 0 {
                return Err(Error::EmptyColumn(s));
            }
        }
        let p_hat = [
            floored_column(&counts.counts[0], floor),
            floored_column(&counts.counts[1], floor),
        ];
        Ok(Self::assemble(p_hat, floor, [counts.total(Subspace::SPlus), counts.total(Subspace::SMinus)]))
    }

    /// Wraps explicit probabilities, checking normalization and the floor.
    pub fn from_probabilities(p_hat: [[f64; 4]; 2], floor: f64, source_totals: [u64; 2]) -> Result<Self> {
        if !(floor > 0.0 && floor < 0.25) {
            return Err(Error::InvalidFloor(floor));
        }
        for (s, column) in p_hat.iter().enumerate() {
            let sum: f64 = column.iter().sum();
            if (sum - 1.0).abs() > 1e-12 || column.iter().any(|&p| !(p >= floor * (1.0 - 1e-12) && p <= 1.0)) {
                return Err(Error::parse(
                    "reference table",
                    format!("column {s} is not a floored distribution: {column:?}"),
                ));
            }
        }
        Ok(Self::assemble(p_hat, floor, source_totals))
    }

    fn assemble(p_hat: [[f64; 4]; 2], smoothing_floor: f64, source_totals: [u64; 2]) -> Self {
        let log_ratio = std::array::from_fn(|v| p_hat[1][v].ln() - p_hat[0][v].ln());
        ReferenceTable {
            p_hat,
            log_ratio,
            smoothing_floor,
            source_totals,
        }
    }

    pub fn p_hat(&self, v: RoundOutcome, s: Subspace) -> f64 {
        self.p_hat[s.index()][v.index()]
    }

    pub fn column(&self, s: Subspace) -> &[f64; 4] {
        &self.p_hat[s.index()]
    }

    pub fn smoothing_floor(&self) -> f64 {
        self.smoothing_floor
    }

    pub fn source_totals(&self) -> [u64; 2] {
        self.source_totals
    }

    /// Per-round evidence `ln P^(v|S-) - ln P^(v|S+)`.
    pub fn log_ratio(&self, v: RoundOutcome) -> f64 {
        self.log_ratio[v.index()]
    }

    /// Accumulated `ln u` over a sequence.
    pub fn sequence_log_ratio(&self, seq: &[RoundOutcome]) -> f64 {
        seq.iter().map(|&v| self.log_ratio(v)).sum()
    }
}

/// Free-function form of [`ReferenceTable::build`].
pub fn build_reference(counts: &ReferenceCounts, floor: f64) -> Result<ReferenceTable> {
    ReferenceTable::build(counts, floor)
}

/// Posterior probabilities of `(S-, S+)` given `ln u`.
fn posterior_from_log_ratio(log_ratio: f64) -> (f64, f64) {
    if log_ratio >= 0.0 {
        let e = (-log_ratio).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = log_ratio.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

/// Posterior `(P(S-|seq), P(S+|seq))` under a uniform prior.
pub fn posterior(seq: &[RoundOutcome], table: &ReferenceTable) -> (f64, f64) {
    posterior_from_log_ratio(table.sequence_log_ratio(seq))
}

fn map_from_log_ratio(log_ratio: f64) -> Subspace {
    if log_ratio > 0.0 {
        Subspace::SMinus
    } else {
        Subspace::SPlus
    }
}

/// Most probable subspace; an exact tie goes to `S+`.
pub fn map_estimate(seq: &[RoundOutcome], table: &ReferenceTable) -> Subspace {
    map_from_log_ratio(table.sequence_log_ratio(seq))
}

/// [`map_estimate`] over a sequence that must contain exactly `rounds` entries.
pub fn fixed_n_readout(seq: &[RoundOutcome], rounds: usize, table: &ReferenceTable) -> Result<Subspace> {
    if seq.len() != rounds {
        return Err(Error::LengthMismatch {
            expected: rounds,
            actual: seq.len(),
        });
    }
    Ok(map_estimate(seq, table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ThresholdHigh,
    ThresholdLow,
    RoundCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub estimate: Subspace,
    pub rounds_used: usize,
    /// `ln u` after the last consumed round.
    pub log_ratio: f64,
    pub stopped_by: StopReason,
}

/// Consumes rounds until `u > t` or `u < 1/t` (strictly), or until `cap`
/// rounds have been read.
pub fn adaptive_readout<I>(rounds: I, table: &ReferenceTable, threshold_t: f64, cap: usize) -> Result<AdaptiveResult>
where
    I: IntoIterator<Item = RoundOutcome>,
{
    if !threshold_t.is_finite() || threshold_t <= 1.0 {
        return Err(Error::InvalidPolicy(format!("threshold {threshold_t} must be a finite value above 1")));
    }
    if cap == 0 {
        return Err(Error::InvalidPolicy("round cap must be at least 1".into()));
    }
    let ln_t = threshold_t.ln();
    let margin = RATIO_TOLERANCE * ln_t.max(1.0);
    let mut log_ratio = 0.0;
    let mut source = rounds.into_iter();
    for used in 1..=cap {
        let v = source.next().ok_or(Error::SourceExhausted { rounds: used - 1 })?;
        log_ratio += table.log_ratio(v);
        let stopped_by = if log_ratio > ln_t + margin {
            Some(StopReason::ThresholdHigh)
        } else if log_ratio < -ln_t - margin {
            Some(StopReason::ThresholdLow)
        } else {
            None
        };
        if let Some(stopped_by) = stopped_by {
            return Ok(AdaptiveResult {
                estimate: map_from_log_ratio(log_ratio),
                rounds_used: used,
                log_ratio,
                stopped_by,
            });
        }
    }
    Ok(AdaptiveResult {
        estimate: map_from_log_ratio(log_ratio),
        rounds_used: cap,
        log_ratio,
        stopped_by: StopReason::RoundCap,
    })
}

/// How many rounds a single readout consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReadoutPolicy {
    Fixed { rounds: usize },
    Adaptive { threshold: f64, cap: usize },
}

/// A single readout decision produced by a [`ReadoutPolicy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadoutDecision {
    pub estimate: Subspace,
    pub rounds_used: usize,
    pub cap_hit: bool,
}

impl ReadoutPolicy {
    pub fn adaptive(threshold: f64) -> Self {
        ReadoutPolicy::Adaptive {
            threshold,
            cap: DEFAULT_ROUND_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ReadoutPolicy::Fixed { rounds: 0 } => Err(Error::InvalidPolicy("fixed readout needs at least one round".into())),
            ReadoutPolicy::Fixed { .. } => Ok(()),
            ReadoutPolicy::Adaptive { threshold, cap } => {
                if !threshold.is_finite() || threshold <= 1.0 {
                    Err(Error::InvalidPolicy(format!("threshold {threshold} must be a finite value above 1")))
                } else if cap == 0 {
                    Err(Error::InvalidPolicy("round cap must be at least 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Reads one decision from `source`, consuming only the rounds used.
    pub fn read<I>(&self, table: &ReferenceTable, source: &mut I) -> Result<ReadoutDecision>
    where
        I: Iterator<Item = RoundOutcome>,
    {
        match *self {
            ReadoutPolicy::Fixed { rounds } => {
                let mut log_ratio = 0.0;
                for used in 0..rounds {
                    let v = source.next().ok_or(Error::SourceExhausted { rounds: used })?;
                    log_ratio += table.log_ratio(v);
                }
                Ok(ReadoutDecision {
                    estimate: map_from_log_ratio(log_ratio),
                    rounds_used: rounds,
                    cap_hit: false,
                })
            }
            ReadoutPolicy::Adaptive { threshold, cap } => {
                let result = adaptive_readout(source.by_ref(), table, threshold, cap)?;
                Ok(ReadoutDecision {
                    estimate: result.estimate,
                    rounds_used: result.rounds_used,
                    cap_hit: result.stopped_by == StopReason::RoundCap,
                })
            }
        }
    }
}

impl fmt::Display for ReadoutPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadoutPolicy::Fixed { rounds } => write!(f, "fixed:n={rounds}"),
            ReadoutPolicy::Adaptive { threshold, cap } => write!(f, "adaptive:t={threshold:e},cap={cap}"),
        }
    }
}

impl FromStr for ReadoutPolicy {
    type Err = Error;

    /// `fixed:n=9`, `adaptive:t=1e9` or `adaptive:t=1e4,cap=40`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = |detail: &str| Error::parse("readout policy", format!("{text:?}: {detail}"));
        let (kind, args) = text.trim().split_once(':').unwrap_or((text.trim(), ""));
        let mut n = None;
        let mut t = None;
        let mut cap = None;
        for arg in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            let (key, value) = arg.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            match key.trim() {
                "n" => n = Some(value.trim().parse::<usize>().map_err(|e| bad(&e.to_string()))?),
                "t" => t = Some(value.trim().parse::<f64>().map_err(|e| bad(&e.to_string()))?),
                "cap" => cap = Some(value.trim().parse::<usize>().map_err(|e| bad(&e.to_string()))?),
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        let policy = match kind {
            "fixed" => ReadoutPolicy::Fixed {
                rounds: n.ok_or_else(|| bad("fixed policy needs n"))?,
            },
            "adaptive" => ReadoutPolicy::Adaptive {
                threshold: t.ok_or_else(|| bad("adaptive policy needs t"))?,
                cap: cap.unwrap_or(DEFAULT_ROUND_CAP),
            },
            _ => return Err(bad("policy must be fixed or adaptive")),
        };
        policy.validate()?;
        Ok(policy)
    }
}
