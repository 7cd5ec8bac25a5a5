//! Round-level Monte Carlo generator of QLS readout data.
//!
//! Each trial owns an independent ChaCha8 stream keyed by
//! `(seed, domain, preparation, trial index)`, so results do not depend on
//! how trials are scheduled across worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{ReadoutPolicy, ReferenceCounts, ReferenceTable};
use crate::model::{serde_index, CoarseModel, ConditionalRates, DoubleReadoutCounts, PrepLabel, RoundOutcome, Subspace};

/// Photon-counting refinement of a round's two fluorescence detections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonModel {
    pub lambda_bright: f64,
    pub lambda_dark: f64,
    /// Counts at or above this value read as bright.
    pub threshold: u32,
}

/// Parameters of the round-level generative process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeConfig {
    pub name: Option<String>,
    pub seed: u64,
    /// Probability of starting in `!p` when `p` is intended, indexed by `p`.
    pub prep_error: [f64; 2],
    /// `P(v|s)` indexed `[s][v]` with outcome order `00, 01, 10, 11`.
    pub round_outcome_dist: [[f64; 4]; 2],
    /// Per-round probability of leaving subspace `s`.
    pub transition_prob: [f64; 2],
    /// Optional outcome-conditioned replacement for `transition_prob`, `[s][v]`.
    pub transition_by_outcome: Option<[[f64; 4]; 2]>,
    pub photon_model: Option<PhotonModel>,
    /// Per-round probability that `S+` population sits in the dark `|2,1>`
    /// state for the round, forcing the outcome `00`.
    pub leak_to_21: f64,
}

fn probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} = {p} is not a probability")))
    }
}

impl GenerativeConfig {
    /// No preparation error, no transitions, deterministic nominal outcomes
    /// (`11` for `S+`, `00` for `S-`).
    pub fn error_free(seed: u64) -> Self {
        GenerativeConfig {
            name: Some("error-free".into()),
            seed,
            prep_error: [0.0; 2],
            round_outcome_dist: [[0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]],
            transition_prob: [0.0; 2],
            transition_by_outcome: None,
            photon_model: None,
            leak_to_21: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in Subspace::ALL {
            let i = s.index();
            probability(&format!("prep_error[{s}]"), self.prep_error[i])?;
            probability(&format!("transition[{s}]"), self.transition_prob[i])?;
            let dist = &self.round_outcome_dist[i];
            for (v, &p) in dist.iter().enumerate() {
                probability(&format!("P({v:02b}|{s})"), p)?;
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!("outcome distribution for {s} sums to {sum}")));
            }
            if let Some(table) = &self.transition_by_outcome {
                for (v, &p) in table[i].iter().enumerate() {
                    probability(&format!("transition[{s}][{v:02b}]"), p)?;
                }
            }
        }
        probability("leak_to_21", self.leak_to_21)?;
        if let Some(photons) = &self.photon_model {
            if photons.threshold < 1 {
                return Err(Error::InvalidConfig("photon threshold must be at least 1".into()));
            }
            for (name, lambda) in [("lambda_bright", photons.lambda_bright), ("lambda_dark", photons.lambda_dark)] {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidConfig(format!("{name} = {lambda} must be finite and nonnegative")));
                }
            }
        }
        Ok(())
    }

    fn flip_probability(&self, s: Subspace, v: RoundOutcome) -> f64 {
        match &self.transition_by_outcome {
            Some(table) => table[s.index()][v.index()],
            None => self.transition_prob[s.index()],
        }
    }
}

/// Independent stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    Rounds = 1,
    Reference = 2,
    DoubleReadout = 3,
    Coarse = 4,
    Validation = 5,
    Resample = 6,
}

const INDEX_BITS: u32 = 48;

/// The RNG for one trial.
pub fn trial_rng(seed: u64, domain: StreamDomain, prep: usize, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << INDEX_BITS && prep < 256);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain as u64) << 56 | (prep as u64) << INDEX_BITS | index);
    rng
}

fn sample_outcome(dist: &[f64; 4], u: f64) -> RoundOutcome {
    let mut acc = 0.0;
    for (v, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return RoundOutcome::ALL[v];
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    let last = dist.iter().rposition(|&p| p > 0.0).unwrap_or(3);
    RoundOutcome::ALL[last]
}

/// One generated round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundDraw {
    pub outcome: RoundOutcome,
    pub photons: Option<(u32, u32)>,
    /// Subspace during the round.
    pub subspace: Subspace,
    /// Whether the subspace changed after the round.
    pub flipped: bool,
}

/// Lazily generated rounds of one trial with the hidden subspace evolving.
#[derive(Debug, Clone)]
pub struct RoundProcess<'a> {
    config: &'a GenerativeConfig,
    rng: ChaCha8Rng,
    state: Subspace,
    photons: Option<PhotonSamplers>,
    flips: usize,
}

/// Bright and dark Poisson samplers (absent at zero rate) and the threshold.
type PhotonSamplers = (Option<Poisson<f64>>, Option<Poisson<f64>>, u32);

fn poisson(lambda: f64) -> Option<Poisson<f64>> {
    (lambda > 0.0).then(|| Poisson::new(lambda).expect("validated rate"))
}

impl<'a> RoundProcess<'a> {
    /// Starts in exactly `initial`.
    pub fn new(config: &'a GenerativeConfig, rng: ChaCha8Rng, initial: Subspace) -> Self {
        let photons = config
            .photon_model
            .map(|m| (poisson(m.lambda_dark), poisson(m.lambda_bright), m.threshold));
        RoundProcess {
            config,
            rng,
            state: initial,
            photons,
            flips: 0,
        }
    }

    /// Starts in `prep`, or in `!prep` with the configured preparation error.
    pub fn prepared(config: &'a GenerativeConfig, mut rng: ChaCha8Rng, prep: PrepLabel) -> Self {
        let initial = if rng.random::<f64>() < config.prep_error[prep.index()] {
            !prep
        } else {
            prep
        };
        Self::new(config, rng, initial)
    }

    pub fn state(&self) -> Subspace {
        self.state
    }

    pub fn flips(&self) -> usize {
        self.flips
    }

    fn count_photons(&mut self, bright: bool) -> (u32, bool) {
        let (dark, lit, threshold) = self.photons.as_ref().expect("photon model present");
        let dist = if bright { lit } else { dark };
        let count = match dist {
            Some(d) => d.sample(&mut self.rng) as u32,
            None => 0,
        };
        (count, count >= *threshold)
    }

    pub fn next_round(&mut self) -> RoundDraw {
        let s = self.state;
        let leaked = s == Subspace::SPlus && self.config.leak_to_21 > 0.0 && self.rng.random::<f64>() < self.config.leak_to_21;
        let nominal = if leaked {
            RoundOutcome::DARK_DARK
        } else {
            sample_outcome(&self.config.round_outcome_dist[s.index()], self.rng.random::<f64>())
        };
        let (outcome, photons) = if self.photons.is_some() {
            let (c1, b1) = self.count_photons(nominal.bit1);
            let (c2, b2) = self.count_photons(nominal.bit2);
            (RoundOutcome::new(b1, b2), Some((c1, c2)))
        } else {
            (nominal, None)
        };
        let flipped = self.rng.random::<f64>() < self.config.flip_probability(s, outcome);
        if flipped {
            self.state = !s;
            self.flips += 1;
        }
        RoundDraw {
            outcome,
            photons,
            subspace: s,
            flipped,
        }
    }
}

impl Iterator for RoundProcess<'_> {
    type Item = RoundOutcome;

    fn next(&mut self) -> Option<RoundOutcome> {
        Some(self.next_round().outcome)
    }
}

/// A fully recorded trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    #[serde(with = "serde_index")]
    pub prep: PrepLabel,
    /// Subspace at every round boundary; one longer than `outcomes`.
    pub hidden_trajectory: Vec<Subspace>,
    pub outcomes: Vec<RoundOutcome>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub photon_counts: Option<Vec<(u32, u32)>>,
}

impl TrialRecord {
    pub fn flip_count(&self) -> usize {
        self.hidden_trajectory.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Generates `n_rounds` rounds of a single trial on stream `stream`.
pub fn simulate_rounds(config: &GenerativeConfig, prep: PrepLabel, n_rounds: usize, stream: u64) -> Result<TrialRecord> {
    config.validate()?;
    let rng = trial_rng(config.seed, StreamDomain::Rounds, prep.index(), stream);
    let mut process = RoundProcess::prepared(config, rng, prep);
    let mut hidden_trajectory = Vec::with_capacity(n_rounds + 1);
    let mut outcomes = Vec::with_capacity(n_rounds);
    let mut photons = config.photon_model.map(|_| Vec::with_capacity(n_rounds));
    hidden_trajectory.push(process.state());
    for _ in 0..n_rounds {
        let draw = process.next_round();
        outcomes.push(draw.outcome);
        if let (Some(list), Some(counts)) = (photons.as_mut(), draw.photons) {
            list.push(counts);
        }
        hidden_trajectory.push(process.state());
    }
    Ok(TrialRecord {
        prep,
        hidden_trajectory,
        outcomes,
        photon_counts: photons,
    })
}

/// Reference data: per trial, one discarded round (subspace may change) and
/// then one recorded round, starting from an exactly prepared subspace.
pub fn simulate_reference(config: &GenerativeConfig, trials_per_subspace: u64) -> Result<ReferenceCounts> {
    config.validate()?;
    if trials_per_subspace == 0 {
        return Err(Error::InvalidConfig("reference needs at least one trial per subspace".into()));
    }
    let total = Subspace::ALL
        .par_iter()
        .flat_map(|&s| (0..trials_per_subspace).into_par_iter().map(move |i| (s, i)))
        .fold(ReferenceCounts::default, |mut acc, (s, i)| {
            let rng = trial_rng(config.seed, StreamDomain::Reference, s.index(), i);
            let mut process = RoundProcess::new(config, rng, s);
            process.next_round();
            acc.record(process.next_round().outcome, s);
            acc
        })
        .reduce(ReferenceCounts::default, |a, b| a.merge(&b));
    Ok(total)
}

/// Outcome of one heralded double-readout trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DoubleReadoutTrial {
    pub prep: PrepLabel,
    /// First (heralding) readout.
    pub first: Subspace,
    /// Second (test) readout.
    pub second: Subspace,
    pub first_rounds: usize,
    pub second_rounds: usize,
    pub cap_hits: u32,
}

/// Runs trial `index` with preparation `prep`.
pub fn double_readout_trial(
    config: &GenerativeConfig,
    table: &ReferenceTable,
    policy: &ReadoutPolicy,
    prep: PrepLabel,
    index: u64,
) -> Result<DoubleReadoutTrial> {
    let rng = trial_rng(config.seed, StreamDomain::DoubleReadout, prep.index(), index);
    let mut process = RoundProcess::prepared(config, rng, prep);
    let first = policy.read(table, &mut process)?;
    let second = policy.read(table, &mut process)?;
    Ok(DoubleReadoutTrial {
        prep,
        first: first.estimate,
        second: second.estimate,
        first_rounds: first.rounds_used,
        second_rounds: second.rounds_used,
        cap_hits: first.cap_hit as u32 + second.cap_hit as u32,
    })
}

/// Aggregated double-readout experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DoubleReadoutRun {
    pub counts: DoubleReadoutCounts,
    /// Readouts (of either kind) that ended at the round cap, per preparation.
    pub cap_hits: [u64; 2],
    /// Rounds consumed by the heralding readouts, per preparation.
    pub first_rounds: [u64; 2],
    /// Rounds consumed by the test readouts, per preparation.
    pub second_rounds: [u64; 2],
}

impl DoubleReadoutRun {
    fn add(mut self, trial: &DoubleReadoutTrial) -> Self {
        let p = trial.prep.index();
        self.counts.record(trial.second, trial.first, trial.prep);
        self.cap_hits[p] += trial.cap_hits as u64;
        self.first_rounds[p] += trial.first_rounds as u64;
        self.second_rounds[p] += trial.second_rounds as u64;
        self
    }

    fn merge(mut self, other: &DoubleReadoutRun) -> Self {
        self.counts = self.counts.merge(&other.counts);
        for p in 0..2 {
            self.cap_hits[p] += other.cap_hits[p];
            self.first_rounds[p] += other.first_rounds[p];
            self.second_rounds[p] += other.second_rounds[p];
        }
        self
    }

    /// Mean rounds per test readout over both preparations.
    pub fn mean_test_rounds(&self) -> f64 {
        let trials = self.counts.total(Subspace::SPlus) + self.counts.total(Subspace::SMinus);
        (self.second_rounds[0] + self.second_rounds[1]) as f64 / trials as f64
    }

    pub fn total_cap_hits(&self) -> u64 {
        self.cap_hits.iter().sum()
    }
}

/// Heralded double readout: the second readout continues from the hidden
/// state the first left behind. `trials` is indexed by preparation.
pub fn simulate_double_readout(
    config: &GenerativeConfig,
    table: &ReferenceTable,
    policy: &ReadoutPolicy,
    trials: [u64; 2],
) -> Result<DoubleReadoutRun> {
    config.validate()?;
    policy.validate()?;
    if trials.contains(&0) {
        return Err(Error::InvalidConfig("double readout needs at least one trial per preparation".into()));
    }
    Subspace::ALL
        .par_iter()
        .flat_map(|&p| (0..trials[p.index()]).into_par_iter().map(move |i| (p, i)))
        .map(|(p, i)| double_readout_trial(config, table, policy, p, i))
        .try_fold(DoubleReadoutRun::default, |acc, trial| trial.map(|t| acc.add(&t)))
        .try_reduce(DoubleReadoutRun::default, |a, b| Ok(a.merge(&b)))
}

/// Direct sampling of the coarse model `Q`, `Y`, `A`.
pub fn simulate_coarse(model: &CoarseModel, trials: [u64; 2], seed: u64) -> DoubleReadoutCounts {
    Subspace::ALL
        .par_iter()
        .flat_map(|&p| (0..trials[p.index()]).into_par_iter().map(move |i| (p, i)))
        .fold(DoubleReadoutCounts::new, |mut acc, (p, i)| {
            let mut rng = trial_rng(seed, StreamDomain::Coarse, p.index(), i);
            let mut draw = |prob: f64| rng.random::<f64>() < prob;
            let s = if draw(model.q(!p, p)) { !p } else { p };
            let o = if draw(model.y(!s, s)) { !s } else { s };
            let s2 = if draw(model.a(!s, o, s)) { !s } else { s };
            let o2 = if draw(model.y(!s2, s2)) { !s2 } else { s2 };
            acc.record(o2, o, p);
            acc
        })
        .reduce(DoubleReadoutCounts::new, |a, b| a.merge(&b))
}

/// Multinomial draw of a count table with cell probabilities `rates` and
/// per-preparation totals `n_totals`; `index` selects an independent stream.
pub fn sample_counts(rates: &ConditionalRates, n_totals: [u64; 2], seed: u64, index: u64) -> DoubleReadoutCounts {
    let mut counts = DoubleReadoutCounts::new();
    for p in Subspace::ALL {
        let mut rng = trial_rng(seed, StreamDomain::Resample, p.index(), index);
        let cells = [(p, p), (!p, p), (p, !p), (!p, !p)];
        let (mut left, mut mass) = (n_totals[p.index()], 1.0_f64);
        for (i, &(o2, o)) in cells.iter().enumerate() {
            let prob = rates.get(o2, o, p);
            let n = if i == cells.len() - 1 || left == 0 {
                left
            } else {
                let conditional = if mass > 0.0 { (prob / mass).clamp(0.0, 1.0) } else { 0.0 };
                Binomial::new(left, conditional).expect("valid binomial").sample(&mut rng)
            };
            counts.set(o2, o, p, n);
            left -= n;
            mass -= prob;
        }
    }
    counts
}

/// The coarse model implied by a generative config when every readout is a
/// single round with MAP decoding and nothing changes the subspace.
///
/// Only defined for configs without transitions, photon counting or leakage.
pub fn induced_single_round_model(config: &GenerativeConfig, table: &ReferenceTable) -> Result<CoarseModel> {
    config.validate()?;
    if config.transition_prob != [0.0; 2]
        || config.transition_by_outcome.is_some()
        || config.photon_model.is_some()
        || config.leak_to_21 > 0.0
    {
        return Err(Error::InvalidConfig(
            "the induced coarse model needs a config without transitions, photons or leakage".into(),
        ));
    }
    let mut readout_error = [0.0; 2];
    for s in Subspace::ALL {
        readout_error[s.index()] = RoundOutcome::ALL
            .iter()
            .filter(|&&v| crate::estimator::map_estimate(&[v], table) != s)
            .map(|v| config.round_outcome_dist[s.index()][v.index()])
            .sum();
    }
    CoarseModel::new(config.prep_error, readout_error, [[0.0; 2]; 2])
}
