//! Domain types and the coarse-grained classical readout model.
//!
//! A trial consists of an intended preparation `p`, an actual starting
//! subspace `s` drawn from `Q(s|p)`, a first readout `o ~ Y(o|s)`, a possible
//! subspace change `s' ~ A(s'|o,s)` and a second readout `o' ~ Y(o'|s')`.
//! Only the pair `(o', o)` is observed, so everything downstream works with
//! the conditional rates `r(o',o|p)`.
//!
//! Subspaces are indexed with `S+ = 0` and `S- = 1`. The index assignment is
//! inferred from trial totals (the 25,000-trial preparation is `S+`) and is
//! fixed by [`Subspace::index`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two subspaces of the qubit ion's ground manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subspace {
    SPlus,
    SMinus,
}

/// The intended preparation of a trial.
pub type PrepLabel = Subspace;

/// The binary result of one full (multi-round) readout.
pub type ReadoutBit = Subspace;

impl Subspace {
    pub const ALL: [Subspace; 2] = [Subspace::SPlus, Subspace::SMinus];

    /// `S+ -> 0`, `S- -> 1`.
    pub const fn index(self) -> usize {
        match self {
            Subspace::SPlus => 0,
            Subspace::SMinus => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Subspace::SPlus),
            1 => Some(Subspace::SMinus),
            _ => None,
        }
    }

    pub const fn flip(self) -> Self {
        match self {
            Subspace::SPlus => Subspace::SMinus,
            Subspace::SMinus => Subspace::SPlus,
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            Subspace::SPlus => "S+",
            Subspace::SMinus => "S-",
        }
    }

    /// Accepts `0`/`1`, `S+`/`S-`, `plus`/`minus` and the variant names.
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "0" | "s+" | "plus" | "splus" | "s_plus" | "+" => Some(Subspace::SPlus),
            "1" | "s-" | "minus" | "sminus" | "s_minus" | "-" => Some(Subspace::SMinus),
            _ => None,
        }
    }
}

impl std::ops::Not for Subspace {
    type Output = Subspace;

    fn not(self) -> Subspace {
        self.flip()
    }
}

impl std::fmt::Display for Subspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Two-bit fluorescence result of one QLS repetition.
///
/// Serializes as the string `"b1b2"`, e.g. `"01"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoundOutcome {
    pub bit1: bool,
    pub bit2: bool,
}

impl RoundOutcome {
    pub const DARK_DARK: RoundOutcome = RoundOutcome::new(false, false);
    pub const DARK_BRIGHT: RoundOutcome = RoundOutcome::new(false, true);
    pub const BRIGHT_DARK: RoundOutcome = RoundOutcome::new(true, false);
    pub const BRIGHT_BRIGHT: RoundOutcome = RoundOutcome::new(true, true);

    /// All four outcomes in index order `00, 01, 10, 11`.
    pub const ALL: [RoundOutcome; 4] = [
        RoundOutcome::DARK_DARK,
        RoundOutcome::DARK_BRIGHT,
        RoundOutcome::BRIGHT_DARK,
        RoundOutcome::BRIGHT_BRIGHT,
    ];

    pub const fn new(bit1: bool, bit2: bool) -> Self {
        RoundOutcome { bit1, bit2 }
    }

    /// `2 * bit1 + bit2`.
    pub const fn index(self) -> usize {
        (self.bit1 as usize) << 1 | self.bit2 as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        RoundOutcome::ALL.get(index).copied()
    }

    /// Parses `"00"`, `"01"`, `"10"` or `"11"`.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let mut chars = text.chars();
        let bit = |c: Option<char>| match c {
            Some('0') => Some(false),
            Some('1') => Some(true),
            _ => None,
        };
        let b1 = bit(chars.next())?;
        let b2 = bit(chars.next())?;
        chars.next().is_none().then_some(RoundOutcome::new(b1, b2))
    }
}

impl Serialize for RoundOutcome {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RoundOutcome {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        RoundOutcome::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("{text:?} is not a two-bit outcome")))
    }
}

impl std::fmt::Display for RoundOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.bit1 as u8, self.bit2 as u8)
    }
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} = {value} is not a probability")))
    }
}

/// The eight-parameter classical model `Q`, `Y`, `A`.
///
/// Only the off-diagonal (error) probabilities are stored; the diagonal
/// entries are their complements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseModel {
    /// `Q(!p|p)` indexed by `p`.
    prep_error: [f64; 2],
    /// `Y(!s|s)` indexed by `s`.
    readout_error: [f64; 2],
    /// `A(!s|o,s)` indexed by `[o][s]`.
    transition: [[f64; 2]; 2],
}

impl CoarseModel {
    pub fn new(prep_error: [f64; 2], readout_error: [f64; 2], transition: [[f64; 2]; 2]) -> Result<Self> {
        for (i, &q) in prep_error.iter().enumerate() {
            check_probability(&format!("Q(!{i}|{i})"), q)?;
        }
        for (i, &y) in readout_error.iter().enumerate() {
            check_probability(&format!("Y(!{i}|{i})"), y)?;
        }
        for (o, row) in transition.iter().enumerate() {
            for (s, &a) in row.iter().enumerate() {
                check_probability(&format!("A(!{s}|{o},{s})"), a)?;
            }
        }
        Ok(CoarseModel {
            prep_error,
            readout_error,
            transition,
        })
    }

    /// The error-free model.
    pub fn perfect() -> Self {
        CoarseModel {
            prep_error: [0.0; 2],
            readout_error: [0.0; 2],
            transition: [[0.0; 2]; 2],
        }
    }

    /// `Q(s|p)`.
    pub fn q(&self, s: Subspace, p: PrepLabel) -> f64 {
        let err = self.prep_error[p.index()];
        if s == p {
            1.0 - err
        } else {
            err
        }
    }

    /// `Y(o|s)`.
    pub fn y(&self, o: ReadoutBit, s: Subspace) -> f64 {
        let err = self.readout_error[s.index()];
        if o == s {
            1.0 - err
        } else {
            err
        }
    }

    /// `A(s'|o,s)`.
    pub fn a(&self, s_next: Subspace, o: ReadoutBit, s: Subspace) -> f64 {
        let err = self.transition[o.index()][s.index()];
        if s_next == s {
            1.0 - err
        } else {
            err
        }
    }

    /// Whether `Y(x|x)`, `Q(x|x)` and `A(x|x,x)` are all at least `c` for
    /// both subspaces.
    pub fn satisfies_c(&self, c: f64) -> bool {
        Subspace::ALL.iter().all(|&x| {
            self.y(x, x) >= c && self.q(x, x) >= c && self.a(x, x, x) >= c
        })
    }

    /// Model probabilities `r(o',o|p)` as the sum over the four subspace
    /// sequences `(s, s')`.
    pub fn exact_rates(&self) -> ConditionalRates {
        let mut r = [[[0.0; 2]; 2]; 2];
        for p in Subspace::ALL {
            for o in Subspace::ALL {
                for o2 in Subspace::ALL {
                    let mut total = 0.0;
                    for s in Subspace::ALL {
                        for s2 in Subspace::ALL {
                            total += self.q(s, p) * self.y(o, s) * self.a(s2, o, s) * self.y(o2, s2);
                        }
                    }
                    r[p.index()][o2.index()][o.index()] = total;
                }
            }
        }
        ConditionalRates { r }
    }

    /// `F(x) = Y(!x|x) + A(!x|x,x)`: readout error plus back-action.
    pub fn true_f(&self, x: Subspace) -> f64 {
        self.y(!x, x) + self.a(!x, x, x)
    }
}

/// Probabilities `r(o',o|p)`, normalized per preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRates {
    /// Indexed `[p][o'][o]`.
    r: [[[f64; 2]; 2]; 2],
}

impl ConditionalRates {
    pub fn get(&self, o_prime: ReadoutBit, o: ReadoutBit, p: PrepLabel) -> f64 {
        self.r[p.index()][o_prime.index()][o.index()]
    }

    pub fn set(&mut self, o_prime: ReadoutBit, o: ReadoutBit, p: PrepLabel, value: f64) {
        self.r[p.index()][o_prime.index()][o.index()] = value;
    }

    pub fn zero() -> Self {
        ConditionalRates { r: [[[0.0; 2]; 2]; 2] }
    }

    /// `sum_{o',o} r(o',o|p)`.
    pub fn total(&self, p: PrepLabel) -> f64 {
        self.r[p.index()].iter().flatten().sum()
    }

    /// The disagreement rate `r(!x,x|x)`, the leading-order estimate of `F(x)`.
    pub fn disagreement(&self, x: Subspace) -> f64 {
        self.get(!x, x, x)
    }
}

/// Observed double-readout tallies `n(o',o,p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DoubleReadoutCounts {
    /// Indexed `[p][o'][o]`.
    n: [[[u64; 2]; 2]; 2],
}

impl DoubleReadoutCounts {
    pub fn new() -> Self {
        DoubleReadoutCounts::default()
    }

    pub fn get(&self, o_prime: ReadoutBit, o: ReadoutBit, p: PrepLabel) -> u64 {
        self.n[p.index()][o_prime.index()][o.index()]
    }

    pub fn set(&mut self, o_prime: ReadoutBit, o: ReadoutBit, p: PrepLabel, count: u64) {
        self.n[p.index()][o_prime.index()][o.index()] = count;
    }

    pub fn record(&mut self, o_prime: ReadoutBit, o: ReadoutBit, p: PrepLabel) {
        self.n[p.index()][o_prime.index()][o.index()] += 1;
    }

    /// `N_p`.
    pub fn total(&self, p: PrepLabel) -> u64 {
        self.n[p.index()].iter().flatten().sum()
    }

    pub fn merge(mut self, other: &DoubleReadoutCounts) -> Self {
        for (a, b) in self.n.iter_mut().flatten().flatten().zip(other.n.iter().flatten().flatten()) {
            *a += b;
        }
        self
    }

    /// Same counts with the labels `0 <-> 1` exchanged in every position.
    pub fn relabeled(&self) -> Self {
        let mut out = DoubleReadoutCounts::new();
        for (o_prime, o, p, count) in self.cells() {
            out.set(!o_prime, !o, !p, count);
        }
        out
    }

    /// All eight cells as `(o', o, p, count)`, ordered by `p`, then `o'`, then `o`.
    pub fn cells(&self) -> impl Iterator<Item = (ReadoutBit, ReadoutBit, PrepLabel, u64)> + '_ {
        Subspace::ALL.into_iter().flat_map(move |p| {
            Subspace::ALL.into_iter().flat_map(move |o_prime| {
                Subspace::ALL
                    .into_iter()
                    .map(move |o| (o_prime, o, p, self.get(o_prime, o, p)))
            })
        })
    }

    /// Mean estimator `r^(o',o|p) = n(o',o,p) / N_p`.
    pub fn rates(&self) -> Result<ConditionalRates> {
        let mut rates = ConditionalRates::zero();
        for p in Subspace::ALL {
            let total = self.total(p);
            if total == 0 {
                return Err(Error::ZeroTotal(p));
            }
            for o_prime in Subspace::ALL {
                for o in Subspace::ALL {
                    rates.set(o_prime, o, p, self.get(o_prime, o, p) as f64 / total as f64);
                }
            }
        }
        Ok(rates)
    }

    /// Artificial counts used to tune the union-bound split: `N_0 = 25000`,
    /// `N_1 = 100000`, disagreement rates near `1e-4` and preparation-error
    /// rates near `1e-2`.
    pub fn training() -> Self {
        use Subspace::{SMinus as M, SPlus as P};
        let mut n = DoubleReadoutCounts::new();
        n.set(M, M, M, 98_980);
        n.set(P, M, M, 10);
        n.set(M, P, M, 10);
        n.set(P, P, M, 1_000);
        n.set(M, M, P, 250);
        n.set(M, P, P, 2);
        n.set(P, M, P, 2);
        n.set(P, P, P, 24_746);
        n
    }
}

/// Free-function form of [`CoarseModel::exact_rates`].
pub fn exact_rates(model: &CoarseModel) -> ConditionalRates {
    model.exact_rates()
}

/// Free-function form of [`CoarseModel::true_f`].
pub fn true_f(model: &CoarseModel, x: Subspace) -> f64 {
    model.true_f(x)
}

/// Free-function form of [`DoubleReadoutCounts::rates`].
pub fn rates_from_counts(counts: &DoubleReadoutCounts) -> Result<ConditionalRates> {
    counts.rates()
}

/// Serializes a [`Subspace`] as its integer index (`0` or `1`).
pub mod serde_index {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Subspace;

    pub fn serialize<S: Serializer>(s: &Subspace, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_u8(s.index() as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Subspace, D::Error> {
        let raw = u8::deserialize(de)?;
        Subspace::from_index(raw as usize)
            .ok_or_else(|| serde::de::Error::custom(format!("subspace index {raw} is not 0 or 1")))
    }
}
