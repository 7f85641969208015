//! The Minority payoff rule and expected payoffs of strategy profiles.
//!
//! No disentangling gate is applied before readout. For this game it only
//! swaps outcomes with the same winner, so payoffs are unchanged.

use std::fmt;
use std::str::FromStr;

use crate::optimize::pairwise_sum;
use crate::qcore::{ComplexMatrix2, Pauli, PureState, StateEnsemble};
use crate::states::{noisy_state, QUBITS};
use crate::strategies::{StrategyParams, IDENTITY_STRATEGY, STRATEGY_I, STRATEGY_II};
use crate::{Error, Result};

pub const PLAYERS: usize = QUBITS;

/// Strategies of players A, B, C and D (Debra).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyProfile {
    pub players: [StrategyParams; PLAYERS],
}

impl StrategyProfile {
    pub fn new(players: [StrategyParams; PLAYERS]) -> Self {
        Self { players }
    }

    pub fn symmetric(p: StrategyParams) -> Self {
        Self {
            players: [p; PLAYERS],
        }
    }

    pub fn identity() -> Self {
        Self::symmetric(IDENTITY_STRATEGY)
    }

    /// Everyone plays `common` except player `index`.
    pub fn with_deviation(common: StrategyParams, index: usize, deviation: StrategyParams) -> Self {
        let mut players = [common; PLAYERS];
        players[index] = deviation;
        Self { players }
    }

    pub fn unitaries(&self) -> [ComplexMatrix2; PLAYERS] {
        self.players.map(|p| p.unitary())
    }
}

/// Named strategies accepted on the command line and in data files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedStrategy {
    I,
    II,
}

impl NamedStrategy {
    pub fn params(self) -> StrategyParams {
        match self {
            NamedStrategy::I => STRATEGY_I,
            NamedStrategy::II => STRATEGY_II,
        }
    }
}

impl FromStr for NamedStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(NamedStrategy::I),
            "II" | "ii" | "2" => Ok(NamedStrategy::II),
            other => Err(Error::Invalid(format!(
                "unknown strategy `{other}` (expected I or II)"
            ))),
        }
    }
}

impl fmt::Display for NamedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NamedStrategy::I => "I",
            NamedStrategy::II => "II",
        })
    }
}

/// Readout basis, applied to all four qubits alike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MeasurementBasis {
    #[default]
    Z,
    X,
    Y,
}

impl MeasurementBasis {
    pub const ALL: [MeasurementBasis; 3] = [
        MeasurementBasis::Z,
        MeasurementBasis::X,
        MeasurementBasis::Y,
    ];

    pub fn pauli(self) -> Pauli {
        match self {
            MeasurementBasis::Z => Pauli::Z,
            MeasurementBasis::X => Pauli::X,
            MeasurementBasis::Y => Pauli::Y,
        }
    }
}

impl FromStr for MeasurementBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Z" | "z" => Ok(MeasurementBasis::Z),
            "X" | "x" => Ok(MeasurementBasis::X),
            "Y" | "y" => Ok(MeasurementBasis::Y),
            other => Err(Error::Invalid(format!(
                "unknown basis `{other}` (expected Z, X or Y)"
            ))),
        }
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasurementBasis::Z => "Z",
            MeasurementBasis::X => "X",
            MeasurementBasis::Y => "Y",
        })
    }
}

/// Expected payoff of each player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffVector(pub [f64; PLAYERS]);

impl PayoffVector {
    pub fn average(&self) -> f64 {
        self.total() / PLAYERS as f64
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.0)
    }

    pub fn player(&self, index: usize) -> f64 {
        self.0[index]
    }
}

/// Bit chosen by `player` in `outcome` (player 0 is the leftmost bit).
pub fn outcome_bit(outcome: usize, player: usize, players: usize) -> usize {
    (outcome >> (players - 1 - player)) & 1
}

/// Strict-minority payoffs for `players` participants: everyone on the
/// strictly smaller side gets 1.
pub fn minority_payoffs_n(outcome: usize, players: usize) -> Vec<f64> {
    let ones = outcome.count_ones() as usize;
    let zeros = players - ones;
    let minority_bit = match ones.cmp(&zeros) {
        std::cmp::Ordering::Less if ones > 0 => Some(1),
        std::cmp::Ordering::Greater if zeros > 0 => Some(0),
        _ => None,
    };
    (0..players)
        .map(|p| match minority_bit {
            Some(b) if outcome_bit(outcome, p, players) == b => 1.0,
            _ => 0.0,
        })
        .collect()
}

/// Four-player payoffs: only a 3–1 split pays, and only the lone player.
pub fn minority_payoffs(outcome: u8) -> [f64; PLAYERS] {
    let v = minority_payoffs_n(usize::from(outcome & 0xF), PLAYERS);
    [v[0], v[1], v[2], v[3]]
}

/// The player paid on `outcome`, if any.
pub fn minority_winner(outcome: u8) -> Option<usize> {
    minority_payoffs(outcome).iter().position(|&p| p == 1.0)
}

/// (A ⊗ B ⊗ C ⊗ D)|state⟩.
pub fn final_state(state: &PureState, profile: &StrategyProfile) -> Result<PureState> {
    check_qubits(state.num_qubits())?;
    state.apply_local(&profile.unitaries())
}

/// Outcome distribution after the profile and the basis change.
pub fn outcome_distribution(
    ens: &StateEnsemble,
    profile: &StrategyProfile,
    basis: MeasurementBasis,
) -> Result<Vec<f64>> {
    check_qubits(ens.num_qubits())?;
    let readout = basis.pauli().readout_rotation();
    let ops = profile.unitaries().map(|u| readout * u);
    Ok(ens.apply_local(&ops)?.outcome_probabilities())
}

/// Contracts an outcome distribution with the payoff table.
pub fn payoffs_from_distribution(probs: &[f64]) -> Result<PayoffVector> {
    if probs.len() != 1 << PLAYERS {
        return Err(Error::DimensionMismatch {
            expected: 1 << PLAYERS,
            found: probs.len(),
        });
    }
    let mut out = [0.0; PLAYERS];
    let mut terms = vec![0.0; probs.len()];
    for (player, slot) in out.iter_mut().enumerate() {
        for (k, (t, p)) in terms.iter_mut().zip(probs).enumerate() {
            *t = p * minority_payoffs(k as u8)[player];
        }
        *slot = pairwise_sum(&terms);
    }
    Ok(PayoffVector(out))
}

pub fn expected_payoffs(
    ens: &StateEnsemble,
    profile: &StrategyProfile,
    basis: MeasurementBasis,
) -> Result<PayoffVector> {
    payoffs_from_distribution(&outcome_distribution(ens, profile, basis)?)
}

/// Average payoff of a symmetric profile on the noisy family state.
pub fn model_average_payoff(
    alpha: f64,
    f: f64,
    strategy: StrategyParams,
    basis: MeasurementBasis,
) -> Result<f64> {
    let ens = noisy_state(alpha, f)?;
    Ok(expected_payoffs(&ens, &StrategyProfile::symmetric(strategy), basis)?.average())
}

/// Uniform mixture of the eight 3–1-split kets. It pays 1/4 on average in
/// the computational basis without any entanglement.
pub fn separable_benchmark() -> StateEnsemble {
    let members = (0..1usize << PLAYERS)
        .filter(|k| matches!(k.count_ones(), 1 | 3))
        .map(|k| {
            (
                1.0 / 8.0,
                PureState::basis(PLAYERS, k).expect("index in range"),
            )
        })
        .collect();
    StateEnsemble::new(members).expect("eight equal weights sum to one")
}

fn check_qubits(found: usize) -> Result<()> {
    if found == PLAYERS {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: PLAYERS,
            found,
        })
    }
}

/// Closed-form average payoffs of the two Pareto-optimal symmetric profiles.
pub mod closed_form {
    /// Strategy II on the EPR-dominated side:
    /// 1/8 + (f/16)·α·(2√(2−2α²) − α).
    pub fn strategy_ii_payoff(alpha: f64, f: f64) -> f64 {
        let s = (2.0 - 2.0 * alpha * alpha).max(0.0).sqrt();
        0.125 + f / 16.0 * alpha * (2.0 * s - alpha)
    }

    /// Strategy I as printed: 1/8 + (f/8)·α·(2α² − 1). Agrees with the
    /// simulated payoff only at α = 1/√2 and α = 1, and misses the crossing
    /// with strategy II at α = √(2/3).
    pub fn strategy_i_payoff_printed(alpha: f64, f: f64) -> f64 {
        0.125 + f / 8.0 * alpha * (2.0 * alpha * alpha - 1.0)
    }

    /// Strategy I as simulated: 1/8 + (f/8)·(2α² − 1), i.e. α²/4 at f = 1.
    pub fn strategy_i_payoff(alpha: f64, f: f64) -> f64 {
        0.125 + f / 8.0 * (2.0 * alpha * alpha - 1.0)
    }
}
