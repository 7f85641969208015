//! The tunable four-qubit state family, white-noise admixture, the
//! waveplate-angle mapping of the source and GHZ fidelity measures.

use crate::optimize::pairwise_sum;
use crate::qcore::{Pauli, PureState, StateEnsemble, C64};
use crate::{Error, Result};

pub const QUBITS: usize = 4;

/// Kets carrying the EPR-pair part of the family: |0101⟩, |0110⟩, |1001⟩, |1010⟩.
pub const EPR_KETS: [usize; 4] = [0b0101, 0b0110, 0b1001, 0b1010];

/// State weight α and production fidelity f, both in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub alpha: f64,
    pub fidelity_f: f64,
}

impl FamilyParams {
    pub fn new(alpha: f64, fidelity_f: f64) -> Result<Self> {
        Error::check_range("alpha", alpha, 0.0, 1.0)?;
        Error::check_range("f", fidelity_f, 0.0, 1.0)?;
        Ok(Self { alpha, fidelity_f })
    }

    pub fn ensemble(&self) -> Result<StateEnsemble> {
        noisy_state(self.alpha, self.fidelity_f)
    }
}

/// |Ψ(α)⟩ = α/√2 (|0000⟩ + |1111⟩) + √(1−α²)/2 (|01⟩ + |10⟩)⊗(|01⟩ + |10⟩).
pub fn family_state(alpha: f64) -> Result<PureState> {
    Error::check_range("alpha", alpha, 0.0, 1.0)?;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << QUBITS];
    let ghz = alpha * std::f64::consts::FRAC_1_SQRT_2;
    let epr = (1.0 - alpha * alpha).max(0.0).sqrt() / 2.0;
    amps[0b0000] = ghz.into();
    amps[0b1111] = ghz.into();
    for k in EPR_KETS {
        amps[k] = epr.into();
    }
    PureState::from_amplitudes(amps)
}

pub fn ghz() -> PureState {
    family_state(1.0).expect("alpha = 1 is in range")
}

/// f·|Ψ(α)⟩⟨Ψ(α)| + (1−f)/16 · Σ |ijkl⟩⟨ijkl|. Zero-weight members are
/// dropped, so f = 1 gives a single-member ensemble.
pub fn noisy_state(alpha: f64, f: f64) -> Result<StateEnsemble> {
    Error::check_range("f", f, 0.0, 1.0)?;
    let pure = family_state(alpha)?;
    let mut members = Vec::with_capacity(17);
    if f > 0.0 {
        members.push((f, pure));
    }
    if f < 1.0 {
        let w = (1.0 - f) / 16.0;
        for k in 0..1 << QUBITS {
            members.push((w, PureState::basis(QUBITS, k)?));
        }
    }
    StateEnsemble::new(members)
}

/// α as a function of the source half-wave-plate angle γ ∈ [0, π/8].
pub fn alpha_from_hwp(gamma: f64) -> Result<f64> {
    Error::check_range("gamma", gamma, 0.0, std::f64::consts::FRAC_PI_8)?;
    let s = (2.0 * gamma).sin();
    let numerator = 2.0 * std::f64::consts::SQRT_2 * s * s;
    let denominator = (5.0 - 4.0 * (4.0 * gamma).cos() + 3.0 * (8.0 * gamma).cos()).sqrt();
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// ⟨target|ρ|target⟩.
pub fn ghz_fidelity(ens: &StateEnsemble, target: &PureState) -> Result<f64> {
    if ens.num_qubits() != QUBITS || target.num_qubits() != QUBITS {
        return Err(Error::DimensionMismatch {
            expected: QUBITS,
            found: if ens.num_qubits() != QUBITS {
                ens.num_qubits()
            } else {
                target.num_qubits()
            },
        });
    }
    ens.overlap(target)
}

/// GHZ fidelity of the white-noise model, (1 + 15f)/16.
pub fn fidelity_from_f(f: f64) -> f64 {
    (1.0 + 15.0 * f) / 16.0
}

/// Inverse of [`fidelity_from_f`].
pub fn f_from_fidelity(fidelity: f64) -> f64 {
    (16.0 * fidelity - 1.0) / 15.0
}

/// A product of Pauli observables on the qubits selected by `mask`
/// (big-endian, bit 3 = qubit 0), with a sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityTerm {
    pub mask: u8,
    pub sign: f64,
}

/// One local measurement setting and the stabilizer elements it measures.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerSetting {
    pub bases: [Pauli; QUBITS],
    pub terms: Vec<ParityTerm>,
}

/// The nine settings covering all sixteen GHZ stabilizer elements: Z⊗4 for
/// the eight Z-type elements, plus X⊗4, Y⊗4 and the six arrangements of two
/// Y and two X (each with sign −1).
pub fn stabilizer_fidelity_settings() -> Vec<StabilizerSetting> {
    use Pauli::{X, Y, Z};
    let mut settings = Vec::with_capacity(9);
    let z_masks = [
        0b0000, 0b1100, 0b1010, 0b1001, 0b0110, 0b0101, 0b0011, 0b1111,
    ];
    settings.push(StabilizerSetting {
        bases: [Z; 4],
        terms: z_masks
            .iter()
            .map(|&mask| ParityTerm { mask, sign: 1.0 })
            .collect(),
    });
    let all = |sign| vec![ParityTerm { mask: 0b1111, sign }];
    settings.push(StabilizerSetting {
        bases: [X; 4],
        terms: all(1.0),
    });
    settings.push(StabilizerSetting {
        bases: [Y; 4],
        terms: all(1.0),
    });
    for ys in [0b1100u8, 0b1010, 0b1001, 0b0110, 0b0101, 0b0011] {
        let bases = std::array::from_fn(|q| if ys >> (3 - q) & 1 == 1 { Y } else { X });
        settings.push(StabilizerSetting {
            bases,
            terms: all(-1.0),
        });
    }
    settings
}

/// GHZ fidelity estimated from the signed average of stabilizer
/// expectation values, each read off the outcome distribution of its setting.
pub fn stabilizer_fidelity_estimate(
    ens: &StateEnsemble,
    settings: &[StabilizerSetting],
) -> Result<f64> {
    if ens.num_qubits() != QUBITS {
        return Err(Error::DimensionMismatch {
            expected: QUBITS,
            found: ens.num_qubits(),
        });
    }
    let mut terms = Vec::with_capacity(16);
    for setting in settings {
        let rotations = setting.bases.map(Pauli::readout_rotation);
        let probs = ens.apply_local(&rotations)?.outcome_probabilities();
        for term in &setting.terms {
            let signed: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    if (k as u8 & term.mask).count_ones().is_multiple_of(2) {
                        *p
                    } else {
                        -*p
                    }
                })
                .collect();
            terms.push(term.sign * pairwise_sum(&signed));
        }
    }
    let count = terms.len();
    if count != 16 {
        return Err(Error::Invalid(format!(
            "settings cover {count} stabilizer elements, expected 16"
        )));
    }
    Ok(pairwise_sum(&terms) / 16.0)
}
