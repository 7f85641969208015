//! Dense complex linear algebra for small qubit registers.
//!
//! Amplitude index `i` of an n-qubit state encodes the outcome bits
//! big-endian: qubit 0 (player A) is the most significant bit, so index
//! `0b0001` is the ket |0001⟩ = |HHHV⟩.

use std::ops::Mul;

use num_complex::Complex64;

use crate::optimize::pairwise_sum;
use crate::{tol, Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2 {
    pub m: [[C64; 2]; 2],
}

impl ComplexMatrix2 {
    pub const IDENTITY: Self = Self {
        m: [[ONE, ZERO], [ZERO, ONE]],
    };

    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Self {
            m: [[m00, m01], [m10, m11]],
        }
    }

    pub const fn diag(a: C64, b: C64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    /// Rotation of the polarization plane by `angle` (real orthogonal).
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c.into(), (-s).into(), s.into(), c.into())
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0], m[1][0], m[0][1], m[1][1])
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, k: C64) -> Self {
        let m = &self.m;
        Self::new(k * m[0][0], k * m[0][1], k * m[1][0], k * m[1][1])
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Largest entrywise deviation of M†M from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        let mut worst: f64 = 0.0;
        for (i, row) in p.m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((z - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tolerance: f64) -> bool {
        self.unitarity_defect() <= tolerance
    }

    pub(crate) fn ensure_unitary(&self) -> Result<()> {
        let d = self.unitarity_defect();
        if d <= tol::ALGEBRAIC {
            Ok(())
        } else {
            Err(Error::NotUnitary(d))
        }
    }

    /// |tr(U†V)| / 2, which is 1 exactly when `other` equals `self` up to a
    /// global phase (for unitary arguments).
    pub fn phase_overlap(&self, other: &Self) -> f64 {
        (self.adjoint() * *other).trace().norm() / 2.0
    }

    /// Frobenius distance between `other` and `e^{iφ}·self`, minimized over
    /// the global phase φ. Computed entrywise, so it stays accurate near zero
    /// where `1 - phase_overlap` would cancel.
    pub fn phase_distance(&self, other: &Self) -> f64 {
        let t = (self.adjoint() * *other).trace();
        let phase = if t.norm() > 0.0 { t / t.norm() } else { ONE };
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += (other.m[i][j] - phase * self.m[i][j]).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn equal_up_to_phase(&self, other: &Self, tolerance: f64) -> bool {
        self.phase_distance(other) <= tolerance
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Self::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

/// Single-qubit Pauli axes, used to choose a readout basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// Rotation applied before computational-basis readout so that the +1
    /// eigenstate of this Pauli is reported as bit 0 and the −1 eigenstate as
    /// bit 1. X uses the Hadamard; Y uses H·S†.
    pub fn readout_rotation(self) -> ComplexMatrix2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = ComplexMatrix2::new(h.into(), h.into(), h.into(), (-h).into());
        match self {
            Pauli::Z => ComplexMatrix2::IDENTITY,
            Pauli::X => hadamard,
            Pauli::Y => hadamard * ComplexMatrix2::diag(ONE, -C64::i()),
        }
    }
}

/// A normalized pure state of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
    qubits: usize,
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len >= 2 && len.is_power_of_two() {
        Ok(len.trailing_zeros() as usize)
    } else {
        Err(Error::Invalid(format!(
            "amplitude vector length {len} is not 2^n with n >= 1"
        )))
    }
}

impl PureState {
    /// Wraps amplitudes that are already normalized to within 1e-12.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_len(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > tol::ALGEBRAIC {
            return Err(Error::Invalid(format!(
                "state is not normalized (squared norm {norm})"
            )));
        }
        Ok(Self { amps, qubits })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_len(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Degenerate("zero amplitude vector".into()));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { amps, qubits })
    }

    /// Computational basis ket |index⟩.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        if qubits == 0 || qubits > 30 {
            return Err(Error::Invalid(format!("unsupported qubit count {qubits}")));
        }
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { amps, qubits })
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.same_dim(other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let k = C64::from_polar(1.0, phase);
        Self {
            amps: self.amps.iter().map(|a| a * k).collect(),
            qubits: self.qubits,
        }
    }

    /// (op₀ ⊗ op₁ ⊗ … ⊗ opₙ₋₁)|self⟩, op₀ acting on the leftmost qubit.
    pub fn apply_local(&self, ops: &[ComplexMatrix2]) -> Result<Self> {
        if ops.len() != self.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                found: ops.len(),
            });
        }
        for op in ops {
            op.ensure_unitary()?;
        }
        let mut amps = self.amps.clone();
        for (q, op) in ops.iter().enumerate() {
            apply_one(&mut amps, self.qubits, q, op);
        }
        Ok(Self {
            amps,
            qubits: self.qubits,
        })
    }

    /// Applies one operator to one qubit, leaving the others untouched.
    pub fn apply_single(&self, qubit: usize, op: &ComplexMatrix2) -> Result<Self> {
        if qubit >= self.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                found: qubit,
            });
        }
        op.ensure_unitary()?;
        let mut amps = self.amps.clone();
        apply_one(&mut amps, self.qubits, qubit, op);
        Ok(Self {
            amps,
            qubits: self.qubits,
        })
    }

    /// Computational-basis outcome probabilities |amplitudeᵢ|².
    pub fn outcome_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn same_dim(&self, dim: usize) -> Result<()> {
        if dim == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            })
        }
    }
}

fn apply_one(amps: &mut [C64], qubits: usize, qubit: usize, op: &ComplexMatrix2) {
    let stride = 1usize << (qubits - 1 - qubit);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + stride {
            let [a, b] = op.apply([amps[i], amps[i + stride]]);
            amps[i] = a;
            amps[i + stride] = b;
        }
        base += 2 * stride;
    }
}

/// A convex mixture of pure states sharing one qubit count.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    members: Vec<(f64, PureState)>,
}

impl StateEnsemble {
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::Invalid("empty ensemble".into()));
        };
        let qubits = first.num_qubits();
        for (w, s) in &members {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::Invalid(format!("negative or non-finite weight {w}")));
            }
            if s.num_qubits() != qubits {
                return Err(Error::DimensionMismatch {
                    expected: qubits,
                    found: s.num_qubits(),
                });
            }
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > tol::ALGEBRAIC {
            return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { members })
    }

    pub fn pure(state: PureState) -> Self {
        Self {
            members: vec![(1.0, state)],
        }
    }

    /// Equal-weight mixture of all computational basis states (the maximally
    /// mixed state).
    pub fn uniform_basis(qubits: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        let w = 1.0 / dim as f64;
        let members = (0..dim)
            .map(|i| PureState::basis(qubits, i).map(|s| (w, s)))
            .collect::<Result<_>>()?;
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }

    pub fn num_qubits(&self) -> usize {
        self.members[0].1.num_qubits()
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    /// The same mixture with `ops` applied locally to every member.
    pub fn apply_local(&self, ops: &[ComplexMatrix2]) -> Result<Self> {
        let members = self
            .members
            .iter()
            .map(|(w, s)| s.apply_local(ops).map(|t| (*w, t)))
            .collect::<Result<_>>()?;
        Ok(Self { members })
    }

    /// Weighted sum of member outcome probabilities.
    pub fn outcome_probabilities(&self) -> Vec<f64> {
        let per_member: Vec<Vec<f64>> = self
            .members
            .iter()
            .map(|(_, s)| s.outcome_probabilities())
            .collect();
        let mut terms = vec![0.0; self.members.len()];
        (0..self.dim())
            .map(|k| {
                for (t, ((w, _), p)) in terms.iter_mut().zip(self.members.iter().zip(&per_member)) {
                    *t = w * p[k];
                }
                pairwise_sum(&terms)
            })
            .collect()
    }

    /// ⟨target|ρ|target⟩ = Σ wᵢ |⟨target|ψᵢ⟩|².
    pub fn overlap(&self, target: &PureState) -> Result<f64> {
        let terms = self
            .members
            .iter()
            .map(|(w, s)| target.inner(s).map(|z| w * z.norm_sqr()))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

/// Free-function form of [`PureState::apply_local`].
pub fn apply_local(state: &PureState, ops: &[ComplexMatrix2]) -> Result<PureState> {
    state.apply_local(ops)
}

pub fn outcome_probabilities(state: &PureState) -> Vec<f64> {
    state.outcome_probabilities()
}

pub fn ensemble_probabilities(ens: &StateEnsemble) -> Vec<f64> {
    ens.outcome_probabilities()
}
