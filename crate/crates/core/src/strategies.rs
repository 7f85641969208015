//! Player strategies: the three-angle SU(2) family, the two named strategies
//! used in the experiment, and their realization with a
//! quarter/half/quarter waveplate stack.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use crate::optimize::{linspace, wrap_pi, NelderMead};
use crate::qcore::{ComplexMatrix2, C64};
use crate::{tol, Error, Result};

/// Angles (θ, β₁, β₂) of a local strategy, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    pub theta: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// M(π/2, π/8, −π/8), the GHZ Nash strategy.
pub const STRATEGY_I: StrategyParams = StrategyParams {
    theta: FRAC_PI_2,
    beta1: FRAC_PI_8,
    beta2: -FRAC_PI_8,
};

/// M(π/4, 0, 0), Pareto optimal on the EPR-dominated side of the family.
pub const STRATEGY_II: StrategyParams = StrategyParams {
    theta: FRAC_PI_4,
    beta1: 0.0,
    beta2: 0.0,
};

pub const IDENTITY_STRATEGY: StrategyParams = StrategyParams {
    theta: 0.0,
    beta1: 0.0,
    beta2: 0.0,
};

impl StrategyParams {
    pub fn new(theta: f64, beta1: f64, beta2: f64) -> Result<Self> {
        Error::check_range("theta", theta, 0.0, PI)?;
        Error::check_range("beta1", beta1, -PI, PI)?;
        Error::check_range("beta2", beta2, -PI, PI)?;
        Ok(Self {
            theta,
            beta1,
            beta2,
        })
    }

    /// The restricted family β ≡ β₁ = −β₂.
    pub fn symmetric(theta: f64, beta: f64) -> Result<Self> {
        Self::new(theta, beta, -beta)
    }

    /// Maps arbitrary angles onto an equivalent in-range triple. The result
    /// reproduces the same matrix up to a global phase.
    pub fn canonical(theta: f64, beta1: f64, beta2: f64) -> Self {
        let mut theta = theta.rem_euclid(2.0 * PI);
        let mut beta2 = beta2;
        if theta > PI {
            // M(θ) = −M(θ − 2π) and M(−θ, β₁, β₂) = M(θ, β₁, β₂ + π).
            theta = 2.0 * PI - theta;
            beta2 += PI;
        }
        Self {
            theta,
            beta1: wrap_pi(beta1),
            beta2: wrap_pi(beta2),
        }
    }

    pub fn unitary(&self) -> ComplexMatrix2 {
        su2(self.theta, self.beta1, self.beta2)
    }

    /// Adds a common offset to both phases.
    pub fn phase_shifted(&self, delta: f64) -> Self {
        Self {
            beta1: self.beta1 + delta,
            beta2: self.beta2 + delta,
            ..*self
        }
    }
}

/// The strategy matrix for unconstrained angles.
pub(crate) fn su2(theta: f64, beta1: f64, beta2: f64) -> ComplexMatrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let i = C64::i();
    ComplexMatrix2::new(
        C64::from_polar(c, beta1),
        i * C64::from_polar(s, beta2),
        i * C64::from_polar(s, -beta2),
        C64::from_polar(c, -beta1),
    )
}

/// Range-checked strategy matrix.
pub fn strategy_unitary(p: &StrategyParams) -> Result<ComplexMatrix2> {
    StrategyParams::new(p.theta, p.beta1, p.beta2).map(|p| p.unitary())
}

/// Sign convention for waveplate retardance and the order in which a listed
/// triple is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JonesConvention {
    /// QWP = R(φ)·diag(1, i)·R(−φ); the first listed plate acts first.
    #[default]
    Standard,
    /// QWP = R(φ)·diag(1, −i)·R(−φ); the first listed plate acts last.
    Reversed,
}

/// Half-wave plate with its fast axis at `angle`: R(φ)·diag(1, −1)·R(−φ).
pub fn hwp(angle: f64) -> ComplexMatrix2 {
    retarder(angle, C64::new(-1.0, 0.0))
}

/// Quarter-wave plate with its fast axis at `angle`: R(φ)·diag(1, i)·R(−φ).
pub fn qwp(angle: f64) -> ComplexMatrix2 {
    retarder(angle, C64::i())
}

fn retarder(angle: f64, slow_phase: C64) -> ComplexMatrix2 {
    ComplexMatrix2::rotation(angle)
        * ComplexMatrix2::diag(C64::new(1.0, 0.0), slow_phase)
        * ComplexMatrix2::rotation(-angle)
}

/// Principal-axis orientations of a quarter/half/quarter waveplate stack, in
/// the order listed for the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateTriple {
    pub qwp1_angle: f64,
    pub hwp_angle: f64,
    pub qwp2_angle: f64,
}

impl WaveplateTriple {
    pub const fn new(qwp1_angle: f64, hwp_angle: f64, qwp2_angle: f64) -> Self {
        Self {
            qwp1_angle,
            hwp_angle,
            qwp2_angle,
        }
    }

    /// Same plates with each axis folded into (−π/2, π/2]; waveplates are
    /// invariant under a half turn.
    pub fn normalized(&self) -> Self {
        let fold = |a: f64| {
            let mut x = a.rem_euclid(PI);
            if x > FRAC_PI_2 {
                x -= PI;
            }
            x
        };
        Self::new(
            fold(self.qwp1_angle),
            fold(self.hwp_angle),
            fold(self.qwp2_angle),
        )
    }

    fn as_array(&self) -> [f64; 3] {
        [self.qwp1_angle, self.hwp_angle, self.qwp2_angle]
    }
}

/// Angles quoted for the experiment's strategy I stack.
pub const QUOTED_TRIPLE_I: WaveplateTriple = WaveplateTriple::new(-FRAC_PI_8, 5.0 * PI / 16.0, 0.0);
/// Angles quoted for the experiment's strategy II stack.
pub const QUOTED_TRIPLE_II: WaveplateTriple = WaveplateTriple::new(FRAC_PI_2, PI / 16.0, FRAC_PI_2);

/// qwp(q2)·hwp(h)·qwp(q1): light meets `qwp1` first.
pub fn compose_waveplates(w: &WaveplateTriple) -> ComplexMatrix2 {
    compose_waveplates_with(w, JonesConvention::Standard)
}

pub fn compose_waveplates_with(w: &WaveplateTriple, convention: JonesConvention) -> ComplexMatrix2 {
    match convention {
        JonesConvention::Standard => qwp(w.qwp2_angle) * hwp(w.hwp_angle) * qwp(w.qwp1_angle),
        JonesConvention::Reversed => {
            let q = |a| retarder(a, -C64::i());
            q(w.qwp1_angle) * hwp(w.hwp_angle) * q(w.qwp2_angle)
        }
    }
}

/// Finds waveplate angles whose stack equals `u` up to global phase, to
/// within 1e-9 in Frobenius distance.
pub fn solve_waveplate_angles(u: &ComplexMatrix2) -> Result<WaveplateTriple> {
    solve_waveplate_angles_with(u, JonesConvention::Standard)
}

pub fn solve_waveplate_angles_with(
    u: &ComplexMatrix2,
    convention: JonesConvention,
) -> Result<WaveplateTriple> {
    u.ensure_unitary()?;
    let residual = |x: &[f64]| {
        let w = WaveplateTriple::new(x[0], x[1], x[2]);
        let d = u.phase_distance(&compose_waveplates_with(&w, convention));
        d * d
    };

    // Coarse scan over one period of each plate, then polish the best few
    // starts. Plates repeat every π, so [0, π) per axis covers everything.
    let axis = linspace(0.0, PI, 9);
    let mut starts: Vec<([f64; 3], f64)> = Vec::with_capacity(axis.len().pow(3));
    for &a in &axis[..8] {
        for &b in &axis[..8] {
            for &c in &axis[..8] {
                let x = [a, b, c];
                starts.push((x, residual(&x)));
            }
        }
    }
    starts.sort_by(|p, q| p.1.total_cmp(&q.1));

    let nm = NelderMead {
        x_tol: 1e-13,
        f_tol: 1e-30,
        max_iter: 4000,
        initial_step: 0.1,
    };
    let target = tol::OPTIMIZATION;
    let mut best: Option<(WaveplateTriple, f64)> = None;
    for (x0, _) in starts.iter().take(12) {
        let mut x = x0.to_vec();
        // Restarting shakes the simplex out of premature collapse.
        for _ in 0..3 {
            x = nm.minimize(residual, &x).x;
        }
        let w = WaveplateTriple::new(x[0], x[1], x[2]).normalized();
        let d = u.phase_distance(&compose_waveplates_with(&w, convention));
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((w, d));
        }
        if d <= target {
            break;
        }
    }
    match best {
        Some((w, d)) if d <= target => Ok(w),
        Some((w, d)) => Err(Error::NoConvergence(format!(
            "best waveplate triple {:?} misses target by {d:e}",
            w.as_array()
        ))),
        None => unreachable!("start list is never empty"),
    }
}

/// How well a quoted waveplate triple reproduces a strategy matrix under
/// each Jones convention, together with the angles that do reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleCheck {
    pub strategy: StrategyParams,
    pub quoted: WaveplateTriple,
    /// |tr(U†W)|/2 under [`JonesConvention::Standard`].
    pub overlap_standard: f64,
    /// |tr(U†W)|/2 under [`JonesConvention::Reversed`].
    pub overlap_reversed: f64,
    /// Standard-convention angles found by [`solve_waveplate_angles`].
    pub solved: WaveplateTriple,
}

impl TripleCheck {
    pub fn reproduces_standard(&self) -> bool {
        (1.0 - self.overlap_standard).abs() <= tol::OPTIMIZATION
    }
}

pub fn check_triple(strategy: StrategyParams, quoted: WaveplateTriple) -> Result<TripleCheck> {
    let u = strategy_unitary(&strategy)?;
    Ok(TripleCheck {
        strategy,
        quoted,
        overlap_standard: u.phase_overlap(&compose_waveplates(&quoted)),
        overlap_reversed: u
            .phase_overlap(&compose_waveplates_with(&quoted, JonesConvention::Reversed)),
        solved: solve_waveplate_angles(&u)?,
    })
}

/// Checks both quoted experimental triples against strategies I and II.
pub fn quoted_triple_report() -> Result<[TripleCheck; 2]> {
    Ok([
        check_triple(STRATEGY_I, QUOTED_TRIPLE_I)?,
        check_triple(STRATEGY_II, QUOTED_TRIPLE_II)?,
    ])
}
