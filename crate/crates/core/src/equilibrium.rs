//! Symmetric Nash equilibria and Pareto-optimal profiles.
//!
//! Everything here works with Z-basis readout. A symmetric point (θ, β) is
//! the profile where all four players use M(θ, β, −β). Since M(θ, β + π, −β − π)
//! = −M(θ, β, −β), β only matters modulo π and the searches cover
//! one period of β.
//!
//! Equilibria are certified by brute force: Debra's best response is searched
//! over her full (θ′, β₁′, β₂′) space with a dense grid and a Nelder–Mead
//! polish, and a point counts as an equilibrium when her best gain is within
//! the certification tolerance.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::game::{expected_payoffs, MeasurementBasis, StrategyProfile};
use crate::optimize::{linspace, wrap_pi, NelderMead};
use crate::qcore::{ComplexMatrix2, StateEnsemble, C64};
use crate::states::noisy_state;
use crate::strategies::{su2, StrategyParams};
use crate::{tol, Error, Result};

/// The common strategy M(θ, β, −β) of a symmetric profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricPoint {
    pub theta: f64,
    pub beta: f64,
}

impl SymmetricPoint {
    pub fn new(theta: f64, beta: f64) -> Result<Self> {
        Error::check_range("theta", theta, 0.0, PI)?;
        Error::check_range("beta", beta, -PI, PI)?;
        Ok(Self { theta, beta })
    }

    pub fn params(&self) -> StrategyParams {
        StrategyParams {
            theta: self.theta,
            beta1: self.beta,
            beta2: -self.beta,
        }
    }

    pub fn unitary(&self) -> ComplexMatrix2 {
        su2(self.theta, self.beta, -self.beta)
    }

    /// Representative with θ clamped to [0, π] and β folded into (−π/2, π/2].
    /// At θ = 0 or π the matrix is diagonal or anti-diagonal and β only
    /// contributes a phase that Z readout cannot see, so β is set to 0.
    fn canonical(theta: f64, beta: f64) -> Self {
        let theta = theta.clamp(0.0, PI);
        let mut beta = wrap_pi(beta);
        if beta > FRAC_PI_2 {
            beta -= PI;
        } else if beta <= -FRAC_PI_2 {
            beta += PI;
        }
        let (s, c) = (theta / 2.0).sin_cos();
        if s.abs() < 1e-7 || c.abs() < 1e-7 {
            beta = 0.0;
        }
        Self { theta, beta }
    }

    /// Parameter distance with β compared modulo π.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut db = (self.beta - other.beta).rem_euclid(PI);
        if db > FRAC_PI_2 {
            db = PI - db;
        }
        (self.theta - other.theta).hypot(db)
    }
}

/// Grid and tolerance settings for the searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Points per axis for every grid scan. Stationary points closer than
    /// about two grid cells can merge into one seed.
    pub grid: usize,
    /// Convergence tolerance of the local polish.
    pub refine_tol: f64,
    /// Largest deviation gain still certified as an equilibrium.
    pub certify_tol: f64,
    /// Largest gradient norm accepted for a stationary point.
    pub stationary_tol: f64,
    /// Grid cells polished after each scan.
    pub polish_starts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid: 64,
            refine_tol: tol::OPTIMIZATION,
            certify_tol: tol::CERTIFY,
            stationary_tol: 1e-6,
            polish_starts: 4,
        }
    }
}

impl SearchConfig {
    fn polisher(&self) -> NelderMead {
        NelderMead {
            x_tol: self.refine_tol,
            f_tol: self.refine_tol * self.refine_tol,
            max_iter: 5000,
            initial_step: 0.02,
        }
    }
}

/// Average payoff when all four players use the symmetric point on the
/// noisy family state.
pub fn symmetric_payoff(alpha: f64, f: f64, point: SymmetricPoint) -> Result<f64> {
    let ens = noisy_state(alpha, f)?;
    symmetric_payoff_on(&ens, point)
}

fn symmetric_payoff_on(ens: &StateEnsemble, point: SymmetricPoint) -> Result<f64> {
    let profile = StrategyProfile::symmetric(point.params());
    Ok(expected_payoffs(ens, &profile, MeasurementBasis::Z)?.average())
}

/// Debra's Z-basis payoff as a function of her own operator U, with the
/// other three players fixed.
///
/// Debra wins exactly on |000⟩|1⟩ and |111⟩|0⟩ of (A⊗B⊗C⊗U)ρ(…)†, so her
/// payoff is (U K₀ U†)₁₁ + (U K₁ U†)₀₀ where K₀ and K₁ are her reduced
/// 2×2 blocks conditioned on the others reading 000 and 111.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationLandscape {
    k0: [[C64; 2]; 2],
    k1: [[C64; 2]; 2],
}

impl DeviationLandscape {
    pub fn new(ens: &StateEnsemble, others: [ComplexMatrix2; 3]) -> Result<Self> {
        if ens.num_qubits() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: ens.num_qubits(),
            });
        }
        let ops = [others[0], others[1], others[2], ComplexMatrix2::IDENTITY];
        let played = ens.apply_local(&ops)?;
        let zero = C64::new(0.0, 0.0);
        let mut k0 = [[zero; 2]; 2];
        let mut k1 = [[zero; 2]; 2];
        for (w, s) in played.members() {
            let a = s.amplitudes();
            let v0 = [a[0b0000], a[0b0001]];
            let v1 = [a[0b1110], a[0b1111]];
            for i in 0..2 {
                for j in 0..2 {
                    k0[i][j] += v0[i] * v0[j].conj() * *w;
                    k1[i][j] += v1[i] * v1[j].conj() * *w;
                }
            }
        }
        Ok(Self { k0, k1 })
    }

    /// Landscape when A, B and C all play `common`.
    pub fn symmetric(ens: &StateEnsemble, common: &ComplexMatrix2) -> Result<Self> {
        Self::new(ens, [*common; 3])
    }

    pub fn payoff(&self, u: &ComplexMatrix2) -> f64 {
        quad(&u.m[1], &self.k0, &u.m[1]).re + quad(&u.m[0], &self.k1, &u.m[0]).re
    }

    pub fn payoff_at(&self, theta: f64, beta1: f64, beta2: f64) -> f64 {
        self.payoff(&su2(theta, beta1, beta2))
    }

    /// Gradient of the payoff along the symmetric family M(θ′, β′, −β′),
    /// evaluated at (θ′, β′).
    pub fn symmetric_gradient(&self, theta: f64, beta: f64) -> (f64, f64) {
        let u = su2(theta, beta, -beta);
        let (s, c) = (theta / 2.0).sin_cos();
        let i = C64::i();
        let e = |phi: f64| C64::from_polar(1.0, phi);
        // ∂M/∂θ′.
        let d_theta = ComplexMatrix2::new(
            -0.5 * s * e(beta),
            0.5 * c * i * e(-beta),
            0.5 * c * i * e(beta),
            -0.5 * s * e(-beta),
        );
        // ∂M/∂β′ with β₁′ = β′ and β₂′ = −β′.
        let d_beta = ComplexMatrix2::new(
            i * c * e(beta),
            s * e(-beta),
            -s * e(beta),
            -i * c * e(-beta),
        );
        let deriv = |du: &ComplexMatrix2| {
            2.0 * (quad(&du.m[1], &self.k0, &u.m[1]).re + quad(&du.m[0], &self.k1, &u.m[0]).re)
        };
        (deriv(&d_theta), deriv(&d_beta))
    }
}

/// Σ a_j K_jk conj(b_k).
fn quad(a: &[C64; 2], k: &[[C64; 2]; 2], b: &[C64; 2]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..2 {
        for l in 0..2 {
            acc += a[j] * k[j][l] * b[l].conj();
        }
    }
    acc
}

/// One period of β: −π/2 + kπ/n for k < n. Contains β = 0 for even n.
fn beta_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| -FRAC_PI_2 + PI * k as f64 / n as f64)
        .collect()
}

/// Debra's best unilateral improvement over a symmetric point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport {
    /// Debra's payoff when she plays the common strategy.
    pub base_payoff: f64,
    /// Best payoff found over her whole strategy space.
    pub best_payoff: f64,
    /// `best_payoff − base_payoff`, never negative.
    pub gain: f64,
    /// Her best response, mapped into the parameter ranges.
    pub argmax: StrategyParams,
}

pub fn deviation_gain(
    alpha: f64,
    f: f64,
    point: SymmetricPoint,
    config: &SearchConfig,
) -> Result<DeviationReport> {
    let ens = noisy_state(alpha, f)?;
    let landscape = DeviationLandscape::symmetric(&ens, &point.unitary())?;
    Ok(best_response(&landscape, point.params(), config))
}

/// Grid scan of Debra's (θ′, β₁′, β₂′) space followed by a local polish of
/// the best cells. Ties on the grid go to the lowest flat index.
pub fn best_response(
    landscape: &DeviationLandscape,
    current: StrategyParams,
    config: &SearchConfig,
) -> DeviationReport {
    let n = config.grid.max(2);
    let thetas = linspace(0.0, PI, n);
    let betas = linspace(-PI, PI, n);
    let half: Vec<(f64, f64)> = thetas.iter().map(|t| (t / 2.0).sin_cos()).collect();
    let phases: Vec<C64> = betas.iter().map(|&b| C64::from_polar(1.0, b)).collect();
    let i = C64::i();

    // Best cell within each θ′ slab, evaluated in parallel.
    let slabs: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|ti| {
            let (s, c) = half[ti];
            let mut best = (f64::NEG_INFINITY, 0);
            for (b1, e1) in phases.iter().enumerate() {
                for (b2, e2) in phases.iter().enumerate() {
                    let u =
                        ComplexMatrix2::new(e1 * c, i * e2 * s, i * e2.conj() * s, e1.conj() * c);
                    let v = landscape.payoff(&u);
                    if v > best.0 {
                        best = (v, (ti * n + b1) * n + b2);
                    }
                }
            }
            best
        })
        .collect();

    let mut ranked = slabs.clone();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let base_payoff = landscape.payoff(&current.unitary());
    let mut best_payoff = base_payoff;
    let mut argmax = current;

    let decode = |flat: usize| {
        [
            thetas[flat / (n * n)],
            betas[(flat / n) % n],
            betas[flat % n],
        ]
    };
    let polisher = config.polisher();
    let objective = |x: &[f64]| -landscape.payoff_at(x[0], x[1], x[2]);
    for &(grid_value, flat) in ranked.iter().take(config.polish_starts.max(1)) {
        let start = decode(flat);
        if grid_value > best_payoff {
            best_payoff = grid_value;
            argmax = StrategyParams::canonical(start[0], start[1], start[2]);
        }
        let m = polisher.minimize(objective, &start);
        if -m.value > best_payoff {
            best_payoff = -m.value;
            argmax = StrategyParams::canonical(m.x[0], m.x[1], m.x[2]);
        }
    }

    DeviationReport {
        base_payoff,
        best_payoff,
        gain: best_payoff - base_payoff,
        argmax,
    }
}

/// θ of the EPR-side symmetric equilibrium (β = 0):
/// cos θ = √[(2 − 3α²)/(2 − α² + 2α√(2 − 2α²))]. `None` above α = √(2/3).
pub fn ne_theta(alpha: f64) -> Option<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return None;
    }
    let numerator = 2.0 - 3.0 * alpha * alpha;
    if numerator < -1e-15 {
        return None;
    }
    let s = (2.0 - 2.0 * alpha * alpha).sqrt();
    let ratio = numerator.max(0.0) / (2.0 - alpha * alpha + 2.0 * alpha * s);
    Some(ratio.sqrt().min(1.0).acos())
}

/// Payoff of the EPR-side equilibrium:
/// α(2 − 3α²)(α + √(2 − 2α²)) / (4 − 2α² + 4α√(2 − 2α²)).
pub fn ne_payoff(alpha: f64) -> Result<f64> {
    Error::check_range("alpha", alpha, 0.0, (2.0f64 / 3.0).sqrt())?;
    let s = (2.0 - 2.0 * alpha * alpha).sqrt();
    Ok(alpha * (2.0 - 3.0 * alpha * alpha) * (alpha + s)
        / (4.0 - 2.0 * alpha * alpha + 4.0 * alpha * s))
}

/// Location and value of the largest EPR-side equilibrium payoff:
/// α = √((3 − √3)/6), payoff (3 + 2√3)/(18 + 10√3).
pub fn ne_payoff_peak() -> (f64, f64) {
    let r3 = 3f64.sqrt();
    (
        ((3.0 - r3) / 6.0).sqrt(),
        (3.0 + 2.0 * r3) / (18.0 + 10.0 * r3),
    )
}

/// Closed-form derivatives of Debra's payoff with respect to θ′ and β′ at
/// θ′ = θ, β′ = β, for the pure family state.
pub fn payoff_gradient_closed(alpha: f64, point: SymmetricPoint) -> (f64, f64) {
    let s = (2.0 - 2.0 * alpha * alpha).max(0.0).sqrt();
    let c4 = (4.0 * point.beta).cos();
    let sin_t = point.theta.sin();
    let sin2 = sin_t * sin_t;
    let a2 = alpha * alpha;
    let d_theta = (2.0 * point.theta).sin() / 8.0
        * (2.0 * a2
            + 2.0 * alpha * s * c4
            + (2.0 * a2 - 2.0 - 2.0 * alpha * s * c4 - a2 * c4 * c4) * sin2);
    let d_beta =
        alpha / 2.0 * (4.0 * point.beta).sin() * sin2 * ((s + alpha * c4) * sin2 - 2.0 * s);
    (d_theta, d_beta)
}

/// A symmetric stationary point and its certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    pub point: SymmetricPoint,
    /// Payoff to each player at the point.
    pub payoff: f64,
    /// Norm of Debra's own-strategy gradient at the point.
    pub gradient_norm: f64,
    pub max_deviation_gain: f64,
    pub best_deviation: StrategyParams,
    pub certified: bool,
    pub grid_resolution: usize,
    pub refine_tol: f64,
    pub certify_tol: f64,
}

/// All symmetric points where Debra's own-strategy gradient vanishes, each
/// with its deviation certificate. Certified or not.
pub fn symmetric_stationary_points(
    alpha: f64,
    f: f64,
    config: &SearchConfig,
) -> Result<Vec<EquilibriumReport>> {
    let ens = noisy_state(alpha, f)?;
    let n = config.grid.max(3);
    let thetas = linspace(0.0, PI, n);
    let betas = beta_grid(n);

    let grad_sq = |theta: f64, beta: f64| -> f64 {
        let theta = theta.clamp(0.0, PI);
        let u = su2(theta, beta, -beta);
        match DeviationLandscape::symmetric(&ens, &u) {
            Ok(l) => {
                let (gt, gb) = l.symmetric_gradient(theta, beta);
                gt * gt + gb * gb
            }
            Err(_) => f64::INFINITY,
        }
    };

    let field: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| grad_sq(thetas[k / n], betas[k % n]))
        .collect();

    // Local minima of |∇|² against the four axis neighbours, ties allowed.
    // Diagonal valleys can hide minima from a full 8-neighbour test. The β
    // axis wraps around.
    let mut seeds = Vec::new();
    for ti in 0..n {
        for bi in 0..n {
            let v = field[ti * n + bi];
            let mut neighbours = vec![ti * n + (bi + 1) % n, ti * n + (bi + n - 1) % n];
            if ti > 0 {
                neighbours.push((ti - 1) * n + bi);
            }
            if ti + 1 < n {
                neighbours.push((ti + 1) * n + bi);
            }
            if neighbours.iter().all(|&k| v <= field[k]) {
                seeds.push((thetas[ti], betas[bi]));
            }
        }
    }

    let polisher = NelderMead {
        initial_step: PI / n as f64,
        x_tol: config.refine_tol,
        f_tol: 1e-30,
        ..config.polisher()
    };
    let polished: Vec<Option<SymmetricPoint>> = seeds
        .par_iter()
        .map(|&(t, b)| {
            let mut x = vec![t, b];
            let mut value = grad_sq(t, b);
            // A restart lets the simplex recover if it collapsed early.
            for _ in 0..3 {
                if value.sqrt() <= config.stationary_tol * 1e-3 {
                    break;
                }
                let m = polisher.minimize(|p| grad_sq(p[0], p[1]), &x);
                x = m.x;
                value = m.value;
            }
            (value.sqrt() <= config.stationary_tol).then(|| SymmetricPoint::canonical(x[0], x[1]))
        })
        .collect();

    let mut points: Vec<SymmetricPoint> = Vec::new();
    for p in polished.into_iter().flatten() {
        if points.iter().all(|q| q.distance(&p) > 1e-5) {
            points.push(p);
        }
    }
    points.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.beta.total_cmp(&b.beta)));

    points
        .into_par_iter()
        .map(|point| {
            let landscape = DeviationLandscape::symmetric(&ens, &point.unitary())?;
            let (gt, gb) = landscape.symmetric_gradient(point.theta, point.beta);
            let dev = best_response(&landscape, point.params(), config);
            Ok(EquilibriumReport {
                point,
                payoff: symmetric_payoff_on(&ens, point)?,
                gradient_norm: gt.hypot(gb),
                max_deviation_gain: dev.gain,
                best_deviation: dev.argmax,
                certified: dev.gain <= config.certify_tol,
                grid_resolution: config.grid,
                refine_tol: config.refine_tol,
                certify_tol: config.certify_tol,
            })
        })
        .collect()
}

/// Certified symmetric Nash equilibria. An empty list is a valid answer.
pub fn find_symmetric_ne(
    alpha: f64,
    f: f64,
    config: &SearchConfig,
) -> Result<Vec<EquilibriumReport>> {
    Ok(symmetric_stationary_points(alpha, f, config)?
        .into_iter()
        .filter(|r| r.certified)
        .collect())
}

/// The best symmetric profile and its payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoReport {
    pub point: SymmetricPoint,
    pub payoff: f64,
    pub grid_resolution: usize,
}

/// Global maximum of the symmetric payoff over (θ, β).
pub fn find_symmetric_po(alpha: f64, f: f64, config: &SearchConfig) -> Result<ParetoReport> {
    let ens = noisy_state(alpha, f)?;
    let n = config.grid.max(2);
    let thetas = linspace(0.0, PI, n);
    let betas = beta_grid(n);
    let payoff = |theta: f64, beta: f64| -> f64 {
        symmetric_payoff_on(&ens, SymmetricPoint::canonical(theta, beta))
            .unwrap_or(f64::NEG_INFINITY)
    };

    let field: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| payoff(thetas[k / n], betas[k % n]))
        .collect();
    let mut ranked: Vec<usize> = (0..n * n).collect();
    ranked.sort_by(|&a, &b| field[b].total_cmp(&field[a]).then(a.cmp(&b)));

    let first = ranked[0];
    let mut best = (
        field[first],
        SymmetricPoint::canonical(thetas[first / n], betas[first % n]),
    );
    let polisher = config.polisher();
    for (rank, &k) in ranked.iter().take(config.polish_starts.max(1)).enumerate() {
        let m = polisher.minimize(|x| -payoff(x[0], x[1]), &[thetas[k / n], betas[k % n]]);
        // Later cells must beat the polished best cell by more than the
        // tolerance, so equal maxima keep the earliest cell.
        let margin = if rank == 0 { 0.0 } else { config.refine_tol };
        if -m.value > best.0 + margin {
            best = (-m.value, SymmetricPoint::canonical(m.x[0], m.x[1]));
        }
    }
    Ok(ParetoReport {
        point: best.1,
        payoff: best.0,
        grid_resolution: n,
    })
}
