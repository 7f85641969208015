//! Coincidence-count pipeline: parsing, efficiency correction, payoff
//! estimates with Poisson errors, synthetic counts and the fit of f.
//!
//! Detector `a`..`d` is the output mode of player A..D, `H` records bit 0
//! and `V` bit 1. Errors are first-order propagated from the Poisson
//! variance of the raw counts; efficiencies are taken as exact.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;

use crate::game::{
    closed_form, minority_payoffs, model_average_payoff, outcome_distribution, MeasurementBasis,
    NamedStrategy, StrategyProfile, PLAYERS,
};
use crate::states::noisy_state;
use crate::{Error, ParseIssue, Result};

pub const OUTCOMES: usize = 1 << PLAYERS;
pub const DETECTORS: usize = 2 * PLAYERS;

/// Identifier written into simulated tables.
pub const SAMPLER_ID: &str = "chacha8-conditional-binomial";

/// Detector label (`aH`, `aV`, ..., `dV`) for a detector index.
pub fn detector_label(index: usize) -> String {
    let mode = (b'a' + (index / 2) as u8) as char;
    let pol = if index.is_multiple_of(2) { 'H' } else { 'V' };
    format!("{mode}{pol}")
}

fn detector_index(label: &str) -> Option<usize> {
    let mut chars = label.chars();
    let (mode, pol, rest) = (chars.next()?, chars.next()?, chars.next());
    if rest.is_some() {
        return None;
    }
    let mode = match mode.to_ascii_lowercase() {
        c @ 'a'..='d' => c as usize - 'a' as usize,
        _ => return None,
    };
    let bit = match pol.to_ascii_uppercase() {
        'H' => 0,
        'V' => 1,
        _ => return None,
    };
    Some(2 * mode + bit)
}

/// Bit string of an outcome, player A first.
pub fn outcome_label(outcome: usize) -> String {
    format!("{outcome:0width$b}", width = PLAYERS)
}

fn parse_outcome(s: &str) -> Option<usize> {
    (s.len() == PLAYERS && s.bytes().all(|b| b == b'0' || b == b'1'))
        .then(|| usize::from_str_radix(s, 2).ok())
        .flatten()
}

/// Optional run description carried with a counts table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountsMeta {
    pub alpha: Option<f64>,
    pub strategy: Option<NamedStrategy>,
    pub basis: Option<MeasurementBasis>,
    /// Sampler and seed for simulated tables.
    pub generator: Option<String>,
}

/// Fourfold coincidence counts for one measurement setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    counts: [u64; OUTCOMES],
    efficiencies: [f64; DETECTORS],
    pub meta: CountsMeta,
}

impl CountsTable {
    pub fn new(
        counts: [u64; OUTCOMES],
        efficiencies: [f64; DETECTORS],
        meta: CountsMeta,
    ) -> Result<Self> {
        for (i, &e) in efficiencies.iter().enumerate() {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::Invalid(format!(
                    "efficiency of detector {} must be positive, got {e}",
                    detector_label(i)
                )));
            }
        }
        Ok(Self {
            counts,
            efficiencies,
            meta,
        })
    }

    /// Table with all detector efficiencies equal to one.
    pub fn ideal(counts: [u64; OUTCOMES]) -> Self {
        Self {
            counts,
            efficiencies: [1.0; DETECTORS],
            meta: CountsMeta::default(),
        }
    }

    pub fn counts(&self) -> &[u64; OUTCOMES] {
        &self.counts
    }

    pub fn efficiencies(&self) -> &[f64; DETECTORS] {
        &self.efficiencies
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Product of the four detector efficiencies that register `outcome`.
    pub fn detection_efficiency(&self, outcome: usize) -> f64 {
        detection_efficiency(&self.efficiencies, outcome)
    }

    /// Same table with every count multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self {
            counts: self.counts.map(|c| c * k),
            ..self.clone()
        }
    }
}

fn detection_efficiency(eff: &[f64; DETECTORS], outcome: usize) -> f64 {
    (0..PLAYERS)
        .map(|i| eff[2 * i + ((outcome >> (PLAYERS - 1 - i)) & 1)])
        .product()
}

/// Parses the `outcome,count` format.
///
/// Comment lines start with `#`. Two are interpreted:
/// `# efficiency <aH..dV> <value>` and `# meta alpha=.. strategy=.. basis=..`.
/// Every problem in the input is reported, each with its line number.
pub fn load_counts(source: &str) -> Result<CountsTable> {
    let mut issues = Vec::new();
    let mut counts: [Option<u64>; OUTCOMES] = [None; OUTCOMES];
    let mut efficiencies: [Option<f64>; DETECTORS] = [None; DETECTORS];
    let mut meta = CountsMeta::default();
    let mut header_seen = false;

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            match words.next() {
                Some("efficiency") => {
                    let fields: Vec<&str> = words.collect();
                    if fields.len() != 2 {
                        issues.push(ParseIssue::at(
                            line_no,
                            "expected `# efficiency <detector> <value>`",
                        ));
                        continue;
                    }
                    let Some(d) = detector_index(fields[0]) else {
                        issues.push(ParseIssue::at(
                            line_no,
                            format!("unknown detector `{}`", fields[0]),
                        ));
                        continue;
                    };
                    match fields[1].parse::<f64>() {
                        Ok(v) if v.is_finite() && v > 0.0 => {
                            if efficiencies[d].replace(v).is_some() {
                                issues.push(ParseIssue::at(
                                    line_no,
                                    format!("duplicate efficiency for {}", fields[0]),
                                ));
                            }
                        }
                        _ => issues.push(ParseIssue::at(
                            line_no,
                            format!("efficiency must be a positive number, got `{}`", fields[1]),
                        )),
                    }
                }
                Some("meta") => {
                    for kv in words {
                        if let Err(m) = parse_meta(kv, &mut meta) {
                            issues.push(ParseIssue::at(line_no, m));
                        }
                    }
                }
                Some("generator") => meta.generator = Some(words.collect::<Vec<_>>().join(" ")),
                _ => {}
            }
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.replace(' ', "").eq_ignore_ascii_case("outcome,count") {
                continue;
            }
            issues.push(ParseIssue::at(line_no, "missing `outcome,count` header"));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            issues.push(ParseIssue::at(
                line_no,
                format!("expected 2 fields, found {}", fields.len()),
            ));
            continue;
        }
        let Some(outcome) = parse_outcome(fields[0]) else {
            issues.push(ParseIssue::at(
                line_no,
                format!(
                    "outcome must be a {PLAYERS}-bit string, got `{}`",
                    fields[0]
                ),
            ));
            continue;
        };
        let count = match fields[1].parse::<i64>() {
            Ok(c) if c < 0 => {
                issues.push(ParseIssue::at(
                    line_no,
                    format!("negative count {c} for outcome {}", fields[0]),
                ));
                continue;
            }
            Ok(c) => c as u64,
            Err(_) => {
                issues.push(ParseIssue::at(
                    line_no,
                    format!("count must be an integer, got `{}`", fields[1]),
                ));
                continue;
            }
        };
        if counts[outcome].replace(count).is_some() {
            issues.push(ParseIssue::at(
                line_no,
                format!("duplicate outcome {}", fields[0]),
            ));
        }
    }

    if !header_seen {
        issues.push(ParseIssue::general("no data rows"));
    }
    for (k, c) in counts.iter().enumerate() {
        if c.is_none() && header_seen {
            issues.push(ParseIssue::general(format!(
                "missing outcome {}",
                outcome_label(k)
            )));
        }
    }
    if !issues.is_empty() {
        return Err(Error::Parse(issues));
    }
    CountsTable::new(
        counts.map(|c| c.unwrap_or(0)),
        efficiencies.map(|e| e.unwrap_or(1.0)),
        meta,
    )
}

fn parse_meta(kv: &str, meta: &mut CountsMeta) -> std::result::Result<(), String> {
    let (key, value) = kv
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
    match key {
        "alpha" => {
            let a: f64 = value
                .parse()
                .map_err(|_| format!("alpha must be a number, got `{value}`"))?;
            if !(0.0..=1.0).contains(&a) {
                return Err(format!("alpha must lie in [0, 1], got {a}"));
            }
            meta.alpha = Some(a);
        }
        "strategy" => meta.strategy = Some(value.parse().map_err(|e: Error| e.to_string())?),
        "basis" => meta.basis = Some(value.parse().map_err(|e: Error| e.to_string())?),
        _ => return Err(format!("unknown meta key `{key}`")),
    }
    Ok(())
}

/// Serializes a table in the format read by [`load_counts`].
pub fn write_counts(t: &CountsTable) -> String {
    let mut out = String::new();
    let m = &t.meta;
    let mut meta = Vec::new();
    if let Some(a) = m.alpha {
        meta.push(format!("alpha={a}"));
    }
    if let Some(s) = m.strategy {
        meta.push(format!("strategy={s}"));
    }
    if let Some(b) = m.basis {
        meta.push(format!("basis={b}"));
    }
    if !meta.is_empty() {
        let _ = writeln!(out, "# meta {}", meta.join(" "));
    }
    if let Some(g) = &m.generator {
        let _ = writeln!(out, "# generator {g}");
    }
    for (i, e) in t.efficiencies.iter().enumerate() {
        let _ = writeln!(out, "# efficiency {} {e}", detector_label(i));
    }
    out.push_str("outcome,count\n");
    for (k, c) in t.counts.iter().enumerate() {
        let _ = writeln!(out, "{},{c}", outcome_label(k));
    }
    out
}

/// Efficiency-corrected outcome probabilities and their variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedProbabilities {
    pub probabilities: [f64; OUTCOMES],
    pub variances: [f64; OUTCOMES],
}

/// Intermediate quantities shared by the estimators.
struct Corrected {
    p: [f64; OUTCOMES],
    /// Var(n_j)/(E_j S)², the weight of outcome j in every propagated variance.
    w: [f64; OUTCOMES],
}

fn correct(t: &CountsTable) -> Result<Corrected> {
    if t.total() == 0 {
        return Err(Error::Degenerate("all counts are zero".into()));
    }
    let eff: Vec<f64> = (0..OUTCOMES).map(|k| t.detection_efficiency(k)).collect();
    let c: Vec<f64> = (0..OUTCOMES).map(|k| t.counts[k] as f64 / eff[k]).collect();
    let s: f64 = c.iter().sum();
    let mut p = [0.0; OUTCOMES];
    let mut w = [0.0; OUTCOMES];
    for k in 0..OUTCOMES {
        p[k] = c[k] / s;
        w[k] = t.counts[k] as f64 / (eff[k] * s).powi(2);
    }
    Ok(Corrected { p, w })
}

impl Corrected {
    /// Value and variance of Σ_k p_k·g_k. ∂/∂n_j = (g_j − value)/(E_j S).
    fn linear(&self, g: impl Fn(usize) -> f64) -> (f64, f64) {
        let value: f64 = (0..OUTCOMES).map(|k| self.p[k] * g(k)).sum();
        let var = (0..OUTCOMES)
            .map(|j| (g(j) - value).powi(2) * self.w[j])
            .sum();
        (value, var)
    }
}

pub fn corrected_probabilities(t: &CountsTable) -> Result<CorrectedProbabilities> {
    let c = correct(t)?;
    let mut variances = [0.0; OUTCOMES];
    for (k, v) in variances.iter_mut().enumerate() {
        *v = c.linear(|j| if j == k { 1.0 } else { 0.0 }).1;
    }
    Ok(CorrectedProbabilities {
        probabilities: c.p,
        variances,
    })
}

/// Measured payoffs with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEstimate {
    pub per_player: [f64; PLAYERS],
    pub per_player_error: [f64; PLAYERS],
    pub average: f64,
    pub std_error: f64,
}

pub fn payoff_estimate(t: &CountsTable) -> Result<PayoffEstimate> {
    let c = correct(t)?;
    let table: Vec<[f64; PLAYERS]> = (0..OUTCOMES).map(|k| minority_payoffs(k as u8)).collect();
    let mut per_player = [0.0; PLAYERS];
    let mut per_player_error = [0.0; PLAYERS];
    for i in 0..PLAYERS {
        let (v, var) = c.linear(|k| table[k][i]);
        per_player[i] = v;
        per_player_error[i] = var.sqrt();
    }
    let (_, var) = c.linear(|k| table[k].iter().sum::<f64>() / PLAYERS as f64);
    Ok(PayoffEstimate {
        per_player,
        per_player_error,
        average: per_player.iter().sum::<f64>() / PLAYERS as f64,
        std_error: var.sqrt(),
    })
}

/// Draws `total_events` fourfold coincidences for the profile on the noisy
/// family state, all detectors ideal.
pub fn simulate_counts(
    alpha: f64,
    f: f64,
    profile: &StrategyProfile,
    basis: MeasurementBasis,
    total_events: u64,
    seed: u64,
) -> Result<CountsTable> {
    simulate_counts_with_efficiencies(
        alpha,
        f,
        profile,
        basis,
        total_events,
        seed,
        [1.0; DETECTORS],
    )
}

/// As [`simulate_counts`] with lossy detectors: an outcome is recorded at a
/// rate proportional to its probability times its detection efficiency.
pub fn simulate_counts_with_efficiencies(
    alpha: f64,
    f: f64,
    profile: &StrategyProfile,
    basis: MeasurementBasis,
    total_events: u64,
    seed: u64,
    efficiencies: [f64; DETECTORS],
) -> Result<CountsTable> {
    if total_events == 0 {
        return Err(Error::Invalid("total_events must be positive".into()));
    }
    let probs = outcome_distribution(&noisy_state(alpha, f)?, profile, basis)?;
    let weighted: Vec<f64> = (0..OUTCOMES)
        .map(|k| probs[k].max(0.0) * detection_efficiency(&efficiencies, k))
        .collect();
    let norm: f64 = weighted.iter().sum();
    let weighted: Vec<f64> = weighted.iter().map(|w| w / norm).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = multinomial(&mut rng, total_events, &weighted)?;

    let strategy = [NamedStrategy::I, NamedStrategy::II]
        .into_iter()
        .find(|s| *profile == StrategyProfile::symmetric(s.params()));
    let meta = CountsMeta {
        alpha: Some(alpha),
        strategy,
        basis: Some(basis),
        generator: Some(format!(
            "{SAMPLER_ID} seed={seed} f={f} events={total_events}"
        )),
    };
    CountsTable::new(counts, efficiencies, meta)
}

/// Multinomial draw as a chain of conditional binomials.
fn multinomial<R: Rng>(rng: &mut R, n: u64, probs: &[f64]) -> Result<[u64; OUTCOMES]> {
    let mut out = [0u64; OUTCOMES];
    let mut remaining = n;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == probs.len() - 1 {
            out[k] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let draw =
            rng.sample(Binomial::new(remaining, q).map_err(|e| Error::Invalid(e.to_string()))?);
        out[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(out)
}

/// Model used to predict average payoffs in the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PayoffModel {
    /// Full state-vector simulation.
    #[default]
    BruteForce,
    /// Reference closed forms, including the strategy I expression that
    /// misses the simulated curve. Covers the Z basis, X with strategy I and
    /// Y with strategy II, which share the Z curves.
    Printed,
}

impl PayoffModel {
    pub fn payoff(
        self,
        alpha: f64,
        f: f64,
        strategy: NamedStrategy,
        basis: MeasurementBasis,
    ) -> Result<f64> {
        match self {
            PayoffModel::BruteForce => model_average_payoff(alpha, f, strategy.params(), basis),
            PayoffModel::Printed => {
                Error::check_range("alpha", alpha, 0.0, 1.0)?;
                Error::check_range("f", f, 0.0, 1.0)?;
                use MeasurementBasis::{X, Y, Z};
                match (strategy, basis) {
                    (NamedStrategy::I, Z | X) => {
                        Ok(closed_form::strategy_i_payoff_printed(alpha, f))
                    }
                    (NamedStrategy::II, Z | Y) => Ok(closed_form::strategy_ii_payoff(alpha, f)),
                    _ => Err(Error::Invalid(format!(
                        "no closed form for strategy {strategy} in the {basis} basis"
                    ))),
                }
            }
        }
    }
}

impl fmt::Display for PayoffModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PayoffModel::BruteForce => "brute-force",
            PayoffModel::Printed => "printed",
        })
    }
}

impl FromStr for PayoffModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "brute-force" | "bruteforce" => Ok(PayoffModel::BruteForce),
            "printed" => Ok(PayoffModel::Printed),
            _ => Err(Error::Invalid(format!("unknown payoff model `{s}`"))),
        }
    }
}

/// One measured average payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub alpha: f64,
    pub strategy: NamedStrategy,
    pub basis: MeasurementBasis,
    pub payoff: f64,
    pub error: f64,
}

/// Parses `alpha,strategy,basis,payoff,error` rows after a header line.
pub fn load_fit_points(source: &str) -> Result<Vec<FitPoint>> {
    let mut issues = Vec::new();
    let mut points = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line
                .replace(' ', "")
                .eq_ignore_ascii_case("alpha,strategy,basis,payoff,error")
            {
                continue;
            }
            issues.push(ParseIssue::at(
                line_no,
                "missing `alpha,strategy,basis,payoff,error` header",
            ));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            issues.push(ParseIssue::at(
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
            continue;
        }
        let num = |i: usize, name: &str, issues: &mut Vec<ParseIssue>| {
            let v = fields[i].parse::<f64>().ok().filter(|v| v.is_finite());
            if v.is_none() {
                issues.push(ParseIssue::at(
                    line_no,
                    format!("{name} must be a number, got `{}`", fields[i]),
                ));
            }
            v
        };
        let alpha = num(0, "alpha", &mut issues);
        let strategy = fields[1]
            .parse::<NamedStrategy>()
            .map_err(|e| issues.push(ParseIssue::at(line_no, e.to_string())))
            .ok();
        let basis = fields[2]
            .parse::<MeasurementBasis>()
            .map_err(|e| issues.push(ParseIssue::at(line_no, e.to_string())))
            .ok();
        let payoff = num(3, "payoff", &mut issues);
        let error = num(4, "error", &mut issues);
        if let (Some(alpha), Some(strategy), Some(basis), Some(payoff), Some(error)) =
            (alpha, strategy, basis, payoff, error)
        {
            if !(0.0..=1.0).contains(&alpha) {
                issues.push(ParseIssue::at(
                    line_no,
                    format!("alpha must lie in [0, 1], got {alpha}"),
                ));
                continue;
            }
            points.push(FitPoint {
                alpha,
                strategy,
                basis,
                payoff,
                error,
            });
        }
    }
    if !issues.is_empty() {
        return Err(Error::Parse(issues));
    }
    if points.is_empty() {
        return Err(Error::Parse(vec![ParseIssue::general("no data rows")]));
    }
    Ok(points)
}

/// Serializes fit points in the format read by [`load_fit_points`].
pub fn write_fit_points(points: &[FitPoint]) -> String {
    let mut out = String::from("alpha,strategy,basis,payoff,error\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.alpha, p.strategy, p.basis, p.payoff, p.error
        );
    }
    out
}

/// Weighted least-squares estimate of the noise fidelity f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Best fit, clamped to [0, 1].
    pub f_hat: f64,
    /// Unconstrained least-squares solution.
    pub f_unclamped: f64,
    pub f_err: f64,
    /// χ² at `f_hat`.
    pub chi2: f64,
    pub points: usize,
    pub clamped: bool,
    pub model: PayoffModel,
}

/// Fits f to measured average payoffs.
///
/// Every model payoff has the form 1/8 + f·d(α, strategy, basis), so the
/// weighted least-squares solution is closed-form and f_err = (Σ d²/σ²)^(−1/2).
pub fn fit_f(points: &[FitPoint], model: PayoffModel) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        if !(p.error.is_finite() && p.error > 0.0) {
            return Err(Error::Domain {
                name: "error",
                value: p.error,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        let base = model.payoff(p.alpha, 0.0, p.strategy, p.basis)?;
        let slope = model.payoff(p.alpha, 1.0, p.strategy, p.basis)? - base;
        rows.push((1.0 / (p.error * p.error), slope, p.payoff - base));
    }
    if rows.iter().all(|(_, d, _)| d.abs() < 1e-12) {
        return Err(Error::Degenerate("no point depends on f".into()));
    }
    let sdd: f64 = rows.iter().map(|(w, d, _)| w * d * d).sum();
    let sdy: f64 = rows.iter().map(|(w, d, y)| w * d * y).sum();
    let f_unclamped = sdy / sdd;
    let f_hat = f_unclamped.clamp(0.0, 1.0);
    let chi2 = rows
        .iter()
        .map(|(w, d, y)| w * (y - f_hat * d).powi(2))
        .sum();
    Ok(FitResult {
        f_hat,
        f_unclamped,
        f_err: sdd.sqrt().recip(),
        chi2,
        points: points.len(),
        clamped: f_hat != f_unclamped,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{STRATEGY_I, STRATEGY_II};

    fn uniform_text(count: i64) -> String {
        let mut s = String::from("outcome,count\n");
        for k in 0..OUTCOMES {
            s.push_str(&format!("{},{count}\n", outcome_label(k)));
        }
        s
    }

    fn issues(err: Error) -> Vec<String> {
        match err {
            Error::Parse(v) => v.iter().map(|i| i.to_string()).collect(),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn loads_counts_with_efficiencies_and_meta() {
        let mut text = String::from("# meta alpha=1 strategy=I basis=Z\n");
        for i in 0..DETECTORS {
            text.push_str(&format!("# efficiency {} 0.{}\n", detector_label(i), i + 1));
        }
        text.push_str(&uniform_text(7));
        let t = load_counts(&text).unwrap();
        assert_eq!(t.counts(), &[7; OUTCOMES]);
        assert_eq!(t.efficiencies()[3], 0.4);
        assert_eq!(t.meta.alpha, Some(1.0));
        assert_eq!(t.meta.strategy, Some(NamedStrategy::I));
        assert_eq!(t.meta.basis, Some(MeasurementBasis::Z));
        assert_eq!(load_counts(&write_counts(&t)).unwrap(), t);
    }

    #[test]
    fn missing_outcome_is_named() {
        let text: String = uniform_text(5)
            .lines()
            .filter(|l| !l.starts_with("1010"))
            .map(|l| format!("{l}\n"))
            .collect();
        let msgs = issues(load_counts(&text).unwrap_err());
        assert!(
            msgs.iter().any(|m| m.contains("missing outcome 1010")),
            "{msgs:?}"
        );
    }

    #[test]
    fn bad_rows_are_itemized() {
        let text = uniform_text(5)
            .replace("0011,5", "0011,-4")
            .replace("0100,5", "0100,x")
            + "0001,2\n01,3\n";
        let msgs = issues(load_counts(&text).unwrap_err());
        assert!(
            msgs.iter()
                .any(|m| m.contains("negative count") && m.contains("line 5")),
            "{msgs:?}"
        );
        assert!(msgs.iter().any(|m| m.contains("must be an integer")));
        assert!(msgs.iter().any(|m| m.contains("duplicate outcome 0001")));
        assert!(msgs.iter().any(|m| m.contains("4-bit string")));
        assert!(msgs.iter().any(|m| m.contains("missing outcome 0011")));
    }

    #[test]
    fn bad_efficiency_lines_are_rejected() {
        let text = format!(
            "# efficiency eH 0.5\n# efficiency aH 0\n# meta colour=red\n{}",
            uniform_text(1)
        );
        assert_eq!(issues(load_counts(&text).unwrap_err()).len(), 3);
        assert!(load_counts("").is_err());
    }

    #[test]
    fn uniform_counts_give_poisson_errors() {
        let t = CountsTable::ideal([100; OUTCOMES]);
        let c = corrected_probabilities(&t).unwrap();
        for k in 0..OUTCOMES {
            assert!((c.probabilities[k] - 1.0 / 16.0).abs() < 1e-15);
            let binomial = (1.0 / 16.0) * (15.0 / 16.0) / 1600.0;
            assert!((c.variances[k] - binomial).abs() < 1e-15);
        }
    }

    #[test]
    fn single_outcome_and_zero_counts() {
        let mut counts = [0; OUTCOMES];
        counts[0] = 100;
        let c = corrected_probabilities(&CountsTable::ideal(counts)).unwrap();
        assert_eq!(c.probabilities[0], 1.0);
        assert!(matches!(
            corrected_probabilities(&CountsTable::ideal([0; OUTCOMES])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn lossy_detector_is_up_weighted() {
        let mut eff = [1.0; DETECTORS];
        eff[7] = 0.5; // dV
        let t = CountsTable::new([10; OUTCOMES], eff, CountsMeta::default()).unwrap();
        let p = corrected_probabilities(&t).unwrap().probabilities;
        for (k, pk) in p.iter().enumerate() {
            let expected = if k & 1 == 1 { 2.0 / 24.0 } else { 1.0 / 24.0 };
            assert!((pk - expected).abs() < 1e-15);
        }
        assert!(CountsTable::new([1; OUTCOMES], [0.0; DETECTORS], CountsMeta::default()).is_err());
    }

    #[test]
    fn payoff_estimate_examples() {
        let est = payoff_estimate(&CountsTable::ideal([50; OUTCOMES])).unwrap();
        assert!((est.average - 0.125).abs() < 1e-15);
        let mut counts = [0; OUTCOMES];
        counts[0b0001] = 40;
        let est = payoff_estimate(&CountsTable::ideal(counts)).unwrap();
        assert_eq!(est.per_player, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn payoff_estimate_is_scale_invariant() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let counts: [u64; OUTCOMES] = std::array::from_fn(|_| rng.random_range(0..500));
            let eff: [f64; DETECTORS] = std::array::from_fn(|_| rng.random_range(0.3..1.0));
            let t = CountsTable::new(counts, eff, CountsMeta::default()).unwrap();
            let a = payoff_estimate(&t).unwrap();
            let b = payoff_estimate(&t.scaled(7)).unwrap();
            for i in 0..PLAYERS {
                assert!((a.per_player[i] - b.per_player[i]).abs() < 1e-12);
            }
            let p = corrected_probabilities(&t).unwrap().probabilities;
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((a.average - a.per_player.iter().sum::<f64>() / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let profile = StrategyProfile::symmetric(STRATEGY_I);
        let a = simulate_counts(0.5, 0.8, &profile, MeasurementBasis::X, 10_000, 9).unwrap();
        let b = simulate_counts(0.5, 0.8, &profile, MeasurementBasis::X, 10_000, 9).unwrap();
        let c = simulate_counts(0.5, 0.8, &profile, MeasurementBasis::X, 10_000, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts(), c.counts());
        assert_eq!(a.total(), 10_000);
        assert_eq!(a.meta.strategy, Some(NamedStrategy::I));
        assert!(simulate_counts(0.5, 0.8, &profile, MeasurementBasis::X, 0, 9).is_err());
    }

    fn within_sigma(alpha: f64, f: f64, strategy: StrategyParams, target: f64, n: u64, seed: u64) {
        let t = simulate_counts(
            alpha,
            f,
            &StrategyProfile::symmetric(strategy),
            MeasurementBasis::Z,
            n,
            seed,
        )
        .unwrap();
        let est = payoff_estimate(&t).unwrap();
        assert!(
            (est.average - target).abs() <= 3.0 * est.std_error.max(1e-12),
            "{est:?} vs {target}"
        );
    }

    use crate::strategies::StrategyParams;

    #[test]
    fn simulated_payoffs_match_the_model() {
        within_sigma(1.0, 1.0, STRATEGY_I, 0.25, 1_000_000, 1);
        within_sigma(0.0, 1.0, STRATEGY_I, 0.0, 1_000_000, 2);
        within_sigma(1.0, 0.71, STRATEGY_I, 0.125 + 0.71 / 8.0, 100_000, 3);
    }

    #[test]
    fn efficiency_correction_recovers_the_model() {
        let eff = [0.9, 0.6, 0.8, 0.7, 0.95, 0.5, 0.65, 0.85];
        let profile = StrategyProfile::symmetric(STRATEGY_II);
        let t = simulate_counts_with_efficiencies(
            0.4,
            0.9,
            &profile,
            MeasurementBasis::Z,
            1_000_000,
            4,
            eff,
        )
        .unwrap();
        let est = payoff_estimate(&t).unwrap();
        let model = model_average_payoff(0.4, 0.9, STRATEGY_II, MeasurementBasis::Z).unwrap();
        assert!((est.average - model).abs() <= 3.0 * est.std_error);
    }

    fn model_points(f: f64, basis: MeasurementBasis) -> Vec<FitPoint> {
        [0.0, 0.3, 0.6, 0.8, 1.0]
            .iter()
            .flat_map(|&alpha| {
                [NamedStrategy::I, NamedStrategy::II].map(|strategy| FitPoint {
                    alpha,
                    strategy,
                    basis,
                    payoff: model_average_payoff(alpha, f, strategy.params(), basis).unwrap(),
                    error: 0.01,
                })
            })
            .collect()
    }

    #[test]
    fn fit_is_exact_on_model_data() {
        for basis in MeasurementBasis::ALL {
            let fit = fit_f(&model_points(0.63, basis), PayoffModel::BruteForce).unwrap();
            assert!((fit.f_hat - 0.63).abs() < 1e-9);
            assert!(fit.chi2 < 1e-12);
            assert!(!fit.clamped);
        }
    }

    #[test]
    fn fit_clamps_and_flags() {
        let p = FitPoint {
            alpha: 1.0,
            strategy: NamedStrategy::I,
            basis: MeasurementBasis::Z,
            payoff: 0.25,
            error: 1e-6,
        };
        let fit = fit_f(&[p, p], PayoffModel::BruteForce).unwrap();
        assert!((fit.f_hat - 1.0).abs() < 1e-9);
        let high = FitPoint { payoff: 0.26, ..p };
        let fit = fit_f(&[high, high], PayoffModel::BruteForce).unwrap();
        assert_eq!(fit.f_hat, 1.0);
        assert!(fit.clamped && fit.f_unclamped > 1.0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let p = FitPoint {
            alpha: 1.0,
            strategy: NamedStrategy::I,
            basis: MeasurementBasis::Z,
            payoff: 0.2,
            error: 0.01,
        };
        assert!(matches!(
            fit_f(&[p], PayoffModel::BruteForce),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            fit_f(&[p, FitPoint { error: 0.0, ..p }], PayoffModel::BruteForce),
            Err(Error::Domain { .. })
        ));
        // Strategy I at α = 1/√2 does not depend on f.
        let flat = FitPoint {
            alpha: 0.5f64.sqrt(),
            ..p
        };
        assert!(matches!(
            fit_f(&[flat, flat], PayoffModel::BruteForce),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn printed_model_differs_only_for_strategy_i() {
        let alpha = (2.0f64 / 3.0).sqrt();
        let ii = PayoffModel::Printed
            .payoff(alpha, 1.0, NamedStrategy::II, MeasurementBasis::Z)
            .unwrap();
        assert!((ii - 1.0 / 6.0).abs() < 1e-12);
        let i = PayoffModel::Printed
            .payoff(alpha, 1.0, NamedStrategy::I, MeasurementBasis::Z)
            .unwrap();
        assert!((i - 1.0 / 6.0 + 0.0076460).abs() < 1e-6);
        assert!(PayoffModel::Printed
            .payoff(alpha, 1.0, NamedStrategy::II, MeasurementBasis::X)
            .is_err());
        assert_eq!(
            "printed".parse::<PayoffModel>().unwrap(),
            PayoffModel::Printed
        );
    }

    #[test]
    fn fit_points_round_trip() {
        let points = model_points(0.7, MeasurementBasis::Y);
        assert_eq!(load_fit_points(&write_fit_points(&points)).unwrap(), points);
        assert!(load_fit_points("alpha,strategy,basis,payoff,error\n").is_err());
        let msgs = issues(
            load_fit_points(
                "alpha,strategy,basis,payoff,error\n0.5,III,Z,0.1,0.01\n2,I,Z,0.1,0.01\n",
            )
            .unwrap_err(),
        );
        assert_eq!(msgs.len(), 2, "{msgs:?}");
    }

    #[test]
    fn detector_labels() {
        let labels: Vec<String> = (0..DETECTORS).map(detector_label).collect();
        assert_eq!(labels, ["aH", "aV", "bH", "bV", "cH", "cV", "dH", "dV"]);
        for (i, l) in labels.iter().enumerate() {
            assert_eq!(detector_index(l), Some(i));
        }
        let t = CountsTable::new(
            [1; OUTCOMES],
            [0.5, 1.0, 1.0, 0.25, 1.0, 1.0, 1.0, 1.0],
            CountsMeta::default(),
        )
        .unwrap();
        // 0001: aH, bH, cH, dV.
        assert_eq!(t.detection_efficiency(0b0001), 0.5);
        // 0100: aH, bV, cH, dH.
        assert_eq!(t.detection_efficiency(0b0100), 0.125);
    }
}
