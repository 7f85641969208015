use std::fs;

use anyhow::{Context, Result};
use qminority_core::analysis::{
    fit_f, load_counts, load_fit_points, payoff_estimate, simulate_counts_with_efficiencies,
    write_counts, PayoffModel, DETECTORS,
};
use qminority_core::equilibrium::{
    deviation_gain, find_symmetric_ne, find_symmetric_po, ne_payoff, ne_theta,
    symmetric_stationary_points, SearchConfig, SymmetricPoint,
};
use qminority_core::game::{expected_payoffs, model_average_payoff, StrategyProfile, PLAYERS};
use qminority_core::optimize::linspace;
use qminority_core::states::{
    family_state, ghz, ghz_fidelity, noisy_state, stabilizer_fidelity_estimate,
    stabilizer_fidelity_settings,
};
use qminority_core::strategies::{
    compose_waveplates_with, solve_waveplate_angles_with, JonesConvention, StrategyParams,
    WaveplateTriple, QUOTED_TRIPLE_I, QUOTED_TRIPLE_II, STRATEGY_I, STRATEGY_II,
};

use crate::table::Table;
use crate::{Cli, Command, SearchArgs};

pub fn run(cli: &Cli) -> Result<()> {
    let digits = cli.digits;
    let out = match &cli.command {
        Command::Payoff(a) => payoff(a, digits)?,
        Command::ScanAlpha(a) => scan_alpha(a, digits)?,
        Command::FindNe(a) => find_ne(a, digits)?,
        Command::FindPo(a) => find_po(a, digits)?,
        Command::Deviation(a) => deviation(a, digits)?,
        Command::Fit(a) => fit(a, digits)?,
        Command::SimulateCounts(a) => {
            let text = simulate(a, digits)?;
            if let Some(path) = &a.output {
                fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
                return Ok(());
            }
            text
        }
        Command::Estimate(a) => estimate(a, digits)?,
        Command::Fidelity(a) => fidelity(a, digits)?,
        Command::Waveplates(a) => waveplates(a, digits)?,
    };
    print!("{out}");
    Ok(())
}

fn config(s: &SearchArgs) -> SearchConfig {
    SearchConfig {
        grid: s.grid as usize,
        refine_tol: s.refine_tol,
        certify_tol: s.certify_tol,
        ..SearchConfig::default()
    }
}

fn search_meta(t: &mut Table, c: &SearchConfig) {
    t.meta(format!(
        "grid={} refine_tol={:e} certify_tol={:e} stationary_tol={:e} polish_starts={}",
        c.grid, c.refine_tol, c.certify_tol, c.stationary_tol, c.polish_starts
    ));
}

fn strategy_meta(name: &str, p: &StrategyParams) -> String {
    format!(
        "strategy={name} theta={} beta1={} beta2={}",
        p.theta, p.beta1, p.beta2
    )
}

fn payoff(a: &crate::PayoffArgs, digits: u8) -> Result<String> {
    let (name, params) = a.strategy.resolve();
    let params = StrategyParams::new(params.theta, params.beta1, params.beta2)?;
    let ens = noisy_state(a.state.alpha, a.state.f)?;
    let v = expected_payoffs(&ens, &StrategyProfile::symmetric(params), a.basis)?;
    let mut t = Table::new("payoff", digits);
    t.meta(format!(
        "alpha={} f={} basis={}",
        a.state.alpha, a.state.f, a.basis
    ))
    .meta(strategy_meta(&name, &params))
    .header(&["player_a", "player_b", "player_c", "player_d", "average"]);
    let mut row: Vec<String> = v.0.iter().map(|x| t.num(*x)).collect();
    row.push(t.num(v.average()));
    t.row(row);
    Ok(t.render())
}

fn scan_alpha(a: &crate::ScanArgs, digits: u8) -> Result<String> {
    let alphas = match &a.alphas {
        Some(list) => list.clone(),
        None => linspace(0.0, 1.0, a.npoints as usize),
    };
    let mut t = Table::new("scan-alpha", digits);
    t.meta(format!(
        "f={} basis={} points={}",
        a.f,
        a.basis,
        alphas.len()
    ))
    .meta(strategy_meta(&a.strategy.to_string(), &a.strategy.params()))
    .meta("printed: reference closed form, NA where none applies")
    .header(&["alpha", "brute_force", "printed", "discrepancy"]);
    for alpha in alphas {
        let brute = model_average_payoff(alpha, a.f, a.strategy.params(), a.basis)?;
        let (printed, gap) = match PayoffModel::Printed.payoff(alpha, a.f, a.strategy, a.basis) {
            Ok(p) => (t.num(p), t.num(p - brute)),
            Err(_) => ("NA".into(), "NA".into()),
        };
        t.row(vec![t.num(alpha), t.num(brute), printed, gap]);
    }
    Ok(t.render())
}

fn find_ne(a: &crate::NeArgs, digits: u8) -> Result<String> {
    let cfg = config(&a.search);
    let (alpha, f) = (a.state.alpha, a.state.f);
    let reports = if a.all {
        symmetric_stationary_points(alpha, f, &cfg)?
    } else {
        find_symmetric_ne(alpha, f, &cfg)?
    };
    let mut t = Table::new("find-ne", digits);
    t.meta(format!("alpha={alpha} f={f} basis=Z"));
    search_meta(&mut t, &cfg);
    let certified = reports.iter().filter(|r| r.certified).count();
    t.meta(format!("certified equilibria: {certified}"));
    if let (Some(theta), Ok(p)) = (ne_theta(alpha), ne_payoff(alpha)) {
        if f == 1.0 {
            t.meta(format!(
                "closed-form beta=0 branch: theta={theta} payoff={p}"
            ));
        }
    }
    t.header(&[
        "theta",
        "beta",
        "payoff",
        "gradient_norm",
        "max_deviation_gain",
        "certified",
    ]);
    for r in &reports {
        t.row(vec![
            t.num(r.point.theta),
            t.num(r.point.beta),
            t.num(r.payoff),
            format!("{:.3e}", r.gradient_norm),
            format!("{:.3e}", r.max_deviation_gain.max(0.0)),
            r.certified.to_string(),
        ]);
    }
    Ok(t.render())
}

fn find_po(a: &crate::PoArgs, digits: u8) -> Result<String> {
    let cfg = config(&a.search);
    let r = find_symmetric_po(a.state.alpha, a.state.f, &cfg)?;
    let mut t = Table::new("find-po", digits);
    t.meta(format!("alpha={} f={} basis=Z", a.state.alpha, a.state.f));
    search_meta(&mut t, &cfg);
    t.header(&["theta", "beta", "payoff"]);
    t.row(vec![
        t.num(r.point.theta),
        t.num(r.point.beta),
        t.num(r.payoff),
    ]);
    Ok(t.render())
}

fn deviation(a: &crate::DeviationArgs, digits: u8) -> Result<String> {
    let cfg = config(&a.search);
    let point = SymmetricPoint::new(a.theta, a.beta)?;
    let r = deviation_gain(a.state.alpha, a.state.f, point, &cfg)?;
    let mut t = Table::new("deviation", digits);
    t.meta(format!(
        "alpha={} f={} theta={} beta={} basis=Z",
        a.state.alpha, a.state.f, a.theta, a.beta
    ));
    search_meta(&mut t, &cfg);
    t.header(&[
        "base_payoff",
        "best_payoff",
        "gain",
        "best_theta",
        "best_beta1",
        "best_beta2",
        "certified",
    ]);
    t.row(vec![
        t.num(r.base_payoff),
        t.num(r.best_payoff),
        format!("{:.3e}", r.gain.max(0.0)),
        t.num(r.argmax.theta),
        t.num(r.argmax.beta1),
        t.num(r.argmax.beta2),
        (r.gain <= cfg.certify_tol).to_string(),
    ]);
    Ok(t.render())
}

fn fit(a: &crate::FitArgs, digits: u8) -> Result<String> {
    let text =
        fs::read_to_string(&a.points).with_context(|| format!("reading {}", a.points.display()))?;
    let points =
        load_fit_points(&text).with_context(|| format!("parsing {}", a.points.display()))?;
    let r = fit_f(&points, a.model)?;
    let mut t = Table::new("fit", digits);
    t.meta(format!("source={} model={}", a.points.display(), a.model))
        .header(&["f_hat", "f_err", "chi2", "points", "clamped", "f_unclamped"]);
    t.row(vec![
        t.num(r.f_hat),
        t.num(r.f_err),
        t.num(r.chi2),
        r.points.to_string(),
        r.clamped.to_string(),
        t.num(r.f_unclamped),
    ]);
    Ok(t.render())
}

fn simulate(a: &crate::SimulateArgs, digits: u8) -> Result<String> {
    let (name, params) = a.strategy.resolve();
    let params = StrategyParams::new(params.theta, params.beta1, params.beta2)?;
    let mut eff = [1.0; DETECTORS];
    for &(i, v) in &a.efficiencies {
        eff[i] = v;
    }
    let table = simulate_counts_with_efficiencies(
        a.state.alpha,
        a.state.f,
        &StrategyProfile::symmetric(params),
        a.basis,
        a.events,
        a.seed,
        eff,
    )?;
    let mut t = Table::new("simulate-counts", digits);
    t.meta(strategy_meta(&name, &params));
    Ok(format!("{}{}", t.render_meta(), write_counts(&table)))
}

fn estimate(a: &crate::EstimateArgs, digits: u8) -> Result<String> {
    let text =
        fs::read_to_string(&a.counts).with_context(|| format!("reading {}", a.counts.display()))?;
    let table = load_counts(&text).with_context(|| format!("parsing {}", a.counts.display()))?;
    let e = payoff_estimate(&table)?;
    let mut t = Table::new("estimate", digits);
    t.meta(format!(
        "source={} events={}",
        a.counts.display(),
        table.total()
    ));
    let mut header = Vec::new();
    let mut row = Vec::new();
    for i in 0..PLAYERS {
        let c = (b'a' + i as u8) as char;
        header.push(format!("player_{c}"));
        header.push(format!("player_{c}_err"));
        row.push(t.num(e.per_player[i]));
        row.push(t.num(e.per_player_error[i]));
    }
    header.extend(["average".to_string(), "average_err".to_string()]);
    row.extend([t.num(e.average), t.num(e.std_error)]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    t.header(&header).row(row);
    Ok(t.render())
}

fn fidelity(a: &crate::FidelityArgs, digits: u8) -> Result<String> {
    let settings = stabilizer_fidelity_settings();
    let target = ghz();
    let overlap = family_state(a.alpha)?.inner(&target)?.norm_sqr();
    let mut t = Table::new("fidelity", digits);
    t.meta(format!(
        "alpha={} stabilizer_settings={}",
        a.alpha,
        settings.len()
    ))
    .header(&["f", "fidelity", "stabilizer_estimate", "closed_form"]);
    for &f in &a.f {
        let ens = noisy_state(a.alpha, f)?;
        t.row(vec![
            t.num(f),
            t.num(ghz_fidelity(&ens, &target)?),
            t.num(stabilizer_fidelity_estimate(&ens, &settings)?),
            t.num(f * overlap + (1.0 - f) / 16.0),
        ]);
    }
    Ok(t.render())
}

fn waveplates(a: &crate::WaveplateArgs, digits: u8) -> Result<String> {
    let mut t = Table::new("waveplates", digits);
    t.meta(format!("solve_convention={:?}", a.convention))
        .meta("angles in radians; light meets qwp1 first under the standard convention")
        .header(&[
            "strategy",
            "source",
            "qwp1",
            "hwp",
            "qwp2",
            "overlap_standard",
            "overlap_reversed",
        ]);
    let mut emit = |name: &str,
                    source: &str,
                    u: &qminority_core::qcore::ComplexMatrix2,
                    w: &WaveplateTriple| {
        let std = u.phase_overlap(&compose_waveplates_with(w, JonesConvention::Standard));
        let rev = u.phase_overlap(&compose_waveplates_with(w, JonesConvention::Reversed));
        let row = vec![
            name.to_string(),
            source.to_string(),
            t.num(w.qwp1_angle),
            t.num(w.hwp_angle),
            t.num(w.qwp2_angle),
            t.num(std),
            t.num(rev),
        ];
        t.row(row);
    };
    match (a.theta, a.beta1, a.beta2) {
        (Some(theta), Some(beta1), Some(beta2)) => {
            let u = StrategyParams::new(theta, beta1, beta2)?.unitary();
            let w = solve_waveplate_angles_with(&u, a.convention)?;
            emit("custom", "solved", &u, &w);
        }
        _ => {
            for (name, p, quoted) in [
                ("I", STRATEGY_I, QUOTED_TRIPLE_I),
                ("II", STRATEGY_II, QUOTED_TRIPLE_II),
            ] {
                let u = p.unitary();
                emit(name, "quoted", &u, &quoted);
                emit(
                    name,
                    "solved",
                    &u,
                    &solve_waveplate_angles_with(&u, a.convention)?,
                );
            }
        }
    }
    Ok(t.render())
}
