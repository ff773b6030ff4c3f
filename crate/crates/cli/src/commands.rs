//! The five subcommands. Each parses all of its keys before computing.

use num_rational::Ratio;
use rayon::prelude::*;
use relaydiv_core::channel::{sample_fading, trial_rng, LinkVariances, NetworkConfig, RatePoint};
use relaydiv_core::mutualinfo::{i_emaca_spectral, DelayConfig, SchemeId};
use relaydiv_core::outage::{
    analytic_outage_parallel3, analytic_outage_rtda_both, analytic_outage_stc, db_to_linear, delay_average,
    mc_outage_with, slope_fit, AsyncSetup, ConditionalCase, OutageCurve, OutagePoint, OutageProbability, Probability,
    Scheme,
};
use relaydiv_core::toeplitz::{build_taps, convergence_study};
use relaydiv_core::tradeoff::{crossings, sample_curve, to_f64, Crossing, TradeoffScheme, Q};

use crate::config::{parse_grid, parse_list, Command, Settings};
use crate::output::{num, Report};
use crate::wavespec::WaveSpec;
use crate::CliError;

pub fn run(settings: &Settings) -> Result<Report, CliError> {
    match settings.command {
        Command::Tradeoff => tradeoff(settings),
        Command::Simulate => simulate(settings),
        Command::Waveform => waveform(settings),
        Command::Toeplitz => toeplitz(settings),
        Command::CompareCapacity => compare_capacity(settings),
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `3`, `1/20` or `0.05` exactly.
pub fn parse_rational(key: &str, text: &str) -> Result<Q, CliError> {
    let bad = || config_err(format!("{key} = {text}: expected an integer, a fraction or a decimal"));
    let t = text.trim();
    if t.contains('/') {
        return t.parse::<Q>().map_err(|_| bad());
    }
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 15 {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let den = 10i64.pow(frac.len() as u32);
    let int_part: i64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let frac_part: i64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let num = int_part
        .checked_mul(den)
        .and_then(|v| v.checked_add(frac_part))
        .ok_or_else(bad)?;
    Ok(Ratio::new(if neg { -num } else { num }, den))
}

fn fmt_q(x: Q) -> String {
    x.to_string()
}

fn tradeoff(s: &Settings) -> Result<Report, CliError> {
    let k: u32 = s.parse("k")?;
    if k == 0 {
        return Err(config_err("k must be at least 1"));
    }
    let step = parse_rational("r_step", s.get("r_step"))?;
    if step <= Q::from_integer(0) {
        return Err(config_err("r_step must be positive"));
    }
    let t0_bw = parse_rational("t0_bw", s.get("t0_bw"))?;
    if t0_bw <= Q::from_integer(0) {
        return Err(config_err("t0_bw must be positive"));
    }
    let delta1 = t0_bw.floor() / t0_bw.ceil();
    let names = s.get("schemes");
    let schemes: Vec<TradeoffScheme> = if names.trim().eq_ignore_ascii_case("all") {
        TradeoffScheme::all(delta1)
            .into_iter()
            .filter(|x| x.supports(k))
            .collect()
    } else {
        let mut v: Vec<TradeoffScheme> = Vec::new();
        for name in names.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let sc = match name.parse::<TradeoffScheme>()? {
                TradeoffScheme::Rtda { .. } => TradeoffScheme::Rtda { delta1 },
                other => other,
            };
            if !sc.supports(k) {
                return Err(config_err(format!("scheme {sc} is not defined for K={k}")));
            }
            if !v.contains(&sc) {
                v.push(sc);
            }
        }
        v
    };
    if schemes.is_empty() {
        return Err(config_err("schemes: the scheme list is empty"));
    }

    let mut report = Report::new(
        "tradeoff-curves/v1",
        s,
        &[
            "scheme",
            "K",
            "r",
            "d_low",
            "d_high",
            "r_exact",
            "d_low_exact",
            "d_high_exact",
        ],
    );
    for &sc in &schemes {
        let curve = sample_curve(sc, k, step)?;
        for p in &curve.samples {
            report.row(vec![
                sc.name().to_string(),
                k.to_string(),
                num(to_f64(p.r)),
                num(to_f64(p.d_low)),
                num(to_f64(p.d_high)),
                fmt_q(p.r),
                fmt_q(p.d_low),
                fmt_q(p.d_high),
            ]);
        }
    }
    if schemes.iter().any(|x| matches!(x, TradeoffScheme::Rtda { .. })) {
        report.note(format!("rtda delta1={}", fmt_q(delta1)));
    }
    for (i, &a) in schemes.iter().enumerate() {
        for &b in &schemes[i + 1..] {
            for c in crossings(a, b, k)? {
                let line = match c {
                    Crossing::SignChange(p) => format!("crossing {a} {b} sign-change r={p}"),
                    Crossing::Touch(p) => format!("crossing {a} {b} touch r={p}"),
                    Crossing::Coincident { lo, hi } => {
                        format!("crossing {a} {b} coincident r={}..{}", fmt_q(lo), fmt_q(hi))
                    }
                };
                report.note(line);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    MonteCarlo,
    Analytic,
}

fn network(s: &Settings) -> Result<NetworkConfig, CliError> {
    let v: Vec<f64> = parse_list("variances", s.get("variances"))?;
    let arr: [f64; 5] = v
        .try_into()
        .map_err(|_| config_err("variances: expected five values sd,sr1,sr2,r1d,r2d"))?;
    Ok(NetworkConfig::new(LinkVariances::from_array(arr))?)
}

fn positive_usize(s: &Settings, key: &str) -> Result<usize, CliError> {
    let v: usize = s.parse(key)?;
    if v == 0 {
        return Err(config_err(format!("{key} must be positive")));
    }
    Ok(v)
}

fn simulate(s: &Settings) -> Result<Report, CliError> {
    let id: SchemeId = s.parse("scheme")?;
    let mode = match s.get("mode") {
        "mc" => Mode::MonteCarlo,
        "analytic" => Mode::Analytic,
        m => return Err(config_err(format!("mode = {m}: expected mc or analytic"))),
    };
    let cond: ConditionalCase = s.parse("cond")?;
    let probability: Probability = s.parse("probability")?;
    let r: f64 = s.parse("r")?;
    if !(0.0..0.5).contains(&r) {
        return Err(config_err(format!("r = {r}: must lie in [0, 0.5)")));
    }
    let grid = parse_grid("snr_db", s.get("snr_db"))?;
    let trials: u64 = s.parse("trials")?;
    let seed: u64 = s.parse("seed")?;
    let cfg = network(s)?;
    let t0_list: Vec<f64> = parse_list("t0_bw", s.get("t0_bw"))?;
    if t0_list.is_empty() || t0_list.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(config_err(format!("t0_bw = {}: need positive values", s.get("t0_bw"))));
    }
    // Only the delay-diversity schemes depend on the delays.
    let delay_set = if matches!(id, SchemeId::TdaIndep | SchemeId::TdaRepetition) {
        t0_list
    } else {
        t0_list[..1].to_vec()
    };
    let tau: f64 = s.parse("tau")?;
    let omega_points = positive_usize(s, "omega_points")?;
    let quad_points = positive_usize(s, "quad_points")?;
    let needs_wave = matches!(id, SchemeId::TdaLinmod | SchemeId::Astc | SchemeId::MixAf);
    let wave = if needs_wave {
        Some(WaveSpec::from_settings(s)?)
    } else {
        None
    };
    if mode == Mode::Analytic {
        let ok = match id {
            SchemeId::StcSync => true,
            SchemeId::Astc | SchemeId::TdaRepetition => cond == ConditionalCase::Both,
            _ => false,
        };
        if !ok {
            return Err(config_err(format!(
                "analytic mode supports stc, and astc or rtda with cond = 2; got {id} with cond = {cond}"
            )));
        }
    }

    let mut notes = Vec::new();
    let mut curves = Vec::with_capacity(delay_set.len());
    for &t0_bw in &delay_set {
        let curve = match mode {
            Mode::MonteCarlo => {
                let delays = || DelayConfig::from_product(t0_bw);
                let scheme = match id {
                    SchemeId::StcSync => Scheme::StcSync,
                    SchemeId::TdaIndep => Scheme::TdaIndep(delays()?),
                    SchemeId::TdaRepetition => Scheme::TdaRepetition(delays()?),
                    SchemeId::TdaLinmod => Scheme::TdaLinmod(wave.as_ref().expect("wave").correlations(tau)?),
                    SchemeId::Astc | SchemeId::MixAf => {
                        let corr = wave.as_ref().expect("wave").correlations(tau)?;
                        let setup = Box::new(AsyncSetup::new(corr, omega_points, quad_points)?);
                        if !setup.bounds.pd {
                            notes.push("warning: waveform is not certified positive definite".to_string());
                        }
                        if id == SchemeId::Astc {
                            Scheme::Astc(setup)
                        } else {
                            Scheme::MixAf(setup)
                        }
                    }
                };
                mc_outage_with(&scheme, r, &grid, trials, seed, cond, &cfg, probability)?
            }
            Mode::Analytic => {
                let eval = |db: f64| -> Result<OutagePoint, CliError> {
                    let snr = db_to_linear(db);
                    let p: OutageProbability = match id {
                        SchemeId::StcSync => analytic_outage_stc(snr, r, &cfg, cond)?,
                        SchemeId::Astc => analytic_outage_parallel3(snr, r, &cfg)?,
                        _ => analytic_outage_rtda_both(snr, r, &cfg, t0_bw)?,
                    };
                    let v = match probability {
                        Probability::Conditional => p.conditional,
                        Probability::Joint => p.joint,
                    };
                    Ok(OutagePoint::analytic(db, v))
                };
                let points = grid.par_iter().map(|&db| eval(db)).collect::<Result<Vec<_>, _>>()?;
                if id == SchemeId::Astc {
                    notes.push("oracle: three independent parallel paths".to_string());
                }
                OutageCurve::new(id, r, cond, points)
            }
        };
        curves.push(curve);
    }
    let curve = if curves.len() == 1 {
        curves.pop().expect("one curve")
    } else {
        let list: Vec<String> = delay_set.iter().map(|&x| num(x)).collect();
        notes.push(format!("delay average over t0_bw={}", list.join(",")));
        delay_average(&curves)?
    };

    let mut report = Report::new(
        "outage-curve/v1",
        s,
        &[
            "scheme", "r", "snr_db", "outage", "ci_low", "ci_high", "trials", "censored",
        ],
    );
    for p in &curve.points {
        report.row(vec![
            id.name().to_string(),
            num(r),
            num(p.snr_db),
            num(p.outage),
            num(p.ci_low),
            num(p.ci_high),
            p.trials.to_string(),
            p.censored.to_string(),
        ]);
    }
    match slope_fit(&curve) {
        Ok(f) => report.note(format!(
            "fit slope={} std_error={} intercept={} window={}:{} points={}",
            f.slope, f.std_error, f.intercept, f.window.0, f.window.1, f.points
        )),
        Err(e) => report.note(format!("fit unavailable: {e}")),
    }
    for n in notes {
        report.note(n);
    }
    Ok(report)
}

fn waveform(s: &Settings) -> Result<Report, CliError> {
    let wave = WaveSpec::from_settings(s)?;
    let tau: f64 = s.parse("tau")?;
    let omega_points = positive_usize(s, "omega_points")?;
    let corr = wave.correlations(tau)?;
    let b = wave.certify(tau, omega_points)?;
    let mut report = Report::new("pd-report/v1", s, &["metric", "value"]);
    let metrics: Vec<(&str, String)> = vec![
        ("pd", b.pd.to_string()),
        ("lambda_min", num(b.lambda_min)),
        ("lambda_min_certified", num(b.lambda_min_certified)),
        ("singular_omega", num(b.argmin_omega)),
        ("lambda_max", num(b.lambda_max)),
        ("lambda_max_certified", num(b.lambda_max_certified)),
        ("argmax_omega", num(b.argmax_omega)),
        ("lambda_max_limit", num(b.lambda_max_limit)),
        ("within_limit", b.within_limit().to_string()),
        ("trace_deviation", num(b.trace_deviation)),
        ("lipschitz", num(b.lipschitz)),
        ("omega_points", b.omega_points.to_string()),
        ("energy", num(wave.energy())),
        ("span", corr.span().to_string()),
        ("a1", num(corr.a1)),
        ("c0", num(corr.c0)),
        ("c1", num(corr.c1)),
        ("c2", num(corr.c2)),
        ("f1", num(corr.f1)),
        ("rho12", num(corr.rho12)),
        ("rho21", num(corr.rho21)),
    ];
    for (k, v) in metrics {
        report.row(vec![k.to_string(), v]);
    }
    Ok(report)
}

fn rho0_of(snr_db: f64) -> Result<f64, CliError> {
    Ok(RatePoint::new(db_to_linear(snr_db), 0.0, &NetworkConfig::new(LinkVariances::UNIT)?)?.rho0)
}

fn toeplitz(s: &Settings) -> Result<Report, CliError> {
    let wave = WaveSpec::from_settings(s)?;
    let tau: f64 = s.parse("tau")?;
    let snr = parse_grid("snr_db", s.get("snr_db"))?;
    let [snr_db] = snr[..] else {
        return Err(config_err("snr_db: toeplitz takes a single SNR"));
    };
    let seed: u64 = s.parse("seed")?;
    let draws = positive_usize(s, "draws")?;
    let n_list: Vec<usize> = parse_list("n_list", s.get("n_list"))?;
    let n_cap = positive_usize(s, "n_cap")?;
    if n_list.is_empty() {
        return Err(config_err("n_list is empty"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(config_err("n_list must be positive and strictly ascending"));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n > n_cap) {
        return Err(config_err(format!("n = {n} exceeds n_cap = {n_cap}")));
    }
    let corr = wave.correlations(tau)?;
    let rho0 = rho0_of(snr_db)?;
    let cfg = NetworkConfig::new(LinkVariances::UNIT)?;

    let studies = (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let f = sample_fading(&mut trial_rng(seed, d), &cfg);
            convergence_study(&build_taps(&corr, f.r1d, f.r2d), &n_list, rho0, n_cap)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new(
        "toeplitz-convergence/v1",
        s,
        &["draw", "n", "mi", "mi_inf", "abs_error", "rel_error"],
    );
    for (d, st) in studies.iter().enumerate() {
        for row in &st.rows {
            report.row(vec![
                d.to_string(),
                row.n.to_string(),
                num(row.mi),
                num(st.mi_inf),
                num(row.abs_error),
                num(row.rel_error),
            ]);
        }
    }
    for (d, st) in studies.iter().enumerate() {
        report.note(format!(
            "draw {d} final_rel_error={} inversions={}",
            st.final_rel_error(),
            st.inversions()
        ));
    }
    Ok(report)
}

fn compare_capacity(s: &Settings) -> Result<Report, CliError> {
    let wave = WaveSpec::from_settings(s)?;
    let tau: f64 = s.parse("tau")?;
    let grid = parse_grid("snr_db", s.get("snr_db"))?;
    let draws = positive_usize(s, "draws")?;
    let seed: u64 = s.parse("seed")?;
    let omega_points = positive_usize(s, "omega_points")?;
    let quad_points = positive_usize(s, "quad_points")?;
    let corr = wave.correlations(tau)?;
    let bounds = wave.certify(tau, omega_points)?;
    let cfg = NetworkConfig::new(LinkVariances::UNIT)?;
    let fading: Vec<_> = (0..draws as u64)
        .map(|d| sample_fading(&mut trial_rng(seed, d), &cfg))
        .collect();

    let mut report = Report::new(
        "capacity-comparison/v1",
        s,
        &["snr_db", "draws", "wins", "win_rate", "mean_margin", "min_margin"],
    );
    for &db in &grid {
        let rho0 = rho0_of(db)?;
        let margins = fading
            .par_iter()
            .map(|f| {
                let g = f.gains();
                let asym = i_emaca_spectral(f, &corr, rho0, quad_points, &bounds)?.value;
                Ok(asym - (rho0 * (g.r1d + g.r2d)).ln_1p() / std::f64::consts::LN_2)
            })
            .collect::<Result<Vec<f64>, relaydiv_core::Error>>()?;
        let wins = margins.iter().filter(|&&m| m > 0.0).count();
        let mean = margins.iter().sum::<f64>() / draws as f64;
        let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
        report.row(vec![
            num(db),
            draws.to_string(),
            wins.to_string(),
            num(wins as f64 / draws as f64),
            num(mean),
            num(min),
        ]);
    }
    report.note(format!(
        "pd={} lambda_min_certified={}",
        bounds.pd, bounds.lambda_min_certified
    ));
    if !bounds.pd {
        report.note("warning: waveform is not certified positive definite; strict dominance is not asserted");
    }
    Ok(report)
}
