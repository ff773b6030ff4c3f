//! Outage probability: Monte Carlo estimation, semi-analytic oracles,
//! log-log slope fitting and the mixed AF/DF relaying protocol.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{
    decoding_set, decoding_set_probs, half_duplex_outage, sample_fading, trial_rng, DecodingSet, FadingRealization,
    NetworkConfig, RatePoint,
};
use crate::error::{invalid, Error, Result};
use crate::mutualinfo::{
    i_af_pair, i_astc_with_table, i_ltda, i_rtda, i_stc, i_tda, period_mean, window_mean_with, DelayConfig, SchemeId,
    SpectralTable, MIN_QUAD_POINTS,
};
use crate::quad::{adaptive, gauss_legendre, Tolerance};
use crate::waveform::{certify_correlations, CorrelationSet, EigenBounds};

/// Minimum trial count accepted by [`mc_outage`].
pub const MIN_TRIALS: u64 = 10_000;

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Largest relative CI width of a point used in a slope fit.
pub const FIT_MAX_REL_CI_WIDTH: f64 = 0.3;

/// Decoding-set cardinality a curve is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionalCase {
    Empty,
    One,
    Both,
    Overall,
}

impl ConditionalCase {
    pub const ALL: [ConditionalCase; 4] = [
        ConditionalCase::Empty,
        ConditionalCase::One,
        ConditionalCase::Both,
        ConditionalCase::Overall,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ConditionalCase::Empty => "0",
            ConditionalCase::One => "1",
            ConditionalCase::Both => "2",
            ConditionalCase::Overall => "overall",
        }
    }
}

impl fmt::Display for ConditionalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ConditionalCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "empty" => Ok(ConditionalCase::Empty),
            "1" | "one" => Ok(ConditionalCase::One),
            "2" | "both" => Ok(ConditionalCase::Both),
            "overall" | "all" => Ok(ConditionalCase::Overall),
            _ => Err(invalid("cond", format!("expected 0, 1, 2 or overall, got `{s}`"))),
        }
    }
}

/// Waveform correlations with their certification and quadrature table.
#[derive(Debug, Clone)]
pub struct AsyncSetup {
    pub corr: CorrelationSet,
    pub bounds: EigenBounds,
    pub quad_points: usize,
    table: SpectralTable,
}

impl AsyncSetup {
    pub fn new(corr: CorrelationSet, omega_points: usize, quad_points: usize) -> Result<Self> {
        if quad_points < MIN_QUAD_POINTS {
            return Err(invalid(
                "quad_points",
                format!("must be at least {MIN_QUAD_POINTS}, got {quad_points}"),
            ));
        }
        let bounds = certify_correlations(&corr, omega_points)?;
        let table = SpectralTable::new(&corr, quad_points);
        Ok(Self {
            corr,
            bounds,
            quad_points,
            table,
        })
    }
}

/// A scheme together with the parameters its mutual information needs.
#[derive(Debug, Clone)]
pub enum Scheme {
    StcSync,
    TdaIndep(DelayConfig),
    TdaRepetition(DelayConfig),
    TdaLinmod(CorrelationSet),
    Astc(Box<AsyncSetup>),
    MixAf(Box<AsyncSetup>),
}

impl Scheme {
    pub fn id(&self) -> SchemeId {
        match self {
            Scheme::StcSync => SchemeId::StcSync,
            Scheme::TdaIndep(_) => SchemeId::TdaIndep,
            Scheme::TdaRepetition(_) => SchemeId::TdaRepetition,
            Scheme::TdaLinmod(_) => SchemeId::TdaLinmod,
            Scheme::Astc(_) => SchemeId::Astc,
            Scheme::MixAf(_) => SchemeId::MixAf,
        }
    }

    /// Mutual information of the whole link given the decoding set.
    pub fn mi(&self, f: &FadingRealization, d: DecodingSet, rp: &RatePoint) -> Result<f64> {
        let rho0 = rp.rho0;
        match self {
            Scheme::StcSync => Ok(i_stc(f, d, rho0)),
            Scheme::TdaIndep(delays) => Ok(i_tda(f, d, delays, rho0).value),
            Scheme::TdaRepetition(delays) => Ok(i_rtda(f, d, delays, rho0).value),
            Scheme::TdaLinmod(corr) => Ok(i_ltda(f, d, corr, rho0)?.value),
            Scheme::Astc(setup) => Ok(astc(f, d, setup, rho0)?),
            Scheme::MixAf(setup) => Ok(mixing_protocol_mi_given(f, d, rp, setup)?.1),
        }
    }
}

fn astc(f: &FadingRealization, d: DecodingSet, setup: &AsyncSetup, rho0: f64) -> Result<f64> {
    Ok(i_astc_with_table(f, d, &setup.corr, &setup.table, rho0, &setup.bounds)?.value)
}

/// Branch taken by the mixing protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixBranch {
    /// No relay decoded: one relay amplifies and forwards.
    AmplifyOnly,
    /// One relay decoded: it forwards while the other amplifies.
    AmplifyAndDecode,
    /// Both decoded: asynchronous space-time coding.
    Astc,
}

impl MixBranch {
    pub fn label(self) -> &'static str {
        match self {
            MixBranch::AmplifyOnly => "af",
            MixBranch::AmplifyAndDecode => "af+df",
            MixBranch::Astc => "astc",
        }
    }
}

/// Mixing protocol with the decoding set derived from the source-relay gains.
pub fn mixing_protocol_mi(f: &FadingRealization, rp: &RatePoint, setup: &AsyncSetup) -> Result<(MixBranch, f64)> {
    mixing_protocol_mi_given(f, decoding_set(f, rp), rp, setup)
}

/// Mixing protocol for a given decoding set. The AF pair is bound to the
/// direct link and the first relay-destination link.
pub fn mixing_protocol_mi_given(
    f: &FadingRealization,
    d: DecodingSet,
    rp: &RatePoint,
    setup: &AsyncSetup,
) -> Result<(MixBranch, f64)> {
    let g = f.gains();
    let rho0 = rp.rho0;
    let af = i_af_pair(g.sd, g.r1d, rho0);
    Ok(match d.len() {
        0 => (MixBranch::AmplifyOnly, 0.5 * af),
        1 => (
            MixBranch::AmplifyAndDecode,
            0.5 * (af + (rho0 * g.r2d).ln_1p() / std::f64::consts::LN_2),
        ),
        _ => (MixBranch::Astc, astc(f, d, setup, rho0)?),
    })
}

/// One SNR point of an outage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub snr_db: f64,
    pub outage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Zero for analytic points.
    pub trials: u64,
    pub outages: u64,
    /// No outage observed; the interval is `[0, 3 / trials]`.
    pub censored: bool,
}

impl OutagePoint {
    pub fn analytic(snr_db: f64, p: f64) -> Self {
        Self {
            snr_db,
            outage: p,
            ci_low: p,
            ci_high: p,
            trials: 0,
            outages: 0,
            censored: false,
        }
    }

    pub fn from_counts(snr_db: f64, outages: u64, trials: u64) -> Self {
        if outages == 0 {
            return Self {
                snr_db,
                outage: 0.0,
                ci_low: 0.0,
                ci_high: (3.0 / trials as f64).min(1.0),
                trials,
                outages,
                censored: true,
            };
        }
        let p = outages as f64 / trials as f64;
        let (lo, hi) = wilson_interval(outages, trials, Z95);
        Self {
            snr_db,
            outage: p,
            ci_low: lo.min(p),
            ci_high: hi.max(p),
            trials,
            outages,
            censored: false,
        }
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Least-squares fit of `-log10 P` against `log10 snr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub std_error: f64,
    pub intercept: f64,
    pub points: usize,
    pub window: (f64, f64),
}

/// Outage estimates over an SNR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    pub scheme: SchemeId,
    pub r: f64,
    pub cond: ConditionalCase,
    pub points: Vec<OutagePoint>,
    pub fit: Option<SlopeFit>,
}

impl OutageCurve {
    pub fn new(scheme: SchemeId, r: f64, cond: ConditionalCase, points: Vec<OutagePoint>) -> Self {
        let mut curve = Self {
            scheme,
            r,
            cond,
            points,
            fit: None,
        };
        curve.fit = slope_fit(&curve).ok();
        curve
    }

    pub fn fitted_slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn fit_window(&self) -> Option<(f64, f64)> {
        self.fit.map(|f| f.window)
    }
}

fn usable(p: &OutagePoint) -> bool {
    p.outage > 0.0 && !p.censored && (p.ci_high - p.ci_low) < FIT_MAX_REL_CI_WIDTH * p.outage
}

pub fn slope_fit(curve: &OutageCurve) -> Result<SlopeFit> {
    let used: Vec<&OutagePoint> = curve.points.iter().filter(|p| usable(p)).collect();
    let censored = curve.points.iter().filter(|p| p.censored).count();
    if censored > used.len() {
        return Err(Error::Fit(format!(
            "{censored} censored points outnumber {} usable ones",
            used.len()
        )));
    }
    if used.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 usable points, have {}",
            used.len()
        )));
    }
    let lo = used.iter().map(|p| p.snr_db).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|p| p.snr_db).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 15.0 {
        return Err(Error::Fit(format!("usable points span {} dB, need 15", hi - lo)));
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| p.snr_db / 10.0).collect();
    let ys: Vec<f64> = used.iter().map(|p| -p.outage.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let std_error = if used.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        std_error,
        intercept,
        points: used.len(),
        window: (lo, hi),
    })
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn forced_set(
    cond: ConditionalCase,
    f: &FadingRealization,
    rp: &RatePoint,
    cfg: &NetworkConfig,
    u: f64,
) -> DecodingSet {
    match cond {
        ConditionalCase::Overall => decoding_set(f, rp),
        ConditionalCase::Empty => DecodingSet::EMPTY,
        ConditionalCase::Both => DecodingSet::BOTH,
        ConditionalCase::One => {
            let lam = cfg.lambdas();
            let p = decoding_set_probs(rp, lam.sr1, lam.sr2);
            let total = p.r1_only + p.r2_only;
            let share = if total > 0.0 { p.r1_only / total } else { 0.5 };
            if u < share {
                DecodingSet::R1
            } else {
                DecodingSet::R2
            }
        }
    }
}

/// Which probability a curve reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Probability {
    /// `Pr[I < R | case]`: the decoding set is forced to the case.
    Conditional,
    /// `Pr[I < R, case]`: the decoding set follows the source-relay gains.
    Joint,
}

impl Probability {
    pub fn label(self) -> &'static str {
        match self {
            Probability::Conditional => "conditional",
            Probability::Joint => "joint",
        }
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conditional" => Ok(Probability::Conditional),
            "joint" => Ok(Probability::Joint),
            _ => Err(invalid(
                "probability",
                format!("expected conditional or joint, got `{s}`"),
            )),
        }
    }
}

fn matches_case(cond: ConditionalCase, d: DecodingSet) -> bool {
    match cond {
        ConditionalCase::Overall => true,
        ConditionalCase::Empty => d.is_empty(),
        ConditionalCase::One => d.len() == 1,
        ConditionalCase::Both => d.len() == 2,
    }
}

/// Monte Carlo conditional outage over `snr_db`. Trial `i` uses its own
/// random stream and every SNR point reuses the same realizations, so the
/// result depends only on `seed`, never on the rayon pool size.
pub fn mc_outage(
    scheme: &Scheme,
    r: f64,
    snr_db: &[f64],
    trials: u64,
    seed: u64,
    cond: ConditionalCase,
    cfg: &NetworkConfig,
) -> Result<OutageCurve> {
    mc_outage_with(scheme, r, snr_db, trials, seed, cond, cfg, Probability::Conditional)
}

/// Monte Carlo estimate of the conditional or joint outage probability.
#[allow(clippy::too_many_arguments)]
pub fn mc_outage_with(
    scheme: &Scheme,
    r: f64,
    snr_db: &[f64],
    trials: u64,
    seed: u64,
    cond: ConditionalCase,
    cfg: &NetworkConfig,
    probability: Probability,
) -> Result<OutageCurve> {
    if trials < MIN_TRIALS {
        return Err(invalid(
            "trials",
            format!("must be at least {MIN_TRIALS}, got {trials}"),
        ));
    }
    if snr_db.is_empty() {
        return Err(invalid("snr_db", "grid is empty"));
    }
    let points: Vec<RatePoint> = snr_db
        .iter()
        .map(|&db| RatePoint::new(db_to_linear(db), r, cfg))
        .collect::<Result<_>>()?;
    let counts = (0..trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; points.len()],
            |mut acc, i| -> Result<Vec<u64>> {
                let mut rng = trial_rng(seed, i);
                let f = sample_fading(&mut rng, cfg);
                let u: f64 = rng.random();
                for (k, rp) in points.iter().enumerate() {
                    let d = match probability {
                        Probability::Conditional => forced_set(cond, &f, rp, cfg, u),
                        Probability::Joint => {
                            let d = decoding_set(&f, rp);
                            if !matches_case(cond, d) {
                                continue;
                            }
                            d
                        }
                    };
                    if scheme.mi(&f, d, rp)? < rp.rate {
                        acc[k] += 1;
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; points.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let pts = snr_db
        .iter()
        .zip(counts)
        .map(|(&db, k)| OutagePoint::from_counts(db, k, trials))
        .collect();
    Ok(OutageCurve::new(scheme.id(), r, cond, pts))
}

/// Conditional and joint outage of one decoding-set case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageProbability {
    /// `Pr[I < R | case]`.
    pub conditional: f64,
    /// `Pr[I < R, case]`.
    pub joint: f64,
    /// `Pr[case]`.
    pub set_probability: f64,
}

impl OutageProbability {
    fn from_joint(joint: f64, set_probability: f64, fallback: f64) -> Self {
        Self {
            conditional: if set_probability > 0.0 {
                joint / set_probability
            } else {
                fallback
            },
            joint,
            set_probability,
        }
    }
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 0.0,
        rel: 1e-10,
        max_intervals: 4000,
    }
}

fn exp_cdf(lambda: f64, z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        -(-lambda * z).exp_m1()
    }
}

/// Density of the sum of two independent exponentials with rates `l1`, `l2`.
pub fn exp_sum_pdf(y: f64, l1: f64, l2: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let diff = l1 - l2;
    if diff.abs() <= 1e-12 * l1.max(l2) {
        let l = 0.5 * (l1 + l2);
        return l * l * y * (-l * y).exp();
    }
    // l1 l2 / (l1 - l2) (e^{-l2 y} - e^{-l1 y}) without cancellation.
    l1 * l2 * (-l2 * y).exp() * -(-diff * y).exp_m1() / diff
}

/// `Pr[(1 + rho0 X)(1 + rho0 Y) < 1 + rho0 theta]` for `X ~ Exp(lx)` and a
/// CDF `fy` of `Y`.
fn product_outage<F: Fn(f64) -> f64>(lx: f64, fy: F, rho0: f64, theta: f64) -> Result<f64> {
    if theta <= 0.0 {
        return Ok(0.0);
    }
    let v = adaptive(
        |x| lx * (-lx * x).exp() * fy((theta - x) / (1.0 + rho0 * x)),
        0.0,
        theta,
        quad_tol(),
    )?;
    Ok(v.value.max(0.0))
}

/// Semi-analytic outage of synchronous space-time coding.
pub fn analytic_outage_stc(snr: f64, r: f64, cfg: &NetworkConfig, cond: ConditionalCase) -> Result<OutageProbability> {
    let rp = RatePoint::new(snr, r, cfg)?;
    let lam = cfg.lambdas();
    let rho0 = rp.rho0;
    let theta = rp.half_duplex_threshold() / rho0;
    let sets = decoding_set_probs(&rp, lam.sr1, lam.sr2);

    let p_empty = exp_cdf(lam.sd, theta);
    let one = |l: f64| product_outage(lam.sd, |z| exp_cdf(l, z), rho0, theta);
    let both = || -> Result<f64> {
        if theta <= 0.0 {
            return Ok(0.0);
        }
        let v = adaptive(
            |y| exp_sum_pdf(y, lam.r1d, lam.r2d) * exp_cdf(lam.sd, (theta - y) / (1.0 + rho0 * y)),
            0.0,
            theta,
            quad_tol(),
        )?;
        Ok(v.value.max(0.0))
    };

    Ok(match cond {
        ConditionalCase::Empty => OutageProbability {
            conditional: p_empty,
            joint: sets.empty * p_empty,
            set_probability: sets.empty,
        },
        ConditionalCase::One => {
            let (p1, p2) = (one(lam.r1d)?, one(lam.r2d)?);
            let joint = sets.r1_only * p1 + sets.r2_only * p2;
            OutageProbability::from_joint(joint, sets.r1_only + sets.r2_only, 0.5 * (p1 + p2))
        }
        ConditionalCase::Both => {
            let p = both()?;
            OutageProbability {
                conditional: p,
                joint: sets.both * p,
                set_probability: sets.both,
            }
        }
        ConditionalCase::Overall => {
            let total = sets.empty * p_empty
                + sets.r1_only * one(lam.r1d)?
                + sets.r2_only * one(lam.r2d)?
                + sets.both * both()?;
            OutageProbability {
                conditional: total,
                joint: total,
                set_probability: 1.0,
            }
        }
    })
}

/// `|D| = 2` outage of three independent parallel paths (direct and both
/// relays), the asymptotic equivalent of asynchronous space-time coding.
pub fn analytic_outage_parallel3(snr: f64, r: f64, cfg: &NetworkConfig) -> Result<OutageProbability> {
    let rp = RatePoint::new(snr, r, cfg)?;
    let lam = cfg.lambdas();
    let rho0 = rp.rho0;
    let theta = rp.half_duplex_threshold() / rho0;
    let sets = decoding_set_probs(&rp, lam.sr1, lam.sr2);
    let inner_err = std::cell::Cell::new(None);
    let pair = |t: f64| match product_outage(lam.r1d, |z| exp_cdf(lam.r2d, z), rho0, t) {
        Ok(v) => v,
        Err(e) => {
            inner_err.set(Some(e));
            0.0
        }
    };
    let p = product_outage(lam.sd, pair, rho0, theta)?;
    if let Some(e) = inner_err.take() {
        return Err(e);
    }
    Ok(OutageProbability {
        conditional: p,
        joint: sets.both * p,
        set_probability: sets.both,
    })
}

/// Nodes of the fractional-period quadrature inside the repetition oracle.
const RTDA_WINDOW_NODES: usize = 48;
/// Gauss-Legendre nodes over the relay phase in the repetition oracle.
const RTDA_PHASE_NODES: usize = 8;

/// `|D| = 2` outage of repetition-coded delay diversity, `T0 B >= 1`.
///
/// Integer `T0 B` uses the closed-form threshold on the direct-link gain and
/// a double integral over the relay gains. Otherwise the direct-link
/// threshold is found by root finding for each relay phase, adding a third
/// integral over the phase.
pub fn analytic_outage_rtda_both(snr: f64, r: f64, cfg: &NetworkConfig, t0_bw: f64) -> Result<OutageProbability> {
    if !(t0_bw >= 1.0 && t0_bw.is_finite()) {
        return Err(invalid("t0_bw", format!("oracle needs T0 B >= 1, got {t0_bw}")));
    }
    let rp = RatePoint::new(snr, r, cfg)?;
    let lam = cfg.lambdas();
    let rho0 = rp.rho0;
    let target = rp.target();
    let tm1 = rp.half_duplex_threshold();
    let sets = decoding_set_probs(&rp, lam.sr1, lam.sr2);
    let n = t0_bw.floor();
    let integer = t0_bw == n;
    // Outage needs (n / x) * log2((1 + A) / 2) < 2R, which bounds y1 + y2.
    let ymax = (2.0 * target.powf(t0_bw / n) - 1.0) / rho0;
    let tol = Tolerance {
        abs: 0.0,
        rel: if integer { 1e-9 } else { 1e-5 },
        max_intervals: 400,
    };
    let phase_rule = gauss_legendre(RTDA_PHASE_NODES);

    // Pr[X_sd < threshold | y1, y2], averaged over the relay phase.
    let direct_cdf = |y1: f64, y2: f64| -> f64 {
        let b = 2.0 * rho0 * (y1 * y2).sqrt();
        if integer {
            let u_max = (2.0 * target).min(target + b * b / (4.0 * target));
            // threshold on rho0 x: u_max - 1 - rho0 (y1 + y2), with u_max - 1
            // written through 2^{2R} - 1 to keep small values exact
            let c = (u_max - target) + tm1 - rho0 * (y1 + y2);
            return exp_cdf(lam.sd, c / rho0);
        }
        let a0 = rho0 * (y1 + y2);
        phase_rule.integrate(
            |phi| {
                let mi = |c: f64| 0.5 * window_mean_with(1.0 + c + a0, b, phi, t0_bw, RTDA_WINDOW_NODES);
                let c = root_increasing(mi, rp.rate, 0.0, tm1.max(1e-300));
                exp_cdf(lam.sd, c / rho0)
            },
            0.0,
            PI,
        ) / PI
    };

    let err = std::cell::Cell::new(None);
    let outer = adaptive(
        |y1| {
            let inner = adaptive(
                |y2| lam.r2d * (-lam.r2d * y2).exp() * direct_cdf(y1, y2),
                0.0,
                (ymax - y1).max(0.0),
                tol,
            );
            match inner {
                Ok(v) => lam.r1d * (-lam.r1d * y1).exp() * v.value,
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            }
        },
        0.0,
        ymax,
        tol,
    )?;
    if let Some(e) = err.take() {
        return Err(e);
    }
    let p = outer.value.max(0.0);
    Ok(OutageProbability {
        conditional: p,
        joint: sets.both * p,
        set_probability: sets.both,
    })
}

/// Closed-form `1/2 I` of repetition delay diversity for integer `T0 B`,
/// exposed for cross-checks.
pub fn rtda_integer_mi(rho0: f64, x_sd: f64, y1: f64, y2: f64) -> f64 {
    0.5 * period_mean(1.0 + rho0 * (x_sd + y1 + y2), 2.0 * rho0 * (y1 * y2).sqrt())
}

/// Smallest `c` in `[lo, hi]` with `f(c) >= level` for increasing `f`;
/// `lo` when `f(lo) >= level`.
fn root_increasing<F: Fn(f64) -> f64>(f: F, level: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a) - level;
    if fa >= 0.0 {
        return lo;
    }
    let mut fb = f(b) - level;
    if fb <= 0.0 {
        return hi;
    }
    // Illinois variant of regula falsi.
    let mut side = 0i8;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c) - level;
        if fc == 0.0 || (b - a).abs() <= 1e-13 * b.abs().max(1e-300) {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// Outage curve from an analytic probability function of the linear SNR.
pub fn analytic_curve<F: Fn(f64) -> Result<f64>>(
    scheme: SchemeId,
    r: f64,
    cond: ConditionalCase,
    snr_db: &[f64],
    p: F,
) -> Result<OutageCurve> {
    let points = snr_db
        .iter()
        .map(|&db| Ok(OutagePoint::analytic(db, p(db_to_linear(db))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutageCurve::new(scheme, r, cond, points))
}

/// Uniform average `E_tau[P_out | tau]` over a finite set of delay
/// configurations, one curve per configuration on a common SNR grid.
///
/// Monte Carlo curves share their fading draws, so the interval is the mean
/// of the per-configuration intervals rather than a pooled one. `outages`
/// and `trials` are summed.
pub fn delay_average(curves: &[OutageCurve]) -> Result<OutageCurve> {
    let first = curves
        .first()
        .ok_or_else(|| invalid("curves", "no delay configurations"))?;
    let grid: Vec<f64> = first.points.iter().map(|p| p.snr_db).collect();
    for c in curves {
        let same = c.points.len() == grid.len() && c.points.iter().zip(&grid).all(|(p, &g)| p.snr_db == g);
        if !same || c.scheme != first.scheme || c.r != first.r || c.cond != first.cond {
            return Err(invalid(
                "curves",
                "delay curves differ in scheme, rate, case or SNR grid",
            ));
        }
    }
    let m = curves.len() as f64;
    let points = (0..grid.len())
        .map(|i| {
            let pts = curves.iter().map(|c| &c.points[i]);
            let mean = |f: fn(&OutagePoint) -> f64| pts.clone().map(f).sum::<f64>() / m;
            OutagePoint {
                snr_db: grid[i],
                outage: mean(|p| p.outage),
                ci_low: mean(|p| p.ci_low),
                ci_high: mean(|p| p.ci_high),
                trials: pts.clone().map(|p| p.trials).sum(),
                outages: pts.clone().map(|p| p.outages).sum(),
                censored: pts.clone().all(|p| p.censored),
            }
        })
        .collect();
    Ok(OutageCurve::new(first.scheme, first.r, first.cond, points))
}

/// Probability that relay `j` fails to decode.
pub fn relay_failure(rp: &RatePoint, cfg: &NetworkConfig, relay: usize) -> f64 {
    let lam = cfg.lambdas();
    half_duplex_outage(rp, if relay == 1 { lam.sr1 } else { lam.sr2 })
}
