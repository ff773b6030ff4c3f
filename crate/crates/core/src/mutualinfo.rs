//! Conditional mutual information of each relaying scheme, in bits/s/Hz.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::{DecodingSet, FadingRealization};
use crate::error::{domain, invalid, Error, Result};
use crate::quad::{composite_gl, gauss_legendre, PANEL_ORDER};
use crate::waveform::{CorrelationSet, EigenBounds};

/// Minimum node count of the spectral quadratures.
pub const MIN_QUAD_POINTS: usize = 512;

/// Nodes used for the fractional period of the delay-diversity integral.
const REMAINDER_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    StcSync,
    TdaIndep,
    TdaRepetition,
    TdaLinmod,
    Astc,
    MixAf,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::StcSync,
        SchemeId::TdaIndep,
        SchemeId::TdaRepetition,
        SchemeId::TdaLinmod,
        SchemeId::Astc,
        SchemeId::MixAf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::StcSync => "stc",
            SchemeId::TdaIndep => "tda",
            SchemeId::TdaRepetition => "rtda",
            SchemeId::TdaLinmod => "ltda",
            SchemeId::Astc => "astc",
            SchemeId::MixAf => "mixaf",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        match key.as_str() {
            "stc" | "stcsync" => Ok(SchemeId::StcSync),
            "tda" | "tdaindep" => Ok(SchemeId::TdaIndep),
            "rtda" | "tdarepetition" => Ok(SchemeId::TdaRepetition),
            "ltda" | "tdalinmod" => Ok(SchemeId::TdaLinmod),
            "astc" => Ok(SchemeId::Astc),
            "mixaf" | "maf" => Ok(SchemeId::MixAf),
            _ => Err(invalid("scheme", format!("unknown scheme `{s}`"))),
        }
    }
}

/// Condition attached to a bounded evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiWarning {
    /// `T0 * B < 1`, so the delay lower bound is trivial.
    DelayBandwidthBelowOne,
    /// The waveform failed positive-definiteness certification.
    NotPositiveDefinite,
}

/// A mutual information value with a lower and upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedMi {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub warning: Option<MiWarning>,
}

impl BoundedMi {
    fn exact(value: f64) -> Self {
        Self {
            value,
            lower: value,
            upper: value,
            warning: None,
        }
    }

    pub fn contains(&self, slack: f64) -> bool {
        self.lower <= self.value + slack && self.value <= self.upper + slack
    }
}

/// Relay delays and bandwidth for delay diversity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayConfig {
    pub tau1: f64,
    pub tau2: f64,
    pub bandwidth: f64,
}

impl DelayConfig {
    pub fn new(tau1: f64, tau2: f64, bandwidth: f64) -> Result<Self> {
        if !(tau1 >= 0.0 && tau2 >= 0.0 && tau1.is_finite() && tau2.is_finite()) {
            return Err(invalid("tau", "delays must be non-negative and finite"));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid("bandwidth", format!("must be positive, got {bandwidth}")));
        }
        Ok(Self { tau1, tau2, bandwidth })
    }

    /// Unit bandwidth with relay delays `0` and `t0_bw`.
    pub fn from_product(t0_bw: f64) -> Result<Self> {
        Self::new(0.0, t0_bw, 1.0)
    }

    pub fn t0(&self) -> f64 {
        (self.tau2 - self.tau1).abs()
    }

    pub fn t0_bw(&self) -> f64 {
        self.t0() * self.bandwidth
    }

    /// `floor(T0 B) / ceil(T0 B)`, zero when `T0 B = 0`.
    pub fn delta1(&self) -> f64 {
        let x = self.t0_bw();
        let c = x.ceil();
        if c == 0.0 {
            0.0
        } else {
            x.floor() / c
        }
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Synchronous space-time coding.
pub fn i_stc(f: &FadingRealization, d: DecodingSet, rho0: f64) -> f64 {
    let g = f.gains();
    let mut relay = 0.0;
    if d.contains_r1() {
        relay += g.r1d;
    }
    if d.contains_r2() {
        relay += g.r2d;
    }
    0.5 * log2_1p(rho0 * g.sd) + 0.5 * log2_1p(rho0 * relay)
}

/// `(1/2pi) integral log2(1 + a sin x + b cos x) dx = log2((1 + sqrt(1 - a^2 - b^2)) / 2)`.
pub fn closed_log_integral(a: f64, b: f64) -> Result<f64> {
    let s = a * a + b * b;
    if !(s < 1.0) {
        return Err(domain("closed_log_integral", format!("needs a^2 + b^2 < 1, got {s}")));
    }
    Ok(((1.0 + (1.0 - s).sqrt()) / 2.0).log2())
}

/// Mean over one period of `log2(c + b cos u)`, `c > |b|`.
pub(crate) fn period_mean(c: f64, b: f64) -> f64 {
    ((c + ((c - b) * (c + b)).sqrt()) / 2.0).log2()
}

/// Mean of `log2(c + b cos(u + phi))` over `u` in `[-pi x, pi x]`.
///
/// Whole periods use the closed form; the fractional part is a window of
/// width `2 pi frac(x)` centred at 0 or pi, integrated with Gauss-Legendre.
fn window_mean(c: f64, b: f64, phi: f64, x: f64) -> f64 {
    window_mean_with(c, b, phi, x, REMAINDER_NODES)
}

pub(crate) fn window_mean_with(c: f64, b: f64, phi: f64, x: f64, nodes: usize) -> f64 {
    let g = |u: f64| (c + b * (u + phi).cos()).log2();
    if x <= 0.0 {
        return g(0.0);
    }
    let n = x.floor();
    let frac = x - n;
    let mut total = n * period_mean(c, b);
    if frac > 0.0 {
        let centre = if n % 2.0 == 0.0 { 0.0 } else { PI };
        let half = PI * frac;
        let integral = composite_gl(g, centre - half, centre + half, nodes);
        total += integral / (2.0 * PI);
    }
    total / x
}

fn relay_phase(f: &FadingRealization) -> f64 {
    let z = f.r1d.conj() * f.r2d;
    if z == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

/// Delay diversity with independent codewords at the relays.
pub fn i_tda(f: &FadingRealization, d: DecodingSet, delays: &DelayConfig, rho0: f64) -> BoundedMi {
    if d.len() < 2 {
        return BoundedMi::exact(i_stc(f, d, rho0));
    }
    let g = f.gains();
    let x = delays.t0_bw();
    let b = 2.0 * rho0 * (g.r1d * g.r2d).sqrt();
    let mean = window_mean(1.0 + rho0 * (g.r1d + g.r2d), b, relay_phase(f), x);
    let direct = log2_1p(rho0 * g.sd);
    let nu = g.r1d + g.r2d;
    let delta1 = delays.delta1();
    BoundedMi {
        value: 0.5 * direct + 0.5 * mean,
        lower: 0.5 * delta1 * (((1.0 + rho0 * nu) / 2.0).log2() + direct),
        upper: 0.5 * direct + 0.5 * log2_1p(2.0 * rho0 * nu),
        warning: (x < 1.0).then_some(MiWarning::DelayBandwidthBelowOne),
    }
}

/// Delay diversity where relays repeat the source codeword.
pub fn i_rtda(f: &FadingRealization, d: DecodingSet, delays: &DelayConfig, rho0: f64) -> BoundedMi {
    let g = f.gains();
    match (d.contains_r1(), d.contains_r2()) {
        (false, false) => BoundedMi::exact(0.5 * log2_1p(rho0 * g.sd)),
        (true, false) => BoundedMi::exact(0.5 * log2_1p(rho0 * (g.sd + g.r1d))),
        (false, true) => BoundedMi::exact(0.5 * log2_1p(rho0 * (g.sd + g.r2d))),
        (true, true) => {
            let x = delays.t0_bw();
            let a = rho0 * (g.sd + g.r1d + g.r2d);
            let b = 2.0 * rho0 * (g.r1d * g.r2d).sqrt();
            let mean = window_mean(1.0 + a, b, relay_phase(f), x);
            BoundedMi {
                value: 0.5 * mean,
                lower: 0.5 * delays.delta1() * ((1.0 + a) / 2.0).log2(),
                upper: 0.5 * log2_1p(rho0 * (g.sd + 2.0 * (g.r1d + g.r2d))),
                warning: (x < 1.0).then_some(MiWarning::DelayBandwidthBelowOne),
            }
        }
    }
}

/// Closed-form `1/2 I_{R-TDA}` for integer `T0 B` as a function of the
/// aggregate `a = rho0 (x_sd + x1 + x2)` and `b = 2 rho0 sqrt(x1 x2)`.
pub fn rtda_integer_closed_form(a: f64, b: f64) -> f64 {
    0.5 * period_mean(1.0 + a, b)
}

/// Delay diversity with linear modulation and a whitened matched filter.
pub fn i_ltda(f: &FadingRealization, d: DecodingSet, corr: &CorrelationSet, rho0: f64) -> Result<BoundedMi> {
    if corr.span() != 1 {
        return Err(invalid(
            "corr",
            "linearly modulated delay diversity needs a single-symbol waveform",
        ));
    }
    if !(corr.rho12.abs() < 1.0) {
        return Err(invalid("rho12", format!("needs |rho12| < 1, got {}", corr.rho12)));
    }
    if d.len() < 2 {
        return Ok(BoundedMi::exact(i_stc(f, d, rho0)));
    }
    let g = f.gains();
    let r12 = corr.rho12;
    let a = rho0 * ((f.r1d + f.r2d * r12).norm_sqr() + g.r2d * (1.0 - r12 * r12));
    let b = 2.0 * corr.rho21 * (g.r1d * g.r2d).sqrt() * rho0;
    let disc = ((1.0 + a - b) * (1.0 + a + b)).max(0.0);
    let i2 = (1.0 + a + disc.sqrt()).log2() - 1.0;
    let direct = 0.5 * log2_1p(rho0 * g.sd);
    Ok(BoundedMi {
        value: direct + 0.5 * i2,
        lower: direct + 0.5 * (log2_1p(a) - 1.0),
        upper: direct + 0.5 * log2_1p(a),
        warning: None,
    })
}

fn check_a1(a1: f64) -> Result<()> {
    if !(a1.abs() < 0.5) {
        return Err(invalid("a1", format!("needs |a1| < 1/2, got {a1}")));
    }
    Ok(())
}

/// Single-antenna link over the ISI channel of a two-symbol waveform.
pub fn i_esd(alpha: Complex64, a1: f64, rho0: f64) -> Result<f64> {
    check_a1(a1)?;
    Ok(esd_from_gain(alpha.norm_sqr(), a1, rho0))
}

fn esd_from_gain(x: f64, a1: f64, rho0: f64) -> f64 {
    let snr = rho0 * x;
    let k = 2.0 * snr * a1 / (1.0 + snr);
    log2_1p(snr) + ((1.0 + (1.0 - k * k).sqrt()) / 2.0).log2()
}

/// [`i_esd`] with its bounds `log2(1 + rho0 x) - 1 < I <= log2(1 + rho0 x)`.
pub fn i_esd_bounded(alpha: Complex64, a1: f64, rho0: f64) -> Result<BoundedMi> {
    let value = i_esd(alpha, a1, rho0)?;
    let upper = log2_1p(rho0 * alpha.norm_sqr());
    Ok(BoundedMi {
        value,
        lower: upper - 1.0,
        upper,
        warning: None,
    })
}

/// Single-antenna ISI link for any span: closed form up to two symbols,
/// quadrature of `log2(1 + rho0 x t11(w))` beyond.
fn esd_general(x: f64, corr: &CorrelationSet, rho0: f64, table: Option<&SpectralTable>) -> Result<BoundedMi> {
    if corr.span() <= 2 {
        return i_esd_bounded(Complex64::new(x.sqrt(), 0.0), corr.a1, rho0);
    }
    let value = match table {
        Some(t) => t.single(x, rho0),
        None => SpectralTable::new(corr, MIN_QUAD_POINTS).single(x, rho0),
    };
    let upper = log2_1p(rho0 * x);
    Ok(BoundedMi {
        value,
        lower: upper - 1.0,
        upper,
        warning: None,
    })
}

/// Spectral symbols tabulated on composite Gauss-Legendre nodes over `[-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    weights: Vec<f64>,
    t11: Vec<f64>,
    det: Vec<f64>,
}

impl SpectralTable {
    pub fn new(corr: &CorrelationSet, quad_points: usize) -> Self {
        let panels = quad_points.div_ceil(PANEL_ORDER).max(1);
        let rule = gauss_legendre(PANEL_ORDER);
        let h = 2.0 * PI / panels as f64;
        let cap = panels * PANEL_ORDER;
        let mut table = Self {
            weights: Vec::with_capacity(cap),
            t11: Vec::with_capacity(cap),
            det: Vec::with_capacity(cap),
        };
        for p in 0..panels {
            let mid = -PI + h * (p as f64 + 0.5);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let omega = mid + 0.5 * h * x;
                let t = corr.t11(omega);
                table.weights.push(0.5 * h * w / (2.0 * PI));
                table.t11.push(t);
                table.det.push(t * t - corr.t12(omega).norm_sqr());
            }
        }
        table
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(1/2pi) integral log2 det(I + rho0 T_E(w)) dw` for relay gains `x1`, `x2`.
    pub fn emaca(&self, x1: f64, x2: f64, rho0: f64) -> f64 {
        let lin = rho0 * (x1 + x2);
        let quad = rho0 * rho0 * x1 * x2;
        let mut sum = 0.0;
        for i in 0..self.weights.len() {
            let v = 1.0 + lin * self.t11[i] + quad * self.det[i];
            sum += self.weights[i] * v.max(f64::MIN_POSITIVE).ln();
        }
        sum / LN_2
    }

    /// `(1/2pi) integral log2(1 + rho0 x t11(w)) dw`.
    pub fn single(&self, x: f64, rho0: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.weights.len() {
            let v = 1.0 + rho0 * x * self.t11[i];
            sum += self.weights[i] * v.max(f64::MIN_POSITIVE).ln();
        }
        sum / LN_2
    }
}

/// `(1/2pi) integral log2 det(I + rho0 T_E(w)) dw` for relay gains `x1`, `x2`.
pub fn emaca_value(x1: f64, x2: f64, corr: &CorrelationSet, rho0: f64, quad_points: usize) -> f64 {
    SpectralTable::new(corr, quad_points).emaca(x1, x2, rho0)
}

/// Asynchronous two-relay multiple-access link.
pub fn i_emaca_spectral(
    f: &FadingRealization,
    corr: &CorrelationSet,
    rho0: f64,
    quad_points: usize,
    bounds: &EigenBounds,
) -> Result<BoundedMi> {
    check_quad_points(quad_points)?;
    emaca_with_table(f, &SpectralTable::new(corr, quad_points), rho0, bounds)
}

fn check_quad_points(quad_points: usize) -> Result<()> {
    if quad_points < MIN_QUAD_POINTS {
        return Err(invalid(
            "quad_points",
            format!("must be at least {MIN_QUAD_POINTS}, got {quad_points}"),
        ));
    }
    Ok(())
}

fn emaca_with_table(
    f: &FadingRealization,
    table: &SpectralTable,
    rho0: f64,
    bounds: &EigenBounds,
) -> Result<BoundedMi> {
    let g = f.gains();
    let value = table.emaca(g.r1d, g.r2d, rho0);
    let lo = bounds.lambda_min_certified.max(0.0);
    let hi = bounds.lambda_max_certified;
    Ok(BoundedMi {
        value,
        lower: log2_1p(rho0 * g.r1d * lo) + log2_1p(rho0 * g.r2d * lo),
        upper: log2_1p(rho0 * g.r1d * hi) + log2_1p(rho0 * g.r2d * hi),
        warning: (!bounds.pd).then_some(MiWarning::NotPositiveDefinite),
    })
}

/// Asynchronous space-time coding over both phases.
pub fn i_astc(
    f: &FadingRealization,
    d: DecodingSet,
    corr: &CorrelationSet,
    rho0: f64,
    quad_points: usize,
    bounds: &EigenBounds,
) -> Result<BoundedMi> {
    check_quad_points(quad_points)?;
    let table = SpectralTable::new(corr, quad_points);
    i_astc_with_table(f, d, corr, &table, rho0, bounds)
}

/// [`i_astc`] with a precomputed [`SpectralTable`] for `corr`.
pub fn i_astc_with_table(
    f: &FadingRealization,
    d: DecodingSet,
    corr: &CorrelationSet,
    table: &SpectralTable,
    rho0: f64,
    bounds: &EigenBounds,
) -> Result<BoundedMi> {
    if corr.span() <= 2 {
        check_a1(corr.a1)?;
    }
    let g = f.gains();
    let direct = esd_general(g.sd, corr, rho0, Some(table))?;
    let relay = match (d.contains_r1(), d.contains_r2()) {
        (false, false) => BoundedMi::exact(0.0),
        (true, false) => esd_general(g.r1d, corr, rho0, Some(table))?,
        (false, true) => esd_general(g.r2d, corr, rho0, Some(table))?,
        (true, true) => emaca_with_table(f, table, rho0, bounds)?,
    };
    Ok(BoundedMi {
        value: 0.5 * (direct.value + relay.value),
        lower: 0.5 * (direct.lower + relay.lower),
        upper: 0.5 * (direct.upper + relay.upper),
        warning: relay.warning,
    })
}

/// `log2(1 + rho0 (g1 + g2))`.
pub fn i_af_pair(g1: f64, g2: f64, rho0: f64) -> f64 {
    log2_1p(rho0 * (g1 + g2))
}
