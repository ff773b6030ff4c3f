//! Time-limited waveforms, their delayed correlations, the 2x2 spectral
//! matrix of the asynchronous relay channel and positive-definiteness
//! certification.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Minimum samples per symbol period accepted for correlation integrals.
pub const MIN_SAMPLES_PER_SYMBOL: usize = 64;

/// Allowed deviation of the trapezoid energy from 1.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

/// Minimum eigenvalue that counts as positive definite.
pub const PD_TOLERANCE: f64 = 1e-6;

/// Minimum frequency grid size for certification.
pub const MIN_OMEGA_POINTS: usize = 256;

/// Real waveform sampled uniformly on `[0, span * symbol_period]`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    span: usize,
    samples_per_symbol: usize,
    symbol_period: f64,
}

impl Waveform {
    /// `samples` must hold `span * samples_per_symbol + 1` points, both
    /// endpoints included.
    pub fn from_samples(samples: Vec<f64>, span: usize, samples_per_symbol: usize, symbol_period: f64) -> Result<Self> {
        if span == 0 {
            return Err(invalid("span", "must be at least one symbol"));
        }
        if samples_per_symbol < MIN_SAMPLES_PER_SYMBOL {
            return Err(invalid(
                "samples_per_symbol",
                format!("must be at least {MIN_SAMPLES_PER_SYMBOL}, got {samples_per_symbol}"),
            ));
        }
        if !(symbol_period > 0.0 && symbol_period.is_finite()) {
            return Err(invalid(
                "symbol_period",
                format!("must be positive, got {symbol_period}"),
            ));
        }
        let expected = span * samples_per_symbol + 1;
        if samples.len() != expected {
            return Err(invalid(
                "samples",
                format!("expected {expected} samples for span {span}, got {}", samples.len()),
            ));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(invalid("samples", "contain non-finite values"));
        }
        Ok(Self {
            samples,
            span,
            samples_per_symbol,
            symbol_period,
        })
    }

    /// Unit-energy rectangular pulse over one symbol.
    pub fn rectangular(samples_per_symbol: usize) -> Result<Self> {
        let a = 1.0;
        Self::from_samples(vec![a; samples_per_symbol + 1], 1, samples_per_symbol, 1.0)
    }

    /// Unit-energy half-sine pulse over one symbol.
    pub fn half_sine(samples_per_symbol: usize) -> Result<Self> {
        let n = samples_per_symbol;
        let samples = (0..=n)
            .map(|i| (2f64).sqrt() * (PI * i as f64 / n as f64).sin())
            .collect();
        Self::from_samples(samples, 1, n, 1.0)?.normalized()
    }

    /// Square-root raised cosine truncated to `span` symbols and centred in the window.
    pub fn srrc(rolloff: f64, span: usize, samples_per_symbol: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(invalid("rolloff", format!("must lie in [0, 1], got {rolloff}")));
        }
        let n = span * samples_per_symbol;
        let centre = span as f64 / 2.0;
        let samples = (0..=n)
            .map(|i| srrc_pulse(i as f64 / samples_per_symbol as f64 - centre, rolloff))
            .collect();
        Self::from_samples(samples, span, samples_per_symbol, 1.0)?.normalized()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn duration(&self) -> f64 {
        self.span as f64 * self.symbol_period
    }

    fn dt(&self) -> f64 {
        self.symbol_period / self.samples_per_symbol as f64
    }

    /// Trapezoid-rule energy on the sample grid.
    pub fn energy(&self) -> f64 {
        let n = self.samples.len();
        let inner: f64 = self.samples[1..n - 1].iter().map(|x| x * x).sum();
        let ends = 0.5 * (self.samples[0].powi(2) + self.samples[n - 1].powi(2));
        (inner + ends) * self.dt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let e = self.energy();
        if !(e > 0.0) {
            return Err(invalid("samples", "waveform has zero energy"));
        }
        let k = e.sqrt().recip();
        self.samples.iter_mut().for_each(|x| *x *= k);
        Ok(self)
    }

    pub fn check_energy(&self) -> Result<()> {
        let energy = self.energy();
        if (energy - 1.0).abs() > ENERGY_TOLERANCE {
            return Err(Error::Energy {
                energy,
                tolerance: ENERGY_TOLERANCE,
            });
        }
        Ok(())
    }

    /// Linear interpolation of the samples; zero outside the support.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = t / self.dt();
        let last = (self.samples.len() - 1) as f64;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            return if (0.0..=last).contains(&nearest) {
                self.samples[nearest as usize]
            } else {
                0.0
            };
        }
        if x < 0.0 || x > last {
            return 0.0;
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }

    /// `integral s(t) s(t - shift) dt` by the trapezoid rule on the sample
    /// grid restricted to the overlap of the two supports.
    pub fn overlap(&self, shift: f64) -> f64 {
        let dt = self.dt();
        let lo = shift.max(0.0);
        let hi = self.duration().min(self.duration() + shift);
        if hi - lo <= 1e-12 * dt {
            return 0.0;
        }
        let mut nodes = vec![lo];
        let first = (lo / dt).floor() as i64 + 1;
        let mut i = first;
        loop {
            let t = i as f64 * dt;
            if t >= hi - 1e-12 * dt {
                break;
            }
            if t > lo + 1e-12 * dt {
                nodes.push(t);
            }
            i += 1;
        }
        nodes.push(hi);
        let f = |t: f64| self.value_at(t) * self.value_at(t - shift);
        let mut sum = 0.0;
        let mut prev_t = nodes[0];
        let mut prev_f = f(prev_t);
        for &t in &nodes[1..] {
            let ft = f(t);
            sum += 0.5 * (prev_f + ft) * (t - prev_t);
            prev_t = t;
            prev_f = ft;
        }
        sum
    }

    /// Parse the text format: `key=value` header lines (`span`,
    /// `samples_per_symbol`, optional `symbol_period`), then one sample per line.
    /// Lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut span = None;
        let mut sps = None;
        let mut period = 1.0;
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                if !samples.is_empty() {
                    return Err(Error::Parse {
                        line: lineno,
                        reason: "header line after samples".into(),
                    });
                }
                let v = v.trim();
                let bad = |reason: String| Error::Parse { line: lineno, reason };
                match k.trim() {
                    "span" => span = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                    "samples_per_symbol" => sps = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                    "symbol_period" => period = v.parse::<f64>().map_err(|e| bad(e.to_string()))?,
                    other => return Err(bad(format!("unknown header key `{other}`"))),
                }
                continue;
            }
            let x = line.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                reason: e.to_string(),
            })?;
            samples.push(x);
        }
        let span = span.ok_or(Error::Parse {
            line: 0,
            reason: "missing `span` header".into(),
        })?;
        let sps = sps.ok_or(Error::Parse {
            line: 0,
            reason: "missing `samples_per_symbol` header".into(),
        })?;
        Self::from_samples(samples, span, sps, period)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "span={}\nsamples_per_symbol={}\nsymbol_period={}\n",
            self.span, self.samples_per_symbol, self.symbol_period
        );
        for x in &self.samples {
            let _ = writeln!(out, "{x:e}");
        }
        out
    }
}

fn srrc_pulse(x: f64, beta: f64) -> f64 {
    if x.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && (x.abs() - 1.0 / (4.0 * beta)).abs() < 1e-12 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    num / den
}

/// Correlations of a waveform with its delayed copies.
///
/// The cross tap at lag `k` is `t_k = integral s(t) s(t - tau + k T) dt` for
/// `k` in `1 - M ..= M`; the named coefficients are `c0 = t_0`, `c1 = t_1`,
/// `c2 = t_2`, `f1 = t_{-1}`. The autocorrelation `R(k) = integral s(t) s(t + k T) dt`
/// gives `a1 = d1 = R(1)`. `R(0)` is taken as exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    pub a1: f64,
    pub d1: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub f1: f64,
    pub rho12: f64,
    pub rho21: f64,
    pub tau: f64,
    span: usize,
    auto: Vec<f64>,
    cross: Vec<f64>,
}

impl CorrelationSet {
    fn from_taps(span: usize, auto: Vec<f64>, cross: Vec<f64>, tau: f64) -> Self {
        let m = span as i64;
        let tap = |k: i64| {
            let idx = k + m - 1;
            if idx >= 0 && (idx as usize) < cross.len() {
                cross[idx as usize]
            } else {
                0.0
            }
        };
        let a1 = auto.get(1).copied().unwrap_or(0.0);
        let (c0, c1, c2, f1) = (tap(0), tap(1), tap(2), tap(-1));
        Self {
            a1,
            d1: a1,
            c0,
            c1,
            c2,
            f1,
            rho12: c0,
            rho21: c1,
            tau,
            span,
            auto,
            cross,
        }
    }

    /// Raw taps: `auto` holds `R(0..M)`, `cross` holds `t_k` for `k = 1 - M ..= M`.
    pub fn from_parts(span: usize, auto: Vec<f64>, cross: Vec<f64>, tau: f64) -> Result<Self> {
        if span == 0 || auto.len() != span || cross.len() != 2 * span {
            return Err(invalid(
                "taps",
                format!("span {span} needs {span} auto and {} cross taps", 2 * span),
            ));
        }
        Ok(Self::from_taps(span, auto, cross, tau))
    }

    /// All correlations zero: the spectral matrix is the identity.
    pub fn orthogonal() -> Self {
        Self::from_taps(1, vec![1.0], vec![0.0, 0.0], 1.0)
    }

    /// Single-symbol taps `rho12 = c0`, `rho21 = c1`.
    pub fn single_symbol(rho12: f64, rho21: f64, tau: f64) -> Self {
        Self::from_taps(1, vec![1.0], vec![rho12, rho21], tau)
    }

    /// Two-symbol waveform specified by its named coefficients.
    pub fn two_symbol(a1: f64, c0: f64, c1: f64, c2: f64, f1: f64, tau: f64) -> Self {
        Self::from_taps(2, vec![1.0, a1], vec![f1, c0, c1, c2], tau)
    }

    pub fn span(&self) -> usize {
        self.span
    }

    /// `R(k)` for `k = 0 .. M - 1`.
    pub fn auto_taps(&self) -> &[f64] {
        &self.auto
    }

    /// `t_k` for `k = 1 - M ..= M`.
    pub fn cross_taps(&self) -> &[f64] {
        &self.cross
    }

    pub fn cross_lags(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let m = self.span as i64;
        self.cross.iter().enumerate().map(move |(i, &v)| (i as i64 + 1 - m, v))
    }

    /// Cross tap at lag `k`, zero outside the support.
    pub fn cross_tap(&self, k: i64) -> f64 {
        let idx = k + self.span as i64 - 1;
        if idx >= 0 && (idx as usize) < self.cross.len() {
            self.cross[idx as usize]
        } else {
            0.0
        }
    }

    /// Autocorrelation at lag `k` (symmetric), zero outside the support.
    pub fn auto_tap(&self, k: i64) -> f64 {
        self.auto.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    pub fn is_orthogonal(&self) -> bool {
        self.auto[1..].iter().chain(&self.cross).all(|&x| x == 0.0)
    }

    /// Diagonal symbol `t11(w) = sum_k R(|k|) e^{-ikw}`.
    pub fn t11(&self, omega: f64) -> f64 {
        let mut s = self.auto[0];
        for (k, r) in self.auto.iter().enumerate().skip(1) {
            s += 2.0 * r * (k as f64 * omega).cos();
        }
        s
    }

    /// Off-diagonal symbol `t12(w) = sum_k t_k e^{-ikw}`.
    pub fn t12(&self, omega: f64) -> Complex64 {
        self.cross_lags()
            .map(|(k, v)| Complex64::from_polar(v, -(k as f64) * omega))
            .sum()
    }

    /// Bound on the spectral norm of `d/dw` of the unit-gain spectral matrix.
    pub fn lipschitz(&self) -> f64 {
        let l11: f64 = self
            .auto
            .iter()
            .enumerate()
            .map(|(k, r)| 2.0 * k as f64 * r.abs())
            .sum();
        let l12: f64 = self.cross_lags().map(|(k, v)| k.unsigned_abs() as f64 * v.abs()).sum();
        (2.0 * l11 * l11 + 2.0 * l12 * l12).sqrt()
    }
}

/// Correlation coefficients of `s` at relative delay `tau`.
pub fn correlations(s: &Waveform, tau: f64) -> Result<CorrelationSet> {
    let t = s.symbol_period();
    if !(tau > 0.0 && tau <= t * (1.0 + 1e-12)) {
        return Err(invalid("tau", format!("must lie in (0, {t}], got {tau}")));
    }
    let m = s.span();
    let mut auto = vec![1.0];
    for k in 1..m {
        auto.push(s.overlap(-(k as f64) * t));
    }
    let cross = (1 - m as i64..=m as i64)
        .map(|k| s.overlap(tau - k as f64 * t))
        .collect();
    Ok(CorrelationSet::from_taps(m, auto, cross, tau))
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// Spectral matrix of the two delayed relay waveforms at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMatrix2 {
    pub omega: f64,
    /// Unit-gain matrix.
    pub unit: Matrix2,
    /// Fading-weighted matrix. Channel phases are dropped since they do not
    /// change the eigenvalues.
    pub weighted: Matrix2,
    pub unit_eigs: (f64, f64),
    pub weighted_eigs: (f64, f64),
}

pub fn spectral_matrix(corr: &CorrelationSet, gain1: f64, gain2: f64, omega: f64) -> SpectralMatrix2 {
    let d = Complex64::new(corr.t11(omega), 0.0);
    let off = corr.t12(omega);
    let unit = [[d, off], [off.conj(), d]];
    let g12 = (gain1 * gain2).sqrt();
    let weighted = [[d * gain1, off * g12], [off.conj() * g12, d * gain2]];
    SpectralMatrix2 {
        omega,
        unit,
        weighted,
        unit_eigs: eigen2(&unit),
        weighted_eigs: eigen2(&weighted),
    }
}

/// Eigenvalues of a 2x2 Hermitian matrix, largest first.
pub fn eigen2(m: &Matrix2) -> (f64, f64) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b2 = m[0][1].norm_sqr();
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b2).sqrt();
    let hi = half_tr + disc;
    let det = a * d - b2;
    // Avoid cancellation in the small eigenvalue when the large one dominates.
    let lo = if half_tr > 0.0 && hi > 0.0 {
        det / hi
    } else {
        half_tr - disc
    };
    (hi, lo)
}

/// Extremes of the unit-gain spectral eigenvalues over a frequency grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBounds {
    /// Smallest eigenvalue seen on the grid.
    pub lambda_min: f64,
    /// Largest eigenvalue seen on the grid.
    pub lambda_max: f64,
    pub argmin_omega: f64,
    pub argmax_omega: f64,
    /// Grid minimum reduced by the Lipschitz allowance, floored at zero.
    pub lambda_min_certified: f64,
    /// Grid maximum raised by the Lipschitz allowance.
    pub lambda_max_certified: f64,
    pub lipschitz: f64,
    pub omega_points: usize,
    pub grid_step: f64,
    pub pd: bool,
    /// Largest `|trace - 2|` over the grid.
    pub trace_deviation: f64,
    /// `2 (2M + 1)`.
    pub lambda_max_limit: f64,
}

impl EigenBounds {
    pub fn within_limit(&self) -> bool {
        self.lambda_max <= self.lambda_max_limit + 1e-9
    }

    /// Bounds for the identity spectrum.
    pub fn identity() -> Self {
        certify_correlations(&CorrelationSet::orthogonal(), MIN_OMEGA_POINTS).expect("valid grid")
    }
}

/// Grid certification for a correlation set. The grid is
/// `w_i = -pi + 2 pi i / N`, `i = 0..=N`, so doubling `N` refines it.
pub fn certify_correlations(corr: &CorrelationSet, omega_points: usize) -> Result<EigenBounds> {
    if omega_points < MIN_OMEGA_POINTS {
        return Err(invalid(
            "omega_points",
            format!("must be at least {MIN_OMEGA_POINTS}, got {omega_points}"),
        ));
    }
    let h = 2.0 * PI / omega_points as f64;
    let mut lo = (f64::INFINITY, 0.0);
    let mut hi = (f64::NEG_INFINITY, 0.0);
    let mut trace_dev: f64 = 0.0;
    for i in 0..=omega_points {
        let w = -PI + h * i as f64;
        let d = corr.t11(w);
        let unit = [
            [Complex64::new(d, 0.0), corr.t12(w)],
            [corr.t12(w).conj(), Complex64::new(d, 0.0)],
        ];
        let (e1, e2) = eigen2(&unit);
        trace_dev = trace_dev.max((2.0 * d - 2.0).abs());
        if e2 < lo.0 {
            lo = (e2, w);
        }
        if e1 > hi.0 {
            hi = (e1, w);
        }
    }
    let lipschitz = corr.lipschitz();
    let slack = 0.5 * lipschitz * h;
    let certified = (lo.0 - slack).max(0.0);
    Ok(EigenBounds {
        lambda_min: lo.0,
        lambda_max: hi.0,
        argmin_omega: lo.1,
        argmax_omega: hi.1,
        lambda_min_certified: certified,
        lambda_max_certified: hi.0 + slack,
        lipschitz,
        omega_points,
        grid_step: h,
        pd: lo.0 - slack > PD_TOLERANCE,
        trace_deviation: trace_dev,
        lambda_max_limit: 2.0 * (2.0 * corr.span() as f64 + 1.0),
    })
}

/// Certify positive definiteness of the spectral matrix of `s` at delay `tau`.
pub fn certify_pd(s: &Waveform, tau: f64, omega_points: usize) -> Result<EigenBounds> {
    s.check_energy()?;
    let corr = correlations(s, tau)?;
    certify_correlations(&corr, omega_points)
}
