//! Fading model, rate parameterization and decoding-set logic for the
//! two-relay half-duplex network.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Number of relays handled by this crate.
pub const RELAYS: usize = 2;

/// Variances of the five links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkVariances {
    pub sd: f64,
    pub sr1: f64,
    pub sr2: f64,
    pub r1d: f64,
    pub r2d: f64,
}

impl LinkVariances {
    pub const UNIT: Self = Self {
        sd: 1.0,
        sr1: 1.0,
        sr2: 1.0,
        r1d: 1.0,
        r2d: 1.0,
    };

    pub fn as_array(&self) -> [f64; 5] {
        [self.sd, self.sr1, self.sr2, self.r1d, self.r2d]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            sd: v[0],
            sr1: v[1],
            sr2: v[2],
            r1d: v[3],
            r2d: v[4],
        }
    }
}

/// Link distances used to derive variances as `scale / d^mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub distances: LinkVariances,
    pub pathloss_exponent: f64,
    pub scale: f64,
}

/// Two-relay network with per-link fading variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    variances: LinkVariances,
    geometry: Option<Geometry>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            variances: LinkVariances::UNIT,
            geometry: None,
        }
    }
}

impl NetworkConfig {
    pub fn new(variances: LinkVariances) -> Result<Self> {
        for v in variances.as_array() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid("variance", format!("must be positive and finite, got {v}")));
            }
        }
        Ok(Self {
            variances,
            geometry: None,
        })
    }

    pub fn from_geometry(geometry: Geometry) -> Result<Self> {
        let mu = geometry.pathloss_exponent;
        if !(2.0..=5.0).contains(&mu) {
            return Err(invalid("pathloss_exponent", format!("must lie in [2, 5], got {mu}")));
        }
        if !(geometry.scale > 0.0 && geometry.scale.is_finite()) {
            return Err(invalid("scale", format!("must be positive, got {}", geometry.scale)));
        }
        let d = geometry.distances.as_array();
        let mut v = [0.0; 5];
        for (vi, di) in v.iter_mut().zip(d) {
            if !(di > 0.0 && di.is_finite()) {
                return Err(invalid("distance", format!("must be positive, got {di}")));
            }
            *vi = geometry.scale / di.powf(mu);
        }
        let mut cfg = Self::new(LinkVariances::from_array(v))?;
        cfg.geometry = Some(geometry);
        Ok(cfg)
    }

    pub fn variances(&self) -> &LinkVariances {
        &self.variances
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn relay_count(&self) -> usize {
        RELAYS
    }

    /// Exponential rates of the squared gains, `1 / variance`.
    pub fn lambdas(&self) -> LinkVariances {
        LinkVariances::from_array(self.variances.as_array().map(f64::recip))
    }

    /// Transmit power normalization `2 / (K + 1)`.
    pub fn power_normalization(&self) -> f64 {
        2.0 / (RELAYS as f64 + 1.0)
    }
}

/// One draw of the five complex channel gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingRealization {
    pub sd: Complex64,
    pub sr1: Complex64,
    pub sr2: Complex64,
    pub r1d: Complex64,
    pub r2d: Complex64,
}

/// Squared magnitudes of a [`FadingRealization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub sd: f64,
    pub sr1: f64,
    pub sr2: f64,
    pub r1d: f64,
    pub r2d: f64,
}

impl FadingRealization {
    pub fn from_gains(sd: Complex64, sr1: Complex64, sr2: Complex64, r1d: Complex64, r2d: Complex64) -> Self {
        Self { sd, sr1, sr2, r1d, r2d }
    }

    /// Real, positive gains with the given squared magnitudes.
    pub fn from_powers(g: Gains) -> Self {
        let c = |x: f64| Complex64::new(x.sqrt(), 0.0);
        Self::from_gains(c(g.sd), c(g.sr1), c(g.sr2), c(g.r1d), c(g.r2d))
    }

    pub fn gains(&self) -> Gains {
        Gains {
            sd: self.sd.norm_sqr(),
            sr1: self.sr1.norm_sqr(),
            sr2: self.sr2.norm_sqr(),
            r1d: self.r1d.norm_sqr(),
            r2d: self.r2d.norm_sqr(),
        }
    }
}

/// Random stream dedicated to one trial index.
///
/// Streams are keyed by `(seed, trial)` so results do not depend on how
/// trials are split across workers.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn circular_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R, config: &NetworkConfig) -> FadingRealization {
    let v = config.variances;
    FadingRealization {
        sd: circular_gaussian(rng, v.sd),
        sr1: circular_gaussian(rng, v.sr1),
        sr2: circular_gaussian(rng, v.sr2),
        r1d: circular_gaussian(rng, v.r1d),
        r2d: circular_gaussian(rng, v.r2d),
    }
}

/// `R = r log2(1 + snr * var_sd)`.
pub fn rate(snr: f64, r: f64, var_sd: f64) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(invalid("snr", format!("must be positive, got {snr}")));
    }
    if !(0.0..0.5).contains(&r) {
        return Err(invalid("r", format!("multiplexing gain must lie in [0, 1/2), got {r}")));
    }
    if !(var_sd > 0.0) {
        return Err(invalid("var_sd", format!("must be positive, got {var_sd}")));
    }
    Ok(r * (snr * var_sd).ln_1p() / std::f64::consts::LN_2)
}

/// Operating point: SNR, multiplexing gain, target rate and normalized SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub snr: f64,
    pub r: f64,
    pub rate: f64,
    pub rho0: f64,
}

impl RatePoint {
    pub fn new(snr: f64, r: f64, config: &NetworkConfig) -> Result<Self> {
        let rate = rate(snr, r, config.variances.sd)?;
        Ok(Self {
            snr,
            r,
            rate,
            rho0: config.power_normalization() * snr,
        })
    }

    /// Explicit rate and normalized SNR, bypassing the `r` parameterization.
    pub fn with_rate(rate: f64, rho0: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid("rate", format!("must be non-negative, got {rate}")));
        }
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(invalid("rho0", format!("must be positive, got {rho0}")));
        }
        Ok(Self {
            snr: 1.5 * rho0,
            r: f64::NAN,
            rate,
            rho0,
        })
    }

    /// `2^(2R) - 1`, the SNR threshold of a half-duplex link.
    pub fn half_duplex_threshold(&self) -> f64 {
        (2.0 * self.rate * std::f64::consts::LN_2).exp_m1()
    }

    /// `2^(2R)`.
    pub fn target(&self) -> f64 {
        (2.0 * self.rate).exp2()
    }
}

/// Whether a relay decodes: `1/2 log2(1 + rho0 |alpha|^2) >= R`.
pub fn relay_decodes(alpha_sr: Complex64, rp: &RatePoint) -> bool {
    rp.rho0 * alpha_sr.norm_sqr() >= rp.half_duplex_threshold()
}

/// Subset of {R1, R2} that decoded the source message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DecodingSet(u8);

impl DecodingSet {
    pub const EMPTY: Self = Self(0);
    pub const R1: Self = Self(1);
    pub const R2: Self = Self(2);
    pub const BOTH: Self = Self(3);
    pub const ALL: [Self; 4] = [Self::EMPTY, Self::R1, Self::R2, Self::BOTH];

    pub fn new(r1: bool, r2: bool) -> Self {
        Self(r1 as u8 | (r2 as u8) << 1)
    }

    pub fn contains_r1(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn contains_r2(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

pub fn decoding_set(f: &FadingRealization, rp: &RatePoint) -> DecodingSet {
    DecodingSet::new(relay_decodes(f.sr1, rp), relay_decodes(f.sr2, rp))
}

/// Probabilities of the four decoding-set outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodingSetProbs {
    pub empty: f64,
    pub r1_only: f64,
    pub r2_only: f64,
    pub both: f64,
    /// Per-relay decoding failure probabilities.
    pub fail_r1: f64,
    pub fail_r2: f64,
}

impl DecodingSetProbs {
    pub fn get(&self, d: DecodingSet) -> f64 {
        match d {
            DecodingSet::EMPTY => self.empty,
            DecodingSet::R1 => self.r1_only,
            DecodingSet::R2 => self.r2_only,
            _ => self.both,
        }
    }

    pub fn by_cardinality(&self, k: usize) -> f64 {
        match k {
            0 => self.empty,
            1 => self.r1_only + self.r2_only,
            _ => self.both,
        }
    }
}

/// Probability that `1/2 log2(1 + rho0 x) < R` for `x ~ Exp(lambda)`.
pub fn half_duplex_outage(rp: &RatePoint, lambda: f64) -> f64 {
    -(-lambda * rp.half_duplex_threshold() / rp.rho0).exp_m1()
}

pub fn decoding_set_probs(rp: &RatePoint, lambda_sr1: f64, lambda_sr2: f64) -> DecodingSetProbs {
    let q1 = half_duplex_outage(rp, lambda_sr1);
    let q2 = half_duplex_outage(rp, lambda_sr2);
    DecodingSetProbs {
        empty: q1 * q2,
        r1_only: (1.0 - q1) * q2,
        r2_only: q1 * (1.0 - q2),
        both: (1.0 - q1) * (1.0 - q2),
        fail_r1: q1,
        fail_r2: q2,
    }
}
