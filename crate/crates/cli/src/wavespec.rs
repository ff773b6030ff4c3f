//! The `waveform` key: a generator name, `orthogonal`, or `file:PATH`.

use std::fs;

use relaydiv_core::waveform::{certify_correlations, certify_pd, correlations, CorrelationSet, EigenBounds, Waveform};

use crate::config::Settings;
use crate::CliError;

#[derive(Debug, Clone)]
pub enum WaveSpec {
    /// Zero cross-correlation, no intersymbol interference.
    Orthogonal,
    Pulse(Waveform),
}

impl WaveSpec {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let name = s.get("waveform");
        if let Some(path) = name.strip_prefix("file:") {
            let text = fs::read_to_string(path.trim())
                .map_err(|e| CliError::Config(format!("waveform file {}: {e}", path.trim())))?;
            return Ok(WaveSpec::Pulse(Waveform::parse(&text)?));
        }
        let sps: usize = s.parse("sps")?;
        let w = match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "orthogonal" => return Ok(WaveSpec::Orthogonal),
            "rectangular" | "rect" => Waveform::rectangular(sps)?,
            "half-sine" | "halfsine" => Waveform::half_sine(sps)?,
            "srrc" => Waveform::srrc(s.parse("rolloff")?, s.parse("span")?, sps)?,
            _ => {
                return Err(CliError::Config(format!(
                    "waveform = {name}: expected rectangular, half-sine, srrc, orthogonal or file:PATH"
                )))
            }
        };
        Ok(WaveSpec::Pulse(w))
    }

    pub fn correlations(&self, tau: f64) -> Result<CorrelationSet, CliError> {
        match self {
            WaveSpec::Orthogonal => Ok(CorrelationSet::orthogonal()),
            WaveSpec::Pulse(w) => Ok(correlations(w, tau)?),
        }
    }

    pub fn certify(&self, tau: f64, omega_points: usize) -> Result<EigenBounds, CliError> {
        match self {
            WaveSpec::Orthogonal => Ok(certify_correlations(&CorrelationSet::orthogonal(), omega_points)?),
            WaveSpec::Pulse(w) => Ok(certify_pd(w, tau, omega_points)?),
        }
    }

    pub fn energy(&self) -> f64 {
        match self {
            WaveSpec::Orthogonal => 1.0,
            WaveSpec::Pulse(w) => w.energy(),
        }
    }
}
