//! Python bindings for the relaydiv core library.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use relaydiv_core::channel::{
    self, sample_fading, trial_rng, DecodingSet, FadingRealization, LinkVariances, NetworkConfig, RatePoint,
};
use relaydiv_core::mutualinfo::{self as mi, BoundedMi, DelayConfig, SchemeId};
use relaydiv_core::outage::{self, AsyncSetup, ConditionalCase, OutageCurve, OutagePoint, Probability, Scheme};
use relaydiv_core::toeplitz;
use relaydiv_core::tradeoff::{self, Crossing, TradeoffScheme, Q};
use relaydiv_core::waveform::{self, CorrelationSet, EigenBounds, Waveform};
use relaydiv_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::Fit(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn network(variances: Option<[f64; 5]>) -> PyResult<NetworkConfig> {
    match variances {
        Some(v) => NetworkConfig::new(LinkVariances::from_array(v)).map_err(err),
        None => Ok(NetworkConfig::default()),
    }
}

fn decoding(d: (bool, bool)) -> DecodingSet {
    DecodingSet::new(d.0, d.1)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn rational(r: &str) -> PyResult<Q> {
    if let Ok(q) = r.trim().parse::<Q>() {
        return Ok(q);
    }
    let x: f64 = r
        .trim()
        .parse()
        .map_err(|_| PyValueError::new_err(format!("not a number: `{r}`")))?;
    Q::approximate_float(x).ok_or_else(|| PyValueError::new_err(format!("not representable: {r}")))
}

fn bounded<'py>(py: Python<'py>, v: &BoundedMi) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", v.value)?;
    d.set_item("lower", v.lower)?;
    d.set_item("upper", v.upper)?;
    d.set_item("warning", v.warning.map(|w| format!("{w:?}")))?;
    Ok(d)
}

/// Spectral efficiency `R = r log2(1 + snr var_sd)`.
#[pyfunction]
#[pyo3(signature = (snr, r, var_sd = 1.0))]
fn rate(snr: f64, r: f64, var_sd: f64) -> PyResult<f64> {
    channel::rate(snr, r, var_sd).map_err(err)
}

/// Normalized SNR `rho0` for the two-relay network.
#[pyfunction]
#[pyo3(signature = (snr, variances = None))]
fn rho0(snr: f64, variances: Option<[f64; 5]>) -> PyResult<f64> {
    Ok(RatePoint::new(snr, 0.0, &network(variances)?).map_err(err)?.rho0)
}

/// Probabilities of the four decoding sets.
#[pyfunction]
#[pyo3(signature = (snr, r, variances = None))]
fn decoding_set_probs<'py>(
    py: Python<'py>,
    snr: f64,
    r: f64,
    variances: Option<[f64; 5]>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = network(variances)?;
    let rp = RatePoint::new(snr, r, &cfg).map_err(err)?;
    let lam = cfg.lambdas();
    let p = channel::decoding_set_probs(&rp, lam.sr1, lam.sr2);
    let d = PyDict::new(py);
    d.set_item("empty", p.empty)?;
    d.set_item("r1_only", p.r1_only)?;
    d.set_item("r2_only", p.r2_only)?;
    d.set_item("both", p.both)?;
    Ok(d)
}

/// Complex gains of the five links.
#[pyclass(name = "Fading", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFading {
    inner: FadingRealization,
}

#[pymethods]
impl PyFading {
    #[new]
    fn new(sd: Complex64, sr1: Complex64, sr2: Complex64, r1d: Complex64, r2d: Complex64) -> Self {
        Self {
            inner: FadingRealization::from_gains(sd, sr1, sr2, r1d, r2d),
        }
    }

    /// Draw of trial `trial` under `seed`; identical to the Monte Carlo draws.
    #[staticmethod]
    #[pyo3(signature = (seed, trial, variances = None))]
    fn sample(seed: u64, trial: u64, variances: Option<[f64; 5]>) -> PyResult<Self> {
        let cfg = network(variances)?;
        Ok(Self {
            inner: sample_fading(&mut trial_rng(seed, trial), &cfg),
        })
    }

    #[getter]
    fn sd(&self) -> Complex64 {
        self.inner.sd
    }
    #[getter]
    fn sr1(&self) -> Complex64 {
        self.inner.sr1
    }
    #[getter]
    fn sr2(&self) -> Complex64 {
        self.inner.sr2
    }
    #[getter]
    fn r1d(&self) -> Complex64 {
        self.inner.r1d
    }
    #[getter]
    fn r2d(&self) -> Complex64 {
        self.inner.r2d
    }

    /// Relays that decode at `rate` with normalized SNR `rho0`.
    fn decoding_set(&self, rate: f64, rho0: f64) -> PyResult<(bool, bool)> {
        let d = channel::decoding_set(&self.inner, &RatePoint::with_rate(rate, rho0).map_err(err)?);
        Ok((d.contains_r1(), d.contains_r2()))
    }

    fn __repr__(&self) -> String {
        let f = &self.inner;
        format!(
            "Fading(sd={}, sr1={}, sr2={}, r1d={}, r2d={})",
            f.sd, f.sr1, f.sr2, f.r1d, f.r2d
        )
    }
}

/// Correlation coefficients of a pulse at one relative delay.
#[pyclass(name = "CorrelationSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCorrelationSet {
    inner: CorrelationSet,
}

#[pymethods]
impl PyCorrelationSet {
    #[staticmethod]
    fn orthogonal() -> Self {
        Self {
            inner: CorrelationSet::orthogonal(),
        }
    }

    #[staticmethod]
    fn single_symbol(rho12: f64, rho21: f64, tau: f64) -> Self {
        Self {
            inner: CorrelationSet::single_symbol(rho12, rho21, tau),
        }
    }

    #[getter]
    fn a1(&self) -> f64 {
        self.inner.a1
    }
    #[getter]
    fn d1(&self) -> f64 {
        self.inner.d1
    }
    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0
    }
    #[getter]
    fn c1(&self) -> f64 {
        self.inner.c1
    }
    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2
    }
    #[getter]
    fn f1(&self) -> f64 {
        self.inner.f1
    }
    #[getter]
    fn rho12(&self) -> f64 {
        self.inner.rho12
    }
    #[getter]
    fn rho21(&self) -> f64 {
        self.inner.rho21
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }
    #[getter]
    fn span(&self) -> usize {
        self.inner.span()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "CorrelationSet(tau={}, span={}, a1={}, c0={}, rho12={}, rho21={})",
            c.tau,
            c.span(),
            c.a1,
            c.c0,
            c.rho12,
            c.rho21
        )
    }
}

/// Unit-energy pulse sampled on a uniform grid.
#[pyclass(name = "Waveform", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWaveform {
    inner: Waveform,
}

#[pymethods]
impl PyWaveform {
    #[new]
    #[pyo3(signature = (samples, span, samples_per_symbol, symbol_period = 1.0))]
    fn new(samples: Vec<f64>, span: usize, samples_per_symbol: usize, symbol_period: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Waveform::from_samples(samples, span, samples_per_symbol, symbol_period).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (samples_per_symbol = 64))]
    fn rectangular(samples_per_symbol: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Waveform::rectangular(samples_per_symbol).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (samples_per_symbol = 64))]
    fn half_sine(samples_per_symbol: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Waveform::half_sine(samples_per_symbol).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (rolloff = 0.5, span = 2, samples_per_symbol = 64))]
    fn srrc(rolloff: f64, span: usize, samples_per_symbol: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Waveform::srrc(rolloff, span, samples_per_symbol).map_err(err)?,
        })
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }
    #[getter]
    fn span(&self) -> usize {
        self.inner.span()
    }
    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn correlations(&self, tau: f64) -> PyResult<PyCorrelationSet> {
        Ok(PyCorrelationSet {
            inner: waveform::correlations(&self.inner, tau).map_err(err)?,
        })
    }
}

fn bounds_dict<'py>(py: Python<'py>, b: &EigenBounds) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("pd", b.pd)?;
    d.set_item("lambda_min", b.lambda_min)?;
    d.set_item("lambda_min_certified", b.lambda_min_certified)?;
    d.set_item("argmin_omega", b.argmin_omega)?;
    d.set_item("lambda_max", b.lambda_max)?;
    d.set_item("lambda_max_certified", b.lambda_max_certified)?;
    d.set_item("argmax_omega", b.argmax_omega)?;
    d.set_item("lipschitz", b.lipschitz)?;
    d.set_item("trace_deviation", b.trace_deviation)?;
    d.set_item("omega_points", b.omega_points)?;
    Ok(d)
}

/// Grid certificate of positive definiteness of the spectral matrix.
#[pyfunction]
#[pyo3(signature = (corr, omega_points = 4096))]
fn certify_pd<'py>(
    py: Python<'py>,
    corr: PyRef<'py, PyCorrelationSet>,
    omega_points: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let b = waveform::certify_correlations(&corr.inner, omega_points).map_err(err)?;
    bounds_dict(py, &b)
}

#[pyfunction]
fn i_stc(f: PyRef<'_, PyFading>, d: (bool, bool), rho0: f64) -> f64 {
    mi::i_stc(&f.inner, decoding(d), rho0)
}

#[pyfunction]
fn i_tda<'py>(
    py: Python<'py>,
    f: PyRef<'py, PyFading>,
    d: (bool, bool),
    t0_bw: f64,
    rho0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let delays = DelayConfig::from_product(t0_bw).map_err(err)?;
    bounded(py, &mi::i_tda(&f.inner, decoding(d), &delays, rho0))
}

#[pyfunction]
fn i_rtda<'py>(
    py: Python<'py>,
    f: PyRef<'py, PyFading>,
    d: (bool, bool),
    t0_bw: f64,
    rho0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let delays = DelayConfig::from_product(t0_bw).map_err(err)?;
    bounded(py, &mi::i_rtda(&f.inner, decoding(d), &delays, rho0))
}

#[pyfunction]
fn i_ltda<'py>(
    py: Python<'py>,
    f: PyRef<'py, PyFading>,
    d: (bool, bool),
    corr: PyRef<'py, PyCorrelationSet>,
    rho0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    bounded(py, &mi::i_ltda(&f.inner, decoding(d), &corr.inner, rho0).map_err(err)?)
}

#[pyfunction]
fn i_esd<'py>(py: Python<'py>, alpha: Complex64, a1: f64, rho0: f64) -> PyResult<Bound<'py, PyDict>> {
    bounded(py, &mi::i_esd_bounded(alpha, a1, rho0).map_err(err)?)
}

/// Spectral mutual information of the two asynchronous relays.
#[pyfunction]
#[pyo3(signature = (f, corr, rho0, quad_points = 512, omega_points = 4096))]
fn i_emaca<'py>(
    py: Python<'py>,
    f: PyRef<'py, PyFading>,
    corr: PyRef<'py, PyCorrelationSet>,
    rho0: f64,
    quad_points: usize,
    omega_points: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let b = waveform::certify_correlations(&corr.inner, omega_points).map_err(err)?;
    bounded(
        py,
        &mi::i_emaca_spectral(&f.inner, &corr.inner, rho0, quad_points, &b).map_err(err)?,
    )
}

/// `(1/n) log2 det(I + rho0 H_n)` of the finite block-Toeplitz model.
#[pyfunction]
#[pyo3(signature = (corr, alpha1, alpha2, n, rho0, cap = toeplitz::DEFAULT_N_CAP))]
fn finite_n_mi(
    corr: PyRef<'_, PyCorrelationSet>,
    alpha1: Complex64,
    alpha2: Complex64,
    n: usize,
    rho0: f64,
    cap: usize,
) -> PyResult<f64> {
    let taps = toeplitz::build_taps(&corr.inner, alpha1, alpha2);
    toeplitz::finite_n_mi(&taps, n, rho0, cap).map_err(err)
}

/// Finite-n values against the spectral limit.
#[pyfunction]
#[pyo3(signature = (corr, alpha1, alpha2, n_list, rho0, cap = toeplitz::DEFAULT_N_CAP))]
fn convergence_study<'py>(
    py: Python<'py>,
    corr: PyRef<'py, PyCorrelationSet>,
    alpha1: Complex64,
    alpha2: Complex64,
    n_list: Vec<usize>,
    rho0: f64,
    cap: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let taps = toeplitz::build_taps(&corr.inner, alpha1, alpha2);
    let s = py
        .detach(|| toeplitz::convergence_study(&taps, &n_list, rho0, cap))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("mi_inf", s.mi_inf)?;
    d.set_item("n", s.rows.iter().map(|r| r.n).collect::<Vec<_>>())?;
    d.set_item("mi", s.rows.iter().map(|r| r.mi).collect::<Vec<_>>())?;
    d.set_item("rel_error", s.rows.iter().map(|r| r.rel_error).collect::<Vec<_>>())?;
    d.set_item("inversions", s.inversions())?;
    Ok(d)
}

/// Semi-analytic outage of synchronous space-time coding.
#[pyfunction]
#[pyo3(signature = (snr, r, cond = "overall", variances = None))]
fn analytic_outage_stc<'py>(
    py: Python<'py>,
    snr: f64,
    r: f64,
    cond: &str,
    variances: Option<[f64; 5]>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = outage::analytic_outage_stc(snr, r, &network(variances)?, parse(cond)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("conditional", p.conditional)?;
    d.set_item("joint", p.joint)?;
    d.set_item("set_probability", p.set_probability)?;
    Ok(d)
}

fn curve_dict<'py>(py: Python<'py>, c: &OutageCurve) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scheme", c.scheme.name())?;
    d.set_item("r", c.r)?;
    d.set_item("cond", c.cond.label())?;
    d.set_item("snr_db", c.points.iter().map(|p| p.snr_db).collect::<Vec<_>>())?;
    d.set_item("outage", c.points.iter().map(|p| p.outage).collect::<Vec<_>>())?;
    d.set_item("ci_low", c.points.iter().map(|p| p.ci_low).collect::<Vec<_>>())?;
    d.set_item("ci_high", c.points.iter().map(|p| p.ci_high).collect::<Vec<_>>())?;
    d.set_item("censored", c.points.iter().map(|p| p.censored).collect::<Vec<_>>())?;
    d.set_item("slope", c.fitted_slope())?;
    Ok(d)
}

/// Monte Carlo outage curve. `corr` is required by ltda, astc and mixaf.
#[pyfunction]
#[pyo3(signature = (
    scheme, r, snr_db, trials, seed, cond = "overall", probability = "conditional",
    t0_bw = 3.0, corr = None, variances = None, omega_points = 4096, quad_points = 512,
))]
#[allow(clippy::too_many_arguments)]
fn mc_outage<'py>(
    py: Python<'py>,
    scheme: &str,
    r: f64,
    snr_db: Vec<f64>,
    trials: u64,
    seed: u64,
    cond: &str,
    probability: &str,
    t0_bw: f64,
    corr: Option<PyRef<'py, PyCorrelationSet>>,
    variances: Option<[f64; 5]>,
    omega_points: usize,
    quad_points: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let id: SchemeId = parse(scheme)?;
    let cond: ConditionalCase = parse(cond)?;
    let probability: Probability = parse(probability)?;
    let cfg = network(variances)?;
    let corr = || {
        corr.as_ref()
            .map(|c| c.inner.clone())
            .ok_or_else(|| PyValueError::new_err(format!("scheme {scheme} needs corr")))
    };
    let setup = || -> PyResult<Box<AsyncSetup>> {
        Ok(Box::new(
            AsyncSetup::new(corr()?, omega_points, quad_points).map_err(err)?,
        ))
    };
    let delays = || DelayConfig::from_product(t0_bw).map_err(err);
    let s = match id {
        SchemeId::StcSync => Scheme::StcSync,
        SchemeId::TdaIndep => Scheme::TdaIndep(delays()?),
        SchemeId::TdaRepetition => Scheme::TdaRepetition(delays()?),
        SchemeId::TdaLinmod => Scheme::TdaLinmod(corr()?),
        SchemeId::Astc => Scheme::Astc(setup()?),
        SchemeId::MixAf => Scheme::MixAf(setup()?),
    };
    let c = py
        .detach(|| outage::mc_outage_with(&s, r, &snr_db, trials, seed, cond, &cfg, probability))
        .map_err(err)?;
    curve_dict(py, &c)
}

/// Least-squares slope of `-log10 P` against `snr_db / 10`.
#[pyfunction]
fn slope_fit<'py>(py: Python<'py>, snr_db: Vec<f64>, outage: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    if snr_db.len() != outage.len() {
        return Err(PyValueError::new_err("snr_db and outage differ in length"));
    }
    let pts = snr_db
        .iter()
        .zip(&outage)
        .map(|(&s, &p)| OutagePoint::analytic(s, p))
        .collect();
    let c = OutageCurve::new(SchemeId::StcSync, 0.0, ConditionalCase::Overall, pts);
    let f = outage::slope_fit(&c).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("slope", f.slope)?;
    d.set_item("std_error", f.std_error)?;
    d.set_item("intercept", f.intercept)?;
    d.set_item("points", f.points)?;
    d.set_item("window", f.window)?;
    Ok(d)
}

fn tradeoff_scheme(name: &str, delta1: &str) -> PyResult<TradeoffScheme> {
    Ok(match parse::<TradeoffScheme>(name)? {
        TradeoffScheme::Rtda { .. } => TradeoffScheme::Rtda {
            delta1: rational(delta1)?,
        },
        s => s,
    })
}

/// Exact `(d_low, d_high)` as fraction strings; `r` may be "1/5" or "0.2".
#[pyfunction]
#[pyo3(signature = (scheme, k, r, delta1 = "1"))]
fn d_curve(scheme: &str, k: u32, r: &str, delta1: &str) -> PyResult<(String, String)> {
    let (lo, hi) = tradeoff::d_curve(tradeoff_scheme(scheme, delta1)?, k, rational(r)?).map_err(err)?;
    Ok((lo.to_string(), hi.to_string()))
}

/// Floating `(d_low, d_high)`.
#[pyfunction]
#[pyo3(signature = (scheme, k, r, delta1 = "1"))]
fn d_curve_f64(scheme: &str, k: u32, r: f64, delta1: &str) -> PyResult<(f64, f64)> {
    tradeoff::d_curve_f64(tradeoff_scheme(scheme, delta1)?, k, r).map_err(err)
}

/// Crossings of two upper curves as `(kind, location)` pairs.
#[pyfunction]
#[pyo3(signature = (a, b, k, delta1 = "1"))]
fn crossings(a: &str, b: &str, k: u32, delta1: &str) -> PyResult<Vec<(String, String)>> {
    let v = tradeoff::crossings(tradeoff_scheme(a, delta1)?, tradeoff_scheme(b, delta1)?, k).map_err(err)?;
    Ok(v.into_iter()
        .map(|c| match c {
            Crossing::SignChange(p) => ("sign-change".to_string(), p.to_string()),
            Crossing::Touch(p) => ("touch".to_string(), p.to_string()),
            Crossing::Coincident { lo, hi } => ("coincident".to_string(), format!("{lo}..{hi}")),
        })
        .collect())
}

#[pymodule]
fn relaydiv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFading>()?;
    m.add_class::<PyCorrelationSet>()?;
    m.add_class::<PyWaveform>()?;
    m.add_function(wrap_pyfunction!(rate, m)?)?;
    m.add_function(wrap_pyfunction!(rho0, m)?)?;
    m.add_function(wrap_pyfunction!(decoding_set_probs, m)?)?;
    m.add_function(wrap_pyfunction!(certify_pd, m)?)?;
    m.add_function(wrap_pyfunction!(i_stc, m)?)?;
    m.add_function(wrap_pyfunction!(i_tda, m)?)?;
    m.add_function(wrap_pyfunction!(i_rtda, m)?)?;
    m.add_function(wrap_pyfunction!(i_ltda, m)?)?;
    m.add_function(wrap_pyfunction!(i_esd, m)?)?;
    m.add_function(wrap_pyfunction!(i_emaca, m)?)?;
    m.add_function(wrap_pyfunction!(finite_n_mi, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_outage_stc, m)?)?;
    m.add_function(wrap_pyfunction!(mc_outage, m)?)?;
    m.add_function(wrap_pyfunction!(slope_fit, m)?)?;
    m.add_function(wrap_pyfunction!(d_curve, m)?)?;
    m.add_function(wrap_pyfunction!(d_curve_f64, m)?)?;
    m.add_function(wrap_pyfunction!(crossings, m)?)?;
    Ok(())
}
