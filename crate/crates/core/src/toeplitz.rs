//! Finite block-Toeplitz model of the asynchronous two-relay channel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::mutualinfo::{emaca_value, MIN_QUAD_POINTS};
use crate::waveform::{CorrelationSet, Matrix2};

/// Default limit on the block count of [`finite_n_mi`].
pub const DEFAULT_N_CAP: usize = 4096;

/// ISI taps `H_E(k)` of the matched-filter outputs, `k = -L ..= L`.
///
/// Entry `(j, l)` of `H_E(m)` is `conj(alpha_j) alpha_l g_jl(-m)` where
/// `g_jl(p) = integral s(t - tau_j) s(t - pT - tau_l) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsiTapSet {
    corr: CorrelationSet,
    alpha1: Complex64,
    alpha2: Complex64,
    max_lag: usize,
}

pub fn build_taps(corr: &CorrelationSet, alpha1: Complex64, alpha2: Complex64) -> IsiTapSet {
    IsiTapSet {
        corr: corr.clone(),
        alpha1,
        alpha2,
        max_lag: corr.span(),
    }
}

impl IsiTapSet {
    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn correlations(&self) -> &CorrelationSet {
        &self.corr
    }

    pub fn gains(&self) -> (f64, f64) {
        (self.alpha1.norm_sqr(), self.alpha2.norm_sqr())
    }

    /// Unit-gain tap: diagonal `R(|m|)`, `(1,2)` entry `t_m`, `(2,1)` entry `t_{-m}`.
    fn unit_tap(&self, m: i64) -> [[f64; 2]; 2] {
        let r = self.corr.auto_tap(m);
        [[r, self.corr.cross_tap(m)], [self.corr.cross_tap(-m), r]]
    }

    pub fn tap(&self, m: i64) -> Matrix2 {
        let g = self.unit_tap(m);
        let a = [self.alpha1, self.alpha2];
        let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            for l in 0..2 {
                h[j][l] = a[j].conj() * a[l] * g[j][l];
            }
        }
        h
    }

    /// Same channel with the relay labels exchanged: cross taps become
    /// `t'_k = t_{-k}`, stored on a span one symbol wider.
    pub fn swapped(&self) -> Self {
        let m = self.corr.span() as i64;
        let mut cross = vec![0.0; 2 * (m as usize + 1)];
        for lag in -m..m {
            cross[(lag + m) as usize] = self.corr.cross_tap(-lag);
        }
        let mut auto = self.corr.auto_taps().to_vec();
        auto.push(0.0);
        let corr = CorrelationSet::from_parts(m as usize + 1, auto, cross, self.corr.tau)
            .expect("tap vectors sized for the widened span");
        IsiTapSet {
            corr,
            alpha1: self.alpha2,
            alpha2: self.alpha1,
            max_lag: self.max_lag,
        }
    }

    /// Real symmetric matrix `|D| G |D|` with the eigenvalues of `H_E`.
    pub fn real_form(&self, n: usize) -> DMatrix<f64> {
        let (x1, x2) = self.gains();
        let r = [x1.sqrt(), x2.sqrt()];
        let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
        let l = self.max_lag as i64;
        for k in 0..n {
            let lo = (k as i64 - l).max(0) as usize;
            let hi = (k + self.max_lag).min(n - 1);
            for m in lo..=hi {
                let g = self.unit_tap(k as i64 - m as i64);
                for j in 0..2 {
                    for q in 0..2 {
                        s[(2 * k + j, 2 * m + q)] = r[j] * r[q] * g[j][q];
                    }
                }
            }
        }
        s
    }
}

/// Dense Hermitian `2n x 2n` block-Toeplitz matrix with block `(k, m) = H_E(k - m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeplitz {
    pub n: usize,
    pub matrix: DMatrix<Complex64>,
}

pub fn block_toeplitz(taps: &IsiTapSet, n: usize) -> BlockToeplitz {
    let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for k in 0..n {
        for m in 0..n {
            let lag = k as i64 - m as i64;
            if lag.unsigned_abs() as usize > taps.max_lag {
                continue;
            }
            let t = taps.tap(lag);
            for j in 0..2 {
                for q in 0..2 {
                    h[(2 * k + j, 2 * m + q)] = t[j][q];
                }
            }
        }
    }
    BlockToeplitz { n, matrix: h }
}

/// Eigenvalues of the `n`-block matrix, ascending.
pub fn eigenvalues(taps: &IsiTapSet, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = taps.real_form(n).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `(1/n) sum_k log2(1 + rho0 nu_k)` over the `2n` eigenvalues.
pub fn finite_n_mi(taps: &IsiTapSet, n: usize, rho0: f64, cap: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "block count must be at least 1"));
    }
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    let sum: f64 = eigenvalues(taps, n)
        .iter()
        .map(|&nu| (1.0 + rho0 * nu).max(f64::MIN_POSITIVE).log2())
        .sum();
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mi: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub mi_inf: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceStudy {
    pub fn final_rel_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.rel_error)
    }

    /// Number of places where the absolute error grows with `n`.
    pub fn inversions(&self) -> usize {
        self.rows.windows(2).filter(|w| w[1].abs_error > w[0].abs_error).count()
    }
}

/// Finite-n mutual information against the spectral limit. The `n` values
/// are evaluated in parallel on the current rayon pool.
pub fn convergence_study(taps: &IsiTapSet, n_list: &[usize], rho0: f64, cap: usize) -> Result<ConvergenceStudy> {
    if n_list.is_empty() {
        return Err(invalid("n_list", "must not be empty"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_list", "must be strictly ascending"));
    }
    let (x1, x2) = taps.gains();
    let mi_inf = emaca_value(x1, x2, &taps.corr, rho0, 4 * MIN_QUAD_POINTS);
    let mis: Vec<Result<f64>> = n_list.par_iter().map(|&n| finite_n_mi(taps, n, rho0, cap)).collect();
    let mut rows = Vec::with_capacity(n_list.len());
    for (&n, mi) in n_list.iter().zip(mis) {
        let mi = mi?;
        let abs_error = (mi - mi_inf).abs();
        rows.push(ConvergenceRow {
            n,
            mi,
            abs_error,
            rel_error: if mi_inf != 0.0 {
                abs_error / mi_inf.abs()
            } else {
                abs_error
            },
        });
    }
    Ok(ConvergenceStudy { mi_inf, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthogonal_taps() {
        let t = build_taps(&CorrelationSet::orthogonal(), c(1.0, 0.0), c(1.0, 0.0));
        let h0 = t.tap(0);
        assert_eq!(h0[0][0], c(1.0, 0.0));
        assert_eq!(h0[0][1], c(0.0, 0.0));
        assert_eq!(t.tap(1), [[c(0.0, 0.0); 2]; 2]);
    }

    #[test]
    fn single_relay_has_no_cross_terms() {
        let corr = CorrelationSet::two_symbol(0.2, 0.5, 0.3, 0.05, 0.1, 0.3);
        let t = build_taps(&corr, c(0.8, 0.1), c(0.0, 0.0));
        for m in -2..=2 {
            let h = t.tap(m);
            assert_eq!(h[0][1], c(0.0, 0.0));
            assert_eq!(h[1][0], c(0.0, 0.0));
        }
        assert_eq!(t.tap(2), [[c(0.0, 0.0); 2]; 2]);
    }

    #[test]
    fn negative_lag_is_adjoint() {
        let corr = CorrelationSet::two_symbol(0.2, 0.5, 0.3, 0.05, 0.1, 0.3);
        let t = build_taps(&corr, c(0.8, 0.1), c(-0.3, 0.6));
        for m in 0..=2 {
            let a = t.tap(m);
            let b = t.tap(-m);
            for j in 0..2 {
                for l in 0..2 {
                    assert!((a[j][l] - b[l][j].conj()).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn identity_block_n1() {
        let t = build_taps(&CorrelationSet::orthogonal(), c(1.0, 0.0), c(1.0, 0.0));
        let v = finite_n_mi(&t, 1, 3.0, DEFAULT_N_CAP).unwrap();
        assert!((v - 2.0 * 4f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn generic_c0_n1() {
        let corr = CorrelationSet::single_symbol(0.6, 0.3, 0.5);
        let (a1, a2) = (c(0.9, 0.4), c(-0.2, 1.1));
        let t = build_taps(&corr, a1, a2);
        let rho0 = 2.5;
        let (x1, x2) = (a1.norm_sqr(), a2.norm_sqr());
        let expected = ((1.0 + rho0 * x1) * (1.0 + rho0 * x2) - rho0 * rho0 * 0.36 * x1 * x2).log2();
        let v = finite_n_mi(&t, 1, rho0, DEFAULT_N_CAP).unwrap();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn real_form_matches_complex_spectrum() {
        let corr = CorrelationSet::two_symbol(0.2, 0.5, 0.3, 0.05, 0.1, 0.3);
        let t = build_taps(&corr, c(0.8, 0.1), c(-0.3, 0.6));
        let n = 6;
        let ours = eigenvalues(&t, n);
        let h = block_toeplitz(&t, n).matrix;
        // Hermitian check and trace/Frobenius invariants.
        assert!((&h - h.adjoint()).norm() < 1e-14);
        let tr: f64 = (0..2 * n).map(|i| h[(i, i)].re).sum();
        let fro: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let s1: f64 = ours.iter().sum();
        let s2: f64 = ours.iter().map(|x| x * x).sum();
        assert!((tr - s1).abs() < 1e-12);
        assert!((fro - s2).abs() < 1e-12);
    }

    #[test]
    fn n_above_cap_is_rejected() {
        let t = build_taps(&CorrelationSet::orthogonal(), c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(finite_n_mi(&t, 10, 1.0, 8), Err(Error::Capacity { .. })));
        assert!(finite_n_mi(&t, 0, 1.0, 8).is_err());
    }

    #[test]
    fn orthogonal_study_has_zero_error() {
        let t = build_taps(&CorrelationSet::orthogonal(), c(0.7, 0.2), c(0.4, -1.0));
        let s = convergence_study(&t, &[1, 4, 16], 10.0, DEFAULT_N_CAP).unwrap();
        for r in &s.rows {
            assert!(r.abs_error < 1e-12, "{r:?}");
        }
        assert!(convergence_study(&t, &[4, 2], 1.0, DEFAULT_N_CAP).is_err());
    }
}
