use num_complex::Complex64;
use relaydiv_core::channel::{decoding_set_probs, DecodingSet, FadingRealization, NetworkConfig, RatePoint};
use relaydiv_core::mutualinfo::{i_af_pair, DelayConfig, SchemeId};
use relaydiv_core::outage::{
    analytic_curve, analytic_outage_parallel3, analytic_outage_rtda_both, analytic_outage_stc, db_to_linear, mc_outage,
    mc_outage_with, mixing_protocol_mi, mixing_protocol_mi_given, wilson_interval, AsyncSetup, ConditionalCase,
    MixBranch, OutagePoint, Probability, Scheme, Z95,
};
use relaydiv_core::waveform::{correlations, CorrelationSet, Waveform};

fn cfg() -> NetworkConfig {
    NetworkConfig::default()
}

/// `|p - q| <= k` binomial standard deviations at `n` trials, with a floor
/// for probabilities near zero.
fn within(p_mc: f64, p: f64, n: u64, k: f64) -> bool {
    let sd = (p * (1.0 - p) / n as f64).sqrt().max(1.0 / n as f64);
    (p_mc - p).abs() <= k * sd
}

fn link(g: f64) -> Complex64 {
    Complex64::new(g.sqrt(), 0.0)
}

fn fading(sd: f64, sr1: f64, sr2: f64, r1d: f64, r2d: f64) -> FadingRealization {
    FadingRealization::from_gains(link(sd), link(sr1), link(sr2), link(r1d), link(r2d))
}

#[test]
fn stc_monte_carlo_matches_semi_analytic() {
    let c = cfg();
    let n = 40_000;
    let grid = [0.0, 6.0, 12.0];
    for cond in ConditionalCase::ALL {
        for probability in [Probability::Conditional, Probability::Joint] {
            let curve = mc_outage_with(&Scheme::StcSync, 0.3, &grid, n, 7, cond, &c, probability).unwrap();
            for p in &curve.points {
                let a = analytic_outage_stc(db_to_linear(p.snr_db), 0.3, &c, cond).unwrap();
                let want = match probability {
                    Probability::Conditional => a.conditional,
                    Probability::Joint => a.joint,
                };
                assert!(
                    within(p.outage, want, n, 4.0),
                    "{cond} {probability:?} {}: {} vs {want}",
                    p.snr_db,
                    p.outage
                );
            }
        }
    }
}

#[test]
fn joint_is_conditional_times_set_probability() {
    let c = cfg();
    for cond in ConditionalCase::ALL {
        for snr in [1.0, 10.0, 300.0] {
            let a = analytic_outage_stc(snr, 0.25, &c, cond).unwrap();
            assert!((a.joint - a.conditional * a.set_probability).abs() <= 1e-14 + 1e-12 * a.joint);
        }
    }
    let rp = RatePoint::new(10.0, 0.25, &c).unwrap();
    let sets = decoding_set_probs(&rp, 1.0, 1.0);
    let total: f64 = (0..=2).map(|k| sets.by_cardinality(k)).sum();
    assert!((total - 1.0).abs() < 1e-14);
}

#[test]
fn unequal_variances_match_semi_analytic() {
    let c = NetworkConfig::new(relaydiv_core::channel::LinkVariances::from_array([
        1.0, 2.0, 0.5, 0.3, 4.0,
    ]))
    .unwrap();
    let n = 40_000;
    let curve = mc_outage(&Scheme::StcSync, 0.2, &[3.0, 9.0], n, 11, ConditionalCase::Overall, &c).unwrap();
    for p in &curve.points {
        let want = analytic_outage_stc(db_to_linear(p.snr_db), 0.2, &c, ConditionalCase::Overall)
            .unwrap()
            .conditional;
        assert!(within(p.outage, want, n, 4.0), "{}: {} vs {want}", p.snr_db, p.outage);
    }
}

#[test]
fn orthogonal_astc_is_three_parallel_paths() {
    let c = cfg();
    let setup = AsyncSetup::new(CorrelationSet::orthogonal(), 256, 512).unwrap();
    let n = 40_000;
    let curve = mc_outage(
        &Scheme::Astc(Box::new(setup)),
        0.3,
        &[0.0, 5.0, 10.0],
        n,
        3,
        ConditionalCase::Both,
        &c,
    )
    .unwrap();
    for p in &curve.points {
        let want = analytic_outage_parallel3(db_to_linear(p.snr_db), 0.3, &c)
            .unwrap()
            .conditional;
        assert!(within(p.outage, want, n, 4.0), "{}: {} vs {want}", p.snr_db, p.outage);
    }
}

#[test]
fn repetition_oracle_matches_monte_carlo() {
    let c = cfg();
    let n = 40_000;
    for x in [2.0, 2.5] {
        let scheme = Scheme::TdaRepetition(DelayConfig::from_product(x).unwrap());
        let curve = mc_outage(&scheme, 0.3, &[0.0, 6.0], n, 5, ConditionalCase::Both, &c).unwrap();
        for p in &curve.points {
            let want = analytic_outage_rtda_both(db_to_linear(p.snr_db), 0.3, &c, x)
                .unwrap()
                .conditional;
            assert!(
                within(p.outage, want, n, 4.0),
                "x={x} {}: {} vs {want}",
                p.snr_db,
                p.outage
            );
        }
    }
}

#[test]
fn repetition_oracle_is_continuous_at_integer_delay() {
    let c = cfg();
    for snr_db in [10.0, 30.0] {
        let snr = db_to_linear(snr_db);
        let a = analytic_outage_rtda_both(snr, 0.2, &c, 3.0).unwrap().conditional;
        let b = analytic_outage_rtda_both(snr, 0.2, &c, 3.0 + 1e-9).unwrap().conditional;
        assert!((a / b - 1.0).abs() < 1e-4, "{snr_db}: {a} vs {b}");
    }
    assert!(analytic_outage_rtda_both(10.0, 0.2, &c, 0.5).is_err());
}

#[test]
fn repetition_slope_lies_between_tradeoff_bounds() {
    let c = cfg();
    let r = 0.1;
    let grid = [40.0, 50.0, 60.0, 70.0];
    for x in [2.5f64, 3.0] {
        let delta1 = x.floor() / x.ceil();
        let curve = analytic_curve(SchemeId::TdaRepetition, r, ConditionalCase::Both, &grid, |s| {
            Ok(analytic_outage_rtda_both(s, r, &c, x)?.conditional)
        })
        .unwrap();
        let slope = curve.fitted_slope().unwrap();
        let (lo, hi) = (3.0 - 6.0 * r / delta1, 3.0 - 6.0 * r);
        assert!(
            lo - 0.2 <= slope && slope <= hi + 0.2,
            "x={x}: {slope} outside [{lo}, {hi}]"
        );
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let c = cfg();
    let corr = correlations(&Waveform::srrc(0.5, 2, 64).unwrap(), 0.3).unwrap();
    let setup = AsyncSetup::new(corr, 4096, 512).unwrap();
    let scheme = Scheme::MixAf(Box::new(setup));
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_outage(&scheme, 0.2, &[0.0, 10.0], 10_000, 99, ConditionalCase::Overall, &c).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run(8));
}

#[test]
fn mixing_protocol_branches() {
    let corr = correlations(&Waveform::srrc(0.5, 2, 64).unwrap(), 0.3).unwrap();
    let setup = AsyncSetup::new(corr, 4096, 512).unwrap();
    let rp = RatePoint::with_rate(1.0, 10.0).unwrap();
    let f = fading(0.4, 0.01, 0.01, 1.5, 0.7);
    let (b, v) = mixing_protocol_mi(&f, &rp, &setup).unwrap();
    assert_eq!(b, MixBranch::AmplifyOnly);
    assert!((v - 0.5 * i_af_pair(0.4, 1.5, 10.0)).abs() < 1e-14);

    let f = fading(0.4, 0.01, 5.0, 1.5, 0.7);
    let (b, v) = mixing_protocol_mi(&f, &rp, &setup).unwrap();
    assert_eq!(b, MixBranch::AmplifyAndDecode);
    let want = 0.5 * (i_af_pair(0.4, 1.5, 10.0) + (1.0 + 10.0 * 0.7f64).log2());
    assert!((v - want).abs() < 1e-12);

    let f = fading(0.4, 5.0, 5.0, 1.5, 0.7);
    let (b, v) = mixing_protocol_mi(&f, &rp, &setup).unwrap();
    assert_eq!(b, MixBranch::Astc);
    let (_, forced) = mixing_protocol_mi_given(&f, DecodingSet::BOTH, &rp, &setup).unwrap();
    assert_eq!(v, forced);
    assert_eq!(b.label(), "astc");
}

#[test]
fn interval_bookkeeping() {
    let p = OutagePoint::from_counts(0.0, 50, 10_000);
    assert!(!p.censored && p.ci_low < 0.005 && 0.005 < p.ci_high);
    let (lo, hi) = wilson_interval(10_000, 10_000, Z95);
    assert!(hi == 1.0 && lo > 0.999);
    let p = OutagePoint::from_counts(0.0, 0, 100_000);
    assert!(p.censored && p.outage == 0.0 && p.ci_high == 3e-5);
    let p = OutagePoint::analytic(5.0, 0.25);
    assert_eq!((p.ci_low, p.ci_high, p.trials), (0.25, 0.25, 0));
}

#[test]
fn probability_names_parse() {
    assert_eq!("Joint".parse::<Probability>().unwrap(), Probability::Joint);
    assert_eq!("conditional".parse::<Probability>().unwrap().label(), "conditional");
    assert!("both".parse::<Probability>().is_err());
    for c in ConditionalCase::ALL {
        assert_eq!(c.label().parse::<ConditionalCase>().unwrap(), c);
    }
}
