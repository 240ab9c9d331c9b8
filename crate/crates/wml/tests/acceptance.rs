//! Acceptance suite: one test per criterion, each printing a pass line and
//! asserting its stated tolerance (and runtime limit where one is declared).
//!
//! Criteria 11 and 12 share a single moment-ladder run (the expensive part),
//! so whichever of the two tests runs first computes it.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::One;
use rand::Rng;

use weyl_lab::discrepancy::{
    brute_force_discrepancy, erdos_turan_bound, exact_discrepancy, PointSequence,
};
use weyl_lab::explab::{
    self, box_count_experiment, dilation_invariance_check, discrepancy_moment_run, fit_exponent,
    measure_superlevel_multi, moment_run, TestFunction, TrigPoly,
};
use weyl_lab::polyfam::{exponent_report, PolynomialFamily, WeightSpec};
use weyl_lab::rng::sample_rng;
use weyl_lab::sumeval::{compare_engines, eval_sum_point, EngineKind, TorusVector};
use weyl_lab::supopt::BudgetSpec;

fn fam(text: &str) -> PolynomialFamily {
    PolynomialFamily::parse(text).unwrap()
}

fn ratio(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn done(name: &str, t0: Instant, limit_s: f64) {
    let dt = t0.elapsed().as_secs_f64();
    println!("{name}: PASS ({dt:.2}s, limit {limit_s:.0}s)");
    assert!(dt < limit_s, "{name} exceeded its runtime limit: {dt:.1}s");
}

#[test]
fn criterion_01_exponent_arithmetic_exact() {
    let t0 = Instant::now();
    let one = Rational64::one();

    let rep = exponent_report(&fam("T^2; T"), 1, one).unwrap();
    assert_eq!(rep.mu, ratio(5, 7));
    assert_eq!(rep.mu * Rational64::from_integer(2), ratio(10, 7));
    assert_eq!(rep.mu_d, Some(ratio(5, 7)));

    let rep = exponent_report(&fam("T^3; T^2; T"), 1, one).unwrap();
    assert_eq!(rep.mu, ratio(11, 14));
    assert_eq!(rep.mu * Rational64::from_integer(4), ratio(22, 7));
    assert_eq!(rep.mu_d, Some(ratio(11, 14)));

    done("criterion 01 (exponent arithmetic, tolerance 0)", t0, 1.0);
}

#[test]
fn criterion_02_wronskian_exact() {
    let t0 = Instant::now();
    for d in 1..=8 {
        assert!(
            !PolynomialFamily::classical(d).wronskian().is_zero(),
            "classical d={d}"
        );
    }
    assert!(fam("T; 2T").wronskian().is_zero());
    done("criterion 02 (Wronskian, exact)", t0, 1.0);
}

#[test]
fn criterion_03_gauss_sum_oracle() {
    let t0 = Instant::now();
    let family = PolynomialFamily::classical(2);
    for p in [5u64, 13, 17] {
        let u = TorusVector::new(vec![0.0, 1.0 / p as f64]);
        for engine in EngineKind::ALL {
            let s = eval_sum_point(&family, &WeightSpec::Unit, &u, p, 0, engine).unwrap();
            let err = (s.value.norm() - (p as f64).sqrt()).abs();
            assert!(err <= 1e-9, "p={p} {engine:?}: err {err:.3e}");
        }
    }
    done("criterion 03 (Gauss sums, 1e-9, all engines)", t0, 10.0);
}

#[test]
fn criterion_04_engine_agreement() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (d, seed) in [(2usize, 401u64), (3, 402)] {
        let family = PolynomialFamily::classical(d);
        let v = compare_engines(&family, &WeightSpec::Unit, None, 10_000, 50, seed).unwrap();
        worst = worst.max(v);
    }
    assert!(worst <= 1e-8, "max pairwise engine difference {worst:.3e}");
    done("criterion 04 (engine agreement 1e-8, N=1e4)", t0, 30.0);
}

fn random_sequences() -> Vec<PointSequence> {
    // 500 sequences, N <= 64, on the 2^-20 dyadic grid (separation keeps the
    // +-1e-7 oracle counting one-sided limits exactly), mixed with clusters
    (0..500u64)
        .map(|trial| {
            let mut rng = sample_rng(0xD15C, trial);
            let n = 1 + (rng.random::<u32>() % 64) as usize;
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < 0.25 {
                        (rng.random::<u32>() % 16) as f64 / 16.0
                    } else {
                        (rng.random::<u32>() % (1 << 20)) as f64 / (1u32 << 20) as f64
                    }
                })
                .collect();
            PointSequence::new(values).unwrap()
        })
        .collect()
}

#[test]
fn criterion_05_discrepancy_oracle_equivalence() {
    let t0 = Instant::now();
    for (i, seq) in random_sequences().iter().enumerate() {
        let exact = exact_discrepancy(seq).unwrap().value;
        let oracle = brute_force_discrepancy(seq).unwrap();
        assert!(
            (exact - oracle).abs() <= 1e-9,
            "sequence {i}: exact {exact} vs oracle {oracle}"
        );
    }
    done("criterion 05 (discrepancy oracle, 1e-9, 500 sequences)", t0, 60.0);
}

#[test]
fn criterion_06_erdos_turan_majorant() {
    let t0 = Instant::now();
    for (i, seq) in random_sequences().iter().enumerate() {
        let exact = exact_discrepancy(seq).unwrap().value;
        for g in [1u32, 5, 20] {
            let et = erdos_turan_bound(seq, g).unwrap();
            assert!(et >= exact - 1e-9, "sequence {i}, G={g}: {et} < {exact}");
        }
    }
    done("criterion 06 (Erdos-Turan majorant on criterion-5 set)", t0, 120.0);
}

#[test]
fn criterion_07_quartic_moment_oracle() {
    let t0 = Instant::now();
    // deterministic quadrature: |S(x)|^4 is a trigonometric polynomial of
    // degree <= 12, so the 20000-node uniform rule is exact
    let family = fam("T");
    let q = 20_000u64;
    let mut acc = 0.0;
    for i in 0..q {
        let x = TorusVector::new(vec![i as f64 / q as f64]);
        let s = eval_sum_point(&family, &WeightSpec::Unit, &x, 4, 0, EngineKind::Direct).unwrap();
        acc += s.value.norm().powi(4);
    }
    let quad = acc / q as f64;
    assert!((quad - 44.0).abs() <= 1e-4, "quadrature {quad}");

    let (est, _) = moment_run(
        &family,
        &WeightSpec::Unit,
        1,
        4.0,
        4,
        100_000,
        &BudgetSpec::default(),
        0x4415,
    )
    .unwrap();
    assert!(
        (est.mean_lower - 44.0).abs() <= 3.0 * est.stderr,
        "MC {} vs 44, stderr {}",
        est.mean_lower,
        est.stderr
    );
    done("criterion 07 (quartic moment = 44, quad 1e-4 + MC 3 stderr)", t0, 120.0);
}

#[test]
fn criterion_08_parseval() {
    let t0 = Instant::now();
    let family = PolynomialFamily::classical(2);
    let (est, _) = moment_run(
        &family,
        &WeightSpec::Unit,
        2,
        2.0,
        64,
        100_000,
        &BudgetSpec::default(),
        0x9A25,
    )
    .unwrap();
    assert!(
        (est.mean_lower - 64.0).abs() <= 3.0 * est.stderr,
        "MC {} vs 64, stderr {}",
        est.mean_lower,
        est.stderr
    );
    done("criterion 08 (Parseval, 3 stderr at 1e5 samples)", t0, 120.0);
}

#[test]
fn criterion_09_superlevel_measure_surrogate() {
    let t0 = Instant::now();
    let family = fam("T^2; T");
    let samples = 1500u64;
    for n in [128u64, 256, 512] {
        let nf = n as f64;
        let thresholds: Vec<f64> = [0.7, 0.8, 0.9].iter().map(|a| nf.powf(*a)).collect();
        let (ests, _) = measure_superlevel_multi(
            &family,
            &WeightSpec::Unit,
            1,
            n,
            &thresholds,
            samples,
            &BudgetSpec::default(),
            0x3200 + n,
        )
        .unwrap();
        for (est, alpha) in ests.iter().zip([0.7, 0.8, 0.9]) {
            // tail-bound surrogate: N^(s+sigma+d-k) T^(-2s-d+k) with slack N^0.2
            let bound = nf.powf(5.0 + 0.2) * est.threshold.powf(-7.0);
            assert!(
                est.fraction_upper <= bound,
                "N={n} alpha={alpha}: fraction {} > bound {bound}",
                est.fraction_upper
            );
        }
    }
    done("criterion 09 (superlevel measures vs N^5.2 T^-7)", t0, 600.0);
}

#[test]
fn criterion_10_box_count_surrogate() {
    let t0 = Instant::now();
    let family = fam("T; T^2");
    for n in [8u64, 16] {
        for alpha in [0.6, 0.75, 0.9] {
            let r = box_count_experiment(
                &family,
                &WeightSpec::Unit,
                n,
                alpha,
                0.05,
                1,
                1_000_000,
                0.2,
            )
            .unwrap();
            if n == 16 && alpha == 0.75 {
                assert_eq!(r.u_total, 21793);
                assert_eq!(r.resolutions, vec![37, 589]);
                assert_eq!(r.zeta, vec![1.0 / 37.0, 1.0 / 589.0]);
            }
            assert!(
                (r.marked as f64) <= r.bound,
                "N={n} alpha={alpha}: marked {} > bound {}",
                r.marked,
                r.bound
            );
        }
    }
    done("criterion 10 (box counts vs U N^(s(1-2a)) N^0.2)", t0, 600.0);
}

struct LadderData {
    per_n: Vec<(u64, explab::MomentEstimate)>,
}

fn moment_ladder() -> &'static LadderData {
    static DATA: OnceLock<LadderData> = OnceLock::new();
    DATA.get_or_init(|| {
        let family = fam("T^2; T");
        let budget = BudgetSpec {
            gap_fraction: 0.1,
            ..BudgetSpec::default()
        };
        let per_n = [256u64, 512, 1024, 2048, 4096]
            .iter()
            .map(|&n| {
                let (est, _) = moment_run(
                    &family,
                    &WeightSpec::Unit,
                    1,
                    2.0,
                    n,
                    400,
                    &budget,
                    0x2211,
                )
                .unwrap();
                (n, est)
            })
            .collect();
        LadderData { per_n }
    })
}

#[test]
fn criterion_11_m22_growth_exponent() {
    let t0 = Instant::now();
    let data = moment_ladder();
    let pts: Vec<(f64, f64)> = data
        .per_n
        .iter()
        .map(|(n, est)| (*n as f64, est.mean_lower))
        .collect();
    let fit = fit_exponent(&pts).unwrap();
    assert!(
        fit.slope >= 0.95 && fit.slope <= 1.35,
        "fitted exponent {} outside [0.95, 1.35]; points {pts:?}",
        fit.slope
    );
    done(
        &format!("criterion 11 (M_2,2 growth exponent {:.3} in [0.95, 1.35])", fit.slope),
        t0,
        1200.0,
    );
}

#[test]
fn criterion_12_hybrid_moment_bound() {
    let t0 = Instant::now();
    let data = moment_ladder();
    for (n, est) in &data.per_n {
        let bound = (*n as f64).powf(10.0 / 7.0 + 0.2);
        assert!(
            est.mean_upper <= bound,
            "N={n}: mean_upper {} > N^(10/7+0.2) = {bound}",
            est.mean_upper
        );
    }
    done("criterion 12 (mean_upper <= N^(10/7+0.2) on the ladder)", t0, 1200.0);
}

#[test]
fn criterion_13_discrepancy_moment_exponent() {
    let t0 = Instant::now();
    let family = fam("T^2; T");
    let pts: Vec<(f64, f64)> = [64u64, 128, 256, 512]
        .iter()
        .map(|&n| {
            let (est, _) = discrepancy_moment_run(
                &family,
                1,
                1.0,
                n,
                100,
                &BudgetSpec::default(),
                0x1333,
            )
            .unwrap();
            (n as f64, est.mean_upper)
        })
        .collect();
    let fit = fit_exponent(&pts).unwrap();
    let limit = 5.0 / 7.0 + 0.2;
    assert!(
        fit.slope <= limit,
        "disc-moment exponent {} > {limit}; points {pts:?}",
        fit.slope
    );
    done(
        &format!("criterion 13 (disc-moment exponent {:.3} <= 5/7+0.2)", fit.slope),
        t0,
        1200.0,
    );
}

#[test]
fn criterion_14_dilation_invariance() {
    let t0 = Instant::now();
    let one = Complex64::new(1.0, 0.0);
    let f = TestFunction::AbsSquared(TrigPoly {
        terms: vec![(1, one), (2, one)],
    });
    for g in [2i64, 3, 5] {
        let c = dilation_invariance_check(g, &f, 4096);
        assert!(c.difference <= 1e-9, "g={g}: difference {:.3e}", c.difference);
        assert!((c.plain.re - 2.0).abs() <= 1e-9);
    }
    done("criterion 14 (dilation invariance, 1e-9)", t0, 10.0);
}

#[test]
fn criterion_15_determinism_across_thread_counts() {
    let t0 = Instant::now();
    let text = r#"
[experiment]
kind = "moment"
family = "T^2; T"
k = 1
rho = 2.0
n = 128
samples = 64
seed = 1515

[output]
csv = true
"#;
    let cfg = wml::ConfigFile::parse(text).unwrap();
    type Artifacts = (Vec<u8>, Vec<(String, Vec<u8>)>);
    let runs: Vec<Artifacts> = [1usize, 4, 8]
        .iter()
        .map(|&threads| {
            let out = wml::run_experiment(&cfg, Some(threads)).unwrap();
            (out.summary_bytes(), out.csv_files)
        })
        .collect();
    assert_eq!(runs[0].0, runs[1].0, "summaries differ between 1 and 4 threads");
    assert_eq!(runs[0].0, runs[2].0, "summaries differ between 1 and 8 threads");
    assert_eq!(runs[0].1, runs[1].1);
    assert_eq!(runs[0].1, runs[2].1);
    done("criterion 15 (byte-identical summaries at 1/4/8 threads)", t0, 120.0);
}
