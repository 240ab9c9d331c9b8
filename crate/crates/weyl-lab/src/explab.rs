//! The experiment layer: Monte Carlo moments and measures, box counting,
//! exponent fitting, and the deterministic quadrature checks.
//!
//! Everything stochastic follows one discipline. Sample `i` of a run draws
//! its coordinates from the counter-based stream keyed by `(seed, i)`, the
//! per-sample integrand is computed independently, and aggregation happens in
//! sample-index order with compensated summation — so estimates are
//! bit-identical across thread counts.
//!
//! Wherever a supremum enters an integrand it is only known as a certified
//! `lower`/`upper` pair, and the experiments keep both books:
//! `mean_lower ≤ (true moment) ≤ mean_upper` up to Monte Carlo error. Bound
//! checks against asymptotic statements use the conservative side and a
//! declared multiplicative slack `N^slack_exponent` (default 0.2) in place of
//! the uncontrolled `N^{o(1)}`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::discrepancy::{sup_discrepancy_fiber, DiscrepancyError};
use crate::polyfam::{PolynomialFamily, WeightSpec};
use crate::rng::{compensated_sum, mean_and_stderr, sample_rng};
use crate::sumeval::{e, frac, EvalError, TorusVector};
use crate::supopt::{lipschitz_bounds, sup_fiber, sup_short, BudgetSpec, SupError};
use rand::Rng;

/// Default slack exponent standing in for an uncontrolled `N^{o(1)}` factor.
pub const DEFAULT_SLACK_EXPONENT: f64 = 0.2;

/// Errors from the experiment layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExplabError {
    #[error("degenerate ladder: {0}")]
    DegenerateLadder(String),
    #[error("rho = {rho} exceeds the tail exponent b = {b}")]
    RhoExceedsB { rho: f64, b: f64 },
    #[error("tail exponents must satisfy 0 < a < b (got a = {a}, b = {b})")]
    InvalidTailExponents { a: f64, b: f64 },
    #[error("box count {boxes} exceeds the configured cap {cap}")]
    BoxBudgetExceeded { boxes: u64, cap: u64 },
    #[error("pointwise majorant is stated only for d = 2 or 3 (got {0})")]
    UnsupportedMajorantDegree(usize),
    #[error("threshold {t} outside the stated range 1 <= T <= N = {n}")]
    ThresholdOutOfRange { t: f64, n: u64 },
    #[error(transparent)]
    Sup(#[from] SupError),
    #[error(transparent)]
    Discrepancy(#[from] DiscrepancyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One Monte Carlo sample: the drawn `x`, the certified sup pair, and the
/// budget flag.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub index: u64,
    pub x: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub budget_exhausted: bool,
}

/// Monte Carlo estimate of a moment, with dual accounting.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    /// Moment of the certified sup lower bounds.
    pub mean_lower: f64,
    /// Moment of the slack upper bounds.
    pub mean_upper: f64,
    /// Larger of the two standard errors of the mean.
    pub stderr: f64,
    pub samples: u64,
    pub rho: f64,
    pub n: u64,
    pub seed: u64,
    /// Whether `rho` is inside the validity range of the exponent bound
    /// being checked; outside it the estimate is still computed (warn, not
    /// error) but no bound check applies.
    pub within_theorem_range: bool,
}

/// Monte Carlo estimate of a superlevel-set measure.
#[derive(Debug, Clone)]
pub struct MeasureEstimate {
    /// Fraction of samples whose certified lower bound reaches the threshold.
    pub fraction_lower: f64,
    /// Fraction whose slack upper bound reaches it.
    pub fraction_upper: f64,
    pub threshold: f64,
    pub samples: u64,
    /// Binomial standard error (larger of the two sides).
    pub stderr: f64,
    pub seed: u64,
    pub n: u64,
}

/// Box-counting report for the large-values packing experiment.
#[derive(Debug, Clone)]
pub struct BoxCountReport {
    /// Per-coordinate box widths `ζ_j = 1/⌈N^{e_j+1+ε-α}⌉`, exactly.
    pub zeta: Vec<f64>,
    /// The integer resolutions `⌈N^{e_j+1+ε-α}⌉`.
    pub resolutions: Vec<u64>,
    /// Total box count `U`.
    pub u_total: u64,
    /// Boxes whose sampled maximum reaches `N^α`.
    pub marked: u64,
    /// Boxes whose sampled maximum plus the covering-radius Lipschitz slack
    /// reaches `N^α` — a certified superset of the true marked set. At desk
    /// scale this exceeds the asymptotic bound (the slack is comparable to
    /// the threshold itself); it is reported for transparency, while `marked`
    /// is the count the bound check uses.
    pub marked_certified: u64,
    /// `U · N^{s(d)(1-2α)} · N^{slack_exponent}`.
    pub bound: f64,
    /// The Lipschitz slack added to sampled maxima for `marked_certified`.
    pub slack: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub eps: f64,
    pub sampler_density: u32,
    pub slack_exponent: f64,
    pub n: u64,
}

/// Least-squares fit of `log value` against `log N`.
#[derive(Debug, Clone)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    /// The fitted `(ln N, ln value)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Draws `x ∈ T_k` per sample and estimates the fiber sup; the base step
/// shared by the moment and measure experiments.
pub fn sup_samples(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    k: usize,
    n: u64,
    samples: u64,
    budget: &BudgetSpec,
    seed: u64,
) -> Result<Vec<SampleRecord>, ExplabError> {
    let d = family.d();
    if k > d {
        return Err(ExplabError::Sup(SupError::KOutOfRange { k, d }));
    }
    (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample_rng(seed, index);
            let x = TorusVector::new((0..k).map(|_| rng.random::<f64>()).collect());
            let est = sup_fiber(family, weights, &x, n, budget)?;
            Ok(SampleRecord {
                index,
                x: x.coords().to_vec(),
                lower: est.lower,
                upper: est.upper,
                budget_exhausted: est.budget_exhausted,
            })
        })
        .collect()
}

fn estimate_from_records(
    records: &[SampleRecord],
    rho: f64,
    n: u64,
    seed: u64,
    within_theorem_range: bool,
) -> MomentEstimate {
    let lo: Vec<f64> = records.iter().map(|r| r.lower.powf(rho)).collect();
    let hi: Vec<f64> = records.iter().map(|r| r.upper.powf(rho)).collect();
    let (mean_lower, se_lo) = mean_and_stderr(&lo);
    let (mean_upper, se_hi) = mean_and_stderr(&hi);
    MomentEstimate {
        mean_lower,
        mean_upper,
        stderr: se_lo.max(se_hi),
        samples: records.len() as u64,
        rho,
        n,
        seed,
        within_theorem_range,
    }
}

/// Monte Carlo estimate of the hybrid moment
/// `M_{k,ρ} = ∫_{T_k} sup_y |T_{a,φ}(x, y; N)|^ρ dx`, via certified
/// per-sample sup pairs. Returns the records alongside the estimate.
#[allow(clippy::too_many_arguments)]
pub fn moment_run(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    k: usize,
    rho: f64,
    n: u64,
    samples: u64,
    budget: &BudgetSpec,
    seed: u64,
) -> Result<(MomentEstimate, Vec<SampleRecord>), ExplabError> {
    assert!(rho > 0.0, "rho must be positive");
    let records = sup_samples(family, weights, k, n, samples, budget, seed)?;
    let d = family.d() as f64;
    let s = d * (d + 1.0) / 2.0;
    let in_range = rho <= 2.0 * s + d - k as f64;
    Ok((estimate_from_records(&records, rho, n, seed, in_range), records))
}

/// [`moment_run`] without the records.
#[allow(clippy::too_many_arguments)]
pub fn moment_estimate(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    k: usize,
    rho: f64,
    n: u64,
    samples: u64,
    budget: &BudgetSpec,
    seed: u64,
) -> Result<MomentEstimate, ExplabError> {
    moment_run(family, weights, k, rho, n, samples, budget, seed).map(|(est, _)| est)
}

/// Superlevel-set measure `λ({x: sup_y |T| ≥ T})` at several thresholds over
/// one shared set of samples (sharing makes the antitone property exact).
#[allow(clippy::too_many_arguments)]
pub fn measure_superlevel_multi(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    k: usize,
    n: u64,
    thresholds: &[f64],
    samples: u64,
    budget: &BudgetSpec,
    seed: u64,
) -> Result<(Vec<MeasureEstimate>, Vec<SampleRecord>), ExplabError> {
    for &t in thresholds {
        if !(1.0..=n as f64).contains(&t) {
            return Err(ExplabError::ThresholdOutOfRange { t, n });
        }
    }
    let records = sup_samples(family, weights, k, n, samples, budget, seed)?;
    let sf = samples as f64;
    let estimates = thresholds
        .iter()
        .map(|&t| {
            let lo = records.iter().filter(|r| r.lower >= t).count() as f64 / sf;
            let hi = records.iter().filter(|r| r.upper >= t).count() as f64 / sf;
            let se = |p: f64| (p * (1.0 - p) / sf).sqrt();
            MeasureEstimate {
                fraction_lower: lo,
                fraction_upper: hi,
                threshold: t,
                samples,
                stderr: se(lo).max(se(hi)),
                seed,
                n,
            }
        })
        .collect();
    Ok((estimates, records))
}

/// Single-threshold superlevel measure.
#[allow(clippy::too_many_arguments)]
pub fn measure_superlevel(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    k: usize,
    n: u64,
    threshold: f64,
    samples: u64,
    budget: &BudgetSpec,
    seed: u64,
) -> Result<MeasureEstimate, ExplabError> {
    measure_superlevel_multi(family, weights, k, n, &[threshold], samples, budget, seed)
        .map(|(mut v, _)| v.remove(0))
}

/// Partitions the torus into boxes of width `ζ_j = 1/⌈N^{e_j+1+ε-α}⌉` per
/// coordinate and counts boxes whose sampled maximum reaches `N^α`.
///
/// `sampler_density` is the per-coordinate sample count inside each box
/// (1 = box center). `marked` uses the bare sampled maximum; the certified
/// superset count (sampled maximum plus covering-radius Lipschitz slack) is
/// reported as `marked_certified` together with the slack.
#[allow(clippy::too_many_arguments)]
pub fn box_count_experiment(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    n: u64,
    alpha: f64,
    eps: f64,
    sampler_density: u32,
    cap: u64,
    slack_exponent: f64,
) -> Result<BoxCountReport, ExplabError> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    let q = sampler_density.max(1);
    let d = family.d();
    let nf = n as f64;
    let degrees = family.degrees();
    let resolutions: Vec<u64> = degrees
        .iter()
        .map(|&e| nf.powf(e as f64 + 1.0 + eps - alpha).ceil() as u64)
        .collect();
    let u_total: u64 = resolutions.iter().try_fold(1u64, |acc, &m| {
        acc.checked_mul(m).filter(|&v| v <= cap)
    }).ok_or(ExplabError::BoxBudgetExceeded {
        boxes: resolutions.iter().map(|&m| m as f64).product::<f64>() as u64,
        cap,
    })?;
    let zeta: Vec<f64> = resolutions.iter().map(|&m| 1.0 / m as f64).collect();
    let threshold = nf.powf(alpha);

    let lips = lipschitz_bounds(family, weights, n, 0)?;
    let slack: f64 = lips
        .iter()
        .zip(&zeta)
        .map(|(l, z)| l * z / (2.0 * q as f64))
        .sum();

    let aw: Vec<Complex64> = (1..=n as i64)
        .map(|t| weights.weight(t).ok_or(EvalError::WeightTableTooShort {
            from: 1,
            to: n as i64,
        }))
        .collect::<Result<_, _>>()?;
    let phi: Vec<Vec<f64>> = family
        .polys()
        .iter()
        .map(|p| (1..=n as i64).map(|t| p.eval_f64(t)).collect())
        .collect();

    let qf = q as f64;
    let counts: Vec<(u64, u64)> = (0..u_total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut corner = vec![0.0f64; d];
            for j in (0..d).rev() {
                let idx = rem % resolutions[j];
                rem /= resolutions[j];
                corner[j] = idx as f64 * zeta[j];
            }
            let mut best = 0.0f64;
            let subcells = (q as u64).pow(d as u32);
            for sub in 0..subcells {
                let mut srem = sub;
                let mut u = vec![0.0f64; d];
                for j in 0..d {
                    let sidx = srem % q as u64;
                    srem /= q as u64;
                    u[j] = corner[j] + (sidx as f64 + 0.5) / qf * zeta[j];
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, a) in aw.iter().enumerate() {
                    let mut phase = 0.0;
                    for j in 0..d {
                        phase += u[j] * phi[j][i];
                    }
                    acc += a * e(frac(phase));
                }
                best = best.max(acc.norm());
            }
            (
                u64::from(best >= threshold),
                u64::from(best + slack >= threshold),
            )
        })
        .collect();
    let marked = counts.iter().map(|c| c.0).sum();
    let marked_certified = counts.iter().map(|c| c.1).sum();

    let s = (d * (d + 1) / 2) as f64;
    let bound = u_total as f64 * nf.powf(s * (1.0 - 2.0 * alpha)) * nf.powf(slack_exponent);
    Ok(BoxCountReport {
        zeta,
        resolutions,
        u_total,
        marked,
        marked_certified,
        bound,
        slack,
        threshold,
        alpha,
        eps,
        sampler_density: q,
        slack_exponent,
        n,
    })
}

/// Monte Carlo estimate of the short-interval sup-moment majorant
/// `∫ sup_{(v_1..v_{d-1})} |S_d((v, u_d); N)|^ρ du_d`, which majorizes
/// `∫ sup_K |S_d(u; K, N)|^ρ du`.
pub fn short_moment_run(
    d: usize,
    rho: f64,
    n: u64,
    samples: u64,
    budget: &BudgetSpec,
    seed: u64,
) -> Result<(MomentEstimate, Vec<SampleRecord>), ExplabError> {
    assert!(rho > 0.0, "rho must be positive");
    let records: Vec<SampleRecord> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample_rng(seed, index);
            let u_d: f64 = rng.random();
            let est = sup_short(u_d, d, n, budget)?;
            Ok::<_, ExplabError>(SampleRecord {
                index,
                x: vec![u_d],
                lower: est.lower,
                upper: est.upper,
                budget_exhausted: est.budget_exhausted,
            })
        })
        .collect::<Result<_, _>>()?;
    let in_range = rho <= (d * d + 2 * d - 1) as f64;
    Ok((estimate_from_records(&records, rho, n, seed, in_range), records))
}

/// Monte Carlo estimate of the discrepancy sup-moment
/// `∫_{T_k} sup_y D_φ(x, y; N)^ρ dx`.
pub fn discrepancy_moment_run(
    family: &PolynomialFamily,
    k: usize,
    rho: f64,
    n: u64,
    samples: u64,
    budget: &BudgetSpec,
    seed: u64,
) -> Result<(MomentEstimate, Vec<SampleRecord>), ExplabError> {
    assert!(rho >= 1.0, "discrepancy moments are stated for rho >= 1");
    let d = family.d();
    if k > d {
        return Err(ExplabError::Sup(SupError::KOutOfRange { k, d }));
    }
    let records: Vec<SampleRecord> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample_rng(seed, index);
            let x = TorusVector::new((0..k).map(|_| rng.random::<f64>()).collect());
            let est = sup_discrepancy_fiber(family, &x, n, budget)?;
            Ok::<_, ExplabError>(SampleRecord {
                index,
                x: x.coords().to_vec(),
                lower: est.lower,
                upper: est.upper,
                budget_exhausted: est.budget_exhausted,
            })
        })
        .collect::<Result<_, _>>()?;
    let s = (d * (d + 1) / 2) as f64;
    let in_range = rho <= 2.0 * s + (d - k) as f64;
    Ok((estimate_from_records(&records, rho, n, seed, in_range), records))
}

/// Least-squares exponent fit on `(ln N, ln value)`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit, ExplabError> {
    if points.len() < 3 {
        return Err(ExplabError::DegenerateLadder(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(ExplabError::DegenerateLadder(
                "N values must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&(n, v)) = points.iter().find(|&&(n, v)| n <= 0.0 || v <= 0.0) {
        return Err(ExplabError::DegenerateLadder(format!(
            "nonpositive point (N = {n}, value = {v})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let dof = (logs.len().max(3) - 2) as f64;
    let stderr_slope = (ss_res / dof / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        stderr_slope,
        points: logs,
    })
}

/// The tail-to-moment exponent: a superlevel tail bound `N^a T^{-b}`
/// integrates to a moment bound `N^{ρa/b} log N`, so the exponent is `ρa/b`.
pub fn level_set_moment_exponent(a: f64, b: f64, rho: f64) -> Result<f64, ExplabError> {
    if !(a > 0.0 && b > a) {
        return Err(ExplabError::InvalidTailExponents { a, b });
    }
    if !(rho > 0.0 && rho <= b) {
        return Err(ExplabError::RhoExceedsB { rho, b });
    }
    Ok(rho * a / b)
}

/// Finite trigonometric polynomial `t(x) = Σ_m c_m e(m x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    /// `(frequency, coefficient)` pairs.
    pub terms: Vec<(i64, Complex64)>,
}

impl TrigPoly {
    pub fn eval(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(m, c)| c * e(frac(m as f64 * x)))
            .sum()
    }
}

/// Test function for the dilation-invariance quadrature check.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `F(x) = t(x)` (complex-valued).
    Plain(TrigPoly),
    /// `F(x) = |t(x)|²`.
    AbsSquared(TrigPoly),
}

impl TestFunction {
    fn eval(&self, x: f64) -> Complex64 {
        match self {
            TestFunction::Plain(t) => t.eval(x),
            TestFunction::AbsSquared(t) => Complex64::new(t.eval(x).norm_sqr(), 0.0),
        }
    }
}

/// Both sides of `∫ F(gx) dx = ∫ F(x) dx`, by the same uniform rule.
#[derive(Debug, Clone)]
pub struct DilationCheck {
    pub dilated: Complex64,
    pub plain: Complex64,
    pub difference: f64,
}

/// Quadrature check of dilation invariance of the torus measure: integrates
/// `F(g·x)` and `F(x)` with the same `points`-node uniform rule (exact for
/// trigonometric polynomials whose dilated frequencies stay below `points`).
pub fn dilation_invariance_check(g: i64, f: &TestFunction, points: u32) -> DilationCheck {
    assert!(g != 0, "dilation factor must be nonzero");
    assert!(points > 0);
    let q = points as i64;
    let mut dilated = Complex64::new(0.0, 0.0);
    let mut plain = Complex64::new(0.0, 0.0);
    for i in 0..q {
        let x = i as f64 / q as f64;
        // g*x mod 1 on the grid is exactly (g*i mod q)/q
        let gx = (g.wrapping_mul(i)).rem_euclid(q) as f64 / q as f64;
        dilated += f.eval(gx);
        plain += f.eval(x);
    }
    let qf = q as f64;
    dilated /= qf;
    plain /= qf;
    DilationCheck {
        dilated,
        plain,
        difference: (dilated - plain).norm(),
    }
}

/// Divisor-type pointwise majorants for low-degree fiber suprema:
/// `d = 2`: `N + Σ_{h≤N} min(1/‖2hx‖, N)`;
/// `d = 3`: `N³ + N Σ_{g,h ∈ [-N,N], gh≠0} min(1/‖6ghx‖, N)`.
///
/// `‖·‖` is the distance to the nearest integer; vanishing denominators clamp
/// to `N`.
pub fn pointwise_majorant(x: f64, n: u64, d: usize) -> Result<f64, ExplabError> {
    fn dist_to_int(t: f64) -> f64 {
        (t - t.round()).abs()
    }
    let nf = n as f64;
    match d {
        2 => {
            let mut sum = nf;
            for h in 1..=n as i64 {
                let denom = dist_to_int(2.0 * h as f64 * x);
                sum += (1.0 / denom).min(nf);
            }
            Ok(sum)
        }
        3 => {
            let mut sum = 0.0;
            for g in -(n as i64)..=n as i64 {
                if g == 0 {
                    continue;
                }
                for h in -(n as i64)..=n as i64 {
                    if h == 0 {
                        continue;
                    }
                    let denom = dist_to_int(6.0 * (g * h) as f64 * x);
                    sum += (1.0 / denom).min(nf);
                }
            }
            Ok(nf.powi(3) + nf * sum)
        }
        other => Err(ExplabError::UnsupportedMajorantDegree(other)),
    }
}

/// Writes per-sample records as RFC-4180-style CSV with a header row:
/// `sample, x1..xk, sup_lower, sup_upper, integrand_lower, integrand_upper`.
pub fn write_samples_csv<W: std::io::Write>(
    writer: W,
    k: usize,
    rho: f64,
    records: &[SampleRecord],
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["sample".to_string()];
    header.extend((1..=k).map(|j| format!("x{j}")));
    header.extend(
        ["sup_lower", "sup_upper", "integrand_lower", "integrand_upper"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.index.to_string()];
        row.extend(r.x.iter().map(|v| format!("{v:?}")));
        row.push(format!("{:?}", r.lower));
        row.push(format!("{:?}", r.upper));
        row.push(format!("{:?}", r.lower.powf(rho)));
        row.push(format!("{:?}", r.upper.powf(rho)));
        w.write_record(&row)?;
    }
    w.flush()
}

/// Compensated mean of `lower^rho` over records (for shared-sample
/// comparisons such as the power-mean inequality).
pub fn power_moment(records: &[SampleRecord], rho: f64) -> f64 {
    let v: Vec<f64> = records.iter().map(|r| r.lower.powf(rho)).collect();
    compensated_sum(&v) / v.len().max(1) as f64
}
