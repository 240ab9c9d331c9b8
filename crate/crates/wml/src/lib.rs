//! Configuration-driven orchestration for the weyl-lab experiments.
//!
//! A run is described by one TOML file with three sections — `[experiment]`,
//! `[budget]`, `[output]` — dispatched to the corresponding library
//! operation, and reported as a JSON summary (stable key order) plus optional
//! per-sample CSV. Exit status: 0 on success, 2 when a declared bound check
//! fails (the summary is still written), 1 on usage or configuration errors.
//!
//! Determinism contract: for a fixed config and seed the summary bytes are
//! identical at any thread count. Randomness is drawn per sample index and
//! aggregation is ordered, so the thread pool size never shows up in the
//! numbers; it is also deliberately excluded from the config echo.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::str::FromStr;

use weyl_lab::polyfam::{self, PolynomialFamily, WeightSpec};
use weyl_lab::supopt::BudgetSpec;
use weyl_lab::sumeval::{EngineKind, TorusVector};
use weyl_lab::{discrepancy, explab};

/// Errors that abort a run before results exist (exit code 1).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

/// The `[experiment]` section. Field requirements depend on `kind`; see the
/// per-kind validation in [`run_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: String,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub n_ladder: Option<Vec<u64>>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Exact rational like `"2/3"`, for the Hölder exponent report.
    #[serde(default)]
    pub theta: Option<String>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub threshold_alpha: Option<f64>,
    #[serde(default)]
    pub threshold_alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub sampler_density: Option<u32>,
    #[serde(default)]
    pub box_cap: Option<u64>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub engine: Option<String>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub shift: Option<i64>,
    #[serde(default)]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub sequence_file: Option<String>,
    #[serde(default)]
    pub et_g: Option<Vec<u32>>,
    #[serde(default)]
    pub weights_file: Option<String>,
}

/// The `[budget]` section; omitted fields fall back to [`BudgetSpec`]
/// defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    #[serde(default)]
    pub coarse_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub multistarts: Option<usize>,
    #[serde(default)]
    pub ascent_iterations: Option<usize>,
    #[serde(default)]
    pub gap_fraction: Option<f64>,
}

impl BudgetSection {
    pub fn to_budget(&self) -> BudgetSpec {
        let defaults = BudgetSpec::default();
        BudgetSpec {
            max_evaluations: self.max_evaluations.unwrap_or(defaults.max_evaluations),
            coarse_grid: self.coarse_grid.clone(),
            multistarts: self.multistarts.unwrap_or(defaults.multistarts),
            ascent_iterations: self.ascent_iterations.unwrap_or(defaults.ascent_iterations),
            gap_fraction: self.gap_fraction.unwrap_or(defaults.gap_fraction),
        }
    }
}

/// The `[output]` section. Never echoed into the summary: nothing here may
/// change the numbers.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub csv: Option<bool>,
    #[serde(default)]
    pub slack_exponent: Option<f64>,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Everything a run produces: the summary (already containing `pass`), and
/// CSV artifacts as `(file name, bytes)`.
pub struct RunOutput {
    pub summary: Value,
    pub pass: bool,
    pub csv_files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    pub fn summary_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s.into_bytes()
    }
}

fn ratio_str(r: Rational64) -> Value {
    Value::String(polyfam::render_ratio(r))
}

fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

struct Ctx<'a> {
    exp: &'a ExperimentSection,
    budget: BudgetSpec,
    slack: f64,
    want_csv: bool,
}

impl<'a> Ctx<'a> {
    fn family(&self) -> Result<PolynomialFamily, CliError> {
        let text = self
            .exp
            .family
            .as_deref()
            .ok_or(CliError::Config("missing experiment.family".into()))?;
        PolynomialFamily::parse(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn weights(&self) -> Result<WeightSpec, CliError> {
        match &self.exp.weights_file {
            None => Ok(WeightSpec::Unit),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let mut table = Vec::new();
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let mut it = line.split(',').map(str::trim);
                    let re: f64 = it
                        .next()
                        .unwrap_or("")
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad weight line {line:?}")))?;
                    let im: f64 = match it.next() {
                        None => 0.0,
                        Some(s) => s
                            .parse()
                            .map_err(|_| CliError::Config(format!("bad weight line {line:?}")))?,
                    };
                    table.push(num_complex::Complex64::new(re, im));
                }
                Ok(WeightSpec::Table(table))
            }
        }
    }

    fn k(&self) -> Result<usize, CliError> {
        self.exp.k.ok_or(CliError::Config("missing experiment.k".into()))
    }

    fn rho(&self) -> Result<f64, CliError> {
        let rho = self
            .exp
            .rho
            .ok_or(CliError::Config("missing experiment.rho".into()))?;
        if rho <= 0.0 {
            return cfg_err("rho must be positive");
        }
        Ok(rho)
    }

    fn seed(&self) -> Result<u64, CliError> {
        self.exp
            .seed
            .ok_or(CliError::Config("seed is mandatory for stochastic kinds".into()))
    }

    fn samples(&self) -> Result<u64, CliError> {
        let s = self
            .exp
            .samples
            .ok_or(CliError::Config("missing experiment.samples".into()))?;
        if s == 0 {
            return cfg_err("samples must be positive");
        }
        Ok(s)
    }

    fn ladder(&self) -> Result<Vec<u64>, CliError> {
        match (&self.exp.n_ladder, self.exp.n) {
            (Some(l), None) => {
                if l.is_empty() || l.windows(2).any(|w| w[1] <= w[0]) {
                    return cfg_err("n_ladder must be strictly increasing and nonempty");
                }
                Ok(l.clone())
            }
            (None, Some(n)) => Ok(vec![n]),
            (Some(_), Some(_)) => cfg_err("give n or n_ladder, not both"),
            (None, None) => cfg_err("missing experiment.n (or n_ladder)"),
        }
    }

    fn point(&self, coords: &Option<Vec<f64>>, name: &str) -> Result<TorusVector, CliError> {
        match coords {
            Some(c) => Ok(TorusVector::new(c.clone())),
            None => cfg_err(format!("missing experiment.{name}")),
        }
    }

    fn checked_wronskian(&self, family: &PolynomialFamily) -> Result<(), CliError> {
        if family.wronskian().is_zero() {
            return cfg_err(
                "the family's Wronskian vanishes identically; the hybrid bounds do not apply",
            );
        }
        Ok(())
    }
}

struct KindOutcome {
    results: Value,
    bound_checks: Vec<Value>,
    csv_files: Vec<(String, Vec<u8>)>,
}

fn check(name: impl Into<String>, value: f64, bound: f64) -> Value {
    json!({
        "name": name.into(),
        "value": value,
        "bound": bound,
        "pass": value <= bound,
    })
}

fn check_ge(name: impl Into<String>, value: f64, floor: f64) -> Value {
    json!({
        "name": name.into(),
        "value": value,
        "bound": floor,
        "pass": value >= floor,
    })
}

fn moment_results(
    ctx: &Ctx<'_>,
    kind: &str,
    per_n: Vec<(u64, explab::MomentEstimate, Vec<explab::SampleRecord>)>,
    mu: Option<f64>,
    rho: f64,
    k: usize,
) -> Result<KindOutcome, CliError> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut csv_files = Vec::new();
    let mut lower_pts = Vec::new();
    let mut upper_pts = Vec::new();
    let single = per_n.len() == 1;
    for (n, est, records) in &per_n {
        let nf = *n as f64;
        let bound = mu.map(|m| nf.powf(m * rho + ctx.slack));
        if let Some(b) = bound {
            if est.within_theorem_range {
                checks.push(check(format!("mean_upper(N={n}) <= N^(mu*rho+slack)"), est.mean_upper, b));
            }
        }
        rows.push(json!({
            "n": n,
            "mean_lower": est.mean_lower,
            "mean_upper": est.mean_upper,
            "stderr": est.stderr,
            "samples": est.samples,
            "bound": bound,
            "within_theorem_range": est.within_theorem_range,
        }));
        lower_pts.push((nf, est.mean_lower));
        upper_pts.push((nf, est.mean_upper));
        if ctx.want_csv {
            let mut buf = Vec::new();
            explab::write_samples_csv(&mut buf, k, rho, records)
                .map_err(CliError::Io)?;
            let name = if single {
                "samples.csv".to_string()
            } else {
                format!("samples_{n}.csv")
            };
            csv_files.push((name, buf));
        }
    }
    let fit_json = |pts: &[(f64, f64)]| -> Value {
        match explab::fit_exponent(pts) {
            Ok(f) => json!({
                "slope": f.slope,
                "intercept": f.intercept,
                "stderr_slope": f.stderr_slope,
            }),
            Err(_) => Value::Null,
        }
    };
    let results = json!({
        "kind": kind,
        "rho": rho,
        "mu": mu,
        "per_n": rows,
        "fit_lower": fit_json(&lower_pts),
        "fit_upper": fit_json(&upper_pts),
    });
    Ok(KindOutcome {
        results,
        bound_checks: checks,
        csv_files,
    })
}

fn dispatch(ctx: &Ctx<'_>) -> Result<KindOutcome, CliError> {
    let no_csv = Vec::new();
    match ctx.exp.kind.as_str() {
        "exponents" => {
            let family = ctx.family()?;
            let k = ctx.k()?;
            let theta = match &ctx.exp.theta {
                None => Rational64::from_integer(1),
                Some(t) => Rational64::from_str(t)
                    .map_err(|e| CliError::Config(format!("bad theta {t:?}: {e}")))?,
            };
            let rep = polyfam::exponent_report(&family, k, theta)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let w = family.wronskian();
            let results = json!({
                "d": rep.d,
                "k": rep.k,
                "theta": ratio_str(rep.theta),
                "s": ratio_str(rep.s),
                "sigma_k": rep.sigma_k,
                "sigma_tilde_k": rep.sigma_tilde_k,
                "sigma_0": rep.sigma_0,
                "delta": rep.delta,
                "mu": ratio_str(rep.mu),
                "mu_v": ratio_str(rep.mu_v),
                "mu_theta": ratio_str(rep.mu_theta),
                "mu_d": rep.mu_d.map(ratio_str),
                "delta_w": ratio_str(rep.delta_w),
                "delta_cs": ratio_str(rep.delta_cs),
                "rho_max": ratio_str(rep.rho_max),
                "wronskian": w.to_string(),
                "wronskian_vanishes": w.is_zero(),
            });
            Ok(KindOutcome { results, bound_checks: vec![], csv_files: no_csv })
        }
        "sum" => {
            let family = ctx.family()?;
            let weights = ctx.weights()?;
            let x = ctx.point(&ctx.exp.x, "x")?;
            let y = match &ctx.exp.y {
                Some(c) => TorusVector::new(c.clone()),
                None => TorusVector::zero(0),
            };
            let n = ctx.exp.n.ok_or(CliError::Config("missing experiment.n".into()))?;
            let shift = ctx.exp.shift.unwrap_or(0);
            let engine: EngineKind = ctx
                .exp
                .engine
                .as_deref()
                .unwrap_or("direct")
                .parse()
                .map_err(CliError::Config)?;
            let s = weyl_lab::eval_sum(&family, &weights, &x, &y, n, shift, engine)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let results = json!({
                "value_re": s.value.re,
                "value_im": s.value.im,
                "magnitude": s.value.norm(),
                "error_bound": s.error_bound,
                "engine": engine.name(),
                "n": n,
                "shift": shift,
            });
            Ok(KindOutcome { results, bound_checks: vec![], csv_files: no_csv })
        }
        "sup" => {
            let family = ctx.family()?;
            let weights = ctx.weights()?;
            let x = ctx.point(&ctx.exp.x, "x")?;
            let n = ctx.exp.n.ok_or(CliError::Config("missing experiment.n".into()))?;
            let est = weyl_lab::sup_fiber(&family, &weights, &x, n, &ctx.budget)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let results = json!({
                "lower": est.lower,
                "upper": est.upper,
                "witness": est.witness.coords(),
                "evaluations": est.evaluations,
                "mesh": est.mesh,
                "budget_exhausted": est.budget_exhausted,
            });
            Ok(KindOutcome { results, bound_checks: vec![], csv_files: no_csv })
        }
        "measure" => {
            let family = ctx.family()?;
            ctx.checked_wronskian(&family)?;
            let weights = ctx.weights()?;
            let k = ctx.k()?;
            let n = ctx.exp.n.ok_or(CliError::Config("missing experiment.n".into()))?;
            let samples = ctx.samples()?;
            let seed = ctx.seed()?;
            let nf = n as f64;
            let thresholds: Vec<f64> = match (
                &ctx.exp.threshold,
                &ctx.exp.threshold_alpha,
                &ctx.exp.threshold_alphas,
            ) {
                (Some(t), None, None) => vec![*t],
                (None, Some(a), None) => vec![nf.powf(*a)],
                (None, None, Some(list)) => list.iter().map(|a| nf.powf(*a)).collect(),
                (None, None, None) => return cfg_err("missing threshold / threshold_alpha(s)"),
                _ => return cfg_err("give exactly one of threshold, threshold_alpha, threshold_alphas"),
            };
            let (ests, records) = explab::measure_superlevel_multi(
                &family, &weights, k, n, &thresholds, samples, &ctx.budget, seed,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let rep = polyfam::exponent_report(&family, k, Rational64::from_integer(1))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let a_exp = ratio_f64(rep.s) + rep.sigma_k as f64 + (rep.d - rep.k) as f64;
            let b_exp = ratio_f64(rep.rho_max);
            let mut rows = Vec::new();
            let mut checks = Vec::new();
            for est in &ests {
                let bound = nf.powf(a_exp + ctx.slack) * est.threshold.powf(-b_exp);
                checks.push(check(
                    format!("fraction_upper(T={}) <= N^(a+slack) T^-b", est.threshold),
                    est.fraction_upper,
                    bound,
                ));
                rows.push(json!({
                    "threshold": est.threshold,
                    "fraction_lower": est.fraction_lower,
                    "fraction_upper": est.fraction_upper,
                    "stderr": est.stderr,
                    "bound": bound,
                }));
            }
            let mut csv_files = Vec::new();
            if ctx.want_csv {
                let mut buf = Vec::new();
                explab::write_samples_csv(&mut buf, k, 1.0, &records).map_err(CliError::Io)?;
                csv_files.push(("samples.csv".to_string(), buf));
            }
            let results = json!({
                "n": n,
                "samples": samples,
                "per_threshold": rows,
                "tail_exponent_a": a_exp,
                "tail_exponent_b": b_exp,
            });
            Ok(KindOutcome { results, bound_checks: checks, csv_files })
        }
        "boxcount" => {
            let family = ctx.family()?;
            let weights = ctx.weights()?;
            let n = ctx.exp.n.ok_or(CliError::Config("missing experiment.n".into()))?;
            let alpha = ctx
                .exp
                .alpha
                .ok_or(CliError::Config("missing experiment.alpha".into()))?;
            let eps = ctx.exp.eps.unwrap_or(0.05);
            let density = ctx.exp.sampler_density.unwrap_or(1);
            let cap = ctx.exp.box_cap.unwrap_or(1_000_000);
            let r = explab::box_count_experiment(
                &family, &weights, n, alpha, eps, density, cap, ctx.slack,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let checks = vec![check(
                "marked <= U N^(s(1-2a)) N^slack",
                r.marked as f64,
                r.bound,
            )];
            let results = json!({
                "n": r.n,
                "alpha": r.alpha,
                "eps": r.eps,
                "sampler_density": r.sampler_density,
                "resolutions": r.resolutions,
                "zeta": r.zeta,
                "u_total": r.u_total,
                "threshold": r.threshold,
                "marked": r.marked,
                "marked_certified": r.marked_certified,
                "lipschitz_slack": r.slack,
                "bound": r.bound,
            });
            Ok(KindOutcome { results, bound_checks: checks, csv_files: no_csv })
        }
        "moment" => {
            let family = ctx.family()?;
            ctx.checked_wronskian(&family)?;
            let weights = ctx.weights()?;
            let k = ctx.k()?;
            let rho = ctx.rho()?;
            let samples = ctx.samples()?;
            let seed = ctx.seed()?;
            let rep = polyfam::exponent_report(&family, k, Rational64::from_integer(1))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let mu = ratio_f64(rep.mu);
            let mut per_n = Vec::new();
            for n in ctx.ladder()? {
                let (est, records) = explab::moment_run(
                    &family, &weights, k, rho, n, samples, &ctx.budget, seed,
                )
                .map_err(|e| CliError::Config(e.to_string()))?;
                per_n.push((n, est, records));
            }
            moment_results(ctx, "moment", per_n, Some(mu), rho, k)
        }
        "short-moment" => {
            let d = ctx.exp.d.ok_or(CliError::Config("missing experiment.d".into()))?;
            if d < 2 {
                return cfg_err("short-moment needs d >= 2");
            }
            let rho = ctx.rho()?;
            let samples = ctx.samples()?;
            let seed = ctx.seed()?;
            let family = PolynomialFamily::classical(d);
            let rep = polyfam::exponent_report(&family, d, Rational64::from_integer(1))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let mu_d = rep.mu_d.map(ratio_f64);
            let mut per_n = Vec::new();
            for n in ctx.ladder()? {
                let (est, records) =
                    explab::short_moment_run(d, rho, n, samples, &ctx.budget, seed)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                per_n.push((n, est, records));
            }
            moment_results(ctx, "short-moment", per_n, mu_d, rho, 1)
        }
        "disc-moment" => {
            let family = ctx.family()?;
            ctx.checked_wronskian(&family)?;
            let k = ctx.k()?;
            let rho = ctx.rho()?;
            if rho < 1.0 {
                return cfg_err("disc-moment is stated for rho >= 1");
            }
            let samples = ctx.samples()?;
            let seed = ctx.seed()?;
            let rep = polyfam::exponent_report(&family, k, Rational64::from_integer(1))
                .map_err(|e| CliError::Config(e.to_string()))?;
            let mu = ratio_f64(rep.mu);
            let mut per_n = Vec::new();
            for n in ctx.ladder()? {
                let (est, records) = explab::discrepancy_moment_run(
                    &family, k, rho, n, samples, &ctx.budget, seed,
                )
                .map_err(|e| CliError::Config(e.to_string()))?;
                per_n.push((n, est, records));
            }
            moment_results(ctx, "disc-moment", per_n, Some(mu), rho, k)
        }
        "discrepancy" => {
            let seq = match (&ctx.exp.sequence_file, &ctx.exp.family) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(path)?;
                    discrepancy::PointSequence::from_text(&text)
                        .map_err(|e| CliError::Config(e.to_string()))?
                }
                (None, Some(_)) => {
                    let family = ctx.family()?;
                    let x = ctx.point(&ctx.exp.x, "x")?;
                    let y = match &ctx.exp.y {
                        Some(c) => TorusVector::new(c.clone()),
                        None => TorusVector::zero(0),
                    };
                    let n = ctx.exp.n.ok_or(CliError::Config("missing experiment.n".into()))?;
                    let shift = ctx.exp.shift.unwrap_or(0);
                    discrepancy::polynomial_fractional_parts(&family, &x, &y, n, shift)
                        .map_err(|e| CliError::Config(e.to_string()))?
                }
                _ => return cfg_err("give exactly one of sequence_file or family"),
            };
            let r = discrepancy::exact_discrepancy(&seq)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let mut et_rows = Vec::new();
            let mut checks = Vec::new();
            for g in ctx.exp.et_g.clone().unwrap_or_else(|| vec![1, 5, 20]) {
                let b = discrepancy::erdos_turan_bound(&seq, g)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                checks.push(check_ge(format!("erdos_turan(G={g}) >= D_N"), b, r.value));
                et_rows.push(json!({ "g": g, "bound": b }));
            }
            let results = json!({
                "n": seq.len(),
                "value": r.value,
                "excess_interval": [r.excess_interval.0, r.excess_interval.1],
                "deficit_interval": [r.deficit_interval.0, r.deficit_interval.1],
                "erdos_turan": et_rows,
            });
            Ok(KindOutcome { results, bound_checks: checks, csv_files: no_csv })
        }
        "majorant" => {
            let d = ctx.exp.d.ok_or(CliError::Config("missing experiment.d".into()))?;
            let x = ctx.point(&ctx.exp.x, "x")?;
            if x.dim() != 1 {
                return cfg_err("majorant takes a single coordinate x");
            }
            let x0 = x.coords()[0];
            let family = match d {
                2 => PolynomialFamily::parse("T^2; T").unwrap(),
                3 => PolynomialFamily::parse("T^3; T^2; T").unwrap(),
                other => return cfg_err(format!("majorant is stated for d = 2 or 3, got {other}")),
            };
            let power = if d == 2 { 2 } else { 4 };
            let mut rows = Vec::new();
            for n in ctx.ladder()? {
                let maj = explab::pointwise_majorant(x0, n, d)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let est = weyl_lab::sup_fiber(&family, &WeightSpec::Unit, &x, n, &ctx.budget)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                rows.push(json!({
                    "n": n,
                    "majorant": maj,
                    "sup_lower": est.lower,
                    "sup_power": power,
                    "ratio": est.lower.powi(power) / maj,
                }));
            }
            let results = json!({ "d": d, "x": x0, "per_n": rows });
            Ok(KindOutcome { results, bound_checks: vec![], csv_files: no_csv })
        }
        "fit" => {
            let pts = ctx
                .exp
                .points
                .as_ref()
                .ok_or(CliError::Config("missing experiment.points".into()))?;
            let pairs: Vec<(f64, f64)> = pts.iter().map(|p| (p[0], p[1])).collect();
            let f = explab::fit_exponent(&pairs).map_err(|e| CliError::Config(e.to_string()))?;
            let results = json!({
                "slope": f.slope,
                "intercept": f.intercept,
                "stderr_slope": f.stderr_slope,
                "points": f.points.iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>(),
            });
            Ok(KindOutcome { results, bound_checks: vec![], csv_files: no_csv })
        }
        other => cfg_err(format!(
            "unknown experiment kind {other:?}; expected one of exponents, sum, sup, measure, \
             boxcount, moment, short-moment, discrepancy, disc-moment, majorant, fit"
        )),
    }
}

/// Runs a validated config and produces the summary and CSV artifacts.
///
/// The `threads` argument (CLI override, config, or the `WML_THREADS`
/// environment variable, in that order; 0 means the rayon default) only sets
/// the pool size — results are byte-identical regardless.
pub fn run_experiment(cfg: &ConfigFile, threads_override: Option<usize>) -> Result<RunOutput, CliError> {
    let threads = threads_override
        .or(cfg.output.threads)
        .or_else(|| std::env::var("WML_THREADS").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    let ctx = Ctx {
        exp: &cfg.experiment,
        budget: cfg.budget.to_budget(),
        slack: cfg.output.slack_exponent.unwrap_or(explab::DEFAULT_SLACK_EXPONENT),
        want_csv: cfg.output.csv.unwrap_or(false),
    };
    let outcome = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        pool.install(|| dispatch(&ctx))?
    } else {
        dispatch(&ctx)?
    };
    let pass = outcome
        .bound_checks
        .iter()
        .all(|c| c["pass"].as_bool().unwrap_or(false));
    let summary = json!({
        "config": {
            "experiment": serde_json::to_value(&cfg.experiment).expect("serializable"),
            "budget": serde_json::to_value(&cfg.budget).expect("serializable"),
            "slack_exponent": ctx.slack,
        },
        "kind": cfg.experiment.kind,
        "results": outcome.results,
        "bound_checks": outcome.bound_checks,
        "pass": pass,
    });
    Ok(RunOutput {
        summary,
        pass,
        csv_files: outcome.csv_files,
    })
}

/// The brute-force discrepancy oracle on a one-value-per-line file.
pub fn oracle_discrepancy(path: &std::path::Path) -> Result<f64, CliError> {
    let text = std::fs::read_to_string(path)?;
    let seq = discrepancy::PointSequence::from_text(&text)
        .map_err(|e| CliError::Config(e.to_string()))?;
    discrepancy::brute_force_discrepancy(&seq).map_err(|e| CliError::Config(e.to_string()))
}
