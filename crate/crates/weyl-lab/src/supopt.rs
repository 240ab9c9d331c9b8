//! Certified estimation of fiber suprema `sup_{y ∈ T_{d-k}} |T_{a,φ}(x, y; N)|`.
//!
//! The estimate is a pair: `lower` is certified (the exactly re-evaluated
//! magnitude at the best probe found, minus its evaluation error bound), and
//! `upper` is a Lipschitz certificate: no point of the torus is farther than
//! half a mesh step from a scanned grid point, so the supremum cannot exceed
//! the best scanned value by more than `Σ_j L_j h_j / 2`.
//!
//! The scan walks uniform per-coordinate grids `{0, 1/M_j, 2/M_j, …}`. These
//! are nested under doubling, which makes pure grid refinement monotone in
//! `lower`. Gradient ascent on the smooth `|T|²` then sharpens `lower` from
//! the best grid cells. Ties between equal grid maxima break toward the
//! lexicographically smallest flat index, so the result is deterministic
//! under any parallel schedule.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::polyfam::{IntPolynomial, PolynomialFamily, WeightSpec};
use crate::rng::compensated_sum;
use crate::sumeval::{e, eval_sum, frac, EngineKind, EvalError, TorusVector};

const TAU: f64 = std::f64::consts::TAU;

/// Errors from supremum estimation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SupError {
    #[error("split k = {k} exceeds family dimension d = {d}")]
    KOutOfRange { k: usize, d: usize },
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Search budget for fiber suprema.
#[derive(Debug, Clone)]
pub struct BudgetSpec {
    /// Cap on the number of coarse grid cells.
    pub max_evaluations: usize,
    /// Per-coordinate grid resolutions; `None` derives them from the
    /// `gap_fraction` rule.
    pub coarse_grid: Option<Vec<usize>>,
    /// Number of best cells used as ascent starting points.
    pub multistarts: usize,
    /// Iteration cap per ascent (0 disables ascent).
    pub ascent_iterations: usize,
    /// Grid rule: choose `h_j` with `L_j h_j / 2 ≤ gap_fraction · Σ|a_n|`, so
    /// the certified gap is at most `(d-k) · gap_fraction` of the trivial
    /// bound before ascent.
    pub gap_fraction: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec {
            max_evaluations: 1 << 20,
            coarse_grid: None,
            multistarts: 8,
            ascent_iterations: 50,
            gap_fraction: 0.05,
        }
    }
}

/// Certified lower bound, Lipschitz-slack upper bound, and argmax witness for
/// a fiber supremum.
#[derive(Debug, Clone)]
pub struct SupEstimate {
    /// Certified: re-evaluated magnitude at `witness` minus its error bound.
    pub lower: f64,
    /// Best scanned value plus `Σ_j L_j h_j / 2` plus certified scan error.
    pub upper: f64,
    /// Fiber coordinates of the best probe found.
    pub witness: TorusVector,
    pub evaluations: u64,
    /// Final per-coordinate mesh spacing `h_j`.
    pub mesh: Vec<f64>,
    /// Set when the grid was coarsened to fit `max_evaluations`; the
    /// certificate is still sound, just wider.
    pub budget_exhausted: bool,
}

/// Global per-coordinate Lipschitz constants of `|T|` in the fiber
/// coordinates: `L_j = 2π Σ_{n≤N} |a_n| |φ_{k+j}(n)|`, `j = 1..d-k`.
pub fn lipschitz_bounds(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    n: u64,
    k: usize,
) -> Result<Vec<f64>, SupError> {
    let d = family.d();
    if k > d {
        return Err(SupError::KOutOfRange { k, d });
    }
    let mut out = Vec::with_capacity(d - k);
    for poly in &family.polys()[k..] {
        let terms: Vec<f64> = (1..=n as i64)
            .map(|t| weights.weight(t).map(|a| a.norm()).unwrap_or(0.0) * poly.eval_abs_f64(t))
            .collect();
        // tiny inflation keeps the constant an upper bound despite rounding
        out.push(TAU * compensated_sum(&terms) * (1.0 + 1e-12));
    }
    Ok(out)
}

struct FiberProblem {
    /// `a_n e(x-part phase)`, `n = 1..=N`.
    base: Vec<Complex64>,
    /// Fiber polynomial values `φ_{k+j}(n)` as f64 of the exact integers.
    fiber_values: Vec<Vec<f64>>,
    /// Exact values reduced mod `M_j`: grid phases `i·r/M_j` stay exact.
    fiber_mod_m: Vec<Vec<u64>>,
    resolutions: Vec<usize>,
    abs_sum: f64,
}

impl FiberProblem {
    #[inline]
    fn grid_phase(&self, j: usize, cell: usize, n_idx: usize) -> f64 {
        let m = self.resolutions[j] as u128;
        let r = self.fiber_mod_m[j][n_idx] as u128;
        ((cell as u128 * r) % m) as f64 / m as f64
    }

    /// `|T(x, y)|²` and its fiber gradient (fast f64 phases; certification
    /// happens later by exact re-evaluation).
    fn value_and_grad(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let m = y.len();
        let mut t = Complex64::new(0.0, 0.0);
        let mut g = vec![Complex64::new(0.0, 0.0); m];
        for (i, &b) in self.base.iter().enumerate() {
            let mut phase = 0.0;
            for (j, yj) in y.iter().enumerate() {
                phase += yj * self.fiber_values[j][i];
            }
            let w = b * e(frac(phase));
            t += w;
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += w * self.fiber_values[j][i];
            }
        }
        let f = t.norm_sqr();
        let grad = g
            .iter()
            .map(|gj| 2.0 * TAU * (t.im * gj.re - t.re * gj.im))
            .collect();
        (f, grad)
    }

    fn value(&self, y: &[f64]) -> f64 {
        let mut t = Complex64::new(0.0, 0.0);
        for (i, &b) in self.base.iter().enumerate() {
            let mut phase = 0.0;
            for (j, yj) in y.iter().enumerate() {
                phase += yj * self.fiber_values[j][i];
            }
            t += b * e(frac(phase));
        }
        t.norm_sqr()
    }
}

struct LineResult {
    /// `(|T|², flat index)` of the best cells in the line, descending.
    top: Vec<(f64, u64)>,
    drift: f64,
}

/// Certified estimate of `sup_y |T_{a,φ}(x, y; N)|` over `y ∈ T_{d-k}` with
/// `k = x.dim()`.
///
/// For `k = d` the fiber is a point and the bare magnitude is returned with
/// zero mesh gap.
pub fn sup_fiber(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    x: &TorusVector,
    n: u64,
    budget: &BudgetSpec,
) -> Result<SupEstimate, SupError> {
    let d = family.d();
    let k = x.dim();
    if k > d {
        return Err(SupError::KOutOfRange { k, d });
    }
    let m = d - k;
    if m == 0 {
        let s = eval_sum(family, weights, x, &TorusVector::zero(0), n, 0, EngineKind::Direct)?;
        let mag = s.value.norm();
        return Ok(SupEstimate {
            lower: (mag - s.error_bound).max(0.0),
            upper: mag + s.error_bound,
            witness: TorusVector::zero(0),
            evaluations: 1,
            mesh: Vec::new(),
            budget_exhausted: false,
        });
    }
    if n == 0 {
        return Ok(SupEstimate {
            lower: 0.0,
            upper: 0.0,
            witness: TorusVector::zero(m),
            evaluations: 0,
            mesh: vec![1.0; m],
            budget_exhausted: false,
        });
    }
    if !weights.covers(0, n) {
        return Err(SupError::Eval(EvalError::WeightTableTooShort {
            from: 1,
            to: n as i64,
        }));
    }
    if budget.max_evaluations == 0 {
        return Err(SupError::InvalidBudget("max_evaluations = 0".into()));
    }

    let abs_sum = weights.abs_sum(0, n);
    let lips = lipschitz_bounds(family, weights, n, k)?;

    let mut resolutions: Vec<usize> = match &budget.coarse_grid {
        Some(grid) => {
            if grid.len() != m {
                return Err(SupError::InvalidBudget(format!(
                    "coarse_grid has {} entries for a {m}-dimensional fiber",
                    grid.len()
                )));
            }
            if grid.contains(&0) {
                return Err(SupError::InvalidBudget("zero grid resolution".into()));
            }
            grid.clone()
        }
        None => lips
            .iter()
            .map(|&l| ((l / (2.0 * budget.gap_fraction * abs_sum)).ceil() as usize).max(2))
            .collect(),
    };
    let mut budget_exhausted = false;
    loop {
        let total: f64 = resolutions.iter().map(|&r| r as f64).product();
        if total <= budget.max_evaluations as f64 {
            break;
        }
        budget_exhausted = true;
        let scale = (budget.max_evaluations as f64 / total).powf(1.0 / m as f64);
        let mut changed = false;
        for r in &mut resolutions {
            let next = (((*r as f64) * scale).floor() as usize).max(1);
            if next < *r {
                *r = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // even resolutions put dyadic peaks like y = 1/2 on the grid
    for r in &mut resolutions {
        if *r > 1 && *r % 2 == 1 {
            *r += 1;
        }
    }

    let x_phases = crate::sumeval::phase_context(family, x, k);
    let base: Vec<Complex64> = (1..=n as i64)
        .map(|t| weights.weight(t).expect("coverage checked") * e(x_phases.phase(t)))
        .collect();
    let fiber_values: Vec<Vec<f64>> = family.polys()[k..]
        .iter()
        .map(|p| (1..=n as i64).map(|t| p.eval_f64(t)).collect())
        .collect();
    let fiber_mod_m: Vec<Vec<u64>> = family.polys()[k..]
        .iter()
        .zip(&resolutions)
        .map(|(p, &mm)| {
            use num_integer::Integer;
            use num_traits::ToPrimitive;
            let modulus = num_bigint::BigInt::from(mm as u64);
            (1..=n as i64)
                .map(|t| p.eval_i64(t).mod_floor(&modulus).to_u64().unwrap_or(0))
                .collect()
        })
        .collect();

    let problem = FiberProblem {
        base,
        fiber_values,
        fiber_mod_m,
        resolutions: resolutions.clone(),
        abs_sum,
    };

    let keep = budget.multistarts.max(1);
    let last = m - 1;
    let m_last = resolutions[last];
    let lines: usize = resolutions[..last].iter().product();

    let line_results: Vec<LineResult> = (0..lines)
        .into_par_iter()
        .map(|line| scan_line(&problem, line, keep))
        .collect();

    let mut top: Vec<(f64, u64)> = Vec::new();
    let mut drift: f64 = 0.0;
    for lr in &line_results {
        drift = drift.max(lr.drift);
        for &(v, idx) in &lr.top {
            insert_top(&mut top, keep, v, idx);
        }
    }
    let mut evaluations = (lines * m_last) as u64;
    let (grid_best_sq, grid_best_idx) = top.first().copied().unwrap_or((0.0, 0));

    let mut best_y: Vec<f64> = cell_coords(&resolutions, grid_best_idx);
    let mut best_f = grid_best_sq;
    if budget.multistarts > 0 && budget.ascent_iterations > 0 {
        let h_min = resolutions
            .iter()
            .map(|&r| 1.0 / r as f64)
            .fold(f64::INFINITY, f64::min);
        for &(f0, idx) in top.iter().take(budget.multistarts) {
            let (y, f, evals) = ascend(
                &problem,
                cell_coords(&resolutions, idx),
                f0,
                h_min,
                budget.ascent_iterations,
            );
            evaluations += evals;
            if f > best_f {
                best_f = f;
                best_y = y;
            }
        }
    }

    // certify the lower bound by exact re-evaluation at the witness
    let witness = TorusVector::new(best_y);
    let reval = eval_sum(family, weights, x, &witness, n, 0, EngineKind::Direct)?;
    evaluations += 1;
    let lower = (reval.value.norm() - reval.error_bound).max(0.0);

    let mesh: Vec<f64> = resolutions.iter().map(|&r| 1.0 / r as f64).collect();
    let slack: f64 = lips.iter().zip(&mesh).map(|(l, h)| l * h / 2.0).sum();
    let grid_best = grid_best_sq.max(0.0).sqrt() + drift;
    let upper = (grid_best + slack).max(lower);

    Ok(SupEstimate {
        lower,
        upper,
        witness,
        evaluations,
        mesh,
        budget_exhausted,
    })
}

/// Majorant of the integer-shift supremum of short-interval Weyl sums:
/// `sup_{(v_1,…,v_{d-1}) ∈ T_{d-1}} |S_d((v_1, …, v_{d-1}, u_d); N)|` with the
/// degree-d coefficient pinned at `u_d`.
///
/// This majorizes `sup_{K ∈ Z} |S_d(u; K, N)|` for every `(u_1, …, u_{d-1})`.
pub fn sup_short(u_d: f64, d: usize, n: u64, budget: &BudgetSpec) -> Result<SupEstimate, SupError> {
    assert!(d >= 2, "short-interval majorant needs d >= 2");
    // order the family so the pinned coordinate comes first
    let mut polys = vec![IntPolynomial::monomial(1, d)];
    polys.extend((1..d).map(|j| IntPolynomial::monomial(1, j)));
    let family = PolynomialFamily::new(polys).expect("valid rearranged classical family");
    sup_fiber(
        &family,
        &WeightSpec::Unit,
        &TorusVector::new(vec![u_d]),
        n,
        budget,
    )
}

fn cell_coords(resolutions: &[usize], flat: u64) -> Vec<f64> {
    let m = resolutions.len();
    let mut rem = flat;
    let mut idx = vec![0u64; m];
    for j in (0..m).rev() {
        idx[j] = rem % resolutions[j] as u64;
        rem /= resolutions[j] as u64;
    }
    idx.iter()
        .zip(resolutions)
        .map(|(&i, &r)| i as f64 / r as f64)
        .collect()
}

fn insert_top(top: &mut Vec<(f64, u64)>, keep: usize, v: f64, idx: u64) {
    let pos = top.partition_point(|&(tv, ti)| tv > v || (tv == v && ti < idx));
    if pos < keep {
        top.insert(pos, (v, idx));
        top.truncate(keep);
    }
}

fn scan_line(problem: &FiberProblem, line: usize, keep: usize) -> LineResult {
    let m = problem.resolutions.len();
    let last = m - 1;
    let m_last = problem.resolutions[last];
    let n = problem.base.len();

    let mut rem = line;
    let mut outer = vec![0usize; last];
    for j in (0..last).rev() {
        outer[j] = rem % problem.resolutions[j];
        rem /= problem.resolutions[j];
    }

    let mut t_re = vec![0.0f64; n];
    let mut t_im = vec![0.0f64; n];
    let reseed = |t_re: &mut [f64], t_im: &mut [f64], start_cell: usize| {
        for i in 0..n {
            let mut phase = 0.0;
            for (j, &cell) in outer.iter().enumerate() {
                phase += problem.grid_phase(j, cell, i);
            }
            phase += problem.grid_phase(last, start_cell, i);
            let w = problem.base[i] * e(frac(phase));
            t_re[i] = w.re;
            t_im[i] = w.im;
        }
    };
    let mut s_re = vec![0.0f64; n];
    let mut s_im = vec![1.0f64; n];
    if m_last > 1 {
        for i in 0..n {
            let w = e(problem.grid_phase(last, 1, i));
            s_re[i] = w.re;
            s_im[i] = w.im;
        }
    }

    let mut top: Vec<(f64, u64)> = Vec::new();
    let base_index = (line * m_last) as u64;
    const RESEED_EVERY: usize = 4096;
    let mut steps_since_reseed = 0usize;
    reseed(&mut t_re, &mut t_im, 0);
    for cell in 0..m_last {
        if steps_since_reseed >= RESEED_EVERY {
            reseed(&mut t_re, &mut t_im, cell);
            steps_since_reseed = 0;
        }
        let mut sum_re = 0.0;
        let mut sum_im = 0.0;
        for i in 0..n {
            sum_re += t_re[i];
            sum_im += t_im[i];
        }
        let v = sum_re * sum_re + sum_im * sum_im;
        if top.len() < keep || v > top.last().map(|&(tv, _)| tv).unwrap_or(f64::NEG_INFINITY) {
            insert_top(&mut top, keep, v, base_index + cell as u64);
        }
        if cell + 1 < m_last {
            for i in 0..n {
                let a = t_re[i];
                let b = t_im[i];
                t_re[i] = a * s_re[i] - b * s_im[i];
                t_im[i] = a * s_im[i] + b * s_re[i];
            }
            steps_since_reseed += 1;
        }
    }
    let drift = problem.abs_sum
        * f64::EPSILON
        * (5.0 * RESEED_EVERY.min(m_last) as f64 + 2.0 * (n as f64).log2().max(1.0));
    LineResult { top, drift }
}

fn ascend(
    problem: &FiberProblem,
    start: Vec<f64>,
    f_start: f64,
    h_min: f64,
    max_iters: usize,
) -> (Vec<f64>, f64, u64) {
    let mut y = start;
    let mut f = f_start;
    let mut evals = 0u64;
    let mut step_scale = 1.0f64;
    for _ in 0..max_iters {
        let (f_here, grad) = problem.value_and_grad(&y);
        evals += 1;
        f = f.max(f_here);
        let gmax = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        if gmax == 0.0 {
            break;
        }
        let mut step = step_scale * h_min / (2.0 * gmax);
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = y
                .iter()
                .zip(&grad)
                .map(|(yj, gj)| frac(yj + step * gj))
                .collect();
            let f_cand = problem.value(&cand);
            evals += 1;
            if f_cand > f_here {
                let gain = (f_cand - f_here) / f_here.max(1e-300);
                y = cand;
                f = f_cand;
                accepted = true;
                step_scale = (step_scale * 1.5).min(1e9);
                if gain < 1e-10 {
                    return (y, f, evals);
                }
                break;
            }
            step *= 0.5;
            step_scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (y, f, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfam::PolynomialFamily;
    use crate::sumeval::eval_sum_point;
    use rand::Rng;

    fn fam(text: &str) -> PolynomialFamily {
        PolynomialFamily::parse(text).unwrap()
    }

    #[test]
    fn lipschitz_known_values() {
        let l = lipschitz_bounds(&fam("T^2; T"), &WeightSpec::Unit, 10, 1).unwrap();
        assert!((l[0] - TAU * 55.0).abs() < 1e-9, "{}", l[0]);
        let l = lipschitz_bounds(&fam("T^2; T"), &WeightSpec::Unit, 1, 1).unwrap();
        assert!((l[0] - TAU).abs() < 1e-9);
        let l = lipschitz_bounds(&fam("T^3; T^2; T"), &WeightSpec::Unit, 10, 1).unwrap();
        assert!((l[0] - TAU * 385.0).abs() < 1e-8, "{}", l[0]);
        assert!((l[1] - TAU * 55.0).abs() < 1e-9);
    }

    #[test]
    fn sup_at_zero_hits_trivial_maximum() {
        let est = sup_fiber(
            &fam("T^2; T"),
            &WeightSpec::Unit,
            &TorusVector::new(vec![0.0]),
            32,
            &BudgetSpec::default(),
        )
        .unwrap();
        assert!((est.lower - 32.0).abs() < 1e-9, "{}", est.lower);
        assert_eq!(est.witness.coords(), &[0.0]);
        assert!(est.upper >= 32.0);
        assert!(est.lower <= est.upper);
    }

    #[test]
    fn sup_at_half_finds_parity_collapse() {
        // x = 1/2: phases collapse at y = 1/2; even grids make the peak a
        // grid point, so the estimate is exact
        let est = sup_fiber(
            &fam("T^2; T"),
            &WeightSpec::Unit,
            &TorusVector::new(vec![0.5]),
            8,
            &BudgetSpec::default(),
        )
        .unwrap();
        assert!((est.lower - 8.0).abs() < 1e-9, "{}", est.lower);
        assert!((est.witness.coords()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn single_term_sup_is_weight_magnitude() {
        let est = sup_fiber(
            &fam("T^2; T"),
            &WeightSpec::Unit,
            &TorusVector::new(vec![0.3]),
            1,
            &BudgetSpec::default(),
        )
        .unwrap();
        assert!((est.lower - 1.0).abs() < 1e-10);
        assert!(est.upper >= 1.0);
    }

    #[test]
    fn degenerate_full_split_returns_bare_magnitude() {
        let f = fam("T^2; T");
        let x = TorusVector::new(vec![0.23, 0.71]);
        let est = sup_fiber(&f, &WeightSpec::Unit, &x, 16, &BudgetSpec::default()).unwrap();
        let direct = eval_sum_point(&f, &WeightSpec::Unit, &x, 16, 0, EngineKind::Direct).unwrap();
        assert!((est.lower - direct.value.norm()).abs() <= 2.0 * direct.error_bound);
        assert!(est.upper - est.lower <= 2.0 * direct.error_bound + 1e-15);
    }

    #[test]
    fn lower_dominates_random_probes() {
        let f = fam("T^2; T");
        let x = TorusVector::new(vec![0.137]);
        let n = 48;
        let est = sup_fiber(&f, &WeightSpec::Unit, &x, n, &BudgetSpec::default()).unwrap();
        for t in 0..100u64 {
            let mut rng = crate::rng::sample_rng(2024, t);
            let y = TorusVector::new(vec![rng.random()]);
            let probe = eval_sum(&f, &WeightSpec::Unit, &x, &y, n, 0, EngineKind::Direct).unwrap();
            assert!(
                est.lower >= probe.value.norm() - probe.error_bound,
                "probe {t} at {:?} beats lower: {} > {}",
                y.coords(),
                probe.value.norm(),
                est.lower
            );
            assert!(est.upper + 1e-9 >= probe.value.norm());
        }
    }

    #[test]
    fn certificate_contains_dense_scan() {
        // d-k = 1, N <= 32: a 10x finer dense scan never exceeds `upper`
        for (text, x0, n) in [("T^2; T", 0.3, 24u64), ("T^3; T", 0.61, 32)] {
            let f = fam(text);
            let budget = BudgetSpec {
                coarse_grid: Some(vec![64]),
                multistarts: 4,
                ascent_iterations: 20,
                ..BudgetSpec::default()
            };
            let x = TorusVector::new(vec![x0]);
            let est = sup_fiber(&f, &WeightSpec::Unit, &x, n, &budget).unwrap();
            let fine = 640;
            let mut dense_max = 0.0f64;
            for i in 0..fine {
                let y = TorusVector::new(vec![i as f64 / fine as f64]);
                let v = eval_sum(&f, &WeightSpec::Unit, &x, &y, n, 0, EngineKind::Direct)
                    .unwrap()
                    .value
                    .norm();
                dense_max = dense_max.max(v);
            }
            assert!(
                dense_max <= est.upper + 1e-9,
                "{text}: dense {dense_max} > upper {}",
                est.upper
            );
            assert!(est.lower <= est.upper);
        }
    }

    #[test]
    fn refinement_is_monotone_on_nested_grids() {
        let f = fam("T^2; T");
        let x = TorusVector::new(vec![0.377]);
        let mut prev = 0.0;
        for res in [32usize, 64, 128, 256] {
            let budget = BudgetSpec {
                coarse_grid: Some(vec![res]),
                multistarts: 0,
                ascent_iterations: 0,
                ..BudgetSpec::default()
            };
            let est = sup_fiber(&f, &WeightSpec::Unit, &x, 40, &budget).unwrap();
            assert!(est.lower >= prev - 1e-12, "res {res}: {} < {prev}", est.lower);
            prev = est.lower;
        }
    }

    #[test]
    fn two_dimensional_fiber_certificate() {
        let f = fam("T^3; T^2; T");
        let x = TorusVector::new(vec![0.29]);
        let budget = BudgetSpec {
            max_evaluations: 1 << 14,
            ..BudgetSpec::default()
        };
        let est = sup_fiber(&f, &WeightSpec::Unit, &x, 16, &budget).unwrap();
        assert!(est.lower <= est.upper);
        assert!(est.lower >= 16.0f64.sqrt() - 1.0); // at least ~sqrt(N) generically
        assert_eq!(est.mesh.len(), 2);
        // the certificate gap respects the Lipschitz mesh bound
        let lips = lipschitz_bounds(&f, &WeightSpec::Unit, 16, 1).unwrap();
        let slack: f64 = lips.iter().zip(&est.mesh).map(|(l, h)| l * h / 2.0).sum();
        assert!(est.upper - est.lower <= slack * (1.0 + 1e-9) + 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = fam("T^3; T^2; T");
        let x = TorusVector::new(vec![0.21]);
        let n = 16usize;
        let ctx = crate::sumeval::phase_context(&f, &x, 1);
        let base: Vec<Complex64> = (1..=n as i64).map(|t| e(ctx.phase(t))).collect();
        let fiber_values: Vec<Vec<f64>> = f.polys()[1..]
            .iter()
            .map(|p| (1..=n as i64).map(|t| p.eval_f64(t)).collect())
            .collect();
        let problem = FiberProblem {
            base,
            fiber_values,
            fiber_mod_m: vec![vec![0; n]; 2],
            resolutions: vec![1, 1],
            abs_sum: n as f64,
        };
        for seed in 0..10u64 {
            let mut rng = crate::rng::sample_rng(5, seed);
            let y: Vec<f64> = vec![rng.random(), rng.random()];
            let (_, grad) = problem.value_and_grad(&y);
            let h = 1e-6;
            for j in 0..2 {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[j] = frac(yp[j] + h);
                ym[j] = frac(ym[j] - h);
                let fd = (problem.value(&yp) - problem.value(&ym)) / (2.0 * h);
                let scale = grad[j].abs().max(fd.abs()).max(1.0);
                assert!(
                    (grad[j] - fd).abs() / scale < 1e-4,
                    "seed {seed} j={j}: {} vs {}",
                    grad[j],
                    fd
                );
            }
        }
    }

    #[test]
    fn short_interval_majorant_examples() {
        let budget = BudgetSpec::default();
        let est = sup_short(0.0, 2, 16, &budget).unwrap();
        assert!((est.lower - 16.0).abs() < 1e-9, "{}", est.lower);
        let est = sup_short(0.5, 2, 16, &budget).unwrap();
        assert!((est.lower - 16.0).abs() < 1e-9, "{}", est.lower);
        // consistency probe against a direct evaluation at v = 1/3
        let est = sup_short(1.0 / 7.0, 2, 64, &budget).unwrap();
        let f = PolynomialFamily::classical(2);
        let probe = eval_sum_point(
            &f,
            &WeightSpec::Unit,
            &TorusVector::new(vec![1.0 / 3.0, 1.0 / 7.0]),
            64,
            0,
            EngineKind::Direct,
        )
        .unwrap();
        assert!(est.lower + 1e-9 >= probe.value.norm());
    }

    #[test]
    fn budget_cap_flags_exhaustion() {
        let f = fam("T^3; T^2; T");
        let budget = BudgetSpec {
            max_evaluations: 1000,
            ..BudgetSpec::default()
        };
        let est = sup_fiber(&f, &WeightSpec::Unit, &TorusVector::new(vec![0.4]), 64, &budget).unwrap();
        assert!(est.budget_exhausted);
        assert!(est.lower <= est.upper);
    }

    #[test]
    fn invalid_budgets_rejected() {
        let f = fam("T^2; T");
        let budget = BudgetSpec {
            coarse_grid: Some(vec![4, 4]),
            ..BudgetSpec::default()
        };
        let err = sup_fiber(&f, &WeightSpec::Unit, &TorusVector::new(vec![0.4]), 8, &budget).unwrap_err();
        assert!(matches!(err, SupError::InvalidBudget(_)));
        let budget = BudgetSpec {
            max_evaluations: 0,
            ..BudgetSpec::default()
        };
        let err = sup_fiber(&f, &WeightSpec::Unit, &TorusVector::new(vec![0.4]), 8, &budget).unwrap_err();
        assert!(matches!(err, SupError::InvalidBudget(_)));
    }
}
