//! Exact extreme discrepancy of finite sequences in `[0,1)`.
//!
//! The extreme discrepancy at length `N` is
//! `D_N = sup_{0≤a<b≤1} |#{n: ξ_n ∈ (a,b)} − (b−a)N|`, a supremum over *open*
//! intervals. With the one-sided counting functions `G(t) = #{ξ_n < t} − Nt`
//! and `H(t) = #{ξ_n ≤ t} − Nt`, the count error of `(a,b)` is
//! `G(b) − H(a)`; both functions decrease linearly between breakpoints, so
//! the supremum is attained in the closure of endpoint pairs drawn from the
//! breakpoints (the sorted points together with 0 and 1), with one-sided
//! limits swapping `G` and `H`. [`exact_discrepancy`] scans those corner
//! candidates in `O(N log N)` and also reports witness intervals.
//! [`brute_force_discrepancy`] is the independent oracle: it tries every
//! interval with endpoints at sample points ± 1e-7 and `{0,1}`.

use rayon::prelude::*;

use crate::polyfam::PolynomialFamily;
use crate::sumeval::{e, EvalError, TorusVector};
use crate::supopt::BudgetSpec;

/// Errors from discrepancy computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiscrepancyError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("sequence value {0} outside [0, 1)")]
    ValueOutOfRange(f64),
    #[error("G must be >= 1")]
    ZeroFrequencyCap,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A finite sequence of points in `[0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSequence {
    values: Vec<f64>,
}

impl PointSequence {
    pub fn new(values: Vec<f64>) -> Result<Self, DiscrepancyError> {
        for &v in &values {
            if !(0.0..1.0).contains(&v) {
                return Err(DiscrepancyError::ValueOutOfRange(v));
            }
        }
        Ok(PointSequence { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Parses one-value-per-line text (blank lines and `#` comments allowed).
    pub fn from_text(text: &str) -> Result<Self, DiscrepancyError> {
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| DiscrepancyError::ValueOutOfRange(f64::NAN))?;
            values.push(v);
        }
        Self::new(values)
    }

    /// Serializes as one value per line, round-trip exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }
}

/// Exact extreme discrepancy with witness intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyResult {
    /// `D_N`, unnormalized (between 0 and N).
    pub value: f64,
    /// Breakpoint endpoints `(a, b)` realizing the positive (excess) part.
    pub excess_interval: (f64, f64),
    /// Breakpoint endpoints realizing the negative (deficit) part.
    pub deficit_interval: (f64, f64),
}

struct Breakpoints {
    t: Vec<f64>,
    /// `G_i = #{ξ < t_i} − N t_i`
    g: Vec<f64>,
    /// `H_i = #{ξ ≤ t_i} − N t_i`
    h: Vec<f64>,
}

fn breakpoints(sorted: &[f64]) -> Breakpoints {
    let n = sorted.len();
    let nf = n as f64;
    let mut t = Vec::with_capacity(n + 2);
    let mut g = Vec::with_capacity(n + 2);
    let mut h = Vec::with_capacity(n + 2);
    let mut push = |v: f64, lt: usize, le: usize| {
        t.push(v);
        g.push(lt as f64 - nf * v);
        h.push(le as f64 - nf * v);
    };
    if sorted.first().is_none_or(|&v| v > 0.0) {
        push(0.0, 0, 0);
    }
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == v {
            j += 1;
        }
        push(v, i, j);
        i = j;
    }
    push(1.0, n, n);
    Breakpoints { t, g, h }
}

/// Corner-candidate scan over breakpoints; returns the exact supremum for
/// open intervals.
fn discrepancy_scan(sorted: &[f64]) -> DiscrepancyResult {
    let bp = breakpoints(sorted);
    let m = bp.t.len();
    // prefix extrema of H (exact endpoints) and of G restricted to t > 0
    // (one-sided limits a -> t_i^-), with the positions attaining them
    let mut pos_best = f64::NEG_INFINITY;
    let mut pos_witness = (0.0, 1.0);
    let mut neg_best = f64::NEG_INFINITY;
    let mut neg_witness = (0.0, 1.0);

    let mut min_h = f64::INFINITY;
    let mut min_h_at = 0usize;
    let mut min_g0 = f64::INFINITY;
    let mut min_g0_at = 0usize;
    let mut max_h = f64::NEG_INFINITY;
    let mut max_h_at = 0usize;
    let mut max_g0 = f64::NEG_INFINITY;
    let mut max_g0_at = 0usize;

    for j in 0..m {
        // subtrahend candidates with a strictly below t_j: include the
        // a -> t_j^- limit (G_j) when t_j > 0
        if bp.t[j] > 0.0 {
            if bp.g[j] < min_g0 {
                min_g0 = bp.g[j];
                min_g0_at = j;
            }
            if bp.g[j] > max_g0 {
                max_g0 = bp.g[j];
                max_g0_at = j;
            }
        }
        // b = t_j exact: count is strict below b, i.e. minuend G_j; the
        // subtrahend H_i needs i < j, G-limits allow i <= j
        {
            let (sub, at) = if min_h <= min_g0 {
                (min_h, min_h_at)
            } else {
                (min_g0, min_g0_at)
            };
            if sub.is_finite() && bp.g[j] - sub > pos_best {
                pos_best = bp.g[j] - sub;
                pos_witness = (bp.t[at], bp.t[j]);
            }
            let (bigsub, bat) = if max_h >= max_g0 {
                (max_h, max_h_at)
            } else {
                (max_g0, max_g0_at)
            };
            if bigsub.is_finite() && bigsub - bp.g[j] > neg_best {
                neg_best = bigsub - bp.g[j];
                neg_witness = (bp.t[bat], bp.t[j]);
            }
        }
        // H-based candidates at exact a = t_j may pair with later b
        if bp.h[j] < min_h {
            min_h = bp.h[j];
            min_h_at = j;
        }
        if bp.h[j] > max_h {
            max_h = bp.h[j];
            max_h_at = j;
        }
        // b -> t_j^+ limit (minuend H_j), valid while t_j < 1; subtrahends
        // may sit at i <= j
        if bp.t[j] < 1.0 {
            let (sub, at) = if min_h <= min_g0 {
                (min_h, min_h_at)
            } else {
                (min_g0, min_g0_at)
            };
            if bp.h[j] - sub > pos_best {
                pos_best = bp.h[j] - sub;
                pos_witness = (bp.t[at], bp.t[j]);
            }
            let (bigsub, bat) = if max_h >= max_g0 {
                (max_h, max_h_at)
            } else {
                (max_g0, max_g0_at)
            };
            if bigsub - bp.h[j] > neg_best {
                neg_best = bigsub - bp.h[j];
                neg_witness = (bp.t[bat], bp.t[j]);
            }
        }
    }
    DiscrepancyResult {
        value: pos_best.max(neg_best).max(0.0),
        excess_interval: pos_witness,
        deficit_interval: neg_witness,
    }
}

/// Exact extreme discrepancy `D_N` of the sequence, with witness intervals
/// given by breakpoint coordinates.
pub fn exact_discrepancy(seq: &PointSequence) -> Result<DiscrepancyResult, DiscrepancyError> {
    if seq.is_empty() {
        return Err(DiscrepancyError::EmptySequence);
    }
    let mut sorted = seq.values.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(discrepancy_scan(&sorted))
}

/// Value-only scan over an already sorted slice (no allocation beyond the
/// breakpoint pass); used by the fiber search.
fn discrepancy_value_sorted(sorted: &[f64]) -> f64 {
    // one-sided-limit identity: D = max_i (i - N ξ_(i)) + max_i (N ξ_(i) - (i-1))
    // for open intervals; cross-checked against the corner scan in tests
    let n = sorted.len();
    let nf = n as f64;
    let mut dplus = f64::NEG_INFINITY;
    let mut dminus = f64::NEG_INFINITY;
    for (i, &v) in sorted.iter().enumerate() {
        let rank = (i + 1) as f64;
        dplus = dplus.max(rank - nf * v);
        dminus = dminus.max(nf * v - (rank - 1.0));
    }
    (dplus + dminus).max(0.0)
}

/// Brute-force oracle over the endpoint grid: base endpoints are the sample
/// points and `{0, 1}`; each endpoint is additionally perturbed by `± 1e-7`
/// (clipped to `[0,1]`) to realize the one-sided open-interval limits, with
/// the interval length measured at the base endpoints. Every interval is
/// counted directly. Ground truth for [`exact_discrepancy`] at small `N`,
/// provided distinct sample values are separated by more than `2e-7`.
pub fn brute_force_discrepancy(seq: &PointSequence) -> Result<f64, DiscrepancyError> {
    if seq.is_empty() {
        return Err(DiscrepancyError::EmptySequence);
    }
    let mut sorted = seq.values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let mut base: Vec<f64> = vec![0.0, 1.0];
    base.extend_from_slice(&sorted);
    base.sort_by(f64::total_cmp);
    base.dedup();
    let count_lt = |t: f64| sorted.partition_point(|&v| v < t);
    // #{a < ξ < b} for the literal open interval
    let count_open = |a: f64, b: f64| count_lt(b).saturating_sub(sorted.partition_point(|&v| v <= a));
    let mut best = 0.0f64;
    for i in 0..base.len() {
        for j in i..base.len() {
            let (p, q) = (base[i], base[j]);
            let length = (q - p) * nf;
            for a in [p, (p - 1e-7).max(0.0)] {
                for b in [q, (q + 1e-7).min(1.0)] {
                    if a >= b {
                        continue;
                    }
                    let err = count_open(a, b) as f64 - length;
                    best = best.max(err.abs());
                }
            }
        }
    }
    Ok(best)
}

/// The Erdős–Turán majorant
/// `3 (N/(G+1) + Σ_{g≤G} (1/g) |Σ_n e(g ξ_n)|)`, evaluated as stated.
pub fn erdos_turan_bound(seq: &PointSequence, g_cap: u32) -> Result<f64, DiscrepancyError> {
    if g_cap == 0 {
        return Err(DiscrepancyError::ZeroFrequencyCap);
    }
    let n = seq.len() as f64;
    let mut sum = n / (g_cap as f64 + 1.0);
    for g in 1..=g_cap {
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for &x in &seq.values {
            s += e(crate::sumeval::frac(g as f64 * x));
        }
        sum += s.norm() / g as f64;
    }
    Ok(3.0 * sum)
}

/// Fractional parts `{Σ_j x_j φ_j(n) + Σ_j y_j φ_{k+j}(n)}` for
/// `n = K+1 ..= K+N`, computed with the fixed-point engine's exact
/// wrap-around phases.
pub fn polynomial_fractional_parts(
    family: &PolynomialFamily,
    x: &TorusVector,
    y: &TorusVector,
    n: u64,
    shift: i64,
) -> Result<PointSequence, DiscrepancyError> {
    if x.dim() + y.dim() != family.d() {
        return Err(DiscrepancyError::Eval(EvalError::DimensionMismatch {
            x_dim: x.dim(),
            y_dim: y.dim(),
            d: family.d(),
        }));
    }
    let coords = x.concat(y);
    let values = crate::sumeval::fixed_point_phases(family, coords.coords(), n, shift);
    Ok(PointSequence { values })
}

/// Estimate of `sup_{y ∈ T_{d-k}} D_φ(x, y; N)`.
#[derive(Debug, Clone)]
pub struct DiscSupEstimate {
    /// Best exactly-computed discrepancy found.
    pub lower: f64,
    /// `lower`-side scan maximum plus a modulus-of-continuity slack; the
    /// slack is heuristic (flagged) because point displacement can cross
    /// interval endpoints.
    pub upper: f64,
    pub witness: TorusVector,
    pub evaluations: u64,
    pub mesh: Vec<f64>,
    /// Always true for a nonempty fiber: `upper` rests on the heuristic
    /// continuity model described above.
    pub heuristic_upper: bool,
    pub budget_exhausted: bool,
}

/// Grid-plus-refinement maximization of the exact discrepancy over the fiber.
pub fn sup_discrepancy_fiber(
    family: &PolynomialFamily,
    x: &TorusVector,
    n: u64,
    budget: &BudgetSpec,
) -> Result<DiscSupEstimate, DiscrepancyError> {
    let d = family.d();
    let k = x.dim();
    assert!(k <= d, "x has more coordinates than the family");
    let m = d - k;
    if n == 0 {
        return Err(DiscrepancyError::EmptySequence);
    }
    if m == 0 {
        let seq = polynomial_fractional_parts(family, x, &TorusVector::zero(0), n, 0)?;
        let r = exact_discrepancy(&seq)?;
        return Ok(DiscSupEstimate {
            lower: r.value,
            upper: r.value,
            witness: TorusVector::zero(0),
            evaluations: 1,
            mesh: Vec::new(),
            heuristic_upper: false,
            budget_exhausted: false,
        });
    }

    // max |φ_{k+j}(t)| over the window, for displacement control
    let maxphi: Vec<f64> = family.polys()[k..]
        .iter()
        .map(|p| (1..=n as i64).map(|t| p.eval_abs_f64(t)).fold(0.0, f64::max))
        .collect();
    // per-coordinate displacement target: delta_j <= 1/(4 m sqrt(N))
    let sqrt_n = (n as f64).sqrt();
    let mut resolutions: Vec<usize> = match &budget.coarse_grid {
        Some(grid) => {
            assert_eq!(grid.len(), m, "coarse_grid arity");
            grid.clone()
        }
        None => maxphi
            .iter()
            .map(|&p| ((2.0 * m as f64 * sqrt_n * p).ceil() as usize).max(2))
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
    for r in &mut resolutions {
        if *r > 1 && *r % 2 == 1 {
            *r += 1;
        }
    }
    let mesh: Vec<f64> = resolutions.iter().map(|&r| 1.0 / r as f64).collect();
    let delta: f64 = maxphi
        .iter()
        .zip(&mesh)
        .map(|(p, h)| p * h / 2.0)
        .sum::<f64>()
        .min(0.5);

    let total_cells: usize = resolutions.iter().product();
    let cells_per_chunk = 1usize.max(4096 / n.max(1) as usize).max(8);
    let chunks = total_cells.div_ceil(cells_per_chunk);

    // (lower candidate with cell index, heuristic upper candidate)
    let results: Vec<(f64, u64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * cells_per_chunk;
            let stop = (start + cells_per_chunk).min(total_cells);
            let mut sorted = vec![0.0f64; n as usize];
            let mut best = (f64::NEG_INFINITY, 0u64);
            let mut upper_cand = 0.0f64;
            for flat in start..stop {
                let y = fiber_cell_coords(&resolutions, flat as u64);
                let seq = crate::sumeval::fixed_point_phases(
                    family,
                    &[x.coords(), y.as_slice()].concat(),
                    n,
                    0,
                );
                sorted.copy_from_slice(&seq);
                sorted.sort_by(f64::total_cmp);
                let v = discrepancy_value_sorted(&sorted);
                if v > best.0 {
                    best = (v, flat as u64);
                }
                // points within delta of the wrap can cross it
                let wrappers = sorted.iter().filter(|&&p| p < delta || p > 1.0 - delta).count();
                upper_cand = upper_cand.max(v + 2.0 * delta * n as f64 + wrappers as f64);
            }
            (best.0, best.1, upper_cand)
        })
        .collect();

    let mut best = (f64::NEG_INFINITY, 0u64);
    let mut upper = 0.0f64;
    for &(v, idx, uc) in &results {
        if v > best.0 || (v == best.0 && idx < best.1) {
            best = (v, idx);
        }
        upper = upper.max(uc);
    }
    let mut evaluations = total_cells as u64;

    // local refinement around the best cell, improving `lower` only
    let mut best_y = fiber_cell_coords(&resolutions, best.1);
    let mut best_v = best.0;
    let mut radius: Vec<f64> = mesh.clone();
    let refine_rounds = 3usize;
    let refine_res = 8usize;
    let mut sorted = vec![0.0f64; n as usize];
    for _ in 0..refine_rounds {
        let mut improved_y = best_y.clone();
        let mut improved_v = best_v;
        let local_cells = (refine_res + 1).pow(m as u32);
        for flat in 0..local_cells {
            let mut rem = flat;
            let mut y = best_y.clone();
            for j in 0..m {
                let step = rem % (refine_res + 1);
                rem /= refine_res + 1;
                let offset = (step as f64 / refine_res as f64 - 0.5) * 2.0 * radius[j];
                y[j] = crate::sumeval::frac(y[j] + offset);
            }
            let seq =
                crate::sumeval::fixed_point_phases(family, &[x.coords(), y.as_slice()].concat(), n, 0);
            sorted.copy_from_slice(&seq);
            sorted.sort_by(f64::total_cmp);
            let v = discrepancy_value_sorted(&sorted);
            evaluations += 1;
            if v > improved_v {
                improved_v = v;
                improved_y = y;
            }
        }
        best_v = improved_v;
        best_y = improved_y;
        for r in &mut radius {
            *r /= refine_res as f64 / 2.0;
        }
    }

    let upper = upper.max(best_v).min(n as f64);
    Ok(DiscSupEstimate {
        lower: best_v,
        upper,
        witness: TorusVector::new(best_y),
        evaluations,
        mesh,
        heuristic_upper: true,
        budget_exhausted,
    })
}

fn fiber_cell_coords(resolutions: &[usize], flat: u64) -> Vec<f64> {
    let m = resolutions.len();
    let mut rem = flat;
    let mut out = vec![0.0; m];
    for j in (0..m).rev() {
        let idx = rem % resolutions[j] as u64;
        rem /= resolutions[j] as u64;
        out[j] = idx as f64 / resolutions[j] as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn seq(values: &[f64]) -> PointSequence {
        PointSequence::new(values.to_vec()).unwrap()
    }

    #[test]
    fn quarter_grid_has_unit_discrepancy() {
        let r = exact_discrepancy(&seq(&[0.0, 0.25, 0.5, 0.75])).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn coincident_points_maximize() {
        let r = exact_discrepancy(&seq(&[0.5, 0.5, 0.5])).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
        // witness: a shrinking interval around 0.5
        assert_eq!(r.excess_interval, (0.5, 0.5));
    }

    #[test]
    fn single_point() {
        let r = exact_discrepancy(&seq(&[0.5])).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn points_at_zero_cannot_be_captured() {
        // open intervals with a >= 0 never contain 0, so two points at the
        // origin force a deficit of 2 on (0, 1)
        let r = exact_discrepancy(&seq(&[0.0, 0.0])).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert_eq!(r.deficit_interval, (0.0, 1.0));
    }

    #[test]
    fn empty_sequence_is_an_error() {
        assert!(matches!(
            exact_discrepancy(&PointSequence::new(vec![]).unwrap()),
            Err(DiscrepancyError::EmptySequence)
        ));
    }

    #[test]
    fn matches_brute_force_on_random_sequences() {
        for trial in 0..60u64 {
            let mut rng = crate::rng::sample_rng(42, trial);
            let n = 1 + (rng.random::<u32>() % 40) as usize;
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    // mix of clustered rationals and 2^-20 dyadics; distinct
                    // values stay farther apart than the oracle perturbation
                    if rng.random::<f64>() < 0.3 {
                        (rng.random::<u32>() % 8) as f64 / 8.0
                    } else {
                        (rng.random::<u32>() % (1 << 20)) as f64 / (1u32 << 20) as f64
                    }
                })
                .collect();
            let s = seq(&values);
            let exact = exact_discrepancy(&s).unwrap().value;
            let oracle = brute_force_discrepancy(&s).unwrap();
            assert!(
                (exact - oracle).abs() < 1e-9,
                "trial {trial}: exact {exact} vs oracle {oracle} ({values:?})"
            );
        }
    }

    #[test]
    fn corner_scan_agrees_with_rank_identity() {
        for trial in 0..200u64 {
            let mut rng = crate::rng::sample_rng(17, trial);
            let n = 1 + (rng.random::<u32>() % 64) as usize;
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < 0.25 {
                        (rng.random::<u32>() % 6) as f64 / 6.0
                    } else {
                        rng.random()
                    }
                })
                .collect();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let scan = discrepancy_scan(&sorted).value;
            let rank = discrepancy_value_sorted(&sorted);
            assert!((scan - rank).abs() < 1e-10, "trial {trial}: {scan} vs {rank}");
        }
    }

    #[test]
    fn interior_points_have_discrepancy_at_least_one() {
        for trial in 0..30u64 {
            let mut rng = crate::rng::sample_rng(7, trial);
            let n = 1 + (rng.random::<u32>() % 32) as usize;
            let values: Vec<f64> = (0..n).map(|_| 0.001 + 0.998 * rng.random::<f64>()).collect();
            let r = exact_discrepancy(&seq(&values)).unwrap();
            assert!(r.value >= 1.0 - 1e-9);
            assert!(r.value <= n as f64 + 1e-9);
        }
    }

    #[test]
    fn duplicating_points_doubles_discrepancy() {
        for trial in 0..20u64 {
            let mut rng = crate::rng::sample_rng(13, trial);
            let n = 1 + (rng.random::<u32>() % 24) as usize;
            let values: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let single = exact_discrepancy(&seq(&values)).unwrap().value;
            let mut doubled = values.clone();
            doubled.extend_from_slice(&values);
            let double = exact_discrepancy(&seq(&doubled)).unwrap().value;
            assert_eq!(double, 2.0 * single, "trial {trial}");
        }
    }

    #[test]
    fn erdos_turan_on_uniform_grid() {
        let n = 50usize;
        let values: Vec<f64> = (1..=n).map(|i| (i as f64 / n as f64) % 1.0).collect();
        let s = seq(&values);
        let b = erdos_turan_bound(&s, n as u32 - 1).unwrap();
        assert!((b - 3.0).abs() < 1e-9, "{b}");
        // G = 1 instantiation
        let b1 = erdos_turan_bound(&s, 1).unwrap();
        let direct: num_complex::Complex64 = values.iter().map(|&x| e(x)).sum();
        assert!((b1 - 3.0 * (n as f64 / 2.0 + direct.norm())).abs() < 1e-9);
    }

    #[test]
    fn erdos_turan_majorizes_exact() {
        for trial in 0..25u64 {
            let mut rng = crate::rng::sample_rng(23, trial);
            let n = 2 + (rng.random::<u32>() % 48) as usize;
            let values: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let s = seq(&values);
            let exact = exact_discrepancy(&s).unwrap().value;
            for g in [1u32, 5, 20] {
                let et = erdos_turan_bound(&s, g).unwrap();
                assert!(et >= exact - 1e-9, "trial {trial} G={g}: {et} < {exact}");
            }
        }
    }

    #[test]
    fn golden_ratio_sequence_bounded_by_erdos_turan() {
        let phi = 0.618_033_988_7f64;
        let values: Vec<f64> = (1..=100).map(|n| crate::sumeval::frac(n as f64 * phi)).collect();
        let s = seq(&values);
        let exact = exact_discrepancy(&s).unwrap().value;
        let et = erdos_turan_bound(&s, 20).unwrap();
        assert!(et >= exact);
    }

    #[test]
    fn fractional_parts_examples() {
        let f = PolynomialFamily::parse("T^2").unwrap();
        let s = polynomial_fractional_parts(
            &f,
            &TorusVector::new(vec![0.5]),
            &TorusVector::zero(0),
            4,
            0,
        )
        .unwrap();
        assert_eq!(s.values(), &[0.5, 0.0, 0.5, 0.0]);

        let s = polynomial_fractional_parts(
            &f,
            &TorusVector::new(vec![0.0]),
            &TorusVector::zero(0),
            4,
            0,
        )
        .unwrap();
        assert_eq!(s.values(), &[0.0; 4]);

        let f2 = PolynomialFamily::parse("T^2; T").unwrap();
        let s = polynomial_fractional_parts(
            &f2,
            &TorusVector::new(vec![0.5]),
            &TorusVector::new(vec![0.5]),
            4,
            0,
        )
        .unwrap();
        assert_eq!(s.values(), &[0.0; 4]);

        assert!(matches!(
            polynomial_fractional_parts(&f2, &TorusVector::zero(0), &TorusVector::zero(0), 4, 0),
            Err(DiscrepancyError::Eval(EvalError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn shifted_fractional_parts_match_shifted_window() {
        let f = PolynomialFamily::classical(2);
        let u = TorusVector::new(vec![0.3, 0.61]);
        let shifted =
            polynomial_fractional_parts(&f, &u, &TorusVector::zero(0), 5, 7).unwrap();
        let wide = polynomial_fractional_parts(&f, &u, &TorusVector::zero(0), 12, 0).unwrap();
        assert_eq!(shifted.values(), &wide.values()[7..]);
    }

    #[test]
    fn fiber_sup_finds_parity_collapse() {
        let f = PolynomialFamily::parse("T^2; T").unwrap();
        let est = sup_discrepancy_fiber(
            &f,
            &TorusVector::new(vec![0.5]),
            4,
            &BudgetSpec::default(),
        )
        .unwrap();
        // y = 1/2 collapses all points to 0, giving D = N
        assert_eq!(est.lower, 4.0);
        assert!(est.upper >= 4.0);
        assert!(est.heuristic_upper);
        assert!((est.witness.coords()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fiber_sup_at_zero() {
        let f = PolynomialFamily::parse("T^2; T").unwrap();
        let est = sup_discrepancy_fiber(
            &f,
            &TorusVector::new(vec![0.0]),
            4,
            &BudgetSpec::default(),
        )
        .unwrap();
        assert_eq!(est.lower, 4.0);
    }

    #[test]
    fn fiber_sup_single_point() {
        let f = PolynomialFamily::parse("T^2; T").unwrap();
        for x in [0.1, 0.37, 0.9] {
            let est = sup_discrepancy_fiber(
                &f,
                &TorusVector::new(vec![x]),
                1,
                &BudgetSpec::default(),
            )
            .unwrap();
            assert_eq!(est.lower, 1.0, "x={x}");
            assert!(est.upper >= 1.0);
        }
    }

    #[test]
    fn sequence_text_round_trip() {
        let s = seq(&[0.125, 0.99, 0.0, 1.0 / 3.0]);
        let t = s.to_text();
        let back = PointSequence::from_text(&t).unwrap();
        assert_eq!(s, back);
        assert!(PointSequence::from_text("0.5\n2.5\n").is_err());
        let with_comments = PointSequence::from_text("# header\n0.25\n\n0.75\n").unwrap();
        assert_eq!(with_comments.values(), &[0.25, 0.75]);
    }
}
