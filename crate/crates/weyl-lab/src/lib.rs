//! A numerical laboratory for polynomial exponential sums.
//!
//! The crate evaluates sums `T_{a,φ}(x, y; N) = Σ_n a_n e(Σ_j u_j φ_j(n))`
//! for families `φ` of distinct nonconstant integer polynomials, and measures
//! the statistics that hybrid mean value theory is about: suprema over fiber
//! coordinates, superlevel-set measures, moments `M_{k,ρ}`, box counts, and
//! extreme discrepancy — each with either an exact algorithm or a certified
//! lower/upper pair.
//!
//! Module map:
//!
//! * [`polyfam`] — exact polynomial families, Wronskian test, closed-form
//!   exponents (`s(d)`, `σ_k`, `μ`, `μ_V`, `μ_θ`, `μ_d`, `Δ_W`, `Δ_CS`).
//! * [`sumeval`] — three precision-controlled sum engines with certified
//!   error bounds.
//! * [`supopt`] — certified estimation of fiber suprema
//!   `sup_y |T(x, y; N)|` via Lipschitz grids plus gradient ascent.
//! * [`discrepancy`] — exact extreme discrepancy, the Erdős–Turán majorant,
//!   and discrepancy fiber suprema.
//! * [`explab`] — the experiment layer: Monte Carlo moments and measures,
//!   box counting, exponent fitting, quadrature checks.
//! * [`rng`] — counter-based per-sample randomness and deterministic
//!   aggregation, so results are independent of thread count.

pub mod discrepancy;
pub mod explab;
pub mod polyfam;
pub mod rng;
pub mod sumeval;
pub mod supopt;

pub use discrepancy::{
    brute_force_discrepancy, erdos_turan_bound, exact_discrepancy, polynomial_fractional_parts,
    sup_discrepancy_fiber, DiscSupEstimate, DiscrepancyError, DiscrepancyResult, PointSequence,
};
pub use explab::{
    box_count_experiment, dilation_invariance_check, discrepancy_moment_run, fit_exponent,
    level_set_moment_exponent, measure_superlevel, measure_superlevel_multi, moment_estimate,
    moment_run, pointwise_majorant, short_moment_run, BoxCountReport, ExplabError, ExponentFit,
    MeasureEstimate, MomentEstimate, SampleRecord, TestFunction, TrigPoly,
};
pub use polyfam::{
    exponent_report, individual_bound, ExponentReport, FamilyError, IntPolynomial,
    PolynomialFamily, WeightSpec,
};
pub use sumeval::{
    compare_engines, eval_sum, eval_sum_point, shift_coefficients, EngineKind, EvalError,
    SumValue, TorusVector,
};
pub use supopt::{lipschitz_bounds, sup_fiber, sup_short, BudgetSpec, SupEstimate, SupError};
