//! Evaluation engines for polynomial exponential sums.
//!
//! All three engines compute `T_{a,φ}(x, y; N) = Σ_{n=K+1}^{K+N} a_n e(θ_n)`
//! with `θ_n = Σ_j u_j φ_j(n)`, but they reduce phases mod 1 differently:
//!
//! * [`EngineKind::Direct`] — per-term exact reduction. An f64 coordinate is a
//!   dyadic rational `m/2^E`, so `u·φ(n) mod 1 = (m·φ(n) mod 2^E)/2^E` can be
//!   computed exactly in integer arithmetic; a compensated two-product covers
//!   the common case `|φ(n)| ≤ 2^53` without touching big integers.
//! * [`EngineKind::FixedPoint`] — coordinates quantized to 63 fractional
//!   bits; phases accumulate by wrapping integer multiply-add, which is exact
//!   mod 1 *for the quantized coordinate*. The quantization error
//!   `≤ 2^-63 Σ_j |φ_j(n)|` per term is charged to `error_bound`.
//! * [`EngineKind::DifferenceTable`] — advances `e(p(n))` by the finite
//!   difference recurrence (`deg p` complex multiplications per step) and
//!   resynchronizes from exactly reduced phases every `R` steps.
//!
//! Every [`SumValue`] carries a worst-case absolute `error_bound`; an engine
//! that cannot certify `error_bound ≤ 1e-6·N` refuses with
//! [`EvalError::PhasePrecisionLoss`].

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::polyfam::{IntPolynomial, PolynomialFamily, WeightSpec};
use crate::rng::sample_rng;

const EPS: f64 = f64::EPSILON; // 2^-52
const TAU: f64 = std::f64::consts::TAU;

/// Errors from sum evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("dimension mismatch: x has {x_dim}, y has {y_dim}, family has d = {d}")]
    DimensionMismatch { x_dim: usize, y_dim: usize, d: usize },
    #[error("weight table does not cover n = {from}..={to}")]
    WeightTableTooShort { from: i64, to: i64 },
    #[error("phase precision loss: certified error bound {bound:.3e} exceeds 1e-6*N = {limit:.3e}")]
    PhasePrecisionLoss { bound: f64, limit: f64 },
}

/// Point of the ν-dimensional unit torus; every coordinate reduced to `[0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusVector {
    coords: Vec<f64>,
}

impl TorusVector {
    /// Reduces each coordinate mod 1.
    pub fn new(coords: Vec<f64>) -> Self {
        TorusVector {
            coords: coords.into_iter().map(frac).collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        TorusVector { coords: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Concatenation `(x, y)`.
    pub fn concat(&self, other: &TorusVector) -> TorusVector {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        TorusVector { coords }
    }
}

impl From<Vec<f64>> for TorusVector {
    fn from(coords: Vec<f64>) -> Self {
        TorusVector::new(coords)
    }
}

/// Which phase-reduction engine evaluates the sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Direct,
    FixedPoint,
    DifferenceTable,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [
        EngineKind::Direct,
        EngineKind::FixedPoint,
        EngineKind::DifferenceTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Direct => "direct",
            EngineKind::FixedPoint => "fixed_point",
            EngineKind::DifferenceTable => "difference_table",
        }
    }
}

impl std::str::FromStr for EngineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "direct" => Ok(EngineKind::Direct),
            "fixed_point" => Ok(EngineKind::FixedPoint),
            "difference_table" => Ok(EngineKind::DifferenceTable),
            other => Err(format!("unknown engine {other:?}")),
        }
    }
}

/// An evaluated sum with a certified worst-case absolute error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SumValue {
    pub value: Complex64,
    pub n: u64,
    pub engine: EngineKind,
    /// Worst-case absolute error of `value`, covering phase reduction,
    /// quantization, recurrence drift and summation rounding.
    pub error_bound: f64,
}

/// `e(t) = exp(2πi t)` for `t` in `[0,1)`.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Veltkamp/Dekker two-product: returns `(p, err)` with `a*b = p + err`
/// exactly, valid away from overflow.
#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    const SPLIT: f64 = 134_217_729.0; // 2^27 + 1
    let p = a * b;
    let a1 = a * SPLIT;
    let ahi = a1 - (a1 - a);
    let alo = a - ahi;
    let b1 = b * SPLIT;
    let bhi = b1 - (b1 - b);
    let blo = b - bhi;
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    (p, err)
}

/// Decomposes `x ∈ [0,1)` as `m / 2^E` with `m < 2^53`. Returns `None` for 0.
fn dyadic_parts(x: f64) -> Option<(u64, i64)> {
    debug_assert!((0.0..1.0).contains(&x));
    if x == 0.0 {
        return None;
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mant_bits = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 {
        Some((mant_bits, 1074)) // subnormal
    } else {
        Some(((1u64 << 52) | mant_bits, 1075 - exp_bits))
    }
}

/// `2^e` for `e ∈ [-1074, 1023]`, exact.
fn pow2(e: i64) -> f64 {
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        // subnormal powers of two
        f64::from_bits(1u64 << (e + 1074))
    }
}

/// Exact value of a polynomial at an integer, kept small when it fits.
pub(crate) enum PhiValue {
    Small(i128),
    Big(BigInt),
}

/// Per-polynomial evaluation plan: i128 Horner when coefficients allow,
/// exact big-integer fallback otherwise.
pub(crate) struct PolyEval {
    small: Option<Vec<i128>>,
    big: Vec<BigInt>,
    /// Coefficients mod 2^64, for wrapping fixed-point phases.
    pub wrapped: Vec<u64>,
    /// Absolute coefficients as f64, for value-magnitude majorants.
    abs: Vec<f64>,
}

impl PolyEval {
    pub fn new(poly: &IntPolynomial) -> Self {
        let big: Vec<BigInt> = poly.coeffs().to_vec();
        let small = big
            .iter()
            .map(|c| c.to_i128())
            .collect::<Option<Vec<_>>>()
            .filter(|cs| cs.iter().all(|c| c.abs() < (1i128 << 96)));
        PolyEval {
            small,
            wrapped: poly.coeffs_mod_2_64(),
            abs: big
                .iter()
                .map(|c| c.magnitude().to_f64().unwrap_or(f64::INFINITY))
                .collect(),
            big,
        }
    }

    pub fn value(&self, t: i64) -> PhiValue {
        if let Some(cs) = &self.small {
            let mut acc: i128 = 0;
            let tt = t as i128;
            let mut ok = true;
            for c in cs.iter().rev() {
                match acc.checked_mul(tt).and_then(|v| v.checked_add(*c)) {
                    Some(v) => acc = v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return PhiValue::Small(acc);
            }
        }
        let mut acc = BigInt::zero();
        let tb = BigInt::from(t);
        for c in self.big.iter().rev() {
            acc = acc * &tb + c;
        }
        PhiValue::Big(acc)
    }

    /// `φ(t) mod 2^63`, exact via wrapping arithmetic.
    #[inline]
    pub fn value_mod_2_63(&self, t: i64) -> u64 {
        let tt = t as u64;
        let mut acc = 0u64;
        for &c in self.wrapped.iter().rev() {
            acc = acc.wrapping_mul(tt).wrapping_add(c);
        }
        acc & ((1u64 << 63) - 1)
    }

    /// Upper bound on `|φ(t)|` (sum of absolute terms).
    #[inline]
    pub fn abs_majorant(&self, t: i64) -> f64 {
        let tt = (t as f64).abs();
        let mut acc = 0.0;
        for &c in self.abs.iter().rev() {
            acc = acc * tt + c;
        }
        acc
    }
}

/// Exact `u * φ(t) mod 1` for an f64 coordinate `u ∈ [0,1)`, accurate to a
/// couple of ulps.
pub(crate) fn frac_mul(u: f64, value: &PhiValue) -> f64 {
    match value {
        PhiValue::Small(k) => {
            let k = *k;
            if k.unsigned_abs() <= (1u128 << 53) {
                // two-product path: u*k = p + err exactly
                let (p, err) = two_product(u, k as f64);
                frac(frac(p) + err)
            } else if k.unsigned_abs() < (1u128 << 74) {
                let Some((m, e)) = dyadic_parts(u) else {
                    return 0.0;
                };
                // |m*k| < 2^53 * 2^74 = 2^127
                frac_of_scaled_i128(m as i128 * k, e)
            } else {
                let Some((m, e)) = dyadic_parts(u) else {
                    return 0.0;
                };
                frac_of_scaled_big(BigInt::from(m) * BigInt::from(k), e)
            }
        }
        PhiValue::Big(k) => {
            let Some((m, e)) = dyadic_parts(u) else {
                return 0.0;
            };
            frac_of_scaled_big(BigInt::from(m) * k, e)
        }
    }
}

/// `frac(p / 2^e)` for exact integer `p` with `|p| < 2^127`.
fn frac_of_scaled_i128(p: i128, e: i64) -> f64 {
    if e <= 126 {
        let modulus = 1i128 << e;
        let r = p.rem_euclid(modulus);
        frac(r as f64 * pow2(-e))
    } else {
        // |p| < 2^127 <= 2^e: the value is already in (-1, 1)
        frac(p as f64 * pow2(-e))
    }
}

fn frac_of_scaled_big(p: BigInt, e: i64) -> f64 {
    let modulus = BigInt::one() << e;
    let r = p.mod_floor(&modulus);
    if e <= 64 {
        frac(r.to_u64().map_or(0.0, |v| v as f64) * pow2(-e))
    } else {
        let top = (&r >> (e - 64)).to_u64().unwrap_or(0);
        frac(top as f64 * pow2(-64))
    }
}

/// Shared context: coordinates paired with polynomial evaluation plans.
pub(crate) struct EvalContext<'a> {
    pub coords: Vec<f64>,
    pub polys: Vec<PolyEval>,
    pub weights: &'a WeightSpec,
}

impl<'a> EvalContext<'a> {
    pub fn new(family: &PolynomialFamily, weights: &'a WeightSpec, coords: Vec<f64>) -> Self {
        EvalContext {
            coords,
            polys: family.polys().iter().map(PolyEval::new).collect(),
            weights,
        }
    }

    /// Exactly reduced combined phase `Σ_j u_j φ_j(t) mod 1`.
    pub fn exact_phase(&self, t: i64) -> f64 {
        let mut acc = 0.0;
        for (u, p) in self.coords.iter().zip(&self.polys) {
            if *u != 0.0 {
                acc += frac_mul(*u, &p.value(t));
            }
        }
        frac(acc)
    }

    /// Quantized wrap-around phase, exact mod 1 for 63-bit coordinates.
    #[inline]
    pub fn fixed_point_phase(&self, quant: &[u64], t: i64) -> f64 {
        const MASK: u128 = (1u128 << 63) - 1;
        let mut acc: u64 = 0;
        for (&q, p) in quant.iter().zip(&self.polys) {
            let r = p.value_mod_2_63(t);
            let prod = ((q as u128 * r as u128) & MASK) as u64;
            acc = (acc + prod) & ((1u64 << 63) - 1);
        }
        acc as f64 * pow2(-63)
    }

    /// `Σ_j |φ_j(t)|` majorant.
    pub fn abs_phase_majorant(&self, t: i64) -> f64 {
        self.polys.iter().map(|p| p.abs_majorant(t)).sum()
    }
}

/// Exactly reduced phases of a *partial* coordinate block: the first `k`
/// family polynomials paired with the coordinates of `x`.
pub(crate) struct PartialPhases {
    coords: Vec<f64>,
    polys: Vec<PolyEval>,
}

impl PartialPhases {
    pub fn phase(&self, t: i64) -> f64 {
        let mut acc = 0.0;
        for (u, p) in self.coords.iter().zip(&self.polys) {
            if *u != 0.0 {
                acc += frac_mul(*u, &p.value(t));
            }
        }
        frac(acc)
    }
}

pub(crate) fn phase_context(
    family: &PolynomialFamily,
    x: &TorusVector,
    k: usize,
) -> PartialPhases {
    PartialPhases {
        coords: x.coords().to_vec(),
        polys: family.polys()[..k].iter().map(PolyEval::new).collect(),
    }
}

/// Quantizes a coordinate to 63 fractional bits (round to nearest).
#[inline]
pub(crate) fn quantize63(x: f64) -> u64 {
    debug_assert!((0.0..1.0).contains(&x));
    let v = (x * pow2(63)).round();
    (v as u64) & ((1u64 << 63) - 1)
}

/// Fractional parts of `Σ_j u_j φ_j(t)` for `t = shift+1 ..= shift+n`, using
/// exact 63-bit wrap-around arithmetic on the quantized coordinates.
pub(crate) fn fixed_point_phases(
    family: &PolynomialFamily,
    coords: &[f64],
    n: u64,
    shift: i64,
) -> Vec<f64> {
    let polys: Vec<PolyEval> = family.polys().iter().map(PolyEval::new).collect();
    let quant: Vec<u64> = coords.iter().map(|&c| quantize63(c)).collect();
    const MASK: u128 = (1u128 << 63) - 1;
    (1..=n as i64)
        .map(|i| {
            let t = shift + i;
            let mut acc: u64 = 0;
            for (&q, p) in quant.iter().zip(&polys) {
                let r = p.value_mod_2_63(t);
                acc = (acc + ((q as u128 * r as u128) & MASK) as u64) & ((1u64 << 63) - 1);
            }
            acc as f64 * pow2(-63)
        })
        .collect()
}

fn check_dims(
    family: &PolynomialFamily,
    x: &TorusVector,
    y: &TorusVector,
) -> Result<(), EvalError> {
    if x.dim() + y.dim() != family.d() {
        return Err(EvalError::DimensionMismatch {
            x_dim: x.dim(),
            y_dim: y.dim(),
            d: family.d(),
        });
    }
    Ok(())
}

fn check_weights(weights: &WeightSpec, shift: i64, n: u64) -> Result<(), EvalError> {
    if !weights.covers(shift, n) {
        return Err(EvalError::WeightTableTooShort {
            from: shift + 1,
            to: shift + n as i64,
        });
    }
    Ok(())
}

/// Evaluates `T_{a,φ}(x, y; N)` over `n = K+1 ..= K+N` with the chosen
/// engine. `x` supplies the first `k` coordinates in family order, `y` the
/// remaining `d−k`.
pub fn eval_sum(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    x: &TorusVector,
    y: &TorusVector,
    n: u64,
    shift: i64,
    engine: EngineKind,
) -> Result<SumValue, EvalError> {
    check_dims(family, x, y)?;
    check_weights(weights, shift, n)?;
    if n == 0 {
        return Ok(SumValue {
            value: Complex64::new(0.0, 0.0),
            n,
            engine,
            error_bound: 0.0,
        });
    }
    let ctx = EvalContext::new(family, weights, x.concat(y).coords().to_vec());
    let abs_sum = weights.abs_sum(shift, n);
    let d = family.d() as f64;
    let (value, phase_term_error) = match engine {
        EngineKind::Direct => {
            let mut acc = KahanComplex::default();
            for i in 1..=n as i64 {
                let t = shift + i;
                let a = ctx.weights.weight(t).expect("coverage checked");
                acc.add(a * e(ctx.exact_phase(t)));
            }
            // per-term phase error: d exact reductions (couple ulps each)
            // plus the final frac
            (acc.value(), TAU * (3.0 * d + 4.0) * 0.5 * EPS * abs_sum)
        }
        EngineKind::FixedPoint => {
            let quant: Vec<u64> = ctx.coords.iter().map(|&c| quantize63(c)).collect();
            let mut acc = KahanComplex::default();
            let mut quant_err = 0.0;
            for i in 1..=n as i64 {
                let t = shift + i;
                let a = ctx.weights.weight(t).expect("coverage checked");
                acc.add(a * e(ctx.fixed_point_phase(&quant, t)));
                quant_err += a.norm() * ctx.abs_phase_majorant(t);
            }
            let per_term = TAU * (quant_err * pow2(-63) + abs_sum * pow2(-53));
            (acc.value(), per_term)
        }
        EngineKind::DifferenceTable => {
            let (v, err) = eval_difference_table(&ctx, shift, n, resync_period(family.max_degree()));
            (v, err)
        }
    };
    // e() evaluation and compensated-summation rounding
    let error_bound = phase_term_error + 8.0 * EPS * abs_sum;
    let limit = 1e-6 * n as f64;
    if error_bound > limit {
        return Err(EvalError::PhasePrecisionLoss {
            bound: error_bound,
            limit,
        });
    }
    Ok(SumValue {
        value,
        n,
        engine,
        error_bound,
    })
}

/// Evaluates at a full-dimension point (the `k = d` view).
pub fn eval_sum_point(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    u: &TorusVector,
    n: u64,
    shift: i64,
    engine: EngineKind,
) -> Result<SumValue, EvalError> {
    eval_sum(family, weights, u, &TorusVector::zero(0), n, shift, engine)
}

/// Resynchronization period for the difference-table recurrence.
///
/// The drift of the table scales like `t^deg` in the block offset `t`, so the
/// default period shrinks quickly with the degree; 1024 is only safe for
/// degree ≤ 2 at the certified tolerance.
fn resync_period(degree: usize) -> u64 {
    match degree {
        0 | 1 => 1024,
        2 => 256,
        3 => 32,
        4 => 16,
        _ => 8,
    }
}

fn eval_difference_table(
    ctx: &EvalContext<'_>,
    shift: i64,
    n: u64,
    period: u64,
) -> (Complex64, f64) {
    let deg = ctx.polys.iter().map(|p| p.abs.len().saturating_sub(1)).max().unwrap_or(0);
    let d = ctx.coords.len() as f64;
    let init_phase_err = (3.0 * d + 4.0) * 0.5 * EPS;
    let mul_err = 4.0 * EPS;
    let mut acc = KahanComplex::default();
    let mut err = 0.0;
    let mut t0 = shift + 1;
    let end = shift + n as i64;
    while t0 <= end {
        let blk = ((end - t0 + 1) as u64).min(period);
        if blk <= deg as u64 + 1 {
            for t in t0..t0 + blk as i64 {
                let a = ctx.weights.weight(t).expect("coverage checked");
                acc.add(a * e(ctx.exact_phase(t)));
                err += a.norm() * (TAU * init_phase_err + mul_err);
            }
            t0 += blk as i64;
            continue;
        }
        // table of forward differences of the reduced phases
        let mut level: Vec<f64> = (0..=deg as i64).map(|i| ctx.exact_phase(t0 + i)).collect();
        let mut z: Vec<Complex64> = Vec::with_capacity(deg + 1);
        z.push(e(level[0]));
        for _ in 1..=deg {
            for i in 0..level.len() - 1 {
                level[i] = frac(level[i + 1] - level[i]);
            }
            level.truncate(level.len() - 1);
            z.push(e(level[0]));
        }
        // worst-case value-error per table entry, advanced with the recurrence
        let mut eta: Vec<f64> = (0..=deg)
            .map(|i| TAU * init_phase_err * (1u64 << i) as f64 + mul_err)
            .collect();
        for t in t0..t0 + blk as i64 {
            let a = ctx.weights.weight(t).expect("coverage checked");
            acc.add(a * z[0]);
            err += a.norm() * eta[0];
            for i in 0..deg {
                z[i] = z[i] * z[i + 1];
                eta[i] += eta[i + 1] + mul_err;
            }
        }
        t0 += blk as i64;
    }
    (acc.value(), err)
}

#[derive(Default)]
struct KahanComplex {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

impl KahanComplex {
    #[inline]
    fn add(&mut self, v: Complex64) {
        let t = self.re + v.re;
        self.re_c += if self.re.abs() >= v.re.abs() {
            (self.re - t) + v.re
        } else {
            (v.re - t) + self.re
        };
        self.re = t;
        let t = self.im + v.im;
        self.im_c += if self.im.abs() >= v.im.abs() {
            (self.im - t) + v.im
        } else {
            (v.im - t) + self.im
        };
        self.im = t;
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

/// Coefficients of `Σ_j u_j (T+K)^j` written in powers of `T`, reduced mod 1:
/// returns `(v_0, …, v_{d-1}, u_d)`.
///
/// The classical monomial interpretation is implied: `u_j` multiplies `T^j`.
pub fn shift_coefficients(u: &TorusVector, shift: i64) -> Vec<f64> {
    let d = u.dim();
    let mut out = vec![0.0; d + 1];
    if d == 0 {
        return out;
    }
    let kb = BigInt::from(shift);
    for (i, slot) in out.iter_mut().enumerate().take(d) {
        // v_i = Σ_{j >= max(i,1)} u_j * C(j, i) * K^(j-i) mod 1
        let mut acc = 0.0;
        for j in 1..=d {
            if j < i {
                continue;
            }
            let uj = u.coords()[j - 1];
            if uj == 0.0 {
                continue;
            }
            let coeff = binomial(j, i) * kb.pow((j - i) as u32);
            if coeff.is_zero() {
                continue;
            }
            acc += frac_mul(uj, &PhiValue::Big(coeff));
        }
        *slot = frac(acc);
    }
    out[d] = u.coords()[d - 1];
    out
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Maximum pairwise engine discrepancy over `trials` random points (plus an
/// optional probe point), at length `n`.
pub fn compare_engines(
    family: &PolynomialFamily,
    weights: &WeightSpec,
    probe: Option<&TorusVector>,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<f64, EvalError> {
    let d = family.d();
    let mut worst = 0.0f64;
    let mut check = |u: &TorusVector| -> Result<(), EvalError> {
        let values: Vec<Complex64> = EngineKind::ALL
            .iter()
            .map(|&engine| {
                eval_sum_point(family, weights, u, n, 0, engine).map(|s| s.value)
            })
            .collect::<Result<_, _>>()?;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                worst = worst.max((values[i] - values[j]).norm());
            }
        }
        Ok(())
    };
    if let Some(u) = probe {
        check(u)?;
    }
    for t in 0..trials {
        let mut rng = sample_rng(seed, t);
        let u = TorusVector::new((0..d).map(|_| rng.random::<f64>()).collect());
        check(&u)?;
    }
    Ok(worst)
}
