//! Polynomial families and their closed-form exponents.
//!
//! A [`PolynomialFamily`] is an ordered tuple of distinct nonconstant integer
//! polynomials `(φ_1, …, φ_d)`. All arithmetic here is exact: coefficients are
//! unbounded integers and every exponent in an [`ExponentReport`] is an exact
//! rational. Nothing in this module touches floating point except
//! [`individual_bound`], which evaluates a majorant shape.
//!
//! The ordering of a family is significant and preserved verbatim: the tail
//! degree sum `σ_k` counts the degrees *after* position `k`, so `(T^2, T)`
//! and `(T, T^2)` report different exponents for the same `k`. The order-free
//! variant `σ̃_k` (sum of the `d−k` largest degrees) is reported alongside.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

/// Errors from parsing and validating polynomial families.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("empty family: no polynomials given")]
    EmptyFamily,
    #[error("constant polynomial at position {0}: every member must have degree >= 1")]
    ConstantPolynomial(usize),
    #[error("duplicate polynomial at positions {0} and {1}")]
    DuplicatePolynomial(usize, usize),
    #[error("family has {found} polynomials, expected {expected}")]
    CountMismatch { expected: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

/// Errors from exponent computations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExponentError {
    #[error("k = {k} out of range 1..={d}")]
    KOutOfRange { k: usize, d: usize },
    #[error("theta = {0} outside (0, 1]")]
    ThetaOutOfRange(Rational64),
    #[error("nu = {nu} out of range 2..={d}")]
    NuOutOfRange { nu: usize, d: usize },
}

/// Univariate polynomial over the integers, constant term first.
///
/// The coefficient vector never carries trailing zeros; the zero polynomial is
/// the empty vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn zero() -> Self {
        IntPolynomial { coeffs: Vec::new() }
    }

    pub fn from_coeffs<I, T>(coeffs: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        let mut coeffs: Vec<BigInt> = coeffs.into_iter().map(Into::into).collect();
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    /// The monomial `c * T^k`.
    pub fn monomial<T: Into<BigInt>>(c: T, k: usize) -> Self {
        let c: BigInt = c.into();
        if c.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = c;
        IntPolynomial { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        IntPolynomial::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i)),
        )
    }

    /// Exact evaluation by Horner's rule.
    pub fn eval_big(&self, t: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn eval_i64(&self, t: i64) -> BigInt {
        self.eval_big(&BigInt::from(t))
    }

    /// `|φ(t)|` as f64; exact conversion of the exact value, so accurate to
    /// one rounding.
    pub fn eval_abs_f64(&self, t: i64) -> f64 {
        self.eval_i64(t).magnitude().to_f64().unwrap_or(f64::INFINITY)
    }

    /// `φ(t)` as f64, accurate to one rounding of the exact value.
    pub fn eval_f64(&self, t: i64) -> f64 {
        let v = self.eval_i64(t);
        v.to_f64().unwrap_or(if v.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        })
    }

    /// Coefficients reduced modulo 2^64 in two's complement, for wrapping
    /// fixed-point phase evaluation.
    pub(crate) fn coeffs_mod_2_64(&self) -> Vec<u64> {
        let modulus = BigInt::one() << 64;
        self.coeffs
            .iter()
            .map(|c| {
                let r = c.mod_floor(&modulus);
                let (_, digits) = r.to_u64_digits();
                digits.first().copied().unwrap_or(0)
            })
            .collect()
    }
}

impl std::ops::Add for &IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPolynomial::from_coeffs((0..n).map(|i| {
            let a = self.coeffs.get(i).cloned().unwrap_or_default();
            let b = rhs.coeffs.get(i).cloned().unwrap_or_default();
            a + b
        }))
    }
}

impl std::ops::Sub for &IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: &IntPolynomial) -> IntPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPolynomial::from_coeffs((0..n).map(|i| {
            let a = self.coeffs.get(i).cloned().unwrap_or_default();
            let b = rhs.coeffs.get(i).cloned().unwrap_or_default();
            a - b
        }))
    }
}

impl std::ops::Mul for &IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return IntPolynomial::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPolynomial::from_coeffs(out)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}")?;
                    }
                    if i == 1 {
                        write!(f, "T")?;
                    } else {
                        write!(f, "T^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for IntPolynomial {
    type Err = FamilyError;

    /// Parses the family grammar for a single polynomial: integer
    /// coefficients, variable `T`, `^` for powers, e.g. `2T^3 - T + 5`.
    fn from_str(s: &str) -> Result<Self, FamilyError> {
        let bad = |msg: &str| FamilyError::Parse(format!("{msg} in {s:?}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty polynomial"));
        }
        let mut terms: Vec<(BigInt, usize)> = Vec::new();
        let bytes = compact.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let mut sign = 1i32;
            while i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                if bytes[i] == b'-' {
                    sign = -sign;
                }
                i += 1;
            }
            if i == bytes.len() {
                return Err(bad("dangling sign"));
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut coeff = if i > start {
                BigInt::from_str(&compact[start..i]).map_err(|e| bad(&e.to_string()))?
            } else {
                BigInt::one()
            };
            if sign < 0 {
                coeff = -coeff;
            }
            if i < bytes.len() && bytes[i] == b'*' {
                i += 1;
            }
            let mut power = 0usize;
            if i < bytes.len() && (bytes[i] == b'T' || bytes[i] == b't') {
                i += 1;
                power = 1;
                if i < bytes.len() && bytes[i] == b'^' {
                    i += 1;
                    let ps = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == ps {
                        return Err(bad("missing exponent after ^"));
                    }
                    power = compact[ps..i]
                        .parse::<usize>()
                        .map_err(|e| bad(&e.to_string()))?;
                }
            } else if i == start {
                return Err(bad("expected coefficient or T"));
            }
            terms.push((coeff, power));
        }
        let top = terms.iter().map(|(_, p)| *p).max().unwrap_or(0);
        let mut coeffs = vec![BigInt::zero(); top + 1];
        for (c, p) in terms {
            coeffs[p] += c;
        }
        Ok(IntPolynomial::from_coeffs(coeffs))
    }
}

/// Ordered family `φ = (φ_1, …, φ_d)` of distinct nonconstant integer
/// polynomials. The order is *significant*: it defines `σ_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialFamily {
    polys: Vec<IntPolynomial>,
}

impl PolynomialFamily {
    pub fn new(polys: Vec<IntPolynomial>) -> Result<Self, FamilyError> {
        if polys.is_empty() {
            return Err(FamilyError::EmptyFamily);
        }
        for (i, p) in polys.iter().enumerate() {
            if p.degree().unwrap_or(0) < 1 {
                return Err(FamilyError::ConstantPolynomial(i + 1));
            }
        }
        for i in 0..polys.len() {
            for j in i + 1..polys.len() {
                if polys[i] == polys[j] {
                    return Err(FamilyError::DuplicatePolynomial(i + 1, j + 1));
                }
            }
        }
        Ok(PolynomialFamily { polys })
    }

    /// Parses a semicolon-separated family description, e.g. `"T^3; T^2; T"`.
    pub fn parse(text: &str) -> Result<Self, FamilyError> {
        let polys = text
            .split(';')
            .map(|s| s.parse::<IntPolynomial>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(polys)
    }

    /// Parses and checks that the description lists exactly `d` polynomials.
    pub fn parse_with_count(text: &str, d: usize) -> Result<Self, FamilyError> {
        let fam = Self::parse(text)?;
        if fam.d() != d {
            return Err(FamilyError::CountMismatch {
                expected: d,
                found: fam.d(),
            });
        }
        Ok(fam)
    }

    /// The classical system `(T, T^2, …, T^d)`.
    pub fn classical(d: usize) -> Self {
        PolynomialFamily {
            polys: (1..=d).map(|j| IntPolynomial::monomial(1, j)).collect(),
        }
    }

    pub fn d(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[IntPolynomial] {
        &self.polys
    }

    /// Degrees `e_j = deg φ_j` in family order.
    pub fn degrees(&self) -> Vec<usize> {
        self.polys.iter().map(|p| p.degree().unwrap()).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap()
    }

    /// Whether the degree multiset is a permutation of `{1, …, d}`.
    pub fn has_classical_degrees(&self) -> bool {
        let mut degs = self.degrees();
        degs.sort_unstable();
        degs.iter().enumerate().all(|(i, &e)| e == i + 1)
    }

    /// Wronskian `W(T; φ) = det(φ_i^{(j-1)})`, computed exactly.
    ///
    /// Identical vanishing is decided by checking the result against the zero
    /// polynomial.
    pub fn wronskian(&self) -> IntPolynomial {
        let d = self.d();
        let mut rows: Vec<Vec<IntPolynomial>> = Vec::with_capacity(d);
        for p in &self.polys {
            let mut row = Vec::with_capacity(d);
            let mut cur = p.clone();
            for j in 0..d {
                if j > 0 {
                    cur = cur.derivative();
                }
                row.push(cur.clone());
            }
            rows.push(row);
        }
        // Laplace expansion along columns, memoized on the row subset. The
        // column index is determined by how many rows remain.
        let full: u32 = if d == 32 { u32::MAX } else { (1u32 << d) - 1 };
        let mut memo: HashMap<u32, IntPolynomial> = HashMap::new();
        fn minor(
            rows_mask: u32,
            d: usize,
            mat: &[Vec<IntPolynomial>],
            memo: &mut HashMap<u32, IntPolynomial>,
        ) -> IntPolynomial {
            if rows_mask == 0 {
                return IntPolynomial::from_coeffs([1]);
            }
            if let Some(hit) = memo.get(&rows_mask) {
                return hit.clone();
            }
            let size = rows_mask.count_ones() as usize;
            let col = d - size;
            let mut acc = IntPolynomial::zero();
            let mut pos = 0usize;
            for r in 0..d {
                if rows_mask & (1 << r) == 0 {
                    continue;
                }
                let sub = minor(rows_mask & !(1 << r), d, mat, memo);
                let term = &mat[r][col] * &sub;
                acc = if pos.is_multiple_of(2) { &acc + &term } else { &acc - &term };
                pos += 1;
            }
            memo.insert(rows_mask, acc.clone());
            acc
        }
        minor(full, d, &rows, &mut memo)
    }
}

impl fmt::Display for PolynomialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.polys.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Complex weights `a = (a_n)`: either `a_n = 1` for all `n`, or a finite
/// table `a_1, …, a_M`. Evaluation past the table is an error, never an
/// extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Unit,
    Table(Vec<Complex64>),
}

impl WeightSpec {
    /// Weight for index `n` (1-based), `None` when uncovered.
    pub fn weight(&self, n: i64) -> Option<Complex64> {
        match self {
            WeightSpec::Unit => Some(Complex64::new(1.0, 0.0)),
            WeightSpec::Table(t) => {
                if n >= 1 && (n as usize) <= t.len() {
                    Some(t[n as usize - 1])
                } else {
                    None
                }
            }
        }
    }

    /// Whether every index in `k+1 ..= k+n` is covered.
    pub fn covers(&self, k: i64, n: u64) -> bool {
        match self {
            WeightSpec::Unit => true,
            WeightSpec::Table(t) => k >= 0 && k.checked_add(n as i64).is_some_and(|hi| hi as usize <= t.len()),
        }
    }

    /// `Σ |a_n|` over the window `k+1 ..= k+n`.
    pub fn abs_sum(&self, k: i64, n: u64) -> f64 {
        match self {
            WeightSpec::Unit => n as f64,
            WeightSpec::Table(t) => (1..=n as i64)
                .map(|i| {
                    let idx = (k + i) as usize;
                    t.get(idx.wrapping_sub(1)).map(|a| a.norm()).unwrap_or(0.0)
                })
                .sum(),
        }
    }

    pub fn max_abs(&self, k: i64, n: u64) -> f64 {
        match self {
            WeightSpec::Unit => 1.0,
            WeightSpec::Table(t) => (1..=n as i64)
                .map(|i| {
                    let idx = (k + i) as usize;
                    t.get(idx.wrapping_sub(1)).map(|a| a.norm()).unwrap_or(0.0)
                })
                .fold(0.0, f64::max),
        }
    }
}

/// All closed-form exponents of a family at a split position `k`, as exact
/// rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentReport {
    pub d: usize,
    pub k: usize,
    pub theta: Rational64,
    /// `s(d) = d(d+1)/2`.
    pub s: Rational64,
    /// `σ_k = Σ_{j>k} deg φ_j` (order-sensitive).
    pub sigma_k: i64,
    /// `σ̃_k` = sum of the `d−k` largest degrees (order-free).
    pub sigma_tilde_k: i64,
    /// `σ_0 = Σ_j deg φ_j`.
    pub sigma_0: i64,
    /// `δ = min_j deg φ_j`.
    pub delta: i64,
    /// Hybrid mean value exponent `μ(φ,k)`.
    pub mu: Rational64,
    /// Subspace-projection exponent `μ_V(φ,k)`.
    pub mu_v: Rational64,
    /// Hölder-map exponent `μ_θ(φ,k)` at the given `θ`.
    pub mu_theta: Rational64,
    /// Short-interval exponent `μ_d`; present only for classical degree sets.
    pub mu_d: Option<Rational64>,
    pub delta_w: Rational64,
    pub delta_cs: Rational64,
    /// Largest `ρ` covered by the hybrid mean value theorem: `2s(d)+d−k`.
    pub rho_max: Rational64,
}

/// Computes every closed-form exponent for `family` at split `k` and Hölder
/// exponent `theta`.
///
/// The caller is expected to have checked that the Wronskian does not vanish
/// identically; this function performs pure arithmetic.
pub fn exponent_report(
    family: &PolynomialFamily,
    k: usize,
    theta: Rational64,
) -> Result<ExponentReport, ExponentError> {
    let d = family.d();
    if k < 1 || k > d {
        return Err(ExponentError::KOutOfRange { k, d });
    }
    if theta <= Rational64::zero() || theta > Rational64::one() {
        return Err(ExponentError::ThetaOutOfRange(theta));
    }
    let di = d as i64;
    let ki = k as i64;
    let degs = family.degrees();
    let s = Rational64::from_integer(di * (di + 1) / 2);
    let sigma_k: i64 = degs[k..].iter().map(|&e| e as i64).sum();
    let sigma_0: i64 = degs.iter().map(|&e| e as i64).sum();
    let mut sorted = degs.clone();
    sorted.sort_unstable();
    let sigma_tilde_k: i64 = sorted[k..].iter().map(|&e| e as i64).sum();
    let delta = *sorted.first().unwrap() as i64;

    let r = Rational64::from_integer;
    let dk = r(di - ki);
    let mu = (s + r(sigma_k) + dk) / (r(2) * s + dk);
    let mu_v = (s + r(sigma_tilde_k) + dk) / (r(2) * s + dk);
    let mu_theta = (s + r(sigma_0) + r(di) - r(delta + 1) * theta * r(ki))
        / (r(2) * s + r(di) - r(ki) * theta);
    let mu_d = if family.has_classical_degrees() {
        Some(Rational64::one() - r(di) / r(di * di + 2 * di - 1))
    } else {
        None
    };
    let delta_w = (r(2 * sigma_k) + dk + r(1)) / (r(2) * s + dk + r(1));
    let delta_cs = {
        let first = (r(2 * sigma_k) + dk) / (r(2) * s + dk);
        let second = r(sigma_k + 1) / s;
        first.min(second)
    };
    let rho_max = r(2) * s + dk;

    Ok(ExponentReport {
        d,
        k,
        theta,
        s,
        sigma_k,
        sigma_tilde_k,
        sigma_0,
        delta,
        mu,
        mu_v,
        mu_theta,
        mu_d,
        delta_w,
        delta_cs,
        rho_max,
    })
}

/// The individual Weyl-sum bound shape
/// `N^{1+ε} (1/q + 1/N + q N^{-ν})^{1/(d(d-1))}` with the constant taken as 1.
///
/// This is a majorant shape, not a certified constant: the underlying theorem
/// carries an uncontrolled `C(ε)`.
pub fn individual_bound(d: usize, nu: usize, q: u64, n: u64, eps: f64) -> Result<f64, ExponentError> {
    if nu < 2 || nu > d {
        return Err(ExponentError::NuOutOfRange { nu, d });
    }
    let nf = n as f64;
    let qf = q as f64;
    let inner = 1.0 / qf + 1.0 / nf + qf * nf.powi(-(nu as i32));
    let expo = 1.0 / (d as f64 * (d as f64 - 1.0));
    Ok(nf.powf(1.0 + eps) * inner.powf(expo))
}

/// Renders an exact rational as `p/q` (or a bare integer when `q = 1`).
pub fn render_ratio(r: Rational64) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
