//! Truncated Laurent series in `t = q^(1/2)` with exact integer coefficients.
//!
//! A [`QSeries`] knows every coefficient of `t^e` for `e < prec` and nothing
//! above. Exponents are always in units of `t`, so `q^n` is `t^(2n)`.
//! Polynomials built from [`QSeries::monomial`] are exact and carry the
//! sentinel precision [`EXACT`].
//!
//! Coefficients live in a dense vector anchored at the lowest nonzero
//! exponent. While every coefficient fits in an `i64` the vector stays in
//! machine integers and products accumulate in `i128`; on overflow the
//! series is promoted to `BigInt` storage.

use std::cmp::{max, min};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

/// Precision of exact (polynomial) series.
pub const EXACT: i64 = 1 << 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("lowest coefficient {0} is not a unit")]
    NotAUnit(BigInt),
    #[error("cannot invert the zero series")]
    EmptySeries,
    #[error("exponent {exponent} is at or above the precision {prec}")]
    PrecisionExceeded { exponent: i64, prec: i64 },
    #[error("inverting an exact series needs an explicit precision")]
    NeedsPrecision,
    #[error("malformed series JSON: {0}")]
    Json(String),
}

#[derive(Clone, Debug)]
enum Coeffs {
    Small(Vec<i64>),
    Big(Vec<BigInt>),
}

impl Coeffs {
    fn len(&self) -> usize {
        match self {
            Coeffs::Small(v) => v.len(),
            Coeffs::Big(v) => v.len(),
        }
    }

    fn get(&self, i: usize) -> BigInt {
        match self {
            Coeffs::Small(v) => BigInt::from(v[i]),
            Coeffs::Big(v) => v[i].clone(),
        }
    }

    fn is_zero_at(&self, i: usize) -> bool {
        match self {
            Coeffs::Small(v) => v[i] == 0,
            Coeffs::Big(v) => v[i].is_zero(),
        }
    }

    fn to_big(&self) -> Vec<BigInt> {
        match self {
            Coeffs::Small(v) => v.iter().map(|&c| BigInt::from(c)).collect(),
            Coeffs::Big(v) => v.clone(),
        }
    }

    fn truncate(&mut self, n: usize) {
        match self {
            Coeffs::Small(v) => v.truncate(n),
            Coeffs::Big(v) => v.truncate(n),
        }
    }
}

/// Saturating precision shift; [`EXACT`] absorbs everything.
fn padd(p: i64, d: i64) -> i64 {
    if p >= EXACT || d >= EXACT {
        EXACT
    } else {
        min(p + d, EXACT)
    }
}

/// Truncated Laurent series in `t`.
///
/// Invariants: the stored vector is empty or has nonzero first and last
/// entries, and every stored exponent is below `prec`.
#[derive(Clone, Debug)]
pub struct QSeries {
    lo: i64,
    c: Coeffs,
    prec: i64,
}

impl PartialEq for QSeries {
    fn eq(&self, other: &Self) -> bool {
        self.prec == other.prec && self.terms() == other.terms()
    }
}

impl Eq for QSeries {}

/// Outcome of a coefficient-wise comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    /// Smallest t-exponent where the coefficients differ.
    Mismatch(i64),
}

impl Comparison {
    pub fn is_equal(self) -> bool {
        self == Comparison::Equal
    }

    pub fn first_mismatch(self) -> Option<i64> {
        match self {
            Comparison::Equal => None,
            Comparison::Mismatch(e) => Some(e),
        }
    }
}

impl QSeries {
    fn build_small(lo: i64, mut v: Vec<i64>, prec: i64) -> Self {
        let keep = max(0, prec.saturating_sub(lo)).min(v.len() as i64) as usize;
        v.truncate(keep);
        while v.last() == Some(&0) {
            v.pop();
        }
        let lead = v.iter().position(|&c| c != 0).unwrap_or(v.len());
        if lead > 0 {
            v.drain(..lead);
        }
        QSeries { lo: lo + lead as i64, c: Coeffs::Small(v), prec }
    }

    fn build_big(lo: i64, mut v: Vec<BigInt>, prec: i64) -> Self {
        let keep = max(0, prec.saturating_sub(lo)).min(v.len() as i64) as usize;
        v.truncate(keep);
        while v.last().is_some_and(|c| c.is_zero()) {
            v.pop();
        }
        let lead = v.iter().position(|c| !c.is_zero()).unwrap_or(v.len());
        if lead > 0 {
            v.drain(..lead);
        }
        let small: Option<Vec<i64>> = v.iter().map(|c| c.to_i64()).collect();
        let c = match small {
            Some(s) => Coeffs::Small(s),
            None => Coeffs::Big(v),
        };
        QSeries { lo: lo + lead as i64, c, prec }
    }

    /// The zero series known up to `prec`.
    pub fn zero(prec: i64) -> Self {
        QSeries { lo: 0, c: Coeffs::Small(Vec::new()), prec }
    }

    /// Exact constant 1.
    pub fn one() -> Self {
        Self::monomial(1, 0)
    }

    /// Exact `c·t^e`.
    pub fn monomial(c: i64, e: i64) -> Self {
        Self::build_small(e, vec![c], EXACT)
    }

    /// Exact `c·t^e` with a big coefficient.
    pub fn monomial_big(c: BigInt, e: i64) -> Self {
        Self::build_big(e, vec![c], EXACT)
    }

    /// Series from `(exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms<I>(terms: I, prec: i64) -> Self
    where
        I: IntoIterator<Item = (i64, BigInt)>,
    {
        let terms: Vec<(i64, BigInt)> =
            terms.into_iter().filter(|(e, c)| *e < prec && !c.is_zero()).collect();
        if terms.is_empty() {
            return Self::zero(prec);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut v = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for (e, c) in terms {
            v[(e - lo) as usize] += c;
        }
        Self::build_big(lo, v, prec)
    }

    /// Series from small coefficients `coeffs[i]` at exponent `lo + i`.
    pub fn from_i64(lo: i64, coeffs: Vec<i64>, prec: i64) -> Self {
        Self::build_small(lo, coeffs, prec)
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec >= EXACT
    }

    pub fn is_zero(&self) -> bool {
        self.c.len() == 0
    }

    /// Lowest stored exponent, `None` for the zero series.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.lo)
        }
    }

    /// Highest stored exponent, `None` for the zero series.
    pub fn degree(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.lo + self.c.len() as i64 - 1)
        }
    }

    /// Coefficient of `t^e`.
    pub fn coeff(&self, e: i64) -> Result<BigInt, SeriesError> {
        if e >= self.prec {
            return Err(SeriesError::PrecisionExceeded { exponent: e, prec: self.prec });
        }
        let i = e - self.lo;
        if i < 0 || i >= self.c.len() as i64 {
            Ok(BigInt::zero())
        } else {
            Ok(self.c.get(i as usize))
        }
    }

    /// Nonzero terms in increasing exponent order.
    pub fn terms(&self) -> Vec<(i64, BigInt)> {
        (0..self.c.len())
            .filter(|&i| !self.c.is_zero_at(i))
            .map(|i| (self.lo + i as i64, self.c.get(i)))
            .collect()
    }

    /// Same series with precision lowered to `min(prec, p)`.
    pub fn truncate(&self, p: i64) -> Self {
        let p = min(p, self.prec);
        let mut out = self.clone();
        out.prec = p;
        let keep = max(0, p - out.lo).min(out.c.len() as i64) as usize;
        if keep < out.c.len() {
            out.c.truncate(keep);
            out = out.renormalized();
        }
        out
    }

    fn renormalized(self) -> Self {
        match self.c {
            Coeffs::Small(v) => Self::build_small(self.lo, v, self.prec),
            Coeffs::Big(v) => Self::build_big(self.lo, v, self.prec),
        }
    }

    /// Multiply by `t^d`.
    pub fn shift(&self, d: i64) -> Self {
        QSeries { lo: self.lo + d, c: self.c.clone(), prec: padd(self.prec, d) }
    }

    /// Substitute `t ↦ t^s`.
    pub fn scale_exponents(&self, s: i64) -> Self {
        assert!(s > 0, "scale factor must be positive");
        let prec = if self.is_exact() { EXACT } else { self.prec * s };
        let terms = self.terms().into_iter().map(|(e, c)| (e * s, c));
        Self::from_terms(terms, prec)
    }

    pub fn scale(&self, k: i64) -> Self {
        match &self.c {
            Coeffs::Small(v) => {
                let s: Option<Vec<i64>> = v.iter().map(|&c| c.checked_mul(k)).collect();
                match s {
                    Some(s) => Self::build_small(self.lo, s, self.prec),
                    None => Self::build_big(
                        self.lo,
                        v.iter().map(|&c| BigInt::from(c) * k).collect(),
                        self.prec,
                    ),
                }
            }
            Coeffs::Big(v) => Self::build_big(self.lo, v.iter().map(|c| c * k).collect(), self.prec),
        }
    }

    pub fn negate(&self) -> Self {
        self.scale(-1)
    }

    fn add_impl(&self, other: &Self, sign: i64) -> Self {
        let prec = min(self.prec, other.prec);
        if other.is_zero() {
            return self.truncate(prec);
        }
        if self.is_zero() {
            return other.scale(sign).truncate(prec);
        }
        let lo = min(self.lo, other.lo);
        let hi = max(self.lo + self.c.len() as i64, other.lo + other.c.len() as i64).min(prec);
        if hi <= lo {
            return Self::zero(prec);
        }
        let n = (hi - lo) as usize;
        if let (Coeffs::Small(a), Coeffs::Small(b)) = (&self.c, &other.c) {
            let mut v = vec![0i64; n];
            let mut ok = true;
            for (i, &x) in a.iter().enumerate() {
                let k = (self.lo - lo) as usize + i;
                if k < n {
                    v[k] = x;
                }
            }
            for (i, &x) in b.iter().enumerate() {
                let k = (other.lo - lo) as usize + i;
                if k < n {
                    match x.checked_mul(sign).and_then(|y| v[k].checked_add(y)) {
                        Some(s) => v[k] = s,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                return Self::build_small(lo, v, prec);
            }
        }
        let mut v = vec![BigInt::zero(); n];
        for (i, x) in self.c.to_big().into_iter().enumerate() {
            let k = (self.lo - lo) as usize + i;
            if k < n {
                v[k] = x;
            }
        }
        for (i, x) in other.c.to_big().into_iter().enumerate() {
            let k = (other.lo - lo) as usize + i;
            if k < n {
                v[k] += x * sign;
            }
        }
        Self::build_big(lo, v, prec)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_impl(other, 1)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_impl(other, -1)
    }

    /// Product; the result precision is exactly what the inputs determine.
    pub fn mul(&self, other: &Self) -> Self {
        let va = self.valuation().unwrap_or(self.prec);
        let vb = other.valuation().unwrap_or(other.prec);
        let prec = min(padd(self.prec, vb), padd(other.prec, va));
        if self.is_zero() || other.is_zero() {
            return Self::zero(prec);
        }
        let lo = self.lo + other.lo;
        let full = self.c.len() + other.c.len() - 1;
        let n = max(0, min(full as i64, prec - lo)) as usize;
        if n == 0 {
            return Self::zero(prec);
        }
        if let (Coeffs::Small(a), Coeffs::Small(b)) = (&self.c, &other.c) {
            if let Some(v) = conv_small(a, b, n) {
                return Self::build_small(lo, v, prec);
            }
        }
        let a = self.c.to_big();
        let b = other.c.to_big();
        let mut v = vec![BigInt::zero(); n];
        for (i, x) in a.iter().enumerate().take(n) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(n - i) {
                if !y.is_zero() {
                    v[i + j] += x * y;
                }
            }
        }
        Self::build_big(lo, v, prec)
    }

    /// Multiplicative inverse; requires a finite precision and a leading
    /// coefficient of ±1. The result is known to `prec − 2·valuation`.
    pub fn invert(&self) -> Result<Self, SeriesError> {
        let v = self.valuation().ok_or(SeriesError::EmptySeries)?;
        if self.is_exact() {
            return Err(SeriesError::NeedsPrecision);
        }
        let lead = self.c.get(0);
        if !lead.abs().is_one() {
            return Err(SeriesError::NotAUnit(lead));
        }
        let prec = self.prec - 2 * v;
        let n = max(0, self.prec - v) as usize;
        let lead_sign: i64 = if lead.is_positive() { 1 } else { -1 };
        if let Coeffs::Small(a) = &self.c {
            if let Some(b) = inv_small(a, lead_sign, n) {
                return Ok(Self::build_small(-v, b, prec));
            }
        }
        let a = self.c.to_big();
        let mut b: Vec<BigInt> = Vec::with_capacity(n);
        for m in 0..n {
            let mut s = if m == 0 { BigInt::one() } else { BigInt::zero() };
            for i in 1..=min(m, a.len() - 1) {
                if !a[i].is_zero() {
                    s -= &a[i] * &b[m - i];
                }
            }
            b.push(s * lead_sign);
        }
        Ok(Self::build_big(-v, b, prec))
    }

    /// Invert after lowering an exact series to `prec`.
    pub fn invert_to(&self, prec: i64) -> Result<Self, SeriesError> {
        self.truncate(prec).invert()
    }

    /// Compare coefficients below `p`.
    pub fn equal_up_to(&self, other: &Self, p: i64) -> Result<Comparison, SeriesError> {
        let bound = min(self.prec, other.prec);
        if p > bound {
            return Err(SeriesError::PrecisionExceeded { exponent: p, prec: bound });
        }
        let d = self.sub(other).truncate(p);
        Ok(match d.valuation() {
            None => Comparison::Equal,
            Some(e) => Comparison::Mismatch(e),
        })
    }

    /// Compare on the common known range.
    pub fn compare(&self, other: &Self) -> Comparison {
        let p = min(self.prec, other.prec);
        self.equal_up_to(other, p).expect("common precision is always admissible")
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = QSeries::one();
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> =
            self.terms().into_iter().map(|(e, c)| json!([e, c.to_string()])).collect();
        json!({ "prec": self.prec, "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<Self, SeriesError> {
        let bad = |m: &str| SeriesError::Json(m.to_string());
        let prec = v.get("prec").and_then(Value::as_i64).ok_or_else(|| bad("missing prec"))?;
        let terms = v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))?;
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            let e = t.get(0).and_then(Value::as_i64).ok_or_else(|| bad("bad exponent"))?;
            let c = t
                .get(1)
                .and_then(Value::as_str)
                .and_then(|s| s.parse::<BigInt>().ok())
                .ok_or_else(|| bad("bad coefficient"))?;
            out.push((e, c));
        }
        Ok(Self::from_terms(out, prec))
    }
}

/// Truncated convolution in `i128`; `None` if any output leaves `i64`.
fn conv_small(a: &[i64], b: &[i64], n: usize) -> Option<Vec<i64>> {
    let mut acc = vec![0i128; n];
    for (i, &x) in a.iter().enumerate().take(n) {
        if x == 0 {
            continue;
        }
        let x = x as i128;
        for (j, &y) in b.iter().enumerate().take(n - i) {
            acc[i + j] = acc[i + j].checked_add(x * y as i128)?;
        }
    }
    acc.into_iter().map(|s| i64::try_from(s).ok()).collect()
}

fn inv_small(a: &[i64], lead_sign: i64, n: usize) -> Option<Vec<i64>> {
    let mut b: Vec<i64> = Vec::with_capacity(n);
    for m in 0..n {
        let mut s: i128 = if m == 0 { 1 } else { 0 };
        for i in 1..=min(m, a.len() - 1) {
            if a[i] != 0 {
                s = s.checked_sub(a[i] as i128 * b[m - i] as i128)?;
            }
        }
        b.push(i64::try_from(s * lead_sign as i128).ok()?);
    }
    Some(b)
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> =
            self.terms().into_iter().map(|(e, c)| format!("{c}*q^({e}/2)")).collect();
        if !self.is_exact() {
            parts.push(format!("O(q^({}/2))", self.prec));
        }
        if parts.is_empty() {
            parts.push("0".to_string());
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        QSeries::add(self, rhs)
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        QSeries::sub(self, rhs)
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        QSeries::mul(self, rhs)
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        self.negate()
    }
}

impl std::iter::Sum for QSeries {
    fn sum<I: Iterator<Item = QSeries>>(iter: I) -> QSeries {
        iter.fold(QSeries::zero(EXACT), |acc, x| acc.add(&x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(prec: i64) -> QSeries {
        QSeries::from_i64(0, (0..prec).map(|i| if i % 2 == 0 { 1 } else { 0 }).collect(), prec)
    }

    #[test]
    fn monomial_conventions() {
        assert_eq!(QSeries::monomial(1, 0).terms(), vec![(0, BigInt::one())]);
        assert_eq!(QSeries::monomial(-1, 2).coeff(2).unwrap(), BigInt::from(-1));
        assert_eq!(QSeries::monomial(2, 1).coeff(1).unwrap(), BigInt::from(2));
        assert!(QSeries::monomial(0, 5).is_zero());
    }

    #[test]
    fn ring_examples() {
        let one_minus_q = QSeries::one().sub(&QSeries::monomial(1, 2));
        let prod = one_minus_q.mul(&geometric(40));
        assert_eq!(prod.compare(&QSeries::one()), Comparison::Equal);
        assert_eq!(prod.prec(), 40);

        let s = geometric(20);
        assert!(s.add(&s.negate()).is_zero());

        let one_plus_q = QSeries::one().add(&QSeries::monomial(1, 2));
        let sq = one_plus_q.mul(&one_plus_q);
        assert_eq!(
            sq.terms(),
            vec![(0, BigInt::from(1)), (2, BigInt::from(2)), (4, BigInt::from(1))]
        );
    }

    #[test]
    fn invert_examples() {
        let one_plus_q = QSeries::one().add(&QSeries::monomial(1, 2)).truncate(20);
        let inv = one_plus_q.invert().unwrap();
        for n in 0..10 {
            let expect = if n % 2 == 0 { 1 } else { -1 };
            assert_eq!(inv.coeff(2 * n).unwrap(), BigInt::from(expect));
        }

        let laurent = QSeries::monomial(1, 2).sub(&QSeries::monomial(1, 4)).truncate(30);
        let inv = laurent.invert().unwrap();
        assert_eq!(inv.valuation(), Some(-2));
        assert_eq!(inv.prec(), 26);
        for e in (-2..26).step_by(2) {
            assert_eq!(inv.coeff(e).unwrap(), BigInt::one());
        }

        let two_plus_q = QSeries::monomial(2, 0).add(&QSeries::monomial(1, 2)).truncate(10);
        assert_eq!(two_plus_q.invert(), Err(SeriesError::NotAUnit(BigInt::from(2))));
        assert_eq!(QSeries::zero(10).invert(), Err(SeriesError::EmptySeries));
        assert_eq!(QSeries::one().invert(), Err(SeriesError::NeedsPrecision));
    }

    #[test]
    fn scale_examples() {
        let a = QSeries::one().add(&QSeries::monomial(1, 2));
        assert_eq!(a.scale_exponents(2), QSeries::one().add(&QSeries::monomial(1, 4)));
        assert_eq!(QSeries::monomial(1, 1).scale_exponents(2), QSeries::monomial(1, 2));
        let b = QSeries::one().sub(&QSeries::monomial(1, 2)).add(&QSeries::monomial(1, 6));
        let c = QSeries::one().sub(&QSeries::monomial(1, 6)).add(&QSeries::monomial(1, 18));
        assert_eq!(b.scale_exponents(3), c);
        assert_eq!(geometric(10).scale_exponents(3).prec(), 30);
    }

    #[test]
    fn coeff_contract() {
        let s = QSeries::one().add(&QSeries::monomial(3, 4)).truncate(12);
        assert_eq!(s.coeff(4).unwrap(), BigInt::from(3));
        assert_eq!(s.coeff(12), Err(SeriesError::PrecisionExceeded { exponent: 12, prec: 12 }));
        assert_eq!(s.equal_up_to(&s, 12), Ok(Comparison::Equal));
        let t = s.add(&QSeries::monomial(1, 7));
        assert_eq!(s.equal_up_to(&t, 12), Ok(Comparison::Mismatch(7)));
        assert!(s.equal_up_to(&t, 13).is_err());
    }

    #[test]
    fn negative_leading_terms_limit_product_precision() {
        let a = QSeries::monomial(1, -4).add(&QSeries::one()).truncate(10);
        let b = geometric(10);
        let p = a.mul(&b);
        assert_eq!(p.prec(), 6);
    }

    #[test]
    fn big_coefficients_promote_and_demote() {
        let big = QSeries::monomial(i64::MAX, 0).truncate(10);
        let sq = big.mul(&big);
        assert_eq!(sq.coeff(0).unwrap(), BigInt::from(i64::MAX) * BigInt::from(i64::MAX));
        let back = sq.sub(&sq).add(&QSeries::monomial(5, 1));
        assert_eq!(back.coeff(1).unwrap(), BigInt::from(5));
    }

    #[test]
    fn rendering() {
        let s = QSeries::monomial(1, 0).sub(&QSeries::monomial(2, 3)).truncate(8);
        assert_eq!(s.to_string(), "1*q^(0/2) + -2*q^(3/2) + O(q^(8/2))");
        let j = s.to_json();
        assert_eq!(j.to_string(), r#"{"prec":8,"terms":[[0,"1"],[3,"-2"]]}"#);
        assert_eq!(QSeries::from_json(&j).unwrap(), s);
    }
}
