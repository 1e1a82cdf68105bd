//! q-Pochhammer symbols, Gaussian binomials and the Jacobi triple product.
//!
//! Every argument is a [`SignedMonomial`] `±t^e`. A base is a positive
//! t-exponent, so base `2` means `q` and base `4` means `q²`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::series::{QSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QError {
    #[error("negative Pochhammer index {0}")]
    NegativeIndex(i64),
    #[error("infinite product with non-positive base {0} diverges")]
    Divergent(i64),
    #[error("q-binomial index out of range: n = {n}, m = {m}")]
    OutOfRange { n: i64, m: i64 },
    #[error("triple product with A = {a} ≡ 0 mod M = {modulus} vanishes")]
    DegenerateTheta { modulus: i64, a: i64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `sign·t^e` with `sign = ±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedMonomial {
    pub sign: i8,
    pub e: i64,
}

impl SignedMonomial {
    pub fn new(sign: i8, e: i64) -> Self {
        assert!(sign == 1 || sign == -1, "sign must be ±1");
        SignedMonomial { sign, e }
    }

    pub fn one() -> Self {
        Self::new(1, 0)
    }

    /// `q^n`, i.e. `t^(2n)`.
    pub fn q_pow(n: i64) -> Self {
        Self::new(1, 2 * n)
    }

    pub fn neg(self) -> Self {
        Self::new(-self.sign, self.e)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::new(self.sign * o.sign, self.e + o.e)
    }

    pub fn inv(self) -> Self {
        Self::new(self.sign, -self.e)
    }

    pub fn div(self, o: Self) -> Self {
        self.mul(o.inv())
    }

    /// Multiply by `t^d`.
    pub fn shift(self, d: i64) -> Self {
        Self::new(self.sign, self.e + d)
    }

    pub fn pow(self, n: i64) -> Self {
        let sign = if self.sign < 0 && n.rem_euclid(2) == 1 { -1 } else { 1 };
        Self::new(sign, self.e * n)
    }

    pub fn is_one(self) -> bool {
        self.sign == 1 && self.e == 0
    }

    pub fn to_series(self) -> QSeries {
        QSeries::monomial(self.sign as i64, self.e)
    }
}

impl fmt::Display for SignedMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign < 0 { "-" } else { "" };
        match self.e {
            0 => write!(f, "{s}1"),
            2 => write!(f, "{s}q"),
            e if e % 2 == 0 => write!(f, "{s}q^{}", e / 2),
            e => write!(f, "{s}q^({e}/2)"),
        }
    }
}

impl FromStr for SignedMonomial {
    type Err = String;

    /// Accepts `1`, `-1`, `q`, `-q`, `q^3`, `-q^3/2`, `-q^(3/2)`, `q^-1`.
    fn from_str(raw: &str) -> Result<Self, String> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, s.strip_prefix('+').unwrap_or(&s)),
        };
        if body == "1" {
            return Ok(Self::new(sign, 0));
        }
        let rest = body.strip_prefix('q').ok_or_else(|| format!("cannot parse monomial {raw:?}"))?;
        if rest.is_empty() {
            return Ok(Self::new(sign, 2));
        }
        let exp = rest.strip_prefix('^').ok_or_else(|| format!("cannot parse monomial {raw:?}"))?;
        let exp = exp.trim_start_matches('(').trim_end_matches(')');
        let bad = || format!("cannot parse exponent in {raw:?}");
        let e = match exp.split_once('/') {
            Some((num, "2")) => num.parse::<i64>().map_err(|_| bad())?,
            Some(_) => return Err(bad()),
            None => 2 * exp.parse::<i64>().map_err(|_| bad())?,
        };
        Ok(Self::new(sign, e))
    }
}

/// `a·(1 − x)` without a general multiplication.
fn times_one_minus(a: &QSeries, x: SignedMonomial) -> QSeries {
    a.sub(&a.shift(x.e).scale(x.sign as i64))
}

/// Exact product of the factors `(1 − x·t^(i·base))` whose exponent is
/// negative, plus the index of the first non-negative factor.
fn laurent_head(x: SignedMonomial, base: i64, n: Option<i64>) -> (QSeries, i64) {
    let mut head = QSeries::one();
    let mut i = 0;
    while x.e + i * base < 0 && n.is_none_or(|n| i < n) {
        head = times_one_minus(&head, x.shift(i * base));
        i += 1;
    }
    (head, i)
}

/// `(x; t^base)_n` truncated at `prec`.
pub fn poch_finite(x: SignedMonomial, base: i64, n: i64, prec: i64) -> Result<QSeries, QError> {
    if n < 0 {
        return Err(QError::NegativeIndex(n));
    }
    if base <= 0 {
        return Err(QError::Divergent(base));
    }
    let (head, start) = laurent_head(x, base, Some(n));
    let inner_prec = prec - head.valuation().unwrap_or(0);
    let mut acc = QSeries::one().truncate(inner_prec);
    for i in start..n {
        let e = x.e + i * base;
        if e >= inner_prec {
            break;
        }
        acc = times_one_minus(&acc, x.shift(i * base));
    }
    Ok(head.mul(&acc).truncate(prec))
}

/// `(x; t^base)_∞` truncated at `prec`. Negative `x.e` is allowed; the
/// finitely many Laurent factors are multiplied exactly first.
pub fn poch_infinite(x: SignedMonomial, base: i64, prec: i64) -> Result<QSeries, QError> {
    if base <= 0 {
        return Err(QError::Divergent(base));
    }
    let (head, start) = laurent_head(x, base, None);
    let inner_prec = prec - head.valuation().unwrap_or(0);
    let mut acc = QSeries::one().truncate(inner_prec);
    let mut i = start;
    loop {
        let e = x.e + i * base;
        if e >= inner_prec || acc.is_zero() {
            break;
        }
        acc = times_one_minus(&acc, x.shift(i * base));
        i += 1;
    }
    Ok(head.mul(&acc).truncate(prec))
}

/// `1/(x; t^base)_n`.
pub fn inv_poch_finite(x: SignedMonomial, base: i64, n: i64, prec: i64) -> Result<QSeries, QError> {
    let p = poch_finite(x, base, n, prec + 2 * laurent_depth(x, base, Some(n)))?;
    Ok(p.invert()?.truncate(prec))
}

/// `1/(x; t^base)_∞`.
pub fn inv_poch_infinite(x: SignedMonomial, base: i64, prec: i64) -> Result<QSeries, QError> {
    let p = poch_infinite(x, base, prec + 2 * laurent_depth(x, base, None))?;
    Ok(p.invert()?.truncate(prec))
}

/// Absolute valuation of the Laurent head, used to over-provision inverses.
fn laurent_depth(x: SignedMonomial, base: i64, n: Option<i64>) -> i64 {
    let (head, _) = laurent_head(x, base, n);
    -head.valuation().unwrap_or(0)
}

/// Gaussian binomial `[n, m]` in `t^base`.
pub fn qbinom(n: i64, m: i64, base: i64, prec: i64) -> Result<QSeries, QError> {
    if m < 0 || n < 0 || m > n {
        return Err(QError::OutOfRange { n, m });
    }
    if base <= 0 {
        return Err(QError::Divergent(base));
    }
    // Pascal rule [i, j] = [i−1, j−1] + t^(j·base)·[i−1, j], row by row.
    let mut row: Vec<QSeries> = vec![QSeries::one()];
    for i in 1..=n {
        let mut next = Vec::with_capacity((i + 1) as usize);
        for j in 0..=i {
            let left = if j >= 1 { row[(j - 1) as usize].clone() } else { QSeries::zero(crate::series::EXACT) };
            let up = if j < i { row[j as usize].shift(j * base) } else { QSeries::zero(crate::series::EXACT) };
            next.push(left.add(&up).truncate(prec));
        }
        row = next;
    }
    Ok(row[m as usize].truncate(prec))
}

/// `(t^A, t^(M−A), t^M; t^M)_∞`.
pub fn triple_product(m: i64, a: i64, prec: i64) -> Result<QSeries, QError> {
    if m <= 0 {
        return Err(QError::Divergent(m));
    }
    if a.rem_euclid(m) == 0 {
        return Err(QError::DegenerateTheta { modulus: m, a });
    }
    // A Laurent head in one factor is compensated by extra terms in the others.
    let x = poch_infinite(SignedMonomial::new(1, a), m, prec)?;
    let y = poch_infinite(SignedMonomial::new(1, m - a), m, prec)?;
    let extra = -x.valuation().unwrap_or(0).min(0) - y.valuation().unwrap_or(0).min(0);
    let x = poch_infinite(SignedMonomial::new(1, a), m, prec + extra)?;
    let y = poch_infinite(SignedMonomial::new(1, m - a), m, prec + extra)?;
    let z = poch_infinite(SignedMonomial::new(1, m), m, prec + extra)?;
    Ok(x.mul(&y).mul(&z).truncate(prec))
}

/// `Σ_ℓ (−1)^ℓ t^(M·ℓ(ℓ−1)/2 + A·ℓ)` over all `ℓ ∈ ℤ`.
pub fn theta_sum(m: i64, a: i64, prec: i64) -> Result<QSeries, QError> {
    if m <= 0 {
        return Err(QError::Divergent(m));
    }
    let exp = |l: i64| m * l * (l - 1) / 2 + a * l;
    // Past the vertex the exponent grows monotonically in |ℓ|.
    let mut hi = 0;
    while !(exp(hi) >= prec && exp(hi) <= exp(hi + 1) && hi > 0) {
        hi += 1;
    }
    let mut lo = 0;
    while !(exp(lo) >= prec && exp(lo) <= exp(lo - 1) && lo < 0) {
        lo -= 1;
    }
    let terms = (lo - 2..=hi + 2).map(|l| {
        let c: i64 = if l.rem_euclid(2) == 0 { 1 } else { -1 };
        (exp(l), c.into())
    });
    Ok(QSeries::from_terms(terms, prec))
}

/// Euler product `(q;q)_∞` on the t-grid.
pub fn euler(prec: i64) -> QSeries {
    poch_infinite(SignedMonomial::q_pow(1), 2, prec).expect("base is positive")
}

/// `1/(q;q)_∞`.
pub fn inv_euler(prec: i64) -> QSeries {
    euler(prec).invert().expect("Euler product has constant term 1")
}
