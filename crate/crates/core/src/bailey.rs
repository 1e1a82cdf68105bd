//! Bailey pairs and their transforms.
//!
//! A pair relative to `a` stores `α_0..α_N` and `β_0..β_N` as truncated
//! series. Every transform is computed from its closed form with exact
//! monomial arithmetic; divisions are by `1 − m` for a signed monomial `m`
//! and never lose precision. [`verify`] re-checks the defining relation
//! `β_n = Σ_ℓ α_ℓ / ((q)_(n−ℓ) (aq)_(n+ℓ))` numerically.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::multisum::{self, Factor, Level, SumError};
use crate::qfunctions::{inv_poch_finite, inv_poch_infinite, poch_finite, poch_infinite, QError, SignedMonomial};
use crate::series::{QSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaileyError {
    #[error("pole at parameter a = {0}")]
    PoleAtParameter(SignedMonomial),
    #[error("degenerate division: {0}")]
    DegenerateDivision(String),
    #[error("division by a non-unit: {0}")]
    NonUnit(String),
    #[error("β_n has not stabilized below q^{prec_q}: {reason}")]
    NotStabilized { prec_q: String, reason: String },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("unsupported boundary: {0}")]
    UnsupportedBoundary(String),
    #[error("precision: {0}")]
    Precision(String),
    #[error("step precondition: {0}")]
    Precondition(String),
    #[error("recipe: {0}")]
    Recipe(String),
    #[error(transparent)]
    Sum(#[from] SumError),
    #[error(transparent)]
    Q(#[from] QError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

type Result<T> = std::result::Result<T, BaileyError>;

fn q_pow(n: i64) -> SignedMonomial {
    SignedMonomial::q_pow(n)
}

fn times_mono(x: &QSeries, m: SignedMonomial) -> QSeries {
    x.shift(m.e).scale(m.sign as i64)
}

/// `x·(1 − m)`.
fn times_one_minus(x: &QSeries, m: SignedMonomial) -> QSeries {
    x.sub(&times_mono(x, m))
}

/// `x·(1 + m)`.
fn times_one_plus(x: &QSeries, m: SignedMonomial) -> QSeries {
    x.add(&times_mono(x, m))
}

/// `x·(m; t^base)_n`.
fn times_poch(x: &QSeries, m: SignedMonomial, base: i64, n: i64) -> QSeries {
    (0..n).fold(x.clone(), |acc, i| times_one_minus(&acc, m.shift(i * base)))
}

/// `x/(1 − m)` without loss of relative precision.
fn div_one_minus(x: &QSeries, m: SignedMonomial) -> Result<QSeries> {
    if x.is_zero() {
        return Ok(x.clone());
    }
    if m.e == 0 {
        if m.sign > 0 {
            return Err(BaileyError::DegenerateDivision("factor 1 − 1".into()));
        }
        // 1/(1 + 1): exact only when every coefficient is even.
        let two = BigInt::from(2);
        let terms = x.terms();
        if terms.iter().any(|(_, c)| !(c % &two).is_zero()) {
            return Err(BaileyError::NonUnit("1 − (−1) = 2 does not divide".into()));
        }
        return Ok(QSeries::from_terms(terms.into_iter().map(|(e, c)| (e, c / &two)), x.prec()));
    }
    if m.e < 0 {
        // 1/(1 − m) = −m⁻¹/(1 − m⁻¹).
        let inv = m.inv();
        return div_one_minus(&times_mono(x, inv.neg()), inv);
    }
    if x.is_exact() {
        return Err(BaileyError::Precision("division of an exact series by a non-polynomial".into()));
    }
    let prec = x.prec();
    let lo = x.valuation().expect("non-zero");
    let n = (prec - lo).max(0) as usize;
    let e = m.e as usize;
    let mut b: Vec<BigInt> = Vec::with_capacity(n);
    for i in 0..n {
        let mut c = x.coeff(lo + i as i64)?;
        if i >= e {
            if m.sign > 0 {
                c += &b[i - e];
            } else {
                c -= &b[i - e];
            }
        }
        b.push(c);
    }
    Ok(QSeries::from_terms(b.into_iter().enumerate().map(|(i, c)| (lo + i as i64, c)), prec))
}

/// `x/(m; t^base)_n`.
fn div_poch(x: &QSeries, m: SignedMonomial, base: i64, n: i64) -> Result<QSeries> {
    let mut acc = x.clone();
    for i in 0..n {
        acc = div_one_minus(&acc, m.shift(i * base))?;
    }
    Ok(acc)
}

/// Seed families with closed forms for every index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedKind {
    Unit,
    DPrime1,
    DPrime4,
}

impl SeedKind {
    pub fn name(self) -> &'static str {
        match self {
            SeedKind::Unit => "unit",
            SeedKind::DPrime1 => "dprime1",
            SeedKind::DPrime4 => "dprime4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(SeedKind::Unit),
            "dprime1" => Ok(SeedKind::DPrime1),
            "dprime4" => Ok(SeedKind::DPrime4),
            _ => Err(BaileyError::Recipe(format!("unknown seed kind {s:?}"))),
        }
    }

    fn check(a: SignedMonomial) -> Result<()> {
        // (aq)_n or (a²q²;q²)_n vanishes for a = q^(−m).
        if a.sign > 0 && a.e < 0 && a.e % 2 == 0 {
            return Err(BaileyError::PoleAtParameter(a));
        }
        Ok(())
    }

    /// `α_n` relative to `a`, written without the `1/(1 − a)` division.
    pub fn alpha(self, a: SignedMonomial, n: i64, prec: i64) -> Result<QSeries> {
        Self::check(a)?;
        let one = QSeries::one().truncate(prec);
        if n == 0 {
            return Ok(one);
        }
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let a2 = a.pow(2);
        let v = match self {
            // (−1)^n q^C(n,2) (1 − aq^2n) (aq)_(n−1)/(q)_n
            SeedKind::Unit => {
                let v = times_one_minus(&one.shift(n * (n - 1)).scale(sign), a.shift(4 * n));
                div_poch(&times_poch(&v, a.shift(2), 2, n - 1), q_pow(1), 2, n)?
            }
            // (−1)^n q^(n²) (1 − aq^2n)(1 + a)(a²q²;q²)_(n−1)/(q²;q²)_n
            SeedKind::DPrime4 => {
                let v = times_one_minus(&one.shift(2 * n * n).scale(sign), a.shift(4 * n));
                let v = times_one_plus(&v, a);
                div_poch(&times_poch(&v, a2.shift(4), 4, n - 1), q_pow(2), 4, n)?
            }
            // (−1)^n q^(n²−n) (1 − a²q^4n)(a²q²;q²)_(n−1)/(q²;q²)_n
            SeedKind::DPrime1 => {
                let v = times_one_minus(&one.shift(2 * n * n - 2 * n).scale(sign), a2.shift(8 * n));
                div_poch(&times_poch(&v, a2.shift(4), 4, n - 1), q_pow(2), 4, n)?
            }
        };
        Ok(v)
    }

    pub fn beta(self, a: SignedMonomial, n: i64, prec: i64) -> Result<QSeries> {
        Self::check(a)?;
        let one = QSeries::one().truncate(prec);
        match self {
            SeedKind::Unit => Ok(if n == 0 { one } else { QSeries::zero(prec) }),
            SeedKind::DPrime4 => div_poch(&one, q_pow(2), 4, n),
            SeedKind::DPrime1 => div_poch(&one.shift(2 * n), q_pow(2), 4, n),
        }
    }

    pub fn pair(self, a: SignedMonomial, n_max: usize, prec: i64) -> Result<BaileyPair> {
        let alpha = (0..=n_max as i64).map(|n| self.alpha(a, n, prec)).collect::<Result<_>>()?;
        let beta = (0..=n_max as i64).map(|n| self.beta(a, n, prec)).collect::<Result<_>>()?;
        Ok(BaileyPair { a, alpha, beta, prec })
    }
}

/// The unit pair: `β_n = δ_(n,0)`.
pub fn unit_pair(a: SignedMonomial, n_max: usize, prec: i64) -> Result<BaileyPair> {
    SeedKind::Unit.pair(a, n_max, prec)
}

/// `β_n = 1/(q²;q²)_n`.
pub fn pair_dprime4(a: SignedMonomial, n_max: usize, prec: i64) -> Result<BaileyPair> {
    SeedKind::DPrime4.pair(a, n_max, prec)
}

/// `β_n = q^n/(q²;q²)_n`.
pub fn pair_dprime1(a: SignedMonomial, n_max: usize, prec: i64) -> Result<BaileyPair> {
    SeedKind::DPrime1.pair(a, n_max, prec)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaileyPair {
    pub a: SignedMonomial,
    pub alpha: Vec<QSeries>,
    pub beta: Vec<QSeries>,
    /// Working precision the entries were built at (t-units).
    pub prec: i64,
}

impl BaileyPair {
    pub fn n_max(&self) -> usize {
        self.alpha.len() - 1
    }

    fn alpha_at(&self, n: i64) -> QSeries {
        if n < 0 {
            QSeries::zero(self.prec)
        } else {
            self.alpha[n as usize].clone()
        }
    }
}

/// A single transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Bailey lemma, `ρ, σ → ∞`.
    BlInf,
    /// Bailey lemma, `σ → ∞`, finite `ρ`.
    BlRho(SignedMonomial),
    /// Bailey lattice, `ρ, σ → ∞`; `a ↦ a/q`.
    LatticeInf,
    /// `a ↦ a/q`, `β` unchanged.
    Key1,
    /// `a ↦ a/q`, `β_n ↦ q^n β_n`.
    Key2,
    /// `a ↦ aq`, `β` unchanged.
    LovejoyB0,
    /// `a ↦ aq` with parameter `b`.
    Lovejoy(SignedMonomial),
    /// Combined `(q^n + q^(−ℓ))` step; `a` is kept.
    Star,
    /// The `a = 1` form of [`Step::Star`].
    Star1,
}

impl Step {
    pub fn tag(&self) -> &'static str {
        match self {
            Step::BlInf => "BL_INF",
            Step::BlRho(_) => "BL_RHO",
            Step::LatticeInf => "LATTICE_INF",
            Step::Key1 => "KEY1",
            Step::Key2 => "KEY2",
            Step::LovejoyB0 => "LOVEJOY_B0",
            Step::Lovejoy(_) => "LOVEJOY",
            Step::Star => "STAR",
            Step::Star1 => "STAR1",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Step::BlRho(r) => json!({"tag": self.tag(), "rho": r.to_string()}),
            Step::Lovejoy(b) => json!({"tag": self.tag(), "b": b.to_string()}),
            _ => json!({"tag": self.tag()}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let tag = v.get("tag").and_then(Value::as_str).ok_or_else(|| BaileyError::Recipe("step without \"tag\"".into()))?;
        let mono = |key: &str| -> Result<SignedMonomial> {
            let s = v
                .get(key)
                .and_then(Value::as_str)
                .ok_or_else(|| BaileyError::Recipe(format!("{tag} needs \"{key}\"")))?;
            s.parse().map_err(|e| BaileyError::Recipe(format!("bad monomial {s:?}: {e}")))
        };
        Ok(match tag {
            "BL_INF" => Step::BlInf,
            "BL_RHO" => Step::BlRho(mono("rho")?),
            "LATTICE_INF" => Step::LatticeInf,
            "KEY1" => Step::Key1,
            "KEY2" => Step::Key2,
            "LOVEJOY_B0" => Step::LovejoyB0,
            "LOVEJOY" => Step::Lovejoy(mono("b")?),
            "STAR" => Step::Star,
            "STAR1" => Step::Star1,
            _ => return Err(BaileyError::Recipe(format!("unknown step tag {tag:?}"))),
        })
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::BlRho(r) => write!(f, "BL_RHO(rho={r})"),
            Step::Lovejoy(b) => write!(f, "LOVEJOY(b={b})"),
            _ => write!(f, "{}", self.tag()),
        }
    }
}

/// `Σ_(ℓ≤n) w(ℓ)·β_ℓ/(q)_(n−ℓ)` for every `n`.
fn beta_convolve(p: &BaileyPair, w: impl Fn(i64, i64) -> QSeries) -> Result<Vec<QSeries>> {
    let n_max = p.n_max() as i64;
    (0..=n_max)
        .map(|n| {
            let mut acc = QSeries::zero(p.prec);
            for l in 0..=n {
                let b = &p.beta[l as usize];
                if b.is_zero() {
                    continue;
                }
                let term = w(n, l).mul(b);
                acc = acc.add(&div_poch(&term, q_pow(1), 2, n - l)?);
            }
            Ok(acc)
        })
        .collect()
}

/// `(1 − a)(α_n/(1 − aq^2n) − a q^(2n−2) α_(n−1)/(1 − aq^(2n−2)))`.
fn key1_alpha(p: &BaileyPair, n: i64) -> Result<QSeries> {
    let a = p.a;
    let first = div_one_minus(&times_one_minus(&p.alpha_at(n), a), a.shift(4 * n))?;
    if n == 0 {
        return Ok(first);
    }
    let prev = times_mono(&p.alpha_at(n - 1), a.shift(4 * n - 4));
    let second = div_one_minus(&times_one_minus(&prev, a), a.shift(4 * n - 4))?;
    Ok(first.sub(&second))
}

fn require_not_one(a: SignedMonomial, tag: &str) -> Result<()> {
    if a.is_one() {
        return Err(BaileyError::DegenerateDivision(format!("{tag} at a = 1 divides by 1 − a = 0")));
    }
    Ok(())
}

/// Apply one transform.
pub fn apply(step: Step, p: &BaileyPair) -> Result<BaileyPair> {
    let a = p.a;
    let n_max = p.n_max() as i64;
    let ns = 0..=n_max;
    let sgn = |n: i64| if n % 2 == 0 { 1 } else { -1 };
    let (alpha, beta, new_a): (Vec<QSeries>, Vec<QSeries>, SignedMonomial) = match step {
        Step::BlInf => {
            let alpha = ns.map(|n| times_mono(&p.alpha_at(n), a.pow(n).shift(2 * n * n))).collect();
            let beta = beta_convolve(p, |_, l| a.pow(l).shift(2 * l * l).to_series())?;
            (alpha, beta, a)
        }
        Step::BlRho(rho) => {
            // r = aq/ρ.
            let r = a.shift(2).div(rho);
            let w = |l: i64| -> QSeries {
                let m = r.pow(l).shift(l * (l - 1));
                times_poch(&m.to_series().scale(sgn(l)), rho, 2, l)
            };
            let alpha = ns
                .clone()
                .map(|n| div_poch(&w(n).mul(&p.alpha_at(n)), r, 2, n))
                .collect::<Result<_>>()?;
            let inner = beta_convolve(p, |_, l| w(l))?;
            let beta = inner.iter().enumerate().map(|(n, b)| div_poch(b, r, 2, n as i64)).collect::<Result<_>>()?;
            (alpha, beta, a)
        }
        Step::LatticeInf => {
            require_not_one(a, "LATTICE_INF")?;
            let alpha = ns
                .map(|n| Ok(times_mono(&key1_alpha(p, n)?, a.pow(n).shift(2 * n * n - 2 * n))))
                .collect::<Result<_>>()?;
            let beta = beta_convolve(p, |_, l| a.pow(l).shift(2 * l * l - 2 * l).to_series())?;
            (alpha, beta, a.shift(-2))
        }
        Step::Key1 => {
            require_not_one(a, "KEY1")?;
            let alpha = ns.map(|n| key1_alpha(p, n)).collect::<Result<_>>()?;
            (alpha, p.beta.clone(), a.shift(-2))
        }
        Step::Key2 => {
            require_not_one(a, "KEY2")?;
            let alpha = ns
                .map(|n| {
                    let first = div_one_minus(&times_one_minus(&p.alpha_at(n).shift(2 * n), a), a.shift(4 * n))?;
                    if n == 0 {
                        return Ok(first);
                    }
                    let prev = p.alpha_at(n - 1).shift(2 * n - 2);
                    Ok(first.sub(&div_one_minus(&times_one_minus(&prev, a), a.shift(4 * n - 4))?))
                })
                .collect::<Result<_>>()?;
            let beta = p.beta.iter().enumerate().map(|(n, b)| b.shift(2 * n as i64)).collect();
            (alpha, beta, a.shift(-2))
        }
        Step::LovejoyB0 => {
            // (1 − aq^(2n+1))/(1 − aq) Σ_ℓ a^(n−ℓ) q^(n²−ℓ²) α_ℓ.
            let alpha = ns
                .map(|n| {
                    let mut s = QSeries::zero(p.prec);
                    for l in 0..=n {
                        s = s.add(&times_mono(&p.alpha_at(l), a.pow(n - l).shift(2 * (n * n - l * l))));
                    }
                    div_one_minus(&times_one_minus(&s, a.shift(4 * n + 2)), a.shift(2))
                })
                .collect::<Result<_>>()?;
            (alpha, p.beta.clone(), a.shift(2))
        }
        Step::Lovejoy(b) => {
            // (1 − aq^(2n+1))/((1 − aq)(bq)_n) Σ_ℓ (b)_ℓ (aq^(ℓ+1)/b)_(n−ℓ) (−b)^(n−ℓ) q^(C(n,2)−C(ℓ,2)) α_ℓ.
            let c = a.shift(2).div(b);
            let alpha = ns
                .map(|n| {
                    let mut s = QSeries::zero(p.prec);
                    for l in 0..=n {
                        let m = b.neg().pow(n - l).shift(n * (n - 1) - l * (l - 1));
                        let t = times_mono(&p.alpha_at(l), m);
                        let t = times_poch(&times_poch(&t, b, 2, l), c.shift(2 * l), 2, n - l);
                        s = s.add(&t);
                    }
                    let s = times_one_minus(&s, a.shift(4 * n + 2));
                    div_poch(&div_one_minus(&s, a.shift(2))?, b.shift(2), 2, n)
                })
                .collect::<Result<_>>()?;
            let beta = p
                .beta
                .iter()
                .enumerate()
                .map(|(n, x)| {
                    if n == 0 {
                        Ok(x.clone())
                    } else {
                        div_one_minus(&times_one_minus(x, b), b.shift(2 * n as i64))
                    }
                })
                .collect::<Result<_>>()?;
            (alpha, beta, a.shift(2))
        }
        Step::Star | Step::Star1 => {
            if step == Step::Star1 && !a.is_one() {
                return Err(BaileyError::Precondition(format!("STAR1 needs a = 1, got a = {a}")));
            }
            // a^n q^(n²−n) ((1+q^2n) α_n + (1 − aq^2n)(1 − a⁻¹) Σ_(ℓ<n) α_ℓ)
            let alpha = ns
                .map(|n| {
                    let mut v = times_one_plus(&p.alpha_at(n), q_pow(2 * n));
                    if !a.is_one() && n > 0 {
                        let mut s = QSeries::zero(p.prec);
                        for l in 0..n {
                            s = s.add(&p.alpha_at(l));
                        }
                        v = v.add(&times_one_minus(&times_one_minus(&s, a.shift(4 * n)), a.inv()));
                    }
                    times_mono(&v, a.pow(n).shift(2 * n * n - 2 * n))
                })
                .collect();
            let beta = beta_convolve(p, |n, l| {
                let m = a.pow(l).shift(2 * l * l);
                m.shift(2 * n).to_series().add(&m.shift(-2 * l).to_series())
            })?;
            (alpha, beta, a)
        }
    };
    Ok(BaileyPair { a: new_a, alpha, beta, prec: p.prec })
}

/// Outcome of checking the defining relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// First index `n` where the relation fails, with the t-exponent.
    pub failure: Option<(usize, i64)>,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Check `β_n = Σ_ℓ α_ℓ/((q)_(n−ℓ)(aq)_(n+ℓ))` up to `prec` for all stored `n`.
pub fn verify(p: &BaileyPair, prec: i64) -> Result<Verdict> {
    let aq = p.a.shift(2);
    for n in 0..=p.n_max() as i64 {
        let mut rhs = QSeries::zero(p.prec);
        for l in 0..=n {
            let t = div_poch(&p.alpha_at(l), q_pow(1), 2, n - l)?;
            rhs = rhs.add(&div_poch(&t, aq, 2, n + l)?);
        }
        let lhs = &p.beta[n as usize];
        let avail = lhs.prec().min(rhs.prec());
        if avail < prec {
            return Err(BaileyError::Precision(format!("n = {n}: entries exact only below t^{avail}")));
        }
        if let Some(e) = lhs.equal_up_to(&rhs, prec)?.first_mismatch() {
            return Ok(Verdict { failure: Some((n as usize, e)) });
        }
    }
    Ok(Verdict { failure: None })
}

/// β-agreement of `STAR1∘BL_INF` and `BL_INF∘STAR1` on a pair relative to 1.
pub fn commute_check(p: &BaileyPair, prec: i64) -> Result<Verdict> {
    if !p.a.is_one() {
        return Err(BaileyError::Precondition("commutation is stated for pairs relative to 1".into()));
    }
    let one = apply(Step::Star1, &apply(Step::BlInf, p)?)?;
    let two = apply(Step::BlInf, &apply(Step::Star1, p)?)?;
    for (n, (x, y)) in one.beta.iter().zip(&two.beta).enumerate() {
        if let Some(e) = x.equal_up_to(y, prec)?.first_mismatch() {
            return Ok(Verdict { failure: Some((n, e)) });
        }
    }
    Ok(Verdict { failure: None })
}

fn q_str(e: i64) -> String {
    crate::identities::q_units(e).to_string()
}

/// `lim β_n`, cross-checked against `Σ α_ℓ/((q)_∞(aq)_∞)`.
///
/// Both are exact below `prec` once `v(α_ℓ) + 2(N − ℓ + 1) ≥ prec` for every
/// stored `ℓ`, since `1/(q)_m − 1/(q)_∞ = O(q^(m+1))`.
pub fn beta_limit(p: &BaileyPair, prec: i64) -> Result<QSeries> {
    let n = p.n_max() as i64;
    let stalled = |reason: String| BaileyError::NotStabilized { prec_q: q_str(prec), reason };
    if n < 1 {
        return Err(stalled("need at least two β terms".into()));
    }
    for (l, a) in p.alpha.iter().enumerate() {
        if let Some(v) = a.valuation() {
            if v + 2 * (n - l as i64 + 1) < prec {
                return Err(stalled(format!("α_{l} has valuation t^{v}; n_max = {n} is too small")));
            }
        }
    }
    let last = &p.beta[n as usize];
    if let Some(e) = last.equal_up_to(&p.beta[n as usize - 1], prec)?.first_mismatch() {
        return Err(stalled(format!("β_{n} and β_{} differ at q^{}", n - 1, q_str(e))));
    }
    let aq = p.a.shift(2);
    if aq.e <= 0 {
        return Err(BaileyError::DegenerateDivision(format!("(aq)_∞ with a = {}", p.a)));
    }
    let den = inv_poch_infinite(q_pow(1), 2, prec)?.mul(&inv_poch_infinite(aq, 2, prec)?);
    let sum = p.alpha.iter().fold(QSeries::zero(prec), |acc, a| acc.add(a));
    let via_alpha = sum.mul(&den);
    if let Some(e) = last.equal_up_to(&via_alpha, prec)?.first_mismatch() {
        return Err(stalled(format!("α-sum disagrees at q^{}", q_str(e))));
    }
    Ok(last.truncate(prec))
}

/// One step of a chain log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub step: Step,
    pub a: SignedMonomial,
    pub verdict: Verdict,
}

/// Apply `steps` in order, verifying after each.
pub fn run_chain(seed: &BaileyPair, steps: &[Step], prec: i64) -> Result<(BaileyPair, Vec<LogEntry>)> {
    let mut cur = seed.clone();
    let mut log = Vec::with_capacity(steps.len());
    for &s in steps {
        cur = apply(s, &cur)?;
        log.push(LogEntry { step: s, a: cur.a, verdict: verify(&cur, prec)? });
    }
    Ok((cur, log))
}

/// `[BL^(r+1), KEY1, BL^(k−r−j), STAR1^j]` from a pair relative to `q`.
pub fn common_chain(k: i64, r: i64, j: i64) -> Vec<Step> {
    let mut v = vec![Step::BlInf; (r + 1) as usize];
    v.push(Step::Key1);
    v.extend(std::iter::repeat_n(Step::BlInf, (k - r - j) as usize));
    v.extend(std::iter::repeat_n(Step::Star1, j as usize));
    v
}

/// Two-lattice chain behind the coro2 formula, for `j ≥ 1` and `r + j < k`:
/// `[BL^(r+1), LATTICE, BL^(k−r−j−1), LATTICE, BL^(j−1)]`.
pub fn coro2_chain(k: i64, r: i64, j: i64) -> Result<Vec<Step>> {
    if j < 1 || r < 0 || r + j >= k {
        return Err(BaileyError::ParameterOutOfRange("chain form needs j ≥ 1, r ≥ 0 and r + j < k".into()));
    }
    let mut v = vec![Step::BlInf; (r + 1) as usize];
    v.push(Step::LatticeInf);
    v.extend(std::iter::repeat_n(Step::BlInf, (k - r - j - 1) as usize));
    v.push(Step::LatticeInf);
    v.extend(std::iter::repeat_n(Step::BlInf, (j - 1) as usize));
    Ok(v)
}

/// Chain behind the coro3 formula, for `j ≥ 2`, `r ≥ 1`, `r + j < k` and
/// finite `b`, `c`: `[BL_RHO(c), BL^r, LATTICE, BL^(k−r−j−1), LATTICE,
/// BL^(j−2), BL_RHO(b)]`.
pub fn coro3_chain(k: i64, r: i64, j: i64, b: SignedMonomial, c: SignedMonomial) -> Result<Vec<Step>> {
    if j < 2 || r < 1 || r + j >= k {
        return Err(BaileyError::ParameterOutOfRange("chain form needs j ≥ 2, r ≥ 1 and r + j < k".into()));
    }
    let mut v = vec![Step::BlRho(c)];
    v.extend(std::iter::repeat_n(Step::BlInf, r as usize));
    v.push(Step::LatticeInf);
    v.extend(std::iter::repeat_n(Step::BlInf, (k - r - j - 1) as usize));
    v.push(Step::LatticeInf);
    v.extend(std::iter::repeat_n(Step::BlInf, (j - 2) as usize));
    v.push(Step::BlRho(b));
    Ok(v)
}

/// `b` or `c` of the coro3 formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Finite(SignedMonomial),
    Infinity,
}

impl Boundary {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" => Ok(Boundary::Infinity),
            _ => s.parse().map(Boundary::Finite).map_err(|e| BaileyError::Recipe(format!("bad boundary {s:?}: {e}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Finite(m) => write!(f, "{m}"),
            Boundary::Infinity => write!(f, "∞"),
        }
    }
}

/// Result of comparing two evaluated sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub label: String,
    pub first_mismatch: Option<i64>,
}

impl Check {
    pub fn holds(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

fn compare(label: String, lhs: &QSeries, rhs: &QSeries, prec: i64) -> Result<Check> {
    for (side, v) in [("left", lhs), ("right", rhs)] {
        if v.prec() < prec {
            return Err(BaileyError::Precision(format!("{side} side of {label} exact only below t^{}", v.prec())));
        }
    }
    Ok(Check { label, first_mismatch: lhs.equal_up_to(rhs, prec)?.first_mismatch() })
}

/// The `β_(s_(k+1))` factor on the innermost level of a lattice sum.
fn beta_factor(p: &BaileyPair) -> Factor {
    let beta = Arc::new(p.beta.clone());
    Arc::new(move |s, _| Ok(beta[s as usize].clone()))
}

/// Level with `a^s` folded into the monomial.
fn a_level(a: SignedMonomial, quad: i64, lin: i64) -> Level {
    let l = Level::new(quad, lin + a.e);
    if a.sign < 0 {
        l.alternating()
    } else {
        l
    }
}

fn slack(k: i64, j: i64) -> i64 {
    40 + 8 * (k + j)
}

/// Sum the α-side terms over the stored indices; the last term must
/// already lie beyond `prec`.
fn alpha_side(p: &BaileyPair, prec: i64, mut term: impl FnMut(i64) -> Result<QSeries>) -> Result<QSeries> {
    let n = p.n_max() as i64;
    let mut acc = QSeries::zero(prec);
    let mut last_val = None;
    for l in 0..=n {
        let t = term(l)?;
        last_val = t.valuation();
        acc = acc.add(&t);
    }
    if let Some(v) = last_val {
        if v < prec {
            return Err(BaileyError::Precision(format!("α-side term ℓ = {n} still reaches t^{v}; raise n_max")));
        }
    }
    Ok(acc)
}

fn check_a(a: SignedMonomial) -> Result<()> {
    if !(a.is_one() || a == q_pow(1)) {
        return Err(BaileyError::ParameterOutOfRange(format!("a ∈ {{1, q}} required, got {a}")));
    }
    Ok(())
}

/// The one-lattice consequence with `k + 1` summation indices.
pub fn check_corolattice(p: &BaileyPair, k: i64, r: i64, prec: i64) -> Result<Check> {
    if k < 1 || r < -1 || r > k {
        return Err(BaileyError::ParameterOutOfRange("k ≥ 1 and −1 ≤ r ≤ k required".into()));
    }
    check_a(p.a)?;
    let a = p.a;
    let w = prec + slack(k, 0);
    let mut levels: Vec<Level> = (1..=k + 1)
        .map(|i| {
            let lin = if i <= k - r { -2 } else { 0 };
            let l = a_level(a, 2, lin);
            if i <= k {
                l.den(q_pow(1), 2)
            } else {
                l
            }
        })
        .collect();
    let last = levels.pop().unwrap().factor(beta_factor(p)).max_index(p.n_max() as i64);
    levels.push(last);
    let lhs = multisum::eval(&levels, prec)?;
    let m = k - r;
    let rhs = alpha_side(p, w, |l| {
        // a^((k+1)ℓ) q^((k+1)ℓ² − (k−r)ℓ) Σ_(i≤k−r) (aq^2ℓ)^i α_ℓ
        let mono = a.pow((k + 1) * l).shift(2 * ((k + 1) * l * l - m * l));
        let geo: QSeries = (0..=m).map(|i| a.pow(i).shift(4 * l * i).to_series()).sum();
        Ok(times_mono(&p.alpha_at(l).mul(&geo), mono))
    })?;
    let rhs = rhs.mul(&inv_poch_infinite(a.shift(2), 2, w)?);
    compare(format!("corolattice k={k} r={r} a={a}"), &lhs, &rhs, prec)
}

/// Monomial polynomial `Σ c_m a^(p_m) t^(e_m)`.
type APoly = Vec<(i64, i64, i64)>;

fn eval_apoly(poly: &APoly, a: SignedMonomial) -> QSeries {
    poly.iter().map(|&(c, pw, e)| a.pow(pw).shift(e).to_series().scale(c)).sum()
}

/// `d/da` at `a = 1`.
fn deriv_apoly_at_one(poly: &APoly) -> QSeries {
    poly.iter().map(|&(c, pw, e)| QSeries::monomial(c * pw, e)).sum()
}

/// The two-lattice consequence (`r + j ≤ k`).
pub fn check_coro2(p: &BaileyPair, k: i64, r: i64, j: i64, prec: i64) -> Result<Check> {
    if k < 1 || r < 0 || j < 0 || r + j > k {
        return Err(BaileyError::ParameterOutOfRange("j, r ≥ 0, k ≥ 1 and r + j ≤ k required".into()));
    }
    check_a(p.a)?;
    let lhs = coro2_lhs(p, k, r, j, prec)?;
    let a = p.a;
    let w = prec + slack(k, j);
    let rhs = alpha_side(p, w, |l| {
        // B(a) = Σ_(i≤j) a^i q^((2ℓ−1)i) − a^(k+1−r) q^((2k+2−2r)ℓ−j) Σ_(i≤j) a^i q^((2ℓ+1)i)
        let mut bracket: APoly = (0..=j).map(|i| (1, i, 2 * (2 * l - 1) * i)).collect();
        let shift = 2 * ((2 * k + 2 - 2 * r) * l - j);
        bracket.extend((0..=j).map(|i| (-1, k + 1 - r + i, shift + 2 * (2 * l + 1) * i)));
        let mono = a.pow((k + 1) * l).shift(2 * ((k + 1) * l * l + (r - j - k) * l));
        let core = if a.is_one() && l == 0 {
            // B(1) = 0: the pole of 1/(1 − a) is removable, limit −B′(1).
            deriv_apoly_at_one(&bracket).negate()
        } else {
            div_one_minus(&eval_apoly(&bracket, a).truncate(w + 4 * (j + 1) * (l + 1)), a.shift(4 * l))?
        };
        Ok(times_mono(&p.alpha_at(l).mul(&core), mono))
    })?;
    let rhs = rhs.mul(&inv_poch_infinite(a.shift(2), 2, w)?);
    compare(format!("coro2 k={k} r={r} j={j} a={a}"), &lhs, &rhs, prec)
}

/// Left side of the coro2 formula for any `a`.
pub fn coro2_lhs(p: &BaileyPair, k: i64, r: i64, j: i64, prec: i64) -> Result<QSeries> {
    let mut levels: Vec<Level> = (1..=k + 1)
        .map(|i| {
            let lin = if i <= j {
                -4
            } else if i <= k - r {
                -2
            } else {
                0
            };
            let l = a_level(p.a, 2, lin);
            if i <= k {
                l.den(q_pow(1), 2)
            } else {
                l
            }
        })
        .collect();
    let last = levels.pop().unwrap().factor(beta_factor(p)).max_index(p.n_max() as i64);
    levels.push(last);
    Ok(multisum::eval(&levels, prec)?)
}

/// Left side of the coro3 formula for any `a`.
pub fn coro3_lhs(p: &BaileyPair, k: i64, r: i64, j: i64, b: Boundary, c: Boundary, prec: i64) -> Result<QSeries> {
    let a = p.a;
    let mut levels: Vec<Level> = Vec::new();
    for i in 1..=k + 1 {
        let sub = if i <= j {
            -4
        } else if i <= k - r {
            -2
        } else {
            0
        };
        let edge = i == 1 || i == k + 1;
        // q^(s²/2 + s/2) on the outer levels, q^(s²) inside.
        let (mut quad, mut lin) = if edge { (1, 1 + sub) } else { (2, sub) };
        let mut alternating = a.sign < 0;
        let mut factors: Vec<Factor> = Vec::new();
        for (x, on) in [(b, i == 1), (c, i == k + 1)] {
            if !on {
                continue;
            }
            match x {
                // (−1)^s (x)_s / x^s → q^C(s,2).
                Boundary::Infinity => {
                    quad += 1;
                    lin -= 1;
                }
                Boundary::Finite(m) => {
                    lin -= m.e;
                    alternating ^= m.sign > 0;
                    factors.push(Arc::new(move |s, w| Ok(poch_finite(m, 2, s, w)?)));
                }
            }
        }
        if i == k {
            if let Boundary::Finite(cm) = c {
                let d = a.shift(2).div(cm);
                factors.push(Arc::new(move |s, w| Ok(inv_poch_finite(d, 2, s, w)?)));
            }
        }
        if i == k + 1 {
            factors.push(beta_factor(p));
        }
        let mut level = Level::new(quad, lin + a.e);
        if alternating {
            level = level.alternating();
        }
        if i <= k {
            level = level.den(q_pow(1), 2);
        }
        if !factors.is_empty() {
            let fs = Arc::new(factors);
            level = level.factor(Arc::new(move |s, w| {
                let mut v = QSeries::one().truncate(w);
                for f in fs.iter() {
                    v = v.mul(&f(s, w)?);
                }
                Ok(v)
            }));
        }
        if i == k + 1 {
            level = level.max_index(p.n_max() as i64);
        }
        levels.push(level);
    }
    Ok(multisum::eval(&levels, prec)?)
}

/// `N_ℓ = b Σ_(i≤j) q^(2iℓ) − q^ℓ Σ_(i<j) q^(2iℓ)`, or `N_ℓ/b` when `b = ∞`.
fn coro3_n(b: Boundary, j: i64, l: i64) -> QSeries {
    let head: QSeries = (0..=j).map(|i| QSeries::monomial(1, 4 * i * l)).sum();
    match b {
        Boundary::Infinity => head,
        Boundary::Finite(m) => {
            let tail: QSeries = (0..j).map(|i| QSeries::monomial(1, 4 * i * l + 2 * l)).sum();
            times_mono(&head, m).sub(&tail)
        }
    }
}

/// The coro3 consequence at `a = q`. Poles of `1/(1 − aq^(2ℓ−1))` and of
/// `1/(b − q^ℓ)` are cancelled symbolically before any series is built.
#[allow(clippy::too_many_arguments)]
pub fn check_coro3(p: &BaileyPair, k: i64, r: i64, j: i64, b: Boundary, c: Boundary, prec: i64) -> Result<Check> {
    if k < 1 || r < 0 || j < 0 || r + j > k {
        return Err(BaileyError::ParameterOutOfRange("k ≥ 1, 0 ≤ r, j and r + j ≤ k required".into()));
    }
    if b == Boundary::Infinity && c == Boundary::Infinity {
        return Err(BaileyError::UnsupportedBoundary("b = c = ∞".into()));
    }
    if p.a != q_pow(1) {
        return Err(BaileyError::ParameterOutOfRange(format!("the coro3 check runs at a = q only, got a = {}", p.a)));
    }
    if let Boundary::Finite(cm) = c {
        let d = q_pow(2).div(cm);
        if d.e <= 0 {
            return Err(BaileyError::UnsupportedBoundary(format!("(q²/c)_n is not a unit for c = {cm}")));
        }
    }
    let lhs = coro3_lhs(p, k, r, j, b, c, prec)?;
    let w = prec + slack(k, j) + 8;
    let rhs = alpha_side(p, w, |l| {
        // X = q^(k+1−r) q^((2k+1−2r)ℓ − j).
        let x = q_pow(k + 1 - r + (2 * k + 1 - 2 * r) * l - j);
        let nl = coro3_n(b, j, l).truncate(w);
        let nl1 = coro3_n(b, j, l + 1).truncate(w);
        let mut t = match b {
            Boundary::Infinity => {
                // G(ℓ) − X q^ℓ G(ℓ+1), times (−1)^ℓ q^C(ℓ,2) from (b)_ℓ/b^ℓ.
                let v = nl.sub(&times_mono(&nl1, x.shift(2 * l)));
                let sg = if l % 2 == 0 { 1 } else { -1 };
                v.shift(l * (l - 1)).scale(sg)
            }
            Boundary::Finite(bm) => {
                // b⁻²(q^(ℓ+2)/b)_∞ [N_ℓ(b − q^(ℓ+1)) + X(1 − bq^ℓ)N_(ℓ+1)] (b)_ℓ b^(−ℓ)
                let first = times_mono(&nl, bm).sub(&nl.shift(2 * l + 2));
                let second = times_one_minus(&times_mono(&nl1, x), bm.shift(2 * l));
                let v = times_mono(&first.add(&second), bm.pow(-2 - l));
                let v = times_poch(&v, bm, 2, l);
                v.mul(&poch_infinite(q_pow(l + 2).div(bm), 2, w)?)
            }
        };
        match c {
            Boundary::Infinity => {
                let sg = if l % 2 == 0 { 1 } else { -1 };
                t = t.shift(l * (l - 1)).scale(sg);
            }
            Boundary::Finite(cm) => {
                t = times_mono(&times_poch(&t, cm, 2, l), cm.pow(-l));
                t = div_poch(&t, q_pow(2).div(cm), 2, l)?;
            }
        }
        // q^((k+1)ℓ) q^(kℓ² + (r+1−j−k)ℓ) / (1 − q^(2ℓ+1))
        let t = t.shift(2 * ((k + 1) * l + k * l * l + (r + 1 - j - k) * l));
        let t = div_one_minus(&t, q_pow(2 * l + 1))?;
        Ok(t.mul(&p.alpha_at(l)))
    })?;
    let rhs = rhs.mul(&inv_poch_infinite(q_pow(2), 2, w)?);
    compare(format!("coro3 k={k} r={r} j={j} b={b} c={c}"), &lhs, &rhs, prec)
}

/// The limit form of the `STAR1` chain, for a pair relative to `q`, with
/// the factor subset `T ⊆ {1, …, k − r}`.
pub fn check_common2(p: &BaileyPair, k: i64, r: i64, t: &[i64], prec: i64) -> Result<Check> {
    let j = t.len() as i64;
    if k < 1 || r < 0 || r + j > k || t.iter().any(|&i| i < 1 || i > k - r) {
        return Err(BaileyError::ParameterOutOfRange("k ≥ 1, r ≥ 0, r + j ≤ k and T ⊆ {1..k−r} required".into()));
    }
    if p.a != q_pow(1) {
        return Err(BaileyError::ParameterOutOfRange("pair must be relative to q".into()));
    }
    let mut levels: Vec<Level> = (1..=k + 1)
        .map(|i| {
            let mut lin = if i > k - r { 2 } else { 0 };
            let in_t = t.contains(&i);
            if in_t {
                lin -= 2;
            }
            let mut l = Level::new(2, lin);
            if in_t && i >= 2 {
                l = l.pair(2);
            }
            if i <= k {
                l = l.den(q_pow(1), 2);
            }
            l
        })
        .collect();
    let last = levels.pop().unwrap().factor(beta_factor(p)).max_index(p.n_max() as i64);
    levels.push(last);
    let lhs = multisum::eval(&levels, prec)?;
    let w = prec + slack(k, j);
    let rhs = alpha_side(p, w, |l| {
        // q^((k+1)ℓ² + (r−j+1)ℓ) (1−q)/(1−q^(2ℓ+1)) ((1+q^2ℓ)^j − (1+q^(2ℓ+2))^j q^((k−r+1)(2ℓ+1)−j))
        let one = QSeries::one();
        let first = one.add(&QSeries::monomial(1, 4 * l)).pow(j as u32);
        let second = one.add(&QSeries::monomial(1, 4 * l + 4)).pow(j as u32).shift(2 * ((k - r + 1) * (2 * l + 1) - j));
        let v = first.sub(&second).truncate(w);
        let v = div_one_minus(&times_one_minus(&v, q_pow(1)), q_pow(2 * l + 1))?;
        Ok(v.shift(2 * ((k + 1) * l * l + (r - j + 1) * l)).mul(&p.alpha_at(l)))
    })?;
    let rhs = rhs.mul(&inv_poch_infinite(q_pow(1), 2, w)?);
    let ts: Vec<String> = t.iter().map(|x| x.to_string()).collect();
    compare(format!("common2 k={k} r={r} T={{{}}}", ts.join(",")), &lhs, &rhs, prec)
}

/// Closed form of the final `α_n` of [`common_chain`] in terms of the seed.
pub fn common_chain_alpha(seed: &BaileyPair, k: i64, r: i64, j: i64, n: i64) -> Result<QSeries> {
    // (1−q)(1+q^2n)^j q^((k+1)n² + (r+1−j)n) (α_n/(1−q^(2n+1)) − q^(−2rn−1) α_(n−1)/(1−q^(2n−1)))
    let lead = 2 * ((k + 1) * n * n + (r + 1 - j) * n);
    let mut v = div_one_minus(&seed.alpha_at(n).shift(lead), q_pow(2 * n + 1))?;
    if n > 0 {
        let prev = seed.alpha_at(n - 1).shift(lead - 2 * (2 * r * n + 1));
        v = v.sub(&div_one_minus(&prev, q_pow(2 * n - 1))?);
    }
    let v = times_one_minus(&v, q_pow(1));
    Ok((0..j).fold(v, |acc, _| times_one_plus(&acc, q_pow(2 * n))))
}

/// A chain recipe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recipe {
    pub seed: SeedKind,
    pub a: SignedMonomial,
    pub steps: Vec<Step>,
    /// Powers of `q`.
    pub prec: i64,
    pub n_max: usize,
}

impl Recipe {
    pub fn from_json(v: &Value) -> Result<Self> {
        let seed = v.get("seed").ok_or_else(|| BaileyError::Recipe("missing \"seed\"".into()))?;
        let kind = SeedKind::parse(seed.get("kind").and_then(Value::as_str).unwrap_or("unit"))?;
        let a_str = seed.get("a").and_then(Value::as_str).unwrap_or("q");
        let a = a_str.parse().map_err(|e| BaileyError::Recipe(format!("bad a {a_str:?}: {e}")))?;
        let steps = match v.get("steps") {
            None => Vec::new(),
            Some(Value::Array(xs)) => xs.iter().map(Step::from_json).collect::<Result<_>>()?,
            Some(_) => return Err(BaileyError::Recipe("\"steps\" must be an array".into())),
        };
        let prec = v.get("prec").and_then(Value::as_i64).unwrap_or(40);
        if prec < 1 {
            return Err(BaileyError::Recipe("\"prec\" must be positive".into()));
        }
        let n_max = v.get("n_max").and_then(Value::as_u64).unwrap_or(10) as usize;
        Ok(Recipe { seed: kind, a, steps, prec, n_max })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seed": {"kind": self.seed.name(), "a": self.a.to_string()},
            "steps": self.steps.iter().map(Step::to_json).collect::<Vec<_>>(),
            "prec": self.prec,
            "n_max": self.n_max,
        })
    }

    /// Build the seed, run the chain at `2·prec` t-units and verify after
    /// every step.
    pub fn run(&self) -> Result<(BaileyPair, Vec<LogEntry>)> {
        let t = 2 * self.prec;
        let seed = self.seed.pair(self.a, self.n_max, t)?;
        run_chain(&seed, &self.steps, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> SignedMonomial {
        q_pow(1)
    }

    #[test]
    fn seeds_verify() {
        for kind in [SeedKind::Unit, SeedKind::DPrime1, SeedKind::DPrime4] {
            for a in [q(), SignedMonomial::one(), q_pow(2)] {
                let p = kind.pair(a, 6, 60).unwrap();
                assert!(verify(&p, 60).unwrap().ok(), "{kind:?} a={a}");
            }
        }
    }

    #[test]
    fn perturbed_beta_fails_at_its_index() {
        let mut p = pair_dprime4(q(), 5, 40).unwrap();
        p.beta[2] = p.beta[2].add(&QSeries::monomial(1, 6));
        assert_eq!(verify(&p, 40).unwrap().failure, Some((2, 6)));
    }

    #[test]
    fn key1_at_one_is_degenerate() {
        let p = unit_pair(SignedMonomial::one(), 4, 20).unwrap();
        assert!(matches!(apply(Step::Key1, &p), Err(BaileyError::DegenerateDivision(_))));
    }

    #[test]
    fn star_is_sum_of_its_two_routes() {
        let p = pair_dprime1(q(), 6, 50).unwrap();
        let star = apply(Step::Star, &p).unwrap();
        let r1 = apply(Step::LovejoyB0, &apply(Step::BlInf, &apply(Step::Key1, &p).unwrap()).unwrap()).unwrap();
        let r2 = apply(Step::LovejoyB0, &apply(Step::Key2, &apply(Step::BlInf, &p).unwrap()).unwrap()).unwrap();
        for n in 0..=6 {
            assert_eq!(star.alpha[n].compare(&r1.alpha[n].add(&r2.alpha[n])), crate::Comparison::Equal);
            assert_eq!(star.beta[n].compare(&r1.beta[n].add(&r2.beta[n])), crate::Comparison::Equal);
        }
    }
}
