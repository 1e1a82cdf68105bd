//! The identity catalog.
//!
//! Every row pairs a [`SumSide`] (a nested sum over `s_1 ≥ … ≥ s_k ≥ 0`)
//! with a [`ProductSide`] (a prefactor times a weighted sum of triple
//! products). All exponents, moduli and precisions are in t-units,
//! `t = q^(1/2)`; JSON reports convert back to powers of `q`.
//!
//! A triple product `(t^A, t^(M−A), t^M; t^M)_∞` with `A ∈ {0, M}` is zero
//! and contributes nothing; `A` outside `[0, M]` is rejected as a
//! transcription error.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

use crate::multisum::{self, Factor, Level, SumError};
use crate::par::{self, Exec};
use crate::qfunctions::{
    inv_poch_finite, inv_poch_infinite, poch_finite, poch_infinite, qbinom, triple_product, QError,
    SignedMonomial,
};
use crate::series::{QSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("triple product exponent A = {a} outside [0, {modulus}]")]
    ThetaRange { modulus: i64, a: i64 },
    #[error("{side} side has negative valuation {valuation}")]
    NegativeValuation { side: &'static str, valuation: i64 },
    #[error(transparent)]
    Sum(#[from] SumError),
    #[error(transparent)]
    Q(#[from] QError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Shape of a nested sum. Level indices in the sets are 1-based.
///
/// Level `i` contributes `q^(scale·(s_i² − [i∈J] + [i∈R] + extra_last·[i=k]))`
/// over `(q^scale; q^scale)_(s_i − s_(i+1))`, with the last denominator in
/// base `q^(scale·last_base)`.
#[derive(Clone, Default)]
pub struct SumSide {
    pub k: usize,
    pub scale: i64,
    pub last_base: i64,
    pub subtract: Vec<usize>,
    pub add: Vec<usize>,
    pub extra_last: i64,
    /// Binomial factors: `q^(−scale·s_1)` for `1 ∈ T`, and
    /// `q^(−scale·s_i)(1 + q^(scale·(s_(i−1)+s_i)))` for `i ∈ T`, `i ≥ 2`.
    pub binom: Option<Vec<usize>>,
    /// `(−q^(1+2s_k); q²)_∞` on the last level.
    pub bgg_tail: bool,
    /// `(x; t^base)_(s_1)` on the first level.
    pub head_poch: Option<(SignedMonomial, i64)>,
    /// First level uses `q^(s_1²/2 + s_1/2)` in place of `q^(s_1²)`.
    pub half_first: bool,
    /// Extra last denominator `(x; t^base)_(s_k)`.
    pub last_extra_den: Option<(SignedMonomial, i64)>,
    pub prefactor: Option<QSeries>,
}

impl SumSide {
    fn plain(k: usize) -> Self {
        SumSide { k, scale: 1, last_base: 1, ..Default::default() }
    }

    /// Translate into evaluator levels.
    pub fn levels(&self) -> Vec<Level> {
        let k = self.k;
        let sc = self.scale;
        (1..=k)
            .map(|i| {
                let mut quad = 2 * sc;
                let mut lin = 0;
                if self.subtract.contains(&i) {
                    lin -= 2 * sc;
                }
                if self.add.contains(&i) {
                    lin += 2 * sc;
                }
                if i == k {
                    lin += 2 * sc * self.extra_last;
                }
                let in_t = self.binom.as_ref().is_some_and(|t| t.contains(&i));
                if in_t {
                    lin -= 2 * sc;
                }
                if i == 1 && self.half_first {
                    quad = sc;
                    lin += sc;
                }
                let b = if i == k { self.last_base } else { 1 };
                let mut level = Level::new(quad, lin).den(SignedMonomial::new(1, 2 * sc * b), 2 * sc * b);
                if i == k {
                    if let Some((x, base)) = self.last_extra_den {
                        level = level.den(x, base);
                    }
                }
                if in_t && i >= 2 {
                    level = level.pair(2 * sc);
                }
                let head = if i == 1 { self.head_poch } else { None };
                let tail = i == k && self.bgg_tail;
                if head.is_some() || tail {
                    let f: Factor = Arc::new(move |s, p| {
                        let mut v = QSeries::one().truncate(p);
                        if let Some((x, base)) = head {
                            v = v.mul(&poch_finite(x, base, s, p)?);
                        }
                        if tail {
                            v = v.mul(&poch_infinite(SignedMonomial::new(-1, 2 + 4 * s), 4, p)?);
                        }
                        Ok(v)
                    });
                    level = level.factor(f);
                }
                level
            })
            .collect()
    }
}

/// A single Pochhammer factor `(x; t^base)_len^power`, `len = None` for `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PFactor {
    pub x: SignedMonomial,
    pub base: i64,
    pub len: Option<i64>,
    pub inverse: bool,
}

impl PFactor {
    fn inf(x: SignedMonomial, base: i64) -> Self {
        PFactor { x, base, len: None, inverse: false }
    }

    fn inv_inf(x: SignedMonomial, base: i64) -> Self {
        PFactor { x, base, len: None, inverse: true }
    }

    fn eval(&self, prec: i64) -> Result<QSeries, QError> {
        match (self.len, self.inverse) {
            (None, false) => poch_infinite(self.x, self.base, prec),
            (None, true) => inv_poch_infinite(self.x, self.base, prec),
            (Some(n), false) => poch_finite(self.x, self.base, n, prec),
            (Some(n), true) => inv_poch_finite(self.x, self.base, n, prec),
        }
    }
}

/// `weight · t^shift · (t^A, t^(M−A), t^M; t^M)_∞`, or just
/// `weight · t^shift` when `theta` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub weight: i64,
    pub shift: i64,
    pub theta: Option<(i64, i64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProductSide {
    pub prefactor: Vec<PFactor>,
    pub terms: Vec<Term>,
}

impl ProductSide {
    fn push(&mut self, weight: i64, shift: i64, m: i64, a: i64) {
        self.terms.push(Term { weight, shift, theta: Some((m, a)) });
    }
}

pub fn eval_sum(side: &SumSide, prec: i64) -> Result<QSeries, IdError> {
    let mut v = multisum::eval(&side.levels(), prec)?;
    if let Some(p) = &side.prefactor {
        v = v.mul(p).truncate(prec);
    }
    Ok(v)
}

pub fn eval_product(side: &ProductSide, prec: i64) -> Result<QSeries, IdError> {
    let mut pre = QSeries::one().truncate(prec);
    for f in &side.prefactor {
        pre = pre.mul(&f.eval(prec)?);
    }
    let mut cache: HashMap<(i64, i64), QSeries> = HashMap::new();
    let mut sum = QSeries::zero(prec);
    for t in &side.terms {
        let base = match t.theta {
            None => QSeries::one().truncate(prec),
            Some((m, a)) => {
                if a < 0 || a > m {
                    return Err(IdError::ThetaRange { modulus: m, a });
                }
                if a == 0 || a == m {
                    continue;
                }
                // The product is symmetric in A ↔ M − A.
                let key = (m, a.min(m - a));
                match cache.get(&key) {
                    Some(v) => v.clone(),
                    None => {
                        let v = triple_product(m, key.1, prec)?;
                        cache.insert(key, v.clone());
                        v
                    }
                }
            }
        };
        sum = sum.add(&base.shift(t.shift).scale(t.weight).truncate(prec));
    }
    Ok(pre.mul(&sum).truncate(prec))
}

/// Identity parameters; rows read only the fields they use.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Params {
    pub k: Option<i64>,
    pub r: Option<i64>,
    pub j: Option<i64>,
    pub a: Option<i64>,
    pub variant: Option<i64>,
    pub subset: Option<Vec<i64>>,
}

impl Params {
    pub fn krj(k: i64, r: i64, j: i64) -> Self {
        Params { k: Some(k), r: Some(r), j: Some(j), ..Default::default() }
    }

    pub fn with_subset(mut self, t: Vec<i64>) -> Self {
        self.subset = Some(t);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for (key, v) in [("k", self.k), ("r", self.r), ("j", self.j), ("a", self.a), ("variant", self.variant)] {
            if let Some(v) = v {
                m.insert(key.into(), json!(v));
            }
        }
        if let Some(t) = &self.subset {
            m.insert("subset".into(), json!(t));
        }
        Value::Object(m)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (key, v) in [("k", self.k), ("r", self.r), ("j", self.j), ("a", self.a), ("variant", self.variant)] {
            if let Some(v) = v {
                parts.push(format!("{key}={v}"));
            }
        }
        if let Some(t) = &self.subset {
            let s: Vec<String> = t.iter().map(|x| x.to_string()).collect();
            parts.push(format!("T={{{}}}", s.join(",")));
        }
        write!(f, "{}", parts.join(" "))
    }
}

/// Every catalog name, in report order.
pub const CATALOG: [&str; 20] = [
    "rogers_ramanujan",
    "andrews_gordon",
    "bressoud_33",
    "bressoud_even",
    "bressoud_35",
    "kursungoz_0",
    "kursungoz_j",
    "stanton_31",
    "stanton_32",
    "stanton_41",
    "stanton_42",
    "binom_kursungoz",
    "nonbinom_kursungoz",
    "gollnitz_gordon",
    "bressoud_gg",
    "binom_bgg",
    "nonbinom_bgg",
    "bgg_j0",
    "new_slater",
    "new_slater2",
];

/// Rows whose sum side carries a choosable factor subset `T`.
pub const BINOMIAL: [&str; 4] = ["stanton_31", "stanton_41", "binom_kursungoz", "binom_bgg"];

fn invalid(msg: impl Into<String>) -> IdError {
    IdError::InvalidParameters(msg.into())
}

fn need(v: Option<i64>, flag: &str) -> Result<i64, IdError> {
    v.ok_or_else(|| invalid(format!("missing parameter {flag}")))
}

fn check_k(k: i64) -> Result<(), IdError> {
    if k < 1 {
        return Err(invalid("k ≥ 1 violated"));
    }
    Ok(())
}

fn check_kr(k: i64, r: i64) -> Result<(), IdError> {
    check_k(k)?;
    if r < 0 || r > k {
        return Err(invalid("0 ≤ r ≤ k violated"));
    }
    Ok(())
}

fn check_kj(k: i64, j: i64) -> Result<(), IdError> {
    check_k(k)?;
    if j < 0 || j > k {
        return Err(invalid("0 ≤ j ≤ k violated"));
    }
    Ok(())
}

fn check_krj(k: i64, r: i64, j: i64) -> Result<(), IdError> {
    check_k(k)?;
    if r < 0 {
        return Err(invalid("r ≥ 0 violated"));
    }
    if j < 0 {
        return Err(invalid("j ≥ 0 violated"));
    }
    if r + j > k {
        return Err(invalid("r + j ≤ k violated"));
    }
    Ok(())
}

/// The subset `T`, defaulting to `{1, …, j}`; must be `j` distinct
/// indices from `{1, …, k − r}`.
fn subset_of(p: &Params, k: i64, r: i64, j: i64) -> Result<Vec<usize>, IdError> {
    let t: Vec<i64> = p.subset.clone().unwrap_or_else(|| (1..=j).collect());
    let mut sorted = t.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() as i64 != j || sorted.len() != t.len() {
        return Err(invalid(format!("subset must have exactly j = {j} distinct elements")));
    }
    if sorted.iter().any(|&i| i < 1 || i > k - r) {
        return Err(invalid(format!("subset elements must lie in {{1, …, k − r}} = {{1, …, {}}}", k - r)));
    }
    Ok(sorted.into_iter().map(|i| i as usize).collect())
}

fn range(lo: i64, hi: i64) -> Vec<usize> {
    (lo..=hi).map(|i| i as usize).collect()
}

fn binomial(n: i64, m: i64) -> i64 {
    (0..m).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn q() -> SignedMonomial {
    SignedMonomial::q_pow(1)
}

fn one_plus(e: i64) -> QSeries {
    QSeries::one().add(&QSeries::monomial(1, e))
}

/// `1/(q)_∞`.
fn inv_euler_factor() -> PFactor {
    PFactor::inv_inf(q(), 2)
}

/// `1/(1+q)`.
fn inv_one_plus_q() -> PFactor {
    PFactor { x: SignedMonomial::new(-1, 2), base: 2, len: Some(1), inverse: true }
}

/// Both sides of a catalog row.
pub fn build(name: &str, p: &Params) -> Result<(SumSide, ProductSide), IdError> {
    let mut rhs = ProductSide::default();
    let lhs = match name {
        "rogers_ramanujan" => {
            let a = need(p.a, "a")?;
            if a != 0 && a != 1 {
                return Err(invalid("a ∈ {0, 1} violated"));
            }
            let mut s = SumSide::plain(1);
            if a == 0 {
                s.add = vec![1];
            }
            rhs.prefactor = vec![
                PFactor::inv_inf(SignedMonomial::q_pow(2 - a), 10),
                PFactor::inv_inf(SignedMonomial::q_pow(3 + a), 10),
            ];
            rhs.terms.push(Term { weight: 1, shift: 0, theta: None });
            s
        }
        "andrews_gordon" => {
            let (k, r) = (need(p.k, "k")?, need(p.r, "r")?);
            check_kr(k, r)?;
            let mut s = SumSide::plain(k as usize);
            s.add = range(k - r + 1, k);
            rhs.prefactor = vec![inv_euler_factor()];
            rhs.push(1, 0, 2 * (2 * k + 3), 2 * (k + 1 - r));
            s
        }
        "bressoud_33" => {
            let (k, j) = (need(p.k, "k")?, need(p.j, "j")?);
            check_kj(k, j)?;
            let mut s = SumSide::plain(k as usize);
            s.subtract = range(1, j);
            rhs.prefactor = vec![inv_euler_factor()];
            for i in 0..=j {
                rhs.push(1, 0, 2 * (2 * k + 3), 2 * (k + 2 - j + 2 * i));
            }
            s
        }
        "bressoud_even" => {
            let (k, r) = (need(p.k, "k")?, need(p.r, "r")?);
            check_kr(k, r)?;
            let mut s = SumSide::plain(k as usize);
            s.last_base = 2;
            s.add = range(k - r + 1, k);
            rhs.prefactor = vec![inv_euler_factor()];
            rhs.push(1, 0, 2 * (2 * k + 2), 2 * (k + 1 - r));
            s
        }
        "bressoud_35" => {
            let (k, j) = (need(p.k, "k")?, need(p.j, "j")?);
            check_kj(k, j)?;
            let mut s = SumSide::plain(k as usize);
            s.last_base = 2;
            s.subtract = range(1, j);
            rhs.prefactor = vec![inv_euler_factor()];
            for i in 0..=j {
                rhs.push(1, 0, 2 * (2 * k + 2), 2 * (k + 1 + j - 2 * i));
            }
            s
        }
        "kursungoz_0" => {
            let (k, r) = (need(p.k, "k")?, need(p.r, "r")?);
            check_kr(k, r)?;
            let mut s = SumSide::plain(k as usize);
            s.last_base = 2;
            s.add = range(k - r + 1, k);
            s.extra_last = 1;
            s.prefactor = Some(one_plus(2));
            rhs.prefactor = vec![inv_euler_factor()];
            let m = 2 * (2 * k + 2);
            rhs.push(1, 0, m, 2 * (k + r));
            rhs.push(1, 2, m, 2 * (k + 2 + r));
            s
        }
        "kursungoz_j" => {
            let (k, j) = (need(p.k, "k")?, need(p.j, "j")?);
            check_kj(k, j)?;
            let mut s = SumSide::plain(k as usize);
            s.last_base = 2;
            s.subtract = range(1, j);
            s.extra_last = 1;
            rhs.prefactor = vec![inv_euler_factor()];
            for i in 0..=j {
                rhs.push(1, 0, 2 * (2 * k + 2), 2 * (k - j + 2 * i));
            }
            s
        }
        "stanton_31" | "stanton_32" | "stanton_41" | "stanton_42" => {
            let (k, r, j) = (need(p.k, "k")?, need(p.r, "r")?, need(p.j, "j")?);
            check_krj(k, r, j)?;
            let binom = name.ends_with('1');
            let even = name.starts_with("stanton_4");
            let mut s = SumSide::plain(k as usize);
            s.add = range(k - r + 1, k);
            if binom {
                s.binom = Some(subset_of(p, k, r, j)?);
            } else {
                s.subtract = range(1, j);
            }
            let m = if even {
                s.last_base = 2;
                2 * (2 * k + 2)
            } else {
                2 * (2 * k + 3)
            };
            rhs.prefactor = vec![inv_euler_factor()];
            for i in 0..=j {
                let w = if binom { binomial(j, i) } else { 1 };
                rhs.push(w, 0, m, 2 * (k + 1 - r + j - 2 * i));
            }
            s
        }
        "binom_kursungoz" | "nonbinom_kursungoz" => {
            let (k, r, j) = (need(p.k, "k")?, need(p.r, "r")?, need(p.j, "j")?);
            check_krj(k, r, j)?;
            let binom = name == "binom_kursungoz";
            let mut s = SumSide::plain(k as usize);
            s.last_base = 2;
            s.add = range(k - r + 1, k);
            s.extra_last = 1;
            if binom {
                s.binom = Some(subset_of(p, k, r, j)?);
            } else {
                s.subtract = range(1, j);
            }
            rhs.prefactor = vec![inv_one_plus_q(), inv_euler_factor()];
            let m = 2 * (2 * k + 2);
            for i in 0..=j {
                let w = if binom { binomial(j, i) } else { 1 };
                rhs.push(w, 0, m, 2 * (k + 2 - r + j - 2 * i));
                rhs.push(w, 2, m, 2 * (k - r + j - 2 * i));
            }
            s
        }
        "gollnitz_gordon" => {
            let v = need(p.variant, "variant")?;
            if v != 1 && v != 2 {
                return Err(invalid("variant ∈ {1, 2} violated"));
            }
            let mut s = SumSide::plain(1);
            s.last_base = 2;
            s.head_poch = Some((SignedMonomial::new(-1, 2), 4));
            if v == 2 {
                s.add = vec![1];
                s.extra_last = 1;
            }
            let parts: [i64; 3] = if v == 1 { [1, 4, 7] } else { [3, 4, 5] };
            rhs.prefactor = parts.iter().map(|&e| PFactor::inv_inf(SignedMonomial::q_pow(e), 16)).collect();
            rhs.terms.push(Term { weight: 1, shift: 0, theta: None });
            s
        }
        "bressoud_gg" => {
            let (k, j) = (need(p.k, "k")?, need(p.j, "j")?);
            check_kj(k, j)?;
            let mut s = SumSide::plain(k as usize);
            s.scale = 2;
            s.subtract = range(1, j);
            s.bgg_tail = true;
            rhs.prefactor = vec![PFactor::inf(SignedMonomial::new(-1, 2), 4), PFactor::inv_inf(SignedMonomial::q_pow(2), 4)];
            for i in 0..=j {
                rhs.push(1, 0, 2 * (4 * k + 4), 2 * (2 * k + 1 - 2 * j + 2 * i));
            }
            s
        }
        "binom_bgg" | "nonbinom_bgg" | "bgg_j0" => {
            let (k, r) = (need(p.k, "k")?, need(p.r, "r")?);
            let j = if name == "bgg_j0" { 0 } else { need(p.j, "j")? };
            check_krj(k, r, j)?;
            let binom = name == "binom_bgg";
            let mut s = SumSide::plain(k as usize);
            s.scale = 2;
            s.add = range(k - r + 1, k);
            s.bgg_tail = true;
            if binom {
                s.binom = Some(subset_of(p, k, r, j)?);
            } else {
                s.subtract = range(1, j);
            }
            rhs.prefactor = vec![PFactor::inf(SignedMonomial::new(-1, 6), 4), PFactor::inv_inf(SignedMonomial::q_pow(2), 4)];
            let m = 2 * (4 * k + 4);
            for i in 0..=j {
                let w = if binom { binomial(j, i) } else { 1 };
                rhs.push(w, 0, m, 2 * (2 * k + 3 - 2 * r + 2 * j - 4 * i));
                rhs.push(w, 2, m, 2 * (2 * k + 1 - 2 * r + 2 * j - 4 * i));
            }
            s
        }
        "new_slater" | "new_slater2" => {
            let (k, r, j) = (need(p.k, "k")?, need(p.r, "r")?, need(p.j, "j")?);
            check_krj(k, r, j)?;
            let second = name == "new_slater2";
            if second && r < 1 {
                return Err(invalid("r ≥ 1 violated"));
            }
            let mut s = SumSide::plain(k as usize);
            s.half_first = true;
            s.head_poch = Some((SignedMonomial::new(-1, 0), 2));
            s.subtract = range(1, j);
            s.add = range(k - r + 1, k);
            rhs.prefactor = vec![PFactor::inf(SignedMonomial::new(-1, 2), 2), inv_euler_factor()];
            if second {
                s.last_extra_den = Some((SignedMonomial::new(-1, 1), 2));
                s.prefactor = Some(one_plus(1));
                let m = 4 * k + 2;
                for a in 0..=2 * j {
                    for b in 0..=2 * r - 2 {
                        let w = if b % 2 == 0 { 1 } else { -1 };
                        rhs.push(w, 0, m, 2 * k + 3 - 2 * r - 2 * j + 2 * a + 2 * b);
                    }
                    for b in 0..=2 * r {
                        let w = if b % 2 == 0 { 1 } else { -1 };
                        rhs.push(w, 1, m, 2 * k + 1 - 2 * r - 2 * j + 2 * a + 2 * b);
                    }
                }
            } else {
                let m = 2 * (2 * k + 2);
                for a in 0..=2 * j {
                    for b in 0..=2 * r {
                        let w = if b % 2 == 0 { 1 } else { -1 };
                        rhs.push(w, 0, m, 2 * (k + 1 - r - j + a + b));
                    }
                }
            }
            s
        }
        _ => return Err(IdError::UnknownIdentity(name.to_string())),
    };
    Ok((lhs, rhs))
}

/// Outcome of comparing the two sides of one row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub name: String,
    pub params: Params,
    /// t-units.
    pub prec: i64,
    pub equal: bool,
    /// t-exponent of the first differing coefficient.
    pub first_mismatch: Option<i64>,
    pub error: Option<String>,
    pub elapsed_ms: u128,
}

/// A t-exponent rendered in powers of `q` (half-integers for odd input).
pub fn q_units(e: i64) -> Value {
    if e % 2 == 0 {
        json!(e / 2)
    } else {
        json!(e as f64 / 2.0)
    }
}

impl Report {
    /// JSON object; `elapsed_ms` is the only field that varies between runs.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "name": self.name,
            "params": self.params.to_json(),
            "prec": q_units(self.prec),
            "equal": self.equal,
            "first_mismatch": self.first_mismatch.map(q_units),
            "elapsed_ms": self.elapsed_ms as u64,
        });
        if let Some(e) = &self.error {
            v["error"] = json!(e);
        }
        v
    }

    /// One line without timing, stable across runs.
    pub fn to_text(&self) -> String {
        let verdict = match (&self.error, self.first_mismatch) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(m)) => format!("MISMATCH at q^{}", q_units(m)),
            (None, None) => "equal".to_string(),
        };
        format!("{} [{}] to O(q^{}): {}", self.name, self.params, q_units(self.prec), verdict)
    }
}

/// Compare two prepared sides up to `prec`.
pub fn verify_sides(lhs: &SumSide, rhs: &ProductSide, prec: i64) -> Result<Option<i64>, IdError> {
    let l = eval_sum(lhs, prec)?;
    let r = eval_product(rhs, prec)?;
    for (side, v) in [("sum", &l), ("product", &r)] {
        if let Some(val) = v.valuation() {
            if val < 0 {
                return Err(IdError::NegativeValuation { side, valuation: val });
            }
        }
    }
    Ok(l.equal_up_to(&r, prec)?.first_mismatch())
}

/// Verify one row. Parameter errors are returned; evaluation failures are
/// recorded in the report.
pub fn verify_identity(name: &str, p: &Params, prec: i64) -> Result<Report, IdError> {
    let start = Instant::now();
    let (lhs, rhs) = build(name, p)?;
    let (first_mismatch, error) = match verify_sides(&lhs, &rhs, prec) {
        Ok(m) => (m, None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Report {
        name: name.to_string(),
        params: p.clone(),
        prec,
        equal: error.is_none() && first_mismatch.is_none(),
        first_mismatch,
        error,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// All `j`-subsets of `{1, …, n}` in lexicographic order.
pub fn subsets(n: i64, j: i64) -> Vec<Vec<i64>> {
    fn rec(start: i64, n: i64, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - left + 1 {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if j >= 0 && j <= n {
        rec(1, n, j, &mut Vec::new(), &mut out);
    }
    out
}

/// Verify a binomial row for every admissible subset `T`.
pub fn verify_subset_variants(name: &str, k: i64, r: i64, j: i64, prec: i64) -> Result<Vec<Report>, IdError> {
    if !BINOMIAL.contains(&name) {
        return Err(invalid(format!("{name} has no subset variants")));
    }
    check_krj(k, r, j)?;
    subsets(k - r, j)
        .into_iter()
        .map(|t| verify_identity(name, &Params::krj(k, r, j).with_subset(t), prec))
        .collect()
}

/// Every valid parameter tuple of a row with `k ≤ max_k`, subsets included.
pub fn param_space(name: &str, max_k: i64) -> Vec<Params> {
    let mut out = Vec::new();
    let ks = 1..=max_k;
    let kr = |out: &mut Vec<Params>| {
        for k in ks.clone() {
            for r in 0..=k {
                out.push(Params { k: Some(k), r: Some(r), ..Default::default() });
            }
        }
    };
    let kj = |out: &mut Vec<Params>| {
        for k in ks.clone() {
            for j in 0..=k {
                out.push(Params { k: Some(k), j: Some(j), ..Default::default() });
            }
        }
    };
    let krj = |out: &mut Vec<Params>, r_min: i64, with_t: bool| {
        for k in ks.clone() {
            for r in r_min..=k {
                for j in 0..=k - r {
                    if with_t {
                        for t in subsets(k - r, j) {
                            out.push(Params::krj(k, r, j).with_subset(t));
                        }
                    } else {
                        out.push(Params::krj(k, r, j));
                    }
                }
            }
        }
    };
    match name {
        "rogers_ramanujan" => {
            for a in 0..=1 {
                out.push(Params { a: Some(a), ..Default::default() });
            }
        }
        "gollnitz_gordon" => {
            for v in 1..=2 {
                out.push(Params { variant: Some(v), ..Default::default() });
            }
        }
        "andrews_gordon" | "bressoud_even" | "kursungoz_0" | "bgg_j0" => kr(&mut out),
        "bressoud_33" | "bressoud_35" | "kursungoz_j" | "bressoud_gg" => kj(&mut out),
        "new_slater2" => krj(&mut out, 1, false),
        n if BINOMIAL.contains(&n) => krj(&mut out, 0, true),
        _ => krj(&mut out, 0, false),
    }
    out
}

/// Verify every row over its full parameter space with `k ≤ max_k`.
/// Report order is catalog order, then parameter order, independent of
/// scheduling.
pub fn sweep(max_k: i64, prec: i64, exec: Exec) -> Vec<Report> {
    let jobs: Vec<(&str, Params)> = CATALOG
        .iter()
        .flat_map(|&n| param_space(n, max_k).into_iter().map(move |p| (n, p)))
        .collect();
    par::map(exec, &jobs, |(n, p)| {
        verify_identity(n, p, prec).unwrap_or_else(|e| Report {
            name: n.to_string(),
            params: p.clone(),
            prec,
            equal: false,
            first_mismatch: None,
            error: Some(e.to_string()),
            elapsed_ms: 0,
        })
    })
}

/// One series-level degeneration between catalog rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub label: String,
    pub first_mismatch: Option<i64>,
}

impl Reduction {
    pub fn holds(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

fn sides(name: &str, p: &Params, prec: i64) -> Result<(QSeries, QSeries), IdError> {
    let (l, r) = build(name, p)?;
    Ok((eval_sum(&l, prec)?, eval_product(&r, prec)?))
}

fn cmp(a: &QSeries, b: &QSeries, prec: i64) -> Result<Option<i64>, IdError> {
    Ok(a.equal_up_to(b, prec)?.first_mismatch())
}

fn first_of(ms: &[Option<i64>]) -> Option<i64> {
    ms.iter().flatten().min().copied()
}

/// `Σ_n q^(n²)/(q²;q²)_n Σ_m q^(m²)[n, m]_(q²)`.
fn gg_binomial_form(prec: i64) -> Result<QSeries, IdError> {
    let mut total = QSeries::zero(prec);
    let mut n = 0;
    while 2 * n * n < prec {
        let mut inner = QSeries::zero(prec);
        let mut m = 0;
        while m <= n && 2 * n * n + 2 * m * m < prec {
            inner = inner.add(&qbinom(n, m, 4, prec)?.shift(2 * m * m).truncate(prec));
            m += 1;
        }
        let den = inv_poch_finite(SignedMonomial::q_pow(2), 4, n, prec)?;
        total = total.add(&inner.mul(&den).shift(2 * n * n).truncate(prec));
        n += 1;
    }
    Ok(total)
}

/// `Σ_(m,ℓ) q^(2m² + ℓ² + 2mℓ)/((q²;q²)_m (q²;q²)_ℓ)`.
fn gg_double_form(prec: i64) -> Result<QSeries, IdError> {
    let mut total = QSeries::zero(prec);
    let mut m = 0;
    while 4 * m * m < prec {
        let mut l = 0;
        loop {
            let e = 2 * (2 * m * m + l * l + 2 * m * l);
            if e >= prec {
                break;
            }
            let den = inv_poch_finite(SignedMonomial::q_pow(2), 4, m, prec)?.mul(&inv_poch_finite(SignedMonomial::q_pow(2), 4, l, prec)?);
            total = total.add(&den.shift(e).truncate(prec));
            l += 1;
        }
        m += 1;
    }
    Ok(total)
}

/// The degenerations between rows, for every `k ≤ max_k`.
pub fn reductions(max_k: i64, prec: i64) -> Result<Vec<Reduction>, IdError> {
    let mut out = Vec::new();
    let kr = |k, r| Params { k: Some(k), r: Some(r), ..Default::default() };
    let kj = |k, j| Params { k: Some(k), j: Some(j), ..Default::default() };
    let one_plus_q = one_plus(2);
    for k in 1..=max_k {
        // Same sum and same product after specialising a parameter.
        let pairs: Vec<(&str, Params, &str, Params)> = (0..=k)
            .flat_map(|x| {
                vec![
                    ("stanton_32", Params::krj(k, x, 0), "andrews_gordon", kr(k, x)),
                    ("stanton_32", Params::krj(k, 0, x), "bressoud_33", kj(k, x)),
                    ("stanton_42", Params::krj(k, x, 0), "bressoud_even", kr(k, x)),
                    ("stanton_42", Params::krj(k, 0, x), "bressoud_35", kj(k, x)),
                    ("nonbinom_kursungoz", Params::krj(k, 0, x), "kursungoz_j", kj(k, x)),
                    ("nonbinom_bgg", Params::krj(k, x, 0), "bgg_j0", kr(k, x)),
                    ("stanton_31", Params::krj(k, x, 0), "andrews_gordon", kr(k, x)),
                    ("stanton_41", Params::krj(k, x, 0), "bressoud_even", kr(k, x)),
                ]
            })
            .collect();
        for (a, pa, b, pb) in pairs {
            let (la, ra) = sides(a, &pa, prec)?;
            let (lb, rb) = sides(b, &pb, prec)?;
            out.push(Reduction {
                label: format!("{a} [{pa}] = {b} [{pb}]"),
                first_mismatch: first_of(&[cmp(&la, &lb, prec)?, cmp(&ra, &rb, prec)?]),
            });
        }
        // (1+q) times the j = 0 row is the Kurşungöz row on both sides.
        for r in 0..=k {
            let (la, ra) = sides("nonbinom_kursungoz", &Params::krj(k, r, 0), prec)?;
            let (lb, rb) = sides("kursungoz_0", &kr(k, r), prec)?;
            let la = la.mul(&one_plus_q).truncate(prec);
            let ra = ra.mul(&one_plus_q).truncate(prec);
            out.push(Reduction {
                label: format!("(1+q)·nonbinom_kursungoz [k={k} r={r} j=0] = kursungoz_0 [k={k} r={r}]"),
                first_mismatch: first_of(&[cmp(&la, &lb, prec)?, cmp(&ra, &rb, prec)?]),
            });
        }
        // r = 0 BGG extension: the product side factors through (1+q).
        for j in 0..=k {
            let (la, ra) = sides("nonbinom_bgg", &Params::krj(k, 0, j), prec)?;
            let (lb, rb) = sides("bressoud_gg", &kj(k, j), prec)?;
            out.push(Reduction {
                label: format!("nonbinom_bgg [k={k} r=0 j={j}] = bressoud_gg [k={k} j={j}]"),
                first_mismatch: first_of(&[cmp(&la, &lb, prec)?, cmp(&ra, &rb, prec)?]),
            });
        }
    }
    // k = 1 BGG against Göllnitz–Gordon, through the q-binomial expansions.
    let g1 = sides("gollnitz_gordon", &Params { variant: Some(1), ..Default::default() }, prec)?;
    let g2 = sides("gollnitz_gordon", &Params { variant: Some(2), ..Default::default() }, prec)?;
    let b0 = sides("bressoud_gg", &kj(1, 0), prec)?;
    let b1 = sides("bressoud_gg", &kj(1, 1), prec)?;
    let double = gg_double_form(prec)?;
    let binom = gg_binomial_form(prec)?;
    out.push(Reduction {
        label: "bressoud_gg [k=1 j=0] = double sum = q-binomial sum = gollnitz_gordon [variant=1]".into(),
        first_mismatch: first_of(&[
            cmp(&b0.0, &double, prec)?,
            cmp(&double, &binom, prec)?,
            cmp(&binom, &g1.0, prec)?,
            cmp(&b0.1, &g1.1, prec)?,
        ]),
    });
    out.push(Reduction {
        label: "bressoud_gg [k=1 j=1] = gollnitz_gordon [variant=1] + gollnitz_gordon [variant=2]".into(),
        first_mismatch: first_of(&[cmp(&b1.0, &g1.0.add(&g2.0), prec)?, cmp(&b1.1, &g1.1.add(&g2.1), prec)?]),
    });
    Ok(out)
}
