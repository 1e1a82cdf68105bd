//! Frequency-sequence and multipartition families, their enumerators,
//! the `f_0` rewriting maps φ/π and generating-function comparisons.
//!
//! Weights are integers (powers of `q`); every `prec` argument is in t-units
//! like the rest of the crate, so a family is enumerated up to weight
//! `(prec − 1) / 2`.

use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use serde_json::Value;
use thiserror::Error;

use crate::identities::{self, IdError, Params, Report};
use crate::motion::{frame_from_lengths, FrequencySeq, MotionTrace, MultiPartition, Op};
use crate::qfunctions::{inv_poch_finite, inv_euler, triple_product, QError, SignedMonomial};
use crate::series::QSeries;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetError {
    #[error("{family} expects a {expected}")]
    KindMismatch { family: String, expected: &'static str },
    #[error("{object} is not a member of {family}")]
    NotAMember { object: String, family: String },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error(transparent)]
    Id(#[from] IdError),
    #[error(transparent)]
    Q(#[from] QError),
}

type Result<T> = std::result::Result<T, SetError>;

/// Plain, primed (`′`) or tilde-primed (`~′`) version of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Plain,
    Prime,
    Tilde,
}

impl Flavor {
    fn suffix(self) -> &'static str {
        match self {
            Flavor::Plain => "",
            Flavor::Prime => "'",
            Flavor::Tilde => "~",
        }
    }

    /// Required parity offset on top of the base parity.
    fn shift(self) -> Option<i64> {
        match self {
            Flavor::Plain => None,
            Flavor::Prime => Some(0),
            Flavor::Tilde => Some(1),
        }
    }
}

/// A family of frequency sequences or multipartitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `f_i + f_(i+1) ≤ k`.
    A { k: u32 },
    /// `A_k` with `f_0 = 0` and `f_1 ≤ k − r`.
    Gordon { k: u32, r: u32 },
    /// `k`-multipartitions, parts of `λ^(m)` at least `m − j + max(m − (k−r), 0)`.
    X { flavor: Flavor, j: u32, r: u32, k: u32 },
    /// `A_k` with `f_0 ∈ {ℓ + max(ℓ − (j−r), 0) : 0 ≤ ℓ ≤ j}`.
    Y { flavor: Flavor, j: u32, r: u32, k: u32 },
    /// `A_k` with `f_0 ≤ j − max(f_0 + f_1 − (k−r), 0)`.
    Z { flavor: Flavor, j: u32, r: u32, k: u32 },
    /// `A_k` with `f_0 = s`; the parity base is `k − s`.
    Ysk { flavor: Flavor, s: u32, k: u32 },
}

/// A member candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Object {
    Freq(FrequencySeq),
    Multi(MultiPartition),
}

impl Object {
    /// `|f|`, or `|λ̄| + |fs(λ̄)|`.
    pub fn weight(&self) -> u64 {
        match self {
            Object::Freq(f) => f.weight(),
            Object::Multi(m) => m.total_size(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Object::Freq(f) => f.to_json(),
            Object::Multi(m) => m.to_json(),
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Freq(x) => x.fmt(f),
            Object::Multi(x) => x.fmt(f),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::A { k } => write!(f, "A[k={k}]"),
            Family::Gordon { k, r } => write!(f, "Gordon[k={k},r={r}]"),
            Family::X { flavor, j, r, k } => write!(f, "X{}[j={j},r={r},k={k}]", flavor.suffix()),
            Family::Y { flavor, j, r, k } => write!(f, "Y{}[j={j},r={r},k={k}]", flavor.suffix()),
            Family::Z { flavor, j, r, k } => write!(f, "Z{}[j={j},r={r},k={k}]", flavor.suffix()),
            Family::Ysk { flavor, s, k } => write!(f, "Ysk{}[s={s},k={k}]", flavor.suffix()),
        }
    }
}

impl Family {
    /// Family from a name (`A`, `Gordon`, `X`, `Y`, `Z`, `Ysk`, the last four
    /// optionally suffixed by `'` or `~`) and the parameters it reads.
    pub fn parse(name: &str, k: Option<u32>, r: Option<u32>, j: Option<u32>, s: Option<u32>) -> Result<Self> {
        let need = |v: Option<u32>, what: &str| v.ok_or_else(|| SetError::InvalidParameters(format!("{name} needs --{what}")));
        let (base, flavor) = match name.strip_suffix('\'') {
            Some(b) => (b, Flavor::Prime),
            None => match name.strip_suffix('~') {
                Some(b) => (b, Flavor::Tilde),
                None => (name, Flavor::Plain),
            },
        };
        let fam = match base.to_ascii_lowercase().as_str() {
            "a" if flavor == Flavor::Plain => Family::A { k: need(k, "k")? },
            "gordon" if flavor == Flavor::Plain => Family::Gordon { k: need(k, "k")?, r: need(r, "r")? },
            "x" => Family::X { flavor, j: need(j, "j")?, r: need(r, "r")?, k: need(k, "k")? },
            "y" => Family::Y { flavor, j: need(j, "j")?, r: need(r, "r")?, k: need(k, "k")? },
            "z" => Family::Z { flavor, j: need(j, "j")?, r: need(r, "r")?, k: need(k, "k")? },
            "ysk" => Family::Ysk { flavor, s: need(s, "s")?, k: need(k, "k")? },
            _ => return Err(SetError::UnknownFamily(name.to_string())),
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn k(&self) -> u32 {
        match *self {
            Family::A { k } | Family::Gordon { k, .. } | Family::Ysk { k, .. } => k,
            Family::X { k, .. } | Family::Y { k, .. } | Family::Z { k, .. } => k,
        }
    }

    pub fn is_multi(&self) -> bool {
        matches!(self, Family::X { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SetError::InvalidParameters(m));
        if self.k() == 0 {
            return bad("k ≥ 1 required".into());
        }
        match *self {
            Family::Gordon { k, r } if r > k => bad(format!("r ≤ k violated (r = {r}, k = {k})")),
            Family::X { j, r, k, .. } | Family::Y { j, r, k, .. } | Family::Z { j, r, k, .. } if r + j > k => {
                bad(format!("r + j ≤ k violated (r = {r}, j = {j}, k = {k})"))
            }
            Family::Ysk { s, k, .. } if s > k => bad(format!("s ≤ k violated (s = {s}, k = {k})")),
            _ => Ok(()),
        }
    }

    /// Parity required of `u·f_u + (u+1)·f_(u+1)` whenever `f_u + f_(u+1) = k`.
    fn parity(&self) -> Option<i64> {
        match *self {
            Family::Y { flavor, j, r, k } | Family::Z { flavor, j, r, k } | Family::X { flavor, j, r, k } => {
                flavor.shift().map(|d| (k as i64 + r as i64 - j as i64 + d).rem_euclid(2))
            }
            Family::Ysk { flavor, s, k } => flavor.shift().map(|d| (k as i64 - s as i64 + d).rem_euclid(2)),
            _ => None,
        }
    }

    /// Exact membership; the object kind must match the family.
    pub fn contains(&self, obj: &Object) -> Result<bool> {
        match (self.is_multi(), obj) {
            (true, Object::Multi(m)) => Ok(self.contains_multi(m)),
            (false, Object::Freq(f)) => Ok(self.contains_freq(f)),
            (true, _) => Err(SetError::KindMismatch { family: self.to_string(), expected: "multipartition" }),
            (false, _) => Err(SetError::KindMismatch { family: self.to_string(), expected: "frequency sequence" }),
        }
    }

    fn contains_freq(&self, f: &FrequencySeq) -> bool {
        let k = self.k();
        if !f.in_a(k) {
            return false;
        }
        let (f0, f1) = (f.get(0) as i64, f.get(1) as i64);
        let head = match *self {
            Family::A { .. } => true,
            Family::Gordon { k, r } => f0 == 0 && f1 <= (k - r) as i64,
            Family::Y { j, r, .. } => (0..=j as i64).any(|l| l + (l - (j as i64 - r as i64)).max(0) == f0),
            Family::Z { j, r, k, .. } => f0 <= j as i64 - (f0 + f1 - (k as i64 - r as i64)).max(0),
            Family::Ysk { s, .. } => f0 == s as i64,
            Family::X { .. } => unreachable!("X families hold multipartitions"),
        };
        head && self.parity().is_none_or(|p| parity_ok(f, k, p))
    }

    fn contains_multi(&self, mp: &MultiPartition) -> bool {
        let Family::X { j, r, k, .. } = *self else { unreachable!() };
        if mp.k() != k as usize {
            return false;
        }
        let bounds_ok = (1..=k).all(|m| mp.list(m as usize).iter().all(|&p| p as i64 >= x_lower(j, r, k, m)));
        let parity_ok = match self.parity() {
            None => true,
            Some(p) => mp.list(k as usize).iter().all(|&x| x as i64 % 2 == p),
        };
        bounds_ok && parity_ok
    }

    /// All members of weight at most `max_weight`, in a fixed order.
    pub fn enumerate(&self, max_weight: u64) -> Result<Vec<Object>> {
        self.validate()?;
        Ok(self.members_unchecked(max_weight))
    }

    fn members_unchecked(&self, max_weight: u64) -> Vec<Object> {
        match *self {
            Family::X { j, r, k, .. } => {
                let par = self.parity();
                enum_multi(k, max_weight, |m| x_lower(j, r, k, m).max(0) as u32, par)
                    .into_iter()
                    .map(Object::Multi)
                    .collect()
            }
            _ => enum_freq(self.k(), max_weight)
                .into_iter()
                .filter(|f| self.contains_freq(f))
                .map(Object::Freq)
                .collect(),
        }
    }

    /// `Σ q^|x|` over members of weight below the precision, exact to `prec`.
    pub fn gf(&self, prec: i64) -> Result<QSeries> {
        self.validate()?;
        Ok(self.gf_unchecked(prec))
    }

    fn gf_unchecked(&self, prec: i64) -> QSeries {
        let objs = self.members_unchecked(max_weight(prec));
        counts_to_series(objs.iter().map(Object::weight), prec)
    }
}

/// Lower bound `m − j + max(m − (k−r), 0)` on parts of `λ^(m)`.
fn x_lower(j: u32, r: u32, k: u32, m: u32) -> i64 {
    let (j, r, k, m) = (j as i64, r as i64, k as i64, m as i64);
    m - j + (m - (k - r)).max(0)
}

fn parity_ok(f: &FrequencySeq, k: u32, p: i64) -> bool {
    (0..=f.len()).all(|u| {
        let (a, b) = (f.get(u), f.get(u + 1));
        a + b != k || (u as i64 * a as i64 + (u as i64 + 1) * b as i64) % 2 == p
    })
}

fn max_weight(prec: i64) -> u64 {
    if prec <= 0 {
        0
    } else {
        ((prec - 1) / 2) as u64
    }
}

fn counts_to_series(weights: impl Iterator<Item = u64>, prec: i64) -> QSeries {
    let mut c = vec![0i64; 0];
    for w in weights {
        let e = 2 * w as usize;
        if (e as i64) < prec {
            if c.len() <= e {
                c.resize(e + 1, 0);
            }
            c[e] += 1;
        }
    }
    QSeries::from_i64(0, c, prec)
}

/// Every `f ∈ A_k` with `|f| ≤ max_weight`, each once.
pub fn enum_freq(k: u32, max_weight: u64) -> Vec<FrequencySeq> {
    fn rec(i: usize, rem: u64, k: u32, cur: &mut Vec<u32>, out: &mut Vec<FrequencySeq>) {
        // Every later entry costs at least i per unit.
        if i as u64 > rem {
            out.push(FrequencySeq::new(cur.clone()));
            return;
        }
        let prev = cur.last().copied().unwrap_or(0);
        let cap = (k - prev).min((rem / i as u64).min(u32::MAX as u64) as u32);
        for v in 0..=cap {
            cur.push(v);
            rec(i + 1, rem - i as u64 * v as u64, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for f0 in 0..=k {
        cur.push(f0);
        rec(1, max_weight, k, &mut cur, &mut out);
        cur.pop();
    }
    out
}

/// Every `k`-multipartition with `|λ̄| + |fs(λ̄)| ≤ max_size`, parts of
/// `λ^(m)` at least `lower(m)`, and parts of `λ^(k)` of parity `last_parity`
/// when given.
pub fn enum_multi(k: u32, max_size: u64, lower: impl Fn(u32) -> u32, last_parity: Option<i64>) -> Vec<MultiPartition> {
    let k = k as usize;
    let mut out = Vec::new();
    let mut shapes = Vec::new();
    frame_shapes(k, max_size, &mut Vec::new(), &mut shapes);
    for s in shapes {
        let fw = frame_from_lengths(&s).weight();
        let lens: Vec<usize> = (0..k).map(|i| s[i] - s.get(i + 1).copied().unwrap_or(0)).collect();
        let mut lists = Vec::with_capacity(k);
        fill_lists(&lens, &lower, last_parity, max_size - fw, &mut lists, &mut out);
    }
    out
}

/// `s_1 ≥ … ≥ s_k ≥ 0` with `Σ s_i² − Σ s_i ≤ max`.
fn frame_shapes(k: usize, max: u64, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let used: u64 = cur.iter().map(|&s| (s * s - s) as u64).sum();
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    let cap = cur.last().copied().unwrap_or(usize::MAX);
    let mut s = 0;
    while s <= cap && used + (s * s - s) as u64 <= max {
        cur.push(s);
        frame_shapes(k, max, cur, out);
        cur.pop();
        s += 1;
    }
}

fn fill_lists(
    lens: &[usize],
    lower: &impl Fn(u32) -> u32,
    last_parity: Option<i64>,
    budget: u64,
    lists: &mut Vec<Vec<u32>>,
    out: &mut Vec<MultiPartition>,
) {
    let m = lists.len();
    if m == lens.len() {
        out.push(MultiPartition::new(lists.clone()).expect("lists are built weakly decreasing"));
        return;
    }
    let mut d = lower(m as u32 + 1);
    let step = match last_parity {
        Some(p) if m + 1 == lens.len() => {
            if d as i64 % 2 != p {
                d += 1;
            }
            2
        }
        _ => 1,
    };
    let mut parts = Vec::new();
    partitions(lens[m], d, step, budget, &mut Vec::new(), &mut parts);
    for p in parts {
        let used: u64 = p.iter().map(|&x| x as u64).sum();
        lists.push(p);
        fill_lists(lens, lower, last_parity, budget - used, lists, out);
        lists.pop();
    }
}

/// Weakly decreasing lists of `len` parts from `{d, d+step, …}` with sum at
/// most `budget`. Parts are chosen smallest first.
fn partitions(len: usize, d: u32, step: u32, budget: u64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if cur.len() == len {
        let mut p = cur.clone();
        p.reverse();
        out.push(p);
        return;
    }
    let left = (len - cur.len()) as u64;
    let used: u64 = cur.iter().map(|&x| x as u64).sum();
    let mut x = cur.last().copied().unwrap_or(d);
    while used + left * x as u64 <= budget {
        cur.push(x);
        partitions(len, d, step, budget, cur, out);
        cur.pop();
        x += step;
    }
}

/// All `k`-multipartitions with parts `≥ 0` and total size at most `max_size`.
pub fn enum_p(k: u32, max_size: u64) -> Vec<MultiPartition> {
    enum_multi(k, max_size, |_| 0, None)
}

/// `Π 1/(1 − q^n)` over `n ≥ 1` whose residue mod `modulus` is not excluded,
/// by direct counting.
pub fn oracle_mod_partitions(modulus: i64, excluded: &[i64], prec: i64) -> QSeries {
    let w = max_weight(prec) as usize;
    let mut c = vec![BigInt::from(0); w + 1];
    c[0] = BigInt::from(1);
    for n in 1..=w {
        if excluded.iter().any(|&e| (n as i64 - e).rem_euclid(modulus) == 0) {
            continue;
        }
        for m in n..=w {
            let add = c[m - n].clone();
            c[m] += add;
        }
    }
    QSeries::from_terms(c.into_iter().enumerate().map(|(i, v)| (2 * i as i64, v)), prec)
}

/// `(q^M, q^A, q^(M−A); q^M)_∞ / (q)_∞` on the t-grid.
fn theta_over_euler(m: i64, a: i64, prec: i64) -> Result<QSeries> {
    Ok(triple_product(2 * m, 2 * a, prec)?.mul(&inv_euler(prec)).truncate(prec))
}

/// Known product for the families that have one: Gordon and the three
/// `Y_(s,k)` flavors.
pub fn product_formula(family: &Family, prec: i64) -> Result<Option<QSeries>> {
    family.validate()?;
    let v = match *family {
        Family::Gordon { k, r } => Some(theta_over_euler(2 * k as i64 + 3, (k - r) as i64 + 1, prec)?),
        Family::Ysk { flavor, s, k } => {
            let (s, k) = (s as i64, k as i64);
            Some(match flavor {
                Flavor::Plain => theta_over_euler(2 * k + 3, k + 1 - s, prec)?,
                Flavor::Prime => theta_over_euler(2 * k + 2, k + 1 - s, prec)?,
                Flavor::Tilde if s == k => QSeries::zero(prec),
                Flavor::Tilde => theta_over_euler(2 * k + 2, k - s, prec)?,
            })
        }
        _ => None,
    };
    Ok(v)
}

/// Generating function of an X family as a sum over frame shapes of
/// products of "length ℓ, parts ≥ d" partition generating functions.
pub fn x_multisum(flavor: Flavor, j: u32, r: u32, k: u32, prec: i64) -> Result<QSeries> {
    Family::X { flavor, j, r, k }.validate()?;
    let par = Family::X { flavor, j, r, k }.parity();
    let mut shapes = Vec::new();
    frame_shapes(k as usize, max_weight(prec), &mut Vec::new(), &mut shapes);
    let mut total = QSeries::zero(prec);
    for s in shapes {
        let mut e = 2 * frame_from_lengths(&s).weight() as i64;
        let mut term = QSeries::one().truncate(prec);
        for m in 1..=k {
            let i = m as usize - 1;
            let len = (s[i] - s.get(i + 1).copied().unwrap_or(0)) as i64;
            let mut d = x_lower(j, r, k, m).max(0);
            let base = match par {
                Some(p) if m == k => {
                    if d % 2 != p {
                        d += 1;
                    }
                    4
                }
                _ => 2,
            };
            e += 2 * d * len;
            if e >= prec {
                break;
            }
            term = term.mul(&inv_poch_finite(SignedMonomial::new(1, base), base, len, prec - e)?);
        }
        if e < prec {
            total = total.add(&term.shift(e).truncate(prec));
        }
    }
    Ok(total)
}

/// `f_0` image of a Y-family value under φ: the `ℓ` with
/// `f_0 = ℓ + max(ℓ − (j−r), 0)`.
fn phi_head(j: u32, r: u32, f0: u32) -> Option<u32> {
    (0..=j).find(|&l| l as i64 + (l as i64 - (j as i64 - r as i64)).max(0) == f0 as i64)
}

fn with_head(f: &FrequencySeq, f0: u32) -> FrequencySeq {
    let mut v = f.entries().to_vec();
    if v.is_empty() {
        v.push(0);
    }
    v[0] = f0;
    FrequencySeq::new(v)
}

/// `Ỹ′` and `Z̃′` are not equinumerous, so φ and π exist only for the plain
/// and primed flavors.
fn no_tilde(flavor: Flavor) -> Result<()> {
    match flavor {
        Flavor::Tilde => Err(SetError::InvalidParameters("φ and π are not defined on tilde families".into())),
        _ => Ok(()),
    }
}

/// φ: a member of `Y(j,r,k)` (plain or primed) to the matching Z family, by
/// rewriting `f_0` only.
pub fn phi(flavor: Flavor, j: u32, r: u32, k: u32, f: &FrequencySeq) -> Result<FrequencySeq> {
    no_tilde(flavor)?;
    let fam = Family::Y { flavor, j, r, k };
    fam.validate()?;
    if !fam.contains_freq(f) {
        return Err(SetError::NotAMember { object: f.to_string(), family: fam.to_string() });
    }
    let l = phi_head(j, r, f.get(0)).expect("membership fixes f_0");
    Ok(with_head(f, l))
}

/// π: inverse of [`phi`].
pub fn pi(flavor: Flavor, j: u32, r: u32, k: u32, g: &FrequencySeq) -> Result<FrequencySeq> {
    no_tilde(flavor)?;
    let fam = Family::Z { flavor, j, r, k };
    fam.validate()?;
    if !fam.contains_freq(g) {
        return Err(SetError::NotAMember { object: g.to_string(), family: fam.to_string() });
    }
    let l = g.get(0) as i64;
    let f0 = l + (l - (j as i64 - r as i64)).max(0);
    Ok(with_head(g, f0 as u32))
}

/// `f_(2i) ≤ j − max(f_(2i) + f_(2i+1) − (k−r), 0)`.
pub fn z_condition_at(f: &FrequencySeq, i: usize, j: u32, r: u32, k: u32) -> bool {
    let (a, b) = (f.get(2 * i) as i64, f.get(2 * i + 1) as i64);
    a <= j as i64 - (a + b - (k as i64 - r as i64)).max(0)
}

/// The condition at every state of a Λ trace (`θ^(s), …, θ^(0)`) or a Γ
/// trace (`η^(0), …, η^(s)`).
pub fn trace_condition(trace: &MotionTrace, j: u32, r: u32, k: u32) -> bool {
    let n = trace.steps.len();
    let is_lambda = trace.steps.iter().any(|s| matches!(s.op, Op::Motion { .. }));
    trace.steps.iter().enumerate().all(|(t, s)| {
        let i = if is_lambda { n - 1 - t } else { t };
        z_condition_at(&s.state, i, j, r, k)
    })
}

/// Z family together with the catalog row whose sum side it should match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpretation {
    /// `Z` against `stanton_32`.
    Z,
    /// `Z′` against `stanton_42`.
    ZPrime,
    /// `Z̃′` against `nonbinom_kursungoz`.
    ZTilde,
}

impl Interpretation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Z" | "z" => Some(Interpretation::Z),
            "Z'" | "z'" | "zprime" => Some(Interpretation::ZPrime),
            "Z~" | "z~" | "ztilde" => Some(Interpretation::ZTilde),
            _ => None,
        }
    }

    pub fn flavor(self) -> Flavor {
        match self {
            Interpretation::Z => Flavor::Plain,
            Interpretation::ZPrime => Flavor::Prime,
            Interpretation::ZTilde => Flavor::Tilde,
        }
    }

    pub fn catalog_row(self) -> &'static str {
        match self {
            Interpretation::Z => "stanton_32",
            Interpretation::ZPrime => "stanton_42",
            Interpretation::ZTilde => "nonbinom_kursungoz",
        }
    }
}

/// Enumerated generating function of the Z family against the catalog sum
/// side, in the identities report format.
pub fn check_interpretation(which: Interpretation, k: u32, r: u32, j: u32, prec: i64) -> Result<Report> {
    let start = Instant::now();
    let fam = Family::Z { flavor: which.flavor(), j, r, k };
    fam.validate()?;
    let params = Params::krj(k as i64, r as i64, j as i64);
    let (lhs, _) = identities::build(which.catalog_row(), &params)?;
    let sum = identities::eval_sum(&lhs, prec)?;
    let first_mismatch = fam.gf_unchecked(prec).compare(&sum).first_mismatch();
    Ok(Report {
        name: format!("Z{} ~ {}", which.flavor().suffix(), which.catalog_row()),
        params,
        prec,
        equal: first_mismatch.is_none(),
        first_mismatch,
        error: None,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Outcome of [`check_ztilde_relation`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZTildeReport {
    /// t-exponent of the first mismatch of the generating-function relation.
    pub first_mismatch: Option<i64>,
    pub inclusions: bool,
    pub shift_bijection: bool,
}

impl ZTildeReport {
    pub fn holds(&self) -> bool {
        self.first_mismatch.is_none() && self.inclusions && self.shift_bijection
    }
}

/// `(1+q)·gf(Z̃′_(j,r,k)) = gf(Z′_(j,r−1,k)) + q·gf(Z′_(j,r+1,k))`, the
/// inclusions `Z′_(j,r+1,k) ⊆ Z̃′_(j,r,k) ⊆ Z′_(j,r−1,k)`, and that
/// `f_1 ↦ f_1 − 1` maps `Z′_(j,r−1,k) ∖ Z̃′` bijectively onto
/// `Z̃′ ∖ Z′_(j,r+1,k)`, all by enumeration below `prec`.
///
/// The first difference is the part of `Z̃′` with `2f_0 + f_1 = k−r+j`, the
/// second the part of `Z′_(j,r−1,k)` with `2f_0 + f_1 = k−r+j+1`; the map
/// lowers weight by one, so it runs from the second onto the first.
///
/// `Z′_(j,r+1,k)` is evaluated as a predicate even when `j + r + 1 > k`.
pub fn check_ztilde_relation(k: u32, r: u32, j: u32, prec: i64) -> Result<ZTildeReport> {
    if r < 1 {
        return Err(SetError::InvalidParameters("r ≥ 1 required".into()));
    }
    let tilde = Family::Z { flavor: Flavor::Tilde, j, r, k };
    tilde.validate()?;
    let lower = Family::Z { flavor: Flavor::Prime, j, r: r - 1, k };
    let upper = Family::Z { flavor: Flavor::Prime, j, r: r + 1, k };
    let w = max_weight(prec);
    let all = enum_freq(k, w);
    let member = |fam: &Family, f: &FrequencySeq| fam.contains_freq(f);

    let gf = |fam: &Family| counts_to_series(all.iter().filter(|f| member(fam, f)).map(FrequencySeq::weight), prec);
    let one_plus_q = QSeries::from_i64(0, vec![1, 0, 1], i64::MAX);
    let left = one_plus_q.mul(&gf(&tilde)).truncate(prec);
    let right = gf(&lower).add(&gf(&upper).shift(2)).truncate(prec);
    let first_mismatch = left.compare(&right).first_mismatch();

    let inclusions = all
        .iter()
        .all(|f| (!member(&upper, f) || member(&tilde, f)) && (!member(&tilde, f) || member(&lower, f)));

    let shift = |f: &FrequencySeq, d: i64| {
        let mut v = f.entries().to_vec();
        v.resize(v.len().max(2), 0);
        let x = v[1] as i64 + d;
        (x >= 0).then(|| {
            v[1] = x as u32;
            FrequencySeq::new(v)
        })
    };
    let in_d1 = |f: &FrequencySeq| member(&tilde, f) && !member(&upper, f);
    let in_d2 = |f: &FrequencySeq| member(&lower, f) && !member(&tilde, f);
    // Images of D2 land in D1; every D1 element below the bound has a D2 preimage.
    let forward = all.iter().filter(|f| in_d2(f)).all(|f| shift(f, -1).is_some_and(|g| in_d1(&g)));
    let backward = all
        .iter()
        .filter(|f| f.weight() < w && in_d1(f))
        .all(|g| shift(g, 1).is_some_and(|f| in_d2(&f)));

    Ok(ZTildeReport { first_mismatch, inclusions, shift_bijection: forward && backward })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_enumerations() {
        let w0: Vec<_> = enum_freq(2, 0).into_iter().map(|f| f.to_string()).collect();
        assert_eq!(w0, ["()", "(1)", "(2)"]);
        let w2: Vec<_> = enum_freq(1, 2).into_iter().map(|f| f.to_string()).collect();
        assert_eq!(w2, ["()", "(0,0,1)", "(0,1)", "(1)", "(1,0,1)"]);
    }

    #[test]
    fn z_predicate_examples() {
        let z = Family::Z { flavor: Flavor::Plain, j: 1, r: 1, k: 2 };
        assert!(!z.contains(&Object::Freq(FrequencySeq::new(vec![1, 1]))).unwrap());
        assert!(z.contains(&Object::Freq(FrequencySeq::empty())).unwrap());
        assert!(z.contains(&Object::Multi(MultiPartition::empty(2))).is_err());
    }

    #[test]
    fn oracle_small_cases() {
        let o = oracle_mod_partitions(5, &[0, 1, -1], 20);
        assert_eq!(o.coeff(8).unwrap(), BigInt::from(1));
        assert_eq!(oracle_mod_partitions(3, &[0, 1, 2], 20), QSeries::one().truncate(20));
    }
}
