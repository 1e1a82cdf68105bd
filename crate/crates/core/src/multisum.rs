//! Nested sums over `s_1 ≥ s_2 ≥ … ≥ s_K ≥ 0`.
//!
//! A term is the product over levels `i` of
//! `sign_i^(s_i) · t^(quad_i·s_i² + lin_i·s_i) · factor_i(s_i) / den_i(s_i − s_(i+1))`
//! times the coupling `(1 + t^(m·(s_(i−1)+s_i)))` where a level requests one
//! (`s_(K+1) = 0`). Factors must have non-negative valuation.
//!
//! Evaluation memoizes the suffix sums: the sum over `s_(i+1), …, s_K` given
//! `s_i` does not depend on `s_1, …, s_(i−1)`. Level ranges are pruned with
//! the bound `quad·s² + lin·s + Σ_(other levels) min(quad·x² + lin·x) < prec`.

use std::sync::Arc;

use thiserror::Error;

use crate::qfunctions::{QError, SignedMonomial};
use crate::series::{QSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SumError {
    #[error("level {level} needs index {needed} but only {available} are available")]
    Insufficient { level: usize, needed: i64, available: i64 },
    #[error("level {0} has no quadratic growth; the sum does not terminate")]
    Unbounded(usize),
    #[error("level {level} factor at s = {s} has negative valuation {valuation}")]
    NegativeFactor { level: usize, s: i64, valuation: i64 },
    #[error("working precision fell short: got {got}, wanted {want}")]
    PrecisionLoss { got: i64, want: i64 },
    #[error(transparent)]
    Q(#[from] QError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Per-index series factor `s ↦ f(s)` evaluated to a given precision.
pub type Factor = Arc<dyn Fn(i64, i64) -> Result<QSeries, SumError> + Send + Sync>;

#[derive(Clone, Default)]
pub struct Level {
    pub quad: i64,
    pub lin: i64,
    /// `(−1)^(s_i)` when set.
    pub alternating: bool,
    /// Pochhammer denominators `(x; t^base)_(s_i − s_(i+1))`.
    pub den: Vec<(SignedMonomial, i64)>,
    /// Coupling `(1 + t^(m·(s_(i−1)+s_i)))` with the previous level.
    pub pair: Option<i64>,
    pub factor: Option<Factor>,
    /// Largest admissible `s_i` (e.g. the last index of a finite β prefix).
    pub max_index: Option<i64>,
}

impl Level {
    pub fn new(quad: i64, lin: i64) -> Self {
        Level { quad, lin, ..Default::default() }
    }

    pub fn den(mut self, x: SignedMonomial, base: i64) -> Self {
        self.den.push((x, base));
        self
    }

    pub fn pair(mut self, m: i64) -> Self {
        self.pair = Some(m);
        self
    }

    pub fn alternating(mut self) -> Self {
        self.alternating = true;
        self
    }

    pub fn factor(mut self, f: Factor) -> Self {
        self.factor = Some(f);
        self
    }

    pub fn max_index(mut self, n: i64) -> Self {
        self.max_index = Some(n);
        self
    }

    fn mono(&self, s: i64) -> i64 {
        self.quad * s * s + self.lin * s
    }

    /// Minimum of the level exponent over `s ≥ 0`, or `None` if unbounded.
    fn min_exponent(&self) -> Option<i64> {
        if self.quad < 0 || (self.quad == 0 && self.lin < 0) {
            return None;
        }
        if self.quad == 0 {
            return Some(self.lin.min(0));
        }
        // Vertex at s = −lin/(2·quad); check the integers around it.
        let v = (-self.lin).div_euclid(2 * self.quad).max(0);
        Some((v..=v + 1).map(|s| self.mono(s)).min().unwrap().min(0))
    }
}

/// Multiply `a` by `1/(1 − x)`.
pub fn div_one_minus(a: &QSeries, x: SignedMonomial) -> Result<QSeries, SumError> {
    if x.e > 0 && !a.is_exact() {
        // b_n = a_n + sign·b_(n−e) on the stored range.
        let prec = a.prec();
        let lo = match a.valuation() {
            Some(v) => v,
            None => return Ok(a.clone()),
        };
        let n = (prec - lo).max(0) as usize;
        let e = x.e as usize;
        let mut b: Vec<num_bigint::BigInt> = Vec::with_capacity(n);
        for i in 0..n {
            let mut c = a.coeff(lo + i as i64)?;
            if i >= e {
                if x.sign > 0 {
                    c += &b[i - e];
                } else {
                    c -= &b[i - e];
                }
            }
            b.push(c);
        }
        return Ok(QSeries::from_terms(b.into_iter().enumerate().map(|(i, c)| (lo + i as i64, c)), prec));
    }
    let d = QSeries::one().sub(&x.to_series()).truncate(a.prec().max(0) + x.e.abs() * 2);
    Ok(a.mul(&d.invert()?))
}

/// Evaluate the nested sum up to `prec`.
pub fn eval(levels: &[Level], prec: i64) -> Result<QSeries, SumError> {
    if levels.is_empty() {
        return Ok(QSeries::one().truncate(prec));
    }
    let k = levels.len();
    let mins: Vec<i64> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| l.min_exponent().ok_or(SumError::Unbounded(i)))
        .collect::<Result<_, _>>()?;
    let total_min: i64 = mins.iter().sum();
    let work = prec - total_min;

    // Largest useful index per level, also capped by the ordering s_i ≤ s_(i−1).
    let mut caps: Vec<i64> = Vec::with_capacity(k);
    for (i, l) in levels.iter().enumerate() {
        let others = total_min - mins[i];
        let ceiling = if i > 0 { Some(caps[i - 1]) } else { None };
        if l.quad == 0 && l.lin <= 0 && ceiling.is_none() {
            return Err(SumError::Unbounded(i));
        }
        let mut s = 0;
        let mut last_ok = -1;
        // Past the vertex the exponent only grows, so the scan can stop.
        while ceiling.is_none_or(|c| s <= c) {
            if l.mono(s) + others < prec {
                last_ok = s;
            } else if l.mono(s + 1) >= l.mono(s) {
                break;
            }
            s += 1;
        }
        if let Some(m) = l.max_index {
            if last_ok > m {
                return Err(SumError::Insufficient { level: i, needed: last_ok, available: m });
            }
        }
        caps.push(last_ok);
    }
    if caps.iter().any(|&c| c < 0) {
        return Ok(QSeries::zero(prec));
    }

    // inv_den[i][d] = 1/den_i(d).
    let inv_den: Vec<Vec<QSeries>> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let dmax = caps[i];
            let mut out = Vec::with_capacity(dmax as usize + 1);
            let mut cur = QSeries::one().truncate(work);
            out.push(cur.clone());
            for d in 0..dmax {
                for &(x, base) in &l.den {
                    cur = div_one_minus(&cur, x.shift(d * base))?;
                }
                out.push(cur.clone());
            }
            Ok(out)
        })
        .collect::<Result<_, SumError>>()?;

    let own = |i: usize, s: i64| -> Result<QSeries, SumError> {
        let l = &levels[i];
        let sign = if l.alternating && s % 2 == 1 { -1 } else { 1 };
        let mut g = QSeries::monomial(sign, l.mono(s));
        if let Some(f) = &l.factor {
            let v = f(s, work)?;
            if let Some(val) = v.valuation() {
                if val < 0 {
                    return Err(SumError::NegativeFactor { level: i, s, valuation: val });
                }
            }
            g = g.mul(&v);
        }
        Ok(g)
    };

    let mut below: Vec<QSeries> = (0..=caps[k - 1])
        .map(|s| Ok(own(k - 1, s)?.mul(&inv_den[k - 1][s as usize])))
        .collect::<Result<_, SumError>>()?;
    for i in (0..k - 1).rev() {
        let child = &levels[i + 1];
        let mut cur = Vec::with_capacity(caps[i] as usize + 1);
        for s in 0..=caps[i] {
            let mut inner = QSeries::zero(work);
            for u in 0..=s.min(caps[i + 1]) {
                let mut g = below[u as usize].clone();
                if let Some(m) = child.pair {
                    g = g.add(&g.shift(m * (s + u)));
                }
                inner = inner.add(&g.mul(&inv_den[i][(s - u) as usize]));
            }
            cur.push(own(i, s)?.mul(&inner));
        }
        below = cur;
    }
    let total = below.into_iter().fold(QSeries::zero(work), |acc, x| acc.add(&x));
    if total.prec() < prec {
        return Err(SumError::PrecisionLoss { got: total.prec(), want: prec });
    }
    Ok(total.truncate(prec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfunctions::{inv_poch_finite, poch_finite};

    fn q() -> SignedMonomial {
        SignedMonomial::q_pow(1)
    }

    /// Direct enumeration of every tuple, one series product per term.
    fn brute(levels: &[Level], prec: i64, bound: i64) -> QSeries {
        let k = levels.len();
        let mut total = QSeries::zero(prec);
        let mut s = vec![0i64; k];
        fn rec(
            i: usize,
            s: &mut Vec<i64>,
            levels: &[Level],
            prec: i64,
            bound: i64,
            total: &mut QSeries,
        ) {
            let k = levels.len();
            if i == k {
                let mut term = QSeries::one().truncate(prec + 200);
                for (j, l) in levels.iter().enumerate() {
                    let sj = s[j];
                    let next = if j + 1 < k { s[j + 1] } else { 0 };
                    let sign = if l.alternating && sj % 2 == 1 { -1 } else { 1 };
                    term = term.mul(&QSeries::monomial(sign, l.quad * sj * sj + l.lin * sj));
                    for &(x, base) in &l.den {
                        term = term.mul(&inv_poch_finite(x, base, sj - next, prec + 200).unwrap());
                    }
                    if let Some(m) = l.pair {
                        let prev = s[j - 1];
                        term = term.mul(&QSeries::one().add(&QSeries::monomial(1, m * (prev + sj))));
                    }
                    if let Some(f) = &l.factor {
                        term = term.mul(&f(sj, prec + 200).unwrap());
                    }
                }
                *total = total.add(&term.truncate(prec));
                return;
            }
            let top = if i == 0 { bound } else { s[i - 1] };
            for v in 0..=top {
                s[i] = v;
                rec(i + 1, s, levels, prec, bound, total);
            }
        }
        rec(0, &mut s, levels, prec, bound, &mut total);
        total
    }

    #[test]
    fn empty_sum_is_one() {
        assert_eq!(eval(&[], 10).unwrap(), QSeries::one().truncate(10));
    }

    #[test]
    fn matches_brute_force_on_mixed_levels() {
        let head: Factor = Arc::new(|s, p| Ok(poch_finite(SignedMonomial::new(-1, 0), 2, s, p)?));
        let levels = vec![
            Level::new(1, 1).den(q(), 2).factor(head),
            Level::new(2, -2).den(q(), 2).pair(2),
            Level::new(2, 2).den(q(), 2).den(SignedMonomial::new(-1, 1), 2).alternating(),
        ];
        let fast = eval(&levels, 40).unwrap();
        let slow = brute(&levels, 40, 9);
        assert_eq!(fast, slow);
    }

    #[test]
    fn single_level_is_euler_sum() {
        // Σ q^(n²)/(q)_n against direct brute force.
        let levels = vec![Level::new(2, 0).den(q(), 2)];
        assert_eq!(eval(&levels, 60).unwrap(), brute(&levels, 60, 7));
    }

    #[test]
    fn unbounded_level_is_rejected() {
        let levels = vec![Level::new(0, -1).den(q(), 2)];
        assert_eq!(eval(&levels, 10), Err(SumError::Unbounded(0)));
    }

    #[test]
    fn geometric_division() {
        let a = QSeries::one().truncate(20);
        let b = div_one_minus(&a, q()).unwrap();
        for e in (0..20).step_by(2) {
            assert_eq!(b.coeff(e).unwrap(), 1.into());
        }
        let c = div_one_minus(&a, SignedMonomial::new(-1, 3)).unwrap();
        assert_eq!(c.coeff(3).unwrap(), (-1).into());
        assert_eq!(c.coeff(6).unwrap(), 1.into());
    }
}
