//! Particle motion, its reverse, and the insertion map Λ with inverse Γ.
//!
//! Frequency sequences are 0-indexed; entry `i` counts parts equal to `i`.
//! Multipartitions may contain parts equal to 0, and list lengths (not
//! positivity) determine the frame.

use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MotionError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid multipartition: {0}")]
    InvalidPartition(String),
    #[error("malformed JSON: {0}")]
    Json(String),
}

type Result<T> = std::result::Result<T, MotionError>;

/// Non-negative integer sequence with trailing zeros trimmed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequencySeq(Vec<u32>);

impl FrequencySeq {
    pub fn new(mut v: Vec<u32>) -> Self {
        while v.last() == Some(&0) {
            v.pop();
        }
        FrequencySeq(v)
    }

    pub fn empty() -> Self {
        FrequencySeq(Vec::new())
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Entry `i`; zero past the support.
    pub fn get(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ i·f_i`.
    pub fn weight(&self) -> u64 {
        self.0.iter().enumerate().map(|(i, &f)| i as u64 * f as u64).sum()
    }

    /// `Σ f_i`.
    pub fn length(&self) -> u64 {
        self.0.iter().map(|&f| f as u64).sum()
    }

    /// `max_i f_i + f_(i+1)`, or 0 for the empty sequence.
    pub fn max_adjacent_sum(&self) -> u32 {
        (0..=self.0.len()).map(|i| self.get(i) + self.get(i + 1)).max().unwrap_or(0)
    }

    /// `f_i + f_(i+1) ≤ k` for all `i`.
    pub fn in_a(&self, k: u32) -> bool {
        self.max_adjacent_sum() <= k
    }

    pub fn to_json(&self) -> Value {
        json!(self.0)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v.as_array().ok_or_else(|| MotionError::Json("frequency sequence must be an array".into()))?;
        let entries = arr
            .iter()
            .map(|x| {
                x.as_u64()
                    .and_then(|n| u32::try_from(n).ok())
                    .ok_or_else(|| MotionError::Json(format!("entry {x} is not a non-negative integer")))
            })
            .collect::<Result<_>>()?;
        Ok(FrequencySeq::new(entries))
    }

    fn padded(&self, n: usize) -> Vec<i64> {
        let mut v: Vec<i64> = self.0.iter().map(|&x| x as i64).collect();
        v.resize(v.len().max(n), 0);
        v
    }

    fn from_buf(v: Vec<i64>) -> Self {
        debug_assert!(v.iter().all(|&x| x >= 0));
        FrequencySeq::new(v.into_iter().map(|x| x as u32).collect())
    }
}

impl fmt::Display for FrequencySeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<Vec<u32>> for FrequencySeq {
    fn from(v: Vec<u32>) -> Self {
        FrequencySeq::new(v)
    }
}

/// `k` weakly decreasing lists of non-negative parts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiPartition {
    parts: Vec<Vec<u32>>,
}

impl MultiPartition {
    pub fn new(parts: Vec<Vec<u32>>) -> Result<Self> {
        for (i, p) in parts.iter().enumerate() {
            if p.windows(2).any(|w| w[0] < w[1]) {
                return Err(MotionError::InvalidPartition(format!("list {} is not weakly decreasing", i + 1)));
            }
        }
        Ok(MultiPartition { parts })
    }

    /// Empty lists, `k` of them.
    pub fn empty(k: usize) -> Self {
        MultiPartition { parts: vec![Vec::new(); k] }
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[Vec<u32>] {
        &self.parts
    }

    /// The list `λ^(m)`, 1-based.
    pub fn list(&self, m: usize) -> &[u32] {
        &self.parts[m - 1]
    }

    pub fn size(&self) -> u64 {
        self.parts.iter().flatten().map(|&x| x as u64).sum()
    }

    pub fn length(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    /// `s_1 ≥ … ≥ s_k` with `len λ^(i) = s_i − s_(i+1)`.
    pub fn s_values(&self) -> Vec<usize> {
        let mut s = vec![0; self.k()];
        let mut acc = 0;
        for i in (0..self.k()).rev() {
            acc += self.parts[i].len();
            s[i] = acc;
        }
        s
    }

    /// `(λ_0, …, λ_(s_1−1))`: all parts, last list first, each list reversed.
    pub fn flattened(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.parts.iter().flatten().copied().collect();
        v.reverse();
        v
    }

    /// `|λ̄| + |fs(λ̄)|`.
    pub fn total_size(&self) -> u64 {
        self.size() + frame_of(self).weight()
    }

    pub fn to_json(&self) -> Value {
        json!({ "parts": self.parts })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let lists = v
            .get("parts")
            .and_then(Value::as_array)
            .ok_or_else(|| MotionError::Json("expected {\"parts\": [[…], …]}".into()))?;
        let parts = lists
            .iter()
            .map(parse_list)
            .collect::<Result<_>>()?;
        MultiPartition::new(parts)
    }
}

fn parse_list(v: &Value) -> Result<Vec<u32>> {
    v.as_array()
        .ok_or_else(|| MotionError::Json("each list must be an array".into()))?
        .iter()
        .map(|x| {
            x.as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| MotionError::Json(format!("part {x} is not a non-negative integer")))
        })
        .collect()
}

impl fmt::Display for MultiPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lists: Vec<String> = self
            .parts
            .iter()
            .map(|p| {
                if p.is_empty() {
                    "∅".to_string()
                } else {
                    format!("({})", p.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
                }
            })
            .collect();
        write!(f, "({})", lists.join(","))
    }
}

/// Frame sequence from `s_1 ≥ … ≥ s_k`: `s_k` pairs `(k,0)`, then
/// `s_(k−1) − s_k` pairs `(k−1,0)`, and so on down to `(1,0)`.
pub fn frame_from_lengths(s: &[usize]) -> FrequencySeq {
    let k = s.len();
    let mut v = Vec::new();
    for i in (1..=k).rev() {
        let next = if i < k { s[i] } else { 0 };
        for _ in next..s[i - 1] {
            v.push(i as u32);
            v.push(0);
        }
    }
    FrequencySeq::new(v)
}

pub fn frame_of(mp: &MultiPartition) -> FrequencySeq {
    frame_from_lengths(&mp.s_values())
}

/// `f_(2i+1) = 0` and `f_(2i) ≥ f_(2i+2)`.
pub fn is_frame(f: &FrequencySeq) -> bool {
    (0..f.len()).all(|i| if i % 2 == 1 { f.get(i) == 0 } else { f.get(i) >= f.get(i + 2) })
}

/// Returns `h` after checking `f_u + f_(u+1) = h ≥ 1` and dominance on `i ≥ u`.
fn dominance(f: &FrequencySeq, u: usize) -> Result<u32> {
    let h = f.get(u) + f.get(u + 1);
    if h == 0 {
        return Err(MotionError::PreconditionViolated(format!("f_{u} + f_{} = 0", u + 1)));
    }
    for i in u..f.len() {
        let s = f.get(i) + f.get(i + 1);
        if s > h {
            return Err(MotionError::PreconditionViolated(format!("f_{i} + f_{} = {s} > h = {h}", i + 1)));
        }
    }
    Ok(h)
}

/// One event of a single-motion simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// `n` single motions at the focus `u`.
    Motions { u: usize, n: u64 },
    /// Focus moved to `to`.
    Shift { to: usize },
}

fn pm_sim(f: &FrequencySeq, u: usize, m: u64, mut sink: impl FnMut(Event, &[i64])) -> Result<(FrequencySeq, usize)> {
    let h = dominance(f, u)? as i64;
    let mut v = f.padded(f.len() + 3);
    let mut focus = u;
    let mut done = 0;
    let mut batch = 0;
    while done < m {
        if v.len() < focus + 3 {
            v.resize(focus + 3, 0);
        }
        if v[focus + 1] + v[focus + 2] < h {
            debug_assert!(v[focus] >= 1);
            v[focus] -= 1;
            v[focus + 1] += 1;
            done += 1;
            batch += 1;
        } else {
            if batch > 0 {
                sink(Event::Motions { u: focus, n: batch }, &v);
                batch = 0;
            }
            focus += 1;
            sink(Event::Shift { to: focus }, &v);
        }
    }
    if batch > 0 {
        sink(Event::Motions { u: focus, n: batch }, &v);
    }
    Ok((FrequencySeq::from_buf(v), focus))
}

/// `m` particle motions from `(f_u, f_(u+1))`, one at a time. Returns the
/// result and the final focus.
pub fn pm_stepwise(f: &FrequencySeq, u: usize, m: u64) -> Result<(FrequencySeq, usize)> {
    pm_sim(f, u, m, |_, _| {})
}

/// Closed form of [`pm_stepwise`] for a starting pair `(h, 0)`. Returns the
/// result and the position `v − 2` the pair moves to.
pub fn pm_explicit(f: &FrequencySeq, u: usize, m: u64) -> Result<(FrequencySeq, usize)> {
    let h = dominance(f, u)?;
    if f.get(u + 1) != 0 {
        return Err(MotionError::PreconditionViolated(format!("starting pair is not (h, 0): f_{} = {}", u + 1, f.get(u + 1))));
    }
    let (h, m) = (h as i64, m as i64);
    let g = |i: usize| f.get(i) as i64;
    // v = min{t ≥ u+2 : Σ_(i=u+2..t) (h − f_(i−1) − f_i) ≥ m}; the gaps are
    // h past the support, so the scan terminates.
    let mut acc = 0;
    let mut v = u + 2;
    loop {
        acc += h - (g(v - 1) + g(v));
        if acc >= m {
            break;
        }
        v += 1;
    }
    let before = acc - (h - (g(v - 1) + g(v)));
    let mut out = f.padded(v + 1);
    for i in u..v - 2 {
        out[i] = g(i + 2);
    }
    out[v - 2] = g(v) + acc - m;
    out[v - 1] = g(v - 1) + m - before;
    Ok((FrequencySeq::from_buf(out), v - 2))
}

fn rpm_check(f: &FrequencySeq, u: usize) -> Result<()> {
    if u > 0 && f.get(u - 1) != 0 {
        return Err(MotionError::PreconditionViolated(format!("f_{} = {} ≠ 0", u - 1, f.get(u - 1))));
    }
    Ok(())
}

/// Reverse particle motions ending at `u`, closed form. Returns the result
/// and the number of reverse motions.
pub fn rpm(f: &FrequencySeq, u: usize) -> Result<(FrequencySeq, u64)> {
    rpm_check(f, u)?;
    let g = |i: usize| f.get(i) as i64;
    let h = (u..=f.len()).map(|i| g(i) + g(i + 1)).max().unwrap_or(0);
    let mut v = u + 2;
    while g(v - 2) + g(v - 1) != h {
        v += 1;
    }
    let mut out = f.padded(v);
    out[u] = h;
    out[u + 1] = 0;
    for i in u + 2..v {
        out[i] = g(i - 2);
    }
    let steps = h - g(u) + (u..v.saturating_sub(2)).map(|i| h - (g(i) + g(i + 1))).sum::<i64>();
    Ok((FrequencySeq::from_buf(out), steps as u64))
}

/// [`rpm`] by simulating single reverse motions.
pub fn rpm_stepwise(f: &FrequencySeq, u: usize) -> Result<(FrequencySeq, u64)> {
    rpm_check(f, u)?;
    let mut v = f.padded(f.len() + 2);
    let h = (u..v.len() - 1).map(|i| v[i] + v[i + 1]).max().unwrap_or(0);
    let mut focus = (u..v.len() - 1).find(|&i| v[i] + v[i + 1] == h).unwrap_or(u);
    let mut steps = 0;
    loop {
        let left = if focus == 0 { 0 } else { v[focus - 1] };
        if focus == u {
            while v[u + 1] > 0 {
                v[u] += 1;
                v[u + 1] -= 1;
                steps += 1;
            }
            break;
        }
        if left + v[focus] < h && v[focus + 1] > 0 {
            v[focus] += 1;
            v[focus + 1] -= 1;
            steps += 1;
        } else {
            focus -= 1;
        }
    }
    Ok((FrequencySeq::from_buf(v), steps))
}

/// One recorded operation of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Start,
    /// `m` particle motions from `u`, landing at `landed`.
    Motion { u: usize, m: u64, landed: usize },
    /// Reverse motions ending at `u`.
    Reverse { u: usize, steps: u64 },
    /// `n` single motions at one focus.
    Single { u: usize, n: u64 },
    Shift { to: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub state: FrequencySeq,
    pub op: Op,
}

/// States with the operation that produced each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MotionTrace {
    pub steps: Vec<TraceStep>,
}

impl MotionTrace {
    fn push(&mut self, state: FrequencySeq, op: Op) {
        self.steps.push(TraceStep { state, op });
    }

    pub fn last(&self) -> Option<&FrequencySeq> {
        self.steps.last().map(|s| &s.state)
    }

    /// One line per state; `⇒` marks motions, `⇐` reverse motions and `→`
    /// focus shifts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let line = match &s.op {
                Op::Start => format!("  {}", s.state),
                Op::Motion { u, m, landed } => format!("⇒ m={m} u={u} → {landed}  {}", s.state),
                Op::Reverse { u, steps } => format!("⇐ steps={steps} u={u}  {}", s.state),
                Op::Single { u, n } => format!("⇒ m={n} at {u}  {}", s.state),
                Op::Shift { to } => format!("→ {to}  {}", s.state),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .steps
            .iter()
            .map(|s| {
                let (op, params) = match &s.op {
                    Op::Start => ("start", json!({})),
                    Op::Motion { u, m, landed } => ("pm", json!({"u": u, "m": m, "landed": landed})),
                    Op::Reverse { u, steps } => ("rpm", json!({"u": u, "steps": steps})),
                    Op::Single { u, n } => ("motion", json!({"u": u, "m": n})),
                    Op::Shift { to } => ("shift", json!({"to": to})),
                };
                json!({"state": s.state.to_json(), "op": op, "params": params})
            })
            .collect();
        Value::Array(items)
    }
}

/// Fine-grained trace of [`pm_stepwise`].
pub fn pm_trace(f: &FrequencySeq, u: usize, m: u64) -> Result<MotionTrace> {
    let mut t = MotionTrace::default();
    t.push(f.clone(), Op::Start);
    pm_sim(f, u, m, |e, buf| {
        let state = FrequencySeq::from_buf(buf.to_vec());
        match e {
            Event::Motions { u, n } => t.push(state, Op::Single { u, n }),
            Event::Shift { to } => t.push(state, Op::Shift { to }),
        }
    })?;
    Ok(t)
}

/// `Λ(λ̄)` with the intermediate states `θ^(s_1), …, θ^(0)`.
pub fn lambda_trace(mp: &MultiPartition) -> MotionTrace {
    let mut t = MotionTrace::default();
    let mut theta = frame_of(mp);
    t.push(theta.clone(), Op::Start);
    let lam = mp.flattened();
    for i in (0..lam.len()).rev() {
        let (next, landed) = pm_explicit(&theta, 2 * i, lam[i] as u64).expect("frame pairs satisfy the motion preconditions");
        theta = next;
        t.push(theta.clone(), Op::Motion { u: 2 * i, m: lam[i] as u64, landed });
    }
    t
}

pub fn lambda(mp: &MultiPartition) -> FrequencySeq {
    lambda_trace(mp).last().cloned().unwrap_or_default()
}

/// `Γ(f)` as a `k`-multipartition with `k` the maximal adjacent sum.
pub fn gamma(f: &FrequencySeq) -> MultiPartition {
    gamma_k(f, f.max_adjacent_sum() as usize).expect("k equals the maximal adjacent sum")
}

/// `Γ(f)` as a `k`-multipartition; fails unless `f ∈ A_k`.
pub fn gamma_k(f: &FrequencySeq, k: usize) -> Result<MultiPartition> {
    gamma_trace_k(f, k).map(|(mp, _)| mp)
}

pub fn gamma_trace(f: &FrequencySeq) -> (MultiPartition, MotionTrace) {
    gamma_trace_k(f, f.max_adjacent_sum() as usize).expect("k equals the maximal adjacent sum")
}

pub fn gamma_trace_k(f: &FrequencySeq, k: usize) -> Result<(MultiPartition, MotionTrace)> {
    if !f.in_a(k as u32) {
        return Err(MotionError::PreconditionViolated(format!("{f} has an adjacent sum above k = {k}")));
    }
    let mut t = MotionTrace::default();
    t.push(f.clone(), Op::Start);
    let mut eta = f.clone();
    let mut mu = Vec::new();
    let mut i = 0;
    while eta.len() > 2 * i {
        let (next, steps) = rpm(&eta, 2 * i)?;
        eta = next;
        mu.push(steps as u32);
        t.push(eta.clone(), Op::Reverse { u: 2 * i, steps });
        i += 1;
    }
    // η^(s) is the frame; its pair (h, 0) at 2i says μ_i belongs to λ^(h).
    let mut parts = vec![Vec::new(); k];
    for idx in (0..mu.len()).rev() {
        let h = eta.get(2 * idx) as usize;
        debug_assert!((1..=k).contains(&h));
        parts[h - 1].push(mu[idx]);
    }
    Ok((MultiPartition::new(parts)?, t))
}

/// At every Λ step the landing pair is the leftmost maximal adjacent pair
/// at or after the starting position.
pub fn landing_is_leftmost_max(trace: &MotionTrace) -> bool {
    trace.steps.iter().all(|s| match s.op {
        Op::Motion { u, landed, .. } => {
            let f = &s.state;
            let sums: Vec<u32> = (u..=f.len().max(u)).map(|i| f.get(i) + f.get(i + 1)).collect();
            let h = sums.iter().copied().max().unwrap_or(0);
            sums.iter().position(|&x| x == h).map(|p| p + u) == Some(landed)
        }
        _ => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(v: &[u32]) -> FrequencySeq {
        FrequencySeq::new(v.to_vec())
    }

    fn example() -> MultiPartition {
        MultiPartition::new(vec![vec![3, 1], vec![], vec![6, 6, 5, 3], vec![19, 0]]).unwrap()
    }

    #[test]
    fn frame_and_lambda_of_the_worked_example() {
        let mp = example();
        assert_eq!(frame_of(&mp), fs(&[4, 0, 4, 0, 3, 0, 3, 0, 3, 0, 3, 0, 1, 0, 1, 0]));
        assert_eq!(frame_of(&mp).weight(), 118);
        let out = lambda(&mp);
        assert_eq!(out, fs(&[4, 0, 0, 3, 0, 1, 2, 1, 1, 2, 1, 2, 0, 3, 1, 0, 0, 1]));
        // 118 + 4 + 0 + 20 + 19.
        assert_eq!(out.weight(), 161);
        assert_eq!(mp.total_size(), 161);
        assert_eq!(gamma(&out), mp);
    }

    #[test]
    fn nine_motions() {
        let f = fs(&[4, 0, 2, 0, 3, 1]);
        let want = fs(&[2, 0, 3, 1, 0, 3, 1]);
        assert_eq!(pm_stepwise(&f, 0, 9).unwrap(), (want.clone(), 5));
        assert_eq!(pm_explicit(&f, 0, 9).unwrap(), (want, 5));
        assert_eq!(pm_stepwise(&f, 0, 0).unwrap().0, f);
        assert!(pm_stepwise(&fs(&[1, 0, 2]), 0, 1).is_err());
    }

    #[test]
    fn reverse_is_not_always_inverse() {
        let f = fs(&[2, 0, 3, 1, 0, 3, 1]);
        let want = (fs(&[4, 0, 2, 0, 0, 3, 1]), 5);
        assert_eq!(rpm(&f, 0).unwrap(), want);
        assert_eq!(rpm_stepwise(&f, 0).unwrap(), want);
        let frame = fs(&[2, 0, 1]);
        assert_eq!(rpm(&frame, 0).unwrap(), (frame.clone(), 0));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(lambda(&MultiPartition::empty(0)), FrequencySeq::empty());
        assert_eq!(gamma(&FrequencySeq::empty()), MultiPartition::empty(0));
    }
}
