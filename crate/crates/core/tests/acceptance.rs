//! Acceptance criteria 1–9 at zero tolerance. Runs without the libtest
//! harness so that every criterion prints exactly one pass/fail line; the
//! process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use qlattice::bailey::{
    apply, check_coro2, check_coro3, check_corolattice, common_chain, commute_check, coro2_chain, coro3_chain, run_chain,
    verify, BaileyError, BaileyPair, Boundary, SeedKind, Step,
};
use qlattice::identities::{self, build, eval_product, eval_sum, Params};
use qlattice::motion::{
    frame_of, gamma_k, gamma_trace_k, lambda_trace, pm_stepwise, rpm, rpm_stepwise, FrequencySeq, MultiPartition, Op,
};
use qlattice::par::Exec;
use qlattice::qfunctions::{theta_sum, triple_product};
use qlattice::sets::{
    check_interpretation, check_ztilde_relation, enum_freq, enum_p, phi, pi, x_multisum, Family, Flavor, Interpretation,
    Object,
};
use qlattice::SignedMonomial;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn krj(max_k: i64) -> impl Iterator<Item = (i64, i64, i64)> {
    (1..=max_k).flat_map(move |k| (0..=k).flat_map(move |r| (0..=k - r).map(move |j| (k, r, j))))
}

fn q(n: i64) -> SignedMonomial {
    SignedMonomial::q_pow(n)
}

fn m(sign: i8, e: i64) -> SignedMonomial {
    SignedMonomial::new(sign, e)
}

fn catalog_sweep() -> Outcome {
    let reports = identities::sweep(4, 120, Exec::Parallel);
    if let Some(bad) = reports.iter().find(|r| !r.equal) {
        return Err(bad.to_text());
    }
    let subsets = reports.iter().filter(|r| r.params.subset.is_some()).count();
    Ok(format!("{} rows to O(q^60), k ≤ 4, {} of them subset variants", reports.len(), subsets))
}

/// Partitions of `n` into parts whose consecutive differences are at least 2.
fn gap_two_count(n: u32) -> u64 {
    fn rec(rem: u32, max_part: u32) -> u64 {
        if rem == 0 {
            return 1;
        }
        (1..=max_part.min(rem)).map(|p| rec(rem - p, p.saturating_sub(2))).sum()
    }
    rec(n, n)
}

fn rogers_ramanujan() -> Outcome {
    let p = Params { a: Some(1), ..Default::default() };
    let (lhs, rhs) = build("rogers_ramanujan", &p).map_err(|e| e.to_string())?;
    let sum = eval_sum(&lhs, 22).map_err(|e| e.to_string())?.coeff(20).map_err(|e| e.to_string())?;
    let prod = eval_product(&rhs, 22).map_err(|e| e.to_string())?.coeff(20).map_err(|e| e.to_string())?;
    let brute = gap_two_count(10);
    ensure(sum == brute.into() && prod == brute.into(), || format!("sum {sum}, product {prod}, brute force {brute}"))?;
    Ok(format!("q^10 coefficient {brute} on both sides and by brute force"))
}

fn triple_products() -> Outcome {
    let mut n = 0;
    for mm in 1..=12 {
        for a in 1..mm {
            let s = theta_sum(2 * mm, 2 * a, 200).map_err(|e| e.to_string())?;
            let p = triple_product(2 * mm, 2 * a, 200).map_err(|e| e.to_string())?;
            ensure(s == p, || format!("M={mm} A={a}: {:?}", s.compare(&p)))?;
            n += 1;
        }
    }
    Ok(format!("{n} (M, A) pairs to O(q^100)"))
}

const B_PREC: i64 = 100;
const N_MAX: usize = 10;

fn bailey_engine() -> Outcome {
    let seeds: Vec<BaileyPair> = vec![
        SeedKind::Unit.pair(q(1), N_MAX, B_PREC).unwrap(),
        SeedKind::Unit.pair(q(0), N_MAX, B_PREC).unwrap(),
        SeedKind::DPrime1.pair(q(1), N_MAX, B_PREC).unwrap(),
        SeedKind::DPrime4.pair(q(1), N_MAX, B_PREC).unwrap(),
    ];
    let steps = [
        Step::BlInf,
        Step::BlRho(m(-1, 3)),
        Step::BlRho(m(-1, 0)),
        Step::LatticeInf,
        Step::Key1,
        Step::Key2,
        Step::LovejoyB0,
        Step::Lovejoy(m(-1, 0)),
        Step::Lovejoy(m(-1, 1)),
        Step::Star,
        Step::Star1,
    ];
    let mut transforms = 0;
    for p in &seeds {
        for s in steps {
            match apply(s, p) {
                Ok(out) => {
                    ensure(verify(&out, B_PREC).map_err(|e| e.to_string())?.ok(), || format!("{s} on a={}", p.a))?;
                    transforms += 1;
                }
                // Lattice and key steps divide by 1 − a; STAR1 needs a = 1.
                Err(BaileyError::DegenerateDivision(_)) if p.a.is_one() => {}
                Err(BaileyError::Precondition(_)) if s == Step::Star1 && !p.a.is_one() => {}
                Err(e) => return Err(format!("{s} on a={}: {e}", p.a)),
            }
        }
    }
    let all_ok = |log: &[qlattice::bailey::LogEntry]| log.iter().all(|e| e.verdict.ok());
    let mut chains = 0;
    for p in seeds.iter().filter(|p| p.a == q(1)) {
        for (k, r, j) in krj(3) {
            let (_, log) = run_chain(p, &common_chain(k, r, j), B_PREC).map_err(|e| e.to_string())?;
            ensure(all_ok(&log), || format!("common chain k={k} r={r} j={j} from a={}", p.a))?;
            chains += 1;
        }
    }
    for k in 1..=3 {
        let (_, log) = run_chain(&seeds[1], &vec![Step::BlInf; k], B_PREC).map_err(|e| e.to_string())?;
        ensure(all_ok(&log), || format!("BL^{k} from unit(1)"))?;
        chains += 1;
    }
    // Chains through lattices end at a = 1, so they start from seeds at q².
    for kind in [SeedKind::Unit, SeedKind::DPrime1, SeedKind::DPrime4] {
        let seed = kind.pair(q(2), N_MAX, B_PREC).map_err(|e| e.to_string())?;
        for (k, r, j) in krj(4).filter(|&(k, r, j)| j >= 1 && r + j < k) {
            let (_, log) = run_chain(&seed, &coro2_chain(k, r, j).unwrap(), B_PREC).map_err(|e| e.to_string())?;
            ensure(all_ok(&log), || format!("{kind:?} coro2 chain k={k} r={r} j={j}"))?;
            chains += 1;
        }
        let (_, log) = run_chain(&seed, &coro3_chain(4, 1, 2, m(-1, 0), m(-1, 3)).unwrap(), B_PREC).map_err(|e| e.to_string())?;
        ensure(all_ok(&log), || format!("{kind:?} coro3 chain"))?;
        chains += 1;
    }
    let mut checks = 0;
    let bounds = {
        use Boundary::{Finite as F, Infinity as I};
        [
            (I, F(m(-1, 2))),
            (I, F(m(-1, 3))),
            (F(m(-1, 0)), I),
            (F(m(-1, 0)), F(m(-1, 3))),
            (F(m(-1, 1)), I),
        ]
    };
    for kind in [SeedKind::Unit, SeedKind::DPrime1, SeedKind::DPrime4] {
        for a in [q(0), q(1)] {
            let p = kind.pair(a, N_MAX, B_PREC + 60).map_err(|e| e.to_string())?;
            for k in 1..=3 {
                for r in -1..=k {
                    let c = check_corolattice(&p, k, r, B_PREC).map_err(|e| e.to_string())?;
                    ensure(c.holds(), || format!("{kind:?} {c:?}"))?;
                    checks += 1;
                }
            }
            for (k, r, j) in krj(3) {
                let c = check_coro2(&p, k, r, j, B_PREC).map_err(|e| e.to_string())?;
                ensure(c.holds(), || format!("{kind:?} {c:?}"))?;
                checks += 1;
                if a == q(1) {
                    for (b, cc) in bounds {
                        let c = check_coro3(&p, k, r, j, b, cc, B_PREC).map_err(|e| e.to_string())?;
                        ensure(c.holds(), || format!("{kind:?} {c:?}"))?;
                        checks += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{transforms} single transforms, {chains} chains verified stepwise, {checks} lattice checks to O(q^50), n_max 10"))
}

fn commutation() -> Outcome {
    for kind in [SeedKind::Unit, SeedKind::DPrime1, SeedKind::DPrime4] {
        let p = kind.pair(q(0), 8, 80).map_err(|e| e.to_string())?;
        ensure(commute_check(&p, 80).map_err(|e| e.to_string())?.ok(), || format!("{kind:?}"))?;
    }
    Ok("both application orders agree for 3 seeds, n_max 8, O(q^40)".into())
}

fn bijection() -> Outcome {
    let mut multis = 0;
    let mut freqs = 0;
    for k in 1..=3u32 {
        let ps = enum_p(k, 18);
        for mp in &ps {
            let t = lambda_trace(mp);
            for w in t.steps.windows(2) {
                let Op::Motion { u, m, .. } = w[1].op else { unreachable!() };
                let (s, _) = pm_stepwise(&w[0].state, u, m).map_err(|e| e.to_string())?;
                ensure(s == w[1].state, || format!("stepwise motion differs on {mp} at u={u}"))?;
            }
            let f = t.last().unwrap();
            ensure(f.weight() == mp.total_size() && f.in_a(k), || format!("Λ({mp}) = {f}"))?;
            ensure(gamma_k(f, k as usize).as_ref() == Ok(mp), || format!("Γ∘Λ ≠ id on {mp}"))?;
        }
        let fs = enum_freq(k, 18);
        ensure(fs.len() == ps.len(), || format!("k={k}: |P_k| = {} but |A_k| = {}", ps.len(), fs.len()))?;
        for f in &fs {
            let (mp, t) = gamma_trace_k(f, k as usize).map_err(|e| e.to_string())?;
            for w in t.steps.windows(2) {
                let Op::Reverse { u, .. } = w[1].op else { unreachable!() };
                let closed = rpm(&w[0].state, u).map_err(|e| e.to_string())?;
                ensure(rpm_stepwise(&w[0].state, u).as_ref() == Ok(&closed), || format!("reverse motion differs on {f}"))?;
            }
            let back = lambda_trace(&mp).last().cloned().unwrap();
            ensure(&back == f && mp.total_size() == f.weight(), || format!("Λ∘Γ ≠ id on {f}"))?;
        }
        multis += ps.len();
        freqs += fs.len();
    }
    let ex = MultiPartition::new(vec![vec![3, 1], vec![], vec![6, 6, 5, 3], vec![19, 0]]).unwrap();
    let out = lambda_trace(&ex).last().cloned().unwrap();
    let want = FrequencySeq::new(vec![4, 0, 0, 3, 0, 1, 2, 1, 1, 2, 1, 2, 0, 3, 1, 0, 0, 1]);
    ensure(out == want, || format!("worked example gives {out}"))?;
    let summands = [frame_of(&ex).weight(), 4, 0, 20, 19];
    let total: u64 = summands.iter().sum();
    ensure(total == out.weight() && summands[0] == 118, || format!("worked example weight {}", out.weight()))?;
    Ok(format!(
        "{multis} multipartitions and {freqs} sequences up to size 18, k ≤ 3; worked example verbatim with size \
         118+4+0+20+19 = {total} (the quoted total 171 disagrees with its own summands)"
    ))
}

fn interpretations() -> Outcome {
    let mut n = 0;
    for (k, r, j) in krj(3) {
        let (k, r, j) = (k as u32, r as u32, j as u32);
        for which in [Interpretation::Z, Interpretation::ZPrime, Interpretation::ZTilde] {
            let rep = check_interpretation(which, k, r, j, 50).map_err(|e| e.to_string())?;
            ensure(rep.equal, || rep.to_text())?;
            n += 1;
        }
        for flavor in [Flavor::Plain, Flavor::Prime, Flavor::Tilde] {
            let fam = Family::X { flavor, j, r, k };
            let gf = fam.gf(50).map_err(|e| e.to_string())?;
            let ms = x_multisum(flavor, j, r, k, 50).map_err(|e| e.to_string())?;
            ensure(gf == ms, || format!("{fam}: enumeration {:?} multisum", gf.compare(&ms)))?;
            n += 1;
        }
        for flavor in [Flavor::Plain, Flavor::Prime] {
            let y = Family::Y { flavor, j, r, k };
            for o in y.enumerate(20).map_err(|e| e.to_string())? {
                let Object::Freq(f) = o else { unreachable!() };
                let g = phi(flavor, j, r, k, &f).map_err(|e| e.to_string())?;
                ensure(pi(flavor, j, r, k, &g).as_ref() == Ok(&f), || format!("{y}: π∘φ ≠ id on {f}"))?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} checks: Z/Z′/Z̃′ against catalog sums to O(q^25), X-family multisums, φ/π to weight 20"))
}

fn ztilde() -> Outcome {
    let mut n = 0;
    for (k, r, j) in krj(3).filter(|&(_, r, _)| r >= 1) {
        let rep = check_ztilde_relation(k as u32, r as u32, j as u32, 42).map_err(|e| e.to_string())?;
        ensure(rep.holds(), || format!("k={k} r={r} j={j}: {rep:?}"))?;
        n += 1;
    }
    Ok(format!("{n} triples to weight 20 with inclusions and the f_1 shift bijection"))
}

fn reduction_web() -> Outcome {
    let reds = identities::reductions(4, 80).map_err(|e| e.to_string())?;
    if let Some(bad) = reds.iter().find(|r| !r.holds()) {
        return Err(format!("{} fails at t^{:?}", bad.label, bad.first_mismatch));
    }
    Ok(format!("{} degenerations to O(q^40), k ≤ 4", reds.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("catalog sweep", catalog_sweep),
        ("Rogers–Ramanujan spot check", rogers_ramanujan),
        ("Jacobi triple product", triple_products),
        ("Bailey engine", bailey_engine),
        ("commutation", commutation),
        ("bijection round trip", bijection),
        ("combinatorial interpretations", interpretations),
        ("Z̃′ relation", ztilde),
        ("reduction web", reduction_web),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
