use qlattice::bailey::{
    apply, beta_limit, check_common2, check_coro2, check_coro3, check_corolattice, common_chain, common_chain_alpha,
    commute_check, coro2_chain, coro2_lhs, coro3_chain, coro3_lhs, run_chain, verify, BaileyError, BaileyPair, Boundary,
    Recipe, SeedKind, Step,
};
use qlattice::identities::{build, eval_sum, subsets, Params};
use qlattice::qfunctions::{inv_euler, poch_infinite};
use qlattice::{Comparison, QSeries, SignedMonomial};

const PREC: i64 = 100;
const N_MAX: usize = 10;

fn q(n: i64) -> SignedMonomial {
    SignedMonomial::q_pow(n)
}

fn m(sign: i8, e: i64) -> SignedMonomial {
    SignedMonomial::new(sign, e)
}

const SEEDS: [SeedKind; 3] = [SeedKind::Unit, SeedKind::DPrime1, SeedKind::DPrime4];

fn seed_set() -> Vec<BaileyPair> {
    vec![
        SeedKind::Unit.pair(q(1), N_MAX, PREC).unwrap(),
        SeedKind::Unit.pair(q(0), N_MAX, PREC).unwrap(),
        SeedKind::DPrime1.pair(q(1), N_MAX, PREC).unwrap(),
        SeedKind::DPrime4.pair(q(1), N_MAX, PREC).unwrap(),
    ]
}

#[test]
fn every_transform_preserves_the_relation() {
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
    for p in seed_set() {
        for s in steps {
            match apply(s, &p) {
                Ok(out) => assert!(verify(&out, PREC).unwrap().ok(), "{s} on a={}", p.a),
                Err(BaileyError::DegenerateDivision(_)) => {
                    assert!(p.a.is_one() && matches!(s, Step::LatticeInf | Step::Key1 | Step::Key2))
                }
                Err(BaileyError::Precondition(_)) => assert!(s == Step::Star1 && !p.a.is_one()),
                Err(e) => panic!("{s} on a={}: {e}", p.a),
            }
        }
    }
}

#[test]
fn common_chain_steps_verify_and_match_closed_form() {
    for p in seed_set().into_iter().filter(|p| p.a == q(1)) {
        for k in 1..=3 {
            for r in 0..=k {
                for j in 0..=k - r {
                    let (out, log) = run_chain(&p, &common_chain(k, r, j), PREC).unwrap();
                    assert!(log.iter().all(|e| e.verdict.ok()), "k={k} r={r} j={j}: {log:?}");
                    assert!(out.a.is_one());
                    for n in 0..=N_MAX as i64 {
                        let want = common_chain_alpha(&p, k, r, j, n).unwrap();
                        assert_eq!(out.alpha[n as usize].equal_up_to(&want, PREC).unwrap(), Comparison::Equal);
                    }
                }
            }
        }
    }
}

#[test]
fn common_chain_limit_is_the_binomial_sum() {
    // β_∞ (q)_∞ of the chain on the unit pair is the stanton_31 sum side.
    let prec = 40;
    let seed = SeedKind::Unit.pair(q(1), 22, prec).unwrap();
    for (k, r, j) in [(1, 0, 1), (2, 0, 1), (2, 1, 1), (2, 0, 2)] {
        let (out, _) = run_chain(&seed, &common_chain(k, r, j), prec).unwrap();
        let lim = beta_limit(&out, prec).unwrap().mul(&qlattice::qfunctions::euler(prec));
        let (lhs, _) = build("stanton_31", &Params::krj(k, r, j)).unwrap();
        let want = eval_sum(&lhs, prec).unwrap();
        assert_eq!(lim.equal_up_to(&want, prec).unwrap(), Comparison::Equal, "k={k} r={r} j={j}");
    }
}

#[test]
fn beta_limit_needs_depth() {
    let p = apply(Step::BlInf, &SeedKind::Unit.pair(q(1), 4, 40).unwrap()).unwrap();
    assert!(matches!(beta_limit(&p, 40), Err(BaileyError::NotStabilized { .. })));
}

#[test]
fn two_bl_steps_give_rogers_ramanujan() {
    let prec = 40;
    for (a, name_a) in [(q(1), 0), (q(0), 1)] {
        let seed = SeedKind::Unit.pair(a, 22, prec).unwrap();
        let (out, _) = run_chain(&seed, &[Step::BlInf, Step::BlInf], prec).unwrap();
        let lim = beta_limit(&out, prec).unwrap().mul(&qlattice::qfunctions::euler(prec));
        let mut p = Params::default();
        p.a = Some(name_a);
        let (lhs, _) = build("rogers_ramanujan", &p).unwrap();
        assert_eq!(lim.equal_up_to(&eval_sum(&lhs, prec).unwrap(), prec).unwrap(), Comparison::Equal);
    }
}

#[test]
fn lattice_chains_replicated_from_q_squared() {
    let prec = 30;
    for kind in SEEDS {
        let seed = kind.pair(q(2), 18, prec).unwrap();
        for k in 2..=4 {
            for r in 0..k {
                for j in 1..k - r {
                    let (out, log) = run_chain(&seed, &coro2_chain(k, r, j).unwrap(), prec).unwrap();
                    assert!(log.iter().all(|e| e.verdict.ok()), "{kind:?} k={k} r={r} j={j}");
                    assert!(out.a.is_one());
                    let lim = beta_limit(&out, prec).unwrap().mul(&qlattice::qfunctions::euler(prec));
                    let lhs = coro2_lhs(&seed, k, r, j, prec).unwrap();
                    assert_eq!(lim.equal_up_to(&lhs, prec).unwrap(), Comparison::Equal, "{kind:?} k={k} r={r} j={j}");
                }
            }
        }
    }
}

#[test]
fn coro3_chain_replicated_from_q_squared() {
    let prec = 30;
    let (b, c) = (m(-1, 0), m(-1, 3));
    for kind in SEEDS {
        let seed = kind.pair(q(2), 18, prec).unwrap();
        let (k, r, j) = (4, 1, 2);
        let (out, log) = run_chain(&seed, &coro3_chain(k, r, j, b, c).unwrap(), prec).unwrap();
        assert!(log.iter().all(|e| e.verdict.ok()), "{kind:?}");
        // β_∞ (q)_∞ (a/bq)_∞ with a = q², b = −1.
        let lim = beta_limit(&out, prec)
            .unwrap()
            .mul(&qlattice::qfunctions::euler(prec))
            .mul(&poch_infinite(m(-1, 2), 2, prec).unwrap());
        let lhs = coro3_lhs(&seed, k, r, j, Boundary::Finite(b), Boundary::Finite(c), prec).unwrap();
        assert_eq!(lim.equal_up_to(&lhs, prec).unwrap(), Comparison::Equal, "{kind:?}");
    }
}

#[test]
fn corolattice_holds() {
    for kind in SEEDS {
        for a in [q(0), q(1)] {
            let p = kind.pair(a, N_MAX, PREC + 60).unwrap();
            for k in 1..=3 {
                for r in -1..=k {
                    let c = check_corolattice(&p, k, r, PREC).unwrap();
                    assert!(c.holds(), "{kind:?} {c:?}");
                }
            }
        }
    }
}

#[test]
fn coro2_holds() {
    for kind in SEEDS {
        for a in [q(0), q(1)] {
            let p = kind.pair(a, N_MAX, PREC + 60).unwrap();
            for k in 1..=3 {
                for r in 0..=k {
                    for j in 0..=k - r {
                        let c = check_coro2(&p, k, r, j, PREC).unwrap();
                        assert!(c.holds(), "{kind:?} {c:?}");
                    }
                }
            }
        }
    }
}

fn boundaries() -> Vec<(Boundary, Boundary)> {
    use Boundary::{Finite as F, Infinity as I};
    vec![
        (I, F(m(-1, 2))),
        (I, F(m(-1, 3))),
        (I, F(m(-1, 1))),
        (F(m(-1, 0)), I),
        (F(m(-1, 0)), F(m(-1, 3))),
        (F(m(-1, 1)), F(m(-1, 3))),
        (F(m(-1, 1)), I),
    ]
}

#[test]
fn coro3_holds() {
    for kind in SEEDS {
        let p = kind.pair(q(1), N_MAX, PREC + 60).unwrap();
        for (b, c) in boundaries() {
            for k in 1..=3 {
                for r in 0..=k {
                    for j in 0..=k - r {
                        let chk = check_coro3(&p, k, r, j, b, c, PREC).unwrap();
                        assert!(chk.holds(), "{kind:?} {chk:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn coro3_rejects_double_infinity_and_a_one() {
    let p = SeedKind::Unit.pair(q(1), 6, 40).unwrap();
    let e = check_coro3(&p, 2, 0, 1, Boundary::Infinity, Boundary::Infinity, 40);
    assert!(matches!(e, Err(BaileyError::UnsupportedBoundary(_))));
    let p1 = SeedKind::Unit.pair(q(0), 6, 40).unwrap();
    let e = check_coro3(&p1, 2, 0, 1, Boundary::Infinity, Boundary::Finite(m(-1, 2)), 40);
    assert!(matches!(e, Err(BaileyError::ParameterOutOfRange(_))));
}

#[test]
fn coro3_specializes_to_catalog_sums() {
    let prec = 60;
    let p = SeedKind::Unit.pair(q(1), N_MAX, prec + 40).unwrap();
    use Boundary::{Finite as F, Infinity as I};
    for k in 1..=3 {
        for r in 0..=k {
            for j in 0..=k - r {
                let params = Params::krj(k, r, j);
                let side = |name: &str| eval_sum(&build(name, &params).unwrap().0, prec).unwrap();
                let s42 = coro3_lhs(&p, k, r, j, I, F(m(-1, 2)), prec).unwrap();
                assert_eq!(s42.equal_up_to(&side("stanton_42"), prec).unwrap(), Comparison::Equal);
                let ns = coro3_lhs(&p, k, r, j, F(m(-1, 0)), I, prec).unwrap();
                assert_eq!(ns.equal_up_to(&side("new_slater"), prec).unwrap(), Comparison::Equal);
                if r >= 1 {
                    let ns2 = coro3_lhs(&p, k, r, j, F(m(-1, 0)), F(m(-1, 3)), prec).unwrap();
                    let ns2 = ns2.add(&ns2.shift(1));
                    assert_eq!(ns2.equal_up_to(&side("new_slater2"), prec).unwrap(), Comparison::Equal);
                }
            }
        }
    }
}

#[test]
fn common2_holds_for_every_subset() {
    let p = SeedKind::Unit.pair(q(1), N_MAX, PREC + 60).unwrap();
    for k in 1..=4 {
        for r in 0..=k {
            for j in 0..=k - r {
                for t in subsets(k - r, j) {
                    let c = check_common2(&p, k, r, &t, PREC).unwrap();
                    assert!(c.holds(), "{c:?}");
                }
            }
        }
    }
}

#[test]
fn star1_commutes_with_bl() {
    for kind in SEEDS {
        let p = kind.pair(q(0), N_MAX, PREC).unwrap();
        assert!(commute_check(&p, PREC).unwrap().ok(), "{kind:?}");
    }
}

#[test]
fn recipe_round_trip() {
    let v = serde_json::json!({
        "seed": {"kind": "dprime1", "a": "q"},
        "steps": [{"tag": "BL_INF"}, {"tag": "KEY1"}, {"tag": "STAR1"}, {"tag": "BL_RHO", "rho": "-q^(3/2)"}],
        "prec": 30
    });
    let r = Recipe::from_json(&v).unwrap();
    assert_eq!(Recipe::from_json(&r.to_json()).unwrap(), r);
    let (_, log) = r.run().unwrap();
    assert_eq!(log.len(), 4);
    assert!(log.iter().all(|e| e.verdict.ok()));
}

#[test]
fn inv_euler_is_used_consistently() {
    // Guards the (q)_∞ normalisation used in the limit comparisons above.
    let e = qlattice::qfunctions::euler(30).mul(&inv_euler(30));
    assert_eq!(e.equal_up_to(&QSeries::one(), 30).unwrap(), Comparison::Equal);
}

#[test]
fn corrupted_pair_breaks_the_lattice_checks() {
    let mut p = SeedKind::DPrime4.pair(q(1), N_MAX, PREC + 60).unwrap();
    p.beta[1] = p.beta[1].add(&QSeries::monomial(1, 10));
    assert!(!check_corolattice(&p, 2, 0, PREC).unwrap().holds());
    assert!(!check_coro2(&p, 2, 0, 1, PREC).unwrap().holds());
    let c = check_coro3(&p, 2, 0, 1, Boundary::Infinity, Boundary::Finite(m(-1, 2)), PREC).unwrap();
    assert!(!c.holds());
}
