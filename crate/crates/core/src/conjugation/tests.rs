use super::*;
use crate::prob::FiniteProbSpace;
use crate::risk::DualDensity;
use crate::SigmaAlgebra;

fn s() -> Strata {
    Strata::uniform_blocks(&[2, 2]).unwrap()
}

fn measure(s: &Strata, fam: RiskFamily) -> RiskMeasure {
    RiskMeasure::new(s, fam).unwrap()
}

fn rv(v: &[f64]) -> RandVar {
    RandVar::new(v.to_vec())
}

#[test]
fn entropic_conjugate_examples() {
    let s = s();
    let f = measure(&s, RiskFamily::Entropic { beta: 1.0 });
    let c = conjugate(&f, &RandVar::constant(4, -1.0)).unwrap();
    assert_eq!(c.value.values(), &[0.0; 4]);

    let y = rv(&[-1.5, -0.5, -1.0, -1.0]);
    let c = conjugate(&f, &y).unwrap();
    let expected = (1.5 * 1.5f64.ln() + 0.5 * 0.5f64.ln()) / 2.0;
    assert!((c.value[0] - expected).abs() < 1e-15);
    assert!((c.value[0] - 0.13082).abs() < 1e-5);
    // plugging the maximizer back in reproduces the value
    let xs = c.maximizer.unwrap();
    let back = s.pairing(&xs, &y).unwrap().sub(&f.evaluate(&xs).unwrap());
    assert!(back.approx_eq(&c.value, 1e-12));

    let oracle = conjugate_ascent(&f, &s, &y, &AscentConfig::default()).unwrap();
    assert!(oracle.value.approx_eq(&c.value, 1e-8), "{:?}", oracle.value);
}

#[test]
fn entropic_conjugate_with_zero_density_entry() {
    let s = s();
    let f = measure(&s, RiskFamily::Entropic { beta: 2.0 });
    let y = rv(&[-2.0, 0.0, -1.0, -1.0]);
    let c = conjugate(&f, &y).unwrap();
    // (1/beta) * E[2 ln 2 * 1{atom 0}] = ln 2 / 2
    assert!((c.value[0] - 2f64.ln() / 2.0).abs() < 1e-15);
    assert!(c.maximizer.is_none());
    let oracle = conjugate_ascent(&f, &s, &y, &AscentConfig::default()).unwrap();
    assert!(oracle.value.approx_eq(&c.value, 1e-8), "{:?}", oracle.value);
}

#[test]
fn neg_cond_expect_conjugate_is_indicator_of_minus_one() {
    let s = s();
    let f = measure(&s, RiskFamily::NegCondExpect);
    let y = rv(&[-1.5, -0.5, -1.0, -1.0]);
    let c = conjugate(&f, &y).unwrap();
    assert_eq!(c.value.values(), &[f64::INFINITY, f64::INFINITY, 0.0, 0.0]);
    let oracle = conjugate_ascent(&f, &s, &y, &AscentConfig::default()).unwrap();
    assert_eq!(oracle.value, c.value);
}

#[test]
fn infeasible_duals_diverge_in_the_oracle() {
    let s = s();
    let cfg = AscentConfig::default();
    for fam in [
        RiskFamily::Entropic { beta: 1.0 },
        RiskFamily::Avar { lambda: vec![0.5] },
        RiskFamily::WorstCase,
    ] {
        let f = measure(&s, fam);
        // positive entry, wrong mass, and (for avar) beyond the cap
        for y in [rv(&[0.5, -2.5, -1.0, -1.0]), rv(&[-1.0, -0.5, -1.0, -1.0]), rv(&[-2.5, 0.5, -1.0, -1.0])] {
            let closed = conjugate(&f, &y).unwrap();
            assert_eq!(closed.value[0], f64::INFINITY);
            let oracle = conjugate_ascent(&f, &s, &y, &cfg).unwrap();
            assert_eq!(oracle.value[0], f64::INFINITY, "{} {y:?}", f.label());
            assert!(oracle.value[2].abs() < 1e-8);
        }
    }
}

#[test]
fn closed_forms_match_oracle_on_domain_points() {
    let s = Strata::new(
        FiniteProbSpace::new(vec![0.1, 0.3, 0.2, 0.15, 0.25]).unwrap(),
        SigmaAlgebra::new(vec![0, 0, 1, 1, 1]).unwrap(),
    )
    .unwrap();
    let q = RandVar::new(vec![-2.5, -0.5, -1.0, -2.0, -0.4]);
    for fam in [
        RiskFamily::Entropic { beta: 0.7 },
        RiskFamily::Avar { lambda: vec![0.4, 0.6] },
        RiskFamily::WorstCase,
        RiskFamily::NegCondExpect,
        RiskFamily::ScenarioRobust { densities: vec![RandVar::constant(5, -1.0), q.clone()] },
    ] {
        let f = measure(&s, fam);
        let mut rng = trial_rng(3, 0);
        let ys: Vec<RandVar> = (0..3).map(|_| sample_domain_density(&f, &mut rng).unwrap()).collect();
        let rec = conjugate_oracle_check(&f, &ys, &AscentConfig::default()).unwrap();
        assert!(rec.passed, "{rec:?}");
    }
}

#[test]
fn biconjugate_reproduces_shipped_families() {
    let s = Strata::uniform_blocks(&[3, 4, 1]).unwrap();
    for fam in [
        RiskFamily::NegCondExpect,
        RiskFamily::Entropic { beta: 1.0 },
        RiskFamily::Entropic { beta: 3.0 },
        RiskFamily::Avar { lambda: vec![0.3, 0.5, 1.0] },
        RiskFamily::WorstCase,
    ] {
        let f = measure(&s, fam);
        let rec = biconjugation_check(&f, 100, 9).unwrap();
        assert!(rec.passed, "{rec:?}");
        assert!(rec.metrics["max_gap"] < 1e-6, "{}: {}", f.label(), rec.metrics["max_gap"]);
    }
}

#[test]
fn linear_biconjugate_is_exact() {
    let s = s();
    let f = measure(&s, RiskFamily::NegCondExpect);
    let x = rv(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(biconjugate(&f, &x).unwrap().value, f.evaluate(&x).unwrap());
}

#[test]
fn nonconvex_oracle_has_biconjugate_below() {
    let s = s();
    let f = |x: &RandVar| -> crate::Result<RandVar> { Ok(s.cond_expect(x)?.abs().neg()) };
    let x = rv(&[1.0, 2.0, -3.0, 0.5]);
    let bi = biconjugate_ascent(&f, &s, &x, &AscentConfig::default()).unwrap();
    let fx = f(&x).unwrap();
    for a in 0..4 {
        assert!(bi.value[a] < fx[a]);
    }
    assert_eq!(bi.value[0], f64::NEG_INFINITY);
}

#[test]
fn dual_representation_examples() {
    let s = s();
    let f = measure(&s, RiskFamily::Entropic { beta: 1.0 });
    let x = rv(&[1.0, 2.0, 3.0, 4.0]);
    let (v, y) = dual_representation(&f, &x).unwrap();
    assert!(v.approx_eq(&f.evaluate(&x).unwrap(), 1e-12));
    assert!((v[0] + 1.37988).abs() < 1e-5 && (v[2] + 3.37988).abs() < 1e-5);
    // y* = -e^{-x} / E[e^{-x} | F]
    let e1 = (-1.0f64).exp();
    let e2 = (-2.0f64).exp();
    assert!((y.y()[0] + e1 / ((e1 + e2) / 2.0)).abs() < 1e-14);

    let c = rv(&[2.0, 2.0, -1.0, -1.0]);
    let (v, y) = dual_representation(&f, &c).unwrap();
    assert!(v.approx_eq(&c.neg(), 1e-14));
    assert!(y.y().approx_eq(&RandVar::constant(4, -1.0), 1e-14));

    let av = measure(&s, RiskFamily::Avar { lambda: vec![0.5] });
    let (v, y) = dual_representation(&av, &x).unwrap();
    assert_eq!(&y.y().values()[..2], &[-2.0, 0.0]);
    assert_eq!(v[0], -1.0);
}

#[test]
fn worst_case_maximizer_ties_go_to_lowest_index() {
    let s = Strata::uniform_blocks(&[3]).unwrap();
    let f = measure(&s, RiskFamily::WorstCase);
    let (_, y) = dual_representation(&f, &rv(&[2.0, -1.0, -1.0])).unwrap();
    assert_eq!(y.y().values(), &[0.0, -3.0, 0.0]);
}

#[test]
fn penalty_examples() {
    let s = s();
    let f = measure(&s, RiskFamily::Entropic { beta: 1.0 });
    let p = DualDensity::new(&s, RandVar::constant(4, -1.0)).unwrap();
    assert_eq!(penalty(&f, &p).unwrap().values(), &[0.0; 4]);
    let d = DualDensity::new(&s, rv(&[-1.5, -0.5, -1.0, -1.0])).unwrap();
    assert!((penalty(&f, &d).unwrap()[0] - 0.13082).abs() < 1e-5);
    let av = measure(&s, RiskFamily::Avar { lambda: vec![0.5] });
    assert_eq!(penalty(&av, &d).unwrap().values(), &[0.0; 4]);
}

#[test]
fn subgradient_examples() {
    let s = s();
    let x = rv(&[1.0, 2.0, 3.0, 4.0]);
    let ne = measure(&s, RiskFamily::NegCondExpect);
    assert_eq!(subgradient(&ne, &x, 0).unwrap().u, RandVar::constant(4, -1.0));
    let en = measure(&s, RiskFamily::Entropic { beta: 1.5 });
    subgradient(&en, &x, 1).unwrap();
    let wc = measure(&s, RiskFamily::WorstCase);
    let u = subgradient(&wc, &x, 2).unwrap().u;
    assert_eq!(u.values(), &[-2.0, 0.0, -2.0, 0.0]);
    // a wrong candidate is caught
    let rec = verify_subgradient(&wc, &x, &rv(&[0.0, -2.0, 0.0, -2.0]), 128, 3).unwrap();
    assert!(!rec.passed);
}

#[test]
fn conjugation_suites_pass_for_shipped_families() {
    let s = Strata::uniform_blocks(&[2, 3, 1]).unwrap();
    let q = RandVar::new(vec![-1.5, -0.5, -3.0, 0.0, 0.0, -1.0]);
    for fam in [
        RiskFamily::NegCondExpect,
        RiskFamily::Entropic { beta: 0.8 },
        RiskFamily::Avar { lambda: vec![0.5] },
        RiskFamily::WorstCase,
        RiskFamily::ScenarioRobust { densities: vec![RandVar::constant(6, -1.0), q.clone()] },
    ] {
        let f = measure(&s, fam);
        let r = conjugation_suite(&f, 100, 5).unwrap();
        assert!(r.passed(), "{}: {:?}", f.label(), r.failures().collect::<Vec<_>>());
    }
}

#[test]
fn classification_examples() {
    let s = s();
    let probes = vec![RandVar::zeros(4), rv(&[1.0, 2.0, 3.0, 4.0])];
    let finite = |x: &RandVar| -> crate::Result<RandVar> { s.cond_expect(x) };
    let c = classify_domain(&finite, &s, &probes).unwrap();
    assert!(c.mi.is_empty() && c.pi.is_empty() && c.bp.atoms().count() == 4);

    let top = |_: &RandVar| -> crate::Result<RandVar> { Ok(RandVar::constant(4, f64::INFINITY)) };
    let c = classify_domain(&top, &s, &probes).unwrap();
    assert_eq!(c.pi.atoms().count(), 4);

    let x0 = probes[1].clone();
    let dip = |x: &RandVar| -> crate::Result<RandVar> {
        let mut v = s.cond_expect(x)?.into_values();
        if *x == x0 {
            v[0] = f64::NEG_INFINITY;
            v[1] = f64::NEG_INFINITY;
        }
        Ok(RandVar::new(v))
    };
    let c = classify_domain(&dip, &s, &probes).unwrap();
    assert_eq!(c.mi, s.block_indicator(0));
    assert_eq!(c.bp, s.block_indicator(1));
    assert!(classify_domain(&dip, &s, &[]).is_err());
}

#[test]
fn closedness_of_entropic() {
    let s = s();
    let f = measure(&s, RiskFamily::Entropic { beta: 1.0 });
    let probes: Vec<RandVar> = (0..20).map(|i| s.random_vector(&mut trial_rng(11, i), -4.0, 4.0)).collect();
    let r = closedness_check(&f, &s, &probes, Some(&f), &AscentConfig::default()).unwrap();
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
}

#[test]
fn closedness_of_box_restricted_entropic() {
    let s = s();
    let ent = measure(&s, RiskFamily::Entropic { beta: 1.0 });
    // +inf on block 0 outside [-1, 1]^2
    let f = |x: &RandVar| -> crate::Result<RandVar> {
        let mut v = ent.evaluate(x)?.into_values();
        if s.block(0).iter().any(|&a| x[a].abs() > 1.0) {
            for &a in s.block(0) {
                v[a] = f64::INFINITY;
            }
        }
        Ok(RandVar::new(v))
    };
    let probes = vec![
        rv(&[0.5, -0.25, 2.0, -3.0]),
        rv(&[0.0, 0.9, 0.0, 1.0]),
        rv(&[1.5, 0.0, 1.0, 1.0]),
    ];
    let r = closedness_check(&f, &s, &probes, None, &AscentConfig::default()).unwrap();
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    let c = r.get("closedness.classification").unwrap();
    assert_eq!(c.metrics["bp_atoms"], 4.0);
}

#[test]
fn closedness_reports_envelope_deficit() {
    let s = s();
    let f = |x: &RandVar| -> crate::Result<RandVar> { Ok(s.cond_expect(x)?.abs().neg()) };
    let probes = vec![rv(&[1.0, 2.0, 3.0, 4.0])];
    let r = closedness_check(&f, &s, &probes, None, &AscentConfig::default()).unwrap();
    assert!(r.get("closedness.biconjugate_below").unwrap().passed);
    let eq = r.get("closedness.biconjugate_equals_f").unwrap();
    assert!(!eq.passed && !eq.witnesses.is_empty());
}
