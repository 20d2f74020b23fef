use neteffect::detect::{chi2_pvalue, chi2_statistic, ContingencyTable};
use neteffect::{generate, run_test, verdict, EffectLevel, GeneratorSpec, PriorSet, TestConfig};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn two_class(h: f64, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        class_sizes: vec![300, 300],
        h_mix: vec![vec![h, 1.0 - h], vec![1.0 - h, h]],
        m_target: 3000,
        noise_frac: 0.0,
        seed,
    }
}

#[test]
fn pvalue_agrees_with_reference_and_decreases() {
    let reference = ChiSquared::new(1.0).unwrap();
    let mut last = 1.0;
    for k in 0..100 {
        let x = 0.05 * k as f64;
        let p = chi2_pvalue(x);
        assert!((p - (1.0 - reference.cdf(x))).abs() < 1e-9, "x = {x}");
        assert!(p <= last);
        last = p;
    }
    assert_eq!(chi2_pvalue(0.0), 1.0);
}

proptest! {
    #[test]
    fn statistic_is_transpose_invariant(a in 0u32..200, b in 0u32..200, c in 0u32..200, d in 0u32..200) {
        let t = ContingencyTable::new(a as f64, b as f64, c as f64, d as f64);
        let tt = ContingencyTable::new(a as f64, c as f64, b as f64, d as f64);
        let (x, y) = (chi2_statistic(&t), chi2_statistic(&tt));
        prop_assert!(x >= 0.0 && x.is_finite());
        prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0));
    }
}

#[test]
fn table_is_symmetric_and_deterministic() {
    let (g, l) = generate(&two_class(0.8, 3)).unwrap();
    let p = PriorSet::all(&l);
    let cfg = TestConfig { rounds: 50, seed: 9, ..Default::default() };
    let t1 = run_test(&g, &p, &l, &cfg).unwrap();
    let t2 = run_test(&g, &p, &l, &cfg).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(t1.p, t1.p.transpose());
    assert_eq!(t1.p[(0, 0)], 1.0);
    assert!(t1.p[(0, 1)] < 0.05);
}

#[test]
fn single_round_works() {
    let (g, l) = generate(&two_class(0.5, 1)).unwrap();
    let cfg = TestConfig { rounds: 1, ..Default::default() };
    let t = run_test(&g, &PriorSet::all(&l), &l, &cfg).unwrap();
    assert!((0.0..=1.0).contains(&t.p[(0, 1)]));
}

#[test]
fn strong_effects_are_detected() {
    for h in [0.05, 0.95] {
        let (g, l) = generate(&two_class(h, 2)).unwrap();
        let cfg = TestConfig { rounds: 100, ..Default::default() };
        let v = verdict(&run_test(&g, &PriorSet::all(&l), &l, &cfg).unwrap(), cfg.alpha);
        assert_eq!(v.graph_level, EffectLevel::Strong);
    }
}

#[test]
fn rejects_bad_config() {
    let (g, l) = generate(&two_class(0.5, 1)).unwrap();
    let p = PriorSet::all(&l);
    assert!(run_test(&g, &p, &l, &TestConfig { rounds: 0, ..Default::default() }).is_err());
    assert!(run_test(&g, &p, &l, &TestConfig { cap: 5, ..Default::default() }).is_err());
}
