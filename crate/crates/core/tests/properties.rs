use std::sync::Arc;

use octoalg::algebra::{Element, StructureTable};
use octoalg::catalog::{self, AutomorphismLabel};
use octoalg::derivations;
use octoalg::invariance::{self, instantiate, Expr, PolySpec, Scalar, Vars};
use octoalg::transforms::{duality_match, eval_transform, TransformSpec};
use proptest::prelude::*;

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 8)
}

fn imaginary(max: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-max..max, 7).prop_map(|mut v| {
        v.insert(0, 0.0);
        v
    })
}

fn label(x: u8) -> AutomorphismLabel {
    AutomorphismLabel::from_flags(std::array::from_fn(|n| x >> n & 1 == 1))
}

fn table(n: usize) -> Arc<StructureTable> {
    catalog::table_by_index(n).unwrap()
}

fn el(t: &Arc<StructureTable>, c: &[f64]) -> Element {
    Element::new(t, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_multiplicative(n in 0..16usize, a in coeffs(), b in coeffs()) {
        let t = table(n);
        let (a, b) = (el(&t, &a), el(&t, &b));
        let lhs = (&a * &b).norm();
        prop_assert!((lhs - a.norm() * b.norm()).abs() <= 1e-12 * (1.0 + lhs));
    }

    #[test]
    fn conjugation_reverses_products(n in 0..16usize, a in coeffs(), b in coeffs()) {
        let t = table(n);
        let (a, b) = (el(&t, &a), el(&t, &b));
        let d = (&a * &b).conjugate().distance(&(&b.conjugate() * &a.conjugate()));
        prop_assert!(d <= 1e-13);
    }

    #[test]
    fn associator_alternates(n in 0..16usize, a in coeffs(), b in coeffs()) {
        let t = table(n);
        let (a, b) = (el(&t, &a), el(&t, &b));
        prop_assert!(a.associator(&a, &b).unwrap().max_abs() <= 1e-12);
        prop_assert!(a.associator(&b, &b).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn exp_log_round_trip(n in 0..16usize, v in imaginary(1.0)) {
        let t = table(n);
        let v = el(&t, &v);
        prop_assume!(v.norm() < 3.0 && v.norm() > 1e-6);
        prop_assert!(v.exp().log().unwrap().distance(&v) <= 1e-12);
    }

    #[test]
    fn derivations_are_antisymmetric_and_bilinear(u in coeffs(), w in coeffs(), v in coeffs(), s in -2.0..2.0f64) {
        let t = table(0);
        let (u, w, v) = (el(&t, &u), el(&t, &w), el(&t, &v));
        let duv = derivations::derivation(&u, &v).unwrap();
        let dvu = derivations::derivation(&v, &u).unwrap();
        prop_assert!((duv.matrix() + dvu.matrix()).amax() <= 1e-12);
        let combo = derivations::derivation(&(&u.scale(s) + &w), &v).unwrap();
        let dwv = derivations::derivation(&w, &v).unwrap();
        prop_assert!((combo.matrix() - (duv.matrix() * s + dwv.matrix())).amax() <= 1e-11);
    }

    #[test]
    fn derivations_obey_leibniz(n in 0..16usize, u in coeffs(), v in coeffs(), a in coeffs(), b in coeffs()) {
        let t = table(n);
        let d = derivations::derivation(&el(&t, &u), &el(&t, &v)).unwrap();
        let (a, b) = (el(&t, &a), el(&t, &b));
        let lhs = d.apply(&(&a * &b)).unwrap();
        let rhs = &(&d.apply(&a).unwrap() * &b) + &(&a * &d.apply(&b).unwrap());
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-10);
    }

    #[test]
    fn automorphisms_compose_by_xor(n in 0..16usize, x in 0..16u8, y in 0..16u8) {
        let (lx, ly) = (label(x), label(y));
        let stepwise = catalog::apply_to_index(lx, catalog::index_of(&catalog::apply_to_index(ly, n)).unwrap());
        prop_assert_eq!(&*stepwise, &*catalog::apply_to_index(lx.compose(ly), n));
    }

    #[test]
    fn duality_matches_values(n in 0..16usize, th in imaginary(1.0), tp in -1.0..1.0f64, x in -3.0..3.0f64, a in -3.0..3.0f64, branch in -2..3i64) {
        let t = table(n);
        let th = el(&t, &th);
        prop_assume!(th.norm() > 1e-3);
        let th = th.scale(1.0 / th.norm());
        prop_assume!((x - a).abs() > 1e-3 && (x - a).abs().ln().abs() > 1e-3);
        let ta = duality_match(tp, x, a, branch).unwrap();
        let act = eval_transform(&TransformSpec::active(th.clone(), ta, a).unwrap(), x).unwrap();
        let pas = eval_transform(&TransformSpec::passive(th, tp, a, branch).unwrap(), x).unwrap();
        prop_assert!(act.distance(&pas) <= 1e-9 * (1.0 + ta.abs()));
    }

    #[test]
    fn automorphisms_permute_the_family(x in 0..16u8, axes in prop::collection::vec(1..8usize, 1..4), rates in prop::collection::vec(-2.0..2.0f64, 3)) {
        let factors: Vec<(Expr, Scalar)> = axes
            .iter()
            .zip(&rates)
            .map(|(&k, &c)| (Expr::Basis(k), Scalar::Linear { var: "x".into(), coef: c, offset: 0.0 }))
            .collect();
        let p = PolySpec::product(&["x"], factors, None).unwrap();
        let vars = Vars::from([("x".to_string(), 0.37)]);
        let family: Vec<Vec<u64>> = (0..16)
            .map(|n| instantiate(&p, n).unwrap().eval(&vars).unwrap().coeffs().iter().map(|c| c.to_bits()).collect())
            .collect();
        let mut moved: Vec<Vec<u64>> = (0..16)
            .map(|n| {
                let target = catalog::index_of(&catalog::apply_to_index(label(x), n)).unwrap();
                family[target].clone()
            })
            .collect();
        let mut original = family.clone();
        moved.sort();
        original.sort();
        prop_assert_eq!(moved, original);
    }

    #[test]
    fn complex_confined_waves_are_invariant(k in 1..8usize, m in -8.0..8.0f64, t in -1.0..1.0f64, a in 1.5..3.0f64) {
        let (p, op) = invariance::complex_confined_case(k, m, &[(t, a)]).unwrap();
        let r = invariance::invariance_check(&p, &op).unwrap();
        prop_assert_eq!(r.spread, 0.0);
        prop_assert!(r.invariant);
    }
}
