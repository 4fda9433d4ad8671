use proptest::prelude::*;
use realq::network::correlations;
use realq::witness::{
    classical_bound, column_norm_sum, complex_bound_family, eval_f, optimize_settings, FMatrix,
    FamilyParams, OptimizerConfig, SignTable,
};

fn f_strategy(n_z: usize) -> impl Strategy<Value = FMatrix> {
    prop::collection::vec(-10.0f64..10.0, 3 * n_z).prop_filter_map("nonzero", move |v| {
        let rows: Vec<Vec<f64>> = v.chunks(n_z).map(|r| r.to_vec()).collect();
        FMatrix::from_rows(&rows).ok()
    })
}

fn any_f() -> impl Strategy<Value = FMatrix> {
    prop_oneof![f_strategy(3), f_strategy(4)]
}

fn family_strategy() -> impl Strategy<Value = FamilyParams> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_filter_map("q >= 0", |(a, b, g)| {
        let n = (a * a + b * b + g * g).sqrt();
        if n < 1e-3 {
            return None;
        }
        FamilyParams::new(a / n, b / n, g / n).ok()
    })
}

fn brute_force_classical(f: &FMatrix) -> f64 {
    let n = 3 + f.n_z();
    let mut best = f64::NEG_INFINITY;
    for mask in 0..(1u32 << n) {
        let sgn = |i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
        let mut v = 0.0;
        for x in 0..3 {
            for z in 0..f.n_z() {
                v += f.get(x, z) * sgn(x) * sgn(3 + z);
            }
        }
        best = best.max(v);
    }
    best
}

fn quick() -> OptimizerConfig {
    OptimizerConfig {
        starts: 8,
        ..OptimizerConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn classical_bound_matches_joint_enumeration(f in any_f()) {
        let cb = classical_bound(&f);
        let bf = brute_force_classical(&f);
        prop_assert!((cb.value - bf).abs() <= 1e-9 * (1.0 + bf.abs()));
        prop_assert_eq!(classical_bound(&f), cb);
    }

    #[test]
    fn classical_value_within_sqrt3_of_column_norms(f in f_strategy(3)) {
        prop_assert!(classical_bound(&f).value <= 3f64.sqrt() * column_norm_sum(&f) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn construction_respects_column_bound(f in f_strategy(3)) {
        let r = optimize_settings(&f, &SignTable::RESOLVED, &quick());
        let t = correlations(&r.a, &r.c).unwrap();
        let v = eval_f(&f, &SignTable::RESOLVED, &t).unwrap();
        prop_assert!(v <= column_norm_sum(&f) + 1e-9);
        prop_assert!((v - column_norm_sum(&f)).abs() < 1e-6);
    }

    #[test]
    fn construction_respects_family_bound(p in family_strategy()) {
        let f = FMatrix::family(&p);
        let bound = complex_bound_family(&p).unwrap();
        let r = optimize_settings(&f, &SignTable::RESOLVED, &quick());
        prop_assert!(r.value <= bound + 1e-9);
        prop_assert!(r.value >= bound - 1e-6);
    }

    #[test]
    fn column_permutation_and_sign_flip_invariance(f in any_f(), k in 0usize..24, flip in 0usize..4) {
        let n_z = f.n_z();
        let mut perm: Vec<usize> = (0..n_z).collect();
        // k-th permutation in factorial numbering.
        let mut code = k;
        for i in 0..n_z {
            let j = i + code % (n_z - i);
            code /= n_z - i;
            perm.swap(i, j);
        }
        let flip = flip % n_z;
        let g = f.permute_columns(&perm).negate_column(flip);
        let (cf, cg) = (classical_bound(&f).value, classical_bound(&g).value);
        prop_assert!((cf - cg).abs() < 1e-9 * (1.0 + cf));
        prop_assert!((column_norm_sum(&f) - column_norm_sum(&g)).abs() < 1e-9);

        let rf = optimize_settings(&f, &SignTable::RESOLVED, &quick());
        let rg = optimize_settings(&g, &SignTable::RESOLVED, &quick());
        prop_assert!((rf.value - rg.value).abs() < 1e-6);
        // Settings of f, relabelled, are optimal for g.
        let c: Vec<_> = (0..n_z)
            .map(|z| if z == flip { rf.c[perm[z]].negated() } else { rf.c[perm[z]] })
            .collect();
        let t = correlations(&rf.a, &c).unwrap();
        let v = eval_f(&g, &SignTable::RESOLVED, &t).unwrap();
        prop_assert!((v - rg.value).abs() < 1e-6);
    }
}
