use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realq::sdp::{solve, verify, weak_duality_slack, Sense, SdpInstance, SolveStatus, Tolerances};

mod common;
use common::{lp_as_sdp, lp_vertex_optimum, random_lp};

#[test]
fn lp_reducible_instances_match_vertex_enumeration() {
    let tol = Tolerances::default();
    for seed in 0..40 {
        let n = 2 + (seed as usize) % 3;
        let lp = random_lp(seed, n, 4);
        let (opt, y_opt) = lp_vertex_optimum(&lp);
        for single in [false, true] {
            let inst = lp_as_sdp(&lp, single);
            let sol = solve(&inst, &tol).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
            assert!(sol.iterations <= 200);
            assert!(
                (sol.primal_objective - opt).abs() <= 1e-8 * (1.0 + opt.abs()),
                "seed {seed}: {} vs {opt}",
                sol.primal_objective
            );
            for (a, b) in sol.y.iter().zip(&y_opt) {
                assert!((a - b).abs() < 1e-6, "seed {seed}");
            }
            assert!(verify(&inst, &sol, &tol).verified);
        }
    }
}

/// Random instance that is strictly feasible at `y = 0` and bounded by a box.
fn random_sdp(seed: u64) -> SdpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_vars = rng.random_range(2..6);
    let mut dims: Vec<usize> = (0..rng.random_range(1..4)).map(|_| rng.random_range(2..5)).collect();
    let nb = dims.len();
    dims.push(2 * n_vars);
    let mut inst = SdpInstance::new(Sense::Maximize, n_vars, dims.clone());
    for (b, &d) in dims[..nb].iter().enumerate() {
        for r in 0..d {
            inst.add_constant(b, r, r, 1.0);
        }
        for v in 0..n_vars {
            for r in 0..d {
                for c in r..d {
                    if rng.random_bool(0.6) {
                        inst.add_coefficient(b, v, r, c, rng.random_range(-1.0..1.0));
                    }
                }
            }
        }
    }
    // |y_v| ≤ 4 on the diagonal of the last block.
    for v in 0..n_vars {
        inst.add_constant(nb, 2 * v, 2 * v, 4.0);
        inst.add_constant(nb, 2 * v + 1, 2 * v + 1, 4.0);
        inst.add_coefficient(nb, v, 2 * v, 2 * v, 1.0);
        inst.add_coefficient(nb, v, 2 * v + 1, 2 * v + 1, -1.0);
    }
    for v in 0..n_vars {
        inst.objective.push((v, rng.random_range(-1.0..1.0)));
    }
    if rng.random_bool(0.5) {
        inst.add_equality(vec![(0, 1.0), (n_vars - 1, -0.5)], 0.1);
    }
    inst
}

fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_instances_solve_and_verify(seed in 0u64..1_000_000) {
        let tol = Tolerances::default();
        let inst = random_sdp(seed);
        inst.validate().unwrap();
        let sol = solve(&inst, &tol).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        prop_assert!(sol.iterations <= 200);
        prop_assert!(sol.relative_gap <= tol.gap);
        prop_assert!(weak_duality_slack(&inst, &sol) >= -1e-12);
        let rep = verify(&inst, &sol, &tol);
        prop_assert!(rep.verified, "{:?}", rep.violations);
    }

    #[test]
    fn solution_invariant_under_relabelling(seed in 0u64..1_000_000) {
        let tol = Tolerances::default();
        let inst = random_sdp(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let vp = permutation(&mut rng, inst.n_vars);
        let bp = permutation(&mut rng, inst.block_dims.len());
        let perm = inst.permuted(&vp, &bp);
        let a = solve(&inst, &tol).unwrap();
        let b = solve(&perm, &tol).unwrap();
        prop_assert!((a.primal_objective - b.primal_objective).abs() < 1e-7);
        prop_assert!((a.dual_objective - b.dual_objective).abs() < 1e-7);
        for (i, &ni) in vp.iter().enumerate() {
            prop_assert!((a.y[i] - b.y[ni]).abs() < 1e-7, "y[{}]: {} vs {}", i, a.y[i], b.y[ni]);
        }
    }
}
