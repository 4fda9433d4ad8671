use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realq::moment::{real_bound, Letter, PptMode, RealBoundOptions, RelaxationLevel, Word};
use realq::network::{correlations, Setting};
use realq::sdp::{min_eigenvalue, SolveStatus};
use realq::witness::{classical_bound, eval_f, FMatrix, SignTable};

fn letter() -> impl Strategy<Value = Letter> {
    prop_oneof![(0u8..3).prop_map(Letter::A), (0u8..4).prop_map(Letter::C)]
}

/// Applies the rewriting rules `C A → A C` and `L L → 1` at random
/// positions until neither matches.
fn reduce_randomly(mut w: Vec<Letter>, seed: u64) -> Vec<Letter> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let sites: Vec<usize> = (0..w.len().saturating_sub(1))
            .filter(|&i| {
                w[i] == w[i + 1] || (matches!(w[i], Letter::C(_)) && matches!(w[i + 1], Letter::A(_)))
            })
            .collect();
        if sites.is_empty() {
            return w;
        }
        let i = sites[rng.random_range(0..sites.len())];
        if w[i] == w[i + 1] {
            w.drain(i..i + 2);
        } else {
            w.swap(i, i + 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonicalize_idempotent_and_confluent(
        letters in prop::collection::vec(letter(), 0..14),
        s1 in any::<u64>(),
        s2 in any::<u64>(),
    ) {
        let w = Word::new(letters.clone());
        let c = w.canonicalize();
        prop_assert_eq!(c.canonicalize(), c.clone());
        prop_assert!(c.is_canonical());
        let r1 = reduce_randomly(letters.clone(), s1);
        let r2 = reduce_randomly(letters, s2);
        prop_assert_eq!(&r1, &r2);
        prop_assert_eq!(Word::new(r1), c);
    }
}

fn level(n: usize) -> RealBoundOptions {
    RealBoundOptions {
        level: RelaxationLevel::uniform(n).unwrap(),
        ..RealBoundOptions::default()
    }
}

fn random_f(rng: &mut ChaCha8Rng) -> FMatrix {
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    FMatrix::from_rows(&rows).unwrap()
}

fn scaled(f: &FMatrix, s: f64) -> FMatrix {
    let rows: Vec<Vec<f64>> = f.rows().iter().map(|r| r.iter().map(|v| v * s).collect()).collect();
    FMatrix::from_rows(&rows).unwrap()
}

#[test]
fn scaling_f_scales_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let f = random_f(&mut rng);
        let lam = rng.random_range(0.1..10.0);
        let a = real_bound(&f, &SignTable::RESOLVED, &level(1)).unwrap();
        let b = real_bound(&scaled(&f, lam), &SignTable::RESOLVED, &level(1)).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(b.status, SolveStatus::Optimal);
        assert!((b.value - lam * a.value).abs() <= 1e-7 * (1.0 + b.value.abs()), "{} vs {}", b.value, lam * a.value);
    }
}

#[test]
fn relaxation_dominates_classical_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..12 {
        let f = random_f(&mut rng);
        let r = real_bound(&f, &SignTable::RESOLVED, &level(1)).unwrap();
        assert!(classical_bound(&f).value <= r.value + 1e-6);
    }
}

fn real_plane(rng: &mut ChaCha8Rng) -> Setting {
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Setting::new([t.cos(), 0.0, t.sin()]).unwrap()
}

#[test]
fn real_plane_configurations_stay_below_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for f in [FMatrix::example_f1(), FMatrix::tetrahedron()] {
        let r = real_bound(&f, &SignTable::RESOLVED, &level(2)).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        for _ in 0..50 {
            let a: Vec<Setting> = (0..3).map(|_| real_plane(&mut rng)).collect();
            let c: Vec<Setting> = (0..f.n_z()).map(|_| real_plane(&mut rng)).collect();
            let t = correlations(&a, &c).unwrap();
            let v = eval_f(&f, &SignTable::RESOLVED, &t).unwrap();
            assert!(v <= r.value + 1e-6, "{v} > {}", r.value);
        }
    }
}

#[test]
fn dual_certificate_is_feasible() {
    for f in [FMatrix::example_f1(), FMatrix::tetrahedron(), FMatrix::near_optimal()] {
        let r = real_bound(&f, &SignTable::RESOLVED, &level(1)).unwrap();
        let sol = r.solution.as_ref().unwrap();
        assert!(r.verification.verified, "{:?}", r.verification.violations);
        assert!(r.verification.min_dual_eigenvalue >= -1e-8);
        for z in &sol.z {
            let n = (z.len() as f64).sqrt() as usize;
            assert!(min_eigenvalue(z, n) >= -1e-8);
        }
        let scale = 1.0 + r.value.abs() + r.dual_value.abs();
        assert!((r.dual_value - r.value).abs() <= r.relative_gap * scale + 1e-12);
        let w: f64 = r.outcome_weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-8);
    }
}

#[test]
fn per_block_swap_is_stricter() {
    let f = FMatrix::example_f1();
    let summed = real_bound(&f, &SignTable::RESOLVED, &level(2)).unwrap();
    let strict = real_bound(
        &f,
        &SignTable::RESOLVED,
        &RealBoundOptions { ppt: PptMode::PerBlock, ..level(2) },
    )
    .unwrap();
    assert_eq!(strict.status, SolveStatus::Optimal);
    assert!(strict.value <= summed.value + 1e-6);
    // Per-block swap collapses onto the classical value for this instance.
    assert!((strict.value - 12.0).abs() < 1e-5, "{}", strict.value);
}

#[test]
fn symmetry_reduction_preserves_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fs = vec![FMatrix::example_f1(), FMatrix::tetrahedron(), FMatrix::near_optimal()];
    for _ in 0..3 {
        let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        fs.push(FMatrix::from_rows(&rows).unwrap());
    }
    for f in &fs {
        let with = real_bound(f, &SignTable::RESOLVED, &level(1)).unwrap();
        let without = real_bound(
            f,
            &SignTable::RESOLVED,
            &RealBoundOptions { use_symmetry: false, ..level(1) },
        )
        .unwrap();
        assert_eq!(with.status, SolveStatus::Optimal);
        assert_eq!(without.status, SolveStatus::Optimal);
        assert!(with.n_vars <= without.n_vars);
        assert!((with.value - without.value).abs() < 1e-6 * (1.0 + with.value.abs()));
    }
    let f1 = real_bound(&FMatrix::example_f1(), &SignTable::RESOLVED, &level(1)).unwrap();
    assert_eq!(f1.symmetry_order, 6);
}
