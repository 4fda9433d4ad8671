//! Linear programs written as diagonal SDPs, with an exact vertex-enumeration optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realq::sdp::{Sense, SdpInstance};

/// Inequalities `h_j + g_jᵀ y ≥ 0`.
pub struct Lp {
    pub c: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

pub fn random_lp(seed: u64, n: usize, extra: usize) -> Lp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Vec::new();
    let mut h = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        g.push(e.clone());
        h.push(rng.random_range(1.0..5.0));
        e[i] = -1.0;
        g.push(e);
        h.push(rng.random_range(1.0..5.0));
    }
    for _ in 0..extra {
        g.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        h.push(rng.random_range(0.5..3.0));
    }
    let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Lp { c, g, h }
}

/// Exact optimum by enumerating every basis of `n` tight constraints.
pub fn lp_vertex_optimum(lp: &Lp) -> (f64, Vec<f64>) {
    let n = lp.c.len();
    let m = lp.g.len();
    let mut best = (f64::NEG_INFINITY, vec![]);
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        // Solve g_j · y = -h_j over the chosen rows.
        let mut a: Vec<Vec<f64>> = idx
            .iter()
            .map(|&j| {
                let mut r = lp.g[j].clone();
                r.push(-lp.h[j]);
                r
            })
            .collect();
        let mut singular = false;
        for col in 0..n {
            let p = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            if a[p][col].abs() < 1e-12 {
                singular = true;
                break;
            }
            a.swap(col, p);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for k in col..=n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
        if !singular {
            let y: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
            let feasible = (0..m).all(|j| {
                lp.h[j] + lp.g[j].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() >= -1e-10
            });
            if feasible {
                let v: f64 = lp.c.iter().zip(&y).map(|(a, b)| a * b).sum();
                if v > best.0 {
                    best = (v, y);
                }
            }
        }
        // Next combination.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - n + i {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// One 1×1 block per inequality, or all of them on the diagonal of a single block.
pub fn lp_as_sdp(lp: &Lp, single_block: bool) -> SdpInstance {
    let n = lp.c.len();
    let m = lp.g.len();
    let dims = if single_block { vec![m] } else { vec![1; m] };
    let mut inst = SdpInstance::new(Sense::Maximize, n, dims);
    for j in 0..m {
        let (b, r) = if single_block { (0, j) } else { (j, 0) };
        inst.add_constant(b, r, r, lp.h[j]);
        for i in 0..n {
            if lp.g[j][i] != 0.0 {
                inst.add_coefficient(b, i, r, r, lp.g[j][i]);
            }
        }
    }
    inst.objective = lp.c.iter().copied().enumerate().collect();
    inst
}
