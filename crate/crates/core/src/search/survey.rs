//! Survey of random two-setting functionals on a model with one qubit per
//! party and source, maximized over states, observables and the 4-outcome
//! measurement of B.
//!
//! ```text
//! F = Σ_{b,x,z} f[b][x][z] <A_x C_z || b>,   A_0 = C_0 = 1
//! ```

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{bloch_operator, CMat};

/// Both-large criterion on the complexness coordinates.
pub const COMPLEX_THRESHOLD: f64 = 0.01;
/// A point belongs to the "large" population above this.
pub const LARGE_THRESHOLD: f64 = 0.9;
/// ... and to the "small" one below this.
pub const SMALL_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional36 {
    /// `f[b][x][z]`, index 0 of `x` and `z` is the identity.
    pub f: [[[f64; 3]; 3]; 4],
}

impl BellFunctional36 {
    pub fn zeros() -> Self {
        Self { f: [[[0.0; 3]; 3]; 4] }
    }

    /// Entries uniform on `[-1, 1]`.
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut out = Self::zeros();
        for b in out.f.iter_mut() {
            for row in b.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(-1.0..=1.0);
                }
            }
        }
        out
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        let f: [[[f64; 3]; 3]; 4] = serde_json::from_str(s)?;
        Ok(Self { f })
    }
}

/// Index pairs `J < K` of the six Givens factors, in multiplication order.
pub const GIVENS_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GivensParams {
    pub theta: [f64; 6],
    pub psi: [f64; 6],
}

impl GivensParams {
    pub fn identity() -> Self {
        Self { theta: [0.0; 6], psi: [0.0; 6] }
    }

    /// `H = H^(01) H^(02) H^(03) H^(12) H^(13) H^(23)`.
    pub fn unitary(&self) -> CMat {
        let mut h = CMat::identity(4);
        for (k, &(j, l)) in GIVENS_PAIRS.iter().enumerate() {
            let (s, c) = self.theta[k].sin_cos();
            let e = C64::from_polar(1.0, self.psi[k]);
            let mut g = CMat::identity(4);
            g[(j, j)] = C64::new(c, 0.0);
            g[(l, l)] = C64::new(c, 0.0);
            g[(j, l)] = e * s;
            g[(l, j)] = -e.conj() * s;
            h = &h * &g;
        }
        h
    }
}

/// Number of free parameters in [`SurveyModel::from_params`].
pub const N_PARAMS: usize = 28;

/// Two-qubit-per-source model. Both sources are `Σ_j λ_j |jj>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveyModel {
    pub lambda_l: [f64; 2],
    pub lambda_r: [f64; 2],
    /// Bloch vectors of `A_1`, `A_2`.
    pub a: [[f64; 3]; 2],
    /// Bloch vectors of `C_1`, `C_2`.
    pub c: [[f64; 3]; 2],
    pub h: GivensParams,
}

impl SurveyModel {
    /// Layout: two unnormalized Schmidt pairs, four unnormalized Bloch
    /// vectors (`A_1, A_2, C_1, C_2`), then the six `θ` and six `ψ`.
    /// Normalizing inside the map keeps the parameterization free of poles.
    pub fn from_params(p: &[f64; N_PARAMS]) -> Self {
        let lam = |u: f64, v: f64| {
            let n = u.hypot(v);
            if n > 0.0 { [u.abs() / n, v.abs() / n] } else { [1.0, 0.0] }
        };
        let vec3 = |k: usize| {
            let v = [p[4 + 3 * k], p[5 + 3 * k], p[6 + 3 * k]];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.0 { [v[0] / n, v[1] / n, v[2] / n] } else { [0.0, 0.0, 1.0] }
        };
        Self {
            lambda_l: lam(p[0], p[1]),
            lambda_r: lam(p[2], p[3]),
            a: [vec3(0), vec3(1)],
            c: [vec3(2), vec3(3)],
            h: GivensParams {
                theta: std::array::from_fn(|k| p[16 + k]),
                psi: std::array::from_fn(|k| p[22 + k]),
            },
        }
    }

    /// Schmidt coefficients uniform on the positive quarter circle, Bloch
    /// vectors uniform on the sphere, Givens angles uniform on `[0, 2π)`.
    pub fn random_params(rng: &mut impl Rng) -> [f64; N_PARAMS] {
        let mut p = [0.0; N_PARAMS];
        for s in 0..2 {
            let t: f64 = rng.random_range(0.0..=FRAC_PI_2);
            p[2 * s] = t.cos();
            p[2 * s + 1] = t.sin();
        }
        for k in 0..4 {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..TAU);
            let r = (1.0 - z * z).sqrt();
            p[4 + 3 * k] = r * phi.cos();
            p[5 + 3 * k] = r * phi.sin();
            p[6 + 3 * k] = z;
        }
        for v in p[16..].iter_mut() {
            *v = rng.random_range(0.0..TAU);
        }
        p
    }

    /// σ_2 coordinate `a_i` after the phase shift that makes
    /// `a_{12} = -a_{22}`.
    pub fn a_i(&self) -> f64 {
        complexness(&self.a[0], &self.a[1])
    }

    pub fn c_i(&self) -> f64 {
        complexness(&self.c[0], &self.c[1])
    }
}

/// Rotates both vectors about the z axis so their y components cancel and
/// returns the y component of the first.
fn complexness(v1: &[f64; 3], v2: &[f64; 3]) -> f64 {
    let (sx, sy) = (v1[0] + v2[0], v1[1] + v2[1]);
    let phi = if sx.hypot(sy) > 1e-12 {
        (-sy).atan2(sx)
    } else {
        // Antiparallel in the plane: any angle works, take the one that
        // zeroes both.
        (-v1[1]).atan2(v1[0])
    };
    let (s, c) = phi.sin_cos();
    v1[0] * s + v1[1] * c
}

/// `Tr_A[(A ⊗ 1)|L><L|] = Λ Aᵀ Λ` on P.
fn reduced(lambda: &[f64; 2], op: &CMat) -> [[C64; 2]; 2] {
    std::array::from_fn(|p| std::array::from_fn(|q| op[(q, p)] * (lambda[p] * lambda[q])))
}

/// Evaluates `F` with an explicit unitary whose rows are the outcome vectors.
pub fn eval_with_unitary(fun: &BellFunctional36, m: &SurveyModel, h: &CMat) -> f64 {
    let eye = CMat::identity(2);
    let a_ops = [&eye, &bloch_operator(&m.a[0]), &bloch_operator(&m.a[1])].map(|o| reduced(&m.lambda_l, o));
    let c_ops = [&eye, &bloch_operator(&m.c[0]), &bloch_operator(&m.c[1])].map(|o| reduced(&m.lambda_r, o));
    let mut total = 0.0;
    for b in 0..4 {
        let row: [C64; 4] = std::array::from_fn(|k| h[(b, k)]);
        for x in 0..3 {
            // N = Σ_z f[b][x][z] N_z
            let mut n = [[C64::new(0.0, 0.0); 2]; 2];
            for z in 0..3 {
                let w = fun.f[b][x][z];
                if w != 0.0 {
                    for i in 0..2 {
                        for j in 0..2 {
                            n[i][j] += c_ops[z][i][j] * w;
                        }
                    }
                }
            }
            let mx = &a_ops[x];
            // <b| M ⊗ N |b> with |b> = Σ h[b][2j+k] |jk>
            let mut v = C64::new(0.0, 0.0);
            for j in 0..2 {
                for k in 0..2 {
                    let bra = row[2 * j + k].conj();
                    for j2 in 0..2 {
                        for k2 in 0..2 {
                            v += bra * mx[j][j2] * n[k][k2] * row[2 * j2 + k2];
                        }
                    }
                }
            }
            total += v.re;
        }
    }
    total
}

pub fn eval_survey_f(fun: &BellFunctional36, m: &SurveyModel) -> f64 {
    eval_with_unitary(fun, m, &m.h.unitary())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurveyConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_sweeps: usize,
    pub initial_step: f64,
    /// Converged once every coordinate step is below this.
    pub min_step: f64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 5,
            max_sweeps: 4000,
            initial_step: 0.3,
            min_step: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyPoint {
    pub index: usize,
    pub functional: BellFunctional36,
    pub value: f64,
    pub a_i: f64,
    pub c_i: f64,
    pub restarts: usize,
    /// Whether the best restart stopped on step size rather than the sweep cap.
    pub converged: bool,
    pub model: SurveyModel,
}

impl SurveyPoint {
    pub fn both_large(&self) -> bool {
        self.a_i.abs() > COMPLEX_THRESHOLD && self.c_i.abs() > COMPLEX_THRESHOLD
    }

    /// `max(|a_i|, |c_i|)` falls in one of the two populations.
    pub fn separated(&self) -> bool {
        let m = self.a_i.abs().max(self.c_i.abs());
        m > LARGE_THRESHOLD || m < SMALL_THRESHOLD
    }
}

/// Coordinate ascent with per-coordinate adaptive steps.
fn coordinate_ascent(
    fun: &BellFunctional36,
    mut p: [f64; N_PARAMS],
    cfg: &SurveyConfig,
) -> ([f64; N_PARAMS], f64, bool) {
    let eval = |p: &[f64; N_PARAMS]| eval_survey_f(fun, &SurveyModel::from_params(p));
    let mut best = eval(&p);
    let mut step = [cfg.initial_step; N_PARAMS];
    for _ in 0..cfg.max_sweeps {
        for i in 0..N_PARAMS {
            let orig = p[i];
            let mut moved = false;
            for dir in [1.0, -1.0] {
                p[i] = orig + dir * step[i];
                let v = eval(&p);
                if v > best {
                    best = v;
                    moved = true;
                    break;
                }
            }
            if moved {
                step[i] = (step[i] * 2.0).min(PI);
            } else {
                p[i] = orig;
                step[i] *= 0.5;
            }
        }
        if step.iter().all(|&s| s < cfg.min_step) {
            return (p, best, true);
        }
    }
    (p, best, false)
}

/// Best deterministic strategy: B always answers `b`, A and C answer fixed
/// signs. Returns the value and the model parameters realizing it.
pub fn deterministic_optimum(fun: &BellFunctional36) -> (f64, [f64; N_PARAMS]) {
    let mut best = (f64::NEG_INFINITY, 0, [0.0; 4]);
    for b in 0..4 {
        for mask in 0..16u32 {
            let s: [f64; 4] = std::array::from_fn(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
            let a = [1.0, s[0], s[1]];
            let c = [1.0, s[2], s[3]];
            let mut v = 0.0;
            for x in 0..3 {
                for z in 0..3 {
                    v += fun.f[b][x][z] * a[x] * c[z];
                }
            }
            if v > best.0 {
                best = (v, b, s);
            }
        }
    }
    let (value, b, s) = best;
    // Sources in |j j> and |k k>, H = 1, so B answers 2j + k.
    let (j, k) = (b / 2, b % 2);
    let mut p = [0.0; N_PARAMS];
    p[j] = 1.0;
    p[2 + k] = 1.0;
    let sz = |bit: usize| if bit == 0 { 1.0 } else { -1.0 };
    for i in 0..2 {
        p[6 + 3 * i] = s[i] * sz(j);
        p[6 + 3 * (2 + i)] = s[2 + i] * sz(k);
    }
    (value, p)
}

/// One survey point: functional and restarts drawn from stream `index`.
///
/// The random restarts are joined by one start at the best deterministic
/// strategy, so the reported maximum never falls below the classical value.
pub fn survey_point(index: usize, cfg: &SurveyConfig) -> SurveyPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let functional = BellFunctional36::random(&mut rng);
    let restarts = cfg.restarts.max(1);
    let mut starts: Vec<[f64; N_PARAMS]> = (0..restarts).map(|_| SurveyModel::random_params(&mut rng)).collect();
    starts.push(deterministic_optimum(&functional).1);
    let mut best: Option<([f64; N_PARAMS], f64, bool)> = None;
    for s in starts {
        let r = coordinate_ascent(&functional, s, cfg);
        if best.as_ref().is_none_or(|b| r.1 > b.1) {
            best = Some(r);
        }
    }
    let (p, value, converged) = best.expect("at least one restart");
    let model = SurveyModel::from_params(&p);
    SurveyPoint {
        index,
        value,
        a_i: model.a_i(),
        c_i: model.c_i(),
        restarts,
        converged,
        model,
        functional,
    }
}

/// Points `0..n`, computed in parallel and returned in index order.
pub fn survey(n: usize, cfg: &SurveyConfig) -> Vec<SurveyPoint> {
    (0..n).into_par_iter().map(|i| survey_point(i, cfg)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub points: usize,
    pub both_large: usize,
    pub separated: usize,
    pub not_converged: usize,
}

impl SurveySummary {
    pub fn of(points: &[SurveyPoint]) -> Self {
        Self {
            points: points.len(),
            both_large: points.iter().filter(|p| p.both_large()).count(),
            separated: points.iter().filter(|p| p.separated()).count(),
            not_converged: points.iter().filter(|p| !p.converged).count(),
        }
    }

    pub fn separated_fraction(&self) -> f64 {
        if self.points == 0 {
            1.0
        } else {
            self.separated as f64 / self.points as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_model(seed: u64) -> SurveyModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SurveyModel::from_params(&SurveyModel::random_params(&mut rng))
    }

    #[test]
    fn givens_product_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = SurveyModel::from_params(&SurveyModel::random_params(&mut rng));
            let h = p.h.unitary();
            let hh = &h.adjoint() * &h;
            assert!(hh.max_abs_diff(&CMat::identity(4)) < 1e-10);
        }
    }

    #[test]
    fn zero_functional_and_completeness() {
        let m = random_model(2);
        assert_eq!(eval_survey_f(&BellFunctional36::zeros(), &m), 0.0);
        let mut f = BellFunctional36::zeros();
        for b in 0..4 {
            f.f[b][0][0] = 1.0;
        }
        assert!((eval_survey_f(&f, &m) - 1.0).abs() < 1e-12);
    }

    /// `Tr(ρ A_x ⊗ B_b ⊗ C_z)` on the 16-dimensional register A,P,Q,C.
    fn dense(m: &SurveyModel, h: &CMat, b: usize, x: usize, z: usize) -> f64 {
        let src = |l: &[f64; 2]| {
            let mut v = vec![C64::new(0.0, 0.0); 4];
            v[0] = C64::new(l[0], 0.0);
            v[3] = C64::new(l[1], 0.0);
            CMat::outer(&v, &v)
        };
        let rho = src(&m.lambda_l).kron(&src(&m.lambda_r));
        let row: Vec<C64> = (0..4).map(|k| h[(b, k)]).collect();
        let proj = CMat::outer(&row, &row);
        let ax = if x == 0 { CMat::identity(2) } else { bloch_operator(&m.a[x - 1]) };
        let cz = if z == 0 { CMat::identity(2) } else { bloch_operator(&m.c[z - 1]) };
        let op = ax.kron(&proj).kron(&cz);
        rho.trace_product(&op).re
    }

    #[test]
    fn matches_dense_trace() {
        for seed in 0..20 {
            let m = random_model(seed);
            let h = m.h.unitary();
            for b in 0..4 {
                for x in 0..3 {
                    for z in 0..3 {
                        let mut f = BellFunctional36::zeros();
                        f.f[b][x][z] = 1.0;
                        let v = eval_survey_f(&f, &m);
                        assert!((v - dense(&m, &h, b, x, z)).abs() < 1e-12, "{b}{x}{z}");
                    }
                }
            }
        }
    }

    #[test]
    fn maximally_entangled_identity_measurement() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = random_model(5);
        m.lambda_l = [r, r];
        m.lambda_r = [r, r];
        m.h = GivensParams::identity();
        let h = m.h.unitary();
        assert!(h.max_abs_diff(&CMat::identity(4)) < 1e-15);
        // B_0 = |00><00| on PQ: A and C see |0><0| each with weight 1/2.
        for x in 1..3 {
            for z in 1..3 {
                let mut f = BellFunctional36::zeros();
                f.f[0][x][z] = 1.0;
                let expected = 0.25 * m.a[x - 1][2] * m.c[z - 1][2];
                assert!((eval_survey_f(&f, &m) - expected).abs() < 1e-12);
                assert!((dense(&m, &h, 0, x, z) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_phases_do_not_change_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let fun = BellFunctional36::random(&mut rng);
            let m = SurveyModel::from_params(&SurveyModel::random_params(&mut rng));
            let h = m.h.unitary();
            let phases: Vec<C64> = (0..4).map(|_| C64::from_polar(1.0, rng.random_range(0.0..TAU))).collect();
            let hp = CMat::from_fn(4, 4, |b, k| h[(b, k)] * phases[b]);
            let d = eval_with_unitary(&fun, &m, &h) - eval_with_unitary(&fun, &m, &hp);
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn complexness_coordinates() {
        // Both in the x-z plane: real.
        assert!(complexness(&[0.6, 0.0, 0.8], &[-0.6, 0.0, 0.8]).abs() < 1e-15);
        // Orthogonal in the x-y plane: y parts ±1/√2 after the shift.
        let a = complexness(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!((a.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        // Shift leaves the two y components opposite.
        let (v1, v2) = ([0.3, 0.4, 0.866], [-0.2, 0.9, 0.38]);
        let a = complexness(&v1, &v2);
        let b = complexness(&v2, &v1);
        assert!((a + b).abs() < 1e-12);
        assert!(complexness(&[0.0, 1.0, 0.0], &[0.0, -1.0, 0.0]).abs() < 1e-12);
    }

    #[test]
    fn deterministic_start_realizes_its_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let fun = BellFunctional36::random(&mut rng);
            let (v, p) = deterministic_optimum(&fun);
            let m = SurveyModel::from_params(&p);
            assert!((eval_survey_f(&fun, &m) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn survey_point_is_deterministic() {
        let cfg = SurveyConfig { seed: 7, ..SurveyConfig::default() };
        let a = survey_point(0, &cfg);
        let b = survey_point(0, &cfg);
        assert_eq!(a, b);
        assert!(a.a_i.abs() <= 1.0 && a.c_i.abs() <= 1.0);
        let m = &a.model;
        for v in m.a.iter().chain(&m.c) {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let l = m.lambda_l[0].powi(2) + m.lambda_l[1].powi(2);
        assert!((l - 1.0).abs() < 1e-12);
    }
}
