//! Small dense complex linear algebra for the four-qubit register.
//!
//! Operators here never exceed 16×16, so everything is stored densely in
//! row-major order. The register order is fixed to `A, P, Q, C` (qubit `A` is
//! the most significant tensor factor); every embedding and partial trace in
//! the crate uses it.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("pauli axis must be 1, 2 or 3, got {0}")]
    InvalidAxis(usize),
    #[error("expected a {expected_rows}x{expected_cols} matrix, got {rows}x{cols}")]
    Shape {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("partial trace needs at least one qubit to keep")]
    EmptyKeepSet,
    #[error("qubit index {0} outside the register")]
    QubitOutOfRange(usize),
    #[error("matrix is not hermitian (deviation {0:e})")]
    NotHermitian(f64),
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| C64::new(values[i * cols + j], 0.0))
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &CMat) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMat) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from `M = M†`.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    fn expect_shape(&self, rows: usize, cols: usize) -> Result<(), LinalgError> {
        if self.rows == rows && self.cols == cols {
            Ok(())
        } else {
            Err(LinalgError::Shape {
                expected_rows: rows,
                expected_cols: cols,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Pauli matrix for axis 1, 2 or 3.
pub fn pauli(axis: usize) -> Result<CMat, LinalgError> {
    let m = match axis {
        1 => CMat::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        2 => CMat::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
        3 => CMat::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        _ => return Err(LinalgError::InvalidAxis(axis)),
    };
    Ok(m)
}

/// The three Pauli matrices, indexed 0..3 for axes 1..3.
pub fn paulis() -> [CMat; 3] {
    [pauli(1).unwrap(), pauli(2).unwrap(), pauli(3).unwrap()]
}

/// `v · σ` for a real 3-vector.
pub fn bloch_operator(v: &[f64; 3]) -> CMat {
    let s = paulis();
    let mut out = CMat::zeros(2, 2);
    for (k, sk) in s.iter().enumerate() {
        out = &out + &sk.scale_real(v[k]);
    }
    out
}

pub fn kronecker_delta(a: usize, b: usize) -> i32 {
    i32::from(a == b)
}

/// Levi-Civita symbol on axes 1..=3; zero for repeated or out-of-range axes.
pub fn levi_civita(a: usize, b: usize, c: usize) -> i32 {
    match (a, b, c) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        (3, 2, 1) | (2, 1, 3) | (1, 3, 2) => -1,
        _ => 0,
    }
}

/// A tensor factor of the `A, P, Q, C` register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QubitLabel {
    A = 0,
    P = 1,
    Q = 2,
    C = 3,
}

impl QubitLabel {
    pub const ALL: [QubitLabel; 4] = [QubitLabel::A, QubitLabel::P, QubitLabel::Q, QubitLabel::C];

    pub fn index(self) -> usize {
        self as usize
    }
}

pub const REGISTER_QUBITS: usize = 4;
pub const REGISTER_DIM: usize = 1 << REGISTER_QUBITS;

/// Places a single-qubit operator at `at`, identity elsewhere, in register order.
pub fn embed(op: &CMat, at: QubitLabel) -> Result<CMat, LinalgError> {
    embed_qubit(op, at.index(), REGISTER_QUBITS)
}

/// Single-qubit embedding into an `n_qubits` register (qubit 0 most significant).
pub fn embed_qubit(op: &CMat, at: usize, n_qubits: usize) -> Result<CMat, LinalgError> {
    op.expect_shape(2, 2)?;
    if at >= n_qubits {
        return Err(LinalgError::QubitOutOfRange(at));
    }
    let mut out = CMat::identity(1);
    for k in 0..n_qubits {
        out = if k == at {
            out.kron(op)
        } else {
            out.kron(&CMat::identity(2))
        };
    }
    Ok(out)
}

/// Partial trace over every register qubit not in `keep`.
///
/// The kept qubits appear in register order in the result regardless of the
/// order given in `keep`.
pub fn partial_trace(m: &CMat, keep: &[QubitLabel]) -> Result<CMat, LinalgError> {
    let idx: Vec<usize> = keep.iter().map(|q| q.index()).collect();
    partial_trace_qubits(m, REGISTER_QUBITS, &idx)
}

pub fn partial_trace_qubits(
    m: &CMat,
    n_qubits: usize,
    keep: &[usize],
) -> Result<CMat, LinalgError> {
    let dim = 1usize << n_qubits;
    m.expect_shape(dim, dim)?;
    if keep.is_empty() {
        return Err(LinalgError::EmptyKeepSet);
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= n_qubits) {
        return Err(LinalgError::QubitOutOfRange(bad));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..n_qubits).filter(|k| !kept.contains(k)).collect();

    // Bit position of qubit k inside a register index.
    let shift = |k: usize| n_qubits - 1 - k;
    let compose = |bits_kept: usize, bits_traced: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            let bit = (bits_kept >> (kept.len() - 1 - pos)) & 1;
            idx |= bit << shift(q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (bits_traced >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << shift(q);
        }
        idx
    };

    let out_dim = 1usize << kept.len();
    let tr_dim = 1usize << traced.len();
    let mut out = CMat::zeros(out_dim, out_dim);
    for r in 0..out_dim {
        for c in 0..out_dim {
            let mut acc = ZERO;
            for t in 0..tr_dim {
                acc += m[(compose(r, t), compose(c, t))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending, eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        CMat::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)].conj())
                .sum()
        })
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }
}

/// Cyclic complex Jacobi eigensolver. Intended for the ≤16-dimensional operators
/// of this crate; accuracy is at the level of a few ulps of the matrix norm.
pub fn eigh(m: &CMat) -> Result<HermitianEigen, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Shape {
            expected_rows: m.rows,
            expected_cols: m.rows,
            rows: m.rows,
            cols: m.cols,
        });
    }
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let herr = m.hermiticity_error();
    if herr > 1e-10 * scale.max(1.0) {
        return Err(LinalgError::NotHermitian(herr));
    }
    let n = m.rows;
    // Work on the exactly-Hermitian part.
    let mut h = CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut v = CMat::identity(n);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| h[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let hpq = h[(p, q)];
                let abs = hpq.norm();
                if abs <= 1e-300 {
                    continue;
                }
                let phase = hpq / abs;
                let a = h[(p, p)].re;
                let b = h[(q, q)].re;
                let tau = (b - a) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = diag(1, conj(phase)) · [[c, s], [-s, c]]
                let u00 = C64::new(c, 0.0);
                let u01 = C64::new(s, 0.0);
                let u10 = -phase.conj() * s;
                let u11 = phase.conj() * c;
                for k in 0..n {
                    let hkp = h[(k, p)];
                    let hkq = h[(k, q)];
                    h[(k, p)] = hkp * u00 + hkq * u10;
                    h[(k, q)] = hkp * u01 + hkq * u11;
                }
                for k in 0..n {
                    let hpk = h[(p, k)];
                    let hqk = h[(q, k)];
                    h[(p, k)] = u00.conj() * hpk + u10.conj() * hqk;
                    h[(q, k)] = u01.conj() * hpk + u11.conj() * hqk;
                }
                h[(p, q)] = ZERO;
                h[(q, p)] = ZERO;
                h[(p, p)] = C64::new(h[(p, p)].re, 0.0);
                h[(q, q)] = C64::new(h[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u00 + vkq * u10;
                    v[(k, q)] = vkp * u01 + vkq * u11;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| h[(i, i)].re.total_cmp(&h[(j, j)].re));
    let values = order.iter().map(|&i| h[(i, i)].re).collect();
    let vectors = CMat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(rng: &mut impl Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn pauli_products_follow_structure_constants() {
        let s = paulis();
        let id = CMat::identity(2);
        for a in 1..=3 {
            for b in 1..=3 {
                let lhs = &s[a - 1] * &s[b - 1];
                let mut rhs = id.scale_real(f64::from(kronecker_delta(a, b)));
                for c in 1..=3 {
                    let e = f64::from(levi_civita(a, b, c));
                    rhs = &rhs + &s[c - 1].scale(I * e);
                }
                assert!(lhs.max_abs_diff(&rhs) < 1e-15, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn pauli_examples() {
        let s1 = pauli(1).unwrap();
        let s2 = pauli(2).unwrap();
        let s3 = pauli(3).unwrap();
        assert_eq!(&s1 * &s2, s3.scale(I));
        assert_eq!(&s3 * &s3, CMat::identity(2));
        assert_eq!(pauli(0), Err(LinalgError::InvalidAxis(0)));
        assert_eq!(pauli(4), Err(LinalgError::InvalidAxis(4)));
    }

    #[test]
    fn epsilon_delta_identities() {
        for b in 1..=3 {
            for c in 1..=3 {
                for d in 1..=3 {
                    for e in 1..=3 {
                        let lhs: i32 = (1..=3).map(|a| levi_civita(a, b, c) * levi_civita(a, d, e)).sum();
                        let rhs = kronecker_delta(b, d) * kronecker_delta(c, e)
                            - kronecker_delta(b, e) * kronecker_delta(c, d);
                        assert_eq!(lhs, rhs);
                    }
                }
                let contracted: i32 = (1..=3)
                    .flat_map(|a| (1..=3).map(move |bb| (a, bb)))
                    .map(|(a, bb)| levi_civita(a, bb, b) * levi_civita(a, bb, c))
                    .sum();
                assert_eq!(contracted, 2 * kronecker_delta(b, c));
            }
        }
        let trace: i32 = (1..=3).map(|a| kronecker_delta(a, a)).sum();
        assert_eq!(trace, 3);
    }

    #[test]
    fn embedding_basics() {
        let id = CMat::identity(2);
        for q in QubitLabel::ALL {
            assert_eq!(embed(&id, q).unwrap(), CMat::identity(16));
        }
        let z = embed(&pauli(3).unwrap(), QubitLabel::A).unwrap();
        assert!(z.trace().norm() < 1e-15);
        let xa = embed(&pauli(1).unwrap(), QubitLabel::A).unwrap();
        let xc = embed(&pauli(1).unwrap(), QubitLabel::C).unwrap();
        assert!((&xa * &xc).max_abs_diff(&(&xc * &xa)) < 1e-15);
        assert!(matches!(
            embed(&CMat::identity(4), QubitLabel::A),
            Err(LinalgError::Shape { .. })
        ));
    }

    #[test]
    fn partial_trace_of_identity() {
        let pt = partial_trace(&CMat::identity(16), &[QubitLabel::A, QubitLabel::C]).unwrap();
        assert!(pt.max_abs_diff(&CMat::identity(4).scale_real(4.0)) < 1e-15);
        assert_eq!(
            partial_trace(&CMat::identity(16), &[]),
            Err(LinalgError::EmptyKeepSet)
        );
        assert!(matches!(
            partial_trace(&CMat::identity(8), &[QubitLabel::A]),
            Err(LinalgError::Shape { .. })
        ));
    }

    #[test]
    fn partial_trace_of_product_keeps_left_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = random_cmat(&mut rng, 4, 4);
            let y = random_cmat(&mut rng, 4, 4);
            let pt = partial_trace(&x.kron(&y), &[QubitLabel::A, QubitLabel::P]).unwrap();
            assert!(pt.max_abs_diff(&x.scale(y.trace())) < 1e-12);
            let pt = partial_trace(&x.kron(&y), &[QubitLabel::Q, QubitLabel::C]).unwrap();
            assert!(pt.max_abs_diff(&y.scale(x.trace())) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_respects_register_order_for_non_adjacent_qubits() {
        // ops on A and C with identities in between: keep {A, C} gives 4 * (a ⊗ c).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_cmat(&mut rng, 2, 2);
        let c = random_cmat(&mut rng, 2, 2);
        let full = a.kron(&CMat::identity(4)).kron(&c);
        let pt = partial_trace(&full, &[QubitLabel::C, QubitLabel::A]).unwrap();
        assert!(pt.max_abs_diff(&a.kron(&c).scale_real(4.0)) < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 3, 4, 8, 16] {
            let g = random_cmat(&mut rng, n, n);
            let h = &g + &g.adjoint();
            let e = eigh(&h).unwrap();
            assert!(e.reconstruct().max_abs_diff(&h) < 1e-10, "n={n}");
            let vv = &e.vectors.adjoint() * &e.vectors;
            assert!(vv.max_abs_diff(&CMat::identity(n)) < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigh_density_matrices_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = random_cmat(&mut rng, 16, 16);
            let rho = &g * &g.adjoint();
            let rho = rho.scale(rho.trace().inv());
            let e = eigh(&rho).unwrap();
            assert!(e.min_value() >= -1e-10);
            assert!((e.values.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = CMat::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eigh(&m), Err(LinalgError::NotHermitian(_))));
    }
}
