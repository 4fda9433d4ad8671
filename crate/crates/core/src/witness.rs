//! The witness `F`, its sign table, classical and complex bounds, and a
//! see-saw optimizer over settings of the explicit construction.
//!
//! ```text
//! F = Σ_{b,x,z} sign[b][x] f[x][z] <A_x C_z || b>
//! ```

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::CMat;
use crate::network::{CorrelationTensor, NetworkError, Setting, A_SETTINGS, OUTCOMES, OUTCOME_SIGNS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("f must have 3 rows, got {0}")]
    Rows(usize),
    #[error("f must have 3 or 4 columns, got {0}")]
    Cols(usize),
    #[error("row {row} of f has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("f has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("f must be nonzero")]
    AllZero,
    #[error("dimension mismatch: f is 3x{f_cols}, correlations are {t_rows}x{t_cols}")]
    Dimension {
        f_cols: usize,
        t_rows: usize,
        t_cols: usize,
    },
    #[error("column-norm bound needs a 3x3 witness, got 3x{0}")]
    NotSquare(usize),
    #[error("family parameters must satisfy α²+β²+γ² = 1, got {0}")]
    FamilyNorm(f64),
    #[error("family parameters give q = {0} < 0")]
    NegativeQ(f64),
    #[error("sign entries must be ±1")]
    BadSign,
    #[error("cannot parse f: {0}")]
    Parse(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Coefficient matrix `f[x][z]`, three rows and three or four columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FMatrix {
    n_z: usize,
    entries: Vec<f64>,
}

impl FMatrix {
    /// Builds `f` from rows; rejects zero, ragged or non-finite input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, WitnessError> {
        let f = Self::from_rows_allow_zero(rows)?;
        if f.entries.iter().all(|&v| v == 0.0) {
            return Err(WitnessError::AllZero);
        }
        Ok(f)
    }

    /// As [`FMatrix::from_rows`] but admits the zero witness, which is handy as
    /// a degenerate test input.
    pub fn from_rows_allow_zero(rows: &[Vec<f64>]) -> Result<Self, WitnessError> {
        if rows.len() != A_SETTINGS {
            return Err(WitnessError::Rows(rows.len()));
        }
        let n_z = rows[0].len();
        if !(3..=4).contains(&n_z) {
            return Err(WitnessError::Cols(n_z));
        }
        let mut entries = Vec::with_capacity(3 * n_z);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n_z {
                return Err(WitnessError::Ragged {
                    row: x,
                    expected: n_z,
                    found: row.len(),
                });
            }
            for (z, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(WitnessError::NonFinite(x, z));
                }
                entries.push(v);
            }
        }
        Ok(Self { n_z, entries })
    }

    pub fn zeros(n_z: usize) -> Self {
        assert!((3..=4).contains(&n_z));
        Self {
            n_z,
            entries: vec![0.0; 3 * n_z],
        }
    }

    /// The witness `[[-2,3,3],[3,-2,3],[3,3,-2]]`.
    pub fn example_f1() -> Self {
        Self::from_rows(&[
            vec![-2.0, 3.0, 3.0],
            vec![3.0, -2.0, 3.0],
            vec![3.0, 3.0, -2.0],
        ])
        .expect("valid")
    }

    /// The best witness found by the ratio search, as printed (rounded).
    pub fn near_optimal() -> Self {
        Self::from_rows(&[
            vec![3.0, -5.009, -4.99],
            vec![-5.01, 2.6, -5.09],
            vec![-5.11, -5.0, 3.0],
        ])
        .expect("valid")
    }

    /// Four-setting family: rows `(α,β,γ,q)`, `(γ,α,β,q)`, `(β,γ,α,q)`.
    pub fn family(p: &FamilyParams) -> Self {
        let (a, b, g, q) = (p.alpha, p.beta, p.gamma, p.q);
        Self {
            n_z: 4,
            entries: vec![a, b, g, q, g, a, b, q, b, g, a, q],
        }
    }

    pub fn tetrahedron() -> Self {
        Self::family(&FamilyParams::tetrahedron())
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.entries[x * self.n_z + z]
    }

    pub fn set(&mut self, x: usize, z: usize, v: f64) {
        self.entries[x * self.n_z + z] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n_z).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, z: usize) -> [f64; 3] {
        [self.get(0, z), self.get(1, z), self.get(2, z)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Copy with the columns reordered: column `z` of the result is column
    /// `perm[z]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n_z);
        let mut out = self.clone();
        for x in 0..3 {
            for z in 0..self.n_z {
                out.set(x, z, self.get(x, perm[z]));
            }
        }
        out
    }

    pub fn negate_column(&self, z: usize) -> Self {
        let mut out = self.clone();
        for x in 0..3 {
            out.set(x, z, -self.get(x, z));
        }
        out
    }

    pub fn from_json(s: &str) -> Result<Self, WitnessError> {
        serde_json::from_str(s).map_err(|e| WitnessError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    /// Three comma-separated rows, no header; `#` starts a comment line.
    pub fn from_csv(s: &str) -> Result<Self, WitnessError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(s.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| WitnessError::Parse(e.to_string()))?;
            let row = rec
                .iter()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| WitnessError::Parse(format!("{v:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

impl TryFrom<Vec<Vec<f64>>> for FMatrix {
    type Error = WitnessError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<FMatrix> for Vec<Vec<f64>> {
    fn from(f: FMatrix) -> Self {
        f.rows()
    }
}

impl FromStr for FMatrix {
    type Err = WitnessError;
    /// Accepts JSON (`[[..],[..],[..]]`) or CSV.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim_start().starts_with('[') {
            Self::from_json(s)
        } else {
            Self::from_csv(s)
        }
    }
}

impl fmt::Display for FMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>9.4}")).collect();
            write!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// `sign[b][x] ∈ {+1, -1}` weighting the outcome-resolved correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignTable {
    entries: [[i8; A_SETTINGS]; OUTCOMES],
}

impl SignTable {
    /// `+1` when `b = 0` or `b = x`, `-1` otherwise.
    ///
    /// Picked by [`resolve_sign_table`]; a regression test keeps the two in step.
    pub const RESOLVED: SignTable = SignTable {
        entries: [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
    };

    pub fn new(entries: [[i8; A_SETTINGS]; OUTCOMES]) -> Result<Self, WitnessError> {
        if entries.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(WitnessError::BadSign);
        }
        Ok(Self { entries })
    }

    /// Table taking `s0` on `b = 0`, `s1` on `b = x` and `s2` elsewhere.
    pub fn structured(s0: i8, s1: i8, s2: i8) -> Result<Self, WitnessError> {
        let mut e = [[0i8; A_SETTINGS]; OUTCOMES];
        for (b, row) in e.iter_mut().enumerate() {
            for (x, v) in row.iter_mut().enumerate() {
                *v = if b == 0 {
                    s0
                } else if b == x + 1 {
                    s1
                } else {
                    s2
                };
            }
        }
        Self::new(e)
    }

    /// All eight structured tables, `+1` before `-1` in each slot.
    pub fn candidates() -> Vec<SignTable> {
        let vals = [1i8, -1];
        let mut out = Vec::with_capacity(8);
        for s0 in vals {
            for s1 in vals {
                for s2 in vals {
                    out.push(Self::structured(s0, s1, s2).expect("±1"));
                }
            }
        }
        out
    }

    /// `sign[b][x]` with `b ∈ 0..4` and 0-based `x ∈ 0..3`.
    pub fn get(&self, b: usize, x: usize) -> f64 {
        f64::from(self.entries[b][x])
    }

    pub fn entries(&self) -> [[i8; A_SETTINGS]; OUTCOMES] {
        self.entries
    }

    /// Diagonal weights `D_x[k] = Σ_b sign[b][x] η[b][k] / 4`, so that on the
    /// explicit construction `F = Σ f[x][z] Σ_k D_x[k] a_x[k] c_z[k]`.
    pub fn effective_weights(&self) -> [[f64; 3]; A_SETTINGS] {
        let mut d = [[0.0; 3]; A_SETTINGS];
        for (x, dx) in d.iter_mut().enumerate() {
            for (k, v) in dx.iter_mut().enumerate() {
                *v = (0..OUTCOMES)
                    .map(|b| self.get(b, x) * OUTCOME_SIGNS[b][k])
                    .sum::<f64>()
                    / 4.0;
            }
        }
        d
    }
}

impl Default for SignTable {
    fn default() -> Self {
        Self::RESOLVED
    }
}

/// Parameters of the four-setting family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub q: f64,
}

impl FamilyParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, WitnessError> {
        let n2 = alpha * alpha + beta * beta + gamma * gamma;
        if !n2.is_finite() || (n2 - 1.0).abs() > 1e-12 {
            return Err(WitnessError::FamilyNorm(n2));
        }
        let q = -(3f64.sqrt()) * (alpha * beta + beta * gamma + gamma * alpha);
        if q < 0.0 {
            return Err(WitnessError::NegativeQ(q));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            q,
        })
    }

    /// `β = γ = -α = 1/√3`.
    pub fn tetrahedron() -> Self {
        let r = 1.0 / 3f64.sqrt();
        Self::new(-r, r, r).expect("valid family point")
    }
}

pub fn eval_f(f: &FMatrix, sign: &SignTable, t: &CorrelationTensor) -> Result<f64, WitnessError> {
    if t.n_x != A_SETTINGS || t.n_z != f.n_z() {
        return Err(WitnessError::Dimension {
            f_cols: f.n_z(),
            t_rows: t.n_x,
            t_cols: t.n_z,
        });
    }
    let mut total = 0.0;
    for b in 0..OUTCOMES {
        for x in 0..A_SETTINGS {
            for z in 0..f.n_z() {
                total += sign.get(b, x) * f.get(x, z) * t.corr(b, x, z);
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBound {
    pub value: f64,
    /// Maximizing `s_x`.
    pub s: [i8; A_SETTINGS],
    /// Matching `t_z = sign(Σ_x f[x][z] s_x)`, `+1` on zero.
    pub t: Vec<i8>,
}

/// `max_s Σ_z |Σ_x f[x][z] s_x|` by enumeration of `s ∈ {±1}³`.
///
/// Sign vectors are scanned in lexicographic order with `-1 < +1`; the first
/// maximizer is kept.
pub fn classical_bound(f: &FMatrix) -> ClassicalBound {
    let mut best: Option<ClassicalBound> = None;
    for mask in 0..(1u32 << A_SETTINGS) {
        let s: [i8; 3] =
            std::array::from_fn(|x| if mask >> (A_SETTINGS - 1 - x) & 1 == 1 { 1 } else { -1 });
        let mut value = 0.0;
        let mut t = Vec::with_capacity(f.n_z());
        for z in 0..f.n_z() {
            let col: f64 = (0..A_SETTINGS).map(|x| f.get(x, z) * f64::from(s[x])).sum();
            value += col.abs();
            t.push(if col < 0.0 { -1 } else { 1 });
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(ClassicalBound { value, s, t });
        }
    }
    best.expect("eight candidates")
}

/// `3 + √3 q`.
pub fn complex_bound_family(p: &FamilyParams) -> Result<f64, WitnessError> {
    if p.q < 0.0 {
        return Err(WitnessError::NegativeQ(p.q));
    }
    Ok(3.0 + 3f64.sqrt() * p.q)
}

/// `Σ_z ‖f[·][z]‖` for a 3×3 witness.
///
/// This is the maximum of `F` over settings of the explicit construction. It
/// upper-bounds `F` over all quantum models only for witnesses whose classical
/// value does not already exceed it; see the tests for a counterexample.
pub fn complex_bound_columns(f: &FMatrix) -> Result<f64, WitnessError> {
    if f.n_z() != 3 {
        return Err(WitnessError::NotSquare(f.n_z()));
    }
    Ok(column_norm_sum(f))
}

/// `Σ_z ‖f[·][z]‖` for any column count.
pub fn column_norm_sum(f: &FMatrix) -> f64 {
    (0..f.n_z())
        .map(|z| f.column(z).iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum()
}

/// Sum-of-squares operator for the family:
///
/// ```text
/// q(√3 C_4 - A_1 - A_2 - A_3)²/√3 + Σ_z (C_z - Σ_x f[x][z] A_x)²   (z = 1..3)
/// ```
///
/// For commuting dichotomic `A_x`, `C_z` it equals `2(3 + √3 q) - 2 Σ f[x][z] A_x C_z`.
pub fn family_sos_operator(p: &FamilyParams, a: &[CMat], c: &[CMat]) -> CMat {
    assert_eq!(a.len(), 3);
    assert_eq!(c.len(), 4);
    let f = FMatrix::family(p);
    let r3 = 3f64.sqrt();
    let mut t = c[3].scale_real(r3);
    for ax in a {
        t = &t - ax;
    }
    let mut out = (&t * &t).scale_real(p.q / r3);
    for z in 0..3 {
        let mut d = c[z].clone();
        for (x, ax) in a.iter().enumerate() {
            d = &d - &ax.scale_real(f.get(x, z));
        }
        out = &out + &(&d * &d);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 20,
            max_iter: 1000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedSettings {
    pub a: Vec<Setting>,
    pub c: Vec<Setting>,
    pub value: f64,
    /// False if the best start hit the iteration cap.
    pub converged: bool,
    pub iterations: usize,
    pub start: usize,
}

fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn normalize_or_keep(v: [f64; 3], keep: [f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1e-300 {
        [v[0] / n, v[1] / n, v[2] / n]
    } else {
        keep
    }
}

fn settings_value(f: &FMatrix, d: &[[f64; 3]; 3], a: &[[f64; 3]], c: &[[f64; 3]]) -> f64 {
    let mut v = 0.0;
    for x in 0..3 {
        for z in 0..f.n_z() {
            let inner: f64 = (0..3).map(|k| d[x][k] * a[x][k] * c[z][k]).sum();
            v += f.get(x, z) * inner;
        }
    }
    v
}

fn see_saw(f: &FMatrix, d: &[[f64; 3]; 3], cfg: &OptimizerConfig, start: usize) -> OptimizedSettings {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(start as u64));
    let mut a: Vec<[f64; 3]> = (0..3).map(|_| random_unit(&mut rng)).collect();
    let mut c: Vec<[f64; 3]> = (0..f.n_z()).map(|_| random_unit(&mut rng)).collect();
    let mut value = settings_value(f, d, &a, &c);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        for z in 0..f.n_z() {
            let mut g = [0.0; 3];
            for x in 0..3 {
                for k in 0..3 {
                    g[k] += f.get(x, z) * d[x][k] * a[x][k];
                }
            }
            c[z] = normalize_or_keep(g, c[z]);
        }
        for x in 0..3 {
            let mut g = [0.0; 3];
            for z in 0..f.n_z() {
                for k in 0..3 {
                    g[k] += f.get(x, z) * d[x][k] * c[z][k];
                }
            }
            a[x] = normalize_or_keep(g, a[x]);
        }
        let next = settings_value(f, d, &a, &c);
        let gain = next - value;
        value = next;
        if gain < cfg.tol {
            converged = true;
            break;
        }
    }
    let to_settings = |v: &[[f64; 3]]| {
        v.iter()
            .map(|d| Setting::normalized(*d).expect("unit vector"))
            .collect()
    };
    OptimizedSettings {
        a: to_settings(&a),
        c: to_settings(&c),
        value,
        converged,
        iterations,
        start,
    }
}

/// Multi-start see-saw maximization of `F` over settings of the explicit
/// construction.
///
/// Starts run in parallel, each on its own stream seeded by `seed + start`;
/// the best value wins, ties going to the lower start index.
pub fn optimize_settings(f: &FMatrix, sign: &SignTable, cfg: &OptimizerConfig) -> OptimizedSettings {
    let d = sign.effective_weights();
    let runs: Vec<OptimizedSettings> = (0..cfg.starts.max(1))
        .into_par_iter()
        .map(|s| see_saw(f, &d, cfg, s))
        .collect();
    runs.into_iter()
        .reduce(|best, r| if r.value > best.value { r } else { best })
        .expect("at least one start")
}

/// First structured sign table under which the optimizer attains `3 + √3 q`
/// on the tetrahedron point and the column-norm sum on `f1`.
pub fn resolve_sign_table() -> Option<SignTable> {
    let cfg = OptimizerConfig::default();
    let tet = FMatrix::tetrahedron();
    let tet_target = complex_bound_family(&FamilyParams::tetrahedron()).expect("q ≥ 0");
    let f1 = FMatrix::example_f1();
    let f1_target = column_norm_sum(&f1);
    SignTable::candidates().into_iter().find(|s| {
        let v_tet = optimize_settings(&tet, s, &cfg).value;
        let v_f1 = optimize_settings(&f1, s, &cfg).value;
        (v_tet - tet_target).abs() < 1e-6 && (v_f1 - f1_target).abs() < 1e-6
    })
}

/// Optional `F_r` data attached to a [`BoundsReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealBoundSummary {
    pub value: f64,
    pub level: usize,
    pub status: String,
    pub duality_gap: f64,
    pub primal_value: f64,
    pub dual_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexBoundSummary {
    pub value: f64,
    /// `"family"`, `"columns"` or `"construction"`.
    pub method: String,
    pub settings: OptimizedSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub f: FMatrix,
    pub sign_table: SignTable,
    pub classical: ClassicalBound,
    pub complex: Option<ComplexBoundSummary>,
    pub real: Option<RealBoundSummary>,
    /// `F_q / F_r` when both are present.
    pub ratio_qr: Option<f64>,
}

impl BoundsReport {
    /// Recognizes the family pattern of `f` up to `tol`.
    pub fn family_params(f: &FMatrix, tol: f64) -> Option<FamilyParams> {
        if f.n_z() != 4 {
            return None;
        }
        let p = FamilyParams::new(f.get(0, 0), f.get(0, 1), f.get(0, 2)).ok()?;
        let g = FMatrix::family(&p);
        f.as_slice()
            .iter()
            .zip(g.as_slice())
            .all(|(a, b)| (a - b).abs() <= tol)
            .then_some(p)
    }

    /// Classical and complex parts; `F_r` is attached separately.
    pub fn new(f: &FMatrix, sign: &SignTable, cfg: &OptimizerConfig) -> Self {
        let classical = classical_bound(f);
        let settings = optimize_settings(f, sign, cfg);
        let (value, method) = if let Some(p) = Self::family_params(f, 1e-12) {
            (complex_bound_family(&p).expect("q ≥ 0"), "family")
        } else if f.n_z() == 3 {
            (column_norm_sum(f), "columns")
        } else {
            (settings.value, "construction")
        };
        Self {
            f: f.clone(),
            sign_table: *sign,
            classical,
            complex: Some(ComplexBoundSummary {
                value,
                method: method.to_string(),
                settings,
            }),
            real: None,
            ratio_qr: None,
        }
    }

    pub fn with_real(mut self, real: RealBoundSummary) -> Self {
        self.ratio_qr = self.complex.as_ref().map(|c| c.value / real.value);
        self.real = Some(real);
        self
    }
}
