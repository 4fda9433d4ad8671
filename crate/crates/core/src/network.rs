//! The explicit complex-quantum realization of the network.
//!
//! Sources emit singlets on `AP` and `QC`; `B` measures `PQ` in a four-outcome
//! basis; `A` and `C` measure `a·σ` and `c·σ`. All correlations conditional on
//! the `B` outcome have closed forms
//!
//! ```text
//! <A C || b> = (1/4) Σ_k η[b][k] a_k c_k
//! ```
//!
//! with `η[0] = (-1,-1,-1)` and, for `b ≥ 1`, `η[b][k] = -1` if `k = b` else `+1`.
//! The matrix route ([`correlations_by_trace`]) recomputes them from traces and
//! is kept as an independent cross-check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, pauli, paulis, CMat, LinalgError, QubitLabel};

pub const OUTCOMES: usize = 4;
pub const A_SETTINGS: usize = 3;

/// Sign pattern of the `σ_k σ_k` terms in `B_b`, and hence in `<AC||b>`.
pub const OUTCOME_SIGNS: [[f64; 3]; OUTCOMES] = [
    [-1.0, -1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, -1.0],
];

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("setting direction must have unit norm, got norm {0}")]
    NonUnitSetting(f64),
    #[error("setting direction has a non-finite component")]
    NonFiniteSetting,
    #[error("expected {expected} settings for {party}, got {found}")]
    SettingCount {
        party: &'static str,
        expected: &'static str,
        found: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A measurement direction on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    direction: [f64; 3],
}

impl Setting {
    pub fn new(direction: [f64; 3]) -> Result<Self, NetworkError> {
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(NetworkError::NonFiniteSetting);
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(NetworkError::NonUnitSetting(norm));
        }
        Ok(Self { direction })
    }

    /// Normalizes `v`; fails only for the zero vector or non-finite input.
    pub fn normalized(v: [f64; 3]) -> Result<Self, NetworkError> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(NetworkError::NonFiniteSetting);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(NetworkError::NonUnitSetting(0.0));
        }
        Ok(Self {
            direction: [v[0] / norm, v[1] / norm, v[2] / norm],
        })
    }

    /// Unit vector along axis `k` (0-based).
    pub fn axis(k: usize) -> Self {
        let mut d = [0.0; 3];
        d[k] = 1.0;
        Self { direction: d }
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn negated(&self) -> Self {
        let d = self.direction;
        Self {
            direction: [-d[0], -d[1], -d[2]],
        }
    }

    /// The dichotomic observable `d·σ`.
    pub fn observable(&self) -> CMat {
        linalg::bloch_operator(&self.direction)
    }
}

#[derive(Debug, Clone)]
pub struct SourceStates {
    /// State on `A ⊗ P`.
    pub rho_l: CMat,
    /// State on `Q ⊗ C`.
    pub rho_r: CMat,
}

impl SourceStates {
    /// `ρ_L ⊗ ρ_R` on the full register.
    pub fn product(&self) -> CMat {
        self.rho_l.kron(&self.rho_r)
    }
}

#[derive(Debug, Clone)]
pub struct BMeasurement {
    /// Projectors on `P ⊗ Q`, indexed by outcome `b`.
    pub projectors: [CMat; OUTCOMES],
}

impl BMeasurement {
    /// `1_A ⊗ B_b ⊗ 1_C`.
    pub fn embedded(&self, b: usize) -> CMat {
        CMat::identity(2)
            .kron(&self.projectors[b])
            .kron(&CMat::identity(2))
    }
}

/// `(1 + Σ_k w_k σ_k ⊗ σ_k) / 4` on two qubits.
fn two_qubit_pauli_sum(weights: [f64; 3]) -> CMat {
    let s = paulis();
    let mut m = CMat::identity(4);
    for k in 0..3 {
        m = &m + &s[k].kron(&s[k]).scale_real(weights[k]);
    }
    m.scale_real(0.25)
}

pub fn build_network() -> (SourceStates, BMeasurement) {
    let singlet = two_qubit_pauli_sum([-1.0, -1.0, -1.0]);
    let states = SourceStates {
        rho_l: singlet.clone(),
        rho_r: singlet,
    };
    let projectors = std::array::from_fn(|b| two_qubit_pauli_sum(OUTCOME_SIGNS[b]));
    (states, BMeasurement { projectors })
}

/// Outcome-resolved correlations, marginals and outcome probabilities.
///
/// Marginals and `p(b)` are stored per setting pair `(x, z)` so that the
/// no-signalling diagnostic can compare them across contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTensor {
    pub n_x: usize,
    pub n_z: usize,
    corr: Vec<f64>,
    marg_a: Vec<f64>,
    marg_c: Vec<f64>,
    p_b: Vec<f64>,
}

impl CorrelationTensor {
    pub fn zeros(n_x: usize, n_z: usize) -> Self {
        let len = OUTCOMES * n_x * n_z;
        Self {
            n_x,
            n_z,
            corr: vec![0.0; len],
            marg_a: vec![0.0; len],
            marg_c: vec![0.0; len],
            p_b: vec![0.0; len],
        }
    }

    fn idx(&self, b: usize, x: usize, z: usize) -> usize {
        (b * self.n_x + x) * self.n_z + z
    }

    /// `<A_x C_z || b>`.
    pub fn corr(&self, b: usize, x: usize, z: usize) -> f64 {
        self.corr[self.idx(b, x, z)]
    }

    pub fn set_corr(&mut self, b: usize, x: usize, z: usize, v: f64) {
        let i = self.idx(b, x, z);
        self.corr[i] = v;
    }

    /// `<A_x || b>` measured in context `z`.
    pub fn marg_a(&self, b: usize, x: usize, z: usize) -> f64 {
        self.marg_a[self.idx(b, x, z)]
    }

    /// `<C_z || b>` measured in context `x`.
    pub fn marg_c(&self, b: usize, x: usize, z: usize) -> f64 {
        self.marg_c[self.idx(b, x, z)]
    }

    /// `p(b)` in context `(x, z)`.
    pub fn p_b(&self, b: usize, x: usize, z: usize) -> f64 {
        self.p_b[self.idx(b, x, z)]
    }

    /// `Σ_b <A_x C_z || b>`.
    pub fn unconditional(&self, x: usize, z: usize) -> f64 {
        (0..OUTCOMES).map(|b| self.corr(b, x, z)).sum()
    }
}

fn check_counts(a: &[Setting], c: &[Setting]) -> Result<(), NetworkError> {
    if a.len() != A_SETTINGS {
        return Err(NetworkError::SettingCount {
            party: "A",
            expected: "3",
            found: a.len(),
        });
    }
    if !(3..=4).contains(&c.len()) {
        return Err(NetworkError::SettingCount {
            party: "C",
            expected: "3 or 4",
            found: c.len(),
        });
    }
    Ok(())
}

/// Closed-form correlations of the explicit construction.
pub fn correlations(a: &[Setting], c: &[Setting]) -> Result<CorrelationTensor, NetworkError> {
    check_counts(a, c)?;
    let mut t = CorrelationTensor::zeros(a.len(), c.len());
    for b in 0..OUTCOMES {
        for (x, ax) in a.iter().enumerate() {
            for (z, cz) in c.iter().enumerate() {
                let (u, v) = (ax.direction(), cz.direction());
                let val: f64 = (0..3).map(|k| OUTCOME_SIGNS[b][k] * u[k] * v[k]).sum::<f64>() / 4.0;
                let i = t.idx(b, x, z);
                t.corr[i] = val;
                t.p_b[i] = 0.25;
            }
        }
    }
    Ok(t)
}

/// The same tensor computed from `Tr[(A ⊗ B_b ⊗ C) ρ_L ⊗ ρ_R]`.
pub fn correlations_by_trace(
    a: &[Setting],
    c: &[Setting],
) -> Result<CorrelationTensor, NetworkError> {
    check_counts(a, c)?;
    let (states, meas) = build_network();
    let rho = states.product();
    let a_ops: Vec<CMat> = a
        .iter()
        .map(|s| linalg::embed(&s.observable(), QubitLabel::A))
        .collect::<Result<_, _>>()?;
    let c_ops: Vec<CMat> = c
        .iter()
        .map(|s| linalg::embed(&s.observable(), QubitLabel::C))
        .collect::<Result<_, _>>()?;
    let mut t = CorrelationTensor::zeros(a.len(), c.len());
    for b in 0..OUTCOMES {
        let brho = &meas.embedded(b) * &rho;
        let pb = brho.trace().re;
        for x in 0..a.len() {
            let ma = a_ops[x].trace_product(&brho).re;
            for z in 0..c.len() {
                let i = t.idx(b, x, z);
                t.corr[i] = (&a_ops[x] * &c_ops[z]).trace_product(&brho).re;
                t.marg_a[i] = ma;
                t.marg_c[i] = c_ops[z].trace_product(&brho).re;
                t.p_b[i] = pb;
            }
        }
    }
    Ok(t)
}

/// Full outcome table `p(a, b, c | x, z)` with `a, c ∈ {+1, -1}` stored as
/// index 0 for `+1` and 1 for `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub n_x: usize,
    pub n_z: usize,
    p: Vec<f64>,
}

impl ProbabilityTable {
    fn idx(&self, x: usize, z: usize, a: usize, b: usize, c: usize) -> usize {
        (((x * self.n_z + z) * 2 + a) * OUTCOMES + b) * 2 + c
    }

    pub fn get(&self, x: usize, z: usize, a: usize, b: usize, c: usize) -> f64 {
        self.p[self.idx(x, z, a, b, c)]
    }

    pub fn set(&mut self, x: usize, z: usize, a: usize, b: usize, c: usize, v: f64) {
        let i = self.idx(x, z, a, b, c);
        self.p[i] = v;
    }

    /// `Σ_{a,b,c} p(a,b,c|x,z)`.
    pub fn total(&self, x: usize, z: usize) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..OUTCOMES {
                for c in 0..2 {
                    s += self.get(x, z, a, b, c);
                }
            }
        }
        s
    }

    pub fn min_entry(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Correlations, marginals and `p(b)` recovered by outcome-weighted sums.
    pub fn correlation_tensor(&self) -> CorrelationTensor {
        let sign = |o: usize| if o == 0 { 1.0 } else { -1.0 };
        let mut t = CorrelationTensor::zeros(self.n_x, self.n_z);
        for b in 0..OUTCOMES {
            for x in 0..self.n_x {
                for z in 0..self.n_z {
                    let (mut corr, mut ma, mut mc, mut pb) = (0.0, 0.0, 0.0, 0.0);
                    for a in 0..2 {
                        for c in 0..2 {
                            let p = self.get(x, z, a, b, c);
                            corr += sign(a) * sign(c) * p;
                            ma += sign(a) * p;
                            mc += sign(c) * p;
                            pb += p;
                        }
                    }
                    let i = t.idx(b, x, z);
                    t.corr[i] = corr;
                    t.marg_a[i] = ma;
                    t.marg_c[i] = mc;
                    t.p_b[i] = pb;
                }
            }
        }
        t
    }
}

/// Outcome probabilities of the explicit construction from projector traces.
pub fn probabilities(a: &[Setting], c: &[Setting]) -> Result<ProbabilityTable, NetworkError> {
    check_counts(a, c)?;
    let (states, meas) = build_network();
    let rho = states.product();
    let id2 = CMat::identity(2);
    let proj = |s: &Setting, o: usize| -> CMat {
        let sign = if o == 0 { 1.0 } else { -1.0 };
        (&id2 + &s.observable().scale_real(sign)).scale_real(0.5)
    };
    let mut table = ProbabilityTable {
        n_x: a.len(),
        n_z: c.len(),
        p: vec![0.0; a.len() * c.len() * 2 * OUTCOMES * 2],
    };
    for (x, ax) in a.iter().enumerate() {
        for (z, cz) in c.iter().enumerate() {
            for oa in 0..2 {
                let pa = proj(ax, oa);
                for b in 0..OUTCOMES {
                    let left = pa.kron(&meas.projectors[b]);
                    for oc in 0..2 {
                        let op = left.kron(&proj(cz, oc));
                        let v = op.trace_product(&rho).re;
                        table.set(x, z, oa, b, oc, v);
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Largest context dependence of the marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    /// max over `(b, x)` of the spread of `<A_x||b>` across `z`.
    pub max_dev_a: f64,
    /// max over `(b, z)` of the spread of `<C_z||b>` across `x`.
    pub max_dev_c: f64,
    /// max over `b` of the spread of `p(b)` across `(x, z)`.
    pub max_dev_pb: f64,
    /// Worst `(b, x)` for the `A` marginals.
    pub worst_a: (usize, usize),
    /// Worst `(b, z)` for the `C` marginals.
    pub worst_c: (usize, usize),
    pub worst_pb: usize,
}

impl NoSignalingReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_dev_a.max(self.max_dev_c).max(self.max_dev_pb)
    }
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

pub fn check_nosignaling(t: &CorrelationTensor) -> NoSignalingReport {
    let mut r = NoSignalingReport {
        max_dev_a: 0.0,
        max_dev_c: 0.0,
        max_dev_pb: 0.0,
        worst_a: (0, 0),
        worst_c: (0, 0),
        worst_pb: 0,
    };
    for b in 0..OUTCOMES {
        for x in 0..t.n_x {
            let d = spread((0..t.n_z).map(|z| t.marg_a(b, x, z)));
            if d > r.max_dev_a {
                r.max_dev_a = d;
                r.worst_a = (b, x);
            }
        }
        for z in 0..t.n_z {
            let d = spread((0..t.n_x).map(|x| t.marg_c(b, x, z)));
            if d > r.max_dev_c {
                r.max_dev_c = d;
                r.worst_c = (b, z);
            }
        }
        let d = spread((0..t.n_x).flat_map(|x| (0..t.n_z).map(move |z| (x, z))).map(|(x, z)| t.p_b(b, x, z)));
        if d > r.max_dev_pb {
            r.max_dev_pb = d;
            r.worst_pb = b;
        }
    }
    r
}

/// `Tr_PQ[(1 ⊗ B_b ⊗ 1) ρ_L ⊗ ρ_R]`, the unnormalized `AC` state after outcome `b`.
pub fn conditional_ac_state(b: usize) -> Result<CMat, NetworkError> {
    let (states, meas) = build_network();
    let m = &meas.embedded(b) * &states.product();
    Ok(linalg::partial_trace(&m, &[QubitLabel::A, QubitLabel::C])?)
}

/// `σ_k ⊗ σ_k` on two qubits, used to spell out closed forms.
pub fn pauli_pair(k: usize) -> CMat {
    let s = pauli(k).expect("axis in 1..=3");
    s.kron(&s)
}
