//! Dense primal-dual interior-point solver for block-diagonal real SDPs.
//!
//! Instances are stored in "moment form":
//!
//! ```text
//! maximize    cᵀy
//! subject to  X_j = C_j + Σ_i y_i A_{j,i} ⪰ 0   for each block j
//!             E y = e
//! ```
//!
//! with dual
//!
//! ```text
//! minimize    Σ_j <C_j, Z_j> + eᵀλ
//! subject to  c + Σ_j A_j*(Z_j) - Eᵀλ = 0,   Z_j ⪰ 0
//! ```
//!
//! The iteration is an infeasible path-following method with the HKM search
//! direction and a Mehrotra predictor-corrector. The Schur complement
//! `M_ik = Σ_j tr(A_{j,i} X_j⁻¹ A_{j,k} Z_j)` is block-diagonal over groups of
//! variables that share PSD blocks, so each group is factored on its own and
//! the equalities are handled through the small matrix `E M⁻¹ Eᵀ`.

use std::collections::BTreeMap;

use faer::linalg::solvers::DenseSolveCore;
use faer::prelude::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("block {block}: entry ({row}, {col}) outside a {dim}x{dim} block")]
    EntryOutOfRange {
        block: usize,
        row: usize,
        col: usize,
        dim: usize,
    },
    #[error("block {block}: entry ({row}, {col}) must be in the upper triangle")]
    LowerEntry { block: usize, row: usize, col: usize },
    #[error("variable index {0} out of range")]
    VariableOutOfRange(usize),
    #[error("variable {0} does not appear in any PSD block")]
    FreeVariable(usize),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("block count mismatch: {dims} dimensions, {constants} constant lists, {coefs} coefficient lists")]
    BlockCount {
        dims: usize,
        constants: usize,
        coefs: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// One upper-triangle entry of a symmetric matrix; `(row, col)` with
/// `row < col` stands for both mirrored positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// `Σ_i coef_i y_i = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpInstance {
    pub sense: Sense,
    pub n_vars: usize,
    pub block_dims: Vec<usize>,
    /// Sparse objective `(variable, coefficient)`.
    pub objective: Vec<(usize, f64)>,
    /// `C_j` per block.
    pub constant: Vec<Vec<SymEntry>>,
    /// `(variable, entry of A_{j,variable})` per block.
    pub coefficients: Vec<Vec<(usize, SymEntry)>>,
    pub equalities: Vec<LinearEquality>,
}

impl SdpInstance {
    pub fn new(sense: Sense, n_vars: usize, block_dims: Vec<usize>) -> Self {
        let nb = block_dims.len();
        Self {
            sense,
            n_vars,
            block_dims,
            objective: Vec::new(),
            constant: vec![Vec::new(); nb],
            coefficients: vec![Vec::new(); nb],
            equalities: Vec::new(),
        }
    }

    /// Adds `value` to `A_{block,var}[row][col]` (and its mirror).
    pub fn add_coefficient(&mut self, block: usize, var: usize, row: usize, col: usize, value: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.coefficients[block].push((var, SymEntry { row, col, value }));
    }

    pub fn add_constant(&mut self, block: usize, row: usize, col: usize, value: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.constant[block].push(SymEntry { row, col, value });
    }

    pub fn add_equality(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(LinearEquality { terms, rhs });
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let nb = self.block_dims.len();
        if self.constant.len() != nb || self.coefficients.len() != nb {
            return Err(SdpError::BlockCount {
                dims: nb,
                constants: self.constant.len(),
                coefs: self.coefficients.len(),
            });
        }
        let check = |block: usize, e: &SymEntry| -> Result<(), SdpError> {
            let dim = self.block_dims[block];
            if e.row >= dim || e.col >= dim {
                return Err(SdpError::EntryOutOfRange {
                    block,
                    row: e.row,
                    col: e.col,
                    dim,
                });
            }
            if e.row > e.col {
                return Err(SdpError::LowerEntry {
                    block,
                    row: e.row,
                    col: e.col,
                });
            }
            if !e.value.is_finite() {
                return Err(SdpError::NonFinite("block entry"));
            }
            Ok(())
        };
        let mut seen = vec![false; self.n_vars];
        for j in 0..nb {
            for e in &self.constant[j] {
                check(j, e)?;
            }
            for (v, e) in &self.coefficients[j] {
                if *v >= self.n_vars {
                    return Err(SdpError::VariableOutOfRange(*v));
                }
                check(j, e)?;
                seen[*v] = true;
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(SdpError::FreeVariable(v));
        }
        for (v, c) in &self.objective {
            if *v >= self.n_vars {
                return Err(SdpError::VariableOutOfRange(*v));
            }
            if !c.is_finite() {
                return Err(SdpError::NonFinite("objective"));
            }
        }
        for eq in &self.equalities {
            if !eq.rhs.is_finite() {
                return Err(SdpError::NonFinite("equality"));
            }
            for (v, c) in &eq.terms {
                if *v >= self.n_vars {
                    return Err(SdpError::VariableOutOfRange(*v));
                }
                if !c.is_finite() {
                    return Err(SdpError::NonFinite("equality"));
                }
            }
        }
        Ok(())
    }

    /// `X_j = C_j + Σ_i y_i A_{j,i}` as dense row-major matrices.
    pub fn slack(&self, y: &[f64]) -> Vec<Vec<f64>> {
        (0..self.block_dims.len())
            .map(|j| {
                let n = self.block_dims[j];
                let mut x = vec![0.0; n * n];
                for e in &self.constant[j] {
                    add_sym(&mut x, n, e.row, e.col, e.value);
                }
                for (v, e) in &self.coefficients[j] {
                    add_sym(&mut x, n, e.row, e.col, e.value * y[*v]);
                }
                x
            })
            .collect()
    }

    /// `c + Σ_j A_j*(Z_j) - Eᵀλ` in the maximization convention.
    pub fn dual_residual(&self, z: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
        let mut r = self.max_objective_dense();
        for j in 0..self.block_dims.len() {
            let n = self.block_dims[j];
            for (v, e) in &self.coefficients[j] {
                r[*v] += e.value * sym_pair(&z[j], n, e.row, e.col);
            }
        }
        for (eq, l) in self.equalities.iter().zip(lambda) {
            for (v, c) in &eq.terms {
                r[*v] -= c * l;
            }
        }
        r
    }

    fn max_objective_dense(&self) -> Vec<f64> {
        let sgn = match self.sense {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let mut c = vec![0.0; self.n_vars];
        for (v, w) in &self.objective {
            c[*v] += sgn * w;
        }
        c
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().map(|(v, w)| w * y[*v]).sum()
    }

    /// Same problem with variables relabelled by `var_perm` (old → new) and
    /// blocks by `block_perm` (old → new).
    pub fn permuted(&self, var_perm: &[usize], block_perm: &[usize]) -> Self {
        let nb = self.block_dims.len();
        let mut out = Self::new(self.sense, self.n_vars, vec![0; nb]);
        for j in 0..nb {
            let nj = block_perm[j];
            out.block_dims[nj] = self.block_dims[j];
            out.constant[nj] = self.constant[j].clone();
            out.coefficients[nj] = self.coefficients[j]
                .iter()
                .map(|(v, e)| (var_perm[*v], *e))
                .collect();
        }
        out.objective = self.objective.iter().map(|(v, w)| (var_perm[*v], *w)).collect();
        out.equalities = self
            .equalities
            .iter()
            .map(|eq| LinearEquality {
                terms: eq.terms.iter().map(|(v, c)| (var_perm[*v], *c)).collect(),
                rhs: eq.rhs,
            })
            .collect();
        out
    }
}

fn add_sym(x: &mut [f64], n: usize, r: usize, c: usize, v: f64) {
    x[r * n + c] += v;
    if r != c {
        x[c * n + r] += v;
    }
}

/// `<E_rc + E_cr, W>` for `r ≠ c`, `W_rr` on the diagonal.
fn sym_pair(w: &[f64], n: usize, r: usize, c: usize) -> f64 {
    if r == c {
        w[r * n + r]
    } else {
        w[r * n + c] + w[c * n + r]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative duality gap `|p - d| / (1 + |p| + |d|)`.
    pub gap: f64,
    /// Relative primal and dual infeasibility.
    pub feasibility: f64,
    pub max_iterations: usize,
    /// Pivot threshold for dropping dependent equalities.
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap: 1e-8,
            feasibility: 1e-9,
            max_iterations: 100,
            pivot: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Inaccurate,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Primal variables `y`.
    pub y: Vec<f64>,
    /// Dual blocks `Z_j`, dense row-major, in the maximization convention.
    pub z: Vec<Vec<f64>>,
    /// One multiplier per equality of the instance; dependent rows get 0.
    pub lambda: Vec<f64>,
    /// `cᵀy` in the instance's own sense.
    pub primal_objective: f64,
    /// `Σ<C_j, Z_j> + eᵀλ` in the instance's own sense.
    pub dual_objective: f64,
    /// `|primal - dual| / (1 + |primal| + |dual|)`.
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    /// Equalities dropped as linearly dependent.
    pub dropped_equalities: Vec<usize>,
}

impl SdpSolution {
    fn failed(inst: &SdpInstance, status: SolveStatus) -> Self {
        Self {
            status,
            y: vec![0.0; inst.n_vars],
            z: inst.block_dims.iter().map(|n| vec![0.0; n * n]).collect(),
            lambda: vec![0.0; inst.equalities.len()],
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            relative_gap: f64::INFINITY,
            primal_infeasibility: f64::INFINITY,
            dual_infeasibility: f64::INFINITY,
            iterations: 0,
            dropped_equalities: Vec::new(),
        }
    }
}

/// Splits equalities into an independent subset and the rest by sparse
/// Gaussian elimination, pivoting on the leading column of each reduced row.
///
/// Returns `(kept, dropped, inconsistent)`; a dependent row with a nonzero
/// reduced right-hand side makes the system inconsistent.
pub fn independent_equalities(eqs: &[LinearEquality], pivot_tol: f64) -> (Vec<usize>, Vec<usize>, bool) {
    let mut pivots: BTreeMap<usize, (BTreeMap<usize, f64>, f64)> = BTreeMap::new();
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    let mut inconsistent = false;
    let scale_of = |eq: &LinearEquality| eq.terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    for (idx, eq) in eqs.iter().enumerate() {
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, c) in &eq.terms {
            *row.entry(*v).or_insert(0.0) += c;
        }
        let mut rhs = eq.rhs;
        let scale = scale_of(eq).max(1.0);
        let mut from = 0usize;
        loop {
            let next = row
                .range(from..)
                .find(|(_, c)| c.abs() > pivot_tol * scale)
                .map(|(k, c)| (*k, *c));
            let Some((col, val)) = next else { break };
            match pivots.get(&col) {
                Some((prow, prhs)) => {
                    let factor = val / prow[&col];
                    for (k, c) in prow {
                        *row.entry(*k).or_insert(0.0) -= factor * c;
                    }
                    row.remove(&col);
                    rhs -= factor * prhs;
                    from = col + 1;
                }
                None => {
                    row.retain(|_, c| c.abs() > pivot_tol * scale);
                    pivots.insert(col, (row, rhs));
                    kept.push(idx);
                    break;
                }
            }
        }
        if kept.last() != Some(&idx) {
            dropped.push(idx);
            if rhs.abs() > 1e-9 * scale.max(eq.rhs.abs()).max(1.0) {
                inconsistent = true;
            }
        }
    }
    (kept, dropped, inconsistent)
}

/// Per-block data in the form the iteration needs.
struct Block {
    n: usize,
    constant: Vec<f64>,
    /// Upper-triangle positions with their `(group-local variable, coef)` terms.
    positions: Vec<(usize, usize)>,
    term_start: Vec<usize>,
    terms: Vec<(usize, f64)>,
    group: usize,
}

struct Group {
    vars: Vec<usize>,
    /// Kept equalities touching this group with their local coefficients.
    eq_rows: Vec<usize>,
}

struct Prepared<'a> {
    inst: &'a SdpInstance,
    c: Vec<f64>,
    blocks: Vec<Block>,
    groups: Vec<Group>,
    /// var -> (group, local index)
    var_loc: Vec<(usize, usize)>,
    /// Kept equalities, reindexed 0..r.
    eqs: Vec<&'a LinearEquality>,
    kept: Vec<usize>,
    dropped: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl<'a> Prepared<'a> {
    fn new(inst: &'a SdpInstance, tol: &Tolerances) -> (Self, bool) {
        let nb = inst.block_dims.len();
        // Union-find on blocks: two blocks sharing a variable share a group.
        let mut parent: Vec<usize> = (0..nb).collect();
        let mut owner = vec![usize::MAX; inst.n_vars];
        for j in 0..nb {
            for (v, _) in &inst.coefficients[j] {
                if owner[*v] == usize::MAX {
                    owner[*v] = j;
                } else {
                    let (a, b) = (find(&mut parent, owner[*v]), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut group_of_root = BTreeMap::new();
        let mut block_group = vec![0; nb];
        for j in 0..nb {
            let r = find(&mut parent, j);
            let next = group_of_root.len();
            block_group[j] = *group_of_root.entry(r).or_insert(next);
        }
        let mut groups: Vec<Group> = (0..group_of_root.len())
            .map(|_| Group {
                vars: Vec::new(),
                eq_rows: Vec::new(),
            })
            .collect();
        let mut var_loc = vec![(0, 0); inst.n_vars];
        for v in 0..inst.n_vars {
            let g = block_group[owner[v]];
            var_loc[v] = (g, groups[g].vars.len());
            groups[g].vars.push(v);
        }
        let blocks = (0..nb)
            .map(|j| {
                let n = inst.block_dims[j];
                let mut constant = vec![0.0; n * n];
                for e in &inst.constant[j] {
                    add_sym(&mut constant, n, e.row, e.col, e.value);
                }
                let mut by_pos: BTreeMap<(usize, usize), BTreeMap<usize, f64>> = BTreeMap::new();
                for (v, e) in &inst.coefficients[j] {
                    *by_pos
                        .entry((e.row, e.col))
                        .or_default()
                        .entry(var_loc[*v].1)
                        .or_insert(0.0) += e.value;
                }
                let mut positions = Vec::with_capacity(by_pos.len());
                let mut term_start = vec![0];
                let mut terms = Vec::new();
                for (pos, ts) in by_pos {
                    positions.push(pos);
                    terms.extend(ts.into_iter().filter(|(_, c)| *c != 0.0));
                    term_start.push(terms.len());
                }
                Block {
                    n,
                    constant,
                    positions,
                    term_start,
                    terms,
                    group: block_group[j],
                }
            })
            .collect();
        let (kept, dropped, inconsistent) = independent_equalities(&inst.equalities, tol.pivot);
        let eqs: Vec<&LinearEquality> = kept.iter().map(|&i| &inst.equalities[i]).collect();
        for (r, eq) in eqs.iter().enumerate() {
            let mut touched: Vec<usize> = eq.terms.iter().map(|(v, _)| var_loc[*v].0).collect();
            touched.sort_unstable();
            touched.dedup();
            for g in touched {
                groups[g].eq_rows.push(r);
            }
        }
        (
            Self {
                inst,
                c: inst.max_objective_dense(),
                blocks,
                groups,
                var_loc,
                eqs,
                kept,
                dropped,
            },
            inconsistent,
        )
    }

    fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.n).sum()
    }

    /// `Σ_i y_i A_i` per block (no constant).
    fn apply_a(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                let vars = &self.groups[b.group].vars;
                let mut x = vec![0.0; b.n * b.n];
                for (pi, &(r, c)) in b.positions.iter().enumerate() {
                    let mut s = 0.0;
                    for &(lv, coef) in &b.terms[b.term_start[pi]..b.term_start[pi + 1]] {
                        s += coef * y[vars[lv]];
                    }
                    add_sym(&mut x, b.n, r, c, s);
                }
                x
            })
            .collect()
    }

    /// `A*(W)`; `W` need not be symmetric.
    fn apply_at(&self, w: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.inst.n_vars];
        for (j, b) in self.blocks.iter().enumerate() {
            let vars = &self.groups[b.group].vars;
            for (pi, &(r, c)) in b.positions.iter().enumerate() {
                let val = sym_pair(&w[j], b.n, r, c);
                for &(lv, coef) in &b.terms[b.term_start[pi]..b.term_start[pi + 1]] {
                    out[vars[lv]] += coef * val;
                }
            }
        }
        out
    }

    fn apply_e(&self, y: &[f64]) -> Vec<f64> {
        self.eqs
            .iter()
            .map(|eq| eq.terms.iter().map(|(v, c)| c * y[*v]).sum())
            .collect()
    }

    fn apply_et(&self, l: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inst.n_vars];
        for (eq, lv) in self.eqs.iter().zip(l) {
            for (v, c) in &eq.terms {
                out[*v] += c * lv;
            }
        }
        out
    }

    /// Adds block `b`'s contribution to `M_ik = tr(A_i G A_k Z)` into the
    /// group matrix `m` (row-major, group-local indices).
    fn accumulate_schur(b: &Block, g: &[f64], z: &[f64], m: &mut [f64], mdim: usize) {
        let n = b.n;
        let np = b.positions.len();
        for pi in 0..np {
            let (p, q) = b.positions[pi];
            let (gp, gq) = (&g[p * n..(p + 1) * n], &g[q * n..(q + 1) * n]);
            let (zp, zq) = (&z[p * n..(p + 1) * n], &z[q * n..(q + 1) * n]);
            let ti = &b.terms[b.term_start[pi]..b.term_start[pi + 1]];
            let half_i = if p == q { 0.5 } else { 1.0 };
            for pk in pi..np {
                let (r, s) = b.positions[pk];
                let mut val = gq[r] * zp[s] + gp[r] * zq[s] + gq[s] * zp[r] + gp[s] * zq[r];
                val *= half_i;
                if r == s {
                    val *= 0.5;
                }
                let tk = &b.terms[b.term_start[pk]..b.term_start[pk + 1]];
                for &(i, ai) in ti {
                    for &(k, ak) in tk {
                        let w = ai * ak * val;
                        m[i * mdim + k] += w;
                        if pk != pi {
                            m[k * mdim + i] += w;
                        }
                    }
                }
            }
        }
    }
}

fn to_mat(x: &[f64], n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| x[i * n + j])
}

fn from_mat(m: &Mat<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = m[(i, j)];
        }
    }
    out
}

fn symmetrize(x: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (x[i * n + j] + x[j * n + i]);
            x[i * n + j] = v;
            x[j * n + i] = v;
        }
    }
}

fn inner(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>())
        .sum()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn frob(blocks: &[Vec<f64>]) -> f64 {
    blocks.iter().map(|b| b.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt()
}

/// Largest `α ≤ 1/0` keeping `X + α dX ⪰ 0`, given `X = L Lᵀ`; infinite if
/// the direction never leaves the cone.
fn max_step(l: faer::MatRef<'_, f64>, dx: &[f64], n: usize) -> f64 {
    let mut t = to_mat(dx, n);
    l.solve_lower_triangular_in_place(t.as_mut());
    let mut t = t.transpose().to_owned();
    l.solve_lower_triangular_in_place(t.as_mut());
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    match sym.self_adjoint_eigenvalues(Side::Lower) {
        Ok(ev) => {
            let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
            if min >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / min
            }
        }
        Err(_) => 0.0,
    }
}

/// Smallest eigenvalue of a dense symmetric row-major block.
pub fn min_eigenvalue(x: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let m = Mat::from_fn(n, n, |i, j| 0.5 * (x[i * n + j] + x[j * n + i]));
    m.self_adjoint_eigenvalues(Side::Lower)
        .map(|ev| ev.iter().copied().fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN)
}

struct Factored {
    /// Per group `M_g`, row-major, kept for iterative refinement.
    m: Vec<Vec<f64>>,
    /// Per group Cholesky factor of `M_g`.
    m_llt: Vec<faer::linalg::solvers::Llt<f64>>,
    s_llt: Option<faer::linalg::solvers::Llt<f64>>,
}

fn chol_regularized(m: &mut Mat<f64>) -> Option<faer::linalg::solvers::Llt<f64>> {
    if let Ok(l) = m.llt(Side::Lower) {
        return Some(l);
    }
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut eps = 1e-14 * scale;
    for _ in 0..8 {
        let mut r = m.clone();
        for i in 0..n {
            r[(i, i)] += eps;
        }
        if let Ok(l) = r.llt(Side::Lower) {
            *m = r;
            return Some(l);
        }
        eps *= 100.0;
    }
    None
}

impl Prepared<'_> {
    fn factor(&self, ginv: &[Vec<f64>], z: &[Vec<f64>]) -> Option<Factored> {
        let mut m_llt = Vec::with_capacity(self.groups.len());
        let mut mats: Vec<Vec<f64>> = self
            .groups
            .iter()
            .map(|g| vec![0.0; g.vars.len() * g.vars.len()])
            .collect();
        for (j, b) in self.blocks.iter().enumerate() {
            let md = self.groups[b.group].vars.len();
            Self::accumulate_schur(b, &ginv[j], &z[j], &mut mats[b.group], md);
        }
        let r = self.eqs.len();
        let mut s = Mat::<f64>::zeros(r, r);
        for (gi, g) in self.groups.iter().enumerate() {
            let md = g.vars.len();
            let mut m = to_mat(&mats[gi], md);
            let llt = chol_regularized(&mut m)?;
            if !g.eq_rows.is_empty() {
                let re = g.eq_rows.len();
                let mut et = Mat::<f64>::zeros(md, re);
                for (col, &row) in g.eq_rows.iter().enumerate() {
                    for (v, c) in &self.eqs[row].terms {
                        let (vg, lv) = self.var_loc[*v];
                        if vg == gi {
                            et[(lv, col)] += c;
                        }
                    }
                }
                llt.L().solve_lower_triangular_in_place(et.as_mut());
                let w = et.transpose() * &et;
                for (a, &ra) in g.eq_rows.iter().enumerate() {
                    for (b2, &rb) in g.eq_rows.iter().enumerate() {
                        s[(ra, rb)] += w[(a, b2)];
                    }
                }
            }
            m_llt.push(llt);
        }
        let s_llt = if r > 0 {
            Some(chol_regularized(&mut s)?)
        } else {
            None
        };
        Some(Factored { m: mats, m_llt, s_llt })
    }

    fn solve_m(&self, f: &Factored, rhs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rhs.len()];
        for (gi, g) in self.groups.iter().enumerate() {
            let b = Mat::from_fn(g.vars.len(), 1, |i, _| rhs[g.vars[i]]);
            let x = f.m_llt[gi].solve(&b);
            for (i, &v) in g.vars.iter().enumerate() {
                out[v] = x[(i, 0)];
            }
        }
        out
    }

    fn apply_m(&self, f: &Factored, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (gi, g) in self.groups.iter().enumerate() {
            let md = g.vars.len();
            let m = &f.m[gi];
            for (i, &vi) in g.vars.iter().enumerate() {
                let row = &m[i * md..(i + 1) * md];
                out[vi] = row.iter().zip(&g.vars).map(|(a, &vk)| a * y[vk]).sum();
            }
        }
        out
    }

    /// [`Self::solve_kkt`] followed by iterative refinement against the
    /// unregularized `M`, until the residual stops shrinking.
    fn solve_kkt_refined(&self, f: &Factored, g: &[f64], r_e: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut dy, mut dl) = self.solve_kkt(f, g, r_e);
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let target = 1e-15 * (norm(g) + norm(r_e)).max(1e-300);
        let mut prev = f64::INFINITY;
        for _ in 0..60 {
            let mdy = self.apply_m(f, &dy);
            let etl = self.apply_et(&dl);
            let r1: Vec<f64> = (0..g.len()).map(|i| g[i] - mdy[i] - etl[i]).collect();
            let edy = self.apply_e(&dy);
            let r2: Vec<f64> = r_e.iter().zip(&edy).map(|(a, b)| a - b).collect();
            let res = norm(&r1) + norm(&r2);
            if res <= target || res > 0.95 * prev {
                break;
            }
            prev = res;
            let (cy, cl) = self.solve_kkt(f, &r1, &r2);
            dy.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
            dl.iter_mut().zip(&cl).for_each(|(a, b)| *a += b);
        }
        (dy, dl)
    }

    /// Solves `[M Eᵀ; E 0] [dy; dλ] = [g; r_e]`.
    fn solve_kkt(&self, f: &Factored, g: &[f64], r_e: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.solve_m(f, g);
        let Some(s) = &f.s_llt else {
            return (h, Vec::new());
        };
        let eh = self.apply_e(&h);
        let t = Mat::from_fn(eh.len(), 1, |i, _| eh[i] - r_e[i]);
        let dl = s.solve(&t);
        let dl: Vec<f64> = (0..eh.len()).map(|i| dl[(i, 0)]).collect();
        let etl = self.apply_et(&dl);
        let corr = self.solve_m(f, &etl);
        let dy = h.iter().zip(&corr).map(|(a, b)| a - b).collect();
        (dy, dl)
    }
}

/// Solves `inst` with the interior-point method.
pub fn solve(inst: &SdpInstance, tol: &Tolerances) -> Result<SdpSolution, SdpError> {
    inst.validate()?;
    let (prep, inconsistent) = Prepared::new(inst, tol);
    if inconsistent {
        let mut s = SdpSolution::failed(inst, SolveStatus::Infeasible);
        s.dropped_equalities = prep.dropped.clone();
        return Ok(s);
    }
    Ok(run_ipm(&prep, tol))
}

#[derive(Clone)]
struct Iterate {
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    l: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Measures {
    pobj: f64,
    dobj: f64,
    rel_gap: f64,
    pinf: f64,
    dinf: f64,
}

fn run_ipm(prep: &Prepared<'_>, tol: &Tolerances) -> SdpSolution {
    let inst = prep.inst;
    let nb = prep.blocks.len();
    let e: Vec<f64> = prep.eqs.iter().map(|eq| eq.rhs).collect();
    let c_norm = norm2(&prep.c);
    let cmat: Vec<Vec<f64>> = prep.blocks.iter().map(|b| b.constant.clone()).collect();
    let cm_norm = frob(&cmat);
    let e_norm = norm2(&e);
    let ntot = prep.total_dim().max(1) as f64;

    // Starting point scaled to the data.
    let a_norms = {
        let mut s = vec![0.0; inst.n_vars];
        for b in &prep.blocks {
            let vars = &prep.groups[b.group].vars;
            for (pi, &(r, cc)) in b.positions.iter().enumerate() {
                let w = if r == cc { 1.0 } else { 2.0 };
                for &(lv, coef) in &b.terms[b.term_start[pi]..b.term_start[pi + 1]] {
                    s[vars[lv]] += w * coef * coef;
                }
            }
        }
        s
    };
    let mut xi_z: f64 = 1.0;
    for (i, &ci) in prep.c.iter().enumerate() {
        xi_z = xi_z.max((1.0 + ci.abs()) / (1.0 + a_norms[i].sqrt()));
    }
    let xi_x: f64 = 1.0_f64.max(cm_norm / ntot.sqrt());
    let eye = |n: usize, s: f64| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = s;
        }
        m
    };
    let mut it = Iterate {
        y: vec![0.0; inst.n_vars],
        x: prep.blocks.iter().map(|b| eye(b.n, xi_x)).collect(),
        z: prep.blocks.iter().map(|b| eye(b.n, xi_z)).collect(),
        l: vec![0.0; prep.eqs.len()],
    };

    let measure = |it: &Iterate| -> (Measures, Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let ay = prep.apply_a(&it.y);
        let rp: Vec<Vec<f64>> = (0..nb)
            .map(|j| {
                ay[j].iter()
                    .zip(&cmat[j])
                    .zip(&it.x[j])
                    .map(|((a, c), x)| a + c - x)
                    .collect()
            })
            .collect();
        let ey = prep.apply_e(&it.y);
        let re: Vec<f64> = e.iter().zip(&ey).map(|(a, b)| a - b).collect();
        let atz = prep.apply_at(&it.z);
        let etl = prep.apply_et(&it.l);
        let rd: Vec<f64> = (0..inst.n_vars).map(|i| prep.c[i] + atz[i] - etl[i]).collect();
        let pobj: f64 = prep.c.iter().zip(&it.y).map(|(a, b)| a * b).sum();
        let dobj = inner(&cmat, &it.z) + e.iter().zip(&it.l).map(|(a, b)| a * b).sum::<f64>();
        let m = Measures {
            pobj,
            dobj,
            rel_gap: (dobj - pobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            pinf: (frob(&rp) / (1.0 + cm_norm)).max(norm2(&re) / (1.0 + e_norm)),
            dinf: norm2(&rd) / (1.0 + c_norm),
        };
        (m, rp, re, rd)
    };

    let merit = |m: &Measures| {
        (m.rel_gap / tol.gap)
            .max(m.pinf / tol.feasibility)
            .max(m.dinf / tol.feasibility)
    };
    let mut iterations = 0;
    let mut status = SolveStatus::Inaccurate;
    let mut last;
    let mut best: Option<(Iterate, Measures, usize)> = None;
    let mut stalled = 0;
    loop {
        let (m, rp, re, rd) = measure(&it);
        last = m;
        if !(m.pobj.is_finite() && m.dobj.is_finite()) {
            status = SolveStatus::Failed;
            break;
        }
        if best.as_ref().is_none_or(|(_, bm, _)| merit(&m) < merit(bm)) {
            best = Some((it.clone(), m, iterations));
            stalled = 0;
        } else {
            stalled += 1;
        }
        if stalled >= 10 {
            break;
        }
        if m.rel_gap <= tol.gap && m.pinf <= tol.feasibility && m.dinf <= tol.feasibility {
            status = SolveStatus::Optimal;
            break;
        }
        if iterations >= tol.max_iterations {
            break;
        }
        let ynorm = norm2(&it.y);
        let znorm = frob(&it.z);
        if ynorm > 1e12 || znorm > 1e12 {
            status = SolveStatus::Infeasible;
            break;
        }
        iterations += 1;

        let mut lx = Vec::with_capacity(nb);
        let mut ginv = Vec::with_capacity(nb);
        let mut ok = true;
        for (j, b) in prep.blocks.iter().enumerate() {
            match to_mat(&it.x[j], b.n).llt(Side::Lower) {
                Ok(l) => {
                    ginv.push(from_mat(&l.inverse()));
                    lx.push(l);
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        let lz: Vec<_> = if ok {
            prep.blocks
                .iter()
                .enumerate()
                .map_while(|(j, b)| to_mat(&it.z[j], b.n).llt(Side::Lower).ok())
                .collect()
        } else {
            Vec::new()
        };
        if !ok || lz.len() != nb {
            status = SolveStatus::Failed;
            break;
        }
        let Some(fac) = prep.factor(&ginv, &it.z) else {
            status = SolveStatus::Failed;
            break;
        };
        let mu = inner(&it.x, &it.z) / ntot;

        // Direction for a given right-hand side K_j = target_j - X_j Z_j - corr_j.
        let direction = |sigma_mu: f64, corr: Option<&[Vec<f64>]>| {
            // X⁻¹ K = σμ X⁻¹ - Z - X⁻¹ corr
            let ginv_k: Vec<Vec<f64>> = (0..nb)
                .map(|j| {
                    let n = prep.blocks[j].n;
                    let mut w: Vec<f64> = ginv[j]
                        .iter()
                        .zip(&it.z[j])
                        .map(|(g, zz)| sigma_mu * g - zz)
                        .collect();
                    if let Some(cr) = corr {
                        let gc = &to_mat(&ginv[j], n) * &to_mat(&cr[j], n);
                        for i in 0..n * n {
                            w[i] -= gc[(i / n, i % n)];
                        }
                    }
                    w
                })
                .collect();
            // W = X⁻¹K - X⁻¹ R_p Z
            let w: Vec<Vec<f64>> = (0..nb)
                .map(|j| {
                    let n = prep.blocks[j].n;
                    let grz = &(&to_mat(&ginv[j], n) * &to_mat(&rp[j], n)) * &to_mat(&it.z[j], n);
                    let mut w = ginv_k[j].clone();
                    for i in 0..n * n {
                        w[i] -= grz[(i / n, i % n)];
                    }
                    w
                })
                .collect();
            let atw = prep.apply_at(&w);
            let g: Vec<f64> = atw.iter().zip(&rd).map(|(a, b)| a + b).collect();
            let (dy, dl) = prep.solve_kkt_refined(&fac, &g, &re);
            let ady = prep.apply_a(&dy);
            let dx: Vec<Vec<f64>> = (0..nb)
                .map(|j| ady[j].iter().zip(&rp[j]).map(|(a, b)| a + b).collect())
                .collect();
            // dZ = sym(X⁻¹K - X⁻¹ dX Z)
            let dz: Vec<Vec<f64>> = (0..nb)
                .map(|j| {
                    let n = prep.blocks[j].n;
                    let gdz = &(&to_mat(&ginv[j], n) * &to_mat(&dx[j], n)) * &to_mat(&it.z[j], n);
                    let mut d = ginv_k[j].clone();
                    for i in 0..n * n {
                        d[i] -= gdz[(i / n, i % n)];
                    }
                    symmetrize(&mut d, n);
                    d
                })
                .collect();
            (dy, dx, dz, dl)
        };
        let steps = |dx: &[Vec<f64>], dz: &[Vec<f64>]| {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for j in 0..nb {
                let n = prep.blocks[j].n;
                ap = ap.min(max_step(lx[j].L(), &dx[j], n));
                ad = ad.min(max_step(lz[j].L(), &dz[j], n));
            }
            (ap, ad)
        };

        // Predictor.
        let (_, dx_a, dz_a, _) = direction(0.0, None);
        let (ap, ad) = steps(&dx_a, &dz_a);
        let (ap1, ad1) = (ap.min(1.0), ad.min(1.0));
        let mu_a = {
            let xa: Vec<Vec<f64>> = (0..nb)
                .map(|j| it.x[j].iter().zip(&dx_a[j]).map(|(x, d)| x + ap1 * d).collect())
                .collect();
            let za: Vec<Vec<f64>> = (0..nb)
                .map(|j| it.z[j].iter().zip(&dz_a[j]).map(|(z, d)| z + ad1 * d).collect())
                .collect();
            inner(&xa, &za) / ntot
        };
        let sigma = if mu > 0.0 {
            (mu_a / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        // Corrector with second-order term dX_a dZ_a.
        let corr: Vec<Vec<f64>> = (0..nb)
            .map(|j| {
                let n = prep.blocks[j].n;
                from_mat(&(&to_mat(&dx_a[j], n) * &to_mat(&dz_a[j], n)))
            })
            .collect();
        let (dy, dx, dz, dl) = direction(sigma * mu, Some(&corr));
        let (ap, ad) = steps(&dx, &dz);
        let gamma = 0.9 + 0.09 * ap1.min(ad1);
        let alpha_p = (gamma * ap).min(1.0);
        let alpha_d = (gamma * ad).min(1.0);
        for i in 0..inst.n_vars {
            it.y[i] += alpha_p * dy[i];
        }
        for j in 0..nb {
            for (x, d) in it.x[j].iter_mut().zip(&dx[j]) {
                *x += alpha_p * d;
            }
            for (z, d) in it.z[j].iter_mut().zip(&dz[j]) {
                *z += alpha_d * d;
            }
        }
        for (l, d) in it.l.iter_mut().zip(&dl) {
            *l += alpha_d * d;
        }
    }

    // Fall back to the best iterate seen when the run ends early.
    if status != SolveStatus::Optimal && status != SolveStatus::Infeasible {
        if let Some((b, bm, bi)) = best {
            if bi > 0 {
                it = b;
                last = bm;
                status = SolveStatus::Inaccurate;
            }
        }
    }

    let sgn = match inst.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut lambda = vec![0.0; inst.equalities.len()];
    for (r, &orig) in prep.kept.iter().enumerate() {
        lambda[orig] = it.l[r];
    }
    SdpSolution {
        status,
        y: it.y,
        z: it.z,
        lambda,
        primal_objective: sgn * last.pobj,
        dual_objective: sgn * last.dobj,
        relative_gap: last.rel_gap,
        primal_infeasibility: last.pinf,
        dual_infeasibility: last.dinf,
        iterations,
        dropped_equalities: prep.dropped.clone(),
    }
}

/// `dual - primal + r_dᵀy` in the maximization convention.
///
/// Since `cᵀy = dual - <Z, X> + r_dᵀy` for `X = C + A(y)` and `Ey = e`, this is
/// `<Z, X>` up to the equality residual, and is nonnegative for any PSD pair.
/// Interior-point iterates are only approximately dual feasible, so the
/// plain `dual - primal` can dip below zero by `r_dᵀy`.
pub fn weak_duality_slack(inst: &SdpInstance, sol: &SdpSolution) -> f64 {
    let sgn = match inst.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let rd = inst.dual_residual(&sol.z, &sol.lambda);
    let rdy: f64 = rd.iter().zip(&sol.y).map(|(a, b)| a * b).sum();
    sgn * (sol.dual_objective - sol.primal_objective) + rdy
}

/// Independent check of a solution against its instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verified: bool,
    pub max_equality_residual: f64,
    pub min_primal_eigenvalue: f64,
    pub min_dual_eigenvalue: f64,
    pub max_dual_residual: f64,
    /// Recomputed `cᵀy` and `Σ<C,Z> + eᵀλ` in the instance's own sense.
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    /// Human-readable names of the checks that failed.
    pub violations: Vec<String>,
}

/// Recomputes residuals, eigenvalue floors and the gap from the instance data
/// alone, and flags anything beyond ten times the tolerances.
pub fn verify(inst: &SdpInstance, sol: &SdpSolution, tol: &Tolerances) -> VerificationReport {
    let feas = 10.0 * tol.feasibility;
    let gap_tol = 10.0 * tol.gap;
    let mut violations = Vec::new();

    let mut max_eq: f64 = 0.0;
    for (i, eq) in inst.equalities.iter().enumerate() {
        let lhs: f64 = eq.terms.iter().map(|(v, c)| c * sol.y[*v]).sum();
        let r = (lhs - eq.rhs).abs();
        max_eq = max_eq.max(r);
        if r > feas * (1.0 + eq.rhs.abs()) {
            violations.push(format!("equality {i} (residual {r:.3e})"));
        }
    }
    let x = inst.slack(&sol.y);
    let mut min_p = f64::INFINITY;
    let mut min_d = f64::INFINITY;
    for (j, &n) in inst.block_dims.iter().enumerate() {
        let scale = 1.0 + x[j].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ev = min_eigenvalue(&x[j], n);
        min_p = min_p.min(ev);
        if !(ev >= -feas * scale) {
            violations.push(format!("primal psd block {j} (min eigenvalue {ev:.3e})"));
        }
        let zscale = 1.0 + sol.z[j].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let evz = min_eigenvalue(&sol.z[j], n);
        min_d = min_d.min(evz);
        if !(evz >= -feas * zscale) {
            violations.push(format!("dual psd block {j} (min eigenvalue {evz:.3e})"));
        }
    }
    let rd = inst.dual_residual(&sol.z, &sol.lambda);
    let cscale = 1.0 + inst.objective.iter().fold(0.0f64, |m, (_, w)| m.max(w.abs()));
    let mut max_rd: f64 = 0.0;
    for (i, r) in rd.iter().enumerate() {
        max_rd = max_rd.max(r.abs());
        if !(r.abs() <= feas * cscale) {
            violations.push(format!("dual residual (variable {i}, {r:.3e})"));
        }
    }
    let sgn = match inst.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let pobj = inst.objective_value(&sol.y);
    let cz: f64 = (0..inst.block_dims.len())
        .map(|j| {
            let n = inst.block_dims[j];
            inst.constant[j]
                .iter()
                .map(|e| e.value * sym_pair(&sol.z[j], n, e.row, e.col))
                .sum::<f64>()
        })
        .sum();
    let el: f64 = inst
        .equalities
        .iter()
        .zip(&sol.lambda)
        .map(|(eq, l)| eq.rhs * l)
        .sum();
    let dobj = sgn * (cz + el);
    let rel_gap = (dobj - pobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    if !(rel_gap <= gap_tol) {
        violations.push(format!("duality gap ({rel_gap:.3e})"));
    }
    VerificationReport {
        verified: violations.is_empty(),
        max_equality_residual: max_eq,
        min_primal_eigenvalue: min_p,
        min_dual_eigenvalue: min_d,
        max_dual_residual: max_rd,
        primal_objective: pobj,
        dual_objective: dobj,
        relative_gap: rel_gap,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> SdpInstance {
        // maximize t s.t. [[1, t], [t, 1]] ⪰ 0
        let mut inst = SdpInstance::new(Sense::Maximize, 1, vec![2]);
        inst.add_constant(0, 0, 0, 1.0);
        inst.add_constant(0, 1, 1, 1.0);
        inst.add_coefficient(0, 0, 0, 1, 1.0);
        inst.objective.push((0, 1.0));
        inst
    }

    #[test]
    fn two_by_two_boundary() {
        let tol = Tolerances::default();
        let inst = two_by_two();
        let sol = solve(&inst, &tol).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{sol:?}");
        assert!((sol.y[0] - 1.0).abs() < 1e-7, "{}", sol.y[0]);
        assert!(weak_duality_slack(&inst, &sol) >= -1e-12, "{sol:?}");
        let rep = verify(&inst, &sol, &tol);
        assert!(rep.verified, "{:?}", rep.violations);
    }

    #[test]
    fn minimize_sense() {
        let tol = Tolerances::default();
        let mut inst = two_by_two();
        inst.sense = Sense::Minimize;
        let sol = solve(&inst, &tol).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_objective + 1.0).abs() < 1e-7);
        assert!(weak_duality_slack(&inst, &sol) >= -1e-12);
        assert!(verify(&inst, &sol, &tol).verified);
    }

    #[test]
    fn corrupted_solution_is_rejected() {
        let tol = Tolerances::default();
        let inst = two_by_two();
        let mut sol = solve(&inst, &tol).unwrap();
        sol.y[0] += 1e-3;
        let rep = verify(&inst, &sol, &tol);
        assert!(!rep.verified);
        assert!(rep.violations.iter().any(|v| v.starts_with("primal psd block 0")));
    }

    #[test]
    fn dependent_equalities_are_dropped() {
        let eqs = vec![
            LinearEquality { terms: vec![(0, 1.0), (1, 1.0)], rhs: 1.0 },
            LinearEquality { terms: vec![(1, 1.0), (2, -1.0)], rhs: 0.0 },
            LinearEquality { terms: vec![(0, 2.0), (1, 1.0), (2, 1.0)], rhs: 2.0 },
            LinearEquality { terms: vec![(2, 1.0)], rhs: 0.25 },
        ];
        let (kept, dropped, bad) = independent_equalities(&eqs, 1e-12);
        assert_eq!(kept, vec![0, 1, 3]);
        assert_eq!(dropped, vec![2]);
        assert!(!bad);
        let mut eqs = eqs;
        eqs[2].rhs = 3.0;
        assert!(independent_equalities(&eqs, 1e-12).2);
    }

    #[test]
    fn equality_constrained_instance() {
        // maximize y0 + 2 y1 over 2x2 [[y0, y1], [y1, y2]] ⪰ 0 with y0 + y2 = 1.
        // Optimum: largest eigenvalue of [[1, 1], [1, 0]] = (1 + √5)/2.
        let mut inst = SdpInstance::new(Sense::Maximize, 3, vec![2]);
        inst.add_coefficient(0, 0, 0, 0, 1.0);
        inst.add_coefficient(0, 1, 0, 1, 1.0);
        inst.add_coefficient(0, 2, 1, 1, 1.0);
        inst.objective = vec![(0, 1.0), (1, 2.0)];
        inst.add_equality(vec![(0, 1.0), (2, 1.0)], 1.0);
        inst.add_equality(vec![(0, 2.0), (2, 2.0)], 2.0);
        let tol = Tolerances::default();
        let sol = solve(&inst, &tol).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.dropped_equalities, vec![1]);
        let expected = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sol.primal_objective - expected).abs() < 1e-7);
        let rep = verify(&inst, &sol, &tol);
        assert!(rep.verified, "{:?}", rep.violations);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let mut inst = two_by_two();
        inst.add_equality(vec![(0, 1.0)], 0.5);
        inst.add_equality(vec![(0, 2.0)], 0.0);
        let sol = solve(&inst, &Tolerances::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn validation_errors() {
        let mut inst = two_by_two();
        inst.n_vars = 2;
        assert_eq!(inst.validate(), Err(SdpError::FreeVariable(1)));
        let mut inst = two_by_two();
        inst.coefficients[0].push((0, SymEntry { row: 1, col: 0, value: 1.0 }));
        assert!(matches!(inst.validate(), Err(SdpError::LowerEntry { .. })));
        let mut inst = two_by_two();
        inst.add_coefficient(0, 0, 0, 2, 1.0);
        assert!(matches!(inst.validate(), Err(SdpError::EntryOutOfRange { .. })));
    }
}
