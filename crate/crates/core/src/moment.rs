//! Moment relaxation of the real-separable value of the witness.
//!
//! For each outcome `b` the unnormalized functional `ω_b` is represented by
//! a moment matrix `G_b` indexed by pairs `(u, v)` of reduced words in the
//! `A` and `C` letters. Entries are `ω_b((u,v)† (u',v'))`; because `A` and
//! `C` commute and square to one, every product is a pair of reduced words.
//!
//! Constraints:
//! * `G_b ⪰ 0`, with moments identified under word reversal so that the
//!   matrices are real symmetric;
//! * `Σ_b ω_b(1) = 1`;
//! * the `b`-summed matrix equals its partial transpose over the `A` words,
//!   which on moments reads `Σ_b ω_b(wa, wc) = Σ_b ω_b(rev(wa), wc)`;
//!   [`PptMode::PerBlock`] imposes the same identity on every `b`.
//!
//! Moments whose total word length is odd vanish at an optimum (flip the
//! sign of every `A` and `C`), so they are dropped and each `G_b` splits into
//! an even and an odd sub-block.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{A_SETTINGS, OUTCOMES};
use crate::sdp::{self, SdpError, SdpInstance, SdpSolution, Sense, SolveStatus, Tolerances, VerificationReport};
use crate::witness::{FMatrix, SignTable};

/// Largest supported segment length.
pub const MAX_LEVEL: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("relaxation level ({0}, {1}) unsupported; each part must be in 1..=3")]
    Level(usize, usize),
    #[error("letter index {0} out of range")]
    Letter(usize),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("solver did not reach optimality: {0:?}")]
    Solver(SolveStatus),
}

/// A generator: `A_x` (`x ∈ 0..3`) or `C_z` (`z ∈ 0..n_z`), 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    A(u8),
    C(u8),
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::A(x) => write!(f, "A{}", x + 1),
            Letter::C(z) => write!(f, "C{}", z + 1),
        }
    }
}

/// A product of generators, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    /// Moves every `C` past every `A` (keeping the order inside each
    /// alphabet) and cancels equal neighbours until none remain.
    pub fn canonicalize(&self) -> Word {
        let a = self.letters.iter().filter(|l| matches!(l, Letter::A(_)));
        let c = self.letters.iter().filter(|l| matches!(l, Letter::C(_)));
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in a.chain(c) {
            if out.last() == Some(&l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    pub fn is_canonical(&self) -> bool {
        *self == self.canonicalize()
    }

    /// Reversed word, the adjoint of a product of Hermitian generators.
    pub fn adjoint(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().copied().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `(A-part, C-part)` letter indices of a canonical word.
    pub fn split(&self) -> (Vec<u8>, Vec<u8>) {
        let mut a = Vec::new();
        let mut c = Vec::new();
        for l in &self.letters {
            match l {
                Letter::A(x) => a.push(*x),
                Letter::C(z) => c.push(*z),
            }
        }
        (a, c)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelaxationLevel {
    pub n_a: usize,
    pub n_c: usize,
}

impl RelaxationLevel {
    pub fn new(n_a: usize, n_c: usize) -> Result<Self, MomentError> {
        if !(1..=MAX_LEVEL).contains(&n_a) || !(1..=MAX_LEVEL).contains(&n_c) {
            return Err(MomentError::Level(n_a, n_c));
        }
        Ok(Self { n_a, n_c })
    }

    pub fn uniform(n: usize) -> Result<Self, MomentError> {
        Self::new(n, n)
    }
}

impl Default for RelaxationLevel {
    fn default() -> Self {
        Self { n_a: 2, n_c: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PptMode {
    /// Partial-transpose identity on the `b`-summed matrix only.
    #[default]
    Summed,
    /// Additionally on every outcome block.
    PerBlock,
}

/// A reduced word on one alphabet, packed as `len | letters` with two bits
/// per letter. Word length is at most `2 * MAX_LEVEL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Packed(u16);

impl Packed {
    const EMPTY: Packed = Packed(0);

    fn len(self) -> usize {
        (self.0 & 0xf) as usize
    }

    fn get(self, i: usize) -> u8 {
        ((self.0 >> (4 + 2 * i)) & 0b11) as u8
    }

    fn from_letters(ls: &[u8]) -> Packed {
        let mut v = ls.len() as u16;
        for (i, &l) in ls.iter().enumerate() {
            v |= (l as u16) << (4 + 2 * i);
        }
        Packed(v)
    }

    fn letters(self) -> Vec<u8> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    fn rev(self) -> Packed {
        let mut ls = self.letters();
        ls.reverse();
        Packed::from_letters(&ls)
    }

    /// Reduced `rev(self) · other`.
    fn adj_mul(self, other: Packed) -> Packed {
        let mut buf = [0u8; 2 * MAX_LEVEL];
        let mut n = 0;
        for i in (0..self.len()).rev() {
            buf[n] = self.get(i);
            n += 1;
        }
        for i in 0..other.len() {
            let l = other.get(i);
            if n > 0 && buf[n - 1] == l {
                n -= 1;
            } else {
                buf[n] = l;
                n += 1;
            }
        }
        Packed::from_letters(&buf[..n])
    }

    fn map(self, perm: &[u8]) -> Packed {
        let ls: Vec<u8> = self.letters().iter().map(|&l| perm[l as usize]).collect();
        Packed::from_letters(&ls)
    }
}

/// A moment `ω(wa · wc)`, identified with `ω(rev(wa) · rev(wc))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key(Packed, Packed);

impl Key {
    fn canonical(a: Packed, c: Packed) -> Key {
        let k = Key(a, c);
        let r = Key(a.rev(), c.rev());
        k.min(r)
    }
}

/// Reduced words of length `0..=max_len` over `n` letters.
fn reduced_words(n: usize, max_len: usize) -> Vec<Packed> {
    let mut out = vec![Packed::EMPTY];
    let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..n as u8 {
                if w.last() != Some(&l) {
                    let mut w2 = w.clone();
                    w2.push(l);
                    out.push(Packed::from_letters(&w2));
                    next.push(w2);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Relabelling of settings and outcomes that leaves `f` and the sign table
/// unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabelling {
    /// `x -> perm_a[x]`
    pub perm_a: Vec<u8>,
    /// `z -> perm_c[z]`
    pub perm_c: Vec<u8>,
    /// `b -> perm_b[b]`
    pub perm_b: Vec<usize>,
}

/// The group of relabellings fixing `f` and `sign`, found by enumeration.
///
/// A setting permutation `π_x` of `A` induces the outcome permutation that
/// fixes `b = 0` and sends `b = x + 1` to `π_x(x) + 1`.
pub fn symmetry_group(f: &FMatrix, sign: &SignTable, tol: f64) -> Vec<Relabelling> {
    let pa = permutations(A_SETTINGS);
    let pc = permutations(f.n_z());
    let mut out = Vec::new();
    for a in &pa {
        let mut pb = vec![0usize; OUTCOMES];
        for x in 0..A_SETTINGS {
            pb[x + 1] = a[x] as usize + 1;
        }
        let sign_ok = (0..OUTCOMES)
            .all(|b| (0..A_SETTINGS).all(|x| sign.get(pb[b], a[x] as usize) == sign.get(b, x)));
        if !sign_ok {
            continue;
        }
        for c in &pc {
            let ok = (0..A_SETTINGS).all(|x| {
                (0..f.n_z()).all(|z| (f.get(a[x] as usize, c[z] as usize) - f.get(x, z)).abs() <= tol)
            });
            if ok {
                out.push(Relabelling {
                    perm_a: a.clone(),
                    perm_c: c.clone(),
                    perm_b: pb.clone(),
                });
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut p: Vec<u8> = (0..n as u8).collect();
    fn rec(k: usize, p: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out.sort();
    out
}

/// Index sets, moment keys and constraint structure of one relaxation.
#[derive(Debug, Clone)]
pub struct MomentProblem {
    pub f: FMatrix,
    pub sign: SignTable,
    pub level: RelaxationLevel,
    pub ppt: PptMode,
    /// Index words `(A-word, C-word)` of the even and odd sub-blocks.
    index: [Vec<(Packed, Packed)>; 2],
    keys: Vec<Key>,
    key_id: HashMap<Key, usize>,
    /// Key of each `(i, j)` entry per parity sub-block, row-major.
    entries: [Vec<u32>; 2],
    ppt_pairs: Vec<(usize, usize)>,
    identity: usize,
}

/// Size summary, also used as regression data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSize {
    /// Words per block before the parity split.
    pub index_size: usize,
    pub even_block: usize,
    pub odd_block: usize,
    /// Distinct moments per outcome block.
    pub moments_per_block: usize,
    pub ppt_pairs: usize,
}

impl MomentProblem {
    pub fn build(f: &FMatrix, sign: &SignTable, level: RelaxationLevel, ppt: PptMode) -> Self {
        let wa = reduced_words(A_SETTINGS, level.n_a);
        let wc = reduced_words(f.n_z(), level.n_c);
        let mut index: [Vec<(Packed, Packed)>; 2] = [Vec::new(), Vec::new()];
        for &u in &wa {
            for &v in &wc {
                index[(u.len() + v.len()) % 2].push((u, v));
            }
        }
        let mut keys = Vec::new();
        let mut key_id = HashMap::new();
        let mut entries: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
        for par in 0..2 {
            let idx = &index[par];
            let m = idx.len();
            let mut ent = Vec::with_capacity(m * m);
            for &(u, v) in idx {
                for &(u2, v2) in idx {
                    let k = Key::canonical(u.adj_mul(u2), v.adj_mul(v2));
                    let id = *key_id.entry(k).or_insert_with(|| {
                        keys.push(k);
                        keys.len() - 1
                    });
                    ent.push(id as u32);
                }
            }
            entries[par] = ent;
        }
        let mut ppt_pairs = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            let partner = Key::canonical(k.0.rev(), k.1);
            if let Some(&j) = key_id.get(&partner) {
                if j > i {
                    ppt_pairs.push((i, j));
                }
            }
        }
        let identity = key_id[&Key(Packed::EMPTY, Packed::EMPTY)];
        Self {
            f: f.clone(),
            sign: *sign,
            level,
            ppt,
            index,
            keys,
            key_id,
            entries,
            ppt_pairs,
            identity,
        }
    }

    pub fn size(&self) -> ProblemSize {
        ProblemSize {
            index_size: self.index[0].len() + self.index[1].len(),
            even_block: self.index[0].len(),
            odd_block: self.index[1].len(),
            moments_per_block: self.keys.len(),
            ppt_pairs: self.ppt_pairs.len(),
        }
    }

    pub fn n_blocks(&self) -> usize {
        OUTCOMES
    }

    /// Canonical words `(A-part, C-part)` labelling the moments of one block.
    pub fn moment_words(&self) -> Vec<Word> {
        self.keys.iter().map(|k| key_word(*k)).collect()
    }

    /// Index words of the even and odd sub-blocks.
    pub fn index_words(&self) -> [Vec<Word>; 2] {
        let conv = |v: &Vec<(Packed, Packed)>| v.iter().map(|&(a, c)| key_word(Key(a, c))).collect();
        [conv(&self.index[0]), conv(&self.index[1])]
    }

    fn objective_keys(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for x in 0..A_SETTINGS {
            for z in 0..self.f.n_z() {
                let k = Key::canonical(Packed::from_letters(&[x as u8]), Packed::from_letters(&[z as u8]));
                out.push((x, z, self.key_id[&k]));
            }
        }
        out
    }

    /// Orbits of `(b, key)` under `group`; returns the orbit id of every
    /// `b * K + key` and the number of orbits.
    fn orbits(&self, group: &[Relabelling]) -> (Vec<usize>, usize) {
        let k = self.keys.len();
        let mut orbit = vec![usize::MAX; OUTCOMES * k];
        let mut count = 0;
        for b in 0..OUTCOMES {
            for i in 0..k {
                if orbit[b * k + i] != usize::MAX {
                    continue;
                }
                for g in group {
                    let key = self.keys[i];
                    let mapped = Key::canonical(key.0.map(&g.perm_a), key.1.map(&g.perm_c));
                    let j = self.key_id[&mapped];
                    orbit[g.perm_b[b] * k + j] = count;
                }
                orbit[b * k + i] = count;
                count += 1;
            }
        }
        (orbit, count)
    }

    /// Assembles the SDP. With a non-trivial `group` the moments are averaged
    /// over orbits, which leaves the optimum unchanged because the feasible
    /// set and the objective are invariant; only one outcome block per orbit
    /// of outcomes is kept.
    pub fn to_sdp(&self, group: &[Relabelling]) -> (SdpInstance, VariableMap) {
        let identity_group = [Relabelling {
            perm_a: (0..A_SETTINGS as u8).collect(),
            perm_c: (0..self.f.n_z() as u8).collect(),
            perm_b: (0..OUTCOMES).collect(),
        }];
        let group = if group.is_empty() { &identity_group[..] } else { group };
        let k = self.keys.len();
        let (orbit, n_orb) = self.orbits(group);

        // One representative outcome per outcome orbit.
        let mut rep_blocks = Vec::new();
        for b in 0..OUTCOMES {
            let rep = group.iter().map(|g| g.perm_b[b]).min().unwrap_or(b);
            if rep == b {
                rep_blocks.push(b);
            }
        }
        // Only orbits that appear in a kept block become solver variables.
        let mut var_of_orbit = vec![usize::MAX; n_orb];
        let mut n_vars = 0;
        for &b in &rep_blocks {
            for i in 0..k {
                let o = orbit[b * k + i];
                if var_of_orbit[o] == usize::MAX {
                    var_of_orbit[o] = n_vars;
                    n_vars += 1;
                }
            }
        }
        let var = |b: usize, i: usize| var_of_orbit[orbit[b * k + i]];

        let mut dims = Vec::new();
        for _ in &rep_blocks {
            for par in 0..2 {
                dims.push(self.index[par].len());
            }
        }
        let mut inst = SdpInstance::new(Sense::Maximize, n_vars, dims);
        for (bi, &b) in rep_blocks.iter().enumerate() {
            for par in 0..2 {
                let blk = 2 * bi + par;
                let m = self.index[par].len();
                for r in 0..m {
                    for c in r..m {
                        let key = self.entries[par][r * m + c] as usize;
                        inst.add_coefficient(blk, var(b, key), r, c, 1.0);
                    }
                }
            }
        }
        // Objective and constraints are written over all four outcomes; the
        // orbit map folds them onto representatives.
        let mut obj: HashMap<usize, f64> = HashMap::new();
        for b in 0..OUTCOMES {
            for (x, z, key) in self.objective_keys() {
                *obj.entry(var(b, key)).or_insert(0.0) += self.sign.get(b, x) * self.f.get(x, z);
            }
        }
        let mut obj: Vec<(usize, f64)> = obj.into_iter().filter(|(_, w)| *w != 0.0).collect();
        obj.sort_by_key(|(v, _)| *v);
        inst.objective = obj;

        let fold = |terms: Vec<(usize, f64)>| -> Vec<(usize, f64)> {
            let mut acc: HashMap<usize, f64> = HashMap::new();
            for (v, c) in terms {
                *acc.entry(v).or_insert(0.0) += c;
            }
            let mut t: Vec<(usize, f64)> = acc.into_iter().filter(|(_, c)| *c != 0.0).collect();
            t.sort_by_key(|(v, _)| *v);
            t
        };
        inst.add_equality(fold((0..OUTCOMES).map(|b| (var(b, self.identity), 1.0)).collect()), 1.0);
        let mut seen = std::collections::HashSet::new();
        let mut push = |inst: &mut SdpInstance, terms: Vec<(usize, f64)>| {
            let t = fold(terms);
            if !t.is_empty() && seen.insert(format!("{t:?}")) {
                inst.add_equality(t, 0.0);
            }
        };
        for &(i, j) in &self.ppt_pairs {
            let mut terms = Vec::with_capacity(8);
            for b in 0..OUTCOMES {
                terms.push((var(b, i), 1.0));
                terms.push((var(b, j), -1.0));
            }
            push(&mut inst, terms);
            if self.ppt == PptMode::PerBlock {
                for b in 0..OUTCOMES {
                    push(&mut inst, vec![(var(b, i), 1.0), (var(b, j), -1.0)]);
                }
            }
        }
        let map = VariableMap {
            n_keys: k,
            var_of: (0..OUTCOMES * k).map(|bk| var_of_orbit[orbit[bk]]).collect(),
        };
        (inst, map)
    }

    /// Exports the standard-form SDP as JSON.
    pub fn to_json(&self, group: &[Relabelling]) -> String {
        let (inst, _) = self.to_sdp(group);
        serde_json::to_string_pretty(&inst).expect("serializable")
    }
}

fn key_word(k: Key) -> Word {
    let mut letters: Vec<Letter> = k.0.letters().into_iter().map(Letter::A).collect();
    letters.extend(k.1.letters().into_iter().map(Letter::C));
    Word { letters }
}

/// Solver variable of each `(b, moment)`.
#[derive(Debug, Clone)]
pub struct VariableMap {
    n_keys: usize,
    var_of: Vec<usize>,
}

impl VariableMap {
    pub fn var(&self, b: usize, key: usize) -> usize {
        self.var_of[b * self.n_keys + key]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RealBoundOptions {
    pub level: RelaxationLevel,
    pub ppt: PptMode,
    /// Use the relabelling symmetry of `f` to shrink the SDP.
    pub use_symmetry: bool,
    pub tolerances: Tolerances,
}

impl Default for RealBoundOptions {
    fn default() -> Self {
        Self {
            level: RelaxationLevel::default(),
            ppt: PptMode::Summed,
            use_symmetry: true,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealBound {
    /// Primal optimum of the relaxation.
    pub value: f64,
    /// Dual objective; an upper bound whenever the dual iterate is feasible.
    pub dual_value: f64,
    pub status: SolveStatus,
    pub relative_gap: f64,
    pub iterations: usize,
    pub level: RelaxationLevel,
    pub ppt: PptMode,
    pub symmetry_order: usize,
    pub n_vars: usize,
    pub verification: VerificationReport,
    /// `Σ_b ω_b(A_x C_z)` at the optimum, row-major `[x][z]`.
    pub correlators: Vec<Vec<f64>>,
    /// `ω_b(1)` at the optimum.
    pub outcome_weights: Vec<f64>,
    #[serde(skip)]
    pub solution: Option<SdpSolution>,
}

/// Upper bound on `F` over real-separable models.
pub fn real_bound(f: &FMatrix, sign: &SignTable, opts: &RealBoundOptions) -> Result<RealBound, MomentError> {
    let problem = MomentProblem::build(f, sign, opts.level, opts.ppt);
    let group = if opts.use_symmetry {
        symmetry_group(f, sign, 1e-12)
    } else {
        Vec::new()
    };
    let (inst, map) = problem.to_sdp(&group);
    let sol = sdp::solve(&inst, &opts.tolerances)?;
    let verification = sdp::verify(&inst, &sol, &opts.tolerances);
    let mut correlators = vec![vec![0.0; f.n_z()]; A_SETTINGS];
    for (x, z, key) in problem.objective_keys() {
        correlators[x][z] = (0..OUTCOMES).map(|b| sol.y[map.var(b, key)]).sum();
    }
    let outcome_weights = (0..OUTCOMES).map(|b| sol.y[map.var(b, problem.identity)]).collect();
    Ok(RealBound {
        value: sol.primal_objective,
        dual_value: sol.dual_objective,
        status: sol.status,
        relative_gap: sol.relative_gap,
        iterations: sol.iterations,
        level: opts.level,
        ppt: opts.ppt,
        symmetry_order: group.len().max(1),
        n_vars: inst.n_vars,
        verification,
        correlators,
        outcome_weights,
        solution: Some(sol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn w(s: &[Letter]) -> Word {
        Word::new(s.to_vec())
    }

    #[test]
    fn canonicalize_examples() {
        use Letter::*;
        assert_eq!(w(&[A(0), A(0)]).canonicalize(), Word::identity());
        assert_eq!(w(&[C(1), A(0)]).canonicalize(), w(&[A(0), C(1)]));
        assert_eq!(w(&[A(0), A(1), A(1), C(0), C(0)]).canonicalize(), w(&[A(0)]));
        assert_eq!(w(&[A(0), C(0), A(0)]).canonicalize(), w(&[C(0)]));
        assert_eq!(w(&[A(0), A(1), A(0)]).canonicalize(), w(&[A(0), A(1), A(0)]));
    }

    #[test]
    fn packed_words_round_trip() {
        for w in reduced_words(4, 3) {
            assert_eq!(Packed::from_letters(&w.letters()), w);
            assert_eq!(w.rev().rev(), w);
        }
        let a = Packed::from_letters(&[0, 1]);
        let b = Packed::from_letters(&[0, 2]);
        // rev(01)·02 = 1 0 0 2 -> 1 2
        assert_eq!(a.adj_mul(b), Packed::from_letters(&[1, 2]));
    }

    #[test]
    fn level_one_index_set() {
        let p = MomentProblem::build(&FMatrix::example_f1(), &SignTable::RESOLVED, RelaxationLevel::uniform(1).unwrap(), PptMode::Summed);
        let s = p.size();
        assert_eq!(s.index_size, 16);
        assert_eq!(p.n_blocks(), 4);
        let [even, odd] = p.index_words();
        let all: HashSet<String> = even.iter().chain(&odd).map(|w| w.to_string()).collect();
        for name in ["1", "A1", "C3", "A2C1"] {
            assert!(all.contains(name), "{name}");
        }
    }

    #[test]
    fn levels_outside_range_are_rejected() {
        assert!(RelaxationLevel::new(0, 1).is_err());
        assert!(RelaxationLevel::new(4, 2).is_err());
        assert!(RelaxationLevel::new(3, 3).is_ok());
    }

    /// Moments of one block counted by brute force over explicit words.
    fn brute_force_moment_count(n_z: usize, level: usize, parity_split: bool) -> usize {
        let letters_a: Vec<Letter> = (0..3).map(Letter::A).collect();
        let letters_c: Vec<Letter> = (0..n_z as u8).map(Letter::C).collect();
        let words = |alphabet: &[Letter]| -> Vec<Vec<Letter>> {
            let mut out = vec![vec![]];
            let mut cur = vec![vec![]];
            for _ in 0..level {
                let mut next = vec![];
                for w in &cur {
                    for &l in alphabet {
                        let mut w2: Vec<Letter> = w.clone();
                        w2.push(l);
                        if Word::new(w2.clone()).is_canonical() {
                            next.push(w2);
                        }
                    }
                }
                out.extend(next.iter().cloned());
                cur = next;
            }
            out
        };
        let idx: Vec<Word> = words(&letters_a)
            .into_iter()
            .flat_map(|a| {
                words(&letters_c).into_iter().map(move |c| {
                    let mut l = a.clone();
                    l.extend(c);
                    Word::new(l)
                })
            })
            .collect();
        let mut seen = HashSet::new();
        for u in &idx {
            for v in &idx {
                if parity_split && (u.len() + v.len()) % 2 == 1 {
                    continue;
                }
                let mut l = u.adjoint().letters;
                l.extend(v.letters.iter().copied());
                let m = Word::new(l).canonicalize();
                let r = m.adjoint().canonicalize();
                seen.insert(m.min(r));
            }
        }
        seen.len()
    }

    #[test]
    fn moment_counts_match_enumeration() {
        let f3 = FMatrix::example_f1();
        let p = MomentProblem::build(&f3, &SignTable::RESOLVED, RelaxationLevel::default(), PptMode::Summed);
        let s = p.size();
        assert_eq!(s.index_size, 100);
        assert_eq!(s.moments_per_block, brute_force_moment_count(3, 2, true));
        assert_eq!(s.moments_per_block, 634);
        assert_eq!(brute_force_moment_count(3, 2, false), 1108);
        assert_eq!(s.ppt_pairs, 234);

        let p4 = MomentProblem::build(&FMatrix::tetrahedron(), &SignTable::RESOLVED, RelaxationLevel::default(), PptMode::Summed);
        let s4 = p4.size();
        assert_eq!(s4.index_size, 170);
        assert_eq!((s4.even_block, s4.odd_block), (103, 67));
        assert_eq!(s4.moments_per_block, brute_force_moment_count(4, 2, true));
        assert_eq!(s4.moments_per_block, 2248);
        assert_eq!(s4.ppt_pairs, 936);
    }

    #[test]
    fn symmetry_groups_of_examples() {
        let s = SignTable::RESOLVED;
        assert_eq!(symmetry_group(&FMatrix::example_f1(), &s, 1e-12).len(), 6);
        assert_eq!(symmetry_group(&FMatrix::tetrahedron(), &s, 1e-12).len(), 6);
        assert_eq!(symmetry_group(&FMatrix::near_optimal(), &s, 1e-12).len(), 1);
        let p = crate::witness::FamilyParams::new(0.8, -0.6, 0.0).unwrap();
        assert_eq!(symmetry_group(&FMatrix::family(&p), &s, 1e-12).len(), 3);
    }

    #[test]
    fn json_export_round_trips() {
        let p = MomentProblem::build(&FMatrix::example_f1(), &SignTable::RESOLVED, RelaxationLevel::uniform(1).unwrap(), PptMode::Summed);
        let json = p.to_json(&[]);
        let inst: SdpInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(inst, p.to_sdp(&[]).0);
        assert_eq!(inst.block_dims.len(), 8);
    }
}
