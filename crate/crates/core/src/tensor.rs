//! Named-mode dense density matrices.
//!
//! A [`NamedState`] is a non-normalized density matrix whose tensor factors
//! are addressed by name. Its trace is the accumulated success probability of
//! every projection applied so far. Operators only name the modes they act on;
//! identity padding and mode permutation are inferred from the labels.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops::{CMatrix, ZERO};

/// Numerical tolerances used for lazy validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub trace_excess: f64,
    /// Population allowed in the highest Fock level before a warning.
    pub truncation_leakage: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermiticity: 1e-10,
            min_eigenvalue: -1e-10,
            trace_excess: 1e-9,
            truncation_leakage: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Spin,
    Photon,
    IncoherentPhoton,
    Loss,
}

impl ModeKind {
    pub fn is_bosonic(self) -> bool {
        !matches!(self, ModeKind::Spin)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    name: String,
    dim: usize,
    kind: ModeKind,
}

impl ModeLabel {
    pub fn new(name: impl Into<String>, dim: usize, kind: ModeKind) -> Result<Self> {
        let name = name.into();
        if dim < 2 {
            return Err(Error::InvalidDimension { name, dim });
        }
        Ok(ModeLabel { name, dim, kind })
    }

    pub fn spin(name: impl Into<String>) -> Self {
        ModeLabel {
            name: name.into(),
            dim: 2,
            kind: ModeKind::Spin,
        }
    }

    /// Photon mode with `dim` Fock levels (`dim = n_max + 1`).
    pub fn photon(name: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new(name, dim, ModeKind::Photon)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ModeKind {
        self.kind
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        ModeLabel {
            name: name.into(),
            ..self.clone()
        }
    }

    pub fn with_kind(&self, kind: ModeKind) -> Self {
        ModeLabel {
            kind,
            ..self.clone()
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.name, self.dim)
    }
}

fn total_dim(labels: &[ModeLabel]) -> usize {
    labels.iter().map(ModeLabel::dim).product()
}

fn check_labels(matrix: &CMatrix, labels: &[ModeLabel]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.name()) {
            return Err(Error::DuplicateMode(l.name.clone()));
        }
    }
    let expected = total_dim(labels);
    if matrix.nrows() != expected || matrix.ncols() != expected {
        return Err(Error::ShapeMismatch {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
            expected,
        });
    }
    Ok(())
}

/// Index offsets splitting a composite basis into a selected group of modes
/// (in caller order) and the remaining modes (in state order).
#[derive(Clone, Debug)]
pub(crate) struct SubsystemMap {
    pub selected: Vec<usize>,
    pub rest: Vec<usize>,
}

impl SubsystemMap {
    pub(crate) fn new(dims: &[usize], positions: &[usize]) -> Self {
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let offsets = |pos: &[usize]| -> Vec<usize> {
            let mut out = vec![0usize];
            for &p in pos {
                let mut next = Vec::with_capacity(out.len() * dims[p]);
                for &base in &out {
                    for i in 0..dims[p] {
                        next.push(base + i * strides[p]);
                    }
                }
                out = next;
            }
            out
        };
        let rest_pos: Vec<usize> = (0..dims.len()).filter(|p| !positions.contains(p)).collect();
        SubsystemMap {
            selected: offsets(positions),
            rest: offsets(&rest_pos),
        }
    }
}

/// Nonzero entries `(row, col, value)` of a local operator.
fn sparse_entries(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Accumulates `Σ_k K_k ρ K_k†` where each `K_k` acts on the selected subsystem.
pub(crate) fn kraus_sum(rho: &CMatrix, kraus: &[CMatrix], map: &SubsystemMap) -> CMatrix {
    let d = rho.nrows();
    let src = rho.as_slice();
    let mut total = CMatrix::zeros(d, d);
    let mut left = CMatrix::zeros(d, d);
    for k in kraus {
        let entries = sparse_entries(k);
        if entries.is_empty() {
            continue;
        }
        left.fill(ZERO);
        {
            let dst = left.as_mut_slice();
            for j in 0..d {
                let col = &src[j * d..(j + 1) * d];
                let out = &mut dst[j * d..(j + 1) * d];
                for &r in &map.rest {
                    for &(a, b, v) in &entries {
                        out[map.selected[a] + r] += v * col[map.selected[b] + r];
                    }
                }
            }
        }
        let lsrc = left.as_slice();
        let dst = total.as_mut_slice();
        for &r in &map.rest {
            for &(a, b, v) in &entries {
                let vc = v.conj();
                let dc = map.selected[a] + r;
                let sc = map.selected[b] + r;
                let s = &lsrc[sc * d..(sc + 1) * d];
                let o = &mut dst[dc * d..(dc + 1) * d];
                for (oi, si) in o.iter_mut().zip(s) {
                    *oi += si * vc;
                }
            }
        }
    }
    total
}

/// Shared construction and composition for named matrices.
pub trait NamedObject: Sized {
    fn matrix(&self) -> &CMatrix;
    fn labels(&self) -> &[ModeLabel];
    #[doc(hidden)]
    fn from_parts_unchecked(matrix: CMatrix, labels: Vec<ModeLabel>) -> Self;

    fn dim(&self) -> usize {
        self.matrix().nrows()
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.labels().iter().position(|l| l.name() == name)
    }

    fn label(&self, name: &str) -> Option<&ModeLabel> {
        self.labels().iter().find(|l| l.name() == name)
    }

    fn names(&self) -> Vec<&str> {
        self.labels().iter().map(ModeLabel::name).collect()
    }
}

/// Kronecker composite of two named objects; labels are concatenated `a` then `b`.
pub fn tensor_product<T: NamedObject>(a: &T, b: &T) -> Result<T> {
    for l in b.labels() {
        if a.position(l.name()).is_some() {
            return Err(Error::DuplicateMode(l.name().to_string()));
        }
    }
    let labels: Vec<ModeLabel> = a.labels().iter().chain(b.labels()).cloned().collect();
    Ok(T::from_parts_unchecked(
        a.matrix().kronecker(b.matrix()),
        labels,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedOperator {
    matrix: CMatrix,
    labels: Vec<ModeLabel>,
}

impl NamedObject for NamedOperator {
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }
    fn from_parts_unchecked(matrix: CMatrix, labels: Vec<ModeLabel>) -> Self {
        NamedOperator { matrix, labels }
    }
}

impl NamedOperator {
    pub fn new(matrix: CMatrix, labels: Vec<ModeLabel>) -> Result<Self> {
        check_labels(&matrix, &labels)?;
        Ok(NamedOperator { matrix, labels })
    }

    pub fn identity(labels: Vec<ModeLabel>) -> Result<Self> {
        let d = total_dim(&labels);
        Self::new(CMatrix::identity(d, d), labels)
    }

    pub fn adjoint(&self) -> Self {
        NamedOperator {
            matrix: self.matrix.adjoint(),
            labels: self.labels.clone(),
        }
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedState {
    matrix: CMatrix,
    labels: Vec<ModeLabel>,
}

impl NamedObject for NamedState {
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }
    fn from_parts_unchecked(matrix: CMatrix, labels: Vec<ModeLabel>) -> Self {
        NamedState { matrix, labels }
    }
}

impl NamedState {
    pub fn new(matrix: CMatrix, labels: Vec<ModeLabel>) -> Result<Self> {
        check_labels(&matrix, &labels)?;
        Ok(NamedState { matrix, labels })
    }

    /// The state of no modes at all: a 1x1 matrix holding probability one.
    pub fn empty() -> Self {
        NamedState {
            matrix: CMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
            labels: Vec::new(),
        }
    }

    /// `|ψ⟩⟨ψ|` for a ket given in the composite basis of `labels`.
    pub fn from_ket(ket: &[C64], labels: Vec<ModeLabel>) -> Result<Self> {
        let d = ket.len();
        let matrix = CMatrix::from_fn(d, d, |i, j| ket[i] * ket[j].conj());
        Self::new(matrix, labels)
    }

    /// Product basis state `|n_1 n_2 ...⟩` with one level index per label.
    pub fn basis(labels: Vec<ModeLabel>, levels: &[usize]) -> Result<Self> {
        if levels.len() != labels.len() {
            return Err(Error::InvalidState(format!(
                "{} levels given for {} modes",
                levels.len(),
                labels.len()
            )));
        }
        let mut index = 0;
        for (l, &n) in labels.iter().zip(levels) {
            if n >= l.dim() {
                return Err(Error::InvalidState(format!(
                    "level {n} out of range for mode `{}`",
                    l.name()
                )));
            }
            index = index * l.dim() + n;
        }
        let d = total_dim(&labels);
        let mut matrix = CMatrix::zeros(d, d);
        matrix[(index, index)] = C64::new(1.0, 0.0);
        Self::new(matrix, labels)
    }

    /// All modes in their ground/vacuum level.
    pub fn vacuum(labels: Vec<ModeLabel>) -> Result<Self> {
        let levels = vec![0; labels.len()];
        Self::basis(labels, &levels)
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        NamedState {
            matrix: &self.matrix * C64::new(factor, 0.0),
            labels: self.labels.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn success_probability(&self) -> f64 {
        self.trace()
    }

    fn positions_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.position(n)
                    .ok_or_else(|| Error::UnknownMode(n.to_string()))
            })
            .collect()
    }

    fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(ModeLabel::dim).collect()
    }

    fn map_for(&self, labels: &[ModeLabel]) -> Result<SubsystemMap> {
        let mut positions = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self
                .position(l.name())
                .ok_or_else(|| Error::UnknownMode(l.name().to_string()))?;
            if self.labels[p].dim() != l.dim() {
                return Err(Error::DimensionMismatch {
                    name: l.name().to_string(),
                    expected: self.labels[p].dim(),
                    found: l.dim(),
                });
            }
            if positions.contains(&p) {
                return Err(Error::DuplicateMode(l.name().to_string()));
            }
            positions.push(p);
        }
        Ok(SubsystemMap::new(&self.dims(), &positions))
    }

    /// `Σ_k K_k ρ K_k†` with every `K_k` acting on the modes named by `labels`.
    pub fn apply_kraus(&self, labels: &[ModeLabel], kraus: &[CMatrix]) -> Result<Self> {
        let d_op = total_dim(labels);
        for k in kraus {
            if k.nrows() != d_op || k.ncols() != d_op {
                return Err(Error::ShapeMismatch {
                    rows: k.nrows(),
                    cols: k.ncols(),
                    expected: d_op,
                });
            }
        }
        let map = self.map_for(labels)?;
        Ok(NamedState {
            matrix: kraus_sum(&self.matrix, kraus, &map),
            labels: self.labels.clone(),
        })
    }

    /// Removes the named modes, keeping the order of the others.
    pub fn partial_trace(&self, names: &[&str]) -> Result<Self> {
        let traced = self.positions_of(names)?;
        let keep: Vec<usize> = (0..self.labels.len())
            .filter(|p| !traced.contains(p))
            .collect();
        let names_unique: HashSet<_> = names.iter().collect();
        if names_unique.len() != names.len() {
            return Err(Error::DuplicateMode(names[0].to_string()));
        }
        Ok(self.reduce(&keep, &traced, |_| true))
    }

    /// Projects the named modes onto the basis states accepted by `accept`
    /// (which receives the level of every traced mode, in `names` order) and
    /// traces them out. Diagonal projectors only, which covers photon counting.
    pub fn project_and_trace(
        &self,
        names: &[&str],
        accept: impl Fn(&[usize]) -> bool,
    ) -> Result<Self> {
        let traced = self.positions_of(names)?;
        let keep: Vec<usize> = (0..self.labels.len())
            .filter(|p| !traced.contains(p))
            .collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&p| self.labels[p].dim()).collect();
        let count: usize = traced_dims.iter().product();
        let mut levels = vec![0usize; traced.len()];
        // index order matches SubsystemMap: first traced mode most significant
        let mask: Vec<bool> = (0..count)
            .map(|t| {
                let mut rem = t;
                for k in (0..traced_dims.len()).rev() {
                    levels[k] = rem % traced_dims[k];
                    rem /= traced_dims[k];
                }
                accept(&levels)
            })
            .collect();
        Ok(self.reduce(&keep, &traced, |t| mask[t]))
    }

    fn reduce(&self, keep: &[usize], traced: &[usize], include: impl Fn(usize) -> bool) -> Self {
        let dims = self.dims();
        let kept_map = SubsystemMap::new(&dims, keep);
        let traced_offsets = SubsystemMap::new(&dims, traced).selected;
        let active: Vec<usize> = traced_offsets
            .iter()
            .enumerate()
            .filter(|(t, _)| include(*t))
            .map(|(_, &o)| o)
            .collect();
        let dk = kept_map.selected.len();
        let d = self.matrix.nrows();
        let src = self.matrix.as_slice();
        let mut out = CMatrix::zeros(dk, dk);
        for (j, &cj) in kept_map.selected.iter().enumerate() {
            for &t in &active {
                let col = &src[(cj + t) * d..(cj + t + 1) * d];
                for (i, &ci) in kept_map.selected.iter().enumerate() {
                    out[(i, j)] += col[ci + t];
                }
            }
        }
        NamedState {
            matrix: out,
            labels: keep.iter().map(|&p| self.labels[p].clone()).collect(),
        }
    }

    /// Same physical state with modes listed in `order` (must name every mode).
    pub fn reordered(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.labels.len() {
            return Err(Error::InvalidState(format!(
                "reorder lists {} of {} modes",
                order.len(),
                self.labels.len()
            )));
        }
        let positions = self.positions_of(order)?;
        let map = SubsystemMap::new(&self.dims(), &positions);
        let idx = &map.selected;
        let d = idx.len();
        let matrix = CMatrix::from_fn(d, d, |i, j| self.matrix[(idx[i], idx[j])]);
        Ok(NamedState {
            matrix,
            labels: positions.iter().map(|&p| self.labels[p].clone()).collect(),
        })
    }

    /// Renames a mode in place; the new name must not already exist.
    pub fn renamed(&self, from: &str, to: &str) -> Result<Self> {
        let p = self
            .position(from)
            .ok_or_else(|| Error::UnknownMode(from.to_string()))?;
        if from != to && self.position(to).is_some() {
            return Err(Error::DuplicateMode(to.to_string()));
        }
        let mut labels = self.labels.clone();
        labels[p] = labels[p].renamed(to);
        Ok(NamedState {
            matrix: self.matrix.clone(),
            labels,
        })
    }

    /// Reduced state of the named modes, in the given order.
    pub fn reduced(&self, names: &[&str]) -> Result<Self> {
        let others: Vec<&str> = self
            .labels
            .iter()
            .map(ModeLabel::name)
            .filter(|n| !names.contains(n))
            .collect();
        self.partial_trace(&others)?.reordered(names)
    }

    /// Population of each level of a single mode.
    pub fn level_populations(&self, name: &str) -> Result<Vec<f64>> {
        let r = self.reduced(&[name])?;
        Ok((0..r.dim()).map(|i| r.matrix[(i, i)].re).collect())
    }

    /// Trace weight outside the vacuum level of `name`.
    pub fn excited_population(&self, name: &str) -> Result<f64> {
        let pops = self.level_populations(name)?;
        Ok(pops.iter().skip(1).sum())
    }

    /// Relative population in the top Fock level of every bosonic mode,
    /// returning modes whose value exceeds `threshold`. Each one is logged.
    pub fn truncation_warnings(&self, threshold: f64) -> Vec<(String, f64)> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for l in self.labels.iter().filter(|l| l.kind().is_bosonic()) {
            if let Ok(pops) = self.level_populations(l.name()) {
                let top = pops[pops.len() - 1] / tr;
                if top > threshold {
                    log::warn!(
                        "mode `{}`: population {:.3e} in top Fock level exceeds {:.1e}",
                        l.name(),
                        top,
                        threshold
                    );
                    out.push((l.name().to_string(), top));
                }
            }
        }
        out
    }

    /// Checks dimension, hermiticity, positivity and trace bounds.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        check_labels(&self.matrix, &self.labels)?;
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                let diff = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                if diff.norm() > tol.hermiticity {
                    return Err(Error::InvalidState(format!(
                        "not Hermitian at ({i},{j}): deviation {:.3e}",
                        diff.norm()
                    )));
                }
            }
        }
        let tr = self.trace();
        if !(-tol.trace_excess..=1.0 + tol.trace_excess).contains(&tr) {
            return Err(Error::InvalidState(format!("trace {tr} outside [0, 1]")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < tol.min_eigenvalue {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Fidelity of the normalized reduced spin state with each Bell state.
    pub fn bell_fidelity(&self, spins: (&str, &str)) -> Result<BellFidelities> {
        for s in [spins.0, spins.1] {
            let l = self
                .label(s)
                .ok_or_else(|| Error::UnknownMode(s.to_string()))?;
            if l.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    name: s.to_string(),
                    expected: 2,
                    found: l.dim(),
                });
            }
        }
        let rho = self.reduced(&[spins.0, spins.1])?;
        let tr = rho.trace();
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::ZeroTrace);
        }
        let f = |b: BellState| {
            let v = b.ket();
            let mut acc = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    acc += v[i].conj() * rho.matrix[(i, j)] * v[j];
                }
            }
            acc.re / tr
        };
        Ok(BellFidelities {
            phi_plus: f(BellState::PhiPlus),
            phi_minus: f(BellState::PhiMinus),
            psi_plus: f(BellState::PsiPlus),
            psi_minus: f(BellState::PsiMinus),
        })
    }
}

/// Applies a (possibly non-unitary) named operator: `O ρ O†`.
pub fn apply(op: &NamedOperator, state: &NamedState) -> Result<NamedState> {
    state.apply_kraus(op.labels(), std::slice::from_ref(&op.matrix))
}

pub fn partial_trace(state: &NamedState, names: &[&str]) -> Result<NamedState> {
    state.partial_trace(names)
}

pub fn success_probability(state: &NamedState) -> f64 {
    state.trace()
}

pub fn bell_fidelity(state: &NamedState, spins: (&str, &str)) -> Result<BellFidelities> {
    state.bell_fidelity(spins)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes on `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn ket(self) -> [C64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (p, m, z) = (C64::new(h, 0.0), C64::new(-h, 0.0), ZERO);
        match self {
            BellState::PhiPlus => [p, z, z, p],
            BellState::PhiMinus => [p, z, z, m],
            BellState::PsiPlus => [z, p, p, z],
            BellState::PsiMinus => [z, p, m, z],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFidelities {
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
}

impl BellFidelities {
    pub fn get(&self, b: BellState) -> f64 {
        match b {
            BellState::PhiPlus => self.phi_plus,
            BellState::PhiMinus => self.phi_minus,
            BellState::PsiPlus => self.psi_plus,
            BellState::PsiMinus => self.psi_minus,
        }
    }

    pub fn max(&self) -> (BellState, f64) {
        BellState::ALL.iter().map(|&b| (b, self.get(b))).fold(
            (BellState::PhiPlus, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        )
    }
}
