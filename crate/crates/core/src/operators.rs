//! Dense complex linear algebra for small qubit registers.
//!
//! Basis convention: computational-basis index bits are read with qubit 1 as
//! the most significant bit, and a set bit encodes spin down. Index 0 is
//! therefore the all-up configuration and `σ^z = diag(+1, −1)`.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Elementwise tolerance for the Hermiticity invariant.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on Σ|amplitude|² for normalized states.
pub const NORM_TOL: f64 = 1e-10;
/// Largest register handled by the dense representation.
pub const MAX_QUBITS: usize = 12;

const TRACE_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("site {site} is outside the register 1..={n_qubits}")]
    SiteOutOfRange { site: usize, n_qubits: usize },
    #[error("register size {0} is not supported (1..={MAX_QUBITS})")]
    UnsupportedRegister(usize),
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (max |A - A†| = {0:.3e})")]
    NotHermitian(f64),
    #[error("state is not normalized (Σ|a|² = {0})")]
    NotNormalized(f64),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix has negative eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("keep set must be a nonempty subset of 1..={n_qubits}, got {keep:?}")]
    InvalidKeepSet { keep: Vec<usize>, n_qubits: usize },
    #[error("eigendecomposition did not converge")]
    NoConvergence,
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("invalid spin value {0}, expected +1 or -1")]
    InvalidSpin(i64),
    #[error("basis index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("S_z = {s_z} is not a valid Dicke label for {n_qubits} qubits")]
    InvalidDickeLabel { s_z: i32, n_qubits: usize },
}

pub type Result<T, E = OperatorError> = std::result::Result<T, E>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(OperatorError::NotPowerOfTwo(dim));
    }
    let n = dim.trailing_zeros() as usize;
    if n == 0 || n > MAX_QUBITS {
        return Err(OperatorError::UnsupportedRegister(n));
    }
    Ok(n)
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        Err(OperatorError::UnsupportedRegister(n_qubits))
    } else {
        Ok(())
    }
}

/// Largest elementwise deviation `|A[i][j] - conj(A[j][i])|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    /// The 2×2 Pauli matrix.
    pub fn matrix(self) -> CMatrix {
        let z = C64::new(0.0, 0.0);
        match self {
            PauliAxis::X => CMatrix::from_row_slice(2, 2, &[z, c(1.0), c(1.0), z]),
            PauliAxis::Y => CMatrix::from_row_slice(
                2,
                2,
                &[z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z],
            ),
            PauliAxis::Z => CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c(-1.0)]),
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliAxis::X => "x",
            PauliAxis::Y => "y",
            PauliAxis::Z => "z",
        };
        f.write_str(s)
    }
}

/// A Hermitian operator on an `n_qubits` register.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    n_qubits: usize,
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(OperatorError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let n_qubits = qubits_for_dim(matrix.nrows())?;
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        let err = hermiticity_error(&matrix);
        if err > HERMITIAN_TOL {
            return Err(OperatorError::NotHermitian(err));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Builds a real diagonal operator.
    pub fn from_diagonal(diagonal: &[f64]) -> Result<Self> {
        let n_qubits = qubits_for_dim(diagonal.len())?;
        let d = CVector::from_iterator(diagonal.len(), diagonal.iter().map(|&x| c(x)));
        Ok(Self {
            n_qubits,
            matrix: CMatrix::from_diagonal(&d),
        })
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << n_qubits);
        Self { n_qubits, matrix }
    }

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: CMatrix::zeros(d, d),
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: CMatrix::identity(d, d),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix * c(factor),
        }
    }

    /// `self + factor·other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        self.check_same_register(other)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            matrix: &self.matrix + &other.matrix * c(factor),
        })
    }

    /// Product `self · other`, kept only when the result is Hermitian.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_same_register(other)?;
        Self::new(&self.matrix * &other.matrix)
    }

    pub fn commutator(&self, other: &Self) -> Result<CMatrix> {
        self.check_same_register(other)?;
        Ok(&self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        self.check_dim(psi.dim())?;
        Ok(&self.matrix * psi.amplitudes())
    }

    /// `⟨bra|A|ket⟩`.
    pub fn matrix_element(&self, bra: &StateVector, ket: &StateVector) -> Result<C64> {
        self.check_dim(bra.dim())?;
        self.check_dim(ket.dim())?;
        Ok(bra.amplitudes().dotc(&(&self.matrix * ket.amplitudes())))
    }

    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        Ok(self.matrix_element(psi, psi)?.re)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() <= tol))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Largest elementwise difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim(),
                got: dim,
            });
        }
        Ok(())
    }

    fn check_same_register(&self, other: &Self) -> Result<()> {
        self.check_dim(other.dim())
    }
}

/// Normalized pure state of a qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let norm2 = amplitudes.norm_squared();
        if !norm2.is_finite() {
            return Err(OperatorError::NonFinite);
        }
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(OperatorError::NotNormalized(norm2));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() {
            return Err(OperatorError::NonFinite);
        }
        if norm == 0.0 {
            return Err(OperatorError::ZeroNorm);
        }
        Self::new(amplitudes / c(norm))
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, amplitudes: CVector) -> Self {
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn basis(config: &SpinConfiguration) -> Self {
        let n = config.n_qubits();
        let mut amplitudes = CVector::zeros(1 << n);
        amplitudes[config.index()] = c(1.0);
        Self {
            n_qubits: n,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Density matrix of a qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let op = HermitianOperator::new(matrix)?;
        let rho = Self {
            n_qubits: op.n_qubits,
            matrix: op.matrix,
        };
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(OperatorError::BadTrace(tr));
        }
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(OperatorError::NotPositive(min));
        }
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, matrix: CMatrix) -> Self {
        Self { n_qubits, matrix }
    }

    /// The maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: CMatrix::identity(d, d) * c(1.0 / d as f64),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Diagonal in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = SymmetricEigen::new(self.matrix.clone());
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> f64 {
        psi.amplitudes()
            .dotc(&(&self.matrix * psi.amplitudes()))
            .re
    }
}

/// Classical spin configuration; `true` is spin up (`σ^z = +1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    bits: Vec<bool>,
}

impl SpinConfiguration {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        check_register(bits.len())?;
        Ok(Self { bits })
    }

    pub fn all_up(n_qubits: usize) -> Result<Self> {
        Self::new(vec![true; n_qubits])
    }

    pub fn all_down(n_qubits: usize) -> Result<Self> {
        Self::new(vec![false; n_qubits])
    }

    pub fn from_index(index: usize, n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        if index >= 1 << n_qubits {
            return Err(OperatorError::IndexOutOfRange { index, n_qubits });
        }
        let bits = (0..n_qubits)
            .map(|q| (index >> (n_qubits - 1 - q)) & 1 == 0)
            .collect();
        Ok(Self { bits })
    }

    /// Parses ±1 spins.
    pub fn from_spins(spins: &[i64]) -> Result<Self> {
        let bits = spins
            .iter()
            .map(|&s| match s {
                1 => Ok(true),
                -1 => Ok(false),
                other => Err(OperatorError::InvalidSpin(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }

    pub fn n_qubits(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .fold(0usize, |acc, &up| (acc << 1) | usize::from(!up))
    }

    pub fn spins(&self) -> Vec<i64> {
        self.bits.iter().map(|&up| if up { 1 } else { -1 }).collect()
    }

    /// Total `S_z = #up − #down`.
    pub fn s_z(&self) -> i32 {
        self.bits.iter().map(|&up| if up { 1 } else { -1 }).sum()
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &up in &self.bits {
            f.write_str(if up { "↑" } else { "↓" })?;
        }
        Ok(())
    }
}

/// Label of a symmetric (Dicke) state by total `S_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DickeLabel {
    s_z: i32,
}

impl DickeLabel {
    pub fn new(s_z: i32, n_qubits: usize) -> Result<Self> {
        let n = n_qubits as i32;
        if s_z.abs() > n || (s_z - n).rem_euclid(2) != 0 {
            return Err(OperatorError::InvalidDickeLabel { s_z, n_qubits });
        }
        Ok(Self { s_z })
    }

    pub fn s_z(self) -> i32 {
        self.s_z
    }

    /// Normalized symmetric superposition of all configurations with this `S_z`.
    pub fn state(self, n_qubits: usize) -> Result<StateVector> {
        DickeLabel::new(self.s_z, n_qubits)?;
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        let n_up = ((n_qubits as i32 + self.s_z) / 2) as u32;
        let members: Vec<usize> = (0..dim)
            .filter(|idx| n_qubits as u32 - idx.count_ones() == n_up)
            .collect();
        let amp = c(1.0 / (members.len() as f64).sqrt());
        let mut v = CVector::zeros(dim);
        for idx in members {
            v[idx] = amp;
        }
        StateVector::new(v)
    }
}

impl fmt::Display for DickeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{:+}⟩", self.s_z)
    }
}

/// `I ⊗ … ⊗ σ^(axis) ⊗ … ⊗ I` with the Pauli factor at 1-based `site`.
pub fn pauli(axis: PauliAxis, site: usize, n_qubits: usize) -> Result<HermitianOperator> {
    check_register(n_qubits)?;
    if site == 0 || site > n_qubits {
        return Err(OperatorError::SiteOutOfRange { site, n_qubits });
    }
    let id = CMatrix::identity(2, 2);
    let sigma = axis.matrix();
    let mut acc = CMatrix::identity(1, 1);
    for q in 1..=n_qubits {
        let factor = if q == site { &sigma } else { &id };
        acc = acc.kronecker(factor);
    }
    Ok(HermitianOperator::from_parts_unchecked(n_qubits, acc))
}

/// Sorted spectrum with orthonormal eigenvectors.
///
/// Each eigenvector's phase is fixed so that its largest-magnitude component
/// (first one on ties) is real and positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    energies: Vec<f64>,
    vectors: CMatrix,
    n_qubits: usize,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, level: usize) -> Option<f64> {
        self.energies.get(level).copied()
    }

    /// Eigenvectors as columns.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn state(&self, level: usize) -> Option<StateVector> {
        (level < self.len()).then(|| {
            StateVector::from_parts_unchecked(self.n_qubits, self.vectors.column(level).into_owned())
        })
    }

    pub fn states(&self) -> Vec<StateVector> {
        (0..self.len()).filter_map(|n| self.state(n)).collect()
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CVector::from_iterator(self.len(), self.energies.iter().map(|&e| c(e)));
        &self.vectors * CMatrix::from_diagonal(&d) * self.vectors.adjoint()
    }

    /// Builds from externally supplied parts; energies must be ascending.
    pub fn from_parts(energies: Vec<f64>, vectors: CMatrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(vectors.nrows())?;
        if vectors.ncols() != energies.len() || vectors.nrows() != energies.len() {
            return Err(OperatorError::DimensionMismatch {
                expected: vectors.nrows(),
                got: energies.len(),
            });
        }
        Ok(Self {
            energies,
            vectors,
            n_qubits,
        })
    }
}

/// Eigendecomposition of a Hermitian operator, ascending energies.
pub fn eigensystem(h: &HermitianOperator) -> Result<EigenSystem> {
    let err = hermiticity_error(h.matrix());
    if err > HERMITIAN_TOL {
        return Err(OperatorError::NotHermitian(err));
    }
    eigensystem_of_matrix(h.matrix(), h.n_qubits())
}

pub(crate) fn eigensystem_of_matrix(m: &CMatrix, n_qubits: usize) -> Result<EigenSystem> {
    let dim = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(OperatorError::NoConvergence)?;
    if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(OperatorError::NoConvergence);
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let max = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let pivot = v
            .iter()
            .position(|z| z.norm() >= max - 1e-12)
            .unwrap_or(0);
        let phase = v[pivot] / c(v[pivot].norm());
        let fixed = v / phase;
        vectors.set_column(col, &fixed);
    }
    Ok(EigenSystem {
        energies,
        vectors,
        n_qubits,
    })
}

fn validate_keep(keep: &[usize], n_qubits: usize) -> Result<Vec<usize>> {
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let bad = sorted.is_empty()
        || sorted.len() != keep.len()
        || sorted.iter().any(|&q| q == 0 || q > n_qubits);
    if bad {
        return Err(OperatorError::InvalidKeepSet {
            keep: keep.to_vec(),
            n_qubits,
        });
    }
    Ok(sorted)
}

/// Reduced density matrix on the 1-based qubits in `keep`.
///
/// The kept qubits retain their relative order, so the result uses the same
/// basis convention on the smaller register.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let keep = validate_keep(keep, n)?;
    let traced: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
    let bit = |q: usize| 1usize << (n - q);
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut full = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            if (kept_idx >> (keep.len() - 1 - pos)) & 1 == 1 {
                full |= bit(q);
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if (traced_idx >> (traced.len() - 1 - pos)) & 1 == 1 {
                full |= bit(q);
            }
        }
        full
    };
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                acc += m[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(keep.len(), out))
}

/// Von Neumann entropy `−Tr[ρ_A ln ρ_A]` of the reduced state on `keep`.
pub fn entanglement_entropy(psi: &StateVector, keep: &[usize]) -> Result<f64> {
    let reduced = partial_trace(&psi.to_density(), keep)?;
    Ok(von_neumann_entropy(&reduced))
}

/// `−Σ λ ln λ` over the spectrum, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum();
    s.max(0.0)
}
