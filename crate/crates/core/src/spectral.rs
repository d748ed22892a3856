//! Spectral analysis along the annealing path: gaps, transition matrix
//! elements, Dicke-sector energies and first-order perturbative eigenstates.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{schedule_k, HamiltonianTerms, ModelError, ModelParams, RqaSchedule};
use crate::operators::{
    entanglement_entropy, pauli, CVector, DickeLabel, HermitianOperator, OperatorError,
    PauliAxis, StateVector, C64,
};

pub use crate::operators::{eigensystem, EigenSystem};

/// Energies closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("level {level} out of range for a {len}-level system")]
    LevelOutOfRange { level: usize, len: usize },
    #[error("level {level} is degenerate with a neighbour (splitting {splitting:.3e})")]
    DegenerateLevel { level: usize, splitting: f64 },
    #[error("perturbative denominator {0:.3e} vanishes (6J = ±h)")]
    DegenerateDenominator(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no h_d in [{lo}, {hi}] approaches gap {target}")]
    NoResonance { target: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T, E = SpectralError> = std::result::Result<T, E>;

/// Energies of the five symmetric-sector states of the four-spin model at
/// `k = 1`, in the convention where `S_z = 0` sits at zero.
///
/// Direct evaluation of `H_P + H_L` gives values higher by `2J`; differences
/// are identical.
pub fn dicke_sector_energies(coupling: f64, longitudinal: f64) -> BTreeMap<DickeLabel, f64> {
    let (j, h) = (coupling, longitudinal);
    [
        (-4, -8.0 * j - 2.0 * h),
        (4, -8.0 * j + 2.0 * h),
        (-2, -2.0 * j - h),
        (2, -2.0 * j + h),
        (0, 0.0),
    ]
    .into_iter()
    .map(|(s, e)| (DickeLabel::new(s, 4).expect("valid four-spin label"), e))
    .collect()
}

/// `|⟨φ_to| op |φ_from⟩|`.
pub fn transition_matrix_element(
    sys: &EigenSystem,
    from: usize,
    to: usize,
    op: &HermitianOperator,
) -> Result<f64> {
    let len = sys.len();
    for level in [from, to] {
        if level >= len {
            return Err(SpectralError::LevelOutOfRange { level, len });
        }
    }
    let bra = sys.state(to).expect("checked");
    let ket = sys.state(from).expect("checked");
    Ok(op.matrix_element(&bra, &ket)?.norm())
}

/// Fails when `level` is within [`DEGENERACY_TOL`] of a neighbouring level.
pub fn check_nondegenerate(sys: &EigenSystem, level: usize) -> Result<()> {
    let e = sys.energies();
    if level >= e.len() {
        return Err(SpectralError::LevelOutOfRange {
            level,
            len: e.len(),
        });
    }
    let below = level.checked_sub(1).map(|l| e[level] - e[l]);
    let above = e.get(level + 1).map(|x| x - e[level]);
    for splitting in [below, above].into_iter().flatten() {
        if splitting.abs() < DEGENERACY_TOL {
            return Err(SpectralError::DegenerateLevel { level, splitting });
        }
    }
    Ok(())
}

/// First-order perturbative eigenstate `|base⟩ + amplitude · Σ_j σ_j^± |base⟩`.
///
/// The admixture is the collective single flip of the base Dicke state
/// (raising from `S_z = −4`, lowering from `S_z = +4`). It is not normalized:
/// for four spins its norm is 2. [`Self::state`] returns the normalized
/// vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeState {
    pub base: DickeLabel,
    pub admixture: DickeLabel,
    pub amplitude: f64,
    pub lambda: f64,
}

impl PerturbativeState {
    pub fn state(&self) -> Result<StateVector> {
        let n = 4;
        let base = self.base.state(n)?;
        let flipped = self.admixture.state(n)?;
        // Σ_j σ_j^± |±4⟩ = 2 |±2⟩ for normalized Dicke states.
        let v = base.amplitudes() + flipped.amplitudes() * C64::new(2.0 * self.amplitude, 0.0);
        Ok(StateVector::normalized(v)?)
    }
}

/// Ground and first excited states of the four-spin model at `k = 1 − λ`
/// to first order in `λ`.
pub fn perturbative_ground_and_excited(
    lambda: f64,
    coupling: f64,
    longitudinal: f64,
) -> Result<(PerturbativeState, PerturbativeState)> {
    if !(lambda >= 0.0) {
        return Err(SpectralError::InvalidGrid(format!("λ = {lambda} must be ≥ 0")));
    }
    let lower = 6.0 * coupling + longitudinal;
    let upper = 6.0 * coupling - longitudinal;
    for d in [lower, upper] {
        if d.abs() < 1e-9 {
            return Err(SpectralError::DegenerateDenominator(d));
        }
    }
    let label = |s| DickeLabel::new(s, 4).expect("valid four-spin label");
    Ok((
        PerturbativeState {
            base: label(-4),
            admixture: label(-2),
            amplitude: lambda / lower,
            lambda,
        },
        PerturbativeState {
            base: label(4),
            admixture: label(2),
            amplitude: lambda / upper,
            lambda,
        },
    ))
}

/// `σ^z + λ σ^x`.
pub fn single_qubit_hamiltonian(lambda: f64) -> HermitianOperator {
    let z = pauli(PauliAxis::Z, 1, 1).expect("one qubit");
    let x = pauli(PauliAxis::X, 1, 1).expect("one qubit");
    z.add_scaled(&x, lambda).expect("same register")
}

/// Normalized first-order eigenstates of `σ^z + λσ^x`:
/// `|ψ0⟩ ∝ |↓⟩ − (λ/2)|↑⟩`, `|ψ1⟩ ∝ |↑⟩ + (λ/2)|↓⟩`.
pub fn single_qubit_perturbative_states(lambda: f64) -> Result<(StateVector, StateVector)> {
    if !(lambda >= 0.0) {
        return Err(SpectralError::InvalidGrid(format!("λ = {lambda} must be ≥ 0")));
    }
    let c = |x: f64| C64::new(x, 0.0);
    // index 0 = ↑, index 1 = ↓
    let ground = CVector::from_vec(vec![c(-0.5 * lambda), c(1.0)]);
    let excited = CVector::from_vec(vec![c(1.0), c(0.5 * lambda)]);
    Ok((
        StateVector::normalized(ground)?,
        StateVector::normalized(excited)?,
    ))
}

/// Ground/first-excited gap of `H(h_d)` over a grid of hold points.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub points: Vec<(f64, f64)>,
}

impl GapProfile {
    pub fn h_d(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }
}

fn check_hd_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(SpectralError::InvalidGrid("empty h_d grid".into()));
    }
    if let Some(bad) = grid.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(SpectralError::InvalidGrid(format!("h_d = {bad} outside (0, 1]")));
    }
    Ok(())
}

fn spectrum_at(terms: &HamiltonianTerms, k: f64) -> Result<EigenSystem> {
    Ok(eigensystem(&terms.at(k)?)?)
}

pub fn gap_profile(params: &ModelParams, grid: &[f64]) -> Result<GapProfile> {
    check_hd_grid(grid)?;
    let terms = HamiltonianTerms::new(params)?;
    let points = grid
        .par_iter()
        .map(|&h_d| {
            let sys = spectrum_at(&terms, h_d)?;
            Ok((h_d, sys.energies()[1] - sys.energies()[0]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapProfile { points })
}

/// Hold point where the gap meets (or most closely approaches) a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub h_d: f64,
    pub gap: f64,
    /// `gap − target` at `h_d`; zero up to root-finding precision for a crossing.
    pub mismatch: f64,
    /// Whether the gap actually crosses the target.
    pub crossing: bool,
}

/// Scans `h_d` downward from `hi` and returns the first point where the gap
/// crosses `target`. If the gap never crosses, returns the first local
/// minimum of `|gap − target|` instead, flagged `crossing = false`.
pub fn resonance_hd(params: &ModelParams, target: f64, lo: f64, hi: f64) -> Result<Resonance> {
    if !(lo > 0.0 && hi <= 1.0 && lo < hi) {
        return Err(SpectralError::InvalidGrid(format!("bad search window [{lo}, {hi}]")));
    }
    let terms = HamiltonianTerms::new(params)?;
    let gap = |k: f64| -> Result<f64> {
        let sys = spectrum_at(&terms, k)?;
        Ok(sys.energies()[1] - sys.energies()[0])
    };
    let steps = ((hi - lo) / 1e-3).ceil() as usize;
    let step = (hi - lo) / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|i| hi - step * i as f64).collect();
    let values = grid
        .iter()
        .map(|&k| gap(k).map(|g| g - target))
        .collect::<Result<Vec<_>>>()?;

    for i in 1..grid.len() {
        if values[i - 1] == 0.0 {
            return Ok(Resonance { h_d: grid[i - 1], gap: target, mismatch: 0.0, crossing: true });
        }
        if values[i - 1].signum() != values[i].signum() {
            let (mut a, mut b) = (grid[i], grid[i - 1]);
            let fa_sign = values[i].signum();
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if (gap(mid)? - target).signum() == fa_sign {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let h_d = 0.5 * (a + b);
            let g = gap(h_d)?;
            return Ok(Resonance { h_d, gap: g, mismatch: g - target, crossing: true });
        }
    }

    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let idx = (1..abs.len() - 1)
        .find(|&i| abs[i] <= abs[i - 1] && abs[i] <= abs[i + 1])
        .ok_or(SpectralError::NoResonance { target, lo, hi })?;
    // golden-section refinement of |gap - target| on the bracketing cell pair
    let (mut a, mut b) = (grid[idx + 1], grid[idx - 1]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let f = |k: f64| gap(k).map(|g| (g - target).abs());
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..100 {
        if (b - a) < 1e-12 {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let h_d = 0.5 * (a + b);
    let g = gap(h_d)?;
    Ok(Resonance { h_d, gap: g, mismatch: g - target, crossing: false })
}

/// Entanglement entropy of the instantaneous first excited state along the
/// schedule, for the bipartition of the first `N/2` qubits against the rest.
pub fn entropy_along_schedule(
    params: &ModelParams,
    schedule: &RqaSchedule,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if params.n_qubits < 2 {
        return Err(SpectralError::Unsupported(
            "entanglement entropy needs at least two qubits".into(),
        ));
    }
    let terms = HamiltonianTerms::new(params)?;
    let keep: Vec<usize> = (1..=params.n_qubits / 2).collect();
    times
        .par_iter()
        .map(|&t| {
            let k = schedule_k(t, schedule)?;
            Ok((t, excited_state_entropy(&terms, k, &keep)?))
        })
        .collect()
}

/// Entropy of the first excited eigenstate of `H(k)` on the `keep` qubits.
pub fn excited_state_entropy(terms: &HamiltonianTerms, k: f64, keep: &[usize]) -> Result<f64> {
    let sys = spectrum_at(terms, k)?;
    check_nondegenerate(&sys, 1)?;
    Ok(entanglement_entropy(&sys.state(1).expect("two levels"), keep)?)
}

/// `per_decade` log-spaced points per decade from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && per_decade > 0) {
        return Err(SpectralError::InvalidGrid(format!(
            "log grid needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    Ok((0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect())
}

/// Ordinary least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(SpectralError::InvalidGrid("need ≥ 2 paired points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(SpectralError::InvalidGrid("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Which model the perturbative scaling refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingModel {
    /// Annealing Hamiltonian `H(1 − λ)` of the given parameters.
    Annealing,
    /// `σ^z + λσ^x`.
    SingleQubitPerturbation,
}

/// `|⟨φ0| σ_1^(axis) |φ1⟩|` from full diagonalization at each `λ`.
pub fn ground_excited_elements(
    model: ScalingModel,
    params: &ModelParams,
    axis: PauliAxis,
    lambdas: &[f64],
) -> Result<Vec<f64>> {
    let n = match model {
        ScalingModel::Annealing => params.n_qubits,
        ScalingModel::SingleQubitPerturbation => 1,
    };
    let op = pauli(axis, 1, n)?;
    let terms = HamiltonianTerms::new(params)?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let h = match model {
                ScalingModel::Annealing => terms.at(1.0 - lambda)?,
                ScalingModel::SingleQubitPerturbation => single_qubit_hamiltonian(lambda),
            };
            let sys = eigensystem(&h)?;
            transition_matrix_element(&sys, 1, 0, &op)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{longitudinal_hamiltonian, problem_hamiltonian, total_hamiltonian};

    #[test]
    fn dicke_energy_values() {
        let e = dicke_sector_energies(1.0, 1.0);
        let at = |s| e[&DickeLabel::new(s, 4).unwrap()];
        assert_eq!(at(-4), -10.0);
        assert_eq!(at(0), 0.0);
        assert_eq!(at(4) - at(-4), 4.0);
    }

    #[test]
    fn dicke_energies_offset_from_direct_evaluation() {
        let p = ModelParams::fully_connected();
        let h0 = problem_hamiltonian(&p)
            .unwrap()
            .add_scaled(&longitudinal_hamiltonian(&p).unwrap(), 1.0)
            .unwrap();
        for (label, e) in dicke_sector_energies(1.0, 1.0) {
            let direct = h0.expectation(&label.state(4).unwrap()).unwrap();
            assert!((direct - e - 2.0).abs() < 1e-12, "{label}: {direct} vs {e}");
        }
    }

    #[test]
    fn transition_element_at_classical_point() {
        let sys = eigensystem(&total_hamiltonian(1.0, &ModelParams::fully_connected()).unwrap())
            .unwrap();
        let z1 = pauli(PauliAxis::Z, 1, 4).unwrap();
        assert_eq!(transition_matrix_element(&sys, 0, 1, &z1).unwrap(), 0.0);
        assert!(matches!(
            transition_matrix_element(&sys, 0, 16, &z1),
            Err(SpectralError::LevelOutOfRange { level: 16, len: 16 })
        ));
    }

    #[test]
    fn transition_element_single_qubit_closed_form() {
        let sys = eigensystem(&single_qubit_hamiltonian(0.1)).unwrap();
        let z = pauli(PauliAxis::Z, 1, 1).unwrap();
        let el = transition_matrix_element(&sys, 1, 0, &z).unwrap();
        let closed = 0.1 / (1.0f64 + 0.01).sqrt();
        assert!((el - closed).abs() < 1e-12);
        assert!((el - 0.099504).abs() < 1e-6);
    }

    #[test]
    fn four_qubit_element_small_at_lambda_point_one() {
        let el = ground_excited_elements(
            ScalingModel::Annealing,
            &ModelParams::fully_connected(),
            PauliAxis::Z,
            &[0.1],
        )
        .unwrap();
        assert!(el[0] < 0.02);
    }

    #[test]
    fn perturbative_amplitudes() {
        let (g, e) = perturbative_ground_and_excited(0.07, 1.0, 1.0).unwrap();
        assert!((g.amplitude - 0.01).abs() < 1e-15);
        assert!((e.amplitude - 0.014).abs() < 1e-15);
        assert_eq!(g.base.s_z(), -4);
        assert_eq!(e.admixture.s_z(), 2);
    }

    #[test]
    fn perturbative_unperturbed_limit() {
        let (g, e) = perturbative_ground_and_excited(0.0, 1.0, 1.0).unwrap();
        assert_eq!(g.state().unwrap().probabilities()[15], 1.0);
        assert_eq!(e.state().unwrap().probabilities()[0], 1.0);
    }

    #[test]
    fn perturbative_degenerate_denominator() {
        assert!(matches!(
            perturbative_ground_and_excited(0.1, 1.0, 6.0),
            Err(SpectralError::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn collective_flip_amplitude_is_first_order_exact() {
        // exact admixture of the normalized |−2⟩ Dicke state approaches 2λ/(6J+h)
        let p = ModelParams::fully_connected();
        let lambda = 1e-4;
        let sys = eigensystem(&total_hamiltonian(1.0 - lambda, &p).unwrap()).unwrap();
        let ground = sys.state(0).unwrap();
        let d = DickeLabel::new(-2, 4).unwrap().state(4).unwrap();
        let amp = d.inner(&ground).re / ground.amplitudes()[15].re;
        assert!((amp / lambda - 2.0 / 7.0).abs() < 1e-3);
    }

    #[test]
    fn single_qubit_states() {
        let (g, e) = single_qubit_perturbative_states(0.0).unwrap();
        assert_eq!(g.probabilities(), vec![0.0, 1.0]);
        assert_eq!(e.probabilities(), vec![1.0, 0.0]);
        let (g, e) = single_qubit_perturbative_states(0.1).unwrap();
        let z = pauli(PauliAxis::Z, 1, 1).unwrap();
        let el = z.matrix_element(&g, &e).unwrap().norm();
        assert!((el - 0.1).abs() < 1e-3);
    }

    #[test]
    fn gap_profile_at_classical_point() {
        let prof = gap_profile(&ModelParams::fully_connected(), &[1.0]).unwrap();
        assert!((prof.points[0].1 - 4.0).abs() < 1e-12);
        assert!(gap_profile(&ModelParams::fully_connected(), &[0.0]).is_err());
        assert!(gap_profile(&ModelParams::fully_connected(), &[]).is_err());
    }

    #[test]
    fn resonance_windows() {
        let fc = resonance_hd(&ModelParams::fully_connected(), 0.75, 0.3, 1.0).unwrap();
        assert!(fc.crossing);
        assert!((0.43..=0.47).contains(&fc.h_d), "{fc:?}");
        assert!(fc.mismatch.abs() < 1e-9);
        let sq = resonance_hd(&ModelParams::single_qubit(), 0.75, 0.3, 1.0).unwrap();
        assert!(!sq.crossing);
        assert!((0.76..=0.80).contains(&sq.h_d), "{sq:?}");
        assert!(sq.mismatch > 0.0 && sq.mismatch < 1e-3);
    }

    #[test]
    fn entropy_profile_shape() {
        let p = ModelParams::fully_connected();
        let s = RqaSchedule::new(1.0, 2.0, 1.0, 0.5).unwrap();
        let times: Vec<f64> = (0..=16).map(|i| 4.0 * i as f64 / 16.0).collect();
        let prof = entropy_along_schedule(&p, &s, &times).unwrap();
        assert!(prof[0].1.abs() < 1e-9);
        let hold = prof[8].1;
        assert!(hold > 0.0);
        for i in 0..prof.len() {
            let j = prof.len() - 1 - i;
            assert!((prof[i].1 - prof[j].1).abs() < 1e-9);
        }
        let terms = HamiltonianTerms::new(&p).unwrap();
        assert!(hold > excited_state_entropy(&terms, 0.9, &[1, 2]).unwrap());
        assert!(entropy_along_schedule(&ModelParams::single_qubit(), &s, &times).is_err());
    }

    #[test]
    fn log_grid_and_slope() {
        let g = log_spaced(1e-3, 1e-1, 10).unwrap();
        assert_eq!(g.len(), 21);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[20] - 1e-1).abs() < 1e-15);
        let ys: Vec<f64> = g.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&g, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    }
}
