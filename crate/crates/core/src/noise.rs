//! Noise models: lab-frame Pauli dissipators and an instantaneous-eigenbasis
//! (Davies) generator driven by an Ohmic-plus-Lorentzian spectral density.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{adj_mul, mul};
use crate::model::ModelParams;
use crate::operators::{pauli, CMatrix, EigenSystem, OperatorError, PauliAxis, C64};
use crate::spectral::DEGENERACY_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise specification: {0}")]
    InvalidSpec(String),
    #[error("operation requires {expected} noise, got {got}")]
    WrongMode { expected: NoiseMode, got: NoiseMode },
    #[error("eigenvalues are not sorted ascending at level {0}")]
    UnsortedSpectrum(usize),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T, E = NoiseError> = std::result::Result<T, E>;

/// Noise power `S(ω)` at angular frequency `ω` (rad/μs).
///
/// For `ω ≥ 0`: `S(ω) = max(0, η·ω) + flat + A·w²/((ω−ω0)² + w²)`.
/// Negative frequencies (absorption) follow detailed balance at temperature
/// `θ`, and vanish at `θ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralDensity {
    /// Ohmic slope `η`.
    pub ohmic: f64,
    /// Frequency-independent emission floor.
    pub flat: f64,
    /// Lorentzian peak height `A`.
    pub tls_amplitude: f64,
    /// Lorentzian centre `ω0`.
    pub tls_center: f64,
    /// Lorentzian half width `w`.
    pub tls_width: f64,
    /// Bath temperature `θ` in energy units.
    pub temperature: f64,
}

/// Centre of the default two-level-system resonance.
pub const DEFAULT_TLS_CENTER: f64 = 0.75;
/// Default Lorentzian half width.
pub const DEFAULT_TLS_WIDTH: f64 = 0.005;

impl Default for SpectralDensity {
    /// Unit Ohmic bath with a TLS peak that raises `S(ω0)` tenfold.
    fn default() -> Self {
        let ohmic = 1.0;
        Self {
            ohmic,
            flat: 0.0,
            tls_amplitude: 9.0 * ohmic * DEFAULT_TLS_CENTER,
            tls_center: DEFAULT_TLS_CENTER,
            tls_width: DEFAULT_TLS_WIDTH,
            temperature: 0.0,
        }
    }
}

impl SpectralDensity {
    /// `S(ω) = 1` for emission, zero absorption.
    pub fn flat(level: f64) -> Self {
        Self {
            ohmic: 0.0,
            flat: level,
            tls_amplitude: 0.0,
            ..Self::default()
        }
    }

    pub fn without_tls(self) -> Self {
        Self {
            tls_amplitude: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.ohmic,
            self.flat,
            self.tls_amplitude,
            self.tls_center,
            self.tls_width,
            self.temperature,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(NoiseError::InvalidSpec("non-finite spectral density parameter".into()));
        }
        if self.ohmic < 0.0 || self.flat < 0.0 || self.tls_amplitude < 0.0 || self.temperature < 0.0 {
            return Err(NoiseError::InvalidSpec(
                "spectral density strengths and temperature must be ≥ 0".into(),
            ));
        }
        if self.tls_width <= 0.0 {
            return Err(NoiseError::InvalidSpec("TLS width must be > 0".into()));
        }
        Ok(())
    }

    fn emission(&self, omega: f64) -> f64 {
        let w2 = self.tls_width * self.tls_width;
        let lorentz = self.tls_amplitude * w2 / ((omega - self.tls_center).powi(2) + w2);
        (self.ohmic * omega).max(0.0) + self.flat + lorentz
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if omega >= 0.0 {
            self.emission(omega)
        } else if self.temperature > 0.0 {
            (omega / self.temperature).exp() * self.emission(-omega)
        } else {
            0.0
        }
    }
}

/// `S(ω)`; see [`SpectralDensity`].
pub fn spectral_density_eval(sd: &SpectralDensity, omega: f64) -> f64 {
    sd.eval(omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    None,
    LabFrame,
    EigenbasisDavies,
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseMode::None => "none",
            NoiseMode::LabFrame => "lab_frame",
            NoiseMode::EigenbasisDavies => "eigenbasis_davies",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    /// Local coupling operator `σ_j^(axis)` on every qubit.
    pub axis: PauliAxis,
    /// Overall rate `γ` in 1/μs.
    pub rate: f64,
    /// Used in eigenbasis mode only.
    pub spectral_density: SpectralDensity,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            mode: NoiseMode::EigenbasisDavies,
            axis: PauliAxis::Z,
            rate: 1e-3,
            spectral_density: SpectralDensity::default(),
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            mode: NoiseMode::None,
            rate: 0.0,
            ..Self::default()
        }
    }

    pub fn davies(rate: f64, spectral_density: SpectralDensity) -> Self {
        Self {
            mode: NoiseMode::EigenbasisDavies,
            rate,
            spectral_density,
            ..Self::default()
        }
    }

    pub fn lab_frame(rate: f64, axis: PauliAxis) -> Self {
        Self {
            mode: NoiseMode::LabFrame,
            axis,
            rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(NoiseError::InvalidSpec(format!("rate γ = {} must be ≥ 0", self.rate)));
        }
        if self.mode == NoiseMode::EigenbasisDavies {
            self.spectral_density.validate()?;
        }
        Ok(())
    }

    /// True when the generator has no dissipative part.
    pub fn is_closed(&self) -> bool {
        self.mode == NoiseMode::None || self.rate == 0.0
    }
}

/// Transition rates between instantaneous eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    /// `rates[(n, m)]` is the rate for `n → m` in 1/μs.
    rates: DMatrix<f64>,
    /// Level index to degenerate-block index.
    blocks: Vec<usize>,
}

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[(from, to)]
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    /// Total rate out of level `n`.
    pub fn escape_rate(&self, n: usize) -> f64 {
        self.rates.row(n).sum()
    }

    pub fn block_of(&self, level: usize) -> usize {
        self.blocks[level]
    }

    /// Rate summed over all members of the source and target blocks.
    pub fn block_rate(&self, from_block: usize, to_block: usize) -> f64 {
        let members = |b| self.blocks.iter().enumerate().filter(move |(_, &x)| x == b).map(|(i, _)| i);
        members(from_block)
            .flat_map(|n| members(to_block).map(move |m| (n, m)))
            .map(|(n, m)| self.rates[(n, m)])
            .sum()
    }

    /// Classical master-equation generator `G` with `dp/dt = G p`.
    pub fn generator(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut g = self.rates.transpose();
        for n in 0..d {
            g[(n, n)] = -self.escape_rate(n);
        }
        g
    }
}

/// Coupling operators `σ_j^(axis)` for every qubit.
pub(crate) fn coupling_operators(n_qubits: usize, axis: PauliAxis) -> Result<Vec<CMatrix>> {
    (1..=n_qubits)
        .map(|j| Ok(pauli(axis, j, n_qubits)?.into_matrix()))
        .collect()
}

/// `rates[n][m] = γ Σ_j |⟨φ_m|A_j|φ_n⟩|² S(E_n − E_m)` with `A_j = σ_j^(axis)`.
///
/// Levels whose energies agree within [`DEGENERACY_TOL`] form a block; rates
/// inside a block are zero.
pub fn davies_rate_matrix(sys: &EigenSystem, spec: &NoiseSpec) -> Result<RateMatrix> {
    if spec.mode != NoiseMode::EigenbasisDavies {
        return Err(NoiseError::WrongMode {
            expected: NoiseMode::EigenbasisDavies,
            got: spec.mode,
        });
    }
    spec.validate()?;
    let couplings = coupling_operators(sys.n_qubits(), spec.axis)?;
    davies_rates_with(sys, &couplings, spec)
}

pub(crate) fn degenerate_blocks(energies: &[f64]) -> Result<Vec<usize>> {
    let mut blocks = Vec::with_capacity(energies.len());
    let mut current = 0usize;
    for (i, &e) in energies.iter().enumerate() {
        if !e.is_finite() {
            return Err(NoiseError::UnsortedSpectrum(i));
        }
        if i > 0 {
            let step = e - energies[i - 1];
            if step < 0.0 {
                return Err(NoiseError::UnsortedSpectrum(i));
            }
            if step >= DEGENERACY_TOL {
                current += 1;
            }
        }
        blocks.push(current);
    }
    Ok(blocks)
}

pub(crate) fn davies_rates_with(
    sys: &EigenSystem,
    couplings: &[CMatrix],
    spec: &NoiseSpec,
) -> Result<RateMatrix> {
    let energies = sys.energies();
    let blocks = degenerate_blocks(energies)?;
    let d = energies.len();
    let v = sys.vectors();
    let mut weights = DMatrix::<f64>::zeros(d, d);
    for a in couplings {
        let rotated = adj_mul(v, &mul(a, v));
        for n in 0..d {
            for m in 0..d {
                weights[(n, m)] += rotated[(m, n)].norm_sqr();
            }
        }
    }
    let mut rates = DMatrix::<f64>::zeros(d, d);
    for n in 0..d {
        for m in 0..d {
            if blocks[n] == blocks[m] {
                continue;
            }
            let s = spec.spectral_density.eval(energies[n] - energies[m]);
            rates[(n, m)] = spec.rate * weights[(n, m)] * s;
        }
    }
    Ok(RateMatrix { rates, blocks })
}

/// `√γ · σ_j^(axis)` for each qubit.
pub fn lab_frame_dissipators(params: &ModelParams, spec: &NoiseSpec) -> Result<Vec<CMatrix>> {
    if spec.mode != NoiseMode::LabFrame {
        return Err(NoiseError::WrongMode {
            expected: NoiseMode::LabFrame,
            got: spec.mode,
        });
    }
    spec.validate()?;
    let amp = C64::new(spec.rate.sqrt(), 0.0);
    Ok(coupling_operators(params.n_qubits, spec.axis)?
        .into_iter()
        .map(|m| m * amp)
        .collect())
}
