//! Drive, decoherence and level parameters of the Δ-configuration
//! three-level atom, and the Hamiltonians built from them.
//!
//! Levels are labelled 1, 2, 3 in order of increasing energy and stored at
//! matrix indices 0, 1, 2. `σ_ij = |i⟩⟨j|` is the matrix with a single 1 at
//! row `i-1`, column `j-1`.
//!
//! Phase convention: the drive on the `j → i` transition (`i > j`) enters the
//! rotating-frame Hamiltonian as `-½·Ω_ij·e^{-iφ_ij}·σ_ij + h.c.`. With this
//! sign the gauge-invariant loop phase `Φ = φ12 + φ23 - φ13` produces the
//! amplification window at `Φ = 3π/2` and ordinary absorption at `Φ = π/2`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};

/// How rates, Rabi frequencies and detunings in user input are to be read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Units {
    /// Dimensionless, in units of γ13 (used as given).
    #[default]
    Gamma13,
    /// Ordinary frequency in MHz (`rate / 2π`); converted to angular MHz internally.
    MHz,
}

impl Units {
    pub fn to_internal(self, value: f64) -> f64 {
        match self {
            Units::Gamma13 => value,
            Units::MHz => value * TAU,
        }
    }

    pub fn to_user(self, value: f64) -> f64 {
        match self {
            Units::Gamma13 => value,
            Units::MHz => value / TAU,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Units::Gamma13 => "gamma13",
            Units::MHz => "MHz",
        }
    }
}

impl std::str::FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma13" => Ok(Units::Gamma13),
            "MHz" | "mhz" => Ok(Units::MHz),
            other => Err(Error::InvalidParameter(format!(
                "unknown units '{other}' (expected gamma13 or MHz)"
            ))),
        }
    }
}

/// One coherent drive: Rabi magnitude, phase and detuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drive {
    magnitude: f64,
    phase: f64,
    detuning: f64,
}

impl Drive {
    /// `phase` is folded into `[0, 2π)`.
    pub fn new(magnitude: f64, phase: f64, detuning: f64) -> Result<Self> {
        if !(magnitude.is_finite() && phase.is_finite() && detuning.is_finite()) {
            return Err(Error::InvalidParameter("drive parameters must be finite".into()));
        }
        if magnitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Rabi magnitude must be >= 0, got {magnitude}"
            )));
        }
        Ok(Self {
            magnitude,
            phase: fold_phase(phase),
            detuning,
        })
    }

    pub fn off() -> Self {
        Self {
            magnitude: 0.0,
            phase: 0.0,
            detuning: 0.0,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    /// Complex Rabi frequency `Ω·e^{-iφ}` as it multiplies `σ_ij` (`i > j`).
    pub fn rabi(&self) -> C64 {
        Complex64::from_polar(self.magnitude, -self.phase)
    }

    pub fn with_phase(self, phase: f64) -> Self {
        Self {
            phase: fold_phase(phase),
            ..self
        }
    }

    pub fn with_magnitude(self, magnitude: f64) -> Result<Self> {
        Self::new(magnitude, self.phase, self.detuning)
    }
}

fn fold_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// The three drives. The 1↔2 detuning is always derived as `δ13 - δ23`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSet {
    d12: Drive,
    d13: Drive,
    d23: Drive,
}

impl DriveSet {
    /// Builds the set from the 1↔3 and 2↔3 drives and the 1↔2 magnitude and
    /// phase; the 1↔2 detuning is not an input.
    pub fn new(omega12: f64, phi12: f64, d13: Drive, d23: Drive) -> Result<Self> {
        let d12 = Drive::new(omega12, phi12, derive_delta12(d13.detuning, d23.detuning))?;
        Ok(Self { d12, d13, d23 })
    }

    /// Real drives with the given magnitudes, probe detuning `delta13` and pump detuning `delta23`.
    pub fn real(omega12: f64, omega13: f64, omega23: f64, delta13: f64, delta23: f64) -> Result<Self> {
        Self::new(
            omega12,
            0.0,
            Drive::new(omega13, 0.0, delta13)?,
            Drive::new(omega23, 0.0, delta23)?,
        )
    }

    pub fn d12(&self) -> &Drive {
        &self.d12
    }

    pub fn d13(&self) -> &Drive {
        &self.d13
    }

    pub fn d23(&self) -> &Drive {
        &self.d23
    }

    /// Copy with a new probe detuning; δ12 is re-derived.
    pub fn with_probe_detuning(&self, delta13: f64) -> Self {
        let d13 = Drive {
            detuning: delta13,
            ..self.d13
        };
        let d12 = Drive {
            detuning: derive_delta12(delta13, self.d23.detuning),
            ..self.d12
        };
        Self {
            d12,
            d13,
            d23: self.d23,
        }
    }

    /// Copy with new phases `(φ12, φ13, φ23)`.
    pub fn with_phases(&self, phi12: f64, phi13: f64, phi23: f64) -> Self {
        Self {
            d12: self.d12.with_phase(phi12),
            d13: self.d13.with_phase(phi13),
            d23: self.d23.with_phase(phi23),
        }
    }

    /// Copy with new Rabi magnitudes `(Ω12, Ω13, Ω23)`.
    pub fn with_magnitudes(&self, omega12: f64, omega13: f64, omega23: f64) -> Result<Self> {
        Ok(Self {
            d12: self.d12.with_magnitude(omega12)?,
            d13: self.d13.with_magnitude(omega13)?,
            d23: self.d23.with_magnitude(omega23)?,
        })
    }
}

/// Decay rates γ_ij (|j⟩ → |i⟩, i < j) and pure-dephasing rates γφ2, γφ3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decoherence {
    pub gamma12: f64,
    pub gamma13: f64,
    pub gamma23: f64,
    pub gamma_phi2: f64,
    pub gamma_phi3: f64,
}

impl Decoherence {
    pub fn new(gamma12: f64, gamma13: f64, gamma23: f64, gamma_phi2: f64, gamma_phi3: f64) -> Result<Self> {
        let all = [gamma12, gamma13, gamma23, gamma_phi2, gamma_phi3];
        if all.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "decoherence rates must be finite and >= 0, got {all:?}"
            )));
        }
        if gamma12 == 0.0 && gamma13 == 0.0 {
            return Err(Error::InvalidParameter(
                "at least one of gamma12, gamma13 must be > 0 (no decay into level 1)".into(),
            ));
        }
        Ok(Self {
            gamma12,
            gamma13,
            gamma23,
            gamma_phi2,
            gamma_phi3,
        })
    }

    /// Decay only, no pure dephasing.
    pub fn decay(gamma12: f64, gamma13: f64, gamma23: f64) -> Result<Self> {
        Self::new(gamma12, gamma13, gamma23, 0.0, 0.0)
    }

    /// Coherence decay rate of ρ31, `Γ3 = (γ13 + γ23 + γφ3)/2`.
    pub fn big_gamma3(&self) -> f64 {
        0.5 * (self.gamma13 + self.gamma23 + self.gamma_phi3)
    }

    pub fn max_rate(&self) -> f64 {
        [
            self.gamma12,
            self.gamma13,
            self.gamma23,
            self.gamma_phi2,
            self.gamma_phi3,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Bare level frequencies `w1 < w2 < w3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelFrequencies {
    w: [f64; 3],
}

impl LevelFrequencies {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        if !(w1.is_finite() && w2.is_finite() && w3.is_finite()) || !(w1 < w2 && w2 < w3) {
            return Err(Error::InvalidParameter(format!(
                "level frequencies must satisfy w1 < w2 < w3, got ({w1}, {w2}, {w3})"
            )));
        }
        Ok(Self { w: [w1, w2, w3] })
    }

    pub fn level(&self, i: usize) -> f64 {
        self.w[i - 1]
    }

    /// Transition frequency `ω_i - ω_j` between levels `i > j` (1-based labels).
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.w[i - 1] - self.w[j - 1]
    }
}

/// δ12 implied by the time-independence condition of the rotating frame.
pub fn derive_delta12(delta13: f64, delta23: f64) -> f64 {
    delta13 - delta23
}

/// Loop phase `Φ = (φ12 + φ23 - φ13) mod 2π`.
pub fn global_phase(drives: &DriveSet) -> f64 {
    fold_phase(drives.d12.phase + drives.d23.phase - drives.d13.phase)
}

/// `(i, j, drive)` for the three driven transitions, `i > j`, 0-based indices.
fn transitions(drives: &DriveSet) -> [(usize, usize, &Drive); 3] {
    [(1, 0, &drives.d12), (2, 0, &drives.d13), (2, 1, &drives.d23)]
}

/// Time-independent rotating-frame Hamiltonian
/// `-δ13·σ33 - δ12·σ22 - ½ Σ_{i>j} (Ω_ij σ_ij + h.c.)`.
pub fn rotating_hamiltonian(drives: &DriveSet) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(3, 3);
    h[(1, 1)] = C64::new(-drives.d12.detuning, 0.0);
    h[(2, 2)] = C64::new(-drives.d13.detuning, 0.0);
    for (i, j, d) in transitions(drives) {
        let term = -0.5 * d.rabi();
        h[(i, j)] = term;
        h[(j, i)] = term.conj();
    }
    h
}

/// Lab-frame Hamiltonian
/// `Σ ω_i σ_ii - ½ Σ_{i>j} (Ω_ij e^{-i(ω_ij + δ_ij)t} σ_ij + h.c.)` at time `t`.
pub fn lab_hamiltonian(t: f64, drives: &DriveSet, levels: &LevelFrequencies) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(3, 3);
    for k in 0..3 {
        h[(k, k)] = C64::new(levels.w[k], 0.0);
    }
    for (i, j, d) in transitions(drives) {
        let carrier = levels.transition(i + 1, j + 1) + d.detuning;
        let term = -0.5 * d.rabi() * Complex64::from_polar(1.0, -carrier * t);
        h[(i, j)] = term;
        h[(j, i)] = term.conj();
    }
    h
}

/// Diagonal of the generator mapping lab-frame states to the rotating frame:
/// `U(t) = exp(i·diag(0, ω21 + δ12, ω31 + δ13)·t)`, `ρ_rot = U ρ_lab U†`.
pub fn frame_frequencies(drives: &DriveSet, levels: &LevelFrequencies) -> [f64; 3] {
    [
        0.0,
        levels.transition(2, 1) + drives.d12.detuning,
        levels.transition(3, 1) + drives.d13.detuning,
    ]
}
