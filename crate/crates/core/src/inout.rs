//! Reflected probe field and homodyne readout.
//!
//! The atom couples to the line only through the 1-3 transition, so the
//! output field is `a_out = a_in + √γ13·⟨σ13⟩` with `⟨σ13⟩ = ρ31`. Only
//! expectation values are modelled.

use std::fmt::Write as _;

use log::warn;

use crate::atom::{rotating_hamiltonian, Decoherence, DriveSet, LevelFrequencies};
use crate::error::{Error, Result};
use crate::lindblad::{build_liouvillian, default_time_step, evolve_sampled, DensityMatrix};
use crate::numerics::C64;
use crate::spectroscopy::{sweep_detuning, write_metadata, SpectrumTable};

/// Required ratio between the smallest transition-frequency separation and
/// the largest decay rate for the three line modes to be independent.
pub const MODE_SEPARATION_FACTOR: f64 = 10.0;

/// Photon-flux amplitude of a travelling field, in `√rate` units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldAmplitude(C64);

impl FieldAmplitude {
    pub fn new(value: C64) -> Result<Self> {
        if value.re.is_finite() && value.im.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!("non-finite field amplitude {value}")))
        }
    }

    pub fn real(value: f64) -> Result<Self> {
        Self::new(C64::new(value, 0.0))
    }

    pub fn value(&self) -> C64 {
        self.0
    }
}

/// `a_in + √γ13·ρ31`.
pub fn output_amplitude(a_in: FieldAmplitude, gamma13: f64, rho31: C64) -> Result<FieldAmplitude> {
    if !(gamma13.is_finite() && gamma13 >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma13 must be >= 0, got {gamma13}")));
    }
    FieldAmplitude::new(a_in.0 + rho31 * gamma13.sqrt())
}

/// Quadrature `Re(a_out·e^{-iθ})` selected by the local-oscillator phase `θ`.
pub fn homodyne_signal(a_out: FieldAmplitude, lo_phase: f64) -> f64 {
    (a_out.0 * C64::from_polar(1.0, -lo_phase)).re
}

/// Probe Rabi frequency `2·√γ13·|a_in|` implied by an input amplitude.
///
/// The link between the drive strength and the line amplitude depends on
/// the normalisation of the input field, so this is a convention that
/// callers must opt into; elsewhere `Ω13` and `a_in` are independent.
pub fn probe_rabi_from_input(gamma13: f64, a_in: FieldAmplitude) -> f64 {
    2.0 * gamma13.max(0.0).sqrt() * a_in.0.norm()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionPoint {
    pub delta13: f64,
    pub a_out: FieldAmplitude,
    /// quadrature at `θ = 0`
    pub homodyne_i: f64,
    /// quadrature at `θ = π/2`
    pub homodyne_q: f64,
}

impl ReflectionPoint {
    pub fn new(delta13: f64, a_out: FieldAmplitude) -> Self {
        Self {
            delta13,
            a_out,
            homodyne_i: homodyne_signal(a_out, 0.0),
            homodyne_q: homodyne_signal(a_out, std::f64::consts::FRAC_PI_2),
        }
    }
}

fn require_line_coupling(dec: &Decoherence) -> Result<()> {
    if dec.gamma13 > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateSteadyState(
            "gamma13 = 0: the probe transition is decoupled from the line".into(),
        ))
    }
}

/// Output field computed from an existing probe spectrum.
pub fn reflection_from_table(table: &SpectrumTable, a_in: FieldAmplitude) -> Result<Vec<ReflectionPoint>> {
    let g13 = table.decoherence().gamma13;
    require_line_coupling(table.decoherence())?;
    table
        .points()
        .iter()
        .map(|p| Ok(ReflectionPoint::new(p.delta13, output_amplitude(a_in, g13, p.rho31)?)))
        .collect()
}

/// Steady-state reflected field over a probe-detuning grid.
pub fn reflection_spectrum(
    drives: &DriveSet,
    dec: &Decoherence,
    a_in: FieldAmplitude,
    grid: &[f64],
) -> Result<Vec<ReflectionPoint>> {
    require_line_coupling(dec)?;
    reflection_from_table(&sweep_detuning(drives, dec, grid)?, a_in)
}

/// CSV with header `delta13,re_aout,im_aout,homodyne_I,homodyne_Q`.
pub fn reflection_csv(drives: &DriveSet, dec: &Decoherence, a_in: FieldAmplitude, rows: &[ReflectionPoint]) -> String {
    let mut s = String::new();
    write_metadata(&mut s, drives, dec);
    let _ = writeln!(s, "# a_in={}", a_in.0);
    s.push_str("delta13,re_aout,im_aout,homodyne_I,homodyne_Q\n");
    for r in rows {
        let a = r.a_out.0;
        let _ = writeln!(s, "{},{},{},{},{}", r.delta13, a.re, a.im, r.homodyne_i, r.homodyne_q);
    }
    s
}

/// Reflected field while the atom relaxes from `rho0`, at the given
/// non-decreasing sample times and at the probe detuning carried by `drives`.
pub fn transient_reflection(
    drives: &DriveSet,
    dec: &Decoherence,
    rho0: &DensityMatrix,
    a_in: FieldAmplitude,
    times: &[f64],
    dt: Option<f64>,
) -> Result<Vec<(f64, FieldAmplitude)>> {
    require_line_coupling(dec)?;
    let l = build_liouvillian(&rotating_hamiltonian(drives), dec)?;
    let dt = dt.unwrap_or_else(|| default_time_step(&l));
    let states = evolve_sampled(&l, rho0, times, dt)?;
    times
        .iter()
        .zip(&states)
        .map(|(&t, rho)| Ok((t, output_amplitude(a_in, dec.gamma13, rho.rho31())?)))
        .collect()
}

/// Checks that the three transition frequencies are separated by much more
/// than the largest decay rate. Violations are logged and returned as
/// messages; they are not errors.
pub fn mode_separation_warnings(levels: &LevelFrequencies, dec: &Decoherence) -> Vec<String> {
    let w21 = levels.transition(2, 1);
    let w31 = levels.transition(3, 1);
    let w32 = levels.transition(3, 2);
    let limit = MODE_SEPARATION_FACTOR * dec.max_rate();
    let pairs = [
        ("w21", w21, "w31", w31),
        ("w21", w21, "w32", w32),
        ("w31", w31, "w32", w32),
    ];
    let mut out = Vec::new();
    for (na, a, nb, b) in pairs {
        let sep = (a - b).abs();
        if sep < limit {
            let msg = format!(
                "|{na} - {nb}| = {sep} is below {MODE_SEPARATION_FACTOR}x the largest decay rate; \
                 the line modes are not independent"
            );
            warn!("{msg}");
            out.push(msg);
        }
    }
    out
}
