//! TOML run configuration.
//!
//! Parsing is strict: unknown keys are errors. Every value is validated by
//! the library type that owns it before a run starts.

use std::f64::consts::PI;
use std::str::FromStr;

use clap::ValueEnum;
use delta_eita::atom::{Decoherence, Drive, DriveSet, LevelFrequencies, Units};
use delta_eita::fluxonium::FluxoniumParams;
use delta_eita::spectroscopy::{uniform_grid, DEFAULT_GRID};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Steady,
    Sweep,
    PhaseSweep,
    Evolve,
    Fluxonium,
    Reflect,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
pub enum UnitsFlag {
    #[default]
    #[serde(rename = "gamma13")]
    #[value(name = "gamma13")]
    Gamma13,
    #[serde(rename = "MHz")]
    #[value(name = "MHz")]
    MHz,
}

impl From<UnitsFlag> for Units {
    fn from(u: UnitsFlag) -> Self {
        match u {
            UnitsFlag::Gamma13 => Units::Gamma13,
            UnitsFlag::MHz => Units::MHz,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    #[serde(default)]
    pub units: UnitsFlag,
    #[serde(default)]
    pub gamma12: f64,
    #[serde(default = "one")]
    pub gamma13: f64,
    #[serde(default)]
    pub gamma23: f64,
    #[serde(default)]
    pub gamma_phi2: f64,
    #[serde(default)]
    pub gamma_phi3: f64,
    /// Optional bare level frequencies `[w1, w2, w3]`, used by the
    /// mode-separation check of the reflect mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<[f64; 3]>,
}

fn one() -> f64 {
    1.0
}

impl Default for AtomSection {
    fn default() -> Self {
        Self {
            units: UnitsFlag::Gamma13,
            gamma12: 0.0,
            gamma13: 1.0,
            gamma23: 0.0,
            gamma_phi2: 0.0,
            gamma_phi3: 0.0,
            levels: None,
        }
    }
}

/// The 1-2 drive has no detuning key: δ12 = δ13 - δ23 is always derived.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpDrive {
    #[serde(default)]
    pub rabi: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetunedDrive {
    #[serde(default)]
    pub rabi: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivesSection {
    #[serde(default)]
    pub d12: PumpDrive,
    #[serde(default)]
    pub d13: DetunedDrive,
    #[serde(default)]
    pub d23: DetunedDrive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_hi")]
    pub hi: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Loop phases for the phase-sweep mode.
    #[serde(default = "default_phases")]
    pub phases: Vec<f64>,
}

fn default_lo() -> f64 {
    DEFAULT_GRID.0
}

fn default_hi() -> f64 {
    DEFAULT_GRID.1
}

fn default_points() -> usize {
    DEFAULT_GRID.2
}

fn default_phases() -> Vec<f64> {
    vec![0.0, PI / 2.0, PI, 1.5 * PI]
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lo: default_lo(),
            hi: default_hi(),
            points: default_points(),
            phases: default_phases(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    Ground,
    Mixed,
    Excited,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub duration: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Integration step; defaults to `1e-3/max(1, ‖L‖∞)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub initial: InitialState,
}

fn default_samples() -> usize {
    101
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectSection {
    #[serde(default = "one")]
    pub a_in_re: f64,
    #[serde(default)]
    pub a_in_im: f64,
    /// Opt-in convention `Ω13 = 2·√γ13·|a_in|`, replacing the configured probe strength.
    #[serde(default)]
    pub probe_from_input: bool,
}

impl Default for ReflectSection {
    fn default() -> Self {
        Self {
            a_in_re: 1.0,
            a_in_im: 0.0,
            probe_from_input: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxoniumSection {
    pub ej: f64,
    pub ec: f64,
    pub el: f64,
    #[serde(default = "default_basis")]
    pub basis_size: usize,
    #[serde(default)]
    pub flux_lo: f64,
    #[serde(default = "default_flux_hi")]
    pub flux_hi: f64,
    #[serde(default = "default_flux_points")]
    pub flux_points: usize,
    /// Reference decay rate (MHz) at `ref_flux`, scaled to other transitions as `|t_ij|²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ref: Option<f64>,
    #[serde(default)]
    pub ref_flux: f64,
    /// Bracket searched for the flux where `t12 = t23`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_bracket: Option<[f64; 2]>,
}

fn default_basis() -> usize {
    delta_eita::fluxonium::DEFAULT_BASIS
}

fn default_flux_hi() -> f64 {
    0.5
}

fn default_flux_points() -> usize {
    51
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub atom: AtomSection,
    #[serde(default)]
    pub drives: DrivesSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflect: Option<ReflectSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluxonium: Option<FluxoniumSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl FromStr for RunConfig {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        parse_config(s)
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
    reject_delta12(&raw)?;
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// δ12 has no key of its own; any attempt to set it is a validation error
/// rather than a generic unknown-key error.
fn reject_delta12(raw: &toml::Table) -> Result<(), CliError> {
    let derived = || CliError::Validation("δ12 is derived, not settable (δ12 = δ13 - δ23)".into());
    let has = |t: &toml::Table, k: &str| t.contains_key(k);
    if has(raw, "delta12") {
        return Err(derived());
    }
    for section in ["atom", "drives"] {
        if let Some(t) = raw.get(section).and_then(|v| v.as_table()) {
            if has(t, "delta12") {
                return Err(derived());
            }
        }
    }
    if let Some(d12) = raw
        .get("drives")
        .and_then(|v| v.as_table())
        .and_then(|t| t.get("d12"))
        .and_then(|v| v.as_table())
    {
        if has(d12, "detuning") || has(d12, "delta12") {
            return Err(derived());
        }
    }
    Ok(())
}

fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

impl RunConfig {
    pub fn units(&self) -> Units {
        self.atom.units.into()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.decoherence()?;
        self.drive_set()?;
        if matches!(self.mode, Mode::Sweep | Mode::PhaseSweep | Mode::Reflect) {
            self.grid()?;
        }
        if self.mode == Mode::PhaseSweep && self.sweep.phases.is_empty() {
            return Err(CliError::Validation("phase-sweep needs at least one phase".into()));
        }
        if self.sweep.phases.iter().any(|p| !p.is_finite()) {
            return Err(CliError::Validation("phases must be finite".into()));
        }
        if let Some(w) = self.output.workers {
            if w == 0 {
                return Err(CliError::Validation("workers must be >= 1".into()));
            }
        }
        if let Some(levels) = self.atom.levels {
            LevelFrequencies::new(levels[0], levels[1], levels[2]).map_err(validation)?;
        }
        match self.mode {
            Mode::Evolve => {
                let e = self
                    .evolve
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("mode evolve needs an [evolve] section".into()))?;
                if !(e.duration.is_finite() && e.duration >= 0.0) {
                    return Err(CliError::Validation("evolve.duration must be >= 0".into()));
                }
                if e.samples < 2 {
                    return Err(CliError::Validation("evolve.samples must be >= 2".into()));
                }
                if let Some(dt) = e.dt {
                    if !(dt.is_finite() && dt > 0.0) {
                        return Err(CliError::Validation("evolve.dt must be > 0".into()));
                    }
                }
            }
            Mode::Fluxonium => {
                let f = self
                    .fluxonium
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("mode fluxonium needs a [fluxonium] section".into()))?;
                self.fluxonium_params()?;
                self.flux_grid()?;
                if let Some(g) = f.gamma_ref {
                    if !(g.is_finite() && g > 0.0) {
                        return Err(CliError::Validation("fluxonium.gamma_ref must be > 0".into()));
                    }
                }
                if let Some([lo, hi]) = f.bias_bracket {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(CliError::Validation(
                            "fluxonium.bias_bracket must satisfy lo < hi".into(),
                        ));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn decoherence(&self) -> Result<Decoherence, CliError> {
        let u = self.units();
        let a = &self.atom;
        Decoherence::new(
            u.to_internal(a.gamma12),
            u.to_internal(a.gamma13),
            u.to_internal(a.gamma23),
            u.to_internal(a.gamma_phi2),
            u.to_internal(a.gamma_phi3),
        )
        .map_err(validation)
    }

    pub fn drive_set(&self) -> Result<DriveSet, CliError> {
        let u = self.units();
        let d = &self.drives;
        let d13 = Drive::new(u.to_internal(d.d13.rabi), d.d13.phase, u.to_internal(d.d13.detuning));
        let d23 = Drive::new(u.to_internal(d.d23.rabi), d.d23.phase, u.to_internal(d.d23.detuning));
        DriveSet::new(
            u.to_internal(d.d12.rabi),
            d.d12.phase,
            d13.map_err(validation)?,
            d23.map_err(validation)?,
        )
        .map_err(validation)
    }

    pub fn level_frequencies(&self) -> Option<LevelFrequencies> {
        let u = self.units();
        self.atom
            .levels
            .and_then(|w| LevelFrequencies::new(u.to_internal(w[0]), u.to_internal(w[1]), u.to_internal(w[2])).ok())
    }

    /// Probe-detuning grid in internal units.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let u = self.units();
        let s = &self.sweep;
        uniform_grid(u.to_internal(s.lo), u.to_internal(s.hi), s.points).map_err(validation)
    }

    pub fn fluxonium_params(&self) -> Result<FluxoniumParams, CliError> {
        let f = self
            .fluxonium
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [fluxonium] section".into()))?;
        FluxoniumParams::new(f.ej, f.ec, f.el, f.basis_size).map_err(validation)
    }

    pub fn flux_grid(&self) -> Result<Vec<f64>, CliError> {
        let f = self
            .fluxonium
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [fluxonium] section".into()))?;
        if f.flux_points == 1 {
            return Ok(vec![f.flux_lo]);
        }
        uniform_grid(f.flux_lo, f.flux_hi, f.flux_points).map_err(validation)
    }

    /// Normalised TOML with every default spelled out.
    pub fn dump(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
