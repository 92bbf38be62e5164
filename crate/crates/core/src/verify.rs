//! Reference parameter sets and a self-check suite of physical invariants.

use std::f64::consts::PI;

use crate::atom::{rotating_hamiltonian, Decoherence, DriveSet};
use crate::error::Result;
use crate::fluxonium::{spectrum_at, FluxoniumParams};
use crate::inout::{homodyne_signal, output_amplitude, FieldAmplitude};
use crate::lindblad::{
    build_liouvillian, evolve, steady_state, DensityMatrix, HERMITIAN_TOL, POSITIVITY_TOL, SPECTRAL_TOL, TRACE_TOL,
};
use crate::numerics::C64;
use crate::spectroscopy::{analytic_rho31, sweep_detuning, uniform_grid, AnalyticInputs, SpectrumTable};

/// Largest `|ρ23|` accepted by the reduced model check on the reference sweeps.
pub const RHO23_LIMIT: f64 = 0.1;

/// `γ13 = 1`, `γ12 = γ23 = 0.1`, no dephasing.
pub fn reference_decoherence() -> Decoherence {
    Decoherence::decay(0.1, 1.0, 0.1).expect("valid rates")
}

/// All three drives on: `Ω13 = Ω12 = 0.2`, `Ω23 = 1`, `δ23 = 0`, zero phases.
pub fn eita_drives() -> DriveSet {
    DriveSet::real(0.2, 0.2, 1.0, 0.0, 0.0).expect("valid drives")
}

/// Probe and pump only (`Ω12 = 0`).
pub fn eit_drives() -> DriveSet {
    DriveSet::real(0.0, 0.2, 1.0, 0.0, 0.0).expect("valid drives")
}

/// Two-photon path only (`Ω13 = 0`).
pub fn lwi_drives() -> DriveSet {
    DriveSet::real(0.2, 0.0, 1.0, 0.0, 0.0).expect("valid drives")
}

/// Device parameters of a typical fluxonium, in GHz.
pub fn example_fluxonium() -> FluxoniumParams {
    FluxoniumParams::new(9.0, 2.5, 0.52, 100).expect("valid device")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    fn from_result(name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

/// Worst violation of the density-matrix invariants over a set of states:
/// (Hermitian defect, trace error, most negative eigenvalue).
pub fn state_defects<'a>(states: impl IntoIterator<Item = &'a DensityMatrix>) -> (f64, f64, f64) {
    states.into_iter().fold((0.0, 0.0, f64::INFINITY), |(h, t, e), rho| {
        let m = rho.matrix();
        (
            h.max(m.hermitian_defect()),
            t.max((m.trace() - C64::new(1.0, 0.0)).norm()),
            e.min(rho.min_eigenvalue()),
        )
    })
}

fn states_ok(defects: (f64, f64, f64)) -> bool {
    defects.0 <= HERMITIAN_TOL && defects.1 <= TRACE_TOL && defects.2 >= -POSITIVITY_TOL
}

fn reference_sweeps(grid: &[f64]) -> Result<Vec<(&'static str, SpectrumTable)>> {
    let dec = reference_decoherence();
    Ok(vec![
        ("EIT", sweep_detuning(&eit_drives(), &dec, grid)?),
        ("LWI", sweep_detuning(&lwi_drives(), &dec, grid)?),
        ("EITA", sweep_detuning(&eita_drives(), &dec, grid)?),
    ])
}

/// Largest difference in populations and in the probe coherence referenced
/// to the probe phase, `ρ31·e^{iφ13}`.
pub fn max_table_diff(a: &SpectrumTable, b: &SpectrumTable) -> f64 {
    let ra = C64::from_polar(1.0, a.drives().d13().phase());
    let rb = C64::from_polar(1.0, b.drives().d13().phase());
    a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| {
            (p.rho31 * ra - q.rho31 * rb)
                .norm()
                .max((p.pop1 - q.pop1).abs())
                .max((p.pop2 - q.pop2).abs())
                .max((p.pop3 - q.pop3).abs())
        })
        .fold(0.0, f64::max)
}

/// Runs every check and returns one result per invariant.
pub fn run_invariant_suite() -> Vec<CheckResult> {
    let dec = reference_decoherence();
    let grid = uniform_grid(-2.0, 2.0, 41).expect("valid grid");
    let mut out = Vec::new();

    let sweeps = reference_sweeps(&grid);
    out.push(CheckResult::from_result(
        "steady-state invariants",
        (|| {
            let sweeps = sweeps.clone()?;
            let mut states = Vec::new();
            for (_, t) in &sweeps {
                for p in t.points() {
                    states.push(crate::spectroscopy::probe_state(t.drives(), &dec, p.delta13)?);
                }
            }
            let d = state_defects(&states);
            Ok((
                states_ok(d),
                format!("hermitian {:.1e}, trace {:.1e}, min eig {:.1e}", d.0, d.1, d.2),
            ))
        })(),
    ));

    out.push(CheckResult::from_result(
        "Liouvillian trace and spectrum",
        (|| {
            let mut worst_trace = 0.0f64;
            let mut worst_re = f64::NEG_INFINITY;
            let mut near_zero_ok = true;
            for d in [eit_drives(), lwi_drives(), eita_drives()] {
                for &x in &[-1.0, 0.0, 0.7] {
                    let l = build_liouvillian(&rotating_hamiltonian(&d.with_probe_detuning(x)), &dec)?;
                    worst_trace = worst_trace.max(l.trace_defect());
                    let ev = l.eigenvalues()?;
                    worst_re = ev.iter().map(|z| z.re).fold(worst_re, f64::max);
                    near_zero_ok &= ev.iter().filter(|z| z.norm() <= SPECTRAL_TOL).count() == 1;
                }
            }
            let passed = worst_trace <= SPECTRAL_TOL && worst_re <= SPECTRAL_TOL && near_zero_ok;
            Ok((
                passed,
                format!(
                    "trace defect {worst_trace:.1e}, max Re(lambda) {worst_re:.1e}, unique zero mode {near_zero_ok}"
                ),
            ))
        })(),
    ));

    out.push(CheckResult::from_result(
        "steady state vs time evolution",
        (|| {
            let d = eita_drives().with_probe_detuning(0.3);
            let l = build_liouvillian(&rotating_hamiltonian(&d), &dec)?;
            let ss = steady_state(&l)?;
            let ev = evolve(&l, &DensityMatrix::maximally_mixed(), 1000.0, 0.01)?;
            let diff = ss.matrix().max_abs_diff(ev.matrix());
            Ok((diff <= 1e-8, format!("max |difference| {diff:.1e}")))
        })(),
    ));

    out.push(CheckResult::from_result(
        "populations and inversion",
        (|| {
            let sweeps = sweeps.clone()?;
            let mut worst_sum = 0.0f64;
            let mut min_inv = f64::INFINITY;
            for (_, t) in &sweeps {
                for p in t.points() {
                    worst_sum = worst_sum.max((p.pop1 + p.pop2 + p.pop3 - 1.0).abs());
                    min_inv = min_inv.min(p.inversion);
                }
            }
            Ok((
                worst_sum <= 1e-9 && min_inv > 0.0,
                format!("population sum error {worst_sum:.1e}, min inversion {min_inv:.4}"),
            ))
        })(),
    ));

    out.push(CheckResult::from_result(
        "2-3 coherence stays small",
        (|| {
            let sweeps = sweeps.clone()?;
            let m = sweeps
                .iter()
                .flat_map(|(_, t)| t.points().iter().map(|p| p.rho23.norm()))
                .fold(0.0, f64::max);
            Ok((m < RHO23_LIMIT, format!("max |rho23| {m:.4} (limit {RHO23_LIMIT})")))
        })(),
    ));

    out.push(CheckResult::from_result(
        "gauge invariance",
        (|| {
            let base = eita_drives().with_phases(PI / 3.0, 0.0, 0.0);
            // φ12 → φ12 + a - b, φ13 → φ13 + a - c, φ23 → φ23 + b - c
            let (a, b, c) = (0.4, -1.1, 2.3);
            let moved = eita_drives().with_phases(PI / 3.0 + a - b, a - c, b - c);
            let diff = max_table_diff(
                &sweep_detuning(&base, &dec, &grid)?,
                &sweep_detuning(&moved, &dec, &grid)?,
            );
            Ok((diff <= 1e-10, format!("max difference {diff:.1e}")))
        })(),
    ));

    out.push(CheckResult::from_result(
        "reduced-model mirror identity",
        (|| {
            let mut worst = 0.0f64;
            for k in 0..50 {
                let x = -3.0 + 0.12 * k as f64;
                let mut p = AnalyticInputs::from_model(&eita_drives(), &dec, [0.8, 0.15, 0.05]);
                let a0 = analytic_rho31(&p, x)?;
                p.phi12 = PI;
                let api = analytic_rho31(&p, -x)?;
                worst = worst.max((api + a0.conj()).norm());
            }
            Ok((worst <= 1e-12, format!("max deviation {worst:.1e}")))
        })(),
    ));

    out.push(CheckResult::from_result(
        "fluxonium harmonic limit and flux symmetry",
        (|| {
            let h = FluxoniumParams::new(0.0, 2.5, 0.52, 40)?;
            let s = spectrum_at(&h, 0.1)?;
            let w = h.plasma_frequency();
            let harm = (s.w1() - w).abs().max((s.w2() - 2.0 * w).abs()) / w;
            let p = FluxoniumParams::new(9.0, 2.5, 0.52, 60)?;
            let (a, b) = (spectrum_at(&p, 0.13)?, spectrum_at(&p, -0.13)?);
            let sym = (a.w1() - b.w1())
                .abs()
                .max((a.w2() - b.w2()).abs())
                .max((a.t12 - b.t12).abs())
                .max((a.t13 - b.t13).abs())
                .max((a.t23 - b.t23).abs());
            Ok((
                harm <= 1e-9 && sym <= 1e-9,
                format!("harmonic rel. error {harm:.1e}, +/-flux difference {sym:.1e}"),
            ))
        })(),
    ));

    out.push(CheckResult::from_result(
        "input-output identities",
        (|| {
            let a_in = FieldAmplitude::real(0.5)?;
            let mut worst = 0.0f64;
            for (_, t) in sweeps.clone()? {
                for p in t.points() {
                    let out = output_amplitude(a_in, dec.gamma13, p.rho31)?;
                    let (i, q) = (homodyne_signal(out, 0.0), homodyne_signal(out, PI / 2.0));
                    worst = worst
                        .max((i * i + q * q - out.value().norm_sqr()).abs())
                        .max(((out.value() - a_in.value()) / dec.gamma13.sqrt() - p.rho31).norm());
                }
            }
            Ok((worst <= 1e-12, format!("max deviation {worst:.1e}")))
        })(),
    ));

    out
}
