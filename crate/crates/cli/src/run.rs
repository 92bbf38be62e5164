//! Executes a validated configuration and writes its CSV outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use delta_eita::atom::{Decoherence, DriveSet, Units};
use delta_eita::fluxonium::{find_balanced_bias, flux_sweep, flux_sweep_csv, scale_decay_rates, spectrum_at};
use delta_eita::inout::{
    mode_separation_warnings, probe_rabi_from_input, reflection_csv, reflection_spectrum, FieldAmplitude,
};
use delta_eita::lindblad::{build_liouvillian, default_time_step, evolve_sampled, DensityMatrix};
use delta_eita::spectroscopy::{
    find_peaks, population_inversion_scan, probe_state, sweep_detuning, sweep_phase, write_metadata, SpectrumTable,
};
use delta_eita::verify::run_invariant_suite;
use delta_eita::{atom::rotating_hamiltonian, C64};

use crate::config::{InitialState, Mode, RunConfig};
use crate::error::CliError;

/// What a run printed and whether it succeeded as a whole.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// Extra lines printed before the summary.
    pub details: Vec<String>,
    /// One-line summary.
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub ok: bool,
}

impl Outcome {
    fn new(summary: String, files: Vec<PathBuf>) -> Self {
        Self {
            details: Vec::new(),
            summary,
            files,
            ok: true,
        }
    }
}

/// Worker threads: explicit flag (or environment), then the config, then
/// the number of available cores.
pub fn worker_count(flag: Option<usize>, cfg: &RunConfig) -> usize {
    flag.or(cfg.output.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Runs `cfg` on a pool of `workers` threads, writing outputs under `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path, workers: usize) -> Result<Outcome, CliError> {
    cfg.validate()?;
    if workers == 0 {
        return Err(CliError::Validation("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    if cfg.mode != Mode::Verify {
        fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    }
    pool.install(|| match cfg.mode {
        Mode::Steady => steady(cfg, out_dir),
        Mode::Sweep => sweep(cfg, out_dir),
        Mode::PhaseSweep => phase_sweep(cfg, out_dir),
        Mode::Evolve => evolution(cfg, out_dir),
        Mode::Fluxonium => fluxonium(cfg, out_dir),
        Mode::Reflect => reflect(cfg, out_dir),
        Mode::Verify => Ok(verify()),
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn units_line(u: Units) -> String {
    match u {
        Units::Gamma13 => "# units=gamma13\n".into(),
        Units::MHz => "# units=MHz (rates and detunings below are angular, 2*pi*MHz; times in us)\n".into(),
    }
}

fn spectrum_csv(u: Units, table: &SpectrumTable) -> String {
    units_line(u) + &table.csv_string()
}

fn inputs(cfg: &RunConfig) -> Result<(DriveSet, Decoherence), CliError> {
    Ok((cfg.drive_set()?, cfg.decoherence()?))
}

fn steady(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let (drives, dec) = inputs(cfg)?;
    let u = cfg.units();
    let delta13 = drives.d13().detuning();
    let rho = probe_state(&drives, &dec, delta13)?;
    let mut s = units_line(u);
    write_metadata(&mut s, &drives, &dec);
    let _ = writeln!(s, "# delta13={delta13}");
    s.push_str("i,j,re,im\n");
    for i in 1..=3 {
        for j in 1..=3 {
            let z = rho.element(i, j);
            let _ = writeln!(s, "{i},{j},{},{}", z.re, z.im);
        }
    }
    let path = write_file(dir, "steady_state.csv", &s)?;
    let [p1, p2, p3] = rho.populations();
    let r31 = rho.rho31();
    let mut out = Outcome::new(
        format!(
            "steady: delta13={} rho31={:.6}{:+.6}i pops=[{p1:.6}, {p2:.6}, {p3:.6}] inversion={:.6} -> {}",
            u.to_user(delta13),
            r31.re,
            r31.im,
            p1 - p3,
            path.display()
        ),
        vec![path],
    );
    for i in 1..=3 {
        let row: Vec<String> = (1..=3)
            .map(|j| {
                let z = rho.element(i, j);
                format!("{:+.6}{:+.6}i", z.re, z.im)
            })
            .collect();
        out.details.push(format!("rho[{i},:] = {}", row.join("  ")));
    }
    Ok(out)
}

fn describe_table(u: Units, table: &SpectrumTable) -> Result<String, CliError> {
    let report = find_peaks(table)?;
    let (min_inv, at) = population_inversion_scan(table);
    Ok(format!(
        "class={} window_center={:.4} fwhm={:.4} min_inversion={:.4} at delta13={:.4}",
        report.classification,
        u.to_user(report.window_center),
        u.to_user(report.fwhm),
        min_inv,
        u.to_user(at)
    ))
}

fn sweep(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let (drives, dec) = inputs(cfg)?;
    let u = cfg.units();
    let table = sweep_detuning(&drives, &dec, &cfg.grid()?)?;
    let path = write_file(dir, "spectrum.csv", &spectrum_csv(u, &table))?;
    let text = describe_table(u, &table)?;
    Ok(Outcome::new(
        format!("sweep: {} points {text} -> {}", table.len(), path.display()),
        vec![path],
    ))
}

fn phase_sweep(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let (drives, dec) = inputs(cfg)?;
    let u = cfg.units();
    let phases = &cfg.sweep.phases;
    let tables = sweep_phase(&drives, &dec, &cfg.grid()?, phases)?;
    let mut files = Vec::new();
    let mut details = Vec::new();
    let mut labels = Vec::new();
    for (k, (phi, table)) in phases.iter().zip(&tables).enumerate() {
        files.push(write_file(
            dir,
            &format!("phase_sweep_{k}.csv"),
            &spectrum_csv(u, table),
        )?);
        let report = find_peaks(table)?;
        labels.push(format!("{phi:.4}:{}", report.classification));
        details.push(format!("Phi={phi:.6}: {}", describe_table(u, table)?));
    }
    let mut out = Outcome::new(
        format!(
            "phase-sweep: {} phases [{}] -> {}",
            phases.len(),
            labels.join(", "),
            dir.display()
        ),
        files,
    );
    out.details = details;
    Ok(out)
}

fn evolution(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let (drives, dec) = inputs(cfg)?;
    let u = cfg.units();
    let e = cfg.evolve.as_ref().expect("validated");
    let rho0 = match e.initial {
        InitialState::Ground => DensityMatrix::ground(),
        InitialState::Mixed => DensityMatrix::maximally_mixed(),
        InitialState::Excited => DensityMatrix::pure(3),
    };
    let l = build_liouvillian(&rotating_hamiltonian(&drives), &dec)?;
    let dt = e.dt.unwrap_or_else(|| default_time_step(&l));
    let n = e.samples;
    let times: Vec<f64> = (0..n).map(|k| e.duration * k as f64 / (n - 1) as f64).collect();
    let states = evolve_sampled(&l, &rho0, &times, dt)?;
    let mut s = units_line(u);
    write_metadata(&mut s, &drives, &dec);
    let _ = writeln!(s, "# delta13={} dt={dt}", drives.d13().detuning());
    s.push_str("t,pop1,pop2,pop3,re_rho31,im_rho31,re_rho23,im_rho23\n");
    for (t, rho) in times.iter().zip(&states) {
        let [p1, p2, p3] = rho.populations();
        let (a, b) = (rho.rho31(), rho.rho23());
        let _ = writeln!(s, "{t},{p1},{p2},{p3},{},{},{},{}", a.re, a.im, b.re, b.im);
    }
    let path = write_file(dir, "evolution.csv", &s)?;
    let last = states.last().expect("at least two samples");
    let [p1, p2, p3] = last.populations();
    Ok(Outcome::new(
        format!(
            "evolve: {n} samples to t={} final pops=[{p1:.6}, {p2:.6}, {p3:.6}] -> {}",
            times[n - 1],
            path.display()
        ),
        vec![path],
    ))
}

fn fluxonium(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let f = cfg.fluxonium.as_ref().expect("validated");
    let params = cfg.fluxonium_params()?;
    let rows = flux_sweep(&params, &cfg.flux_grid()?)?;
    let path = write_file(dir, "flux_sweep.csv", &flux_sweep_csv(&params, &rows))?;
    let mut summary = format!("fluxonium: {} flux points", rows.len());
    let mut details = Vec::new();
    if let Some([lo, hi]) = f.bias_bracket {
        let bias = find_balanced_bias(&params, lo, hi)?;
        let s = spectrum_at(&params, bias)?;
        let _ = write!(summary, " balanced bias={bias:.5} (t12={:.4}, t23={:.4})", s.t12, s.t23);
        details.push(format!(
            "at flux {bias:.5}: w1={:.4} GHz w2={:.4} GHz t12={:.4} t13={:.4} t23={:.4}",
            s.w1(),
            s.w2(),
            s.t12,
            s.t13,
            s.t23
        ));
        if let Some(g) = f.gamma_ref {
            let reference = spectrum_at(&params, f.ref_flux)?;
            let d = scale_decay_rates(g, reference.t12, &s)?;
            let _ = write!(
                summary,
                " decay MHz: g12={:.3} g13={:.3} g23={:.3}",
                d.gamma12, d.gamma13, d.gamma23
            );
        }
    }
    let _ = write!(summary, " -> {}", path.display());
    let mut out = Outcome::new(summary, vec![path]);
    out.details = details;
    Ok(out)
}

fn reflect(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let (mut drives, dec) = inputs(cfg)?;
    let u = cfg.units();
    let r = cfg.reflect.clone().unwrap_or_default();
    let a_in = FieldAmplitude::new(C64::new(r.a_in_re, r.a_in_im))?;
    if r.probe_from_input {
        let o13 = probe_rabi_from_input(dec.gamma13, a_in);
        drives = drives.with_magnitudes(drives.d12().magnitude(), o13, drives.d23().magnitude())?;
    }
    let details = cfg
        .level_frequencies()
        .map(|levels| mode_separation_warnings(&levels, &dec))
        .unwrap_or_default()
        .into_iter()
        .map(|w| format!("warning: {w}"))
        .collect();
    let rows = reflection_spectrum(&drives, &dec, a_in, &cfg.grid()?)?;
    let path = write_file(
        dir,
        "reflection.csv",
        &(units_line(u) + &reflection_csv(&drives, &dec, a_in, &rows)),
    )?;
    let min_i = rows.iter().map(|p| p.homodyne_i).fold(f64::INFINITY, f64::min);
    let max_i = rows.iter().map(|p| p.homodyne_i).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Outcome::new(
        format!(
            "reflect: {} points homodyne_I in [{min_i:.5}, {max_i:.5}] -> {}",
            rows.len(),
            path.display()
        ),
        vec![path],
    );
    out.details = details;
    Ok(out)
}

fn verify() -> Outcome {
    let checks = run_invariant_suite();
    let passed = checks.iter().filter(|c| c.passed).count();
    let details = checks
        .iter()
        .map(|c| format!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
        .collect();
    Outcome {
        details,
        summary: format!("verify: {passed}/{} checks passed", checks.len()),
        files: Vec::new(),
        ok: passed == checks.len(),
    }
}
