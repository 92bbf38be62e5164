//! Probe absorption and dispersion spectra.
//!
//! Absorption is `Im ρ31` and dispersion is `Re ρ31` of the steady state; the
//! first-order susceptibility is proportional to `ρ31/Ω13`.

use std::fmt::Write as _;
use std::io;

use rayon::prelude::*;

use crate::atom::{global_phase, rotating_hamiltonian, Decoherence, Drive, DriveSet};
use crate::error::{Error, Result};
use crate::lindblad::{build_liouvillian, steady_state, DensityMatrix};
use crate::numerics::C64;

/// Default probe sweep: 801 points on `[-4, 4]`.
pub const DEFAULT_GRID: (f64, f64, usize) = (-4.0, 4.0, 801);
/// Default grid for Kramers-Kronig checks: 4001 points on `[-20, 20]`.
pub const KK_GRID: (f64, f64, usize) = (-20.0, 20.0, 4001);

/// Extrema smaller than this fraction of `max|Im ρ31|` are ignored.
pub const PEAK_THRESHOLD: f64 = 1e-3;
/// `|Im ρ31|` at both grid ends must not exceed this fraction of its maximum.
pub const KK_ENDPOINT_FRACTION: f64 = 0.05;
/// Flank-height ratio separating EITA (asymmetric) from LWI (antisymmetric) profiles.
pub const EITA_FLANK_RATIO: f64 = 0.8;
/// Below [`ANALYTIC_MIN_DENOMINATOR`], the reduced-model denominator counts as zero.
pub const ANALYTIC_MIN_DENOMINATOR: f64 = 1e-12;

/// Evenly spaced grid of `points >= 2` values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "a sweep grid needs at least 2 points, got {points}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "grid bounds must be finite with lo < hi, got [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| if k == points - 1 { hi } else { lo + step * k as f64 })
        .collect())
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("detuning grid is empty".into()));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite detuning {x}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "detuning grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Steady-state quantities at one probe detuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumPoint {
    pub delta13: f64,
    pub rho31: C64,
    pub rho23: C64,
    pub pop1: f64,
    pub pop2: f64,
    pub pop3: f64,
    /// `ρ11 - ρ33`
    pub inversion: f64,
}

impl SpectrumPoint {
    pub fn from_state(delta13: f64, rho: &DensityMatrix) -> Self {
        let [pop1, pop2, pop3] = rho.populations();
        Self {
            delta13,
            rho31: rho.rho31(),
            rho23: rho.rho23(),
            pop1,
            pop2,
            pop3,
            inversion: pop1 - pop3,
        }
    }

    pub fn absorption(&self) -> f64 {
        self.rho31.im
    }

    pub fn dispersion(&self) -> f64 {
        self.rho31.re
    }
}

/// `scale·ρ31/Ω13` with the complex probe Rabi frequency: the probe
/// susceptibility up to the dipole prefactor `scale`. Unlike `ρ31` itself it
/// does not depend on the phase reference of the levels. `None` when the
/// probe is off.
pub fn susceptibility(rho31: C64, probe: &Drive, scale: f64) -> Option<C64> {
    (probe.magnitude() > 0.0).then(|| rho31 / probe.rabi() * scale)
}

/// Spectrum on a strictly increasing detuning grid together with the
/// parameters that produced it. The stored drive set carries the probe
/// detuning of the first grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTable {
    points: Vec<SpectrumPoint>,
    drives: DriveSet,
    dec: Decoherence,
}

impl SpectrumTable {
    pub fn new(points: Vec<SpectrumPoint>, drives: DriveSet, dec: Decoherence) -> Result<Self> {
        let grid: Vec<f64> = points.iter().map(|p| p.delta13).collect();
        check_increasing(&grid)?;
        Ok(Self { points, drives, dec })
    }

    pub fn points(&self) -> &[SpectrumPoint] {
        &self.points
    }

    pub fn drives(&self) -> &DriveSet {
        &self.drives
    }

    pub fn decoherence(&self) -> &Decoherence {
        &self.dec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta13).collect()
    }

    pub fn absorption(&self) -> Vec<f64> {
        self.points.iter().map(SpectrumPoint::absorption).collect()
    }

    pub fn dispersion(&self) -> Vec<f64> {
        self.points.iter().map(SpectrumPoint::dispersion).collect()
    }

    /// Writes the `#` metadata preamble, header and one row per point.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.csv_string().as_bytes())
    }

    pub fn csv_string(&self) -> String {
        let mut s = String::new();
        write_metadata(&mut s, &self.drives, &self.dec);
        s.push_str("delta13,re_rho31,im_rho31,pop1,pop2,pop3,inversion\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                p.delta13, p.rho31.re, p.rho31.im, p.pop1, p.pop2, p.pop3, p.inversion
            );
        }
        s
    }
}

/// `#`-prefixed description of the drives and decoherence rates.
pub fn write_metadata(s: &mut String, drives: &DriveSet, dec: &Decoherence) {
    let (d12, d13, d23) = (drives.d12(), drives.d13(), drives.d23());
    let _ = writeln!(
        s,
        "# omega12={} phi12={} omega13={} phi13={} omega23={} phi23={} delta23={}",
        d12.magnitude(),
        d12.phase(),
        d13.magnitude(),
        d13.phase(),
        d23.magnitude(),
        d23.phase(),
        d23.detuning()
    );
    let _ = writeln!(
        s,
        "# gamma12={} gamma13={} gamma23={} gamma_phi2={} gamma_phi3={}",
        dec.gamma12, dec.gamma13, dec.gamma23, dec.gamma_phi2, dec.gamma_phi3
    );
    let _ = writeln!(s, "# Phi={}", global_phase(drives));
}

/// Steady state with the probe detuning set to `delta13` (δ12 re-derived).
pub fn probe_state(drives: &DriveSet, dec: &Decoherence, delta13: f64) -> Result<DensityMatrix> {
    let d = drives.with_probe_detuning(delta13);
    let l = build_liouvillian(&rotating_hamiltonian(&d), dec)?;
    steady_state(&l)
}

/// Steady-state probe response at one detuning.
///
/// `Ω13 = 0` is allowed: the coherence `ρ31` is then driven only through
/// the two-photon path 1→2→3.
pub fn probe_response(drives: &DriveSet, dec: &Decoherence, delta13: f64) -> Result<SpectrumPoint> {
    if !delta13.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite detuning {delta13}")));
    }
    let rho = probe_state(drives, dec, delta13)?;
    Ok(SpectrumPoint::from_state(delta13, &rho))
}

/// Evaluates `f` at every grid point in parallel and returns results in grid
/// order. The reported error is the one at the smallest failing index.
pub(crate) fn ordered_map<T, F>(grid: &[f64], f: F, wrap: fn(f64, Error) -> Error) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = grid.par_iter().map(|&x| f(x).map_err(|e| wrap(x, e))).collect();
    results.into_iter().collect()
}

fn at_detuning(delta13: f64, e: Error) -> Error {
    Error::AtDetuning {
        delta13,
        source: Box::new(e),
    }
}

/// Probe response over a strictly increasing grid; points are evaluated in parallel.
pub fn sweep_detuning(drives: &DriveSet, dec: &Decoherence, grid: &[f64]) -> Result<SpectrumTable> {
    check_increasing(grid)?;
    let points = ordered_map(grid, |d| probe_response(drives, dec, d), at_detuning)?;
    SpectrumTable::new(points, drives.with_probe_detuning(grid[0]), *dec)
}

/// One detuning sweep per loop phase `Φ`, realised as `φ12 = Φ`, `φ13 = φ23 = 0`.
pub fn sweep_phase(drives: &DriveSet, dec: &Decoherence, grid: &[f64], phases: &[f64]) -> Result<Vec<SpectrumTable>> {
    if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite phase {p}")));
    }
    phases
        .iter()
        .map(|&phi| sweep_detuning(&drives.with_phases(phi, 0.0, 0.0), dec, grid))
        .collect()
}

/// Inputs of the reduced model that neglects the 2-3 coherence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticInputs {
    pub omega12: f64,
    pub omega13: f64,
    pub omega23: f64,
    pub phi12: f64,
    pub phi13: f64,
    pub phi23: f64,
    /// Decay of the 1-2 coherence enters as `γ12/2`; fold pure dephasing in
    /// by passing `γ12 + γφ2`.
    pub gamma12: f64,
    /// Decay rate of the 1-3 coherence, `Γ3 = (γ13 + γ23 + γφ3)/2`.
    pub big_gamma3: f64,
    /// `(ρ11, ρ22, ρ33)`
    pub pops: [f64; 3],
}

impl AnalyticInputs {
    pub fn from_model(drives: &DriveSet, dec: &Decoherence, pops: [f64; 3]) -> Self {
        Self {
            omega12: drives.d12().magnitude(),
            omega13: drives.d13().magnitude(),
            omega23: drives.d23().magnitude(),
            phi12: drives.d12().phase(),
            phi13: drives.d13().phase(),
            phi23: drives.d23().phase(),
            gamma12: dec.gamma12 + dec.gamma_phi2,
            big_gamma3: dec.big_gamma3(),
            pops,
        }
    }
}

/// Closed-form probe coherence with `ρ23 ≈ 0`:
///
/// ```text
/// ρ31 = -e^{-iφ13}[2iΩ13(ρ11-ρ33)(iδ13 - γ12/2) + Ω23Ω12 e^{-iΦ}(ρ11-ρ22)] / F
/// F   = 4(iδ13 - Γ3)(iδ13 - γ12/2) + Ω23²
/// ```
pub fn analytic_rho31(p: &AnalyticInputs, delta13: f64) -> Result<C64> {
    let i = C64::i();
    let [r11, r22, r33] = p.pops;
    let phi = p.phi12 + p.phi23 - p.phi13;
    let a = i * delta13 - p.gamma12 / 2.0;
    let f = (i * delta13 - p.big_gamma3) * a * 4.0 + p.omega23 * p.omega23;
    if f.norm() < ANALYTIC_MIN_DENOMINATOR {
        return Err(Error::SingularDenominator(f.norm()));
    }
    let num = i * 2.0 * p.omega13 * (r11 - r33) * a + C64::from_polar(p.omega23 * p.omega12 * (r11 - r22), -phi);
    Ok(-C64::from_polar(1.0, -p.phi13) * num / f)
}

/// Strong-pump estimates of the Autler-Townes peak positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutlerTownes {
    /// `|Ω23| / 2Γ3`
    pub scaled: f64,
    /// `|Ω23| / 2`
    pub standard: f64,
}

pub fn autler_townes(drives: &DriveSet, dec: &Decoherence) -> AutlerTownes {
    let o23 = drives.d23().magnitude();
    AutlerTownes {
        scaled: o23 / (2.0 * dec.big_gamma3()),
        standard: o23 / 2.0,
    }
}

/// Transparency-window width estimate `γ12 + γφ2 + |Ω23|²/2Γ3`.
pub fn transparency_fwhm_estimate(drives: &DriveSet, dec: &Decoherence) -> f64 {
    let o23 = drives.d23().magnitude();
    dec.gamma12 + dec.gamma_phi2 + o23 * o23 / (2.0 * dec.big_gamma3())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    /// Two absorption peaks around a transparency window.
    Eit,
    /// Gain line with no transparency window, or an antisymmetric absorption/gain pair.
    Lwi,
    /// Transparency window between an absorption peak and a weaker gain peak.
    Eita,
    /// A single absorption lobe.
    Absorption,
    /// Gain window between two absorption peaks.
    AmplificationWindow,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Eit => "EIT",
            Classification::Lwi => "LWI",
            Classification::Eita => "EITA",
            Classification::Absorption => "ABSORPTION",
            Classification::AmplificationWindow => "AMPLIFICATION_WINDOW",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakReport {
    /// Refined positions of the significant extrema of `Im ρ31`, ascending.
    pub peak_positions: Vec<f64>,
    pub peak_heights: Vec<f64>,
    pub window_center: f64,
    pub fwhm: f64,
    pub classification: Classification,
}

#[derive(Clone, Copy, Debug)]
struct Extremum {
    index: usize,
    position: f64,
    height: f64,
}

/// Vertex of the parabola through three equally spaced samples, as an offset
/// in units of the step, clamped to `[-0.5, 0.5]`.
fn parabolic_offset(ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let denom = ym - 2.0 * y0 + yp;
    if denom == 0.0 {
        return (0.0, y0);
    }
    let off = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
    (off, y0 - 0.25 * (ym - yp) * off)
}

fn find_extrema(x: &[f64], y: &[f64], threshold: f64) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..y.len() - 1 {
        let (ym, y0, yp) = (y[i - 1], y[i], y[i + 1]);
        let is_max = y0 > 0.0 && y0 >= ym && y0 > yp;
        let is_min = y0 < 0.0 && y0 <= ym && y0 < yp;
        if !(is_max || is_min) || y0.abs() < threshold {
            continue;
        }
        let (off, h) = parabolic_offset(ym, y0, yp);
        let step = if off >= 0.0 { x[i + 1] - x[i] } else { x[i] - x[i - 1] };
        out.push(Extremum {
            index: i,
            position: x[i] + off * step,
            height: h,
        });
    }
    out
}

/// Number of contiguous samples around `e` whose value has the sign of `e`
/// and at least half its magnitude.
fn half_height_span(y: &[f64], e: &Extremum) -> usize {
    let inside = |v: f64| v * e.height.signum() >= 0.5 * e.height.abs();
    let mut lo = e.index;
    while lo > 0 && inside(y[lo - 1]) {
        lo -= 1;
    }
    let mut hi = e.index;
    while hi + 1 < y.len() && inside(y[hi + 1]) {
        hi += 1;
    }
    hi - lo + 1
}

fn lerp_root(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        return x0;
    }
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

/// Width of the contiguous run around grid index `center` on which
/// `g <= level`, with linearly interpolated edges, clipped to `bounds`.
fn run_width(x: &[f64], g: &[f64], center: usize, level: f64, bounds: Option<(f64, f64)>) -> f64 {
    let inside = |k: usize| g[k] <= level;
    if !inside(center) {
        return 0.0;
    }
    let mut lo = center;
    while lo > 0 && inside(lo - 1) {
        lo -= 1;
    }
    let mut hi = center;
    while hi + 1 < x.len() && inside(hi + 1) {
        hi += 1;
    }
    let left = if lo > 0 {
        lerp_root(x[lo - 1], g[lo - 1], x[lo], g[lo], level)
    } else {
        x[0]
    };
    let right = if hi + 1 < x.len() {
        lerp_root(x[hi], g[hi], x[hi + 1], g[hi + 1], level)
    } else {
        x[x.len() - 1]
    };
    match bounds {
        Some((l, r)) => (right.min(r) - left.max(l)).max(0.0),
        None => right - left,
    }
}

fn nearest_index(x: &[f64], pos: f64) -> usize {
    let k = x.partition_point(|&v| v < pos);
    if k == 0 {
        0
    } else if k == x.len() || (pos - x[k - 1]) <= (x[k] - pos) {
        k - 1
    } else {
        k
    }
}

/// Linear-interpolated zero of `y` between grid indices `a < b`, closest to the middle.
fn zero_crossing(x: &[f64], y: &[f64], a: usize, b: usize) -> Option<f64> {
    let mid = 0.5 * (x[a] + x[b]);
    (a..b)
        .filter(|&k| y[k] == 0.0 || y[k] * y[k + 1] < 0.0)
        .map(|k| {
            if y[k] == 0.0 {
                x[k]
            } else {
                lerp_root(x[k], y[k], x[k + 1], y[k + 1], 0.0)
            }
        })
        .min_by(|p, q| (p - mid).abs().total_cmp(&(q - mid).abs()))
}

/// Refined position of the minimum of `y` on indices `a..=b`.
fn refined_min(x: &[f64], y: &[f64], a: usize, b: usize) -> (usize, f64) {
    let k = (a..=b).min_by(|&p, &q| y[p].total_cmp(&y[q])).unwrap_or(a);
    if k == 0 || k + 1 >= y.len() {
        return (k, x[k]);
    }
    let (off, _) = parabolic_offset(y[k - 1], y[k], y[k + 1]);
    (k, x[k] + off * (x[k + 1] - x[k]))
}

/// Locates the extrema of `Im ρ31`, classifies the line shape and measures
/// the transparency (or gain) window.
///
/// The half-maximum reference is half the mean magnitude of the two extrema
/// flanking the window. For same-sign flanks the window is where the signed
/// absorption drops below that level; for opposite-sign flanks it is where
/// `|Im ρ31|` does.
pub fn find_peaks(table: &SpectrumTable) -> Result<PeakReport> {
    let x = table.detunings();
    let y = table.absorption();
    if x.len() < 3 {
        return Err(Error::InsufficientResolution(format!(
            "need at least 3 grid points, got {}",
            x.len()
        )));
    }
    let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if ymax == 0.0 {
        return Err(Error::InsufficientResolution(
            "absorption vanishes on the whole grid".into(),
        ));
    }
    let ext = find_extrema(&x, &y, PEAK_THRESHOLD * ymax);
    if ext.is_empty() {
        return Err(Error::InsufficientResolution(
            "no interior extremum; widen the grid".into(),
        ));
    }
    for e in &ext {
        if half_height_span(&y, e) < 3 {
            return Err(Error::InsufficientResolution(format!(
                "extremum at {:.4} spans fewer than 3 grid points",
                e.position
            )));
        }
    }

    let dominant = (0..ext.len())
        .max_by(|&a, &b| ext[a].height.abs().total_cmp(&ext[b].height.abs()))
        .unwrap();
    let hmax = ext[dominant].height.abs();

    let report = |center: f64, fwhm: f64, classification| PeakReport {
        peak_positions: ext.iter().map(|e| e.position).collect(),
        peak_heights: ext.iter().map(|e| e.height).collect(),
        window_center: center,
        fwhm,
        classification,
    };

    // Gain window between two strong absorption peaks.
    for k in 1..ext.len().saturating_sub(1) {
        let (l, n, r) = (ext[k - 1], ext[k], ext[k + 1]);
        if n.height < 0.0
            && l.height >= 0.5 * hmax
            && r.height >= 0.5 * hmax
            && n.height.abs() >= 0.25 * l.height.min(r.height)
        {
            let level = 0.25 * (l.height + r.height);
            let fwhm = run_width(&x, &y, n.index, level, Some((l.position, r.position)));
            return Ok(report(n.position, fwhm, Classification::AmplificationWindow));
        }
    }

    let d = ext[dominant];
    let neighbour = [dominant.checked_sub(1), Some(dominant + 1)]
        .into_iter()
        .flatten()
        .filter(|&k| k < ext.len())
        .max_by(|&a, &b| ext[a].height.abs().total_cmp(&ext[b].height.abs()))
        .map(|k| ext[k]);

    let Some(nb) = neighbour else {
        // Lone line: report its own full width at half maximum.
        let s = d.height.signum();
        let g: Vec<f64> = y.iter().map(|v| -s * v).collect();
        let fwhm = run_width(&x, &g, d.index, -0.5 * d.height.abs(), None);
        let class = if d.height > 0.0 {
            Classification::Absorption
        } else {
            Classification::Lwi
        };
        return Ok(report(d.position, fwhm, class));
    };

    let (a, b) = if d.index < nb.index { (d, nb) } else { (nb, d) };
    let level = 0.25 * (a.height.abs() + b.height.abs());
    let bounds = Some((a.position, b.position));

    if a.height.signum() != b.height.signum() {
        let center = zero_crossing(&x, &y, a.index, b.index).unwrap_or(0.5 * (a.position + b.position));
        let g: Vec<f64> = y.iter().map(|v| v.abs()).collect();
        let fwhm = run_width(&x, &g, nearest_index(&x, center), level, bounds);
        let ratio = nb.height.abs() / d.height.abs();
        let class = if ratio < EITA_FLANK_RATIO {
            Classification::Eita
        } else {
            Classification::Lwi
        };
        return Ok(report(center, fwhm, class));
    }

    let s = d.height.signum();
    let g: Vec<f64> = y.iter().map(|v| s * v).collect();
    let (k, center) = refined_min(&x, &g, a.index, b.index);
    if s > 0.0 && g[k] > level {
        // Shallow dip: a single absorption lobe, reported by its own width.
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let fwhm = run_width(&x, &neg, k, -0.5 * hmax, None);
        return Ok(report(center, fwhm, Classification::Absorption));
    }
    let fwhm = run_width(&x, &g, k, level, bounds);
    let class = if s > 0.0 {
        Classification::Eit
    } else {
        Classification::Lwi
    };
    Ok(report(center, fwhm, class))
}

/// Sign relation between the real and imaginary parts of a causal response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KkConvention {
    /// `Re = H[Im]`
    Plus,
    /// `Re = -H[Im]`, the relation obeyed by `ρ31(δ13)`
    Minus,
}

fn uniform_step(x: &[f64]) -> Result<f64> {
    if x.len() < 3 {
        return Err(Error::InsufficientResolution(format!(
            "need at least 3 grid points, got {}",
            x.len()
        )));
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if h.is_nan() || h <= 0.0 || x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
        return Err(Error::InvalidParameter("grid must be uniform and increasing".into()));
    }
    Ok(h)
}

/// Principal-value Hilbert transform `H[f](x) = (1/π) PV ∫_a^b f(y)/(x-y) dy`
/// at the interior nodes of a uniform grid (endpoints are returned as NaN).
///
/// The singular node is removed by subtracting `f(x)`, which leaves a smooth
/// integrand (trapezoidal rule, with `-f'(x)` at `y = x`) plus the
/// closed-form term `f(x)·ln((x-a)/(b-x))`.
pub fn hilbert_transform(x: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    if x.len() != f.len() {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} points but values have {}",
            x.len(),
            f.len()
        )));
    }
    let h = uniform_step(x)?;
    let n = x.len();
    let (a, b) = (x[0], x[n - 1]);
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            if i == 0 || i == n - 1 {
                return f64::NAN;
            }
            let xi = x[i];
            let fi = f[i];
            let mut s = 0.0;
            for j in 0..n {
                let g = if j == i {
                    -(f[i + 1] - f[i - 1]) / (2.0 * h)
                } else {
                    (f[j] - fi) / (xi - x[j])
                };
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                s += w * g;
            }
            (s * h + fi * ((xi - a) / (b - xi)).ln()) / std::f64::consts::PI
        })
        .collect();
    Ok(out)
}

/// `max|Re - s·H[Im] - c| / max|Re|` over the interior nodes, with the
/// constant `c` chosen to minimise the maximum and `s = ±1` per `convention`.
pub fn kk_residual(x: &[f64], re: &[f64], im: &[f64], convention: KkConvention) -> Result<f64> {
    if re.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} points but real part has {}",
            x.len(),
            re.len()
        )));
    }
    let imax = im.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = im[0].abs().max(im[im.len() - 1].abs());
    if edge > KK_ENDPOINT_FRACTION * imax {
        return Err(Error::WindowTooNarrow(format!(
            "|Im| at the grid ends is {:.1}% of its maximum (limit {:.0}%)",
            100.0 * edge / imax,
            100.0 * KK_ENDPOINT_FRACTION
        )));
    }
    let hil = hilbert_transform(x, im)?;
    let s = match convention {
        KkConvention::Plus => 1.0,
        KkConvention::Minus => -1.0,
    };
    let n = x.len();
    let diff: Vec<f64> = (1..n - 1).map(|i| re[i] - s * hil[i]).collect();
    let (lo, hi) = diff.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    let dev = 0.5 * (hi - lo);
    let remax = re[1..n - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if remax > 0.0 { dev / remax } else { dev })
}

/// Kramers-Kronig consistency of a probe spectrum on a uniform grid.
pub fn kramers_kronig_residual(table: &SpectrumTable) -> Result<f64> {
    kk_residual(
        &table.detunings(),
        &table.dispersion(),
        &table.absorption(),
        KkConvention::Minus,
    )
}

/// Minimum of `ρ11 - ρ33` over the table and the detuning where it occurs.
pub fn population_inversion_scan(table: &SpectrumTable) -> (f64, f64) {
    table
        .points()
        .iter()
        .map(|p| (p.inversion, p.delta13))
        .fold(
            (f64::INFINITY, f64::NAN),
            |best, cur| if cur.0 < best.0 { cur } else { best },
        )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_from(x: &[f64], y: &[f64]) -> SpectrumTable {
        let points = x
            .iter()
            .zip(y)
            .map(|(&d, &v)| SpectrumPoint {
                delta13: d,
                rho31: C64::new(0.0, v),
                rho23: C64::new(0.0, 0.0),
                pop1: 1.0,
                pop2: 0.0,
                pop3: 0.0,
                inversion: 1.0,
            })
            .collect();
        SpectrumTable::new(
            points,
            DriveSet::real(0.0, 0.1, 1.0, 0.0, 0.0).unwrap(),
            Decoherence::decay(0.1, 1.0, 0.1).unwrap(),
        )
        .unwrap()
    }

    fn lorentz(x: f64, x0: f64, w: f64, a: f64) -> f64 {
        a * w * w / ((x - x0) * (x - x0) + w * w)
    }

    #[test]
    fn grid_helpers() {
        let g = uniform_grid(-1.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(uniform_grid(0.0, 1.0, 1).is_err());
        assert!(uniform_grid(1.0, 0.0, 3).is_err());
        assert!(check_increasing(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn parabola_vertex() {
        // y = -(x - 0.3)², sampled at -1, 0, 1
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        let (off, h) = parabolic_offset(f(-1.0), f(0.0), f(1.0));
        assert!((off - 0.3).abs() < 1e-12);
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn synthetic_line_shapes() {
        let x = uniform_grid(-4.0, 4.0, 801).unwrap();
        let classify = |f: &dyn Fn(f64) -> f64| {
            let y: Vec<f64> = x.iter().map(|&v| f(v)).collect();
            find_peaks(&table_from(&x, &y)).unwrap()
        };

        let r = classify(&|v| lorentz(v, -1.0, 0.3, 1.0) + lorentz(v, 1.0, 0.3, 1.0));
        assert_eq!(r.classification, Classification::Eit);
        assert!(r.window_center.abs() < 1e-9);

        let r = classify(&|v| lorentz(v, -0.5, 0.3, 1.0) - lorentz(v, 0.5, 0.3, 0.2));
        assert_eq!(r.classification, Classification::Eita);

        let r = classify(&|v| lorentz(v, -0.5, 0.3, 1.0) - lorentz(v, 0.5, 0.3, 1.0));
        assert_eq!(r.classification, Classification::Lwi);
        assert!(r.window_center.abs() < 1e-9);

        let r = classify(&|v| lorentz(v, 0.2, 0.5, 1.0));
        assert_eq!(r.classification, Classification::Absorption);
        assert!((r.fwhm - 1.0).abs() < 1e-3);
        assert!((r.window_center - 0.2).abs() < 1e-6);

        let r = classify(&|v| -lorentz(v, 0.0, 0.5, 1.0));
        assert_eq!(r.classification, Classification::Lwi);

        let r = classify(&|v| lorentz(v, -1.0, 0.3, 1.0) + lorentz(v, 1.0, 0.3, 1.0) - lorentz(v, 0.0, 0.2, 0.8));
        assert_eq!(r.classification, Classification::AmplificationWindow);

        // shallow dip between two overlapping lobes
        let r = classify(&|v| lorentz(v, -0.3, 0.5, 1.0) + lorentz(v, 0.3, 0.5, 1.0));
        assert_eq!(r.classification, Classification::Absorption);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let x = uniform_grid(-4.0, 4.0, 41).unwrap();
        let y: Vec<f64> = x.iter().map(|&v| lorentz(v, 0.0, 0.05, 1.0)).collect();
        assert!(matches!(
            find_peaks(&table_from(&x, &y)),
            Err(Error::InsufficientResolution(_))
        ));
    }

    #[test]
    fn zero_spectrum_has_zero_kk_residual() {
        let x = uniform_grid(-5.0, 5.0, 101).unwrap();
        let z = vec![0.0; x.len()];
        assert_eq!(kk_residual(&x, &z, &z, KkConvention::Minus).unwrap(), 0.0);
    }

    #[test]
    fn narrow_window_rejected() {
        let x = uniform_grid(-1.0, 1.0, 101).unwrap();
        let im: Vec<f64> = x.iter().map(|&v| lorentz(v, 0.0, 1.0, 1.0)).collect();
        assert!(matches!(
            kk_residual(&x, &im, &im, KkConvention::Plus),
            Err(Error::WindowTooNarrow(_))
        ));
    }

    #[test]
    fn inversion_scan_picks_minimum() {
        let x = [0.0, 1.0, 2.0];
        let mut t = table_from(&x, &[0.0, 0.0, 0.0]);
        t.points[1].inversion = 0.25;
        assert_eq!(population_inversion_scan(&t), (0.25, 1.0));
    }
}
