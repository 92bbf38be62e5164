//! Fluxonium device model
//!
//! ```text
//! H = 4·ec·n̂² - ej·cos(φ̂) + ½·el·(φ̂ - 2π·flux)²
//! ```
//!
//! in the eigenbasis of the `(ec, el)` oscillator, energies in GHz. The
//! lowest three eigenstates play the roles of levels 1, 2 and 3, and the
//! couplings to a charge-coupled line are `t_ij = |⟨i|n̂|j⟩|`.
//!
//! Flux enters only through the inductive term; only magnitudes of matrix
//! elements are exported, which do not depend on that gauge choice.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::{expm, hermitian_eig, ComplexMatrix, HermitianEigen, C64};
use crate::spectroscopy::ordered_map;

pub const MIN_BASIS: usize = 30;
pub const DEFAULT_BASIS: usize = 100;
/// Extra basis states used by the convergence guard.
pub const CONVERGENCE_STEP: usize = 20;
/// Largest allowed shift (GHz) of the lowest three eigenvalues under the guard.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Bisection stops once the bracket is this narrow.
pub const BIAS_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxoniumParams {
    pub ej: f64,
    pub ec: f64,
    pub el: f64,
    pub basis_size: usize,
}

impl FluxoniumParams {
    /// Validates `ec, el > 0`, `ej >= 0` and `basis_size >= 30`.
    ///
    /// `ej = 0` is accepted as the harmonic limit.
    pub fn new(ej: f64, ec: f64, el: f64, basis_size: usize) -> Result<Self> {
        if !(ej.is_finite() && ej >= 0.0) {
            return Err(Error::InvalidParameter(format!("ej must be >= 0, got {ej}")));
        }
        for (name, v) in [("ec", ec), ("el", el)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if basis_size < MIN_BASIS {
            return Err(Error::InvalidParameter(format!(
                "basis_size must be >= {MIN_BASIS}, got {basis_size}"
            )));
        }
        Ok(Self { ej, ec, el, basis_size })
    }

    pub fn with_basis_size(&self, basis_size: usize) -> Result<Self> {
        Self::new(self.ej, self.ec, self.el, basis_size)
    }

    /// Oscillator frequency `√(8·ec·el)`.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.ec * self.el).sqrt()
    }

    /// Zero-point phase amplitude `(8ec/el)^{1/4}/√2`.
    pub fn phi_zpf(&self) -> f64 {
        (8.0 * self.ec / self.el).powf(0.25) / 2f64.sqrt()
    }

    /// Zero-point charge amplitude `(el/8ec)^{1/4}/√2`.
    pub fn n_zpf(&self) -> f64 {
        (self.el / (8.0 * self.ec)).powf(0.25) / 2f64.sqrt()
    }
}

/// Flux-independent operators in the truncated oscillator basis.
#[derive(Clone, Debug)]
struct Basis {
    params: FluxoniumParams,
    phi: ComplexMatrix,
    charge: ComplexMatrix,
    /// `ω(k + ½) - ej·cos(φ̂)`
    static_part: ComplexMatrix,
}

impl Basis {
    fn new(p: FluxoniumParams) -> Result<Self> {
        let n = p.basis_size;
        let mut phi = ComplexMatrix::zeros(n, n);
        let mut charge = ComplexMatrix::zeros(n, n);
        let (pz, nz) = (p.phi_zpf(), p.n_zpf());
        for k in 1..n {
            let s = (k as f64).sqrt();
            // â|k⟩ = √k|k-1⟩
            phi[(k - 1, k)] = C64::new(pz * s, 0.0);
            phi[(k, k - 1)] = C64::new(pz * s, 0.0);
            // n̂ = i·n_zpf(â† - â)
            charge[(k, k - 1)] = C64::new(0.0, nz * s);
            charge[(k - 1, k)] = C64::new(0.0, -nz * s);
        }
        let w = p.plasma_frequency();
        let diag: Vec<C64> = (0..n).map(|k| C64::new(w * (k as f64 + 0.5), 0.0)).collect();
        let mut static_part = ComplexMatrix::from_diag(&diag);
        if p.ej != 0.0 {
            let e = expm(&phi.scale(C64::i()))?;
            // cos φ̂ = (e^{iφ̂} + e^{-iφ̂})/2, and e^{-iφ̂} = (e^{iφ̂})†
            let cos = (&e + &e.adjoint()).scale(C64::new(0.5, 0.0));
            static_part = &static_part - &cos.scale(C64::new(p.ej, 0.0));
        }
        Ok(Self {
            params: p,
            phi,
            charge,
            static_part,
        })
    }

    fn hamiltonian(&self, flux: f64) -> ComplexMatrix {
        let shift = 2.0 * PI * flux;
        let el = self.params.el;
        // ½el(φ - s)² = ½elφ² - el·s·φ + ½el·s²
        let mut h = &self.static_part - &self.phi.scale(C64::new(el * shift, 0.0));
        for k in 0..h.rows() {
            h[(k, k)] += 0.5 * el * shift * shift;
        }
        // exact Hermitian symmetry
        (&h + &h.adjoint()).scale(C64::new(0.5, 0.0))
    }

    fn diagonalize(&self, flux: f64) -> Result<HermitianEigen> {
        hermitian_eig(&self.hamiltonian(flux))
    }
}

/// Device Hamiltonian at `flux = Φ_ext/Φ0`, checked for basis convergence.
pub fn build_device_hamiltonian(p: &FluxoniumParams, flux: f64) -> Result<ComplexMatrix> {
    check_flux(flux)?;
    let solver = Solver::new(*p)?;
    solver.check_convergence(flux)?;
    Ok(solver.base.hamiltonian(flux))
}

fn check_flux(flux: f64) -> Result<()> {
    if flux.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("non-finite flux {flux}")))
    }
}

/// Lowest three levels and the charge matrix elements among them.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxoniumSpectrum {
    pub flux: f64,
    /// `[0, ω_10, ω_20]` in GHz.
    pub levels: Vec<f64>,
    pub t12: f64,
    pub t13: f64,
    pub t23: f64,
}

impl FluxoniumSpectrum {
    pub fn w1(&self) -> f64 {
        self.levels[1]
    }

    pub fn w2(&self) -> f64 {
        self.levels[2]
    }
}

/// Caches the operators of the working basis and of the enlarged basis
/// used by the convergence guard.
struct Solver {
    base: Basis,
    larger: Basis,
}

impl Solver {
    fn new(p: FluxoniumParams) -> Result<Self> {
        Ok(Self {
            base: Basis::new(p)?,
            larger: Basis::new(p.with_basis_size(p.basis_size + CONVERGENCE_STEP)?)?,
        })
    }

    fn check_convergence(&self, flux: f64) -> Result<HermitianEigen> {
        let small = self.base.diagonalize(flux)?;
        let big = self.larger.diagonalize(flux)?;
        let shift = (0..3)
            .map(|k| (small.values[k] - big.values[k]).abs())
            .fold(0.0, f64::max);
        if shift > CONVERGENCE_TOL {
            return Err(Error::BasisTooSmall {
                size: self.base.params.basis_size,
                larger: self.larger.params.basis_size,
                shift,
            });
        }
        Ok(small)
    }

    fn spectrum(&self, flux: f64) -> Result<FluxoniumSpectrum> {
        check_flux(flux)?;
        let eig = self.check_convergence(flux)?;
        let v = &eig.vectors;
        let n = v.rows();
        let element = |i: usize, j: usize| -> f64 {
            let nv = self.base.charge.mul_vec(&v.column(j));
            (0..n).map(|k| v[(k, i)].conj() * nv[k]).sum::<C64>().norm()
        };
        let e0 = eig.values[0];
        Ok(FluxoniumSpectrum {
            flux,
            levels: vec![0.0, eig.values[1] - e0, eig.values[2] - e0],
            t12: element(0, 1),
            t13: element(0, 2),
            t23: element(1, 2),
        })
    }
}

pub fn spectrum_at(p: &FluxoniumParams, flux: f64) -> Result<FluxoniumSpectrum> {
    Solver::new(*p)?.spectrum(flux)
}

fn at_flux(flux: f64, e: Error) -> Error {
    Error::AtFlux {
        flux,
        source: Box::new(e),
    }
}

/// [`spectrum_at`] over a monotone flux grid, evaluated in parallel.
pub fn flux_sweep(p: &FluxoniumParams, grid: &[f64]) -> Result<Vec<FluxoniumSpectrum>> {
    let inc = grid.windows(2).all(|w| w[1] > w[0]);
    let dec = grid.windows(2).all(|w| w[1] < w[0]);
    if grid.is_empty() || !(inc || dec) {
        return Err(Error::InvalidParameter(
            "flux grid must be non-empty and strictly monotone".into(),
        ));
    }
    let solver = Solver::new(*p)?;
    ordered_map(grid, |f| solver.spectrum(f), at_flux)
}

/// CSV with header `flux,w1,w2,t12,t13,t23` and a `#` preamble of the device parameters.
pub fn flux_sweep_csv(p: &FluxoniumParams, rows: &[FluxoniumSpectrum]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# ej={} ec={} el={} basis_size={} (GHz)",
        p.ej, p.ec, p.el, p.basis_size
    );
    s.push_str("flux,w1,w2,t12,t13,t23\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.flux, r.w1(), r.w2(), r.t12, r.t13, r.t23);
    }
    s
}

/// Root of a continuous `f` on `[lo, hi]` by bisection, to bracket width `tol`.
pub fn bisect_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("invalid bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut sa = fa.signum();
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == sa {
            a = m;
            sa = fm.signum();
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Flux in `[lo, hi]` where `t12 = t23`, to within [`BIAS_TOL`].
pub fn find_balanced_bias(p: &FluxoniumParams, lo: f64, hi: f64) -> Result<f64> {
    let solver = Solver::new(*p)?;
    bisect_root(|f| solver.spectrum(f).map(|s| s.t12 - s.t23), lo, hi, BIAS_TOL)
}

/// Decay rates in MHz (rate/2π).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayEstimate {
    pub gamma12: f64,
    pub gamma13: f64,
    pub gamma23: f64,
}

/// White-noise scaling `γ_ij = gamma_ref·(t_ij/t_ref)²`.
pub fn scale_decay_rates(gamma_ref: f64, t_ref: f64, s: &FluxoniumSpectrum) -> Result<DecayEstimate> {
    if !(gamma_ref.is_finite() && gamma_ref > 0.0 && t_ref.is_finite() && t_ref > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma_ref and t_ref must be > 0, got {gamma_ref} and {t_ref}"
        )));
    }
    let rate = |t: f64| gamma_ref * (t / t_ref) * (t / t_ref);
    Ok(DecayEstimate {
        gamma12: rate(s.t12),
        gamma13: rate(s.t13),
        gamma23: rate(s.t23),
    })
}
