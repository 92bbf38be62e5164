//! Liouvillian construction, steady states and time evolution of the
//! three-level master equation
//!
//! ```text
//! ρ̇ = -i[H, ρ] + Σ_{i<j} γ_ij 𝒟[σ_ij]ρ + Σ_{i=2,3} γφi 𝒟[σ_ii]ρ,
//! 𝒟[c]ρ = cρc† - ½{c†c, ρ}
//! ```
//!
//! States are vectorized by column stacking: `ρ[i, j]` sits at `j·3 + i`, so
//! `vec(AXB) = (Bᵀ ⊗ A)·vec(X)`.

use crate::atom::Decoherence;
use crate::error::{Error, Result};
use crate::numerics::{self, kron, ComplexMatrix, ComplexVector, C64};

pub const DIM: usize = 3;
pub const SUPER_DIM: usize = DIM * DIM;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Steady-state residual bound `‖L·vec(ρ)‖∞`, relative to `max(1, ‖L‖∞)`.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;
/// Eigenvalues of a valid Liouvillian satisfy `Re λ <= SPECTRAL_TOL`.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Trace drift tolerated by [`evolve`] before it reports a too-large step.
pub const EVOLVE_TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated by [`evolve`].
pub const EVOLVE_POSITIVITY_TOL: f64 = 1e-6;

/// A 3×3 Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(m, TRACE_TOL, POSITIVITY_TOL)
    }

    fn with_tolerances(m: ComplexMatrix, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        if m.rows() != DIM || m.cols() != DIM {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be 3x3, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let defect = m.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvariantViolation(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > trace_tol {
            return Err(Error::InvariantViolation(format!(
                "trace {:.12} deviates from 1",
                tr.re
            )));
        }
        let min_eig = min_eigenvalue(&m)?;
        if min_eig < -psd_tol {
            return Err(Error::InvariantViolation(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self(m))
    }

    /// `|k⟩⟨k|` for level label `k ∈ {1, 2, 3}`.
    pub fn pure(level: usize) -> Self {
        assert!((1..=DIM).contains(&level), "level label must be 1..=3");
        Self(ComplexMatrix::unit(DIM, level - 1, level - 1))
    }

    pub fn ground() -> Self {
        Self::pure(1)
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix::identity(DIM).scale(C64::new(1.0 / DIM as f64, 0.0)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// `ρ_ij = ⟨i|ρ|j⟩` for level labels `i, j ∈ {1, 2, 3}`.
    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.0[(i - 1, j - 1)]
    }

    pub fn rho31(&self) -> C64 {
        self.element(3, 1)
    }

    pub fn rho23(&self) -> C64 {
        self.element(2, 3)
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // validated at construction, so this cannot fail
        min_eigenvalue(&self.0).unwrap_or(f64::NAN)
    }
}

fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale(C64::new(0.5, 0.0))
}

fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let eig = numerics::hermitian_eig(&hermitize(m))?;
    Ok(eig.values[0])
}

/// Column-stacks a density matrix.
pub fn vectorize(rho: &DensityMatrix) -> ComplexVector {
    vec_matrix(rho.matrix())
}

/// Inverse of [`vectorize`]; the result must satisfy the density-matrix invariants.
pub fn devectorize(v: &ComplexVector) -> Result<DensityMatrix> {
    DensityMatrix::new(unvec_matrix(v)?)
}

/// Column-stacks any square matrix.
pub fn vec_matrix(m: &ComplexMatrix) -> ComplexVector {
    let n = m.rows();
    let mut out = Vec::with_capacity(n * m.cols());
    for j in 0..m.cols() {
        for i in 0..n {
            out.push(m[(i, j)]);
        }
    }
    ComplexVector::new(out).expect("matrix entries are finite")
}

/// Reshapes a column-stacked vector of length `n²` into an `n×n` matrix.
pub fn unvec_matrix(v: &ComplexVector) -> Result<ComplexMatrix> {
    let n = (v.len() as f64).sqrt().round() as usize;
    if n * n != v.len() || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} is not a vectorized square matrix",
            v.len()
        )));
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = v[j * n + i];
        }
    }
    Ok(m)
}

/// Superoperator of `𝒟[c]`: `conj(c)⊗c - ½(I⊗c†c + (c†c)ᵀ⊗I)`.
pub fn dissipator_superop(c: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !c.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "jump operator must be square, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    let n = c.rows();
    let id = ComplexMatrix::identity(n);
    let cdc = c.adjoint().matmul(c);
    let jump = kron(&c.conj(), c);
    let anti = &kron(&id, &cdc) + &kron(&cdc.transpose(), &id);
    Ok(&jump - &anti.scale(C64::new(0.5, 0.0)))
}

/// Superoperator of `-i[h, ·]`.
pub fn commutator_superop(h: &ComplexMatrix) -> ComplexMatrix {
    let id = ComplexMatrix::identity(h.rows());
    (&kron(&id, h) - &kron(&h.transpose(), &id)).scale(C64::new(0.0, -1.0))
}

/// Generator of the master equation acting on column-stacked states.
#[derive(Clone, Debug, PartialEq)]
pub struct Liouvillian(ComplexMatrix);

impl Liouvillian {
    /// Wraps a 9×9 matrix after checking trace preservation
    /// (`vec(I)ᴴ·L = 0`).
    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        if m.rows() != SUPER_DIM || m.cols() != SUPER_DIM {
            return Err(Error::DimensionMismatch(format!(
                "Liouvillian must be 9x9, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let l = Self(m);
        let defect = l.trace_defect();
        if defect > SPECTRAL_TOL * l.0.norm_inf().max(1.0) {
            return Err(Error::InvariantViolation(format!(
                "Liouvillian does not preserve trace (defect {defect:.3e})"
            )));
        }
        Ok(l)
    }

    pub fn zero() -> Self {
        Self(ComplexMatrix::zeros(SUPER_DIM, SUPER_DIM))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// `L` applied to an unvectorized operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let v = self.0.mul_vec(vec_matrix(rho).as_slice());
        unvec_matrix(&ComplexVector::new(v).expect("finite")).expect("9 entries")
    }

    /// Largest entry of the left product `vec(I)ᴴ·L`.
    pub fn trace_defect(&self) -> f64 {
        (0..SUPER_DIM)
            .map(|col| (0..DIM).map(|k| self.0[(k * DIM + k, col)]).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        numerics::eigenvalues(&self.0)
    }

    /// Eigenvalues, checked for `Re λ <= SPECTRAL_TOL`.
    pub fn checked_spectrum(&self) -> Result<Vec<C64>> {
        let ev = self.eigenvalues()?;
        if let Some(bad) = ev.iter().find(|z| z.re > SPECTRAL_TOL) {
            return Err(Error::InvariantViolation(format!(
                "Liouvillian eigenvalue with positive real part {bad}"
            )));
        }
        Ok(ev)
    }
}

/// Builds `L = -i(I⊗H - Hᵀ⊗I) + Σ γ·𝒟[c]` for the five decoherence channels.
pub fn build_liouvillian(h: &ComplexMatrix, dec: &Decoherence) -> Result<Liouvillian> {
    if h.rows() != DIM || h.cols() != DIM {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian must be 3x3, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let defect = h.hermitian_defect();
    if defect > numerics::HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let mut l = commutator_superop(h);
    let channels = [
        (dec.gamma12, 0, 1),
        (dec.gamma13, 0, 2),
        (dec.gamma23, 1, 2),
        (dec.gamma_phi2, 1, 1),
        (dec.gamma_phi3, 2, 2),
    ];
    for (rate, i, j) in channels {
        if rate > 0.0 {
            let d = dissipator_superop(&ComplexMatrix::unit(DIM, i, j))?;
            l = &l + &d.scale(C64::new(rate, 0.0));
        }
    }
    Liouvillian::from_matrix(l)
}

/// Unique steady state, found by replacing the first row of `L` with the
/// trace condition and solving the resulting linear system.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let mut a = l.0.clone();
    for col in 0..SUPER_DIM {
        a[(0, col)] = C64::new(0.0, 0.0);
    }
    for k in 0..DIM {
        a[(0, k * DIM + k)] = C64::new(1.0, 0.0);
    }
    let mut rhs = ComplexVector::zeros(SUPER_DIM).into_inner();
    rhs[0] = C64::new(1.0, 0.0);
    let rhs = ComplexVector::new(rhs)?;

    let x = numerics::solve_linear(&a, &rhs).map_err(|e| match e {
        Error::SingularMatrix { .. } => {
            Error::DegenerateSteadyState(format!("constrained Liouvillian is singular ({e})"))
        }
        other => other,
    })?;

    let residual = ComplexVector::new(l.0.mul_vec(x.as_slice()))?.norm_inf();
    let bound = STEADY_RESIDUAL_TOL * l.0.norm_inf().max(1.0);
    if residual > bound {
        return Err(Error::DegenerateSteadyState(format!(
            "residual {residual:.3e} exceeds {bound:.1e}"
        )));
    }
    DensityMatrix::new(hermitize(&unvec_matrix(&x)?))
}

/// Default RK4 step: `1e-3 / max(1, ‖L‖∞)`.
pub fn default_time_step(l: &Liouvillian) -> f64 {
    1e-3 / l.0.norm_inf().max(1.0)
}

type Super = [[C64; SUPER_DIM]; SUPER_DIM];
type State = [C64; SUPER_DIM];

fn dense(l: &Liouvillian) -> Super {
    let mut m = [[C64::new(0.0, 0.0); SUPER_DIM]; SUPER_DIM];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = l.0[(i, j)];
        }
    }
    m
}

#[inline]
fn apply(m: &Super, x: &State) -> State {
    let mut out = [C64::new(0.0, 0.0); SUPER_DIM];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
    out
}

#[inline]
fn axpy(x: &State, a: f64, y: &State) -> State {
    let mut out = *x;
    for (o, yi) in out.iter_mut().zip(y) {
        *o += yi * a;
    }
    out
}

fn rk4_step(m: &Super, x: &mut State, dt: f64) {
    let k1 = apply(m, x);
    let k2 = apply(m, &axpy(x, 0.5 * dt, &k1));
    let k3 = apply(m, &axpy(x, 0.5 * dt, &k2));
    let k4 = apply(m, &axpy(x, dt, &k3));
    for i in 0..SUPER_DIM {
        x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// Advances `x` by `t` with fixed steps `dt`; the last step is shortened to land on `t`.
fn integrate(m: &Super, x: &mut State, t: f64, dt: f64) {
    let full = (t / dt).floor();
    for _ in 0..full as u64 {
        rk4_step(m, x, dt);
    }
    let rest = t - full * dt;
    if rest > dt * 1e-9 {
        rk4_step(m, x, rest);
    }
}

fn check_evolve_args(t: f64, dt: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("evolution time must be >= 0, got {t}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
    }
    Ok(())
}

fn finish(x: &State) -> Result<DensityMatrix> {
    let v = ComplexVector::new(x.to_vec())
        .map_err(|_| Error::InvariantViolation("state diverged (non-finite entries); reduce dt".into()))?;
    let m = hermitize(&unvec_matrix(&v)?);
    DensityMatrix::with_tolerances(m, EVOLVE_TRACE_TOL, EVOLVE_POSITIVITY_TOL).map_err(|e| match e {
        Error::InvariantViolation(msg) => Error::InvariantViolation(format!("{msg} after integration; reduce dt")),
        other => other,
    })
}

fn initial_state(rho0: &DensityMatrix) -> State {
    let v = vectorize(rho0);
    let mut x = [C64::new(0.0, 0.0); SUPER_DIM];
    x.copy_from_slice(v.as_slice());
    x
}

/// Integrates `ρ̇ = Lρ` from `rho0` over a time `t` with classic RK4 and
/// fixed step `dt`.
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, t: f64, dt: f64) -> Result<DensityMatrix> {
    check_evolve_args(t, dt)?;
    let m = dense(l);
    let mut x = initial_state(rho0);
    integrate(&m, &mut x, t, dt);
    finish(&x)
}

/// Like [`evolve`], returning the state at each of the non-decreasing `times`.
pub fn evolve_sampled(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64], dt: f64) -> Result<Vec<DensityMatrix>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sample times must be non-decreasing".into()));
    }
    let m = dense(l);
    let mut x = initial_state(rho0);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        check_evolve_args(t, dt)?;
        integrate(&m, &mut x, t - now, dt);
        now = t;
        out.push(finish(&x)?);
    }
    Ok(out)
}
