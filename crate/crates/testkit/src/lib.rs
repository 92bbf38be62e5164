//! Independent reference computations for the test suites.
//!
//! Everything here works on plain row-major slices so it stays independent
//! of the library under test.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Vec<C> {
    (0..rows * cols)
        .map(|_| C::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
        .collect()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<C> {
    let a = random_matrix(rng, n, n, scale);
    let mut h = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
        }
    }
    h
}

/// Random 3×3 density matrix `A·A†/tr(A·A†)`.
pub fn random_density<R: Rng>(rng: &mut R) -> Vec<C> {
    let a = random_matrix(rng, 3, 3, 1.0);
    let m = matmul(&a, &adjoint(&a, 3), 3);
    let tr: f64 = (0..3).map(|k| m[k * 3 + k].re).sum();
    m.iter().map(|z| z / tr).collect()
}

pub fn matmul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn adjoint(a: &[C], n: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

pub fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Kronecker product by explicit index arithmetic.
pub fn kron(a: &[C], ar: usize, ac: usize, b: &[C], br: usize, bc: usize) -> Vec<C> {
    let (rows, cols) = (ar * br, ac * bc);
    let mut out = vec![C::new(0.0, 0.0); rows * cols];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k) * cols + (j * bc + l)] = a[i * ac + j] * b[k * bc + l];
                }
            }
        }
    }
    out
}

/// `Σ_k A^k/k!` summed until the terms stop contributing; no scaling.
pub fn taylor_expm(a: &[C], n: usize) -> Vec<C> {
    let mut sum = vec![C::new(0.0, 0.0); n * n];
    let mut term = vec![C::new(0.0, 0.0); n * n];
    for k in 0..n {
        sum[k * n + k] = C::new(1.0, 0.0);
        term[k * n + k] = C::new(1.0, 0.0);
    }
    for k in 1..400 {
        term = matmul(&term, a, n).into_iter().map(|z| z / k as f64).collect();
        let size = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if size < 1e-20 && k > 10 {
            break;
        }
    }
    sum
}

/// Right-hand side of the Lindblad equation by direct matrix products:
/// `-i[H, ρ] + Σ γ (cρc† - ½{c†c, ρ})`, all 3×3 row-major.
pub fn lindblad_rhs(h: &[C], jumps: &[(f64, Vec<C>)], rho: &[C]) -> Vec<C> {
    let n = 3;
    let hr = matmul(h, rho, n);
    let rh = matmul(rho, h, n);
    let mut out: Vec<C> = hr.iter().zip(&rh).map(|(a, b)| (a - b) * C::new(0.0, -1.0)).collect();
    for (g, c) in jumps {
        let cd = adjoint(c, n);
        let crc = matmul(&matmul(c, rho, n), &cd, n);
        let cdc = matmul(&cd, c, n);
        let left = matmul(&cdc, rho, n);
        let right = matmul(rho, &cdc, n);
        for k in 0..n * n {
            out[k] += (crc[k] - (left[k] + right[k]) * 0.5) * *g;
        }
    }
    out
}

/// `|i⟩⟨j|` on three levels, 0-based.
pub fn unit3(i: usize, j: usize) -> Vec<C> {
    let mut m = vec![C::new(0.0, 0.0); 9];
    m[i * 3 + j] = C::new(1.0, 0.0);
    m
}

/// Classic RK4 for `ẏ = f(t, y)` with fixed step, last step shortened.
pub fn rk4<F>(f: F, y0: &[C], t: f64, dt: f64) -> Vec<C>
where
    F: Fn(f64, &[C]) -> Vec<C>,
{
    let axpy = |y: &[C], a: f64, k: &[C]| -> Vec<C> { y.iter().zip(k).map(|(y, k)| y + k * a).collect() };
    let mut y = y0.to_vec();
    let mut now = 0.0;
    while now < t - 1e-12 * dt {
        let h = dt.min(t - now);
        let k1 = f(now, &y);
        let k2 = f(now + h / 2.0, &axpy(&y, h / 2.0, &k1));
        let k3 = f(now + h / 2.0, &axpy(&y, h / 2.0, &k2));
        let k4 = f(now + h, &axpy(&y, h, &k3));
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        now += h;
    }
    y
}

fn to_na(a: &[C], n: usize) -> DMatrix<C> {
    DMatrix::from_row_slice(n, n, a)
}

/// Right singular vector of the smallest singular value.
pub fn null_vector(a: &[C], n: usize) -> Vec<C> {
    let svd = to_na(a, n).svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let k = (0..n)
        .min_by(|&p, &q| svd.singular_values[p].total_cmp(&svd.singular_values[q]))
        .unwrap();
    // rows of V^H are conjugated right singular vectors
    (0..n).map(|j| v_t[(k, j)].conj()).collect()
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn eigenvalues(a: &[C], n: usize) -> Vec<C> {
    let schur = to_na(a, n).schur();
    let (_, t) = schur.unpack();
    (0..n).map(|k| t[(k, k)]).collect()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &[C], n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = to_na(a, n).symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Solves `a·x = b` with nalgebra's LU.
pub fn solve(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let x = to_na(a, n)
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular");
    x.iter().copied().collect()
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenvalues of a real symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    let radius = (0..n)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { off[i].abs() } else { 0.0 };
            (diag[i] - l - r, diag[i] + l + r)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        });
    (0..k)
        .map(|m| {
            let (mut lo, mut hi) = radius;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sturm_count(diag, off, mid) > m {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Lowest three fluxonium energies from a second-order finite-difference
/// discretisation of `-4ec·d²/dφ² - ej·cos φ + ½el(φ - 2π·flux)²` on
/// `[-half_width, half_width]` with `points` interior nodes and hard walls.
pub fn fluxonium_grid_levels(ej: f64, ec: f64, el: f64, flux: f64, points: usize, half_width: f64) -> Vec<f64> {
    let h = 2.0 * half_width / (points + 1) as f64;
    let kin = 4.0 * ec / (h * h);
    let s = 2.0 * std::f64::consts::PI * flux;
    let diag: Vec<f64> = (1..=points)
        .map(|k| {
            let phi = -half_width + h * k as f64;
            2.0 * kin - ej * phi.cos() + 0.5 * el * (phi - s) * (phi - s)
        })
        .collect();
    let off = vec![-kin; points - 1];
    tridiagonal_lowest(&diag, &off, 3)
}

/// Grid levels Richardson-extrapolated from `points` and `2·points + 1`
/// nodes (the second grid halves the spacing), removing the `O(h²)` error.
pub fn fluxonium_grid_levels_extrapolated(
    ej: f64,
    ec: f64,
    el: f64,
    flux: f64,
    points: usize,
    half_width: f64,
) -> Vec<f64> {
    let coarse = fluxonium_grid_levels(ej, ec, el, flux, points, half_width);
    let fine = fluxonium_grid_levels(ej, ec, el, flux, 2 * points + 1, half_width);
    coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}
