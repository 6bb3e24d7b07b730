//! Dense complex linear algebra helpers shared by every module.

use alloc::{format, vec::Vec};
use core::cmp::Ordering;

use nalgebra::{linalg::Schur, DMatrix, DVector};

#[allow(unused_imports)] // shadowed by std's inherent methods when std is in the graph
use num_traits::Float;

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vector_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖M − Mᴴ‖ / ‖M‖` in the Frobenius norm; zero for the zero matrix.
pub fn relative_asymmetry(m: &CMatrix) -> f64 {
    let scale = frobenius(m);
    if scale == 0.0 {
        return 0.0;
    }
    frobenius(&(m - m.adjoint())) / scale
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diagonal(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

/// Off-diagonal Frobenius mass `sqrt(Σ_{i≠j} |m_ij|²)`.
pub fn off_diagonal_mass(m: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Inverse through an LU factorization with partial pivoting.
pub fn invert(m: &CMatrix, name: &str) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular(name.into()))?;
    if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::Singular(name.into()))
    }
}

fn start_vector(n: usize) -> CVector {
    // Fixed, non-symmetric start so no singular direction is missed by accident.
    CVector::from_fn(n, |i, _| c(1.0 + 0.1 * (i % 7) as f64, 0.05 * (i % 3) as f64))
}

/// Largest singular value of an operator given only through its action and
/// the action of its adjoint (power iteration on `TᴴT`).
pub fn spectral_norm<F, G>(n: usize, apply: F, apply_adjoint: G) -> f64
where
    F: Fn(&CVector) -> CVector,
    G: Fn(&CVector) -> CVector,
{
    if n == 0 {
        return 0.0;
    }
    let mut v = start_vector(n);
    let mut norm = vector_norm(&v);
    v /= real(norm);
    let mut sigma_sq = 0.0;
    for _ in 0..300 {
        let w = apply_adjoint(&apply(&v));
        norm = vector_norm(&w);
        if norm == 0.0 || !norm.is_finite() {
            return if norm == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let previous = sigma_sq;
        sigma_sq = norm;
        v = w / real(norm);
        if (sigma_sq - previous).abs() <= 1e-12 * sigma_sq {
            break;
        }
    }
    sigma_sq.sqrt()
}

/// Condition number estimate `‖T‖·‖T⁻¹‖` from explicit forward and inverse matrices.
pub fn condition_estimate(forward: &CMatrix, inverse: &CMatrix) -> f64 {
    let n = forward.ncols();
    let big = spectral_norm(n, |v| forward * v, |v| forward.ad_mul(v));
    let small = spectral_norm(n, |v| inverse * v, |v| inverse.ad_mul(v));
    let cond = big * small;
    if cond.is_finite() {
        cond
    } else {
        f64::INFINITY
    }
}

/// Complex Schur decomposition `M = Q T Qᴴ`.
fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let n = m.nrows();
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok((identity(n), m.clone()));
    }
    Schur::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))
        .map(|s| s.unpack())
        .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge (n = {n})")))
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Eigenvalues and unit-norm right eigenvectors (as columns) of a general
/// complex matrix, by back-substitution on the Schur factor.
pub fn eigen_decomposition(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let (q, t) = schur(m)?;
    let n = t.nrows();
    // floored so that |tiny|² stays normal inside complex division
    let tiny = (f64::EPSILON * frobenius(&t)).max(1e-150);
    let mut vectors = CMatrix::zeros(n, n);
    let values: Vec<C64> = t.diagonal().iter().copied().collect();
    for (k, &lambda) in values.iter().enumerate() {
        let mut y = CVector::zeros(n);
        y[k] = real(1.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < tiny {
                denom = real(tiny);
            }
            y[i] = -acc / denom;
            let scale = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if scale > 1e100 {
                y /= real(scale);
            }
        }
        let mut v = &q * y;
        let norm = vector_norm(&v);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Eigen(format!("eigenvector {k} is degenerate")));
        }
        v /= real(norm);
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    values
}

/// Sort by real part, then imaginary part.
pub fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
    });
}

/// Largest pairwise distance between two spectra under the better of the
/// sorted pairing and a minimum-cost bipartite matching. Infinite when the
/// spectra have different sizes.
pub fn spectrum_deviation(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sort_spectrum(&mut sa);
    sort_spectrum(&mut sb);
    let sorted = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let assignment = min_cost_assignment(a.len(), |i, j| (a[i] - b[j]).norm());
    let matched = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| (a[i] - b[j]).norm())
        .fold(0.0, f64::max);
    sorted.min(matched)
}

/// Hungarian algorithm (potentials form), `O(n³)`. Returns `row -> column`.
pub fn min_cost_assignment<F: Fn(usize, usize) -> f64>(n: usize, cost: F) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = alloc::vec![0.0; n + 1];
    let mut v = alloc::vec![0.0; n + 1];
    let mut p = alloc::vec![0usize; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = alloc::vec![inf; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = alloc::vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Orthonormal basis (Euclidean) for the column span of `m`.
pub fn orthonormal_columns(m: &CMatrix) -> CMatrix {
    m.clone().qr().q()
}
