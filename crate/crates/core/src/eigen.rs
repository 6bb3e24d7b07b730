//! Linear operators in coordinates, their transport between charts and the
//! generalized eigenvalue problem `f(Aφ) = λ f(φ)`.
//!
//! With pairing-ready dual components, `f(Aφ) = (Aᵀ f)·φ`, so generalized
//! eigenfunctionals are eigenvectors of `Aᵀ`. The metric adjoint is
//! `A⁺ = G⁻¹ Aᴴ G`; since `Aᵀ = conj(Aᴴ)`, the generalized spectrum of `A`
//! is the complex conjugate of the ordinary spectrum of `A⁺`.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::discretization::SampledFunction;
use crate::error::{domain, ensure_len, Error, Result};
use crate::linalg::{
    c, eigen_decomposition, eigenvalues, frobenius, orthonormal_columns, real, sort_spectrum, spectrum_deviation,
    vector_norm, CMatrix, C64,
};
use crate::spaces::{ensure_space, CoordinateSpace, CoordinateVector, DualVector, SpaceId};
use crate::transforms::{frequency_grid, LinearCoordTransform};

/// Eigenvalues closer than this (relative to `‖A‖`) are treated as one
/// degenerate cluster.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// The matrix of an operator in one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    space: SpaceId,
    matrix: CMatrix,
}

impl LinearOperator {
    pub fn new(space: &CoordinateSpace, matrix: CMatrix) -> Result<Self> {
        Self::on(space.id().clone(), space.dim(), matrix)
    }

    pub fn on(space: SpaceId, dim: usize, matrix: CMatrix) -> Result<Self> {
        ensure_len(dim, matrix.nrows())?;
        ensure_len(dim, matrix.ncols())?;
        Ok(Self { space, matrix })
    }

    pub fn zero(space: &CoordinateSpace) -> Self {
        Self {
            space: space.id().clone(),
            matrix: CMatrix::zeros(space.dim(), space.dim()),
        }
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    pub fn apply(&self, phi: &CoordinateVector) -> Result<CoordinateVector> {
        ensure_space(&self.space, phi.space())?;
        Ok(CoordinateVector::from_parts(self.space.clone(), &self.matrix * phi.coeffs()))
    }

    /// The functional `φ ↦ f(Aφ)`.
    pub fn pull_functional(&self, f: &DualVector) -> Result<DualVector> {
        ensure_space(&self.space, f.space())?;
        Ok(DualVector::from_parts(self.space.clone(), self.matrix.tr_mul(f.coeffs())))
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &LinearOperator) -> Result<LinearOperator> {
        ensure_space(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Eigenvalues of the matrix, sorted by real then imaginary part.
    pub fn spectrum(&self) -> Result<Vec<C64>> {
        let mut values = eigenvalues(&self.matrix)?;
        sort_spectrum(&mut values);
        Ok(values)
    }
}

/// Diagonal operator `(Aψ)(k_j) = λ(k_j) ψ(k_j)`.
pub fn multiplication_operator(space: &CoordinateSpace, lambda: &SampledFunction) -> Result<LinearOperator> {
    if lambda.grid() != space.grid() {
        return Err(domain(format!("multiplier is not sampled on the grid of `{}`", space.id())));
    }
    LinearOperator::new(space, CMatrix::from_diagonal(lambda.values()))
}

/// Discrete `i d/dx`.
///
/// Periodic grids get the spectral operator `Σ_m k_m v_m v_mᴴ / n` with
/// `v_m = e^{−i k_m x}` on the frequency grid, which is Hermitian, has
/// spectrum exactly `{k_m}` and is exact on those modes. Other grids get a
/// fourth-order finite-difference stencil with one-sided rows at the ends.
pub fn derivative_operator(space: &CoordinateSpace) -> Result<LinearOperator> {
    let grid = space.grid();
    let n = grid.len();
    let matrix = if grid.is_periodic() {
        let dk = frequency_grid(grid)?.spacing();
        let m_min = -((n / 2) as i64);
        // the entry depends on (j − l) mod n only
        let row: Vec<C64> = (0..n as i64)
            .map(|d| {
                (0..n as i64)
                    .map(|m| {
                        let mm = m_min + m;
                        let r = (mm * d).rem_euclid(n as i64) as f64 / n as f64;
                        let (s, co) = (2.0 * PI * r).sin_cos();
                        c(co, -s) * (mm as f64 * dk)
                    })
                    .sum::<C64>()
                    / n as f64
            })
            .collect();
        CMatrix::from_fn(n, n, |j, l| row[(j + n - l) % n])
    } else {
        if n < 5 {
            return Err(domain(format!("fourth-order stencil needs at least 5 nodes, got {n}")));
        }
        let h = grid.spacing();
        let mut m = CMatrix::zeros(n, n);
        let mut set = |j: usize, coeffs: &[(usize, f64)]| {
            for &(l, v) in coeffs {
                m[(j, l)] = c(0.0, v / (12.0 * h));
            }
        };
        set(0, &[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)]);
        set(1, &[(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)]);
        for j in 2..n - 2 {
            set(j, &[(j - 2, 1.0), (j - 1, -8.0), (j + 1, 8.0), (j + 2, -1.0)]);
        }
        let e = n - 1;
        set(e - 1, &[(e, 3.0), (e - 1, 10.0), (e - 2, -18.0), (e - 3, 6.0), (e - 4, -1.0)]);
        set(e, &[(e, 25.0), (e - 1, -48.0), (e - 2, 36.0), (e - 3, -16.0), (e - 4, 3.0)]);
        m
    };
    LinearOperator::new(space, matrix)
}

/// `T⁻¹ A T`: the operator `A` on `T.to` expressed in the chart `T.from`.
pub fn transport_operator(t: &LinearCoordTransform, a: &LinearOperator) -> Result<LinearOperator> {
    ensure_space(t.to(), &a.space)?;
    ensure_len(t.dim(), a.dim())?;
    let inverse = t.inverse_matrix()?;
    let moved = inverse * &a.matrix * t.matrix();
    LinearOperator::on(t.from().clone(), t.dim(), moved)
}

/// A functional `f` with `f(Aφ) = λ f(φ)` for every `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedEigenpair {
    pub value: C64,
    /// Unit Euclidean norm.
    pub functional: DualVector,
    /// `‖Aᵀf − λf‖ / ‖A‖`, or the invariant-subspace residual of its
    /// degenerate cluster.
    pub residual: f64,
}

fn scale_of(m: &CMatrix) -> f64 {
    let s = frobenius(m);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Groups indices of a sorted spectrum into clusters of nearly equal values.
fn clusters(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() < tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = alloc::vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut label, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    groups
}

/// Generalized eigenpairs of `A` on `space`, sorted by `(Re λ, Im λ)`.
pub fn generalized_eigs(space: &CoordinateSpace, a: &LinearOperator) -> Result<Vec<GeneralizedEigenpair>> {
    ensure_space(space.id(), &a.space)?;
    let at = a.matrix.transpose();
    let (values, vectors) =
        eigen_decomposition(&at).map_err(|e| Error::Eigen(format!("generalized problem on `{}`: {e}", space.id())))?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .re
            .partial_cmp(&values[j].re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(values[i].im.partial_cmp(&values[j].im).unwrap_or(core::cmp::Ordering::Equal))
    });
    let scale = scale_of(&a.matrix);
    let mut pairs: Vec<GeneralizedEigenpair> = order
        .iter()
        .map(|&k| {
            let f = vectors.column(k).into_owned();
            let lambda = values[k];
            let residual = vector_norm(&(&at * &f - &f * lambda)) / scale;
            GeneralizedEigenpair {
                value: lambda,
                functional: DualVector::from_parts(space.id().clone(), f),
                residual,
            }
        })
        .collect();
    let sorted_values: Vec<C64> = pairs.iter().map(|p| p.value).collect();
    for group in clusters(&sorted_values, DEGENERACY_TOLERANCE * scale) {
        if group.len() < 2 {
            continue;
        }
        let block = CMatrix::from_columns(
            &group
                .iter()
                .map(|&i| pairs[i].functional.coeffs().clone())
                .collect::<Vec<_>>(),
        );
        let q = orthonormal_columns(&block);
        let aq = &at * &q;
        let projected = q.adjoint() * &aq;
        let residual = frobenius(&(aq - &q * projected)) / scale;
        for &i in &group {
            pairs[i].residual = residual;
        }
    }
    Ok(pairs)
}

/// `‖Aᵀf − λf‖ / (‖A‖ ‖f‖)`.
pub fn functional_residual(a: &LinearOperator, lambda: C64, f: &DualVector) -> Result<f64> {
    ensure_space(&a.space, f.space())?;
    let v = f.coeffs();
    let r = a.matrix.tr_mul(v) - v * lambda;
    Ok(vector_norm(&r) / (scale_of(&a.matrix) * vector_norm(v)))
}

/// `A⁺ = G⁻¹ Aᴴ G`, so that `inner(A⁺ψ, φ) = inner(ψ, Aφ)`.
pub fn hermitian_conjugate(space: &CoordinateSpace, a: &LinearOperator) -> Result<LinearOperator> {
    ensure_space(space.id(), &a.space)?;
    let metric = space.metric();
    let g = metric.to_dense()?;
    let rhs = a.matrix.adjoint() * g;
    let mut out = CMatrix::zeros(a.dim(), a.dim());
    for j in 0..a.dim() {
        out.set_column(j, &metric.solve(&rhs.column(j).into_owned())?);
    }
    LinearOperator::new(space, out)
}

/// `‖T⁻¹ A T − diag(λ)‖ / ‖A‖`: zero iff the chart `T.from` diagonalizes
/// `A` with multiplier `λ`.
pub fn eigen_basis_defect(t: &LinearCoordTransform, a: &LinearOperator, lambda: &SampledFunction) -> Result<f64> {
    let moved = transport_operator(t, a)?;
    ensure_len(moved.dim(), lambda.values().len())?;
    let diff = moved.matrix - CMatrix::from_diagonal(lambda.values());
    Ok(frobenius(&diff) / scale_of(&a.matrix))
}

/// Comparison of the generalized spectrum of `A` with the ordinary spectrum
/// of `A⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    /// Generalized eigenvalues of `A`, sorted.
    pub generalized: Vec<C64>,
    /// Complex conjugates of the ordinary eigenvalues of `A⁺`, sorted.
    pub adjoint_conjugated: Vec<C64>,
    pub max_deviation: f64,
    pub convention: &'static str,
}

pub const CONJUGATION_CONVENTION: &str =
    "generalized eigenvalues of A (eigenvalues of A^T on pairing components) equal the complex conjugates \
     of the ordinary eigenvalues of A+ = G^-1 A^H G";

pub fn generalized_vs_ordinary_check(space: &CoordinateSpace, a: &LinearOperator) -> Result<SpectrumComparison> {
    let mut generalized = eigenvalues(&a.matrix.transpose())?;
    sort_spectrum(&mut generalized);
    let plus = hermitian_conjugate(space, a)?;
    let mut adjoint_conjugated: Vec<C64> = eigenvalues(&plus.matrix)?.iter().map(|z| z.conj()).collect();
    sort_spectrum(&mut adjoint_conjugated);
    let max_deviation = spectrum_deviation(&generalized, &adjoint_conjugated);
    Ok(SpectrumComparison {
        generalized,
        adjoint_conjugated,
        max_deviation,
        convention: CONJUGATION_CONVENTION,
    })
}

/// Sampled multiplier `λ(k) = k` on the grid of `space`.
pub fn coordinate_multiplier(space: &CoordinateSpace) -> SampledFunction {
    SampledFunction::sample(space.grid(), real)
}
