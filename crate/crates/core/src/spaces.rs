//! Coordinate Hilbert spaces: a grid, a quadrature rule and a metric.
//!
//! The metric `G` realizes the inner product `inner(φ, ψ) = ψᴴ G φ` and the
//! isomorphism onto the dual, `to_dual(φ) = conj(G φ)`. Dual vectors store
//! pairing-ready components so `pair(f, φ) = Σ f_k φ_k`.

use alloc::{collections::BTreeMap, format, string::String, sync::Arc, vec::Vec};
use core::fmt;

use nalgebra::{Cholesky, DVector, Dyn};

#[allow(unused_imports)]
use num_traits::Float;

use crate::discretization::{quadrature_weights, Grid, QuadratureRule, SampledFunction};
use crate::error::{domain, ensure_len, Error, Result};
use crate::linalg::{frobenius, real, relative_asymmetry, CMatrix, CVector, C64};
use crate::transforms::LinearCoordTransform;
use crate::CONDITION_LIMIT;

/// Asymmetry below this is treated as rounding noise and symmetrized away.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Name of a coordinate space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpaceId(Arc<str>);

impl SpaceId {
    pub fn new(name: &str) -> Self {
        Self(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for SpaceId {
    fn from(name: &str) -> Self {
        Self::new(name)
    }
}

impl From<String> for SpaceId {
    fn from(name: String) -> Self {
        Self(Arc::from(name))
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn ensure_space(expected: &SpaceId, found: &SpaceId) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::SpaceMismatch {
            expected: expected.clone(),
            found: found.clone(),
        })
    }
}

/// Explicit Hermitian positive-definite gram with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct DenseGram {
    gram: CMatrix,
    factor: Cholesky<C64, Dyn>,
}

impl DenseGram {
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Lower-triangular `L` with `G = L Lᴴ`.
    pub fn cholesky_factor(&self) -> CMatrix {
        self.factor.l()
    }
}

/// Metric pushed forward through an invertible transform `T: base → here`:
/// `G = T⁻ᴴ G_base T⁻¹`, so `G⁻¹ = T G_base⁻¹ Tᴴ` needs no inversion.
#[derive(Debug, Clone)]
pub struct InducedMetric {
    transform: Arc<LinearCoordTransform>,
    base: Arc<Metric>,
}

impl InducedMetric {
    pub fn transform(&self) -> &LinearCoordTransform {
        &self.transform
    }

    pub fn base(&self) -> &Metric {
        &self.base
    }
}

/// Gram operator of a coordinate space.
#[derive(Debug, Clone)]
pub enum Metric {
    /// Diagonal gram, e.g. the quadrature weights of an L₂ chart.
    Diagonal(DVector<f64>),
    Dense(DenseGram),
    Induced(InducedMetric),
}

impl Metric {
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        if values.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Metric::Diagonal(DVector::from_column_slice(values)))
    }

    /// Validates and stores an explicit gram. Asymmetry up to
    /// [`HERMITIAN_TOLERANCE`] is symmetrized; anything larger is rejected.
    pub fn dense(gram: CMatrix) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::DimensionMismatch {
                expected: gram.nrows(),
                found: gram.ncols(),
            });
        }
        if gram.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("gram has non-finite entries"));
        }
        let asym = relative_asymmetry(&gram);
        if asym > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian(asym));
        }
        let gram = crate::linalg::hermitian_part(&gram);
        let factor = gram.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        // complex Cholesky happily takes square roots of negative pivots
        let l = factor.l_dirty();
        if (0..l.nrows()).any(|i| !(l[(i, i)].re > 0.0) || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Metric::Dense(DenseGram { gram, factor }))
    }

    pub fn induced(transform: Arc<LinearCoordTransform>, base: Metric) -> Result<Self> {
        ensure_len(transform.dim(), base.dim())?;
        Ok(Metric::Induced(InducedMetric {
            transform,
            base: Arc::new(base),
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::Diagonal(w) => w.len(),
            Metric::Dense(d) => d.gram.nrows(),
            Metric::Induced(m) => m.transform.dim(),
        }
    }

    /// `G φ`.
    pub fn apply(&self, phi: &CVector) -> Result<CVector> {
        ensure_len(self.dim(), phi.len())?;
        match self {
            Metric::Diagonal(w) => Ok(CVector::from_fn(phi.len(), |i, _| phi[i] * w[i])),
            Metric::Dense(d) => Ok(&d.gram * phi),
            Metric::Induced(m) => {
                let base_coords = m.transform.inverse_mul(phi)?;
                let covector = m.base.apply(&base_coords)?;
                m.transform.inverse_adjoint_mul(&covector)
            }
        }
    }

    /// `G⁻¹ f`.
    pub fn solve(&self, f: &CVector) -> Result<CVector> {
        ensure_len(self.dim(), f.len())?;
        match self {
            Metric::Diagonal(w) => Ok(CVector::from_fn(f.len(), |i, _| f[i] / w[i])),
            Metric::Dense(d) => Ok(d.factor.solve(f)),
            Metric::Induced(m) => {
                let pulled = m.transform.adjoint_mul(f);
                let base = m.base.solve(&pulled)?;
                Ok(m.transform.forward_mul(&base))
            }
        }
    }

    /// `ψᴴ G φ`.
    pub fn form(&self, phi: &CVector, psi: &CVector) -> Result<C64> {
        ensure_len(self.dim(), phi.len())?;
        ensure_len(self.dim(), psi.len())?;
        match self {
            Metric::Diagonal(w) => Ok((0..phi.len()).map(|i| psi[i].conj() * phi[i] * w[i]).sum()),
            Metric::Dense(d) => Ok(psi.dotc(&(&d.gram * phi))),
            Metric::Induced(m) => {
                let a = m.transform.inverse_mul(phi)?;
                let b = m.transform.inverse_mul(psi)?;
                m.base.form(&a, &b)
            }
        }
    }

    /// `fᵀ G⁻¹ conj(g)`: the metric induced on pairing-ready dual components.
    pub fn dual_form(&self, f: &CVector, g: &CVector) -> Result<C64> {
        ensure_len(self.dim(), f.len())?;
        ensure_len(self.dim(), g.len())?;
        match self {
            Metric::Diagonal(w) => Ok((0..f.len()).map(|i| f[i] * g[i].conj() / w[i]).sum()),
            Metric::Dense(d) => Ok(f.dot(&d.factor.solve(&g.conjugate()))),
            Metric::Induced(m) => {
                let fb = m.transform.transpose_mul(f);
                let gb = m.transform.transpose_mul(g);
                m.base.dual_form(&fb, &gb)
            }
        }
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        match self {
            Metric::Diagonal(w) => Ok(CMatrix::from_diagonal(&w.map(real))),
            Metric::Dense(d) => Ok(d.gram.clone()),
            Metric::Induced(m) => {
                let inv = m.transform.inverse_matrix()?;
                let base = m.base.to_dense()?;
                Ok(inv.adjoint() * base * inv)
            }
        }
    }

    /// Dense `G⁻¹`.
    pub fn to_dense_inverse(&self) -> Result<CMatrix> {
        match self {
            Metric::Diagonal(w) => Ok(CMatrix::from_diagonal(&w.map(|x| real(1.0 / x)))),
            Metric::Dense(d) => Ok(d.factor.inverse()),
            Metric::Induced(m) => {
                let t = m.transform.matrix();
                let base = m.base.to_dense_inverse()?;
                Ok(&t * base * t.adjoint())
            }
        }
    }

    /// Lower-triangular `L` with `G = L Lᴴ`.
    pub fn cholesky_factor(&self) -> Result<CMatrix> {
        match self {
            Metric::Diagonal(w) => Ok(CMatrix::from_diagonal(&w.map(|x| real(x.sqrt())))),
            Metric::Dense(d) => Ok(d.factor.l()),
            Metric::Induced(_) => self
                .to_dense()?
                .cholesky()
                .map(|c| c.l())
                .ok_or(Error::NotPositiveDefinite),
        }
    }
}

/// Result of [`CoordinateSpace::is_orthonormal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orthonormality {
    pub orthonormal: bool,
    /// Relative distance from the plain quadrature (L₂) pairing.
    pub defect: f64,
}

/// A grid with quadrature and a metric: one chart's coordinate space.
#[derive(Debug, Clone)]
pub struct CoordinateSpace {
    id: SpaceId,
    grid: Grid,
    rule: QuadratureRule,
    metric: Metric,
}

impl CoordinateSpace {
    pub fn new(id: impl Into<SpaceId>, grid: Grid, metric: Metric) -> Result<Self> {
        ensure_len(grid.len(), metric.dim())?;
        let rule = quadrature_weights(&grid);
        Ok(Self {
            id: id.into(),
            grid,
            rule,
            metric,
        })
    }

    /// L₂ chart: the gram is the diagonal of quadrature weights.
    pub fn l2(id: impl Into<SpaceId>, grid: Grid) -> Self {
        let rule = quadrature_weights(&grid);
        let metric = Metric::Diagonal(DVector::from_column_slice(rule.weights()));
        Self {
            id: id.into(),
            grid,
            rule,
            metric,
        }
    }

    pub fn with_gram(id: impl Into<SpaceId>, grid: Grid, gram: CMatrix) -> Result<Self> {
        Self::new(id, grid, Metric::dense(gram)?)
    }

    /// The image of `base` under `transform`, with the metric that makes
    /// `transform` an isometry.
    pub fn induced(
        id: impl Into<SpaceId>,
        grid: Grid,
        transform: Arc<LinearCoordTransform>,
        base: &CoordinateSpace,
    ) -> Result<Self> {
        let id = id.into();
        ensure_space(&base.id, transform.from())?;
        ensure_space(&id, transform.to())?;
        let metric = Metric::induced(transform, base.metric.clone())?;
        Self::new(id, grid, metric)
    }

    pub fn id(&self) -> &SpaceId {
        &self.id
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn vector(&self, coeffs: CVector) -> Result<CoordinateVector> {
        ensure_len(self.dim(), coeffs.len())?;
        Ok(CoordinateVector {
            space: self.id.clone(),
            coeffs,
        })
    }

    pub fn sample<F: Fn(f64) -> C64>(&self, f: F) -> CoordinateVector {
        CoordinateVector {
            space: self.id.clone(),
            coeffs: SampledFunction::sample(&self.grid, f).into_values(),
        }
    }

    pub fn sample_real<F: Fn(f64) -> f64>(&self, f: F) -> CoordinateVector {
        self.sample(|x| real(f(x)))
    }

    pub fn from_samples(&self, f: &SampledFunction) -> Result<CoordinateVector> {
        if f.grid() != &self.grid {
            return Err(domain(format!("samples do not live on the grid of `{}`", self.id)));
        }
        self.vector(f.values().clone())
    }

    pub fn dual(&self, coeffs: CVector) -> Result<DualVector> {
        ensure_len(self.dim(), coeffs.len())?;
        Ok(DualVector {
            space: self.id.clone(),
            coeffs,
        })
    }

    pub fn zero(&self) -> CoordinateVector {
        CoordinateVector {
            space: self.id.clone(),
            coeffs: CVector::zeros(self.dim()),
        }
    }

    fn check(&self, id: &SpaceId) -> Result<()> {
        ensure_space(&self.id, id)
    }

    /// `ψᴴ G φ`: linear in `φ`, conjugate-linear in `ψ`.
    pub fn inner(&self, phi: &CoordinateVector, psi: &CoordinateVector) -> Result<C64> {
        self.check(&phi.space)?;
        self.check(&psi.space)?;
        self.metric.form(&phi.coeffs, &psi.coeffs)
    }

    pub fn norm(&self, phi: &CoordinateVector) -> Result<f64> {
        Ok(self.inner(phi, phi)?.re.max(0.0).sqrt())
    }

    /// `conj(G φ)`, so that `pair(to_dual(φ), ψ) = inner(ψ, φ)`.
    pub fn to_dual(&self, phi: &CoordinateVector) -> Result<DualVector> {
        self.check(&phi.space)?;
        let coeffs = self.metric.apply(&phi.coeffs)?.conjugate();
        Ok(DualVector {
            space: self.id.clone(),
            coeffs,
        })
    }

    pub fn from_dual(&self, f: &DualVector) -> Result<CoordinateVector> {
        self.check(&f.space)?;
        let coeffs = self.metric.solve(&f.coeffs.conjugate())?;
        Ok(CoordinateVector {
            space: self.id.clone(),
            coeffs,
        })
    }

    /// Dual metric: equals `inner(from_dual(g), from_dual(f))`.
    pub fn dual_inner(&self, f: &DualVector, g: &DualVector) -> Result<C64> {
        self.check(&f.space)?;
        self.check(&g.space)?;
        self.metric.dual_form(&f.coeffs, &g.coeffs)
    }

    /// Compares the metric with the plain quadrature pairing `diag(w)`.
    /// Induced metrics are compared through their inverses, which exist
    /// without inverting the inducing transform.
    pub fn is_orthonormal(&self, tol: f64) -> Result<Orthonormality> {
        let w = self.rule.weights();
        let defect = match &self.metric {
            Metric::Diagonal(g) => {
                let num: f64 = g.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
                let den: f64 = w.iter().map(|b| b * b).sum();
                (num / den).sqrt()
            }
            Metric::Dense(d) => {
                let mut diff = d.gram.clone();
                for (i, wi) in w.iter().enumerate() {
                    diff[(i, i)] -= real(*wi);
                }
                let den: f64 = w.iter().map(|b| b * b).sum::<f64>().sqrt();
                frobenius(&diff) / den
            }
            Metric::Induced(_) => {
                let mut diff = self.metric.to_dense_inverse()?;
                for (i, wi) in w.iter().enumerate() {
                    diff[(i, i)] -= real(1.0 / wi);
                }
                let den: f64 = w.iter().map(|b| 1.0 / (b * b)).sum::<f64>().sqrt();
                frobenius(&diff) / den
            }
        };
        Ok(Orthonormality {
            orthonormal: defect <= tol,
            defect,
        })
    }

    /// The functional `φ ↦ φ(x0)` (nearest node): pairing components `w ⊙ δ`,
    /// i.e. a unit vector.
    pub fn delta_functional(&self, x0: f64) -> Result<DualVector> {
        let delta = self.rule.delta(x0)?;
        let coeffs = CVector::from_fn(self.dim(), |i, _| delta.values()[i] * self.rule.weights()[i]);
        self.dual(coeffs)
    }

    /// The discrete delta `1/w_j` as a coordinate vector of this space.
    pub fn delta_coordinate(&self, x0: f64) -> Result<CoordinateVector> {
        self.from_samples(&self.rule.delta(x0)?)
    }
}

/// Coefficients of an element in one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateVector {
    space: SpaceId,
    coeffs: CVector,
}

impl CoordinateVector {
    pub(crate) fn from_parts(space: SpaceId, coeffs: CVector) -> Self {
        Self { space, coeffs }
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVector {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: C64, other: &CoordinateVector, beta: C64) -> Result<CoordinateVector> {
        ensure_space(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            coeffs: &self.coeffs * alpha + &other.coeffs * beta,
        })
    }
}

/// Pairing-ready components of a functional on one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    space: SpaceId,
    coeffs: CVector,
}

impl DualVector {
    pub(crate) fn from_parts(space: SpaceId, coeffs: CVector) -> Self {
        Self { space, coeffs }
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVector {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// `Σ f_k φ_k`.
pub fn pair(f: &DualVector, phi: &CoordinateVector) -> Result<C64> {
    ensure_space(&f.space, &phi.space)?;
    Ok(f.coeffs.dot(&phi.coeffs))
}

/// Every registered chart, each reached from one reference chart. An
/// abstract element is its reference-chart coefficient vector.
#[derive(Debug, Clone)]
pub struct StringRegistry {
    reference: SpaceId,
    dim: usize,
    charts: BTreeMap<SpaceId, LinearCoordTransform>,
}

impl StringRegistry {
    pub fn new(reference: &CoordinateSpace) -> Self {
        let mut charts = BTreeMap::new();
        charts.insert(
            reference.id.clone(),
            LinearCoordTransform::identity(reference.id.clone(), reference.id.clone(), reference.dim()),
        );
        Self {
            reference: reference.id.clone(),
            dim: reference.dim(),
            charts,
        }
    }

    pub fn reference(&self) -> &SpaceId {
        &self.reference
    }

    /// Adds `space` reached from the reference by `transform`.
    pub fn register_space(mut self, space: &CoordinateSpace, transform: LinearCoordTransform) -> Result<Self> {
        ensure_space(&self.reference, transform.from())?;
        ensure_space(&space.id, transform.to())?;
        ensure_len(self.dim, transform.dim())?;
        ensure_len(space.dim(), transform.dim())?;
        transform.ensure_conditioned(CONDITION_LIMIT)?;
        self.charts.insert(space.id.clone(), transform);
        Ok(self)
    }

    pub fn lookup(&self, id: &SpaceId) -> Option<&LinearCoordTransform> {
        self.charts.get(id)
    }

    pub fn spaces(&self) -> Vec<SpaceId> {
        self.charts.keys().cloned().collect()
    }

    fn chart(&self, id: &SpaceId) -> Result<&LinearCoordTransform> {
        self.charts
            .get(id)
            .ok_or_else(|| domain(format!("space `{id}` is not registered")))
    }

    pub fn to_reference(&self, v: &CoordinateVector) -> Result<CoordinateVector> {
        self.chart(&v.space)?.apply_inverse(v)
    }

    pub fn from_reference(&self, v: &CoordinateVector, target: &SpaceId) -> Result<CoordinateVector> {
        ensure_space(&self.reference, &v.space)?;
        self.chart(target)?.apply(v)
    }

    /// Coordinates of the same abstract element in chart `target`.
    pub fn transport(&self, v: &CoordinateVector, target: &SpaceId) -> Result<CoordinateVector> {
        let reference = self.to_reference(v)?;
        self.from_reference(&reference, target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_uniform_grid;
    use crate::linalg::c;
    use core::f64::consts::PI;

    fn small_grid() -> Grid {
        make_uniform_grid(-2.0, 2.0, 6, false).unwrap()
    }

    fn spd(n: usize) -> CMatrix {
        let b = CMatrix::from_fn(n, n, |i, j| c(((i * 3 + j * 5) % 7) as f64 - 3.0, ((i + 2 * j) % 5) as f64 - 2.0));
        &b * b.adjoint() + CMatrix::identity(n, n) * real(n as f64)
    }

    #[test]
    fn gaussian_l2_inner() {
        let grid = make_uniform_grid(-8.0, 8.0, 4001, false).unwrap();
        let space = CoordinateSpace::l2("x", grid);
        let phi = space.sample_real(|x| (-x * x).exp());
        let v = space.inner(&phi, &phi).unwrap();
        assert!((v.re - (PI / 2.0).sqrt()).abs() < 1e-9);
        assert!(v.im.abs() < 1e-15);
        assert_eq!(space.inner(&space.zero(), &phi).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn identity_gram_dual_is_conjugate() {
        let space = CoordinateSpace::with_gram("e", small_grid(), CMatrix::identity(6, 6)).unwrap();
        let phi = space.vector(CVector::from_fn(6, |i, _| c(i as f64, 1.0 - i as f64))).unwrap();
        let f = space.to_dual(&phi).unwrap();
        assert_eq!(f.coeffs(), &phi.coeffs().conjugate());
        let back = space.from_dual(&f).unwrap();
        assert!((back.coeffs() - phi.coeffs()).norm() < 1e-14);
    }

    #[test]
    fn l2_dual_folds_in_weights() {
        let space = CoordinateSpace::l2("x", small_grid());
        let phi = space.sample(|x| c(x, x * x));
        let psi = space.sample(|x| c(1.0 - x, 0.5));
        let f = space.to_dual(&phi).unwrap();
        for i in 0..6 {
            let expect = phi.coeffs()[i].conj() * space.rule().weights()[i];
            assert!((f.coeffs()[i] - expect).norm() < 1e-15);
        }
        // pairing reproduces the quadrature integral of conj(φ)·ψ
        let integrand = SampledFunction::new(space.grid(), phi.coeffs().conjugate().component_mul(psi.coeffs())).unwrap();
        let q = space.rule().integrate(&integrand).unwrap();
        assert!((pair(&f, &psi).unwrap() - q).norm() < 1e-14);
        // from_dual divides by weights and conjugates
        let g = space.dual(CVector::from_fn(6, |i, _| c(i as f64, 2.0))).unwrap();
        let v = space.from_dual(&g).unwrap();
        for i in 0..6 {
            let expect = g.coeffs()[i].conj() / space.rule().weights()[i];
            assert!((v.coeffs()[i] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn dual_identities_on_dense_gram() {
        let space = CoordinateSpace::with_gram("g", small_grid(), spd(6)).unwrap();
        let phi = space.vector(CVector::from_fn(6, |i, _| c(i as f64 - 2.0, 0.3 * i as f64))).unwrap();
        let psi = space.vector(CVector::from_fn(6, |i, _| c(1.0, -(i as f64)))).unwrap();
        let fpsi = space.to_dual(&psi).unwrap();
        let fphi = space.to_dual(&phi).unwrap();
        let lhs = pair(&fpsi, &phi).unwrap();
        let rhs = space.inner(&phi, &psi).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());
        let d = space.dual_inner(&fphi, &fpsi).unwrap();
        let e = space.inner(&psi, &phi).unwrap();
        assert!((d - e).norm() < 1e-9 * e.norm());
        let back = space.from_dual(&fphi).unwrap();
        assert!((back.coeffs() - phi.coeffs()).norm() < 1e-10 * phi.coeffs().norm());
        assert!(space.inner(&phi, &phi).unwrap().re > 0.0);
    }

    #[test]
    fn gram_validation() {
        let mut g = spd(4);
        g[(0, 1)] += c(1e-3, 0.0);
        assert!(matches!(Metric::dense(g), Err(Error::NotHermitian(_))));
        let mut g = spd(4);
        g[(0, 1)] += c(1e-16, 0.0);
        assert!(Metric::dense(g).is_ok());
        let neg = CMatrix::from_diagonal(&CVector::from_column_slice(&[real(1.0), real(-1.0)]));
        assert!(matches!(Metric::dense(neg), Err(Error::NotPositiveDefinite)));
        assert!(Metric::diagonal(&[1.0, 0.0]).is_err());
        assert!(CoordinateSpace::with_gram("x", small_grid(), spd(5)).is_err());
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = CoordinateSpace::l2("a", small_grid());
        let b = CoordinateSpace::l2("b", small_grid());
        let va = a.sample_real(|x| x);
        let vb = b.sample_real(|x| x);
        assert!(matches!(a.inner(&va, &vb), Err(Error::SpaceMismatch { .. })));
        assert!(a.to_dual(&vb).is_err());
        let fa = a.to_dual(&va).unwrap();
        assert!(pair(&fa, &vb).is_err());
        assert!(b.dual_inner(&fa, &fa).is_err());
        assert!(a.vector(CVector::zeros(3)).is_err());
    }

    #[test]
    fn orthonormality_examples() {
        let l2 = CoordinateSpace::l2("x", small_grid());
        let r = l2.is_orthonormal(1e-12).unwrap();
        assert!(r.orthonormal && r.defect == 0.0);
        let w: Vec<C64> = l2.rule().weights().iter().map(|&w| real(2.0 * w)).collect();
        let scaled = CoordinateSpace::with_gram("s", small_grid(), crate::linalg::diagonal(&w)).unwrap();
        let r = scaled.is_orthonormal(1e-6).unwrap();
        assert!(!r.orthonormal);
        assert!((r.defect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn delta_dual_norm_in_l2_is_inverse_weight() {
        let grid = make_uniform_grid(-8.0, 8.0, 201, false).unwrap();
        let space = CoordinateSpace::l2("x", grid);
        let d = space.delta_functional(0.0).unwrap();
        let v = space.dual_inner(&d, &d).unwrap();
        assert!((v.re - 1.0 / 0.08).abs() < 1e-9);
        let dc = space.delta_coordinate(0.0).unwrap();
        assert!((space.inner(&dc, &dc).unwrap().re - 12.5).abs() < 1e-9);
        // δ functional evaluates functions at the node
        let f = space.sample_real(|x| 3.0 + x);
        assert!((pair(&d, &f).unwrap().re - 3.0).abs() < 1e-15);
    }
}
