//! Invertible linear changes of coordinates `T: from → to`.
//!
//! `T` acts on coefficients by `φ = T φ̃`, on pairing-ready dual components
//! by the transpose (`f̃ = Tᵀ f`, so pairings are preserved) and pulls metrics
//! back by `G̃ = Tᴴ G T`.

use alloc::{boxed::Box, format, string::String, sync::Arc, vec::Vec};
use core::f64::consts::PI;
use core::fmt;

use nalgebra::DMatrix;
use num_traits::Euclid;
#[allow(unused_imports)]
use num_traits::Float;
use once_cell::race::OnceBox;

use crate::discretization::{quadrature_weights, Grid};
use crate::error::{domain, ensure_len, Error, Result};
use crate::linalg::{c, condition_estimate, frobenius, invert, real, CMatrix, CVector, C64};
use crate::spaces::{ensure_space, CoordinateSpace, CoordinateVector, DualVector, Metric, SpaceId};
use crate::CONDITION_LIMIT;

/// How a transform was built. Kernel-built kinds keep their source grid so
/// they can be rebuilt from parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformKind {
    Identity,
    /// Quadrature-weighted `e^{ikx}` kernel on `grid` (the spatial grid);
    /// `inverse` marks the frequency-to-space direction.
    Fourier { grid: Grid, inverse: bool },
    GaussSmooth { grid: Grid },
    Reparam { grid: Grid },
    Explicit,
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Fourier { inverse: false, .. } => "fourier",
            TransformKind::Fourier { inverse: true, .. } => "inverse-fourier",
            TransformKind::GaussSmooth { .. } => "gauss-smooth",
            TransformKind::Reparam { .. } => "reparam",
            TransformKind::Explicit => "explicit",
        }
    }

    fn inverted(&self) -> Self {
        match self {
            TransformKind::Identity => TransformKind::Identity,
            TransformKind::Fourier { grid, inverse } => TransformKind::Fourier {
                grid: grid.clone(),
                inverse: !inverse,
            },
            _ => TransformKind::Explicit,
        }
    }
}

/// `(ρf)(x_m) = Σ_j w_j e^{−(x_m−y_j)²−x_m²} f_j`, evaluated on the fly.
#[derive(Debug, Clone)]
struct GaussKernel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussKernel {
    #[inline]
    fn entry(&self, m: usize, j: usize) -> f64 {
        let x = self.nodes[m];
        let d = x - self.nodes[j];
        self.weights[j] * (-d * d - x * x).exp()
    }

    fn mul(&self, v: &CVector) -> CVector {
        let n = self.nodes.len();
        let mut out = CVector::zeros(n);
        for (j, &vj) in v.iter().enumerate() {
            if vj == C64::new(0.0, 0.0) {
                continue;
            }
            for m in 0..n {
                out[m] += vj * self.entry(m, j);
            }
        }
        out
    }

    fn transpose_mul(&self, v: &CVector) -> CVector {
        let n = self.nodes.len();
        CVector::from_fn(n, |j, _| {
            v.iter()
                .enumerate()
                .filter(|(_, vm)| **vm != C64::new(0.0, 0.0))
                .map(|(m, vm)| vm * self.entry(m, j))
                .sum()
        })
    }

    fn matrix(&self) -> CMatrix {
        let n = self.nodes.len();
        CMatrix::from_fn(n, n, |m, j| real(self.entry(m, j)))
    }
}

#[derive(Debug)]
enum Operator {
    Identity(usize),
    Dense(CMatrix),
    Gauss(GaussKernel),
}

struct Inner {
    op: Operator,
    inverse: OnceBox<Result<CMatrix>>,
    cond: OnceBox<f64>,
}

impl Inner {
    fn new(op: Operator) -> Self {
        Self {
            op,
            inverse: OnceBox::new(),
            cond: OnceBox::new(),
        }
    }

    fn with_inverse(op: Operator, inverse: CMatrix, cond: Option<f64>) -> Self {
        let inner = Self::new(op);
        let _ = inner.inverse.set(Box::new(Ok(inverse)));
        if let Some(cond) = cond {
            let _ = inner.cond.set(Box::new(cond));
        }
        inner
    }
}

/// An invertible linear map between two coordinate spaces of equal size.
///
/// Cloning is cheap; the operator, its inverse and the condition estimate
/// are shared and computed at most once.
#[derive(Clone)]
pub struct LinearCoordTransform {
    from: SpaceId,
    to: SpaceId,
    kind: TransformKind,
    inner: Arc<Inner>,
}

impl fmt::Debug for LinearCoordTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearCoordTransform")
            .field("from", &self.from)
            .field("to", &self.to)
            .field("kind", &self.kind.name())
            .field("dim", &self.dim())
            .finish()
    }
}

/// Frequency grid matched to a spatial grid of spacing `h`:
/// `k_m = m·Δk` for `m ∈ [−⌊n/2⌋, n − ⌊n/2⌋)` with `Δk = 2π/(n h)`.
///
/// For a periodic grid on `[−L, L)` this is `Δk = π/L`.
pub fn frequency_grid(grid_x: &Grid) -> Result<Grid> {
    let n = grid_x.len();
    let dk = 2.0 * PI / (n as f64 * grid_x.spacing());
    let start = -((n / 2) as f64) * dk;
    Grid::uniform(start, start + n as f64 * dk, n, true)
}

impl LinearCoordTransform {
    fn build(from: SpaceId, to: SpaceId, kind: TransformKind, inner: Inner) -> Self {
        Self {
            from,
            to,
            kind,
            inner: Arc::new(inner),
        }
    }

    pub fn identity(from: impl Into<SpaceId>, to: impl Into<SpaceId>, n: usize) -> Self {
        let inner = Inner::new(Operator::Identity(n));
        let _ = inner.cond.set(Box::new(1.0));
        Self::build(from.into(), to.into(), TransformKind::Identity, inner)
    }

    /// Wraps an explicit square matrix. Singular matrices are rejected.
    pub fn explicit(from: impl Into<SpaceId>, to: impl Into<SpaceId>, forward: CMatrix) -> Result<Self> {
        let (from, to) = (from.into(), to.into());
        if forward.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("transform matrix has non-finite entries"));
        }
        let inverse = invert(&forward, &label(&from, &to))?;
        Ok(Self::build(
            from,
            to,
            TransformKind::Explicit,
            Inner::with_inverse(Operator::Dense(forward), inverse, None),
        ))
    }

    /// Forward Fourier transform `ψ(k_m) = Σ_j w_j e^{i k_m x_j} φ(x_j)` from
    /// the spatial chart to the frequency chart, with the inverse
    /// `φ(x_j) = (1/(n w_j)) Σ_m e^{−i k_m x_j} ψ(k_m)`, which for periodic
    /// grids is the `(Δk/2π) Σ_m` rule. `grid_k` must be [`frequency_grid`]
    /// of `grid_x`.
    pub fn fourier_transform(
        from: impl Into<SpaceId>,
        to: impl Into<SpaceId>,
        grid_x: &Grid,
        grid_k: &Grid,
    ) -> Result<Self> {
        let n = grid_x.len();
        ensure_len(n, grid_k.len())?;
        let expected = frequency_grid(grid_x)?;
        let dk = expected.spacing();
        if (grid_k.spacing() - dk).abs() > 1e-9 * dk || (grid_k.a() - expected.a()).abs() > 1e-9 * dk {
            return Err(domain(format!(
                "frequency grid must start at {} with spacing {dk}",
                expected.a()
            )));
        }
        let weights = quadrature_weights(grid_x);
        let w = weights.weights();
        let n_i = n as i64;
        let m_min = -((n / 2) as i64);
        // k_m x_j = 2π m a / (n h) + 2π (m j mod n) / n, with the integer part exact.
        let offset = grid_x.a() / (n as f64 * grid_x.spacing());
        let phase = |m: usize, j: usize| -> f64 {
            let mm = m_min + m as i64;
            let r = (mm * j as i64).rem_euclid(n_i) as f64 / n as f64;
            let f = (mm as f64 * offset).fract();
            2.0 * PI * (f + r)
        };
        let forward = CMatrix::from_fn(n, n, |m, j| {
            let (s, co) = phase(m, j).sin_cos();
            c(co, s) * w[j]
        });
        let inverse = CMatrix::from_fn(n, n, |j, m| {
            let (s, co) = phase(m, j).sin_cos();
            c(co, -s) / (n as f64 * w[j])
        });
        // E/√n is unitary, so cond(E·diag(w)) = max w / min w.
        let wmax = w.iter().copied().fold(0.0, f64::max);
        let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self::build(
            from.into(),
            to.into(),
            TransformKind::Fourier {
                grid: grid_x.clone(),
                inverse: false,
            },
            Inner::with_inverse(Operator::Dense(forward), inverse, Some(wmax / wmin)),
        ))
    }

    /// Gaussian smoothing `ρ` on one grid. Kept matrix-free; `ρ` is severely
    /// ill-conditioned, so its inverse is only produced when the condition
    /// estimate is below [`CONDITION_LIMIT`].
    pub fn gauss_smooth(from: impl Into<SpaceId>, to: impl Into<SpaceId>, grid: &Grid) -> Self {
        let kernel = GaussKernel {
            nodes: grid.points().to_vec(),
            weights: quadrature_weights(grid).weights().to_vec(),
        };
        Self::build(
            from.into(),
            to.into(),
            TransformKind::GaussSmooth { grid: grid.clone() },
            Inner::new(Operator::Gauss(kernel)),
        )
    }

    /// `(ωφ)(s) = φ(σ(s))` by cubic-spline interpolation of the samples
    /// (not-a-knot ends, or a cyclic spline on periodic grids). Nodes mapped
    /// onto nodes give exact unit rows, so a node permutation is an exact
    /// permutation matrix.
    ///
    /// On a non-periodic grid `σ` must fix both endpoints; on a periodic grid
    /// it is a lift with `σ(s + P) = σ(s) + P`. In both cases it must be
    /// strictly increasing.
    ///
    /// A smooth bijection can still give a singular matrix when `σ′` is small
    /// somewhere (e.g. `σ(s) = s²`: the samples crowd near `a` and leave too
    /// few in the rest of the interval), so invertibility is not required
    /// here. The inverse is computed on demand and refused like any other
    /// ill-conditioned one.
    pub fn reparametrize<F: Fn(f64) -> f64>(
        from: impl Into<SpaceId>,
        to: impl Into<SpaceId>,
        grid: &Grid,
        sigma: F,
    ) -> Result<Self> {
        let forward = reparam_matrix(grid, &sigma)?;
        Ok(Self::build(
            from.into(),
            to.into(),
            TransformKind::Reparam { grid: grid.clone() },
            Inner::new(Operator::Dense(forward)),
        ))
    }

    /// A transition of `space` onto itself that preserves its metric:
    /// the columns of `basis` are orthonormalized in the metric (`V`), and
    /// `U = V Lᴴ` with `G = L Lᴴ`, so `Uᴴ G U = G`.
    pub fn gram_unitary(space: &CoordinateSpace, basis: &CMatrix) -> Result<Self> {
        let n = space.dim();
        ensure_len(n, basis.nrows())?;
        ensure_len(n, basis.ncols())?;
        let g = space.metric().to_dense()?;
        let mut v = basis.clone();
        for _ in 0..2 {
            for k in 0..n {
                for j in 0..k {
                    let vj = v.column(j).into_owned();
                    let vk = v.column(k).into_owned();
                    let proj = vj.dotc(&(&g * &vk));
                    v.set_column(k, &(vk - vj * proj));
                }
                let vk = v.column(k).into_owned();
                let norm = vk.dotc(&(&g * &vk)).re.sqrt();
                if !(norm > 1e-12) {
                    return Err(Error::Singular(String::from("gram-unitary basis")));
                }
                v.set_column(k, &(vk / real(norm)));
            }
        }
        let l = space.metric().cholesky_factor()?;
        Self::explicit(space.id().clone(), space.id().clone(), v * l.adjoint())
    }

    pub fn from(&self) -> &SpaceId {
        &self.from
    }

    pub fn to(&self) -> &SpaceId {
        &self.to
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.inner.op {
            Operator::Identity(n) => *n,
            Operator::Dense(m) => m.nrows(),
            Operator::Gauss(k) => k.nodes.len(),
        }
    }

    pub fn name(&self) -> String {
        label(&self.from, &self.to)
    }

    /// Same operator between renamed spaces.
    pub fn relabel(&self, from: impl Into<SpaceId>, to: impl Into<SpaceId>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind: self.kind.clone(),
            inner: self.inner.clone(),
        }
    }

    /// Dense forward matrix (materialized for kernel transforms).
    pub fn matrix(&self) -> CMatrix {
        match &self.inner.op {
            Operator::Identity(n) => CMatrix::identity(*n, *n),
            Operator::Dense(m) => m.clone(),
            Operator::Gauss(k) => k.matrix(),
        }
    }

    fn raw_inverse(&self) -> &Result<CMatrix> {
        self.inner.inverse.get_or_init(|| {
            Box::new(match &self.inner.op {
                Operator::Identity(n) => Ok(CMatrix::identity(*n, *n)),
                Operator::Dense(m) => invert(m, &self.name()),
                Operator::Gauss(k) => invert(&k.matrix(), &self.name()),
            })
        })
    }

    /// Estimated 2-norm condition number, computed once.
    pub fn condition(&self) -> f64 {
        *self.inner.cond.get_or_init(|| {
            Box::new(match self.raw_inverse() {
                Ok(inv) => condition_estimate(&self.matrix(), inv),
                Err(_) => f64::INFINITY,
            })
        })
    }

    pub fn ensure_conditioned(&self, limit: f64) -> Result<()> {
        let cond = self.condition();
        if cond <= limit {
            Ok(())
        } else {
            Err(Error::IllConditioned {
                name: self.name(),
                cond,
                limit,
            })
        }
    }

    /// Dense inverse; refused above [`CONDITION_LIMIT`].
    pub fn inverse_matrix(&self) -> Result<CMatrix> {
        if let Operator::Identity(n) = &self.inner.op {
            return Ok(CMatrix::identity(*n, *n));
        }
        self.ensure_conditioned(CONDITION_LIMIT)?;
        self.raw_inverse().clone()
    }

    /// `T⁻¹: to → from`.
    pub fn inverse(&self) -> Result<Self> {
        let kind = self.kind.inverted();
        if let Operator::Identity(n) = &self.inner.op {
            return Ok(Self::identity(self.to.clone(), self.from.clone(), *n).with_kind(kind));
        }
        let inverse = self.inverse_matrix()?;
        let inner = Inner::with_inverse(Operator::Dense(inverse), self.matrix(), Some(self.condition()));
        Ok(Self::build(self.to.clone(), self.from.clone(), kind, inner))
    }

    fn with_kind(mut self, kind: TransformKind) -> Self {
        self.kind = kind;
        self
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &LinearCoordTransform) -> Result<Self> {
        ensure_space(&self.from, &first.to)?;
        ensure_len(self.dim(), first.dim())?;
        if let Operator::Identity(_) = &self.inner.op {
            return Ok(first.relabel(first.from.clone(), self.to.clone()));
        }
        if let Operator::Identity(_) = &first.inner.op {
            return Ok(self.relabel(first.from.clone(), self.to.clone()));
        }
        let forward = self.matrix() * first.matrix();
        let inner = match (self.raw_inverse(), first.raw_inverse()) {
            (Ok(a), Ok(b)) => Inner::with_inverse(Operator::Dense(forward), b * a, None),
            _ => Inner::new(Operator::Dense(forward)),
        };
        Ok(Self::build(first.from.clone(), self.to.clone(), TransformKind::Explicit, inner))
    }

    /// `T v`.
    pub fn forward_mul(&self, v: &CVector) -> CVector {
        match &self.inner.op {
            Operator::Identity(_) => v.clone(),
            Operator::Dense(m) => m * v,
            Operator::Gauss(k) => k.mul(v),
        }
    }

    /// `Tᵀ f`.
    pub fn transpose_mul(&self, f: &CVector) -> CVector {
        match &self.inner.op {
            Operator::Identity(_) => f.clone(),
            Operator::Dense(m) => m.tr_mul(f),
            Operator::Gauss(k) => k.transpose_mul(f),
        }
    }

    /// `Tᴴ f`.
    pub fn adjoint_mul(&self, f: &CVector) -> CVector {
        match &self.inner.op {
            Operator::Identity(_) => f.clone(),
            Operator::Dense(m) => m.ad_mul(f),
            // real kernel: Tᴴ = Tᵀ
            Operator::Gauss(k) => k.transpose_mul(f),
        }
    }

    /// `T⁻¹ v`.
    pub fn inverse_mul(&self, v: &CVector) -> Result<CVector> {
        match &self.inner.op {
            Operator::Identity(_) => Ok(v.clone()),
            _ => Ok(self.inverse_matrix()? * v),
        }
    }

    /// `T⁻ᴴ f`.
    pub fn inverse_adjoint_mul(&self, f: &CVector) -> Result<CVector> {
        match &self.inner.op {
            Operator::Identity(_) => Ok(f.clone()),
            _ => Ok(self.inverse_matrix()?.ad_mul(f)),
        }
    }

    /// `T⁻ᵀ f`.
    pub fn inverse_transpose_mul(&self, f: &CVector) -> Result<CVector> {
        match &self.inner.op {
            Operator::Identity(_) => Ok(f.clone()),
            _ => Ok(self.inverse_matrix()?.tr_mul(f)),
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        ensure_len(self.dim(), len)
    }

    /// Coordinates in `to` of the element with coordinates `φ̃` in `from`.
    pub fn apply(&self, phi: &CoordinateVector) -> Result<CoordinateVector> {
        ensure_space(&self.from, phi.space())?;
        self.check_dim(phi.len())?;
        Ok(CoordinateVector::from_parts(self.to.clone(), self.forward_mul(phi.coeffs())))
    }

    pub fn apply_inverse(&self, phi: &CoordinateVector) -> Result<CoordinateVector> {
        ensure_space(&self.to, phi.space())?;
        self.check_dim(phi.len())?;
        Ok(CoordinateVector::from_parts(self.from.clone(), self.inverse_mul(phi.coeffs())?))
    }

    /// Pulls a functional on `to` back to `from`: `f̃ = Tᵀ f`, so that
    /// `pair(f̃, φ̃) = pair(f, T φ̃)`.
    pub fn adjoint_apply(&self, f: &DualVector) -> Result<DualVector> {
        ensure_space(&self.to, f.space())?;
        self.check_dim(f.len())?;
        Ok(DualVector::from_parts(self.from.clone(), self.transpose_mul(f.coeffs())))
    }

    /// Pushes a functional on `from` forward to `to`: `f = T⁻ᵀ f̃`.
    pub fn adjoint_apply_inverse(&self, f: &DualVector) -> Result<DualVector> {
        ensure_space(&self.from, f.space())?;
        self.check_dim(f.len())?;
        Ok(DualVector::from_parts(self.to.clone(), self.inverse_transpose_mul(f.coeffs())?))
    }

    /// `Tᴴ G T`: the metric on `from` that makes `T` an isometry into a
    /// space with metric `G` on `to`.
    pub fn pullback_metric(&self, metric: &Metric) -> Result<Metric> {
        self.check_dim(metric.dim())?;
        let t = self.matrix();
        let g = metric.to_dense()?;
        Metric::dense(t.adjoint() * g * t)
    }

    /// `T⁻ᴴ G T⁻¹` on `to`, kept in factored form (no inverse is formed).
    pub fn induced_metric(&self, metric: &Metric) -> Result<Metric> {
        self.check_dim(metric.dim())?;
        Metric::induced(Arc::new(self.clone()), metric.clone())
    }
}

fn label(from: &SpaceId, to: &SpaceId) -> String {
    format!("{from}→{to}")
}

/// `‖Uᴴ G U − G‖ / ‖G‖` for a transform of `space` onto itself.
pub fn transition_unitarity_defect(u: &LinearCoordTransform, space: &CoordinateSpace) -> Result<f64> {
    ensure_space(space.id(), u.from())?;
    ensure_space(space.id(), u.to())?;
    ensure_len(space.dim(), u.dim())?;
    let g = space.metric().to_dense()?;
    let m = u.matrix();
    let diff = m.adjoint() * &g * m - &g;
    Ok(frobenius(&diff) / frobenius(&g))
}

/// Rows of the interpolation operator `φ ↦ (φ(σ(s_i)))_i`.
fn reparam_matrix(grid: &Grid, sigma: &dyn Fn(f64) -> f64) -> Result<CMatrix> {
    let n = grid.len();
    let h = grid.spacing();
    let pts = grid.points();
    let snap = 1e-9 * h;

    // monotonicity on nodes and midpoints
    let mut probes: Vec<f64> = Vec::with_capacity(2 * n + 1);
    for (i, &s) in pts.iter().enumerate() {
        probes.push(s);
        if i + 1 < n || grid.is_periodic() {
            probes.push(s + 0.5 * h);
        }
    }
    if grid.is_periodic() {
        probes.push(grid.b());
    }
    let values: Vec<f64> = probes.iter().map(|&s| sigma(s)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(domain("reparametrization is not finite on the grid"));
    }
    if values.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(domain("reparametrization must be strictly increasing"));
    }
    if grid.is_periodic() {
        let span = values[values.len() - 1] - values[0];
        if (span - grid.period()).abs() > snap {
            return Err(domain("periodic reparametrization must advance by exactly one period"));
        }
    } else if (values[0] - grid.a()).abs() > snap || (values[values.len() - 1] - grid.b()).abs() > snap {
        return Err(domain("reparametrization must fix both endpoints"));
    }

    let moments = spline_moments(grid)?;
    let mut out = CMatrix::zeros(n, n);
    for (i, &s) in pts.iter().enumerate() {
        let mut t = sigma(s);
        if grid.is_periodic() {
            t = grid.a() + Euclid::rem_euclid(&(t - grid.a()), &grid.period());
        } else {
            t = t.clamp(grid.a(), grid.b());
        }
        let pos = (t - grid.a()) / h;
        let nearest = pos.round();
        if (pos - nearest).abs() * h <= snap {
            let j = nearest as usize;
            let j = if grid.is_periodic() { j % n } else { j.min(n - 1) };
            out[(i, j)] = real(1.0);
            continue;
        }
        let row = match &moments {
            Some(m) => spline_row(grid, m, t),
            None => lagrange_row(pts, t),
        };
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = real(v);
        }
    }
    Ok(out)
}

/// `C` with spline second derivatives `M = C φ`; `None` when the grid is
/// too small for a not-a-knot spline (plain polynomial interpolation then).
fn spline_moments(grid: &Grid) -> Result<Option<DMatrix<f64>>> {
    let n = grid.len();
    let h2 = grid.spacing() * grid.spacing();
    let mut s = DMatrix::<f64>::zeros(n, n);
    let mut r = DMatrix::<f64>::zeros(n, n);
    if grid.is_periodic() {
        for i in 0..n {
            let (p, q) = ((i + n - 1) % n, (i + 1) % n);
            s[(i, p)] += 1.0;
            s[(i, i)] += 4.0;
            s[(i, q)] += 1.0;
            r[(i, p)] += 6.0 / h2;
            r[(i, i)] -= 12.0 / h2;
            r[(i, q)] += 6.0 / h2;
        }
    } else {
        if n < 4 {
            return Ok(None);
        }
        for i in 1..n - 1 {
            s[(i, i - 1)] = 1.0;
            s[(i, i)] = 4.0;
            s[(i, i + 1)] = 1.0;
            r[(i, i - 1)] = 6.0 / h2;
            r[(i, i)] = -12.0 / h2;
            r[(i, i + 1)] = 6.0 / h2;
        }
        // not-a-knot: third derivative continuous across the second and
        // second-to-last nodes
        s[(0, 0)] = 1.0;
        s[(0, 1)] = -2.0;
        s[(0, 2)] = 1.0;
        s[(n - 1, n - 3)] = 1.0;
        s[(n - 1, n - 2)] = -2.0;
        s[(n - 1, n - 1)] = 1.0;
    }
    s.lu()
        .solve(&r)
        .map(Some)
        .ok_or_else(|| Error::Singular(String::from("spline system")))
}

fn spline_row(grid: &Grid, moments: &DMatrix<f64>, t: f64) -> Vec<f64> {
    let n = grid.len();
    let h = grid.spacing();
    let cells = if grid.is_periodic() { n } else { n - 1 };
    let k = (((t - grid.a()) / h).floor().max(0.0) as usize).min(cells - 1);
    let k1 = (k + 1) % n;
    let b = (t - (grid.a() + k as f64 * h)) / h;
    let a = 1.0 - b;
    let ca = (a * a * a - a) * h * h / 6.0;
    let cb = (b * b * b - b) * h * h / 6.0;
    let mut row = alloc::vec![0.0; n];
    row[k] += a;
    row[k1] += b;
    for j in 0..n {
        row[j] += ca * moments[(k, j)] + cb * moments[(k1, j)];
    }
    row
}

fn lagrange_row(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            nodes
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != j)
                .map(|(_, &xm)| (t - xm) / (nodes[j] - xm))
                .product()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_uniform_grid;
    use crate::linalg::vector_norm;
    use crate::spaces::pair;

    fn vec_of(n: usize, seed: u64) -> CVector {
        // splitmix64
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        CVector::from_fn(n, |_, _| c(next(), next()))
    }

    #[test]
    fn identity_is_trivial() {
        let grid = make_uniform_grid(-1.0, 1.0, 7, false).unwrap();
        let space = CoordinateSpace::l2("x", grid);
        let t = LinearCoordTransform::identity("x", "x", 7);
        let phi = space.sample_real(|x| x * x);
        assert_eq!(t.apply(&phi).unwrap(), phi);
        assert_eq!(t.condition(), 1.0);
        let f = space.to_dual(&phi).unwrap();
        assert_eq!(t.adjoint_apply(&f).unwrap(), f);
        let g = t.pullback_metric(space.metric()).unwrap();
        assert!(frobenius(&(g.to_dense().unwrap() - space.metric().to_dense().unwrap())) < 1e-15);
        assert_eq!(transition_unitarity_defect(&t, &space).unwrap(), 0.0);
    }

    #[test]
    fn fourier_of_gaussian_is_gaussian() {
        let grid_x = Grid::symmetric(8.0, 1024, true).unwrap();
        let grid_k = frequency_grid(&grid_x).unwrap();
        assert!((grid_k.spacing() - PI / 8.0).abs() < 1e-14);
        let f = LinearCoordTransform::fourier_transform("x", "k", &grid_x, &grid_k).unwrap();
        let x = CoordinateSpace::l2("x", grid_x.clone());
        let phi = x.sample_real(|x| (-x * x / 2.0).exp());
        let psi = f.apply(&phi).unwrap();
        for (m, &k) in grid_k.points().iter().enumerate() {
            let expect = (2.0 * PI).sqrt() * (-k * k / 2.0).exp();
            assert!((psi.coeffs()[m] - real(expect)).norm() < 1e-6, "k = {k}");
        }
        let back = f.apply_inverse(&psi).unwrap();
        assert!(vector_norm(&(back.coeffs() - phi.coeffs())) < 1e-9);
        assert!((f.condition() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_nonperiodic_round_trip() {
        let grid_x = make_uniform_grid(-6.0, 6.0, 65, false).unwrap();
        let grid_k = frequency_grid(&grid_x).unwrap();
        let f = LinearCoordTransform::fourier_transform("x", "k", &grid_x, &grid_k).unwrap();
        let m = f.matrix() * f.inverse_matrix().unwrap();
        assert!(frobenius(&(m - CMatrix::identity(65, 65))) < 1e-10);
        assert!((f.condition() - 2.0).abs() < 1e-9);
        let wrong = make_uniform_grid(-1.0, 1.0, 65, true).unwrap();
        assert!(LinearCoordTransform::fourier_transform("x", "k", &grid_x, &wrong).is_err());
        let short = frequency_grid(&make_uniform_grid(-6.0, 6.0, 64, false).unwrap()).unwrap();
        assert!(LinearCoordTransform::fourier_transform("x", "k", &grid_x, &short).is_err());
    }

    #[test]
    fn fourier_of_constant_concentrates_at_zero() {
        let grid_x = Grid::symmetric(4.0, 32, true).unwrap();
        let grid_k = frequency_grid(&grid_x).unwrap();
        let f = LinearCoordTransform::fourier_transform("x", "k", &grid_x, &grid_k).unwrap();
        let x = CoordinateSpace::l2("x", grid_x);
        let psi = f.apply(&x.sample_real(|_| 1.0)).unwrap();
        let zero = grid_k.nearest_node(0.0).unwrap();
        assert!((psi.coeffs()[zero] - real(8.0)).norm() < 1e-12);
        for (m, v) in psi.coeffs().iter().enumerate() {
            if m != zero {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plane_wave_functional_pulls_back_to_delta() {
        let grid_x = Grid::symmetric(5.0, 40, true).unwrap();
        let grid_k = frequency_grid(&grid_x).unwrap();
        let omega = LinearCoordTransform::fourier_transform("x", "k", &grid_x, &grid_k)
            .unwrap()
            .inverse()
            .unwrap();
        assert_eq!(omega.kind().name(), "inverse-fourier");
        let x = CoordinateSpace::l2("x", grid_x);
        let p = 23;
        let lambda = grid_k.points()[p];
        let wave = x.sample(|t| c(0.0, -lambda * t).exp());
        let g = omega.adjoint_apply(&x.to_dual(&wave).unwrap()).unwrap();
        let total: f64 = g.coeffs().iter().map(|z| z.norm_sqr()).sum();
        assert!(g.coeffs()[p].norm_sqr() / total > 0.99);
        assert!((g.coeffs()[p].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_smoothing_of_delta_and_zero() {
        let grid = Grid::symmetric(8.0, 161, false).unwrap();
        let rho = LinearCoordTransform::gauss_smooth("y", "x", &grid);
        let y = CoordinateSpace::l2("y", grid.clone());
        let smooth = rho.apply(&y.delta_coordinate(0.0).unwrap()).unwrap();
        for (m, &x) in grid.points().iter().enumerate() {
            assert!((smooth.coeffs()[m].re - (-2.0 * x * x).exp()).abs() < 1e-14);
        }
        assert_eq!(rho.apply(&y.zero()).unwrap().coeffs(), y.zero().coeffs());
        // columns peak near their own node for small |y|
        let m = rho.matrix();
        for j in [78usize, 80, 82] {
            let col = m.column(j);
            let best = (0..161).max_by(|&a, &b| col[a].re.partial_cmp(&col[b].re).unwrap()).unwrap();
            let yj = grid.points()[j];
            // e^{−(x−y)²−x²} peaks at x = y/2
            assert!((grid.points()[best] - yj / 2.0).abs() <= grid.spacing());
        }
    }

    #[test]
    fn gauss_inverse_is_refused() {
        let grid = Grid::symmetric(8.0, 101, false).unwrap();
        let rho = LinearCoordTransform::gauss_smooth("y", "x", &grid);
        assert!(rho.condition() > CONDITION_LIMIT);
        assert!(matches!(rho.inverse_matrix(), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn gauss_matrix_free_products_match_dense() {
        let grid = Grid::symmetric(3.0, 31, false).unwrap();
        let rho = LinearCoordTransform::gauss_smooth("y", "x", &grid);
        let m = rho.matrix();
        let v = vec_of(31, 4);
        assert!(vector_norm(&(rho.forward_mul(&v) - &m * &v)) < 1e-13);
        assert!(vector_norm(&(rho.transpose_mul(&v) - m.tr_mul(&v))) < 1e-13);
        assert!(vector_norm(&(rho.adjoint_mul(&v) - m.ad_mul(&v))) < 1e-13);
    }

    #[test]
    fn smoothed_delta_dual_norm_matches_oracle() {
        let grid = Grid::symmetric(8.0, 801, false).unwrap();
        let y = CoordinateSpace::l2("y", grid.clone());
        let rho = Arc::new(LinearCoordTransform::gauss_smooth("y", "x", &grid));
        let x = CoordinateSpace::induced("x", grid, rho, &y).unwrap();
        let d = x.delta_functional(0.0).unwrap();
        let v = x.dual_inner(&d, &d).unwrap();
        assert!((v.re - crate::gauss::smoothed_metric_kernel(0.0, 0.0)).abs() < 1e-9);
    }

    #[test]
    fn explicit_rejects_singular() {
        let m = CMatrix::from_fn(3, 3, |i, _| real(i as f64));
        assert!(matches!(LinearCoordTransform::explicit("a", "b", m), Err(Error::Singular(_))));
    }

    #[test]
    fn apply_checks_spaces() {
        let grid = make_uniform_grid(0.0, 1.0, 5, false).unwrap();
        let a = CoordinateSpace::l2("a", grid.clone());
        let b = CoordinateSpace::l2("b", grid);
        let t = LinearCoordTransform::identity("a", "b", 5);
        assert!(t.apply(&b.zero()).is_err());
        assert!(t.apply_inverse(&a.zero()).is_err());
        assert!(t.adjoint_apply(&a.to_dual(&a.zero()).unwrap()).is_err());
    }

    #[test]
    fn pairing_and_isometry() {
        let grid = make_uniform_grid(-1.0, 1.0, 12, false).unwrap();
        let space = CoordinateSpace::l2("h", grid.clone());
        let m = CMatrix::from_fn(12, 12, |i, j| if i == j { real(2.0) } else { real(0.0) }) + {
            let v = vec_of(144, 9);
            CMatrix::from_fn(12, 12, |i, j| v[i * 12 + j] * 0.3)
        };
        let t = LinearCoordTransform::explicit("ht", "h", m).unwrap();
        let source = CoordinateSpace::new("ht", grid, t.pullback_metric(space.metric()).unwrap()).unwrap();
        let phi = source.vector(vec_of(12, 1)).unwrap();
        let psi = source.vector(vec_of(12, 2)).unwrap();
        let f = space.dual(vec_of(12, 3)).unwrap();
        let lhs = pair(&f, &t.apply(&phi).unwrap()).unwrap();
        let rhs = pair(&t.adjoint_apply(&f).unwrap(), &phi).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        let a = space.inner(&t.apply(&phi).unwrap(), &t.apply(&psi).unwrap()).unwrap();
        let b = source.inner(&phi, &psi).unwrap();
        assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
        let back = t.adjoint_apply_inverse(&t.adjoint_apply(&f).unwrap()).unwrap();
        assert!(vector_norm(&(back.coeffs() - f.coeffs())) < 1e-12);
    }

    #[test]
    fn composition_pullback() {
        let grid = make_uniform_grid(0.0, 1.0, 6, false).unwrap();
        let space = CoordinateSpace::l2("c", grid);
        let m1 = CMatrix::from_fn(6, 6, |i, j| if i == j { real(3.0) } else { vec_of(1, (i * 6 + j) as u64)[0] });
        let m2 = CMatrix::from_fn(6, 6, |i, j| if i == j { real(2.0) } else { vec_of(1, (100 + i * 6 + j) as u64)[0] });
        let t1 = LinearCoordTransform::explicit("b", "c", m1).unwrap();
        let t2 = LinearCoordTransform::explicit("a", "b", m2).unwrap();
        let both = t1.compose(&t2).unwrap();
        assert_eq!(both.from().as_str(), "a");
        let direct = both.pullback_metric(space.metric()).unwrap().to_dense().unwrap();
        let sequential = t2
            .pullback_metric(&t1.pullback_metric(space.metric()).unwrap())
            .unwrap()
            .to_dense()
            .unwrap();
        assert!(frobenius(&(&direct - &sequential)) < 1e-10 * frobenius(&direct));
        assert!(t2.compose(&t1).is_err());
    }

    #[test]
    fn reparam_identity_and_shift() {
        let grid = make_uniform_grid(0.0, 2.0, 9, false).unwrap();
        let t = LinearCoordTransform::reparametrize("a", "b", &grid, |s| s).unwrap();
        assert_eq!(t.matrix(), CMatrix::identity(9, 9));
        let periodic = make_uniform_grid(0.0, 1.0, 8, true).unwrap();
        let h = periodic.spacing();
        let shift = LinearCoordTransform::reparametrize("a", "b", &periodic, |s| s + h).unwrap();
        let m = shift.matrix();
        for i in 0..8 {
            for j in 0..8 {
                let expect = if j == (i + 1) % 8 { 1.0 } else { 0.0 };
                assert_eq!(m[(i, j)], real(expect));
            }
        }
        let inv = shift.inverse_matrix().unwrap();
        assert_eq!(inv, m.transpose());
    }

    #[test]
    fn reparam_quadratic_converges_cubically() {
        let errs: Vec<f64> = [17usize, 33, 65]
            .iter()
            .map(|&n| {
                let grid = make_uniform_grid(0.0, 1.0, n, false).unwrap();
                let t = LinearCoordTransform::reparametrize("a", "b", &grid, |s| s * s).unwrap();
                let space = CoordinateSpace::l2("a", grid.clone());
                // a smooth non-polynomial profile exercises the interpolation error
                let out = t.apply(&space.sample_real(|x| (3.0 * x).sin())).unwrap();
                grid.points()
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| (out.coeffs()[i].re - (3.0 * s * s).sin()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 2.8, "{errs:?}");
        }
        // a linear function is reproduced exactly up to rounding
        let grid = make_uniform_grid(0.0, 1.0, 21, false).unwrap();
        let t = LinearCoordTransform::reparametrize("a", "b", &grid, |s| s * s).unwrap();
        let space = CoordinateSpace::l2("a", grid.clone());
        let out = t.apply(&space.sample_real(|x| 2.0 * x - 1.0)).unwrap();
        for (i, &s) in grid.points().iter().enumerate() {
            assert!((out.coeffs()[i].re - (2.0 * s * s - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn reparam_rejections() {
        let grid = make_uniform_grid(0.0, 1.0, 10, false).unwrap();
        assert!(LinearCoordTransform::reparametrize("a", "b", &grid, |s| 1.0 - s).is_err());
        assert!(LinearCoordTransform::reparametrize("a", "b", &grid, |s| 0.5 * s).is_err());
        assert!(LinearCoordTransform::reparametrize("a", "b", &grid, |s| (4.0 * s * (1.0 - s)).min(s)).is_err());
        let small = make_uniform_grid(0.0, 1.0, 3, false).unwrap();
        let t = LinearCoordTransform::reparametrize("a", "b", &small, |s| s.powf(1.5)).unwrap();
        assert!(t.condition().is_finite());
        // interpolation is well defined, the discrete operator is not invertible
        let crowded = LinearCoordTransform::reparametrize("a", "b", &grid, |s| s * s).unwrap();
        assert!(crowded.condition() > CONDITION_LIMIT);
        assert!(crowded.inverse_matrix().is_err());
        let gentle = LinearCoordTransform::reparametrize("a", "b", &grid, |s| s + 0.05 * (PI * s).sin()).unwrap();
        assert!(gentle.condition() < 10.0);
    }

    #[test]
    fn unitary_freedom() {
        let grid = make_uniform_grid(-1.0, 1.0, 10, false).unwrap();
        let b = CMatrix::from_fn(10, 10, |i, j| vec_of(1, (i * 10 + j) as u64)[0]);
        let g = CMatrix::identity(10, 10) + &b * b.adjoint() * real(0.1);
        let space = CoordinateSpace::with_gram("h", grid, g).unwrap();
        let basis = CMatrix::from_fn(10, 10, |i, j| vec_of(1, (500 + i * 10 + j) as u64)[0]);
        let u = LinearCoordTransform::gram_unitary(&space, &basis).unwrap();
        assert!(transition_unitarity_defect(&u, &space).unwrap() < 1e-10);
        let twice = LinearCoordTransform::explicit("h", "h", CMatrix::identity(10, 10) * real(2.0)).unwrap();
        assert!((transition_unitarity_defect(&twice, &space).unwrap() - 3.0).abs() < 1e-12);
    }
}
