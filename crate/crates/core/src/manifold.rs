//! Nonlinear coordinate changes, chart distances, tangent metrics and a
//! small atlas/tensor layer.
//!
//! Points of the abstract manifold are represented by their coefficients in
//! a reference chart. Each [`Chart`] is an open metric ball in the reference
//! chart together with a map from reference coordinates to its own.

use alloc::{boxed::Box, format, string::String, sync::Arc, vec::Vec};
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, ensure_len, Error, Result};
use crate::linalg::{hermitian_eigenvalues, real, vector_norm, CMatrix, CVector, C64};
use crate::spaces::{ensure_space, CoordinateSpace, CoordinateVector, DualVector, Metric, SpaceId};
use crate::transforms::LinearCoordTransform;

/// A differentiable, invertible map between coefficient vectors.
pub trait NonlinearMap: Send + Sync {
    fn from(&self) -> &SpaceId;
    fn to(&self) -> &SpaceId;
    fn dim(&self) -> usize;
    fn forward(&self, p: &CVector) -> Result<CVector>;
    fn inverse(&self, q: &CVector) -> Result<CVector>;
    /// Complex Jacobian at `p` (a point of `from`).
    fn derivative_at(&self, p: &CVector) -> Result<CMatrix>;
    fn describe(&self) -> String;
}

impl fmt::Debug for dyn NonlinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} → {})", self.describe(), self.from(), self.to())
    }
}

fn point_label(p: &CVector) -> String {
    let head: Vec<String> = p.iter().take(3).map(|z| format!("{:.3e}{:+.3e}i", z.re, z.im)).collect();
    let more = if p.len() > 3 { ", …" } else { "" };
    format!("[{}{}] (‖p‖ = {:.3e})", head.join(", "), more, vector_norm(p))
}

/// `u ↦ u + c·u³` in every coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseCubic {
    from: SpaceId,
    to: SpaceId,
    dim: usize,
    c: f64,
}

impl PointwiseCubic {
    pub fn new(from: impl Into<SpaceId>, to: impl Into<SpaceId>, dim: usize, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(domain("cubic coefficient must be finite"));
        }
        Ok(Self {
            from: from.into(),
            to: to.into(),
            dim,
            c,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.c
    }

    /// Real root of `u + c u³ = y` (the unique one when `c ≥ 0`).
    fn real_root(&self, y: f64) -> f64 {
        let c = self.c;
        if c == 0.0 {
            return y;
        }
        if c > 0.0 {
            // Cardano for u³ + p u + q = 0 with p = 1/c, q = −y/c
            let p = 1.0 / c;
            let q = -y / c;
            let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
            (-q / 2.0 + disc).cbrt() + (-q / 2.0 - disc).cbrt()
        } else {
            y
        }
    }

    fn invert_scalar(&self, y: C64) -> Result<C64> {
        let c = self.c;
        let mut u = C64::new(self.real_root(y.re), 0.0);
        let slope = real(1.0) + u * u * (3.0 * c);
        u += C64::new(0.0, y.im) / slope;
        let tol = 1e-15 * (1.0 + y.norm());
        for _ in 0..60 {
            let f = u + u * u * u * c - y;
            let df = real(1.0) + u * u * (3.0 * c);
            if df.norm() < 1e-300 {
                break;
            }
            let step = f / df;
            u -= step;
            if step.norm() <= tol {
                break;
            }
        }
        let residual = (u + u * u * u * c - y).norm();
        if residual.is_finite() && residual <= 1e-12 * (1.0 + y.norm()) {
            Ok(u)
        } else {
            Err(Error::OutsideChart(format!("no inverse of u + {c}·u³ near {y}")))
        }
    }
}

impl NonlinearMap for PointwiseCubic {
    fn from(&self) -> &SpaceId {
        &self.from
    }

    fn to(&self) -> &SpaceId {
        &self.to
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, p: &CVector) -> Result<CVector> {
        ensure_len(self.dim, p.len())?;
        Ok(p.map(|u| u + u * u * u * self.c))
    }

    fn inverse(&self, q: &CVector) -> Result<CVector> {
        ensure_len(self.dim, q.len())?;
        let mut out = CVector::zeros(q.len());
        for (i, &y) in q.iter().enumerate() {
            out[i] = self.invert_scalar(y)?;
        }
        Ok(out)
    }

    fn derivative_at(&self, p: &CVector) -> Result<CMatrix> {
        ensure_len(self.dim, p.len())?;
        Ok(CMatrix::from_diagonal(&p.map(|u| real(1.0) + u * u * (3.0 * self.c))))
    }

    fn describe(&self) -> String {
        format!("u + {}·u³", self.c)
    }
}

/// A linear transform viewed as a nonlinear map.
#[derive(Debug, Clone)]
pub struct LinearMap(pub LinearCoordTransform);

impl NonlinearMap for LinearMap {
    fn from(&self) -> &SpaceId {
        self.0.from()
    }

    fn to(&self) -> &SpaceId {
        self.0.to()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn forward(&self, p: &CVector) -> Result<CVector> {
        ensure_len(self.0.dim(), p.len())?;
        Ok(self.0.forward_mul(p))
    }

    fn inverse(&self, q: &CVector) -> Result<CVector> {
        ensure_len(self.0.dim(), q.len())?;
        self.0.inverse_mul(q)
    }

    fn derivative_at(&self, p: &CVector) -> Result<CMatrix> {
        ensure_len(self.0.dim(), p.len())?;
        Ok(self.0.matrix())
    }

    fn describe(&self) -> String {
        format!("linear {}", self.0.kind().name())
    }
}

/// `second ∘ first`.
#[derive(Clone)]
pub struct Compose {
    first: Arc<dyn NonlinearMap>,
    second: Arc<dyn NonlinearMap>,
}

impl Compose {
    pub fn new(first: Arc<dyn NonlinearMap>, second: Arc<dyn NonlinearMap>) -> Result<Self> {
        ensure_space(second.from(), first.to())?;
        ensure_len(first.dim(), second.dim())?;
        Ok(Self { first, second })
    }
}

impl NonlinearMap for Compose {
    fn from(&self) -> &SpaceId {
        self.first.from()
    }

    fn to(&self) -> &SpaceId {
        self.second.to()
    }

    fn dim(&self) -> usize {
        self.first.dim()
    }

    fn forward(&self, p: &CVector) -> Result<CVector> {
        self.second.forward(&self.first.forward(p)?)
    }

    fn inverse(&self, q: &CVector) -> Result<CVector> {
        self.first.inverse(&self.second.inverse(q)?)
    }

    fn derivative_at(&self, p: &CVector) -> Result<CMatrix> {
        let mid = self.first.forward(p)?;
        Ok(self.second.derivative_at(&mid)? * self.first.derivative_at(p)?)
    }

    fn describe(&self) -> String {
        format!("({}) ∘ ({})", self.second.describe(), self.first.describe())
    }
}

/// The inverse of a map.
#[derive(Clone)]
pub struct Inverted(pub Arc<dyn NonlinearMap>);

impl NonlinearMap for Inverted {
    fn from(&self) -> &SpaceId {
        self.0.to()
    }

    fn to(&self) -> &SpaceId {
        self.0.from()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn forward(&self, p: &CVector) -> Result<CVector> {
        self.0.inverse(p)
    }

    fn inverse(&self, q: &CVector) -> Result<CVector> {
        self.0.forward(q)
    }

    fn derivative_at(&self, q: &CVector) -> Result<CMatrix> {
        let p = self.0.inverse(q)?;
        let d = self.0.derivative_at(&p)?;
        d.lu().try_inverse().ok_or_else(|| Error::SingularDerivative(point_label(&p)))
    }

    fn describe(&self) -> String {
        format!("({})⁻¹", self.0.describe())
    }
}

/// Smooth reparametrization followed by the pointwise cubic:
/// `φ ↦ ω_c(φ ∘ σ)`.
pub fn reparam_flow(
    reparam: LinearCoordTransform,
    to: impl Into<SpaceId>,
    c: f64,
) -> Result<Compose> {
    let cubic = PointwiseCubic::new(reparam.to().clone(), to, reparam.dim(), c)?;
    Compose::new(Arc::new(LinearMap(reparam)), Arc::new(cubic))
}

/// `‖ω⁻¹f − ω⁻¹g‖` in the metric of the source of `ω`.
pub fn chart_distance(map: &dyn NonlinearMap, f: &CVector, g: &CVector, source: &Metric) -> Result<f64> {
    let d = map.inverse(f)? - map.inverse(g)?;
    Ok(source.form(&d, &d)?.re.max(0.0).sqrt())
}

/// `Lᴴ G L` with `L = Dω(g)` and `G` the metric of the target of `ω`.
pub fn tangent_metric(map: &dyn NonlinearMap, g: &CVector, target: &Metric) -> Result<Metric> {
    ensure_len(map.dim(), target.dim())?;
    let l = map.derivative_at(g)?;
    if l.clone().lu().try_inverse().is_none() {
        return Err(Error::SingularDerivative(point_label(g)));
    }
    let gram = target.to_dense()?;
    Metric::dense(l.adjoint() * gram * l).map_err(|_| Error::SingularDerivative(point_label(g)))
}

/// `h = 1e−5·(1 + ‖p‖)`.
pub fn default_step(p: &CVector) -> f64 {
    1e-5 * (1.0 + vector_norm(p))
}

/// Central differences `(F(p + h e_j) − F(p − h e_j)) / 2h`, column by column.
pub fn finite_difference_jacobian<F>(map: F, p: &CVector, step: f64) -> Result<CMatrix>
where
    F: Fn(&CVector) -> Result<CVector>,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(domain(format!("difference step must be positive, got {step}")));
    }
    let n = p.len();
    let mut columns: Vec<CVector> = Vec::with_capacity(n);
    for j in 0..n {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[j] += real(step);
        minus[j] -= real(step);
        columns.push((map(&plus)? - map(&minus)?) / real(2.0 * step));
    }
    if columns.is_empty() {
        return Ok(CMatrix::zeros(0, 0));
    }
    Ok(CMatrix::from_columns(&columns))
}

/// An open ball of the reference chart carried to its own coordinates by `map`.
#[derive(Clone)]
pub struct Chart {
    id: SpaceId,
    center: CVector,
    radius: f64,
    map: Arc<dyn NonlinearMap>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("id", &self.id)
            .field("radius", &self.radius)
            .field("map", &self.map)
            .finish()
    }
}

impl Chart {
    pub fn new(id: impl Into<SpaceId>, center: CVector, radius: f64, map: Arc<dyn NonlinearMap>) -> Result<Self> {
        let id = id.into();
        if !(radius > 0.0) {
            return Err(domain(format!("chart `{id}` needs a positive radius")));
        }
        ensure_space(&id, map.to())?;
        ensure_len(map.dim(), center.len())?;
        Ok(Self { id, center, radius, map })
    }

    pub fn id(&self) -> &SpaceId {
        &self.id
    }

    pub fn center(&self) -> &CVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn map(&self) -> &Arc<dyn NonlinearMap> {
        &self.map
    }
}

/// Charts over one reference chart.
#[derive(Debug, Clone)]
pub struct Atlas {
    reference: CoordinateSpace,
    charts: Vec<Chart>,
}

impl Atlas {
    pub fn new(reference: CoordinateSpace) -> Self {
        Self {
            reference,
            charts: Vec::new(),
        }
    }

    pub fn reference(&self) -> &CoordinateSpace {
        &self.reference
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn add_chart(&mut self, chart: Chart) -> Result<()> {
        ensure_space(self.reference.id(), chart.map.from())?;
        ensure_len(self.reference.dim(), chart.map.dim())?;
        if self.charts.iter().any(|c| c.id == chart.id) {
            return Err(domain(format!("chart `{}` already exists", chart.id)));
        }
        self.charts.push(chart);
        Ok(())
    }

    pub fn chart(&self, id: &SpaceId) -> Result<&Chart> {
        self.charts
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| domain(format!("no chart `{id}` in the atlas")))
    }

    fn reference_norm(&self, v: &CVector) -> Result<f64> {
        Ok(self.reference.metric().form(v, v)?.re.max(0.0).sqrt())
    }

    /// Strict ball test in the reference metric.
    pub fn contains(&self, chart: &Chart, p: &CVector) -> Result<bool> {
        Ok(self.reference_norm(&(p - &chart.center))? < chart.radius)
    }

    fn ensure_inside(&self, chart: &Chart, p: &CVector) -> Result<()> {
        if self.contains(chart, p)? {
            Ok(())
        } else {
            Err(Error::OutsideChart(String::from(chart.id.as_str())))
        }
    }

    /// Coordinates of the reference point `p` in `chart`.
    pub fn coordinates(&self, chart: &Chart, p: &CVector) -> Result<CVector> {
        self.ensure_inside(chart, p)?;
        chart.map.forward(p)
    }

    /// Reference point with coordinates `q` in `chart`.
    pub fn point(&self, chart: &Chart, q: &CVector) -> Result<CVector> {
        let p = chart.map.inverse(q)?;
        self.ensure_inside(chart, &p)?;
        Ok(p)
    }

    /// `map_β ∘ map_α⁻¹` on the overlap of the two balls, or the gap when
    /// they do not meet.
    pub fn transition_map(&self, alpha: &SpaceId, beta: &SpaceId) -> Result<Overlap> {
        let a = self.chart(alpha)?.clone();
        let b = self.chart(beta)?.clone();
        let distance = self.reference_norm(&(&a.center - &b.center))?;
        let gap = distance - (a.radius + b.radius);
        if gap >= 0.0 {
            return Ok(Overlap::Empty { gap });
        }
        let inner: Arc<dyn NonlinearMap> = if a.id == b.id {
            Arc::new(LinearMap(LinearCoordTransform::identity(
                a.id.clone(),
                a.id.clone(),
                self.reference.dim(),
            )))
        } else {
            Arc::new(Compose::new(Arc::new(Inverted(a.map.clone())), b.map.clone())?)
        };
        Ok(Overlap::Map(TransitionMap {
            atlas: Box::new(self.clone()),
            alpha: a,
            beta: b,
            inner,
        }))
    }
}

/// Result of [`Atlas::transition_map`].
#[derive(Debug)]
pub enum Overlap {
    /// The balls are disjoint; `gap ≥ 0` is how far apart their boundaries are.
    Empty { gap: f64 },
    Map(TransitionMap),
}

/// Chart-to-chart map, defined only on points lying in both charts.
pub struct TransitionMap {
    atlas: Box<Atlas>,
    alpha: Chart,
    beta: Chart,
    inner: Arc<dyn NonlinearMap>,
}

impl fmt::Debug for TransitionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransitionMap({} → {})", self.alpha.id, self.beta.id)
    }
}

impl TransitionMap {
    fn check(&self, p: &CVector) -> Result<()> {
        self.atlas.ensure_inside(&self.alpha, p)?;
        self.atlas.ensure_inside(&self.beta, p)
    }
}

impl NonlinearMap for TransitionMap {
    fn from(&self) -> &SpaceId {
        &self.alpha.id
    }

    fn to(&self) -> &SpaceId {
        &self.beta.id
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn forward(&self, q: &CVector) -> Result<CVector> {
        self.check(&self.alpha.map.inverse(q)?)?;
        self.inner.forward(q)
    }

    fn inverse(&self, q: &CVector) -> Result<CVector> {
        self.check(&self.beta.map.inverse(q)?)?;
        self.inner.inverse(q)
    }

    fn derivative_at(&self, q: &CVector) -> Result<CMatrix> {
        self.check(&self.alpha.map.inverse(q)?)?;
        self.inner.derivative_at(q)
    }

    fn describe(&self) -> String {
        format!("transition {} → {}", self.alpha.id, self.beta.id)
    }
}

/// An `(r, s)` tensor field, evaluated in reference coordinates on `r`
/// covectors and `s` vectors.
pub trait TensorField {
    fn rank(&self) -> (usize, usize);
    fn evaluate(&self, p: &CVector, covectors: &[CVector], vectors: &[CVector]) -> Result<C64>;
}

fn check_rank(t: &dyn TensorField, covectors: usize, vectors: usize) -> Result<()> {
    let (r, s) = t.rank();
    if r == covectors && s == vectors {
        Ok(())
    } else {
        Err(domain(format!(
            "tensor of rank ({r}, {s}) given {covectors} covectors and {vectors} vectors"
        )))
    }
}

/// Rank (0, 2) field `(φ, ψ) ↦ ψᴴ G(p) φ`.
pub struct MetricTensor<'a>(pub &'a dyn MetricField);

impl TensorField for MetricTensor<'_> {
    fn rank(&self) -> (usize, usize) {
        (0, 2)
    }

    fn evaluate(&self, p: &CVector, covectors: &[CVector], vectors: &[CVector]) -> Result<C64> {
        check_rank(self, covectors.len(), vectors.len())?;
        let g = self.0.metric_at(p)?;
        Ok(vectors[1].dotc(&(g * &vectors[0])))
    }
}

/// Rank (1, 1) field `(f, φ) ↦ f(φ)`.
pub struct IdentityTensor;

impl TensorField for IdentityTensor {
    fn rank(&self) -> (usize, usize) {
        (1, 1)
    }

    fn evaluate(&self, _p: &CVector, covectors: &[CVector], vectors: &[CVector]) -> Result<C64> {
        check_rank(self, covectors.len(), vectors.len())?;
        Ok(covectors[0].dot(&vectors[0]))
    }
}

/// A tensor field given by a closure.
pub struct FnTensor<F> {
    rank: (usize, usize),
    f: F,
}

impl<F> FnTensor<F>
where
    F: Fn(&CVector, &[CVector], &[CVector]) -> C64,
{
    pub fn new(rank: (usize, usize), f: F) -> Self {
        Self { rank, f }
    }
}

impl<F> TensorField for FnTensor<F>
where
    F: Fn(&CVector, &[CVector], &[CVector]) -> C64,
{
    fn rank(&self) -> (usize, usize) {
        self.rank
    }

    fn evaluate(&self, p: &CVector, covectors: &[CVector], vectors: &[CVector]) -> Result<C64> {
        check_rank(self, covectors.len(), vectors.len())?;
        Ok((self.f)(p, covectors, vectors))
    }
}

/// Evaluates `tensor` at the point with coordinates `q` in `chart`, on
/// slots given in that chart's coordinates. With `J` the Jacobian of the
/// chart map at the reference point, vectors go back by `J⁻¹` and covectors
/// by `Jᵀ`.
pub fn tensor_components(
    tensor: &dyn TensorField,
    atlas: &Atlas,
    chart: &SpaceId,
    q: &CVector,
    covectors: &[DualVector],
    vectors: &[CoordinateVector],
) -> Result<C64> {
    check_rank(tensor, covectors.len(), vectors.len())?;
    let chart = atlas.chart(chart)?;
    for f in covectors {
        ensure_space(&chart.id, f.space())?;
    }
    for v in vectors {
        ensure_space(&chart.id, v.space())?;
    }
    let p = atlas.point(chart, q)?;
    let j = chart.map.derivative_at(&p)?;
    let lu = j.clone().lu();
    let mut refs = Vec::with_capacity(vectors.len());
    for v in vectors {
        refs.push(lu.solve(v.coeffs()).ok_or_else(|| Error::SingularDerivative(point_label(&p)))?);
    }
    let covs: Vec<CVector> = covectors.iter().map(|f| j.tr_mul(f.coeffs())).collect();
    tensor.evaluate(&p, &covs, &refs)
}

/// A field of Hermitian forms in reference coordinates.
pub trait MetricField {
    fn metric_at(&self, p: &CVector) -> Result<CMatrix>;
}

/// The same metric at every point.
pub struct ConstantField(pub Metric);

impl MetricField for ConstantField {
    fn metric_at(&self, _p: &CVector) -> Result<CMatrix> {
        self.0.to_dense()
    }
}

/// `Dω(p)ᴴ G Dω(p)`, optionally with the Jacobian zeroed at one point.
pub struct PullbackField {
    map: Arc<dyn NonlinearMap>,
    target: CMatrix,
    degenerate_at: Option<CVector>,
}

impl PullbackField {
    pub fn new(map: Arc<dyn NonlinearMap>, target: &Metric) -> Result<Self> {
        ensure_len(map.dim(), target.dim())?;
        Ok(Self {
            map,
            target: target.to_dense()?,
            degenerate_at: None,
        })
    }

    /// Control field whose Jacobian is zero at `p` (and only there).
    pub fn degenerate_at(mut self, p: CVector) -> Self {
        self.degenerate_at = Some(p);
        self
    }
}

impl MetricField for PullbackField {
    fn metric_at(&self, p: &CVector) -> Result<CMatrix> {
        let mut l = self.map.derivative_at(p)?;
        if let Some(bad) = &self.degenerate_at {
            if vector_norm(&(p - bad)) <= 1e-12 * (1.0 + vector_norm(bad)) {
                l.fill(real(0.0));
            }
        }
        Ok(l.adjoint() * &self.target * l)
    }
}

/// Smallest tangent-metric eigenvalue at each sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub min_eigenvalues: Vec<f64>,
    /// Indices of points where the metric is not positive definite.
    pub failures: Vec<usize>,
    pub pass: bool,
}

pub fn riemannian_positivity_scan(field: &dyn MetricField, points: &[CVector]) -> Result<PositivityReport> {
    let mut min_eigenvalues = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let g = field.metric_at(p)?;
        let lowest = hermitian_eigenvalues(&g).first().copied().unwrap_or(f64::NAN);
        if !(lowest > 0.0) {
            failures.push(i);
        }
        min_eigenvalues.push(lowest);
    }
    Ok(PositivityReport {
        pass: failures.is_empty(),
        min_eigenvalues,
        failures,
    })
}
