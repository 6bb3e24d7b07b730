//! JSON documents for spaces, vectors, transforms, atlases and eigen reports.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Kernel-built transforms (Fourier, Gaussian smoothing) store their grid
//! rather than their entries, so a document rebuilds the same operator.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use funcoord_core::discretization::Grid;
use funcoord_core::eigen::GeneralizedEigenpair;
use funcoord_core::manifold::{Atlas, Chart, Compose, Inverted, LinearMap, NonlinearMap, PointwiseCubic};
use funcoord_core::spaces::{CoordinateSpace, CoordinateVector, Metric};
use funcoord_core::transforms::{frequency_grid, LinearCoordTransform, TransformKind};
use funcoord_core::{CMatrix, CVector, C64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] funcoord_core::Error),
    #[error("invalid document: {0}")]
    Invalid(String),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

fn invalid(msg: impl Into<String>) -> FormatError {
    FormatError::Invalid(msg.into())
}

pub type Complex = [f64; 2];

pub fn encode_vector(v: &CVector) -> Vec<Complex> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn decode_vector(v: &[Complex]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&[re, im]| C64::new(re, im)))
}

pub fn encode_matrix(m: &CMatrix) -> Vec<Vec<Complex>> {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn decode_matrix(rows: &[Vec<Complex>]) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(invalid("matrix rows have different lengths"));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| {
        let [re, im] = rows[i][j];
        C64::new(re, im)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub periodic: bool,
}

impl GridDoc {
    pub fn of(grid: &Grid) -> Self {
        Self {
            a: grid.a(),
            b: grid.b(),
            n: grid.len(),
            periodic: grid.is_periodic(),
        }
    }

    pub fn build(&self) -> Result<Grid> {
        Ok(Grid::uniform(self.a, self.b, self.n, self.periodic)?)
    }
}

/// A dense gram as rows, or a tagged diagonal / induced metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GramDoc {
    Dense(Vec<Vec<Complex>>),
    Tagged(TaggedGram),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaggedGram {
    Diagonal { diag: Vec<f64> },
    /// The metric making `transform` an isometry from a space with `base`.
    Induced { transform: Box<TransformDoc>, base: Box<GramDoc> },
}

impl GramDoc {
    pub fn of(metric: &Metric) -> Result<Self> {
        Ok(match metric {
            Metric::Diagonal(d) => GramDoc::Tagged(TaggedGram::Diagonal {
                diag: d.iter().copied().collect(),
            }),
            Metric::Dense(g) => GramDoc::Dense(encode_matrix(g.gram())),
            Metric::Induced(m) => GramDoc::Tagged(TaggedGram::Induced {
                transform: Box::new(TransformDoc::of(m.transform())?),
                base: Box::new(GramDoc::of(m.base())?),
            }),
        })
    }

    pub fn build(&self) -> Result<Metric> {
        Ok(match self {
            GramDoc::Dense(rows) => Metric::dense(decode_matrix(rows)?)?,
            GramDoc::Tagged(TaggedGram::Diagonal { diag }) => Metric::diagonal(diag)?,
            GramDoc::Tagged(TaggedGram::Induced { transform, base }) => {
                Metric::induced(Arc::new(transform.build()?), base.build()?)?
            }
        })
    }
}

/// A space, and optionally the coefficients of one of its vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub id: String,
    pub grid: GridDoc,
    pub gram: GramDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Complex>>,
}

impl SpaceDoc {
    pub fn of(space: &CoordinateSpace) -> Result<Self> {
        Ok(Self {
            id: space.id().to_string(),
            grid: GridDoc::of(space.grid()),
            gram: GramDoc::of(space.metric())?,
            coeffs: None,
        })
    }

    pub fn of_vector(space: &CoordinateSpace, v: &CoordinateVector) -> Result<Self> {
        if v.space() != space.id() {
            return Err(invalid(format!("vector of `{}` given with space `{}`", v.space(), space.id())));
        }
        Ok(Self {
            coeffs: Some(encode_vector(v.coeffs())),
            ..Self::of(space)?
        })
    }

    pub fn build(&self) -> Result<CoordinateSpace> {
        Ok(CoordinateSpace::new(self.id.as_str(), self.grid.build()?, self.gram.build()?)?)
    }

    pub fn build_vector(&self) -> Result<(CoordinateSpace, CoordinateVector)> {
        let space = self.build()?;
        let coeffs = self.coeffs.as_ref().ok_or_else(|| invalid("document has no coefficients"))?;
        let v = space.vector(decode_vector(coeffs))?;
        Ok((space, v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum TransformParams {
    Identity { n: usize },
    Explicit { matrix: Vec<Vec<Complex>> },
    /// Spatial grid; the frequency grid is derived from it.
    Fourier { grid: GridDoc },
    InverseFourier { grid: GridDoc },
    GaussSmooth { grid: GridDoc },
    /// A reparametrization keeps its grid and its interpolation matrix.
    Reparam { grid: GridDoc, matrix: Vec<Vec<Complex>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformDoc {
    pub from: String,
    pub to: String,
    #[serde(flatten)]
    pub params: TransformParams,
}

impl TransformDoc {
    pub fn of(t: &LinearCoordTransform) -> Result<Self> {
        let params = match t.kind() {
            TransformKind::Identity => TransformParams::Identity { n: t.dim() },
            TransformKind::Fourier { grid, inverse: false } => TransformParams::Fourier { grid: GridDoc::of(grid) },
            TransformKind::Fourier { grid, inverse: true } => {
                TransformParams::InverseFourier { grid: GridDoc::of(grid) }
            }
            TransformKind::GaussSmooth { grid } => TransformParams::GaussSmooth { grid: GridDoc::of(grid) },
            TransformKind::Reparam { grid } => TransformParams::Reparam {
                grid: GridDoc::of(grid),
                matrix: encode_matrix(&t.matrix()),
            },
            TransformKind::Explicit => TransformParams::Explicit {
                matrix: encode_matrix(&t.matrix()),
            },
        };
        Ok(Self {
            from: t.from().to_string(),
            to: t.to().to_string(),
            params,
        })
    }

    pub fn build(&self) -> Result<LinearCoordTransform> {
        let (from, to) = (self.from.as_str(), self.to.as_str());
        Ok(match &self.params {
            TransformParams::Identity { n } => LinearCoordTransform::identity(from, to, *n),
            TransformParams::Explicit { matrix } | TransformParams::Reparam { matrix, .. } => {
                LinearCoordTransform::explicit(from, to, decode_matrix(matrix)?)?
            }
            TransformParams::Fourier { grid } => {
                let gx = grid.build()?;
                LinearCoordTransform::fourier_transform(from, to, &gx, &frequency_grid(&gx)?)?
            }
            TransformParams::InverseFourier { grid } => {
                let gx = grid.build()?;
                LinearCoordTransform::fourier_transform(to, from, &gx, &frequency_grid(&gx)?)?.inverse()?
            }
            TransformParams::GaussSmooth { grid } => LinearCoordTransform::gauss_smooth(from, to, &grid.build()?),
        })
    }
}

/// Nonlinear chart maps that can be rebuilt from parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum MapDoc {
    Cubic { from: String, to: String, c: f64 },
    Linear { transform: TransformDoc },
    /// `second ∘ first`.
    Compose { first: Box<MapDoc>, second: Box<MapDoc> },
    Inverse { map: Box<MapDoc> },
}

impl MapDoc {
    pub fn build(&self, dim: usize) -> Result<Arc<dyn NonlinearMap>> {
        Ok(match self {
            MapDoc::Cubic { from, to, c } => Arc::new(PointwiseCubic::new(from.as_str(), to.as_str(), dim, *c)?),
            MapDoc::Linear { transform } => {
                let t = transform.build()?;
                if t.dim() != dim {
                    return Err(invalid(format!("linear map of dimension {} in an atlas of dimension {dim}", t.dim())));
                }
                Arc::new(LinearMap(t))
            }
            MapDoc::Compose { first, second } => Arc::new(Compose::new(first.build(dim)?, second.build(dim)?)?),
            MapDoc::Inverse { map } => Arc::new(Inverted(map.build(dim)?)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDoc {
    pub id: String,
    pub center: Vec<Complex>,
    pub radius: f64,
    pub map: MapDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasDoc {
    pub reference: SpaceDoc,
    pub charts: Vec<ChartDoc>,
}

impl AtlasDoc {
    pub fn build(&self) -> Result<Atlas> {
        let reference = self.reference.build()?;
        let dim = reference.dim();
        let mut atlas = Atlas::new(reference);
        for c in &self.charts {
            let map = c.map.build(dim)?;
            atlas.add_chart(Chart::new(c.id.as_str(), decode_vector(&c.center), c.radius, map)?)?;
        }
        Ok(atlas)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReportDoc {
    pub operator: String,
    pub chart: String,
    pub eigenvalues: Vec<Complex>,
    pub residuals: Vec<f64>,
    pub covariance_defect: Option<f64>,
}

impl EigenReportDoc {
    pub fn new(
        operator: impl Into<String>,
        chart: impl Into<String>,
        pairs: &[GeneralizedEigenpair],
        covariance_defect: Option<f64>,
    ) -> Self {
        Self {
            operator: operator.into(),
            chart: chart.into(),
            eigenvalues: pairs.iter().map(|p| [p.value.re, p.value.im]).collect(),
            residuals: pairs.iter().map(|p| p.residual).collect(),
            covariance_defect,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Identifies and builds a document, returning a one-line description.
pub fn validate_document(text: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let has = |k: &str| value.get(k).is_some();
    if has("charts") {
        let doc: AtlasDoc = serde_json::from_value(value)?;
        let atlas = doc.build()?;
        Ok(format!("atlas with {} charts over `{}`", atlas.charts().len(), atlas.reference().id()))
    } else if has("experiment") {
        let report: crate::experiments::ExperimentReport = serde_json::from_value(value)?;
        let failures = report.failures();
        Ok(format!("{} report: {} results, {failures} failing", report.experiment, report.results.len()))
    } else if has("eigenvalues") {
        let doc: EigenReportDoc = serde_json::from_value(value)?;
        if doc.eigenvalues.len() != doc.residuals.len() {
            return Err(invalid("eigenvalue and residual counts differ"));
        }
        Ok(format!("eigen report for `{}` on `{}`", doc.operator, doc.chart))
    } else if has("kind") {
        let doc: TransformDoc = serde_json::from_value(value)?;
        let t = doc.build()?;
        Ok(format!("{} transform {} → {} (n = {})", t.kind().name(), t.from(), t.to(), t.dim()))
    } else if has("grid") {
        let doc: SpaceDoc = serde_json::from_value(value)?;
        if doc.coeffs.is_some() {
            let (space, _) = doc.build_vector()?;
            Ok(format!("vector of `{}` (n = {})", space.id(), space.dim()))
        } else {
            let space = doc.build()?;
            Ok(format!("space `{}` (n = {})", space.id(), space.dim()))
        }
    } else {
        Err(invalid("unrecognized document"))
    }
}
