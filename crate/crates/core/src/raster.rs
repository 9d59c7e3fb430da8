//! Ray-cast Gaussian compositing.
//!
//! Each primitive responds to a ray at the point of maximum density along
//! it; the response is `opacity * exp(-m²/2)` with `m` the Mahalanobis
//! distance from the mean to that point. Responses are composited front to
//! back with `w_i = T_i α_i`, `T_i = Π_{j<i} (1 - α_j)`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, RgbImage};
use crate::metrics::SphericalGaussianKernel;
use crate::scene::{Camera, Scene};
use crate::sphere::DirectionGrid;

/// Samples with `α` below this are dropped.
pub const ALPHA_CUTOFF: f64 = 1e-4;
/// Compositing stops once the remaining transmittance falls below this.
const TRANSMITTANCE_EPS: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub primitive_index: usize,
    pub depth: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Unit Euclidean norm.
    UnitL2,
    /// Weights plus the background weight sum to one.
    UnitL1WithBackground,
    /// Compositing weights as produced.
    Raw,
}

/// Sparse compositing weights of one ray.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub norm_mode: NormMode,
    /// Weight left for the background (`1 - Σw` for raw rows).
    pub background: f64,
}

impl WeightRow {
    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
            weights: Vec::new(),
            norm_mode: NormMode::Raw,
            background: 1.0,
        }
    }

    /// Raw row from explicit `(index, weight)` pairs.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Self {
        let indices = pairs.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let total: f64 = weights.iter().sum();
        Self {
            indices,
            weights,
            norm_mode: NormMode::Raw,
            background: (1.0 - total).max(0.0),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty() || self.weights.iter().all(|&w| w == 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Dot product with a dense per-primitive vector.
    pub fn dot(&self, values: &[f64]) -> f64 {
        self.iter().map(|(i, w)| w * values[i]).sum()
    }

    /// Returns the row in `mode` together with the factor applied to the
    /// raw weights, or `None` for empty rows.
    pub fn normalized(&self, mode: NormMode) -> Option<(WeightRow, f64)> {
        if self.is_empty() {
            return None;
        }
        let (scale, background) = match mode {
            NormMode::Raw => (1.0, self.background),
            NormMode::UnitL1WithBackground => {
                let total = self.sum() + self.background;
                (1.0 / total, self.background / total)
            }
            NormMode::UnitL2 => (1.0 / self.l2_norm(), 0.0),
        };
        Some((
            WeightRow {
                indices: self.indices.clone(),
                weights: self.weights.iter().map(|w| w * scale).collect(),
                norm_mode: mode,
                background,
            },
            scale,
        ))
    }

    pub fn to_dense(&self, n: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        for (i, w) in self.iter() {
            v[i] += w;
        }
        v
    }
}

/// Rows of a stacked observation design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub rows: Vec<WeightRow>,
    pub n_primitives: usize,
    /// Factor each row's raw weights were multiplied by.
    pub scales: Vec<f64>,
    /// Number of sampled rays that hit nothing and were dropped.
    pub dropped_empty: usize,
}

impl WeightMatrix {
    pub fn new(n_primitives: usize) -> Self {
        Self {
            rows: Vec::new(),
            n_primitives,
            scales: Vec::new(),
            dropped_empty: 0,
        }
    }

    pub fn push(&mut self, row: WeightRow, scale: f64) -> Result<()> {
        if let Some(&i) = row.indices.iter().find(|&&i| i >= self.n_primitives) {
            return Err(Error::DimensionMismatch {
                expected: self.n_primitives,
                got: i + 1,
            });
        }
        self.rows.push(row);
        self.scales.push(scale);
        Ok(())
    }

    /// Sparse rows from a dense matrix (zeros are skipped).
    pub fn from_dense(m: &DMatrix<f64>, mode: NormMode) -> Self {
        let mut out = Self::new(m.ncols());
        for r in 0..m.nrows() {
            let pairs: Vec<(usize, f64)> = (0..m.ncols()).filter(|&c| m[(r, c)] != 0.0).map(|c| (c, m[(r, c)])).collect();
            let mut row = WeightRow::from_pairs(&pairs);
            row.norm_mode = mode;
            out.rows.push(row);
            out.scales.push(1.0);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.n_primitives);
        for (r, row) in self.rows.iter().enumerate() {
            for (i, w) in row.iter() {
                m[(r, i)] += w;
            }
        }
        m
    }

    /// Squared Euclidean norm of every column.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_primitives];
        for row in &self.rows {
            for (i, w) in row.iter() {
                out[i] += w * w;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Splat {
    mean: Vector3<f64>,
    precision: Matrix3<f64>,
    opacity: f64,
    /// Squared Mahalanobis radius past which `α < ALPHA_CUTOFF`.
    m2_cut: f64,
    /// Euclidean radius that contains the Mahalanobis cutoff ellipsoid.
    reach: f64,
}

/// Preprocessed scene geometry for repeated ray queries.
#[derive(Debug, Clone)]
pub struct Compositor {
    splats: Vec<Splat>,
}

impl Compositor {
    pub fn new(scene: &Scene) -> Result<Self> {
        let splats = scene
            .primitives
            .iter()
            .map(|p| {
                let precision = p
                    .covariance
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidSpec("singular covariance".into()))?;
                let m2_cut = if p.opacity > ALPHA_CUTOFF {
                    2.0 * (p.opacity / ALPHA_CUTOFF).ln()
                } else {
                    -1.0
                };
                let lambda_max = p.covariance.symmetric_eigenvalues().max();
                Ok(Splat {
                    mean: p.mean,
                    precision,
                    opacity: p.opacity,
                    m2_cut,
                    reach: (lambda_max * m2_cut.max(0.0)).sqrt(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { splats })
    }

    pub fn len(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    /// Depth-sorted samples along a ray with `α >= ALPHA_CUTOFF`.
    pub fn samples(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Vec<RaySample> {
        let mut out = Vec::new();
        for (i, s) in self.splats.iter().enumerate() {
            if s.m2_cut < 0.0 {
                continue;
            }
            let v = s.mean - origin;
            let along = v.dot(dir);
            if (v - dir * along).norm_squared() > s.reach * s.reach {
                continue;
            }
            let pd = s.precision * dir;
            let dpd = dir.dot(&pd);
            let vpd = v.dot(&pd);
            let t = vpd / dpd;
            if !(t > 0.0) {
                continue;
            }
            let m2 = (v.dot(&(s.precision * v)) - vpd * vpd / dpd).max(0.0);
            if m2 > s.m2_cut {
                continue;
            }
            let alpha = (s.opacity * (-0.5 * m2).exp()).min(1.0);
            if alpha < ALPHA_CUTOFF {
                continue;
            }
            out.push(RaySample {
                primitive_index: i,
                depth: t,
                alpha,
            });
        }
        out.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.primitive_index.cmp(&b.primitive_index)));
        out
    }

    /// Raw compositing weights along a ray. `dir` must be unit length.
    pub fn composite(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> WeightRow {
        let mut transmittance = 1.0;
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        for s in self.samples(origin, dir) {
            let w = transmittance * s.alpha;
            indices.push(s.primitive_index);
            weights.push(w);
            transmittance *= 1.0 - s.alpha;
            if transmittance < TRANSMITTANCE_EPS {
                break;
            }
        }
        WeightRow {
            indices,
            weights,
            norm_mode: NormMode::Raw,
            background: transmittance,
        }
    }

    /// Raw rows for every pixel of `camera`, row-major.
    pub fn camera_rows(&self, camera: &Camera) -> CameraRows {
        let rows = (0..camera.pixel_count())
            .into_par_iter()
            .map(|p| self.composite(&camera.position, &camera.pixel_ray(p)))
            .collect();
        CameraRows {
            width: camera.width(),
            height: camera.height(),
            rows,
        }
    }
}

/// Raw per-pixel weight rows of one camera, row-major.
#[derive(Debug, Clone)]
pub struct CameraRows {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<WeightRow>,
}

impl CameraRows {
    /// Composites a per-primitive scalar over background `b`.
    pub fn render_scalar(&self, values: &[f64], background: f64) -> MetricImage {
        let mut image = GrayImage::new(self.width, self.height);
        let mut mask = vec![false; self.rows.len()];
        for (p, row) in self.rows.iter().enumerate() {
            let coverage = row.sum();
            image.data[p] = row.dot(values) + (1.0 - coverage).max(0.0) * background;
            mask[p] = coverage > 0.0;
        }
        MetricImage { image, mask }
    }

    /// Mean of `image` over pixels with non-zero alpha; `None` when nothing
    /// is hit.
    pub fn masked_mean(&self, metric: &MetricImage) -> Option<f64> {
        let (sum, n) = metric
            .image
            .data
            .iter()
            .zip(&metric.mask)
            .filter(|(_, &m)| m)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// A rendered scalar channel plus its alpha mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricImage {
    pub image: GrayImage,
    pub mask: Vec<bool>,
}

impl MetricImage {
    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Composites one ray through `scene`.
pub fn composite_ray(scene: &Scene, origin: &Vector3<f64>, direction: &Vector3<f64>) -> Result<WeightRow> {
    check_unit(direction)?;
    Ok(Compositor::new(scene)?.composite(origin, direction))
}

fn check_unit(d: &Vector3<f64>) -> Result<()> {
    if (d.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Precondition(format!("ray direction has norm {}", d.norm())));
    }
    Ok(())
}

/// Background compositing value for metric renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Zero,
    One,
}

impl Background {
    pub fn value(self) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::One => 1.0,
        }
    }

    pub fn from_value(b: f64) -> Result<Self> {
        if b == 0.0 {
            Ok(Background::Zero)
        } else if b == 1.0 {
            Ok(Background::One)
        } else {
            Err(Error::Precondition(format!("background must be 0 or 1, got {b}")))
        }
    }
}

/// Color model for view-dependent primitives.
#[derive(Debug, Clone)]
pub struct ViewDependentColor {
    pub grid: DirectionGrid,
    pub kernel: SphericalGaussianKernel,
}

impl ViewDependentColor {
    pub fn for_scene(scene: &Scene, kernel: SphericalGaussianKernel) -> Option<Self> {
        scene.patch_count().map(|l| Self {
            grid: DirectionGrid::for_patch_count(l),
            kernel,
        })
    }

    /// Kernel-weighted average of a patch radiance field seen along `d`.
    pub fn color(&self, patches: &[[f64; 3]], d: &Vector3<f64>) -> [f64; 3] {
        let beta = self.kernel.average_weights(&self.grid, d);
        let mut c = [0.0; 3];
        for (b, r) in beta.iter().zip(patches) {
            for k in 0..3 {
                c[k] += b * r[k];
            }
        }
        c
    }
}

/// Per-pixel ground-truth colors of `scene` seen through `camera`.
pub fn render_color(scene: &Scene, camera: &Camera) -> Result<RgbImage> {
    camera.validate()?;
    let comp = Compositor::new(scene)?;
    let rows = comp.camera_rows(camera);
    let vd = ViewDependentColor::for_scene(scene, SphericalGaussianKernel::default());
    Ok(shade_rows(scene, camera, &rows, vd.as_ref()))
}

/// Colors for precomputed rows. View-dependent primitives are shaded with
/// the ray direction of each pixel.
pub fn shade_rows(scene: &Scene, camera: &Camera, rows: &CameraRows, vd: Option<&ViewDependentColor>) -> RgbImage {
    let data = rows
        .rows
        .par_iter()
        .enumerate()
        .map(|(p, row)| {
            let mut c = [0.0; 3];
            if row.is_empty() {
                return c;
            }
            let dir = camera.pixel_ray(p);
            for (i, w) in row.iter() {
                let prim = &scene.primitives[i];
                let ci = match (vd, &prim.patch_radiances) {
                    (Some(model), Some(patches)) => model.color(patches, &dir),
                    _ => prim.matte_color.into(),
                };
                for k in 0..3 {
                    c[k] += w * ci[k];
                }
            }
            c
        })
        .collect();
    RgbImage {
        width: rows.width,
        height: rows.height,
        data,
    }
}

/// Stacks sampled pixel rows of `cameras`, visiting every `pixel_stride`-th
/// row-major pixel. Empty rows are dropped and counted.
pub fn assemble_weight_matrix(
    scene: &Scene,
    cameras: &[Camera],
    norm_mode: NormMode,
    pixel_stride: usize,
) -> Result<WeightMatrix> {
    if pixel_stride == 0 {
        return Err(Error::Precondition("pixel stride must be >= 1".into()));
    }
    let comp = Compositor::new(scene)?;
    let mut out = WeightMatrix::new(scene.len());
    for cam in cameras {
        let rows: Vec<WeightRow> = (0..cam.pixel_count())
            .step_by(pixel_stride)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|p| comp.composite(&cam.position, &cam.pixel_ray(p)))
            .collect();
        append_rows(&mut out, &rows, norm_mode);
    }
    Ok(out)
}

/// Normalizes and appends raw rows, dropping empty ones.
pub fn append_rows<'a>(out: &mut WeightMatrix, rows: impl IntoIterator<Item = &'a WeightRow>, mode: NormMode) {
    for row in rows {
        match row.normalized(mode) {
            Some((r, scale)) => {
                out.rows.push(r);
                out.scales.push(scale);
            }
            None => out.dropped_empty += 1,
        }
    }
}

/// Renders a per-primitive score in `[0, 1]` composited over background `b`.
pub fn render_metric(scene: &Scene, camera: &Camera, scores: &[f64], background: Background) -> Result<MetricImage> {
    camera.validate()?;
    check_scores(scores, scene.len())?;
    let rows = Compositor::new(scene)?.camera_rows(camera);
    Ok(rows.render_scalar(scores, background.value()))
}

pub(crate) fn check_scores(scores: &[f64], n: usize) -> Result<()> {
    if scores.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: scores.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::Precondition(format!("score {s} outside [0,1]")));
    }
    Ok(())
}
