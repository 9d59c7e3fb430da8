//! Renderable view-information metrics and their per-primitive state.
//!
//! Three metrics, from most faithful to most robust:
//! - transmittance: `Σ_i w_i |W_:,i|`, backed by [`TransAccumulator`];
//! - view-direction: `Σ_i w_i Σ_ℓ β^i_ℓ |W̃^i_ℓ|`, backed by [`ViewAccumulator`];
//! - coverage: `Σ_i w_i (1 + max_c d^i_c·d) / 2`, backed by [`CoverageGrids`].
//!
//! Lower values mark views that observe under-constrained primitives.

use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::raster::{check_scores, Background, CameraRows, Compositor, MetricImage, NormMode, WeightRow};
use crate::scene::{Camera, Scene};
use crate::sphere::DirectionGrid;

pub const DEFAULT_KAPPA: f64 = 16.0;
/// Minimum composited weight for a primitive to count as seen by a pixel.
pub const VISIBILITY_WEIGHT_CUTOFF: f64 = 1e-3;
const UNIT_TOL: f64 = 1e-9;

/// `β(d; μ, κ) = C exp(κ d·μ)` evaluated over the patch centers of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalGaussianKernel {
    pub kappa: f64,
}

impl Default for SphericalGaussianKernel {
    fn default() -> Self {
        Self { kappa: DEFAULT_KAPPA }
    }
}

impl SphericalGaussianKernel {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::Precondition(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        Ok(Self { kappa })
    }

    /// Unnormalized `exp(κ (d_ℓ·d - max_ℓ d_ℓ·d))`, shifted for stability.
    fn shifted(&self, grid: &DirectionGrid, d: &Vector3<f64>) -> Vec<f64> {
        let dots: Vec<f64> = grid.directions().iter().map(|p| p.dot(d)).collect();
        let peak = dots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        dots.iter().map(|&x| (self.kappa * (x - peak)).exp()).collect()
    }

    /// Kernel weights normalized to unit Euclidean norm.
    pub fn weights(&self, grid: &DirectionGrid, d: &Vector3<f64>) -> Vec<f64> {
        let mut v = self.shifted(grid, d);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Kernel weights normalized to sum to one (a weighted average).
    pub fn average_weights(&self, grid: &DirectionGrid, d: &Vector3<f64>) -> Vec<f64> {
        let mut v = self.shifted(grid, d);
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }

    /// Normalization constant `C` that makes the weights unit-L2 at `d`.
    pub fn norm_const(&self, grid: &DirectionGrid, d: &Vector3<f64>) -> f64 {
        let s: f64 = grid
            .directions()
            .iter()
            .map(|p| (2.0 * self.kappa * p.dot(d)).exp())
            .sum();
        1.0 / s.sqrt()
    }
}

fn check_unit(d: &Vector3<f64>) -> Result<()> {
    if (d.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Precondition(format!("direction has norm {}", d.norm())));
    }
    Ok(())
}

/// Patch containing `d`.
pub fn quantize_direction(grid: &DirectionGrid, d: &Vector3<f64>) -> Result<usize> {
    check_unit(d)?;
    Ok(grid.quantize(d))
}

/// Unit-L2 spherical Gaussian weights over the patches of `grid`.
pub fn kernel_weights(kernel: &SphericalGaussianKernel, grid: &DirectionGrid, d: &Vector3<f64>) -> Result<Vec<f64>> {
    check_unit(d)?;
    Ok(kernel.weights(grid, d))
}

/// Exact kernel overlap `Σ_ℓ C_a C_b exp(κ d_ℓ·(a + b))` of two unit
/// directions, i.e. the dot product of their unit-L2 weight vectors.
pub fn sg_dot(kernel: &SphericalGaussianKernel, grid: &DirectionGrid, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<f64> {
    check_unit(a)?;
    check_unit(b)?;
    let wa = kernel.weights(grid, a);
    let wb = kernel.weights(grid, b);
    Ok(wa.iter().zip(&wb).map(|(x, y)| x * y).sum())
}

/// First-order surrogate of [`sg_dot`] up to affine rescaling: `(1 + a·b) / 2`.
pub fn sg_dot_surrogate(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    0.5 * (1.0 + a.dot(b))
}

fn check_unit_l2(row: &WeightRow) -> Result<()> {
    let n = row.l2_norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("row must be unit L2, norm is {n}")));
    }
    Ok(())
}

/// Running squared column norms `|W_:,i|²` of the observed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransAccumulator {
    pub col_sq_norms: Vec<f64>,
}

impl TransAccumulator {
    pub fn new(n_primitives: usize) -> Self {
        Self {
            col_sq_norms: vec![0.0; n_primitives],
        }
    }

    /// Adds a unit-L2 row.
    pub fn update(&mut self, row: &WeightRow) -> Result<()> {
        check_unit_l2(row)?;
        self.check_indices(row)?;
        for (i, w) in row.iter() {
            self.col_sq_norms[i] += w * w;
        }
        Ok(())
    }

    /// Normalizes a raw row and adds it; empty rows are ignored.
    pub fn observe_raw(&mut self, row: &WeightRow) -> Result<()> {
        match row.normalized(NormMode::UnitL2) {
            Some((r, _)) => self.update(&r),
            None => Ok(()),
        }
    }

    /// `Σ_i w_i |W_:,i|`.
    pub fn score(&self, row: &WeightRow) -> Result<f64> {
        self.check_indices(row)?;
        Ok(row.iter().map(|(i, w)| w * self.col_sq_norms[i].sqrt()).sum())
    }

    /// Per-primitive `|W_:,i|`.
    pub fn column_norms(&self) -> Vec<f64> {
        self.col_sq_norms.iter().map(|v| v.sqrt()).collect()
    }

    fn check_indices(&self, row: &WeightRow) -> Result<()> {
        if let Some(&i) = row.indices.iter().find(|&&i| i >= self.col_sq_norms.len()) {
            return Err(Error::DimensionMismatch {
                expected: self.col_sq_norms.len(),
                got: i + 1,
            });
        }
        Ok(())
    }
}

/// Running squared norms `|W̃^i_ℓ|²` of each primitive's patch columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewAccumulator {
    n_patches: usize,
    /// Row-major `P × L`.
    pub patch_sq_norms: Vec<f64>,
}

impl ViewAccumulator {
    pub fn new(n_primitives: usize, n_patches: usize) -> Self {
        Self {
            n_patches,
            patch_sq_norms: vec![0.0; n_primitives * n_patches],
        }
    }

    pub fn from_parts(n_patches: usize, patch_sq_norms: Vec<f64>) -> Result<Self> {
        if n_patches == 0 || !patch_sq_norms.len().is_multiple_of(n_patches) {
            return Err(Error::Checkpoint("view accumulator size is not a multiple of L".into()));
        }
        Ok(Self {
            n_patches,
            patch_sq_norms,
        })
    }

    pub fn n_patches(&self) -> usize {
        self.n_patches
    }

    pub fn n_primitives(&self) -> usize {
        self.patch_sq_norms.len().checked_div(self.n_patches).unwrap_or(0)
    }

    pub fn patch_row(&self, i: usize) -> &[f64] {
        &self.patch_sq_norms[i * self.n_patches..(i + 1) * self.n_patches]
    }

    fn check(&self, row: &WeightRow, betas: &[Vec<f64>]) -> Result<()> {
        if betas.len() != row.len() {
            return Err(Error::DimensionMismatch {
                expected: row.len(),
                got: betas.len(),
            });
        }
        if let Some(b) = betas.iter().find(|b| b.len() != self.n_patches) {
            return Err(Error::DimensionMismatch {
                expected: self.n_patches,
                got: b.len(),
            });
        }
        let p = self.n_primitives();
        if let Some(&i) = row.indices.iter().find(|&&i| i >= p) {
            return Err(Error::DimensionMismatch { expected: p, got: i + 1 });
        }
        Ok(())
    }

    /// Adds the lifted row `w̃ = wᵀ blkdiag(β¹, …, β^P)`. `betas[k]` is the
    /// unit-L2 patch weight vector of primitive `row.indices[k]`.
    pub fn update(&mut self, row: &WeightRow, betas: &[Vec<f64>]) -> Result<()> {
        check_unit_l2(row)?;
        self.check(row, betas)?;
        for ((i, w), beta) in row.iter().zip(betas) {
            let base = i * self.n_patches;
            for (l, b) in beta.iter().enumerate() {
                let v = w * b;
                self.patch_sq_norms[base + l] += v * v;
            }
        }
        Ok(())
    }

    /// `Σ_i w_i Σ_ℓ β^i_ℓ |W̃^i_ℓ|`.
    pub fn score(&self, row: &WeightRow, betas: &[Vec<f64>]) -> Result<f64> {
        self.check(row, betas)?;
        Ok(row
            .iter()
            .zip(betas)
            .map(|((i, w), beta)| w * self.primitive_term(i, beta))
            .sum())
    }

    /// `Σ_ℓ β_ℓ |W̃^i_ℓ|` for one primitive.
    pub fn primitive_term(&self, i: usize, beta: &[f64]) -> f64 {
        self.patch_row(i).iter().zip(beta).map(|(n, b)| b * n.sqrt()).sum()
    }
}

/// Lifted row `w̃` as `(primitive, patch, value)` triples.
pub fn lift_row(row: &WeightRow, betas: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    row.iter()
        .zip(betas)
        .flat_map(|((i, w), beta)| beta.iter().enumerate().map(move |(l, b)| (i, l, w * b)))
        .collect()
}

/// A primitive seen by a camera together with the direction it was seen from.
#[derive(Debug, Clone, PartialEq)]
pub struct VisiblePrimitive {
    pub index: usize,
    /// `normalize(mean - camera position)`.
    pub direction: Vector3<f64>,
    /// Pixels whose weight on this primitive passes the visibility cutoff.
    pub pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityMode {
    /// Center in the frustum and composited weight above the cutoff in at
    /// least one pixel.
    OcclusionAware,
    /// Center in the frustum.
    Frustum,
}

/// Unit direction from `from` to `to`.
pub fn viewing_direction(from: &Vector3<f64>, to: &Vector3<f64>) -> Vector3<f64> {
    let d = to - from;
    let n = d.norm();
    if n > 0.0 {
        d / n
    } else {
        Vector3::z()
    }
}

/// Primitives visible to `camera` under `mode`, in index order.
pub fn visible_primitives(scene: &Scene, camera: &Camera, rows: &CameraRows, mode: VisibilityMode) -> Vec<VisiblePrimitive> {
    let mut pixels = vec![0usize; scene.len()];
    for row in &rows.rows {
        for (i, w) in row.iter() {
            if w > VISIBILITY_WEIGHT_CUTOFF {
                pixels[i] += 1;
            }
        }
    }
    scene
        .primitives
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            camera.in_frustum(&p.mean)
                && match mode {
                    VisibilityMode::OcclusionAware => pixels[*i] > 0,
                    VisibilityMode::Frustum => true,
                }
        })
        .map(|(i, p)| VisiblePrimitive {
            index: i,
            direction: viewing_direction(&camera.position, &p.mean),
            pixels: pixels[i],
        })
        .collect()
}

/// Running count of how many pixels saw a primitive per observing camera.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VisStats {
    pub cameras: u64,
    pub pixel_sum: f64,
    pub pixel_sq_sum: f64,
}

impl VisStats {
    pub fn mean(&self) -> f64 {
        if self.cameras == 0 {
            0.0
        } else {
            self.pixel_sum / self.cameras as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.cameras == 0 {
            return 0.0;
        }
        let m = self.mean();
        (self.pixel_sq_sum / self.cameras as f64 - m * m).max(0.0)
    }
}

/// Per-primitive boolean direction grids recording which directions each
/// primitive has been observed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrids {
    grid: Arc<DirectionGrid>,
    n_primitives: usize,
    /// Row-major `P × L`.
    seen: Vec<bool>,
    vis: Vec<VisStats>,
}

impl CoverageGrids {
    pub fn new(n_primitives: usize, grid: Arc<DirectionGrid>) -> Self {
        let l = grid.len();
        Self {
            grid,
            n_primitives,
            seen: vec![false; n_primitives * l],
            vis: vec![VisStats::default(); n_primitives],
        }
    }

    pub fn from_parts(grid: Arc<DirectionGrid>, seen: Vec<bool>, vis: Vec<VisStats>) -> Result<Self> {
        let l = grid.len();
        if l == 0 || !seen.len().is_multiple_of(l) || seen.len() / l != vis.len() {
            return Err(Error::Checkpoint("coverage grid sizes are inconsistent".into()));
        }
        Ok(Self {
            n_primitives: vis.len(),
            grid,
            seen,
            vis,
        })
    }

    pub fn grid(&self) -> &Arc<DirectionGrid> {
        &self.grid
    }

    pub fn n_primitives(&self) -> usize {
        self.n_primitives
    }

    pub fn seen(&self) -> &[bool] {
        &self.seen
    }

    pub fn vis_stats(&self) -> &[VisStats] {
        &self.vis
    }

    pub fn seen_patches(&self, i: usize) -> &[bool] {
        let l = self.grid.len();
        &self.seen[i * l..(i + 1) * l]
    }

    pub fn seen_count(&self, i: usize) -> usize {
        self.seen_patches(i).iter().filter(|&&s| s).count()
    }

    /// Marks every patch of every primitive as seen.
    pub fn saturate(&mut self) {
        self.seen.iter_mut().for_each(|s| *s = true);
    }

    /// Flips the patch of each visible primitive's viewing direction.
    pub fn observe(&mut self, visible: &[VisiblePrimitive]) -> Result<()> {
        let l = self.grid.len();
        for v in visible {
            if v.index >= self.n_primitives {
                return Err(Error::DimensionMismatch {
                    expected: self.n_primitives,
                    got: v.index + 1,
                });
            }
            check_unit(&v.direction)?;
        }
        for v in visible {
            let patch = self.grid.quantize(&v.direction);
            self.seen[v.index * l + patch] = true;
            let s = &mut self.vis[v.index];
            s.cameras += 1;
            s.pixel_sum += v.pixels as f64;
            s.pixel_sq_sum += (v.pixels * v.pixels) as f64;
        }
        Ok(())
    }

    /// `(1 + max_seen d_ℓ·d) / 2` for primitive `i`, 0 if never seen.
    pub fn coverage(&self, i: usize, d: &Vector3<f64>) -> f64 {
        let best = self
            .seen_patches(i)
            .iter()
            .zip(self.grid.directions())
            .filter(|(s, _)| **s)
            .map(|(_, p)| p.dot(d))
            .fold(-1.0f64, f64::max);
        (0.5 * (1.0 + best)).clamp(0.0, 1.0)
    }

    /// Coverage of every primitive seen from `position`.
    pub fn coverage_from(&self, means: &[Vector3<f64>], position: &Vector3<f64>) -> Vec<f64> {
        means
            .iter()
            .enumerate()
            .map(|(i, m)| self.coverage(i, &viewing_direction(position, m)))
            .collect()
    }
}

/// Records the primitives in `visible` as observed.
pub fn observe_coverage(grids: &mut CoverageGrids, _camera: &Camera, visible: &[VisiblePrimitive]) -> Result<()> {
    grids.observe(visible)
}

/// Per-primitive coverage from the viewpoint of `camera`.
pub fn coverage_per_primitive(grids: &CoverageGrids, scene: &Scene, camera: &Camera) -> Result<Vec<f64>> {
    if grids.n_primitives() != scene.len() {
        return Err(Error::DimensionMismatch {
            expected: scene.len(),
            got: grids.n_primitives(),
        });
    }
    Ok(grids.coverage_from(&scene.means(), &camera.position))
}

/// Candidate score: mean of the coverage render over its alpha mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageScore {
    /// Lower is more informative; 1.0 when the camera sees nothing.
    pub mean: f64,
    pub metric: MetricImage,
}

/// Score for precomputed camera rows.
pub fn score_coverage_rows(
    grids: &CoverageGrids,
    means: &[Vector3<f64>],
    camera: &Camera,
    rows: &CameraRows,
    background: Background,
) -> CoverageScore {
    let per_prim = grids.coverage_from(means, &camera.position);
    let metric = rows.render_scalar(&per_prim, background.value());
    let mean = rows.masked_mean(&metric).unwrap_or(1.0);
    CoverageScore { mean, metric }
}

pub fn score_coverage(scene: &Scene, grids: &CoverageGrids, camera: &Camera, background: Background) -> Result<CoverageScore> {
    let per_prim = coverage_per_primitive(grids, scene, camera)?;
    check_scores(&per_prim, scene.len())?;
    let rows = Compositor::new(scene)?.camera_rows(camera);
    Ok(score_coverage_rows(grids, &scene.means(), camera, &rows, background))
}
