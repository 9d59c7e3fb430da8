//! Continuous pose refinement against the coverage render.
//!
//! Starting from a candidate pose, plain gradient descent on the masked
//! mean of the coverage render, with gradients from central differences
//! over position and a camera-frame rotation vector.

use nalgebra::{Vector3, Vector6};

use crate::error::{Error, Result};
use crate::metrics::{score_coverage_rows, CoverageGrids};
use crate::raster::{Background, Compositor};
use crate::scene::{Camera, Scene};

#[derive(Debug, Clone, PartialEq)]
pub struct RefineParams {
    pub steps: usize,
    /// Central-difference step for position.
    pub fd_position: f64,
    /// Central-difference step for rotation, radians.
    pub fd_rotation: f64,
    pub lr_position: f64,
    pub lr_rotation: f64,
    /// Per-step clamp on the position update norm.
    pub max_step_position: f64,
    /// Per-step clamp on the rotation update norm.
    pub max_step_rotation: f64,
    pub background: Background,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            steps: 50,
            fd_position: 0.05,
            fd_rotation: 0.01,
            lr_position: 1.0,
            lr_rotation: 0.2,
            max_step_position: 0.1,
            max_step_rotation: 0.05,
            background: Background::Zero,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.fd_position,
            self.fd_rotation,
            self.max_step_position,
            self.max_step_rotation,
        ];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Precondition("refinement steps and clamps must be positive".into()));
        }
        if !(self.lr_position >= 0.0 && self.lr_rotation >= 0.0) {
            return Err(Error::Precondition("refinement learning rates must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResult {
    /// Best pose visited.
    pub camera: Camera,
    pub best_score: f64,
    /// Score after each step, starting with the root.
    pub history: Vec<f64>,
}

fn clamp_norm(v: Vector3<f64>, max: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

fn offset(camera: &Camera, delta: &Vector6<f64>) -> Camera {
    camera.perturbed(&delta.fixed_rows::<3>(0).into(), &delta.fixed_rows::<3>(3).into())
}

/// Refines `root` using precomputed scene state.
pub fn refine_pose_with(
    compositor: &Compositor,
    means: &[Vector3<f64>],
    grids: &CoverageGrids,
    root: &Camera,
    params: &RefineParams,
) -> Result<RefineResult> {
    params.validate()?;
    root.validate()?;
    let score = |cam: &Camera| {
        let rows = compositor.camera_rows(cam);
        score_coverage_rows(grids, means, cam, &rows, params.background).mean
    };
    let mut current = root.clone();
    let mut current_score = score(&current);
    let mut best = (current.clone(), current_score);
    let mut history = vec![current_score];
    let fd = [
        params.fd_position,
        params.fd_position,
        params.fd_position,
        params.fd_rotation,
        params.fd_rotation,
        params.fd_rotation,
    ];
    for _ in 0..params.steps {
        let mut grad = Vector6::zeros();
        for k in 0..6 {
            let mut delta = Vector6::zeros();
            delta[k] = fd[k];
            let plus = score(&offset(&current, &delta));
            let minus = score(&offset(&current, &-delta));
            grad[k] = (plus - minus) / (2.0 * fd[k]);
        }
        let dp = clamp_norm(-params.lr_position * Vector3::new(grad[0], grad[1], grad[2]), params.max_step_position);
        let dr = clamp_norm(-params.lr_rotation * Vector3::new(grad[3], grad[4], grad[5]), params.max_step_rotation);
        if dp.norm() == 0.0 && dr.norm() == 0.0 {
            break;
        }
        current = current.perturbed(&dp, &dr);
        current_score = score(&current);
        history.push(current_score);
        if current_score < best.1 {
            best = (current.clone(), current_score);
        }
    }
    Ok(RefineResult {
        camera: best.0,
        best_score: best.1,
        history,
    })
}

/// Refines `root` to lower its coverage score under `grids`.
pub fn refine_pose(scene: &Scene, grids: &CoverageGrids, root: &Camera, params: &RefineParams) -> Result<RefineResult> {
    if grids.n_primitives() != scene.len() {
        return Err(Error::DimensionMismatch {
            expected: scene.len(),
            got: grids.n_primitives(),
        });
    }
    refine_pose_with(&Compositor::new(scene)?, &scene.means(), grids, root, params)
}
