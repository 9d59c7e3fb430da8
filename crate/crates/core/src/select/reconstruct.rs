//! Closed-form ridge least-squares colour reconstruction.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::raster::{shade_rows, CameraRows, Compositor, ViewDependentColor, WeightRow};
use crate::metrics::SphericalGaussianKernel;
use crate::scene::{Camera, Scene};

/// Accumulated `AᵀA` and `AᵀC` of the per-channel colour regression.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    pub ata: DMatrix<f64>,
    /// `P × 3`
    pub atb: DMatrix<f64>,
    pub rows: usize,
}

impl NormalEquations {
    pub fn new(n_primitives: usize) -> Self {
        Self {
            ata: DMatrix::zeros(n_primitives, n_primitives),
            atb: DMatrix::zeros(n_primitives, 3),
            rows: 0,
        }
    }

    pub fn add_row(&mut self, row: &WeightRow, observed: &[f64; 3]) {
        for (a, wa) in row.iter() {
            for (b, wb) in row.iter() {
                self.ata[(a, b)] += wa * wb;
            }
            for (k, o) in observed.iter().enumerate() {
                self.atb[(a, k)] += wa * o;
            }
        }
        self.rows += 1;
    }

    pub fn add_view(&mut self, rows: &CameraRows, observed: &[[f64; 3]]) {
        for (row, c) in rows.rows.iter().zip(observed) {
            self.add_row(row, c);
        }
    }

    /// Solves `(AᵀA + ridge I) c = AᵀC`. Falls back to the minimum-norm
    /// pseudo-inverse solution when the system is singular.
    pub fn solve(&self, ridge: f64) -> Result<DMatrix<f64>> {
        if ridge < 0.0 {
            return Err(Error::Precondition("ridge must be non-negative".into()));
        }
        let n = self.ata.nrows();
        let lhs = &self.ata + DMatrix::identity(n, n) * ridge;
        if ridge > 0.0 {
            if let Some(chol) = Cholesky::new(lhs.clone()) {
                return Ok(chol.solve(&self.atb));
            }
        }
        let svd = lhs.svd(true, true);
        let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
        svd.solve(&self.atb, eps).map_err(|e| Error::Degenerate(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// Per-primitive RGB, clamped to `[0, 1]`.
    pub fitted_colors: Vec<[f64; 3]>,
    /// Mean squared per-channel residual over the training pixels.
    pub train_residual: f64,
    /// Mean squared per-channel error over the evaluation pixels.
    pub eval_mse: f64,
    pub eval_psnr: f64,
}

/// PSNR in dB for a peak value of 1.
pub fn psnr(mse: f64) -> f64 {
    if mse > 0.0 {
        -10.0 * mse.log10()
    } else if mse == 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

pub(crate) fn clamp_colors(solution: &DMatrix<f64>) -> Vec<[f64; 3]> {
    (0..solution.nrows())
        .map(|i| [0, 1, 2].map(|k| solution[(i, k)].clamp(0.0, 1.0)))
        .collect()
}

/// Sum of squared per-channel errors of `colors` against `observed`.
pub(crate) fn squared_error(rows: &CameraRows, observed: &[[f64; 3]], colors: &[[f64; 3]]) -> f64 {
    rows.rows
        .iter()
        .zip(observed)
        .map(|(row, obs)| {
            let mut pred = [0.0; 3];
            for (i, w) in row.iter() {
                for k in 0..3 {
                    pred[k] += w * colors[i][k];
                }
            }
            (0..3).map(|k| (pred[k] - obs[k]).powi(2)).sum::<f64>()
        })
        .sum()
}

/// Mean squared error over a set of `(rows, observed)` views.
pub(crate) fn mean_squared_error<'a>(
    views: impl IntoIterator<Item = (&'a CameraRows, &'a [[f64; 3]])>,
    colors: &[[f64; 3]],
) -> f64 {
    let (mut sse, mut n) = (0.0, 0usize);
    for (rows, obs) in views {
        sse += squared_error(rows, obs, colors);
        n += 3 * rows.rows.len();
    }
    if n == 0 {
        f64::NAN
    } else {
        sse / n as f64
    }
}

/// Fits per-primitive colours to ground-truth renders from `cameras` and
/// evaluates the fit on the scene's evaluation cameras.
pub fn reconstruct(scene: &Scene, cameras: &[Camera], ridge: f64) -> Result<ReconstructionResult> {
    if cameras.is_empty() {
        return Err(Error::Precondition("reconstruction needs at least one camera".into()));
    }
    let comp = Compositor::new(scene)?;
    let vd = ViewDependentColor::for_scene(scene, SphericalGaussianKernel::default());
    let render = |cam: &Camera| -> Result<(CameraRows, Vec<[f64; 3]>)> {
        cam.validate()?;
        let rows = comp.camera_rows(cam);
        let obs = shade_rows(scene, cam, &rows, vd.as_ref()).data;
        Ok((rows, obs))
    };
    let train = cameras.iter().map(render).collect::<Result<Vec<_>>>()?;
    let eval = scene.eval_cameras.iter().map(render).collect::<Result<Vec<_>>>()?;

    let mut ne = NormalEquations::new(scene.len());
    for (rows, obs) in &train {
        ne.add_view(rows, obs);
    }
    let colors = clamp_colors(&ne.solve(ridge)?);
    let train_residual = mean_squared_error(train.iter().map(|(r, o)| (r, o.as_slice())), &colors);
    let eval_mse = mean_squared_error(eval.iter().map(|(r, o)| (r, o.as_slice())), &colors);
    Ok(ReconstructionResult {
        fitted_colors: colors,
        train_residual,
        eval_mse,
        eval_psnr: psnr(eval_mse),
    })
}
