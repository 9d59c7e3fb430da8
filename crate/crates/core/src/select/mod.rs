//! Active view selection.
//!
//! A [`Workbench`] caches, for every camera of a scene, its per-pixel
//! compositing rows, ground-truth colours and visible primitives. A
//! [`SelectionState`] holds the training set, the remaining candidate pool
//! and all metric accumulators; [`select_next`] moves one camera from the
//! pool into the training set. [`run_fixed`] and [`run_embodied`] drive the
//! full protocol and record an evaluation curve.

mod reconstruct;
mod refine;
mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{FigScorer, GramMatrix, DEFAULT_RIDGE};
use crate::metrics::{
    score_coverage_rows, viewing_direction, visible_primitives, CoverageGrids, SphericalGaussianKernel,
    TransAccumulator, ViewAccumulator, VisibilityMode, VisiblePrimitive, DEFAULT_KAPPA,
};
use crate::raster::{shade_rows, Background, CameraRows, Compositor, NormMode, ViewDependentColor, WeightRow};
use crate::scene::{Camera, Scene};
use crate::sphere::DirectionGrid;

pub use reconstruct::{psnr, reconstruct, NormalEquations, ReconstructionResult};
pub use refine::{refine_pose, refine_pose_with, RefineParams, RefineResult};
pub use report::{
    auc_delta, curve_auc_delta, format_table, parse_curve_csv, read_curve_csv, table_csv, AucRow, Curve, CurveReport, CurveRow,
};

const NOISE_SEED: u64 = 0;
const NOISE_CANDIDATE: u64 = 1 << 32;
const NOISE_REFINED: u64 = 2 << 32;

/// Default number of seed views.
pub const DEFAULT_SEED_VIEWS: usize = 10;
/// Default embodied neighbourhood size.
pub const DEFAULT_EMBODIED_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Coverage metric, lower is better.
    Cover,
    /// Transmittance metric, lower is better.
    Trans,
    /// View-direction metric, lower is better.
    View,
    /// Exact mean Fisher information gain, higher is better.
    ExactFig,
    /// Uniform choice from the eligible cameras.
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Cover, Method::Trans, Method::View, Method::ExactFig, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cover => "cover",
            Method::Trans => "trans",
            Method::View => "view",
            Method::ExactFig => "exact_fig",
            Method::Random => "random",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Method> {
        Method::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown method '{s}' (expected cover, trans, view, exact_fig or random)")))
    }
}

/// Settings shared by every selection method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    /// Patches of the per-primitive direction grids.
    pub grid_patches: usize,
    pub kappa: f64,
    /// Ridge of both the colour solve and the exact-FIG Gram matrix.
    pub ridge: f64,
    /// Pixel subsampling for the exact-FIG design rows.
    pub pixel_stride: usize,
    pub visibility: VisibilityMode,
    pub background: Background,
    /// Standard deviation of Gaussian noise added to training observations.
    /// Evaluation views are always clean. Without noise a matte scene is
    /// recovered exactly as soon as every primitive has been seen once.
    pub observation_noise: f64,
    pub noise_seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            grid_patches: 162,
            kappa: DEFAULT_KAPPA,
            ridge: DEFAULT_RIDGE,
            pixel_stride: 4,
            visibility: VisibilityMode::OcclusionAware,
            background: Background::Zero,
            observation_noise: 0.05,
            noise_seed: 0,
        }
    }
}

impl SelectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_patches < 2 {
            return Err(Error::Precondition("direction grid needs at least 2 patches".into()));
        }
        SphericalGaussianKernel::new(self.kappa)?;
        if !(self.ridge >= 0.0) {
            return Err(Error::Precondition("ridge must be non-negative".into()));
        }
        if self.pixel_stride == 0 {
            return Err(Error::Precondition("pixel stride must be >= 1".into()));
        }
        if !(self.observation_noise >= 0.0 && self.observation_noise.is_finite()) {
            return Err(Error::Precondition("observation noise must be a finite non-negative number".into()));
        }
        Ok(())
    }
}

/// Everything derived from one camera that selection needs.
#[derive(Debug, Clone)]
pub struct CameraView {
    pub camera: Camera,
    pub rows: CameraRows,
    /// Ground-truth colour per pixel.
    pub observed: Vec<[f64; 3]>,
    pub visible: Vec<VisiblePrimitive>,
}

/// Cached per-camera data for a scene.
pub struct Workbench<'s> {
    scene: &'s Scene,
    config: SelectConfig,
    compositor: Compositor,
    grid: Arc<DirectionGrid>,
    kernel: SphericalGaussianKernel,
    color_model: Option<ViewDependentColor>,
    means: Vec<Vector3<f64>>,
    candidates: Vec<CameraView>,
    seeds: Vec<CameraView>,
    evals: Vec<CameraView>,
}

impl<'s> Workbench<'s> {
    pub fn new(scene: &'s Scene, config: SelectConfig) -> Result<Self> {
        config.validate()?;
        let compositor = Compositor::new(scene)?;
        let kernel = SphericalGaussianKernel::new(config.kappa)?;
        let color_model = ViewDependentColor::for_scene(scene, kernel);
        let mut bench = Self {
            scene,
            grid: Arc::new(DirectionGrid::for_patch_count(config.grid_patches)),
            config,
            compositor,
            kernel,
            color_model,
            means: scene.means(),
            candidates: Vec::new(),
            seeds: Vec::new(),
            evals: Vec::new(),
        };
        bench.candidates = bench.views(&scene.candidate_cameras, Some(NOISE_CANDIDATE));
        bench.seeds = bench.views(&scene.seed_cameras, Some(NOISE_SEED));
        bench.evals = bench.views(&scene.eval_cameras, None);
        Ok(bench)
    }

    fn views(&self, cameras: &[Camera], noise_stream: Option<u64>) -> Vec<CameraView> {
        cameras
            .par_iter()
            .enumerate()
            .map(|(i, c)| self.render_view(c, noise_stream.map(|s| s + i as u64)))
            .collect()
    }

    /// Renders rows, clean ground truth and visibility for an arbitrary
    /// camera.
    pub fn view_for(&self, camera: &Camera) -> CameraView {
        self.render_view(camera, None)
    }

    /// Like [`Workbench::view_for`] with training noise drawn from `stream`.
    pub fn noisy_view_for(&self, camera: &Camera, stream: u64) -> CameraView {
        self.render_view(camera, Some(stream))
    }

    /// Training view for the `index`-th refined pose of a run.
    pub fn refined_view(&self, camera: &Camera, index: usize) -> CameraView {
        self.render_view(camera, Some(NOISE_REFINED + index as u64))
    }

    fn render_view(&self, camera: &Camera, noise_stream: Option<u64>) -> CameraView {
        let rows = self.compositor.camera_rows(camera);
        let mut observed = shade_rows(self.scene, camera, &rows, self.color_model.as_ref()).data;
        if let (Some(stream), true) = (noise_stream, self.config.observation_noise > 0.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.noise_seed);
            rng.set_stream(stream);
            for px in &mut observed {
                for c in px.iter_mut() {
                    *c += self.config.observation_noise * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        let visible = visible_primitives(self.scene, camera, &rows, self.config.visibility);
        CameraView {
            camera: camera.clone(),
            rows,
            observed,
            visible,
        }
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn config(&self) -> &SelectConfig {
        &self.config
    }

    pub fn compositor(&self) -> &Compositor {
        &self.compositor
    }

    pub fn grid(&self) -> &Arc<DirectionGrid> {
        &self.grid
    }

    pub fn kernel(&self) -> &SphericalGaussianKernel {
        &self.kernel
    }

    pub fn means(&self) -> &[Vector3<f64>] {
        &self.means
    }

    pub fn candidate(&self, id: usize) -> &CameraView {
        &self.candidates[id]
    }

    pub fn candidates(&self) -> &[CameraView] {
        &self.candidates
    }

    pub fn seeds(&self) -> &[CameraView] {
        &self.seeds
    }

    pub fn evals(&self) -> &[CameraView] {
        &self.evals
    }

    /// Unit-L2 kernel weights for primitive `i` seen from `position`.
    pub fn beta(&self, i: usize, position: &Vector3<f64>) -> Vec<f64> {
        self.kernel.weights(&self.grid, &viewing_direction(position, &self.means[i]))
    }
}

/// Where a training camera came from.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingView {
    Seed(usize),
    Candidate(usize),
    /// Pose produced by refinement; indexes [`SelectionState::refined`].
    Refined(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub camera_id: usize,
    /// Method score at selection time (`None` for random).
    pub score: Option<f64>,
}

/// Training set, remaining pool and every metric accumulator.
#[derive(Debug, Clone)]
pub struct SelectionState {
    pub method: Method,
    pub training: Vec<TrainingView>,
    pub pool: BTreeSet<usize>,
    pub grids: CoverageGrids,
    pub trans: TransAccumulator,
    pub view: ViewAccumulator,
    pub gram: GramMatrix,
    pub normal: NormalEquations,
    pub refined: Vec<CameraView>,
    pub rng_seed: u64,
    rng: ChaCha8Rng,
    pub step_log: Vec<CurveRow>,
}

impl SelectionState {
    /// Fresh state with the full candidate pool and the first `seed_count`
    /// seed cameras in the training set.
    pub fn new(bench: &Workbench<'_>, method: Method, seed_count: usize, rng_seed: u64) -> Result<Self> {
        if seed_count > bench.seeds.len() {
            return Err(Error::Precondition(format!(
                "{seed_count} seed views requested but the scene has {}",
                bench.seeds.len()
            )));
        }
        let p = bench.scene.len();
        let mut state = Self {
            method,
            training: Vec::new(),
            pool: (0..bench.candidates.len()).collect(),
            grids: CoverageGrids::new(p, bench.grid.clone()),
            trans: TransAccumulator::new(p),
            view: ViewAccumulator::new(p, bench.grid.len()),
            gram: GramMatrix::zeros(p),
            normal: NormalEquations::new(p),
            refined: Vec::new(),
            rng_seed,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            step_log: Vec::new(),
        };
        for i in 0..seed_count {
            state.absorb(bench, TrainingView::Seed(i))?;
        }
        Ok(state)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        method: Method,
        training: Vec<TrainingView>,
        pool: BTreeSet<usize>,
        grids: CoverageGrids,
        trans: TransAccumulator,
        view: ViewAccumulator,
        gram: GramMatrix,
        normal: NormalEquations,
        refined: Vec<CameraView>,
        rng_seed: u64,
        step_log: Vec<CurveRow>,
    ) -> Self {
        Self {
            method,
            training,
            pool,
            grids,
            trans,
            view,
            gram,
            normal,
            refined,
            rng_seed,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            step_log,
        }
    }

    pub fn rng_word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub(crate) fn set_rng_word_pos(&mut self, pos: u128) {
        self.rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        self.rng.set_word_pos(pos);
    }

    fn training_view<'a>(&'a self, bench: &'a Workbench<'_>, t: &TrainingView) -> &'a CameraView {
        match *t {
            TrainingView::Seed(i) => &bench.seeds[i],
            TrainingView::Candidate(i) => &bench.candidates[i],
            TrainingView::Refined(i) => &self.refined[i],
        }
    }

    pub fn training_cameras(&self, bench: &Workbench<'_>) -> Vec<Camera> {
        self.training
            .iter()
            .map(|t| self.training_view(bench, t).camera.clone())
            .collect()
    }

    /// Adds a camera to the training set and folds its observations into
    /// every accumulator.
    pub fn absorb(&mut self, bench: &Workbench<'_>, t: TrainingView) -> Result<()> {
        if let TrainingView::Candidate(id) = t {
            if !self.pool.remove(&id) {
                return Err(Error::Precondition(format!("camera {id} is not in the candidate pool")));
            }
        }
        let view = self.training_view(bench, &t).clone();
        self.grids.observe(&view.visible)?;
        let position = view.camera.position;
        let mut beta_cache: Vec<Option<Vec<f64>>> = vec![None; bench.means.len()];
        for (p, row) in view.rows.rows.iter().enumerate() {
            let Some((unit, _)) = row.normalized(NormMode::UnitL2) else {
                continue;
            };
            self.trans.update(&unit)?;
            let betas: Vec<Vec<f64>> = unit
                .indices
                .iter()
                .map(|&i| beta_cache[i].get_or_insert_with(|| bench.beta(i, &position)).clone())
                .collect();
            self.view.update(&unit, &betas)?;
            if p % bench.config.pixel_stride == 0 {
                self.gram.add_row(&unit);
            }
        }
        self.normal.add_view(&view.rows, &view.observed);
        self.training.push(t);
        Ok(())
    }

    /// Adds a refined pose to the training set.
    pub fn absorb_refined(&mut self, bench: &Workbench<'_>, camera: &Camera) -> Result<()> {
        self.refined.push(bench.refined_view(camera, self.refined.len()));
        self.absorb(bench, TrainingView::Refined(self.refined.len() - 1))
    }

    /// Solves the colour regression for the current training set and
    /// evaluates it on the evaluation cameras.
    pub fn reconstruct(&self, bench: &Workbench<'_>) -> Result<ReconstructionResult> {
        let colors = reconstruct::clamp_colors(&self.normal.solve(bench.config.ridge)?);
        let train_residual = reconstruct::mean_squared_error(
            self.training.iter().map(|t| {
                let v = self.training_view(bench, t);
                (&v.rows, v.observed.as_slice())
            }),
            &colors,
        );
        let eval_mse =
            reconstruct::mean_squared_error(bench.evals.iter().map(|v| (&v.rows, v.observed.as_slice())), &colors);
        Ok(ReconstructionResult {
            fitted_colors: colors,
            train_residual,
            eval_mse,
            eval_psnr: psnr(eval_mse),
        })
    }

    /// Score of camera `view` under `method` against the current state.
    /// Lower is better for every method but [`Method::ExactFig`].
    pub fn score_view(&self, bench: &Workbench<'_>, view: &CameraView, method: Method) -> Result<f64> {
        let pos = view.camera.position;
        let rows = &view.rows;
        Ok(match method {
            Method::Cover => score_coverage_rows(&self.grids, &bench.means, &view.camera, rows, bench.config.background).mean,
            Method::Trans => {
                let norms = self.trans.column_norms();
                masked_mean(rows, |row| row.dot(&norms))
            }
            Method::View => {
                let per_prim: Vec<f64> = (0..bench.means.len())
                    .map(|i| self.view.primitive_term(i, &bench.beta(i, &pos)))
                    .collect();
                masked_mean(rows, |row| row.dot(&per_prim))
            }
            Method::ExactFig => {
                let scorer = FigScorer::new(&self.gram.with_ridge(bench.config.ridge))?;
                scorer.mean_fig(&fig_rows(rows, bench.config.pixel_stride))
            }
            Method::Random => 0.0,
        })
    }

    /// Scores of every pool camera, in ascending id order.
    pub fn score_pool(&self, bench: &Workbench<'_>, method: Method) -> Result<Vec<(usize, f64)>> {
        let ids: Vec<usize> = self.pool.iter().copied().collect();
        self.score_ids(bench, &ids, method)
    }

    fn score_ids(&self, bench: &Workbench<'_>, ids: &[usize], method: Method) -> Result<Vec<(usize, f64)>> {
        if method == Method::ExactFig {
            // One factorization shared by every candidate.
            let scorer = FigScorer::new(&self.gram.with_ridge(bench.config.ridge))?;
            let stride = bench.config.pixel_stride;
            return Ok(ids
                .par_iter()
                .map(|&id| (id, scorer.mean_fig(&fig_rows(&bench.candidates[id].rows, stride))))
                .collect());
        }
        ids.par_iter()
            .map(|&id| Ok((id, self.score_view(bench, &bench.candidates[id], method)?)))
            .collect()
    }

    /// Picks among `eligible` pool cameras and absorbs the choice.
    pub fn select_among(&mut self, bench: &Workbench<'_>, eligible: &[usize]) -> Result<Selection> {
        let mut ids: Vec<usize> = eligible.iter().copied().filter(|id| self.pool.contains(id)).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::PoolExhausted);
        }
        let selection = match self.method {
            Method::Random => Selection {
                camera_id: ids[self.rng.gen_range(0..ids.len())],
                score: None,
            },
            method => {
                let scores = self.score_ids(bench, &ids, method)?;
                let higher_is_better = method == Method::ExactFig;
                let mut best = scores[0];
                for &(id, s) in &scores[1..] {
                    let better = if higher_is_better { s > best.1 } else { s < best.1 };
                    if better {
                        best = (id, s);
                    }
                }
                Selection {
                    camera_id: best.0,
                    score: Some(best.1),
                }
            }
        };
        self.absorb(bench, TrainingView::Candidate(selection.camera_id))?;
        Ok(selection)
    }
}

/// Unit-L2 rows of every `stride`-th pixel, empty rows dropped.
fn fig_rows(rows: &CameraRows, stride: usize) -> Vec<WeightRow> {
    rows.rows
        .iter()
        .step_by(stride)
        .filter_map(|r| r.normalized(NormMode::UnitL2).map(|(u, _)| u))
        .collect()
}

/// Mean of a per-pixel value over pixels that hit something; `+inf` if none.
fn masked_mean(rows: &CameraRows, f: impl Fn(&WeightRow) -> f64) -> f64 {
    let (sum, n) = rows
        .rows
        .iter()
        .filter(|r| !r.is_empty())
        .fold((0.0, 0usize), |(s, n), r| (s + f(r), n + 1));
    if n == 0 {
        f64::INFINITY
    } else {
        sum / n as f64
    }
}

/// Chooses the next camera from the whole pool.
pub fn select_next(state: &mut SelectionState, bench: &Workbench<'_>) -> Result<Selection> {
    let ids: Vec<usize> = state.pool.iter().copied().collect();
    state.select_among(bench, &ids)
}

/// The `k` pool cameras closest to `position`; ties by id.
pub fn nearest_in_pool(bench: &Workbench<'_>, pool: &BTreeSet<usize>, position: &Vector3<f64>, k: usize) -> Vec<usize> {
    let mut ids: Vec<(f64, usize)> = pool
        .iter()
        .map(|&id| ((bench.candidates[id].camera.position - position).norm(), id))
        .collect();
    ids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ids.truncate(k);
    ids.into_iter().map(|(_, id)| id).collect()
}

/// Protocol settings for one selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub method: Method,
    pub rounds: usize,
    pub seed_count: usize,
    pub rng_seed: u64,
    /// Embodied neighbourhood size and start position.
    pub embodied: Option<(usize, Vector3<f64>)>,
    pub refine: Option<RefineParams>,
}

/// Result of a selection run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub curve: Curve,
    pub state: SelectionState,
    /// The pool ran out before all rounds completed.
    pub exhausted: bool,
    pub refined_cameras: Vec<Camera>,
}

fn log_round(state: &mut SelectionState, bench: &Workbench<'_>, round: usize, sel: Option<Selection>) -> Result<()> {
    let rec = state.reconstruct(bench)?;
    state.step_log.push(CurveRow {
        round,
        camera_id: sel.map(|s| s.camera_id),
        score: sel.and_then(|s| s.score),
        eval_mse: rec.eval_mse,
        eval_psnr: rec.eval_psnr,
    });
    Ok(())
}

/// Runs the selection protocol described by `opts`.
pub fn run(bench: &Workbench<'_>, opts: &RunOptions) -> Result<RunOutcome> {
    if opts.embodied.is_none() && opts.rounds > bench.candidates.len() {
        return Err(Error::Precondition(format!(
            "{} rounds requested but the candidate pool has {} cameras",
            opts.rounds,
            bench.candidates.len()
        )));
    }
    if let Some((k, _)) = opts.embodied {
        if k == 0 {
            return Err(Error::Precondition("embodied k must be >= 1".into()));
        }
    }
    let mut state = SelectionState::new(bench, opts.method, opts.seed_count, opts.rng_seed)?;
    log_round(&mut state, bench, 0, None)?;
    let mut current = opts.embodied.map(|(_, start)| start);
    let mut exhausted = false;
    let mut refined_cameras = Vec::new();
    for round in 1..=opts.rounds {
        if state.pool.is_empty() {
            exhausted = true;
            break;
        }
        let sel = match (opts.embodied, current) {
            (Some((k, _)), Some(pos)) => {
                let eligible = nearest_in_pool(bench, &state.pool, &pos, k);
                state.select_among(bench, &eligible)?
            }
            _ => select_next(&mut state, bench)?,
        };
        let root = bench.candidates[sel.camera_id].camera.clone();
        if current.is_some() {
            current = Some(root.position);
        }
        if let Some(params) = &opts.refine {
            let result = refine_pose_with(bench.compositor(), bench.means(), &state.grids, &root, params)?;
            if result.camera != root {
                state.absorb_refined(bench, &result.camera)?;
                refined_cameras.push(result.camera);
            }
        }
        log_round(&mut state, bench, round, Some(sel))?;
    }
    let curve = Curve {
        method: opts.method,
        rows: state.step_log.clone(),
    };
    Ok(RunOutcome {
        curve,
        state,
        exhausted,
        refined_cameras,
    })
}

/// Fixed-pool protocol: every round picks from the whole remaining pool.
pub fn run_fixed(
    bench: &Workbench<'_>,
    method: Method,
    rounds: usize,
    seed_count: usize,
    rng_seed: u64,
) -> Result<(Curve, SelectionState)> {
    let out = run(
        bench,
        &RunOptions {
            method,
            rounds,
            seed_count,
            rng_seed,
            embodied: None,
            refine: None,
        },
    )?;
    Ok((out.curve, out.state))
}

/// Embodied report: the curve plus whether the pool ran dry early.
#[derive(Debug, Clone)]
pub struct EmbodiedReport {
    pub curve: Curve,
    pub exhausted: bool,
    pub state: SelectionState,
}

/// Embodied protocol: each round picks among the `k` pool cameras nearest
/// to the previously chosen one, starting from `start`.
pub fn run_embodied(
    bench: &Workbench<'_>,
    method: Method,
    rounds: usize,
    k: usize,
    start: Vector3<f64>,
    seed_count: usize,
    rng_seed: u64,
) -> Result<EmbodiedReport> {
    let out = run(
        bench,
        &RunOptions {
            method,
            rounds,
            seed_count,
            rng_seed,
            embodied: Some((k, start)),
            refine: None,
        },
    )?;
    Ok(EmbodiedReport {
        curve: out.curve,
        exhausted: out.exhausted,
        state: out.state,
    })
}

/// Default embodied start: the last seed camera used, else candidate 0.
pub fn default_start(bench: &Workbench<'_>, seed_count: usize) -> Vector3<f64> {
    if seed_count > 0 && seed_count <= bench.seeds.len() {
        bench.seeds[seed_count - 1].camera.position
    } else if let Some(c) = bench.candidates.first() {
        c.camera.position
    } else {
        Vector3::zeros()
    }
}

#[cfg(test)]
mod tests;
