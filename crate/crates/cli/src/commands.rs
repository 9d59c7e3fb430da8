//! Subcommand bodies. Each returns a short human-readable summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use cover_core::checkpoint::Checkpoint;
use cover_core::metrics::{score_coverage, CoverageGrids};
use cover_core::raster::Background;
use cover_core::scene::{generate_scene, look_at_camera, Camera, Scene, SceneSpec};
use cover_core::select::{
    default_start, format_table, read_curve_csv, run, table_csv, AucRow, RefineParams, RunOptions, Workbench,
};
use cover_core::sphere::DirectionGrid;
use nalgebra::Vector3;
use serde::Serialize;

use crate::config::{Manifest, RunConfig, SceneSource};

pub fn cmd_gen_scene(spec: &SceneSpec, out: &Path) -> Result<String> {
    let scene = generate_scene(spec)?;
    write_with_parent(out, scene.to_json()?.as_bytes())?;
    Ok(format!(
        "wrote {}: {} primitives, {} candidate, {} eval, {} seed cameras",
        out.display(),
        scene.len(),
        scene.candidate_cameras.len(),
        scene.eval_cameras.len(),
        scene.seed_cameras.len()
    ))
}

/// Paths of everything a run writes.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub manifest: PathBuf,
    pub curve: PathBuf,
    pub checkpoint: PathBuf,
    pub chosen: PathBuf,
}

impl RunArtifacts {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            manifest: dir.join("manifest.json"),
            curve: dir.join("curve.csv"),
            checkpoint: dir.join("checkpoint.bin"),
            chosen: dir.join("chosen.json"),
        }
    }
}

#[derive(Serialize)]
struct ChosenView {
    round: usize,
    camera_id: usize,
    score: Option<f64>,
    position: [f64; 3],
    /// `[w, x, y, z]`, world from camera.
    rotation: [f64; 4],
}

#[derive(Serialize)]
struct ChosenFile {
    method: String,
    exhausted: bool,
    chosen: Vec<ChosenView>,
    refined: Vec<ChosenPose>,
}

#[derive(Serialize)]
struct ChosenPose {
    position: [f64; 3],
    rotation: [f64; 4],
}

fn pose(c: &Camera) -> ChosenPose {
    let q = c.rotation.quaternion();
    ChosenPose {
        position: [c.position.x, c.position.y, c.position.z],
        rotation: [q.w, q.i, q.j, q.k],
    }
}

fn load_scene(source: &SceneSource) -> Result<Scene> {
    Ok(match source {
        SceneSource::Generate(spec) => generate_scene(spec)?,
        SceneSource::File(path) => Scene::load(path).with_context(|| format!("loading scene {}", path.display()))?,
    })
}

pub fn cmd_run(config: &RunConfig) -> Result<(RunArtifacts, String)> {
    config.validate()?;
    let scene = load_scene(&config.scene)?;
    let bench = Workbench::new(&scene, config.select.clone())?;
    let opts = RunOptions {
        method: config.method,
        rounds: config.rounds,
        seed_count: config.seed_count,
        rng_seed: config.rng_seed,
        embodied: config
            .embodied
            .then(|| (config.k, default_start(&bench, config.seed_count))),
        refine: config.refine.then(|| RefineParams {
            steps: config.refine_steps,
            background: config.select.background,
            ..RefineParams::default()
        }),
    };
    let outcome = run(&bench, &opts)?;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let art = RunArtifacts::in_dir(dir);
    fs::write(&art.manifest, Manifest::new(config.clone()).to_json()?)
        .with_context(|| format!("writing {}", art.manifest.display()))?;
    outcome.curve.write_csv(&art.curve)?;
    Checkpoint::from_state(&outcome.state).save(&art.checkpoint)?;
    let chosen = ChosenFile {
        method: config.method.to_string(),
        exhausted: outcome.exhausted,
        chosen: outcome
            .curve
            .rows
            .iter()
            .filter_map(|r| {
                let id = r.camera_id?;
                let p = pose(&scene.candidate_cameras[id]);
                Some(ChosenView {
                    round: r.round,
                    camera_id: id,
                    score: r.score,
                    position: p.position,
                    rotation: p.rotation,
                })
            })
            .collect(),
        refined: outcome.refined_cameras.iter().map(pose).collect(),
    };
    fs::write(&art.chosen, serde_json::to_string_pretty(&chosen)? + "\n")
        .with_context(|| format!("writing {}", art.chosen.display()))?;

    let last = outcome.curve.rows.last().expect("round 0 is always logged");
    let mut summary = format!(
        "{}: {} rounds, final eval PSNR {:.3} dB, outputs in {}",
        config.method,
        outcome.curve.rows.len() - 1,
        last.eval_psnr,
        dir.display()
    );
    if outcome.exhausted {
        summary.push_str(" (candidate pool exhausted early)");
    }
    Ok((art, summary))
}

/// Where the metric is rendered from.
#[derive(Debug, Clone)]
pub enum Viewpoint {
    Candidate(usize),
    LookAt { position: Vector3<f64>, target: Vector3<f64> },
}

pub struct RenderRequest<'a> {
    pub scene: &'a Path,
    pub checkpoint: Option<&'a Path>,
    pub viewpoint: Viewpoint,
    pub grid_patches: usize,
    pub background: Background,
    pub output: &'a Path,
}

pub fn cmd_render_metric(req: &RenderRequest<'_>) -> Result<(f64, String)> {
    let scene = Scene::load(req.scene).with_context(|| format!("loading scene {}", req.scene.display()))?;
    let grids = match req.checkpoint {
        Some(path) => {
            let ck = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
            ensure!(
                ck.n_primitives() == scene.len(),
                "checkpoint has {} primitives but the scene has {}",
                ck.n_primitives(),
                scene.len()
            );
            ck.grids
        }
        None => CoverageGrids::new(scene.len(), Arc::new(DirectionGrid::for_patch_count(req.grid_patches))),
    };
    let camera = match &req.viewpoint {
        Viewpoint::Candidate(id) => {
            let n = scene.candidate_cameras.len();
            if *id >= n {
                if n == 0 {
                    bail!("camera id {id} is invalid: the scene has no candidate cameras");
                }
                bail!("camera id {id} is invalid: valid ids are 0..={}", n - 1);
            }
            scene.candidate_cameras[*id].clone()
        }
        Viewpoint::LookAt { position, target } => {
            let intrinsics = scene
                .candidate_cameras
                .first()
                .or(scene.eval_cameras.first())
                .map(|c| c.intrinsics)
                .unwrap_or_else(|| SceneSpec::default().intrinsics());
            look_at_camera(*position, *target, Vector3::z(), intrinsics)
                .or_else(|_| look_at_camera(*position, *target, Vector3::y(), intrinsics))?
        }
    };
    let score = score_coverage(&scene, &grids, &camera, req.background)?;
    write_with_parent(req.output, &score.metric.image.encode_pgm())?;
    Ok((
        score.mean,
        format!(
            "wrote {} ({} masked pixels), mean coverage over mask {:.6}",
            req.output.display(),
            score.metric.mask_count(),
            score.mean
        ),
    ))
}

fn curve_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem == "curve" {
        if let Some(parent) = path.parent().and_then(|p| p.file_name()) {
            return parent.to_string_lossy().into_owned();
        }
    }
    stem
}

pub fn cmd_report(random: &Path, methods: &[PathBuf], csv_out: Option<&Path>) -> Result<(Vec<AucRow>, String)> {
    ensure!(!methods.is_empty(), "at least one method curve is required");
    let base = read_curve_csv(random).with_context(|| format!("reading {}", random.display()))?;
    let rows = methods
        .iter()
        .map(|p| {
            let curve = read_curve_csv(p).with_context(|| format!("reading {}", p.display()))?;
            let auc_delta = cover_core::select::curve_auc_delta(&curve, &base)
                .with_context(|| format!("comparing {} with {}", p.display(), random.display()))?;
            Ok(AucRow {
                name: curve_name(p),
                final_psnr: curve.last().map(|r| r.eval_psnr).unwrap_or(f64::NAN),
                auc_delta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(out) = csv_out {
        write_with_parent(out, table_csv(&rows).as_bytes())?;
    }
    let text = format_table(&rows);
    Ok((rows, text))
}

fn write_with_parent(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
