//! Binary snapshot of a [`SelectionState`].
//!
//! Little-endian throughout. The colour normal equations are not stored;
//! they are replayed from the training views when a state is restored.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::fisher::GramMatrix;
use crate::metrics::{CoverageGrids, TransAccumulator, ViewAccumulator, VisStats};
use crate::scene::{Camera, Intrinsics};
use crate::select::{CurveRow, Method, NormalEquations, SelectionState, TrainingView, Workbench};
use crate::sphere::{DirectionGrid, GridKind};

const MAGIC: &[u8; 8] = b"COVRCKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Decoded checkpoint contents, independent of any scene.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub method: Method,
    pub rng_seed: u64,
    pub rng_word_pos: u128,
    pub grids: CoverageGrids,
    pub trans: TransAccumulator,
    pub view: ViewAccumulator,
    pub gram: GramMatrix,
    pub training: Vec<TrainingView>,
    pub refined_cameras: Vec<Camera>,
    pub pool: Vec<usize>,
    pub step_log: Vec<CurveRow>,
}

impl Checkpoint {
    pub fn from_state(state: &SelectionState) -> Self {
        Self {
            method: state.method,
            rng_seed: state.rng_seed,
            rng_word_pos: state.rng_word_pos(),
            grids: state.grids.clone(),
            trans: state.trans.clone(),
            view: state.view.clone(),
            gram: state.gram.clone(),
            training: state.training.clone(),
            refined_cameras: state.refined.iter().map(|v| v.camera.clone()).collect(),
            pool: state.pool.iter().copied().collect(),
            step_log: state.step_log.clone(),
        }
    }

    pub fn n_primitives(&self) -> usize {
        self.grids.n_primitives()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(FORMAT_VERSION)?;
        w.write_u8(self.method.code())?;
        w.write_u64::<LE>(self.rng_seed)?;
        w.write_u128::<LE>(self.rng_word_pos)?;

        let p = self.grids.n_primitives();
        w.write_u64::<LE>(p as u64)?;
        write_grid_kind(w, self.grids.grid().kind())?;
        for &s in self.grids.seen() {
            w.write_u8(s as u8)?;
        }
        for v in self.grids.vis_stats() {
            w.write_u64::<LE>(v.cameras)?;
            w.write_f64::<LE>(v.pixel_sum)?;
            w.write_f64::<LE>(v.pixel_sq_sum)?;
        }
        write_f64s(w, &self.trans.col_sq_norms)?;
        w.write_u64::<LE>(self.view.n_patches() as u64)?;
        write_f64s(w, &self.view.patch_sq_norms)?;
        write_f64s(w, self.gram.matrix().as_slice())?;

        w.write_u64::<LE>(self.refined_cameras.len() as u64)?;
        for c in &self.refined_cameras {
            write_camera(w, c)?;
        }
        w.write_u64::<LE>(self.training.len() as u64)?;
        for t in &self.training {
            let (tag, i) = match *t {
                TrainingView::Seed(i) => (0u8, i),
                TrainingView::Candidate(i) => (1, i),
                TrainingView::Refined(i) => (2, i),
            };
            w.write_u8(tag)?;
            w.write_u64::<LE>(i as u64)?;
        }
        w.write_u64::<LE>(self.pool.len() as u64)?;
        for &id in &self.pool {
            w.write_u64::<LE>(id as u64)?;
        }
        w.write_u64::<LE>(self.step_log.len() as u64)?;
        for r in &self.step_log {
            w.write_u64::<LE>(r.round as u64)?;
            w.write_i64::<LE>(r.camera_id.map_or(-1, |c| c as i64))?;
            w.write_u8(r.score.is_some() as u8)?;
            w.write_f64::<LE>(r.score.unwrap_or(0.0))?;
            w.write_f64::<LE>(r.eval_mse)?;
            w.write_f64::<LE>(r.eval_psnr)?;
        }
        Ok(())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let ck = Self::read_from(&mut r).map_err(|e| match e {
            Error::Io(io) => Error::Checkpoint(format!("truncated checkpoint: {io}")),
            other => other,
        })?;
        if !r.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
        }
        Ok(ck)
    }

    fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = r.read_u32::<LE>()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let code = r.read_u8()?;
        let method = Method::from_code(code).ok_or_else(|| Error::Checkpoint(format!("unknown method code {code}")))?;
        let rng_seed = r.read_u64::<LE>()?;
        let rng_word_pos = r.read_u128::<LE>()?;

        let p = read_len(r)?;
        let grid = Arc::new(DirectionGrid::new(read_grid_kind(r)?));
        let l = grid.len();
        let seen = (0..p * l).map(|_| Ok(r.read_u8()? != 0)).collect::<Result<Vec<_>>>()?;
        let vis = (0..p)
            .map(|_| {
                Ok(VisStats {
                    cameras: r.read_u64::<LE>()?,
                    pixel_sum: r.read_f64::<LE>()?,
                    pixel_sq_sum: r.read_f64::<LE>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let grids = CoverageGrids::from_parts(grid, seen, vis)?;
        let trans = TransAccumulator {
            col_sq_norms: read_f64s(r, p)?,
        };
        let n_patches = read_len(r)?;
        let view = ViewAccumulator::from_parts(n_patches, read_f64s(r, p * n_patches)?)?;
        if view.n_primitives() != p {
            return Err(Error::Checkpoint("view accumulator size does not match primitive count".into()));
        }
        let gram = GramMatrix::new(DMatrix::from_vec(p, p, read_f64s(r, p * p)?))?;

        let n_refined = read_len(r)?;
        let refined_cameras = (0..n_refined).map(|_| read_camera(r)).collect::<Result<Vec<_>>>()?;
        let n_training = read_len(r)?;
        let training = (0..n_training)
            .map(|_| {
                let tag = r.read_u8()?;
                let i = read_len(r)?;
                match tag {
                    0 => Ok(TrainingView::Seed(i)),
                    1 => Ok(TrainingView::Candidate(i)),
                    2 if i < n_refined => Ok(TrainingView::Refined(i)),
                    _ => Err(Error::Checkpoint(format!("bad training entry ({tag}, {i})"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let n_pool = read_len(r)?;
        let pool = (0..n_pool).map(|_| read_len(r)).collect::<Result<Vec<_>>>()?;
        let n_log = read_len(r)?;
        let step_log = (0..n_log)
            .map(|_| {
                let round = read_len(r)?;
                let id = r.read_i64::<LE>()?;
                let has_score = r.read_u8()? != 0;
                let score = r.read_f64::<LE>()?;
                Ok(CurveRow {
                    round,
                    camera_id: usize::try_from(id).ok(),
                    score: has_score.then_some(score),
                    eval_mse: r.read_f64::<LE>()?,
                    eval_psnr: r.read_f64::<LE>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            method,
            rng_seed,
            rng_word_pos,
            grids,
            trans,
            view,
            gram,
            training,
            refined_cameras,
            pool,
            step_log,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }

    /// Rebuilds a live selection state on `bench`, replaying the colour
    /// normal equations from the training views.
    pub fn restore(self, bench: &Workbench<'_>) -> Result<SelectionState> {
        let p = bench.scene().len();
        if self.n_primitives() != p {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} primitives but the scene has {p}",
                self.n_primitives()
            )));
        }
        if self.grids.grid().kind() != bench.grid().kind() {
            return Err(Error::Checkpoint("checkpoint direction grid differs from the configured grid".into()));
        }
        let n_cand = bench.candidates().len();
        let n_seed = bench.seeds().len();
        for t in &self.training {
            let ok = match *t {
                TrainingView::Seed(i) => i < n_seed,
                TrainingView::Candidate(i) => i < n_cand,
                TrainingView::Refined(_) => true,
            };
            if !ok {
                return Err(Error::Checkpoint(format!("training view {t:?} is not in the scene")));
            }
        }
        if let Some(&id) = self.pool.iter().find(|&&id| id >= n_cand) {
            return Err(Error::Checkpoint(format!("pool camera {id} is not in the scene")));
        }
        let refined: Vec<_> = self
            .refined_cameras
            .iter()
            .enumerate()
            .map(|(i, c)| bench.refined_view(c, i))
            .collect();
        let mut normal = NormalEquations::new(p);
        for t in &self.training {
            let v = match *t {
                TrainingView::Seed(i) => &bench.seeds()[i],
                TrainingView::Candidate(i) => bench.candidate(i),
                TrainingView::Refined(i) => &refined[i],
            };
            normal.add_view(&v.rows, &v.observed);
        }
        let mut state = SelectionState::from_parts(
            self.method,
            self.training,
            self.pool.into_iter().collect(),
            self.grids,
            self.trans,
            self.view,
            self.gram,
            normal,
            refined,
            self.rng_seed,
            self.step_log,
        );
        state.set_rng_word_pos(self.rng_word_pos);
        Ok(state)
    }
}

fn read_len(r: &mut impl Read) -> Result<usize> {
    let v = r.read_u64::<LE>()?;
    usize::try_from(v).map_err(|_| Error::Checkpoint(format!("length {v} does not fit in memory")))
}

fn write_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_f64::<LE>(v)?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| Ok(r.read_f64::<LE>()?)).collect()
}

fn write_grid_kind(w: &mut impl Write, kind: GridKind) -> Result<()> {
    let (tag, param) = match kind {
        GridKind::Icosphere { subdivisions } => (0u8, subdivisions as u64),
        GridKind::Fibonacci { count } => (1, count as u64),
        GridKind::Octahedral => (2, 0),
    };
    w.write_u8(tag)?;
    w.write_u64::<LE>(param)?;
    Ok(())
}

fn read_grid_kind(r: &mut impl Read) -> Result<GridKind> {
    let tag = r.read_u8()?;
    let param = r.read_u64::<LE>()?;
    match tag {
        0 if param <= 6 => Ok(GridKind::Icosphere {
            subdivisions: param as u32,
        }),
        1 if (1..=1 << 20).contains(&param) => Ok(GridKind::Fibonacci { count: param as usize }),
        2 => Ok(GridKind::Octahedral),
        _ => Err(Error::Checkpoint(format!("bad grid kind ({tag}, {param})"))),
    }
}

fn write_camera(w: &mut impl Write, c: &Camera) -> Result<()> {
    let k = &c.intrinsics;
    write_f64s(w, &[k.fx, k.fy, k.cx, k.cy])?;
    w.write_u32::<LE>(k.width)?;
    w.write_u32::<LE>(k.height)?;
    let q = c.rotation.quaternion();
    write_f64s(w, &[q.w, q.i, q.j, q.k])?;
    write_f64s(w, c.position.as_slice())
}

fn read_camera(r: &mut impl Read) -> Result<Camera> {
    let k = read_f64s(r, 4)?;
    let intrinsics = Intrinsics {
        fx: k[0],
        fy: k[1],
        cx: k[2],
        cy: k[3],
        width: r.read_u32::<LE>()?,
        height: r.read_u32::<LE>()?,
    };
    let q = read_f64s(r, 4)?;
    let p = read_f64s(r, 3)?;
    let camera = Camera {
        intrinsics,
        rotation: UnitQuaternion::new_unchecked(Quaternion::new(q[0], q[1], q[2], q[3])),
        position: Vector3::new(p[0], p[1], p[2]),
    };
    camera.validate()?;
    Ok(camera)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene, SceneSpec};
    use crate::select::SelectConfig;

    fn small_spec() -> SceneSpec {
        SceneSpec {
            n_primitives: 12,
            n_candidates: 8,
            n_eval: 2,
            n_seed: 2,
            rng_seed: 3,
            ..SceneSpec::default()
        }
    }

    fn small_config() -> SelectConfig {
        SelectConfig {
            grid_patches: 42,
            ..SelectConfig::default()
        }
    }

    #[test]
    fn round_trip_preserves_state_and_rng() {
        let scene = generate_scene(&small_spec()).unwrap();
        let bench = Workbench::new(&scene, small_config()).unwrap();
        let mut state = SelectionState::new(&bench, Method::Random, 2, 9).unwrap();
        crate::select::select_next(&mut state, &bench).unwrap();
        let cam = bench.candidate(0).camera.clone();
        state.absorb_refined(&bench, &cam.perturbed(&Vector3::new(0.01, 0.0, 0.0), &Vector3::zeros())).unwrap();

        let bytes = Checkpoint::from_state(&state).encode();
        let mut restored = Checkpoint::decode(&bytes).unwrap().restore(&bench).unwrap();
        assert_eq!(Checkpoint::from_state(&restored).encode(), bytes);
        assert_eq!(restored.normal, state.normal);

        let a = crate::select::select_next(&mut state, &bench).unwrap();
        let b = crate::select::select_next(&mut restored, &bench).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_garbage_and_mismatch() {
        assert!(matches!(Checkpoint::decode(b"nonsense"), Err(Error::Checkpoint(_))));
        let scene = generate_scene(&small_spec()).unwrap();
        let bench = Workbench::new(&scene, small_config()).unwrap();
        let state = SelectionState::new(&bench, Method::Cover, 1, 0).unwrap();
        let bytes = Checkpoint::from_state(&state).encode();
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 1]).is_err());

        let other = generate_scene(&SceneSpec {
            n_primitives: 13,
            ..small_spec()
        })
        .unwrap();
        let other_bench = Workbench::new(&other, small_config()).unwrap();
        assert!(Checkpoint::decode(&bytes).unwrap().restore(&other_bench).is_err());
    }
}
