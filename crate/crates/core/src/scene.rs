//! Gaussian primitives, pinhole cameras and synthetic scenes.
//!
//! Camera frames follow the usual computer-vision convention: `+x` right,
//! `+y` down, `+z` forward. The stored rotation maps camera-frame vectors
//! into the world frame.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the quaternion norm accepted when reading cameras.
const QUAT_INPUT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub opacity: f64,
    pub matte_color: Vector3<f64>,
    /// Per-patch radiance field (`L` rows of RGB) for view-dependent scenes.
    pub patch_radiances: Option<Vec<[f64; 3]>>,
}

impl Primitive {
    pub fn matte(mean: Vector3<f64>, covariance: Matrix3<f64>, opacity: f64, color: Vector3<f64>) -> Self {
        Self {
            mean,
            covariance,
            opacity,
            matte_color: color,
            patch_radiances: None,
        }
    }

    /// Isotropic primitive with standard deviation `sigma`.
    pub fn isotropic(mean: Vector3<f64>, sigma: f64, opacity: f64, color: Vector3<f64>) -> Self {
        Self::matte(mean, Matrix3::identity() * (sigma * sigma), opacity, color)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.covariance;
        let scale = c.abs().max().max(1e-300);
        if (c - c.transpose()).abs().max() > 1e-10 * scale {
            return Err(Error::InvalidSpec("covariance is not symmetric".into()));
        }
        let eig = c.symmetric_eigenvalues();
        if eig.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidSpec("covariance is not positive definite".into()));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::InvalidSpec(format!("opacity {} outside [0,1]", self.opacity)));
        }
        if self.matte_color.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidSpec("matte color outside [0,1]".into()));
        }
        if let Some(patches) = &self.patch_radiances {
            if patches.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidSpec("patch radiance outside [0,1]".into()));
            }
        }
        Ok(())
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Square-pixel intrinsics with the given vertical field of view.
    pub fn from_fov(width: u32, height: u32, fov_y_deg: f64) -> Self {
        let f = 0.5 * height as f64 / (0.5 * fov_y_deg.to_radians()).tan();
        Self {
            fx: f,
            fy: f,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidSpec("focal lengths must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec("image size must be positive".into()));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64 && self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidSpec("principal point outside the image".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    /// world <- camera
    pub rotation: UnitQuaternion<f64>,
    pub position: Vector3<f64>,
}

impl Camera {
    pub fn width(&self) -> usize {
        self.intrinsics.width as usize
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height as usize
    }

    pub fn pixel_count(&self) -> usize {
        self.width() * self.height()
    }

    /// Forward (`+z`) axis in world coordinates.
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation * Vector3::z()
    }

    /// Unit world-space direction through the center of pixel `(u, v)`.
    pub fn ray_direction(&self, u: usize, v: usize) -> Vector3<f64> {
        let k = &self.intrinsics;
        let x = (u as f64 + 0.5 - k.cx) / k.fx;
        let y = (v as f64 + 0.5 - k.cy) / k.fy;
        (self.rotation * Vector3::new(x, y, 1.0)).normalize()
    }

    /// Ray direction for a row-major pixel index.
    pub fn pixel_ray(&self, pixel: usize) -> Vector3<f64> {
        let w = self.width();
        self.ray_direction(pixel % w, pixel / w)
    }

    /// Projects a world point; returns `(u, v, depth)` for points in front
    /// of the camera.
    pub fn project(&self, point: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let p = self.rotation.inverse() * (point - self.position);
        if p.z <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        Some((k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy, p.z))
    }

    /// Whether `point` projects inside the image rectangle.
    pub fn in_frustum(&self, point: &Vector3<f64>) -> bool {
        match self.project(point) {
            Some((u, v, _)) => {
                u >= 0.0 && v >= 0.0 && u < self.intrinsics.width as f64 && v < self.intrinsics.height as f64
            }
            None => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if (self.rotation.as_ref().norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec("camera rotation is not a unit quaternion".into()));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidSpec("camera position is not finite".into()));
        }
        Ok(())
    }

    /// Same camera displaced by `delta_position` and rotated by the
    /// camera-frame axis-angle vector `delta_rotation`.
    pub fn perturbed(&self, delta_position: &Vector3<f64>, delta_rotation: &Vector3<f64>) -> Camera {
        let mut rotation = self.rotation * UnitQuaternion::from_scaled_axis(*delta_rotation);
        rotation.renormalize();
        Camera {
            intrinsics: self.intrinsics,
            rotation,
            position: self.position + delta_position,
        }
    }
}

/// Builds a camera at `position` whose forward axis points at `target`.
pub fn look_at_camera(
    position: Vector3<f64>,
    target: Vector3<f64>,
    up: Vector3<f64>,
    intrinsics: Intrinsics,
) -> Result<Camera> {
    let offset = target - position;
    let dist = offset.norm();
    if !(dist > 1e-12) {
        return Err(Error::DegenerateFrame("position coincides with target".into()));
    }
    let forward = offset / dist;
    let right = forward.cross(&up);
    let rn = right.norm();
    if !(rn > 1e-9 * up.norm().max(1e-300)) || up.norm() == 0.0 {
        return Err(Error::DegenerateFrame("up vector is parallel to the viewing direction".into()));
    }
    let right = right / rn;
    let down = forward.cross(&right);
    let basis = Matrix3::from_columns(&[right, down, forward]);
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(basis));
    Ok(Camera {
        intrinsics,
        rotation,
        position,
    })
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn centroid(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| 0.5 * (self.min[i] + self.max[i]))
    }

    pub fn extent(&self) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.max[i] - self.min[i])
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.extent().norm()
    }
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self {
            min: [-1.0; 3],
            max: [1.0; 3],
        }
    }
}

/// Parameters of a synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub n_primitives: usize,
    pub bounding_box: BoundingBox,
    pub n_candidates: usize,
    pub n_eval: usize,
    pub n_seed: usize,
    pub rng_seed: u64,
    pub view_dependent: bool,
    /// Patch count of the radiance field for view-dependent scenes.
    pub patch_count: usize,
    /// Range of per-axis standard deviations, sampled log-uniformly.
    pub scale_range: [f64; 2],
    pub opacity_range: [f64; 2],
    /// Camera distance from the box centroid, in half-diagonals.
    pub shell_radius: [f64; 2],
    pub image_width: u32,
    pub image_height: u32,
    pub fov_y_deg: f64,
    /// Seed cameras lie within this angle of a random axis; 180 spreads
    /// them over the whole shell.
    pub seed_cap_deg: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            n_primitives: 200,
            bounding_box: BoundingBox::default(),
            n_candidates: 100,
            n_eval: 20,
            n_seed: 10,
            rng_seed: 0,
            view_dependent: false,
            patch_count: 162,
            scale_range: [0.05, 0.15],
            opacity_range: [0.5, 1.0],
            shell_radius: [1.8, 2.4],
            image_width: 32,
            image_height: 32,
            fov_y_deg: 60.0,
            seed_cap_deg: 45.0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_primitives == 0 {
            return Err(Error::InvalidSpec("at least one primitive is required".into()));
        }
        let ext = self.bounding_box.extent();
        if ext.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidSpec("bounding box has zero extent".into()));
        }
        let [lo, hi] = self.scale_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidSpec("scale range must satisfy 0 < lo <= hi".into()));
        }
        let [olo, ohi] = self.opacity_range;
        if !(0.0..=1.0).contains(&olo) || !(olo..=1.0).contains(&ohi) {
            return Err(Error::InvalidSpec("opacity range must lie in [0,1]".into()));
        }
        let [rlo, rhi] = self.shell_radius;
        if !(rlo > 0.0 && rhi >= rlo) {
            return Err(Error::InvalidSpec("shell radius must satisfy 0 < lo <= hi".into()));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidSpec("image size must be positive".into()));
        }
        if !(self.fov_y_deg > 0.0 && self.fov_y_deg < 180.0) {
            return Err(Error::InvalidSpec("field of view must be in (0, 180)".into()));
        }
        if !(self.seed_cap_deg > 0.0 && self.seed_cap_deg <= 180.0) {
            return Err(Error::InvalidSpec("seed cap angle must be in (0, 180]".into()));
        }
        if self.view_dependent && self.patch_count < 2 {
            return Err(Error::InvalidSpec("view-dependent scenes need at least 2 patches".into()));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics::from_fov(self.image_width, self.image_height, self.fov_y_deg)
    }
}

/// Ground-truth scene and its fixed camera sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    pub eval_cameras: Vec<Camera>,
    pub candidate_cameras: Vec<Camera>,
    pub seed_cameras: Vec<Camera>,
}

impl Scene {
    pub fn new(
        primitives: Vec<Primitive>,
        eval_cameras: Vec<Camera>,
        candidate_cameras: Vec<Camera>,
        seed_cameras: Vec<Camera>,
    ) -> Result<Self> {
        let scene = Self {
            primitives,
            eval_cameras,
            candidate_cameras,
            seed_cameras,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Scene with primitives only.
    pub fn from_primitives(primitives: Vec<Primitive>) -> Result<Self> {
        Self::new(primitives, Vec::new(), Vec::new(), Vec::new())
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn means(&self) -> Vec<Vector3<f64>> {
        self.primitives.iter().map(|p| p.mean).collect()
    }

    /// Patch count of the view-dependent radiance field, if any primitive has one.
    pub fn patch_count(&self) -> Option<usize> {
        self.primitives
            .iter()
            .find_map(|p| p.patch_radiances.as_ref().map(|r| r.len()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::InvalidSpec("scene needs at least one primitive".into()));
        }
        for p in &self.primitives {
            p.validate()?;
        }
        let patch_len = self.patch_count();
        if let Some(l) = patch_len {
            if self
                .primitives
                .iter()
                .any(|p| p.patch_radiances.as_ref().is_none_or(|r| r.len() != l))
            {
                return Err(Error::InvalidSpec("inconsistent patch radiance counts".into()));
            }
        }
        let all: Vec<&Camera> = self
            .eval_cameras
            .iter()
            .chain(&self.candidate_cameras)
            .chain(&self.seed_cameras)
            .collect();
        for c in &all {
            c.validate()?;
        }
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                if a == b {
                    return Err(Error::InvalidSpec("camera sets are not disjoint".into()));
                }
            }
        }
        Ok(())
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    // Shoemake's uniform quaternion.
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = Quaternion::new(b * (tau * u3).cos(), a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin());
    UnitQuaternion::from_quaternion(q)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Samples a scene from `spec`. The result depends only on `spec`.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let bb = &spec.bounding_box;
    let grid = if spec.view_dependent {
        Some(crate::sphere::DirectionGrid::for_patch_count(spec.patch_count))
    } else {
        None
    };

    let mut primitives = Vec::with_capacity(spec.n_primitives);
    for _ in 0..spec.n_primitives {
        let mean = Vector3::from_fn(|i, _| rng.gen_range(bb.min[i]..=bb.max[i]));
        let rot = random_rotation(&mut rng).to_rotation_matrix();
        let s = Vector3::from_fn(|_, _| log_uniform(&mut rng, spec.scale_range[0], spec.scale_range[1]));
        let d = Matrix3::from_diagonal(&s.component_mul(&s));
        let cov = rot.matrix() * d * rot.matrix().transpose();
        let covariance = 0.5 * (cov + cov.transpose());
        let opacity = rng.gen_range(spec.opacity_range[0]..=spec.opacity_range[1]);
        let color = Vector3::from_fn(|_, _| rng.gen::<f64>());
        let patch_radiances = grid.as_ref().map(|g| smooth_radiance_field(&mut rng, g, &color));
        primitives.push(Primitive {
            mean,
            covariance,
            opacity,
            matte_color: color,
            patch_radiances,
        });
    }

    let intrinsics = spec.intrinsics();
    let center = bb.centroid();
    let hd = bb.half_diagonal();
    let total = spec.n_candidates + spec.n_eval + spec.n_seed;
    let n_free = spec.n_candidates + spec.n_eval;
    let mut cameras: Vec<Camera> = Vec::with_capacity(total);
    let mut seed_axis = None;
    while cameras.len() < total {
        let dir = if cameras.len() < n_free || spec.seed_cap_deg >= 180.0 {
            random_unit(&mut rng)
        } else {
            let axis = *seed_axis.get_or_insert_with(|| random_unit(&mut rng));
            random_in_cap(&mut rng, &axis, spec.seed_cap_deg.to_radians())
        };
        let radius = hd * rng.gen_range(spec.shell_radius[0]..=spec.shell_radius[1]);
        let position = center + dir * radius;
        let up = if dir.z.abs() > 0.95 { Vector3::y() } else { Vector3::z() };
        let cam = look_at_camera(position, center, up, intrinsics)?;
        if cameras.iter().any(|c| c.position == cam.position) {
            continue;
        }
        cameras.push(cam);
    }
    let seed_cameras = cameras.split_off(spec.n_candidates + spec.n_eval);
    let eval_cameras = cameras.split_off(spec.n_candidates);
    Scene::new(primitives, eval_cameras, cameras, seed_cameras)
}

/// Uniform direction within `angle` of the unit `axis`.
fn random_in_cap(rng: &mut ChaCha8Rng, axis: &Vector3<f64>, angle: f64) -> Vector3<f64> {
    let z = rng.gen_range(angle.cos()..=1.0);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    let local = Vector3::new(r * phi.cos(), r * phi.sin(), z);
    let rot = UnitQuaternion::rotation_between(&Vector3::z(), axis)
        .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));
    rot * local
}

/// Per-patch radiance: the matte color plus a smooth linear variation over
/// the sphere, clamped to `[0, 1]`.
fn smooth_radiance_field(
    rng: &mut ChaCha8Rng,
    grid: &crate::sphere::DirectionGrid,
    base: &Vector3<f64>,
) -> Vec<[f64; 3]> {
    let amplitude = 0.3;
    let axes: Vec<Vector3<f64>> = (0..3).map(|_| random_unit(rng)).collect();
    grid.directions()
        .iter()
        .map(|d| {
            let mut c = [0.0; 3];
            for (k, ax) in axes.iter().enumerate() {
                c[k] = (base[k] + amplitude * ax.dot(d)).clamp(0.0, 1.0);
            }
            c
        })
        .collect()
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveJson {
    mean: [f64; 3],
    /// Upper triangle: xx, xy, xz, yy, yz, zz.
    cov: [f64; 6],
    opacity: f64,
    color: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    patches: Option<Vec<[f64; 3]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraJson {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    w: u32,
    h: u32,
    /// (w, x, y, z)
    quat: [f64; 4],
    pos: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneJson {
    primitives: Vec<PrimitiveJson>,
    eval_cameras: Vec<CameraJson>,
    candidate_cameras: Vec<CameraJson>,
    seed_cameras: Vec<CameraJson>,
}

impl From<&Primitive> for PrimitiveJson {
    fn from(p: &Primitive) -> Self {
        let c = &p.covariance;
        Self {
            mean: p.mean.into(),
            cov: [c[(0, 0)], c[(0, 1)], c[(0, 2)], c[(1, 1)], c[(1, 2)], c[(2, 2)]],
            opacity: p.opacity,
            color: p.matte_color.into(),
            patches: p.patch_radiances.clone(),
        }
    }
}

impl From<PrimitiveJson> for Primitive {
    fn from(p: PrimitiveJson) -> Self {
        let [xx, xy, xz, yy, yz, zz] = p.cov;
        Self {
            mean: p.mean.into(),
            covariance: Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz),
            opacity: p.opacity,
            matte_color: p.color.into(),
            patch_radiances: p.patches,
        }
    }
}

impl From<&Camera> for CameraJson {
    fn from(c: &Camera) -> Self {
        let q = c.rotation.quaternion();
        let k = &c.intrinsics;
        Self {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            w: k.width,
            h: k.height,
            quat: [q.w, q.i, q.j, q.k],
            pos: c.position.into(),
        }
    }
}

impl TryFrom<CameraJson> for Camera {
    type Error = Error;

    fn try_from(c: CameraJson) -> Result<Self> {
        let [w, x, y, z] = c.quat;
        let q = Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > QUAT_INPUT_TOL {
            return Err(Error::InvalidSpec(format!("quaternion norm {} is not 1", q.norm())));
        }
        let cam = Camera {
            intrinsics: Intrinsics {
                fx: c.fx,
                fy: c.fy,
                cx: c.cx,
                cy: c.cy,
                width: c.w,
                height: c.h,
            },
            // Already-unit input is kept bit-exact so files round-trip.
            rotation: if (q.norm() - 1.0).abs() <= 1e-12 {
                UnitQuaternion::new_unchecked(q)
            } else {
                UnitQuaternion::from_quaternion(q)
            },
            position: c.pos.into(),
        };
        cam.validate()?;
        Ok(cam)
    }
}

impl Camera {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(CameraJson::from(self)).expect("camera serializes")
    }
}

impl Scene {
    pub fn to_json(&self) -> Result<String> {
        let doc = SceneJson {
            primitives: self.primitives.iter().map(PrimitiveJson::from).collect(),
            eval_cameras: self.eval_cameras.iter().map(CameraJson::from).collect(),
            candidate_cameras: self.candidate_cameras.iter().map(CameraJson::from).collect(),
            seed_cameras: self.seed_cameras.iter().map(CameraJson::from).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SceneJson = serde_json::from_str(text)?;
        let cams = |v: Vec<CameraJson>| v.into_iter().map(Camera::try_from).collect::<Result<Vec<_>>>();
        Scene::new(
            doc.primitives.into_iter().map(Primitive::from).collect(),
            cams(doc.eval_cameras)?,
            cams(doc.candidate_cameras)?,
            cams(doc.seed_cameras)?,
        )
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
