//! Discretizations of the unit sphere into direction patches.
//!
//! Each patch is represented by a unit center direction; a direction belongs
//! to the patch whose center it is most aligned with. Icosphere grids carry
//! their triangulation so the covering radius can be computed exactly.

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// How a grid was built; enough to rebuild it bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// Subdivided icosahedron, `10 * 4^n + 2` vertices.
    Icosphere { subdivisions: u32 },
    /// Fibonacci spiral with an arbitrary number of points.
    Fibonacci { count: usize },
    /// The six coordinate axes.
    Octahedral,
}

#[derive(Debug, Clone)]
pub struct DirectionGrid {
    kind: GridKind,
    dirs: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    covering_angle: f64,
}

impl PartialEq for DirectionGrid {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl DirectionGrid {
    pub fn new(kind: GridKind) -> Self {
        let (dirs, faces) = match kind {
            GridKind::Icosphere { subdivisions } => icosphere(subdivisions),
            GridKind::Fibonacci { count } => (fibonacci(count), Vec::new()),
            GridKind::Octahedral => octahedron(),
        };
        let covering_angle = if faces.is_empty() {
            sampled_covering_angle(&dirs)
        } else {
            triangulated_covering_angle(&dirs, &faces)
        };
        Self {
            kind,
            dirs,
            faces,
            covering_angle,
        }
    }

    pub fn icosphere(subdivisions: u32) -> Self {
        Self::new(GridKind::Icosphere { subdivisions })
    }

    pub fn fibonacci(count: usize) -> Self {
        Self::new(GridKind::Fibonacci { count })
    }

    pub fn octahedral() -> Self {
        Self::new(GridKind::Octahedral)
    }

    /// Icosphere when `count` is an icosphere vertex count (12, 42, 162,
    /// 642, ...), otherwise a Fibonacci grid of exactly `count` points.
    pub fn for_patch_count(count: usize) -> Self {
        match icosphere_level(count) {
            Some(n) => Self::icosphere(n),
            None if count == 6 => Self::octahedral(),
            None => Self::fibonacci(count),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn directions(&self) -> &[Vector3<f64>] {
        &self.dirs
    }

    pub fn direction(&self, patch: usize) -> &Vector3<f64> {
        &self.dirs[patch]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Largest angle between any unit vector and the center of its patch.
    pub fn covering_angle(&self) -> f64 {
        self.covering_angle
    }

    /// Bound on the coverage error at an aligned direction, `(1 - cos θ) / 2`.
    pub fn quantization_bound(&self) -> f64 {
        0.5 * (1.0 - self.covering_angle.cos())
    }

    /// Patch whose center is most aligned with `d`; lowest index on ties.
    pub fn quantize(&self, d: &Vector3<f64>) -> usize {
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, p) in self.dirs.iter().enumerate() {
            let dot = p.dot(d);
            if dot > best_dot {
                best_dot = dot;
                best = i;
            }
        }
        best
    }
}

fn icosphere_level(count: usize) -> Option<u32> {
    let mut n = 0u32;
    loop {
        let v = 10usize.checked_mul(4usize.checked_pow(n)?)? + 2;
        if v == count {
            return Some(n);
        }
        if v > count {
            return None;
        }
        n += 1;
    }
}

fn icosphere(subdivisions: u32) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

fn fibonacci(count: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

fn octahedron() -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let dirs = vec![
        Vector3::x(),
        -Vector3::x(),
        Vector3::y(),
        -Vector3::y(),
        Vector3::z(),
        -Vector3::z(),
    ];
    let mut faces = Vec::new();
    for &x in &[0, 1] {
        for &y in &[2, 3] {
            for &z in &[4, 5] {
                faces.push([x, y, z]);
            }
        }
    }
    (dirs, faces)
}

/// For a triangulation whose faces are Delaunay, the farthest point from
/// every patch center is a face circumcenter.
fn triangulated_covering_angle(dirs: &[Vector3<f64>], faces: &[[usize; 3]]) -> f64 {
    faces
        .iter()
        .map(|&[a, b, c]| {
            let (pa, pb, pc) = (dirs[a], dirs[b], dirs[c]);
            let mut n = (pb - pa).cross(&(pc - pa)).normalize();
            if n.dot(&(pa + pb + pc)) < 0.0 {
                n = -n;
            }
            n.dot(&pa).clamp(-1.0, 1.0).acos()
        })
        .fold(0.0, f64::max)
}

fn sampled_covering_angle(dirs: &[Vector3<f64>]) -> f64 {
    if dirs.is_empty() {
        return std::f64::consts::PI;
    }
    let probes = fibonacci(20_000);
    let worst = probes
        .iter()
        .map(|d| dirs.iter().map(|p| p.dot(d)).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    // Probe spacing is ~0.025 rad; pad by that so the value stays an upper bound.
    (worst.clamp(-1.0, 1.0).acos() + 0.025).min(std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn icosphere_counts() {
        for (n, l) in [(0, 12), (1, 42), (2, 162), (3, 642)] {
            let g = DirectionGrid::icosphere(n);
            assert_eq!(g.len(), l);
            assert_eq!(g.faces().len(), 20 * 4usize.pow(n));
            assert!(g.directions().iter().all(|d| (d.norm() - 1.0).abs() < 1e-12));
        }
        assert_eq!(DirectionGrid::for_patch_count(162).kind(), GridKind::Icosphere { subdivisions: 2 });
        assert_eq!(DirectionGrid::for_patch_count(256).len(), 256);
    }

    #[test]
    fn self_quantization() {
        let g = DirectionGrid::icosphere(2);
        for (k, d) in g.directions().iter().enumerate() {
            assert_eq!(g.quantize(d), k);
        }
    }

    #[test]
    fn octahedral_pole() {
        let g = DirectionGrid::octahedral();
        assert_eq!(g.quantize(&Vector3::z()), 4);
        assert_relative_eq!(g.covering_angle(), (1.0 / 3f64.sqrt()).acos(), epsilon = 1e-12);
    }

    #[test]
    fn antipodal_directions_map_to_antipodal_patches() {
        let g = DirectionGrid::icosphere(2);
        let probes = fibonacci(300);
        for d in &probes {
            let a = g.quantize(d);
            let b = g.quantize(&-d);
            assert_relative_eq!(g.direction(a), &-g.direction(b), epsilon = 1e-12);
        }
    }

    #[test]
    fn covering_angle_bounds_every_probe() {
        for g in [DirectionGrid::icosphere(1), DirectionGrid::icosphere(2), DirectionGrid::fibonacci(100)] {
            let theta = g.covering_angle();
            for d in fibonacci(5000) {
                let p = g.direction(g.quantize(&d));
                assert!(p.dot(&d).clamp(-1.0, 1.0).acos() <= theta + 1e-12);
            }
        }
    }
}
