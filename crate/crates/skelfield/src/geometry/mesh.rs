use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum squared area for a triangle to count as non-degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Deterministic sub-cell offsets applied to ray origins so axis-aligned
/// geometry never produces exact edge or vertex hits.
pub(crate) const RAY_JITTER: [f64; 3] = [1.236_548_9e-7, 2.398_761_3e-7, 3.112_209_7e-7];

/// Triangle surface in normalized model space.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

/// Uniform scale followed by translation: `p' = scale * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: Point3<f64>) -> Point3<f64> {
        Point3::from(p.coords * self.scale + self.translation)
    }

    pub fn inverse(&self) -> Self {
        SimilarityTransform {
            scale: 1.0 / self.scale,
            translation: -self.translation / self.scale,
        }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.scale - 1.0).abs() <= tol && self.translation.norm() <= tol
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn longest_side(&self) -> f64 {
        let e = self.extents();
        e.x.max(e.y).max(e.z)
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

impl Mesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Mesh {
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() || self.triangles.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        for (i, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= self.vertices.len() {
                    return Err(Error::Validation(format!(
                        "triangle {i} references vertex {v} out of {}",
                        self.vertices.len()
                    )));
                }
            }
            if self.triangle_area(i) * self.triangle_area(i) <= MIN_TRIANGLE_AREA {
                return Err(Error::Validation(format!("triangle {i} is degenerate")));
            }
        }
        Ok(())
    }

    pub fn triangle_points(&self, i: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle_points(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn triangle_normal(&self, i: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_points(i);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vector3::zeros()
        }
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn bounding_box(&self) -> Result<Aabb> {
        if self.vertices.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices {
            for a in 0..3 {
                min[a] = min[a].min(v[a]);
                max[a] = max[a].max(v[a]);
            }
        }
        Ok(Aabb { min, max })
    }

    /// Applies a similarity transform to every vertex.
    pub fn transformed(&self, t: &SimilarityTransform) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|v| t.apply(*v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Counts crossings of an axis-aligned ray from `origin` in `+axis`
    /// direction against all triangles. Strict-interior hits only; edge
    /// grazes are resolved by the caller's jittered origins.
    fn ray_crossings(&self, origin: Point3<f64>, axis: usize) -> usize {
        let (u, v) = other_axes(axis);
        let mut crossings = 0;
        for tri in &self.triangles {
            let pa = self.vertices[tri[0]];
            let pb = self.vertices[tri[1]];
            let pc = self.vertices[tri[2]];
            if let Some(t) = axis_ray_hit(origin, axis, u, v, &pa, &pb, &pc) {
                if t > 0.0 {
                    crossings += 1;
                }
            }
        }
        crossings
    }

    /// Parity vote along one axis: odd number of crossings means inside.
    pub fn parity_vote(&self, p: Point3<f64>, axis: usize) -> bool {
        let mut origin = p;
        for a in 0..3 {
            if a != axis {
                origin[a] += RAY_JITTER[a];
            }
        }
        self.ray_crossings(origin, axis) % 2 == 1
    }

    /// Inside test by majority over the three axis-aligned parity rays.
    pub fn contains(&self, p: Point3<f64>) -> bool {
        let votes = (0..3).filter(|&a| self.parity_vote(p, a)).count();
        votes >= 2
    }

    /// True when the three parity rays disagree at `p`.
    pub fn parity_disagrees(&self, p: Point3<f64>) -> bool {
        let votes = (0..3).filter(|&a| self.parity_vote(p, a)).count();
        votes == 1 || votes == 2
    }
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    }
}

/// Intersection parameter of the ray `origin + t * e_axis` with a triangle,
/// using 2D edge functions in the plane perpendicular to the axis. Returns
/// `None` for misses and for triangles parallel to the ray.
fn axis_ray_hit(
    origin: Point3<f64>,
    axis: usize,
    u: usize,
    v: usize,
    pa: &Point3<f64>,
    pb: &Point3<f64>,
    pc: &Point3<f64>,
) -> Option<f64> {
    let (pu, pv) = (origin[u], origin[v]);
    let e0 = edge_fn(pa[u], pa[v], pb[u], pb[v], pu, pv);
    let e1 = edge_fn(pb[u], pb[v], pc[u], pc[v], pu, pv);
    let e2 = edge_fn(pc[u], pc[v], pa[u], pa[v], pu, pv);
    let inside = (e0 > 0.0 && e1 > 0.0 && e2 > 0.0) || (e0 < 0.0 && e1 < 0.0 && e2 < 0.0);
    if !inside {
        return None;
    }
    let area2 = e0 + e1 + e2;
    if area2.abs() < 1e-300 {
        return None;
    }
    // Barycentric interpolation of the axis coordinate at the hit point.
    let w0 = e1 / area2;
    let w1 = e2 / area2;
    let w2 = e0 / area2;
    let hit_axis = w0 * pa[axis] + w1 * pb[axis] + w2 * pc[axis];
    Some(hit_axis - origin[axis])
}

#[inline]
fn edge_fn(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Recenters the mesh at the origin and scales its longest bounding-box side
/// to 1. Returns the normalized mesh and the transform that was applied.
pub fn normalize_mesh(mesh: &Mesh) -> Result<(Mesh, SimilarityTransform)> {
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    let bbox = mesh.bounding_box()?;
    let longest = bbox.longest_side();
    if longest <= 0.0 {
        return Err(Error::Validation("degenerate bounding box".into()));
    }
    let scale = 1.0 / longest;
    let center = bbox.center();
    let transform = SimilarityTransform {
        scale,
        translation: -center.coords * scale,
    };
    Ok((mesh.transformed(&transform), transform))
}
